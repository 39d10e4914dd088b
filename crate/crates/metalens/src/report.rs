//! End-to-end analysis of a study table: derived statistics, plot shape
//! diagnosis, three pooling methods, leave-one-out influence, and a markdown
//! report. Every number in the report is formatted once, straight from the
//! full-precision value.

use crate::effect_stats::{derive_records, EffectEstimate, PValueRecord, Scale};
use crate::error::{MetalensError, Result};
use crate::ingest::{ledger_stats, QuestionLedger};
use crate::meta::{
    fishers_method, fixed_effect, leave_one_out, random_effects_dl, study_effects,
    influence_report, InfluenceEntry, MetaMethod, MetaResult,
};
use crate::numfmt::{fmt_sig6, fmt_stat_padded};
use crate::pvalue_plot::{bilinear_diagnosis_with, build_plot, DiagnosisConfig, MixtureDiagnosis, PValuePlotModel};

/// Knobs for a full analysis. `alpha` drives both the plot reference line and
/// the small-p count; `confidence_level` is the level of the published
/// intervals and of the pooled CIs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub scale: Scale,
    pub alpha: f64,
    pub confidence_level: f64,
    pub diagnosis: DiagnosisConfig,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            scale: Scale::RawRR,
            alpha: 0.05,
            confidence_level: 0.95,
            diagnosis: DiagnosisConfig::default(),
        }
    }
}

/// Everything one analysis produced. Sections that need more studies than
/// the input has are `None` rather than errors: diagnosis needs 4, influence
/// 3, random effects 2.
#[derive(Debug, Clone)]
pub struct AnalysisBundle {
    pub options: AnalysisOptions,
    pub estimates: Vec<EffectEstimate>,
    pub records: Vec<PValueRecord>,
    pub plot: PValuePlotModel,
    pub diagnosis: Option<MixtureDiagnosis>,
    pub meta_fixed: MetaResult,
    pub meta_random: Option<MetaResult>,
    pub meta_fisher: MetaResult,
    pub influence_fixed: Option<Vec<InfluenceEntry>>,
    pub influence_fisher: Option<Vec<InfluenceEntry>>,
    /// Citation-count ledger, when one was supplied alongside the table.
    pub ledger: Option<QuestionLedger>,
    /// (kind, path) of files the caller wrote for this analysis, echoed in
    /// the report.
    pub artifacts: Vec<(String, String)>,
}

/// Runs the whole pipeline on validated estimates. Deterministic: the same
/// input and options produce an identical bundle.
pub fn analyze(estimates: Vec<EffectEstimate>, options: AnalysisOptions) -> Result<AnalysisBundle> {
    if estimates.is_empty() {
        return Err(MetalensError::EmptyInput("analyze"));
    }
    let records = derive_records(&estimates, options.scale)?;
    let plot = build_plot(&records, options.alpha)?;
    let diagnosis = if records.len() >= 4 {
        Some(bilinear_diagnosis_with(&plot, &options.diagnosis)?)
    } else {
        None
    };
    let effects = study_effects(&estimates, options.scale)?;
    let meta_fixed = fixed_effect(&effects, options.scale, options.confidence_level)?;
    let meta_random = if effects.len() >= 2 {
        Some(random_effects_dl(&effects, options.scale, options.confidence_level)?)
    } else {
        None
    };
    let pvalues: Vec<f64> = records.iter().map(|r| r.p).collect();
    let meta_fisher = fishers_method(&pvalues)?;
    let (influence_fixed, influence_fisher) = if effects.len() >= 3 {
        (
            Some(leave_one_out(&effects, options.scale, options.confidence_level, MetaMethod::FixedEffect)?),
            Some(leave_one_out(&effects, options.scale, options.confidence_level, MetaMethod::FisherCombined)?),
        )
    } else {
        (None, None)
    };
    Ok(AnalysisBundle {
        options,
        estimates,
        records,
        plot,
        diagnosis,
        meta_fixed,
        meta_random,
        meta_fisher,
        influence_fixed,
        influence_fisher,
        ledger: None,
        artifacts: Vec::new(),
    })
}

fn push_meta_line(out: &mut String, result: &MetaResult, percent: &str) {
    out.push_str(&format!("- {}: ", result.method));
    match result.method {
        MetaMethod::FisherCombined => {
            out.push_str(&format!(
                "X = {} on {} df, combined p = {}\n",
                fmt_stat_padded(result.chi_square.unwrap_or(f64::NAN)),
                result.df.map_or_else(|| "?".into(), |d| d.to_string()),
                fmt_stat_padded(result.combined_p.unwrap_or(f64::NAN)),
            ));
        }
        _ => {
            out.push_str(&format!(
                "pooled {}, {percent}% CI [{}, {}]",
                fmt_stat_padded(result.pooled.unwrap_or(f64::NAN)),
                fmt_stat_padded(result.ci_low.unwrap_or(f64::NAN)),
                fmt_stat_padded(result.ci_high.unwrap_or(f64::NAN)),
            ));
            if let Some(tau2) = result.tau2 {
                if result.method == MetaMethod::RandomEffectsDL {
                    out.push_str(&format!(", tau^2 = {}", fmt_stat_padded(tau2)));
                }
            }
            if let (Some(q), Some(df)) = (result.q_statistic, result.df) {
                out.push_str(&format!(", Q = {} on {df} df", fmt_stat_padded(q)));
            }
            out.push_str(&format!(
                ", combined p = {}\n",
                fmt_stat_padded(result.combined_p.unwrap_or(f64::NAN)),
            ));
        }
    }
}

fn push_influence_section(
    out: &mut String,
    label: &str,
    entries: &[InfluenceEntry],
    baseline_p: f64,
    flag_level: f64,
) -> Result<()> {
    out.push_str(&format!("{label}:\n\n```\n"));
    out.push_str(&influence_report(entries, baseline_p, flag_level)?);
    out.push_str("```\n\n");
    Ok(())
}

/// Renders the bundle as a markdown report. Pure function of the bundle; the
/// same bundle always yields byte-identical text.
pub fn generate_report(bundle: &AnalysisBundle) -> Result<String> {
    let opts = &bundle.options;
    let k = bundle.records.len();
    let percent = fmt_sig6(opts.confidence_level * 100.0);
    let alpha_s = fmt_sig6(opts.alpha);
    let mut out = String::new();

    out.push_str("# Meta-analysis reliability report\n\n");
    out.push_str("## Input\n\n");
    out.push_str(&format!("- studies: {k}\n"));
    out.push_str(&format!("- scale: {}\n", opts.scale));
    out.push_str(&format!("- alpha: {alpha_s}\n"));
    out.push_str(&format!("- interval confidence level: {}\n\n", fmt_sig6(opts.confidence_level)));

    out.push_str("## Derived statistics\n\n");
    out.push_str(&format!("| id | rr | {percent}% CI | se | z | p | rank |\n"));
    out.push_str("|---|---|---|---|---|---|---|\n");
    for (est, rec) in bundle.estimates.iter().zip(&bundle.records) {
        out.push_str(&format!(
            "| {} | {} | [{}, {}] | {} | {} | {} | {} |\n",
            est.id,
            fmt_stat_padded(est.rr),
            fmt_stat_padded(est.cl_low),
            fmt_stat_padded(est.cl_high),
            fmt_stat_padded(rec.se),
            fmt_stat_padded(rec.z),
            fmt_stat_padded(rec.p),
            rec.rank,
        ));
    }
    out.push('\n');

    out.push_str("## Plot shape\n\n");
    match &bundle.diagnosis {
        Some(d) => {
            out.push_str(&format!(
                "- {} of {k} p-values below {alpha_s} (threshold counted as below)\n",
                d.n_below_alpha,
            ));
            out.push_str(&format!(
                "- KS vs uniform, all values: D = {}, p = {}\n",
                fmt_stat_padded(d.ks_all.0),
                fmt_stat_padded(d.ks_all.1),
            ));
            out.push_str(&format!(
                "- KS vs uniform, rescaled above-{alpha_s} tail: D = {}, p = {}\n",
                fmt_stat_padded(d.ks_above_alpha.0),
                fmt_stat_padded(d.ks_above_alpha.1),
            ));
            out.push_str(&format!(
                "- line fit RSS: one segment {}, two segments {} (hinge at rank {})\n",
                fmt_stat_padded(d.rss_one_segment),
                fmt_stat_padded(d.rss_two_segment),
                d.split_rank,
            ));
            out.push_str(&format!("- verdict: {}\n", d.verdict));
            let cfg = &opts.diagnosis;
            let uniform_cap = std::cmp::max(1, (opts.alpha * k as f64).round() as usize);
            out.push_str(&format!(
                "- thresholds: Bilinear needs at least {} small p-values, tail KS p > {}, \
                 and two-segment RSS under {} of one-segment; Uniform needs full KS p > {} \
                 and a small-p count of at most {uniform_cap}\n\n",
                cfg.min_below_alpha,
                fmt_sig6(cfg.ks_above_reject_level),
                fmt_sig6(cfg.max_rss_ratio),
                fmt_sig6(cfg.ks_all_reject_level),
            ));
        }
        None => out.push_str(&format!(
            "- skipped: shape diagnosis needs at least 4 studies, got {k}\n\n",
        )),
    }

    out.push_str(&format!("## Pooled results ({})\n\n", opts.scale));
    push_meta_line(&mut out, &bundle.meta_fixed, &percent);
    match &bundle.meta_random {
        Some(r) => push_meta_line(&mut out, r, &percent),
        None => out.push_str("- random effects skipped: needs at least 2 studies\n"),
    }
    push_meta_line(&mut out, &bundle.meta_fisher, &percent);
    out.push('\n');

    out.push_str("## Leave-one-out influence\n\n");
    match (&bundle.influence_fixed, &bundle.influence_fisher) {
        (Some(fixed), Some(fisher)) => {
            push_influence_section(
                &mut out,
                "Fixed effect (pooled estimate without each study)",
                fixed,
                bundle.meta_fixed.combined_p.unwrap_or(f64::NAN),
                opts.alpha,
            )?;
            push_influence_section(
                &mut out,
                "Fisher combination (chi-square without each study)",
                fisher,
                bundle.meta_fisher.combined_p.unwrap_or(f64::NAN),
                opts.alpha,
            )?;
        }
        _ => out.push_str(&format!(
            "- skipped: influence needs at least 3 studies, got {k}\n\n",
        )),
    }

    if let Some(ledger) = &bundle.ledger {
        let stats = ledger_stats(ledger)?;
        out.push_str("## Question ledger\n\n");
        out.push_str(&format!("- entries: {}\n", ledger.entries.len()));
        out.push_str(&format!(
            "- citations per cohort: min {}, median {}, max {}, total {}\n",
            stats.min,
            fmt_sig6(stats.median),
            stats.max,
            stats.total,
        ));
        if stats.shared_cohorts.is_empty() {
            out.push_str("- no shared citation counts\n");
        } else {
            out.push_str("- shared citation counts (same-cohort candidates):\n");
            for (count, names) in &stats.shared_cohorts {
                let caveat = if names.len() == 2 {
                    "The two studies are not independent."
                } else {
                    "These studies are not independent."
                };
                out.push_str(&format!("  - {count}: {}. {caveat}\n", names.join(", ")));
            }
        }
        let noted: Vec<&crate::ingest::LedgerEntry> =
            ledger.entries.iter().filter(|e| e.note.is_some()).collect();
        if !noted.is_empty() {
            out.push_str("- notes:\n");
            for entry in noted {
                out.push_str(&format!(
                    "  - {}: {}\n",
                    entry.name,
                    entry.note.as_deref().unwrap_or(""),
                ));
            }
        }
        out.push('\n');
    }

    if !bundle.artifacts.is_empty() {
        out.push_str("## Files written\n\n");
        for (kind, path) in &bundle.artifacts {
            out.push_str(&format!("- {kind}: {path}\n"));
        }
        out.push('\n');
    }

    Ok(out)
}
