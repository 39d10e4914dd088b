//! Pooling of base-study estimates and the robustness checks around it.
//!
//! Three combiners: inverse-variance fixed effect, DerSimonian-Laird random
//! effects, and Fisher's summation of p-values. Leave-one-out influence
//! quantifies how much any single study moves the pooled answer, which is the
//! fragility these diagnostics exist to surface.

use crate::effect_stats::{p_two_sided, z_critical, Scale};
use crate::error::{MetalensError, Result};

/// One study reduced to an effect and its standard error on a common scale.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyEffect {
    pub id: String,
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaMethod {
    FixedEffect,
    RandomEffectsDL,
    FisherCombined,
}

impl std::fmt::Display for MetaMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetaMethod::FixedEffect => "fixed effect (inverse variance)",
            MetaMethod::RandomEffectsDL => "random effects (DerSimonian-Laird)",
            MetaMethod::FisherCombined => "Fisher combined p-values",
        })
    }
}

/// Outcome of one pooling method. Fields are populated per method: effect
/// poolers fill pooled/CI/Q, Fisher fills the chi-square pieces; `combined_p`
/// is the method's overall significance either way.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaResult {
    pub method: MetaMethod,
    /// Scale of `pooled`; absent for Fisher, which never pools effects.
    pub scale: Option<Scale>,
    pub k: usize,
    pub pooled: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub q_statistic: Option<f64>,
    pub tau2: Option<f64>,
    pub df: Option<usize>,
    pub chi_square: Option<f64>,
    pub combined_p: Option<f64>,
    pub confidence_level: f64,
}

/// Effect of omitting one study from the pool.
///
/// `pooled_without` is the re-pooled effect for the effect methods and the
/// recomputed chi-square statistic for Fisher; `delta` is always
/// `pooled_without - pooled_full`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceEntry {
    pub omitted_id: String,
    pub pooled_without: f64,
    pub delta: f64,
    pub p_without: f64,
}

/// Converts validated estimates to (value, se) pairs on the requested scale.
pub fn study_effects(
    estimates: &[crate::effect_stats::EffectEstimate],
    scale: Scale,
) -> Result<Vec<StudyEffect>> {
    estimates
        .iter()
        .map(|e| {
            let se = crate::effect_stats::se_from_ci(e, scale)?;
            let value = match scale {
                Scale::RawRR => e.rr,
                Scale::LogRR => e.rr.ln(),
            };
            Ok(StudyEffect {
                id: e.id.clone(),
                value,
                se,
            })
        })
        .collect()
}

fn check_studies(records: &[StudyEffect], what: &'static str, needed: usize) -> Result<()> {
    if records.len() < needed {
        return Err(MetalensError::TooFewStudies {
            what,
            needed,
            got: records.len(),
        });
    }
    for r in records {
        if !(r.se > 0.0 && r.se.is_finite()) {
            return Err(MetalensError::BadStandardError(r.se));
        }
        if !r.value.is_finite() {
            return Err(MetalensError::InvalidEstimate {
                id: r.id.clone(),
                reason: format!("effect value must be finite, got {}", r.value),
            });
        }
    }
    Ok(())
}

/// Inverse-variance fixed-effect pool: weights 1/se^2, heterogeneity Q on
/// k - 1 degrees of freedom, CI at the given confidence level.
pub fn fixed_effect(
    records: &[StudyEffect],
    scale: Scale,
    confidence_level: f64,
) -> Result<MetaResult> {
    check_studies(records, "fixed-effect pooling", 1)?;
    pool_weighted(records, scale, confidence_level, 0.0, MetaMethod::FixedEffect)
}

/// DerSimonian-Laird random effects: between-study variance
/// tau^2 = max(0, (Q - df) / (sum w - sum w^2 / sum w)) from the fixed-effect
/// weights, then re-pool with 1 / (se^2 + tau^2).
pub fn random_effects_dl(
    records: &[StudyEffect],
    scale: Scale,
    confidence_level: f64,
) -> Result<MetaResult> {
    check_studies(records, "random-effects pooling", 2)?;
    let fixed = pool_weighted(records, scale, confidence_level, 0.0, MetaMethod::FixedEffect)?;
    let q = fixed.q_statistic.expect("fixed effect always computes Q");
    let df = fixed.df.expect("fixed effect always computes df") as f64;
    let (mut sum_w, mut sum_w2) = (0.0, 0.0);
    for r in records {
        let w = 1.0 / (r.se * r.se);
        sum_w += w;
        sum_w2 += w * w;
    }
    let denom = sum_w - sum_w2 / sum_w;
    let tau2 = if denom > 0.0 {
        ((q - df) / denom).max(0.0)
    } else {
        0.0
    };
    let mut result = pool_weighted(
        records,
        scale,
        confidence_level,
        tau2,
        MetaMethod::RandomEffectsDL,
    )?;
    // heterogeneity is a property of the fixed weights; carry it over
    result.q_statistic = fixed.q_statistic;
    result.tau2 = Some(tau2);
    Ok(result)
}

fn pool_weighted(
    records: &[StudyEffect],
    scale: Scale,
    confidence_level: f64,
    tau2: f64,
    method: MetaMethod,
) -> Result<MetaResult> {
    let zc = z_critical(confidence_level)?;
    let (mut sum_w, mut sum_wx) = (0.0, 0.0);
    for r in records {
        let w = 1.0 / (r.se * r.se + tau2);
        sum_w += w;
        sum_wx += w * r.value;
    }
    let pooled = sum_wx / sum_w;
    let se = sum_w.sqrt().recip();
    let q = records
        .iter()
        .map(|r| {
            let w = 1.0 / (r.se * r.se + tau2);
            w * (r.value - pooled) * (r.value - pooled)
        })
        .sum::<f64>();
    let z = (pooled - scale.null_value()) / se;
    Ok(MetaResult {
        method,
        scale: Some(scale),
        k: records.len(),
        pooled: Some(pooled),
        ci_low: Some(pooled - zc * se),
        ci_high: Some(pooled + zc * se),
        q_statistic: Some(q),
        tau2: None,
        df: Some(records.len() - 1),
        chi_square: None,
        combined_p: Some(p_two_sided(z)),
        confidence_level,
    })
}

/// Fisher's method: X = -2 sum ln p_i, overall p from the chi-square survival
/// function on 2k degrees of freedom.
pub fn fishers_method(pvalues: &[f64]) -> Result<MetaResult> {
    if pvalues.is_empty() {
        return Err(MetalensError::EmptyInput("fishers_method"));
    }
    for &p in pvalues {
        if !(p > 0.0 && p <= 1.0) {
            return Err(MetalensError::BadPValue(p));
        }
    }
    let x = -2.0 * pvalues.iter().map(|p| p.ln()).sum::<f64>();
    let df = 2 * pvalues.len();
    let combined_p = chi_square_sf(x, df)?;
    Ok(MetaResult {
        method: MetaMethod::FisherCombined,
        scale: None,
        k: pvalues.len(),
        pooled: None,
        ci_low: None,
        ci_high: None,
        q_statistic: None,
        tau2: None,
        df: Some(df),
        chi_square: Some(x),
        combined_p: Some(combined_p),
        confidence_level: f64::NAN,
    })
}

/// Chi-square survival function for even degrees of freedom.
///
/// Uses the closed form exp(-x/2) * sum_{j<df/2} (x/2)^j / j!, evaluated as
/// exp(log-sum - x/2) so huge statistics underflow gracefully instead of
/// hitting 0 * inf. Result clamped into (0, 1].
pub fn chi_square_sf(x: f64, df: usize) -> Result<f64> {
    if df == 0 || !df.is_multiple_of(2) {
        return Err(MetalensError::BadDegreesOfFreedom(df));
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(MetalensError::BadChiSquare(x));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let lambda = x / 2.0;
    let log_lambda = lambda.ln();
    // log-sum-exp over terms t_j = j ln(lambda) - ln(j!)
    let mut log_terms = Vec::with_capacity(df / 2);
    let mut t = 0.0;
    log_terms.push(t);
    for j in 1..df / 2 {
        t += log_lambda - (j as f64).ln();
        log_terms.push(t);
    }
    let m = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = log_terms.iter().map(|&t| (t - m).exp()).sum();
    let sf = (m + s.ln() - lambda).exp();
    Ok(sf.clamp(f64::MIN_POSITIVE, 1.0))
}

/// Re-pools with each study omitted in turn.
///
/// For the effect methods, `pooled_without` and `p_without` come from the
/// reduced pool; for Fisher they are the reduced chi-square statistic and its
/// combined p, with per-study p-values formed from (value - null)/se. Entries
/// are sorted by |delta| descending, ties by id, regardless of how the
/// reduced pools were evaluated.
pub fn leave_one_out(
    records: &[StudyEffect],
    scale: Scale,
    confidence_level: f64,
    method: MetaMethod,
) -> Result<Vec<InfluenceEntry>> {
    check_studies(records, "leave-one-out influence", 3)?;
    let reduced: Vec<Vec<StudyEffect>> = (0..records.len())
        .map(|omit| {
            records
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != omit)
                .map(|(_, r)| r.clone())
                .collect()
        })
        .collect();

    let mut entries = Vec::with_capacity(records.len());
    match method {
        MetaMethod::FixedEffect | MetaMethod::RandomEffectsDL => {
            let pool = |subset: &[StudyEffect]| -> Result<MetaResult> {
                match method {
                    MetaMethod::FixedEffect => fixed_effect(subset, scale, confidence_level),
                    _ => random_effects_dl(subset, scale, confidence_level),
                }
            };
            let full = pool(records)?;
            let full_pooled = full.pooled.expect("effect pool always present");
            for (omit, subset) in records.iter().zip(&reduced) {
                let without = pool(subset)?;
                let pooled_without = without.pooled.expect("effect pool always present");
                entries.push(InfluenceEntry {
                    omitted_id: omit.id.clone(),
                    pooled_without,
                    delta: pooled_without - full_pooled,
                    p_without: without.combined_p.expect("effect pool computes p"),
                });
            }
        }
        MetaMethod::FisherCombined => {
            let pvals = |subset: &[StudyEffect]| -> Vec<f64> {
                subset
                    .iter()
                    .map(|r| p_two_sided((r.value - scale.null_value()) / r.se))
                    .collect()
            };
            let full = fishers_method(&pvals(records))?;
            let full_x = full.chi_square.expect("fisher always computes X");
            for (omit, subset) in records.iter().zip(&reduced) {
                let without = fishers_method(&pvals(subset))?;
                let x_without = without.chi_square.expect("fisher always computes X");
                entries.push(InfluenceEntry {
                    omitted_id: omit.id.clone(),
                    pooled_without: x_without,
                    delta: x_without - full_x,
                    p_without: without.combined_p.expect("fisher always computes p"),
                });
            }
        }
    }
    entries.sort_by(|a, b| {
        b.delta
            .abs()
            .total_cmp(&a.delta.abs())
            .then_with(|| a.omitted_id.cmp(&b.omitted_id))
    });
    Ok(entries)
}

/// Renders influence entries as a fixed-width text block, flagging any single
/// omission that flips overall significance across `flag_level` relative to
/// `baseline_p` (the full-pool combined p).
pub fn influence_report(
    entries: &[InfluenceEntry],
    baseline_p: f64,
    flag_level: f64,
) -> Result<String> {
    if entries.is_empty() {
        return Err(MetalensError::EmptyInput("influence_report"));
    }
    use crate::numfmt::fmt_stat;
    let width = entries
        .iter()
        .map(|e| e.omitted_id.len())
        .max()
        .unwrap_or(0)
        .max("omitted".len());
    let mut out = String::new();
    out.push_str(&format!(
        "{:<width$}  {:>14}  {:>12}  {:>10}\n",
        "omitted", "pooled_without", "delta", "p_without"
    ));
    let baseline_significant = baseline_p <= flag_level;
    for e in entries {
        let flips = (e.p_without <= flag_level) != baseline_significant;
        out.push_str(&format!(
            "{:<width$}  {:>14}  {:>12}  {:>10}{}\n",
            e.omitted_id,
            fmt_stat(e.pooled_without),
            fmt_stat(e.delta),
            fmt_stat(e.p_without),
            if flips {
                format!("  ** flips significance at {}", fmt_stat(flag_level))
            } else {
                String::new()
            }
        ));
    }
    Ok(out)
}
