//! Monte Carlo machinery for the corruption mechanisms under study: constant
//! bias with shrinking standard errors, best-of-k analysis selection, and
//! publication censoring. The scenario runner feeds its synthetic studies
//! through the same derivation and diagnosis pipeline as real data, which is
//! what makes the plot verdict calibratable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::effect_stats::{p_two_sided, z_critical, EffectEstimate, PValueRecord};
use crate::error::{MetalensError, Result};
use crate::pvalue_plot::{bilinear_diagnosis_with, build_plot, DiagnosisConfig, Verdict};

/// Deterministic bias model: a measurement displaced from the null by
/// `true_effect_t + bias_b`, observed with standard error s0 / sqrt(n).
#[derive(Debug, Clone, PartialEq)]
pub struct BiasSchedule {
    pub true_effect_t: f64,
    pub bias_b: f64,
    pub s0: f64,
    pub n_grid: Vec<u64>,
}

impl BiasSchedule {
    pub fn new(true_effect_t: f64, bias_b: f64, s0: f64, n_grid: Vec<u64>) -> Result<Self> {
        if !(true_effect_t.is_finite() && bias_b.is_finite()) {
            return Err(MetalensError::InvalidParameter(
                "bias schedule effects must be finite".into(),
            ));
        }
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(MetalensError::InvalidParameter(format!(
                "s0 must be positive and finite, got {s0}"
            )));
        }
        if n_grid.is_empty() {
            return Err(MetalensError::EmptyInput("bias schedule n_grid"));
        }
        if n_grid[0] == 0 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MetalensError::InvalidParameter(
                "n_grid must be strictly increasing positive integers".into(),
            ));
        }
        Ok(BiasSchedule {
            true_effect_t,
            bias_b,
            s0,
            n_grid,
        })
    }

    pub fn se_at_n(&self, n: u64) -> f64 {
        self.s0 / (n as f64).sqrt()
    }
}

/// One point of the deterministic bias curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasCurvePoint {
    pub n: u64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
}

/// Evaluates the bias curve: z = (T + B) / se(n) at every grid point.
///
/// No randomness; with T + B nonzero the p-values fall monotonically as n
/// grows, which is the whole point: a fixed bias plus a shrinking standard
/// error manufactures any significance level you like.
pub fn biased_p_curve(schedule: &BiasSchedule) -> Vec<BiasCurvePoint> {
    let displacement = schedule.true_effect_t + schedule.bias_b;
    schedule
        .n_grid
        .iter()
        .map(|&n| {
            let se = schedule.se_at_n(n);
            let z = displacement / se;
            BiasCurvePoint {
                n,
                se,
                z,
                p: p_two_sided(z),
            }
        })
        .collect()
}

/// How a simulated study chooses what to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Every analysis becomes a reported record.
    ReportAll,
    /// Only the smallest-p analysis of each study is reported.
    BestOfK,
}

impl std::fmt::Display for Selection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Selection::ReportAll => "report_all",
            Selection::BestOfK => "best_of_k",
        })
    }
}

impl std::str::FromStr for Selection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "report_all" => Ok(Selection::ReportAll),
            "best_of_k" => Ok(Selection::BestOfK),
            other => Err(format!(
                "unknown selection `{other}` (expected `report_all` or `best_of_k`)"
            )),
        }
    }
}

/// Configuration of one Monte Carlo scenario. All studies are null (T = 0);
/// `per_study_bias` is the constant displacement B shared by every analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub n_studies: usize,
    pub questions_per_study: usize,
    pub selection: Selection,
    pub publication_censor_prob: f64,
    pub per_study_bias: f64,
    pub per_study_se_range: (f64, f64),
    pub seed: u64,
}

impl SimScenario {
    /// Studies that ask one question and publish whatever they find.
    pub fn honest(seed: u64) -> Self {
        SimScenario {
            n_studies: 14,
            questions_per_study: 1,
            selection: Selection::ReportAll,
            publication_censor_prob: 0.0,
            per_study_bias: 0.0,
            per_study_se_range: (0.02, 0.5),
            seed,
        }
    }

    /// Studies that report the best of 100 analyses, with non-significant
    /// results suppressed four times out of five.
    pub fn p_hacked(seed: u64) -> Self {
        SimScenario {
            n_studies: 14,
            questions_per_study: 100,
            selection: Selection::BestOfK,
            publication_censor_prob: 0.8,
            per_study_bias: 0.0,
            per_study_se_range: (0.02, 0.5),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MetalensError::InvalidParameter(msg));
        if self.n_studies == 0 {
            return bad("n_studies must be at least 1".into());
        }
        if self.questions_per_study == 0 {
            return bad("questions_per_study must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.publication_censor_prob) {
            return bad(format!(
                "publication_censor_prob must lie in [0, 1], got {}",
                self.publication_censor_prob
            ));
        }
        if !self.per_study_bias.is_finite() {
            return bad("per_study_bias must be finite".into());
        }
        let (lo, hi) = self.per_study_se_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad(format!(
                "per_study_se_range must satisfy 0 < low <= high, got ({lo}, {hi})"
            ));
        }
        Ok(())
    }
}

/// Aggregate of a scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub replicates: usize,
    /// The first replicate's published studies, kept as a concrete sample.
    pub published: Vec<EffectEstimate>,
    pub published_total: usize,
    pub suppressed_total: usize,
    /// Replicates with fewer than 4 published studies, recorded as Ambiguous
    /// because the plot diagnosis refuses to run on them.
    pub degenerate_replicates: usize,
    /// Verdict per replicate, indexed by replicate number.
    pub verdicts: Vec<Verdict>,
}

impl SimOutcome {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.verdicts.iter().filter(|&&v| v == verdict).count()
    }

    pub fn rate(&self, verdict: Verdict) -> f64 {
        self.count(verdict) as f64 / self.replicates as f64
    }
}

const CL_LOW_FLOOR: f64 = 1e-6;
// separation needed only when a deeply negative draw collapses onto the floor
const MIN_CI_WIDTH: f64 = 1e-12;

/// Draws one study: observed effect Normal(1 + T + B, se) with its CI at the
/// given confidence level, lower limit floored at 1e-6 to keep the estimate
/// valid for extreme draws.
pub fn simulate_study(
    id: impl Into<String>,
    t: f64,
    b: f64,
    se: f64,
    confidence_level: f64,
    rng: &mut impl Rng,
) -> Result<EffectEstimate> {
    let zc = z_critical(confidence_level)?;
    simulate_study_zc(id, t, b, se, zc, confidence_level, rng)
}

/// Hot-path variant with the critical value already resolved.
fn simulate_study_zc(
    id: impl Into<String>,
    t: f64,
    b: f64,
    se: f64,
    zc: f64,
    confidence_level: f64,
    rng: &mut impl Rng,
) -> Result<EffectEstimate> {
    if !(se > 0.0 && se.is_finite()) {
        return Err(MetalensError::BadStandardError(se));
    }
    let observed = Normal::new(1.0 + t + b, se)
        .map_err(|e| MetalensError::InvalidParameter(e.to_string()))?
        .sample(rng);
    let cl_low = (observed - zc * se).max(CL_LOW_FLOOR);
    let cl_high = (observed + zc * se).max(cl_low + MIN_CI_WIDTH);
    let rr = observed.clamp(cl_low, cl_high);
    EffectEstimate::new(id, "", rr, cl_low, cl_high, confidence_level)
}

/// Picks the smallest-p record among the first `k_q` candidates, the model of
/// a study that runs many analyses and reports its best one. Ties keep the
/// earliest candidate.
pub fn best_of_k(candidates: &[PValueRecord], k_q: usize) -> Result<PValueRecord> {
    if candidates.is_empty() {
        return Err(MetalensError::EmptyInput("best_of_k"));
    }
    if k_q == 0 {
        return Err(MetalensError::InvalidParameter(
            "k_q must be at least 1".into(),
        ));
    }
    let pool = &candidates[..k_q.min(candidates.len())];
    let mut best = 0;
    for (i, r) in pool.iter().enumerate().skip(1) {
        if r.p < pool[best].p {
            best = i;
        }
    }
    Ok(pool[best].clone())
}

/// Independently drops each record with p > alpha with probability
/// `censor_prob`; significant records always survive. Returns the kept
/// records and how many were suppressed.
pub fn publication_filter(
    records: Vec<PValueRecord>,
    censor_prob: f64,
    alpha: f64,
    rng: &mut impl Rng,
) -> Result<(Vec<PValueRecord>, usize)> {
    if !(0.0..=1.0).contains(&censor_prob) {
        return Err(MetalensError::InvalidParameter(format!(
            "censor probability must lie in [0, 1], got {censor_prob}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MetalensError::BadAlpha(alpha));
    }
    let before = records.len();
    let kept: Vec<PValueRecord> = records
        .into_iter()
        .filter(|r| r.p <= alpha || rng.random::<f64>() >= censor_prob)
        .collect();
    let suppressed = before - kept.len();
    Ok((kept, suppressed))
}

// Scenario runs use the same boundary the study tables are judged against.
const SCENARIO_ALPHA: f64 = 0.05;
const SCENARIO_CONFIDENCE: f64 = 0.95;

struct ReplicateResult {
    published: Vec<EffectEstimate>,
    suppressed: usize,
    candidates: usize,
    verdict: Verdict,
    degenerate: bool,
}

/// Runs a scenario for the given number of replicates.
///
/// Replicate i draws from its own ChaCha8 stream (seed, stream = i), so the
/// outcome is bit-identical no matter how rayon schedules the work. A
/// replicate left with fewer than 4 published studies cannot be diagnosed and
/// is recorded as Ambiguous with the degenerate flag.
pub fn run_scenario(scenario: &SimScenario, replicates: usize) -> Result<SimOutcome> {
    scenario.validate()?;
    if replicates == 0 {
        return Err(MetalensError::InvalidParameter(
            "replicates must be at least 1".into(),
        ));
    }
    let zc = z_critical(SCENARIO_CONFIDENCE)?;
    let config = DiagnosisConfig::default();

    let per_replicate: Vec<ReplicateResult> = (0..replicates)
        .into_par_iter()
        .map(|rep| run_replicate(scenario, rep as u64, zc, &config))
        .collect::<Result<_>>()?;

    let mut outcome = SimOutcome {
        replicates,
        published: per_replicate[0].published.clone(),
        published_total: 0,
        suppressed_total: 0,
        degenerate_replicates: 0,
        verdicts: Vec::with_capacity(replicates),
    };
    let mut candidates_total = 0;
    for r in &per_replicate {
        outcome.published_total += r.published.len();
        outcome.suppressed_total += r.suppressed;
        outcome.degenerate_replicates += r.degenerate as usize;
        outcome.verdicts.push(r.verdict);
        candidates_total += r.candidates;
    }
    debug_assert_eq!(outcome.published_total + outcome.suppressed_total, candidates_total);
    Ok(outcome)
}

fn run_replicate(
    scenario: &SimScenario,
    replicate: u64,
    zc: f64,
    config: &DiagnosisConfig,
) -> Result<ReplicateResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(replicate);

    let (se_lo, se_hi) = scenario.per_study_se_range;
    let mut reported: Vec<(EffectEstimate, PValueRecord)> = Vec::new();
    for study in 0..scenario.n_studies {
        let se = if se_lo == se_hi {
            se_lo
        } else {
            rng.random_range(se_lo..se_hi)
        };
        let mut analyses = Vec::with_capacity(scenario.questions_per_study);
        for question in 0..scenario.questions_per_study {
            let estimate = simulate_study_zc(
                format!("r{replicate}-s{study}-q{question}"),
                0.0,
                scenario.per_study_bias,
                se,
                zc,
                SCENARIO_CONFIDENCE,
                &mut rng,
            )?;
            // derive from the published interval, exactly like real ingestion
            let derived_se = (estimate.cl_high - estimate.cl_low) / (2.0 * zc);
            let z = (estimate.rr - 1.0) / derived_se;
            let record = PValueRecord {
                id: estimate.id.clone(),
                se: derived_se,
                z,
                p: p_two_sided(z),
                rank: 0,
            };
            analyses.push((estimate, record));
        }
        match scenario.selection {
            Selection::ReportAll => reported.extend(analyses),
            Selection::BestOfK => {
                let records: Vec<PValueRecord> =
                    analyses.iter().map(|(_, r)| r.clone()).collect();
                let winner = best_of_k(&records, scenario.questions_per_study)?;
                let pair = analyses
                    .into_iter()
                    .find(|(_, r)| r.id == winner.id)
                    .expect("winner originates from the candidate set");
                reported.push(pair);
            }
        }
    }

    let candidates = reported.len();
    let records: Vec<PValueRecord> = reported.iter().map(|(_, r)| r.clone()).collect();
    let (kept, suppressed) =
        publication_filter(records, scenario.publication_censor_prob, SCENARIO_ALPHA, &mut rng)?;
    let published: Vec<EffectEstimate> = kept
        .iter()
        .map(|k| {
            reported
                .iter()
                .find(|(e, _)| e.id == k.id)
                .expect("kept records are a subset of reported")
                .0
                .clone()
        })
        .collect();

    let (verdict, degenerate) = if kept.len() < 4 {
        (Verdict::Ambiguous, true)
    } else {
        let mut ranked = kept;
        let mut order: Vec<usize> = (0..ranked.len()).collect();
        order.sort_by(|&a, &b| ranked[a].p.total_cmp(&ranked[b].p));
        for (rank, idx) in order.into_iter().enumerate() {
            ranked[idx].rank = rank + 1;
        }
        let plot = build_plot(&ranked, SCENARIO_ALPHA)?;
        (bilinear_diagnosis_with(&plot, config)?.verdict, false)
    };

    Ok(ReplicateResult {
        published,
        suppressed,
        candidates,
        verdict,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect_stats::se_from_ci;
    use crate::effect_stats::Scale;
    use proptest::prelude::*;

    fn record(id: &str, p: f64) -> PValueRecord {
        PValueRecord {
            id: id.into(),
            se: 1.0,
            z: 0.0,
            p,
            rank: 0,
        }
    }

    #[test]
    fn null_schedule_never_leaves_one() {
        let s = BiasSchedule::new(0.0, 0.0, 0.5, vec![1, 4, 16, 64]).unwrap();
        for point in biased_p_curve(&s) {
            assert_eq!(point.p, 1.0);
            assert_eq!(point.z, 0.0);
        }
        // bias exactly cancelling the effect looks identical
        let cancel = BiasSchedule::new(0.3, -0.3, 0.5, vec![1, 4, 16]).unwrap();
        assert!(biased_p_curve(&cancel).iter().all(|pt| pt.p == 1.0));
    }

    #[test]
    fn pure_bias_reproduces_the_flagship_small_p() {
        // se(4) = 0.0408 / 2 = 0.0204 exactly; displacement is bias alone
        let s = BiasSchedule::new(0.0, 0.09, 0.0408, vec![1, 2, 4, 8, 16]).unwrap();
        let curve = biased_p_curve(&s);
        let at4 = curve.iter().find(|pt| pt.n == 4).unwrap();
        assert_eq!(at4.se, 0.0204);
        assert!((at4.p - 1.03e-5).abs() < 1e-7, "p = {}", at4.p);
    }

    #[test]
    fn schedule_validation() {
        assert!(BiasSchedule::new(0.0, 0.0, 0.0, vec![1]).is_err());
        assert!(BiasSchedule::new(0.0, 0.0, -1.0, vec![1]).is_err());
        assert!(BiasSchedule::new(0.0, 0.0, 1.0, vec![]).is_err());
        assert!(BiasSchedule::new(0.0, 0.0, 1.0, vec![0, 1]).is_err());
        assert!(BiasSchedule::new(0.0, 0.0, 1.0, vec![4, 4]).is_err());
        assert!(BiasSchedule::new(0.0, 0.0, 1.0, vec![4, 2]).is_err());
        assert!(BiasSchedule::new(f64::NAN, 0.0, 1.0, vec![1]).is_err());
    }

    #[test]
    fn fixed_seed_reproduces_the_same_study() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let x = simulate_study("s", 0.1, 0.05, 0.2, 0.95, &mut a).unwrap();
        let y = simulate_study("s", 0.1, 0.05, 0.2, 0.95, &mut b).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn vanishing_se_concentrates_at_the_displaced_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = simulate_study("s", 0.2, 0.1, 1e-9, 0.95, &mut rng).unwrap();
        assert!((e.rr - 1.3).abs() < 1e-6);
        assert!((e.cl_high - e.cl_low) < 1e-7);
    }

    #[test]
    fn null_draws_are_significant_five_percent_of_the_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut significant = 0;
        let n = 10_000;
        for i in 0..n {
            let e = simulate_study(format!("s{i}"), 0.0, 0.0, 0.1, 0.95, &mut rng).unwrap();
            let se = se_from_ci(&e, Scale::RawRR).unwrap();
            let p = p_two_sided((e.rr - 1.0) / se);
            if p < 0.05 {
                significant += 1;
            }
        }
        let rate = significant as f64 / n as f64;
        assert!((rate - 0.05).abs() < 0.01, "rate = {rate}");
    }

    #[test]
    fn best_of_k_selects_the_smallest_p() {
        let candidates = vec![record("a", 0.3), record("b", 0.01), record("c", 0.7)];
        assert_eq!(best_of_k(&candidates, 3).unwrap().id, "b");
        // k_q = 1 looks at the first candidate only
        assert_eq!(best_of_k(&candidates, 1).unwrap().id, "a");
        // k_q beyond the pool uses what exists
        assert_eq!(best_of_k(&candidates, 10).unwrap().id, "b");
        assert!(best_of_k(&[], 3).is_err());
        assert!(best_of_k(&candidates, 0).is_err());
    }

    #[test]
    fn best_of_k_median_matches_the_order_statistic() {
        // min of 10 uniforms has median 1 - 0.5^(1/10)
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut selected = Vec::with_capacity(4000);
        for _ in 0..4000 {
            let candidates: Vec<PValueRecord> = (0..10)
                .map(|i| record(&format!("q{i}"), rng.random::<f64>().max(f64::MIN_POSITIVE)))
                .collect();
            selected.push(best_of_k(&candidates, 10).unwrap().p);
        }
        selected.sort_by(f64::total_cmp);
        let median = (selected[1999] + selected[2000]) / 2.0;
        let want = 1.0 - 0.5f64.powf(0.1);
        assert!((median - want).abs() < 0.01, "median = {median}, want {want}");
    }

    #[test]
    fn filter_extremes_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let records: Vec<PValueRecord> = (0..50)
            .map(|i| record(&format!("s{i}"), (i as f64 + 0.5) / 50.0))
            .collect();

        let (kept, suppressed) =
            publication_filter(records.clone(), 0.0, 0.05, &mut rng).unwrap();
        assert_eq!(kept.len(), 50);
        assert_eq!(suppressed, 0);

        let (kept, suppressed) =
            publication_filter(records.clone(), 1.0, 0.05, &mut rng).unwrap();
        assert!(kept.iter().all(|r| r.p <= 0.05));
        assert_eq!(kept.len() + suppressed, 50);
        assert_eq!(kept.len(), 3); // 0.01, 0.03 and the boundary 0.05

        assert!(publication_filter(records.clone(), 1.5, 0.05, &mut rng).is_err());
        assert!(publication_filter(records, 0.5, 0.0, &mut rng).is_err());
    }

    #[test]
    fn filter_keeps_half_of_the_insignificant_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 4000usize;
        let records: Vec<PValueRecord> = (0..n)
            .map(|i| record(&format!("s{i}"), rng.random::<f64>().max(f64::MIN_POSITIVE)))
            .collect();
        let (kept, _) = publication_filter(records, 0.5, 0.05, &mut rng).unwrap();
        // expect 5% significant plus half of the remaining 95%
        let expected = 0.05 + 0.475;
        let rate = kept.len() as f64 / n as f64;
        assert!((rate - expected).abs() < 0.02, "rate = {rate}");
    }

    #[test]
    fn scenario_outcome_is_reproducible_and_consistent() {
        let scenario = SimScenario::honest(12345);
        let a = run_scenario(&scenario, 12).unwrap();
        let b = run_scenario(&scenario, 12).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.verdicts.len(), 12);
        assert_eq!(a.published_total + a.suppressed_total, 12 * 14);
        assert_eq!(a.suppressed_total, 0); // censor_prob 0 suppresses nothing
        assert_eq!(a.published.len(), 14);

        let different = run_scenario(&SimScenario::honest(54321), 12).unwrap();
        assert_ne!(a.published, different.published);
    }

    #[test]
    fn scenario_is_schedule_independent() {
        let scenario = SimScenario::p_hacked(777);
        let parallel = run_scenario(&scenario, 8).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_scenario(&scenario, 8))
            .unwrap();
        assert_eq!(parallel, serial);
    }

    #[test]
    fn degenerate_replicates_are_flagged_ambiguous() {
        // censoring everything non-significant with only two studies leaves
        // fewer than 4 published in essentially every replicate
        let scenario = SimScenario {
            n_studies: 2,
            questions_per_study: 1,
            selection: Selection::ReportAll,
            publication_censor_prob: 1.0,
            per_study_bias: 0.0,
            per_study_se_range: (0.1, 0.2),
            seed: 5,
        };
        let outcome = run_scenario(&scenario, 6).unwrap();
        assert_eq!(outcome.degenerate_replicates, 6);
        assert!(outcome.verdicts.iter().all(|&v| v == Verdict::Ambiguous));
        assert_eq!(outcome.rate(Verdict::Ambiguous), 1.0);
    }

    #[test]
    fn scenario_validation_rejects_nonsense() {
        let mut s = SimScenario::honest(1);
        s.n_studies = 0;
        assert!(s.validate().is_err());
        let mut s = SimScenario::honest(1);
        s.questions_per_study = 0;
        assert!(s.validate().is_err());
        let mut s = SimScenario::honest(1);
        s.publication_censor_prob = 1.2;
        assert!(s.validate().is_err());
        let mut s = SimScenario::honest(1);
        s.per_study_se_range = (0.0, 0.5);
        assert!(s.validate().is_err());
        let mut s = SimScenario::honest(1);
        s.per_study_se_range = (0.5, 0.2);
        assert!(s.validate().is_err());
        assert!(run_scenario(&SimScenario::honest(1), 0).is_err());
    }

    proptest! {
        #[test]
        fn curve_is_strictly_decreasing_under_net_displacement(
            t in -0.5f64..0.5,
            b in 0.02f64..0.5,
            s0 in 0.1f64..2.0,
        ) {
            prop_assume!((t + b).abs() > 0.01);
            // keep the largest z below the underflow clamp, where strict
            // monotonicity necessarily flattens out
            prop_assume!((t + b).abs() < 4.0 * s0);
            let s = BiasSchedule::new(t, b, s0, vec![1, 2, 4, 8, 16, 32, 64]).unwrap();
            let curve = biased_p_curve(&s);
            for w in curve.windows(2) {
                prop_assert!(w[1].p < w[0].p, "{:?} -> {:?}", w[0], w[1]);
            }
        }

        #[test]
        fn simulated_studies_are_always_valid(
            t in -1.5f64..1.5,
            b in -1.5f64..1.5,
            se in 1e-4f64..2.0,
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = simulate_study("s", t, b, se, 0.95, &mut rng).unwrap();
            prop_assert!(e.validate().is_ok());
            prop_assert!(e.cl_low >= CL_LOW_FLOOR);
        }

        #[test]
        fn best_of_k_never_exceeds_the_pool_minimum(
            ps in proptest::collection::vec(1e-9f64..1.0, 1..40),
            k_q in 1usize..50,
        ) {
            let candidates: Vec<PValueRecord> = ps
                .iter()
                .enumerate()
                .map(|(i, &p)| record(&format!("c{i}"), p))
                .collect();
            let chosen = best_of_k(&candidates, k_q).unwrap();
            let pool_min = ps[..k_q.min(ps.len())]
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(chosen.p, pool_min);
        }

        #[test]
        fn filter_never_drops_significant_records(
            ps in proptest::collection::vec(1e-9f64..1.0, 1..60),
            censor in 0.0f64..1.0,
            seed in 0u64..1000,
        ) {
            let records: Vec<PValueRecord> = ps
                .iter()
                .enumerate()
                .map(|(i, &p)| record(&format!("s{i}"), p))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (kept, suppressed) =
                publication_filter(records, censor, 0.05, &mut rng).unwrap();
            prop_assert_eq!(kept.len() + suppressed, ps.len());
            let significant_in = ps.iter().filter(|&&p| p <= 0.05).count();
            let significant_out = kept.iter().filter(|r| r.p <= 0.05).count();
            prop_assert_eq!(significant_in, significant_out);
        }
    }
}
