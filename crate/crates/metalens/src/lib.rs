//! Reliability diagnostics for published meta-analyses.
//!
//! The crate recovers per-study test statistics from reported risk ratios and
//! confidence intervals, draws and classifies the resulting p-value plot,
//! re-pools effects under standard meta-analytic models, and simulates how
//! questionable research practices reshape all of the above.

pub mod cli;
pub mod effect_stats;
pub mod error;
pub mod fixtures;
pub mod ingest;
pub mod meta;
mod numfmt;
pub mod pvalue_plot;
pub mod report;
pub mod sim;

pub use effect_stats::{
    derive_records, normal_cdf, p_two_sided, se_from_ci, z_critical, z_score, EffectEstimate,
    PValueRecord, Scale,
};
pub use error::{MetalensError, Result};
pub use ingest::{
    ledger_stats, parse_counts_csv, parse_scenario, parse_study_csv, LedgerEntry, LedgerStats,
    QuestionLedger,
};
pub use meta::{
    chi_square_sf, fishers_method, fixed_effect, influence_report, leave_one_out,
    random_effects_dl, study_effects, InfluenceEntry, MetaMethod, MetaResult, StudyEffect,
};
pub use pvalue_plot::{
    bilinear_diagnosis, bilinear_diagnosis_with, build_plot, ks_uniformity, render_csv,
    render_svg, DiagnosisConfig, MixtureDiagnosis, PValuePlotModel, Verdict,
};
pub use report::{analyze, generate_report, AnalysisBundle, AnalysisOptions};
pub use sim::{
    best_of_k, biased_p_curve, publication_filter, run_scenario, simulate_study, BiasCurvePoint,
    BiasSchedule, Selection, SimOutcome, SimScenario,
};
