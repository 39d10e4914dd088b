//! Command-line front end. Exit codes: 0 on success, 1 for usage errors, 2
//! for anything that went wrong with the data or the filesystem. Output
//! files are written only after every artifact has been computed, and a
//! failed write removes whatever was already on disk, so a nonzero exit
//! never leaves partial outputs behind.

use std::ffi::OsString;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::effect_stats::Scale;
use crate::error::{MetalensError, Result};
use crate::fixtures;
use crate::ingest::{parse_counts_csv, parse_scenario, parse_study_csv};
use crate::numfmt::{fmt_sig6, fmt_stat};
use crate::pvalue_plot::{render_csv, render_svg, Verdict};
use crate::report::{analyze, generate_report, AnalysisOptions};
use crate::sim::{run_scenario, SimOutcome, SimScenario};

#[derive(Parser)]
#[command(
    name = "metalens",
    version,
    about = "Reliability diagnostics for meta-analyses of published risk ratios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive p-values from a study table, judge the plot shape, and pool
    Analyze {
        /// Study table (path, or the name of a bundled fixture)
        #[arg(long)]
        input: PathBuf,
        /// Scale the intervals are read on: raw | log
        #[arg(long, default_value = "raw")]
        scale: Scale,
        /// Small-p threshold for the count and the plot's horizontal line
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Confidence level of the published intervals and pooled CIs
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        /// Citation-count ledger to summarize alongside the table
        #[arg(long)]
        counts: Option<PathBuf>,
        /// Write the ranked p-value plot as SVG
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write the plot points as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the markdown report here instead of stdout
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a Monte Carlo scenario and summarize the verdicts
    Simulate {
        /// Scenario config (path, or the name of a bundled fixture)
        #[arg(long)]
        scenario: PathBuf,
        /// Number of independent replicates
        #[arg(long)]
        replicates: usize,
        /// Overrides the scenario's seed
        #[arg(long)]
        seed: Option<u64>,
        /// Write the summary here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare verdict rates between the honest and p-hacked presets
    Calibrate {
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// List the bundled example inputs
    Fixtures {
        /// Print one fixture name per line (the default action)
        #[arg(long)]
        list: bool,
    },
}

/// Parses arguments and runs the chosen command, returning the process exit
/// code instead of exiting, so tests can call it in-process.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land on stdout and are not failures
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            if color_enabled() {
                eprintln!("\x1b[31merror:\x1b[0m {e}");
            } else {
                eprintln!("error: {e}");
            }
            2
        }
    }
}

fn color_enabled() -> bool {
    std::env::var_os("METALENS_NO_COLOR").is_none() && std::io::stderr().is_terminal()
}

/// Resolves `--input`-style arguments: an existing path wins; a bare file
/// name with no directory part may also name a bundled fixture.
fn read_input(path: &Path) -> Result<String> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let bare = path.parent().is_none_or(|p| p.as_os_str().is_empty());
            if bare {
                if let Some(text) = path.file_name().and_then(|n| n.to_str()).and_then(fixtures::fixture) {
                    return Ok(text.to_string());
                }
            }
            Err(MetalensError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("no such file or bundled fixture: {}", path.display()),
            )))
        }
        Err(e) => Err(io_at(path, e)),
    }
}

fn io_at(path: &Path, e: std::io::Error) -> MetalensError {
    MetalensError::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Writes every output or none: the first failure removes the files already
/// written in this batch.
fn write_outputs(outputs: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    let mut written: Vec<&Path> = Vec::new();
    for (path, bytes) in outputs {
        if let Err(e) = std::fs::write(path, bytes) {
            for done in written {
                let _ = std::fs::remove_file(done);
            }
            return Err(io_at(path, e));
        }
        written.push(path);
    }
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Analyze {
            input,
            scale,
            alpha,
            confidence,
            counts,
            svg,
            csv,
            report,
        } => {
            let estimates = parse_study_csv(&read_input(&input)?, confidence)?;
            let ledger = counts
                .as_deref()
                .map(|p| parse_counts_csv(&read_input(p)?))
                .transpose()?;
            let options = AnalysisOptions {
                scale,
                alpha,
                confidence_level: confidence,
                ..AnalysisOptions::default()
            };
            let mut bundle = analyze(estimates, options)?;
            bundle.ledger = ledger;

            let title = input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("p-value plot")
                .to_string();
            let mut outputs: Vec<(PathBuf, Vec<u8>)> = Vec::new();
            if let Some(path) = svg {
                let text = render_svg(&bundle.plot, bundle.diagnosis.as_ref(), &title);
                bundle.artifacts.push(("svg plot".into(), path.display().to_string()));
                outputs.push((path, text.into_bytes()));
            }
            if let Some(path) = csv {
                let text = render_csv(&bundle.plot);
                bundle.artifacts.push(("plot csv".into(), path.display().to_string()));
                outputs.push((path, text.into_bytes()));
            }
            let report_text = generate_report(&bundle)?;
            match report {
                Some(path) => outputs.push((path, report_text.into_bytes())),
                None => print!("{report_text}"),
            }
            write_outputs(&outputs)
        }
        Command::Simulate {
            scenario,
            replicates,
            seed,
            out,
        } => {
            let mut config = parse_scenario(&read_input(&scenario)?)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let outcome = run_scenario(&config, replicates)?;
            let text = simulation_summary(&config, &outcome);
            match out {
                Some(path) => write_outputs(&[(path, text.into_bytes())]),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Calibrate { replicates, seed } => {
            let honest = run_scenario(&SimScenario::honest(seed), replicates)?;
            let hacked = run_scenario(&SimScenario::p_hacked(seed), replicates)?;
            print!("{}", calibration_table(replicates, seed, &honest, &hacked));
            Ok(())
        }
        Command::Fixtures { list: _ } => {
            for name in fixtures::fixture_names() {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn simulation_summary(scenario: &SimScenario, outcome: &SimOutcome) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "scenario: n_studies={} questions_per_study={} selection={} \
         publication_censor_prob={} per_study_bias={} per_study_se=[{}, {}] seed={}\n",
        scenario.n_studies,
        scenario.questions_per_study,
        scenario.selection,
        fmt_sig6(scenario.publication_censor_prob),
        fmt_sig6(scenario.per_study_bias),
        fmt_sig6(scenario.per_study_se_range.0),
        fmt_sig6(scenario.per_study_se_range.1),
        scenario.seed,
    ));
    out.push_str(&format!("replicates: {}\n", outcome.replicates));
    for verdict in [Verdict::Uniform, Verdict::Bilinear, Verdict::Ambiguous] {
        out.push_str(&format!(
            "verdict {}: {} of {} (rate {})\n",
            verdict,
            outcome.count(verdict),
            outcome.replicates,
            fmt_stat(outcome.rate(verdict)),
        ));
    }
    out.push_str(&format!(
        "records: published {} suppressed {} | degenerate replicates: {}\n",
        outcome.published_total, outcome.suppressed_total, outcome.degenerate_replicates,
    ));
    out.push_str(&format!(
        "first replicate published ({} records):\n",
        outcome.published.len(),
    ));
    let id_width = outcome
        .published
        .iter()
        .map(|e| e.id.len())
        .max()
        .unwrap_or(0)
        .max("id".len());
    out.push_str(&format!(
        "  {:<id_width$}  {:>10}  {:>10}  {:>10}\n",
        "id", "rr", "cl_low", "cl_high",
    ));
    for e in &outcome.published {
        out.push_str(&format!(
            "  {:<id_width$}  {:>10}  {:>10}  {:>10}\n",
            e.id,
            fmt_stat(e.rr),
            fmt_stat(e.cl_low),
            fmt_stat(e.cl_high),
        ));
    }
    out
}

fn calibration_table(
    replicates: usize,
    seed: u64,
    honest: &SimOutcome,
    hacked: &SimOutcome,
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "verdict rates over {replicates} replicates per scenario (seed {seed})\n\n",
    ));
    out.push_str(&format!(
        "{:<10}  {:>9}  {:>9}  {:>9}  {:>10}\n",
        "scenario", "Uniform", "Bilinear", "Ambiguous", "degenerate",
    ));
    for (name, outcome) in [("honest", honest), ("p_hacked", hacked)] {
        out.push_str(&format!(
            "{:<10}  {:>9}  {:>9}  {:>9}  {:>10}\n",
            name,
            fmt_stat(outcome.rate(Verdict::Uniform)),
            fmt_stat(outcome.rate(Verdict::Bilinear)),
            fmt_stat(outcome.rate(Verdict::Ambiguous)),
            outcome.degenerate_replicates,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(args.iter().map(|s| s.to_string()))
    }

    #[test]
    fn exit_codes_by_failure_class() {
        assert_eq!(run_args(&["metalens", "fixtures", "--list"]), 0);
        assert_eq!(run_args(&["metalens", "fixtures"]), 0);
        // usage errors
        assert_eq!(run_args(&["metalens", "analyze", "--no-such-flag"]), 1);
        assert_eq!(run_args(&["metalens", "frobnicate"]), 1);
        assert_eq!(run_args(&["metalens", "analyze"]), 1);
        assert_eq!(run_args(&["metalens", "--help"]), 0);
        assert_eq!(run_args(&["metalens", "--version"]), 0);
        // data errors
        assert_eq!(run_args(&["metalens", "analyze", "--input", "missing.csv"]), 2);
        assert_eq!(
            run_args(&["metalens", "analyze", "--input", "raaschou2013.csv", "--alpha", "1.5"]),
            2
        );
        assert_eq!(
            run_args(&["metalens", "simulate", "--scenario", "honest.cfg", "--replicates", "0"]),
            2
        );
    }

    #[test]
    fn analyze_accepts_bundled_fixture_names_but_not_paths_to_them() {
        let dir = tempfile::tempdir().unwrap();
        let report = dir.path().join("r.md");
        let code = run_args(&[
            "metalens",
            "analyze",
            "--input",
            "raaschou2013.csv",
            "--report",
            report.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(std::fs::read_to_string(&report).unwrap().contains("verdict: Uniform"));

        // a directory component disables fixture lookup
        assert_eq!(
            run_args(&["metalens", "analyze", "--input", "./no-dir/raaschou2013.csv"]),
            2
        );
    }

    #[test]
    fn failed_write_removes_earlier_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let svg = dir.path().join("plot.svg");
        let bad_report = dir.path().join("nope").join("r.md");
        let code = run_args(&[
            "metalens",
            "analyze",
            "--input",
            "raaschou2013.csv",
            "--svg",
            svg.to_str().unwrap(),
            "--report",
            bad_report.to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
        assert!(!svg.exists(), "partial svg output left behind");
    }

    #[test]
    fn simulate_summary_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        for path in [&a, &b] {
            let code = run_args(&[
                "metalens",
                "simulate",
                "--scenario",
                "honest.cfg",
                "--replicates",
                "3",
                "--seed",
                "11",
                "--out",
                path.to_str().unwrap(),
            ]);
            assert_eq!(code, 0);
        }
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(text, std::fs::read_to_string(&b).unwrap());
        assert!(text.contains("seed=11"), "{text}");
        assert!(text.contains("verdict Uniform:"), "{text}");
    }
}
