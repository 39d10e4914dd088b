//! Text-format ingestion: study tables, citation-count ledgers, and scenario
//! config files. Every parse error names the line or row it came from; a bad
//! row never silently drops from a table.

use std::str::FromStr;

use crate::effect_stats::EffectEstimate;
use crate::error::{MetalensError, Result};
use crate::sim::{Selection, SimScenario};

const STUDY_HEADER: [&str; 5] = ["id", "label", "rr", "cl_low", "cl_high"];
const COUNTS_HEADER: [&str; 3] = ["name", "origin", "citations"];

/// One row of a citation-count ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub name: String,
    pub origin: String,
    pub citations: u64,
    pub note: Option<String>,
}

/// Citation counts per cohort, the crude measure of how many analysis
/// opportunities a literature has had.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionLedger {
    pub entries: Vec<LedgerEntry>,
}

/// Summary statistics over a ledger. `shared_cohorts` groups entries whose
/// citation counts coincide exactly, a cheap tell for analyses drawn from the
/// same underlying cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerStats {
    pub min: u64,
    pub median: f64,
    pub max: u64,
    pub total: u64,
    pub shared_cohorts: Vec<(u64, Vec<String>)>,
}

fn row_err(row: usize, message: impl Into<String>) -> MetalensError {
    MetalensError::CsvRow {
        row,
        message: message.into(),
    }
}

fn parse_field<T: FromStr>(row: usize, field: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| row_err(row, format!("field `{field}` is not a number: `{raw}`")))
}

/// Parses a study table with header `id,label,rr,cl_low,cl_high` into
/// validated estimates, in file order. `confidence_level` states the level
/// the table's intervals were published at.
pub fn parse_study_csv(text: &str, confidence_level: f64) -> Result<Vec<EffectEstimate>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| row_err(0, e.to_string()))?
        .clone();
    if headers.iter().map(str::trim).ne(STUDY_HEADER) {
        return Err(MetalensError::CsvHeader {
            expected: "id,label,rr,cl_low,cl_high",
            got: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut estimates = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| row_err(row, e.to_string()))?;
        let id = record.get(0).unwrap_or("").trim();
        if id.is_empty() {
            return Err(row_err(row, "field `id` must not be empty"));
        }
        let label = record.get(1).unwrap_or("").trim();
        let rr: f64 = parse_field(row, "rr", record.get(2).unwrap_or(""))?;
        let cl_low: f64 = parse_field(row, "cl_low", record.get(3).unwrap_or(""))?;
        let cl_high: f64 = parse_field(row, "cl_high", record.get(4).unwrap_or(""))?;
        let estimate = EffectEstimate::new(id, label, rr, cl_low, cl_high, confidence_level)
            .map_err(|e| row_err(row, e.to_string()))?;
        estimates.push(estimate);
    }
    if estimates.is_empty() {
        return Err(MetalensError::InvalidParameter("no data rows".into()));
    }
    Ok(estimates)
}

/// Parses a citation-count ledger with header `name,origin,citations` and an
/// optional trailing `note` column.
pub fn parse_counts_csv(text: &str) -> Result<QuestionLedger> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| row_err(0, e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    let has_note = match cols.as_slice() {
        c if c == COUNTS_HEADER => false,
        ["name", "origin", "citations", "note"] => true,
        _ => {
            return Err(MetalensError::CsvHeader {
                expected: "name,origin,citations (optionally with `note`)",
                got: cols.join(","),
            })
        }
    };
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| row_err(row, e.to_string()))?;
        let name = record.get(0).unwrap_or("").trim();
        if name.is_empty() {
            return Err(row_err(row, "field `name` must not be empty"));
        }
        let raw_count = record.get(2).unwrap_or("").trim();
        let citations: u64 = raw_count.parse().map_err(|_| {
            row_err(
                row,
                format!("field `citations` must be a nonnegative integer: `{raw_count}`"),
            )
        })?;
        let note = if has_note {
            record
                .get(3)
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .map(String::from)
        } else {
            None
        };
        entries.push(LedgerEntry {
            name: name.to_string(),
            origin: record.get(1).unwrap_or("").trim().to_string(),
            citations,
            note,
        });
    }
    if entries.is_empty() {
        return Err(MetalensError::InvalidParameter("no data rows".into()));
    }
    Ok(QuestionLedger { entries })
}

/// Min / median / max / total plus shared-cohort candidates: distinct names
/// with identical citation counts, listed by descending count.
pub fn ledger_stats(ledger: &QuestionLedger) -> Result<LedgerStats> {
    if ledger.entries.is_empty() {
        return Err(MetalensError::EmptyInput("ledger_stats"));
    }
    let mut counts: Vec<u64> = ledger.entries.iter().map(|e| e.citations).collect();
    counts.sort_unstable();
    let n = counts.len();
    let median = if n % 2 == 1 {
        counts[n / 2] as f64
    } else {
        (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
    };
    let mut shared: Vec<(u64, Vec<String>)> = Vec::new();
    let mut sorted_by_count: Vec<&LedgerEntry> = ledger.entries.iter().collect();
    sorted_by_count.sort_by_key(|e| std::cmp::Reverse(e.citations));
    for entry in sorted_by_count {
        match shared.last_mut() {
            Some((count, names)) if *count == entry.citations => names.push(entry.name.clone()),
            _ => shared.push((entry.citations, vec![entry.name.clone()])),
        }
    }
    shared.retain(|(_, names)| names.len() > 1);
    Ok(LedgerStats {
        min: counts[0],
        median,
        max: counts[n - 1],
        total: counts.iter().sum(),
        shared_cohorts: shared,
    })
}

/// Parses the flat `key = value` scenario format: one key per line, `#`
/// comments, blank lines ignored, unknown or repeated keys rejected with
/// their line number. `seed` is optional (defaults to 0, typically overridden
/// on the command line); everything else is required.
pub fn parse_scenario(text: &str) -> Result<SimScenario> {
    let mut n_studies: Option<usize> = None;
    let mut questions_per_study: Option<usize> = None;
    let mut selection: Option<Selection> = None;
    let mut publication_censor_prob: Option<f64> = None;
    let mut per_study_bias: Option<f64> = None;
    let mut per_study_se_low: Option<f64> = None;
    let mut per_study_se_high: Option<f64> = None;
    let mut seed: Option<u64> = None;

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(MetalensError::ScenarioLine {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();

        fn set<T: FromStr>(
            slot: &mut Option<T>,
            key: &str,
            value: &str,
            line: usize,
        ) -> Result<()>
        where
            T::Err: std::fmt::Display,
        {
            if slot.is_some() {
                return Err(MetalensError::ScenarioLine {
                    line,
                    message: format!("key `{key}` given more than once"),
                });
            }
            let parsed = value.parse().map_err(|e| MetalensError::ScenarioLine {
                line,
                message: format!("bad value for `{key}`: {e}"),
            })?;
            *slot = Some(parsed);
            Ok(())
        }

        match key {
            "n_studies" => set(&mut n_studies, key, value, line)?,
            "questions_per_study" => set(&mut questions_per_study, key, value, line)?,
            "selection" => set(&mut selection, key, value, line)?,
            "publication_censor_prob" => set(&mut publication_censor_prob, key, value, line)?,
            "per_study_bias" => set(&mut per_study_bias, key, value, line)?,
            "per_study_se_low" => set(&mut per_study_se_low, key, value, line)?,
            "per_study_se_high" => set(&mut per_study_se_high, key, value, line)?,
            "seed" => set(&mut seed, key, value, line)?,
            other => {
                return Err(MetalensError::UnknownScenarioKey {
                    line,
                    key: other.to_string(),
                })
            }
        }
    }

    fn need<T>(slot: Option<T>, key: &'static str) -> Result<T> {
        slot.ok_or(MetalensError::MissingScenarioKey(key))
    }

    let scenario = SimScenario {
        n_studies: need(n_studies, "n_studies")?,
        questions_per_study: need(questions_per_study, "questions_per_study")?,
        selection: need(selection, "selection")?,
        publication_censor_prob: need(publication_censor_prob, "publication_censor_prob")?,
        per_study_bias: need(per_study_bias, "per_study_bias")?,
        per_study_se_range: (
            need(per_study_se_low, "per_study_se_low")?,
            need(per_study_se_high, "per_study_se_high")?,
        ),
        seed: seed.unwrap_or(0),
    };
    scenario.validate()?;
    Ok(scenario)
}
