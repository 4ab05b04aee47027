//! Run artifacts: per-version documents, `timeseries.csv` and the summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{version_report, EvolutionRecord, HistoryError, IntegrityNotice, SkipNotice, Step};
use crate::ir::{serialize_ir, write_document, Delta};
use crate::rules::{count_by_rule, BUILTIN_NAMES};

pub const SUMMARY_SCHEMA: &str = "archdelta.summary";
pub const DELTA_SET_SCHEMA: &str = "archdelta.delta-set";
pub const TIMESERIES_HEADER: [&str; 5] = ["Index", "AR1", "AR2", "AR3", "AR4"];

/// One row per analyzed version; AR1..AR4 are IC, UEM, SMM and RMM counts.
pub fn emit_timeseries(record: &EvolutionRecord) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TIMESERIES_HEADER).expect("in-memory write");
    for v in &record.versions {
        let counts = count_by_rule(&v.violations);
        let mut row = vec![v.index.to_string()];
        row.extend(
            BUILTIN_NAMES
                .iter()
                .map(|n| counts.get(*n).copied().unwrap_or(0).to_string()),
        );
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub project: String,
    /// Distinct violations per rule over the whole history.
    pub unique_violations: BTreeMap<String, usize>,
    pub commits: usize,
    pub analyzed: usize,
    pub skipped: Vec<SkipNotice>,
    pub integrity: Vec<IntegrityNotice>,
}

impl Summary {
    pub fn to_json(&self) -> Vec<u8> {
        write_document(SUMMARY_SCHEMA, self)
    }

    /// Columns in table order: the built-in rules, then any others by name.
    fn columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = BUILTIN_NAMES.to_vec();
        cols.extend(
            self.unique_violations
                .keys()
                .map(String::as_str)
                .filter(|k| !BUILTIN_NAMES.contains(k)),
        );
        cols
    }
}

/// Per-rule unique totals and commit count. Built-in rules always appear.
pub fn emit_summary(record: &EvolutionRecord, project: &str) -> Summary {
    let mut unique: BTreeMap<String, usize> =
        BUILTIN_NAMES.iter().map(|n| (n.to_string(), 0)).collect();
    unique.extend(record.unique_totals.iter().map(|(k, v)| (k.clone(), *v)));
    Summary {
        project: project.to_string(),
        unique_violations: unique,
        commits: record.commits,
        analyzed: record.versions.len(),
        skipped: record.skipped.clone(),
        integrity: record.integrity.clone(),
    }
}

/// Aligned text table, one row for the project.
pub fn render_summary_table(s: &Summary) -> String {
    let mut header = vec!["Project".to_string()];
    let mut row = vec![s.project.clone()];
    for c in s.columns() {
        header.push(c.to_string());
        row.push(s.unique_violations.get(c).copied().unwrap_or(0).to_string());
    }
    header.push("Commits".into());
    row.push(s.commits.to_string());
    let widths: Vec<usize> = header.iter().zip(&row).map(|(h, r)| h.len().max(r.len())).collect();
    let line = |cells: &[String], left_first: bool| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 && left_first {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = format!("{}\n{}\n", line(&header, true), line(&row, true));
    for n in &s.skipped {
        out.push_str(&format!("skipped {} ({}): {}\n", n.index, n.label, n.reason));
    }
    out
}

#[derive(Serialize)]
struct DeltaSet<'a> {
    deltas: &'a [Delta],
}

/// Writes `ir/<i>.json`, `deltas/<i>.json` and `violations/<i>.json` as the
/// replay proceeds, and the aggregate files at the end.
pub struct ArtifactWriter {
    dir: PathBuf,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), HistoryError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| HistoryError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, bytes).map_err(|source| HistoryError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl ArtifactWriter {
    /// Prepares `dir`, removing artifacts of an earlier run.
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, HistoryError> {
        let dir = dir.into();
        for sub in ["ir", "deltas", "violations"] {
            let p = dir.join(sub);
            if p.exists() {
                std::fs::remove_dir_all(&p).map_err(|source| HistoryError::Io { path: p.clone(), source })?;
            }
        }
        Ok(ArtifactWriter { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn observe(&self, step: Step<'_>) -> Result<(), HistoryError> {
        let Step::Analyzed { record, ir } = step else {
            return Ok(());
        };
        let i = record.index;
        write(&self.dir.join(format!("ir/{i}.json")), &serialize_ir(ir))?;
        if !record.deltas.is_empty() {
            let doc = write_document(DELTA_SET_SCHEMA, &DeltaSet { deltas: &record.deltas });
            write(&self.dir.join(format!("deltas/{i}.json")), &doc)?;
        }
        write(
            &self.dir.join(format!("violations/{i}.json")),
            &version_report(record).to_json(),
        )
    }

    pub fn finish(&self, record: &EvolutionRecord, project: &str) -> Result<Summary, HistoryError> {
        write(&self.dir.join("timeseries.csv"), &emit_timeseries(record))?;
        let summary = emit_summary(record, project);
        write(&self.dir.join("summary.json"), &summary.to_json())?;
        write(&self.dir.join("summary.txt"), render_summary_table(&summary).as_bytes())?;
        Ok(summary)
    }
}
