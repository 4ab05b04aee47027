//! Replaying a version history: baseline, per-step deltas, increments and
//! rule evaluation, with time-series and summary artifacts.

mod artifacts;
mod config;
mod source;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use artifacts::{
    emit_summary, emit_timeseries, render_summary_table, ArtifactWriter, Summary, DELTA_SET_SCHEMA,
    SUMMARY_SCHEMA, TIMESERIES_HEADER,
};
pub use config::{ReplayConfig, SourceConfig, VersionSource};
pub use source::{git_revisions, listed_dirs, materialize_revision, version_dirs, VersionInput};

use crate::delta::{compute_delta, DeltaError};
use crate::extract::{
    discover_services, scan_repository_with, ExtractError, MarkerProfile, ParseCache, ScanOptions,
    ServiceNames,
};
use crate::ir::{Delta, MicroserviceIR, SystemIR};
use crate::link::{build_system_ir, LinkError};
use crate::merge::{apply_deltas, MergeError};
use crate::rules::{evaluate_many, Rule, RuleError, Violation, ViolationReport};

pub const DEFAULT_INTEGRITY_INTERVAL: usize = 50;

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("no versions to replay")]
    NoVersions,
    #[error("no version could be extracted")]
    NoAnalyzableVersion,
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("git: {0}")]
    Git(String),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Delta(#[from] DeltaError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

pub struct ReplaySettings {
    pub profile: MarkerProfile,
    pub rules: Vec<Rule>,
    pub names: ServiceNames,
    pub overlap_threshold: f64,
    /// Full-build comparison every N analyzed versions; 0 disables.
    pub integrity_interval: usize,
}

impl Default for ReplaySettings {
    fn default() -> Self {
        ReplaySettings {
            profile: MarkerProfile::default(),
            rules: crate::rules::builtin_rules(),
            names: ServiceNames::default(),
            overlap_threshold: crate::link::DEFAULT_OVERLAP_THRESHOLD,
            integrity_interval: DEFAULT_INTEGRITY_INTERVAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SkipNotice {
    pub index: usize,
    pub label: String,
    pub reason: String,
    /// Files that newly failed to parse, as `service/relative/path`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IntegrityNotice {
    pub index: usize,
    pub label: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VersionRecord {
    /// Position in the input history.
    pub index: usize,
    pub label: String,
    pub system_version_label: String,
    /// Per-service deltas; empty for the baseline.
    pub deltas: Vec<Delta>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvolutionRecord {
    pub versions: Vec<VersionRecord>,
    pub skipped: Vec<SkipNotice>,
    pub integrity: Vec<IntegrityNotice>,
    pub rule_names: Vec<String>,
    pub per_rule_series: BTreeMap<String, Vec<usize>>,
    pub unique_totals: BTreeMap<String, usize>,
    /// Number of versions in the input, analyzed or not.
    pub commits: usize,
}

/// What the replay hands to an observer after each version.
pub enum Step<'a> {
    Analyzed {
        record: &'a VersionRecord,
        ir: &'a SystemIR,
    },
    Skipped(&'a SkipNotice),
}

struct Scanned {
    services: BTreeMap<String, MicroserviceIR>,
    failures: BTreeSet<String>,
}

fn scan_version(v: &VersionInput, s: &ReplaySettings, cache: &ParseCache) -> Result<Scanned, ExtractError> {
    let roots = discover_services(&v.root, &s.names)?;
    let opts = ScanOptions {
        names: Some(&s.names),
        cache: Some(cache),
    };
    let outputs = roots
        .par_iter()
        .map(|r| scan_repository_with(&r.path, &s.profile, &r.name, &v.label, opts).map(|o| (r, o)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut services = BTreeMap::new();
    let mut failures = BTreeSet::new();
    for (root, out) in outputs {
        failures.extend(out.failed_paths().into_iter().map(|p| format!("{}/{p}", root.name)));
        services.insert(root.name.clone(), out.ir);
    }
    cache.next_generation();
    Ok(Scanned { services, failures })
}

fn full_build(services: &BTreeMap<String, MicroserviceIR>, threshold: f64) -> Result<SystemIR, LinkError> {
    build_system_ir(services.values().cloned().collect(), threshold, "")
}

/// Replays `source` oldest first, reporting each version to `observe`.
///
/// A version is skipped when its trees cannot be scanned or when files fail
/// to parse that were not failing in the last analyzed version (failures in
/// the baseline are tolerated). The version after a skip is re-anchored on
/// a full build.
pub fn replay(
    source: &VersionSource,
    settings: &ReplaySettings,
    mut observe: impl FnMut(Step<'_>) -> Result<(), HistoryError>,
) -> Result<EvolutionRecord, HistoryError> {
    if source.is_empty() {
        return Err(HistoryError::NoVersions);
    }
    let cache = ParseCache::new();
    let mut record = EvolutionRecord {
        rule_names: settings.rules.iter().map(|r| r.name.clone()).collect(),
        commits: source.len(),
        ..Default::default()
    };
    let mut unique: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut current: Option<(SystemIR, Scanned)> = None;
    let mut reanchor = false;

    for index in 0..source.len() {
        let skip = |reason: String, paths: Vec<String>| SkipNotice {
            index,
            label: source.label(index),
            reason,
            paths,
        };
        let scanned = source
            .fetch(index)
            .and_then(|v| scan_version(&v, settings, &cache).map(|s| (v, s)).map_err(Into::into));
        let (version, scanned) = match scanned {
            Ok(x) => x,
            Err(e) => {
                let n = skip(e.to_string(), Vec::new());
                observe(Step::Skipped(&n))?;
                record.skipped.push(n);
                reanchor = true;
                continue;
            }
        };
        let known = current.as_ref().map(|(_, s)| &s.failures);
        let fresh: Vec<String> = scanned
            .failures
            .iter()
            .filter(|p| known.is_some_and(|k| !k.contains(*p)))
            .cloned()
            .collect();
        if !fresh.is_empty() {
            let n = skip(format!("{} file(s) failed to parse", fresh.len()), fresh);
            observe(Step::Skipped(&n))?;
            record.skipped.push(n);
            reanchor = true;
            continue;
        }

        let (increment, deltas, violations) = match &current {
            None => {
                let ir = full_build(&scanned.services, settings.overlap_threshold)?;
                let v = evaluate_many(&ir, &[], &ir, &settings.rules)?;
                (ir, Vec::new(), v)
            }
            Some((baseline, prev)) => {
                let names: BTreeSet<&String> = prev.services.keys().chain(scanned.services.keys()).collect();
                let mut deltas = Vec::new();
                for name in names {
                    let empty_old = MicroserviceIR::new(name.clone(), "");
                    let empty_new = MicroserviceIR::new(name.clone(), version.label.clone());
                    let old = prev.services.get(name).unwrap_or(&empty_old);
                    let new = scanned.services.get(name).unwrap_or(&empty_new);
                    deltas.push(compute_delta(old, new)?);
                }
                let mut inc = apply_deltas(baseline, &deltas, settings.overlap_threshold)?;
                inc.services.retain(|name, _| scanned.services.contains_key(name));
                inc.version_label = inc.derived_version_label();
                let analyzed = record.versions.len();
                let due = settings.integrity_interval > 0 && analyzed.is_multiple_of(settings.integrity_interval);
                if reanchor || due {
                    let full = full_build(&scanned.services, settings.overlap_threshold)?;
                    if full != inc {
                        record.integrity.push(IntegrityNotice {
                            index,
                            label: version.label.clone(),
                            message: if reanchor {
                                "re-anchored on a full build after a skipped version".into()
                            } else {
                                "increment differed from a full build; replaced".into()
                            },
                        });
                        inc = full;
                    }
                }
                let refs: Vec<&Delta> = deltas.iter().collect();
                let v = evaluate_many(baseline, &refs, &inc, &settings.rules)?;
                (inc, deltas, v)
            }
        };
        reanchor = false;

        let counts = crate::rules::count_by_rule(&violations);
        for r in &settings.rules {
            record
                .per_rule_series
                .entry(r.name.clone())
                .or_default()
                .push(counts.get(&r.name).copied().unwrap_or(0));
        }
        for v in &violations {
            unique.entry(v.rule_name.clone()).or_default().insert(v.dedup_key.clone());
        }
        let vr = VersionRecord {
            index,
            label: version.label.clone(),
            system_version_label: increment.version_label.clone(),
            deltas,
            violations,
        };
        observe(Step::Analyzed {
            record: &vr,
            ir: &increment,
        })?;
        record.versions.push(vr);
        current = Some((increment, scanned));
    }
    if record.versions.is_empty() {
        return Err(HistoryError::NoAnalyzableVersion);
    }
    record.unique_totals = settings
        .rules
        .iter()
        .map(|r| (r.name.clone(), unique.get(&r.name).map_or(0, BTreeSet::len)))
        .collect();
    Ok(record)
}

/// Violation report of one analyzed version.
pub fn version_report(v: &VersionRecord) -> ViolationReport {
    ViolationReport::new(v.system_version_label.clone(), v.violations.clone())
}
