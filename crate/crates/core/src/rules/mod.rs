//! Change conflict rules: loading, built-in detectors and evaluation.

mod detect;
mod generic;
mod model;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use detect::{
    detect_invalid_calls, detect_repository_method_modifications,
    detect_service_method_modifications, detect_uncalled_endpoints, reverse_reach, BUILTIN_NAMES,
    IC, RMM, SMM, UEM,
};
pub use model::{
    call_identity, dedup_key, endpoint_identity, AnalysisLevel, ChangeFilter, ChangeType,
    Evidence, ImpactType, ImpactedItem, MonitoredImpact, Rule, RuleComponentType, Trigger,
    Violation,
};

use crate::ir::{read_document, write_document, Delta, IrError, SystemIR};

pub const VIOLATIONS_SCHEMA: &str = "archdelta.violations";

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule document invalid at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("rule `{rule}`: {message}")]
    Invalid { rule: String, message: String },
    #[error("rule `{rule}` binds to unknown detector `{binding}`")]
    UnknownBinding { rule: String, binding: String },
    #[error("rule name `{0}` appears more than once")]
    DuplicateName(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn schema_error(path: impl Into<String>, message: impl Into<String>) -> RuleError {
    RuleError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses a rule document: a single rule object, an array of rules, or an
/// object with a `rules` array.
pub fn load_rules(bytes: &[u8]) -> Result<Vec<Rule>, RuleError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| {
        schema_error(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    let (prefix, items) = match value {
        Value::Array(items) => ("", items),
        Value::Object(mut map) if map.contains_key("rules") => {
            if map.len() > 1 {
                let extra: Vec<&String> = map.keys().filter(|k| *k != "rules").collect();
                return Err(schema_error(".", format!("unknown field `{}`", extra[0])));
            }
            match map.remove("rules") {
                Some(Value::Array(items)) => ("rules", items),
                _ => return Err(schema_error("rules", "expected an array of rules")),
            }
        }
        v @ Value::Object(_) => ("", vec![v]),
        _ => return Err(schema_error(".", "expected a rule object or an array of rules")),
    };
    let many = !prefix.is_empty() || items.len() != 1;
    let mut rules = Vec::with_capacity(items.len());
    let mut names = BTreeSet::new();
    for (i, item) in items.into_iter().enumerate() {
        let rule: Rule = serde_path_to_error::deserialize(item).map_err(|e| {
            let inner = e.path().to_string();
            let at = match (prefix, many) {
                ("", false) => inner,
                ("", true) => format!("[{i}].{inner}"),
                (p, _) => format!("{p}[{i}].{inner}"),
            };
            schema_error(at, e.inner().to_string())
        })?;
        rule.validate()?;
        if !names.insert(rule.name.clone()) {
            return Err(RuleError::DuplicateName(rule.name));
        }
        rules.push(rule);
    }
    Ok(rules)
}

pub fn load_rules_file(path: &Path) -> Result<Vec<Rule>, RuleError> {
    let bytes = std::fs::read(path).map_err(|source| RuleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_rules(&bytes)
}

const BUILTIN_DOCUMENTS: [&str; 4] = [
    include_str!("builtin/ic.json"),
    include_str!("builtin/uem.json"),
    include_str!("builtin/smm.json"),
    include_str!("builtin/rmm.json"),
];

/// The shipped IC, UEM, SMM and RMM rules, in that order.
pub fn builtin_rules() -> Vec<Rule> {
    BUILTIN_DOCUMENTS
        .iter()
        .flat_map(|doc| load_rules(doc.as_bytes()).expect("built-in rules are valid"))
        .collect()
}

fn binding_of(rule: &Rule) -> Result<Option<&str>, RuleError> {
    match rule.binding.as_deref() {
        Some(b) if BUILTIN_NAMES.contains(&b) => Ok(Some(b)),
        Some(b) => Err(RuleError::UnknownBinding {
            rule: rule.name.clone(),
            binding: b.to_string(),
        }),
        None => Ok(BUILTIN_NAMES.iter().copied().find(|n| *n == rule.name)),
    }
}

fn evaluate_rule(
    rule: &Rule,
    binding: Option<&str>,
    baseline: &SystemIR,
    deltas: &[&Delta],
    increment: &SystemIR,
    facts: &generic::LinkFacts<'_>,
) -> Vec<Violation> {
    let label = &increment.version_label;
    let changes = generic::change_map(deltas);
    match binding {
        Some(IC) => detect::detect_invalid_calls_named(&rule.name, increment)
            .into_iter()
            .map(|mut v| {
                if let Evidence::Call { call } = &v.primary().evidence {
                    v.triggering = detect::call_triggers(call, baseline, &changes);
                }
                v
            })
            .collect(),
        Some(UEM) => detect::detect_uncalled_endpoints_named(&rule.name, increment)
            .into_iter()
            .map(|mut v| {
                if let Evidence::Endpoint { endpoint } = &v.primary().evidence {
                    v.triggering = detect::endpoint_triggers(endpoint, baseline, &changes);
                }
                v
            })
            .collect(),
        Some(SMM) => deltas
            .iter()
            .flat_map(|d| detect::detect_smm_named(&rule.name, baseline, d, label))
            .collect(),
        Some(RMM) => deltas
            .iter()
            .flat_map(|d| detect::detect_rmm_named(&rule.name, baseline, d, label))
            .collect(),
        _ => generic::evaluate_generic(rule, baseline, deltas, increment, facts),
    }
}

/// Evaluates rules over one step that may carry several service deltas.
///
/// Rules run in parallel. The result is deduplicated by (rule, dedup key)
/// and sorted.
pub fn evaluate_many(
    baseline: &SystemIR,
    deltas: &[&Delta],
    increment: &SystemIR,
    rules: &[Rule],
) -> Result<Vec<Violation>, RuleError> {
    let bindings = rules
        .iter()
        .map(binding_of)
        .collect::<Result<Vec<_>, _>>()?;
    if rules.is_empty() {
        return Ok(Vec::new());
    }
    let facts = generic::LinkFacts::new(increment);
    let found: Vec<Vec<Violation>> = rules
        .par_iter()
        .zip(bindings.par_iter())
        .map(|(r, b)| evaluate_rule(r, *b, baseline, deltas, increment, &facts))
        .collect();
    let mut unique: BTreeMap<(String, String), Violation> = BTreeMap::new();
    for v in found.into_iter().flatten() {
        match unique.entry((v.rule_name.clone(), v.dedup_key.clone())) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(v);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                // same logical violation reached twice: keep one, union triggers
                let kept = e.get_mut();
                kept.triggering.extend(v.triggering);
                kept.triggering.sort();
                kept.triggering.dedup();
            }
        }
    }
    Ok(unique.into_values().collect())
}

/// Evaluates rules over a (baseline, d, increment) triple.
pub fn evaluate(
    baseline: &SystemIR,
    d: &Delta,
    increment: &SystemIR,
    rules: &[Rule],
) -> Result<Vec<Violation>, RuleError> {
    evaluate_many(baseline, &[d], increment, rules)
}

/// Machine-readable violation report for one increment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViolationReport {
    pub system_version_label: String,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn new(label: impl Into<String>, violations: Vec<Violation>) -> Self {
        ViolationReport {
            system_version_label: label.into(),
            violations,
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        write_document(VIOLATIONS_SCHEMA, self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, IrError> {
        read_document(VIOLATIONS_SCHEMA, bytes)
    }

    pub fn counts(&self) -> BTreeMap<String, usize> {
        count_by_rule(&self.violations)
    }
}

pub fn count_by_rule(violations: &[Violation]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for v in violations {
        *out.entry(v.rule_name.clone()).or_insert(0) += 1;
    }
    out
}

fn describe(item: &ImpactedItem) -> String {
    match &item.evidence {
        Evidence::Call { call } => format!(
            "call {} {} -> {} in {}.{}",
            call.http_method, call.path, call.target_service, item.component_id, call.site_method
        ),
        Evidence::Endpoint { endpoint } => format!(
            "endpoint {} {} in {}.{}",
            endpoint.http_method, endpoint.path, item.component_id, endpoint.handler_method
        ),
        Evidence::Method {
            method,
            arity,
            reasons,
        } => format!("method {}.{method}/{arity}: {}", item.component_id, reasons.join("; ")),
        Evidence::Reached { from } => format!("{} (reaches {from})", item.component_id),
        Evidence::Component { reason } => format!("{}: {reason}", item.component_id),
    }
}

/// Human-readable summary, one block per violation.
pub fn render_text(report: &ViolationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} violation(s) in {}",
        report.violations.len(),
        report.system_version_label
    );
    for v in &report.violations {
        let _ = writeln!(out, "[{}] {}", v.rule_name, describe(v.primary()));
        for item in &v.impacted[1..] {
            let _ = writeln!(out, "    affects {}", describe(item));
        }
        for t in &v.triggering {
            let _ = writeln!(out, "    after {} {}", t.change_kind, t.component_id);
        }
    }
    out
}
