//! The four built-in detectors.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::model::{Evidence, ImpactedItem, Trigger, Violation};
use crate::ir::{
    ChangeKind, Component, ComponentId, ComponentType, Delta, DependencyEdge, Endpoint, Method,
    MicroserviceIR, RestCall, SystemIR,
};
use crate::link::{EndpointIndex, unmatched_calls, uncalled_endpoints};

pub const IC: &str = "IC";
pub const UEM: &str = "UEM";
pub const SMM: &str = "SMM";
pub const RMM: &str = "RMM";

pub const BUILTIN_NAMES: [&str; 4] = [IC, UEM, SMM, RMM];

/// A call with no matching endpoint anywhere in `increment`.
pub fn detect_invalid_calls(increment: &SystemIR) -> Vec<Violation> {
    detect_invalid_calls_named(IC, increment)
}

pub(crate) fn detect_invalid_calls_named(rule: &str, increment: &SystemIR) -> Vec<Violation> {
    unmatched_calls(increment)
        .into_iter()
        .map(|call| {
            Violation::new(
                rule,
                &increment.version_label,
                Vec::new(),
                vec![call_item(call)],
            )
        })
        .collect()
}

pub(crate) fn call_item(call: &RestCall) -> ImpactedItem {
    ImpactedItem {
        component_id: call.owning_component.clone(),
        evidence: Evidence::Call { call: call.clone() },
    }
}

pub(crate) fn endpoint_item(e: &Endpoint) -> ImpactedItem {
    ImpactedItem {
        component_id: e.owning_component.clone(),
        evidence: Evidence::Endpoint { endpoint: e.clone() },
    }
}

/// An endpoint that no call from another service reaches.
pub fn detect_uncalled_endpoints(increment: &SystemIR) -> Vec<Violation> {
    detect_uncalled_endpoints_named(UEM, increment)
}

pub(crate) fn detect_uncalled_endpoints_named(rule: &str, increment: &SystemIR) -> Vec<Violation> {
    uncalled_endpoints(increment)
        .into_iter()
        .map(|e| Violation::new(rule, &increment.version_label, Vec::new(), vec![endpoint_item(e)]))
        .collect()
}

/// Components of `accept` type that reach `from` over reversed call-graph edges.
pub fn reverse_reach(svc: &MicroserviceIR, from: &ComponentId, accept: ComponentType) -> Vec<ComponentId> {
    let mut callers: BTreeMap<&ComponentId, Vec<&ComponentId>> = BTreeMap::new();
    for e in &svc.call_graph_edges {
        callers.entry(&e.to).or_default().push(&e.from);
    }
    let mut seen: BTreeSet<&ComponentId> = BTreeSet::new();
    let mut queue = VecDeque::from([from]);
    seen.insert(from);
    let mut out = Vec::new();
    while let Some(id) = queue.pop_front() {
        for c in callers.get(id).into_iter().flatten() {
            if seen.insert(c) {
                if c.component_type == accept {
                    out.push((*c).clone());
                }
                queue.push_back(c);
            }
        }
    }
    out.sort();
    out
}

type MethodKey<'a> = (&'a str, usize);

fn methods_by_key(c: &Component) -> BTreeMap<MethodKey<'_>, &Method> {
    c.methods.iter().map(|m| (m.signature_key(), m)).collect()
}

/// Method pairs present in both versions, keyed by (name, arity).
fn paired_methods<'a>(old: &'a Component, new: &'a Component) -> Vec<(&'a Method, &'a Method)> {
    let old_m = methods_by_key(old);
    new.methods
        .iter()
        .filter_map(|m| old_m.get(&m.signature_key()).map(|o| (*o, m)))
        .collect()
}

fn smm_reasons(old: &Method, new: &Method) -> Vec<String> {
    let mut reasons = Vec::new();
    if old.return_type != new.return_type {
        reasons.push(format!("return type {} -> {}", old.return_type, new.return_type));
    }
    if old.return_object_calls != new.return_object_calls {
        let o: BTreeSet<&String> = old.return_object_calls.iter().collect();
        let n: BTreeSet<&String> = new.return_object_calls.iter().collect();
        let added: Vec<&str> = n.difference(&o).map(|s| s.as_str()).collect();
        let removed: Vec<&str> = o.difference(&n).map(|s| s.as_str()).collect();
        reasons.push(format!(
            "calls on returned object changed (added [{}], removed [{}])",
            added.join(", "),
            removed.join(", ")
        ));
    }
    reasons
}

fn parameter_types(m: &Method) -> Vec<&str> {
    m.parameters.iter().map(|p| p.declared_type.as_str()).collect()
}

fn rmm_reasons(old: &Method, new: &Method) -> Vec<String> {
    let mut reasons = Vec::new();
    let o: BTreeSet<&String> = old.annotations.iter().collect();
    let n: BTreeSet<&String> = new.annotations.iter().collect();
    if o != n {
        let added: Vec<&str> = n.difference(&o).map(|s| s.as_str()).collect();
        let removed: Vec<&str> = o.difference(&n).map(|s| s.as_str()).collect();
        reasons.push(format!(
            "annotations changed (added [{}], removed [{}])",
            added.join(", "),
            removed.join(", ")
        ));
    }
    if old.return_type != new.return_type || parameter_types(old) != parameter_types(new) {
        reasons.push(format!(
            "signature ({}) {} -> ({}) {}",
            parameter_types(old).join(","),
            old.return_type,
            parameter_types(new).join(","),
            new.return_type
        ));
    }
    reasons
}

fn modified_methods<'a>(
    baseline: &'a SystemIR,
    d: &'a Delta,
    ctype: ComponentType,
    reasons: fn(&Method, &Method) -> Vec<String>,
) -> Vec<(&'a ComponentId, &'a Method, Vec<String>)> {
    let mut out = Vec::new();
    for ch in &d.changes {
        if ch.change_kind != ChangeKind::Modify || ch.component_id.component_type != ctype {
            continue;
        }
        let (Some(old), Some(new)) = (baseline.component(&ch.component_id), ch.new_component.as_ref())
        else {
            continue;
        };
        for (o, n) in paired_methods(old, new) {
            let r = reasons(o, n);
            if !r.is_empty() {
                out.push((&ch.component_id, n, r));
            }
        }
    }
    out
}

fn method_violations(
    rule: &str,
    label: &str,
    baseline: &SystemIR,
    found: Vec<(&ComponentId, &Method, Vec<String>)>,
    reached_type: ComponentType,
) -> Vec<Violation> {
    found
        .into_iter()
        .map(|(id, m, reasons)| {
            let mut impacted = vec![ImpactedItem {
                component_id: id.clone(),
                evidence: Evidence::Method {
                    method: m.name.clone(),
                    arity: m.arity(),
                    reasons,
                },
            }];
            if let Some(svc) = baseline.services.get(&id.microservice) {
                impacted.extend(reverse_reach(svc, id, reached_type).into_iter().map(|c| {
                    ImpactedItem {
                        component_id: c,
                        evidence: Evidence::Reached { from: id.clone() },
                    }
                }));
            }
            let trigger = Trigger {
                component_id: id.clone(),
                change_kind: ChangeKind::Modify,
            };
            Violation::new(rule, label, vec![trigger], impacted)
        })
        .collect()
}

/// Modified service methods whose return type or calls on the returned
/// object changed. Controllers reaching the service are listed as impacted.
pub fn detect_service_method_modifications(baseline: &SystemIR, d: &Delta) -> Vec<Violation> {
    detect_smm_named(SMM, baseline, d, &baseline.version_label)
}

pub(crate) fn detect_smm_named(rule: &str, baseline: &SystemIR, d: &Delta, label: &str) -> Vec<Violation> {
    let found = modified_methods(baseline, d, ComponentType::Service, smm_reasons);
    method_violations(rule, label, baseline, found, ComponentType::Controller)
}

/// Modified repository methods whose annotation set or signature changed.
/// Services reaching the repository are listed as impacted.
pub fn detect_repository_method_modifications(baseline: &SystemIR, d: &Delta) -> Vec<Violation> {
    detect_rmm_named(RMM, baseline, d, &baseline.version_label)
}

pub(crate) fn detect_rmm_named(rule: &str, baseline: &SystemIR, d: &Delta, label: &str) -> Vec<Violation> {
    let found = modified_methods(baseline, d, ComponentType::Repository, rmm_reasons);
    method_violations(rule, label, baseline, found, ComponentType::Service)
}

/// Changes in `deltas` related to a call: its owner, plus the owner of the
/// endpoint it matched in the baseline.
pub(crate) fn call_triggers(call: &RestCall, baseline: &SystemIR, changes: &BTreeMap<&ComponentId, ChangeKind>) -> Vec<Trigger> {
    let mut related = vec![&call.owning_component];
    for e in &baseline.cross_edges {
        if let DependencyEdge::RemoteCall { evidence, .. } = e {
            if same_call(&evidence.call, call) {
                related.push(&evidence.endpoint.owning_component);
            }
        }
    }
    if related.len() == 1 {
        // the call may never have matched; endpoints it could reach by key
        let index = EndpointIndex::new(baseline.services.values());
        for ep in index.candidates(call.http_method, &call.path) {
            related.push(&ep.owning_component);
        }
    }
    triggers_for(related, changes)
}

/// Changes related to an endpoint: its owner, plus owners of calls that
/// reached it in the baseline.
pub(crate) fn endpoint_triggers(ep: &Endpoint, baseline: &SystemIR, changes: &BTreeMap<&ComponentId, ChangeKind>) -> Vec<Trigger> {
    let mut related = vec![&ep.owning_component];
    for e in &baseline.cross_edges {
        if let DependencyEdge::RemoteCall { evidence, .. } = e {
            if evidence.endpoint.key() == ep.key()
                && evidence.endpoint.owning_component == ep.owning_component
            {
                related.push(&evidence.call.owning_component);
            }
        }
    }
    triggers_for(related, changes)
}

fn same_call(a: &RestCall, b: &RestCall) -> bool {
    a.owning_component == b.owning_component
        && a.site_method == b.site_method
        && a.key() == b.key()
        && a.target_service == b.target_service
}

fn triggers_for(ids: Vec<&ComponentId>, changes: &BTreeMap<&ComponentId, ChangeKind>) -> Vec<Trigger> {
    let mut out: Vec<Trigger> = ids
        .into_iter()
        .filter_map(|id| {
            changes.get(id).map(|k| Trigger {
                component_id: id.clone(),
                change_kind: *k,
            })
        })
        .collect();
    out.sort();
    out.dedup();
    out
}
