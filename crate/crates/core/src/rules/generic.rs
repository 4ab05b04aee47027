//! Graph evaluation of rules that are not bound to a built-in detector.
//!
//! Components are graph nodes joined by call-graph and cross-service edges
//! (taken from both baseline and increment, undirected). Endpoints and calls
//! sit on their owning component at no hop cost.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::detect::{call_item, call_triggers, endpoint_item, endpoint_triggers};
use super::model::{
    AnalysisLevel, Evidence, ImpactType, ImpactedItem, Rule, RuleComponentType, Trigger, Violation,
};
use crate::ir::{
    ChangeKind, Component, ComponentId, Delta, DependencyEdge, Endpoint, RestCall, SystemIR,
};
use crate::link::EndpointIndex;

/// Link facts about the increment used by impact predicates.
pub(crate) struct LinkFacts<'a> {
    index: EndpointIndex<'a>,
    cross_called: BTreeSet<(&'a ComponentId, crate::ir::HttpMethod, &'a str)>,
    any_called: BTreeSet<(&'a ComponentId, crate::ir::HttpMethod, &'a str)>,
    inbound: BTreeSet<&'a ComponentId>,
    linked: BTreeSet<&'a ComponentId>,
}

impl<'a> LinkFacts<'a> {
    pub fn new(ir: &'a SystemIR) -> Self {
        let index = EndpointIndex::new(ir.services.values());
        let mut cross_called = BTreeSet::new();
        let mut any_called = BTreeSet::new();
        for call in ir.rest_calls() {
            if let Some(ep) = index.resolve(call) {
                let k = (&ep.owning_component, ep.http_method, ep.path.as_str());
                any_called.insert(k);
                if ep.owning_component.microservice != call.owning_component.microservice {
                    cross_called.insert(k);
                }
            }
        }
        let mut inbound = BTreeSet::new();
        let mut linked = BTreeSet::new();
        for s in ir.services.values() {
            for e in &s.call_graph_edges {
                inbound.insert(&e.to);
                linked.insert(&e.to);
                linked.insert(&e.from);
            }
        }
        for e in &ir.cross_edges {
            linked.insert(e.source());
            linked.insert(e.target());
            match e {
                DependencyEdge::RemoteCall { target, .. } => {
                    inbound.insert(target);
                }
                DependencyEdge::DataOverlap { source, target, .. } => {
                    inbound.insert(source);
                    inbound.insert(target);
                }
            }
        }
        LinkFacts {
            index,
            cross_called,
            any_called,
            inbound,
            linked,
        }
    }

    fn call_matched(&self, c: &RestCall) -> bool {
        self.index.resolve(c).is_some()
    }

    fn endpoint_key(e: &Endpoint) -> (&ComponentId, crate::ir::HttpMethod, &str) {
        (&e.owning_component, e.http_method, e.path.as_str())
    }
}

fn changed_hash(baseline: &SystemIR, increment: &SystemIR, id: &ComponentId) -> bool {
    baseline.component(id).map(|c| &c.content_hash) != increment.component(id).map(|c| &c.content_hash)
}

/// Monitored items living on a component, with the predicate applied.
fn failing_items(
    rule: &Rule,
    c: &Component,
    facts: &LinkFacts<'_>,
    baseline: &SystemIR,
    increment: &SystemIR,
) -> Vec<ImpactedItem> {
    let impact = rule.monitored_impact.impact_type;
    let inconsistent = || changed_hash(baseline, increment, &c.id);
    match rule.monitored_impact.component_type {
        RuleComponentType::Call => c
            .rest_calls()
            .filter(|call| match impact {
                ImpactType::Unmatched | ImpactType::Unused => !facts.call_matched(call),
                ImpactType::Inconsistent => inconsistent(),
            })
            .map(call_item)
            .collect(),
        RuleComponentType::Endpoint => c
            .endpoints
            .iter()
            .filter(|e| {
                let k = LinkFacts::endpoint_key(e);
                match impact {
                    ImpactType::Unused => !facts.cross_called.contains(&k),
                    ImpactType::Unmatched => !facts.any_called.contains(&k),
                    ImpactType::Inconsistent => inconsistent(),
                }
            })
            .map(endpoint_item)
            .collect(),
        t => {
            if t.component_type() != Some(c.id.component_type) {
                return Vec::new();
            }
            let (fails, reason) = match impact {
                ImpactType::Unused => (!facts.inbound.contains(&c.id), "no inbound dependency"),
                ImpactType::Unmatched => (!facts.linked.contains(&c.id), "no dependency at all"),
                ImpactType::Inconsistent => (inconsistent(), "content changed"),
            };
            if fails {
                vec![ImpactedItem {
                    component_id: c.id.clone(),
                    evidence: Evidence::Component {
                        reason: reason.to_string(),
                    },
                }]
            } else {
                Vec::new()
            }
        }
    }
}

/// Component-level change kinds across all deltas of a step.
pub(crate) fn change_map<'a>(deltas: &[&'a Delta]) -> BTreeMap<&'a ComponentId, ChangeKind> {
    deltas
        .iter()
        .flat_map(|d| d.changes.iter())
        .map(|c| (&c.component_id, c.change_kind))
        .collect()
}

/// System sweep: every monitored item in the increment is tested.
pub(crate) fn evaluate_system(
    rule: &Rule,
    baseline: &SystemIR,
    deltas: &[&Delta],
    increment: &SystemIR,
    facts: &LinkFacts<'_>,
) -> Vec<Violation> {
    let changes = change_map(deltas);
    let mut out = Vec::new();
    for c in increment.components() {
        for item in failing_items(rule, c, facts, baseline, increment) {
            let triggering = match &item.evidence {
                Evidence::Call { call } => call_triggers(call, baseline, &changes),
                Evidence::Endpoint { endpoint } => endpoint_triggers(endpoint, baseline, &changes),
                _ => changes
                    .get(&item.component_id)
                    .map(|k| {
                        vec![Trigger {
                            component_id: item.component_id.clone(),
                            change_kind: *k,
                        }]
                    })
                    .unwrap_or_default(),
            };
            out.push(Violation::new(&rule.name, &increment.version_label, triggering, vec![item]));
        }
    }
    out
}

fn member_changes<T: Ord + Clone>(
    old: Vec<T>,
    new: Vec<T>,
    updated: impl Fn(&T) -> bool,
) -> BTreeSet<ChangeKind> {
    let o: BTreeSet<T> = old.into_iter().collect();
    let n: BTreeSet<T> = new.into_iter().collect();
    let mut kinds = BTreeSet::new();
    if n.difference(&o).next().is_some() {
        kinds.insert(ChangeKind::Add);
    }
    if o.difference(&n).next().is_some() {
        kinds.insert(ChangeKind::Delete);
    }
    if o.intersection(&n).any(updated) {
        kinds.insert(ChangeKind::Modify);
    }
    kinds
}

/// Changes of `d` admitted by the rule's `ChangedComponents` filters.
fn seeds(rule: &Rule, baseline: &SystemIR, d: &Delta) -> Vec<Trigger> {
    let mut out = Vec::new();
    for ch in &d.changes {
        let old = baseline.component(&ch.component_id);
        let new = ch.new_component.as_ref();
        let mut admitted = false;
        if let Some(t) = RuleComponentType::of_component(ch.component_id.component_type) {
            admitted |= rule.changed_components.iter().any(|f| f.admits(t, ch.change_kind));
        }
        let endpoints = |c: Option<&Component>| {
            c.map(|c| {
                c.endpoints
                    .iter()
                    .map(|e| (e.http_method, e.path.clone(), e.handler_method.clone()))
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default()
        };
        let handler_hash = |c: Option<&Component>, name: &str| {
            c.map(|c| {
                c.methods
                    .iter()
                    .filter(|m| m.name == name)
                    .map(|m| m.content_hash.clone())
                    .collect::<Vec<_>>()
            })
        };
        let ep_kinds = member_changes(endpoints(old), endpoints(new), |(_, _, h)| {
            handler_hash(old, h) != handler_hash(new, h)
        });
        let calls = |c: Option<&Component>| c.map(|c| c.rest_calls().cloned().collect::<Vec<_>>()).unwrap_or_default();
        let call_kinds = member_changes(calls(old), calls(new), |_| false);
        for k in ep_kinds {
            admitted |= rule
                .changed_components
                .iter()
                .any(|f| f.admits(RuleComponentType::Endpoint, k));
        }
        for k in call_kinds {
            admitted |= rule
                .changed_components
                .iter()
                .any(|f| f.admits(RuleComponentType::Call, k));
        }
        if admitted {
            out.push(Trigger {
                component_id: ch.component_id.clone(),
                change_kind: ch.change_kind,
            });
        }
    }
    out
}

fn adjacency<'a>(irs: [&'a SystemIR; 2]) -> BTreeMap<&'a ComponentId, BTreeSet<&'a ComponentId>> {
    let mut adj: BTreeMap<&ComponentId, BTreeSet<&ComponentId>> = BTreeMap::new();
    let mut link = |a: &'a ComponentId, b: &'a ComponentId| {
        adj.entry(a).or_default().insert(b);
        adj.entry(b).or_default().insert(a);
    };
    for ir in irs {
        for s in ir.services.values() {
            for e in &s.call_graph_edges {
                link(&e.from, &e.to);
            }
        }
        for e in &ir.cross_edges {
            link(e.source(), e.target());
        }
    }
    adj
}

/// Delta evaluation: start at admitted changes, walk up to `MaxHops`, test
/// monitored items on reached components of the increment.
pub(crate) fn evaluate_delta(
    rule: &Rule,
    baseline: &SystemIR,
    d: &Delta,
    increment: &SystemIR,
    facts: &LinkFacts<'_>,
) -> Vec<Violation> {
    let seeds = seeds(rule, baseline, d);
    if seeds.is_empty() {
        return Vec::new();
    }
    let adj = adjacency([baseline, increment]);
    // multi-source BFS, each node remembers its closest seed
    let mut origin: BTreeMap<&ComponentId, (usize, &Trigger)> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for s in &seeds {
        origin.insert(&s.component_id, (0, s));
        queue.push_back(&s.component_id);
    }
    while let Some(id) = queue.pop_front() {
        let (hops, seed) = origin[id];
        if hops >= rule.max_hops {
            continue;
        }
        for n in adj.get(id).into_iter().flatten() {
            if !origin.contains_key(n) {
                origin.insert(n, (hops + 1, seed));
                queue.push_back(n);
            }
        }
    }
    let mut out = Vec::new();
    for (id, (_, seed)) in origin {
        let Some(c) = increment.component(id) else {
            continue;
        };
        for item in failing_items(rule, c, facts, baseline, increment) {
            out.push(Violation::new(
                &rule.name,
                &increment.version_label,
                vec![seed.clone()],
                vec![item],
            ));
        }
    }
    out
}

pub(crate) fn evaluate_generic(
    rule: &Rule,
    baseline: &SystemIR,
    deltas: &[&Delta],
    increment: &SystemIR,
    facts: &LinkFacts<'_>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let levels = rule.levels();
    if levels.contains(&AnalysisLevel::System) {
        out.extend(evaluate_system(rule, baseline, deltas, increment, facts));
    }
    if levels.contains(&AnalysisLevel::Delta) {
        for d in deltas {
            out.extend(evaluate_delta(rule, baseline, d, increment, facts));
        }
    }
    out
}
