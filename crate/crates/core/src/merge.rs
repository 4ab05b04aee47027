//! Applying a delta to a system baseline and re-linking what it touched.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::delta::{apply_to_service, DeltaError};
use crate::ir::{
    ChangeKind, Component, ComponentId, DependencyEdge, Delta, HttpMethod, MicroserviceIR,
    SystemIR,
};
use crate::link::{check_threshold, overlap_edges_for, remote_edge, EndpointIndex, LinkError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MergeError {
    #[error("service `{0}` is not in the baseline and the delta is not all ADDs")]
    UnknownService(String),
    #[error(transparent)]
    Delta(#[from] DeltaError),
    #[error(transparent)]
    Link(#[from] LinkError),
}

fn endpoint_keys(c: Option<&Component>, keys: &mut BTreeSet<(HttpMethod, String)>) {
    for e in c.into_iter().flat_map(|c| c.endpoints.iter()) {
        keys.insert((e.http_method, e.path.clone()));
    }
}

/// Produces the increment: `baseline` with `d` applied and cross edges
/// maintained incrementally.
///
/// Edges touching changed components are dropped and re-derived. Calls
/// whose (verb, path) matches an endpoint key that appeared, disappeared or
/// moved are re-matched too, wherever they live, since that is exactly the
/// set whose outcome can differ (a new endpoint may satisfy a dangling call
/// or make an UNRESOLVED match ambiguous). All other edges are kept as is.
pub fn apply_delta(
    baseline: &SystemIR,
    d: &Delta,
    overlap_threshold: f64,
) -> Result<SystemIR, MergeError> {
    check_threshold(overlap_threshold)?;
    let old_svc = match baseline.services.get(&d.microservice) {
        Some(s) => s.clone(),
        None if d.changes.iter().all(|c| c.change_kind == ChangeKind::Add) => {
            MicroserviceIR::new(d.microservice.clone(), d.old_version_id.clone())
        }
        None => return Err(MergeError::UnknownService(d.microservice.clone())),
    };
    let new_svc = apply_to_service(&old_svc, d)?;

    let changed: BTreeSet<&ComponentId> = d.changes.iter().map(|c| &c.component_id).collect();
    let mut keys = BTreeSet::new();
    for id in &changed {
        endpoint_keys(old_svc.components.get(*id), &mut keys);
        endpoint_keys(new_svc.components.get(*id), &mut keys);
    }

    let mut out = baseline.clone();
    out.services.insert(new_svc.name.clone(), new_svc);
    out.cross_edges.retain(|e| {
        if changed.iter().any(|id| e.touches(id)) {
            return false;
        }
        match e {
            DependencyEdge::RemoteCall { evidence, .. } => !keys
                .contains(&(evidence.call.http_method, evidence.call.path.clone())),
            DependencyEdge::DataOverlap { .. } => true,
        }
    });

    let mut added = Vec::new();
    {
        let index = EndpointIndex::new(out.services.values());
        for svc in out.services.values() {
            for c in svc.components.values() {
                let own = changed.contains(&c.id);
                for call in c.rest_calls() {
                    if own || keys.contains(&(call.http_method, call.path.clone())) {
                        added.extend(remote_edge(call, &index));
                    }
                }
            }
        }
        let svc = &out.services[&d.microservice];
        for id in &changed {
            if let Some(c) = svc.components.get(*id) {
                added.extend(overlap_edges_for(c, out.components(), overlap_threshold));
            }
        }
    }
    out.cross_edges.extend(added);
    out.version_label = out.derived_version_label();
    Ok(out)
}

/// Applies several deltas in order.
pub fn apply_deltas<'a>(
    baseline: &SystemIR,
    deltas: impl IntoIterator<Item = &'a Delta>,
    overlap_threshold: f64,
) -> Result<SystemIR, MergeError> {
    let mut ir = baseline.clone();
    for d in deltas {
        ir = apply_delta(&ir, d, overlap_threshold)?;
    }
    Ok(ir)
}
