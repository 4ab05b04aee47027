//! Cross-service linking: remote calls to endpoints, and entity data overlaps.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ir::{
    render_version_label, Component, ComponentId, ComponentType, DependencyEdge, EdgeKind,
    Endpoint, Entity, HttpMethod, MicroserviceIR, RestCall, SystemIR, TargetService,
};

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.5;

pub const LINK_REPORT_SCHEMA: &str = "archdelta.link-report";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("service `{0}` appears more than once")]
    DuplicateService(String),
    #[error("similarity is undefined for entity `{0}` with no fields")]
    EmptyEntity(String),
    #[error("overlap threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
}

pub fn check_threshold(t: f64) -> Result<(), LinkError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(LinkError::InvalidThreshold(t))
    }
}

/// Endpoints of a system keyed by (verb, normalized path).
pub struct EndpointIndex<'a> {
    by_key: BTreeMap<HttpMethod, BTreeMap<&'a str, Vec<&'a Endpoint>>>,
}

impl<'a> EndpointIndex<'a> {
    pub fn new(services: impl IntoIterator<Item = &'a MicroserviceIR>) -> Self {
        let mut by_key: BTreeMap<HttpMethod, BTreeMap<&str, Vec<&Endpoint>>> = BTreeMap::new();
        for s in services {
            for e in s.endpoints() {
                by_key
                    .entry(e.http_method)
                    .or_default()
                    .entry(e.path.as_str())
                    .or_default()
                    .push(e);
            }
        }
        for v in by_key.values_mut().flat_map(|m| m.values_mut()) {
            v.sort();
        }
        EndpointIndex { by_key }
    }

    pub fn candidates(&self, verb: HttpMethod, path: &str) -> &[&'a Endpoint] {
        self.by_key
            .get(&verb)
            .and_then(|m| m.get(path))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// The endpoint a call reaches, if exactly determined.
    pub fn resolve(&self, call: &RestCall) -> Option<&'a Endpoint> {
        let candidates = self.candidates(call.http_method, &call.path);
        match &call.target_service {
            TargetService::Resolved(svc) => candidates
                .iter()
                .find(|e| &e.owning_component.microservice == svc)
                .copied(),
            TargetService::Unresolved => match candidates {
                [only] => Some(*only),
                _ => None,
            },
        }
    }
}

/// Matches a call against every endpoint in `system`.
///
/// Verb and normalized path must be equal; a resolved target service must
/// own the endpoint. An UNRESOLVED call matches only a unique candidate.
pub fn match_call_to_endpoint<'a>(
    call: &RestCall,
    system: impl IntoIterator<Item = &'a MicroserviceIR>,
) -> Option<&'a Endpoint> {
    EndpointIndex::new(system).resolve(call)
}

/// Jaccard index over lower-cased field names.
pub fn entity_overlap(a: &Entity, b: &Entity) -> Result<f64, LinkError> {
    let fa = a.field_names_lowercase();
    let fb = b.field_names_lowercase();
    if fa.is_empty() {
        return Err(LinkError::EmptyEntity(a.name.clone()));
    }
    if fb.is_empty() {
        return Err(LinkError::EmptyEntity(b.name.clone()));
    }
    let inter = fa.intersection(&fb).count();
    let union = fa.union(&fb).count();
    Ok(inter as f64 / union as f64)
}

/// RemoteCall edge for `call`, if it matches an endpoint in another service.
pub fn remote_edge(call: &RestCall, index: &EndpointIndex<'_>) -> Option<DependencyEdge> {
    let ep = index.resolve(call)?;
    (ep.owning_component.microservice != call.owning_component.microservice)
        .then(|| DependencyEdge::remote_call(call.clone(), ep.clone()))
}

fn overlap_candidates(c: &Component) -> Option<&Entity> {
    match (&c.id.component_type, &c.entity_ref) {
        (ComponentType::Entity, Some(e)) if !e.fields.is_empty() => Some(e),
        _ => None,
    }
}

/// DataOverlap edges between `entity` and entities of other services.
pub fn overlap_edges_for<'a>(
    entity: &Component,
    others: impl IntoIterator<Item = &'a Component>,
    threshold: f64,
) -> Vec<DependencyEdge> {
    let Some(e) = overlap_candidates(entity) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for o in others {
        if o.id.microservice == entity.id.microservice {
            continue;
        }
        let Some(oe) = overlap_candidates(o) else {
            continue;
        };
        let sim = entity_overlap(e, oe).expect("field sets checked nonempty");
        if sim >= threshold {
            out.push(DependencyEdge::data_overlap(entity.id.clone(), o.id.clone(), sim));
        }
    }
    out
}

/// Assembles a system IR from per-service IRs.
///
/// An empty `version_label` is replaced by the per-service rendering.
pub fn build_system_ir(
    services: Vec<MicroserviceIR>,
    overlap_threshold: f64,
    version_label: &str,
) -> Result<SystemIR, LinkError> {
    check_threshold(overlap_threshold)?;
    let mut map = BTreeMap::new();
    for s in services {
        let name = s.name.clone();
        if map.insert(name.clone(), s).is_some() {
            return Err(LinkError::DuplicateService(name));
        }
    }
    let mut cross_edges = BTreeSet::new();
    {
        let index = EndpointIndex::new(map.values());
        for s in map.values() {
            for call in s.rest_calls() {
                if let Some(edge) = remote_edge(call, &index) {
                    cross_edges.insert(edge);
                }
            }
        }
        let entities: Vec<&Component> = map
            .values()
            .flat_map(|s| s.components.values())
            .filter(|c| overlap_candidates(c).is_some())
            .collect();
        let overlaps: Vec<DependencyEdge> = entities
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, a)| {
                overlap_edges_for(a, entities[i + 1..].iter().copied(), overlap_threshold)
            })
            .collect();
        cross_edges.extend(overlaps);
    }
    let version_label = if version_label.is_empty() {
        render_version_label(map.values())
    } else {
        version_label.to_string()
    };
    Ok(SystemIR {
        version_label,
        services: map,
        cross_edges,
    })
}

/// Counts of linking outcomes over a system IR.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkReport {
    pub services: usize,
    pub components: usize,
    pub endpoints: usize,
    pub rest_calls: usize,
    pub matched_calls: usize,
    pub unmatched_calls: Vec<CallRef>,
    pub uncalled_endpoints: Vec<EndpointRef>,
    pub remote_call_edges: usize,
    pub overlap_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CallRef {
    pub owning_component: ComponentId,
    pub site_method: String,
    pub http_method: HttpMethod,
    pub target_service: TargetService,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EndpointRef {
    pub owning_component: ComponentId,
    pub http_method: HttpMethod,
    pub path: String,
}

impl From<&RestCall> for CallRef {
    fn from(c: &RestCall) -> Self {
        CallRef {
            owning_component: c.owning_component.clone(),
            site_method: c.site_method.clone(),
            http_method: c.http_method,
            target_service: c.target_service.clone(),
            path: c.path.clone(),
        }
    }
}

impl From<&Endpoint> for EndpointRef {
    fn from(e: &Endpoint) -> Self {
        EndpointRef {
            owning_component: e.owning_component.clone(),
            http_method: e.http_method,
            path: e.path.clone(),
        }
    }
}

/// Endpoints that no call from another service reaches.
pub fn uncalled_endpoints(ir: &SystemIR) -> Vec<&Endpoint> {
    let called: BTreeSet<&Endpoint> = ir
        .cross_edges
        .iter()
        .filter_map(|e| match e {
            DependencyEdge::RemoteCall { evidence, .. } => Some(&evidence.endpoint),
            _ => None,
        })
        .collect();
    ir.endpoints().filter(|e| !called.contains(e)).collect()
}

/// Calls with no matching endpoint anywhere in the system.
pub fn unmatched_calls(ir: &SystemIR) -> Vec<&RestCall> {
    let index = EndpointIndex::new(ir.services.values());
    ir.rest_calls().filter(|c| index.resolve(c).is_none()).collect()
}

pub fn link_report(ir: &SystemIR) -> LinkReport {
    let rest_calls = ir.rest_calls().count();
    let unmatched: Vec<CallRef> = unmatched_calls(ir).into_iter().map(CallRef::from).collect();
    let mut unmatched = unmatched;
    unmatched.sort();
    let mut uncalled: Vec<EndpointRef> = uncalled_endpoints(ir).into_iter().map(EndpointRef::from).collect();
    uncalled.sort();
    LinkReport {
        services: ir.services.len(),
        components: ir.components().count(),
        endpoints: ir.endpoints().count(),
        rest_calls,
        matched_calls: rest_calls - unmatched.len(),
        unmatched_calls: unmatched,
        uncalled_endpoints: uncalled,
        remote_call_edges: ir
            .cross_edges
            .iter()
            .filter(|e| e.kind() == EdgeKind::RemoteCall)
            .count(),
        overlap_edges: ir
            .cross_edges
            .iter()
            .filter(|e| e.kind() == EdgeKind::DataOverlap)
            .count(),
    }
}
