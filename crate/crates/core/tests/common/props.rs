//! Property bodies shared by the test suites and the acceptance harness.

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use archdelta::delta::{apply_to_service, compose_deltas, compute_delta};
use archdelta::ir::{
    deserialize_delta, serialize_delta, Component, ComponentId, ComponentType, Delta, EdgeKind,
    Endpoint, HttpMethod, MicroserviceIR, RestCall, SystemIR, TargetService,
};
use archdelta::link::{build_system_ir, entity_overlap, match_call_to_endpoint};

use super::gen;

pub type Chain = (MicroserviceIR, MicroserviceIR, MicroserviceIR, MicroserviceIR);

pub fn apply_inverts_compute((a, b, _, _): Chain) -> Result<(), TestCaseError> {
    let d = compute_delta(&a, &b).unwrap();
    prop_assert_eq!(apply_to_service(&a, &d).unwrap(), b);
    let bytes = serialize_delta(&d);
    prop_assert_eq!(deserialize_delta(&bytes).unwrap(), d);
    Ok(())
}

pub fn compose_is_associative((a, b, c, d): Chain) -> Result<(), TestCaseError> {
    let d1 = compute_delta(&a, &b).unwrap();
    let d2 = compute_delta(&b, &c).unwrap();
    let d3 = compute_delta(&c, &d).unwrap();
    let left = compose_deltas(&compose_deltas(&d1, &d2).unwrap(), &d3).unwrap();
    let right = compose_deltas(&d1, &compose_deltas(&d2, &d3).unwrap()).unwrap();
    prop_assert_eq!(left, right);
    Ok(())
}

pub fn compose_commutes_with_apply((a, b, c, _): Chain) -> Result<(), TestCaseError> {
    let d1 = compute_delta(&a, &b).unwrap();
    let d2 = compute_delta(&b, &c).unwrap();
    let composed = compose_deltas(&d1, &d2).unwrap();
    let stepwise = apply_to_service(&apply_to_service(&a, &d1).unwrap(), &d2).unwrap();
    prop_assert_eq!(apply_to_service(&a, &composed).unwrap(), stepwise.clone());
    prop_assert_eq!(stepwise, c.clone());
    prop_assert_eq!(composed, compute_delta(&a, &c).unwrap());
    Ok(())
}

pub fn empty_delta_is_identity((a, b, _, _): Chain) -> Result<(), TestCaseError> {
    let d = compute_delta(&a, &b).unwrap();
    let before = Delta::empty("svc", "v0", "v0");
    let after = Delta::empty("svc", "v1", "v1");
    prop_assert_eq!(compose_deltas(&before, &d).unwrap(), d.clone());
    prop_assert_eq!(compose_deltas(&d, &after).unwrap(), d);
    prop_assert_eq!(apply_to_service(&a, &before).unwrap(), a.clone());
    prop_assert!(compute_delta(&a, &a).unwrap().is_empty());
    Ok(())
}

/// Jaccard computed directly from the raw field lists.
pub fn oracle_jaccard(a: &[usize], b: &[usize]) -> f64 {
    let norm = |xs: &[usize]| -> BTreeSet<String> { xs.iter().map(|i| gen::FIELDS[*i].to_lowercase()).collect() };
    let (sa, sb) = (norm(a), norm(b));
    let inter = sa.iter().filter(|x| sb.contains(*x)).count();
    let union = sa.len() + sb.len() - inter;
    inter as f64 / union as f64
}

pub fn field_lists() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    let one = || proptest::sample::subsequence((0..gen::FIELDS.len()).collect::<Vec<_>>(), 1..=gen::FIELDS.len());
    (one(), one())
}

pub fn overlap_is_symmetric((a, b): (Vec<usize>, Vec<usize>)) -> Result<(), TestCaseError> {
    let (ea, eb) = (gen::entity(&a), gen::entity(&b));
    let ab = entity_overlap(&ea, &eb).unwrap();
    let ba = entity_overlap(&eb, &ea).unwrap();
    prop_assert_eq!(ab, ba);
    prop_assert!((0.0..=1.0).contains(&ab));
    prop_assert!((ab - oracle_jaccard(&a, &b)).abs() < 1e-12);
    prop_assert_eq!(entity_overlap(&ea, &ea).unwrap(), 1.0);
    Ok(())
}

fn overlap_pairs(ir: &SystemIR) -> BTreeSet<(ComponentId, ComponentId)> {
    ir.cross_edges
        .iter()
        .filter(|e| e.kind() == EdgeKind::DataOverlap)
        .map(|e| (e.source().clone(), e.target().clone()))
        .collect()
}

pub fn threshold_case() -> impl Strategy<Value = (Vec<gen::ServiceSpec>, f64, f64)> {
    (gen::system_specs(), 0.0f64..=1.0, 0.0f64..=1.0)
}

pub fn overlap_edges_shrink((specs, t1, t2): (Vec<gen::ServiceSpec>, f64, f64)) -> Result<(), TestCaseError> {
    let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    let services = gen::build_all("v", &specs);
    let low = build_system_ir(services.clone(), lo, "").unwrap();
    let high = build_system_ir(services, hi, "").unwrap();
    prop_assert!(overlap_pairs(&high).is_subset(&overlap_pairs(&low)));
    Ok(())
}

pub fn endpoint(service: &str, path: &str) -> (MicroserviceIR, Endpoint) {
    let id = ComponentId::new(service, ComponentType::Controller, format!("{service}.Api")).unwrap();
    let ep = Endpoint {
        http_method: HttpMethod::Get,
        path: path.into(),
        handler_method: "h".into(),
        owning_component: id.clone(),
    };
    let c = Component::new(id, vec![], vec![ep.clone()], None, "Api.java");
    (MicroserviceIR::from_components(service, "1", vec![c]), ep)
}

pub fn call(target: TargetService) -> RestCall {
    RestCall {
        http_method: HttpMethod::Get,
        path: "/api/x".into(),
        target_service: target,
        site_method: "run".into(),
        owning_component: ComponentId::new("caller", ComponentType::Service, "c.Client").unwrap(),
    }
}

/// An UNRESOLVED call with two candidates matches neither; a resolved
/// target picks its own.
pub fn two_candidate_ambiguity() {
    let (a, ea) = endpoint("a", "/api/x");
    let (b, eb) = endpoint("b", "/api/x");
    let both = [a.clone(), b.clone()];
    assert_eq!(match_call_to_endpoint(&call(TargetService::Unresolved), &both), None);
    assert_eq!(match_call_to_endpoint(&call(TargetService::Resolved("b".into())), &both), Some(&eb));
    assert_eq!(match_call_to_endpoint(&call(TargetService::Resolved("a".into())), &both), Some(&ea));
    assert_eq!(match_call_to_endpoint(&call(TargetService::Resolved("z".into())), &both), None);
    let only = [a];
    assert_eq!(match_call_to_endpoint(&call(TargetService::Unresolved), &only), Some(&ea));
}
