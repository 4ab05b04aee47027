mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use archdelta::delta::compute_delta;
use archdelta::impact::{impact_graph, impact_set, verify_path, ImpactOptions, ImpactTag, StepKind};
use archdelta::ir::{ComponentId, Delta, DependencyEdge, SystemIR};
use archdelta::link::build_system_ir;
use common::gen;

fn fixture_delta(service: &str, from: usize, to: usize) -> (SystemIR, Delta) {
    let base = common::full_system(from);
    let next = common::full_system(to);
    let d = compute_delta(&base.services[service], &next.services[service]).unwrap();
    (base, d)
}

fn qn(id: &ComponentId) -> &str {
    &id.qualified_name
}

#[test]
fn service_change_reaches_controller_and_remote_caller() {
    let (base, d) = fixture_delta("ts-price", 0, 1);
    let direct: Vec<_> = d.changes.iter().map(|c| qn(&c.component_id)).collect();
    assert_eq!(direct, ["price.PriceService"]);
    let opts = ImpactOptions {
        max_cross_service_hops: Some(1),
        include_data_overlap: false,
        ..Default::default()
    };
    let r = impact_set(&base, &d, &opts);
    let ids: BTreeSet<&str> = r.indirect.iter().map(|i| qn(&i.component_id)).collect();
    assert!(ids.contains("price.PriceController"));
    assert!(ids.contains("order.OrderService"));
    assert_eq!(r.affected_services, BTreeSet::from(["ts-order".to_string()]));
    let caller = r.indirect.iter().find(|i| qn(&i.component_id) == "order.OrderService").unwrap();
    let kinds: Vec<StepKind> = caller.path.iter().map(|s| s.kind).collect();
    assert_eq!(kinds, [StepKind::CallGraph, StepKind::RemoteCall]);
    assert!(verify_path(&base, &caller.path, &opts));
}

#[test]
fn zero_hops_and_empty_delta() {
    let (base, d) = fixture_delta("ts-price", 0, 1);
    let zero = ImpactOptions {
        max_hops: Some(0),
        ..Default::default()
    };
    let r = impact_set(&base, &d, &zero);
    assert!(r.indirect.is_empty() && r.affected_services.is_empty());
    assert_eq!(r.direct.len(), 1);
    let empty = impact_set(&base, &Delta::empty("ts-price", "v0", "v0"), &ImpactOptions::default());
    assert!(empty.direct.is_empty() && empty.indirect.is_empty());
}

#[test]
fn graph_export_tags_nodes() {
    let (base, d) = fixture_delta("ts-station", 1, 2);
    let r = impact_set(&base, &d, &ImpactOptions::default());
    let g = impact_graph(&r);
    assert_eq!(g.nodes.len(), r.direct.len() + r.indirect.len());
    assert!(g.nodes.iter().filter(|n| n.tag == ImpactTag::Direct).all(|n| r.direct.contains(&n.id)));
    let doc: serde_json::Value = serde_json::from_slice(&g.to_json()).unwrap();
    assert_eq!(doc["schema"], "archdelta.impact-graph");
}

/// Reachable set by exhaustive expansion of (node, hops, crossHops) walks.
fn oracle(ir: &SystemIR, d: &Delta, max_hops: usize, max_cross: usize, overlap: bool) -> BTreeSet<ComponentId> {
    let mut steps: Vec<(ComponentId, ComponentId, bool)> = Vec::new();
    for svc in ir.services.values() {
        for e in &svc.call_graph_edges {
            steps.push((e.to.clone(), e.from.clone(), false));
        }
    }
    for e in &ir.cross_edges {
        if matches!(e, DependencyEdge::DataOverlap { .. }) && !overlap {
            continue;
        }
        steps.push((e.source().clone(), e.target().clone(), true));
        steps.push((e.target().clone(), e.source().clone(), true));
    }
    let direct: BTreeSet<ComponentId> = d.changes.iter().map(|c| c.component_id.clone()).collect();
    let mut frontier: BTreeSet<(ComponentId, usize)> = direct.iter().map(|c| (c.clone(), 0)).collect();
    let mut seen = frontier.clone();
    for _ in 0..max_hops {
        let mut next = BTreeSet::new();
        for (n, c) in &frontier {
            for (a, b, cross) in &steps {
                let c2 = c + usize::from(*cross);
                if a == n && c2 <= max_cross && seen.insert((b.clone(), c2)) {
                    next.insert((b.clone(), c2));
                }
            }
        }
        frontier = next;
    }
    seen.into_iter().map(|(n, _)| n).filter(|n| !direct.contains(n)).collect()
}

fn random_case() -> impl Strategy<Value = (SystemIR, Delta, usize, usize, bool)> {
    (gen::system_specs(), gen::spec(), 0usize..gen::SERVICES.len(), 0usize..6, 0usize..3, any::<bool>()).prop_map(
        |(specs, changed, which, hops, cross, overlap)| {
            let base = build_system_ir(gen::build_all("1", &specs), 0.3, "").unwrap();
            let name = gen::SERVICES[which];
            let d = compute_delta(&base.services[name], &gen::build(name, "2", &changed)).unwrap();
            (base, d, hops, cross, overlap)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn hop_bound_is_monotone((base, d, hops, cross, overlap) in random_case()) {
        let opts = |k| ImpactOptions {
            max_hops: Some(k),
            max_cross_service_hops: Some(cross),
            include_data_overlap: overlap,
            include_entity_usage: false,
        };
        let small = impact_set(&base, &d, &opts(hops));
        let big = impact_set(&base, &d, &opts(hops + 1));
        prop_assert!(small.indirect_ids().is_subset(&big.indirect_ids()));
        let unlimited = impact_set(&base, &d, &ImpactOptions { max_hops: None, ..opts(0) });
        prop_assert!(big.indirect_ids().is_subset(&unlimited.indirect_ids()));
    }

    #[test]
    fn reach_matches_exhaustive_oracle((base, d, hops, cross, overlap) in random_case()) {
        let opts = ImpactOptions {
            max_hops: Some(hops),
            max_cross_service_hops: Some(cross),
            include_data_overlap: overlap,
            include_entity_usage: false,
        };
        let r = impact_set(&base, &d, &opts);
        let got: BTreeSet<ComponentId> = r.indirect.iter().map(|i| i.component_id.clone()).collect();
        prop_assert_eq!(got, oracle(&base, &d, hops, cross, overlap));
    }

    #[test]
    fn paths_verify_and_start_at_direct((base, d, _, cross, overlap) in random_case(), entity in any::<bool>()) {
        let opts = ImpactOptions {
            max_hops: None,
            max_cross_service_hops: Some(cross),
            include_data_overlap: overlap,
            include_entity_usage: entity,
        };
        let r = impact_set(&base, &d, &opts);
        for i in &r.indirect {
            prop_assert!(!r.direct.contains(&i.component_id));
            prop_assert!(!i.path.is_empty());
            prop_assert!(r.direct.contains(&i.path[0].from));
            prop_assert_eq!(&i.path.last().unwrap().to, &i.component_id);
            prop_assert!(verify_path(&base, &i.path, &opts));
            let crossed = i.path.iter().filter(|s| matches!(s.kind, StepKind::RemoteCall | StepKind::DataOverlap)).count();
            prop_assert!(crossed <= cross);
        }
        let outside: BTreeSet<String> = r.indirect.iter()
            .map(|i| i.component_id.microservice.clone())
            .filter(|s| *s != d.microservice)
            .collect();
        prop_assert_eq!(outside, r.affected_services);
    }

    #[test]
    fn isolated_service_affects_nobody(specs in gen::system_specs(), changed in gen::spec()) {
        let mut specs = specs;
        // s0 exposes nothing, calls nothing and owns no entity
        specs[0].endpoints.clear();
        specs[0].calls.clear();
        specs[0].entity_fields = None;
        let mut changed = changed;
        changed.endpoints.clear();
        changed.calls.clear();
        changed.entity_fields = None;
        let base = build_system_ir(gen::build_all("1", &specs), 0.3, "").unwrap();
        let d = compute_delta(&base.services["s0"], &gen::build("s0", "2", &changed)).unwrap();
        let r = impact_set(&base, &d, &ImpactOptions { max_cross_service_hops: None, ..Default::default() });
        prop_assert!(r.affected_services.is_empty());
    }
}
