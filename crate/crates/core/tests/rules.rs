mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use archdelta::delta::compute_delta;
use archdelta::history::{replay, ReplaySettings, Step};
use archdelta::ir::{
    body_hash, Component, ComponentId, ComponentType, Endpoint, HttpMethod, Method,
    MicroserviceIR, RestCall, SystemIR, TargetService,
};
use archdelta::link::{build_system_ir, link_report, uncalled_endpoints, unmatched_calls};
use archdelta::merge::apply_delta;
use archdelta::rules::{
    builtin_rules, detect_invalid_calls, detect_repository_method_modifications,
    detect_service_method_modifications, detect_uncalled_endpoints, evaluate, evaluate_many,
    load_rules, AnalysisLevel, ChangeType, ImpactType, Rule, RuleComponentType, RuleError,
    ViolationReport,
};
use common::gen;

const IC_DOC: &str = r#"{
  "name": "IC",
  "AnalysisLevels": ["System"],
  "ChangedComponents": [
   {"ComponentType": ["Endpoint", "Call"],
    "ChangeType": ["All"]}],
  "MonitoredImpact": {
    "ComponentType": "Call",
    "ImpactType": "Unmatched"}
}"#;

const SMM_DOC: &str = r#"{
  "name": "SMM",
  "AnalysisLevels": ["Delta"],
  "ChangedComponents": [
    {"ComponentType": ["Service"],
     "ChangeType": ["Modify"]}],
  "MonitoredImpact": {
    "ComponentType": "Service",
    "ImpactType": "Inconsistent"}
}"#;

#[test]
fn loads_ic_document() {
    let rules = load_rules(IC_DOC.as_bytes()).unwrap();
    assert_eq!(rules.len(), 1);
    let r = &rules[0];
    assert_eq!(r.analysis_levels, vec![AnalysisLevel::System]);
    assert_eq!(r.changed_components[0].component_types, vec![RuleComponentType::Endpoint, RuleComponentType::Call]);
    assert_eq!(r.changed_components[0].change_types, vec![ChangeType::All]);
    assert_eq!(r.monitored_impact.component_type, RuleComponentType::Call);
    assert_eq!(r.monitored_impact.impact_type, ImpactType::Unmatched);
    assert_eq!(r, &builtin_rules()[0]);
}

#[test]
fn loads_smm_document() {
    let r = load_rules(SMM_DOC.as_bytes()).unwrap().remove(0);
    assert_eq!(r.analysis_levels, vec![AnalysisLevel::Delta]);
    assert_eq!(r.changed_components[0].component_types, vec![RuleComponentType::Service]);
    assert_eq!(r.changed_components[0].change_types, vec![ChangeType::Update]);
    assert_eq!(r.monitored_impact.impact_type, ImpactType::Inconsistent);
    assert_eq!(r, builtin_rules()[2]);
}

#[test]
fn bogus_impact_type_is_schema_error_with_path() {
    let doc = IC_DOC.replace("\"Unmatched\"", "\"Bogus\"");
    match load_rules(doc.as_bytes()) {
        Err(RuleError::Schema { path, .. }) => assert_eq!(path, "MonitoredImpact.ImpactType"),
        other => panic!("{other:?}"),
    }
    let many = format!("{{\"rules\": [{SMM_DOC}, {doc}]}}");
    match load_rules(many.as_bytes()) {
        Err(RuleError::Schema { path, .. }) => assert_eq!(path, "rules[1].MonitoredImpact.ImpactType"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn vocabulary_and_shape_errors() {
    let entity = IC_DOC.replace("\"Call\",\n    \"ImpactType\"", "\"Entity\",\n    \"ImpactType\"");
    assert!(matches!(load_rules(entity.as_bytes()), Err(RuleError::Schema { .. })));
    let no_levels = IC_DOC.replace("[\"System\"]", "[]");
    assert!(matches!(load_rules(no_levels.as_bytes()), Err(RuleError::Invalid { .. })));
    let dup = format!("[{IC_DOC}, {IC_DOC}]");
    assert!(matches!(load_rules(dup.as_bytes()), Err(RuleError::DuplicateName(n)) if n == "IC"));
    let extra = IC_DOC.replace("\"name\"", "\"Confidence\": 1, \"name\"");
    assert!(matches!(load_rules(extra.as_bytes()), Err(RuleError::Schema { .. })));
}

#[test]
fn unknown_binding_is_rejected_at_evaluation() {
    let doc = IC_DOC.replace("\"name\": \"IC\"", "\"name\": \"X\", \"Binding\": \"FC\"");
    let rules = load_rules(doc.as_bytes()).unwrap();
    let ir = common::full_system(0);
    assert!(matches!(
        evaluate_many(&ir, &[], &ir, &rules),
        Err(RuleError::UnknownBinding { binding, .. }) if binding == "FC"
    ));
}

fn method(name: &str, ret: &str, body: &str) -> Method {
    Method {
        name: name.into(),
        parameters: vec![],
        return_type: ret.into(),
        annotations: vec![],
        body_call_targets: vec![],
        rest_calls: vec![],
        return_object_calls: vec![],
        content_hash: body_hash(body),
    }
}

fn id(svc: &str, t: ComponentType, q: &str) -> ComponentId {
    ComponentId::new(svc, t, q).unwrap()
}

fn controller(svc: &str, paths: &[&str]) -> Component {
    let cid = id(svc, ComponentType::Controller, &format!("{svc}.Api"));
    let endpoints = paths
        .iter()
        .map(|p| Endpoint {
            http_method: HttpMethod::Get,
            path: (*p).into(),
            handler_method: "get".into(),
            owning_component: cid.clone(),
        })
        .collect();
    Component::new(cid, vec![method("get", "String", "{}")], endpoints, None, "Api.java")
}

fn client(svc: &str, target: &str, path: &str) -> Component {
    let cid = id(svc, ComponentType::Service, &format!("{svc}.Client"));
    let mut m = method("run", "void", "{ call }");
    m.rest_calls.push(RestCall {
        http_method: HttpMethod::Get,
        path: path.into(),
        target_service: TargetService::Resolved(target.into()),
        site_method: "run".into(),
        owning_component: cid.clone(),
    });
    Component::new(cid, vec![m], vec![], None, "Client.java")
}

fn system(services: Vec<MicroserviceIR>) -> SystemIR {
    build_system_ir(services, 0.5, "").unwrap()
}

#[test]
fn invalid_call_examples() {
    let ok = system(vec![
        MicroserviceIR::from_components("a", "1", vec![controller("a", &["/api/v1/x"])]),
        MicroserviceIR::from_components("b", "1", vec![client("b", "a", "/api/v1/x")]),
    ]);
    assert!(detect_invalid_calls(&ok).is_empty());
    let ghost = system(vec![
        MicroserviceIR::from_components("a", "1", vec![controller("a", &["/api/v1/x"])]),
        MicroserviceIR::from_components("b", "1", vec![client("b", "a", "/api/v1/ghost")]),
    ]);
    let v = detect_invalid_calls(&ghost);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].primary().component_id, id("b", ComponentType::Service, "b.Client"));
    assert!(v[0].triggering.is_empty());
}

#[test]
fn uncalled_endpoint_examples() {
    let ir = system(vec![
        MicroserviceIR::from_components("a", "1", vec![controller("a", &["/api/v1/x", "/health"])]),
        MicroserviceIR::from_components("b", "1", vec![client("b", "a", "/api/v1/x")]),
    ]);
    let v = detect_uncalled_endpoints(&ir);
    assert_eq!(v.len(), 1);
    let text = serde_json::to_string(&v[0].impacted[0].evidence).unwrap();
    assert!(text.contains("/health"), "{text}");
    let all = system(vec![
        MicroserviceIR::from_components("a", "1", vec![controller("a", &["/api/v1/x"])]),
        MicroserviceIR::from_components("b", "1", vec![client("b", "a", "/api/v1/x")]),
    ]);
    assert!(detect_uncalled_endpoints(&all).is_empty());
}

/// controller -> service -> repository, with the service and repository
/// methods given.
fn layered(version: &str, svc_method: Method, repo_method: Method) -> MicroserviceIR {
    let ctl = id("o", ComponentType::Controller, "o.OrderController");
    let svc = id("o", ComponentType::Service, "o.OrderService");
    let repo = id("o", ComponentType::Repository, "o.OrderRepository");
    let mut h = method("get", "Order", "{ s }");
    h.body_call_targets.push(format!("{}.{}", svc.qualified_name, svc_method.name));
    let mut sm = svc_method;
    sm.body_call_targets.push(format!("{}.{}", repo.qualified_name, repo_method.name));
    MicroserviceIR::from_components(
        "o",
        version,
        vec![
            Component::new(ctl, vec![h], vec![], None, "C.java"),
            Component::new(svc, vec![sm], vec![], None, "S.java"),
            Component::new(repo, vec![repo_method], vec![], None, "R.java"),
        ],
    )
}

fn repo_method(annotations: &[&str]) -> Method {
    let mut m = method("findById", "Order", "");
    m.annotations = annotations.iter().map(|a| a.to_string()).collect();
    m
}

#[test]
fn service_method_examples() {
    let old = layered("1", method("find", "Order", "{ a }"), repo_method(&[]));
    let base = system(vec![old.clone()]);
    let same = layered("2", method("find", "Order", "{ a }"), repo_method(&[]));
    assert!(detect_service_method_modifications(&base, &compute_delta(&old, &same).unwrap()).is_empty());

    let dto = layered("2", method("find", "OrderDTO", "{ a }"), repo_method(&[]));
    let v = detect_service_method_modifications(&base, &compute_delta(&old, &dto).unwrap());
    assert_eq!(v.len(), 1);
    let ids: Vec<_> = v[0].impacted.iter().map(|i| i.component_id.qualified_name.as_str()).collect();
    assert_eq!(ids, ["o.OrderService", "o.OrderController"]);

    let mut extra = method("find", "Order", "{ a; r.setX(); r.setY(); }");
    extra.return_object_calls = vec!["setX".into(), "setY".into()];
    let calls = layered("2", extra, repo_method(&[]));
    assert_eq!(detect_service_method_modifications(&base, &compute_delta(&old, &calls).unwrap()).len(), 1);

    let body_only = layered("2", method("find", "Order", "{ b }"), repo_method(&[]));
    assert!(detect_service_method_modifications(&base, &compute_delta(&old, &body_only).unwrap()).is_empty());
}

#[test]
fn repository_method_examples() {
    let old = layered("1", method("find", "Order", "{ a }"), repo_method(&["@Query(\"select o\")"]));
    let base = system(vec![old.clone()]);
    let removed = layered("2", method("find", "Order", "{ a }"), repo_method(&[]));
    let v = detect_repository_method_modifications(&base, &compute_delta(&old, &removed).unwrap());
    assert_eq!(v.len(), 1);
    let ids: Vec<_> = v[0].impacted.iter().map(|i| i.component_id.qualified_name.as_str()).collect();
    assert_eq!(ids, ["o.OrderRepository", "o.OrderService"]);

    let mut body = repo_method(&["@Query(\"select o\")"]);
    body.content_hash = body_hash("{ changed }");
    let body_only = layered("2", method("find", "Order", "{ a }"), body);
    assert!(detect_repository_method_modifications(&base, &compute_delta(&old, &body_only).unwrap()).is_empty());

    let mut empty = MicroserviceIR::new("o", "0");
    empty.version_id = "0".into();
    let added = compute_delta(&empty, &old).unwrap();
    assert!(detect_repository_method_modifications(&system(vec![empty]), &added).is_empty());
}

#[test]
fn empty_rule_list_gives_nothing() {
    let ir = common::full_system(3);
    assert!(evaluate_many(&ir, &[], &ir, &[]).unwrap().is_empty());
}

fn settings() -> ReplaySettings {
    ReplaySettings {
        integrity_interval: 1,
        ..Default::default()
    }
}

#[test]
fn anomaly_injection_matches_labels_and_golden() {
    let record = replay(&common::fixture_source(6), &settings(), |_| Ok(())).unwrap();
    let got = common::anomaly_lines(&record);
    assert_eq!(got, common::oracle_anomalies());
    assert_eq!(got, common::read_string(&common::golden("anomalies.txt")));
    for rule in ["IC", "UEM", "SMM", "RMM"] {
        assert!(record.unique_totals[rule] >= 1, "{rule}");
    }
}

fn system_rules() -> Vec<Rule> {
    let mut rules: Vec<Rule> = builtin_rules()
        .into_iter()
        .filter(|r| r.analysis_levels == vec![AnalysisLevel::System])
        .collect();
    rules.extend(
        load_rules(
            br#"[
            {"name": "DanglingCall", "AnalysisLevels": ["System"],
             "MonitoredImpact": {"ComponentType": "Call", "ImpactType": "Unmatched"}},
            {"name": "IdleController", "AnalysisLevels": ["System"],
             "MonitoredImpact": {"ComponentType": "Controller", "ImpactType": "Unused"}},
            {"name": "LonelyEndpoint", "AnalysisLevels": ["System"],
             "MonitoredImpact": {"ComponentType": "Endpoint", "ImpactType": "Unmatched"}}
        ]"#,
        )
        .unwrap(),
    );
    rules
}

fn keys(v: &[archdelta::rules::Violation]) -> BTreeSet<(String, String)> {
    v.iter().map(|v| (v.rule_name.clone(), v.dedup_key.clone())).collect()
}

#[test]
fn system_rules_on_increment_equal_full_scan() {
    let rules = system_rules();
    let s = ReplaySettings {
        rules: rules.clone(),
        ..settings()
    };
    let mut steps = 0;
    replay(&common::fixture_source(6), &s, |step| {
        if let Step::Analyzed { record, .. } = step {
            let full = common::full_system(record.index);
            let scratch = evaluate_many(&full, &[], &full, &rules).unwrap();
            assert_eq!(keys(&record.violations), keys(&scratch), "version {}", record.index);
            steps += 1;
        }
        Ok(())
    })
    .unwrap();
    assert_eq!(steps, 6);
}

#[test]
fn ic_and_uem_counts_match_linker() {
    for i in 0..common::VERSIONS {
        let ir = common::full_system(i);
        let r = link_report(&ir);
        assert_eq!(detect_invalid_calls(&ir).len(), r.unmatched_calls.len());
        assert_eq!(detect_uncalled_endpoints(&ir).len(), r.uncalled_endpoints.len());
    }
}

#[test]
fn evaluation_is_deterministic() {
    let base = common::full_system(3);
    let next = common::full_system(4);
    let deltas: Vec<_> = base
        .services
        .keys()
        .map(|k| compute_delta(&base.services[k], &next.services[k]).unwrap())
        .collect();
    let mut inc = base.clone();
    for d in &deltas {
        inc = apply_delta(&inc, d, 0.5).unwrap();
    }
    let refs: Vec<_> = deltas.iter().collect();
    let a = evaluate_many(&base, &refs, &inc, &builtin_rules()).unwrap();
    let b = evaluate_many(&base, &refs, &inc, &builtin_rules()).unwrap();
    assert_eq!(a, b);
    let report = ViolationReport::new(&inc.version_label, a.clone());
    assert_eq!(ViolationReport::from_json(&report.to_json()).unwrap(), report);
    let station = deltas.iter().find(|d| d.microservice == "ts-station").unwrap();
    let single = evaluate(&base, station, &inc, &builtin_rules()).unwrap();
    assert!(single.iter().any(|v| v.rule_name == "RMM"));
}

#[test]
fn replay_unique_sets_are_stable() {
    let a = replay(&common::fixture_source(6), &settings(), |_| Ok(())).unwrap();
    let b = replay(&common::fixture_source(6), &settings(), |_| Ok(())).unwrap();
    assert_eq!(a.unique_totals, b.unique_totals);
    let all = |r: &archdelta::history::EvolutionRecord| -> BTreeSet<(String, String)> {
        r.versions.iter().flat_map(|v| keys(&v.violations)).collect()
    };
    assert_eq!(all(&a), all(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn sweep_counts_match_link_helpers(specs in gen::system_specs()) {
        let ir = build_system_ir(gen::build_all("v", &specs), 0.5, "").unwrap();
        prop_assert_eq!(detect_invalid_calls(&ir).len(), unmatched_calls(&ir).len());
        prop_assert_eq!(detect_uncalled_endpoints(&ir).len(), uncalled_endpoints(&ir).len());
    }

    #[test]
    fn system_rules_after_delta_equal_full_scan(old in gen::system_specs(), new in gen::system_specs()) {
        let rules = system_rules();
        let base = build_system_ir(gen::build_all("1", &old), 0.5, "").unwrap();
        let target = build_system_ir(gen::build_all("2", &new), 0.5, "").unwrap();
        let deltas: Vec<_> = base
            .services
            .keys()
            .map(|k| compute_delta(&base.services[k], &target.services[k]).unwrap())
            .collect();
        let mut inc = base.clone();
        for d in &deltas {
            inc = apply_delta(&inc, d, 0.5).unwrap();
        }
        let refs: Vec<_> = deltas.iter().collect();
        let scoped = evaluate_many(&base, &refs, &inc, &rules).unwrap();
        let scratch = evaluate_many(&target, &[], &target, &rules).unwrap();
        prop_assert_eq!(keys(&scoped), keys(&scratch));
    }
}
