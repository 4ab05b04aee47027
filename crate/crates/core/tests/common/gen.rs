//! Random service IRs for property tests.

use proptest::prelude::*;

use archdelta::ir::{
    body_hash, Component, ComponentId, ComponentType, Endpoint, Entity, EntityField, HttpMethod,
    Method, MicroserviceIR, RestCall, TargetService,
};

pub const SERVICES: [&str; 3] = ["s0", "s1", "s2"];
const ROUTES: [(HttpMethod, &str); 4] = [
    (HttpMethod::Get, "/api/a/{*}"),
    (HttpMethod::Post, "/api/b"),
    (HttpMethod::Get, "/api/c"),
    (HttpMethod::Delete, "/api/a/{*}"),
];
pub const FIELDS: [&str; 6] = ["id", "name", "Price", "from", "to", "price"];

#[derive(Debug, Clone)]
pub struct ServiceSpec {
    pub variant: u8,
    pub endpoints: Vec<usize>,
    /// (route, target: index into SERVICES or None for unresolved)
    pub calls: Vec<(usize, Option<usize>)>,
    pub entity_fields: Option<Vec<usize>>,
    pub has_service: bool,
}

pub fn spec() -> impl Strategy<Value = ServiceSpec> {
    (
        0u8..3,
        proptest::sample::subsequence((0..ROUTES.len()).collect::<Vec<_>>(), 0..=ROUTES.len()),
        proptest::collection::vec((0..ROUTES.len(), proptest::option::of(0..SERVICES.len())), 0..3),
        proptest::option::of(proptest::sample::subsequence((0..FIELDS.len()).collect::<Vec<_>>(), 0..=4)),
        any::<bool>(),
    )
        .prop_map(|(variant, endpoints, calls, entity_fields, has_service)| ServiceSpec {
            variant,
            endpoints,
            calls,
            entity_fields,
            has_service,
        })
}

fn method(name: &str, body: &str, targets: Vec<String>, calls: Vec<RestCall>) -> Method {
    Method {
        name: name.into(),
        parameters: vec![],
        return_type: "void".into(),
        annotations: vec![],
        body_call_targets: targets,
        rest_calls: calls,
        return_object_calls: vec![],
        content_hash: body_hash(body),
    }
}

pub fn build(service: &str, version: &str, s: &ServiceSpec) -> MicroserviceIR {
    let cid = |t, q: &str| ComponentId::new(service, t, format!("{service}.{q}")).unwrap();
    let ctl = cid(ComponentType::Controller, "Api");
    let svc = cid(ComponentType::Service, "Logic");
    let mut comps = Vec::new();
    let endpoints: Vec<Endpoint> = s
        .endpoints
        .iter()
        .map(|r| Endpoint {
            http_method: ROUTES[*r].0,
            path: ROUTES[*r].1.into(),
            handler_method: "handle".into(),
            owning_component: ctl.clone(),
        })
        .collect();
    let targets = if s.has_service {
        vec![format!("{}.run", svc.qualified_name)]
    } else {
        vec![]
    };
    comps.push(Component::new(
        ctl.clone(),
        vec![method("handle", &format!("{{ handle {} }}", s.variant), targets, vec![])],
        endpoints,
        None,
        "Api.java",
    ));
    if s.has_service {
        let calls = s
            .calls
            .iter()
            .map(|(r, t)| RestCall {
                http_method: ROUTES[*r].0,
                path: ROUTES[*r].1.into(),
                target_service: match t {
                    Some(i) => TargetService::Resolved(SERVICES[*i].into()),
                    None => TargetService::Unresolved,
                },
                site_method: "run".into(),
                owning_component: svc.clone(),
            })
            .collect();
        comps.push(Component::new(
            svc,
            vec![method("run", &format!("{{ run {} }}", s.variant), vec![], calls)],
            vec![],
            None,
            "Logic.java",
        ));
    }
    if let Some(fields) = &s.entity_fields {
        let id = cid(ComponentType::Entity, "Record");
        let entity = Entity {
            name: "Record".into(),
            fields: fields
                .iter()
                .map(|f| EntityField {
                    field_name: FIELDS[*f].into(),
                    declared_type: "String".into(),
                })
                .collect(),
            annotations: vec![],
        };
        comps.push(Component::new(id, vec![], vec![], Some(entity), "Record.java"));
    }
    MicroserviceIR::from_components(service, version, comps)
}

pub fn system_specs() -> impl Strategy<Value = Vec<ServiceSpec>> {
    proptest::collection::vec(spec(), SERVICES.len())
}

pub fn build_all(version: &str, specs: &[ServiceSpec]) -> Vec<MicroserviceIR> {
    SERVICES
        .iter()
        .zip(specs)
        .map(|(name, s)| build(name, version, s))
        .collect()
}

pub fn entity(fields: &[usize]) -> Entity {
    Entity {
        name: "E".into(),
        fields: fields
            .iter()
            .map(|f| EntityField {
                field_name: FIELDS[*f].into(),
                declared_type: "String".into(),
            })
            .collect(),
        annotations: vec![],
    }
}

// Single-service version chains over a fixed pool of components.

const POOL: [(&str, ComponentType); 6] = [
    ("a.OrderController", ComponentType::Controller),
    ("a.OrderService", ComponentType::Service),
    ("a.PriceService", ComponentType::Service),
    ("a.OrderRepository", ComponentType::Repository),
    ("a.Order", ComponentType::Entity),
    ("a.Audit", ComponentType::Service),
];

fn component(slot: usize, variant: u8, calls: &[usize]) -> Component {
    let (q, t) = POOL[slot];
    let id = ComponentId::new("svc", t, q).unwrap();
    let m = Method {
        name: "run".into(),
        parameters: vec![],
        return_type: "void".into(),
        annotations: vec![],
        body_call_targets: calls.iter().map(|c| format!("{}.run", POOL[*c].0)).collect(),
        rest_calls: vec![],
        return_object_calls: vec![],
        content_hash: body_hash(&format!("{{ v{variant} }}")),
    };
    let entity = (t == ComponentType::Entity).then(|| archdelta::ir::Entity {
        name: "Order".into(),
        fields: Default::default(),
        annotations: vec![],
    });
    Component::new(id, vec![m], vec![], entity, format!("{q}.java"))
}

/// A version: each pool slot is absent or present in one of three variants.
fn version(label: &'static str) -> impl Strategy<Value = MicroserviceIR> {
    proptest::collection::vec((proptest::option::of(0u8..3), proptest::collection::vec(0usize..6, 0..3)), 6)
        .prop_map(move |slots| {
            let comps = slots
                .iter()
                .enumerate()
                .filter_map(|(i, (v, calls))| v.map(|v| component(i, v, calls)));
            MicroserviceIR::from_components("svc", label, comps)
        })
}

pub fn chain() -> impl Strategy<Value = (MicroserviceIR, MicroserviceIR, MicroserviceIR, MicroserviceIR)> {
    (version("v0"), version("v1"), version("v2"), version("v3"))
}
