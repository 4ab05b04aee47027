//! Direct and indirect change impact of a delta over the baseline.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::ir::{write_document, ComponentId, Delta, DependencyEdge, SystemIR};

pub const IMPACT_SCHEMA: &str = "archdelta.impact";
pub const IMPACT_GRAPH_SCHEMA: &str = "archdelta.impact-graph";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImpactOptions {
    /// Total hop bound; `None` is unlimited.
    pub max_hops: Option<usize>,
    /// Bound on hops over cross-service edges; `None` is unlimited.
    pub max_cross_service_hops: Option<usize>,
    pub include_data_overlap: bool,
    /// Also follow changed entities to components of the same service that
    /// mention the entity type in a signature.
    pub include_entity_usage: bool,
}

impl Default for ImpactOptions {
    fn default() -> Self {
        ImpactOptions {
            max_hops: None,
            max_cross_service_hops: Some(2),
            include_data_overlap: true,
            include_entity_usage: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StepKind {
    /// `to` calls `from` inside one service.
    CallGraph,
    RemoteCall,
    DataOverlap,
    EntityUsage,
}

impl StepKind {
    fn crosses_services(self) -> bool {
        matches!(self, StepKind::RemoteCall | StepKind::DataOverlap)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathStep {
    pub from: ComponentId,
    pub to: ComponentId,
    pub kind: StepKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IndirectImpact {
    pub component_id: ComponentId,
    /// Shortest chain of steps from a direct component.
    pub path: Vec<PathStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ImpactReport {
    pub microservice: String,
    pub direct: BTreeSet<ComponentId>,
    pub indirect: Vec<IndirectImpact>,
    pub affected_services: BTreeSet<String>,
}

impl ImpactReport {
    pub fn indirect_ids(&self) -> BTreeSet<&ComponentId> {
        self.indirect.iter().map(|i| &i.component_id).collect()
    }

    pub fn to_json(&self) -> Vec<u8> {
        write_document(IMPACT_SCHEMA, self)
    }
}

fn type_tokens(ty: &str) -> impl Iterator<Item = &str> {
    ty.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
        .filter(|t| !t.is_empty())
}

/// Outgoing impact steps for every component of `ir`.
fn neighbours(ir: &SystemIR, opts: &ImpactOptions) -> BTreeMap<ComponentId, BTreeSet<(ComponentId, StepKind)>> {
    let mut adj: BTreeMap<ComponentId, BTreeSet<(ComponentId, StepKind)>> = BTreeMap::new();
    let mut add = |a: &ComponentId, b: &ComponentId, k: StepKind| {
        adj.entry(a.clone()).or_default().insert((b.clone(), k));
    };
    for svc in ir.services.values() {
        for e in &svc.call_graph_edges {
            add(&e.to, &e.from, StepKind::CallGraph);
        }
        if opts.include_entity_usage {
            for entity in svc.components.values().filter(|c| c.entity_ref.is_some()) {
                let name = entity.id.simple_name();
                for c in svc.components.values() {
                    if c.id == entity.id {
                        continue;
                    }
                    let mentions = c.methods.iter().any(|m| {
                        type_tokens(&m.return_type).any(|t| t == name)
                            || m.parameters
                                .iter()
                                .any(|p| type_tokens(&p.declared_type).any(|t| t == name))
                    });
                    if mentions {
                        add(&entity.id, &c.id, StepKind::EntityUsage);
                    }
                }
            }
        }
    }
    for e in &ir.cross_edges {
        let k = match e {
            DependencyEdge::RemoteCall { .. } => StepKind::RemoteCall,
            DependencyEdge::DataOverlap { .. } if opts.include_data_overlap => StepKind::DataOverlap,
            DependencyEdge::DataOverlap { .. } => continue,
        };
        add(e.source(), e.target(), k);
        add(e.target(), e.source(), k);
    }
    adj
}

/// Components affected by `d`, traversed over the baseline.
pub fn impact_set(baseline: &SystemIR, d: &Delta, opts: &ImpactOptions) -> ImpactReport {
    let direct: BTreeSet<ComponentId> = d.changes.iter().map(|c| c.component_id.clone()).collect();
    let mut report = ImpactReport {
        microservice: d.microservice.clone(),
        direct: direct.clone(),
        ..Default::default()
    };
    if opts.max_hops == Some(0) || direct.is_empty() {
        return report;
    }
    let adj = neighbours(baseline, opts);

    // states carry cross hops used so far; a state reached with fewer cross
    // hops may go further, so it is explored even if the node was seen
    type State = (ComponentId, usize);
    let mut parent: BTreeMap<State, Option<(State, StepKind)>> = BTreeMap::new();
    let mut first: BTreeMap<ComponentId, State> = BTreeMap::new();
    let mut queue: VecDeque<(State, usize)> = VecDeque::new();
    for id in &direct {
        let s = (id.clone(), 0);
        parent.insert(s.clone(), None);
        queue.push_back((s, 0));
    }
    while let Some((state, hops)) = queue.pop_front() {
        if opts.max_hops.is_some_and(|m| hops >= m) {
            continue;
        }
        let Some(next) = adj.get(&state.0) else {
            continue;
        };
        for (n, kind) in next {
            let cross = state.1 + usize::from(kind.crosses_services());
            if opts.max_cross_service_hops.is_some_and(|m| cross > m) {
                continue;
            }
            // a node reached with fewer cross hops dominates later arrivals
            if (0..=cross).any(|c| parent.contains_key(&(n.clone(), c))) {
                continue;
            }
            let s = (n.clone(), cross);
            parent.insert(s.clone(), Some((state.clone(), *kind)));
            if !direct.contains(n) {
                first.entry(n.clone()).or_insert_with(|| s.clone());
            }
            queue.push_back((s, hops + 1));
        }
    }

    for (id, state) in first {
        let mut path = Vec::new();
        let mut cur = state;
        while let Some(Some((prev, kind))) = parent.get(&cur) {
            path.push(PathStep {
                from: prev.0.clone(),
                to: cur.0.clone(),
                kind: *kind,
            });
            cur = prev.clone();
        }
        path.reverse();
        if id.microservice != d.microservice {
            report.affected_services.insert(id.microservice.clone());
        }
        report.indirect.push(IndirectImpact {
            component_id: id,
            path,
        });
    }
    report
}

/// Checks each step of `path` against the edges of `ir`.
pub fn verify_path(ir: &SystemIR, path: &[PathStep], opts: &ImpactOptions) -> bool {
    let adj = neighbours(ir, opts);
    path.windows(2).all(|w| w[0].to == w[1].from)
        && path.iter().all(|s| {
            adj.get(&s.from)
                .is_some_and(|n| n.contains(&(s.to.clone(), s.kind)))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpactTag {
    Direct,
    Indirect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphNode {
    pub id: ComponentId,
    pub tag: ImpactTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ImpactGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<PathStep>,
}

impl ImpactGraph {
    pub fn to_json(&self) -> Vec<u8> {
        write_document(IMPACT_GRAPH_SCHEMA, self)
    }
}

/// Node and edge list of the impacted region; edges are the union of the
/// reported shortest paths.
pub fn impact_graph(report: &ImpactReport) -> ImpactGraph {
    let mut nodes: Vec<GraphNode> = report
        .direct
        .iter()
        .map(|id| GraphNode {
            id: id.clone(),
            tag: ImpactTag::Direct,
        })
        .collect();
    nodes.extend(report.indirect.iter().map(|i| GraphNode {
        id: i.component_id.clone(),
        tag: ImpactTag::Indirect,
    }));
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let edges: BTreeSet<PathStep> = report
        .indirect
        .iter()
        .flat_map(|i| i.path.iter().cloned())
        .collect();
    ImpactGraph {
        nodes,
        edges: edges.into_iter().collect(),
    }
}

/// Plain text listing of the report.
pub fn render_text(report: &ImpactReport) -> String {
    let mut out = format!(
        "impact of {}: {} direct, {} indirect\n",
        report.microservice,
        report.direct.len(),
        report.indirect.len()
    );
    for id in &report.direct {
        out.push_str(&format!("  direct   {id}\n"));
    }
    for i in &report.indirect {
        let via: Vec<String> = i.path.iter().map(|s| format!("{:?}", s.kind)).collect();
        out.push_str(&format!("  indirect {} via {}\n", i.component_id, via.join(">")));
    }
    if !report.affected_services.is_empty() {
        let names: Vec<&str> = report.affected_services.iter().map(String::as_str).collect();
        out.push_str(&format!("  affected services: {}\n", names.join(", ")));
    }
    out
}
