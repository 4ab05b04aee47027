use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::IrError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComponentType {
    Controller,
    Service,
    Repository,
    Entity,
}

impl ComponentType {
    pub const ALL: [ComponentType; 4] = [
        ComponentType::Controller,
        ComponentType::Service,
        ComponentType::Repository,
        ComponentType::Entity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentType::Controller => "Controller",
            ComponentType::Service => "Service",
            ComponentType::Repository => "Repository",
            ComponentType::Entity => "Entity",
        }
    }
}

impl fmt::Display for ComponentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Name-based identity of a component: `(service, type, qualifiedName)`.
///
/// The identity deliberately ignores content and file location, so an edited
/// class keeps its id across versions and a renamed class becomes a
/// delete plus an add.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComponentId {
    pub microservice: String,
    pub component_type: ComponentType,
    pub qualified_name: String,
}

impl ComponentId {
    pub fn new(
        service: impl Into<String>,
        component_type: ComponentType,
        qualified_name: impl Into<String>,
    ) -> Result<Self, IrError> {
        let microservice = service.into();
        let qualified_name = qualified_name.into();
        if microservice.trim().is_empty() {
            return Err(IrError::EmptyIdPart("microservice"));
        }
        if qualified_name.trim().is_empty() {
            return Err(IrError::EmptyIdPart("qualifiedName"));
        }
        Ok(ComponentId {
            microservice,
            component_type,
            qualified_name,
        })
    }

    /// Unqualified unit name, e.g. `OrderService` for `order.OrderService`.
    pub fn simple_name(&self) -> &str {
        self.qualified_name
            .rsplit('.')
            .next()
            .unwrap_or(&self.qualified_name)
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}",
            self.microservice, self.component_type, self.qualified_name
        )
    }
}

/// Builds a [`ComponentId`]; both name parts must be nonempty.
pub fn component_id(
    service_name: &str,
    ctype: ComponentType,
    qualified_name: &str,
) -> Result<ComponentId, IrError> {
    ComponentId::new(service_name, ctype, qualified_name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HttpMethod {
    Get,
    Post,
    Put,
    Delete,
    Patch,
}

impl HttpMethod {
    pub const ALL: [HttpMethod; 5] = [
        HttpMethod::Get,
        HttpMethod::Post,
        HttpMethod::Put,
        HttpMethod::Delete,
        HttpMethod::Patch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HttpMethod::Get => "GET",
            HttpMethod::Post => "POST",
            HttpMethod::Put => "PUT",
            HttpMethod::Delete => "DELETE",
            HttpMethod::Patch => "PATCH",
        }
    }

    pub fn parse(s: &str) -> Option<HttpMethod> {
        match s.to_ascii_uppercase().as_str() {
            "GET" => Some(HttpMethod::Get),
            "POST" => Some(HttpMethod::Post),
            "PUT" => Some(HttpMethod::Put),
            "DELETE" => Some(HttpMethod::Delete),
            "PATCH" => Some(HttpMethod::Patch),
            _ => None,
        }
    }
}

impl fmt::Display for HttpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Parameter {
    pub name: String,
    pub declared_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Method {
    pub name: String,
    pub parameters: Vec<Parameter>,
    pub return_type: String,
    pub annotations: Vec<String>,
    /// Qualified `Unit.method` names of intra-service calls made by the body.
    pub body_call_targets: Vec<String>,
    pub rest_calls: Vec<RestCall>,
    /// Names of methods invoked on locals or parameters of the declared return type.
    #[serde(default)]
    pub return_object_calls: Vec<String>,
    /// Digest of the normalized body text.
    pub content_hash: String,
}

impl Method {
    pub fn arity(&self) -> usize {
        self.parameters.len()
    }

    pub fn signature_key(&self) -> (&str, usize) {
        (&self.name, self.arity())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Endpoint {
    pub http_method: HttpMethod,
    pub path: String,
    pub handler_method: String,
    pub owning_component: ComponentId,
}

impl Endpoint {
    pub fn key(&self) -> (HttpMethod, &str) {
        (self.http_method, &self.path)
    }
}

/// Host of a remote call: a logical service name, or unresolved when the
/// host expression is not a compile-time literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TargetService {
    Resolved(String),
    Unresolved,
}

impl TargetService {
    pub const UNRESOLVED: &'static str = "UNRESOLVED";

    pub fn as_resolved(&self) -> Option<&str> {
        match self {
            TargetService::Resolved(s) => Some(s),
            TargetService::Unresolved => None,
        }
    }
}

impl fmt::Display for TargetService {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetService::Resolved(s) => f.write_str(s),
            TargetService::Unresolved => f.write_str(Self::UNRESOLVED),
        }
    }
}

impl Serialize for TargetService {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TargetService {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(if s == Self::UNRESOLVED {
            TargetService::Unresolved
        } else {
            TargetService::Resolved(s)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RestCall {
    pub http_method: HttpMethod,
    pub target_service: TargetService,
    pub path: String,
    pub site_method: String,
    pub owning_component: ComponentId,
}

impl RestCall {
    pub fn key(&self) -> (HttpMethod, &str) {
        (self.http_method, &self.path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityField {
    pub field_name: String,
    pub declared_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Entity {
    pub name: String,
    pub fields: BTreeSet<EntityField>,
    pub annotations: Vec<String>,
}

impl Entity {
    pub fn field_names_lowercase(&self) -> BTreeSet<String> {
        self.fields
            .iter()
            .map(|f| f.field_name.to_lowercase())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Component {
    pub id: ComponentId,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub endpoints: Vec<Endpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_ref: Option<Entity>,
    pub source_path: String,
    pub content_hash: String,
}

impl Component {
    /// Assembles a component with canonical member order and a fresh content hash.
    pub fn new(
        id: ComponentId,
        methods: Vec<Method>,
        endpoints: Vec<Endpoint>,
        entity_ref: Option<Entity>,
        source_path: impl Into<String>,
    ) -> Self {
        let mut c = Component {
            id,
            methods,
            endpoints,
            entity_ref,
            source_path: source_path.into(),
            content_hash: String::new(),
        };
        c.canonicalize();
        c.content_hash = super::hash::hash_component(&c);
        c
    }

    /// Sorts members into canonical order. Content hash is unaffected.
    pub fn canonicalize(&mut self) {
        for m in &mut self.methods {
            m.annotations.sort();
            m.body_call_targets.sort();
            m.body_call_targets.dedup();
            m.return_object_calls.sort();
            m.return_object_calls.dedup();
        }
        self.methods.sort();
        self.endpoints.sort();
    }

    pub fn component_type(&self) -> ComponentType {
        self.id.component_type
    }

    pub fn rest_calls(&self) -> impl Iterator<Item = &RestCall> {
        self.methods.iter().flat_map(|m| m.rest_calls.iter())
    }

    pub fn method(&self, name: &str, arity: usize) -> Option<&Method> {
        self.methods
            .iter()
            .find(|m| m.name == name && m.arity() == arity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CallEdge {
    pub from: ComponentId,
    pub to: ComponentId,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MicroserviceIR {
    pub name: String,
    pub version_id: String,
    #[serde(with = "components_as_list")]
    pub components: BTreeMap<ComponentId, Component>,
    pub call_graph_edges: BTreeSet<CallEdge>,
}

impl MicroserviceIR {
    pub fn new(name: impl Into<String>, version_id: impl Into<String>) -> Self {
        MicroserviceIR {
            name: name.into(),
            version_id: version_id.into(),
            components: BTreeMap::new(),
            call_graph_edges: BTreeSet::new(),
        }
    }

    /// Builds a service IR from components, deriving the call graph.
    pub fn from_components(
        name: impl Into<String>,
        version_id: impl Into<String>,
        components: impl IntoIterator<Item = Component>,
    ) -> Self {
        let mut ir = MicroserviceIR::new(name, version_id);
        for c in components {
            ir.components.insert(c.id.clone(), c);
        }
        ir.rebuild_call_graph();
        ir
    }

    /// Recomputes `call_graph_edges` from the components' body call targets.
    ///
    /// A target `pkg.Unit.method` resolves to the component whose qualified
    /// name is `pkg.Unit`. Self edges are dropped.
    pub fn rebuild_call_graph(&mut self) {
        self.call_graph_edges = derive_call_edges(&self.components);
    }

    pub fn endpoints(&self) -> impl Iterator<Item = &Endpoint> {
        self.components.values().flat_map(|c| c.endpoints.iter())
    }

    pub fn rest_calls(&self) -> impl Iterator<Item = &RestCall> {
        self.components.values().flat_map(|c| c.rest_calls())
    }
}

/// Call-graph edges implied by the body call targets of `components`.
pub fn derive_call_edges(components: &BTreeMap<ComponentId, Component>) -> BTreeSet<CallEdge> {
    let by_qname: BTreeMap<&str, &ComponentId> = components
        .keys()
        .map(|id| (id.qualified_name.as_str(), id))
        .collect();
    let mut edges = BTreeSet::new();
    for (id, c) in components {
        for m in &c.methods {
            for target in &m.body_call_targets {
                let Some((unit, _method)) = target.rsplit_once('.') else {
                    continue;
                };
                if let Some(callee) = by_qname.get(unit) {
                    if *callee != id {
                        edges.insert(CallEdge {
                            from: id.clone(),
                            to: (*callee).clone(),
                        });
                    }
                }
            }
        }
    }
    edges
}

mod components_as_list {
    use super::*;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<ComponentId, Component>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(map.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<ComponentId, Component>, D::Error> {
        let list = Vec::<Component>::deserialize(deserializer)?;
        let mut map = BTreeMap::new();
        for c in list {
            let id = c.id.clone();
            if map.insert(id.clone(), c).is_some() {
                return Err(serde::de::Error::custom(format!(
                    "duplicate component id {id}"
                )));
            }
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RemoteCallEvidence {
    pub call: RestCall,
    pub endpoint: Endpoint,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OverlapEvidence {
    pub similarity: f64,
}

impl PartialEq for OverlapEvidence {
    fn eq(&self, other: &Self) -> bool {
        self.similarity.total_cmp(&other.similarity) == Ordering::Equal
    }
}

impl Eq for OverlapEvidence {}

impl PartialOrd for OverlapEvidence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OverlapEvidence {
    fn cmp(&self, other: &Self) -> Ordering {
        self.similarity.total_cmp(&other.similarity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    RemoteCall,
    DataOverlap,
}

/// Cross-service dependency edge.
///
/// Data-overlap edges are undirected; they are stored with `source < target`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DependencyEdge {
    RemoteCall {
        source: ComponentId,
        target: ComponentId,
        evidence: RemoteCallEvidence,
    },
    DataOverlap {
        source: ComponentId,
        target: ComponentId,
        evidence: OverlapEvidence,
    },
}

impl DependencyEdge {
    pub fn remote_call(call: RestCall, endpoint: Endpoint) -> Self {
        DependencyEdge::RemoteCall {
            source: call.owning_component.clone(),
            target: endpoint.owning_component.clone(),
            evidence: RemoteCallEvidence { call, endpoint },
        }
    }

    pub fn data_overlap(a: ComponentId, b: ComponentId, similarity: f64) -> Self {
        let (source, target) = if a <= b { (a, b) } else { (b, a) };
        DependencyEdge::DataOverlap {
            source,
            target,
            evidence: OverlapEvidence { similarity },
        }
    }

    pub fn kind(&self) -> EdgeKind {
        match self {
            DependencyEdge::RemoteCall { .. } => EdgeKind::RemoteCall,
            DependencyEdge::DataOverlap { .. } => EdgeKind::DataOverlap,
        }
    }

    pub fn source(&self) -> &ComponentId {
        match self {
            DependencyEdge::RemoteCall { source, .. } | DependencyEdge::DataOverlap { source, .. } => {
                source
            }
        }
    }

    pub fn target(&self) -> &ComponentId {
        match self {
            DependencyEdge::RemoteCall { target, .. } | DependencyEdge::DataOverlap { target, .. } => {
                target
            }
        }
    }

    pub fn touches(&self, id: &ComponentId) -> bool {
        self.source() == id || self.target() == id
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SystemIR {
    pub version_label: String,
    pub services: BTreeMap<String, MicroserviceIR>,
    pub cross_edges: BTreeSet<DependencyEdge>,
}

impl SystemIR {
    pub fn component(&self, id: &ComponentId) -> Option<&Component> {
        self.services
            .get(&id.microservice)
            .and_then(|s| s.components.get(id))
    }

    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.services.values().flat_map(|s| s.components.values())
    }

    pub fn endpoints(&self) -> impl Iterator<Item = &Endpoint> {
        self.services.values().flat_map(|s| s.endpoints())
    }

    pub fn rest_calls(&self) -> impl Iterator<Item = &RestCall> {
        self.services.values().flat_map(|s| s.rest_calls())
    }

    /// The label derived from per-service versions: `name@version` joined by `;`.
    pub fn derived_version_label(&self) -> String {
        render_version_label(self.services.values())
    }
}

pub fn render_version_label<'a>(services: impl IntoIterator<Item = &'a MicroserviceIR>) -> String {
    let mut parts: Vec<String> = services
        .into_iter()
        .map(|s| format!("{}@{}", s.name, s.version_id))
        .collect();
    parts.sort();
    parts.join(";")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeKind {
    #[serde(rename = "ADD")]
    Add,
    #[serde(rename = "MODIFY")]
    Modify,
    #[serde(rename = "DELETE", alias = "REMOVE")]
    Delete,
}

impl fmt::Display for ChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChangeKind::Add => "ADD",
            ChangeKind::Modify => "MODIFY",
            ChangeKind::Delete => "DELETE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Change {
    pub change_kind: ChangeKind,
    pub component_id: ComponentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_component: Option<Component>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_content_hash: Option<String>,
}

impl Change {
    pub fn add(component: Component) -> Self {
        Change {
            change_kind: ChangeKind::Add,
            component_id: component.id.clone(),
            new_component: Some(component),
            old_content_hash: None,
        }
    }

    pub fn modify(old_hash: impl Into<String>, component: Component) -> Self {
        Change {
            change_kind: ChangeKind::Modify,
            component_id: component.id.clone(),
            new_component: Some(component),
            old_content_hash: Some(old_hash.into()),
        }
    }

    pub fn delete(id: ComponentId, old_hash: impl Into<String>) -> Self {
        Change {
            change_kind: ChangeKind::Delete,
            component_id: id,
            new_component: None,
            old_content_hash: Some(old_hash.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Delta {
    pub microservice: String,
    pub old_version_id: String,
    pub new_version_id: String,
    pub changes: Vec<Change>,
}

impl Delta {
    pub fn empty(
        microservice: impl Into<String>,
        old_version_id: impl Into<String>,
        new_version_id: impl Into<String>,
    ) -> Self {
        Delta {
            microservice: microservice.into(),
            old_version_id: old_version_id.into(),
            new_version_id: new_version_id.into(),
            changes: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn change_for(&self, id: &ComponentId) -> Option<&Change> {
        self.changes.iter().find(|c| &c.component_id == id)
    }
}
