//! Per-unit extraction: classification, endpoints, remote calls, entities
//! and method summaries.

use std::collections::BTreeSet;

use super::body::{analyze_body, template, BodyFacts, Fragment, LocalVar, Receiver, StringScope};
use super::discover::ServiceNames;
use super::parser::{
    parse_unit, simple_type_name, Annotation, AnnotationValue, FieldDecl, MethodDecl, ParsedUnit,
    TypeDecl,
};
use super::profile::{EndpointMarker, MarkerProfile, VerbSource};
use super::ExtractError;
use crate::ir::{
    body_hash, join_paths, normalize_path, ComponentId, ComponentType, Endpoint, Entity,
    EntityField, HttpMethod, Method, Parameter, RestCall, TargetService, PATH_VARIABLE,
};

/// Result of an extraction step together with non-fatal findings.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

/// Index of the type declaration the unit is classified by, with its type.
///
/// The first top-level declaration carrying any classification marker is
/// the unit's primary type; other top-level declarations are ignored.
pub fn classify_parsed(
    unit: &ParsedUnit,
    profile: &MarkerProfile,
) -> Result<Option<(usize, ComponentType)>, ExtractError> {
    for (idx, decl) in unit.types.iter().enumerate() {
        let matched: Vec<ComponentType> = ComponentType::ALL
            .into_iter()
            .filter(|t| {
                let markers = profile.markers_for(*t);
                decl.annotations.iter().any(|a| markers.contains(&a.name))
            })
            .collect();
        match matched.as_slice() {
            [] => continue,
            [one] => return Ok(Some((idx, *one))),
            [first, second, ..] => {
                return Err(ExtractError::AmbiguousClassification {
                    unit: unit.qualified_name(&decl.name),
                    first: *first,
                    second: *second,
                })
            }
        }
    }
    Ok(None)
}

/// Classifies one source unit by the markers on its type declaration.
pub fn classify_source_unit(
    unit_text: &str,
    profile: &MarkerProfile,
) -> Result<Option<ComponentType>, ExtractError> {
    let unit = parse_unit(unit_text).map_err(|e| ExtractError::Parse(e.to_string()))?;
    Ok(classify_parsed(&unit, profile)?.map(|(_, t)| t))
}

fn primary<'u>(unit: &'u ParsedUnit, profile: &MarkerProfile) -> Option<&'u TypeDecl> {
    match classify_parsed(unit, profile) {
        Ok(Some((idx, _))) => unit.types.get(idx),
        _ => unit.types.first(),
    }
}

fn field_scope<'a>(unit: &'a ParsedUnit, decl: &'a TypeDecl) -> StringScope<'a> {
    StringScope {
        toks: &unit.tokens,
        facts: None,
        fields: &decl.fields,
    }
}

/// String values of an annotation attribute. Constant references resolve
/// through `static final String` fields of the same type; anything else
/// that cannot be evaluated is skipped.
fn annotation_strings(values: &[AnnotationValue], scope: &StringScope<'_>) -> Vec<String> {
    let mut out = Vec::new();
    for v in values {
        match v {
            AnnotationValue::Str(s) => out.push(s.clone()),
            AnnotationValue::Name(n) => {
                let field = n.rsplit('.').next().unwrap_or(n);
                let frags = scope.eval_field(field, 0);
                if frags.iter().all(|f| matches!(f, Fragment::Literal(_))) {
                    out.push(template(&frags));
                }
            }
            AnnotationValue::Other(_) => {}
        }
    }
    out
}

fn annotation_paths(a: &Annotation, profile: &MarkerProfile, scope: &StringScope<'_>) -> Vec<String> {
    for key in &profile.path_attributes {
        if let Some(arg) = a.arg(key) {
            let paths = annotation_strings(&arg.values, scope);
            if !paths.is_empty() {
                return paths;
            }
        }
    }
    vec![String::new()]
}

fn endpoint_verbs(a: &Annotation, marker: &EndpointMarker) -> Vec<HttpMethod> {
    match marker {
        EndpointMarker::Verb(v) => vec![*v],
        EndpointMarker::MethodAttribute { attribute, default } => {
            let verbs: Vec<HttpMethod> = a
                .arg(attribute)
                .map(|arg| {
                    arg.values
                        .iter()
                        .filter_map(|v| v.name_tail().or(v.as_str()))
                        .filter_map(HttpMethod::parse)
                        .collect()
                })
                .unwrap_or_default();
            if verbs.is_empty() {
                vec![*default]
            } else {
                verbs
            }
        }
    }
}

fn base_paths(unit: &ParsedUnit, decl: &TypeDecl, profile: &MarkerProfile) -> Vec<String> {
    let scope = field_scope(unit, decl);
    let mut out = Vec::new();
    for a in &decl.annotations {
        if profile.base_path_markers.contains(&a.name) {
            out.extend(annotation_paths(a, profile, &scope));
        }
    }
    if out.is_empty() {
        out.push(String::new());
    }
    out
}

fn endpoints_of(
    unit: &ParsedUnit,
    decl: &TypeDecl,
    id: &ComponentId,
    profile: &MarkerProfile,
) -> Vec<Endpoint> {
    let scope = field_scope(unit, decl);
    let bases = base_paths(unit, decl, profile);
    let mut out = Vec::new();
    for m in &decl.methods {
        for a in &m.annotations {
            let Some(marker) = profile.endpoint_markers.get(&a.name) else {
                continue;
            };
            let verbs = endpoint_verbs(a, marker);
            let paths = annotation_paths(a, profile, &scope);
            for base in &bases {
                for p in &paths {
                    for verb in &verbs {
                        out.push(Endpoint {
                            http_method: *verb,
                            path: join_paths(base, p),
                            handler_method: m.name.clone(),
                            owning_component: id.clone(),
                        });
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Endpoints declared by the unit's controller type.
///
/// The type-level base path is joined with each handler's path and the
/// result normalized. Methods without an endpoint marker are ignored.
pub fn extract_endpoints(
    unit: &ParsedUnit,
    id: &ComponentId,
    profile: &MarkerProfile,
) -> Vec<Endpoint> {
    match primary(unit, profile) {
        Some(decl) => endpoints_of(unit, decl, id, profile),
        None => Vec::new(),
    }
}

/// Splits an evaluated URL template into target service and path.
///
/// `http://host:port/path` resolves the host (through `names`); a host
/// containing a dynamic piece, or a URL with no scheme, is UNRESOLVED and
/// keeps the path built from the literal fragments.
pub fn interpret_url(fragments: &[Fragment], names: &ServiceNames) -> (TargetService, String) {
    let tpl = template(fragments);
    if let Some(idx) = tpl.find("://") {
        let rest = &tpl[idx + 3..];
        let (authority, path) = match rest.find('/') {
            Some(slash) => (&rest[..slash], &rest[slash..]),
            None => (rest, ""),
        };
        let host = authority.rsplit('@').next().unwrap_or(authority);
        let host = host.split(':').next().unwrap_or(host);
        let target = if host.is_empty() || host.contains(PATH_VARIABLE) {
            TargetService::Unresolved
        } else {
            TargetService::Resolved(names.service_for_host(host))
        };
        return (target, normalize_path(path));
    }
    let mut rest = tpl.as_str();
    while let Some(stripped) = rest.strip_prefix(PATH_VARIABLE) {
        rest = stripped;
    }
    (TargetService::Unresolved, normalize_path(rest))
}

/// Declaration context of one method body.
pub(crate) struct MethodContext<'a> {
    pub unit: &'a ParsedUnit,
    pub decl: &'a TypeDecl,
    pub method: &'a MethodDecl,
    pub facts: BodyFacts,
}

impl<'a> MethodContext<'a> {
    pub fn new(unit: &'a ParsedUnit, decl: &'a TypeDecl, method: &'a MethodDecl) -> Self {
        let mut facts = match &method.body {
            Some(range) => analyze_body(&unit.tokens, range.clone()),
            None => BodyFacts::default(),
        };
        let params = method.params.iter().map(|p| LocalVar {
            name: p.name.clone(),
            declared_type: p.declared_type.clone(),
            pos: 0,
        });
        facts.locals.splice(0..0, params);
        MethodContext {
            unit,
            decl,
            method,
            facts,
        }
    }

    /// Declared type of `name` as seen at token `pos`: local, parameter or field.
    pub fn type_of(&self, name: &str, pos: usize) -> Option<String> {
        if let Some(t) = self.facts.local_type(name, pos) {
            return Some(t.to_string());
        }
        self.field(name).map(|f| f.declared_type.clone())
    }

    fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.decl.fields.iter().find(|f| f.name == name)
    }

    /// Declared type of a call receiver; `this.x` only looks at fields.
    pub fn receiver_type(&self, receiver: &Receiver, pos: usize) -> Option<String> {
        match receiver {
            Receiver::Name(n) => {
                let this_qualified = pos >= 4 && self.unit.tokens[pos - 4].is_word("this");
                if this_qualified {
                    self.field(n).map(|f| f.declared_type.clone())
                } else {
                    self.type_of(n, pos)
                }
            }
            _ => None,
        }
    }

    pub fn site_method(&self) -> String {
        format!("{}.{}", self.unit.qualified_name(&self.decl.name), self.method.name)
    }

    fn scope(&self) -> StringScope<'_> {
        StringScope {
            toks: &self.unit.tokens,
            facts: Some(&self.facts),
            fields: &self.decl.fields,
        }
    }

    fn verb_at(&self, range: std::ops::Range<usize>, depth: usize) -> Option<HttpMethod> {
        let toks = &self.unit.tokens[range.clone()];
        if let Some(v) = toks
            .iter()
            .rev()
            .filter(|t| t.is_ident() && t.text.chars().all(|c| c.is_ascii_uppercase()))
            .find_map(|t| HttpMethod::parse(&t.text))
        {
            return Some(v);
        }
        if let [t] = toks {
            if t.is_ident() && depth < 4 {
                if let Some((_, rhs)) = self.facts.last_assignment(&t.text, range.start) {
                    return self.verb_at(rhs, depth + 1);
                }
            }
        }
        None
    }

    /// Remote calls in this body matching the profile's patterns.
    pub fn rest_calls(
        &self,
        id: &ComponentId,
        profile: &MarkerProfile,
        names: &ServiceNames,
        warnings: &mut Vec<String>,
    ) -> Vec<RestCall> {
        let mut out = Vec::new();
        for call in &self.facts.calls {
            let Some(rtype) = self.receiver_type(&call.receiver, call.pos) else {
                continue;
            };
            let rtype = simple_type_name(&rtype);
            for pattern in &profile.remote_call_patterns {
                if pattern.method != call.method || pattern.receiver_type != rtype {
                    continue;
                }
                let Some(url_arg) = call.args.get(pattern.url_argument) else {
                    continue;
                };
                let verb = match &pattern.verb {
                    VerbSource::Fixed(v) => Some(*v),
                    VerbSource::Argument(k) => {
                        call.args.get(*k).and_then(|r| self.verb_at(r.clone(), 0))
                    }
                };
                let Some(verb) = verb else {
                    warnings.push(format!(
                        "{}: cannot determine HTTP verb of `{}` call",
                        self.site_method(),
                        call.method
                    ));
                    continue;
                };
                let frags = self.scope().eval(url_arg.clone(), call.pos);
                let (target, path) = interpret_url(&frags, names);
                out.push(RestCall {
                    http_method: verb,
                    target_service: target,
                    path,
                    site_method: self.site_method(),
                    owning_component: id.clone(),
                });
                break;
            }
        }
        out
    }

    /// `Type.method` for calls on receivers typed like the return type.
    pub fn return_object_calls(&self) -> Vec<String> {
        let returned: BTreeSet<String> = type_names(&self.method.return_type)
            .into_iter()
            .filter(|t| !matches!(t.as_str(), "void" | "Object" | "String"))
            .collect();
        if returned.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for call in &self.facts.calls {
            if let Some(t) = self.receiver_type(&call.receiver, call.pos) {
                let t = simple_type_name(&t);
                if returned.contains(&t) {
                    out.push(format!("{t}.{}", call.method));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Simple names of every type mentioned in a type reference:
/// `ResponseEntity<List<Order>>` gives `ResponseEntity`, `List`, `Order`.
pub fn type_names(ty: &str) -> Vec<String> {
    ty.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$' || c == '.'))
        .filter(|s| !s.is_empty() && *s != "extends" && *s != "super")
        .map(|s| s.rsplit('.').next().unwrap_or(s).to_string())
        .collect()
}

/// Remote calls made anywhere in the unit's primary type.
pub fn extract_rest_calls(
    unit: &ParsedUnit,
    id: &ComponentId,
    profile: &MarkerProfile,
    names: &ServiceNames,
) -> Extracted<Vec<RestCall>> {
    let mut warnings = Vec::new();
    let mut value = Vec::new();
    if let Some(decl) = primary(unit, profile) {
        for m in &decl.methods {
            let ctx = MethodContext::new(unit, decl, m);
            value.extend(ctx.rest_calls(id, profile, names, &mut warnings));
        }
    }
    Extracted { value, warnings }
}

/// Persistent instance fields of the unit's primary type.
pub fn extract_entity(unit: &ParsedUnit, profile: &MarkerProfile) -> Extracted<Entity> {
    let Some(decl) = primary(unit, profile) else {
        return Extracted {
            value: Entity {
                name: String::new(),
                fields: BTreeSet::new(),
                annotations: Vec::new(),
            },
            warnings: vec!["no type declaration".into()],
        };
    };
    entity_of(decl, profile)
}

pub(crate) fn entity_of(decl: &TypeDecl, profile: &MarkerProfile) -> Extracted<Entity> {
    let fields: BTreeSet<EntityField> = decl
        .fields
        .iter()
        .filter(|f| !f.has_modifier("static") && !f.has_modifier("transient"))
        .filter(|f| {
            !f.annotations
                .iter()
                .any(|a| profile.transient_markers.contains(&a.name))
        })
        .map(|f| EntityField {
            field_name: f.name.clone(),
            declared_type: f.declared_type.clone(),
        })
        .collect();
    let mut warnings = Vec::new();
    if fields.is_empty() {
        warnings.push(format!("entity `{}` has no instance fields", decl.name));
    }
    let mut annotations: Vec<String> = decl.annotations.iter().map(|a| a.text.clone()).collect();
    annotations.sort();
    Extracted {
        value: Entity {
            name: decl.name.clone(),
            fields,
            annotations,
        },
        warnings,
    }
}

/// IR method summary without resolved call targets.
pub(crate) fn method_summary(ctx: &MethodContext<'_>) -> Method {
    let m = ctx.method;
    Method {
        name: m.name.clone(),
        parameters: m
            .params
            .iter()
            .map(|p| Parameter {
                name: p.name.clone(),
                declared_type: p.declared_type.clone(),
            })
            .collect(),
        return_type: m.return_type.clone(),
        annotations: m.annotations.iter().map(|a| a.text.clone()).collect(),
        body_call_targets: Vec::new(),
        rest_calls: Vec::new(),
        return_object_calls: ctx.return_object_calls(),
        content_hash: body_hash(&m.body_text),
    }
}
