use std::collections::BTreeSet;

use super::hash::hash_component;
use super::path::is_normalized;
use super::types::{
    ChangeKind, ComponentType, Delta, DependencyEdge, MicroserviceIR, SystemIR,
};
use super::IrError;

fn invalid(location: impl Into<String>, message: impl Into<String>) -> IrError {
    IrError::Invalid {
        location: location.into(),
        message: message.into(),
    }
}

pub fn validate_service(svc: &MicroserviceIR) -> Result<(), IrError> {
    let loc = format!("services.{}", svc.name);
    if svc.name.trim().is_empty() {
        return Err(invalid(loc, "service name is empty"));
    }
    let mut endpoint_keys = BTreeSet::new();
    for (id, c) in &svc.components {
        let cloc = format!("{loc}.components[{id}]");
        if id != &c.id {
            return Err(invalid(cloc, "component keyed under a different id"));
        }
        if id.microservice != svc.name {
            return Err(invalid(cloc, "component belongs to another microservice"));
        }
        if id.qualified_name.trim().is_empty() {
            return Err(invalid(cloc, "empty qualifiedName"));
        }
        if !c.endpoints.is_empty() && id.component_type != ComponentType::Controller {
            return Err(invalid(cloc, "endpoints on a non-controller component"));
        }
        if c.entity_ref.is_some() != (id.component_type == ComponentType::Entity) {
            return Err(invalid(cloc, "entityRef must be present iff the component is an entity"));
        }
        for (i, e) in c.endpoints.iter().enumerate() {
            let eloc = format!("{cloc}.endpoints[{i}]");
            if &e.owning_component != id {
                return Err(invalid(eloc, "endpoint owned by another component"));
            }
            if !is_normalized(&e.path) {
                return Err(invalid(eloc, format!("path {:?} is not normalized", e.path)));
            }
            if !endpoint_keys.insert((e.http_method, e.path.clone())) {
                return Err(invalid(
                    eloc,
                    format!("duplicate endpoint {} {}", e.http_method, e.path),
                ));
            }
        }
        for m in &c.methods {
            for (i, call) in m.rest_calls.iter().enumerate() {
                let rloc = format!("{cloc}.methods[{}].restCalls[{i}]", m.name);
                if &call.owning_component != id {
                    return Err(invalid(rloc, "rest call owned by another component"));
                }
                if !is_normalized(&call.path) {
                    return Err(invalid(rloc, format!("path {:?} is not normalized", call.path)));
                }
            }
        }
        if c.content_hash != hash_component(c) {
            return Err(invalid(cloc, "contentHash does not match component content"));
        }
    }
    for (i, edge) in svc.call_graph_edges.iter().enumerate() {
        if !svc.components.contains_key(&edge.from) || !svc.components.contains_key(&edge.to) {
            return Err(invalid(
                format!("{loc}.callGraphEdges[{i}]"),
                "edge references a missing component",
            ));
        }
    }
    Ok(())
}

pub fn validate_system(ir: &SystemIR) -> Result<(), IrError> {
    for (name, svc) in &ir.services {
        if name != &svc.name {
            return Err(invalid(format!("services.{name}"), "map key differs from service name"));
        }
        validate_service(svc)?;
    }
    for (i, edge) in ir.cross_edges.iter().enumerate() {
        let loc = format!("crossEdges[{i}]");
        let (Some(src), Some(dst)) = (ir.component(edge.source()), ir.component(edge.target()))
        else {
            return Err(invalid(loc, "edge references a missing component"));
        };
        if src.id.microservice == dst.id.microservice {
            return Err(invalid(loc, "cross edge within a single microservice"));
        }
        match edge {
            DependencyEdge::RemoteCall { evidence, .. } => {
                if evidence.call.owning_component != src.id
                    || !src.rest_calls().any(|c| c == &evidence.call)
                {
                    return Err(invalid(loc, "source does not own the evidence call"));
                }
                if evidence.endpoint.owning_component != dst.id
                    || !dst.endpoints.contains(&evidence.endpoint)
                {
                    return Err(invalid(loc, "target does not own the evidence endpoint"));
                }
            }
            DependencyEdge::DataOverlap { source, target, evidence } => {
                if !(0.0..=1.0).contains(&evidence.similarity) {
                    return Err(invalid(loc, "similarity outside [0,1]"));
                }
                if source > target {
                    return Err(invalid(loc, "data overlap endpoints out of canonical order"));
                }
            }
        }
    }
    Ok(())
}

pub fn validate_delta(d: &Delta) -> Result<(), IrError> {
    let mut seen = BTreeSet::new();
    for (i, ch) in d.changes.iter().enumerate() {
        let loc = format!("changes[{i}]");
        if !seen.insert(&ch.component_id) {
            return Err(invalid(loc, format!("component {} appears twice", ch.component_id)));
        }
        if ch.component_id.microservice != d.microservice {
            return Err(invalid(loc, "change targets another microservice"));
        }
        match ch.change_kind {
            ChangeKind::Add | ChangeKind::Modify => {
                let Some(c) = &ch.new_component else {
                    return Err(invalid(loc, "ADD/MODIFY must carry newComponent"));
                };
                if c.id != ch.component_id {
                    return Err(invalid(loc, "newComponent id differs from componentId"));
                }
                if c.content_hash != hash_component(c) {
                    return Err(invalid(loc, "newComponent contentHash does not match content"));
                }
            }
            ChangeKind::Delete => {
                if ch.new_component.is_some() {
                    return Err(invalid(loc, "DELETE must not carry newComponent"));
                }
            }
        }
        match ch.change_kind {
            ChangeKind::Modify | ChangeKind::Delete if ch.old_content_hash.is_none() => {
                return Err(invalid(loc, "MODIFY/DELETE must carry oldContentHash"));
            }
            ChangeKind::Add if ch.old_content_hash.is_some() => {
                return Err(invalid(loc, "ADD must not carry oldContentHash"));
            }
            _ => {}
        }
    }
    Ok(())
}
