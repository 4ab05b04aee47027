//! Component-level deltas between versions of one microservice.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ir::{Change, ChangeKind, Component, ComponentId, Delta, MicroserviceIR};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeltaError {
    #[error("cannot diff service `{old}` against `{new}`")]
    ServiceMismatch { old: String, new: String },
    #[error("delta chain broken: `{first}` ends at `{first_end}` but `{second}` starts at `{second_start}`")]
    VersionChain {
        first: String,
        first_end: String,
        second: String,
        second_start: String,
    },
    #[error("{first} followed by {second} is not a valid history for {id}")]
    InvalidComposition {
        id: ComponentId,
        first: ChangeKind,
        second: ChangeKind,
    },
    #[error("{id}: second delta expects hash {expected}, first delta produced {found}")]
    HashChain {
        id: ComponentId,
        expected: String,
        found: String,
    },
    #[error("{0} is not present in the baseline")]
    MissingTarget(ComponentId),
    #[error("{0} is already present in the baseline")]
    AlreadyPresent(ComponentId),
    #[error("stale baseline for {id}: delta expects hash {expected}, baseline has {found}")]
    StaleBaseline {
        id: ComponentId,
        expected: String,
        found: String,
    },
}

/// Changes turning `old` into `new`, sorted by component id.
pub fn compute_delta(old: &MicroserviceIR, new: &MicroserviceIR) -> Result<Delta, DeltaError> {
    if old.name != new.name {
        return Err(DeltaError::ServiceMismatch {
            old: old.name.clone(),
            new: new.name.clone(),
        });
    }
    let mut changes = Vec::new();
    let mut o = old.components.iter().peekable();
    let mut n = new.components.iter().peekable();
    loop {
        match (o.peek(), n.peek()) {
            (None, None) => break,
            (Some((_, oc)), None) => {
                changes.push(Change::delete(oc.id.clone(), oc.content_hash.clone()));
                o.next();
            }
            (None, Some((_, nc))) => {
                changes.push(Change::add((*nc).clone()));
                n.next();
            }
            (Some((oid, oc)), Some((nid, nc))) => match oid.cmp(nid) {
                std::cmp::Ordering::Less => {
                    changes.push(Change::delete(oc.id.clone(), oc.content_hash.clone()));
                    o.next();
                }
                std::cmp::Ordering::Greater => {
                    changes.push(Change::add((*nc).clone()));
                    n.next();
                }
                std::cmp::Ordering::Equal => {
                    if oc.content_hash != nc.content_hash {
                        changes.push(Change::modify(oc.content_hash.clone(), (*nc).clone()));
                    }
                    o.next();
                    n.next();
                }
            },
        }
    }
    Ok(Delta {
        microservice: new.name.clone(),
        old_version_id: old.version_id.clone(),
        new_version_id: new.version_id.clone(),
        changes,
    })
}

fn new_hash(c: &Change) -> &str {
    c.new_component
        .as_ref()
        .map(|c| c.content_hash.as_str())
        .unwrap_or("")
}

fn old_hash(c: &Change) -> &str {
    c.old_content_hash.as_deref().unwrap_or("")
}

fn component(c: Change) -> Component {
    c.new_component.expect("ADD and MODIFY carry a component")
}

/// Composes two consecutive deltas of the same service.
///
/// Per component the kinds combine as ADD then MODIFY = ADD, ADD then
/// DELETE = nothing, MODIFY then MODIFY = MODIFY, MODIFY then DELETE =
/// DELETE, DELETE then ADD = MODIFY. A MODIFY or DELETE-ADD pair that
/// restores the original hash cancels out.
pub fn compose_deltas(d1: &Delta, d2: &Delta) -> Result<Delta, DeltaError> {
    if d1.microservice != d2.microservice {
        return Err(DeltaError::ServiceMismatch {
            old: d1.microservice.clone(),
            new: d2.microservice.clone(),
        });
    }
    if d1.new_version_id != d2.old_version_id {
        return Err(DeltaError::VersionChain {
            first: d1.microservice.clone(),
            first_end: d1.new_version_id.clone(),
            second: d2.microservice.clone(),
            second_start: d2.old_version_id.clone(),
        });
    }
    let mut merged: BTreeMap<ComponentId, Change> = d1
        .changes
        .iter()
        .map(|c| (c.component_id.clone(), c.clone()))
        .collect();
    for second in &d2.changes {
        let id = second.component_id.clone();
        let Some(first) = merged.remove(&id) else {
            merged.insert(id, second.clone());
            continue;
        };
        use ChangeKind::*;
        let invalid = || DeltaError::InvalidComposition {
            id: id.clone(),
            first: first.change_kind,
            second: second.change_kind,
        };
        if matches!(second.change_kind, Modify | Delete)
            && matches!(first.change_kind, Add | Modify)
            && old_hash(second) != new_hash(&first)
        {
            return Err(DeltaError::HashChain {
                id: id.clone(),
                expected: old_hash(second).to_string(),
                found: new_hash(&first).to_string(),
            });
        }
        let combined = match (first.change_kind, second.change_kind) {
            (Add, Modify) => Some(Change::add(component(second.clone()))),
            (Add, Delete) => None,
            (Modify, Modify) | (Delete, Add) => {
                let original = old_hash(&first).to_string();
                let latest = component(second.clone());
                (latest.content_hash != original).then(|| Change::modify(original, latest))
            }
            (Modify, Delete) => Some(Change::delete(id.clone(), old_hash(&first).to_string())),
            (Add, Add) | (Modify, Add) | (Delete, Modify) | (Delete, Delete) => {
                return Err(invalid())
            }
        };
        if let Some(c) = combined {
            merged.insert(id, c);
        }
    }
    Ok(Delta {
        microservice: d1.microservice.clone(),
        old_version_id: d1.old_version_id.clone(),
        new_version_id: d2.new_version_id.clone(),
        changes: merged.into_values().collect(),
    })
}

/// Applies `d` to one service IR, checking each change against the baseline.
pub fn apply_to_service(svc: &MicroserviceIR, d: &Delta) -> Result<MicroserviceIR, DeltaError> {
    if svc.name != d.microservice {
        return Err(DeltaError::ServiceMismatch {
            old: svc.name.clone(),
            new: d.microservice.clone(),
        });
    }
    let mut out = svc.clone();
    for ch in &d.changes {
        let id = &ch.component_id;
        match ch.change_kind {
            ChangeKind::Add => {
                if out.components.contains_key(id) {
                    return Err(DeltaError::AlreadyPresent(id.clone()));
                }
            }
            ChangeKind::Modify | ChangeKind::Delete => {
                let Some(current) = out.components.get(id) else {
                    return Err(DeltaError::MissingTarget(id.clone()));
                };
                if current.content_hash != old_hash(ch) {
                    return Err(DeltaError::StaleBaseline {
                        id: id.clone(),
                        expected: old_hash(ch).to_string(),
                        found: current.content_hash.clone(),
                    });
                }
            }
        }
        match &ch.new_component {
            Some(c) => {
                out.components.insert(id.clone(), c.clone());
            }
            None => {
                out.components.remove(id);
            }
        }
    }
    out.version_id = d.new_version_id.clone();
    out.rebuild_call_graph();
    Ok(out)
}
