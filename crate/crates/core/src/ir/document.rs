//! Canonical JSON documents for IRs and deltas.
//!
//! Every document is a JSON object carrying `schema` and `schemaVersion`
//! alongside the payload fields. Object keys are written in sorted order
//! and output is pretty-printed with a trailing newline, so equal values
//! always produce identical bytes.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use super::types::{Delta, MicroserviceIR, SystemIR};
use super::validate::{validate_delta, validate_service, validate_system};
use super::IrError;

pub const SCHEMA_VERSION: u64 = 1;

pub const SYSTEM_IR_SCHEMA: &str = "archdelta.system-ir";
pub const SERVICE_IR_SCHEMA: &str = "archdelta.service-ir";
pub const DELTA_SCHEMA: &str = "archdelta.delta";

/// Recursively rebuilds objects with lexicographically sorted keys.
pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, canonicalize(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Key-sorted, pretty-printed bytes of `value`, newline terminated.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    let v = serde_json::to_value(value).expect("document types serialize to JSON");
    let mut bytes = serde_json::to_vec_pretty(&canonicalize(v)).expect("values serialize");
    bytes.push(b'\n');
    bytes
}

/// Serializes `payload` as a tagged document of the given schema.
pub fn write_document<T: Serialize>(schema: &str, payload: &T) -> Vec<u8> {
    let mut v = serde_json::to_value(payload).expect("document types serialize to JSON");
    match &mut v {
        Value::Object(map) => {
            map.insert("schema".into(), Value::String(schema.into()));
            map.insert("schemaVersion".into(), Value::from(SCHEMA_VERSION));
        }
        _ => {
            let mut map = Map::new();
            map.insert("schema".into(), Value::String(schema.into()));
            map.insert("schemaVersion".into(), Value::from(SCHEMA_VERSION));
            map.insert("items".into(), v.take());
            v = Value::Object(map);
        }
    }
    to_canonical_json(&v)
}

/// Parses a document, checks its schema tag, and decodes the payload.
pub fn read_document<T: DeserializeOwned>(schema: &str, bytes: &[u8]) -> Result<T, IrError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| IrError::Malformed {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    read_document_value(schema, value)
}

pub fn read_document_value<T: DeserializeOwned>(schema: &str, value: Value) -> Result<T, IrError> {
    let Value::Object(mut map) = value else {
        return Err(IrError::Malformed {
            location: "$".into(),
            message: "document must be a JSON object".into(),
        });
    };
    let found = map
        .remove("schema")
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    if found != schema {
        return Err(IrError::SchemaMismatch {
            expected: schema.to_string(),
            found,
        });
    }
    match map.remove("schemaVersion").and_then(|v| v.as_u64()) {
        Some(SCHEMA_VERSION) => {}
        other => {
            return Err(IrError::Malformed {
                location: "schemaVersion".into(),
                message: format!("unsupported schema version {other:?}"),
            })
        }
    }
    let payload = match map.remove("items") {
        Some(items) if map.is_empty() => items,
        Some(items) => {
            map.insert("items".into(), items);
            Value::Object(map)
        }
        None => Value::Object(map),
    };
    serde_path_to_error::deserialize(payload).map_err(|e| IrError::Malformed {
        location: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Detects the `schema` tag of a document without decoding the payload.
pub fn document_schema(bytes: &[u8]) -> Option<String> {
    let value: Value = serde_json::from_slice(bytes).ok()?;
    value.get("schema")?.as_str().map(str::to_owned)
}

pub fn serialize_ir(ir: &SystemIR) -> Vec<u8> {
    write_document(SYSTEM_IR_SCHEMA, ir)
}

pub fn deserialize_ir(bytes: &[u8]) -> Result<SystemIR, IrError> {
    let ir: SystemIR = read_document(SYSTEM_IR_SCHEMA, bytes)?;
    validate_system(&ir)?;
    Ok(ir)
}

pub fn serialize_service_ir(ir: &MicroserviceIR) -> Vec<u8> {
    write_document(SERVICE_IR_SCHEMA, ir)
}

pub fn deserialize_service_ir(bytes: &[u8]) -> Result<MicroserviceIR, IrError> {
    let ir: MicroserviceIR = read_document(SERVICE_IR_SCHEMA, bytes)?;
    validate_service(&ir)?;
    Ok(ir)
}

pub fn serialize_delta(d: &Delta) -> Vec<u8> {
    write_document(DELTA_SCHEMA, d)
}

pub fn deserialize_delta(bytes: &[u8]) -> Result<Delta, IrError> {
    let d: Delta = read_document(DELTA_SCHEMA, bytes)?;
    validate_delta(&d)?;
    Ok(d)
}
