//! IR domain types, identity, content hashing and document formats.

mod document;
pub mod hash;
pub mod path;
mod types;
mod validate;

use thiserror::Error;

pub use document::{
    canonicalize, deserialize_delta, deserialize_ir, deserialize_service_ir, document_schema,
    read_document, read_document_value, serialize_delta, serialize_ir, serialize_service_ir,
    to_canonical_json, write_document, DELTA_SCHEMA, SCHEMA_VERSION, SERVICE_IR_SCHEMA,
    SYSTEM_IR_SCHEMA,
};
pub use hash::{body_hash, hash_component, normalize_body};
pub use path::{is_normalized, join_paths, normalize_path, PATH_VARIABLE};
pub use types::*;
pub use validate::{validate_delta, validate_service, validate_system};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IrError {
    #[error("component id part `{0}` must not be empty")]
    EmptyIdPart(&'static str),
    #[error("malformed document at {location}: {message}")]
    Malformed { location: String, message: String },
    #[error("expected a `{expected}` document, found `{found}`")]
    SchemaMismatch { expected: String, found: String },
    #[error("invalid IR at {location}: {message}")]
    Invalid { location: String, message: String },
}
