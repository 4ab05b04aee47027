//! Incremental architecture reconstruction for microservice systems.
//!
//! The pipeline has three stages. Each microservice repository is scanned
//! into a [`MicroserviceIR`](ir::MicroserviceIR); the per-service IRs are
//! linked into one [`SystemIR`](ir::SystemIR) by matching remote calls to
//! endpoints and by comparing data entities. When a repository changes, a
//! [`Delta`](ir::Delta) is computed and merged into the baseline to produce
//! the next version, and change conflict rules and impact analysis run over
//! the (baseline, delta, increment) triple.

pub mod delta;
pub mod error;
pub mod extract;
pub mod history;
pub mod impact;
pub mod ir;
pub mod link;
pub mod merge;
pub mod rules;

pub use error::Error;
