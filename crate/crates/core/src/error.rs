use thiserror::Error;

use crate::delta::DeltaError;
use crate::extract::ExtractError;
use crate::history::HistoryError;
use crate::ir::IrError;
use crate::link::LinkError;
use crate::merge::MergeError;
use crate::rules::RuleError;

/// Umbrella error for callers that drive several stages at once.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Delta(#[from] DeltaError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    History(#[from] HistoryError),
}
