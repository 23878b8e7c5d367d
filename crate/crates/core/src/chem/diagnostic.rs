use serde::{Deserialize, Serialize};

use super::graph::{GraphError, GraphErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    UnclosedRing,
    UnmatchedParen,
    UnknownSymbol,
    ValenceExceeded,
    EmptyInput,
    BadBracketAtom,
    /// Dangling or conflicting bond symbol, self loop, or repeated bond.
    BadBond,
    /// Lowercase atom that does not sit on a cycle.
    NonRingAromatic,
}

/// A located reason why a string is not a valid molecule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind:?} at offset {position}: {message}")]
pub struct ParseDiagnostic {
    pub position: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn new(position: usize, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            position,
            kind,
            message: message.into(),
        }
    }

    pub(crate) fn from_graph(err: GraphError, atom_offsets: &[usize]) -> Self {
        let position = atom_offsets.get(err.atom).copied().unwrap_or(0);
        let kind = match err.kind {
            GraphErrorKind::EmptyGraph => DiagnosticKind::EmptyInput,
            GraphErrorKind::ValenceExceeded => DiagnosticKind::ValenceExceeded,
            GraphErrorKind::NonRingAromatic => DiagnosticKind::NonRingAromatic,
            GraphErrorKind::ChargeOutOfRange => DiagnosticKind::BadBracketAtom,
            GraphErrorKind::BadEndpoint
            | GraphErrorKind::SelfBond
            | GraphErrorKind::DuplicateBond
            | GraphErrorKind::AromaticBondOnAliphaticAtom => DiagnosticKind::BadBond,
        };
        ParseDiagnostic {
            position,
            kind,
            message: err.message,
        }
    }
}
