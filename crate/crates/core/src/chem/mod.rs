//! Molecular graphs, SMILES reading and writing, canonical form.

pub mod canon;
pub mod diagnostic;
pub mod element;
pub mod graph;
pub mod smiles;
pub mod writer;

pub use canon::{canonical_smiles, canonicalize, isomorphic, Canonical};
pub use diagnostic::{DiagnosticKind, ParseDiagnostic};
pub use element::Element;
pub use graph::{Atom, Bond, BondOrder, GraphError, GraphErrorKind, MolGraph};
pub use smiles::{parse_smiles, parse_smiles_detailed, ParsedSmiles};
pub use writer::{write_smiles, WriteOptions, Written};

/// Checks raw bytes as SMILES. Non-UTF-8 input is reported as an unknown
/// symbol at the first offending byte.
pub fn validate(bytes: &[u8]) -> Result<MolGraph, ParseDiagnostic> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_smiles(text),
        Err(e) => Err(ParseDiagnostic::new(
            e.valid_up_to(),
            DiagnosticKind::UnknownSymbol,
            "input is not valid UTF-8",
        )),
    }
}
