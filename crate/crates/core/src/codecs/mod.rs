//! String representations of molecules and the conversions between them.

pub mod deepsmiles;
pub mod fraglink;
pub mod fragment;
pub mod fragseq;
pub mod safe;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chem::{canonical_smiles, parse_smiles, MolGraph, ParseDiagnostic};

pub use deepsmiles::{from_deepsmiles, to_deepsmiles};
pub use fraglink::{decode_fraglink, encode_fraglink};
pub use fragment::{fragment_molecule, fragment_molecule_chain, FragmentLink, FragmentSeq};
pub use fragseq::{decode_fragseq, decode_fragseq_strict, encode_fragseq, AmbiguousPairing, FragSeqDecoded};
pub use safe::{decode_safe, encode_safe};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("input is not a valid molecule: {0}")]
    InvalidInput(ParseDiagnostic),
    #[error("malformed text at offset {position}: {message}")]
    Malformed { position: usize, message: String },
    #[error("decoded text is not a valid molecule: {0}")]
    InvalidOutput(ParseDiagnostic),
    #[error("dangling attachment point in fragment {fragment}")]
    DanglingAttachment { fragment: usize },
    #[error("malformed link marker in fragment {fragment}: {message}")]
    MalformedMarker { fragment: usize, message: String },
    #[error("fragment {fragment} breaks the chain: {reason}")]
    ChainViolation { fragment: usize, reason: String },
    #[error("ambiguous attachment pairing at fragment {fragment} ({candidates} open attachment points)")]
    AmbiguousPairing { fragment: usize, candidates: usize },
}

impl CodecError {
    /// Short machine-readable name used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            CodecError::InvalidInput(_) => "invalid_input",
            CodecError::Malformed { .. } => "malformed",
            CodecError::InvalidOutput(_) => "invalid_output",
            CodecError::DanglingAttachment { .. } => "dangling_attachment",
            CodecError::MalformedMarker { .. } => "malformed_marker",
            CodecError::ChainViolation { .. } => "chain_violation",
            CodecError::AmbiguousPairing { .. } => "ambiguous_pairing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Representation {
    #[serde(rename = "SMILES")]
    Smiles,
    #[serde(rename = "DeepSMILES")]
    DeepSmiles,
    #[serde(rename = "SAFE")]
    Safe,
    #[serde(rename = "FragSeq")]
    FragSeq,
    #[serde(rename = "FragLink")]
    FragLink,
}

impl Representation {
    pub const ALL: [Representation; 5] = [
        Representation::Smiles,
        Representation::DeepSmiles,
        Representation::Safe,
        Representation::FragSeq,
        Representation::FragLink,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::Smiles => "SMILES",
            Representation::DeepSmiles => "DeepSMILES",
            Representation::Safe => "SAFE",
            Representation::FragSeq => "FragSeq",
            Representation::FragLink => "FragLink",
        }
    }

    /// Encodes a SMILES string. SMILES itself is canonicalized; DeepSMILES
    /// rewrites the given spelling; the fragment codecs work from the graph.
    pub fn encode(self, smiles: &str) -> Result<String, CodecError> {
        if self == Representation::DeepSmiles {
            return to_deepsmiles(smiles);
        }
        let graph = parse_smiles(smiles).map_err(CodecError::InvalidInput)?;
        self.encode_graph(&graph)
    }

    pub fn encode_graph(self, graph: &MolGraph) -> Result<String, CodecError> {
        match self {
            Representation::Smiles => Ok(canonical_smiles(graph)),
            Representation::DeepSmiles => to_deepsmiles(&canonical_smiles(graph)),
            Representation::Safe => Ok(encode_safe(graph)),
            Representation::FragSeq => Ok(encode_fragseq(&fragment_molecule(graph))),
            Representation::FragLink => encode_fraglink(&fragment_molecule_chain(graph)),
        }
    }

    /// Decodes to a graph. FragSeq pairs attachment points greedily and does
    /// not fail on ambiguity; use [`decode_fragseq`] for the report.
    pub fn decode(self, text: &str) -> Result<MolGraph, CodecError> {
        match self {
            Representation::Smiles => parse_smiles(text).map_err(CodecError::InvalidOutput),
            Representation::DeepSmiles => {
                let smiles = from_deepsmiles(text)?;
                parse_smiles(&smiles).map_err(CodecError::InvalidOutput)
            }
            Representation::Safe => decode_safe(text),
            Representation::FragSeq => decode_fragseq(text).map(|d| d.graph),
            Representation::FragLink => decode_fraglink(text),
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown representation {0:?}; expected one of SMILES, DeepSMILES, SAFE, FragSeq, FragLink")]
pub struct UnknownRepresentation(pub String);

impl FromStr for Representation {
    type Err = UnknownRepresentation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Representation::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownRepresentation(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::isomorphic;

    #[test]
    fn names_round_trip() {
        for r in Representation::ALL {
            assert_eq!(r.name().parse::<Representation>().unwrap(), r);
            assert_eq!(serde_json::to_string(&r).unwrap(), format!("\"{}\"", r.name()));
        }
        assert_eq!(
            "deepsmiles".parse::<Representation>().unwrap(),
            Representation::DeepSmiles
        );
        assert!("selfies".parse::<Representation>().is_err());
    }

    #[test]
    fn every_codec_round_trips_a_drug() {
        let smiles = "CC(=O)Oc1ccccc1C(=O)O";
        let g = parse_smiles(smiles).unwrap();
        for r in Representation::ALL {
            let text = r.encode(smiles).unwrap();
            let back = r.decode(&text).unwrap();
            assert!(isomorphic(&g, &back), "{r}: {text}");
            assert_eq!(r.encode(smiles).unwrap(), text);
        }
    }
}
