//! SAFE-lite: a simplified fragment-ordered SMILES.
//!
//! Single acyclic bonds that touch a ring atom are cut. Each remaining group
//! (a ring system with its non-cut decorations, or an acyclic chain) is
//! written as its own `.`-separated segment, and every cut bond becomes a
//! ring-closure label shared by the two segments. Segments that contain a
//! ring or a heteroatom are wrapped in `{...}` so the tokenizer sees them as
//! one super-token; plain carbon chains stay bare. Removing the braces leaves
//! ordinary SMILES.

use super::CodecError;
use crate::chem::{canonicalize, parse_smiles, write_smiles, BondOrder, MolGraph, ParseDiagnostic, WriteOptions};

pub fn encode_safe(graph: &MolGraph) -> String {
    let cut: Vec<bool> = graph
        .bonds()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            b.order == BondOrder::Single
                && !graph.is_ring_bond(i)
                && (graph.atom(b.a).ring_member || graph.atom(b.b).ring_member)
        })
        .collect();
    let ranks = canonicalize(graph).ranks;
    let prio: Vec<u64> = ranks.iter().map(|&r| r as u64).collect();
    let written = write_smiles(
        graph,
        &prio,
        &WriteOptions {
            roots: &[],
            cut_bonds: Some(&cut),
        },
    );

    let segments: Vec<&str> = written.text.split('.').collect();
    let mut wrap = vec![false; segments.len()];
    let dots: Vec<usize> = written.text.match_indices('.').map(|(i, _)| i).collect();
    for atom in 0..graph.len() {
        let seg = dots.partition_point(|&d| d < written.offsets[atom]);
        let a = graph.atom(atom);
        if a.ring_member || a.element.is_heteroatom() {
            wrap[seg] = true;
        }
    }
    let mut out = String::with_capacity(written.text.len() + 2 * segments.len());
    for (k, seg) in segments.iter().enumerate() {
        if k > 0 {
            out.push('.');
        }
        if wrap[k] {
            out.push('{');
            out.push_str(seg);
            out.push('}');
        } else {
            out.push_str(seg);
        }
    }
    out
}

pub fn decode_safe(text: &str) -> Result<MolGraph, CodecError> {
    let mut plain = String::with_capacity(text.len());
    let mut open: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match c {
            '{' => {
                if open.is_some() {
                    return Err(CodecError::Malformed {
                        position: i,
                        message: "nested '{'".into(),
                    });
                }
                open = Some(i);
            }
            '}' => match open.take() {
                Some(start) if start + 1 == i => {
                    return Err(CodecError::Malformed {
                        position: start,
                        message: "empty group".into(),
                    })
                }
                Some(_) => {}
                None => {
                    return Err(CodecError::Malformed {
                        position: i,
                        message: "'}' without '{'".into(),
                    })
                }
            },
            _ => plain.push(c),
        }
    }
    if let Some(start) = open {
        return Err(CodecError::Malformed {
            position: start,
            message: "unclosed '{'".into(),
        });
    }
    parse_smiles(&plain).map_err(|d: ParseDiagnostic| CodecError::InvalidOutput(d))
}
