//! FragSeq: fragments written as SMILES with `*` attachment points, joined by
//! `[SEP]`.
//!
//! Fragments are emitted breadth-first over the fragment tree. Each non-root
//! fragment is written starting at the `*` that joins it to its parent, and
//! siblings follow the order of their parent-side `*` in the parent's text.
//! The decoder therefore pairs the first `*` of every new fragment with the
//! oldest unpaired `*` seen so far. When more than one `*` is open at that
//! moment the text alone does not prove which was meant, so the pairing is
//! reported as ambiguous.

use std::collections::VecDeque;

use serde::Serialize;

use super::fragment::{join_fragments, parse_fragments, FragmentSeq, SEPARATOR};
use super::CodecError;
use crate::chem::{canonicalize, write_smiles, MolGraph, WriteOptions};

pub fn encode_fragseq(seq: &FragmentSeq) -> String {
    let n = seq.fragments.len();
    // (neighbour fragment, own slot, neighbour slot)
    let mut adj: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); n];
    for l in &seq.links {
        adj[l.from].push((l.to, l.from_slot, l.to_slot));
        adj[l.to].push((l.from, l.to_slot, l.from_slot));
    }
    let mut parent_slot: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut pieces = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(f) = queue.pop_front() {
            let graph = &seq.fragments[f];
            let ranks = canonicalize(graph).ranks;
            let prio: Vec<u64> = ranks.iter().map(|&r| r as u64).collect();
            let roots: Vec<usize> = parent_slot[f].into_iter().collect();
            let written = write_smiles(
                graph,
                &prio,
                &WriteOptions {
                    roots: &roots,
                    cut_bonds: None,
                },
            );
            let mut kids: Vec<(usize, usize, usize)> = adj[f].iter().copied().filter(|&(g, _, _)| !seen[g]).collect();
            kids.sort_by_key(|&(_, own, _)| written.offsets[own]);
            for (g, _, their) in kids {
                seen[g] = true;
                parent_slot[g] = Some(their);
                queue.push_back(g);
            }
            pieces.push(written.text);
        }
    }
    pieces.join(SEPARATOR)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AmbiguousPairing {
    pub fragment: usize,
    /// Unpaired attachment points available when the fragment arrived.
    pub candidates: usize,
}

#[derive(Debug, Clone)]
pub struct FragSeqDecoded {
    pub graph: MolGraph,
    pub ambiguous: Vec<AmbiguousPairing>,
}

/// Greedy positional decode; ambiguity is reported, not fatal.
pub fn decode_fragseq(text: &str) -> Result<FragSeqDecoded, CodecError> {
    let fragments = parse_fragments(text)?;
    for (k, f) in fragments.iter().enumerate() {
        if f.stars.iter().any(|&s| f.graph.atom(s).formal_charge != 0) {
            return Err(CodecError::MalformedMarker {
                fragment: k,
                message: "FragSeq attachment points are uncharged '*'".into(),
            });
        }
    }
    let mut open: VecDeque<(usize, usize)> = VecDeque::new();
    let mut pairs = Vec::new();
    let mut ambiguous = Vec::new();
    for (k, f) in fragments.iter().enumerate() {
        let mut stars = f.stars.iter().copied();
        if !open.is_empty() {
            let Some(first) = stars.next() else {
                return Err(CodecError::DanglingAttachment { fragment: open[0].0 });
            };
            if open.len() > 1 {
                ambiguous.push(AmbiguousPairing {
                    fragment: k,
                    candidates: open.len(),
                });
            }
            let partner = open.pop_front().expect("pool is non-empty");
            pairs.push((partner, (k, first)));
        }
        open.extend(stars.map(|s| (k, s)));
    }
    if let Some(&(fragment, _)) = open.front() {
        return Err(CodecError::DanglingAttachment { fragment });
    }
    let graphs: Vec<&MolGraph> = fragments.iter().map(|f| &f.graph).collect();
    let graph = join_fragments(&graphs, &pairs)?;
    Ok(FragSeqDecoded { graph, ambiguous })
}

/// Fails on the first ambiguous pairing instead of guessing.
pub fn decode_fragseq_strict(text: &str) -> Result<MolGraph, CodecError> {
    let decoded = decode_fragseq(text)?;
    match decoded.ambiguous.first() {
        Some(a) => Err(CodecError::AmbiguousPairing {
            fragment: a.fragment,
            candidates: a.candidates,
        }),
        None => Ok(decoded.graph),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{isomorphic, parse_smiles};
    use crate::codecs::fragment_molecule;

    fn encode(s: &str) -> String {
        encode_fragseq(&fragment_molecule(&parse_smiles(s).unwrap()))
    }

    #[test]
    fn single_fragment_is_plain_smiles() {
        assert_eq!(encode("CCC"), "CCC");
        assert_eq!(encode("c1ccccc1"), "c1ccccc1");
    }

    #[test]
    fn ethylbenzene_has_two_marked_fragments() {
        let t = encode("CCc1ccccc1");
        let parts: Vec<&str> = t.split("[SEP]").collect();
        assert_eq!(parts.len(), 2);
        assert!(parts.iter().all(|p| p.matches('*').count() == 1));
        assert!(parts[1].starts_with('*'));
    }

    #[test]
    fn round_trips() {
        for s in [
            "CC(=O)Oc1ccccc1C(=O)O",
            "N(c1ccccc1)(c1ccncc1)c1ccoc1",
            "OCC(O)CO",
            "CCN.Cl",
            "C[N+](C)(C)CCO",
        ] {
            let g = parse_smiles(s).unwrap();
            let d = decode_fragseq(&encode(s)).unwrap();
            assert!(isomorphic(&g, &d.graph), "{s}");
        }
    }

    #[test]
    fn ambiguity_is_reported() {
        let text = "*C(*)*[SEP]*O[SEP]*N[SEP]*F";
        let d = decode_fragseq(text).unwrap();
        assert_eq!(d.ambiguous.len(), 2);
        assert_eq!(
            d.ambiguous[0],
            AmbiguousPairing {
                fragment: 1,
                candidates: 3
            }
        );
        assert!(matches!(
            decode_fragseq_strict(text),
            Err(CodecError::AmbiguousPairing {
                fragment: 1,
                candidates: 3
            })
        ));
        assert!(decode_fragseq_strict("*C[SEP]*O").is_ok());
    }

    #[test]
    fn dangling_attachment() {
        assert!(matches!(
            decode_fragseq("*C"),
            Err(CodecError::DanglingAttachment { fragment: 0 })
        ));
        assert!(matches!(
            decode_fragseq("*C*[SEP]*O"),
            Err(CodecError::DanglingAttachment { fragment: 0 })
        ));
        assert!(matches!(
            decode_fragseq("*C[SEP]O"),
            Err(CodecError::DanglingAttachment { fragment: 0 })
        ));
    }
}
