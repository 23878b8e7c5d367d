//! FragLink: a chain of fragments joined by `[SEP]` where each link is written
//! as `[*-]` at the end of one fragment and `[*+]` at the start of the next.
//!
//! Marker grammar: the first fragment of a chain carries only `[*-]`, interior
//! fragments open with `[*+]` and carry one `[*-]`, the last carries only
//! `[*+]`. A fragment without `[*+]` starts a new chain, which is how
//! disconnected molecules are written.

use std::collections::VecDeque;

use super::fragment::{join_fragments, parse_fragments, FragmentSeq, SEPARATOR};
use super::CodecError;
use crate::chem::{canonicalize, write_smiles, Atom, MolGraph, WriteOptions};

const START: i8 = 1;
const END: i8 = -1;

pub fn encode_fraglink(seq: &FragmentSeq) -> Result<String, CodecError> {
    let n = seq.fragments.len();
    for i in 0..n {
        let degree = seq.degree(i);
        if degree > 2 {
            return Err(CodecError::ChainViolation {
                fragment: i,
                reason: format!("links to {degree} fragments"),
            });
        }
    }
    // slot charges: END on the earlier fragment's side, START on the later's
    let mut charges: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n];
    for l in &seq.links {
        if l.to != l.from + 1 {
            return Err(CodecError::ChainViolation {
                fragment: l.from,
                reason: format!("linked to fragment {} instead of its successor", l.to),
            });
        }
        charges[l.from].push((l.from_slot, END));
        charges[l.to].push((l.to_slot, START));
    }
    for (i, c) in charges.iter().enumerate() {
        if c.iter().filter(|&&(_, q)| q == END).count() > 1 || c.iter().filter(|&&(_, q)| q == START).count() > 1 {
            return Err(CodecError::ChainViolation {
                fragment: i,
                reason: "two links on the same side".into(),
            });
        }
    }

    let mut pieces = Vec::with_capacity(n);
    for (i, graph) in seq.fragments.iter().enumerate() {
        let marked = with_markers(graph, &charges[i]);
        let ranks = canonicalize(&marked).ranks;
        let start = charges[i].iter().find(|&&(_, q)| q == START).map(|&(s, _)| s);
        let end = charges[i].iter().find(|&&(_, q)| q == END).map(|&(s, _)| s);
        let prio: Vec<u64> = match end {
            // atoms nearer the end marker are visited later, so it tends to come last
            Some(e) => {
                let dist = distances(&marked, e);
                let n = marked.len() as u64;
                (0..marked.len())
                    .map(|a| (n.saturating_sub(dist[a] as u64) << 32) | ranks[a] as u64)
                    .collect()
            }
            None => ranks.iter().map(|&r| r as u64).collect(),
        };
        let roots: Vec<usize> = start.into_iter().collect();
        pieces.push(
            write_smiles(
                &marked,
                &prio,
                &WriteOptions {
                    roots: &roots,
                    cut_bonds: None,
                },
            )
            .text,
        );
    }
    Ok(pieces.join(SEPARATOR))
}

fn with_markers(graph: &MolGraph, charges: &[(usize, i8)]) -> MolGraph {
    let mut atoms: Vec<Atom> = graph.atoms().to_vec();
    for &(slot, q) in charges {
        atoms[slot].formal_charge = q;
    }
    MolGraph::new(atoms, graph.bonds().to_vec()).expect("charged wildcards are always valid")
}

fn distances(graph: &MolGraph, from: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.len()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in graph.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn decode_fraglink(text: &str) -> Result<MolGraph, CodecError> {
    let fragments = parse_fragments(text)?;
    let mut starts = Vec::with_capacity(fragments.len());
    let mut ends = Vec::with_capacity(fragments.len());
    for (k, f) in fragments.iter().enumerate() {
        let mut start = None;
        let mut end = None;
        for &s in &f.stars {
            let slot = match f.graph.atom(s).formal_charge {
                START => &mut start,
                END => &mut end,
                q => {
                    return Err(CodecError::MalformedMarker {
                        fragment: k,
                        message: format!("attachment point with charge {q}; expected [*+] or [*-]"),
                    })
                }
            };
            if slot.replace(s).is_some() {
                return Err(CodecError::MalformedMarker {
                    fragment: k,
                    message: "repeated marker".into(),
                });
            }
        }
        starts.push(start);
        ends.push(end);
    }
    let mut pairs = Vec::new();
    for k in 0..fragments.len() {
        let next_start = starts.get(k + 1).copied().flatten();
        match (ends[k], next_start) {
            (Some(e), Some(s)) => pairs.push(((k, e), (k + 1, s))),
            (Some(_), None) => return Err(CodecError::DanglingAttachment { fragment: k }),
            (None, Some(_)) => return Err(CodecError::DanglingAttachment { fragment: k + 1 }),
            (None, None) => {}
        }
    }
    if starts.first().copied().flatten().is_some() {
        return Err(CodecError::DanglingAttachment { fragment: 0 });
    }
    let graphs: Vec<&MolGraph> = fragments.iter().map(|f| &f.graph).collect();
    join_fragments(&graphs, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{isomorphic, parse_smiles};
    use crate::codecs::{fragment_molecule, fragment_molecule_chain};

    fn encode(s: &str) -> String {
        encode_fraglink(&fragment_molecule_chain(&parse_smiles(s).unwrap())).unwrap()
    }

    #[test]
    fn single_fragment_has_no_markers() {
        assert_eq!(encode("CCC"), "CCC");
    }

    #[test]
    fn three_fragment_chain_layout() {
        let t = encode("c1ccccc1CCc1ccncc1");
        let parts: Vec<&str> = t.split("[SEP]").collect();
        assert_eq!(parts.len(), 3, "{t}");
        assert!(parts[0].ends_with("[*-]") && !parts[0].contains("[*+]"), "{t}");
        assert!(parts[1].starts_with("[*+]") && parts[1].contains("[*-]"), "{t}");
        assert!(parts[2].starts_with("[*+]") && !parts[2].contains("[*-]"), "{t}");
        assert_eq!(t.matches("[*+]").count(), t.matches("[*-]").count());
    }

    #[test]
    fn branching_tree_is_rejected() {
        let g = parse_smiles("N(c1ccccc1)(c1ccncc1)c1ccoc1").unwrap();
        let err = encode_fraglink(&fragment_molecule(&g)).unwrap_err();
        assert!(matches!(err, CodecError::ChainViolation { .. }), "{err}");
    }

    #[test]
    fn round_trips() {
        for s in [
            "CC(=O)Oc1ccccc1C(=O)O",
            "N(c1ccccc1)(c1ccncc1)c1ccoc1",
            "CCN.Cl",
            "Oc1ccccc1.c1ccccc1N",
        ] {
            let g = parse_smiles(s).unwrap();
            let back = decode_fraglink(&encode(s)).unwrap();
            assert!(isomorphic(&g, &back), "{s}");
        }
    }

    #[test]
    fn marker_errors() {
        assert!(matches!(
            decode_fraglink("C[*+]"),
            Err(CodecError::DanglingAttachment { fragment: 0 })
        ));
        assert!(matches!(
            decode_fraglink("C[*-]"),
            Err(CodecError::DanglingAttachment { fragment: 0 })
        ));
        assert!(matches!(
            decode_fraglink("C[*-][SEP]O"),
            Err(CodecError::DanglingAttachment { fragment: 0 })
        ));
        assert!(matches!(
            decode_fraglink("C*[SEP]*O"),
            Err(CodecError::MalformedMarker { .. })
        ));
        assert!(matches!(
            decode_fraglink("[*-]C[*-][SEP][*+]O"),
            Err(CodecError::MalformedMarker { .. })
        ));
        assert!(isomorphic(
            &decode_fraglink("C[*-][SEP][*+]O").unwrap(),
            &parse_smiles("CO").unwrap()
        ));
    }
}
