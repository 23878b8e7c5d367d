//! Canonical SMILES via partition refinement with individualization.
//!
//! Every discrete leaf of the search tree is written out; the
//! lexicographically smallest string wins. Leaves that produce identical
//! strings reveal automorphisms, which prune sibling branches.

use super::graph::MolGraph;
use super::writer::{write_smiles, WriteOptions};

/// Upper bound on leaves visited. Highly symmetric cages may hit it; the
/// result is still deterministic for a given atom order.
const LEAF_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canonical {
    pub smiles: String,
    /// Position of each atom in the canonical traversal, indexed by atom.
    pub ranks: Vec<u32>,
}

pub fn canonicalize(graph: &MolGraph) -> Canonical {
    let n = graph.len();
    let initial = initial_ranks(graph);
    let mut search = Search {
        graph,
        best: None,
        leaves: 0,
    };
    search.node(initial);
    let (smiles, order) = search.best.expect("at least one leaf is visited");
    let mut ranks = vec![0u32; n];
    for (pos, &atom) in order.iter().enumerate() {
        ranks[atom] = pos as u32;
    }
    Canonical { smiles, ranks }
}

pub fn canonical_smiles(graph: &MolGraph) -> String {
    canonicalize(graph).smiles
}

/// Graph isomorphism on the attributes the writer encodes.
pub fn isomorphic(a: &MolGraph, b: &MolGraph) -> bool {
    a.len() == b.len() && a.bonds().len() == b.bonds().len() && canonical_smiles(a) == canonical_smiles(b)
}

fn initial_ranks(graph: &MolGraph) -> Vec<u32> {
    let keys: Vec<_> = (0..graph.len())
        .map(|i| {
            let a = graph.atom(i);
            (
                graph.degree(i),
                a.element.atomic_number(),
                a.aromatic,
                a.formal_charge,
                a.isotope.unwrap_or(0),
                a.hydrogens(),
                a.ring_member,
            )
        })
        .collect();
    ranks_from_keys(&keys)
}

/// Rank of each item = number of items with a strictly smaller key.
fn ranks_from_keys<K: Ord>(keys: &[K]) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0u32; keys.len()];
    for (pos, &i) in idx.iter().enumerate() {
        ranks[i] = if pos > 0 && keys[idx[pos - 1]] == keys[i] {
            ranks[idx[pos - 1]]
        } else {
            pos as u32
        };
    }
    ranks
}

fn class_count(ranks: &[u32]) -> usize {
    let mut seen: Vec<u32> = ranks.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

fn refine(graph: &MolGraph, mut ranks: Vec<u32>) -> Vec<u32> {
    let mut classes = class_count(&ranks);
    loop {
        let keys: Vec<(u32, Vec<(u32, u32)>)> = (0..graph.len())
            .map(|u| {
                let mut nb: Vec<(u32, u32)> = graph
                    .neighbors(u)
                    .iter()
                    .map(|&(v, b)| (ranks[v], graph.bonds()[b].order.code()))
                    .collect();
                nb.sort_unstable();
                (ranks[u], nb)
            })
            .collect();
        let next = ranks_from_keys(&keys);
        let next_classes = class_count(&next);
        ranks = next;
        if next_classes == classes {
            return ranks;
        }
        classes = next_classes;
    }
}

struct Search<'g> {
    graph: &'g MolGraph,
    best: Option<(String, Vec<usize>)>,
    leaves: usize,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl Search<'_> {
    /// Explores the subtree and returns the first leaf found in it.
    fn node(&mut self, ranks: Vec<u32>) -> Option<(String, Vec<usize>)> {
        let ranks = refine(self.graph, ranks);
        let n = ranks.len();
        if class_count(&ranks) == n {
            self.leaves += 1;
            let prio: Vec<u64> = ranks.iter().map(|&r| r as u64).collect();
            let w = write_smiles(self.graph, &prio, &WriteOptions::default());
            let leaf = (w.text, w.order);
            if self.best.as_ref().is_none_or(|b| leaf.0 < b.0) {
                self.best = Some(leaf.clone());
            }
            return Some(leaf);
        }

        // first non-singleton cell, by rank
        let mut sizes = vec![0usize; n];
        for &r in &ranks {
            sizes[r as usize] += 1;
        }
        let target = (0..n).find(|&r| sizes[r] > 1).expect("partition is not discrete") as u32;
        let cell: Vec<usize> = (0..n).filter(|&i| ranks[i] == target).collect();

        let mut orbits = UnionFind((0..n).collect());
        let mut first: Option<(String, Vec<usize>)> = None;
        let mut explored: Vec<usize> = Vec::new();
        for &v in &cell {
            if self.leaves >= LEAF_CAP && first.is_some() {
                break;
            }
            let root_v = orbits.find(v);
            if explored.iter().any(|&e| orbits.find(e) == root_v) {
                continue;
            }
            explored.push(v);
            let mut child = ranks.clone();
            for &w in &cell {
                if w != v {
                    child[w] = target + 1;
                }
            }
            let Some(leaf) = self.node(child) else {
                continue;
            };
            match &first {
                None => first = Some(leaf),
                Some(f) if f.0 == leaf.0 => {
                    for (&a, &b) in f.1.iter().zip(leaf.1.iter()) {
                        orbits.union(a, b);
                    }
                }
                Some(_) => {}
            }
        }
        first
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::smiles::parse_smiles;

    fn canon(s: &str) -> String {
        canonical_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn equivalent_spellings_agree() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C(C)O"), canon("CCO"));
        assert_eq!(canon("c1ccccc1O"), canon("Oc1ccccc1"));
        assert_eq!(canon("C1=CC=CC=C1"), canon("C=1C=CC=CC=1"));
        assert_eq!(canon("[O-]C(=O)C.[Na+]"), canon("[Na+].CC([O-])=O"));
    }

    #[test]
    fn different_molecules_differ() {
        assert_ne!(canon("CCO"), canon("COC"));
        assert_ne!(canon("c1ccccc1"), canon("C1=CC=CC=C1"));
        assert_ne!(canon("[13CH4]"), canon("C"));
    }

    #[test]
    fn canonical_output_reparses_to_same_canonical() {
        for s in [
            "CC(=O)Nc1ccc(O)cc1",
            "C1CC2CCC1C2",
            "C12C3C4C1C5C2C3C45",
            "c1ccc2ccccc2c1",
        ] {
            let c = canon(s);
            assert_eq!(canon(&c), c);
        }
    }

    #[test]
    fn permutation_invariant() {
        let g = parse_smiles("CC(C)Cc1ccc(cc1)C(C)C(=O)O").unwrap();
        let base = canonical_smiles(&g);
        let n = g.len();
        for shift in 1..n {
            let order: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
            let mut seen = order.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != n {
                continue;
            }
            assert_eq!(canonical_smiles(&g.permuted(&order)), base);
        }
        let rev: Vec<usize> = (0..n).rev().collect();
        assert_eq!(canonical_smiles(&g.permuted(&rev)), base);
    }
}
