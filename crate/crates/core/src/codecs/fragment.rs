//! Cutting a molecule into fragments with `*` attachment points, and the
//! shared machinery for putting them back together.

use std::collections::VecDeque;

use serde::Serialize;

use super::CodecError;
use crate::chem::{canonicalize, parse_smiles_detailed, Atom, Bond, BondOrder, Element, MolGraph, ParseDiagnostic};

/// One cut bond: attachment atom `from_slot` of fragment `from` joins
/// attachment atom `to_slot` of fragment `to`. Slots are atom indices of
/// wildcard atoms inside the fragment graphs; `from < to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FragmentLink {
    pub from: usize,
    pub from_slot: usize,
    pub to: usize,
    pub to_slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FragmentSeq {
    pub fragments: Vec<MolGraph>,
    pub links: Vec<FragmentLink>,
    /// Set when every link joins consecutive fragments.
    pub chain_constrained: bool,
}

impl FragmentSeq {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    /// Links touching fragment `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.links.iter().filter(|l| l.from == i || l.to == i).count()
    }

    /// Joins every link back into one graph.
    pub fn reassemble(&self) -> Result<MolGraph, CodecError> {
        let pairs: Vec<_> = self
            .links
            .iter()
            .map(|l| ((l.from, l.from_slot), (l.to, l.to_slot)))
            .collect();
        let refs: Vec<&MolGraph> = self.fragments.iter().collect();
        join_fragments(&refs, &pairs)
    }
}

/// Bonds the fragmentation rule allows to be cut: acyclic, single, with a
/// ring atom or heteroatom on at least one end.
pub fn cuttable_bonds(graph: &MolGraph) -> Vec<bool> {
    graph
        .bonds()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let (x, y) = (graph.atom(b.a), graph.atom(b.b));
            let hydrogen = x.element == Element::H || y.element == Element::H;
            let wildcard = x.element == Element::Wildcard || y.element == Element::Wildcard;
            b.order == BondOrder::Single
                && !graph.is_ring_bond(i)
                && !hydrogen
                && !wildcard
                && (x.ring_member || y.ring_member || x.element.is_heteroatom() || y.element.is_heteroatom())
        })
        .collect()
}

/// Fragments ordered by their first atom in the canonical traversal.
pub fn fragment_molecule(graph: &MolGraph) -> FragmentSeq {
    let ranks = canonicalize(graph).ranks;
    let cut = cuttable_bonds(graph);
    build_fragments(graph, &ranks, &cut)
}

/// Like [`fragment_molecule`], but merges side branches of the fragment tree
/// into their neighbours on its longest path so the result is a chain.
pub fn fragment_molecule_chain(graph: &MolGraph) -> FragmentSeq {
    let ranks = canonicalize(graph).ranks;
    let mut cut = cuttable_bonds(graph);
    let parts = components_without(graph, &cut);
    let nparts = parts.iter().max().map_or(0, |m| m + 1);

    // fragment tree, one node per part
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nparts];
    for (b, bond) in graph.bonds().iter().enumerate() {
        if cut[b] {
            adj[parts[bond.a]].push((parts[bond.b], b));
            adj[parts[bond.b]].push((parts[bond.a], b));
        }
    }
    let mut min_rank = vec![u32::MAX; nparts];
    for (atom, &p) in parts.iter().enumerate() {
        min_rank[p] = min_rank[p].min(ranks[atom]);
    }

    let mut tree_seen = vec![false; nparts];
    let mut by_rank: Vec<usize> = (0..nparts).collect();
    by_rank.sort_by_key(|&p| min_rank[p]);
    for &start in &by_rank {
        if tree_seen[start] {
            continue;
        }
        let (far, _) = farthest(&adj, start, &min_rank);
        let (other, parent) = farthest(&adj, far, &min_rank);
        let mut on_path = vec![false; nparts];
        let mut cur = other;
        on_path[cur] = true;
        while let Some((p, _)) = parent[cur] {
            cur = p;
            on_path[cur] = true;
        }
        // keep only the cuts along the path
        for (p, _) in parent.iter().enumerate().filter(|(_, par)| par.is_some()) {
            tree_seen[p] = true;
        }
        tree_seen[far] = true;
        for (p, par) in parent.iter().enumerate() {
            if let Some((q, b)) = *par {
                if !(on_path[p] && on_path[q]) {
                    cut[b] = false;
                }
            }
        }
    }
    let mut seq = build_fragments(graph, &ranks, &cut);
    order_as_chain(&mut seq);
    seq
}

/// Farthest part from `start` (ties to the lowest canonical rank), with the
/// BFS parent pointers `(parent part, bond)`.
#[allow(clippy::type_complexity)]
fn farthest(adj: &[Vec<(usize, usize)>], start: usize, min_rank: &[u32]) -> (usize, Vec<Option<(usize, usize)>>) {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![None; n];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = start;
    while let Some(u) = queue.pop_front() {
        if (dist[u], std::cmp::Reverse(min_rank[u])) > (dist[best], std::cmp::Reverse(min_rank[best])) {
            best = u;
        }
        let mut next: Vec<(usize, usize)> = adj[u].iter().copied().filter(|&(v, _)| dist[v] == usize::MAX).collect();
        next.sort_by_key(|&(v, _)| min_rank[v]);
        for (v, b) in next {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                parent[v] = Some((u, b));
                queue.push_back(v);
            }
        }
    }
    (best, parent)
}

/// Reorders each connected chain so links join consecutive fragments,
/// starting from the end holding the lower canonical rank (already the lower
/// index after [`build_fragments`]).
fn order_as_chain(seq: &mut FragmentSeq) {
    let n = seq.fragments.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for l in &seq.links {
        adj[l.from].push(l.to);
        adj[l.to].push(l.from);
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] || adj[start].len() > 1 {
            continue;
        }
        // walk the chain from this end
        let mut prev = usize::MAX;
        let mut cur = start;
        loop {
            seen[cur] = true;
            order.push(cur);
            match adj[cur].iter().copied().find(|&v| v != prev && !seen[v]) {
                Some(next) => {
                    prev = cur;
                    cur = next;
                }
                None => break,
            }
        }
    }
    debug_assert_eq!(order.len(), n, "every chain has an end");
    let mut new_index = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let fragments = order.iter().map(|&old| seq.fragments[old].clone()).collect();
    let mut links: Vec<FragmentLink> = seq
        .links
        .iter()
        .map(|l| {
            let (a, sa, b, sb) = (new_index[l.from], l.from_slot, new_index[l.to], l.to_slot);
            if a < b {
                FragmentLink {
                    from: a,
                    from_slot: sa,
                    to: b,
                    to_slot: sb,
                }
            } else {
                FragmentLink {
                    from: b,
                    from_slot: sb,
                    to: a,
                    to_slot: sa,
                }
            }
        })
        .collect();
    links.sort_by_key(|l| (l.from, l.to));
    seq.chain_constrained = links.iter().all(|l| l.to == l.from + 1);
    seq.fragments = fragments;
    seq.links = links;
}

/// Component id of every atom once `cut` bonds are removed, numbered in
/// order of smallest atom index.
fn components_without(graph: &MolGraph, cut: &[bool]) -> Vec<usize> {
    let n = graph.len();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(v, b) in graph.neighbors(u) {
                if !cut[b] && comp[v] == usize::MAX {
                    comp[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    comp
}

fn build_fragments(graph: &MolGraph, ranks: &[u32], cut: &[bool]) -> FragmentSeq {
    let parts = components_without(graph, cut);
    let nparts = parts.iter().max().map_or(0, |m| m + 1);
    let mut min_rank = vec![u32::MAX; nparts];
    for (atom, &p) in parts.iter().enumerate() {
        min_rank[p] = min_rank[p].min(ranks[atom]);
    }
    let mut order: Vec<usize> = (0..nparts).collect();
    order.sort_by_key(|&p| min_rank[p]);
    let mut frag_of_part = vec![0; nparts];
    for (f, &p) in order.iter().enumerate() {
        frag_of_part[p] = f;
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); nparts];
    for atom in 0..graph.len() {
        members[frag_of_part[parts[atom]]].push(atom);
    }
    let mut local = vec![0usize; graph.len()];
    for m in &members {
        for (i, &atom) in m.iter().enumerate() {
            local[atom] = i;
        }
    }

    let mut atoms: Vec<Vec<Atom>> = members
        .iter()
        .map(|m| m.iter().map(|&a| graph.atom(a).clone()).collect())
        .collect();
    let mut bonds: Vec<Vec<Bond>> = vec![Vec::new(); nparts];
    let mut cut_list: Vec<usize> = Vec::new();
    for (b, bond) in graph.bonds().iter().enumerate() {
        if cut[b] {
            cut_list.push(b);
        } else {
            let f = frag_of_part[parts[bond.a]];
            bonds[f].push(Bond::new(local[bond.a], local[bond.b], bond.order));
        }
    }
    // deterministic slot numbering: by canonical rank of the attached atom
    cut_list.sort_by_key(|&b| {
        let bond = graph.bonds()[b];
        let (lo, hi) = (ranks[bond.a].min(ranks[bond.b]), ranks[bond.a].max(ranks[bond.b]));
        (lo, hi)
    });
    let mut links = Vec::with_capacity(cut_list.len());
    for b in cut_list {
        let bond = graph.bonds()[b];
        let mut add_star = |atom: usize| {
            let f = frag_of_part[parts[atom]];
            let slot = atoms[f].len();
            atoms[f].push(Atom::organic(Element::Wildcard, false));
            bonds[f].push(Bond::new(local[atom], slot, bond.order));
            (f, slot)
        };
        let (fa, sa) = add_star(bond.a);
        let (fb, sb) = add_star(bond.b);
        let link = if fa < fb {
            FragmentLink {
                from: fa,
                from_slot: sa,
                to: fb,
                to_slot: sb,
            }
        } else {
            FragmentLink {
                from: fb,
                from_slot: sb,
                to: fa,
                to_slot: sa,
            }
        };
        links.push(link);
    }
    links.sort_by_key(|l| (l.from, l.to, l.from_slot));

    let fragments = atoms
        .into_iter()
        .zip(bonds)
        .map(|(a, b)| MolGraph::new(a, b).expect("fragments of a valid graph are valid"))
        .collect();
    let chain_constrained = links.iter().all(|l| l.to == l.from + 1);
    FragmentSeq {
        fragments,
        links,
        chain_constrained,
    }
}

/// A fragment read back from text, with its wildcard atoms in text order.
pub(crate) struct ParsedFragment {
    pub graph: MolGraph,
    pub stars: Vec<usize>,
}

pub(crate) const SEPARATOR: &str = "[SEP]";

pub(crate) fn parse_fragments(text: &str) -> Result<Vec<ParsedFragment>, CodecError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for (k, piece) in text.split(SEPARATOR).enumerate() {
        let parsed = parse_smiles_detailed(piece)
            .map_err(|d| CodecError::InvalidOutput(ParseDiagnostic::new(d.position + offset, d.kind, d.message)))?;
        let graph = parsed.graph;
        let stars: Vec<usize> = (0..graph.len())
            .filter(|&i| graph.atom(i).element == Element::Wildcard)
            .collect();
        for &s in &stars {
            if graph.degree(s) != 1 {
                return Err(CodecError::MalformedMarker {
                    fragment: k,
                    message: format!("attachment point bonded to {} atoms", graph.degree(s)),
                });
            }
        }
        out.push(ParsedFragment { graph, stars });
        offset += piece.len() + SEPARATOR.len();
    }
    Ok(out)
}

/// Removes paired wildcard atoms and bonds their neighbours directly.
pub(crate) fn join_fragments(
    fragments: &[&MolGraph],
    pairs: &[((usize, usize), (usize, usize))],
) -> Result<MolGraph, CodecError> {
    let mut paired: Vec<Vec<bool>> = fragments.iter().map(|g| vec![false; g.len()]).collect();
    for &((fa, sa), (fb, sb)) in pairs {
        paired[fa][sa] = true;
        paired[fb][sb] = true;
    }
    let mut global: Vec<Vec<usize>> = Vec::with_capacity(fragments.len());
    let mut atoms = Vec::new();
    for (f, g) in fragments.iter().enumerate() {
        let mut map = vec![usize::MAX; g.len()];
        for i in 0..g.len() {
            if !paired[f][i] {
                map[i] = atoms.len();
                atoms.push(g.atom(i).clone());
            }
        }
        global.push(map);
    }
    let mut bonds = Vec::new();
    for (f, g) in fragments.iter().enumerate() {
        for b in g.bonds() {
            if !paired[f][b.a] && !paired[f][b.b] {
                bonds.push(Bond::new(global[f][b.a], global[f][b.b], b.order));
            }
        }
    }
    for &((fa, sa), (fb, sb)) in pairs {
        let (na, oa) = star_neighbor(fragments[fa], sa);
        let (nb, ob) = star_neighbor(fragments[fb], sb);
        if oa != ob {
            return Err(CodecError::MalformedMarker {
                fragment: fb,
                message: "paired attachment bonds disagree in order".into(),
            });
        }
        bonds.push(Bond::new(global[fa][na], global[fb][nb], oa));
    }
    MolGraph::new(atoms, bonds).map_err(|e| CodecError::InvalidOutput(ParseDiagnostic::from_graph(e, &[])))
}

fn star_neighbor(g: &MolGraph, star: usize) -> (usize, BondOrder) {
    let (nb, b) = g.neighbors(star)[0];
    (nb, g.bonds()[b].order)
}
