use serde::{Deserialize, Serialize};

use super::element::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the bond-order sum; aromatic bonds count as one and the
    /// aromatic atom itself adds the shared pi bond.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogen count written inside brackets; `None` for organic-subset atoms.
    pub explicit_h: Option<u8>,
    pub isotope: Option<u16>,
    /// Derived during graph construction.
    pub ring_member: bool,
    implicit_h: u8,
}

impl Atom {
    pub fn organic(element: Element, aromatic: bool) -> Atom {
        Atom {
            element,
            aromatic,
            formal_charge: 0,
            explicit_h: None,
            isotope: None,
            ring_member: false,
            implicit_h: 0,
        }
    }

    pub fn bracket(element: Element, aromatic: bool, formal_charge: i8, hydrogens: u8, isotope: Option<u16>) -> Atom {
        Atom {
            element,
            aromatic,
            formal_charge,
            explicit_h: Some(hydrogens),
            isotope,
            ring_member: false,
            implicit_h: 0,
        }
    }

    pub fn is_bracket(&self) -> bool {
        self.explicit_h.is_some()
    }

    pub fn implicit_h(&self) -> u8 {
        self.implicit_h
    }

    /// Total attached hydrogens, explicit or implicit.
    pub fn hydrogens(&self) -> u8 {
        self.explicit_h.unwrap_or(self.implicit_h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Bond {
        Bond { a, b, order }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphErrorKind {
    EmptyGraph,
    BadEndpoint,
    SelfBond,
    DuplicateBond,
    ValenceExceeded,
    AromaticBondOnAliphaticAtom,
    NonRingAromatic,
    ChargeOutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind:?} at atom {atom}: {message}")]
pub struct GraphError {
    pub kind: GraphErrorKind,
    pub atom: usize,
    pub message: String,
}

impl GraphError {
    fn new(kind: GraphErrorKind, atom: usize, message: impl Into<String>) -> Self {
        GraphError {
            kind,
            atom,
            message: message.into(),
        }
    }
}

/// An attributed molecular graph. Immutable once built; every constructor
/// validates the invariants and derives ring membership and implicit hydrogens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, usize)>>,
    #[serde(skip)]
    ring_bond: Vec<bool>,
}

impl MolGraph {
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<MolGraph, GraphError> {
        let mut graph = MolGraph::unchecked(atoms, bonds)?;
        graph.check_and_derive()?;
        Ok(graph)
    }

    /// Builds adjacency and ring flags but skips chemistry checks.
    pub(crate) fn unchecked(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<MolGraph, GraphError> {
        if atoms.is_empty() {
            return Err(GraphError::new(GraphErrorKind::EmptyGraph, 0, "graph has no atoms"));
        }
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (i, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n {
                return Err(GraphError::new(
                    GraphErrorKind::BadEndpoint,
                    bond.a.min(bond.b),
                    format!("bond {i} references a missing atom"),
                ));
            }
            if bond.a == bond.b {
                return Err(GraphError::new(
                    GraphErrorKind::SelfBond,
                    bond.a,
                    "bond joins an atom to itself",
                ));
            }
            if adjacency[bond.a].iter().any(|&(nb, _)| nb == bond.b) {
                return Err(GraphError::new(
                    GraphErrorKind::DuplicateBond,
                    bond.a,
                    format!("second bond between atoms {} and {}", bond.a, bond.b),
                ));
            }
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        let ring_bond = ring_bonds(n, &bonds, &adjacency);
        let mut atoms = atoms;
        for (idx, atom) in atoms.iter_mut().enumerate() {
            atom.ring_member = adjacency[idx].iter().any(|&(_, b)| ring_bond[b]);
        }
        Ok(MolGraph {
            atoms,
            bonds,
            adjacency,
            ring_bond,
        })
    }

    fn check_and_derive(&mut self) -> Result<(), GraphError> {
        for bond in &self.bonds {
            if bond.order == BondOrder::Aromatic {
                for end in [bond.a, bond.b] {
                    if !self.atoms[end].aromatic {
                        return Err(GraphError::new(
                            GraphErrorKind::AromaticBondOnAliphaticAtom,
                            end,
                            "aromatic bond touches an aliphatic atom",
                        ));
                    }
                }
            }
        }
        for idx in 0..self.atoms.len() {
            let implicit = self.derive_hydrogens(idx)?;
            self.atoms[idx].implicit_h = implicit;
        }
        Ok(())
    }

    fn derive_hydrogens(&self, idx: usize) -> Result<u8, GraphError> {
        let atom = &self.atoms[idx];
        if !(-4..=4).contains(&atom.formal_charge) {
            return Err(GraphError::new(
                GraphErrorKind::ChargeOutOfRange,
                idx,
                format!("formal charge {} outside [-4, 4]", atom.formal_charge),
            ));
        }
        if atom.aromatic && !atom.ring_member {
            return Err(GraphError::new(
                GraphErrorKind::NonRingAromatic,
                idx,
                format!("aromatic {} is not on a ring", atom.element),
            ));
        }
        let Some(allowed) = atom.element.allowed_valences(atom.formal_charge) else {
            return Ok(0);
        };
        let bond_sum: u32 = self.adjacency[idx]
            .iter()
            .map(|&(_, b)| self.bonds[b].order.valence() as u32)
            .sum();
        let max = *allowed.last().expect("allowed valences are non-empty") as u32;
        let used = bond_sum + atom.explicit_h.unwrap_or(0) as u32;
        if used > max {
            return Err(GraphError::new(
                GraphErrorKind::ValenceExceeded,
                idx,
                format!("{} carries valence {used}, maximum is {max}", atom.element),
            ));
        }
        if atom.is_bracket() {
            return Ok(0);
        }
        Ok(implicit_count(atom.aromatic, &allowed, bond_sum))
    }

    /// Hydrogen count the reader would assign if this atom were written
    /// without brackets, or `None` when brackets are required regardless.
    pub(crate) fn plain_hydrogens(&self, idx: usize) -> Option<u8> {
        let atom = &self.atoms[idx];
        if !atom.element.is_organic_subset() || atom.formal_charge != 0 || atom.isotope.is_some() {
            return None;
        }
        if atom.aromatic && !atom.element.can_be_aromatic() {
            return None;
        }
        let Some(allowed) = atom.element.allowed_valences(0) else {
            return Some(0);
        };
        let bond_sum: u32 = self.adjacency[idx]
            .iter()
            .map(|&(_, b)| self.bonds[b].order.valence() as u32)
            .sum();
        Some(implicit_count(atom.aromatic, &allowed, bond_sum))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, idx: usize) -> &Atom {
        &self.atoms[idx]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbor, bond index)` pairs in bond insertion order.
    pub fn neighbors(&self, idx: usize) -> &[(usize, usize)] {
        &self.adjacency[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.adjacency[idx].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|&&(nb, _)| nb == b)
            .map(|&(_, bond)| bond)
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    /// Connected components as sorted atom lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Atom indices grouped into ring systems (atoms joined through ring bonds).
    /// Non-ring atoms get no entry.
    pub fn ring_systems(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] || !self.atoms[start].ring_member {
                continue;
            }
            let mut sys = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < sys.len() {
                let u = sys[i];
                for &(v, b) in &self.adjacency[u] {
                    if self.ring_bond[b] && !seen[v] {
                        seen[v] = true;
                        sys.push(v);
                    }
                }
                i += 1;
            }
            sys.sort_unstable();
            out.push(sys);
        }
        out
    }

    /// Relabels atoms: new index of old atom `i` is `order.iter().position(i)`.
    /// `order` must be a permutation of `0..len`.
    pub fn permuted(&self, order: &[usize]) -> MolGraph {
        let mut new_index = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let atoms = order.iter().map(|&old| self.atoms[old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond::new(new_index[b.a], new_index[b.b], b.order))
            .collect();
        MolGraph::new(atoms, bonds).expect("a permutation of a valid graph is valid")
    }
}

fn implicit_count(aromatic: bool, allowed: &[u8], bond_sum: u32) -> u8 {
    if aromatic {
        // one pi bond is shared with the ring; only the lowest state is eligible
        return (allowed[0] as u32).saturating_sub(bond_sum + 1) as u8;
    }
    let max = *allowed.last().expect("allowed valences are non-empty") as u32;
    let target = allowed
        .iter()
        .map(|&v| v as u32)
        .find(|&v| v >= bond_sum)
        .unwrap_or(max);
    (target - bond_sum) as u8
}

/// Non-bridge bonds, found with an iterative lowlink search.
fn ring_bonds(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    let mut is_ring = vec![true; bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0usize;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, bond used to enter, next adjacency slot)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, via, ref mut slot)) = stack.last_mut() {
            if *slot < adjacency[u].len() {
                let (v, b) = adjacency[u][*slot];
                *slot += 1;
                if b == via {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, b, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[u]);
                    if low[u] > disc[parent] {
                        is_ring[via] = false;
                    }
                }
            }
        }
    }
    is_ring
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carbon_chain(n: usize) -> MolGraph {
        let atoms = (0..n).map(|_| Atom::organic(Element::C, false)).collect();
        let bonds = (1..n).map(|i| Bond::new(i - 1, i, BondOrder::Single)).collect();
        MolGraph::new(atoms, bonds).unwrap()
    }

    #[test]
    fn chain_has_no_rings_and_correct_hydrogens() {
        let g = carbon_chain(3);
        assert!(g.atoms().iter().all(|a| !a.ring_member));
        let h: Vec<u8> = g.atoms().iter().map(Atom::hydrogens).collect();
        assert_eq!(h, vec![3, 2, 3]);
    }

    #[test]
    fn ring_detection_with_tail() {
        // cyclopropane with a methyl
        let atoms = (0..4).map(|_| Atom::organic(Element::C, false)).collect();
        let bonds = vec![
            Bond::new(0, 1, BondOrder::Single),
            Bond::new(1, 2, BondOrder::Single),
            Bond::new(2, 0, BondOrder::Single),
            Bond::new(2, 3, BondOrder::Single),
        ];
        let g = MolGraph::new(atoms, bonds).unwrap();
        assert_eq!(
            g.atoms().iter().map(|a| a.ring_member).collect::<Vec<_>>(),
            vec![true, true, true, false]
        );
        assert!(!g.is_ring_bond(3));
        assert_eq!(g.ring_systems(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn rejects_duplicate_and_self_bonds() {
        let atoms = vec![Atom::organic(Element::C, false), Atom::organic(Element::C, false)];
        let dup = MolGraph::new(
            atoms.clone(),
            vec![Bond::new(0, 1, BondOrder::Single), Bond::new(1, 0, BondOrder::Single)],
        );
        assert_eq!(dup.unwrap_err().kind, GraphErrorKind::DuplicateBond);
        let selfb = MolGraph::new(atoms, vec![Bond::new(1, 1, BondOrder::Single)]);
        assert_eq!(selfb.unwrap_err().kind, GraphErrorKind::SelfBond);
    }

    #[test]
    fn pentavalent_carbon_rejected() {
        let mut atoms = vec![Atom::organic(Element::C, false)];
        atoms.extend((0..5).map(|_| Atom::organic(Element::C, false)));
        let bonds = (1..6).map(|i| Bond::new(0, i, BondOrder::Single)).collect();
        let err = MolGraph::new(atoms, bonds).unwrap_err();
        assert_eq!(err.kind, GraphErrorKind::ValenceExceeded);
        assert_eq!(err.atom, 0);
    }
}
