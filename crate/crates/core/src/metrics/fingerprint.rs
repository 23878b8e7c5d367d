//! Circular (Morgan-style) fingerprints folded to 2048 bits.
//!
//! Atom invariants and the per-layer update use 32-bit `hash_combine`
//! mixing over sorted (bond type, neighbour id) pairs. Environments that cover
//! a bond set already seen are dropped, so each substructure sets one bit.
//! Isotopes do not enter the atom invariant.

use crate::chem::{BondOrder, MolGraph};

pub const FINGERPRINT_BITS: usize = 2048;
pub const FINGERPRINT_RADIUS: usize = 2;
const WORDS: usize = FINGERPRINT_BITS / 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: [u64; WORDS],
}

impl std::fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fingerprint")
            .field("on_bits", &self.on_bits().collect::<Vec<_>>())
            .finish()
    }
}

impl Fingerprint {
    pub fn empty() -> Fingerprint {
        Fingerprint { words: [0; WORDS] }
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn on_bits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..FINGERPRINT_BITS).filter(|&b| self.get(b))
    }
}

/// Intersection over union of on-bits; 0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let (mut both, mut either) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        both += (x & y).count_ones();
        either += (x | y).count_ones();
    }
    if either == 0 {
        0.0
    } else {
        f64::from(both) / f64::from(either)
    }
}

fn combine(seed: u32, value: u32) -> u32 {
    seed ^ value
        .wrapping_add(0x9e37_79b9)
        .wrapping_add(seed << 6)
        .wrapping_add(seed >> 2)
}

fn hash_all(values: &[u32]) -> u32 {
    values.iter().fold(0, |s, &v| combine(s, v))
}

fn bond_code(order: BondOrder) -> u32 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 12,
    }
}

fn atom_invariant(g: &MolGraph, i: usize) -> u32 {
    let a = g.atom(i);
    let h = u32::from(a.hydrogens());
    let mut parts = vec![
        u32::from(a.element.atomic_number()),
        g.degree(i) as u32 + h,
        h,
        i32::from(a.formal_charge) as u32,
        0,
    ];
    if a.ring_member {
        parts.push(1);
    }
    hash_all(&parts)
}

/// Unfolded 32-bit environment identifiers up to `radius`.
pub fn environment_ids(g: &MolGraph, radius: usize) -> Vec<u32> {
    let n = g.len();
    let words = g.bonds().len().div_ceil(64).max(1);
    let mut current: Vec<u32> = (0..n).map(|i| atom_invariant(g, i)).collect();
    let mut ids = current.clone();
    let mut hood: Vec<Vec<u64>> = vec![vec![0; words]; n];
    let mut dead = vec![false; n];
    let mut seen: Vec<Vec<u64>> = Vec::new();
    for layer in 0..radius {
        let mut next = current.clone();
        let mut next_hood = hood.clone();
        let mut round: Vec<(Vec<u64>, u32, usize)> = Vec::new();
        for i in 0..n {
            if dead[i] {
                continue;
            }
            if g.degree(i) == 0 {
                dead[i] = true;
                continue;
            }
            let mut mask = hood[i].clone();
            let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(g.degree(i));
            for &(j, b) in g.neighbors(i) {
                pairs.push((bond_code(g.bonds()[b].order), current[j]));
                for (m, o) in mask.iter_mut().zip(&hood[j]) {
                    *m |= o;
                }
                mask[b / 64] |= 1 << (b % 64);
            }
            pairs.sort_unstable();
            let mut v = combine(layer as u32, current[i]);
            for (bond, nbr) in pairs {
                v = combine(v, hash_all(&[bond, nbr]));
            }
            next[i] = v;
            round.push((mask.clone(), v, i));
            next_hood[i] = mask;
        }
        round.sort();
        for (mask, v, i) in round {
            if seen.contains(&mask) {
                dead[i] = true;
            } else {
                seen.push(mask);
                ids.push(v);
            }
        }
        current = next;
        hood = next_hood;
    }
    ids.sort_unstable();
    ids.dedup();
    ids
}

pub fn fingerprint(g: &MolGraph) -> Fingerprint {
    let mut fp = Fingerprint::empty();
    for id in environment_ids(g, FINGERPRINT_RADIUS) {
        fp.set(id as usize % FINGERPRINT_BITS);
    }
    fp
}
