//! SMILES writer driven by an atom priority order.

use super::graph::{BondOrder, MolGraph};

#[derive(Debug, Clone, Default)]
pub struct WriteOptions<'a> {
    /// Preferred traversal starts, tried in order before falling back to
    /// priority order.
    pub roots: &'a [usize],
    /// Bonds excluded from the spanning tree and always written as
    /// ring-closure labels, which may cross a `.`.
    pub cut_bonds: Option<&'a [bool]>,
}

#[derive(Debug, Clone)]
pub struct Written {
    pub text: String,
    /// Atom indices in the order they appear in `text`.
    pub order: Vec<usize>,
    /// Byte offset of each atom's token, indexed by atom.
    pub offsets: Vec<usize>,
}

/// Writes `graph` visiting lower `priority` values first.
pub fn write_smiles(graph: &MolGraph, priority: &[u64], opts: &WriteOptions<'_>) -> Written {
    let n = graph.len();
    assert_eq!(priority.len(), n, "priority length must match atom count");
    let cut = |b: usize| opts.cut_bonds.is_some_and(|c| c[b]);

    let mut by_priority: Vec<usize> = (0..n).collect();
    by_priority.sort_by_key(|&i| (priority[i], i));
    let sorted_nbrs: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|u| {
            let mut v = graph.neighbors(u).to_vec();
            v.sort_by_key(|&(nb, _)| (priority[nb], nb));
            v
        })
        .collect();

    // spanning forest in DFS preorder
    const NONE: usize = usize::MAX;
    let mut pre = vec![NONE; n];
    let mut parent_bond = vec![NONE; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    let mut counter = 0;
    for &start in opts.roots.iter().chain(by_priority.iter()) {
        if pre[start] != NONE {
            continue;
        }
        roots.push(start);
        pre[start] = counter;
        counter += 1;
        let mut stack = vec![(start, 0usize)];
        while let Some(&mut (u, ref mut slot)) = stack.last_mut() {
            if *slot == sorted_nbrs[u].len() {
                stack.pop();
                continue;
            }
            let (v, b) = sorted_nbrs[u][*slot];
            *slot += 1;
            if cut(b) || pre[v] != NONE {
                continue;
            }
            pre[v] = counter;
            counter += 1;
            parent_bond[v] = b;
            children[u].push(v);
            stack.push((v, 0));
        }
    }

    // ring-closure bonds: opened at the earlier atom, closed at the later
    let mut openings: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut closings: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (b, bond) in graph.bonds().iter().enumerate() {
        if parent_bond[bond.a] == b || parent_bond[bond.b] == b {
            continue;
        }
        let (first, second) = if pre[bond.a] < pre[bond.b] {
            (bond.a, bond.b)
        } else {
            (bond.b, bond.a)
        };
        openings[first].push((pre[second], b));
        closings[second].push((pre[first], b));
    }
    for list in openings.iter_mut().chain(closings.iter_mut()) {
        list.sort_unstable();
    }

    enum Step {
        Atom(usize),
        Open,
        Close,
        Dot,
    }
    let mut steps = Vec::new();
    for (k, &r) in roots.iter().enumerate().rev() {
        steps.push(Step::Atom(r));
        if k > 0 {
            steps.push(Step::Dot);
        }
    }

    let mut text = String::new();
    let mut order = Vec::with_capacity(n);
    let mut offsets = vec![0; n];
    let mut label_of_bond = vec![0u32; graph.bonds().len()];
    let mut in_use: Vec<bool> = Vec::new();

    while let Some(step) = steps.pop() {
        let u = match step {
            Step::Open => {
                text.push('(');
                continue;
            }
            Step::Close => {
                text.push(')');
                continue;
            }
            Step::Dot => {
                text.push('.');
                continue;
            }
            Step::Atom(u) => u,
        };
        if parent_bond[u] != NONE {
            text.push_str(bond_symbol(graph, parent_bond[u]));
        }
        offsets[u] = text.len();
        order.push(u);
        write_atom(graph, u, &mut text);

        let mut released = Vec::new();
        for &(_, b) in &closings[u] {
            let label = label_of_bond[b];
            write_label(label, &mut text);
            released.push(label);
        }
        for &(_, b) in &openings[u] {
            let label = match in_use.iter().position(|used| !used) {
                Some(i) => i,
                None => {
                    in_use.push(false);
                    in_use.len() - 1
                }
            };
            in_use[label] = true;
            label_of_bond[b] = label as u32 + 1;
            text.push_str(bond_symbol(graph, b));
            write_label(label as u32 + 1, &mut text);
        }
        for label in released {
            in_use[label as usize - 1] = false;
        }

        let kids = &children[u];
        for (k, &c) in kids.iter().enumerate().rev() {
            if k + 1 == kids.len() {
                steps.push(Step::Atom(c));
            } else {
                steps.push(Step::Close);
                steps.push(Step::Atom(c));
                steps.push(Step::Open);
            }
        }
    }

    Written { text, order, offsets }
}

fn write_label(label: u32, out: &mut String) {
    use std::fmt::Write;
    if label < 10 {
        let _ = write!(out, "{label}");
    } else if label < 100 {
        let _ = write!(out, "%{label}");
    } else {
        let _ = write!(out, "%({label})");
    }
}

fn bond_symbol(graph: &MolGraph, b: usize) -> &'static str {
    let bond = graph.bonds()[b];
    let both_aromatic = graph.atom(bond.a).aromatic && graph.atom(bond.b).aromatic;
    match bond.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if graph.is_ring_bond(b) => "",
        BondOrder::Aromatic => ":",
    }
}

pub(crate) fn write_atom(graph: &MolGraph, idx: usize, out: &mut String) {
    use std::fmt::Write;
    let atom = graph.atom(idx);
    let symbol = atom.element.symbol();
    let plain = graph.plain_hydrogens(idx) == Some(atom.hydrogens());
    if plain {
        if atom.aromatic {
            out.push_str(&symbol.to_ascii_lowercase());
        } else {
            out.push_str(symbol);
        }
        return;
    }
    out.push('[');
    if let Some(iso) = atom.isotope {
        let _ = write!(out, "{iso}");
    }
    if atom.aromatic {
        out.push_str(&symbol.to_ascii_lowercase());
    } else {
        out.push_str(symbol);
    }
    match atom.hydrogens() {
        0 => {}
        1 => out.push('H'),
        h => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        q if q > 0 => {
            let _ = write!(out, "+{q}");
        }
        q => {
            let _ = write!(out, "-{}", -q);
        }
    }
    out.push(']');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::smiles::parse_smiles;

    fn rewrite(text: &str) -> String {
        let g = parse_smiles(text).unwrap();
        let prio: Vec<u64> = (0..g.len() as u64).collect();
        write_smiles(&g, &prio, &WriteOptions::default()).text
    }

    #[test]
    fn identity_order_reproduces_simple_input() {
        for s in [
            "CCO",
            "CC(=O)O",
            "c1ccccc1",
            "C1CC1",
            "C#N",
            "[NH4+]",
            "[13CH4]",
            "c1cc[nH]c1",
            "C.O",
        ] {
            assert_eq!(rewrite(s), s);
        }
    }

    #[test]
    fn bracket_hydrogens_normalised() {
        assert_eq!(rewrite("[CH3][CH2][OH]"), "CCO");
        assert_eq!(rewrite("[CH2]"), "[CH2]");
    }

    #[test]
    fn aromatic_single_links_get_dash() {
        assert_eq!(rewrite("c1ccccc1-c1ccccc1"), "c1ccccc1-c1ccccc1");
        assert_eq!(rewrite("c1ccccc1c1ccccc1"), "c1ccccc1-c1ccccc1");
    }

    #[test]
    fn start_from_terminal_oxygen() {
        let g = parse_smiles("CCO").unwrap();
        let w = write_smiles(&g, &[1, 1, 0], &WriteOptions::default());
        assert_eq!(w.text, "OCC");
        assert_eq!(w.order, vec![2, 1, 0]);
        assert_eq!(w.offsets, vec![2, 1, 0]);
    }

    #[test]
    fn round_trip_preserves_graph() {
        for s in [
            "C1CC2CCC1C2",
            "OC(=O)c1ccc2ccccc2c1",
            "C1CCCCCCCCCCC1",
            "CC(C)(C)C(=O)[O-].[Na+]",
        ] {
            let g = parse_smiles(s).unwrap();
            let again = parse_smiles(&rewrite(s)).unwrap();
            assert_eq!(g.len(), again.len());
            assert_eq!(g.bonds().len(), again.bonds().len());
        }
    }

    #[test]
    fn cut_bonds_cross_dots() {
        let g = parse_smiles("c1ccccc1C").unwrap();
        let mut cut = vec![false; g.bonds().len()];
        let link = g.bond_between(5, 6).unwrap();
        cut[link] = true;
        let prio: Vec<u64> = (0..g.len() as u64).collect();
        let w = write_smiles(
            &g,
            &prio,
            &WriteOptions {
                roots: &[],
                cut_bonds: Some(&cut),
            },
        );
        assert_eq!(w.text, "c1ccccc12.C2");
        assert_eq!(parse_smiles(&w.text).unwrap().bonds().len(), 7);
    }
}
