//! SMILES reader.
//!
//! Supported: the organic subset, bracket atoms (isotope, charge, hydrogen
//! count, atom class), ring closures `1`-`9`, `%nn` and `%(n)`, bond symbols
//! `- = # :` and branches. Stereo marks (`@`, `/`, `\`) are accepted and
//! counted but carry no meaning in the graph. `.` separates components; ring
//! closures may span a `.`.

use std::collections::HashMap;

use super::diagnostic::{DiagnosticKind, ParseDiagnostic};
use super::element::Element;
use super::graph::{Atom, Bond, BondOrder, MolGraph};

/// Result of a successful parse, with the byte offset of every atom.
#[derive(Debug, Clone)]
pub struct ParsedSmiles {
    pub graph: MolGraph,
    pub atom_offsets: Vec<usize>,
    /// Number of stereo marks seen and discarded.
    pub stereo_marks: usize,
}

pub fn parse_smiles(text: &str) -> Result<MolGraph, ParseDiagnostic> {
    parse_smiles_detailed(text).map(|p| p.graph)
}

pub fn parse_smiles_detailed(text: &str) -> Result<ParsedSmiles, ParseDiagnostic> {
    Parser::new(text.as_bytes()).run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
    Directional,
}

impl BondSym {
    fn from_byte(b: u8) -> Option<BondSym> {
        Some(match b {
            b'-' => BondSym::Single,
            b'=' => BondSym::Double,
            b'#' => BondSym::Triple,
            b':' => BondSym::Aromatic,
            b'/' | b'\\' => BondSym::Directional,
            _ => return None,
        })
    }

    fn order(self) -> BondOrder {
        match self {
            BondSym::Single | BondSym::Directional => BondOrder::Single,
            BondSym::Double => BondOrder::Double,
            BondSym::Triple => BondOrder::Triple,
            BondSym::Aromatic => BondOrder::Aromatic,
        }
    }

    /// Directional marks are single bonds for matching purposes.
    fn same_as(self, other: BondSym) -> bool {
        self.order() == other.order()
    }
}

struct PendingBond {
    a: usize,
    b: usize,
    sym: Option<BondSym>,
}

struct RingOpen {
    atom: usize,
    sym: Option<BondSym>,
    offset: usize,
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    atoms: Vec<Atom>,
    offsets: Vec<usize>,
    bonds: Vec<PendingBond>,
    prev: Option<usize>,
    branches: Vec<(Option<usize>, usize)>,
    pending: Option<(BondSym, usize)>,
    rings: HashMap<u32, RingOpen>,
    stereo_marks: usize,
    /// Set right after `(` until the first atom of the branch.
    branch_empty: bool,
    /// The last token was an atom or a ring label, so a ring label may follow.
    ring_ok: bool,
}

impl<'a> Parser<'a> {
    fn new(s: &'a [u8]) -> Self {
        Parser {
            s,
            i: 0,
            atoms: Vec::new(),
            offsets: Vec::new(),
            bonds: Vec::new(),
            prev: None,
            branches: Vec::new(),
            pending: None,
            rings: HashMap::new(),
            stereo_marks: 0,
            branch_empty: false,
            ring_ok: false,
        }
    }

    fn err(&self, pos: usize, kind: DiagnosticKind, msg: impl Into<String>) -> ParseDiagnostic {
        ParseDiagnostic::new(pos, kind, msg)
    }

    fn run(mut self) -> Result<ParsedSmiles, ParseDiagnostic> {
        if self.s.is_empty() {
            return Err(self.err(0, DiagnosticKind::EmptyInput, "empty input"));
        }
        while self.i < self.s.len() {
            let c = self.s[self.i];
            let start = self.i;
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(self.err(
                            start,
                            DiagnosticKind::UnmatchedParen,
                            "branch opens without a preceding atom",
                        ));
                    };
                    if self.branch_empty {
                        return Err(self.err(
                            start,
                            DiagnosticKind::UnmatchedParen,
                            "branch opens inside an empty branch",
                        ));
                    }
                    if let Some((_, pos)) = self.pending {
                        return Err(self.err(pos, DiagnosticKind::BadBond, "bond symbol before '('"));
                    }
                    self.branches.push((Some(prev), start));
                    self.branch_empty = true;
                    self.ring_ok = false;
                    self.i += 1;
                }
                b')' => {
                    let Some((atom, _)) = self.branches.pop() else {
                        return Err(self.err(start, DiagnosticKind::UnmatchedParen, "')' without matching '('"));
                    };
                    if self.branch_empty {
                        return Err(self.err(start, DiagnosticKind::UnmatchedParen, "empty branch"));
                    }
                    if let Some((_, pos)) = self.pending {
                        return Err(self.err(pos, DiagnosticKind::BadBond, "bond symbol at end of branch"));
                    }
                    self.prev = atom;
                    self.ring_ok = false;
                    self.i += 1;
                }
                b'.' => {
                    if let Some((_, pos)) = self.pending {
                        return Err(self.err(pos, DiagnosticKind::BadBond, "bond symbol before '.'"));
                    }
                    if self.prev.is_none() || self.branch_empty {
                        return Err(self.err(start, DiagnosticKind::UnknownSymbol, "'.' must follow an atom"));
                    }
                    self.prev = None;
                    self.ring_ok = false;
                    self.i += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if let Some((_, pos)) = self.pending {
                        return Err(self.err(pos, DiagnosticKind::BadBond, "two consecutive bond symbols"));
                    }
                    if self.prev.is_none() {
                        return Err(self.err(start, DiagnosticKind::BadBond, "bond symbol without a preceding atom"));
                    }
                    let sym = BondSym::from_byte(c).expect("matched bond byte");
                    if sym == BondSym::Directional {
                        self.stereo_marks += 1;
                    }
                    self.pending = Some((sym, start));
                    self.i += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let label = self.ring_label()?;
                    self.ring_closure(label, start)?;
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, start);
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, start);
                }
            }
        }
        if let Some((_, pos)) = self.pending {
            return Err(self.err(pos, DiagnosticKind::BadBond, "dangling bond symbol"));
        }
        if let Some(&(_, pos)) = self.branches.last() {
            return Err(self.err(pos, DiagnosticKind::UnmatchedParen, "unclosed branch"));
        }
        if let Some(open) = self.rings.values().min_by_key(|r| r.offset) {
            return Err(self.err(open.offset, DiagnosticKind::UnclosedRing, "ring bond never closed"));
        }
        self.finish()
    }

    fn add_atom(&mut self, atom: Atom, offset: usize) {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        self.offsets.push(offset);
        if let Some(prev) = self.prev {
            let sym = self.pending.take().map(|(s, _)| s);
            self.bonds.push(PendingBond { a: prev, b: idx, sym });
        }
        self.prev = Some(idx);
        self.branch_empty = false;
        self.ring_ok = true;
    }

    fn ring_label(&mut self) -> Result<u32, ParseDiagnostic> {
        let start = self.i;
        let c = self.s[self.i];
        if c != b'%' {
            self.i += 1;
            return Ok((c - b'0') as u32);
        }
        let bad = |p: &Self| p.err(start, DiagnosticKind::UnknownSymbol, "malformed '%' ring label");
        if self.s.get(self.i + 1) == Some(&b'(') {
            let mut j = self.i + 2;
            let mut value: u32 = 0;
            while j < self.s.len() && self.s[j].is_ascii_digit() && j - self.i < 8 {
                value = value * 10 + (self.s[j] - b'0') as u32;
                j += 1;
            }
            if j == self.i + 2 || self.s.get(j) != Some(&b')') {
                return Err(bad(self));
            }
            self.i = j + 1;
            return Ok(value);
        }
        match (self.s.get(self.i + 1), self.s.get(self.i + 2)) {
            (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                self.i += 3;
                Ok(((a - b'0') * 10 + (b - b'0')) as u32)
            }
            _ => Err(bad(self)),
        }
    }

    fn ring_closure(&mut self, label: u32, offset: usize) -> Result<(), ParseDiagnostic> {
        let Some(atom) = self.prev else {
            return Err(self.err(
                offset,
                DiagnosticKind::UnknownSymbol,
                "ring label without a preceding atom",
            ));
        };
        if !self.ring_ok {
            return Err(self.err(offset, DiagnosticKind::UnknownSymbol, "ring label must follow an atom"));
        }
        let sym = self.pending.take().map(|(s, _)| s);
        match self.rings.remove(&label) {
            Some(open) => {
                if open.atom == atom {
                    return Err(self.err(offset, DiagnosticKind::BadBond, "ring bond closes on its own atom"));
                }
                let sym = match (open.sym, sym) {
                    (Some(a), Some(b)) if !a.same_as(b) => {
                        return Err(self.err(offset, DiagnosticKind::BadBond, "conflicting ring bond symbols"));
                    }
                    (Some(a), _) => Some(a),
                    (None, b) => b,
                };
                self.bonds.push(PendingBond {
                    a: open.atom,
                    b: atom,
                    sym,
                });
            }
            None => {
                self.rings.insert(label, RingOpen { atom, sym, offset });
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, ParseDiagnostic> {
        let start = self.i;
        let c = self.s[self.i];
        let next = self.s.get(self.i + 1).copied();
        let (element, aromatic, width) = match c {
            b'C' if next == Some(b'l') => (Element::Cl, false, 2),
            b'B' if next == Some(b'r') => (Element::Br, false, 2),
            b'B' => (Element::B, false, 1),
            b'C' => (Element::C, false, 1),
            b'N' => (Element::N, false, 1),
            b'O' => (Element::O, false, 1),
            b'P' => (Element::P, false, 1),
            b'S' => (Element::S, false, 1),
            b'F' => (Element::F, false, 1),
            b'I' => (Element::I, false, 1),
            b'*' => (Element::Wildcard, false, 1),
            b'b' => (Element::B, true, 1),
            b'c' => (Element::C, true, 1),
            b'n' => (Element::N, true, 1),
            b'o' => (Element::O, true, 1),
            b'p' => (Element::P, true, 1),
            b's' => (Element::S, true, 1),
            _ => {
                return Err(self.err(
                    start,
                    DiagnosticKind::UnknownSymbol,
                    format!("unexpected byte 0x{c:02x}"),
                ));
            }
        };
        self.i += width;
        Ok(Atom::organic(element, aromatic))
    }

    fn bracket_atom(&mut self) -> Result<Atom, ParseDiagnostic> {
        let start = self.i;
        let bad = |msg: &str| ParseDiagnostic::new(start, DiagnosticKind::BadBracketAtom, msg);
        let s = self.s;
        let mut j = self.i + 1;

        let mut isotope: Option<u32> = None;
        while j < s.len() && s[j].is_ascii_digit() {
            let v = isotope.unwrap_or(0) * 10 + (s[j] - b'0') as u32;
            if v > 999 {
                return Err(bad("isotope out of range"));
            }
            isotope = Some(v);
            j += 1;
        }
        if isotope == Some(0) {
            return Err(bad("isotope must be positive"));
        }

        let (element, aromatic, width) = bracket_symbol(&s[j.min(s.len())..]).ok_or_else(|| bad("unknown element"))?;
        j += width;

        // chirality: recorded and dropped
        if s.get(j) == Some(&b'@') {
            self.stereo_marks += 1;
            j += 1;
            if s.get(j) == Some(&b'@') {
                j += 1;
            } else if j + 1 < s.len() && matches!(&s[j..j + 2], b"TH" | b"AL" | b"SP" | b"TB" | b"OH") {
                j += 2;
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
            }
        }

        let mut hydrogens: u8 = 0;
        if s.get(j) == Some(&b'H') {
            j += 1;
            hydrogens = 1;
            if let Some(d) = s.get(j).filter(|d| d.is_ascii_digit()) {
                hydrogens = d - b'0';
                j += 1;
            }
        }

        let mut charge: i32 = 0;
        if let Some(&sign @ (b'+' | b'-')) = s.get(j) {
            let unit = if sign == b'+' { 1 } else { -1 };
            j += 1;
            if let Some(d) = s.get(j).filter(|d| d.is_ascii_digit()) {
                let mut mag = (d - b'0') as i32;
                j += 1;
                if let Some(d2) = s.get(j).filter(|d| d.is_ascii_digit()) {
                    mag = mag * 10 + (d2 - b'0') as i32;
                    j += 1;
                }
                charge = unit * mag;
            } else {
                charge = unit;
                while s.get(j) == Some(&sign) {
                    charge += unit;
                    j += 1;
                }
            }
        }
        if !(-4..=4).contains(&charge) {
            return Err(bad("formal charge outside [-4, 4]"));
        }

        if s.get(j) == Some(&b':') {
            j += 1;
            let class_start = j;
            while j < s.len() && s[j].is_ascii_digit() {
                j += 1;
            }
            if j == class_start {
                return Err(bad("atom class needs digits"));
            }
        }

        if s.get(j) != Some(&b']') {
            return Err(bad("malformed bracket atom"));
        }
        self.i = j + 1;
        Ok(Atom::bracket(
            element,
            aromatic,
            charge as i8,
            hydrogens,
            isotope.map(|v| v as u16),
        ))
    }

    fn finish(self) -> Result<ParsedSmiles, ParseDiagnostic> {
        let offsets = self.offsets;
        let provisional: Vec<Bond> = self
            .bonds
            .iter()
            .map(|b| Bond::new(b.a, b.b, b.sym.map_or(BondOrder::Single, BondSym::order)))
            .collect();
        let probe = MolGraph::unchecked(self.atoms.clone(), provisional)
            .map_err(|e| ParseDiagnostic::from_graph(e, &offsets))?;
        let bonds: Vec<Bond> = self
            .bonds
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let order = match b.sym {
                    Some(sym) => sym.order(),
                    None if self.atoms[b.a].aromatic && self.atoms[b.b].aromatic && probe.is_ring_bond(i) => {
                        BondOrder::Aromatic
                    }
                    None => BondOrder::Single,
                };
                Bond::new(b.a, b.b, order)
            })
            .collect();
        let graph = MolGraph::new(self.atoms, bonds).map_err(|e| ParseDiagnostic::from_graph(e, &offsets))?;
        Ok(ParsedSmiles {
            graph,
            atom_offsets: offsets,
            stereo_marks: self.stereo_marks,
        })
    }
}

fn bracket_symbol(s: &[u8]) -> Option<(Element, bool, usize)> {
    let first = *s.first()?;
    if first == b'*' {
        return Some((Element::Wildcard, false, 1));
    }
    if s.starts_with(b"se") {
        return Some((Element::Se, true, 2));
    }
    if s.starts_with(b"as") {
        return Some((Element::As, true, 2));
    }
    if first.is_ascii_lowercase() {
        let upper = (first.to_ascii_uppercase() as char).to_string();
        let e = Element::from_symbol(&upper)?;
        return e.can_be_aromatic().then_some((e, true, 1));
    }
    if !first.is_ascii_uppercase() {
        return None;
    }
    if let Some(&second) = s.get(1) {
        if second.is_ascii_lowercase() {
            let two = [first, second];
            if let Some(e) = std::str::from_utf8(&two).ok().and_then(Element::from_symbol) {
                return Some((e, false, 2));
            }
        }
    }
    let one = (first as char).to_string();
    Element::from_symbol(&one).map(|e| (e, false, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(text: &str) -> DiagnosticKind {
        parse_smiles(text).unwrap_err().kind
    }

    #[test]
    fn ethanol() {
        let g = parse_smiles("CCO").unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.bonds().len(), 2);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Single));
        assert_eq!(g.atom(2).element, Element::O);
        assert_eq!(g.atom(2).hydrogens(), 1);
    }

    #[test]
    fn unclosed_ring_points_at_digit() {
        let err = parse_smiles("C1CC").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::UnclosedRing);
        assert_eq!(err.position, 1);
    }

    #[test]
    fn benzene_is_aromatic_ring() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.bonds().len(), 6);
        assert!(g
            .atoms()
            .iter()
            .all(|a| a.aromatic && a.ring_member && a.hydrogens() == 1));
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn heteroaromatics_get_expected_hydrogens() {
        let pyrrole = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(pyrrole.atom(3).hydrogens(), 1);
        let furan = parse_smiles("c1ccoc1").unwrap();
        assert_eq!(furan.atom(3).hydrogens(), 0);
        let thiophene = parse_smiles("c1ccsc1").unwrap();
        assert_eq!(thiophene.atom(3).hydrogens(), 0);
        let pyridine = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(pyridine.atom(3).hydrogens(), 0);
    }

    #[test]
    fn biphenyl_link_is_single() {
        let g = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        let link = g.bond_between(5, 6).unwrap();
        assert_eq!(g.bonds()[link].order, BondOrder::Single);
    }

    #[test]
    fn pentavalent_carbon() {
        assert_eq!(kind("C(C)(C)(C)(C)C"), DiagnosticKind::ValenceExceeded);
    }

    #[test]
    fn error_kinds() {
        assert_eq!(kind(""), DiagnosticKind::EmptyInput);
        assert_eq!(kind("C(C"), DiagnosticKind::UnmatchedParen);
        assert_eq!(kind("CC)"), DiagnosticKind::UnmatchedParen);
        assert_eq!(kind("C()C"), DiagnosticKind::UnmatchedParen);
        assert_eq!(kind("CQ"), DiagnosticKind::UnknownSymbol);
        assert_eq!(kind("C[Xx]"), DiagnosticKind::BadBracketAtom);
        assert_eq!(kind("C[C"), DiagnosticKind::BadBracketAtom);
        assert_eq!(kind("C="), DiagnosticKind::BadBond);
        assert_eq!(kind("=C"), DiagnosticKind::BadBond);
        assert_eq!(kind("C11"), DiagnosticKind::BadBond);
        assert_eq!(kind("C12CC12"), DiagnosticKind::BadBond);
        assert_eq!(kind("C=1CC-1"), DiagnosticKind::BadBond);
        assert_eq!(kind("cc"), DiagnosticKind::NonRingAromatic);
        assert_eq!(kind("O=O=O"), DiagnosticKind::ValenceExceeded);
        assert_eq!(kind("C(C)1CC1"), DiagnosticKind::UnknownSymbol);
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("[13CH3][NH3+].[O-]").unwrap();
        assert_eq!(g.atom(0).isotope, Some(13));
        assert_eq!(g.atom(0).hydrogens(), 3);
        assert_eq!(g.atom(1).formal_charge, 1);
        assert_eq!(g.atom(1).hydrogens(), 3);
        assert_eq!(g.atom(2).formal_charge, -1);
        assert_eq!(g.components().len(), 2);
        let markers = parse_smiles("C[*+]").unwrap();
        assert_eq!(markers.atom(1).element, Element::Wildcard);
        assert_eq!(markers.atom(1).formal_charge, 1);
    }

    #[test]
    fn stereo_is_counted_not_modeled() {
        let p = parse_smiles_detailed("F/C=C/F").unwrap();
        assert_eq!(p.stereo_marks, 2);
        let q = parse_smiles_detailed("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(q.stereo_marks, 1);
        assert_eq!(q.graph.atom(1).hydrogens(), 1);
    }

    #[test]
    fn ring_labels_span_dots_and_percent() {
        let g = parse_smiles("c12ccccc1.C2").unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g.components().len(), 1);
        let h = parse_smiles("C%10CC%10").unwrap();
        assert_eq!(h.bonds().len(), 3);
        let k = parse_smiles("C%(123)CC%(123)").unwrap();
        assert_eq!(k.bonds().len(), 3);
    }
}
