//! DeepSMILES with both branch and ring rewriting.
//!
//! Branches become runs of `)` whose length is the number of atoms to pop;
//! a ring closure becomes a single token at the closing atom giving the ring
//! size along the tree path. Follows the behaviour of the reference converter,
//! including the tetrahedral-parity correction when ring digits move.

use std::collections::{BTreeMap, HashMap};

use super::CodecError;
use crate::chem::parse_smiles;

const BOND_CHARS: &[u8] = b"-=#$/\\:";

fn is_bond(b: u8) -> bool {
    BOND_CHARS.contains(&b)
}

enum RingInfo {
    /// (index of opening symbol, index of closing symbol)
    Open(usize, usize),
    /// (index of closing symbol, rendered ring-size token)
    Close(usize, String),
}

struct Opening {
    depth: usize,
    bond: Option<u8>,
    ans_index: usize,
    symbol_index: usize,
}

pub fn to_deepsmiles(smiles: &str) -> Result<String, CodecError> {
    parse_smiles(smiles).map_err(CodecError::InvalidInput)?;
    let s = smiles.as_bytes();
    let prev_bond = |i: usize| (i > 0 && is_bond(s[i - 1])).then(|| s[i - 1]);

    let mut ans: Vec<String> = Vec::new();
    let mut levels: Vec<usize> = vec![0];
    let mut openings: HashMap<&[u8], Opening> = HashMap::new();
    let mut info: BTreeMap<usize, Vec<RingInfo>> = BTreeMap::new();

    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        match x {
            b')' => {
                let popped = levels.pop().unwrap_or(0);
                ans.push(")".repeat(popped));
            }
            b'(' => levels.push(0),
            _ if is_bond(x) => {}
            b'0'..=b'9' | b'%' => {
                let depth: usize = levels.iter().sum();
                let bond = prev_bond(i);
                let symbol: &[u8] = if x == b'%' {
                    let end = if s.get(i + 1) == Some(&b'(') {
                        i + s[i..].iter().position(|&c| c == b')').unwrap_or(s.len() - i)
                    } else {
                        i + 2
                    };
                    let sym = &s[i..=end.min(s.len() - 1)];
                    i = end;
                    sym
                } else {
                    &s[i..=i]
                };
                let here = ans.len() - 1;
                if let Some(open) = openings.remove(symbol) {
                    let size = depth - open.depth + 1;
                    let out_bond = match bond {
                        Some(b) => Some(b),
                        None => open.bond.map(|b| match b {
                            b'\\' => b'/',
                            b'/' => b'\\',
                            other => other,
                        }),
                    };
                    if ans[open.ans_index].contains('@') {
                        info.entry(open.ans_index)
                            .or_default()
                            .push(RingInfo::Open(open.symbol_index, i));
                    }
                    let mut token = String::new();
                    if let Some(b) = out_bond {
                        token.push(b as char);
                    }
                    token.push_str(&ring_size_token(size));
                    info.entry(here).or_default().push(RingInfo::Close(i, token));
                } else {
                    openings.insert(
                        symbol,
                        Opening {
                            depth,
                            bond,
                            ans_index: here,
                            symbol_index: i,
                        },
                    );
                }
            }
            _ => {
                let mut token = String::new();
                if let Some(b) = prev_bond(i) {
                    token.push(b as char);
                }
                *levels.last_mut().expect("level stack is never empty") += 1;
                if x == b'[' {
                    let close = i + s[i..].iter().position(|&c| c == b']').unwrap_or(s.len() - 1 - i);
                    token.push_str(&smiles[i..=close]);
                    i = close;
                } else if i + 1 < s.len() && matches!(&s[i..i + 2], b"Cl" | b"Br") {
                    token.push_str(&smiles[i..i + 2]);
                    i += 1;
                } else {
                    token.push(x as char);
                }
                ans.push(token);
            }
        }
        i += 1;
    }

    let mut out = String::new();
    for (k, piece) in ans.iter().enumerate() {
        match info.get(&k) {
            Some(entries) => {
                if should_invert_stereo(entries) {
                    out.push_str(&invert_stereo(piece));
                } else {
                    out.push_str(piece);
                }
                for e in entries {
                    if let RingInfo::Close(_, token) = e {
                        out.push_str(token);
                    }
                }
            }
            None => out.push_str(piece),
        }
    }
    Ok(out)
}

fn ring_size_token(size: usize) -> String {
    if size < 10 {
        size.to_string()
    } else if size < 100 {
        format!("%{size}")
    } else {
        format!("%({size})")
    }
}

fn should_invert_stereo(entries: &[RingInfo]) -> bool {
    if entries.len() <= 1 {
        return false;
    }
    let mut data: Vec<(usize, (u8, usize))> = entries
        .iter()
        .map(|e| match *e {
            RingInfo::Open(at, close) => (at, (1, close)),
            RingInfo::Close(at, _) => (at, (0, at)),
        })
        .collect();
    data.sort_by_key(|d| d.1);
    let mut out_of_order = 0;
    for i in 0..data.len() {
        for j in i + 1..data.len() {
            if data[i].0 > data[j].0 {
                out_of_order += 1;
            }
        }
    }
    out_of_order % 2 == 1
}

fn invert_stereo(piece: &str) -> String {
    let b = piece.as_bytes();
    let mut out = String::with_capacity(piece.len() + 1);
    let mut i = 0;
    while i < b.len() {
        out.push(b[i] as char);
        if b[i] == b'@' {
            if b.get(i + 1) == Some(&b'@') {
                i += 1;
            } else {
                out.push('@');
            }
        }
        i += 1;
    }
    out
}

struct Tree {
    nodes: Vec<String>,
    children: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    ring_digit: u32,
}

impl Tree {
    fn add_node(&mut self, text: String) -> usize {
        self.nodes.push(text);
        self.children.push(Vec::new());
        self.parent.push(None);
        self.nodes.len() - 1
    }

    fn add_ring_closure(&mut self, from: usize, size: usize, bond: Option<u8>) -> bool {
        let mut cur = from;
        for _ in 1..size {
            match self.parent[cur] {
                Some(p) => cur = p,
                None => return false,
            }
        }
        self.ring_digit += 1;
        let label = match self.ring_digit {
            d if d < 10 => d.to_string(),
            d if d < 100 => format!("%{d}"),
            d => format!("%({d})"),
        };
        if let Some(b) = bond {
            self.nodes[from].push(b as char);
        }
        self.nodes[from].push_str(&label);
        self.nodes[cur].push_str(&label);
        true
    }

    fn to_smiles(&self) -> String {
        enum Step<'t> {
            Node(usize),
            Text(&'t str),
        }
        let mut out = String::new();
        let mut stack = vec![Step::Node(0)];
        while let Some(step) = stack.pop() {
            let n = match step {
                Step::Text(t) => {
                    out.push_str(t);
                    continue;
                }
                Step::Node(n) => n,
            };
            out.push_str(&self.nodes[n]);
            let kids = &self.children[n];
            for (k, &c) in kids.iter().enumerate().rev() {
                if k + 1 == kids.len() {
                    stack.push(Step::Node(c));
                } else {
                    stack.push(Step::Text(")"));
                    stack.push(Step::Node(c));
                    stack.push(Step::Text("("));
                }
            }
        }
        out
    }
}

/// Converts DeepSMILES back to SMILES. The result is checked to be a valid
/// molecule.
pub fn from_deepsmiles(text: &str) -> Result<String, CodecError> {
    let d = text.as_bytes();
    let malformed = |position: usize, message: &str| CodecError::Malformed {
        position,
        message: message.to_string(),
    };
    if d.is_empty() {
        return Err(malformed(0, "empty input"));
    }
    let prev_bond = |i: usize| (i > 0 && is_bond(d[i - 1])).then(|| d[i - 1]);
    let mut tree = Tree {
        nodes: Vec::new(),
        children: Vec::new(),
        parent: Vec::new(),
        ring_digit: 0,
    };
    let mut stack: Vec<usize> = Vec::new();
    let mut last: Option<usize> = None;

    let mut i = 0;
    while i < d.len() {
        let x = d[i];
        match x {
            b')' => {
                if stack.pop().is_none() {
                    return Err(malformed(i, "')' with no atom left to pop"));
                }
            }
            _ if is_bond(x) => {}
            b'%' | b'0'..=b'9' => {
                let start = i;
                let Some(atom) = last.filter(|_| i > 0) else {
                    return Err(malformed(i, "ring-size token before any atom"));
                };
                let bond = prev_bond(i);
                let size = if x == b'%' {
                    if d.get(i + 1) == Some(&b'(') {
                        let Some(close) = d[i + 2..].iter().position(|&c| c == b')').map(|p| p + i + 2) else {
                            return Err(malformed(i, "'%(' without closing ')'"));
                        };
                        let digits = &d[i + 2..close];
                        i = close;
                        parse_digits(digits).ok_or_else(|| malformed(start, "'%(' must enclose digits"))?
                    } else {
                        let digits = d
                            .get(i + 1..i + 3)
                            .ok_or_else(|| malformed(i, "'%' needs two digits"))?;
                        i += 2;
                        parse_digits(digits).ok_or_else(|| malformed(start, "'%' needs two digits"))?
                    }
                } else {
                    (x - b'0') as usize
                };
                if !tree.add_ring_closure(atom, size, bond) {
                    return Err(malformed(start, "ring size reaches past the first atom"));
                }
            }
            _ => {
                let mut node = String::new();
                if let Some(b) = prev_bond(i) {
                    node.push(b as char);
                }
                if i + 1 < d.len() && matches!(&d[i..i + 2], b"Cl" | b"Br") {
                    node.push_str(&text[i..i + 2]);
                    i += 1;
                } else if x == b'[' {
                    let Some(close) = d[i..].iter().position(|&c| c == b']').map(|p| p + i) else {
                        return Err(malformed(i, "'[' without closing ']'"));
                    };
                    node.push_str(&text[i..=close]);
                    i = close;
                } else if x.is_ascii() {
                    node.push(x as char);
                } else {
                    return Err(malformed(i, "non-ASCII byte"));
                }
                let idx = tree.add_node(node);
                if let Some(&top) = stack.last() {
                    tree.children[top].push(idx);
                    tree.parent[idx] = Some(top);
                }
                stack.push(idx);
                last = Some(idx);
            }
        }
        i += 1;
    }
    if tree.nodes.is_empty() {
        return Err(malformed(0, "no atoms"));
    }
    let smiles = tree.to_smiles();
    parse_smiles(&smiles).map_err(CodecError::InvalidOutput)?;
    Ok(smiles)
}

fn parse_digits(digits: &[u8]) -> Option<usize> {
    if digits.is_empty() || digits.len() > 6 || !digits.iter().all(u8::is_ascii_digit) {
        return None;
    }
    std::str::from_utf8(digits).ok()?.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::isomorphic;

    // pairs produced by the reference converter
    const REFERENCE: &[(&str, &str)] = &[
        ("CCO", "CCO"),
        ("C(C)O", "CC)O"),
        ("C1CCCCC1", "CCCCCC6"),
        ("C1CCCC1", "CCCCC5"),
        ("C%10CCC%10", "CCCC4"),
        ("C1CCCCCCCCC1", "CCCCCCCCCC%10"),
        ("C1CC(OC)CC1", "CCCOC))CC5"),
        ("C(O)C", "CO)C"),
        ("C(F)(F)C", "CF)F)C"),
        ("C(OC(=O)Cl)I", "COC=O)Cl)))I"),
        ("B(c1ccccc1)(O)O", "Bcccccc6))))))O)O"),
        ("Cn1cccc-2nccc12", "Cnccccnccc9-5"),
        ("C1N[C@@]12CO2", "CN[C@@]3CO3"),
        ("NC[C@]12CCCC2C3CC1CC3", "NC[C@@]CCCC5CCC8CC5"),
        ("CC(=O)Nc1ccc(O)cc1", "CC=O)NccccO)cc6"),
        ("C.CC1CC1", "C.CCCC3"),
    ];

    #[test]
    fn matches_reference_encoder() {
        for (smiles, expected) in REFERENCE {
            assert_eq!(to_deepsmiles(smiles).unwrap(), *expected, "{smiles}");
        }
    }

    #[test]
    fn decodes_back_to_same_graph() {
        for (smiles, deep) in REFERENCE {
            let back = from_deepsmiles(deep).unwrap();
            assert!(
                isomorphic(&parse_smiles(smiles).unwrap(), &parse_smiles(&back).unwrap()),
                "{smiles} -> {deep} -> {back}"
            );
        }
    }

    #[test]
    fn never_emits_open_paren() {
        for (smiles, _) in REFERENCE {
            assert!(!to_deepsmiles(smiles).unwrap().contains('('));
        }
    }

    #[test]
    fn malformed_inputs_rejected() {
        for bad in [
            ")C",
            "C8",
            "C))I",
            "%10C",
            "9C",
            "CCCCCC%(3CC",
            "C%(100)",
            "C[C@@CCl",
            "C%CC",
            "-5cc[nH]9",
            "",
        ] {
            assert!(from_deepsmiles(bad).is_err(), "{bad}");
        }
        assert!(matches!(
            from_deepsmiles(")C"),
            Err(CodecError::Malformed { position: 0, .. })
        ));
    }

    #[test]
    fn invalid_smiles_propagates() {
        assert!(matches!(to_deepsmiles("C1CC"), Err(CodecError::InvalidInput(_))));
    }

    #[test]
    fn stereo_parity_helpers() {
        assert_eq!(invert_stereo("[C@@H]"), "[C@H]");
        assert_eq!(invert_stereo("[C@]"), "[C@@]");
        assert!(should_invert_stereo(&[RingInfo::Open(7, 12), RingInfo::Open(6, 17)]));
        assert!(!should_invert_stereo(&[RingInfo::Open(7, 17), RingInfo::Open(6, 12)]));
        assert!(should_invert_stereo(&[
            RingInfo::Open(5, 12),
            RingInfo::Close(6, "6".into())
        ]));
    }
}
