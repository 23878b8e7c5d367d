use serde::{Deserialize, Serialize};

/// Elements accepted by the SMILES reader.
///
/// `Wildcard` is the `*` attachment/dummy atom used by the fragment codecs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    Wildcard,
    H,
    Li,
    B,
    C,
    N,
    O,
    F,
    Na,
    Mg,
    Si,
    P,
    S,
    Cl,
    K,
    Ca,
    Zn,
    As,
    Se,
    Br,
    I,
}

const ALL: [Element; 21] = [
    Element::Wildcard,
    Element::H,
    Element::Li,
    Element::B,
    Element::C,
    Element::N,
    Element::O,
    Element::F,
    Element::Na,
    Element::Mg,
    Element::Si,
    Element::P,
    Element::S,
    Element::Cl,
    Element::K,
    Element::Ca,
    Element::Zn,
    Element::As,
    Element::Se,
    Element::Br,
    Element::I,
];

impl Element {
    pub fn symbol(self) -> &'static str {
        match self {
            Element::Wildcard => "*",
            Element::H => "H",
            Element::Li => "Li",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::Na => "Na",
            Element::Mg => "Mg",
            Element::Si => "Si",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::K => "K",
            Element::Ca => "Ca",
            Element::Zn => "Zn",
            Element::As => "As",
            Element::Se => "Se",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::Wildcard => 0,
            Element::H => 1,
            Element::Li => 3,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::Na => 11,
            Element::Mg => 12,
            Element::Si => 14,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::K => 19,
            Element::Ca => 20,
            Element::Zn => 30,
            Element::As => 33,
            Element::Se => 34,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        ALL.iter().copied().find(|e| e.symbol() == symbol)
    }

    /// Elements that may appear outside brackets.
    pub fn is_organic_subset(self) -> bool {
        matches!(
            self,
            Element::Wildcard
                | Element::B
                | Element::C
                | Element::N
                | Element::O
                | Element::P
                | Element::S
                | Element::F
                | Element::Cl
                | Element::Br
                | Element::I
        )
    }

    /// Elements with a lowercase aromatic spelling.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S | Element::Se | Element::As
        )
    }

    /// Anything other than carbon, hydrogen, or a wildcard.
    pub fn is_heteroatom(self) -> bool {
        !matches!(self, Element::C | Element::H | Element::Wildcard)
    }

    /// Neutral valence states, ascending.
    fn base_valences(self) -> &'static [u8] {
        match self {
            Element::Wildcard => &[],
            Element::H | Element::Li | Element::Na | Element::K => &[1],
            Element::F | Element::Cl | Element::Br | Element::I => &[1],
            Element::B => &[3],
            Element::C | Element::Si => &[4],
            Element::N => &[3],
            Element::P | Element::As => &[3, 5],
            Element::O => &[2],
            Element::S | Element::Se => &[2, 4, 6],
            Element::Mg | Element::Ca | Element::Zn => &[2],
        }
    }

    /// Allowed valences once the formal charge is taken into account, ascending.
    ///
    /// Returns `None` for the wildcard, which is never valence-checked.
    pub fn allowed_valences(self, charge: i8) -> Option<Vec<u8>> {
        if self == Element::Wildcard {
            return None;
        }
        let shift: i16 = match self {
            // electron-rich main group: a cation gains a bond, an anion loses one
            Element::N
            | Element::P
            | Element::As
            | Element::O
            | Element::S
            | Element::Se
            | Element::F
            | Element::Cl
            | Element::Br
            | Element::I => charge as i16,
            Element::B => -(charge as i16),
            _ => -(charge as i16).abs(),
        };
        let mut out: Vec<u8> = self
            .base_valences()
            .iter()
            .map(|&v| v as i16 + shift)
            .filter(|&v| v >= 0)
            .map(|v| v as u8)
            .collect();
        out.dedup();
        if out.is_empty() {
            out.push(0);
        }
        Some(out)
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}
