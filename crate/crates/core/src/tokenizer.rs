//! Shared vocabulary, tokenization and token-budget accounting.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codecs::Representation;

pub const PAD: &str = "<pad>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";
pub const SEP: &str = "[SEP]";
pub const STAR_PLUS: &str = "[*+]";
pub const STAR_MINUS: &str = "[*-]";

/// Special tokens, which always take ids `0..6` in this order.
pub const SPECIALS: [&str; 6] = [PAD, BOS, EOS, SEP, STAR_PLUS, STAR_MINUS];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenizeError {
    #[error("unknown symbol at offset {position}: {snippet:?}")]
    UnknownSymbol { position: usize, snippet: String },
    #[error("unterminated {open:?} at offset {position}")]
    Unterminated { position: usize, open: char },
    #[error("no sample text to build a vocabulary from")]
    EmptyCorpus,
}

/// Splits text into surface tokens: bracket atoms and markers, `{...}`
/// groups, two-letter halogens, `%nn` / `%(n)` labels, otherwise single
/// characters.
pub fn lex(text: &str) -> Result<Vec<&str>, TokenizeError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let len = match b[i] {
            open @ (b'[' | b'{') => {
                let close = if open == b'[' { b']' } else { b'}' };
                match b[i..].iter().position(|&c| c == close) {
                    Some(p) => p + 1,
                    None => {
                        return Err(TokenizeError::Unterminated {
                            position: i,
                            open: open as char,
                        })
                    }
                }
            }
            b'C' if b.get(i + 1) == Some(&b'l') => 2,
            b'B' if b.get(i + 1) == Some(&b'r') => 2,
            b'%' if b.get(i + 1) == Some(&b'(') => match b[i..].iter().position(|&c| c == b')') {
                Some(p) => p + 1,
                None => return Err(TokenizeError::Unterminated { position: i, open: '(' }),
            },
            b'%' if b.get(i + 1).is_some_and(u8::is_ascii_digit) && b.get(i + 2).is_some_and(u8::is_ascii_digit) => 3,
            _ => text[i..].chars().next().map_or(1, char::len_utf8),
        };
        out.push(&text[i..i + len]);
        i += len;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    max_len: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    tokens: Vec<String>,
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = String;

    fn try_from(file: VocabularyFile) -> Result<Self, Self::Error> {
        if file.tokens.len() < SPECIALS.len() || file.tokens[..SPECIALS.len()] != SPECIALS {
            return Err("vocabulary must start with the special tokens".into());
        }
        let v = Vocabulary::from_tokens(file.tokens);
        if v.ids.len() != v.tokens.len() {
            return Err("vocabulary contains duplicate tokens".into());
        }
        Ok(v)
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile { tokens: v.tokens }
    }
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>) -> Vocabulary {
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let max_len = tokens.iter().map(String::len).max().unwrap_or(1);
        Vocabulary { tokens, ids, max_len }
    }

    /// Union of the surface tokens of every sample, ids assigned to the
    /// special tokens first and then in lexicographic order.
    pub fn build<'a, I>(samples: I) -> Result<Vocabulary, TokenizeError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut seen = BTreeSet::new();
        let mut any = false;
        for s in samples {
            any = true;
            for t in lex(s)? {
                seen.insert(t.to_string());
            }
        }
        if !any {
            return Err(TokenizeError::EmptyCorpus);
        }
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        tokens.extend(seen.into_iter().filter(|t| !SPECIALS.contains(&t.as_str())));
        Ok(Vocabulary::from_tokens(tokens))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Greedy longest match against the vocabulary.
    pub fn tokenize(&self, text: &str) -> Result<Vec<u32>, TokenizeError> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < text.len() {
            let longest = (1..=self.max_len.min(text.len() - i))
                .rev()
                .filter(|&l| text.is_char_boundary(i + l))
                .find_map(|l| self.ids.get(&text[i..i + l]).map(|&id| (id, l)));
            match longest {
                Some((id, l)) => {
                    out.push(id);
                    i += l;
                }
                None => {
                    let snippet: String = text[i..].chars().take(8).collect();
                    return Err(TokenizeError::UnknownSymbol { position: i, snippet });
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TokenCount {
    pub representation: Representation,
    pub molecules: u64,
    /// Loss-contributing tokens: sequence tokens plus one end-of-sequence
    /// token per molecule. The start token is not counted.
    pub tokens: u64,
    /// Items that failed to tokenize; excluded from the totals.
    pub failed: u64,
}

/// Loss-contributing tokens of one encoded molecule.
pub fn sequence_tokens(text: &str, vocab: &Vocabulary) -> Result<u64, TokenizeError> {
    Ok(vocab.tokenize(text)?.len() as u64 + 1)
}

pub fn count_corpus_tokens<'a, I>(items: I, representation: Representation, vocab: &Vocabulary) -> TokenCount
where
    I: IntoIterator<Item = &'a str>,
{
    let mut count = TokenCount {
        representation,
        molecules: 0,
        tokens: 0,
        failed: 0,
    };
    for text in items {
        match sequence_tokens(text, vocab) {
            Ok(n) => {
                count.molecules += 1;
                count.tokens += n;
            }
            Err(_) => count.failed += 1,
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub target_tokens: u64,
    pub representation: Representation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetManifest {
    pub representation: Representation,
    pub target_tokens: u64,
    pub actual_tokens: u64,
    pub molecule_count: u64,
    pub source_digest: String,
}

impl BudgetManifest {
    /// Tokens consumed after replaying the budget for `epochs` passes.
    pub fn tokens_after(&self, epochs: u64) -> u64 {
        self.actual_tokens * epochs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BudgetError {
    #[error("target token count must be positive")]
    ZeroTarget,
    #[error("stream holds only {available} tokens, {target} requested")]
    Insufficient { available: u64, target: u64 },
    #[error("item {index}: {source}")]
    Tokenize { index: usize, source: TokenizeError },
}

/// Shortest prefix of `items` whose loss-contributing tokens reach the target.
pub fn build_budget<'a, I>(
    items: I,
    spec: BudgetSpec,
    vocab: &Vocabulary,
    source_digest: &str,
) -> Result<BudgetManifest, BudgetError>
where
    I: IntoIterator<Item = &'a str>,
{
    if spec.target_tokens == 0 {
        return Err(BudgetError::ZeroTarget);
    }
    let mut tokens = 0u64;
    for (index, text) in items.into_iter().enumerate() {
        tokens += sequence_tokens(text, vocab).map_err(|source| BudgetError::Tokenize { index, source })?;
        let molecules = index as u64 + 1;
        if tokens >= spec.target_tokens {
            return Ok(BudgetManifest {
                representation: spec.representation,
                target_tokens: spec.target_tokens,
                actual_tokens: tokens,
                molecule_count: molecules,
                source_digest: source_digest.to_string(),
            });
        }
    }
    Err(BudgetError::Insufficient {
        available: tokens,
        target: spec.target_tokens,
    })
}

/// Seeded permutation of `0..n` for shuffled budget selection.
pub fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
