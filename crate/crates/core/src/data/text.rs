//! Set-of-words features: one propositional input per vocabulary word,
//! true iff the word occurs in the document.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::bits::BitVector;
use crate::error::{Error, Result};

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// One token per line; the line number is the index.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_tokens(text.lines().map(str::to_owned).collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Keeps the `max_size` tokens with the highest document frequency; ties go
/// to the lexicographically smaller token.
pub fn build_vocabulary<S: AsRef<str>>(texts: &[S], max_size: usize) -> Result<Vocabulary> {
    if max_size == 0 {
        return Err(Error::Config("max vocabulary size must be at least 1".into()));
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for text in texts {
        let unique: BTreeSet<String> = tokenize(text.as_ref()).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
    ranked.sort_by(|(ta, a), (tb, b)| b.cmp(a).then_with(|| ta.cmp(tb)));
    ranked.truncate(max_size);
    Vocabulary::from_tokens(ranked.into_iter().map(|(t, _)| t).collect())
}

pub fn sow_vectorize(text: &str, vocab: &Vocabulary) -> BitVector {
    let mut bits = BitVector::zeros(vocab.len());
    for t in tokenize(text) {
        if let Some(i) = vocab.index_of(&t) {
            bits.set(i, true);
        }
    }
    bits
}
