use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Tokeniser settings. Tokens are maximal runs of alphanumeric characters;
/// there is no stemming.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Dropped after case folding.
    #[serde(default)]
    pub stopwords: BTreeSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            stopwords: BTreeSet::new(),
        }
    }
}

impl TokenizerConfig {
    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords.extend(words.into_iter().map(Into::into));
        self
    }
}

pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| {
            if cfg.lowercase {
                s.to_lowercase()
            } else {
                s.to_string()
            }
        })
        .filter(|s| !cfg.stopwords.contains(s))
        .collect()
}
