//! Text normalization: regex cleaning, decontraction, whitespace tokenization,
//! stopword removal and a rule-based lemmatizer.
//!
//! Every stage is a pure function of its input and the [`PipelineConfig`], so
//! category headings and queries always pass through byte-identical steps.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in English stopword list. Fragments produced by decontraction
/// ("not", "will", "would", "is", ...) are included so they never reach
/// the vectorizer.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "cannot",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "shall",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lowercase: bool,
    pub decontract: bool,
    pub strip_non_alphanumeric: bool,
    pub stopword_list: BTreeSet<String>,
    pub lemmatize: bool,
    pub min_token_len: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            decontract: true,
            strip_non_alphanumeric: true,
            stopword_list: DEFAULT_STOPWORDS.iter().map(|w| w.to_string()).collect(),
            lemmatize: true,
            min_token_len: 1,
        }
    }
}

impl PipelineConfig {
    /// Replaces the stopword list, validating each entry.
    pub fn with_stopwords<I, S>(mut self, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list = BTreeSet::new();
        for (i, word) in words.into_iter().enumerate() {
            let word = word.into();
            validate_stopword(&word, i + 1)?;
            list.insert(word);
        }
        self.stopword_list = list;
        Ok(self)
    }

    pub fn with_lemmatize(mut self, lemmatize: bool) -> Self {
        self.lemmatize = lemmatize;
        self
    }

    pub fn with_min_token_len(mut self, len: usize) -> Self {
        self.min_token_len = len.max(1);
        self
    }
}

fn validate_stopword(word: &str, line: usize) -> Result<()> {
    if word.is_empty() || word.chars().any(char::is_whitespace) || word.to_lowercase() != word {
        return Err(Error::InvalidStopword {
            line,
            word: word.to_string(),
        });
    }
    Ok(())
}

/// Reads a stopword override file: one lowercase word per line, `#` comments
/// and blank lines ignored.
pub fn load_stopwords(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_stopwords(&text)
}

pub fn parse_stopwords(text: &str) -> Result<BTreeSet<String>> {
    let mut words = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        validate_stopword(word, i + 1)?;
        words.insert(word.to_string());
    }
    Ok(words)
}

/// An ordered sequence of non-empty tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn new(tokens: Vec<String>) -> Self {
        Self(tokens.into_iter().filter(|t| !t.is_empty()).collect())
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn join(&self, sep: &str) -> String {
        self.0.join(sep)
    }
}

impl<S: Into<String>> FromIterator<S> for TokenList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self::new(iter.into_iter().map(Into::into).collect())
    }
}

impl<'a> IntoIterator for &'a TokenList {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

static EXACT_CONTRACTIONS: LazyLock<[(Regex, &'static str); 3]> = LazyLock::new(|| {
    [
        (Regex::new(r"\bcan['’]t\b").unwrap(), "cannot"),
        (Regex::new(r"\bwon['’]t\b").unwrap(), "will not"),
        (Regex::new(r"\bshan['’]t\b").unwrap(), "shall not"),
    ]
});

static SUFFIX_CONTRACTIONS: LazyLock<[(Regex, &'static str); 7]> = LazyLock::new(|| {
    [
        (Regex::new(r"n['’]t\b").unwrap(), " not"),
        (Regex::new(r"['’]re\b").unwrap(), " are"),
        (Regex::new(r"['’]ve\b").unwrap(), " have"),
        (Regex::new(r"['’]ll\b").unwrap(), " will"),
        (Regex::new(r"['’]d\b").unwrap(), " would"),
        (Regex::new(r"['’]m\b").unwrap(), " am"),
        (Regex::new(r"['’]s\b").unwrap(), " is"),
    ]
});

/// Expands English contractions. Exact forms are rewritten before the
/// generic suffix rules so "won't" becomes "will not" rather than "wo not".
pub fn decontract(text: &str) -> String {
    let mut out = text.to_string();
    for (re, rep) in EXACT_CONTRACTIONS.iter().chain(SUFFIX_CONTRACTIONS.iter()) {
        if re.is_match(&out) {
            out = re.replace_all(&out, *rep).into_owned();
        }
    }
    out
}

/// Lowercases, expands contractions, replaces every non-alphanumeric
/// character with a space and collapses whitespace.
pub fn clean_text(raw: &str, cfg: &PipelineConfig) -> String {
    let mut text = if cfg.lowercase {
        raw.to_lowercase()
    } else {
        raw.to_string()
    };
    if cfg.decontract {
        text = decontract(&text);
    }
    if cfg.strip_non_alphanumeric {
        text = text
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { ' ' })
            .collect();
    }
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Unigram whitespace tokenizer.
pub fn tokenize(text: &str, cfg: &PipelineConfig) -> TokenList {
    text.split_whitespace()
        .filter(|t| t.chars().count() >= cfg.min_token_len)
        .collect()
}

pub fn remove_stopwords(tokens: TokenList, cfg: &PipelineConfig) -> TokenList {
    TokenList(
        tokens
            .into_inner()
            .into_iter()
            .filter(|t| !cfg.stopword_list.contains(t))
            .collect(),
    )
}

/// Suffix-stripping lemmatizer. Rules are tried in order and the first
/// match wins; no attempt is made to restore doubled consonants.
pub fn lemmatize_word(word: &str) -> String {
    let len = word.chars().count();
    if len > 3 {
        if let Some(stem) = word.strip_suffix("ies") {
            return format!("{stem}y");
        }
        if word.ends_with('s')
            && !word.ends_with("ss")
            && !word.ends_with("us")
            && !word.ends_with("is")
        {
            return word[..word.len() - 1].to_string();
        }
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if stem.chars().count() >= 3 {
                return stem.to_string();
            }
        }
    }
    word.to_string()
}

pub fn lemmatize(tokens: TokenList) -> TokenList {
    TokenList(
        tokens
            .into_inner()
            .into_iter()
            .map(|t| lemmatize_word(&t))
            .collect(),
    )
}

/// Full pipeline: clean, tokenize, drop stopwords, then lemmatize when
/// enabled. Lemmatized tokens are filtered once more so that a reduced form
/// ("ours" -> "our") can never reintroduce a stopword or a short token.
pub fn preprocess(raw: &str, cfg: &PipelineConfig) -> TokenList {
    let cleaned = clean_text(raw, cfg);
    let tokens = remove_stopwords(tokenize(&cleaned, cfg), cfg);
    if !cfg.lemmatize {
        return tokens;
    }
    let lemmas = lemmatize(tokens);
    TokenList(
        lemmas
            .into_inner()
            .into_iter()
            .filter(|t| t.chars().count() >= cfg.min_token_len && !cfg.stopword_list.contains(t))
            .collect(),
    )
}
