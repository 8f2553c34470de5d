//! Corpus ingestion, text normalization, vocabularies and splits.
//!
//! Raw posts carry reaction tallies and are turned into labeled texts by
//! [`filter_posts`]; emotion datasets arrive through the readers in
//! [`ingest`]. [`preprocess`] normalizes text into tokens, [`Vocabulary`]
//! maps tokens to ids, and [`make_splits`] assembles the stratified
//! train/val/test corpora used everywhere downstream.

mod ingest;
mod splits;
pub mod synth;

use std::collections::HashMap;
use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use sha2::{Digest, Sha256};

pub use ingest::{
    ingest_emotion_dataset, read_posts_tsv, read_unlabeled_lines, write_emotion_tsv,
    write_posts_tsv, write_unlabeled_lines, EmotionFormat, Ingested, POSTS_HEADER,
};
pub use splits::{artificial_augment, make_splits, EmotionSource, SplitConfig, SplitInputs, Splits};

use crate::folc::{EMOTION_NAMES, N_REACTIONS, REACTION_NAMES};

/// Sequence padding token, id 0.
pub const PAD_TOKEN: &str = "<pad>";
/// Out-of-vocabulary token, id 1.
pub const UNK_TOKEN: &str = "<unk>";
/// Standardized-number token, id 2. Spelled in lowercase so a second
/// preprocessing pass leaves it alone.
pub const NUM_TOKEN: &str = "<num>";
/// Number of reserved ids at the bottom of every vocabulary.
pub const N_SPECIALS: usize = 3;

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const NUM_ID: u32 = 2;

/// Default sentence truncation length.
pub const DEFAULT_MAX_LEN: usize = 30;
/// Default vocabulary budget (most frequent tokens kept).
pub const DEFAULT_VOCAB_SIZE: usize = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("empty token sequence (nothing left after preprocessing)")]
    EmptyTokens,
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("empty input set: {0}")]
    EmptyInput(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:1: expected header {expected:?}, found {found:?}")]
    BadHeader { path: String, expected: String, found: String },
}

/// A post with its reaction tallies, before filtering. Counts are indexed
/// by the canonical reaction order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPost {
    pub text: String,
    pub hits: [u64; N_REACTIONS],
}

impl RawPost {
    pub fn new(text: impl Into<String>, hits: [u64; N_REACTIONS]) -> RawPost {
        RawPost { text: text.into(), hits }
    }

    pub fn total_hits(&self) -> u64 {
        self.hits.iter().sum()
    }
}

/// Which dataset an example came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Provenance {
    Posts,
    AffectiveText,
    Isear,
    FairyTales,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Posts => "posts",
            Provenance::AffectiveText => "affective",
            Provenance::Isear => "isear",
            Provenance::FairyTales => "fairy",
        })
    }
}

/// Supervision attached to an example: a reaction class, an emotion class,
/// or nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Label {
    Reaction(usize),
    Emotion(usize),
    None,
}

impl Label {
    pub fn class_name(&self) -> Option<&'static str> {
        match *self {
            Label::Reaction(i) => Some(REACTION_NAMES[i]),
            Label::Emotion(i) => Some(EMOTION_NAMES[i]),
            Label::None => None,
        }
    }
}

/// An encoded sentence with its label. `ids` is truncated, never padded;
/// lengths stay explicit.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Example {
    pub ids: Vec<u32>,
    pub label: Label,
    pub provenance: Provenance,
    /// Original (unprocessed) text, kept for reports and predictions.
    pub text: String,
}

/// The three disjoint example sets: reaction-labeled, emotion-labeled and
/// unlabeled.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Corpus {
    pub reaction: Vec<Example>,
    pub emotion: Vec<Example>,
    pub unlabeled: Vec<Example>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.reaction.len() + self.emotion.len() + self.unlabeled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter_all(&self) -> impl Iterator<Item = &Example> {
        self.reaction.iter().chain(&self.emotion).chain(&self.unlabeled)
    }
}

/// How the dominance test in [`filter_posts`] reads its γ factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GammaMode {
    /// Top class must beat γ times the combined mass of all other classes.
    MassOfOthers,
    /// Top class must beat γ times each other class count separately.
    PerClass,
}

/// Thresholds for turning raw reaction tallies into labels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FilterConfig {
    pub tau: u64,
    pub gamma: f64,
    pub gamma_mode: GammaMode,
}

impl Default for FilterConfig {
    fn default() -> FilterConfig {
        FilterConfig { tau: 20, gamma: 0.4, gamma_mode: GammaMode::MassOfOthers }
    }
}

/// Keeps posts with enough, and dominant enough, reaction mass; labels each
/// survivor with its argmax class. Ties for the top count drop the post.
pub fn filter_posts(posts: &[RawPost], cfg: &FilterConfig) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    for post in posts {
        let total = post.total_hits();
        if total < cfg.tau {
            continue;
        }
        let max = *post.hits.iter().max().expect("nonempty hits");
        if post.hits.iter().filter(|&&h| h == max).count() != 1 {
            continue;
        }
        let argmax = post.hits.iter().position(|&h| h == max).unwrap();
        let dominant = match cfg.gamma_mode {
            GammaMode::MassOfOthers => max as f64 > cfg.gamma * (total - max) as f64,
            GammaMode::PerClass => post
                .hits
                .iter()
                .enumerate()
                .all(|(k, &h)| k == argmax || max as f64 > cfg.gamma * h as f64),
        };
        if dominant {
            out.push((post.text.clone(), argmax));
        }
    }
    out
}

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(https?://\S+|www\.\S+)").expect("static regex"));
static NUM_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\d+(?:[.,]\d+)*").expect("static regex"));

/// Normalizes text into tokens: lowercase, drop URLs, standardize digit
/// groups to [`NUM_TOKEN`], strip brackets, split punctuation and `#` into
/// standalone tokens, then split on whitespace.
pub fn preprocess(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let no_urls = URL_RE.replace_all(&lower, " ");
    let numbered = NUM_RE.replace_all(&no_urls, format!(" {NUM_TOKEN} ").as_str());

    let mut spaced = String::with_capacity(numbered.len() + 16);
    for c in numbered.chars() {
        match c {
            '(' | ')' | '[' | ']' | '{' | '}' => spaced.push(' '),
            '.' | ',' | '!' | '?' | ';' | ':' | '\'' | '"' | '#' => {
                spaced.push(' ');
                spaced.push(c);
                spaced.push(' ');
            }
            _ => spaced.push(c),
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

/// Token-to-id map with reserved ids for padding, unknowns and numbers.
/// Ids above the specials are ordered by descending training-split
/// frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    /// Non-special tokens in id order (index 0 holds id `N_SPECIALS`).
    id_to_token: Vec<String>,
}

impl Vocabulary {
    /// Builds the vocabulary from training token streams, keeping at most
    /// `vocab_size` non-special tokens.
    pub fn build<'a, I, S>(streams: I, vocab_size: usize) -> Result<Vocabulary, TextError>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = &'a String>,
    {
        assert!(vocab_size >= 1, "vocab_size must be at least 1");
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for stream in streams {
            for token in stream {
                if token != PAD_TOKEN && token != UNK_TOKEN && token != NUM_TOKEN {
                    *counts.entry(token.as_str()).or_insert(0) += 1;
                }
            }
        }
        if counts.is_empty() {
            return Err(TextError::EmptyCorpus);
        }

        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(vocab_size);

        Ok(Vocabulary::from_tokens(ranked.into_iter().map(|(t, _)| t.to_string())))
    }

    /// Builds from an explicit token list, in id order after the specials.
    pub fn from_tokens<I, S>(tokens: I) -> Vocabulary
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let id_to_token: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), (i + N_SPECIALS) as u32))
            .collect();
        Vocabulary { token_to_id, id_to_token }
    }

    /// Total size including the specials.
    pub fn len(&self) -> usize {
        self.id_to_token.len() + N_SPECIALS
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> u32 {
        match token {
            PAD_TOKEN => PAD_ID,
            UNK_TOKEN => UNK_ID,
            NUM_TOKEN => NUM_ID,
            _ => self.token_to_id.get(token).copied().unwrap_or(UNK_ID),
        }
    }

    pub fn token(&self, id: u32) -> &str {
        match id {
            PAD_ID => PAD_TOKEN,
            UNK_ID => UNK_TOKEN,
            NUM_ID => NUM_TOKEN,
            _ => &self.id_to_token[id as usize - N_SPECIALS],
        }
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    /// Writes one non-special token per line; line `i` holds the token with
    /// id `i + N_SPECIALS`.
    pub fn save(&self, path: &Path) -> Result<(), TextError> {
        let io_err = |source| TextError::Io { path: path.display().to_string(), source };
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        for token in &self.id_to_token {
            writeln!(f, "{token}").map_err(io_err)?;
        }
        f.flush().map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Vocabulary, TextError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| TextError::Io { path: path.display().to_string(), source })?;
        Ok(Vocabulary::from_tokens(
            text.lines().filter(|l| !l.is_empty()).map(str::to_string),
        ))
    }

    /// Hash of the token list, used to pair checkpoints with vocabularies.
    pub fn sha256_hex(&self) -> String {
        let mut hasher = Sha256::new();
        for token in &self.id_to_token {
            hasher.update(token.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// Encodes tokens against a vocabulary, truncating at `max_len`. Empty
/// token sequences are an error so the caller drops the example.
pub fn encode_example(
    tokens: &[String],
    vocab: &Vocabulary,
    max_len: usize,
    label: Label,
    provenance: Provenance,
    text: impl Into<String>,
) -> Result<Example, TextError> {
    assert!(max_len >= 1, "max_len must be at least 1");
    if tokens.is_empty() {
        return Err(TextError::EmptyTokens);
    }
    let ids = vocab.encode(&tokens[..tokens.len().min(max_len)]);
    Ok(Example { ids, label, provenance, text: text.into() })
}

#[cfg(test)]
mod tests;
