//! Stratified split construction and the artificial-label baseline.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::folc::{N_EMOTIONS, N_REACTIONS};

use super::{
    encode_example, filter_posts, preprocess, Corpus, FilterConfig, Label, Provenance, RawPost,
    TextError, Vocabulary, DEFAULT_MAX_LEN, DEFAULT_VOCAB_SIZE,
};

/// Emotion label granted to each reaction class by the artificial baseline.
/// No reaction maps to fear or disgust.
pub const REACTION_TO_EMOTION: [usize; N_REACTIONS] = [3, 4, 0, 3, 5];
/// Reaction label granted to each emotion class by the artificial baseline.
pub const EMOTION_TO_REACTION: [usize; N_EMOTIONS] = [2, 2, 4, 0, 1, 4];

/// The emotion dataset whose entirety becomes the test side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EmotionSource {
    AffectiveText,
    Isear,
    FairyTales,
}

impl std::fmt::Display for EmotionSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EmotionSource::AffectiveText => "affective",
            EmotionSource::Isear => "isear",
            EmotionSource::FairyTales => "fairy",
        })
    }
}

impl std::str::FromStr for EmotionSource {
    type Err = String;
    fn from_str(s: &str) -> Result<EmotionSource, String> {
        match s {
            "affective" => Ok(EmotionSource::AffectiveText),
            "isear" => Ok(EmotionSource::Isear),
            "fairy" => Ok(EmotionSource::FairyTales),
            other => Err(format!("unknown emotion dataset {other:?} (expected affective, isear or fairy)")),
        }
    }
}

/// Raw material for split construction.
#[derive(Debug, Clone, Default)]
pub struct SplitInputs {
    pub fb_posts: Vec<RawPost>,
    pub fb_unlabeled: Vec<String>,
    /// Emotion-labeled texts with canonical class indices, per source.
    pub affective: Vec<(String, usize)>,
    pub isear: Vec<(String, usize)>,
    pub fairy: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitConfig {
    pub test_emotion_set: EmotionSource,
    pub seed: u64,
    pub vocab_size: usize,
    pub max_len: usize,
    pub filter: FilterConfig,
}

impl Default for SplitConfig {
    fn default() -> SplitConfig {
        SplitConfig {
            test_emotion_set: EmotionSource::FairyTales,
            seed: 0,
            vocab_size: DEFAULT_VOCAB_SIZE,
            max_len: DEFAULT_MAX_LEN,
            filter: FilterConfig::default(),
        }
    }
}

/// The three corpora plus the vocabulary fitted on the train side.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Corpus,
    pub val: Corpus,
    pub test: Corpus,
    pub vocab: Vocabulary,
}

/// Fractions of the labeled posts going to train/val/test.
const FB_FRACTIONS: [f64; 3] = [0.70, 0.15, 0.15];
/// Fractions of each non-test emotion dataset going to train/val/test.
const EMOTION_FRACTIONS: [f64; 3] = [0.80, 0.20, 0.0];

struct Prepared {
    text: String,
    tokens: Vec<String>,
    label: Label,
    provenance: Provenance,
}

/// Apportions `n` into integer parts proportional to `fractions` using
/// floor + largest remainder, so parts sum to `n` and each stays within
/// one of its exact share.
fn largest_remainder(n: usize, fractions: &[f64]) -> Vec<usize> {
    let mut parts: Vec<usize> = fractions
        .iter()
        .map(|f| ((n as f64) * f + 1e-9).floor() as usize)
        .collect();
    let assigned: usize = parts.iter().sum();
    debug_assert!(assigned <= n, "floor apportionment overshot");

    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = n as f64 * fractions[a] - parts[a] as f64;
        let rb = n as f64 * fractions[b] - parts[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for i in order.into_iter().cycle().take(n.saturating_sub(assigned)) {
        parts[i] += 1;
    }
    parts
}

/// Shuffles each class bucket and deals members into three splits with the
/// given fractions, stratified per class.
fn stratified_deal(
    records: Vec<Prepared>,
    n_classes: usize,
    class_of: impl Fn(&Prepared) -> usize,
    fractions: &[f64; 3],
    rng: &mut ChaCha20Rng,
) -> [Vec<Prepared>; 3] {
    let mut buckets: Vec<Vec<Prepared>> = (0..n_classes).map(|_| Vec::new()).collect();
    for r in records {
        let c = class_of(&r);
        buckets[c].push(r);
    }

    let mut out: [Vec<Prepared>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for bucket in &mut buckets {
        bucket.shuffle(rng);
        let parts = largest_remainder(bucket.len(), fractions);
        for (split, take) in parts.into_iter().enumerate() {
            for r in bucket.drain(..take) {
                out[split].push(r);
            }
        }
    }
    out
}

/// Builds the train/val/test corpora: labeled posts split 70/15/15, the two
/// non-test emotion datasets 80/20, the held-out emotion dataset fully into
/// test, and unlabeled posts fully into train. Texts are deduplicated by
/// token sequence across all inputs, the vocabulary is fitted on the train
/// side only, and everything is deterministic under the seed.
pub fn make_splits(inputs: SplitInputs, cfg: &SplitConfig) -> Result<Splits, TextError> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut prepare = |text: &str, label: Label, provenance: Provenance| -> Option<Prepared> {
        let tokens = preprocess(text);
        if tokens.is_empty() || !seen.insert(tokens.join(" ")) {
            return None;
        }
        Some(Prepared { text: text.to_string(), tokens, label, provenance })
    };

    let fb: Vec<Prepared> = filter_posts(&inputs.fb_posts, &cfg.filter)
        .into_iter()
        .filter_map(|(text, r)| prepare(&text, Label::Reaction(r), Provenance::Posts))
        .collect();
    let mut emotion_sets: Vec<(EmotionSource, Vec<Prepared>)> = Vec::new();
    for (source, provenance, rows) in [
        (EmotionSource::AffectiveText, Provenance::AffectiveText, &inputs.affective),
        (EmotionSource::Isear, Provenance::Isear, &inputs.isear),
        (EmotionSource::FairyTales, Provenance::FairyTales, &inputs.fairy),
    ] {
        let set: Vec<Prepared> = rows
            .iter()
            .filter_map(|(text, e)| prepare(text, Label::Emotion(*e), provenance))
            .collect();
        emotion_sets.push((source, set));
    }
    let unlabeled: Vec<Prepared> = inputs
        .fb_unlabeled
        .iter()
        .filter_map(|text| prepare(text, Label::None, Provenance::Posts))
        .collect();

    if fb.is_empty() {
        return Err(TextError::EmptyInput("reaction-labeled posts"));
    }
    for (source, set) in &emotion_sets {
        if set.is_empty() {
            return Err(TextError::EmptyInput(match source {
                EmotionSource::AffectiveText => "affective dataset",
                EmotionSource::Isear => "isear dataset",
                EmotionSource::FairyTales => "fairy dataset",
            }));
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let [mut train, mut val, mut test] = stratified_deal(
        fb,
        N_REACTIONS,
        |r| match r.label {
            Label::Reaction(c) => c,
            _ => unreachable!("posts are reaction-labeled"),
        },
        &FB_FRACTIONS,
        &mut rng,
    );
    for (source, set) in emotion_sets {
        if source == cfg.test_emotion_set {
            test.extend(set);
            continue;
        }
        let [tr, va, te] = stratified_deal(
            set,
            N_EMOTIONS,
            |r| match r.label {
                Label::Emotion(c) => c,
                _ => unreachable!("emotion datasets are emotion-labeled"),
            },
            &EMOTION_FRACTIONS,
            &mut rng,
        );
        debug_assert!(te.is_empty());
        train.extend(tr);
        val.extend(va);
        test.extend(te);
    }
    train.extend(unlabeled);

    let vocab = Vocabulary::build(train.iter().map(|p| &p.tokens), cfg.vocab_size)?;

    let encode_all = |records: Vec<Prepared>| -> Result<Corpus, TextError> {
        let mut corpus = Corpus::default();
        for p in records {
            let ex = encode_example(&p.tokens, &vocab, cfg.max_len, p.label, p.provenance, p.text)?;
            match ex.label {
                Label::Reaction(_) => corpus.reaction.push(ex),
                Label::Emotion(_) => corpus.emotion.push(ex),
                Label::None => corpus.unlabeled.push(ex),
            }
        }
        Ok(corpus)
    };

    Ok(Splits {
        train: encode_all(train)?,
        val: encode_all(val)?,
        test: encode_all(test)?,
        vocab,
    })
}

/// Adds, for every labeled example, a copy labeled for the other task via
/// the fixed class mappings. Originals are preserved; the result grows by
/// exactly the number of labeled examples.
pub fn artificial_augment(corpus: &Corpus) -> Corpus {
    let mut out = corpus.clone();
    for ex in &corpus.reaction {
        let Label::Reaction(r) = ex.label else { continue };
        let mut copy = ex.clone();
        copy.label = Label::Emotion(REACTION_TO_EMOTION[r]);
        out.emotion.push(copy);
    }
    for ex in &corpus.emotion {
        let Label::Emotion(e) = ex.label else { continue };
        let mut copy = ex.clone();
        copy.label = Label::Reaction(EMOTION_TO_REACTION[e]);
        out.reaction.push(copy);
    }
    out
}
