//! Synthetic corpus generator.
//!
//! Emits datasets in the same shapes the readers ingest, so the whole
//! pipeline and its experiments can run without any real data. Each text
//! is drawn from a latent emotion class: mostly topic words of that class
//! plus stopwords. Reaction tallies for posts are derived from the latent
//! emotion through the same class relationships the rule set encodes
//! (happiness splits evenly between HAHA and LOVE), so the two tasks agree
//! with each other the way the rules expect.
//!
//! The two train-side emotion datasets are skewed (happiness and sadness
//! are absent by default) while the test-side dataset is uniform, so
//! emotion supervision alone misses exactly the classes that reaction
//! tallies carry direct evidence for through HAHA, LOVE and SAD.

use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::folc::N_EMOTIONS;

use super::ingest::{write_emotion_tsv, write_posts_tsv, write_unlabeled_lines, EmotionFormat};
use super::{RawPost, SplitInputs, TextError, N_REACTIONS};

pub const POSTS_FILE: &str = "posts.tsv";
pub const UNLABELED_FILE: &str = "unlabeled.txt";
pub const AFFECTIVE_FILE: &str = "affective.tsv";
pub const ISEAR_FILE: &str = "isear.tsv";
pub const FAIRY_FILE: &str = "fairy.tsv";

const STOPWORDS: [&str; 14] =
    ["the", "a", "to", "and", "of", "it", "is", "was", "i", "you", "my", "we", "on", "so"];

/// Topic-word stems per emotion class, kept digit-free so number
/// standardization never rewrites them.
const TOPIC_STEMS: [&str; N_EMOTIONS] =
    ["rage", "gross", "dread", "cheer", "glum", "marvel"];

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Raw posts, tallies included; a small share is low-signal filler that
    /// the post filter should drop.
    pub n_posts: usize,
    pub n_unlabeled: usize,
    /// Sizes of the two skewed train-side emotion datasets.
    pub n_emotion_a: usize,
    pub n_emotion_b: usize,
    /// Size of the uniform test-side emotion dataset.
    pub n_emotion_test: usize,
    pub topic_words_per_class: usize,
    /// Probability that a word is a topic word rather than a stopword.
    pub topic_prob: f64,
    /// Probability that a topic word comes from a different class.
    pub confusion_prob: f64,
    /// Share of posts that are under-threshold filler.
    pub junk_post_prob: f64,
    pub min_words: usize,
    pub max_words: usize,
    /// Class weights of the two train-side emotion datasets, in canonical
    /// emotion order.
    pub skew: [f64; N_EMOTIONS],
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig {
            seed: 0,
            n_posts: 1200,
            n_unlabeled: 600,
            n_emotion_a: 300,
            n_emotion_b: 300,
            n_emotion_test: 300,
            topic_words_per_class: 12,
            topic_prob: 0.6,
            confusion_prob: 0.08,
            junk_post_prob: 0.05,
            min_words: 4,
            max_words: 10,
            skew: [3.0, 3.0, 3.0, 0.0, 0.0, 3.0],
        }
    }
}

/// Generated datasets, shaped like the reader outputs. `affective` and
/// `isear` are the skewed train-side sets; `fairy` is the uniform set meant
/// to be held out as test.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub posts: Vec<RawPost>,
    pub unlabeled: Vec<String>,
    pub affective: Vec<(String, usize)>,
    pub isear: Vec<(String, usize)>,
    pub fairy: Vec<(String, usize)>,
}

impl SynthData {
    pub fn into_split_inputs(self) -> SplitInputs {
        SplitInputs {
            fb_posts: self.posts,
            fb_unlabeled: self.unlabeled,
            affective: self.affective,
            isear: self.isear,
            fairy: self.fairy,
        }
    }

    /// Writes all five files into `dir` and returns their paths in the
    /// order posts, unlabeled, affective, isear, fairy.
    pub fn write_files(&self, dir: &Path) -> Result<[PathBuf; 5], TextError> {
        let paths = [
            dir.join(POSTS_FILE),
            dir.join(UNLABELED_FILE),
            dir.join(AFFECTIVE_FILE),
            dir.join(ISEAR_FILE),
            dir.join(FAIRY_FILE),
        ];
        write_posts_tsv(&paths[0], &self.posts)?;
        write_unlabeled_lines(&paths[1], &self.unlabeled)?;
        write_emotion_tsv(&paths[2], &self.affective, EmotionFormat::Affective)?;
        write_emotion_tsv(&paths[3], &self.isear, EmotionFormat::Isear)?;
        write_emotion_tsv(&paths[4], &self.fairy, EmotionFormat::Fairy)?;
        Ok(paths)
    }
}

struct Generator {
    cfg: SynthConfig,
    topics: Vec<Vec<String>>,
    rng: ChaCha20Rng,
}

impl Generator {
    fn new(cfg: &SynthConfig) -> Generator {
        assert!(cfg.topic_words_per_class >= 1 && cfg.topic_words_per_class <= 26);
        assert!(cfg.min_words >= 1 && cfg.min_words <= cfg.max_words);
        let topics = TOPIC_STEMS
            .iter()
            .map(|stem| {
                (0..cfg.topic_words_per_class)
                    .map(|i| format!("{stem}{}", (b'a' + i as u8) as char))
                    .collect()
            })
            .collect();
        Generator { cfg: cfg.clone(), topics, rng: ChaCha20Rng::seed_from_u64(cfg.seed) }
    }

    fn sentence(&mut self, emotion: usize) -> String {
        let len = self.rng.random_range(self.cfg.min_words..=self.cfg.max_words);
        let mut words: Vec<&str> = Vec::with_capacity(len + 1);
        for _ in 0..len {
            if self.rng.random_bool(self.cfg.topic_prob) {
                let class = if self.rng.random_bool(self.cfg.confusion_prob) {
                    let mut c = self.rng.random_range(0..N_EMOTIONS - 1);
                    if c >= emotion {
                        c += 1;
                    }
                    c
                } else {
                    emotion
                };
                let bank = &self.topics[class];
                words.push(&bank[self.rng.random_range(0..bank.len())]);
            } else {
                words.push(STOPWORDS[self.rng.random_range(0..STOPWORDS.len())]);
            }
        }
        let mut text = words.join(" ");
        match self.rng.random_range(0..4u8) {
            0 => text.push_str(" !"),
            1 => text.push_str(" ."),
            _ => {}
        }
        text
    }

    /// Reaction class consistent with the latent emotion; happiness splits
    /// between HAHA and LOVE.
    fn reaction_for(&mut self, emotion: usize) -> usize {
        match emotion {
            0 | 1 => 2,                                            // anger, disgust -> ANGRY
            2 | 5 => 4,                                            // fear, surprise -> WOW
            3 => if self.rng.random_bool(0.5) { 0 } else { 3 },    // happiness -> HAHA | LOVE
            4 => 1,                                                // sadness -> SAD
            _ => unreachable!("emotion index"),
        }
    }

    /// Tallies dominated by `reaction`: 70-90% of 25..=60 total hits.
    fn post_hits(&mut self, reaction: usize) -> [u64; N_REACTIONS] {
        let total: u64 = self.rng.random_range(25..=60);
        let share = 0.70 + 0.20 * self.rng.random::<f64>();
        let dominant = ((total as f64) * share).round().clamp(1.0, total as f64) as u64;
        let mut hits = [0u64; N_REACTIONS];
        hits[reaction] = dominant;
        let mut rest = total - dominant;
        while rest > 0 {
            let k = self.rng.random_range(0..N_REACTIONS);
            if k != reaction {
                hits[k] += 1;
                rest -= 1;
            }
        }
        hits
    }

    /// Sparse tallies below the filter threshold.
    fn junk_hits(&mut self) -> [u64; N_REACTIONS] {
        let total: u64 = self.rng.random_range(0..20);
        let mut hits = [0u64; N_REACTIONS];
        for _ in 0..total {
            hits[self.rng.random_range(0..N_REACTIONS)] += 1;
        }
        hits
    }

    fn emotion_set(&mut self, n: usize, weights: &[f64; N_EMOTIONS]) -> Vec<(String, usize)> {
        let dist = WeightedIndex::new(weights).expect("valid class weights");
        (0..n)
            .map(|_| {
                let e = dist.sample(&mut self.rng);
                (self.sentence(e), e)
            })
            .collect()
    }
}

/// Generates the full dataset family. Deterministic under the seed.
pub fn generate(cfg: &SynthConfig) -> SynthData {
    let mut g = Generator::new(cfg);

    let mut posts = Vec::with_capacity(cfg.n_posts);
    for _ in 0..cfg.n_posts {
        if g.rng.random_bool(cfg.junk_post_prob) {
            let e = g.rng.random_range(0..N_EMOTIONS);
            let text = g.sentence(e);
            let hits = g.junk_hits();
            posts.push(RawPost::new(text, hits));
        } else {
            let e = g.rng.random_range(0..N_EMOTIONS);
            let r = g.reaction_for(e);
            let text = g.sentence(e);
            let hits = g.post_hits(r);
            posts.push(RawPost::new(text, hits));
        }
    }

    let unlabeled =
        (0..cfg.n_unlabeled).map(|_| {
            let e = g.rng.random_range(0..N_EMOTIONS);
            g.sentence(e)
        }).collect();

    let skew = cfg.skew;
    let affective = g.emotion_set(cfg.n_emotion_a, &skew);
    let isear = g.emotion_set(cfg.n_emotion_b, &skew);
    let fairy = g.emotion_set(cfg.n_emotion_test, &[1.0; N_EMOTIONS]);

    SynthData { posts, unlabeled, affective, isear, fairy }
}
