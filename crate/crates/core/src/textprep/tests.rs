use std::path::Path;

use super::splits::{EMOTION_TO_REACTION, REACTION_TO_EMOTION};
use super::synth::{self, SynthConfig};
use super::*;
use crate::folc::{EMOTION_NAMES, N_EMOTIONS, N_REACTIONS};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn toks(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

// ---------------------------------------------------------------- preprocess

#[test]
fn preprocess_splits_final_punctuation() {
    assert_eq!(preprocess("Snake on a plane!"), toks(&["snake", "on", "a", "plane", "!"]));
}

#[test]
fn preprocess_standardizes_numbers_and_drops_urls() {
    assert_eq!(preprocess("Won 3,000 at http://x.co"), toks(&["won", "<num>", "at"]));
    assert_eq!(preprocess("see www.foo.com/bar now"), toks(&["see", "now"]));
    assert_eq!(preprocess("Visit HTTP://X.CO!"), toks(&["visit"]));
    assert_eq!(preprocess("3.5 then 1,000.50"), toks(&["<num>", "then", "<num>"]));
    assert_eq!(preprocess("covid19"), toks(&["covid", "<num>"]));
}

#[test]
fn preprocess_of_empty_text_is_empty() {
    assert_eq!(preprocess(""), Vec::<String>::new());
    assert_eq!(preprocess("   \t\n"), Vec::<String>::new());
    assert_eq!(preprocess("http://only.a.url"), Vec::<String>::new());
}

#[test]
fn preprocess_removes_brackets_and_separates_punctuation() {
    assert_eq!(preprocess("(hello) [world]"), toks(&["hello", "world"]));
    assert_eq!(preprocess("foo(bar){baz}"), toks(&["foo", "bar", "baz"]));
    assert_eq!(preprocess("don't stop"), toks(&["don", "'", "t", "stop"]));
    assert_eq!(preprocess("#Happy:yes"), toks(&["#", "happy", ":", "yes"]));
    assert_eq!(preprocess("\"quoted\""), toks(&["\"", "quoted", "\""]));
    assert_eq!(preprocess("wait... what?!"), toks(&["wait", ".", ".", ".", "what", "?", "!"]));
}

#[test]
fn preprocess_is_idempotent_on_fixtures() {
    for text in [
        "Snake on a plane!",
        "Won 3,000 at http://x.co",
        "(hello) [world] #tag don't 12.5 www.x.y !!",
        "mixed CASE with 'quotes' and 7 numbers 8,9",
    ] {
        let once = preprocess(text);
        let twice = preprocess(&once.join(" "));
        assert_eq!(twice, once, "text {text:?}");
    }
}

proptest! {
    #[test]
    fn preprocess_is_idempotent(text in ".{0,80}") {
        let once = preprocess(&text);
        let twice = preprocess(&once.join(" "));
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn preprocess_is_idempotent_on_dense_ascii(
        text in "[a-z0-9.,!?;:'\"#(){}\\[\\] ]{0,60}",
    ) {
        let once = preprocess(&text);
        let twice = preprocess(&once.join(" "));
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn preprocess_output_is_lowercase_and_unspaced(text in ".{0,80}") {
        for token in preprocess(&text) {
            prop_assert!(!token.is_empty());
            prop_assert!(!token.chars().any(char::is_whitespace));
            prop_assert_eq!(token.to_lowercase(), token.clone());
        }
    }
}

// -------------------------------------------------------------- filter_posts

#[test]
fn filter_keeps_dominant_posts() {
    let cfg = FilterConfig::default();
    // love 30, wow 2, haha 1 -> canonical hits [haha, sad, angry, love, wow]
    let post = RawPost::new("p", [1, 0, 0, 30, 2]);
    let kept = filter_posts(&[post], &cfg);
    assert_eq!(kept, vec![("p".to_string(), 3)]);
}

#[test]
fn filter_drops_below_threshold_and_ties() {
    let cfg = FilterConfig::default();
    let below = RawPost::new("b", [5, 5, 5, 0, 0]);
    assert!(filter_posts(&[below], &cfg).is_empty());

    let tied = RawPost::new("t", [0, 10, 10, 0, 0]);
    assert!(filter_posts(&[tied], &cfg).is_empty());
}

#[test]
fn filter_drops_non_dominant_posts() {
    let cfg = FilterConfig::default();
    // max 8, others total 22: 8 <= 0.4*22 = 8.8 -> dropped.
    let weak = RawPost::new("w", [8, 7, 7, 5, 3]);
    assert!(filter_posts(&[weak], &cfg).is_empty());
    // max 9, others 21: 9 > 8.4 -> kept.
    let strong = RawPost::new("s", [9, 7, 6, 5, 3]);
    assert_eq!(filter_posts(&[strong], &cfg), vec![("s".to_string(), 0)]);
}

#[test]
fn per_class_gamma_reading_is_more_permissive() {
    let post = RawPost::new("p", [8, 7, 7, 5, 3]);
    let mass = FilterConfig::default();
    assert!(filter_posts(std::slice::from_ref(&post), &mass).is_empty());

    let per_class = FilterConfig { gamma_mode: GammaMode::PerClass, ..mass };
    // 8 > 0.4*7, 0.4*5, 0.4*3 -> kept under the per-class reading.
    assert_eq!(filter_posts(&[post], &per_class), vec![("p".to_string(), 0)]);
}

/// Reference implementation written straight from the rule statement.
fn reference_filter(posts: &[RawPost], cfg: &FilterConfig) -> Vec<(String, usize)> {
    let mut kept = Vec::new();
    'posts: for p in posts {
        let total: u64 = p.hits.iter().sum();
        if total < cfg.tau {
            continue;
        }
        let mut best = 0usize;
        for k in 1..N_REACTIONS {
            if p.hits[k] > p.hits[best] {
                best = k;
            }
        }
        for k in 0..N_REACTIONS {
            if k != best && p.hits[k] == p.hits[best] {
                continue 'posts;
            }
        }
        let max = p.hits[best] as f64;
        let ok = match cfg.gamma_mode {
            GammaMode::MassOfOthers => max > cfg.gamma * (total - p.hits[best]) as f64,
            GammaMode::PerClass => {
                (0..N_REACTIONS).all(|k| k == best || max > cfg.gamma * p.hits[k] as f64)
            }
        };
        if ok {
            kept.push((p.text.clone(), best));
        }
    }
    kept
}

#[test]
fn filter_matches_reference_on_random_posts() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let posts: Vec<RawPost> = (0..10_000)
        .map(|i| {
            let mut hits = [0u64; N_REACTIONS];
            for h in &mut hits {
                *h = rng.random_range(0..12);
            }
            RawPost::new(format!("post {i}"), hits)
        })
        .collect();

    for tau in [0, 20] {
        for gamma in [0.4, 1.0, 2.5] {
            for gamma_mode in [GammaMode::MassOfOthers, GammaMode::PerClass] {
                let cfg = FilterConfig { tau, gamma, gamma_mode };
                assert_eq!(
                    filter_posts(&posts, &cfg),
                    reference_filter(&posts, &cfg),
                    "cfg {cfg:?}"
                );
            }
        }
    }
}

// ---------------------------------------------------------------- vocabulary

#[test]
fn vocabulary_ranks_by_frequency_then_lexicographic() {
    let streams = [toks(&["b", "a", "b"]), toks(&["c", "b", "a"])];
    let vocab = Vocabulary::build(streams.iter(), 10).unwrap();
    assert_eq!(vocab.len(), 3 + N_SPECIALS);
    assert_eq!(vocab.id("b"), 3);
    assert_eq!(vocab.id("a"), 4);
    assert_eq!(vocab.id("c"), 5);
    assert_eq!(vocab.token(3), "b");
}

#[test]
fn vocabulary_tie_break_is_lexicographic_under_budget() {
    let streams = [toks(&["b", "a", "b", "a"])];
    let vocab = Vocabulary::build(streams.iter(), 1).unwrap();
    assert_eq!(vocab.id("a"), 3);
    assert_eq!(vocab.id("b"), UNK_ID);
}

#[test]
fn vocabulary_reserves_special_ids() {
    let streams = [toks(&["x"])];
    let vocab = Vocabulary::build(streams.iter(), 10).unwrap();
    assert_eq!(vocab.id(PAD_TOKEN), PAD_ID);
    assert_eq!(vocab.id(UNK_TOKEN), UNK_ID);
    assert_eq!(vocab.id(NUM_TOKEN), NUM_ID);
    assert_eq!(vocab.token(PAD_ID), PAD_TOKEN);
    assert_eq!(vocab.token(UNK_ID), UNK_TOKEN);
    assert_eq!(vocab.token(NUM_ID), NUM_TOKEN);
    assert_eq!(vocab.id("unseen"), UNK_ID);
}

#[test]
fn vocabulary_does_not_rank_special_tokens() {
    let streams = [toks(&["<num>", "<num>", "x"])];
    let vocab = Vocabulary::build(streams.iter(), 10).unwrap();
    assert_eq!(vocab.len(), 1 + N_SPECIALS);
    assert_eq!(vocab.id("<num>"), NUM_ID);
}

#[test]
fn vocabulary_build_rejects_empty_corpus() {
    let streams: [Vec<String>; 1] = [vec![]];
    assert!(matches!(
        Vocabulary::build(streams.iter(), 10),
        Err(TextError::EmptyCorpus)
    ));
}

#[test]
fn vocabulary_save_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vocab.txt");
    let streams = [toks(&["beta", "alpha", "beta", "gamma"])];
    let vocab = Vocabulary::build(streams.iter(), 10).unwrap();
    vocab.save(&path).unwrap();

    let loaded = Vocabulary::load(&path).unwrap();
    assert_eq!(loaded, vocab);
    assert_eq!(loaded.sha256_hex(), vocab.sha256_hex());

    let other = Vocabulary::build([toks(&["different"])].iter(), 10).unwrap();
    assert_ne!(other.sha256_hex(), vocab.sha256_hex());
}

#[test]
fn vocabulary_file_lines_map_to_ids() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vocab.txt");
    let streams = [toks(&["beta", "alpha", "beta"])];
    let vocab = Vocabulary::build(streams.iter(), 10).unwrap();
    vocab.save(&path).unwrap();

    let lines: Vec<String> =
        std::fs::read_to_string(&path).unwrap().lines().map(str::to_string).collect();
    for (line_no, token) in lines.iter().enumerate() {
        assert_eq!(vocab.id(token) as usize, line_no + N_SPECIALS);
    }
}

// -------------------------------------------------------------------- encode

#[test]
fn encode_truncates_at_max_len() {
    let words: Vec<String> = (0..45).map(|i| format!("w{i}z")).collect();
    let vocab = Vocabulary::build([words.clone()].iter(), 100).unwrap();
    let ex = encode_example(&words, &vocab, 30, Label::None, Provenance::Posts, "t").unwrap();
    assert_eq!(ex.ids.len(), 30);

    let short = toks(&["a", "b", "c", "d", "e"]);
    let ex = encode_example(&short, &vocab, 30, Label::None, Provenance::Posts, "t").unwrap();
    assert_eq!(ex.ids.len(), 5);
}

#[test]
fn encode_rejects_empty_token_sequences() {
    let vocab = Vocabulary::build([toks(&["x"])].iter(), 10).unwrap();
    let err = encode_example(&[], &vocab, 30, Label::None, Provenance::Posts, "t").unwrap_err();
    assert!(matches!(err, TextError::EmptyTokens));
}

// ------------------------------------------------------------------- ingest

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

#[test]
fn posts_round_trip_through_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("posts.tsv");
    let posts = vec![
        RawPost::new("first post", [1, 2, 3, 4, 5]),
        RawPost::new("second one !", [0, 0, 30, 2, 1]),
    ];
    write_posts_tsv(&path, &posts).unwrap();
    let read = read_posts_tsv(&path).unwrap();
    assert_eq!(read.items, posts);
    assert!(read.warnings.is_empty());
}

#[test]
fn posts_reader_requires_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("posts.tsv");
    write(&path, "text\tlike\twow\thaha\tsad\tangry\nx\t1\t1\t1\t1\t1\n");
    assert!(matches!(read_posts_tsv(&path), Err(TextError::BadHeader { .. })));
}

#[test]
fn posts_reader_maps_columns_to_canonical_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("posts.tsv");
    write(&path, "text\tlove\twow\thaha\tsad\tangry\np\t10\t20\t30\t40\t50\n");
    let read = read_posts_tsv(&path).unwrap();
    // canonical order [HAHA, SAD, ANGRY, LOVE, WOW]
    assert_eq!(read.items[0].hits, [30, 40, 50, 10, 20]);
}

#[test]
fn posts_reader_warns_and_skips_malformed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("posts.tsv");
    write(
        &path,
        "text\tlove\twow\thaha\tsad\tangry\nok\t1\t2\t3\t4\t5\nshort\t1\t2\t3\t4\nbad\t1\t2\tx\t4\t5\n",
    );
    let read = read_posts_tsv(&path).unwrap();
    assert_eq!(read.items.len(), 1);
    assert_eq!(read.warnings.len(), 2);
    assert!(read.warnings[0].contains("line 3"), "{:?}", read.warnings);
    assert!(read.warnings[1].contains("line 4"), "{:?}", read.warnings);
}

#[test]
fn unlabeled_reader_skips_blank_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unlabeled.txt");
    write(&path, "first\n\n  \nsecond\n");
    let read = read_unlabeled_lines(&path).unwrap();
    assert_eq!(read.items, vec!["first".to_string(), "second".to_string()]);
}

#[test]
fn affective_reader_takes_the_argmax_and_drops_ties() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("affective.tsv");
    write(
        &path,
        "surprising\t10\t0\t0\t5\t0\t80\ntied\t50\t50\t0\t0\t0\t0\nangry\t90\t1\t2\t3\t4\t5\n",
    );
    let read = ingest_emotion_dataset(&path, EmotionFormat::Affective).unwrap();
    assert_eq!(
        read.items,
        vec![("surprising".to_string(), 5), ("angry".to_string(), 0)]
    );
    assert!(read.warnings.is_empty());
}

#[test]
fn affective_reader_rejects_out_of_range_scores() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("affective.tsv");
    write(&path, "over\t101\t0\t0\t0\t0\t0\nbad\t1\t2\tx\t0\t0\t0\nok\t90\t0\t0\t0\t0\t0\n");
    let read = ingest_emotion_dataset(&path, EmotionFormat::Affective).unwrap();
    assert_eq!(read.items, vec![("ok".to_string(), 0)]);
    assert_eq!(read.warnings.len(), 2);
    assert!(read.warnings[0].contains("line 1"));
    assert!(read.warnings[1].contains("line 2"));
}

#[test]
fn isear_reader_maps_joy_and_drops_shame_guilt() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("isear.tsv");
    write(&path, "a\tjoy\nb\tguilt\nc\tshame\nd\tsadness\ne\tmystery\n");
    let read = ingest_emotion_dataset(&path, EmotionFormat::Isear).unwrap();
    assert_eq!(read.items, vec![("a".to_string(), 3), ("d".to_string(), 4)]);
    assert_eq!(read.warnings.len(), 1);
    assert!(read.warnings[0].contains("mystery"));
}

#[test]
fn fairy_reader_applies_the_agreement_rules() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fairy.tsv");
    write(
        &path,
        "agg\tfear\n\
         four\tfear\tfear\tfear\tfear\n\
         disg\tdisgust\tdisgust\tdisgust\tanger\n\
         nond\tfear\tfear\tfear\tsadness\n\
         split\tanger\tanger\tfear\tfear\n\
         neut\tneutral\tneutral\tneutral\tneutral\n\
         aggn\tneutral\n\
         joyv\tjoy\tjoy\tjoy\tjoy\n",
    );
    let read = ingest_emotion_dataset(&path, EmotionFormat::Fairy).unwrap();
    assert_eq!(
        read.items,
        vec![
            ("agg".to_string(), 2),
            ("four".to_string(), 2),
            ("disg".to_string(), 1),
            ("joyv".to_string(), 3),
        ]
    );
    assert!(read.warnings.is_empty());
}

#[test]
fn fairy_reader_warns_on_unknown_labels_and_bad_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fairy.tsv");
    write(&path, "x\tfear\tfear\tfear\nx\twat\ny\tfear\tfear\tfear\twat\n");
    let read = ingest_emotion_dataset(&path, EmotionFormat::Fairy).unwrap();
    assert!(read.items.is_empty());
    assert_eq!(read.warnings.len(), 3);
}

#[test]
fn emotion_writers_round_trip_labels() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<(String, usize)> =
        (0..N_EMOTIONS).map(|e| (format!("text about {}", EMOTION_NAMES[e]), e)).collect();
    for format in [EmotionFormat::Affective, EmotionFormat::Isear, EmotionFormat::Fairy] {
        let path = dir.path().join("set.tsv");
        write_emotion_tsv(&path, &rows, format).unwrap();
        let read = ingest_emotion_dataset(&path, format).unwrap();
        assert_eq!(read.items, rows, "format {format:?}");
        assert!(read.warnings.is_empty());
    }
}

#[test]
fn writers_sanitize_tabs_and_newlines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("posts.tsv");
    let posts = vec![RawPost::new("tab\there\nand newline", [30, 0, 0, 0, 0])];
    write_posts_tsv(&path, &posts).unwrap();
    let read = read_posts_tsv(&path).unwrap();
    assert!(read.warnings.is_empty());
    assert_eq!(read.items[0].text, "tab here and newline");
}

// ------------------------------------------------------------------- splits

/// Letter-only counter so preprocessing never rewrites fixture texts.
fn alpha(i: usize) -> String {
    let mut s = String::new();
    let mut n = i;
    loop {
        s.push((b'a' + (n % 26) as u8) as char);
        n /= 26;
        if n == 0 {
            break;
        }
    }
    s
}

/// Posts with unambiguous labels, `per_class` texts per reaction class.
fn labeled_posts(per_class: usize) -> Vec<RawPost> {
    let mut posts = Vec::new();
    for c in 0..N_REACTIONS {
        for i in 0..per_class {
            let mut hits = [0u64; N_REACTIONS];
            hits[c] = 30;
            posts.push(RawPost::new(format!("reaction post {} {}", alpha(c), alpha(i)), hits));
        }
    }
    posts
}

fn emotion_rows(per_class: usize, tag: &str) -> Vec<(String, usize)> {
    let mut rows = Vec::new();
    for e in 0..N_EMOTIONS {
        for i in 0..per_class {
            rows.push((format!("{tag} {} sentence {}", EMOTION_NAMES[e], alpha(i)), e));
        }
    }
    rows
}

fn split_inputs(fb_per_class: usize, emo_per_class: usize, n_unlabeled: usize) -> SplitInputs {
    SplitInputs {
        fb_posts: labeled_posts(fb_per_class),
        fb_unlabeled: (0..n_unlabeled).map(|i| format!("unlabeled text {}", alpha(i))).collect(),
        affective: emotion_rows(emo_per_class, "aff"),
        isear: emotion_rows(emo_per_class, "ise"),
        fairy: emotion_rows(emo_per_class, "fai"),
    }
}

#[test]
fn splits_have_the_documented_proportions() {
    let cfg = SplitConfig::default();
    let splits = make_splits(split_inputs(200, 10, 50), &cfg).unwrap();

    // 1000 posts: 70/15/15.
    assert_eq!(splits.train.reaction.len(), 700);
    assert_eq!(splits.val.reaction.len(), 150);
    assert_eq!(splits.test.reaction.len(), 150);

    // Two non-test emotion sets of 60: 80/20. Fairy (60) all in test.
    assert_eq!(splits.train.emotion.len(), 96);
    assert_eq!(splits.val.emotion.len(), 24);
    assert_eq!(splits.test.emotion.len(), 60);

    // Unlabeled only in train.
    assert_eq!(splits.train.unlabeled.len(), 50);
    assert_eq!(splits.val.unlabeled.len(), 0);
    assert_eq!(splits.test.unlabeled.len(), 0);
}

#[test]
fn splits_are_stratified_within_one_example_per_class() {
    let cfg = SplitConfig::default();
    // 37 per class exercises the remainder logic.
    let splits = make_splits(split_inputs(37, 11, 0), &cfg).unwrap();

    for c in 0..N_REACTIONS {
        let count = |corpus: &Corpus| {
            corpus.reaction.iter().filter(|e| e.label == Label::Reaction(c)).count() as f64
        };
        let (tr, va, te) = (count(&splits.train), count(&splits.val), count(&splits.test));
        assert!((tr - 37.0 * 0.70).abs() <= 1.0, "class {c} train {tr}");
        assert!((va - 37.0 * 0.15).abs() <= 1.0, "class {c} val {va}");
        assert!((te - 37.0 * 0.15).abs() <= 1.0, "class {c} test {te}");
        assert_eq!(tr + va + te, 37.0);
    }

    for e in 0..N_EMOTIONS {
        let count = |corpus: &Corpus, p: Provenance| {
            corpus
                .emotion
                .iter()
                .filter(|x| x.label == Label::Emotion(e) && x.provenance == p)
                .count() as f64
        };
        for p in [Provenance::AffectiveText, Provenance::Isear] {
            let tr = count(&splits.train, p);
            let va = count(&splits.val, p);
            assert!((tr - 11.0 * 0.8).abs() <= 1.0, "{p:?} class {e} train {tr}");
            assert_eq!(tr + va, 11.0);
        }
    }
}

#[test]
fn held_out_emotion_set_appears_only_in_test() {
    for (test_set, provenance) in [
        (EmotionSource::AffectiveText, Provenance::AffectiveText),
        (EmotionSource::Isear, Provenance::Isear),
        (EmotionSource::FairyTales, Provenance::FairyTales),
    ] {
        let cfg = SplitConfig { test_emotion_set: test_set, ..SplitConfig::default() };
        let splits = make_splits(split_inputs(30, 8, 10), &cfg).unwrap();
        let in_train_or_val = splits
            .train
            .iter_all()
            .chain(splits.val.iter_all())
            .any(|e| e.provenance == provenance);
        assert!(!in_train_or_val, "{test_set:?} leaked out of test");
        assert!(splits.test.emotion.iter().all(|e| e.provenance == provenance));
    }
}

#[test]
fn splits_are_deterministic_under_the_seed() {
    let cfg = SplitConfig { seed: 11, ..SplitConfig::default() };
    let a = make_splits(split_inputs(40, 8, 20), &cfg).unwrap();
    let b = make_splits(split_inputs(40, 8, 20), &cfg).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.val, b.val);
    assert_eq!(a.test, b.test);
    assert_eq!(a.vocab, b.vocab);

    let other = SplitConfig { seed: 12, ..SplitConfig::default() };
    let c = make_splits(split_inputs(40, 8, 20), &other).unwrap();
    assert_ne!(a.train, c.train);
}

#[test]
fn split_texts_are_globally_disjoint() {
    let cfg = SplitConfig::default();
    let splits = make_splits(split_inputs(40, 8, 30), &cfg).unwrap();
    let mut seen = std::collections::HashSet::new();
    for corpus in [&splits.train, &splits.val, &splits.test] {
        for ex in corpus.iter_all() {
            let key = preprocess(&ex.text).join(" ");
            assert!(seen.insert(key), "duplicate text across splits: {:?}", ex.text);
        }
    }
}

#[test]
fn duplicate_texts_keep_their_first_occurrence() {
    let mut inputs = split_inputs(30, 8, 5);
    // Same sentence as a post and an isear row; the post wins.
    let mut hits = [0u64; N_REACTIONS];
    hits[0] = 40;
    inputs.fb_posts.push(RawPost::new("shared duplicated sentence", hits));
    inputs.isear.push(("Shared   DUPLICATED sentence".to_string(), 2));

    let cfg = SplitConfig::default();
    let splits = make_splits(inputs, &cfg).unwrap();
    let dupes: Vec<&Example> = [&splits.train, &splits.val, &splits.test]
        .into_iter()
        .flat_map(|c| c.iter_all())
        .filter(|e| preprocess(&e.text).join(" ").starts_with("shared duplicated"))
        .collect();
    assert_eq!(dupes.len(), 1);
    assert!(matches!(dupes[0].label, Label::Reaction(0)));
}

#[test]
fn vocabulary_is_fitted_on_the_train_side_only() {
    let mut inputs = split_inputs(30, 8, 5);
    inputs.fairy.push(("zzzunique appears once only here".to_string(), 1));
    let cfg = SplitConfig::default(); // fairy held out as test
    let splits = make_splits(inputs, &cfg).unwrap();
    assert_eq!(splits.vocab.id("zzzunique"), UNK_ID);

    let test_has_unk = splits.test.iter_all().any(|e| e.ids.contains(&UNK_ID));
    assert!(test_has_unk);
}

#[test]
fn split_examples_respect_max_len() {
    let mut inputs = split_inputs(30, 8, 0);
    let long = (0..50).map(|i| format!("tok{i}q")).collect::<Vec<_>>().join(" ");
    let mut hits = [0u64; N_REACTIONS];
    hits[1] = 40;
    inputs.fb_posts.push(RawPost::new(long, hits));

    let cfg = SplitConfig::default();
    let splits = make_splits(inputs, &cfg).unwrap();
    for corpus in [&splits.train, &splits.val, &splits.test] {
        assert!(corpus.iter_all().all(|e| !e.ids.is_empty() && e.ids.len() <= cfg.max_len));
    }
}

#[test]
fn splits_reject_empty_inputs() {
    let cfg = SplitConfig::default();

    let mut no_posts = split_inputs(10, 8, 5);
    no_posts.fb_posts = vec![RawPost::new("too few hits", [1, 0, 0, 0, 0])];
    assert!(matches!(
        make_splits(no_posts, &cfg),
        Err(TextError::EmptyInput("reaction-labeled posts"))
    ));

    let mut no_isear = split_inputs(10, 8, 5);
    no_isear.isear.clear();
    assert!(matches!(make_splits(no_isear, &cfg), Err(TextError::EmptyInput(_))));
}

// ------------------------------------------------------- artificial_augment

fn tiny_example(label: Label) -> Example {
    Example { ids: vec![3, 4], label, provenance: Provenance::Posts, text: "t".to_string() }
}

#[test]
fn augmentation_adds_one_copy_per_labeled_example() {
    let corpus = Corpus {
        reaction: (0..N_REACTIONS).map(|r| tiny_example(Label::Reaction(r))).collect(),
        emotion: (0..N_EMOTIONS).map(|e| tiny_example(Label::Emotion(e))).collect(),
        unlabeled: vec![tiny_example(Label::None)],
    };
    let out = artificial_augment(&corpus);

    assert_eq!(out.len(), corpus.len() + N_REACTIONS + N_EMOTIONS);
    assert_eq!(&out.reaction[..N_REACTIONS], &corpus.reaction[..]);
    assert_eq!(&out.emotion[..N_EMOTIONS], &corpus.emotion[..]);
    assert_eq!(out.unlabeled, corpus.unlabeled);

    // Reaction originals gained emotion copies per the fixed mapping.
    for (r, added) in out.emotion[N_EMOTIONS..].iter().enumerate() {
        assert_eq!(added.label, Label::Emotion(REACTION_TO_EMOTION[r]));
    }
    for (e, added) in out.reaction[N_REACTIONS..].iter().enumerate() {
        assert_eq!(added.label, Label::Reaction(EMOTION_TO_REACTION[e]));
    }
}

#[test]
fn augmentation_mappings_follow_the_fixed_tables() {
    // HAHA, SAD, ANGRY, LOVE, WOW -> happiness, sadness, anger, happiness, surprise
    assert_eq!(REACTION_TO_EMOTION, [3, 4, 0, 3, 5]);
    // anger, disgust, fear, happiness, sadness, surprise -> ANGRY, ANGRY, WOW, HAHA, SAD, WOW
    assert_eq!(EMOTION_TO_REACTION, [2, 2, 4, 0, 1, 4]);

    // No reaction ever contributes a fear or disgust label.
    let fear = 2;
    let disgust = 1;
    assert!(REACTION_TO_EMOTION.iter().all(|&e| e != fear && e != disgust));
}

// -------------------------------------------------------------------- synth

#[test]
fn synth_is_deterministic_and_sized() {
    let cfg = SynthConfig::default();
    let a = synth::generate(&cfg);
    let b = synth::generate(&cfg);
    assert_eq!(a, b);
    assert_eq!(a.posts.len(), cfg.n_posts);
    assert_eq!(a.unlabeled.len(), cfg.n_unlabeled);
    assert_eq!(a.affective.len(), cfg.n_emotion_a);
    assert_eq!(a.isear.len(), cfg.n_emotion_b);
    assert_eq!(a.fairy.len(), cfg.n_emotion_test);

    let c = synth::generate(&SynthConfig { seed: 1, ..cfg });
    assert_ne!(a, c);
}

#[test]
fn synth_posts_mostly_survive_the_filter() {
    let cfg = SynthConfig::default();
    let data = synth::generate(&cfg);
    let kept = filter_posts(&data.posts, &FilterConfig::default());
    assert!(
        kept.len() as f64 >= 0.85 * cfg.n_posts as f64,
        "only {} of {} posts kept",
        kept.len(),
        cfg.n_posts
    );
}

#[test]
fn synth_train_sets_are_skewed_and_test_set_is_not() {
    let data = synth::generate(&SynthConfig::default());
    let rare_share = |rows: &[(String, usize)]| {
        rows.iter().filter(|(_, e)| *e == 3 || *e == 4).count() as f64 / rows.len() as f64
    };
    assert_eq!(rare_share(&data.affective), 0.0, "affective");
    assert_eq!(rare_share(&data.isear), 0.0, "isear");
    assert!(rare_share(&data.fairy) > 0.20, "fairy {}", rare_share(&data.fairy));
}

#[test]
fn synth_texts_preprocess_cleanly() {
    let data = synth::generate(&SynthConfig { n_posts: 100, ..SynthConfig::default() });
    for text in data
        .posts
        .iter()
        .map(|p| &p.text)
        .chain(&data.unlabeled)
        .chain(data.affective.iter().map(|(t, _)| t))
    {
        let tokens = preprocess(text);
        assert!(!tokens.is_empty(), "text {text:?}");
        assert!(!tokens.iter().any(|t| t == NUM_TOKEN), "digit leaked into {text:?}");
    }
}

#[test]
fn synth_files_round_trip_and_split() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        n_posts: 400,
        n_unlabeled: 100,
        n_emotion_a: 120,
        n_emotion_b: 120,
        n_emotion_test: 120,
        ..SynthConfig::default()
    };
    let data = synth::generate(&cfg);
    let paths = data.write_files(dir.path()).unwrap();

    let posts = read_posts_tsv(&paths[0]).unwrap();
    assert_eq!(posts.items, data.posts);
    let unlabeled = read_unlabeled_lines(&paths[1]).unwrap();
    assert_eq!(unlabeled.items, data.unlabeled);
    let affective = ingest_emotion_dataset(&paths[2], EmotionFormat::Affective).unwrap();
    assert_eq!(affective.items, data.affective);
    let isear = ingest_emotion_dataset(&paths[3], EmotionFormat::Isear).unwrap();
    assert_eq!(isear.items, data.isear);
    let fairy = ingest_emotion_dataset(&paths[4], EmotionFormat::Fairy).unwrap();
    assert_eq!(fairy.items, data.fairy);

    let inputs = SplitInputs {
        fb_posts: posts.items,
        fb_unlabeled: unlabeled.items,
        affective: affective.items,
        isear: isear.items,
        fairy: fairy.items,
    };
    let splits = make_splits(inputs, &SplitConfig::default()).unwrap();
    assert!(splits.train.reaction.len() > 200);
    assert!(!splits.train.emotion.is_empty());
    assert!(!splits.test.emotion.is_empty());
    assert!(splits.vocab.len() > N_SPECIALS);
}
