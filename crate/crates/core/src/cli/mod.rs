//! Command-line front end. One binary, six subcommands, chained through run
//! directories: `prepare` writes splits and a vocabulary, `train` adds a
//! checkpoint, `eval` and `predict` consume it. `rules` inspects the
//! constraint set and `synthetic` runs the built-in end-to-end experiment.
//!
//! Exit codes: 0 success, 1 a check or experiment missed its thresholds,
//! 2 bad input (missing files, malformed data, hash mismatches).

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::eval::{aggregate_splits, metrics_json, render_table, MetricsReport};
use crate::folc::{
    compile_ruleset, default_ruleset, parse_rules, CompiledConstraint, FolRule, Literal,
    Predicate, EMOTION_NAMES, REACTION_NAMES,
};
use crate::net::{argmax, Checkpoint, Net};
use crate::textprep::{
    ingest_emotion_dataset, make_splits, read_posts_tsv, read_unlabeled_lines, Corpus,
    EmotionFormat, EmotionSource, Example, Label, SplitConfig, SplitInputs, Splits, Vocabulary,
    DEFAULT_MAX_LEN, DEFAULT_VOCAB_SIZE,
};
use crate::trainer::{
    run_synthetic_experiment, run_variant, ExperimentConfig, TrainConfig, Variant,
};

/// Environment variable naming the directory that relative input paths are
/// resolved against when they do not exist relative to the working dir.
pub const DATA_DIR_ENV: &str = "EMOLOG_DATA_DIR";

pub const MANIFEST_FILE: &str = "manifest.json";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const SPLITS_FILE: &str = "splits.json";
pub const MODEL_FILE: &str = "model.json";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unusable input: missing or malformed files, bad flags, stale hashes.
    #[error("{0}")]
    Input(String),
    /// A requested check ran to completion and failed its thresholds.
    #[error("thresholds not met")]
    Acceptance,
}

impl From<crate::textprep::TextError> for CliError {
    fn from(e: crate::textprep::TextError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<crate::net::NetError> for CliError {
    fn from(e: crate::net::NetError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<crate::trainer::TrainError> for CliError {
    fn from(e: crate::trainer::TrainError) -> CliError {
        CliError::Input(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "emolog",
    version,
    about = "Joint reaction/emotion text classification with rule-constrained training"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter, label, split and encode the corpora into a run directory.
    Prepare(PrepareArgs),
    /// Print the constraint rules with their compiled polynomials.
    Rules(RulesArgs),
    /// Train one objective variant on a prepared run directory.
    Train(TrainArgs),
    /// Score checkpoints on their test split; aggregate across run dirs.
    Eval(EvalArgs),
    /// Label texts with a trained checkpoint, one TSV row per line.
    Predict(PredictArgs),
    /// Run the three-variant transfer experiment on generated data.
    Synthetic(SyntheticArgs),
}

/// Parses argv, runs the selected command and maps errors to exit codes.
pub fn main_entry() -> ExitCode {
    // Restore the default SIGPIPE disposition so `emolog rules | head`
    // dies quietly like any other filter instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Acceptance) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Prepare(args) => cmd_prepare(args),
        Command::Rules(args) => cmd_rules(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Synthetic(args) => cmd_synthetic(args),
    }
}

// ---------------------------------------------------------------- manifest

/// Provenance record of a run directory. Exactly one per directory; every
/// command that writes artifacts rewrites it with its own section added.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    /// Configuration echoes keyed by subcommand name.
    pub config: BTreeMap<String, serde_json::Value>,
    /// sha256 hex digests of consumed input files, keyed by path as given.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    /// Artifact file names relative to the run directory.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<RunManifest, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Input(format!("{}: {e} (is this a prepared run directory?)", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Input(format!("manifest serialization: {e}")))?;
        std::fs::write(&path, text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// Train/val/test examples as stored in a run directory; the vocabulary
/// lives next to it as a plain token list.
#[derive(serde::Serialize, serde::Deserialize)]
struct SplitsFile {
    train: Corpus,
    val: Corpus,
    test: Corpus,
}

fn write_splits(dir: &Path, splits: &Splits) -> Result<(), CliError> {
    let path = dir.join(SPLITS_FILE);
    let file = SplitsFile {
        train: splits.train.clone(),
        val: splits.val.clone(),
        test: splits.test.clone(),
    };
    let out = std::fs::File::create(&path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::to_writer(std::io::BufWriter::new(out), &file)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_splits(dir: &Path) -> Result<Splits, CliError> {
    let path = dir.join(SPLITS_FILE);
    let file = std::fs::File::open(&path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let parsed: SplitsFile = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let vocab = Vocabulary::load(&dir.join(VOCAB_FILE))?;
    Ok(Splits { train: parsed.train, val: parsed.val, test: parsed.test, vocab })
}

// ------------------------------------------------------------------ helpers

/// Relative paths that do not exist locally fall back to the data dir named
/// by [`DATA_DIR_ENV`]; everything else passes through untouched.
fn resolve_input(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn sha256_file_hex(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn print_warnings(source: &str, warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {source}: {w}");
    }
}

fn class_census(examples: &[Example], names: &[&str]) -> String {
    let mut counts = vec![0usize; names.len()];
    for ex in examples {
        match ex.label {
            Label::Reaction(k) | Label::Emotion(k) => counts[k] += 1,
            Label::None => {}
        }
    }
    names
        .iter()
        .zip(&counts)
        .map(|(n, c)| format!("{n} {c}"))
        .collect::<Vec<_>>()
        .join("  ")
}

fn load_rules(file: Option<&Path>) -> Result<Vec<FolRule>, CliError> {
    match file {
        None => Ok(default_ruleset()),
        Some(path) => {
            let path = resolve_input(path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            parse_rules(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        }
    }
}

// ------------------------------------------------------------------ prepare

#[derive(Args)]
struct PrepareArgs {
    /// Reaction-tally posts TSV (header, text + five counts).
    #[arg(long)]
    posts: PathBuf,
    /// Unlabeled texts, one per line.
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    /// Emotion TSV with six 0..=100 scores per text.
    #[arg(long)]
    affective: PathBuf,
    /// Emotion TSV with one label per text.
    #[arg(long)]
    isear: PathBuf,
    /// Emotion TSV with one label (or four annotator votes) per text.
    #[arg(long)]
    fairy: PathBuf,
    /// Emotion dataset held out for test: affective, isear or fairy.
    #[arg(long, default_value = "fairy")]
    test_set: EmotionSource,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum total reaction mass a post needs to be kept.
    #[arg(long, default_value_t = 20)]
    tau: u64,
    /// Dominance factor the top reaction must beat.
    #[arg(long, default_value_t = 0.4)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_VOCAB_SIZE)]
    vocab_size: usize,
    /// Tokens kept per sentence; longer sentences are truncated.
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    max_len: usize,
    /// Run directory to create.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_prepare(args: PrepareArgs) -> Result<(), CliError> {
    // Read and validate every input before writing anything, so a bad path
    // or malformed file cannot leave a half-built run directory behind.
    let posts_path = resolve_input(&args.posts);
    let affective_path = resolve_input(&args.affective);
    let isear_path = resolve_input(&args.isear);
    let fairy_path = resolve_input(&args.fairy);

    let mut inputs_digest = BTreeMap::new();
    inputs_digest.insert(args.posts.display().to_string(), sha256_file_hex(&posts_path)?);
    inputs_digest
        .insert(args.affective.display().to_string(), sha256_file_hex(&affective_path)?);
    inputs_digest.insert(args.isear.display().to_string(), sha256_file_hex(&isear_path)?);
    inputs_digest.insert(args.fairy.display().to_string(), sha256_file_hex(&fairy_path)?);

    let posts = read_posts_tsv(&posts_path)?;
    print_warnings("posts", &posts.warnings);
    let unlabeled = match &args.unlabeled {
        Some(path) => {
            let path = resolve_input(path);
            inputs_digest.insert(path.display().to_string(), sha256_file_hex(&path)?);
            let read = read_unlabeled_lines(&path)?;
            print_warnings("unlabeled", &read.warnings);
            read.items
        }
        None => Vec::new(),
    };
    let affective = ingest_emotion_dataset(&affective_path, EmotionFormat::Affective)?;
    print_warnings("affective", &affective.warnings);
    let isear = ingest_emotion_dataset(&isear_path, EmotionFormat::Isear)?;
    print_warnings("isear", &isear.warnings);
    let fairy = ingest_emotion_dataset(&fairy_path, EmotionFormat::Fairy)?;
    print_warnings("fairy", &fairy.warnings);

    let mut split_cfg = SplitConfig {
        test_emotion_set: args.test_set,
        seed: args.seed,
        vocab_size: args.vocab_size,
        max_len: args.max_len,
        ..SplitConfig::default()
    };
    split_cfg.filter.tau = args.tau;
    split_cfg.filter.gamma = args.gamma;

    let inputs = SplitInputs {
        fb_posts: posts.items,
        fb_unlabeled: unlabeled,
        affective: affective.items,
        isear: isear.items,
        fairy: fairy.items,
    };
    let splits = make_splits(inputs, &split_cfg)?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;
    splits.vocab.save(&args.out.join(VOCAB_FILE))?;
    write_splits(&args.out, &splits)?;

    let manifest = RunManifest {
        config: BTreeMap::from([(
            "prepare".to_string(),
            serde_json::to_value(&split_cfg).expect("split config serializes"),
        )]),
        inputs: inputs_digest,
        seed: args.seed,
        artifacts: BTreeMap::from([
            ("vocab".to_string(), VOCAB_FILE.to_string()),
            ("splits".to_string(), SPLITS_FILE.to_string()),
        ]),
    };
    manifest.save(&args.out)?;

    for (name, corpus) in
        [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)]
    {
        println!(
            "{name}: reaction {}, emotion {}, unlabeled {}",
            corpus.reaction.len(),
            corpus.emotion.len(),
            corpus.unlabeled.len()
        );
        if !corpus.reaction.is_empty() {
            println!("  {}", class_census(&corpus.reaction, &REACTION_NAMES));
        }
        if !corpus.emotion.is_empty() {
            println!("  {}", class_census(&corpus.emotion, &EMOTION_NAMES));
        }
    }
    println!("vocab: {} tokens", splits.vocab.len());
    Ok(())
}

// -------------------------------------------------------------------- rules

#[derive(Args)]
struct RulesArgs {
    /// Rule file to parse; the built-in ruleset when omitted.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Re-evaluate every rule on a 5-point grid against direct product
    /// semantics and print PASS or FAIL.
    #[arg(long)]
    check_grid: bool,
}

fn cmd_rules(args: RulesArgs) -> Result<(), CliError> {
    let rules = load_rules(args.file.as_deref())?;
    let compiled = compile_ruleset(&rules);
    for (rule, cc) in rules.iter().zip(&compiled) {
        println!("{:>2}. {}  |  {}", rule.id, rule, cc.print_poly());
    }
    if args.check_grid {
        match grid_check(&rules, &compiled, 1e-12) {
            Ok(points) => println!("grid check: PASS ({points} points)"),
            Err(msg) => {
                println!("grid check: FAIL ({msg})");
                return Err(CliError::Acceptance);
            }
        }
    }
    Ok(())
}

/// Truth degree of one rule evaluated directly from its syntax: negation as
/// 1-v, disjunction as the product T-conorm, implication as 1-a+a*b.
fn direct_rule_truth(rule: &FolRule, value: &impl Fn(Predicate) -> f64) -> f64 {
    let lit = |l: &Literal| if l.negated { 1.0 - value(l.predicate) } else { value(l.predicate) };
    let a = lit(&rule.antecedent);
    let mut disj = lit(&rule.consequents[0]);
    for c in &rule.consequents[1..] {
        let v = lit(c);
        disj = disj + v - disj * v;
    }
    1.0 - a + a * disj
}

/// Compares compiled polynomials against [`direct_rule_truth`] on the full
/// {0, 0.25, 0.5, 0.75, 1} grid over each rule's predicates. Boolean corner
/// points must match classical implication exactly.
fn grid_check(
    rules: &[FolRule],
    compiled: &[CompiledConstraint],
    tol: f64,
) -> Result<usize, String> {
    const GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut points = 0usize;
    for (rule, cc) in rules.iter().zip(compiled) {
        let preds = rule.predicates();
        let mut odometer = vec![0usize; preds.len()];
        loop {
            let assignment: HashMap<Predicate, f64> =
                preds.iter().zip(&odometer).map(|(p, i)| (*p, GRID[*i])).collect();
            let direct = direct_rule_truth(rule, &|p| assignment[&p]);
            let poly = cc
                .eval_poly(&assignment)
                .map_err(|e| format!("rule {}: {e}", rule.id))?;
            if (direct - poly).abs() > tol {
                return Err(format!(
                    "rule {} diverges at {assignment:?}: direct {direct} vs compiled {poly}",
                    rule.id
                ));
            }
            if odometer.iter().all(|i| GRID[*i] == 0.0 || GRID[*i] == 1.0) {
                let boolean = if direct >= 0.5 { 1.0 } else { 0.0 };
                if poly != boolean {
                    return Err(format!(
                        "rule {} boolean corner {assignment:?}: compiled {poly}",
                        rule.id
                    ));
                }
            }
            points += 1;
            let mut pos = 0;
            loop {
                if pos == odometer.len() {
                    break;
                }
                odometer[pos] += 1;
                if odometer[pos] < GRID.len() {
                    break;
                }
                odometer[pos] = 0;
                pos += 1;
            }
            if pos == odometer.len() {
                break;
            }
        }
    }
    Ok(points)
}

// -------------------------------------------------------------------- train

#[derive(Args)]
struct TrainArgs {
    /// Run directory produced by `prepare`.
    run_dir: PathBuf,
    /// JSON training config; explicit flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Objective variant: plain, constr or artificial.
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    batch_reaction: Option<usize>,
    #[arg(long)]
    batch_emotion: Option<usize>,
    #[arg(long)]
    batch_constraint: Option<usize>,
    #[arg(long)]
    lambda_reaction: Option<f64>,
    #[arg(long)]
    lambda_emotion: Option<f64>,
    #[arg(long)]
    lambda_constraint: Option<f64>,
    #[arg(long)]
    grad_clip: Option<f64>,
    #[arg(long)]
    d_emb: Option<usize>,
    #[arg(long)]
    d_h: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    /// Hidden width of the reaction head; 0 means a linear head.
    #[arg(long)]
    head_hidden_reaction: Option<usize>,
    /// Hidden width of the emotion head; 0 means a linear head.
    #[arg(long)]
    head_hidden_emotion: Option<usize>,
    /// Rule file overriding the built-in constraint set.
    #[arg(long)]
    rules: Option<PathBuf>,
}

fn merge_train_flags(cfg: &mut TrainConfig, args: &TrainArgs) {
    if let Some(v) = args.variant {
        cfg.variant = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.lr {
        cfg.lr = v;
    }
    if let Some(v) = args.max_epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = args.patience {
        cfg.patience = v;
    }
    if let Some(v) = args.batch_reaction {
        cfg.batch_reaction = v;
    }
    if let Some(v) = args.batch_emotion {
        cfg.batch_emotion = v;
    }
    if let Some(v) = args.batch_constraint {
        cfg.batch_constraint = v;
    }
    if let Some(v) = args.lambda_reaction {
        cfg.lambda_reaction = v;
    }
    if let Some(v) = args.lambda_emotion {
        cfg.lambda_emotion = v;
    }
    if let Some(v) = args.lambda_constraint {
        cfg.lambda_constraint = v;
    }
    if let Some(v) = args.grad_clip {
        cfg.grad_clip = v;
    }
    if let Some(v) = args.d_emb {
        cfg.net.d_emb = v;
    }
    if let Some(v) = args.d_h {
        cfg.net.d_h = v;
    }
    if let Some(v) = args.dropout {
        cfg.net.dropout = v;
    }
    if let Some(v) = args.head_hidden_reaction {
        cfg.net.head_hidden_reaction = if v == 0 { None } else { Some(v) };
    }
    if let Some(v) = args.head_hidden_emotion {
        cfg.net.head_hidden_emotion = if v == 0 { None } else { Some(v) };
    }
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::load(&args.run_dir)?;
    let splits = load_splits(&args.run_dir)?;

    let mut tcfg = match &args.config {
        Some(path) => {
            let path = resolve_input(path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<TrainConfig>(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => TrainConfig::default(),
    };
    merge_train_flags(&mut tcfg, &args);

    let rules = load_rules(args.rules.as_deref())?;
    let constraints = compile_ruleset(&rules);

    let run = run_variant(&splits, &constraints, &tcfg)?;

    // Rebuild the net exactly as run_variant sized it to package parameters.
    let mut net_cfg = tcfg.net.clone();
    net_cfg.vocab_size = splits.vocab.len();
    let net = Net::new(net_cfg)?;
    let checkpoint = Checkpoint::assemble(
        &net,
        &run.outcome.params,
        splits.vocab.sha256_hex(),
        serde_json::to_value(&tcfg).expect("train config serializes"),
    )?;
    checkpoint.save(&args.run_dir.join(MODEL_FILE))?;

    let log_path = args.run_dir.join(TRAIN_LOG_FILE);
    let mut log_file = std::fs::File::create(&log_path)
        .map(std::io::BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", log_path.display())))?;
    for entry in &run.outcome.log {
        let line = serde_json::to_string(entry)
            .map_err(|e| CliError::Input(format!("epoch log serialization: {e}")))?;
        writeln!(log_file, "{line}")
            .map_err(|e| CliError::Input(format!("{}: {e}", log_path.display())))?;
    }
    log_file
        .flush()
        .map_err(|e| CliError::Input(format!("{}: {e}", log_path.display())))?;

    manifest.config.insert(
        "train".to_string(),
        serde_json::to_value(&tcfg).expect("train config serializes"),
    );
    manifest.artifacts.insert("checkpoint".to_string(), MODEL_FILE.to_string());
    manifest.artifacts.insert("train_log".to_string(), TRAIN_LOG_FILE.to_string());
    manifest.save(&args.run_dir)?;

    println!(
        "trained {}: {} epochs, best epoch {} (val mean F1 {:.4})",
        run.variant,
        run.outcome.log.len(),
        run.outcome.best_epoch,
        run.outcome.best_score
    );
    println!(
        "test macro-F1: reaction {:.4}, emotion {:.4}",
        run.test_reaction.macro_avg.f1, run.test_emotion.macro_avg.f1
    );
    Ok(())
}

// --------------------------------------------------------------------- eval

#[derive(Args)]
struct EvalArgs {
    /// Run directories to score; aggregated metrics land in the first one.
    run_dirs: Vec<PathBuf>,
    /// Additional run directories, equivalent to listing them positionally.
    #[arg(long, num_args = 1.., value_name = "DIR")]
    splits: Vec<PathBuf>,
}

/// Scores one run directory's checkpoint on its own test split.
fn score_run_dir(dir: &Path) -> Result<(MetricsReport, MetricsReport), CliError> {
    let splits = load_splits(dir)?;
    let checkpoint = Checkpoint::load(&dir.join(MODEL_FILE))?;
    checkpoint.require_vocab(&splits.vocab.sha256_hex())?;
    let (net, params) = checkpoint.into_net_and_params()?;
    Ok(crate::trainer::score_corpus(&net, &params, &splits.test)?)
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let mut dirs = args.run_dirs.clone();
    dirs.extend(args.splits.iter().cloned());
    if dirs.is_empty() {
        return Err(CliError::Input("no run directories given".to_string()));
    }

    let mut reaction_reports = Vec::with_capacity(dirs.len());
    let mut emotion_reports = Vec::with_capacity(dirs.len());
    for dir in &dirs {
        let (r, e) = score_run_dir(dir)?;
        reaction_reports.push(r);
        emotion_reports.push(e);
    }
    let agg_r = aggregate_splits(&reaction_reports)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let agg_e = aggregate_splits(&emotion_reports)
        .map_err(|e| CliError::Input(e.to_string()))?;

    print!("{}", render_table("reaction", &REACTION_NAMES, &agg_r));
    println!();
    print!("{}", render_table("emotion", &EMOTION_NAMES, &agg_e));

    let metrics = serde_json::Value::Array(vec![
        metrics_json("reaction", &REACTION_NAMES, &agg_r),
        metrics_json("emotion", &EMOTION_NAMES, &agg_e),
    ]);
    let out_path = dirs[0].join(METRICS_FILE);
    std::fs::write(&out_path, serde_json::to_string_pretty(&metrics).expect("metrics serialize"))
        .map_err(|e| CliError::Input(format!("{}: {e}", out_path.display())))?;

    let mut manifest = RunManifest::load(&dirs[0])?;
    manifest.artifacts.insert("metrics".to_string(), METRICS_FILE.to_string());
    manifest.save(&dirs[0])?;
    Ok(())
}

// ------------------------------------------------------------------ predict

#[derive(Args)]
struct PredictArgs {
    /// Run directory containing model.json and vocab.txt.
    run_dir: Option<PathBuf>,
    /// Checkpoint path; defaults to RUN_DIR/model.json.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Vocabulary path; defaults to RUN_DIR/vocab.txt.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Texts to label, one per line; stdin when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output TSV path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let model_path = match (&args.model, &args.run_dir) {
        (Some(path), _) => path.clone(),
        (None, Some(dir)) => dir.join(MODEL_FILE),
        (None, None) => {
            return Err(CliError::Input(
                "pass a run directory or --model/--vocab paths".to_string(),
            ))
        }
    };
    let vocab_path = match (&args.vocab, &args.run_dir) {
        (Some(path), _) => path.clone(),
        (None, Some(dir)) => dir.join(VOCAB_FILE),
        (None, None) => unreachable!("caught above"),
    };

    let vocab = Vocabulary::load(&vocab_path)?;
    let checkpoint = Checkpoint::load(&model_path)?;
    checkpoint.require_vocab(&vocab.sha256_hex())?;
    let (net, params) = checkpoint.into_net_and_params()?;
    let max_len = net.config().max_len;

    let lines: Vec<String> = match &args.input {
        Some(path) => {
            let path = resolve_input(path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            text.lines().map(str::to_string).collect()
        }
        None => {
            let stdin = std::io::stdin();
            let mut lines = Vec::new();
            for line in stdin.lock().lines() {
                lines.push(line.map_err(|e| CliError::Input(format!("stdin: {e}")))?);
            }
            lines
        }
    };

    let mut out: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(std::io::BufWriter::new(std::io::stdout())),
    };
    let write_err = |e: std::io::Error| CliError::Input(format!("output: {e}"));

    let mut header = vec!["text".to_string(), "emotion".to_string()];
    header.extend(EMOTION_NAMES.iter().map(|n| format!("p_{n}")));
    header.push("reaction".to_string());
    header.extend(REACTION_NAMES.iter().map(|n| format!("p_{n}")));
    writeln!(out, "{}", header.join("\t")).map_err(write_err)?;

    for (idx, line) in lines.iter().enumerate() {
        let tokens = crate::textprep::preprocess(line);
        if tokens.is_empty() {
            eprintln!("warning: line {}: no tokens after preprocessing, skipped", idx + 1);
            continue;
        }
        let ids = vocab.encode(&tokens[..tokens.len().min(max_len)]);
        let (p_r, p_e) = net.forward_values(&params, &ids)?;
        let mut row = vec![line.replace('\t', " "), EMOTION_NAMES[argmax(&p_e)].to_string()];
        row.extend(p_e.iter().map(|p| format!("{p:.6}")));
        row.push(REACTION_NAMES[argmax(&p_r)].to_string());
        row.extend(p_r.iter().map(|p| format!("{p:.6}")));
        writeln!(out, "{}", row.join("\t")).map_err(write_err)?;
    }
    out.flush().map_err(write_err)
}

// ---------------------------------------------------------------- synthetic

#[derive(Args)]
struct SyntheticArgs {
    /// Number of seeds to average over; seeds run 0..n.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Generated posts per seed.
    #[arg(long)]
    posts: Option<usize>,
    /// Generated unlabeled texts per seed.
    #[arg(long)]
    unlabeled: Option<usize>,
    /// Size of each skewed train-side emotion set.
    #[arg(long)]
    emotion: Option<usize>,
    /// Size of the held-out uniform emotion set.
    #[arg(long)]
    emotion_test: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Required mean emotion macro-F1 advantage of constr over plain.
    #[arg(long)]
    min_gap: Option<f64>,
    /// Where to write the full report JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_synthetic(args: SyntheticArgs) -> Result<(), CliError> {
    if args.seeds == 0 {
        return Err(CliError::Input("--seeds must be at least 1".to_string()));
    }
    let mut cfg = ExperimentConfig { seeds: (0..args.seeds as u64).collect(), ..Default::default() };
    if let Some(v) = args.posts {
        cfg.synth.n_posts = v;
    }
    if let Some(v) = args.unlabeled {
        cfg.synth.n_unlabeled = v;
    }
    if let Some(v) = args.emotion {
        cfg.synth.n_emotion_a = v;
        cfg.synth.n_emotion_b = v;
    }
    if let Some(v) = args.emotion_test {
        cfg.synth.n_emotion_test = v;
    }
    if let Some(v) = args.max_epochs {
        cfg.train.max_epochs = v;
    }
    if let Some(v) = args.patience {
        cfg.train.patience = v;
    }
    if let Some(v) = args.min_gap {
        cfg.min_emotion_gap = v;
    }

    let report = run_synthetic_experiment(&cfg)?;

    for (i, seed_scores) in report.per_seed.iter().enumerate() {
        let mut line = format!("seed {}:", cfg.seeds[i]);
        for s in seed_scores {
            line.push_str(&format!("  {} r {:.4} e {:.4}", s.variant, s.reaction_f1, s.emotion_f1));
        }
        println!("{line}");
    }
    println!();
    println!("{:<12} {:>11} {:>11}", "variant", "reaction F1", "emotion F1");
    for s in &report.mean {
        println!("{:<12} {:>11.4} {:>11.4}", s.variant.to_string(), s.reaction_f1, s.emotion_f1);
    }
    println!();
    println!(
        "constr - plain emotion gap: {:+.4} (needs >= {:.4}): {}",
        report.emotion_gap,
        cfg.min_emotion_gap,
        if report.gap_passes { "PASS" } else { "FAIL" }
    );
    println!(
        "artificial <= constr on emotion: {:.4} vs {:.4}: {}",
        report.mean[2].emotion_f1,
        report.mean[1].emotion_f1,
        if report.artificial_within_constr { "PASS" } else { "FAIL" }
    );
    println!("overall: {}", if report.pass { "PASS" } else { "FAIL" });

    if let Some(path) = &args.out {
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Input(format!("report serialization: {e}")))?;
        std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }

    if report.pass {
        Ok(())
    } else {
        Err(CliError::Acceptance)
    }
}
