use super::*;
use crate::folc::{compile_ruleset, default_ruleset};
use crate::net::Net;
use crate::textprep::{Provenance, Vocabulary};

fn constraints() -> Vec<CompiledConstraint> {
    compile_ruleset(&default_ruleset())
}

fn default_weights(cs: &[CompiledConstraint]) -> Vec<f64> {
    cs.iter().map(|c| c.rule.weight).collect()
}

fn ex(ids: &[u32], label: Label) -> Example {
    Example { ids: ids.to_vec(), label, provenance: Provenance::Posts, text: String::new() }
}

fn tiny_corpus() -> Corpus {
    Corpus {
        reaction: vec![
            ex(&[1, 4, 2], Label::Reaction(0)),
            ex(&[5, 3], Label::Reaction(2)),
            ex(&[7, 7, 1], Label::Reaction(4)),
            ex(&[2, 9], Label::Reaction(1)),
        ],
        emotion: vec![
            ex(&[4, 4, 8], Label::Emotion(3)),
            ex(&[6, 2], Label::Emotion(0)),
            ex(&[9, 1, 5], Label::Emotion(5)),
        ],
        unlabeled: vec![ex(&[3, 8], Label::None), ex(&[10, 2, 6], Label::None)],
    }
}

fn tiny_net() -> Net {
    Net::new(NetConfig { vocab_size: 12, d_emb: 3, d_h: 2, ..NetConfig::default() }).unwrap()
}

fn onehot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

#[test]
fn cross_entropy_matches_known_values() {
    assert_eq!(cross_entropy(&onehot(5, 2), &onehot(5, 2)).unwrap(), 0.0);
    let uniform5 = vec![0.2; 5];
    let got = cross_entropy(&uniform5, &onehot(5, 0)).unwrap();
    assert!((got - 1.6094379124341003).abs() < 1e-12);
    let uniform6 = vec![1.0 / 6.0; 6];
    let got = cross_entropy(&uniform6, &onehot(6, 4)).unwrap();
    assert!((got - 1.791759469228055).abs() < 1e-12);
    // The clamp keeps an impossible prediction finite.
    let got = cross_entropy(&onehot(5, 0), &onehot(5, 3)).unwrap();
    assert!((got - 16.11809565095832).abs() < 1e-12);
}

#[test]
fn cross_entropy_rejects_bad_targets() {
    assert!(matches!(
        cross_entropy(&[0.5, 0.5], &[1.0, 0.0, 0.0]),
        Err(TrainError::DimensionMismatch { p: 2, y: 3 })
    ));
    assert!(matches!(cross_entropy(&[0.5, 0.5], &[1.0, 1.0]), Err(TrainError::NotOneHot)));
    assert!(matches!(cross_entropy(&[0.5, 0.5], &[0.0, 0.5]), Err(TrainError::NotOneHot)));
    assert!(matches!(cross_entropy(&[0.5, 0.5], &[0.0, 0.0]), Err(TrainError::NotOneHot)));
}

#[test]
fn tape_cross_entropy_has_the_reciprocal_gradient() {
    let mut tape = Tape::new();
    let p: Vec<NodeId> = (0..3).map(|i| tape.param(i)).collect();
    let ce = ce_on_tape(&mut tape, &p, 2);
    tape.set_output(ce);
    tape.forward(&[], &[0.2, 0.3, 0.5]).unwrap();
    assert!((tape.value(ce) - 0.6931471805599453).abs() < 1e-15);
    let grads = tape.backward().unwrap();
    assert_eq!(grads[0], 0.0);
    assert_eq!(grads[1], 0.0);
    assert!((grads[2] - (-2.0)).abs() < 1e-12);
}

#[test]
fn satisfied_boolean_points_incur_no_constraint_penalty() {
    let cs = constraints();
    let w = default_weights(&cs);
    // HAHA with happiness satisfies every rule.
    let total =
        constraint_term_values(&cs, &w, &onehot(N_REACTIONS, 0), &onehot(N_EMOTIONS, 3)).unwrap();
    assert_eq!(total, 0.0);
}

#[test]
fn contradicting_the_rules_costs_two_full_clamped_penalties() {
    let cs = constraints();
    let w = default_weights(&cs);
    // HAHA demands happiness; sadness demands SAD. Both violated at full
    // strength, each clamped at -ln(1e-7), both rules carrying weight 1.
    let total =
        constraint_term_values(&cs, &w, &onehot(N_REACTIONS, 0), &onehot(N_EMOTIONS, 4)).unwrap();
    assert!((total - 2.0 * 16.11809565095832).abs() < 1e-9);
}

#[test]
fn tape_constraint_term_matches_the_value_evaluation() {
    let cs = constraints();
    let w = default_weights(&cs);
    let net = tiny_net();
    let params = net.init_params(3);
    let cfg = TrainConfig::default();
    let example = ex(&[1, 5, 9], Label::None);

    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut tape = Tape::new();
    let graph =
        build_batch_loss(&net, &mut tape, &[], &[], &[&example], &cs, &w, &cfg, &mut rng).unwrap();
    tape.forward(&[], &params).unwrap();

    let (p_r, p_e) = net.forward_values(&params, &example.ids).unwrap();
    let want = constraint_term_values(&cs, &w, &p_r, &p_e).unwrap();
    assert!((tape.value(graph.loss) - want).abs() < 1e-10);
    assert!(graph.reaction_term.is_none());
    assert!(graph.emotion_term.is_none());
    assert!(graph.constraint_term.is_some());
}

#[test]
fn zero_rule_weights_reduce_the_loss_to_supervised_terms() {
    let cs = constraints();
    let zeros = vec![0.0; cs.len()];
    let net = tiny_net();
    let params = net.init_params(5);
    let cfg = TrainConfig::default();
    let r = ex(&[1, 4, 2], Label::Reaction(3));
    let e = ex(&[5, 3], Label::Emotion(1));
    let u = ex(&[7, 8], Label::None);

    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut tape = Tape::new();
    let graph = build_batch_loss(
        &net, &mut tape, &[&r], &[&e], &[&r, &e, &u], &cs, &zeros, &cfg, &mut rng,
    )
    .unwrap();
    tape.forward(&[], &params).unwrap();

    let (p_r, _) = net.forward_values(&params, &r.ids).unwrap();
    let (_, p_e) = net.forward_values(&params, &e.ids).unwrap();
    let want = cross_entropy(&p_r, &onehot(N_REACTIONS, 3)).unwrap()
        + cross_entropy(&p_e, &onehot(N_EMOTIONS, 1)).unwrap();
    assert!((tape.value(graph.loss) - want).abs() < 1e-12);
    assert!(graph.constraint_term.is_none());
}

#[test]
fn the_full_objective_is_the_sum_of_its_scaled_terms() {
    let cs = constraints();
    let w = default_weights(&cs);
    let net = tiny_net();
    let params = net.init_params(8);
    let cfg = TrainConfig {
        lambda_reaction: 2.0,
        lambda_emotion: 0.5,
        lambda_constraint: 3.0,
        ..TrainConfig::default()
    };
    let r1 = ex(&[1, 4], Label::Reaction(0));
    let r2 = ex(&[2, 2, 3], Label::Reaction(4));
    let e1 = ex(&[5, 3], Label::Emotion(2));
    let u1 = ex(&[7], Label::None);

    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut tape = Tape::new();
    let graph = build_batch_loss(
        &net, &mut tape, &[&r1, &r2], &[&e1], &[&r1, &u1], &cs, &w, &cfg, &mut rng,
    )
    .unwrap();
    tape.forward(&[], &params).unwrap();

    let ce_r = |e: &Example, k: usize| {
        let (p_r, _) = net.forward_values(&params, &e.ids).unwrap();
        cross_entropy(&p_r, &onehot(N_REACTIONS, k)).unwrap()
    };
    let (p_e1_r, p_e1_e) = net.forward_values(&params, &e1.ids).unwrap();
    let _ = p_e1_r;
    let want_r = 2.0 * (ce_r(&r1, 0) + ce_r(&r2, 4)) / 2.0;
    let want_e = 0.5 * cross_entropy(&p_e1_e, &onehot(N_EMOTIONS, 2)).unwrap();
    let pen = |e: &Example| {
        let (p_r, p_e) = net.forward_values(&params, &e.ids).unwrap();
        constraint_term_values(&cs, &w, &p_r, &p_e).unwrap()
    };
    let want_c = 3.0 * (pen(&r1) + pen(&u1)) / 2.0;

    assert!((tape.value(graph.reaction_term.unwrap()) - want_r).abs() < 1e-10);
    assert!((tape.value(graph.emotion_term.unwrap()) - want_e).abs() < 1e-10);
    assert!((tape.value(graph.constraint_term.unwrap()) - want_c).abs() < 1e-10);
    assert!((tape.value(graph.loss) - (want_r + want_e + want_c)).abs() < 1e-10);
}

#[test]
fn an_entirely_empty_batch_is_an_error() {
    let cs = constraints();
    let w = default_weights(&cs);
    let net = tiny_net();
    let cfg = TrainConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut tape = Tape::new();
    let err =
        build_batch_loss(&net, &mut tape, &[], &[], &[], &cs, &w, &cfg, &mut rng).unwrap_err();
    assert!(matches!(err, TrainError::EmptyBatch));
}

#[test]
fn mislabeled_batch_members_are_rejected() {
    let cs = constraints();
    let w = default_weights(&cs);
    let net = tiny_net();
    let cfg = TrainConfig::default();
    let e = ex(&[5, 3], Label::Emotion(1));
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut tape = Tape::new();
    let err = build_batch_loss(&net, &mut tape, &[&e], &[], &[], &cs, &w, &cfg, &mut rng)
        .unwrap_err();
    assert!(matches!(err, TrainError::LabelMismatch));
}

#[test]
fn unlabeled_text_moves_parameters_only_under_constraints() {
    let cs = constraints();
    let net = tiny_net();
    let params = net.init_params(2);
    let cfg = TrainConfig::default();
    let u = ex(&[3, 8, 10], Label::None);

    // Constraint weights on: some gradient is nonzero.
    let w = default_weights(&cs);
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut tape = Tape::new();
    build_batch_loss(&net, &mut tape, &[], &[], &[&u], &cs, &w, &cfg, &mut rng).unwrap();
    tape.forward(&[], &params).unwrap();
    let mut grads = vec![0.0; net.n_params()];
    tape.backward_into(&mut grads).unwrap();
    assert!(grads.iter().any(|&g| g != 0.0));

    // All weights zero: the loss is a constant zero with a zero gradient.
    let zeros = vec![0.0; cs.len()];
    let mut tape = Tape::new();
    let graph =
        build_batch_loss(&net, &mut tape, &[], &[], &[&u], &cs, &zeros, &cfg, &mut rng).unwrap();
    tape.forward(&[], &params).unwrap();
    assert_eq!(tape.value(graph.loss), 0.0);
    let mut grads = vec![0.0; net.n_params()];
    tape.backward_into(&mut grads).unwrap();
    assert!(grads.iter().all(|&g| g == 0.0));
}

#[test]
fn joint_loss_gradients_match_finite_differences() {
    let cs = constraints();
    let w = default_weights(&cs);
    let net = Net::new(NetConfig { vocab_size: 8, d_emb: 3, d_h: 2, ..NetConfig::default() })
        .unwrap();
    let params = net.init_params(6);
    let cfg = TrainConfig::default();
    let r = ex(&[1, 4, 2, 7, 3], Label::Reaction(1));
    let e = ex(&[5, 3, 6, 2, 1], Label::Emotion(4));

    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut tape = Tape::new();
    build_batch_loss(&net, &mut tape, &[&r], &[&e], &[&r, &e], &cs, &w, &cfg, &mut rng).unwrap();
    // The step is sized so quotient roundoff stays below the 1e-8 guard in
    // the relative-error denominator even for near-zero gradients.
    let report = tape.finite_diff_check(&[], &params, 1e-3).unwrap();
    assert!(
        report.max_rel_error < 1e-4,
        "max rel error {} at {:?}",
        report.max_rel_error,
        report.worst_param
    );
}

#[test]
fn gradient_clipping_rescales_only_oversized_gradients() {
    let mut grads = vec![3.0, 4.0];
    let norm = clip_gradients(&mut grads, 5.0);
    assert_eq!(norm, 5.0);
    assert_eq!(grads, vec![3.0, 4.0]);

    let mut grads = vec![6.0, 8.0];
    let norm = clip_gradients(&mut grads, 5.0);
    assert_eq!(norm, 10.0);
    assert!((grads[0] - 3.0).abs() < 1e-12);
    assert!((grads[1] - 4.0).abs() < 1e-12);
}

#[test]
fn adam_minimizes_a_quadratic() {
    let mut adam = Adam::new(0.1, 1);
    let mut x = vec![3.0];
    // First step moves by almost exactly the learning rate.
    adam.step(&mut x, &[2.0 * 3.0]);
    assert!((x[0] - 2.9).abs() < 1e-6);
    for _ in 0..300 {
        let g = 2.0 * x[0];
        adam.step(&mut x, &[g]);
    }
    assert!(x[0].abs() < 0.05, "x = {}", x[0]);
}

#[test]
fn samplers_walk_whole_permutations_between_wraps() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let mut s = Sampler::new(10);
    let mut a = s.draw(5, &mut rng);
    let b = s.draw(5, &mut rng);
    a.extend(&b);
    a.sort_unstable();
    assert_eq!(a, (0..10).collect::<Vec<_>>());
    assert_eq!(s.draw(0, &mut rng), Vec::<usize>::new());
    assert_eq!(Sampler::new(0).draw(4, &mut rng), Vec::<usize>::new());
}

fn quick_cfg() -> TrainConfig {
    TrainConfig {
        variant: Variant::Constr,
        net: NetConfig { vocab_size: 12, d_emb: 3, d_h: 2, dropout: 0.25, ..NetConfig::default() },
        lr: 1e-2,
        batch_reaction: 2,
        batch_emotion: 2,
        batch_constraint: 4,
        max_epochs: 3,
        patience: 20,
        seed: 42,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic_for_a_fixed_seed() {
    let cs = constraints();
    let net = tiny_net();
    let corpus = tiny_corpus();
    let val = tiny_corpus();
    let cfg = quick_cfg();
    let a = train(&net, &cs, &corpus, &val, &cfg).unwrap();
    let b = train(&net, &cs, &corpus, &val, &cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.log, b.log);

    let other = train(&net, &cs, &corpus, &val, &TrainConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a.params, other.params);
}

#[test]
fn early_stopping_waits_out_the_patience_then_keeps_the_best() {
    let cs = constraints();
    let net = tiny_net();
    let corpus = tiny_corpus();
    let cfg = TrainConfig { max_epochs: 100, patience: 3, ..quick_cfg() };

    let scores = [0.3, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4];
    let mut snapshots: Vec<Vec<f64>> = Vec::new();
    let outcome = train_with_scorer(&net, &cs, &corpus, &cfg, |_, params, epoch| {
        snapshots.push(params.to_vec());
        let s = scores[epoch - 1];
        Ok((s, s))
    })
    .unwrap();

    // Best at epoch 2, then three flat epochs exhaust the patience.
    assert_eq!(outcome.log.len(), 5);
    assert_eq!(outcome.best_epoch, 2);
    assert!((outcome.best_score - 0.4).abs() < 1e-15);
    assert_eq!(outcome.params, snapshots[1]);
}

#[test]
fn zero_epochs_return_the_initial_parameters() {
    let cs = constraints();
    let net = tiny_net();
    let corpus = tiny_corpus();
    let cfg = TrainConfig { max_epochs: 0, ..quick_cfg() };
    let outcome = train_with_scorer(&net, &cs, &corpus, &cfg, |_, _, _| Ok((0.5, 0.5))).unwrap();
    assert!(outcome.log.is_empty());
    assert_eq!(outcome.best_epoch, 0);
    assert_eq!(outcome.params, net.init_params(cfg.seed));
}

#[test]
fn the_returned_model_scores_no_worse_than_any_logged_epoch() {
    let cs = constraints();
    let net = tiny_net();
    let corpus = tiny_corpus();
    let val = tiny_corpus();
    let cfg = TrainConfig { max_epochs: 6, patience: 2, ..quick_cfg() };
    let outcome = train(&net, &cs, &corpus, &val, &cfg).unwrap();
    assert!(!outcome.log.is_empty());
    for entry in &outcome.log {
        assert!(outcome.best_score >= entry.val_f1_mean);
    }
    let best_logged = outcome.log[outcome.best_epoch - 1].val_f1_mean;
    assert_eq!(outcome.best_score, best_logged);
}

#[test]
fn full_batch_steps_reduce_the_objective() {
    let cs = constraints();
    let w = default_weights(&cs);
    let net = tiny_net();
    let mut params = net.init_params(1);
    let cfg = TrainConfig {
        lr: 1e-2,
        net: NetConfig { dropout: 0.0, ..quick_cfg().net },
        ..quick_cfg()
    };
    let corpus = tiny_corpus();
    let br: Vec<&Example> = corpus.reaction.iter().collect();
    let be: Vec<&Example> = corpus.emotion.iter().collect();
    let ball: Vec<&Example> = corpus.iter_all().collect();

    let mut adam = Adam::new(cfg.lr, params.len());
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut first = None;
    let mut last = 0.0;
    for _ in 0..50 {
        let mut tape = Tape::new();
        let graph =
            build_batch_loss(&net, &mut tape, &br, &be, &ball, &cs, &w, &cfg, &mut rng).unwrap();
        tape.forward(&[], &params).unwrap();
        last = tape.value(graph.loss);
        first.get_or_insert(last);
        let mut grads = vec![0.0; net.n_params()];
        tape.backward_into(&mut grads).unwrap();
        clip_gradients(&mut grads, cfg.grad_clip);
        adam.step(&mut params, &grads);
    }
    assert!(last < first.unwrap(), "loss went {} -> {}", first.unwrap(), last);
}

#[test]
fn training_requires_data_and_validation_labels() {
    let cs = constraints();
    let net = tiny_net();
    let cfg = quick_cfg();
    let empty = Corpus::default();
    let err = train(&net, &cs, &tiny_corpus(), &empty, &cfg).unwrap_err();
    assert!(matches!(err, TrainError::EmptyValidation));
    let err = train(&net, &cs, &empty, &tiny_corpus(), &cfg).unwrap_err();
    assert!(matches!(err, TrainError::EmptyTrainingData));
}

#[test]
fn variant_policy_controls_the_rule_weights() {
    let cs = constraints();
    let mut cfg = quick_cfg();

    cfg.variant = Variant::Plain;
    assert!(cfg.effective_rule_weights(&cs).iter().all(|&w| w == 0.0));
    cfg.variant = Variant::Artificial;
    assert!(cfg.effective_rule_weights(&cs).iter().all(|&w| w == 0.0));

    cfg.variant = Variant::Constr;
    let w = cfg.effective_rule_weights(&cs);
    assert_eq!(w, default_weights(&cs));

    cfg.rule_weights = Some(vec![0.7; cs.len()]);
    assert_eq!(cfg.effective_rule_weights(&cs), vec![0.7; cs.len()]);
}

#[test]
fn config_validation_catches_bad_values() {
    let cs = constraints();
    let ok = quick_cfg();
    ok.validate(&cs).unwrap();
    let bad = |f: &dyn Fn(&mut TrainConfig)| {
        let mut cfg = quick_cfg();
        f(&mut cfg);
        cfg.validate(&cs).is_err()
    };
    assert!(bad(&|c| c.patience = 0));
    assert!(bad(&|c| c.lr = 0.0));
    assert!(bad(&|c| c.lambda_constraint = -1.0));
    assert!(bad(&|c| c.batch_reaction = 0));
    assert!(bad(&|c| c.grad_clip = 0.0));
    assert!(bad(&|c| c.rule_weights = Some(vec![1.0; 3])));
    assert!(bad(&|c| c.rule_weights = Some(vec![-1.0; 11])));
}

#[test]
fn variants_parse_and_print_round_trip() {
    for v in [Variant::Plain, Variant::Constr, Variant::Artificial] {
        assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
    }
    assert!("fancy".parse::<Variant>().is_err());
    assert_eq!(serde_json::to_string(&Variant::Constr).unwrap(), "\"constr\"");
}

#[test]
fn epoch_logs_serialize_round_trip() {
    let entry = EpochLog {
        epoch: 3,
        loss_reaction: 1.2,
        loss_emotion: 0.8,
        loss_constraint: 0.05,
        val_f1_reaction: 0.41,
        val_f1_emotion: 0.33,
        val_f1_mean: 0.37,
        lr: 1e-3,
    };
    let json = serde_json::to_string(&entry).unwrap();
    let back: EpochLog = serde_json::from_str(&json).unwrap();
    assert_eq!(back, entry);
}

#[test]
fn scoring_agrees_with_direct_metric_computation() {
    let net = tiny_net();
    let params = vec![0.0; net.n_params()];
    let corpus = tiny_corpus();
    let (reaction, emotion) = score_corpus(&net, &params, &corpus).unwrap();

    // Zero parameters push every prediction to class 0 via tie-breaking.
    let gold_r = vec![0, 2, 4, 1];
    let want_r = macro_f1(&confusion(&[0, 0, 0, 0], &gold_r, N_REACTIONS).unwrap());
    assert_eq!(reaction, want_r);
    let gold_e = vec![3, 0, 5];
    let want_e = macro_f1(&confusion(&[0, 0, 0], &gold_e, N_EMOTIONS).unwrap());
    assert_eq!(emotion, want_e);
}

#[test]
fn run_variant_produces_test_reports_for_both_tasks() {
    let vocab = Vocabulary::from_tokens(["aa", "bb", "cc", "dd", "ee", "ff", "gg", "hh", "ii"]);
    let splits = Splits {
        train: tiny_corpus(),
        val: tiny_corpus(),
        test: tiny_corpus(),
        vocab,
    };
    let cs = constraints();
    let cfg = TrainConfig { max_epochs: 2, ..quick_cfg() };
    let run = run_variant(&splits, &cs, &cfg).unwrap();
    assert_eq!(run.test_reaction.per_class.len(), N_REACTIONS);
    assert_eq!(run.test_emotion.per_class.len(), N_EMOTIONS);
    assert_eq!(run.outcome.log.len(), 2);
    assert_eq!(run.variant, Variant::Constr);
}
