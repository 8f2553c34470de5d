//! Rule DSL and constraint compilation.
//!
//! Rules are implications between a reaction-class predicate and one or more
//! emotion-class predicates (or the other way around). Under product
//! semantics an implication `a => b` becomes the polynomial `1 - a + a*b`,
//! and a disjunction `b | c` becomes `b + c - b*c`. Constraining a rule to
//! hold means driving its polynomial to 1, which we penalize with
//! `-log(poly)`.

mod parser;

use std::collections::HashMap;
use std::fmt;

pub use parser::{parse_rules, ParseError};

use crate::graph::{NodeId, Tape};

/// Clamp guard for `-log(poly)` so violated rules yield a bounded penalty.
pub const DEFAULT_CLAMP_EPSILON: f64 = 1e-7;

/// Default weight for ordinary rules.
pub const DEFAULT_STRONG_WEIGHT: f64 = 1.0;
/// Default weight for the weaker rules (4, 7 and 8 in the default set).
pub const DEFAULT_WEAK_WEIGHT: f64 = 0.2;

/// Reaction classes in canonical component order.
pub const REACTION_NAMES: [&str; 5] = ["HAHA", "SAD", "ANGRY", "LOVE", "WOW"];
/// Emotion classes in canonical component order.
pub const EMOTION_NAMES: [&str; 6] = [
    "anger",
    "disgust",
    "fear",
    "happiness",
    "sadness",
    "surprise",
];

pub const N_REACTIONS: usize = REACTION_NAMES.len();
pub const N_EMOTIONS: usize = EMOTION_NAMES.len();

/// Which predictor a predicate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Task {
    Reaction,
    Emotion,
}

/// A named class predicate, resolved to a component of `p_r` or `p_e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    pub task: Task,
    pub class_index: usize,
}

impl Predicate {
    /// Resolves a class name against the canonical orders. Names are
    /// case-sensitive: reactions are upper-case, emotions lower-case.
    pub fn resolve(name: &str) -> Option<Predicate> {
        if let Some(i) = REACTION_NAMES.iter().position(|n| *n == name) {
            return Some(Predicate { task: Task::Reaction, class_index: i });
        }
        if let Some(i) = EMOTION_NAMES.iter().position(|n| *n == name) {
            return Some(Predicate { task: Task::Emotion, class_index: i });
        }
        None
    }

    pub fn name(&self) -> &'static str {
        match self.task {
            Task::Reaction => REACTION_NAMES[self.class_index],
            Task::Emotion => EMOTION_NAMES[self.class_index],
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A possibly negated predicate occurrence. The default ruleset never
/// negates, but the DSL accepts `!name` (truth degree `1 - name`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub predicate: Predicate,
    pub negated: bool,
}

impl Literal {
    pub fn plain(predicate: Predicate) -> Literal {
        Literal { predicate, negated: false }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "!{}", self.predicate)
        } else {
            write!(f, "{}", self.predicate)
        }
    }
}

/// One implication rule: `antecedent => consequent (| consequent)*`.
#[derive(Debug, Clone, PartialEq)]
pub struct FolRule {
    /// 1-based rule number, assigned in source order.
    pub id: usize,
    pub antecedent: Literal,
    /// Nonempty; more than one consequent means a disjunction.
    pub consequents: Vec<Literal>,
    /// Nonnegative; zero disables the rule.
    pub weight: f64,
    /// True when antecedent and every consequent live on the same task.
    /// Permitted, but unusual: the ruleset is meant to bridge the tasks.
    pub same_task: bool,
}

impl FolRule {
    pub fn new(id: usize, antecedent: Literal, consequents: Vec<Literal>, weight: f64) -> FolRule {
        assert!(!consequents.is_empty(), "rule must have at least one consequent");
        assert!(weight >= 0.0, "rule weight must be nonnegative");
        let same_task = consequents
            .iter()
            .all(|c| c.predicate.task == antecedent.predicate.task);
        FolRule { id, antecedent, consequents, weight, same_task }
    }

    /// Every distinct predicate mentioned by the rule, antecedent first.
    pub fn predicates(&self) -> Vec<Predicate> {
        let mut out = vec![self.antecedent.predicate];
        for c in &self.consequents {
            if !out.contains(&c.predicate) {
                out.push(c.predicate);
            }
        }
        out
    }
}

impl fmt::Display for FolRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} => ", self.antecedent)?;
        for (i, c) in self.consequents.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, " @w={}", self.weight)
    }
}

/// Expression tree over predicate truth degrees. Built by [`compile_rule`];
/// evaluates into [0,1] whenever all variables are in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub enum Polynomial {
    Const(f64),
    Var(Predicate),
    Add(Box<Polynomial>, Box<Polynomial>),
    Sub(Box<Polynomial>, Box<Polynomial>),
    Mul(Box<Polynomial>, Box<Polynomial>),
}

impl Polynomial {
    fn add(a: Polynomial, b: Polynomial) -> Polynomial {
        Polynomial::Add(Box::new(a), Box::new(b))
    }
    fn sub(a: Polynomial, b: Polynomial) -> Polynomial {
        Polynomial::Sub(Box::new(a), Box::new(b))
    }
    fn mul(a: Polynomial, b: Polynomial) -> Polynomial {
        Polynomial::Mul(Box::new(a), Box::new(b))
    }

    fn literal(lit: &Literal) -> Polynomial {
        if lit.negated {
            Polynomial::sub(Polynomial::Const(1.0), Polynomial::Var(lit.predicate))
        } else {
            Polynomial::Var(lit.predicate)
        }
    }

    /// Variables in first-occurrence order.
    pub fn variables(&self) -> Vec<Predicate> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Predicate>) {
        match self {
            Polynomial::Const(_) => {}
            Polynomial::Var(p) => {
                if !out.contains(p) {
                    out.push(*p);
                }
            }
            Polynomial::Add(a, b) | Polynomial::Sub(a, b) | Polynomial::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Evaluates the tree with variable values supplied by `lookup`.
    pub fn eval_with(&self, lookup: &impl Fn(Predicate) -> f64) -> f64 {
        match self {
            Polynomial::Const(c) => *c,
            Polynomial::Var(p) => lookup(*p),
            Polynomial::Add(a, b) => a.eval_with(lookup) + b.eval_with(lookup),
            Polynomial::Sub(a, b) => a.eval_with(lookup) - b.eval_with(lookup),
            Polynomial::Mul(a, b) => a.eval_with(lookup) * b.eval_with(lookup),
        }
    }

    /// Mirrors the tree onto a tape, with variable nodes supplied by `bind`.
    pub fn build_on_tape(&self, tape: &mut Tape, bind: &impl Fn(Predicate) -> NodeId) -> NodeId {
        match self {
            Polynomial::Const(c) => tape.constant(*c),
            Polynomial::Var(p) => bind(*p),
            Polynomial::Add(a, b) => {
                let (a, b) = (a.build_on_tape(tape, bind), b.build_on_tape(tape, bind));
                tape.add(a, b)
            }
            Polynomial::Sub(a, b) => {
                let (a, b) = (a.build_on_tape(tape, bind), b.build_on_tape(tape, bind));
                tape.sub(a, b)
            }
            Polynomial::Mul(a, b) => {
                let (a, b) = (a.build_on_tape(tape, bind), b.build_on_tape(tape, bind));
                tape.mul(a, b)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Polynomial::Const(_) | Polynomial::Var(_) => 2,
            Polynomial::Mul(_, _) => 1,
            Polynomial::Add(_, _) | Polynomial::Sub(_, _) => 0,
        }
    }

    fn render(&self, out: &mut String, min_prec: u8) {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            out.push('(');
        }
        match self {
            Polynomial::Const(c) => {
                if c.fract() == 0.0 {
                    out.push_str(&format!("{}", *c as i64));
                } else {
                    out.push_str(&format!("{c}"));
                }
            }
            Polynomial::Var(p) => out.push_str(p.name()),
            Polynomial::Add(a, b) => {
                a.render(out, 0);
                out.push_str(" + ");
                b.render(out, 1);
            }
            Polynomial::Sub(a, b) => {
                a.render(out, 0);
                out.push_str(" - ");
                b.render(out, 1);
            }
            Polynomial::Mul(a, b) => {
                a.render(out, 1);
                out.push('*');
                b.render(out, 2);
            }
        }
        if parens {
            out.push(')');
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(&mut s, 0);
        f.write_str(&s)
    }
}

/// Errors from evaluating a compiled constraint against an assignment.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("no value for predicate {0}")]
    MissingVariable(String),
    #[error("value {value} for predicate {name} is outside [0,1]")]
    OutOfRange { name: String, value: f64 },
}

/// A rule together with its product-semantics polynomial.
#[derive(Debug, Clone)]
pub struct CompiledConstraint {
    pub rule: FolRule,
    pub poly: Polynomial,
    pub clamp_epsilon: f64,
}

impl CompiledConstraint {
    /// Polynomial value at an assignment; in [0,1] for in-range inputs.
    pub fn eval_poly(&self, assignment: &HashMap<Predicate, f64>) -> Result<f64, EvalError> {
        for p in self.poly.variables() {
            match assignment.get(&p) {
                None => return Err(EvalError::MissingVariable(p.name().to_string())),
                Some(&v) if !(0.0..=1.0).contains(&v) => {
                    return Err(EvalError::OutOfRange { name: p.name().to_string(), value: v })
                }
                Some(_) => {}
            }
        }
        Ok(self.poly.eval_with(&|p| assignment[&p]))
    }

    /// `-log(max(poly, clamp_epsilon))`, floored at zero so satisfied rules
    /// cost exactly nothing.
    pub fn eval_penalty(&self, assignment: &HashMap<Predicate, f64>) -> Result<f64, EvalError> {
        let poly = self.eval_poly(assignment)?;
        Ok((-(poly.max(self.clamp_epsilon)).ln()).max(0.0))
    }

    /// Appends `-log(max(poly, eps))` nodes to a tape. `bind` supplies the
    /// node carrying each predicate's probability.
    pub fn penalty_on_tape(&self, tape: &mut Tape, bind: &impl Fn(Predicate) -> NodeId) -> NodeId {
        let poly = self.poly.build_on_tape(tape, bind);
        let clamped = tape.max_const(poly, self.clamp_epsilon);
        let log = tape.log(clamped);
        let zero = tape.constant(0.0);
        tape.sub(zero, log)
    }

    /// Canonical infix rendering of the polynomial.
    pub fn print_poly(&self) -> String {
        self.poly.to_string()
    }
}

/// Compiles a rule into its polynomial form: `1 - a + a*B`, where `B` is the
/// left-associated `x + y - x*y` fold of the consequents.
pub fn compile_rule(rule: &FolRule) -> CompiledConstraint {
    compile_rule_with_epsilon(rule, DEFAULT_CLAMP_EPSILON)
}

pub fn compile_rule_with_epsilon(rule: &FolRule, clamp_epsilon: f64) -> CompiledConstraint {
    let a = Polynomial::literal(&rule.antecedent);
    let mut body = Polynomial::literal(&rule.consequents[0]);
    for c in &rule.consequents[1..] {
        let d = Polynomial::literal(c);
        // x | y  ->  x + y - x*y
        body = Polynomial::sub(
            Polynomial::add(body.clone(), d.clone()),
            Polynomial::mul(body, d),
        );
    }
    let poly = Polynomial::add(
        Polynomial::sub(Polynomial::Const(1.0), a.clone()),
        Polynomial::mul(a, body),
    );
    CompiledConstraint { rule: rule.clone(), poly, clamp_epsilon }
}

pub fn compile_ruleset(rules: &[FolRule]) -> Vec<CompiledConstraint> {
    rules.iter().map(compile_rule).collect()
}

/// The eleven built-in rules bridging reactions and emotions, with
/// `weak` applied to rules 4, 7 and 8 and `strong` to the rest.
pub fn default_ruleset_with_weights(strong: f64, weak: f64) -> Vec<FolRule> {
    let lines = [
        ("HAHA", vec!["happiness"]),
        ("SAD", vec!["sadness"]),
        ("ANGRY", vec!["anger", "disgust"]),
        ("LOVE", vec!["happiness"]),
        ("WOW", vec!["surprise", "fear"]),
        ("anger", vec!["ANGRY"]),
        ("disgust", vec!["ANGRY"]),
        ("fear", vec!["WOW"]),
        ("happiness", vec!["HAHA", "LOVE"]),
        ("sadness", vec!["SAD"]),
        ("surprise", vec!["WOW"]),
    ];
    lines
        .iter()
        .enumerate()
        .map(|(i, (ant, cons))| {
            let id = i + 1;
            let weight = if matches!(id, 4 | 7 | 8) { weak } else { strong };
            FolRule::new(
                id,
                Literal::plain(Predicate::resolve(ant).expect("builtin name")),
                cons.iter()
                    .map(|c| Literal::plain(Predicate::resolve(c).expect("builtin name")))
                    .collect(),
                weight,
            )
        })
        .collect()
}

/// The built-in rules at default weights.
pub fn default_ruleset() -> Vec<FolRule> {
    default_ruleset_with_weights(DEFAULT_STRONG_WEIGHT, DEFAULT_WEAK_WEIGHT)
}
