//! C interface for the rule engine and trained models.
//!
//! Everything crossing the boundary is either a plain value, a
//! NUL-terminated string, or an opaque handle owned by this library and
//! released through the matching `_free` function. Fallible calls return
//! [`EmologStatus`]; on any non-zero status,
//! [`emolog_last_error_message`] describes the failure.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::{c_char, CStr, CString};
use std::fmt::Display;
use std::path::Path;
use std::ptr;

use emolog::folc::{
    compile_ruleset, default_ruleset, parse_rules, CompiledConstraint, FolRule, Predicate, Task,
    N_EMOTIONS, N_REACTIONS,
};
use emolog::net::{Checkpoint, Net};
use emolog::textprep::{preprocess, Vocabulary};
use emolog::trainer::constraint_term_values;

/// Length of every reaction probability buffer.
pub const EMOLOG_N_REACTIONS: usize = 5;
/// Length of every emotion probability buffer.
pub const EMOLOG_N_EMOTIONS: usize = 6;

/// Outcome of a call. Anything but `Ok` leaves a message retrievable with
/// `emolog_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmologStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Rule text did not parse.
    ParseError = 3,
    /// A file was unreadable, malformed, or inconsistent with its
    /// companion (checkpoint vs vocabulary).
    LoadError = 4,
    /// An index was outside the handle's range.
    OutOfRange = 5,
    /// The text produced no usable tokens.
    EmptyInput = 6,
    /// Evaluation failed.
    EvalError = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: EmologStatus, message: impl Display) -> EmologStatus {
    let rendered = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(rendered).unwrap());
    status
}

/// Message for the most recent failure on the calling thread. Never null;
/// empty before the first failure. The pointer is owned by the library and
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn emolog_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must have been returned by an `emolog_` function documented as
/// allocating, and not freed before.
#[no_mangle]
pub unsafe extern "C" fn emolog_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Canonical reaction class name for `index`, or null when out of range.
/// The pointer is static; do not free it.
#[no_mangle]
pub extern "C" fn emolog_reaction_name(index: usize) -> *const c_char {
    static NAMES: [&CStr; 5] = [c"HAHA", c"SAD", c"ANGRY", c"LOVE", c"WOW"];
    NAMES.get(index).map_or(ptr::null(), |s| s.as_ptr())
}

/// Canonical emotion class name for `index`, or null when out of range.
/// The pointer is static; do not free it.
#[no_mangle]
pub extern "C" fn emolog_emotion_name(index: usize) -> *const c_char {
    static NAMES: [&CStr; 6] =
        [c"anger", c"disgust", c"fear", c"happiness", c"sadness", c"surprise"];
    NAMES.get(index).map_or(ptr::null(), |s| s.as_ptr())
}

/// Rules plus their compiled penalty polynomials.
pub struct EmologRuleset {
    rules: Vec<FolRule>,
    compiled: Vec<CompiledConstraint>,
    weights: Vec<f64>,
}

impl EmologRuleset {
    fn from_rules(rules: Vec<FolRule>) -> *mut EmologRuleset {
        let compiled = compile_ruleset(&rules);
        let weights = rules.iter().map(|r| r.weight).collect();
        Box::into_raw(Box::new(EmologRuleset { rules, compiled, weights }))
    }
}

/// Builds the built-in eleven-rule set. Never fails; release with
/// `emolog_ruleset_free`.
#[no_mangle]
pub extern "C" fn emolog_ruleset_default() -> *mut EmologRuleset {
    EmologRuleset::from_rules(default_ruleset())
}

/// Parses rule text (one implication per line, `#` comments) into a new
/// handle written to `*out`. On failure `*out` is null.
///
/// # Safety
/// `text` must be NUL-terminated and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn emolog_ruleset_parse(
    text: *const c_char,
    out: *mut *mut EmologRuleset,
) -> EmologStatus {
    if out.is_null() {
        return fail(EmologStatus::NullArgument, "out is null");
    }
    *out = ptr::null_mut();
    if text.is_null() {
        return fail(EmologStatus::NullArgument, "text is null");
    }
    let text = match CStr::from_ptr(text).to_str() {
        Ok(text) => text,
        Err(err) => return fail(EmologStatus::InvalidUtf8, err),
    };
    match parse_rules(text) {
        Ok(rules) => {
            *out = EmologRuleset::from_rules(rules);
            EmologStatus::Ok
        }
        Err(err) => fail(EmologStatus::ParseError, err),
    }
}

/// Number of rules in the set; 0 for a null handle.
///
/// # Safety
/// `ruleset` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn emolog_ruleset_len(ruleset: *const EmologRuleset) -> usize {
    ruleset.as_ref().map_or(0, |rs| rs.rules.len())
}

/// Writes the rule at `index` rendered as text (antecedent, consequents,
/// weight) to `*out`. Free with `emolog_string_free`.
///
/// # Safety
/// `ruleset` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn emolog_ruleset_rule_string(
    ruleset: *const EmologRuleset,
    index: usize,
    out: *mut *mut c_char,
) -> EmologStatus {
    with_rule(ruleset, index, out, |rs, i| rs.rules[i].to_string())
}

/// Writes the expanded truth polynomial of the rule at `index` to `*out`.
/// Free with `emolog_string_free`.
///
/// # Safety
/// `ruleset` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn emolog_ruleset_poly_string(
    ruleset: *const EmologRuleset,
    index: usize,
    out: *mut *mut c_char,
) -> EmologStatus {
    with_rule(ruleset, index, out, |rs, i| rs.compiled[i].print_poly())
}

unsafe fn with_rule(
    ruleset: *const EmologRuleset,
    index: usize,
    out: *mut *mut c_char,
    render: impl Fn(&EmologRuleset, usize) -> String,
) -> EmologStatus {
    if out.is_null() {
        return fail(EmologStatus::NullArgument, "out is null");
    }
    *out = ptr::null_mut();
    let Some(rs) = ruleset.as_ref() else {
        return fail(EmologStatus::NullArgument, "ruleset is null");
    };
    if index >= rs.rules.len() {
        return fail(
            EmologStatus::OutOfRange,
            format!("rule index {index} out of range for {} rules", rs.rules.len()),
        );
    }
    // Rendered rules never contain NUL bytes.
    *out = CString::new(render(rs, index)).unwrap().into_raw();
    EmologStatus::Ok
}

unsafe fn read_probs(
    p_reaction: *const f64,
    p_emotion: *const f64,
) -> Option<([f64; N_REACTIONS], [f64; N_EMOTIONS])> {
    if p_reaction.is_null() || p_emotion.is_null() {
        return None;
    }
    let mut p_r = [0.0; N_REACTIONS];
    let mut p_e = [0.0; N_EMOTIONS];
    ptr::copy_nonoverlapping(p_reaction, p_r.as_mut_ptr(), N_REACTIONS);
    ptr::copy_nonoverlapping(p_emotion, p_e.as_mut_ptr(), N_EMOTIONS);
    Some((p_r, p_e))
}

fn full_assignment(p_r: &[f64], p_e: &[f64]) -> HashMap<Predicate, f64> {
    let mut assignment = HashMap::new();
    for (class_index, v) in p_r.iter().enumerate() {
        assignment.insert(Predicate { task: Task::Reaction, class_index }, *v);
    }
    for (class_index, v) in p_e.iter().enumerate() {
        assignment.insert(Predicate { task: Task::Emotion, class_index }, *v);
    }
    assignment
}

/// Penalty of the single rule at `index` under the given class
/// probabilities. `p_reaction` must hold `EMOLOG_N_REACTIONS` values and
/// `p_emotion` `EMOLOG_N_EMOTIONS`.
///
/// # Safety
/// `ruleset` must be a live handle; the probability pointers must cover
/// their documented lengths; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn emolog_ruleset_penalty(
    ruleset: *const EmologRuleset,
    index: usize,
    p_reaction: *const f64,
    p_emotion: *const f64,
    out: *mut f64,
) -> EmologStatus {
    if out.is_null() {
        return fail(EmologStatus::NullArgument, "out is null");
    }
    let Some(rs) = ruleset.as_ref() else {
        return fail(EmologStatus::NullArgument, "ruleset is null");
    };
    if index >= rs.compiled.len() {
        return fail(
            EmologStatus::OutOfRange,
            format!("rule index {index} out of range for {} rules", rs.compiled.len()),
        );
    }
    let Some((p_r, p_e)) = read_probs(p_reaction, p_emotion) else {
        return fail(EmologStatus::NullArgument, "probability buffer is null");
    };
    match rs.compiled[index].eval_penalty(&full_assignment(&p_r, &p_e)) {
        Ok(value) => {
            *out = value;
            EmologStatus::Ok
        }
        Err(err) => fail(EmologStatus::EvalError, err),
    }
}

/// Weighted sum of all rule penalties under the given class probabilities,
/// written to `*out`. Buffer lengths as in `emolog_ruleset_penalty`.
///
/// # Safety
/// Same contract as `emolog_ruleset_penalty`, minus the index.
#[no_mangle]
pub unsafe extern "C" fn emolog_ruleset_constraint_term(
    ruleset: *const EmologRuleset,
    p_reaction: *const f64,
    p_emotion: *const f64,
    out: *mut f64,
) -> EmologStatus {
    if out.is_null() {
        return fail(EmologStatus::NullArgument, "out is null");
    }
    let Some(rs) = ruleset.as_ref() else {
        return fail(EmologStatus::NullArgument, "ruleset is null");
    };
    let Some((p_r, p_e)) = read_probs(p_reaction, p_emotion) else {
        return fail(EmologStatus::NullArgument, "probability buffer is null");
    };
    match constraint_term_values(&rs.compiled, &rs.weights, &p_r, &p_e) {
        Ok(value) => {
            *out = value;
            EmologStatus::Ok
        }
        Err(err) => fail(EmologStatus::EvalError, err),
    }
}

/// Releases a ruleset handle. Null is ignored.
///
/// # Safety
/// `ruleset` must be null or a live handle, and must not be used after.
#[no_mangle]
pub unsafe extern "C" fn emolog_ruleset_free(ruleset: *mut EmologRuleset) {
    if !ruleset.is_null() {
        drop(Box::from_raw(ruleset));
    }
}

/// A trained checkpoint bound to the vocabulary it was trained with.
pub struct EmologModel {
    net: Net,
    params: Vec<f64>,
    vocab: Vocabulary,
}

/// Loads a checkpoint and its vocabulary, verifying that the vocabulary
/// hash recorded in the checkpoint matches the file. On success a handle
/// is written to `*out`; release with `emolog_model_free`.
///
/// # Safety
/// Both paths must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn emolog_model_load(
    checkpoint_path: *const c_char,
    vocab_path: *const c_char,
    out: *mut *mut EmologModel,
) -> EmologStatus {
    if out.is_null() {
        return fail(EmologStatus::NullArgument, "out is null");
    }
    *out = ptr::null_mut();
    if checkpoint_path.is_null() || vocab_path.is_null() {
        return fail(EmologStatus::NullArgument, "path is null");
    }
    let to_str = |p: *const c_char| CStr::from_ptr(p).to_str().map(Path::new);
    let (checkpoint_path, vocab_path) = match (to_str(checkpoint_path), to_str(vocab_path)) {
        (Ok(c), Ok(v)) => (c, v),
        (Err(err), _) | (_, Err(err)) => return fail(EmologStatus::InvalidUtf8, err),
    };

    let checkpoint = match Checkpoint::load(checkpoint_path) {
        Ok(c) => c,
        Err(err) => return fail(EmologStatus::LoadError, err),
    };
    let vocab = match Vocabulary::load(vocab_path) {
        Ok(v) => v,
        Err(err) => return fail(EmologStatus::LoadError, err),
    };
    if let Err(err) = checkpoint.require_vocab(&vocab.sha256_hex()) {
        return fail(EmologStatus::LoadError, err);
    }
    match checkpoint.into_net_and_params() {
        Ok((net, params)) => {
            *out = Box::into_raw(Box::new(EmologModel { net, params, vocab }));
            EmologStatus::Ok
        }
        Err(err) => fail(EmologStatus::LoadError, err),
    }
}

/// Classifies `text` and writes both probability distributions:
/// `p_reaction` receives `EMOLOG_N_REACTIONS` values, `p_emotion`
/// `EMOLOG_N_EMOTIONS`. Texts that normalize to nothing (only punctuation
/// or whitespace) yield `EmptyInput` and leave the buffers untouched.
///
/// # Safety
/// `model` must be a live handle, `text` NUL-terminated, and the output
/// buffers writable for their documented lengths.
#[no_mangle]
pub unsafe extern "C" fn emolog_model_predict(
    model: *const EmologModel,
    text: *const c_char,
    p_reaction: *mut f64,
    p_emotion: *mut f64,
) -> EmologStatus {
    let Some(model) = model.as_ref() else {
        return fail(EmologStatus::NullArgument, "model is null");
    };
    if text.is_null() {
        return fail(EmologStatus::NullArgument, "text is null");
    }
    if p_reaction.is_null() || p_emotion.is_null() {
        return fail(EmologStatus::NullArgument, "probability buffer is null");
    }
    let text = match CStr::from_ptr(text).to_str() {
        Ok(text) => text,
        Err(err) => return fail(EmologStatus::InvalidUtf8, err),
    };

    let tokens = preprocess(text);
    if tokens.is_empty() {
        return fail(EmologStatus::EmptyInput, "no tokens after preprocessing");
    }
    let max_len = model.net.config().max_len;
    let ids = model.vocab.encode(&tokens[..tokens.len().min(max_len)]);
    match model.net.forward_values(&model.params, &ids) {
        Ok((p_r, p_e)) => {
            ptr::copy_nonoverlapping(p_r.as_ptr(), p_reaction, N_REACTIONS);
            ptr::copy_nonoverlapping(p_e.as_ptr(), p_emotion, N_EMOTIONS);
            EmologStatus::Ok
        }
        Err(err) => fail(EmologStatus::EvalError, err),
    }
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a live handle, and must not be used after.
#[no_mangle]
pub unsafe extern "C" fn emolog_model_free(model: *mut EmologModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
