//! Joint emotion detection and reaction prediction for short text.
//!
//! The crate trains two classifiers over a shared bidirectional LSTM
//! encoder: a reaction head over post-level feedback classes and an
//! emotion head over six basic emotions. Besides the usual cross-entropy
//! terms, training can penalize violations of implication rules linking
//! the two output distributions (`folc`), which lets unlabeled text and
//! the labels of either task shape both heads.
//!
//! Module map:
//! - [`graph`]: scalar expression tape with reverse-mode differentiation.
//! - [`folc`]: rule DSL, product-semantics compilation, penalties.
//! - [`textprep`]: text normalization, vocabularies, dataset ingestion,
//!   splits, and the synthetic corpus generator.
//! - [`net`]: the BiLSTM encoder and the two softmax heads, built on the
//!   tape, plus checkpoint serialization.
//! - [`eval`]: precision/recall/F1 accounting and report rendering.
//! - [`trainer`]: losses, the optimizer, early stopping, and the training
//!   loop over heterogeneous batches.
//! - [`cli`]: the `emolog` command-line interface.

pub mod cli;
pub mod eval;
pub mod folc;
pub mod graph;
pub mod net;
pub mod textprep;
pub mod trainer;
