//! Pool-based active learning for entity mention detection.
//!
//! The crate trains pairs of maximum-entropy token classifiers (a committee),
//! scores unlabeled sentences by how much the two members disagree or how
//! unsure they are, and runs word-budgeted selection experiments that produce
//! learning curves on a held-out development set.
//!
//! Module map:
//!
//! - [`corpus`]: sentences, mentions, BIO codec, corpus files, splitting and
//!   a synthetic corpus generator.
//! - [`features`]: inside / outside / full token feature views.
//! - [`maxent`]: L2-regularized multinomial logistic regression.
//! - [`scoring`]: sentence selection metrics and ranking.
//! - [`active_loop`]: the controlled selection experiment.
//! - [`eval`]: mention-level precision/recall/F and learning curves.
//! - [`cli`]: configuration files and the `generate` / `run` / `compare`
//!   commands.
//!
//! With the default `parallel` feature the hot loops (gradient evaluation,
//! pool prediction, committee training, multi-seed runs) use rayon. Every
//! parallel reduction runs over fixed chunks merged in a fixed order, so
//! results are bit-identical with and without the feature.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active_loop;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod maxent;
pub mod par;
pub mod rng;
pub mod scoring;

pub use error::{Error, Result};
