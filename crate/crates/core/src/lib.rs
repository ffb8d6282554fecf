//! Topic models with size-reinforced topic merging.
//!
//! Classical PLSA (EM) and LDA (collapsed Gibbs) plus their diverse
//! variants, where every topic assignment takes one step of a random walk on
//! a topic-similarity network whose transitions are reinforced by topic
//! size. Large topics absorb small similar ones until the number of active
//! topics settles. Also included: top-K topic selection by size, MMR and
//! DivRank, and summarization metrics (PMI coherence, fold-in perplexity).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod corpus;
pub mod divlda;
pub mod divplsa;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod lda;
pub mod matrix;
pub mod model;
pub mod network;
pub mod plsa;
pub mod selection;
pub mod trace;

pub use error::{Error, Result};
pub use exec::Execution;
pub use matrix::Matrix;
