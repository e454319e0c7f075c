//! Eliteness-based probabilistic retrieval.
//!
//! Every vocabulary term is treated as a binary latent "eliteness" property of a
//! document. Term frequencies are modelled as a two-component Poisson mixture
//! (elite / non-elite) whose parameters are fitted per term by EM over the whole
//! collection. Documents are then ranked by how much each query term's eliteness
//! posterior exceeds its prior.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`]: tokenisation, the immutable inverted index and tf histograms.
//! - [`mixture`]: the per-term 2-Poisson EM fit and the eliteness posterior.
//! - [`ranking`]: eliteness scorers and candidate generation.
//! - [`baselines`]: BM25 and query-likelihood language models.
//! - [`eval`]: TREC qrels/run parsing and MAP, MRR, Recall@k.
//! - [`pipeline`]: batch search, run files and parameter sweeps.
//! - [`synth`]: seeded synthetic corpora with planted 2-Poisson terms.

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod math;
pub mod mixture;
pub mod pipeline;
pub mod ranking;
pub mod synth;

pub use error::{Error, Result};
