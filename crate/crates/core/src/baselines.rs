//! Reference rankers: Okapi BM25 and query-likelihood language models with
//! Jelinek-Mercer or Dirichlet smoothing.

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusIndex, DocId};
use crate::error::{Error, Result};
use crate::ranking::QueryRepr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Config {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Config {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bm25 k1 = {} must be positive",
                self.k1
            )));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidConfig(format!(
                "bm25 b = {} outside [0, 1]",
                self.b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothing {
    JelinekMercer,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub smoothing: Smoothing,
    /// Weight of the collection model under Jelinek-Mercer.
    pub lambda: f64,
    /// Dirichlet prior mass.
    pub mu: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            smoothing: Smoothing::Dirichlet,
            lambda: 0.7,
            mu: 2000.0,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lm lambda = {} outside (0, 1)",
                self.lambda
            )));
        }
        if self.mu.is_nan() || self.mu <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "lm mu = {} must be positive",
                self.mu
            )));
        }
        Ok(())
    }
}

/// BM25 with the Robertson-Sparck Jones IDF, floored at zero.
pub fn bm25_score(q: &QueryRepr, doc: DocId, index: &CorpusIndex, cfg: &Bm25Config) -> Result<f64> {
    cfg.validate()?;
    Ok(bm25_score_unchecked(q, doc, index, cfg))
}

pub(crate) fn bm25_score_unchecked(
    q: &QueryRepr,
    doc: DocId,
    index: &CorpusIndex,
    cfg: &Bm25Config,
) -> f64 {
    let n = index.num_docs() as f64;
    let len_ratio = f64::from(index.doc_len(doc)) / index.avg_doc_len();
    q.elite_terms
        .iter()
        .filter_map(|&term| {
            let tf = index.tf(term, doc);
            if tf == 0 {
                return None;
            }
            let df = index.df(term) as f64;
            let idf = ((n - df + 0.5) / (df + 0.5)).ln().max(0.0);
            let tf = f64::from(tf);
            Some(idf * tf * (cfg.k1 + 1.0) / (tf + cfg.k1 * (1.0 - cfg.b + cfg.b * len_ratio)))
        })
        .sum()
}

/// Query log-likelihood with the smoothing in `cfg`.
pub fn lm_jm_score(q: &QueryRepr, doc: DocId, index: &CorpusIndex, cfg: &LmConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(lm_score(q, doc, index, cfg, Smoothing::JelinekMercer))
}

pub fn lm_dirichlet_score(
    q: &QueryRepr,
    doc: DocId,
    index: &CorpusIndex,
    cfg: &LmConfig,
) -> Result<f64> {
    cfg.validate()?;
    Ok(lm_score(q, doc, index, cfg, Smoothing::Dirichlet))
}

/// Sums over every query term, matched or not. Terms with zero collection
/// frequency cannot be smoothed and are skipped.
pub(crate) fn lm_score(
    q: &QueryRepr,
    doc: DocId,
    index: &CorpusIndex,
    cfg: &LmConfig,
    smoothing: Smoothing,
) -> f64 {
    let total = index.total_tokens() as f64;
    let dl = f64::from(index.doc_len(doc));
    q.elite_terms
        .iter()
        .filter_map(|&term| {
            let cf = index.collection_freq(term);
            if cf == 0 {
                return None;
            }
            let p_c = cf as f64 / total;
            let tf = f64::from(index.tf(term, doc));
            let p = match smoothing {
                Smoothing::JelinekMercer => {
                    let p_d = if dl > 0.0 { tf / dl } else { 0.0 };
                    (1.0 - cfg.lambda) * p_d + cfg.lambda * p_c
                }
                Smoothing::Dirichlet => (tf + cfg.mu * p_c) / (dl + cfg.mu),
            };
            Some(p.ln())
        })
        .sum()
}
