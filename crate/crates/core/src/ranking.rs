//! Eliteness-based document scoring.
//!
//! A query is the set of its vocabulary terms; each is an elite property of
//! the query. Four scorers are provided:
//!
//! - [`score_logical_inclusion`]: `sum_{i in q} ln[P(E_i=1|d) / P(E_i=1)]`,
//!   with the posterior taken from the fitted 2-Poisson mixture at the
//!   document's length-normalised tf.
//! - [`score_final`]: the same quantity written directly in terms of the
//!   mixture, `ln[Pois(t; mu1) / (p Pois(t; mu1) + (1-p) Pois(t; mu0))]`.
//!   It equals the logical-inclusion score exactly, not just in rank order.
//! - [`score_strict_identity`]: relevance iff document and query eliteness
//!   vectors coincide, so every vocabulary term contributes. Non-query terms
//!   contribute `ln[P(E_i=0|d) / P(E_i=0)]`; this is evaluated through a
//!   per-document background (see [`StrictIdentityBackground`]).
//! - [`score_idf`]: occurrence-based eliteness, `sum ln(N / df)` over matched
//!   query terms.
//!
//! Query terms with tf = 0 in a document are dropped by the first two
//! scorers, so a score is a sum over matched query terms only and candidate
//! generation stays posting-driven. Each dropped contribution,
//! `ln[P(E_i=1|0) / p_i]`, depends only on the term, so for a single-term query
//! the ordering is the same as with the term included. For longer queries the
//! two forms can order documents differently: the full sum additionally
//! penalises a document for every query term it lacks. The matched-term form
//! is the one that reduces to IDF under occurrence-based eliteness.
//!
//! The logical-inclusion relation before simplification also carries a sum
//! over eliteness assignments of the non-query properties. Under term
//! independence that sum factorises into a product over non-query terms of
//! `sum_e P(E_i=e|d) P(E_i=e|R) / P(E_i=e)`, which does not involve the query
//! and is discarded here.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::baselines::{bm25_score_unchecked, lm_score, Bm25Config, LmConfig, Smoothing};
use crate::corpus::{check_b, normalized_tf_unchecked, tokenize, CorpusIndex, DocId, TermId};
use crate::error::{Error, Result};
use crate::math::{ln_poisson_kernel, log_add_exp};
use crate::mixture::{ElitenessModel, TwoPoissonParams};

/// A query as a set of elite terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRepr {
    pub query_id: String,
    /// Sorted and deduplicated.
    pub elite_terms: Vec<TermId>,
    /// Tokens absent from the index vocabulary, in first-seen order.
    pub unknown_terms: Vec<String>,
}

impl QueryRepr {
    /// Tokenise `text` with the index's tokenizer settings.
    pub fn parse(query_id: impl Into<String>, text: &str, index: &CorpusIndex) -> Self {
        Self::from_tokens(query_id, tokenize(text, index.tokenizer()), index)
    }

    pub fn from_tokens<I, S>(query_id: impl Into<String>, tokens: I, index: &CorpusIndex) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut elite_terms = Vec::new();
        let mut unknown_terms: Vec<String> = Vec::new();
        for tok in tokens {
            let tok = tok.as_ref();
            match index.term_id(tok) {
                Some(id) => elite_terms.push(id),
                None if !unknown_terms.iter().any(|u| u == tok) => {
                    unknown_terms.push(tok.to_string())
                }
                None => {}
            }
        }
        elite_terms.sort_unstable();
        elite_terms.dedup();
        Self {
            query_id: query_id.into(),
            elite_terms,
            unknown_terms,
        }
    }

    pub fn from_term_ids(query_id: impl Into<String>, mut terms: Vec<TermId>) -> Self {
        terms.sort_unstable();
        terms.dedup();
        Self {
            query_id: query_id.into(),
            elite_terms: terms,
            unknown_terms: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    /// Score descending, then doc id ascending.
    pub entries: Vec<ScoredDoc>,
    /// Query terms skipped because their mixture fit is unusable.
    pub skipped_terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scorer {
    Final,
    LogicalInclusion,
    StrictIdentity,
    Idf,
    Bm25,
    LmJm,
    LmDirichlet,
}

impl Scorer {
    pub const ALL: [Scorer; 7] = [
        Scorer::Final,
        Scorer::LogicalInclusion,
        Scorer::StrictIdentity,
        Scorer::Idf,
        Scorer::Bm25,
        Scorer::LmJm,
        Scorer::LmDirichlet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scorer::Final => "final",
            Scorer::LogicalInclusion => "logical-inclusion",
            Scorer::StrictIdentity => "strict-identity",
            Scorer::Idf => "idf",
            Scorer::Bm25 => "bm25",
            Scorer::LmJm => "lm-jm",
            Scorer::LmDirichlet => "lm-dirichlet",
        }
    }

    pub fn needs_model(self) -> bool {
        matches!(
            self,
            Scorer::Final | Scorer::LogicalInclusion | Scorer::StrictIdentity
        )
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scorer::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scorer::ALL.iter().map(|s| s.name()).collect();
                Error::InvalidConfig(format!(
                    "unknown scorer `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[inline]
fn norm_tf(index: &CorpusIndex, term: TermId, doc: DocId, b: f64) -> f64 {
    normalized_tf_unchecked(
        index.tf(term, doc),
        index.doc_len(doc),
        index.avg_doc_len(),
        b,
    )
}

/// `ln[Pois(t; mu1) / mixture(t)]`, evaluated as
/// `-ln[p + (1-p) Pois(t; mu0) / Pois(t; mu1)]`.
#[inline]
fn final_contribution(p: &TwoPoissonParams, t: f64) -> Option<f64> {
    let log_ratio = ln_poisson_kernel(t, p.mu_nonelite) - ln_poisson_kernel(t, p.mu_elite);
    let v = -log_add_exp(p.p_elite.ln(), (1.0 - p.p_elite).ln() + log_ratio);
    (!v.is_nan()).then_some(v)
}

/// `ln[P(E=1|t) / p]` through the log posterior.
#[inline]
fn inclusion_contribution(p: &TwoPoissonParams, t: f64) -> Option<f64> {
    p.ln_posterior_elite(t).map(|lp| lp - p.p_elite.ln())
}

/// `ln[P(E=0|t) / (1-p)]`.
#[inline]
fn nonelite_contribution(p: &TwoPoissonParams, t: f64) -> Option<f64> {
    p.ln_posterior_nonelite(t)
        .map(|lp| lp - (1.0 - p.p_elite).ln())
}

/// Final 2-Poisson ranking function.
pub fn score_final(
    q: &QueryRepr,
    doc: DocId,
    index: &CorpusIndex,
    model: &ElitenessModel,
    b: f64,
) -> Result<f64> {
    check_b(b)?;
    Ok(final_unchecked(q, doc, index, model, b))
}

fn final_unchecked(
    q: &QueryRepr,
    doc: DocId,
    index: &CorpusIndex,
    model: &ElitenessModel,
    b: f64,
) -> f64 {
    q.elite_terms
        .iter()
        .filter_map(|&term| {
            let params = model.params(term)?;
            let t = norm_tf(index, term, doc, b);
            if t > 0.0 {
                final_contribution(params, t)
            } else {
                None
            }
        })
        .sum()
}

/// Logical-inclusion score: sum of eliteness log-odds gains over query terms.
pub fn score_logical_inclusion(
    q: &QueryRepr,
    doc: DocId,
    index: &CorpusIndex,
    model: &ElitenessModel,
    b: f64,
) -> Result<f64> {
    check_b(b)?;
    Ok(inclusion_unchecked(q, doc, index, model, b))
}

fn inclusion_unchecked(
    q: &QueryRepr,
    doc: DocId,
    index: &CorpusIndex,
    model: &ElitenessModel,
    b: f64,
) -> f64 {
    q.elite_terms
        .iter()
        .filter_map(|&term| {
            let params = model.params(term)?;
            let t = norm_tf(index, term, doc, b);
            if t > 0.0 {
                inclusion_contribution(params, t)
            } else {
                None
            }
        })
        .sum()
}

/// Per-document sum of `ln[P(E_i=0|d) / P(E_i=0)]` over the whole vocabulary,
/// for one value of `b`.
///
/// Terms absent from a document all sit at tf = 0, so their contribution
/// depends only on the term. The background is the sum of those constants,
/// corrected once per posting for terms the document does contain.
#[derive(Debug, Clone)]
pub struct StrictIdentityBackground {
    b: f64,
    per_doc: Vec<f64>,
}

impl StrictIdentityBackground {
    pub fn new(index: &CorpusIndex, model: &ElitenessModel, b: f64) -> Result<Self> {
        check_b(b)?;
        model.check_bound_to(index)?;
        let mut absent_total = 0.0;
        let mut corrections = vec![0.0; index.num_docs()];
        for (term, _) in index.terms() {
            let Some(params) = model.params(term) else {
                continue;
            };
            let Some(absent) = nonelite_contribution(params, 0.0) else {
                continue;
            };
            absent_total += absent;
            for posting in index.postings(term) {
                let t = norm_tf(index, term, posting.doc, b);
                if let Some(present) = nonelite_contribution(params, t) {
                    corrections[posting.doc.index()] += present - absent;
                }
            }
        }
        let per_doc = corrections.into_iter().map(|c| absent_total + c).collect();
        Ok(Self { b, per_doc })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn get(&self, doc: DocId) -> f64 {
        self.per_doc[doc.index()]
    }
}

/// Strict-identity score: background minus the query terms' non-elite
/// contributions plus their elite contributions.
pub fn score_strict_identity(
    q: &QueryRepr,
    doc: DocId,
    index: &CorpusIndex,
    model: &ElitenessModel,
    background: &StrictIdentityBackground,
) -> f64 {
    let b = background.b;
    let adjust: f64 = q
        .elite_terms
        .iter()
        .filter_map(|&term| {
            let params = model.params(term)?;
            let t = norm_tf(index, term, doc, b);
            let present = inclusion_contribution(params, t)?;
            let absent = nonelite_contribution(params, t)?;
            Some(present - absent)
        })
        .sum();
    background.get(doc) + adjust
}

/// IDF reduction: `sum ln(N / df)` over query terms occurring in `doc`.
pub fn score_idf(q: &QueryRepr, doc: DocId, index: &CorpusIndex) -> f64 {
    let n = index.num_docs() as f64;
    q.elite_terms
        .iter()
        .filter(|&&term| index.df(term) > 0 && index.tf(term, doc) > 0)
        .map(|&term| (n / index.df(term) as f64).ln())
        .sum()
}

/// Scores and ranks documents for one index, model and parameter setting.
#[derive(Debug)]
pub struct Ranker<'a> {
    index: &'a CorpusIndex,
    model: Option<&'a ElitenessModel>,
    b: f64,
    bm25: Bm25Config,
    lm: LmConfig,
    background: OnceLock<StrictIdentityBackground>,
}

impl<'a> Ranker<'a> {
    pub fn new(index: &'a CorpusIndex) -> Self {
        Self {
            index,
            model: None,
            b: crate::pipeline::DEFAULT_B,
            bm25: Bm25Config::default(),
            lm: LmConfig::default(),
            background: OnceLock::new(),
        }
    }

    pub fn with_model(mut self, model: &'a ElitenessModel) -> Result<Self> {
        model.check_bound_to(self.index)?;
        self.model = Some(model);
        self.background = OnceLock::new();
        Ok(self)
    }

    pub fn with_b(mut self, b: f64) -> Result<Self> {
        check_b(b)?;
        self.b = b;
        self.background = OnceLock::new();
        Ok(self)
    }

    pub fn with_bm25(mut self, cfg: Bm25Config) -> Result<Self> {
        cfg.validate()?;
        self.bm25 = cfg;
        Ok(self)
    }

    pub fn with_lm(mut self, cfg: LmConfig) -> Result<Self> {
        cfg.validate()?;
        self.lm = cfg;
        Ok(self)
    }

    pub fn index(&self) -> &CorpusIndex {
        self.index
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    fn model_for(&self, scorer: Scorer) -> Result<&'a ElitenessModel> {
        self.model.ok_or_else(|| {
            Error::InvalidConfig(format!("scorer `{scorer}` requires a fitted model"))
        })
    }

    fn background(&self, model: &ElitenessModel) -> Result<&StrictIdentityBackground> {
        if let Some(bg) = self.background.get() {
            return Ok(bg);
        }
        let bg = StrictIdentityBackground::new(self.index, model, self.b)?;
        Ok(self.background.get_or_init(|| bg))
    }

    /// Score a single document.
    pub fn score(&self, q: &QueryRepr, doc: DocId, scorer: Scorer) -> Result<f64> {
        let index = self.index;
        Ok(match scorer {
            Scorer::Final => final_unchecked(q, doc, index, self.model_for(scorer)?, self.b),
            Scorer::LogicalInclusion => {
                inclusion_unchecked(q, doc, index, self.model_for(scorer)?, self.b)
            }
            Scorer::StrictIdentity => {
                let model = self.model_for(scorer)?;
                score_strict_identity(q, doc, index, model, self.background(model)?)
            }
            Scorer::Idf => score_idf(q, doc, index),
            Scorer::Bm25 => bm25_score_unchecked(q, doc, index, &self.bm25),
            Scorer::LmJm => lm_score(q, doc, index, &self.lm, Smoothing::JelinekMercer),
            Scorer::LmDirichlet => lm_score(q, doc, index, &self.lm, Smoothing::Dirichlet),
        })
    }

    /// Documents containing at least one query term, ascending.
    pub fn candidates(&self, q: &QueryRepr) -> Vec<DocId> {
        let mut docs: Vec<DocId> = q
            .elite_terms
            .iter()
            .flat_map(|&t| self.index.postings(t).iter().map(|p| p.doc))
            .collect();
        docs.sort_unstable();
        docs.dedup();
        docs
    }

    /// Rank candidates for `q` and keep the best `top_k`.
    ///
    /// Strict-identity scoring ranks every document: its background differs
    /// per document even when no query term matches.
    pub fn rank(&self, q: &QueryRepr, scorer: Scorer, top_k: usize) -> Result<RankedList> {
        if top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be at least 1".into()));
        }
        let docs: Vec<DocId> = if scorer == Scorer::StrictIdentity {
            self.index.docs().collect()
        } else {
            self.candidates(q)
        };
        let mut entries = docs
            .into_iter()
            .map(|doc| {
                Ok(ScoredDoc {
                    doc_id: self.index.doc_id(doc).to_string(),
                    score: self.score(q, doc, scorer)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        sort_ranked(&mut entries);
        entries.truncate(top_k);

        let skipped_terms = match (scorer.needs_model(), self.model) {
            (true, Some(model)) => q
                .elite_terms
                .iter()
                .filter(|&&t| model.params(t).is_none())
                .count(),
            _ => 0,
        };
        Ok(RankedList {
            query_id: q.query_id.clone(),
            entries,
            skipped_terms,
        })
    }
}

/// Score descending, doc id ascending.
pub fn sort_ranked(entries: &mut [ScoredDoc]) {
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
}
