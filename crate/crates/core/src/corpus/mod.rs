//! Document ingestion, tokenisation and the immutable inverted index.
//!
//! Documents are stored in `doc_id` order and terms in lexicographic order, so
//! every statistic (and the serialised form) is independent of the order in
//! which documents were supplied.

mod io;
mod tokenizer;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use io::{load_index, read_documents, read_jsonl, read_trec_sgml, save_index, DocFormat};
pub use tokenizer::{tokenize, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl DocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: DocId,
    pub tf: u32,
}

/// Immutable inverted index with document lengths and collection statistics.
#[derive(Debug, Clone)]
pub struct CorpusIndex {
    tokenizer: TokenizerConfig,
    doc_ids: Vec<String>,
    doc_len: Vec<u32>,
    terms: Vec<String>,
    postings: Vec<Vec<Posting>>,
    vocab: HashMap<String, TermId>,
    doc_lookup: HashMap<String, DocId>,
    collection_freq: Vec<u64>,
    total_tokens: u64,
    avg_doc_len: f64,
    fingerprint: String,
}

/// Build an index from a stream of documents.
pub fn build_index<I>(docs: I, cfg: &TokenizerConfig) -> Result<CorpusIndex>
where
    I: IntoIterator<Item = Document>,
{
    let mut docs: Vec<Document> = docs.into_iter().collect();
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut seen = HashSet::with_capacity(docs.len());
    for doc in &docs {
        if doc.doc_id.is_empty() {
            return Err(Error::EmptyDocId);
        }
        if !seen.insert(doc.doc_id.as_str()) {
            return Err(Error::DuplicateDocId(doc.doc_id.clone()));
        }
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

    let mut doc_len = Vec::with_capacity(docs.len());
    let mut by_term: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut counts: HashMap<String, u32> = HashMap::new();
    for (i, doc) in docs.iter().enumerate() {
        counts.clear();
        let tokens = tokenize(&doc.text, cfg);
        doc_len.push(u32::try_from(tokens.len()).expect("document longer than u32::MAX tokens"));
        for tok in tokens {
            *counts.entry(tok).or_insert(0) += 1;
        }
        let doc = DocId(i as u32);
        for (term, tf) in counts.drain() {
            by_term.entry(term).or_default().push(Posting { doc, tf });
        }
    }

    let (terms, postings): (Vec<String>, Vec<Vec<Posting>>) = by_term.into_iter().unzip();
    let doc_ids = docs.into_iter().map(|d| d.doc_id).collect();
    Ok(CorpusIndex::assemble(
        cfg.clone(),
        doc_ids,
        doc_len,
        terms,
        postings,
    ))
}

impl CorpusIndex {
    /// Finalise derived fields. Callers guarantee sorted `doc_ids`, sorted
    /// `terms` and per-term postings sorted by document.
    fn assemble(
        tokenizer: TokenizerConfig,
        doc_ids: Vec<String>,
        doc_len: Vec<u32>,
        terms: Vec<String>,
        postings: Vec<Vec<Posting>>,
    ) -> Self {
        let vocab = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TermId(i as u32)))
            .collect();
        let doc_lookup = doc_ids
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), DocId(i as u32)))
            .collect();
        let collection_freq: Vec<u64> = postings
            .iter()
            .map(|list| list.iter().map(|p| u64::from(p.tf)).sum())
            .collect();
        let total_tokens: u64 = doc_len.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_len = total_tokens as f64 / doc_ids.len() as f64;
        let fingerprint = fingerprint(&tokenizer, &doc_ids, &doc_len, &terms, &postings);
        Self {
            tokenizer,
            doc_ids,
            doc_len,
            terms,
            postings,
            vocab,
            doc_lookup,
            collection_freq,
            total_tokens,
            avg_doc_len,
            fingerprint,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    /// Content hash binding fitted models to this exact index.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.vocab.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id.index()]
    }

    pub fn terms(&self) -> impl ExactSizeIterator<Item = (TermId, &str)> + '_ {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| (TermId(i as u32), t.as_str()))
    }

    pub fn doc_id(&self, doc: DocId) -> &str {
        &self.doc_ids[doc.index()]
    }

    pub fn doc_lookup(&self, doc_id: &str) -> Option<DocId> {
        self.doc_lookup.get(doc_id).copied()
    }

    pub fn docs(&self) -> impl ExactSizeIterator<Item = DocId> {
        (0..self.doc_ids.len() as u32).map(DocId)
    }

    pub fn doc_len(&self, doc: DocId) -> u32 {
        self.doc_len[doc.index()]
    }

    pub fn postings(&self, term: TermId) -> &[Posting] {
        &self.postings[term.index()]
    }

    pub fn df(&self, term: TermId) -> usize {
        self.postings[term.index()].len()
    }

    pub fn collection_freq(&self, term: TermId) -> u64 {
        self.collection_freq[term.index()]
    }

    /// Term frequency of `term` in `doc`; zero when absent.
    pub fn tf(&self, term: TermId, doc: DocId) -> u32 {
        let list = &self.postings[term.index()];
        match list.binary_search_by_key(&doc, |p| p.doc) {
            Ok(i) => list[i].tf,
            Err(_) => 0,
        }
    }

    pub fn tf_histogram(&self, term: TermId) -> TfHistogram {
        TfHistogram::from_postings(self.num_docs() as u64, &self.postings[term.index()])
    }

    /// Histogram lookup by surface form.
    pub fn tf_histogram_of(&self, term: &str) -> Result<TfHistogram> {
        let id = self
            .term_id(term)
            .ok_or_else(|| Error::UnknownTerm(term.to_string()))?;
        Ok(self.tf_histogram(id))
    }
}

fn fingerprint(
    tokenizer: &TokenizerConfig,
    doc_ids: &[String],
    doc_len: &[u32],
    terms: &[String],
    postings: &[Vec<Posting>],
) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(tokenizer).expect("tokenizer config serialises"));
    h.update((doc_ids.len() as u64).to_le_bytes());
    for (id, len) in doc_ids.iter().zip(doc_len) {
        h.update((id.len() as u64).to_le_bytes());
        h.update(id.as_bytes());
        h.update(len.to_le_bytes());
    }
    h.update((terms.len() as u64).to_le_bytes());
    for (term, list) in terms.iter().zip(postings) {
        h.update((term.len() as u64).to_le_bytes());
        h.update(term.as_bytes());
        h.update((list.len() as u64).to_le_bytes());
        for p in list {
            h.update(p.doc.0.to_le_bytes());
            h.update(p.tf.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Collection-wide distribution of one term's frequency: how many documents
/// carry each distinct tf value. The tf = 0 bucket is `N - df`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TfHistogram {
    n_docs: u64,
    zero_count: u64,
    /// `(tf, doc count)` for tf >= 1, ascending by tf.
    buckets: Vec<(u32, u64)>,
}

impl TfHistogram {
    fn from_postings(n_docs: u64, postings: &[Posting]) -> Self {
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for p in postings {
            *counts.entry(p.tf).or_insert(0) += 1;
        }
        Self {
            n_docs,
            zero_count: n_docs - postings.len() as u64,
            buckets: counts.into_iter().collect(),
        }
    }

    /// Build from raw per-document counts (zeros included).
    pub fn from_counts<I: IntoIterator<Item = u32>>(tfs: I) -> Self {
        let mut n_docs = 0;
        let mut zero_count = 0;
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for tf in tfs {
            n_docs += 1;
            if tf == 0 {
                zero_count += 1;
            } else {
                *counts.entry(tf).or_insert(0) += 1;
            }
        }
        Self {
            n_docs,
            zero_count,
            buckets: counts.into_iter().collect(),
        }
    }

    /// Build from `(tf, count)` pairs. Pairs with a zero count are dropped and
    /// repeated tf values are merged.
    pub fn from_buckets<I: IntoIterator<Item = (u32, u64)>>(pairs: I) -> Self {
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for (tf, c) in pairs {
            if c > 0 {
                *counts.entry(tf).or_insert(0) += c;
            }
        }
        let zero_count = counts.remove(&0).unwrap_or(0);
        let n_docs = zero_count + counts.values().sum::<u64>();
        Self {
            n_docs,
            zero_count,
            buckets: counts.into_iter().collect(),
        }
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn zero_count(&self) -> u64 {
        self.zero_count
    }

    pub fn df(&self) -> u64 {
        self.n_docs - self.zero_count
    }

    /// Total occurrences across the collection.
    pub fn collection_freq(&self) -> u64 {
        self.buckets.iter().map(|&(tf, c)| u64::from(tf) * c).sum()
    }

    /// Non-zero buckets, ascending by tf.
    pub fn nonzero(&self) -> &[(u32, u64)] {
        &self.buckets
    }

    /// All buckets with a positive count, the tf = 0 bucket first.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        let zero = (self.zero_count > 0).then_some((0, self.zero_count));
        zero.into_iter().chain(self.buckets.iter().copied())
    }

    pub fn count(&self, tf: u32) -> u64 {
        if tf == 0 {
            return self.zero_count;
        }
        self.buckets
            .binary_search_by_key(&tf, |&(t, _)| t)
            .map(|i| self.buckets[i].1)
            .unwrap_or(0)
    }
}

/// Length-normalised term frequency `tf * (b + (1 - b) * avgDL / DL)`.
///
/// Longer-than-average documents have their counts shrunk; `b = 1` disables
/// the adjustment.
pub fn normalized_tf(tf: u32, doc_len: u32, avg_doc_len: f64, b: f64) -> Result<f64> {
    check_b(b)?;
    if tf > 0 && doc_len == 0 {
        return Err(Error::ZeroLengthWithTf { tf });
    }
    Ok(normalized_tf_unchecked(tf, doc_len, avg_doc_len, b))
}

pub(crate) fn check_b(b: f64) -> Result<()> {
    if (0.0..=1.0).contains(&b) {
        Ok(())
    } else {
        Err(Error::InvalidB(b))
    }
}

/// Written as `1 + (1 - b)(avgDL/DL - 1)` so that DL = avgDL and b = 1 both
/// give a multiplier of exactly 1.
#[inline]
pub(crate) fn normalized_tf_unchecked(tf: u32, doc_len: u32, avg_doc_len: f64, b: f64) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    let ratio = avg_doc_len / f64::from(doc_len);
    f64::from(tf) * (1.0 + (1.0 - b) * (ratio - 1.0))
}
