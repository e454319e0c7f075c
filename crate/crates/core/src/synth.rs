//! Seeded synthetic corpora with planted 2-Poisson terms.
//!
//! Every document independently draws, for each planted term, an eliteness
//! flag from `Bernoulli(p_elite)` and a term frequency from the matching
//! Poisson. Generated text is the term repeated tf times. The generator uses
//! ChaCha8 so output is identical across platforms for a given seed.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::pipeline::Topic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTerm {
    pub name: String,
    pub p_elite: f64,
    pub mu_elite: f64,
    pub mu_nonelite: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_docs: usize,
    pub terms: Vec<PlantedTerm>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// `n_terms` planted terms with parameters drawn uniformly from
    /// well-separated ranges (`mu_elite / mu_nonelite >= 10`).
    pub fn random_vocabulary(n_docs: usize, n_terms: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_7e57);
        let terms = (0..n_terms)
            .map(|i| PlantedTerm {
                name: format!("t{i:05}"),
                p_elite: rng.random_range(0.02..0.3),
                mu_elite: rng.random_range(3.0..8.0),
                mu_nonelite: rng.random_range(0.05..0.3),
            })
            .collect();
        Self {
            n_docs,
            terms,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub docs: Vec<Document>,
    pub terms: Vec<PlantedTerm>,
    /// `elite[term][doc]`.
    pub elite: Vec<Vec<bool>>,
    /// `tf[term][doc]`.
    pub tf: Vec<Vec<u32>>,
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    if spec.n_docs == 0 {
        return Err(Error::InvalidConfig(
            "synthetic corpus needs at least one document".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut elite = Vec::with_capacity(spec.terms.len());
    let mut tf = Vec::with_capacity(spec.terms.len());
    for term in &spec.terms {
        let bad =
            |what: &str| Error::InvalidConfig(format!("planted term `{}`: {what}", term.name));
        if !(term.p_elite > 0.0 && term.p_elite < 1.0) {
            return Err(bad("p_elite outside (0, 1)"));
        }
        let hi = Poisson::new(term.mu_elite).map_err(|_| bad("invalid mu_elite"))?;
        let lo = Poisson::new(term.mu_nonelite).map_err(|_| bad("invalid mu_nonelite"))?;
        let mut flags = Vec::with_capacity(spec.n_docs);
        let mut counts = Vec::with_capacity(spec.n_docs);
        for _ in 0..spec.n_docs {
            let is_elite = rng.random_bool(term.p_elite);
            let draw: f64 = if is_elite {
                hi.sample(&mut rng)
            } else {
                lo.sample(&mut rng)
            };
            flags.push(is_elite);
            counts.push(draw as u32);
        }
        elite.push(flags);
        tf.push(counts);
    }

    let width = spec.n_docs.to_string().len();
    let docs = (0..spec.n_docs)
        .map(|d| {
            let mut text = String::new();
            for (term, counts) in spec.terms.iter().zip(&tf) {
                for _ in 0..counts[d] {
                    text.push_str(&term.name);
                    text.push(' ');
                }
            }
            Document::new(format!("doc{d:0width$}"), text)
        })
        .collect();
    Ok(SyntheticCorpus {
        docs,
        terms: spec.terms.clone(),
        elite,
        tf,
    })
}

impl SyntheticCorpus {
    /// One single-term topic per planted term (up to `limit`); a document is
    /// relevant to a topic when it is elite for the term.
    pub fn topics_and_qrels(&self, limit: usize) -> (Vec<Topic>, String) {
        let mut topics = Vec::new();
        let mut qrels = String::new();
        for (i, term) in self.terms.iter().take(limit).enumerate() {
            let qid = format!("q{i}");
            for (doc, &is_elite) in self.docs.iter().zip(&self.elite[i]) {
                if is_elite {
                    qrels.push_str(&format!("{qid} 0 {} 1\n", doc.doc_id));
                }
            }
            topics.push(Topic {
                qid,
                text: term.name.clone(),
            });
        }
        (topics, qrels)
    }

    /// Write `corpus.jsonl`, `topics.jsonl` and `qrels.txt` into `dir`.
    pub fn write_to(&self, dir: &Path, n_topics: usize) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join("corpus.jsonl"), &self.docs)?;
        let (topics, qrels) = self.topics_and_qrels(n_topics);
        write_jsonl(&dir.join("topics.jsonl"), &topics)?;
        let path = dir.join("qrels.txt");
        fs::write(&path, qrels).map_err(|e| Error::io(path, e))
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_index, TfHistogram, TokenizerConfig};

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            n_docs: 500,
            terms: vec![
                PlantedTerm {
                    name: "alpha".into(),
                    p_elite: 0.2,
                    mu_elite: 4.0,
                    mu_nonelite: 0.1,
                },
                PlantedTerm {
                    name: "beta".into(),
                    p_elite: 0.05,
                    mu_elite: 6.0,
                    mu_nonelite: 0.3,
                },
            ],
            seed: 11,
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = generate(&spec()).unwrap();
        let b = generate(&spec()).unwrap();
        assert_eq!(a.docs, b.docs);
        let mut other = spec();
        other.seed = 12;
        assert_ne!(generate(&other).unwrap().docs, a.docs);
    }

    #[test]
    fn index_histogram_matches_generator_tallies() {
        let corpus = generate(&spec()).unwrap();
        let idx = build_index(corpus.docs.clone(), &TokenizerConfig::default()).unwrap();
        for (i, term) in corpus.terms.iter().enumerate() {
            let expected = TfHistogram::from_counts(corpus.tf[i].iter().copied());
            assert_eq!(idx.tf_histogram_of(&term.name).unwrap(), expected);
        }
    }

    #[test]
    fn qrels_follow_eliteness() {
        let corpus = generate(&spec()).unwrap();
        let (topics, qrels) = corpus.topics_and_qrels(1);
        assert_eq!(topics.len(), 1);
        let n_elite = corpus.elite[0].iter().filter(|&&e| e).count();
        assert_eq!(qrels.lines().count(), n_elite);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut s = spec();
        s.terms[0].p_elite = 1.0;
        assert!(generate(&s).is_err());
        s.n_docs = 0;
        assert!(generate(&s).is_err());
    }
}
