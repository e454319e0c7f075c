//! TREC-style evaluation: qrels and run files, MAP, MRR and Recall@k.
//!
//! Relevance is binary (grade >= 1). Queries without any relevant document
//! are excluded from the means and listed in the report, as trec_eval does.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::RankedList;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<String, HashMap<String, u32>>,
}

impl Qrels {
    pub fn parse_str(raw: &str, origin: &str) -> Result<Self> {
        let mut judgments: BTreeMap<String, HashMap<String, u32>> = BTreeMap::new();
        let mut first_line: HashMap<(String, String), usize> = HashMap::new();
        for (i, line) in raw.lines().enumerate() {
            let lineno = i + 1;
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.is_empty() {
                continue;
            }
            if cols.len() != 4 {
                return Err(Error::parse(
                    origin,
                    lineno,
                    "expected `qid iter docid rel`",
                ));
            }
            let grade: u32 = cols[3].parse().map_err(|_| {
                Error::parse(origin, lineno, format!("bad relevance grade `{}`", cols[3]))
            })?;
            let key = (cols[0].to_string(), cols[2].to_string());
            if let Some(prev) = first_line.get(&key) {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!(
                        "duplicate judgment for ({}, {}) first seen on line {prev}",
                        key.0, key.1
                    ),
                ));
            }
            first_line.insert(key, lineno);
            judgments
                .entry(cols[0].to_string())
                .or_default()
                .insert(cols[2].to_string(), grade);
        }
        if judgments.is_empty() {
            return Err(Error::parse(origin, 0, "qrels contain no judgments"));
        }
        Ok(Self { judgments })
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    pub fn is_relevant(&self, query_id: &str, doc_id: &str) -> bool {
        self.grade(query_id, doc_id).is_some_and(|g| g >= 1)
    }

    pub fn num_relevant(&self, query_id: &str) -> usize {
        self.judgments
            .get(query_id)
            .map_or(0, |docs| docs.values().filter(|&&g| g >= 1).count())
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.judgments.contains_key(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }
}

pub fn parse_qrels(path: &Path) -> Result<Qrels> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Qrels::parse_str(&raw, &path.display().to_string())
}

/// Average precision: mean over relevant documents of the precision at their
/// rank, unretrieved ones counting zero. `None` if the query has no relevant
/// documents.
pub fn average_precision<S: AsRef<str>>(
    ranking: &[S],
    qrels: &Qrels,
    query_id: &str,
) -> Option<f64> {
    let total = qrels.num_relevant(query_id);
    if total == 0 {
        return None;
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (i, doc) in ranking.iter().enumerate() {
        if qrels.is_relevant(query_id, doc.as_ref()) {
            found += 1;
            sum += found as f64 / (i + 1) as f64;
        }
    }
    Some(sum / total as f64)
}

pub fn reciprocal_rank<S: AsRef<str>>(ranking: &[S], qrels: &Qrels, query_id: &str) -> Option<f64> {
    if qrels.num_relevant(query_id) == 0 {
        return None;
    }
    Some(
        ranking
            .iter()
            .position(|d| qrels.is_relevant(query_id, d.as_ref()))
            .map_or(0.0, |i| 1.0 / (i + 1) as f64),
    )
}

pub fn recall_at_k<S: AsRef<str>>(
    ranking: &[S],
    qrels: &Qrels,
    query_id: &str,
    k: usize,
) -> Option<f64> {
    let total = qrels.num_relevant(query_id);
    if total == 0 {
        return None;
    }
    let hits = ranking
        .iter()
        .take(k)
        .filter(|d| qrels.is_relevant(query_id, d.as_ref()))
        .count();
    Some(hits as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
}

/// A run: per query, entries in rank order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    pub tag: String,
    pub queries: BTreeMap<String, Vec<RunEntry>>,
}

impl Run {
    pub fn from_ranked_lists<'a, I>(lists: I, tag: &str) -> Self
    where
        I: IntoIterator<Item = &'a RankedList>,
    {
        let queries = lists
            .into_iter()
            .map(|list| {
                let entries = list
                    .entries
                    .iter()
                    .enumerate()
                    .map(|(i, e)| RunEntry {
                        doc_id: e.doc_id.clone(),
                        rank: i + 1,
                        score: e.score,
                    })
                    .collect();
                (list.query_id.clone(), entries)
            })
            .collect();
        Self {
            tag: tag.to_string(),
            queries,
        }
    }

    /// Parse `qid Q0 docid rank score tag` lines. Entries are ordered by the
    /// rank column.
    pub fn parse_str(raw: &str, origin: &str) -> Result<Self> {
        let mut queries: BTreeMap<String, Vec<(RunEntry, usize)>> = BTreeMap::new();
        let mut tag = String::new();
        for (i, line) in raw.lines().enumerate() {
            let lineno = i + 1;
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.is_empty() {
                continue;
            }
            if cols.len() != 6 {
                return Err(Error::parse(
                    origin,
                    lineno,
                    "expected `qid Q0 docid rank score tag`",
                ));
            }
            let rank: usize =
                cols[3].parse().ok().filter(|&r| r >= 1).ok_or_else(|| {
                    Error::parse(origin, lineno, format!("bad rank `{}`", cols[3]))
                })?;
            let score: f64 = cols[4]
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite())
                .ok_or_else(|| Error::parse(origin, lineno, format!("bad score `{}`", cols[4])))?;
            if tag.is_empty() {
                tag = cols[5].to_string();
            }
            queries.entry(cols[0].to_string()).or_default().push((
                RunEntry {
                    doc_id: cols[2].to_string(),
                    rank,
                    score,
                },
                lineno,
            ));
        }

        let mut out = BTreeMap::new();
        for (qid, mut entries) in queries {
            entries.sort_by_key(|(e, _)| e.rank);
            let mut docs = HashSet::new();
            for w in entries.windows(2) {
                if w[0].0.rank == w[1].0.rank {
                    return Err(Error::parse(
                        origin,
                        w[1].1,
                        format!("duplicate rank {} for query {qid}", w[1].0.rank),
                    ));
                }
            }
            for (e, lineno) in &entries {
                if !docs.insert(e.doc_id.as_str()) {
                    return Err(Error::parse(
                        origin,
                        *lineno,
                        format!("document {} repeated for query {qid}", e.doc_id),
                    ));
                }
            }
            out.insert(qid, entries.into_iter().map(|(e, _)| e).collect());
        }
        Ok(Self { tag, queries: out })
    }

    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (qid, entries) in &self.queries {
            for e in entries {
                writeln!(
                    w,
                    "{qid} Q0 {} {} {:.6} {}",
                    e.doc_id, e.rank, e.score, self.tag
                )?;
            }
        }
        Ok(())
    }

    pub fn doc_ids(&self, query_id: &str) -> Vec<&str> {
        self.queries
            .get(query_id)
            .map(|es| es.iter().map(|e| e.doc_id.as_str()).collect())
            .unwrap_or_default()
    }
}

pub fn parse_run(path: &Path) -> Result<Run> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Run::parse_str(&raw, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: String,
    pub num_relevant: usize,
    pub retrieved: usize,
    pub ap: f64,
    pub rr: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub k: usize,
    pub per_query: Vec<QueryMetrics>,
    pub map: f64,
    pub mrr: f64,
    pub mean_recall: f64,
    /// Queries judged but without any relevant document.
    pub no_relevant: Vec<String>,
    /// Queries in the run that the qrels do not cover.
    pub unjudged: Vec<String>,
}

/// Evaluate every run query that has at least one relevant judgment.
pub fn evaluate(run: &Run, qrels: &Qrels, k: usize) -> Result<MetricReport> {
    if k == 0 {
        return Err(Error::InvalidConfig(
            "metric cutoff k must be at least 1".into(),
        ));
    }
    let mut per_query = Vec::new();
    let mut no_relevant = Vec::new();
    let mut unjudged = Vec::new();
    for qid in run.queries.keys() {
        if !qrels.contains_query(qid) {
            log::warn!("query {qid} is in the run but not in the qrels; ignored");
            unjudged.push(qid.clone());
            continue;
        }
        let ranking = run.doc_ids(qid);
        let (Some(ap), Some(rr), Some(recall)) = (
            average_precision(&ranking, qrels, qid),
            reciprocal_rank(&ranking, qrels, qid),
            recall_at_k(&ranking, qrels, qid, k),
        ) else {
            no_relevant.push(qid.clone());
            continue;
        };
        per_query.push(QueryMetrics {
            query_id: qid.clone(),
            num_relevant: qrels.num_relevant(qid),
            retrieved: ranking.len(),
            ap,
            rr,
            recall,
        });
    }
    if per_query.is_empty() {
        return Err(Error::NothingToEvaluate(
            "no run query has a relevant judgment in the qrels".into(),
        ));
    }
    let n = per_query.len() as f64;
    let mean = |f: fn(&QueryMetrics) -> f64| per_query.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        k,
        map: mean(|m| m.ap),
        mrr: mean(|m| m.rr),
        mean_recall: mean(|m| m.recall),
        per_query,
        no_relevant,
        unjudged,
    })
}

pub fn evaluate_run(run_path: &Path, qrels_path: &Path, k: usize) -> Result<MetricReport> {
    evaluate(&parse_run(run_path)?, &parse_qrels(qrels_path)?, k)
}

impl MetricReport {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let mut raw = serde_json::to_vec_pretty(self).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        raw.push(b'\n');
        fs::write(path, raw).map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let recall_col = format!("recall@{}", self.k);
        writeln!(
            f,
            "{:<16} {:>6} {:>8} {:>8} {:>12}",
            "query", "rel", "ap", "rr", recall_col
        )?;
        for m in &self.per_query {
            writeln!(
                f,
                "{:<16} {:>6} {:>8.4} {:>8.4} {:>12.4}",
                m.query_id, m.num_relevant, m.ap, m.rr, m.recall
            )?;
        }
        writeln!(
            f,
            "{:<16} {:>6} {:>8.4} {:>8.4} {:>12.4}",
            "all",
            self.per_query.len(),
            self.map,
            self.mrr,
            self.mean_recall
        )?;
        if !self.no_relevant.is_empty() {
            writeln!(
                f,
                "excluded (no relevant documents): {}",
                self.no_relevant.join(" ")
            )?;
        }
        if !self.unjudged.is_empty() {
            writeln!(f, "ignored (not in qrels): {}", self.unjudged.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qrels(raw: &str) -> Qrels {
        Qrels::parse_str(raw, "qrels").unwrap()
    }

    #[test]
    fn qrels_parsing() {
        let q = qrels("1 0 d1 1\n1 0 d2 0\n1 0 d3 2\n");
        assert!(q.is_relevant("1", "d1"));
        assert!(!q.is_relevant("1", "d2"));
        assert!(q.is_relevant("1", "d3"));
        assert_eq!(q.num_relevant("1"), 2);
        let q = qrels("1 0 d1 1\n1 0 d2 0");
        assert_eq!(q.num_relevant("1"), 1);
    }

    #[test]
    fn qrels_errors_name_lines() {
        let err = Qrels::parse_str("1 0 d1 1\n1 0 d1 0\n", "q.txt").unwrap_err();
        assert!(err.to_string().starts_with("q.txt:2:"), "{err}");
        let err = Qrels::parse_str("1 0 d1\n", "q.txt").unwrap_err();
        assert!(err.to_string().starts_with("q.txt:1:"));
        assert!(Qrels::parse_str("\n\n", "q.txt").is_err());
        assert!(Qrels::parse_str("1 0 d1 -1\n", "q.txt").is_err());
    }

    #[test]
    fn average_precision_examples() {
        let q = qrels("1 0 a 1\n1 0 b 1\n");
        assert_eq!(average_precision(&["a", "b", "c"], &q, "1"), Some(1.0));
        let ap = average_precision(&["x", "a", "y", "z", "b"], &q, "1").unwrap();
        assert!((ap - 0.45).abs() < 1e-15);
        assert_eq!(average_precision(&["x", "y"], &q, "1"), Some(0.0));
        assert_eq!(average_precision(&["a"], &q, "2"), None);
    }

    #[test]
    fn rr_and_recall_examples() {
        let q = qrels("1 0 a 1\n1 0 b 1\n1 0 c 1\n1 0 d 1\n");
        assert_eq!(reciprocal_rank(&["x", "y", "c"], &q, "1"), Some(1.0 / 3.0));
        assert_eq!(reciprocal_rank(&["x"], &q, "1"), Some(0.0));
        assert_eq!(recall_at_k(&["a", "b", "c", "d"], &q, "1", 1000), Some(1.0));
        assert_eq!(recall_at_k(&["x", "a", "b"], &q, "1", 2), Some(0.25));
    }

    #[test]
    fn run_round_trip_and_validation() {
        let raw = "1 Q0 b 2 0.500000 t\n1 Q0 a 1 0.900000 t\n2 Q0 c 1 1.000000 t\n";
        let run = Run::parse_str(raw, "run").unwrap();
        assert_eq!(run.doc_ids("1"), ["a", "b"]);
        let mut out = Vec::new();
        run.write(&mut out).unwrap();
        assert_eq!(
            Run::parse_str(std::str::from_utf8(&out).unwrap(), "run").unwrap(),
            run
        );

        let err = Run::parse_str("1 Q0 a 1 0.5 t\n1 Q0 b 1 0.4 t\n", "r").unwrap_err();
        assert!(err.to_string().starts_with("r:"), "{err}");
        let err = Run::parse_str("1 Q0 a 1 0.5 t\n1 Q0 a 2 0.4 t\n", "r").unwrap_err();
        assert!(err.to_string().contains("repeated"));
        assert!(Run::parse_str("1 Q0 a x 0.5 t\n", "r").is_err());
        assert!(Run::parse_str("1 Q0 a 1 0.5\n", "r").is_err());
    }

    #[test]
    fn evaluate_perfect_and_partial_runs() {
        let q = qrels("1 0 a 1\n1 0 b 0\n2 0 c 1\n3 0 z 0\n");
        let perfect = Run::parse_str("1 Q0 a 1 2 t\n1 Q0 b 2 1 t\n2 Q0 c 1 1 t\n", "r").unwrap();
        let rep = evaluate(&perfect, &q, 1000).unwrap();
        assert_eq!((rep.map, rep.mrr, rep.mean_recall), (1.0, 1.0, 1.0));

        let mixed = Run::parse_str(
            "1 Q0 b 1 2 t\n1 Q0 a 2 1 t\n3 Q0 z 1 1 t\n9 Q0 a 1 1 t\n",
            "r",
        )
        .unwrap();
        let rep = evaluate(&mixed, &q, 1000).unwrap();
        assert_eq!(rep.per_query.len(), 1);
        assert_eq!(rep.map, 0.5);
        assert_eq!(rep.no_relevant, ["3"]);
        assert_eq!(rep.unjudged, ["9"]);
    }

    #[test]
    fn disjoint_queries_are_an_error() {
        let q = qrels("1 0 a 1\n");
        let run = Run::parse_str("7 Q0 a 1 1 t\n", "r").unwrap();
        assert!(matches!(
            evaluate(&run, &q, 10),
            Err(Error::NothingToEvaluate(_))
        ));
    }
}
