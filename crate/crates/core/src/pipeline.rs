//! Batch operations over whole topic sets: search, run files and sweeps.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricReport, Qrels, Run};
use crate::mixture::{fit_model, EmConfig, Execution};
use crate::ranking::{QueryRepr, RankedList, Ranker, Scorer};

/// Best length-normalisation setting reported for the 2-Poisson ranker.
pub const DEFAULT_B: f64 = 0.64;
pub const DEFAULT_N_BOOST: u32 = 3;
pub const DEFAULT_TOP_K: usize = 1000;
pub const DEFAULT_METRIC_K: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub qid: String,
    pub text: String,
}

/// JSON-lines topics, one `{"qid": ..., "text": ...}` per line.
pub fn read_topics(path: &Path) -> Result<Vec<Topic>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut topics = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let topic: Topic = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path.display(), i + 1, e.to_string()))?;
        topics.push(topic);
    }
    Ok(topics)
}

/// Rank every topic. Output order follows `topics` regardless of `exec`.
pub fn search(
    ranker: &Ranker<'_>,
    topics: &[Topic],
    scorer: Scorer,
    top_k: usize,
    exec: Execution,
) -> Result<Vec<RankedList>> {
    let one = |t: &Topic| {
        let q = QueryRepr::parse(t.qid.clone(), &t.text, ranker.index());
        if !q.unknown_terms.is_empty() {
            log::info!(
                "query {}: {} unknown term(s) ignored",
                q.query_id,
                q.unknown_terms.len()
            );
        }
        ranker.rank(&q, scorer, top_k)
    };
    match exec {
        Execution::Parallel => topics.par_iter().map(one).collect(),
        Execution::Sequential => topics.iter().map(one).collect(),
    }
}

pub fn write_run(path: &Path, lists: &[RankedList], tag: &str) -> Result<()> {
    let run = Run::from_ranked_lists(lists, tag);
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    run.write(&mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b: f64,
    pub n: u32,
    pub map: f64,
    pub mrr: f64,
    pub recall_at_k: f64,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub b_grid: Vec<f64>,
    pub n_grid: Vec<u32>,
    pub em: EmConfig,
    pub scorer: Scorer,
    pub top_k: usize,
    pub metric_k: usize,
    pub exec: Execution,
}

/// Grid evaluation over `b` and the elite-mean boost `n`.
///
/// One model is fitted per `n`; each `(b, n)` cell is one search plus one
/// evaluation. Rows are ordered by `n`, then `b`, as given.
pub fn sweep(
    index: &CorpusIndex,
    topics: &[Topic],
    qrels: &Qrels,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if cfg.b_grid.is_empty() || cfg.n_grid.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(cfg.b_grid.len() * cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let em = EmConfig {
            n_boost: n,
            ..cfg.em.clone()
        };
        let (model, report) = fit_model(index, &em, cfg.exec)?;
        log::info!("sweep n={n}: {report}");
        for &b in &cfg.b_grid {
            let ranker = Ranker::new(index).with_model(&model)?.with_b(b)?;
            let lists = search(&ranker, topics, cfg.scorer, cfg.top_k, cfg.exec)?;
            let report = evaluate_lists(&lists, qrels, cfg.metric_k)?;
            rows.push(SweepRow {
                b,
                n,
                map: report.map,
                mrr: report.mrr,
                recall_at_k: report.mean_recall,
            });
        }
    }
    Ok(rows)
}

pub fn evaluate_lists(lists: &[RankedList], qrels: &Qrels, k: usize) -> Result<MetricReport> {
    evaluate(&Run::from_ranked_lists(lists, "sweep"), qrels, k)
}

pub fn write_sweep_csv<W: Write>(w: &mut W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "b,n,map,mrr,recall_at_k")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.b, r.n, r.map, r.mrr, r.recall_at_k)?;
    }
    Ok(())
}
