use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use super::{em_fit, EmConfig, TwoPoissonParams};
use crate::corpus::{CorpusIndex, TermId};
use crate::error::{Error, Result};

const MODEL_MAGIC: &str = "#eliteness-model";
const MODEL_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedTerm {
    pub params: TwoPoissonParams,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TermFit {
    Fitted(FittedTerm),
    /// Fitting failed; scorers skip the term.
    Failed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// Fitted eliteness parameters for every vocabulary term of one index.
#[derive(Debug, Clone, PartialEq)]
pub struct ElitenessModel {
    n_docs: usize,
    fingerprint: String,
    config: EmConfig,
    terms: Vec<String>,
    fits: Vec<TermFit>,
}

/// Summary of a vocabulary-wide fit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitReport {
    pub terms: usize,
    pub converged: usize,
    pub not_converged: usize,
    /// Terms whose `p_elite` hit its clamp or whose component collapsed.
    pub clamped: usize,
    pub fallback_init: usize,
    pub swapped: usize,
    pub failed: Vec<(String, String)>,
}

impl fmt::Display for FitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "terms={} converged={} not_converged={} clamped={} fallback_init={} swapped={} failed={}",
            self.terms,
            self.converged,
            self.not_converged,
            self.clamped,
            self.fallback_init,
            self.swapped,
            self.failed.len()
        )
    }
}

/// Fit every vocabulary term independently.
///
/// A term whose fit errors is recorded as [`TermFit::Failed`] and listed in the
/// report; the rest of the vocabulary is unaffected. Results do not depend on
/// `exec`.
pub fn fit_model(
    index: &CorpusIndex,
    cfg: &EmConfig,
    exec: Execution,
) -> Result<(ElitenessModel, FitReport)> {
    cfg.validate()?;
    let fit_one = |id: usize| {
        let id = TermId(id as u32);
        em_fit(index.term(id), &index.tf_histogram(id), cfg)
    };
    let results: Vec<_> = match exec {
        Execution::Parallel => (0..index.vocab_size())
            .into_par_iter()
            .map(fit_one)
            .collect(),
        Execution::Sequential => (0..index.vocab_size()).map(fit_one).collect(),
    };

    let mut report = FitReport {
        terms: results.len(),
        ..FitReport::default()
    };
    let mut fits = Vec::with_capacity(results.len());
    for ((_, term), res) in index.terms().zip(results) {
        match res {
            Ok(fit) => {
                if fit.converged {
                    report.converged += 1;
                } else {
                    report.not_converged += 1;
                }
                report.clamped += usize::from(fit.clamped);
                report.fallback_init += usize::from(fit.fallback_init);
                report.swapped += usize::from(fit.swapped);
                fits.push(TermFit::Fitted(FittedTerm {
                    params: fit.params,
                    iterations: fit.iterations,
                    converged: fit.converged,
                }));
            }
            Err(e) => {
                log::warn!("term `{term}` unusable: {e}");
                report.failed.push((term.to_string(), e.to_string()));
                fits.push(TermFit::Failed(e.to_string()));
            }
        }
    }

    let model = ElitenessModel {
        n_docs: index.num_docs(),
        fingerprint: index.fingerprint().to_string(),
        config: cfg.clone(),
        terms: index.terms().map(|(_, t)| t.to_string()).collect(),
        fits,
    };
    Ok((model, report))
}

impl ElitenessModel {
    /// Model with caller-supplied parameters, one per vocabulary term in
    /// term-id order.
    pub fn from_params(index: &CorpusIndex, params: Vec<TwoPoissonParams>) -> Result<Self> {
        if params.len() != index.vocab_size() {
            return Err(Error::ModelMismatch(format!(
                "{} parameter sets for a vocabulary of {}",
                params.len(),
                index.vocab_size()
            )));
        }
        for p in &params {
            p.validate()?;
        }
        Ok(Self {
            n_docs: index.num_docs(),
            fingerprint: index.fingerprint().to_string(),
            config: EmConfig::default(),
            terms: index.terms().map(|(_, t)| t.to_string()).collect(),
            fits: params
                .into_iter()
                .map(|params| {
                    TermFit::Fitted(FittedTerm {
                        params,
                        iterations: 0,
                        converged: true,
                    })
                })
                .collect(),
        })
    }

    /// Occurrence-based eliteness: a document is elite for a term exactly when
    /// the term occurs in it. Encoded as `mu_nonelite = 0` (so any positive tf
    /// has posterior 1) and `p_elite = df / N`.
    pub fn occurrence(index: &CorpusIndex) -> Self {
        let n = index.num_docs() as f64;
        let params = index
            .terms()
            .map(|(id, _)| {
                let df = index.df(id) as f64;
                TwoPoissonParams::new(index.collection_freq(id) as f64 / df, 0.0, df / n)
            })
            .collect();
        Self::from_params(index, params).expect("occurrence parameters are valid")
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn config(&self) -> &EmConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    pub fn fit(&self, term: TermId) -> &TermFit {
        &self.fits[term.index()]
    }

    /// Usable parameters for `term`, or `None` if its fit failed.
    #[inline]
    pub fn params(&self, term: TermId) -> Option<&TwoPoissonParams> {
        match self.fits.get(term.index())? {
            TermFit::Fitted(f) => Some(&f.params),
            TermFit::Failed(_) => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TermFit)> {
        self.terms.iter().map(String::as_str).zip(&self.fits)
    }

    pub fn check_bound_to(&self, index: &CorpusIndex) -> Result<()> {
        if self.n_docs != index.num_docs() {
            return Err(Error::ModelMismatch(format!(
                "model fitted on {} documents, index has {}",
                self.n_docs,
                index.num_docs()
            )));
        }
        if self.fingerprint != index.fingerprint() {
            return Err(Error::ModelMismatch(format!(
                "model fingerprint {} differs from index fingerprint {}",
                self.fingerprint,
                index.fingerprint()
            )));
        }
        if self.fits.len() != index.vocab_size() {
            return Err(Error::ModelMismatch("vocabulary size differs".into()));
        }
        Ok(())
    }
}

/// Write the model as text: a header line with the binding and EM settings,
/// then `term \t mu_elite \t mu_nonelite \t p_elite \t converged \t iterations`
/// per term. Parameters are printed with 17 significant digits.
pub fn save_model(model: &ElitenessModel, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_model(model, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_model<W: Write>(model: &ElitenessModel, w: &mut W) -> std::io::Result<()> {
    let c = &model.config;
    writeln!(
        w,
        "{MODEL_MAGIC}\t{MODEL_VERSION}\tn_docs={}\tfingerprint={}\tmax_iters={}\ttol={:e}\tn_boost={}\tmu0_init={:e}\tmu_floor={:e}\tp_clamp={:e}",
        model.n_docs, model.fingerprint, c.max_iters, c.tol, c.n_boost, c.mu0_init, c.mu_floor, c.p_clamp
    )?;
    for (term, fit) in model.terms.iter().zip(&model.fits) {
        match fit {
            TermFit::Fitted(f) => writeln!(
                w,
                "{term}\t{:.16e}\t{:.16e}\t{:.16e}\t{}\t{}",
                f.params.mu_elite,
                f.params.mu_nonelite,
                f.params.p_elite,
                f.converged,
                f.iterations
            )?,
            TermFit::Failed(_) => writeln!(w, "{term}\tnan\tnan\tnan\tfailed\t0")?,
        }
    }
    Ok(())
}

/// Read a model and check that it belongs to `index`.
pub fn load_model(path: &Path, index: &CorpusIndex) -> Result<ElitenessModel> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::parse(&origin, 1, "empty model file")),
    };
    let (n_docs, fingerprint, config) = parse_header(&header, &origin)?;

    let mut terms = Vec::new();
    let mut fits = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| Error::parse(&origin, i + 1, m);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(err("expected 6 tab-separated columns"));
        }
        let fit = if cols[4] == "failed" {
            TermFit::Failed("failed at fit time".into())
        } else {
            let num = |s: &str| s.parse::<f64>().map_err(|_| err("malformed number"));
            let params = TwoPoissonParams::new(num(cols[1])?, num(cols[2])?, num(cols[3])?);
            params.validate().map_err(|_| err("invalid parameters"))?;
            TermFit::Fitted(FittedTerm {
                params,
                converged: cols[4]
                    .parse()
                    .map_err(|_| err("malformed converged flag"))?,
                iterations: cols[5]
                    .parse()
                    .map_err(|_| err("malformed iteration count"))?,
            })
        };
        terms.push(cols[0].to_string());
        fits.push(fit);
    }

    let model = ElitenessModel {
        n_docs,
        fingerprint,
        config,
        terms,
        fits,
    };
    model.check_bound_to(index)?;
    if !model
        .terms
        .iter()
        .zip(index.terms())
        .all(|(a, (_, b))| a == b)
    {
        return Err(Error::ModelMismatch(
            "term list differs from index vocabulary".into(),
        ));
    }
    Ok(model)
}

fn parse_header(line: &str, origin: &str) -> Result<(usize, String, EmConfig)> {
    let err = |m: String| Error::parse(origin, 1, m);
    let mut cols = line.split('\t');
    if cols.next() != Some(MODEL_MAGIC) || cols.next() != Some(MODEL_VERSION) {
        return Err(err("not an eliteness model file".into()));
    }
    let mut n_docs = None;
    let mut fingerprint = None;
    let mut cfg = EmConfig::default();
    for kv in cols {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| err(format!("malformed header field `{kv}`")))?;
        let bad = || err(format!("bad value for `{k}`"));
        match k {
            "n_docs" => n_docs = Some(v.parse().map_err(|_| bad())?),
            "fingerprint" => fingerprint = Some(v.to_string()),
            "max_iters" => cfg.max_iters = v.parse().map_err(|_| bad())?,
            "tol" => cfg.tol = v.parse().map_err(|_| bad())?,
            "n_boost" => cfg.n_boost = v.parse().map_err(|_| bad())?,
            "mu0_init" => cfg.mu0_init = v.parse().map_err(|_| bad())?,
            "mu_floor" => cfg.mu_floor = v.parse().map_err(|_| bad())?,
            "p_clamp" => cfg.p_clamp = v.parse().map_err(|_| bad())?,
            _ => return Err(err(format!("unknown header field `{k}`"))),
        }
    }
    match (n_docs, fingerprint) {
        (Some(n), Some(f)) => Ok((n, f, cfg)),
        _ => Err(err("header lacks n_docs or fingerprint".into())),
    }
}
