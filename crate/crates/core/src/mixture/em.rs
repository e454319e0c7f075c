use super::{e_step, EmConfig, TwoPoissonParams};
use crate::corpus::TfHistogram;
use crate::error::{Error, Result};

/// Starting point for EM, plus whether the elite-mean fallback was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitParams {
    pub params: TwoPoissonParams,
    /// No document has tf > 1, so the elite mean was seeded from `cf / df`.
    pub fallback: bool,
}

/// Initialise from collection statistics.
///
/// `p_elite` is the fraction of documents containing the term, `mu_elite` is
/// `n_boost` times the mean tf over documents where the term occurs more than
/// once, and `mu_nonelite` starts at `mu0_init`.
pub fn init_params(hist: &TfHistogram, cfg: &EmConfig) -> InitParams {
    let n = hist.n_docs() as f64;
    let df = hist.df();
    let p_elite = cfg.clamp_p(df as f64 / n);

    let (mass, docs) = hist
        .nonzero()
        .iter()
        .filter(|&&(tf, _)| tf > 1)
        .fold((0u64, 0u64), |(m, d), &(tf, c)| {
            (m + u64::from(tf) * c, d + c)
        });
    let boost = f64::from(cfg.n_boost);
    let (mean, fallback) = if docs > 0 {
        (mass as f64 / docs as f64, false)
    } else if df > 0 {
        (hist.collection_freq() as f64 / df as f64, true)
    } else {
        (cfg.mu0_init, true)
    };

    InitParams {
        params: TwoPoissonParams::new((boost * mean).max(cfg.mu_floor), cfg.mu0_init, p_elite),
        fallback,
    }
}

/// Maximisation step output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MStep {
    pub params: TwoPoissonParams,
    /// One component received zero responsibility mass; its mean was set to
    /// the floor and `p_elite` clamped.
    pub collapsed: bool,
    /// The unclamped `p_elite` fell outside `[p_clamp, 1 - p_clamp]`.
    pub clamped: bool,
}

/// Re-estimate parameters from per-bucket responsibilities.
///
/// `posteriors[i]` is `P(E = 1 | tf)` for the i-th bucket of `hist.iter()`.
pub fn m_step(hist: &TfHistogram, posteriors: &[f64], cfg: &EmConfig) -> MStep {
    let mut w1 = 0.0;
    let mut w0 = 0.0;
    let mut s1 = 0.0;
    let mut s0 = 0.0;
    for ((tf, count), &g) in hist.iter().zip(posteriors) {
        let c = count as f64;
        let t = f64::from(tf);
        w1 += c * g;
        w0 += c * (1.0 - g);
        s1 += c * g * t;
        s0 += c * (1.0 - g) * t;
    }

    let collapsed = w1 <= 0.0 || w0 <= 0.0;
    let mu_elite = if w1 > 0.0 { s1 / w1 } else { 0.0 };
    let mu_nonelite = if w0 > 0.0 { s0 / w0 } else { 0.0 };
    let raw_p = w1 / hist.n_docs() as f64;
    let p_elite = cfg.clamp_p(raw_p);
    MStep {
        params: TwoPoissonParams::new(
            mu_elite.max(cfg.mu_floor),
            mu_nonelite.max(cfg.mu_floor),
            p_elite,
        ),
        collapsed,
        clamped: p_elite != raw_p,
    }
}

/// Total log-likelihood of the histogram, factorial term omitted.
pub fn log_likelihood(params: &TwoPoissonParams, hist: &TfHistogram) -> f64 {
    hist.iter()
        .map(|(tf, count)| count as f64 * params.ln_mixture(f64::from(tf)))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: TwoPoissonParams,
    /// Completed E/M rounds.
    pub iterations: usize,
    /// Log-likelihood at the starting point followed by one value per round.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    /// Components were reordered after fitting.
    pub swapped: bool,
    /// The elite-mean initialisation fell back to `cf / df`.
    pub fallback_init: bool,
    /// `p_elite` hit its clamp or a component collapsed at some round.
    /// Independent of `converged`, which only reports the stopping rule.
    pub clamped: bool,
}

/// Fit one term's mixture from the standard initialisation.
pub fn em_fit(term: &str, hist: &TfHistogram, cfg: &EmConfig) -> Result<FitResult> {
    let init = init_params(hist, cfg);
    let mut fit = em_fit_from(term, hist, init.params, cfg)?;
    fit.fallback_init = init.fallback;
    Ok(fit)
}

/// Fit one term's mixture from an explicit starting point.
///
/// Iterates until the mean per-document log-likelihood moves by less than
/// `cfg.tol` or `cfg.max_iters` rounds have run, then canonicalises so that
/// `mu_elite >= mu_nonelite`.
pub fn em_fit_from(
    term: &str,
    hist: &TfHistogram,
    init: TwoPoissonParams,
    cfg: &EmConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let n = hist.n_docs() as f64;
    let non_finite = |iteration: usize, p: &TwoPoissonParams| Error::NonFiniteLikelihood {
        term: term.to_string(),
        iteration,
        mu_elite: p.mu_elite,
        mu_nonelite: p.mu_nonelite,
        p_elite: p.p_elite,
    };

    let mut params = init;
    let mut prev = log_likelihood(&params, hist);
    if !prev.is_finite() {
        return Err(non_finite(0, &params));
    }
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    trace.push(prev);

    let mut converged = false;
    let mut clamped = false;
    let mut iterations = 0;
    let mut posteriors = Vec::with_capacity(hist.nonzero().len() + 1);
    for iteration in 1..=cfg.max_iters {
        posteriors.clear();
        for (tf, _) in hist.iter() {
            let g = e_step(&params, f64::from(tf)).map_err(|_| Error::DegeneratePosterior {
                term: term.to_string(),
                tf: f64::from(tf),
            })?;
            posteriors.push(g);
        }
        let step = m_step(hist, &posteriors, cfg);
        params = step.params;
        clamped |= step.clamped || step.collapsed;

        let ll = log_likelihood(&params, hist);
        if !ll.is_finite() {
            return Err(non_finite(iteration, &params));
        }
        trace.push(ll);
        iterations = iteration;
        let delta = (ll - prev) / n;
        prev = ll;
        if delta.abs() < cfg.tol {
            converged = true;
            break;
        }
    }

    let swapped = params.canonicalize();
    Ok(FitResult {
        params,
        iterations,
        loglik_trace: trace,
        converged,
        swapped,
        fallback_init: false,
        clamped,
    })
}
