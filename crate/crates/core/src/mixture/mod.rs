//! Per-term 2-Poisson eliteness mixture.
//!
//! A term's frequency in a document is drawn from `Pois(mu_elite)` when the
//! document is elite for the term and from `Pois(mu_nonelite)` otherwise, with
//! `P(elite) = p_elite`. Parameters are fitted by EM on the term's
//! collection-wide tf histogram, including the tf = 0 bucket.
//!
//! All densities are handled as log Poisson kernels `t ln(mu) - mu`. The `t!`
//! factor is dropped everywhere: it cancels in the posterior and is a
//! parameter-free constant in the log-likelihood, so traces are comparable only
//! within one run configuration.

mod em;
mod model;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{ln_poisson_kernel, log_add_exp};

pub use em::{
    em_fit, em_fit_from, init_params, log_likelihood, m_step, FitResult, InitParams, MStep,
};
pub use model::{
    fit_model, load_model, save_model, ElitenessModel, Execution, FitReport, FittedTerm, TermFit,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPoissonParams {
    /// Mean tf in elite documents.
    pub mu_elite: f64,
    /// Mean tf in non-elite documents.
    pub mu_nonelite: f64,
    /// Prior probability that a document is elite for the term.
    pub p_elite: f64,
}

impl TwoPoissonParams {
    pub fn new(mu_elite: f64, mu_nonelite: f64, p_elite: f64) -> Self {
        Self {
            mu_elite,
            mu_nonelite,
            p_elite,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mu_elite.is_finite()
            && self.mu_nonelite.is_finite()
            && self.mu_elite >= 0.0
            && self.mu_nonelite >= 0.0
            && self.p_elite > 0.0
            && self.p_elite <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid mixture parameters {self:?}"
            )))
        }
    }

    /// Swap components so that `mu_elite >= mu_nonelite`. Returns whether a
    /// swap happened.
    pub fn canonicalize(&mut self) -> bool {
        if self.mu_elite < self.mu_nonelite {
            std::mem::swap(&mut self.mu_elite, &mut self.mu_nonelite);
            self.p_elite = 1.0 - self.p_elite;
            true
        } else {
            false
        }
    }

    /// `ln p + ln Pois(t; mu_elite)` without the factorial.
    #[inline]
    pub fn ln_joint_elite(&self, t: f64) -> f64 {
        self.p_elite.ln() + ln_poisson_kernel(t, self.mu_elite)
    }

    /// `ln (1-p) + ln Pois(t; mu_nonelite)` without the factorial.
    #[inline]
    pub fn ln_joint_nonelite(&self, t: f64) -> f64 {
        (1.0 - self.p_elite).ln() + ln_poisson_kernel(t, self.mu_nonelite)
    }

    /// Log mixture density at `t`, without the factorial.
    #[inline]
    pub fn ln_mixture(&self, t: f64) -> f64 {
        log_add_exp(self.ln_joint_elite(t), self.ln_joint_nonelite(t))
    }

    /// `ln P(E = 1 | t)`; `None` when both components vanish.
    pub fn ln_posterior_elite(&self, t: f64) -> Option<f64> {
        let a = self.ln_joint_elite(t);
        let mix = log_add_exp(a, self.ln_joint_nonelite(t));
        (mix > f64::NEG_INFINITY).then_some(a - mix)
    }

    /// `ln P(E = 0 | t)`; `None` when both components vanish.
    pub fn ln_posterior_nonelite(&self, t: f64) -> Option<f64> {
        let b = self.ln_joint_nonelite(t);
        let mix = log_add_exp(self.ln_joint_elite(t), b);
        (mix > f64::NEG_INFINITY).then_some(b - mix)
    }
}

/// Eliteness posterior `P(E = 1 | tf)` by Bayes' rule over the two components.
///
/// `tf` may be a real-valued normalised frequency.
pub fn e_step(params: &TwoPoissonParams, tf: f64) -> Result<f64> {
    params
        .ln_posterior_elite(tf)
        .map(f64::exp)
        .ok_or_else(|| Error::DegeneratePosterior {
            term: String::new(),
            tf,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Threshold on the change of the mean per-document log-likelihood.
    pub tol: f64,
    /// Multiplier applied to the initial elite mean.
    pub n_boost: u32,
    /// Initial non-elite mean.
    pub mu0_init: f64,
    pub mu_floor: f64,
    /// `p_elite` is kept inside `[p_clamp, 1 - p_clamp]`.
    pub p_clamp: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
            n_boost: 3,
            mu0_init: 1e-3,
            mu_floor: 1e-9,
            p_clamp: 1e-6,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol must lie in (0, 1)");
        }
        if self.n_boost == 0 {
            return bad("n_boost must be positive");
        }
        if !(self.mu0_init > 0.0 && self.mu0_init.is_finite()) {
            return bad("mu0_init must be positive");
        }
        if !(self.mu_floor > 0.0 && self.mu_floor.is_finite()) {
            return bad("mu_floor must be positive");
        }
        if !(self.p_clamp > 0.0 && self.p_clamp < 0.5) {
            return bad("p_clamp must lie in (0, 0.5)");
        }
        Ok(())
    }

    pub(crate) fn clamp_p(&self, p: f64) -> f64 {
        p.clamp(self.p_clamp, 1.0 - self.p_clamp)
    }
}
