//! Log-space helpers shared by the mixture fit and the scorers.

/// `ln(e^a + e^b)` without overflow. Either argument may be `-inf`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Log of the Poisson kernel `e^{-mu} mu^t` with the `t!` factor omitted.
///
/// `t` may be real-valued (length-normalised tf). Uses `0^0 = 1`, so a zero
/// mean gives `0` at `t = 0` and `-inf` for any positive `t`.
#[inline]
pub fn ln_poisson_kernel(t: f64, mu: f64) -> f64 {
    if t == 0.0 {
        -mu
    } else if mu == 0.0 {
        f64::NEG_INFINITY
    } else {
        t * mu.ln() - mu
    }
}
