//! Concentration of the empirical class risk of a fixed set classifier.
//!
//! For a classifier fixed before seeing the sample, the errors among the
//! `n_k` certain predictions of class k are Bernoulli draws with the true
//! risk `r` as mean, which gives the Chernoff–Hoeffding tail
//! `P(r̂ ≥ r + ε) ≤ exp(-n_k · D(r + ε ‖ r))`.

use crate::error::{bail, Result};

/// KL divergence between Bernoulli(p) and Bernoulli(q), with `0 ln 0 = 0`.
pub fn bernoulli_kl(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        bail!(Domain, "p = {p} outside [0, 1]");
    }
    if !(q > 0.0 && q < 1.0) {
        bail!(Domain, "q = {q} must lie strictly inside (0, 1)");
    }
    let a = if p == 0.0 { 0.0 } else { p * libm::log(p / q) };
    let b = if p == 1.0 { 0.0 } else { (1.0 - p) * libm::log((1.0 - p) / (1.0 - q)) };
    Ok((a + b).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundQuery {
    /// True (or assumed) risk.
    pub r: f64,
    /// Deviation above the risk.
    pub epsilon: f64,
    /// Number of certain predictions of the class.
    pub n_k: u64,
}

/// `exp(-n_k · D(r + ε ‖ r))`; exactly 1 when `ε = 0` or `n_k = 0`.
pub fn risk_tail_bound(q: TailBoundQuery) -> Result<f64> {
    let TailBoundQuery { r, epsilon, n_k } = q;
    if !(0.0..=1.0).contains(&r) || !(epsilon >= 0.0) || !(r + epsilon <= 1.0) {
        bail!(Domain, "need 0 <= r, 0 <= eps and r + eps <= 1 (r = {r}, eps = {epsilon})");
    }
    if epsilon == 0.0 || n_k == 0 {
        return Ok(1.0);
    }
    if r == 0.0 || r == 1.0 {
        bail!(Domain, "bound is degenerate at r = {r}");
    }
    Ok(libm::exp(-(n_k as f64) * bernoulli_kl(r + epsilon, r)?))
}

/// Smallest ε (to within `1e-12`) whose tail bound is at most `delta`, by
/// bisection on the monotone bound. `None` if even `ε = 1 - r` is not enough.
pub fn epsilon_for_confidence(r: f64, n_k: u64, delta: f64) -> Result<Option<f64>> {
    if !(delta > 0.0 && delta <= 1.0) {
        bail!(Domain, "delta = {delta} must lie in (0, 1]");
    }
    let bound = |epsilon| risk_tail_bound(TailBoundQuery { r, epsilon, n_k });
    let mut hi = 1.0 - r;
    if bound(hi)? > delta {
        return Ok(None);
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if bound(mid)? <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
