//! Likelihood-based distance estimation for delay differences observed with
//! extraction errors.
//!
//! Each observation contributes `c/(2d) · I_k`, where the soft indicator
//! `I_k = F(Δ̃_k + d/c) − F(Δ̃_k − d/c)` is the error-CDF mass consistent with
//! `c·Δ ∈ [−d, d]`. The asynchronous likelihood evaluates the same terms at
//! `Δ̃'_k − ε`.

pub mod gauss;
mod solver;

use std::fmt;
use std::sync::Arc;

pub use solver::{solve_async_mle, solve_sync_mle, SolverSettings};

use crate::error::{Error, Result};
use crate::geom::SPEED_OF_LIGHT;
use crate::obs::ObservationSet;

/// Distribution of a single extraction error, for non-Gaussian error models.
pub trait ErrorCdf: Send + Sync + fmt::Debug {
    fn cdf(&self, w: f64) -> f64;
    fn pdf(&self, w: f64) -> f64;
}

/// Per-observation error distributions.
#[derive(Debug, Clone)]
pub enum ErrorModel {
    /// Zero-mean Gaussian errors; a zero sigma means errorless.
    Gaussian { sigmas: Vec<f64> },
    Custom(Vec<Arc<dyn ErrorCdf>>),
}

impl ErrorModel {
    /// Gaussian errors with the sigmas recorded in `obs`.
    pub fn gaussian(obs: &ObservationSet) -> Self {
        ErrorModel::Gaussian { sigmas: obs.sigmas().to_vec() }
    }

    pub fn len(&self) -> usize {
        match self {
            ErrorModel::Gaussian { sigmas } => sigmas.len(),
            ErrorModel::Custom(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when every observation is modeled as errorless.
    pub fn is_errorless(&self) -> bool {
        matches!(self, ErrorModel::Gaussian { sigmas } if sigmas.iter().all(|s| *s == 0.0))
    }

    fn check(&self, obs: &ObservationSet) -> Result<()> {
        if self.len() != obs.len() {
            return Err(Error::domain(format!(
                "error model has {} entries for {} observations",
                self.len(),
                obs.len()
            )));
        }
        Ok(())
    }

    /// `(ln I, ∂ln I/∂h − 1/h, ∂ln I/∂δ)` for observation `k` at delay
    /// `delta` and half-width `h = d/c`, both in seconds. The `1/h` part
    /// cancels against the `ln(c/2d)` prefactor.
    fn term(&self, k: usize, delta: f64, h: f64) -> Term {
        match self {
            ErrorModel::Gaussian { sigmas } => gaussian_term(delta, h, sigmas[k]),
            ErrorModel::Custom(dists) => {
                let dist = &dists[k];
                let mass = dist.cdf(delta + h) - dist.cdf(delta - h);
                if !(mass > 0.0) {
                    return Term::INFEASIBLE;
                }
                let (hi, lo) = (dist.pdf(delta + h), dist.pdf(delta - h));
                Term { ln_i: mass.ln(), d_h: (hi + lo) / mass - 1.0 / h, d_delta: (hi - lo) / mass }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Term {
    ln_i: f64,
    /// excess of `∂ln I/∂h` over `1/h`
    d_h: f64,
    d_delta: f64,
}

impl Term {
    const INFEASIBLE: Term = Term { ln_i: f64::NEG_INFINITY, d_h: 0.0, d_delta: 0.0 };

    fn inside(h: f64) -> Term {
        Term { ln_i: 0.0, d_h: -1.0 / h, d_delta: 0.0 }
    }
}

fn gaussian_term(delta: f64, h: f64, sigma: f64) -> Term {
    if sigma == 0.0 {
        return if delta.abs() <= h { Term::inside(h) } else { Term::INFEASIBLE };
    }
    if let Some((ln_i, ex_w, d_m)) = gauss::narrow_mass(delta / sigma, h / sigma) {
        return Term { ln_i, d_h: ex_w / sigma, d_delta: d_m / sigma };
    }
    let a = (delta - h) / sigma;
    let b = (delta + h) / sigma;
    let ln_i = gauss::ln_mass(a, b);
    if ln_i == f64::NEG_INFINITY {
        return Term::INFEASIBLE;
    }
    // φ(a)/I and φ(b)/I, formed in log space
    let ra = (gauss::ln_pdf(a) - ln_i).exp() / sigma;
    let rb = (gauss::ln_pdf(b) - ln_i).exp() / sigma;
    Term { ln_i, d_h: ra + rb - 1.0 / h, d_delta: rb - ra }
}

/// Gaussian soft indicator `Q((Δ̃ − d/c)/σ) − Q((Δ̃ + d/c)/σ)`; the hard
/// indicator of `c·|Δ̃| ≤ d` when `sigma` is zero.
pub fn soft_indicator(delta: f64, d: f64, sigma: f64) -> f64 {
    gaussian_term(delta, d / SPEED_OF_LIGHT, sigma).ln_i.exp()
}

fn require_positive(d: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::domain(format!("distance must be positive, got {d}")));
    }
    Ok(())
}

/// Synchronous log-likelihood `K·ln(c/2d) + Σ ln I_k`. Returns
/// `-inf` when an errorless observation falls outside `[−d/c, d/c]`.
pub fn loglik_sync(d: f64, obs: &ObservationSet, em: &ErrorModel) -> Result<f64> {
    Ok(loglik_sync_grad(d, obs, em)?.0)
}

/// [`loglik_sync`] and its derivative with respect to `d` (per meter).
pub fn loglik_sync_grad(d: f64, obs: &ObservationSet, em: &ErrorModel) -> Result<(f64, f64)> {
    let (f, g) = loglik_async_grad(d, 0.0, obs, em)?;
    Ok((f, g[0]))
}

/// Asynchronous log-likelihood of distance `d` (m) and clock offset
/// `epsilon` (s).
pub fn loglik_async(d: f64, epsilon: f64, obs: &ObservationSet, em: &ErrorModel) -> Result<f64> {
    Ok(loglik_async_grad(d, epsilon, obs, em)?.0)
}

/// [`loglik_async`] with its gradient `[∂/∂d (per m), ∂/∂ε (per s)]`.
pub fn loglik_async_grad(d: f64, epsilon: f64, obs: &ObservationSet, em: &ErrorModel) -> Result<(f64, [f64; 2])> {
    require_positive(d)?;
    em.check(obs)?;
    Ok(eval(d, epsilon, obs.deltas(), em))
}

pub(crate) fn eval(d: f64, epsilon: f64, deltas: &[f64], em: &ErrorModel) -> (f64, [f64; 2]) {
    let h = d / SPEED_OF_LIGHT;
    let k = deltas.len() as f64;
    // ∂/∂d of K·ln(c/2d) is −K/d, which the 1/h parts of the terms cancel
    let mut sum = 0.0;
    let mut d_h = 0.0;
    let mut d_eps = 0.0;
    for (i, &delta) in deltas.iter().enumerate() {
        let t = em.term(i, delta - epsilon, h);
        if t.ln_i == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, [0.0, 0.0]);
        }
        sum += t.ln_i;
        d_h += t.d_h;
        d_eps -= t.d_delta;
    }
    let f = k * (SPEED_OF_LIGHT / (2.0 * d)).ln() + sum;
    (f, [d_h / SPEED_OF_LIGHT, d_eps])
}
