//! Closed-form estimators for errorless delay differences and their
//! analytic bias and standard-deviation laws.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geom::SPEED_OF_LIGHT;
use crate::mle::{solve_async_mle, solve_sync_mle, ErrorModel, SolverSettings};
use crate::obs::ObservationSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    SyncMle,
    SyncUmvue,
    AsyncMle,
    AsyncUmvue,
    SyncNoisyMle,
    AsyncNoisyMle,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::SyncMle,
        Method::SyncUmvue,
        Method::AsyncMle,
        Method::AsyncUmvue,
        Method::SyncNoisyMle,
        Method::AsyncNoisyMle,
    ];

    pub fn is_async(self) -> bool {
        matches!(self, Method::AsyncMle | Method::AsyncUmvue | Method::AsyncNoisyMle)
    }

    /// Whether the method models extraction errors (the likelihood solvers).
    pub fn is_general(self) -> bool {
        matches!(self, Method::SyncNoisyMle | Method::AsyncNoisyMle)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::SyncMle => "sync_mle",
            Method::SyncUmvue => "sync_umvue",
            Method::AsyncMle => "async_mle",
            Method::AsyncUmvue => "async_umvue",
            Method::SyncNoisyMle => "sync_noisy_mle",
            Method::AsyncNoisyMle => "async_noisy_mle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub loglik: f64,
    /// All solver starts reached the same optimum (always true for closed forms).
    pub starts_agree: bool,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self { converged: true, iterations: 0, loglik: f64::NAN, starts_agree: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    /// Distance estimate, meters.
    pub d_hat: f64,
    /// Clock offset estimate, seconds; present for asynchronous methods only.
    pub epsilon_hat: Option<f64>,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl Estimate {
    pub(crate) fn closed_form(method: Method, d_hat: f64, epsilon_hat: Option<f64>) -> Self {
        Self { d_hat, epsilon_hat, method, diagnostics: Diagnostics::default() }
    }
}

/// Runs the closed-form or likelihood estimator named by `method` with
/// default solver settings.
pub fn estimate(method: Method, obs: &ObservationSet) -> Result<Estimate> {
    estimate_with(method, obs, &SolverSettings::default())
}

/// [`estimate`] with explicit settings for the likelihood-based methods.
/// The general-case methods use Gaussian errors with the sigmas in `obs`.
pub fn estimate_with(method: Method, obs: &ObservationSet, settings: &SolverSettings) -> Result<Estimate> {
    match method {
        Method::SyncMle => mle_sync(obs),
        Method::SyncUmvue => umvue_sync(obs),
        Method::AsyncMle => mle_async(obs),
        Method::AsyncUmvue => umvue_async(obs),
        Method::SyncNoisyMle => solve_sync_mle(obs, &ErrorModel::gaussian(obs), settings),
        Method::AsyncNoisyMle => solve_async_mle(obs, &ErrorModel::gaussian(obs), settings),
    }
}

fn require_sync(obs: &ObservationSet) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::domain("observation set is empty"));
    }
    if !obs.is_sync() {
        return Err(Error::domain("synchronous estimator applied to asynchronous observations"));
    }
    Ok(())
}

fn require_async(obs: &ObservationSet) -> Result<()> {
    if obs.len() < 2 {
        return Err(Error::domain("need ≥2 observations for asynchronous estimation"));
    }
    Ok(())
}

pub(crate) fn max_abs(deltas: &[f64]) -> f64 {
    deltas.iter().fold(0.0, |m, d| m.max(d.abs()))
}

pub fn min_max(deltas: &[f64]) -> (f64, f64) {
    deltas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)))
}

/// `d̂ = c · max |Δ_k|`.
pub fn mle_sync(obs: &ObservationSet) -> Result<Estimate> {
    require_sync(obs)?;
    Ok(Estimate::closed_form(Method::SyncMle, SPEED_OF_LIGHT * max_abs(obs.deltas()), None))
}

/// `d̂ = (K+1)/K · c · max |Δ_k|`, the unbiased correction of [`mle_sync`].
pub fn umvue_sync(obs: &ObservationSet) -> Result<Estimate> {
    let mle = mle_sync(obs)?;
    let k = obs.len() as f64;
    Ok(Estimate::closed_form(Method::SyncUmvue, (k + 1.0) / k * mle.d_hat, None))
}

/// `d̂ = c/2 · (max Δ' − min Δ')`, `ε̂ = (max Δ' + min Δ')/2`.
pub fn mle_async(obs: &ObservationSet) -> Result<Estimate> {
    require_async(obs)?;
    let (lo, hi) = min_max(obs.deltas());
    Ok(Estimate::closed_form(
        Method::AsyncMle,
        0.5 * SPEED_OF_LIGHT * (hi - lo),
        Some(0.5 * (hi + lo)),
    ))
}

/// `(K+1)/(K−1)` times the [`mle_async`] distance; same offset estimate.
pub fn umvue_async(obs: &ObservationSet) -> Result<Estimate> {
    let mle = mle_async(obs)?;
    let k = obs.len() as f64;
    Ok(Estimate::closed_form(
        Method::AsyncUmvue,
        (k + 1.0) / (k - 1.0) * mle.d_hat,
        mle.epsilon_hat,
    ))
}

/// Standard deviation of [`umvue_sync`] under uniform directions, `d / √(K(K+2))`.
pub fn std_sync_analytic(d: f64, k: usize) -> f64 {
    let k = k as f64;
    d / (k * (k + 2.0)).sqrt()
}

/// Large-K standard deviation of [`umvue_async`], `d/(K−1) · √(2K/(K+2))`.
pub fn std_async_analytic(d: f64, k: usize) -> f64 {
    let k = k as f64;
    d / (k - 1.0) * (2.0 * k / (k + 2.0)).sqrt()
}

/// Large-K standard deviation of the asynchronous offset estimate in
/// seconds, `(d/c)/(K+1) · √(2K/(K+2))`.
pub fn std_offset_analytic(d: f64, k: usize) -> f64 {
    let k = k as f64;
    d / SPEED_OF_LIGHT / (k + 1.0) * (2.0 * k / (k + 2.0)).sqrt()
}

/// Bias of [`mle_sync`], `−d/(K+1)`.
pub fn bias_sync(d: f64, k: usize) -> f64 {
    -d / (k as f64 + 1.0)
}

/// Bias of [`mle_async`], `−2d/(K+1)`.
pub fn bias_async(d: f64, k: usize) -> f64 {
    -2.0 * d / (k as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NS: f64 = 1e-9;

    fn sync(deltas_ns: &[f64]) -> ObservationSet {
        ObservationSet::exact(deltas_ns.iter().map(|d| d * NS).collect(), true).unwrap()
    }

    fn asyn(deltas_ns: &[f64]) -> ObservationSet {
        ObservationSet::exact(deltas_ns.iter().map(|d| d * NS).collect(), false).unwrap()
    }

    #[test]
    fn mle_sync_examples() {
        assert_eq!(mle_sync(&sync(&[0.0, 0.0, 0.0])).unwrap().d_hat, 0.0);
        let e = mle_sync(&sync(&[-2.0, 1.0, 0.5])).unwrap();
        assert!((e.d_hat - 0.599_585).abs() < 1e-6);
        assert!(e.epsilon_hat.is_none());
        assert!((mle_sync(&sync(&[3.0])).unwrap().d_hat - 0.899_377).abs() < 1e-6);
    }

    #[test]
    fn sync_rejects_async_input() {
        assert!(mle_sync(&asyn(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn umvue_sync_examples() {
        assert_eq!(umvue_sync(&sync(&[0.0])).unwrap().d_hat, 0.0);
        let e = umvue_sync(&sync(&[-2.0, 1.0, 0.5, 0.0])).unwrap();
        assert!((e.d_hat - 0.749_481).abs() < 1e-6);
        let many = sync(&vec![1.0; 100_000]);
        let ratio = umvue_sync(&many).unwrap().d_hat / mle_sync(&many).unwrap().d_hat;
        assert!((ratio - 1.0).abs() < 1e-4);
    }

    #[test]
    fn mle_async_examples() {
        let e = mle_async(&asyn(&[1.0, 4.0, 2.0])).unwrap();
        assert!((e.d_hat - 0.449_689).abs() < 1e-6);
        assert!((e.epsilon_hat.unwrap() - 2.5 * NS).abs() < 1e-20);

        let shifted = mle_async(&asyn(&[11.0, 14.0, 12.0])).unwrap();
        assert!((shifted.d_hat - e.d_hat).abs() < 1e-12);
        assert!((shifted.epsilon_hat.unwrap() - e.epsilon_hat.unwrap() - 10.0 * NS).abs() < 1e-18);

        assert_eq!(mle_async(&asyn(&[3.0, 3.0, 3.0])).unwrap().d_hat, 0.0);
    }

    #[test]
    fn async_needs_two_observations() {
        match mle_async(&asyn(&[1.0])) {
            Err(Error::Domain(msg)) => assert!(msg.contains("need ≥2 observations")),
            other => panic!("{other:?}"),
        }
        assert!(umvue_async(&asyn(&[1.0])).is_err());
    }

    #[test]
    fn umvue_async_examples() {
        let e = umvue_async(&asyn(&[1.0, 4.0, 2.0])).unwrap();
        assert!((e.d_hat - 0.899_377).abs() < 1e-6);
        assert!((e.epsilon_hat.unwrap() - 2.5 * NS).abs() < 1e-20);
        assert_eq!(umvue_async(&asyn(&[2.0, 2.0])).unwrap().d_hat, 0.0);
        let mut many = vec![0.0; 100_000];
        many[0] = 1.0;
        let many = asyn(&many);
        let ratio = umvue_async(&many).unwrap().d_hat / mle_async(&many).unwrap().d_hat;
        assert!((ratio - 1.0).abs() < 1e-4);
    }

    #[test]
    fn analytic_std_values() {
        assert!((std_sync_analytic(1.0, 8) - 0.111_803).abs() < 1e-6);
        assert!((std_sync_analytic(3.0, 20) - 0.143_020).abs() < 1e-6);
        assert!((std_sync_analytic(3.0, 20) / 3.0 * 100.0 - 4.77).abs() < 5e-3);
        assert_eq!(std_sync_analytic(0.0, 5), 0.0);

        assert!((std_async_analytic(3.0, 20) - 0.212_906).abs() < 1e-6);
        assert!((std_async_analytic(3.0, 20) / 3.0 * 100.0 - 7.10).abs() < 5e-3);
        assert_eq!(std_async_analytic(0.0, 5), 0.0);
        let ratio = std_async_analytic(1.0, 1_000_000) / std_sync_analytic(1.0, 1_000_000);
        assert!((ratio - 2f64.sqrt()).abs() < 1e-5);

        assert!((std_offset_analytic(3.0, 20) * 1e9 - 0.642_540).abs() < 1e-6);
        assert_eq!(std_offset_analytic(0.0, 9), 0.0);
        assert!(std_offset_analytic(1.0, 10) > std_offset_analytic(1.0, 11));
    }

    #[test]
    fn bias_values() {
        assert!((bias_sync(1.0, 9) + 0.1).abs() < 1e-15);
        assert!((bias_async(1.0, 9) + 0.2).abs() < 1e-15);
        assert_eq!(bias_sync(0.0, 3), 0.0);
        assert!(bias_async(1.0, 10_000_000).abs() < 1e-6);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
