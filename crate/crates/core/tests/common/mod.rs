//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use mpc_ranging::geom::SPEED_OF_LIGHT;
use mpc_ranging::mle::{loglik_async, loglik_sync, ErrorModel};
use mpc_ranging::obs::{synth_statistical, ObservationSet, RngSeed};
use rand::Rng;
use rayon::prelude::*;

pub const NS: f64 = 1e-9;

/// A noisy instance with random distance, K and error level.
pub fn random_noisy_instance(seed: u64, t: u64, sync: bool) -> ObservationSet {
    let mut rng = RngSeed(seed).derive(u64::from(sync)).trial(t);
    let d = rng.random_range(0.5..4.0);
    let k = rng.random_range(3..30);
    let ratio = rng.random_range(0.05..0.5);
    synth_statistical(d, k, 3.0 * NS, ratio * d / SPEED_OF_LIGHT, sync, &mut rng).unwrap()
}

/// Maximizer of the sync log-likelihood over `d ∈ (0, 3·c·max|Δ|]` on a
/// uniform grid of pitch `step` meters.
pub fn sync_grid_argmax(obs: &ObservationSet, step: f64) -> (f64, f64) {
    let em = ErrorModel::gaussian(obs);
    let top = 3.0 * SPEED_OF_LIGHT * obs.deltas().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let n = (top / step).ceil() as usize;
    (1..=n)
        .into_par_iter()
        .map(|i| {
            let d = i as f64 * step;
            (d, loglik_sync(d, obs, &em).unwrap())
        })
        .reduce(|| (f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

/// Maximizer `(d, ε, loglik)` of the async log-likelihood: a full coarse
/// grid over `d ∈ (0, 3·c·(max−min)/2]`, `ε ∈ [min Δ, max Δ]`, then
/// repeated 41×41 refinements around the best node until the pitch is at
/// most `step_m` meters and `step_s` seconds.
pub fn async_grid_argmax(obs: &ObservationSet, step_m: f64, step_s: f64) -> (f64, f64, f64) {
    let em = ErrorModel::gaussian(obs);
    let (lo, hi) = obs.deltas().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let d_top = 1.5 * SPEED_OF_LIGHT * (hi - lo);
    let eval = |d: f64, e: f64| if d > 0.0 { loglik_async(d, e, obs, &em).unwrap() } else { f64::NEG_INFINITY };
    let search = |d0: f64, d1: f64, e0: f64, e1: f64, n: usize| {
        (0..=n)
            .into_par_iter()
            .flat_map_iter(|i| (0..=n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let d = d0 + (d1 - d0) * i as f64 / n as f64;
                let e = e0 + (e1 - e0) * j as f64 / n as f64;
                (d, e, eval(d, e))
            })
            .reduce(|| (f64::NAN, f64::NAN, f64::NEG_INFINITY), |a, b| if b.2 > a.2 { b } else { a })
    };
    let n = 400;
    let mut best = search(0.0, d_top, lo, hi, n);
    let (mut pd, mut pe) = (d_top / n as f64, (hi - lo) / n as f64);
    while pd > step_m || pe > step_s {
        let (wd, we) = (3.0 * pd, 3.0 * pe);
        best = search((best.0 - wd).max(0.0), best.0 + wd, best.1 - we, best.1 + we, 40);
        pd = 2.0 * wd / 40.0;
        pe = 2.0 * we / 40.0;
    }
    best
}
