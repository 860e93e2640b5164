//! Reduced-size checks of the estimators against their analytic laws and
//! of the likelihood solvers against brute-force search.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::est::{self, estimate, Method};
use crate::geom::{delay_difference_bound_check, Mpc, Point3, SPEED_OF_LIGHT};
use crate::mle::{loglik_async, loglik_sync, ErrorModel};
use crate::obs::{synth_statistical, ObservationSet, RngSeed, Scene};

const TRIALS: usize = 20_000;
const NS: f64 = 1e-9;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Prints one PASS/FAIL line per check; returns whether all passed.
pub(super) fn run(out: &mut dyn Write) -> io::Result<bool> {
    let checks = [
        std_law(Method::SyncUmvue, 10),
        std_law(Method::AsyncUmvue, 30),
        offset_std_law(30),
        unbiased(Method::SyncUmvue, 8),
        unbiased(Method::AsyncUmvue, 8),
        naive_bias(Method::SyncMle, 8),
        naive_bias(Method::AsyncMle, 8),
        quoted_percentages(),
        collapse_to_closed_form(),
        grid_oracle(true),
        grid_oracle(false),
        traced_bound(),
    ];
    let mut all = true;
    for c in &checks {
        writeln!(out, "{} {:<28} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        all &= c.pass;
    }
    writeln!(out, "{}", if all { "selftest passed" } else { "selftest FAILED" })?;
    Ok(all)
}

/// Relative errors of `method` over `TRIALS` errorless draws at d = 1 m,
/// together with the offset errors in seconds for asynchronous methods.
fn draws(method: Method, k: usize, tag: u64) -> (Vec<f64>, Vec<f64>) {
    let seed = RngSeed(0x5e1f).derive(tag);
    let eps = 3.0 * NS;
    let results: Vec<(f64, Option<f64>)> = (0..TRIALS)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.trial(t as u64);
            let obs = synth_statistical(1.0, k, eps, 0.0, !method.is_async(), &mut rng).expect("valid draw");
            let e = estimate(method, &obs).expect("closed form");
            (e.d_hat - 1.0, e.epsilon_hat.map(|x| x - eps))
        })
        .collect();
    let d = results.iter().map(|r| r.0).collect();
    let o = results.iter().filter_map(|r| r.1).collect();
    (d, o)
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn std_law(method: Method, k: usize) -> Check {
    let (d, _) = draws(method, k, k as u64);
    let (_, std) = mean_std(&d);
    let law = if method.is_async() { est::std_async_analytic(1.0, k) } else { est::std_sync_analytic(1.0, k) };
    let rel = std / law - 1.0;
    Check {
        name: if method.is_async() { "async_std_law" } else { "sync_std_law" },
        pass: rel.abs() < 0.05,
        detail: format!("K={k} std {std:.5} law {law:.5} ({:+.2}%)", 100.0 * rel),
    }
}

fn offset_std_law(k: usize) -> Check {
    let (_, o) = draws(Method::AsyncUmvue, k, k as u64);
    let (_, std) = mean_std(&o);
    let law = est::std_offset_analytic(1.0, k);
    let rel = std / law - 1.0;
    Check {
        name: "offset_std_law",
        pass: rel.abs() < 0.05,
        detail: format!("K={k} std {:.5} ns law {:.5} ns ({:+.2}%)", std / NS, law / NS, 100.0 * rel),
    }
}

fn unbiased(method: Method, k: usize) -> Check {
    let (d, o) = draws(method, k, 100 + k as u64);
    let (mean, std) = mean_std(&d);
    let se = std / (d.len() as f64).sqrt();
    let mut pass = mean.abs() < 4.0 * se;
    let mut detail = format!("K={k} mean error {mean:+.2e} m (se {se:.1e})");
    if !o.is_empty() {
        let (om, os) = mean_std(&o);
        let ose = os / (o.len() as f64).sqrt();
        pass &= om.abs() < 4.0 * ose;
        detail += &format!(", offset {:+.2e} ns (se {:.1e})", om / NS, ose / NS);
    }
    Check { name: if method.is_async() { "async_umvue_unbiased" } else { "sync_umvue_unbiased" }, pass, detail }
}

fn naive_bias(method: Method, k: usize) -> Check {
    let (d, _) = draws(method, k, 200 + k as u64);
    let (mean, std) = mean_std(&d);
    let se = std / (d.len() as f64).sqrt();
    let law = if method.is_async() { est::bias_async(1.0, k) } else { est::bias_sync(1.0, k) };
    Check {
        name: if method.is_async() { "async_mle_bias_law" } else { "sync_mle_bias_law" },
        pass: (mean - law).abs() < 4.0 * se,
        detail: format!("K={k} bias {mean:+.5} law {law:+.5}"),
    }
}

fn quoted_percentages() -> Check {
    let sync = 100.0 * est::std_sync_analytic(3.0, 20) / 3.0;
    let asy = 100.0 * est::std_async_analytic(3.0, 20) / 3.0;
    let pass = format!("{sync:.2}") == "4.77" && format!("{asy:.2}") == "7.10";
    Check { name: "relative_std_k20", pass, detail: format!("sync {sync:.4}% async {asy:.4}%") }
}

fn random_instance(t: u64, sync: bool, sigma_ratio: f64) -> ObservationSet {
    let mut rng = RngSeed(0x0a11).derive(u64::from(sync)).trial(t);
    let d = rng.random_range(0.5..4.0);
    let k = rng.random_range(3..12);
    let sigma = sigma_ratio * d / SPEED_OF_LIGHT;
    synth_statistical(d, k, 2.0 * NS, sigma, sync, &mut rng).expect("valid draw")
}

fn collapse_to_closed_form() -> Check {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for t in 0..50 {
        for sync in [true, false] {
            let obs = random_instance(t, sync, 1e-6);
            let cs = SPEED_OF_LIGHT * obs.sigmas()[0];
            let (noisy, closed) = if sync { (Method::SyncNoisyMle, Method::SyncMle) } else { (Method::AsyncNoisyMle, Method::AsyncMle) };
            match (estimate(noisy, &obs), estimate(closed, &obs)) {
                (Ok(a), Ok(b)) => {
                    let gap = (a.d_hat - b.d_hat).abs() / cs;
                    worst = worst.max(gap);
                    pass &= gap < 10.0;
                }
                _ => pass = false,
            }
        }
    }
    Check { name: "small_sigma_collapse", pass, detail: format!("max |d_noisy - d_closed| = {worst:.2} c*sigma") }
}

/// Solver log-likelihood is at least the best value on a grid.
fn grid_oracle(sync: bool) -> Check {
    let mut worst = f64::NEG_INFINITY;
    let mut pass = true;
    for t in 0..10 {
        let obs = random_instance(t, sync, 0.3);
        let em = ErrorModel::gaussian(&obs);
        let method = if sync { Method::SyncNoisyMle } else { Method::AsyncNoisyMle };
        let Ok(est) = estimate(method, &obs) else {
            pass = false;
            continue;
        };
        let d_max = 2.0 * SPEED_OF_LIGHT * obs.deltas().iter().fold(0.0f64, |m, x| m.max(x.abs())) + 1.0;
        let grid_best = if sync {
            (1..=4000)
                .map(|i| loglik_sync(d_max * i as f64 / 4000.0, &obs, &em).unwrap_or(f64::NEG_INFINITY))
                .fold(f64::NEG_INFINITY, f64::max)
        } else {
            let (lo, hi) = est::min_max(obs.deltas());
            (1..=300)
                .flat_map(|i| (0..=300).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let d = d_max * i as f64 / 300.0;
                    let e = lo + (hi - lo) * j as f64 / 300.0;
                    loglik_async(d, e, &obs, &em).unwrap_or(f64::NEG_INFINITY)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let shortfall = grid_best - est.diagnostics.loglik;
        worst = worst.max(shortfall);
        pass &= shortfall < 1e-9;
    }
    Check {
        name: if sync { "sync_solver_vs_grid" } else { "async_solver_vs_grid" },
        pass,
        detail: format!("max grid excess over solver loglik {worst:.2e}"),
    }
}

fn traced_bound() -> Check {
    let cfg = ScenarioConfig::default();
    let mut rng = RngSeed(0xb0).trial(0);
    let ([x0, y0], [x1, y1]) = cfg.room.plan_bounds();
    let mut pass = true;
    let mut checked = 0;
    while checked < 50 {
        let p = Point3::new(rng.random_range(x0..x1), rng.random_range(y0..y1), rng.random_range(0.1..cfg.room.height() - 0.1));
        if !cfg.room.contains_with_margin(p, 1e-3) {
            continue;
        }
        let Ok(scene) = Scene::trace(&cfg.room, cfg.node_a, p, &cfg.observers, cfg.max_bounces, &cfg.channel) else {
            pass = false;
            break;
        };
        for link in &scene.links {
            let (a, b): (Vec<Mpc>, Vec<Mpc>) = link.common().into_iter().map(|(a, b)| (a.mpc.clone(), b.mpc.clone())).unzip();
            pass &= delay_difference_bound_check(cfg.node_a, p, &a, &b).unwrap_or(false);
        }
        checked += 1;
    }
    Check { name: "traced_delay_bound", pass, detail: format!("{checked} random node-B positions, common detected paths") }
}
