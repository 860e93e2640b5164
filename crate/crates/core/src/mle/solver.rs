use super::{eval, ErrorModel};
use crate::error::{Error, Result};
use crate::est::{max_abs, min_max, Diagnostics, Estimate, Method};
use crate::geom::SPEED_OF_LIGHT;
use crate::obs::ObservationSet;

const START_FACTORS: [f64; 5] = [1.0, 0.5, 1.5, 2.0, 3.0];
const MAX_HALVINGS: usize = 30;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Stop when the gradient in the solver's internal coordinates falls below this.
    pub gradient_tolerance: f64,
    /// Stop when an accepted step moves the parameters less than this (relative).
    pub parameter_tolerance: f64,
    /// Number of starting points, the first being the closed-form estimate.
    pub multistart: usize,
    /// Smallest admissible distance, meters.
    pub d_min: f64,
    /// Tolerance within which multistart solutions count as the same optimum,
    /// relative to the larger of the estimate and the error length scale `c·σ`.
    pub start_agreement: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gradient_tolerance: 1e-10,
            parameter_tolerance: 1e-12,
            multistart: 5,
            d_min: 1e-6,
            start_agreement: 1e-5,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.gradient_tolerance > 0.0
            && self.parameter_tolerance > 0.0
            && self.multistart > 0
            && self.d_min > 0.0
            && self.start_agreement > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("solver settings must all be positive".into()))
        }
    }

    fn start_factors(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.multistart).map(|i| START_FACTORS.get(i).copied().unwrap_or(i as f64 - 1.0))
    }
}

#[derive(Debug, Clone, Copy)]
struct Run<const N: usize> {
    x: [f64; N],
    f: f64,
    iterations: usize,
    converged: bool,
}

fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf<const N: usize>(a: &[f64; N]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// BFGS ascent with backtracking (halving) line search.
fn maximize<const N: usize>(
    objective: impl Fn(&[f64; N]) -> (f64, [f64; N]),
    x0: [f64; N],
    s: &SolverSettings,
) -> Run<N> {
    let mut x = x0;
    let (mut f, mut g) = objective(&x);
    if !f.is_finite() {
        return Run { x, f, iterations: 0, converged: false };
    }
    let identity = {
        let mut m = [[0.0; N]; N];
        (0..N).for_each(|i| m[i][i] = 1.0);
        m
    };
    // inverse Hessian of −f
    let mut h = identity;
    let mut scaled = false;

    for it in 1..=s.max_iterations {
        if norm_inf(&g) <= s.gradient_tolerance {
            return Run { x, f, iterations: it - 1, converged: true };
        }
        let mut p = [0.0; N];
        for i in 0..N {
            p[i] = (0..N).map(|j| h[i][j] * g[j]).sum();
        }
        if !(dot(&p, &g) > 0.0) {
            h = identity;
            p = g;
        }
        let cap = norm_inf(&p);
        if cap > 1.0 {
            p.iter_mut().for_each(|v| *v /= cap);
        }
        let slope = dot(&p, &g);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut xn = x;
            xn.iter_mut().zip(&p).for_each(|(v, d)| *v += t * d);
            let (fnew, gnew) = objective(&xn);
            if fnew.is_finite() && fnew >= f + ARMIJO * t * slope {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            if h != identity {
                // stale curvature; retry along the gradient
                h = identity;
                scaled = false;
                continue;
            }
            let converged = is_local_max(&objective, &x, f);
            return Run { x, f, iterations: it, converged };
        };

        let mut step = [0.0; N];
        let mut y = [0.0; N];
        for i in 0..N {
            step[i] = xn[i] - x[i];
            // gradient of −f
            y[i] = g[i] - gnew[i];
        }
        x = xn;
        f = fnew;
        g = gnew;

        if norm_inf(&step) <= s.parameter_tolerance * (1.0 + norm_inf(&x)) {
            let converged = norm_inf(&g) <= s.gradient_tolerance || is_local_max(&objective, &x, f);
            if converged || h == identity {
                return Run { x, f, iterations: it, converged };
            }
            h = identity;
            scaled = false;
            continue;
        }

        let sy = dot(&step, &y);
        // relative curvature test; a tiny `sy` would overflow the update
        if !(sy > 1e-10 * dot(&step, &step).sqrt() * dot(&y, &y).sqrt()) {
            // no usable curvature along this step (the log-likelihood is
            // not concave everywhere); fall back to gradient scaling
            h = identity;
            scaled = false;
        } else {
            if !scaled {
                let scale = sy / dot(&y, &y);
                h = identity;
                h.iter_mut().enumerate().for_each(|(i, row)| row[i] = scale);
                scaled = true;
            }
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let mut hy = [0.0; N];
            for i in 0..N {
                hy[i] = (0..N).map(|j| h[i][j] * y[j]).sum();
            }
            let yhy = dot(&y, &hy);
            for i in 0..N {
                for j in 0..N {
                    h[i][j] += -rho * (step[i] * hy[j] + hy[i] * step[j]) + (rho * rho * yhy + rho) * step[i] * step[j];
                }
            }
            if h.iter().flatten().any(|v| !v.is_finite()) {
                h = identity;
                scaled = false;
            }
        }
    }
    let converged = norm_inf(&g) <= s.gradient_tolerance;
    Run { x, f, iterations: s.max_iterations, converged }
}

/// No coordinate perturbation at the working-precision scale improves `f`.
fn is_local_max<const N: usize>(objective: &impl Fn(&[f64; N]) -> (f64, [f64; N]), x: &[f64; N], f: f64) -> bool {
    let noise = 8.0 * f64::EPSILON * (1.0 + f.abs());
    for i in 0..N {
        for sign in [-1.0, 1.0] {
            let mut xp = *x;
            xp[i] += sign * 1e-9 * (1.0 + x[i].abs());
            let (fp, _) = objective(&xp);
            if fp > f + noise {
                return false;
            }
        }
    }
    true
}

/// Maps the log-distance coordinate to meters. Below `d_min` the
/// objective is extended flat, so the boundary acts as a projection.
fn clamp_distance(u: f64, s: &SolverSettings) -> (f64, bool) {
    let d = u.exp();
    if d < s.d_min {
        (s.d_min, true)
    } else {
        (d, false)
    }
}

/// When the likelihood keeps rising towards `d → 0` the ascent stalls at
/// some arbitrary small distance; move such runs onto `d_min`.
fn snap_to_boundary<const N: usize>(
    objective: &impl Fn(&[f64; N]) -> (f64, [f64; N]),
    mut run: Run<N>,
    s: &SolverSettings,
) -> Run<N> {
    if !run.converged {
        return run;
    }
    let mut at_min = run.x;
    at_min[0] = s.d_min.ln();
    let (f, _) = objective(&at_min);
    if f >= run.f {
        run.x = at_min;
        run.f = f;
    }
    run
}

fn check_inputs(obs: &ObservationSet, em: &ErrorModel, s: &SolverSettings, min_k: usize) -> Result<()> {
    s.validate()?;
    if obs.len() < min_k {
        return Err(Error::domain(if min_k >= 2 {
            "need ≥2 observations for asynchronous estimation".to_string()
        } else {
            "observation set is empty".to_string()
        }));
    }
    em.check(obs)
}

/// Scale for the distance when the closed form gives nothing usable.
fn fallback_scale(em: &ErrorModel, s: &SolverSettings) -> f64 {
    let sigma = match em {
        ErrorModel::Gaussian { sigmas } => sigmas.iter().fold(0.0f64, |m, v| m.max(*v)),
        ErrorModel::Custom(_) => 0.0,
    };
    (SPEED_OF_LIGHT * sigma).max(10.0 * s.d_min)
}

fn finish(
    method: Method,
    runs: Vec<(f64, Option<f64>, Run<2>)>,
    scale: f64,
    s: &SolverSettings,
) -> Result<Estimate> {
    let best = runs
        .iter()
        .filter(|(_, _, r)| r.converged)
        .max_by(|a, b| a.2.f.total_cmp(&b.2.f))
        .copied();
    let Some((d_hat, epsilon_hat, run)) = best else {
        let (d_hat, epsilon_hat, run) = runs
            .iter()
            .max_by(|a, b| a.2.f.total_cmp(&b.2.f))
            .copied()
            .expect("at least one start");
        return Err(Error::SolverFailed {
            reason: format!("no start converged in {} iterations", s.max_iterations),
            best: Box::new(Estimate {
                d_hat,
                epsilon_hat,
                method,
                diagnostics: Diagnostics { converged: false, iterations: run.iterations, loglik: run.f, starts_agree: false },
            }),
        });
    };
    let tol = s.start_agreement * d_hat.max(scale);
    // on a plateau flatter than rounding, distinct points are equally good
    let flat = 64.0 * f64::EPSILON * (1.0 + run.f.abs());
    let starts_agree = runs
        .iter()
        .all(|(d, _, r)| r.converged && ((d - d_hat).abs() <= tol || (r.f - run.f).abs() <= flat));
    Ok(Estimate {
        d_hat,
        epsilon_hat,
        method,
        diagnostics: Diagnostics { converged: true, iterations: run.iterations, loglik: run.f, starts_agree },
    })
}

/// Maximizes the synchronous likelihood over `d`. With an errorless model
/// this is exactly `c · max |Δ_k|`.
pub fn solve_sync_mle(obs: &ObservationSet, em: &ErrorModel, s: &SolverSettings) -> Result<Estimate> {
    check_inputs(obs, em, s, 1)?;
    let deltas = obs.deltas();
    let k = deltas.len() as f64;
    let closed = SPEED_OF_LIGHT * max_abs(deltas);
    if em.is_errorless() {
        let loglik = if closed > 0.0 { eval(closed, 0.0, deltas, em).0 } else { f64::INFINITY };
        return Ok(Estimate {
            d_hat: closed,
            epsilon_hat: None,
            method: Method::SyncNoisyMle,
            diagnostics: Diagnostics { loglik, ..Diagnostics::default() },
        });
    }

    let mut d0 = (k + 1.0) / k * closed;
    if d0 < 10.0 * s.d_min {
        d0 = fallback_scale(em, s);
    }
    let objective = |x: &[f64; 1]| {
        let (d, below) = clamp_distance(x[0], s);
        let (f, g) = eval(d, 0.0, deltas, em);
        (f, [if below { 0.0 } else { g[0] * d }])
    };
    let runs = s
        .start_factors()
        .map(|factor| {
            let r = snap_to_boundary(&objective, maximize(objective, [(d0 * factor).ln()], s), s);
            let run = Run { x: [r.x[0], 0.0], f: r.f, iterations: r.iterations, converged: r.converged };
            (clamp_distance(r.x[0], s).0, None, run)
        })
        .collect();
    finish(Method::SyncNoisyMle, runs, fallback_scale(em, s), s)
}

/// Jointly maximizes the asynchronous likelihood over `(d, ε)`. With an
/// errorless model this is exactly the closed-form max/min estimate.
pub fn solve_async_mle(obs: &ObservationSet, em: &ErrorModel, s: &SolverSettings) -> Result<Estimate> {
    check_inputs(obs, em, s, 2)?;
    let deltas = obs.deltas();
    let k = deltas.len() as f64;
    let (lo, hi) = min_max(deltas);
    let closed = 0.5 * SPEED_OF_LIGHT * (hi - lo);
    let eps0 = 0.5 * (hi + lo);
    if em.is_errorless() {
        let loglik = if closed > 0.0 { eval(closed, eps0, deltas, em).0 } else { f64::INFINITY };
        return Ok(Estimate {
            d_hat: closed,
            epsilon_hat: Some(eps0),
            method: Method::AsyncNoisyMle,
            diagnostics: Diagnostics { loglik, ..Diagnostics::default() },
        });
    }

    let mut d0 = (k + 1.0) / (k - 1.0) * closed;
    if d0 < 10.0 * s.d_min {
        d0 = fallback_scale(em, s);
    }
    // offset measured in units of the initial half-width so both coordinates are O(1)
    let time_scale = d0 / SPEED_OF_LIGHT;
    let objective = |x: &[f64; 2]| {
        let (d, below) = clamp_distance(x[0], s);
        let (f, g) = eval(d, eps0 + x[1] * time_scale, deltas, em);
        (f, [if below { 0.0 } else { g[0] * d }, g[1] * time_scale])
    };
    let runs = s
        .start_factors()
        .map(|factor| {
            let r = snap_to_boundary(&objective, maximize(objective, [(d0 * factor).ln(), 0.0], s), s);
            (clamp_distance(r.x[0], s).0, Some(eps0 + r.x[1] * time_scale), r)
        })
        .collect();
    finish(Method::AsyncNoisyMle, runs, fallback_scale(em, s), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::est::{mle_async, mle_sync};
    use crate::obs::{synth_statistical, RngSeed};

    const NS: f64 = 1e-9;

    #[test]
    fn errorless_collapses_to_closed_form() {
        let obs = ObservationSet::exact(vec![1.0 * NS, -2.0 * NS, 0.5 * NS], true).unwrap();
        let em = ErrorModel::gaussian(&obs);
        let e = solve_sync_mle(&obs, &em, &SolverSettings::default()).unwrap();
        assert_eq!(e.d_hat, mle_sync(&obs).unwrap().d_hat);
        assert_eq!(e.method, Method::SyncNoisyMle);

        let obs = obs.with_sync(false);
        let e = solve_async_mle(&obs, &em, &SolverSettings::default()).unwrap();
        let closed = mle_async(&obs).unwrap();
        assert_eq!(e.d_hat, closed.d_hat);
        assert_eq!(e.epsilon_hat, closed.epsilon_hat);
    }

    #[test]
    fn tiny_sigma_async_stays_finite() {
        // BFGS curvature along a near-flat step once overflowed the update.
        let deltas = vec![9.127894276644388e-9, -5.766092763915318e-9, 5.002640600932183e-10,
            9.519060983535998e-10, 7.2524507145256315e-9, 6.1304031576719335e-9];
        let obs = ObservationSet::new(deltas, vec![1e-15; 6], false).unwrap();
        let e = solve_async_mle(&obs, &ErrorModel::gaussian(&obs), &SolverSettings::default()).unwrap();
        let closed = mle_async(&obs).unwrap();
        assert!((e.d_hat - closed.d_hat).abs() < 1e-5);
    }

    #[test]
    fn async_requires_two() {
        let obs = ObservationSet::new(vec![1.0 * NS], vec![0.1 * NS], false).unwrap();
        let em = ErrorModel::gaussian(&obs);
        assert!(matches!(solve_async_mle(&obs, &em, &SolverSettings::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn noisy_solution_is_stationary() {
        let mut rng = RngSeed(2).trial(0);
        let obs = synth_statistical(1.0, 15, 0.0, 0.3 / SPEED_OF_LIGHT, true, &mut rng).unwrap();
        let em = ErrorModel::gaussian(&obs);
        let e = solve_sync_mle(&obs, &em, &SolverSettings::default()).unwrap();
        assert!(e.diagnostics.converged && e.diagnostics.starts_agree);
        let (_, g) = crate::mle::loglik_sync_grad(e.d_hat, &obs, &em).unwrap();
        assert!((g * e.d_hat).abs() < 1e-6, "{g}");
    }

    #[test]
    fn solver_is_deterministic() {
        let mut rng = RngSeed(8).trial(1);
        let obs = synth_statistical(2.0, 12, 3.0 * NS, 0.5 / SPEED_OF_LIGHT, false, &mut rng).unwrap();
        let em = ErrorModel::gaussian(&obs);
        let a = solve_async_mle(&obs, &em, &SolverSettings::default()).unwrap();
        let b = solve_async_mle(&obs, &em, &SolverSettings::default()).unwrap();
        assert_eq!(a.d_hat.to_bits(), b.d_hat.to_bits());
        assert_eq!(a.epsilon_hat.unwrap().to_bits(), b.epsilon_hat.unwrap().to_bits());
    }

    #[test]
    fn exhausted_iterations_report_failure() {
        let mut rng = RngSeed(4).trial(0);
        let obs = synth_statistical(1.0, 10, 0.0, 0.2 / SPEED_OF_LIGHT, true, &mut rng).unwrap();
        let em = ErrorModel::gaussian(&obs);
        let s = SolverSettings { max_iterations: 1, gradient_tolerance: 1e-300, ..SolverSettings::default() };
        match solve_sync_mle(&obs, &em, &s) {
            Err(Error::SolverFailed { best, .. }) => assert!(best.d_hat > 0.0 && !best.diagnostics.converged),
            other => panic!("{other:?}"),
        }
    }
}
