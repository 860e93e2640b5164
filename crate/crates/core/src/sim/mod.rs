//! Monte Carlo experiment drivers: statistical sweeps over `K` and `cσ/d`,
//! ray-traced room heatmaps and distance-error sweeps on circles.
//!
//! Trials run in parallel, one RNG stream per trial. Results are reduced in
//! trial order with compensated summation, so they do not depend on the
//! number of worker threads.

mod room;
mod stats;

use std::io::Write;

use rayon::prelude::*;

pub use room::{circle_rmse, heatmap_cell, room_heatmap, CellStatus, HeatmapCell, HeatmapMode, HeatmapResult};
pub use stats::ErrorStats;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::est::{estimate_with, Method};
use crate::geom::SPEED_OF_LIGHT;
use crate::mle::SolverSettings;
use crate::obs::{synth_statistical, ObservationSet, RngSeed};
use stats::Accumulator;

/// Trials evaluated per parallel batch before reducing.
const BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Number of common MPCs.
    K,
    /// Normalized error level `cσ/d`.
    SigmaRatio,
    /// True distance, m.
    Distance,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::K => "k",
            Axis::SigmaRatio => "sigma",
            Axis::Distance => "d",
        }
    }
}

/// Error statistics of one method at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodStats {
    pub method: Method,
    /// Relative distance error `d̂/d − 1`.
    pub distance: ErrorStats,
    /// Clock-offset error `ε̂ − ε` in seconds, for asynchronous methods.
    pub offset: Option<ErrorStats>,
    /// Trials where the method produced no estimate (e.g. `K < 2` for the
    /// asynchronous methods).
    pub failed: usize,
    /// Solver runs that did not converge; their best iterate is counted.
    pub unconverged: usize,
    /// Solver runs whose multistarts disagreed.
    pub flagged: usize,
}

impl MethodStats {
    pub fn rel_bias(&self) -> f64 {
        self.distance.mean
    }

    pub fn rel_rmse(&self) -> f64 {
        self.distance.rmse
    }

    pub fn rel_std(&self) -> f64 {
        self.distance.std
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    /// True distance at this point, m.
    pub distance: f64,
    pub methods: Vec<MethodStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
    /// Trials per point (noise draws per position for circle sweeps).
    pub trials: usize,
    pub seed: u64,
}

impl SweepResult {
    pub fn stats(&self, value: f64, method: Method) -> Option<&MethodStats> {
        self.points
            .iter()
            .find(|p| p.value == value)
            .and_then(|p| p.methods.iter().find(|m| m.method == method))
    }

    /// `axis,method,rel_bias,rel_rmse,trials,seed`, one row per point and method.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis", "method", "rel_bias", "rel_rmse", "trials", "seed"])?;
        for p in &self.points {
            for m in &p.methods {
                w.write_record([
                    p.value.to_string(),
                    m.method.to_string(),
                    m.rel_bias().to_string(),
                    m.rel_rmse().to_string(),
                    self.trials.to_string(),
                    self.seed.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `d,method,rmse,rel_rmse` for circle sweeps; RMSE in meters.
    pub fn write_circle_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["d", "method", "rmse", "rel_rmse"])?;
        for p in &self.points {
            for m in &p.methods {
                w.write_record([
                    p.value.to_string(),
                    m.method.to_string(),
                    (m.rel_rmse() * p.distance).to_string(),
                    m.rel_rmse().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Common settings of the statistical sweeps.
#[derive(Debug, Clone)]
pub struct StatisticalSweep {
    /// True distance, m.
    pub distance: f64,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Clock offset added for the asynchronous methods, s.
    pub clock_offset: f64,
    pub solver: SolverSettings,
}

impl StatisticalSweep {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            distance: cfg.sweep.distance,
            trials: cfg.trials,
            methods: cfg.sweep.methods.clone(),
            seed: cfg.seed,
            clock_offset: cfg.clock_offset,
            solver: cfg.solver.clone(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("need at least one trial"));
        }
        if self.methods.is_empty() {
            return Err(Error::domain("no methods selected"));
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::domain(format!("distance must be positive, got {}", self.distance)));
        }
        Ok(())
    }

    fn point(&self, value: f64, k: usize, sigma_ratio: f64) -> Result<SweepPoint> {
        if k == 0 {
            return Err(Error::domain("K must be at least 1"));
        }
        let d = self.distance;
        let sigma = sigma_ratio * d / SPEED_OF_LIGHT;
        let seed = RngSeed(self.seed).derive(value.to_bits());
        let truth = Truth { distance: d, offset: self.clock_offset };
        let methods = run_batched(self.trials, &self.methods, |t| {
            let mut rng = seed.trial(t as u64);
            let base = synth_statistical(d, k, 0.0, sigma, true, &mut rng).expect("validated sweep parameters");
            vec![evaluate(&self.methods, &base, truth, &self.solver)]
        });
        Ok(SweepPoint { value, distance: d, methods })
    }
}

/// Relative bias and RMSE against `K` at a fixed `cσ/d`.
pub fn sweep_over_k(s: &StatisticalSweep, sigma_ratio: f64, k_values: &[usize]) -> Result<SweepResult> {
    s.check()?;
    let points = k_values.iter().map(|&k| s.point(k as f64, k, sigma_ratio)).collect::<Result<_>>()?;
    Ok(SweepResult { axis: Axis::K, points, trials: s.trials, seed: s.seed })
}

/// Relative bias and RMSE against `cσ/d` at a fixed `K`.
pub fn sweep_over_sigma(s: &StatisticalSweep, k: usize, sigma_ratios: &[f64]) -> Result<SweepResult> {
    s.check()?;
    if sigma_ratios.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(Error::domain("sigma ratios must be non-negative"));
    }
    let points = sigma_ratios.iter().map(|&r| s.point(r, k, r)).collect::<Result<_>>()?;
    Ok(SweepResult { axis: Axis::SigmaRatio, points, trials: s.trials, seed: s.seed })
}

#[derive(Debug, Clone, Copy)]
struct Truth {
    distance: f64,
    offset: f64,
}

/// Result of one method on one trial.
#[derive(Debug, Clone, Copy)]
enum Outcome {
    Estimate { rel_error: f64, offset_error: Option<f64>, converged: bool, agreed: bool },
    Failed,
}

/// Applies each method to `base` (synchronous) or to `base` shifted by the
/// clock offset (asynchronous methods).
fn evaluate(methods: &[Method], base: &ObservationSet, truth: Truth, solver: &SolverSettings) -> Vec<Outcome> {
    let shifted = methods.iter().any(|m| m.is_async()).then(|| base.clone().with_offset(truth.offset));
    methods
        .iter()
        .map(|&m| {
            let obs = if m.is_async() { shifted.as_ref().expect("shifted set") } else { base };
            let est = match estimate_with(m, obs, solver) {
                Ok(e) => e,
                Err(Error::SolverFailed { best, .. }) => *best,
                Err(_) => return Outcome::Failed,
            };
            Outcome::Estimate {
                rel_error: (est.d_hat - truth.distance) / truth.distance,
                offset_error: est.epsilon_hat.map(|e| e - truth.offset),
                converged: est.diagnostics.converged,
                agreed: est.diagnostics.starts_agree,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
struct MethodAccumulator {
    distance: Accumulator,
    offset: Accumulator,
    failed: usize,
    unconverged: usize,
    flagged: usize,
}

impl MethodAccumulator {
    fn push(&mut self, o: &Outcome) {
        match *o {
            Outcome::Estimate { rel_error, offset_error, converged, agreed } => {
                self.distance.push(rel_error);
                if let Some(e) = offset_error {
                    self.offset.push(e);
                }
                self.unconverged += usize::from(!converged);
                self.flagged += usize::from(!agreed);
            }
            Outcome::Failed => self.failed += 1,
        }
    }

    fn finish(&self, method: Method) -> MethodStats {
        MethodStats {
            method,
            distance: self.distance.stats(),
            offset: method.is_async().then(|| self.offset.stats()),
            failed: self.failed,
            unconverged: self.unconverged,
            flagged: self.flagged,
        }
    }
}

/// Runs `items` work items in parallel batches. Each item yields any number
/// of trials, each with one outcome per method; outcomes are reduced in
/// item order.
fn run_batched<F>(items: usize, methods: &[Method], work: F) -> Vec<MethodStats>
where
    F: Fn(usize) -> Vec<Vec<Outcome>> + Sync,
{
    let mut acc = vec![MethodAccumulator::default(); methods.len()];
    let mut start = 0;
    while start < items {
        let end = (start + BATCH).min(items);
        let batch: Vec<Vec<Vec<Outcome>>> = (start..end).into_par_iter().map(&work).collect();
        for trial in batch.iter().flatten() {
            for (a, o) in acc.iter_mut().zip(trial) {
                a.push(o);
            }
        }
        start = end;
    }
    acc.iter().zip(methods).map(|(a, &m)| a.finish(m)).collect()
}
