use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;

use super::{evaluate, run_batched, Axis, Outcome, SweepPoint, SweepResult, Truth};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::est::{estimate_with, Method};
use crate::geom::Point3;
use crate::obs::{synth_from_scene, RngSeed, Scene};

const HEATMAP_STREAM: u64 = 0x4845_4154;
const CIRCLE_STREAM: u64 = 0x4349_5243;

/// Keeps grid points and circle samples off the walls.
const WALL_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapMode {
    /// Absolute distance error `|d̂ − d|`, m.
    Error,
    /// Number of common detected MPCs.
    KCount,
}

/// Why a cell has no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    NoCommonMpc,
    EstimatorFailed,
    /// The solver did not converge; the value is its best iterate.
    Unconverged,
}

impl CellStatus {
    pub fn code(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::NoCommonMpc => "no_common_mpc",
            CellStatus::EstimatorFailed => "estimator_failed",
            CellStatus::Unconverged => "unconverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapCell {
    pub x: f64,
    pub y: f64,
    /// Common detected MPCs over all observers.
    pub k: usize,
    pub value: Option<f64>,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapResult {
    pub mode: HeatmapMode,
    pub method: Method,
    pub observers: Vec<Point3>,
    pub pitch: f64,
    pub cells: Vec<HeatmapCell>,
}

impl HeatmapResult {
    /// `x,y,value,status`; missing values are left empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "value", "status"])?;
        for c in &self.cells {
            let value = c.value.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([c.x.to_string(), c.y.to_string(), value, c.status.code().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Values of cells that have one.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().filter_map(|c| c.value)
    }
}

/// Evaluates one heatmap cell with node B at `p_b`. `index` selects the
/// noise stream.
pub fn heatmap_cell(
    cfg: &ScenarioConfig,
    p_b: Point3,
    method: Method,
    mode: HeatmapMode,
    index: u64,
) -> Result<HeatmapCell> {
    let scene = Scene::trace(&cfg.room, cfg.node_a, p_b, &cfg.observers, cfg.max_bounces, &cfg.channel)?;
    let k = scene.common_count();
    let cell = |value, status| HeatmapCell { x: p_b.x, y: p_b.y, k, value, status };
    if mode == HeatmapMode::KCount {
        return Ok(cell(Some(k as f64), CellStatus::Ok));
    }
    if k == 0 {
        return Ok(cell(None, CellStatus::NoCommonMpc));
    }
    let mut rng = RngSeed(cfg.seed).derive(HEATMAP_STREAM).trial(index);
    let mut obs = synth_from_scene(&scene, 0.0, cfg.noise, &mut rng)?;
    if !cfg.noise {
        obs = obs.with_sigma(0.0)?;
    }
    if method.is_async() {
        obs = obs.with_offset(cfg.clock_offset);
    }
    let d = scene.distance();
    Ok(match estimate_with(method, &obs, &cfg.solver) {
        Ok(e) => cell(Some((e.d_hat - d).abs()), CellStatus::Ok),
        Err(Error::SolverFailed { best, .. }) => cell(Some((best.d_hat - d).abs()), CellStatus::Unconverged),
        Err(_) => cell(None, CellStatus::EstimatorFailed),
    })
}

/// Heatmap over a grid of node-B positions at `cfg.node_height`, covering
/// the room interior with pitch `cfg.grid_pitch`. Uses all of
/// `cfg.observers`.
pub fn room_heatmap(cfg: &ScenarioConfig, method: Method, mode: HeatmapMode) -> Result<HeatmapResult> {
    cfg.validate()?;
    let ([x0, y0], [x1, y1]) = cfg.room.plan_bounds();
    let pitch = cfg.grid_pitch;
    let nx = ((x1 - x0) / pitch + 1e-9).floor() as usize;
    let ny = ((y1 - y0) / pitch + 1e-9).floor() as usize;
    let points: Vec<Point3> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| Point3::new(x0 + (i as f64 + 0.5) * pitch, y0 + (j as f64 + 0.5) * pitch, cfg.node_height))
        .filter(|p| cfg.room.contains_with_margin(*p, WALL_MARGIN))
        .collect();
    let cells = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| heatmap_cell(cfg, *p, method, mode, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(HeatmapResult { mode, method, observers: cfg.observers.clone(), pitch, cells })
}

/// Error statistics over node-B positions on circles of the given radii
/// around node A, at `cfg.circle.angles` equally spaced angles. Positions
/// outside the room are skipped. With `noise`, each position gets
/// `cfg.circle.draws` extraction-error draws; otherwise one errorless
/// evaluation.
pub fn circle_rmse(cfg: &ScenarioConfig, radii: &[f64], methods: &[Method], noise: bool) -> Result<SweepResult> {
    cfg.validate()?;
    if methods.is_empty() {
        return Err(Error::domain("no methods selected"));
    }
    let draws = if noise { cfg.circle.draws } else { 1 };
    let points = radii
        .iter()
        .map(|&r| {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::domain(format!("circle radius must be positive, got {r}")));
            }
            let positions: Vec<Point3> = (0..cfg.circle.angles)
                .map(|j| {
                    let phi = TAU * j as f64 / cfg.circle.angles as f64;
                    Point3::new(cfg.node_a.x + r * phi.cos(), cfg.node_a.y + r * phi.sin(), cfg.node_height)
                })
                .filter(|p| cfg.room.contains_with_margin(*p, WALL_MARGIN))
                .collect();
            if positions.is_empty() {
                return Err(Error::domain(format!("circle of radius {r} m lies outside the room")));
            }
            let scenes = positions
                .par_iter()
                .map(|&p| Scene::trace(&cfg.room, cfg.node_a, p, &cfg.observers, cfg.max_bounces, &cfg.channel))
                .collect::<Result<Vec<_>>>()?;
            let seed = RngSeed(cfg.seed).derive(CIRCLE_STREAM ^ r.to_bits());
            let stats = run_batched(scenes.len(), methods, |i| {
                let scene = &scenes[i];
                let truth = Truth { distance: scene.distance(), offset: cfg.clock_offset };
                let mut rng = seed.trial(i as u64);
                (0..draws)
                    .map(|_| match synth_from_scene(scene, 0.0, noise, &mut rng) {
                        Ok(obs) => {
                            let obs = if noise { obs } else { obs.with_sigma(0.0).expect("zero sigma") };
                            evaluate(methods, &obs, truth, &cfg.solver)
                        }
                        Err(_) => vec![Outcome::Failed; methods.len()],
                    })
                    .collect()
            });
            Ok(SweepPoint { value: r, distance: r, methods: stats })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { axis: Axis::Distance, points, trials: draws, seed: cfg.seed })
}
