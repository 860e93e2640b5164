//! Scenario configuration: room, node placement, channel, solver and
//! experiment settings, read from TOML.
//!
//! Dimensional values are written with a unit suffix, e.g. `"1.2m"`,
//! `"10cm"`, `"1GHz"`, `"5ns"`, `"0dB"`. Bare numbers are taken in SI base
//! units. Every key is optional; missing keys take the defaults below.
//!
//! ```toml
//! seed = 7
//! trials = 20000
//!
//! [room]
//! width = "7m"
//! depth = "6m"
//! height = "3m"
//!
//! [nodes]
//! a = ["4.5m", "2m", "1.2m"]
//! observers = [["1m", "2.5m", "1.2m"]]
//!
//! [channel]
//! bandwidth = "500MHz"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::est::Method;
use crate::geom::{Point3, Room};
use crate::mle::SolverSettings;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "MPC_RANGING_OUT";

/// Settings for the statistical sweeps over `K` and over `cσ/d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// True distance, m. Default 1 m; results are relative.
    pub distance: f64,
    /// `cσ/d` for the sweep over `K`. Default 0.5.
    pub sigma_ratio: f64,
    /// `K` values for the sweep over `K`.
    pub k_values: Vec<usize>,
    /// `K` for the sweep over `cσ/d`. Default 18.
    pub k: usize,
    /// `cσ/d` values for the sweep over `cσ/d`.
    pub sigma_ratios: Vec<f64>,
    /// Default: all six methods.
    pub methods: Vec<Method>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            distance: 1.0,
            sigma_ratio: 0.5,
            k_values: vec![2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64],
            k: 18,
            sigma_ratios: vec![0.0, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0],
            methods: Method::ALL.to_vec(),
        }
    }
}

/// Settings for distance-error sweeps on circles around node A.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleConfig {
    /// Circle radii, m. Default 0.25 m to 3 m in 0.25 m steps.
    pub radii: Vec<f64>,
    /// Equally spaced angles per circle. Default 360.
    pub angles: usize,
    /// Noise draws per angle when noise is enabled. Default 1000.
    pub draws: usize,
    /// Default: sync and async UMVUE.
    pub methods: Vec<Method>,
}

impl Default for CircleConfig {
    fn default() -> Self {
        Self {
            radii: (1..=12).map(|i| 0.25 * i as f64).collect(),
            angles: 360,
            draws: 1000,
            methods: vec![Method::SyncUmvue, Method::AsyncUmvue],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    /// Default: 7 m × 6 m × 3 m rectangle.
    pub room: Room,
    /// Static node A. Default (4.5, 2.0, 1.2) m.
    pub node_a: Point3,
    /// Observers. Default (1.0, 2.5, 1.2), (1.5, 5.0, 1.2) and
    /// (5.5, 5.0, 1.2) m; single-observer runs use the first.
    pub observers: Vec<Point3>,
    /// Height of node B on the heatmap grid and circles. Default 1.2 m.
    pub node_height: f64,
    /// Heatmap grid pitch. Default 10 cm.
    pub grid_pitch: f64,
    /// Maximum reflection order. Default 3.
    pub max_bounces: usize,
    /// Default: 1 GHz bandwidth, 0 dB SINR threshold, PDP with 5 ns rise,
    /// 20 ns decay and power 1.16e−6, 3 dB per reflection.
    pub channel: ChannelParams,
    pub solver: SolverSettings,
    /// Trials per point of the statistical sweeps. Default 10⁵.
    pub trials: usize,
    /// Default 1.
    pub seed: u64,
    /// Synchronous observers. Default true.
    pub sync: bool,
    /// Draw extraction errors with the CRLB standard deviation. Default false.
    pub noise: bool,
    /// Clock offset applied to asynchronous observations, s. Default 5 ns.
    pub clock_offset: f64,
    /// Method for heatmaps. Default sync UMVUE.
    pub heatmap_method: Method,
    /// Default: `$MPC_RANGING_OUT`, else `out`.
    pub output_dir: PathBuf,
    /// Worker thread cap. Default: all cores.
    pub threads: Option<usize>,
    pub sweep: SweepConfig,
    pub circle: CircleConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let output_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
        Self {
            room: Room::rectangular(7.0, 6.0, 3.0).expect("valid default room"),
            node_a: Point3::new(4.5, 2.0, 1.2),
            observers: vec![Point3::new(1.0, 2.5, 1.2), Point3::new(1.5, 5.0, 1.2), Point3::new(5.5, 5.0, 1.2)],
            node_height: 1.2,
            grid_pitch: 0.1,
            max_bounces: crate::geom::DEFAULT_MAX_BOUNCES,
            channel: ChannelParams::default(),
            solver: SolverSettings::default(),
            trials: 100_000,
            seed: 1,
            sync: true,
            noise: false,
            clock_offset: 5e-9,
            heatmap_method: Method::SyncUmvue,
            output_dir,
            threads: None,
            sweep: SweepConfig::default(),
            circle: CircleConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = raw.resolve()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The first `n` observers.
    pub fn observer_subset(&self, n: usize) -> Result<&[Point3]> {
        self.observers
            .get(..n)
            .ok_or_else(|| Error::Config(format!("{n} observers requested, {} configured", self.observers.len())))
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.solver.validate()?;
        let inside = |name: &str, p: Point3| {
            if self.room.contains(p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} {p} is outside the room")))
            }
        };
        inside("node a", self.node_a)?;
        for (i, o) in self.observers.iter().enumerate() {
            inside(&format!("observer {}", i + 1), *o)?;
        }
        if self.observers.is_empty() {
            return Err(Error::Config("at least one observer is required".into()));
        }
        if !(self.node_height > 0.0 && self.node_height < self.room.height()) {
            return Err(Error::Config(format!("node height {} m is outside the room", self.node_height)));
        }
        if !(self.grid_pitch > 0.0 && self.grid_pitch.is_finite()) {
            return Err(Error::Config("grid pitch must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.trials == 0 || self.circle.draws == 0 || self.circle.angles == 0 {
            return Err(Error::Config("trial, draw and angle counts must be at least 1".into()));
        }
        if !self.clock_offset.is_finite() {
            return Err(Error::Config("clock offset must be finite".into()));
        }
        let s = &self.sweep;
        if !(s.distance > 0.0 && s.distance.is_finite()) {
            return Err(Error::Config("sweep distance must be positive".into()));
        }
        if s.k == 0 || s.k_values.contains(&0) {
            return Err(Error::Config("K values must be at least 1".into()));
        }
        if std::iter::once(s.sigma_ratio).chain(s.sigma_ratios.iter().copied()).any(|r| !(r >= 0.0 && r.is_finite())) {
            return Err(Error::Config("sigma ratios must be non-negative".into()));
        }
        if self.circle.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config("circle radii must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Unit {
    Meter,
    Hertz,
    Second,
    Decibel,
}

impl Unit {
    fn symbol(self) -> &'static str {
        match self {
            Unit::Meter => "m",
            Unit::Hertz => "Hz",
            Unit::Second => "s",
            Unit::Decibel => "dB",
        }
    }
}

fn prefix_scale(prefix: &str) -> Option<f64> {
    Some(match prefix {
        "" => 1.0,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" | "µ" => 1e-6,
        "m" => 1e-3,
        "c" => 1e-2,
        "k" => 1e3,
        "M" => 1e6,
        "G" => 1e9,
        _ => return None,
    })
}

/// Parses `"<number><prefix><unit>"` into SI base units.
fn parse_quantity(text: &str, unit: Unit) -> std::result::Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            let exponent_sign = (c == '+' || c == '-') && text[..i].ends_with(['e', 'E']);
            !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exponent_sign || ((c == '-' || c == '+') && i == 0))
        })
        .map_or(text.len(), |(i, _)| i);
    let (number, suffix) = text.split_at(split);
    let value: f64 = number.trim().parse().map_err(|_| format!("`{text}` does not start with a number"))?;
    let suffix = suffix.trim();
    let symbol = unit.symbol();
    let prefix = suffix
        .strip_suffix(symbol)
        .ok_or_else(|| format!("`{text}` needs unit `{symbol}`"))?;
    let scale = match unit {
        Unit::Decibel if prefix.is_empty() => Some(1.0),
        Unit::Decibel => None,
        _ => prefix_scale(prefix),
    };
    let scale = scale.ok_or_else(|| format!("`{text}` has an unknown unit prefix `{prefix}`"))?;
    if !value.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(value * scale)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    fn si(&self, key: &str, unit: Unit) -> Result<f64> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(t) => parse_quantity(t, unit).map_err(|m| Error::Config(format!("{key}: {m}"))),
        }
    }
}

fn point(key: &str, q: &[Quantity]) -> Result<Point3> {
    let [x, y, z] = q else {
        return Err(Error::Config(format!("{key}: expected three coordinates")));
    };
    Ok(Point3::new(x.si(key, Unit::Meter)?, y.si(key, Unit::Meter)?, z.si(key, Unit::Meter)?))
}

fn methods(key: &str, names: &[String]) -> Result<Vec<Method>> {
    names
        .iter()
        .map(|n| n.parse::<Method>().map_err(|_| Error::Config(format!("{key}: unknown method `{n}`"))))
        .collect()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    trials: Option<usize>,
    sync: Option<bool>,
    noise: Option<bool>,
    clock_offset: Option<Quantity>,
    output_dir: Option<PathBuf>,
    threads: Option<usize>,
    #[serde(default)]
    room: RawRoom,
    #[serde(default)]
    nodes: RawNodes,
    #[serde(default)]
    channel: RawChannel,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    circle: RawCircle,
    #[serde(default)]
    heatmap: RawHeatmap,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoom {
    width: Option<Quantity>,
    depth: Option<Quantity>,
    height: Option<Quantity>,
    /// Floor-plan polygon; overrides width and depth.
    plan: Option<Vec<Vec<Quantity>>>,
    grid_pitch: Option<Quantity>,
    max_bounces: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNodes {
    a: Option<Vec<Quantity>>,
    observers: Option<Vec<Vec<Quantity>>>,
    height: Option<Quantity>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    bandwidth: Option<Quantity>,
    noise_density: Option<f64>,
    pulse_duration: Option<Quantity>,
    pdp_rise: Option<Quantity>,
    pdp_decay: Option<Quantity>,
    pdp_power: Option<f64>,
    sinr_threshold: Option<Quantity>,
    reflection_loss: Option<Quantity>,
    reference_snr: Option<Quantity>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    max_iterations: Option<usize>,
    gradient_tolerance: Option<f64>,
    parameter_tolerance: Option<f64>,
    multistart: Option<usize>,
    d_min: Option<Quantity>,
    start_agreement: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    distance: Option<Quantity>,
    sigma_ratio: Option<f64>,
    k_values: Option<Vec<usize>>,
    k: Option<usize>,
    sigma_ratios: Option<Vec<f64>>,
    methods: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircle {
    radii: Option<Vec<Quantity>>,
    angles: Option<usize>,
    draws: Option<usize>,
    methods: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeatmap {
    method: Option<String>,
}

impl RawConfig {
    fn resolve(self) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        let m = Unit::Meter;

        let r = &self.room;
        let height = r.height.as_ref().map(|q| q.si("room.height", m)).transpose()?.unwrap_or(3.0);
        cfg.room = match &r.plan {
            Some(plan) => {
                let vertices = plan
                    .iter()
                    .map(|v| match v.as_slice() {
                        [x, y] => Ok([x.si("room.plan", m)?, y.si("room.plan", m)?]),
                        _ => Err(Error::Config("room.plan: vertices need two coordinates".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Room::from_plan(vertices, height)?
            }
            None => {
                let width = r.width.as_ref().map(|q| q.si("room.width", m)).transpose()?.unwrap_or(7.0);
                let depth = r.depth.as_ref().map(|q| q.si("room.depth", m)).transpose()?.unwrap_or(6.0);
                Room::rectangular(width, depth, height)?
            }
        };
        if let Some(q) = &r.grid_pitch {
            cfg.grid_pitch = q.si("room.grid_pitch", m)?;
        }
        if let Some(n) = r.max_bounces {
            cfg.max_bounces = n;
        }

        if let Some(a) = &self.nodes.a {
            cfg.node_a = point("nodes.a", a)?;
        }
        if let Some(obs) = &self.nodes.observers {
            cfg.observers = obs.iter().map(|o| point("nodes.observers", o)).collect::<Result<_>>()?;
        }
        if let Some(q) = &self.nodes.height {
            cfg.node_height = q.si("nodes.height", m)?;
        }

        let c = &self.channel;
        let ch = &mut cfg.channel;
        let set = |slot: &mut f64, q: &Option<Quantity>, key: &str, unit: Unit| -> Result<()> {
            if let Some(q) = q {
                *slot = q.si(key, unit)?;
            }
            Ok(())
        };
        set(&mut ch.bandwidth, &c.bandwidth, "channel.bandwidth", Unit::Hertz)?;
        set(&mut ch.pdp_rise, &c.pdp_rise, "channel.pdp_rise", Unit::Second)?;
        set(&mut ch.pdp_decay, &c.pdp_decay, "channel.pdp_decay", Unit::Second)?;
        set(&mut ch.sinr_threshold_db, &c.sinr_threshold, "channel.sinr_threshold", Unit::Decibel)?;
        set(&mut ch.reflection_loss_db, &c.reflection_loss, "channel.reflection_loss", Unit::Decibel)?;
        set(&mut ch.reference_snr_db, &c.reference_snr, "channel.reference_snr", Unit::Decibel)?;
        if let Some(q) = &c.pulse_duration {
            ch.pulse_duration = Some(q.si("channel.pulse_duration", Unit::Second)?);
        }
        if let Some(v) = c.noise_density {
            ch.noise_density = v;
        }
        if let Some(v) = c.pdp_power {
            ch.pdp_power = v;
        }

        let s = &self.solver;
        let sv = &mut cfg.solver;
        if let Some(v) = s.max_iterations {
            sv.max_iterations = v;
        }
        if let Some(v) = s.gradient_tolerance {
            sv.gradient_tolerance = v;
        }
        if let Some(v) = s.parameter_tolerance {
            sv.parameter_tolerance = v;
        }
        if let Some(v) = s.multistart {
            sv.multistart = v;
        }
        if let Some(q) = &s.d_min {
            sv.d_min = q.si("solver.d_min", m)?;
        }
        if let Some(v) = s.start_agreement {
            sv.start_agreement = v;
        }

        let w = &self.sweep;
        if let Some(q) = &w.distance {
            cfg.sweep.distance = q.si("sweep.distance", m)?;
        }
        if let Some(v) = w.sigma_ratio {
            cfg.sweep.sigma_ratio = v;
        }
        if let Some(v) = &w.k_values {
            cfg.sweep.k_values = v.clone();
        }
        if let Some(v) = w.k {
            cfg.sweep.k = v;
        }
        if let Some(v) = &w.sigma_ratios {
            cfg.sweep.sigma_ratios = v.clone();
        }
        if let Some(v) = &w.methods {
            cfg.sweep.methods = methods("sweep.methods", v)?;
        }

        let ci = &self.circle;
        if let Some(v) = &ci.radii {
            cfg.circle.radii = v.iter().map(|q| q.si("circle.radii", m)).collect::<Result<_>>()?;
        }
        if let Some(v) = ci.angles {
            cfg.circle.angles = v;
        }
        if let Some(v) = ci.draws {
            cfg.circle.draws = v;
        }
        if let Some(v) = &ci.methods {
            cfg.circle.methods = methods("circle.methods", v)?;
        }

        if let Some(name) = &self.heatmap.method {
            cfg.heatmap_method = name.parse().map_err(|_| Error::Config(format!("heatmap.method: unknown method `{name}`")))?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.sync {
            cfg.sync = v;
        }
        if let Some(v) = self.noise {
            cfg.noise = v;
        }
        if let Some(q) = &self.clock_offset {
            cfg.clock_offset = q.si("clock_offset", Unit::Second)?;
        }
        if let Some(p) = self.output_dir {
            cfg.output_dir = p;
        }
        if let Some(n) = self.threads {
            cfg.threads = Some(n);
        }
        Ok(cfg)
    }
}
