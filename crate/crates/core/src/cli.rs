//! Command-line frontend. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage, parse, config or I/O error |
//! | 2 | domain error (e.g. too few observations) |
//! | 3 | solver failure |
//! | 4 | a selftest check failed |

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ScenarioConfig;
use crate::error::Error;
use crate::est::{estimate_with, Estimate, Method};
use crate::obs::ObservationSet;
use crate::sim::{circle_rmse, room_heatmap, sweep_over_k, sweep_over_sigma, CellStatus, HeatmapMode, StatisticalSweep};

mod selftest;

const NS: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "mpc-ranging", version, about = "Distance estimation from multipath delay differences")]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config and `MPC_RANGING_OUT`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per sweep point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the distance from one file of delay differences.
    Estimate(EstimateArgs),
    /// Relative bias and RMSE against K or cσ/d; writes sweep_<axis>.csv.
    Sweep {
        #[arg(long, value_enum)]
        axis: SweepAxis,
    },
    /// Heatmap of distance error or common MPC count; writes heatmap.csv.
    Room {
        #[arg(long, value_enum, default_value = "error")]
        mode: RoomMode,
        /// Number of observers to use, taken in config order.
        #[arg(long, default_value_t = 3)]
        observers: usize,
        /// Estimator; defaults to the config's heatmap method.
        #[arg(long)]
        method: Option<Method>,
        /// Draw CRLB extraction errors.
        #[arg(long)]
        noise: bool,
    },
    /// RMSE on circles around node A; writes circle.csv.
    Circle {
        /// Draw CRLB extraction errors.
        #[arg(long)]
        noise: bool,
    },
    /// Reduced-size analytic and oracle checks.
    Selftest,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// One observation per line: `delta_ns[,sigma_ns]`; `#` starts a comment.
    input: PathBuf,
    #[arg(long, conflicts_with = "asynchronous")]
    sync: bool,
    #[arg(long = "async")]
    asynchronous: bool,
    /// Error standard deviation in ns for lines without one.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// `mle`, `umvue`, `noisy-mle` or a full method name such as
    /// `async_umvue`. Default: `umvue` for errorless input, else `noisy-mle`.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepAxis {
    K,
    Sigma,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoomMode {
    Error,
    Kcount,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Lib(Error::Domain(_)) => 2,
            Failure::Lib(Error::SolverFailed { .. }) => 3,
            Failure::Lib(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

impl clap::builder::ValueParserFactory for Method {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<Method>().map_err(|e| e.to_string()))
    }
}

/// Runs the command line `args` (including the program name), writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.exit_code()
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(dir) = cli.out {
        cfg.output_dir = dir;
    }
    if let Some(n) = cli.threads {
        cfg.threads = Some(n);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    cfg.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    let mut buf = Vec::new();
    let result = pool.install(|| {
        let out = &mut buf;
        match cli.command {
            Command::Estimate(args) => cmd_estimate(&cfg, &args, out).map(|()| 0),
            Command::Sweep { axis } => cmd_sweep(&cfg, axis, out).map(|()| 0),
            Command::Room { mode, observers, method, noise } => {
                cmd_room(&mut cfg, mode, observers, method, noise, out).map(|()| 0)
            }
            Command::Circle { noise } => cmd_circle(&cfg, noise, out).map(|()| 0),
            Command::Selftest => Ok(if selftest::run(out)? { 0 } else { 4 }),
        }
    });
    out.write_all(&buf)?;
    result
}

/// Reads `delta_ns[,sigma_ns]` lines. Returns delays and sigmas in seconds.
fn read_observations(path: &Path, default_sigma_ns: f64) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let text = fs::read_to_string(path)?;
    let parse_err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut deltas = Vec::new();
    let mut sigmas = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let number = |s: &str, what: &str| -> Result<f64, Error> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(i + 1, format!("{what} `{s}` is not a finite number")))
        };
        let (delta, sigma) = match fields.as_slice() {
            [d] => (number(d, "delta")?, default_sigma_ns),
            [d, s] => (number(d, "delta")?, number(s, "sigma")?),
            _ => return Err(parse_err(i + 1, format!("expected `delta_ns[,sigma_ns]`, got `{line}`")).into()),
        };
        if sigma < 0.0 {
            return Err(parse_err(i + 1, format!("sigma {sigma} is negative")).into());
        }
        deltas.push(delta * NS);
        sigmas.push(sigma * NS);
    }
    if deltas.is_empty() {
        return Err(Failure::Usage(format!("{}: no observations", path.display())));
    }
    Ok((deltas, sigmas))
}

fn pick_method(name: Option<&str>, sync: bool, errorless: bool) -> Result<Method, Failure> {
    let short = match name {
        None if errorless => "umvue",
        None => "noisy-mle",
        Some(n) => n,
    };
    let method = match (short, sync) {
        ("mle", true) => Method::SyncMle,
        ("mle", false) => Method::AsyncMle,
        ("umvue", true) => Method::SyncUmvue,
        ("umvue", false) => Method::AsyncUmvue,
        ("noisy-mle" | "general", true) => Method::SyncNoisyMle,
        ("noisy-mle" | "general", false) => Method::AsyncNoisyMle,
        (full, _) => full.parse().map_err(|_| Failure::Usage(format!("unknown method `{full}`")))?,
    };
    if method.is_async() == sync {
        return Err(Failure::Usage(format!(
            "method {method} does not match {} observations",
            if sync { "synchronous" } else { "asynchronous" }
        )));
    }
    Ok(method)
}

fn cmd_estimate(cfg: &ScenarioConfig, args: &EstimateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if !(args.sigma >= 0.0 && args.sigma.is_finite()) {
        return Err(Failure::Usage(format!("--sigma must be non-negative, got {}", args.sigma)));
    }
    let (deltas, sigmas) = read_observations(&args.input, args.sigma)?;
    let sync = if args.asynchronous {
        false
    } else {
        args.sync || cfg.sync
    };
    let errorless = sigmas.iter().all(|s| *s == 0.0);
    let method = pick_method(args.method.as_deref(), sync, errorless)?;
    let k = deltas.len();
    let obs = ObservationSet::new(deltas, sigmas, sync)?;
    let est = estimate_with(method, &obs, &cfg.solver)?;
    print_estimate(out, &est, k)?;
    Ok(())
}

fn print_estimate(out: &mut dyn Write, est: &Estimate, k: usize) -> std::io::Result<()> {
    writeln!(out, "method       {}", est.method)?;
    writeln!(out, "k            {k}")?;
    writeln!(out, "d_hat        {:.6} m", est.d_hat)?;
    if let Some(e) = est.epsilon_hat {
        writeln!(out, "epsilon_hat  {:.6} ns", e / NS)?;
    }
    let d = &est.diagnostics;
    writeln!(out, "converged    {}", d.converged)?;
    writeln!(out, "iterations   {}", d.iterations)?;
    if est.method.is_general() {
        writeln!(out, "loglik       {}", d.loglik)?;
    }
    writeln!(out, "starts_agree {}", d.starts_agree)
}

fn create_output_dir(cfg: &ScenarioConfig) -> Result<&Path, Failure> {
    fs::create_dir_all(&cfg.output_dir)?;
    Ok(&cfg.output_dir)
}

fn write_file(path: &Path, bytes: &[u8], out: &mut dyn Write) -> Result<(), Failure> {
    fs::write(path, bytes)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn cmd_sweep(cfg: &ScenarioConfig, axis: SweepAxis, out: &mut dyn Write) -> Result<(), Failure> {
    let s = StatisticalSweep::from_config(cfg);
    let result = match axis {
        SweepAxis::K => sweep_over_k(&s, cfg.sweep.sigma_ratio, &cfg.sweep.k_values)?,
        SweepAxis::Sigma => sweep_over_sigma(&s, cfg.sweep.k, &cfg.sweep.sigma_ratios)?,
    };
    let dir = create_output_dir(cfg)?;
    let name = result.axis.name();
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    write_file(&dir.join(format!("sweep_{name}.csv")), &csv, out)?;
    let xlabel = match axis {
        SweepAxis::K => "K",
        SweepAxis::Sigma => "c sigma / d",
    };
    let script = SWEEP_PLOT.replace("{name}", name).replace("{xlabel}", xlabel);
    write_file(&dir.join(format!("plot_sweep_{name}.py")), script.as_bytes(), out)?;
    for p in &result.points {
        for m in &p.methods {
            if m.failed + m.unconverged + m.flagged > 0 {
                writeln!(
                    out,
                    "note: {name}={} {}: {} failed, {} unconverged, {} with disagreeing starts",
                    p.value, m.method, m.failed, m.unconverged, m.flagged
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_room(
    cfg: &mut ScenarioConfig,
    mode: RoomMode,
    observers: usize,
    method: Option<Method>,
    noise: bool,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    if observers == 0 {
        return Err(Failure::Usage("--observers must be at least 1".into()));
    }
    cfg.observers = cfg.observer_subset(observers)?.to_vec();
    cfg.noise |= noise;
    let method = method.unwrap_or(cfg.heatmap_method);
    let mode = match mode {
        RoomMode::Error => HeatmapMode::Error,
        RoomMode::Kcount => HeatmapMode::KCount,
    };
    let map = room_heatmap(cfg, method, mode)?;
    let dir = create_output_dir(cfg)?;
    let mut csv = Vec::new();
    map.write_csv(&mut csv)?;
    write_file(&dir.join("heatmap.csv"), &csv, out)?;
    let label = match mode {
        HeatmapMode::Error => "distance error [m]",
        HeatmapMode::KCount => "common detected MPCs",
    };
    write_file(&dir.join("plot_heatmap.py"), HEATMAP_PLOT.replace("{label}", label).as_bytes(), out)?;
    let mut values: Vec<f64> = map.values().collect();
    values.sort_by(f64::total_cmp);
    if let Some(median) = values.get(values.len() / 2) {
        writeln!(out, "cells {} median {median}", map.cells.len())?;
    }
    let missing = map.cells.iter().filter(|c| c.value.is_none()).count();
    let unconverged = map.cells.iter().filter(|c| c.status == CellStatus::Unconverged).count();
    if missing + unconverged > 0 {
        writeln!(out, "note: {missing} cells without value, {unconverged} unconverged")?;
    }
    Ok(())
}

fn cmd_circle(cfg: &ScenarioConfig, noise: bool, out: &mut dyn Write) -> Result<(), Failure> {
    let result = circle_rmse(cfg, &cfg.circle.radii, &cfg.circle.methods, noise || cfg.noise)?;
    let dir = create_output_dir(cfg)?;
    let mut csv = Vec::new();
    result.write_circle_csv(&mut csv)?;
    write_file(&dir.join("circle.csv"), &csv, out)?;
    write_file(&dir.join("plot_circle.py"), CIRCLE_PLOT.as_bytes(), out)?;
    Ok(())
}

const SWEEP_PLOT: &str = r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("sweep_{name}.csv")))
fig, (ax_bias, ax_rmse) = plt.subplots(1, 2, figsize=(10, 4))
for method in dict.fromkeys(r["method"] for r in rows):
    sel = [r for r in rows if r["method"] == method]
    x = [float(r["axis"]) for r in sel]
    ax_bias.plot(x, [float(r["rel_bias"]) for r in sel], marker="o", label=method)
    ax_rmse.plot(x, [float(r["rel_rmse"]) for r in sel], marker="o", label=method)
ax_bias.set_ylabel("relative bias")
ax_rmse.set_ylabel("relative RMSE")
for ax in (ax_bias, ax_rmse):
    ax.set_xlabel("{xlabel}")
    ax.grid(True)
ax_rmse.legend()
fig.tight_layout()
fig.savefig("sweep_{name}.png", dpi=150)
"#;

const HEATMAP_PLOT: &str = r#"import csv
import matplotlib.pyplot as plt

rows = [r for r in csv.DictReader(open("heatmap.csv")) if r["value"]]
x = [float(r["x"]) for r in rows]
y = [float(r["y"]) for r in rows]
v = [float(r["value"]) for r in rows]
fig, ax = plt.subplots(figsize=(7, 6))
sc = ax.scatter(x, y, c=v, marker="s", s=12)
fig.colorbar(sc, label="{label}")
ax.set_aspect("equal")
ax.set_xlabel("x [m]")
ax.set_ylabel("y [m]")
fig.tight_layout()
fig.savefig("heatmap.png", dpi=150)
"#;

const CIRCLE_PLOT: &str = r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("circle.csv")))
fig, ax = plt.subplots()
for method in dict.fromkeys(r["method"] for r in rows):
    sel = [r for r in rows if r["method"] == method]
    ax.plot([float(r["d"]) for r in sel], [float(r["rmse"]) for r in sel], marker="o", label=method)
ax.set_xlabel("d [m]")
ax.set_ylabel("RMSE [m]")
ax.grid(True)
ax.legend()
fig.tight_layout()
fig.savefig("circle.png", dpi=150)
"#;

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("mpc-ranging").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn method_selection() {
        assert_eq!(pick_method(None, true, true).unwrap(), Method::SyncUmvue);
        assert_eq!(pick_method(None, false, false).unwrap(), Method::AsyncNoisyMle);
        assert_eq!(pick_method(Some("mle"), false, true).unwrap(), Method::AsyncMle);
        assert_eq!(pick_method(Some("sync_noisy_mle"), true, true).unwrap(), Method::SyncNoisyMle);
        assert!(pick_method(Some("sync_mle"), false, true).is_err());
        assert!(pick_method(Some("median"), true, true).is_err());
    }

    #[test]
    fn observation_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.txt");
        fs::write(&path, "# header\n1.5\n\n-2, 0.1  # trailing\n").unwrap();
        let (d, s) = read_observations(&path, 0.3).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d[0] - 1.5e-9).abs() < 1e-24 && (d[1] + 2e-9).abs() < 1e-24);
        assert!((s[0] - 0.3e-9).abs() < 1e-24 && (s[1] - 0.1e-9).abs() < 1e-24);

        fs::write(&path, "1\n2\nabc\n").unwrap();
        match read_observations(&path, 0.0) {
            Err(Failure::Lib(Error::Parse { line, .. })) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&path, "1,-0.5\n").unwrap();
        assert!(matches!(read_observations(&path, 0.0), Err(Failure::Lib(Error::Parse { line: 1, .. }))));
        fs::write(&path, "# nothing\n").unwrap();
        assert!(matches!(read_observations(&path, 0.0), Err(Failure::Usage(_))));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_args(&["estimate"]).0, 1);
        assert_eq!(run_args(&["sweep", "--axis", "x"]).0, 1);
        assert_eq!(run_args(&["--help"]).0, 0);
    }
}
