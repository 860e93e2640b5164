//! Distance-error and common-MPC-count maps over the default room with
//! one and three observers.

use mpc_ranging::config::ScenarioConfig;
use mpc_ranging::est::Method;
use mpc_ranging::sim::{room_heatmap, HeatmapMode};

fn quantiles(mut v: Vec<f64>) -> (f64, f64, f64) {
    v.sort_by(f64::total_cmp);
    let q = |f: f64| v[((v.len() - 1) as f64 * f) as usize];
    (q(0.1), q(0.5), q(0.9))
}

fn main() -> mpc_ranging::Result<()> {
    let mut cfg = ScenarioConfig::default();
    cfg.grid_pitch = 0.25;
    for n in [1, 3] {
        let mut c = cfg.clone();
        c.observers = cfg.observer_subset(n)?.to_vec();
        let k = room_heatmap(&c, Method::SyncUmvue, HeatmapMode::KCount)?;
        let err = room_heatmap(&c, Method::SyncUmvue, HeatmapMode::Error)?;
        let (k10, k50, k90) = quantiles(k.values().collect());
        let (e10, e50, e90) = quantiles(err.values().collect());
        println!("{n} observer(s), {} cells", k.cells.len());
        println!("  common MPCs      p10 {k10:.0}  median {k50:.0}  p90 {k90:.0}");
        println!("  sync UMVUE error p10 {:.1} cm  median {:.1} cm  p90 {:.1} cm", 100.0 * e10, 100.0 * e50, 100.0 * e90);
    }
    cfg.noise = true;
    let noisy = room_heatmap(&cfg, Method::SyncNoisyMle, HeatmapMode::Error)?;
    let (_, e50, e90) = quantiles(noisy.values().collect());
    println!("3 observers, CRLB noise, general-case MLE: median {:.1} cm, p90 {:.1} cm", 100.0 * e50, 100.0 * e90);
    Ok(())
}
