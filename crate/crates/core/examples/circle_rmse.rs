//! RMSE on circles around node A, errorless and with CRLB extraction
//! errors.

use mpc_ranging::config::ScenarioConfig;
use mpc_ranging::est::Method;
use mpc_ranging::sim::circle_rmse;

fn main() -> mpc_ranging::Result<()> {
    let mut cfg = ScenarioConfig::default();
    cfg.circle.angles = 120;
    cfg.circle.draws = 5;
    let radii = [0.5, 1.0, 2.0, 3.0];
    let clean = circle_rmse(&cfg, &radii, &[Method::SyncUmvue, Method::AsyncUmvue], false)?;
    let noisy = circle_rmse(&cfg, &radii, &[Method::SyncNoisyMle, Method::AsyncNoisyMle], true)?;
    println!("{:>5} {:<16} {:>9} {:>9}", "d m", "method", "RMSE cm", "rel RMSE");
    for result in [&clean, &noisy] {
        for p in &result.points {
            for m in &p.methods {
                println!("{:>5} {:<16} {:>9.2} {:>8.2}%", p.value, m.method, 100.0 * m.rel_rmse() * p.distance, 100.0 * m.rel_rmse());
            }
        }
    }
    Ok(())
}
