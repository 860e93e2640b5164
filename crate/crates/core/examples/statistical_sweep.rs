//! Monte Carlo sweep of relative bias and RMSE over K at cσ/d = 0.5 for
//! all six estimators.

use mpc_ranging::config::ScenarioConfig;
use mpc_ranging::sim::{sweep_over_k, StatisticalSweep};

fn main() -> mpc_ranging::Result<()> {
    let mut s = StatisticalSweep::from_config(&ScenarioConfig::default());
    s.trials = 5000;
    let result = sweep_over_k(&s, 0.5, &[4, 8, 16, 32])?;
    println!("{:>4} {:<16} {:>9} {:>9}", "K", "method", "rel bias", "rel RMSE");
    for p in &result.points {
        for m in &p.methods {
            println!("{:>4} {:<16} {:>9.4} {:>9.4}", p.value, m.method, m.rel_bias(), m.rel_rmse());
        }
    }
    Ok(())
}
