//! Traces all paths up to third order from node A to an observer in the
//! default room and lists the detected ones with their SINR and CRLB.

use mpc_ranging::channel::detect;
use mpc_ranging::config::ScenarioConfig;
use mpc_ranging::geom::{trace_paths, SPEED_OF_LIGHT};

fn main() -> mpc_ranging::Result<()> {
    let cfg = ScenarioConfig::default();
    let observer = cfg.observers[0];
    let paths = trace_paths(cfg.node_a, observer, &cfg.room, cfg.max_bounces, &cfg.channel)?;
    let detected = detect(&paths, &cfg.channel);
    println!("node A {} -> observer {}", cfg.node_a, observer);
    println!("{} paths traced, {} detected at SINR >= {} dB\n", paths.len(), detected.len(), cfg.channel.sinr_threshold_db);
    println!("{:>10} {:>8} {:>9} {:>8}  path", "length m", "bounces", "SINR dB", "cσ cm");
    for d in &detected {
        println!(
            "{:>10.3} {:>8} {:>9.1} {:>8.2}  {}",
            SPEED_OF_LIGHT * d.mpc.delay,
            d.mpc.bounces,
            d.sinr_db,
            100.0 * SPEED_OF_LIGHT * d.sigma_tau,
            d.mpc.path
        );
    }
    Ok(())
}
