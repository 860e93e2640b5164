//! Loads a scenario from TOML with unit-suffixed values and prints the
//! resolved settings.

use mpc_ranging::config::ScenarioConfig;

const SCENARIO: &str = r#"
seed = 11
trials = 20000

[room]
plan = [["0m", "0m"], ["8m", "0m"], ["8m", "4m"], ["4m", "4m"], ["4m", "7m"], ["0m", "7m"]]
height = "3m"
grid_pitch = "20cm"

[nodes]
a = ["2m", "2m", "1.2m"]
observers = [["6m", "1m", "1.2m"], ["1m", "6m", "1.2m"]]

[channel]
bandwidth = "500MHz"
sinr_threshold = "3dB"
"#;

fn main() -> mpc_ranging::Result<()> {
    let cfg = ScenarioConfig::from_toml(SCENARIO)?;
    println!("room plan {:?}, height {} m, convex: {}", cfg.room.plan(), cfg.room.height(), cfg.room.is_convex());
    println!("node A {}, observers {:?}", cfg.node_a, cfg.observers.iter().map(|o| o.to_string()).collect::<Vec<_>>());
    println!("bandwidth {} Hz, threshold {} dB, grid pitch {} m", cfg.channel.bandwidth, cfg.channel.sinr_threshold_db, cfg.grid_pitch);
    println!("seed {}, trials {}", cfg.seed, cfg.trials);
    match ScenarioConfig::from_toml("[channel]\nbandwidth = \"1GB\"") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}
