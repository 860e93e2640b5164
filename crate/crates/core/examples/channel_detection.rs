//! SINR and delay CRLB of the paths to one observer as node B moves away
//! from node A.

use mpc_ranging::config::ScenarioConfig;
use mpc_ranging::geom::{Point3, SPEED_OF_LIGHT};
use mpc_ranging::obs::Scene;

fn main() -> mpc_ranging::Result<()> {
    let cfg = ScenarioConfig::default();
    let observer = &cfg.observers[..1];
    println!("{:>6} {:>4} {:>14} {:>14}", "d m", "K", "median cσ_k cm", "max cσ_k cm");
    for d in [0.5, 1.0, 1.5, 2.0] {
        let p_b = Point3::new(cfg.node_a.x, cfg.node_a.y + d, cfg.node_height);
        let scene = Scene::trace(&cfg.room, cfg.node_a, p_b, observer, cfg.max_bounces, &cfg.channel)?;
        let mut cs: Vec<f64> =
            scene.links[0].common().iter().map(|(a, b)| 100.0 * SPEED_OF_LIGHT * a.sigma_tau.hypot(b.sigma_tau)).collect();
        cs.sort_by(f64::total_cmp);
        println!("{d:>6} {:>4} {:>14.2} {:>14.2}", cs.len(), cs[cs.len() / 2], cs[cs.len() - 1]);
    }
    Ok(())
}
