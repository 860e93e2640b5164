//! Closed-form distance estimates from errorless delay differences, for
//! synchronous and asynchronous observers.

use mpc_ranging::est::{mle_async, mle_sync, umvue_async, umvue_sync};
use mpc_ranging::obs::{synth_statistical, RngSeed};

fn main() -> mpc_ranging::Result<()> {
    let d = 2.0;
    let epsilon = 4e-9;
    let mut rng = RngSeed(42).trial(0);
    let sync = synth_statistical(d, 20, 0.0, 0.0, true, &mut rng)?;
    let asy = synth_statistical(d, 20, epsilon, 0.0, false, &mut rng)?;

    println!("true distance {d} m, K = 20");
    println!("sync  MLE   {:.4} m", mle_sync(&sync)?.d_hat);
    println!("sync  UMVUE {:.4} m", umvue_sync(&sync)?.d_hat);
    let m = mle_async(&asy)?;
    let u = umvue_async(&asy)?;
    println!("async MLE   {:.4} m", m.d_hat);
    println!("async UMVUE {:.4} m, clock offset {:.3} ns (true {:.3} ns)", u.d_hat, u.epsilon_hat.unwrap_or(f64::NAN) * 1e9, epsilon * 1e9);
    Ok(())
}
