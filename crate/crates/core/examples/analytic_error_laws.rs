//! Analytic bias and standard deviation of the closed-form estimators
//! against K, relative to the distance.

use mpc_ranging::est::{bias_async, bias_sync, std_async_analytic, std_offset_analytic, std_sync_analytic};

fn main() {
    println!("{:>4} {:>10} {:>10} {:>11} {:>11} {:>12}", "K", "sync bias", "async bias", "sync std", "async std", "offset std");
    for k in [2, 3, 5, 10, 20, 50, 100] {
        println!(
            "{k:>4} {:>9.2}% {:>9.2}% {:>10.2}% {:>10.2}% {:>9.3} ns",
            100.0 * bias_sync(1.0, k),
            100.0 * bias_async(1.0, k),
            100.0 * std_sync_analytic(1.0, k),
            100.0 * std_async_analytic(1.0, k),
            1e9 * std_offset_analytic(1.0, k),
        );
    }
    println!("\noffset std is for d = 1 m and scales with d");
}
