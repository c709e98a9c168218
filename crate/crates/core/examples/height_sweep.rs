//! Continue a wave family in height and watch the speed, the Bernoulli
//! constant and the minimum relative speed change.
//!
//! cargo run --example height_sweep

use eqwave::flow::flow_constants;
use eqwave::solver::{continuation_path, limiting_steepness, PhysicalParams};

fn main() -> eqwave::Result<()> {
    for depth in [10.0, 50.0] {
        let params = PhysicalParams::new(100.0, depth, 0.0);
        let cap = limiting_steepness(depth / 100.0) * 100.0;
        let heights: Vec<f64> = (1..=8).map(|i| cap * 0.1 * i as f64).collect();
        println!("d = {depth} m (height cap {cap:.3} m)");
        println!(
            "{:>8} {:>14} {:>14} {:>14} {:>10}",
            "H (m)", "c (m/s)", "B (m^2/s^2)", "min(u-c)", "residual"
        );
        for wave in continuation_path(&params, &heights)? {
            let k = flow_constants(&wave, 128, 16)?;
            println!(
                "{:>8.4} {:>14.8} {:>14.8} {:>14.8} {:>10.2e}",
                wave.params.wave_height, wave.c, wave.bernoulli_b, k.delta, wave.residual_norm
            );
        }
        println!();
    }
    Ok(())
}
