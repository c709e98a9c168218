//! Compare the nonlinear speed with the linear and third-order Stokes
//! predictions and estimate the convergence order in steepness.
//!
//! cargo run --example stokes_comparison

use eqwave::solver::{linear_speed, solve_wave, stokes_speed, PhysicalParams};

fn main() -> eqwave::Result<()> {
    let steepness = [0.0025, 0.005, 0.01, 0.02, 0.04];
    for depth in [10.0, 20.0, 50.0] {
        println!("d = {depth} m");
        println!(
            "{:>8} {:>16} {:>16} {:>16} {:>11}",
            "H/L", "|c| (m/s)", "linear", "Stokes 3", "diff"
        );
        let mut logs = Vec::new();
        for s in steepness {
            let params = PhysicalParams::new(100.0, depth, 100.0 * s);
            let c = solve_wave(&params)?.c.abs();
            let stokes = stokes_speed(&params, 3)?.abs();
            let diff = (c - stokes).abs();
            println!(
                "{s:>8} {c:>16.12} {:>16.12} {stokes:>16.12} {diff:>11.3e}",
                linear_speed(&params)
            );
            logs.push((s.ln(), diff.ln()));
        }
        for w in logs.windows(2) {
            print!(" {:.2}", (w[1].1 - w[0].1) / (w[1].0 - w[0].0));
        }
        println!("  <- local orders of |c - c_stokes3|\n");
    }
    Ok(())
}
