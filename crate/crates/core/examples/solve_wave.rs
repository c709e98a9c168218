//! Solve one steady wave and print its scalars and surface profile.
//!
//! cargo run --example solve_wave

use eqwave::flow::{flow_constants, surface_profile};
use eqwave::solver::{limiting_steepness, linear_speed, solve_wave, PhysicalParams};

fn main() -> eqwave::Result<()> {
    let params = PhysicalParams::new(100.0, 10.0, 5.0);
    println!(
        "L = {} m, d = {} m, H = {} m (cap H/L = {:.4})",
        params.wavelength,
        params.depth,
        params.wave_height,
        limiting_steepness(params.depth / params.wavelength)
    );
    let wave = solve_wave(&params)?;
    println!(
        "c        = {:.10} m/s (linear {:.10})",
        wave.c,
        -linear_speed(&params)
    );
    println!("phi_max  = {:.10} m^2/s", wave.phi_max);
    println!("|m|      = {:.10} m^2/s", wave.m_abs);
    println!("B        = {:.10} m^2/s^2", wave.bernoulli_b);
    println!("g_eff    = {:.10} m/s^2", wave.g_eff);
    println!("residual = {:.3e} m^2/s^2", wave.residual_norm);

    let k = flow_constants(&wave, 256, 32)?;
    println!(
        "min(u - c) over the fluid = {:.10} m/s at (q, p) = ({:.4}, {:.4})",
        k.delta, k.argmin.0, k.argmin.1
    );

    println!("\n      x (m)     eta (m)");
    for (x, eta) in surface_profile(&wave, 16)? {
        println!("{x:11.4} {eta:11.6}");
    }
    println!(
        "crest {:.6} m, trough {:.6} m",
        wave.crest_elevation(),
        wave.trough_elevation()
    );
    Ok(())
}
