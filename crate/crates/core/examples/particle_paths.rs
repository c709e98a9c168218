//! Integrate fluid particles through one period and compare with the
//! quadrature period, then check the one-wavelength pattern shift.
//!
//! cargo run --example particle_paths

use eqwave::diagnostics::{period_t, streamline_length};
use eqwave::lagrangian::{integrate_particle, pattern_shift_check, DEFAULT_TOL};
use eqwave::solver::{solve_wave, PhysicalParams};

fn main() -> eqwave::Result<()> {
    let wave = solve_wave(&PhysicalParams::new(100.0, 10.0, 5.0))?;
    println!(
        "{:>6} {:>18} {:>18} {:>10} {:>14}",
        "p/|m|", "ODE period (s)", "T(p) (s)", "rel", "arclength (m)"
    );
    for f in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let p = f * wave.m_abs;
        let tr = integrate_particle(&wave, 0.1 * wave.phi_max, p, DEFAULT_TOL)?;
        let t = period_t(&wave, p, 512)?;
        let l = streamline_length(&wave, p, 512)?;
        println!(
            "{f:>6.2} {:>18.12} {t:>18.12} {:>10.2e} {:>14.8} (L(p) = {l:.8})",
            tr.measured_period,
            (tr.measured_period - t).abs() / t,
            tr.arclength
        );
    }

    let p = 0.5 * wave.m_abs;
    let shift = pattern_shift_check(&wave, p, DEFAULT_TOL)?;
    println!(
        "\nafter one period at p = |m|/2: advance {:.10} m (L = {}), vertical gap {:.2e} m, fixed-frame drift {:.6} m, passed {}",
        shift.advance, shift.wavelength, shift.vertical_gap, shift.fixed_advance, shift.passed
    );

    let tr = integrate_particle(&wave, 0.0, p, DEFAULT_TOL)?;
    println!("\n{:>12} {:>12} {:>12}", "t (s)", "x (m)", "z (m)");
    let step = (tr.points.len() / 10).max(1);
    for pt in tr.points.iter().step_by(step) {
        println!("{:>12.6} {:>12.6} {:>12.6}", pt.t, pt.x, pt.z);
    }
    Ok(())
}
