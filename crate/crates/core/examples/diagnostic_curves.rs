//! Evaluate the streamline functionals on a p-grid and check their shapes.
//!
//! cargo run --example diagnostic_curves

use eqwave::diagnostics::{uniform_p_grid, CurveBook, Functional, QuadratureSettings};
use eqwave::harness::{check_convex, check_log_convex, check_monotone, Direction};
use eqwave::solver::{solve_wave, PhysicalParams};

fn main() -> eqwave::Result<()> {
    let wave = solve_wave(&PhysicalParams::new(100.0, 10.0, 5.0))?;
    let grid = uniform_p_grid(&wave, 65);
    let book = CurveBook::new(&wave, &grid, QuadratureSettings::default(), true)?;

    let rows = [
        (Functional::T, None),
        (Functional::EnergyFixed, None),
        (Functional::EnergyMoving, None),
        (Functional::Length, None),
        (Functional::Ms, Some(-1.0)),
        (Functional::Area, None),
        (Functional::RegionEnergyFixed, None),
    ];
    let curves = rows
        .iter()
        .map(|&(f, s)| book.curve(f, s))
        .collect::<eqwave::Result<Vec<_>>>()?;

    print!("{:>10}", "p/|m|");
    for c in &curves {
        print!(" {:>18}", c.functional.name());
    }
    println!();
    for i in (0..grid.len()).step_by(8) {
        print!("{:>10.4}", grid[i] / wave.m_abs);
        for c in &curves {
            print!(" {:>18.10e}", c.values[i]);
        }
        println!();
    }

    println!("\nphi_max / 2 = {:.10e}", 0.5 * wave.phi_max);
    for c in curves
        .iter()
        .filter(|c| !c.functional.is_region() && c.functional != Functional::EnergyMoving)
    {
        let mono = check_monotone(&c.values, Direction::NonIncreasing, 1e-9)?;
        let convex = check_convex(&c.values, 1e-9)?;
        let logc = check_log_convex(&c.values, 1e-9)?;
        println!(
            "{:<12} non-increasing {} convex {} log-convex {}",
            c.functional.name(),
            mono.passed,
            convex.passed,
            logc.passed
        );
    }
    Ok(())
}
