//! Write a wave file, a curve CSV and a report CSV, then read them back.
//!
//! cargo run --example save_and_reload

use eqwave::diagnostics::{diagnostic_curve, uniform_p_grid, Functional, QuadratureSettings};
use eqwave::harness::persist::curve_file_name;
use eqwave::harness::{
    load_wave, read_curve_csv, save_wave, verify_all, write_curve_csv, write_report_csv,
    RunManifest, VerifyConfig, WaveFile,
};
use eqwave::solver::{solve_wave, PhysicalParams};

fn main() -> eqwave::Result<()> {
    let dir = std::env::temp_dir().join("eqwave-example");
    std::fs::create_dir_all(&dir)?;
    let wave = solve_wave(&PhysicalParams::new(100.0, 20.0, 3.0))?;
    let config = VerifyConfig::default();

    let path = dir.join("demo.wave.json");
    save_wave(
        &path,
        &WaveFile {
            manifest: RunManifest::new(&wave, config, 1),
            wave: wave.clone(),
        },
    )?;
    let back = load_wave(&path)?.wave;
    println!(
        "wrote {}; reloaded c = {} (identical: {})",
        path.display(),
        back.c,
        back.c == wave.c
    );

    let grid = uniform_p_grid(&wave, 65);
    let curve = diagnostic_curve(
        &wave,
        Functional::T,
        None,
        &grid,
        QuadratureSettings::default(),
    )?;
    let csv = dir.join(curve_file_name("demo", Functional::T, None));
    write_curve_csv(&csv, &curve)?;
    let rows = read_curve_csv(&csv)?;
    println!(
        "wrote {} with {} rows; T(0) = {:.12} s",
        csv.display(),
        rows.len(),
        rows[0].1
    );

    let report = dir.join("demo.report.csv");
    write_report_csv(&report, &verify_all(&back, &config))?;
    println!("wrote {}", report.display());
    Ok(())
}
