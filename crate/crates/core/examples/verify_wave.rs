//! Run the full claim suite on one wave and list everything that is not a
//! plain pass.
//!
//! cargo run --example verify_wave [d] [H]

use eqwave::harness::{summarize, verify_all, Status, VerifyConfig};
use eqwave::solver::{solve_wave, PhysicalParams};

fn main() -> eqwave::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let depth = args.first().copied().unwrap_or(10.0);
    let height = args.get(1).copied().unwrap_or(5.0);
    let wave = solve_wave(&PhysicalParams::new(100.0, depth, height))?;
    let start = std::time::Instant::now();
    let reports = verify_all(&wave, &VerifyConfig::default());
    let s = summarize(&reports);
    println!(
        "d = {depth} m, H = {height} m: {} claims in {:.1} s: {} pass, {} fail, {} finding, {} skipped",
        reports.len(),
        start.elapsed().as_secs_f64(),
        s.pass,
        s.fail,
        s.finding,
        s.skipped
    );
    for r in reports.iter().filter(|r| r.status != Status::Pass) {
        println!("  [{}] {}: {}", r.status, r.claim_id, r.statement);
        println!(
            "      margin {:.3e}, tolerance {:.1e} {}",
            r.worst_margin, r.tolerance, r.note
        );
    }
    Ok(())
}
