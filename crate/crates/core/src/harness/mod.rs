//! Verification engine, persistence and run bookkeeping.

pub mod checks;
pub mod claims;
pub mod persist;

pub use checks::{
    check_concave, check_convex, check_log_convex, check_monotone, CheckOutcome, Direction,
};
pub use claims::{
    claim_ids, claim_registry, fingerprint, summarize, verify_all, PropertyReport, Status, Summary,
    VerifyConfig,
};
pub use persist::{
    load_wave, read_curve_csv, save_wave, write_curve_csv, write_report_csv, RunManifest, WaveFile,
};

use crate::error::{Result, WaveError};

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "EQWAVE_WORKERS";

/// Worker count from [`WORKERS_ENV`], or the machine's parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(WaveError::Usage(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| WaveError::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
