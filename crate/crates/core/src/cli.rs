//! Command-line front end: `solve`, `diagnose`, `trace`, `verify`, `sweep`.
//!
//! Exit codes: 0 success, 1 solver/physics error or failing claims, 2 usage.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{uniform_p_grid, CurveBook, Functional, QuadratureSettings};
use crate::error::{Result, WaveError};
use crate::harness::persist::{curve_file_name, report_csv, RunManifest, WaveFile};
use crate::harness::{
    load_wave, save_wave, summarize, verify_all, with_workers, worker_count, write_curve_csv,
    write_report_csv, VerifyConfig,
};
use crate::lagrangian::{integrate_many, DEFAULT_TOL};
use crate::solver::{solve_wave, ConformalWave, PhysicalParams};

#[derive(Debug, Parser)]
#[command(
    name = "eqwave",
    version,
    about = "Steady equatorial water waves: solve, diagnose, trace, verify"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for a wave and write `<name>.wave.json`.
    Solve(SolveArgs),
    /// Evaluate functionals on a p-grid and write CSV curves.
    Diagnose(DiagnoseArgs),
    /// Integrate particle trajectories and write CSV paths.
    Trace(TraceArgs),
    /// Run the claim suite on a wave file.
    Verify(VerifyArgs),
    /// Solve and verify a grid of depths and heights.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct WaveArgs {
    /// Wavelength L (m).
    #[arg(long = "L", value_name = "M")]
    pub wavelength: f64,
    /// Mean depth d (m).
    #[arg(long = "d", value_name = "M")]
    pub depth: Option<f64>,
    /// Wave height H (m).
    #[arg(long = "H", value_name = "M")]
    pub height: Option<f64>,
    #[arg(long, default_value_t = 9.8)]
    pub gravity: f64,
    /// Rotation rate (rad/s).
    #[arg(long, default_value_t = 7.3e-5)]
    pub omega: f64,
    #[arg(long, default_value_t = 256)]
    pub modes: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

impl WaveArgs {
    fn params(&self, depth: f64, height: f64) -> PhysicalParams {
        let mut p = PhysicalParams::new(self.wavelength, depth, height)
            .with_omega(self.omega)
            .with_modes(self.modes);
        p.gravity = self.gravity;
        p.newton_tol = self.tol;
        p
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    /// Output stem; the file is `<name>.wave.json`.
    #[arg(long, default_value = "wave")]
    pub name: String,
    #[arg(long, default_value = ".")]
    pub dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    #[arg(long = "n-q", default_value_t = 512)]
    pub n_q: usize,
    #[arg(long = "n-p", default_value_t = 32)]
    pub n_p: usize,
    #[arg(long = "p-points", default_value_t = 65)]
    pub p_points: usize,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Wave file written by `solve`.
    pub wave: PathBuf,
    /// Functional name (Ms, T, EnergyFixed, ..., Length) or `all`; repeatable.
    #[arg(long, required = true)]
    pub functional: Vec<String>,
    /// Exponent for the s-dependent functionals.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Directory for `<name>.<functional>.csv`; without it a single curve goes to stdout.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    pub wave: PathBuf,
    /// Streamline level as a fraction of |m| (0 surface, 1 bed).
    #[arg(long = "p-frac", default_value_t = 0.5)]
    pub p_frac: f64,
    /// Start potentials as fractions of phi_max; repeatable.
    #[arg(long = "q0-frac", default_values_t = [0.0])]
    pub q0_frac: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Directory for `<name>.trajectory<i>.csv`; without it a single path goes to stdout.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub wave: PathBuf,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Seed for the random particle start points.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `<name>.report.csv`.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    /// Depths (m), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub depths: Vec<f64>,
    /// Heights (m), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub heights: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for wave files and reports of every grid point.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

/// Parses `argv` and runs; returns the process exit code.
pub fn run_from<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                WaveError::Usage(_) => 2,
                _ => 1,
            }
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let workers = worker_count()?;
    // the writer stays on this thread; the pool only runs the numerics
    match cli.command {
        Command::Solve(a) => solve(a, workers, out),
        Command::Diagnose(a) => diagnose(a, workers, out),
        Command::Trace(a) => trace(a, workers, out),
        Command::Verify(a) => verify(a, workers, out),
        Command::Sweep(a) => sweep(a, workers, out),
    }
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| WaveError::Usage(format!("missing --{flag}")))
}

fn stem_of(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.strip_suffix(".wave.json")
        .or_else(|| name.strip_suffix(".json"))
        .unwrap_or(&name)
        .to_string()
}

fn io_err(e: std::io::Error) -> WaveError {
    WaveError::Io(e.to_string())
}

fn solve(a: SolveArgs, workers: usize, out: &mut dyn Write) -> Result<i32> {
    let params = a
        .wave
        .params(require(a.wave.depth, "d")?, require(a.wave.height, "H")?);
    let start = Instant::now();
    let wave = with_workers(workers, || solve_wave(&params))??;
    let mut manifest = RunManifest::new(&wave, VerifyConfig::default(), workers);
    manifest.time("solve", start.elapsed().as_secs_f64());
    std::fs::create_dir_all(&a.dir)?;
    let path = a.dir.join(format!("{}.wave.json", a.name));
    save_wave(
        &path,
        &WaveFile {
            manifest,
            wave: wave.clone(),
        },
    )?;
    writeln!(
        out,
        "wrote {}\nc = {:.12} m/s\nphi_max = {:.12} m^2/s\n|m| = {:.12} m^2/s\nB = {:.12} m^2/s^2\ng_eff = {:.12} m/s^2\nresidual = {:.3e}",
        path.display(),
        wave.c,
        wave.phi_max,
        wave.m_abs,
        wave.bernoulli_b,
        wave.g_eff,
        wave.residual_norm
    )
    .map_err(io_err)?;
    Ok(0)
}

fn parse_functionals(names: &[String]) -> Result<Vec<Functional>> {
    let mut out = Vec::new();
    for n in names {
        if n.eq_ignore_ascii_case("all") {
            out.extend(Functional::ALL);
        } else {
            out.push(
                Functional::from_name(n)
                    .ok_or_else(|| WaveError::Usage(format!("unknown functional {n:?}")))?,
            );
        }
    }
    Ok(out)
}

fn diagnose(a: DiagnoseArgs, workers: usize, out: &mut dyn Write) -> Result<i32> {
    let file = load_wave(&a.wave)?;
    let wave = file.wave;
    let functionals = parse_functionals(&a.functional)?;
    for f in &functionals {
        if f.needs_exponent() && a.s.is_none() {
            return Err(WaveError::Usage(format!("{} needs --s", f.name())));
        }
    }
    if a.dir.is_none() && functionals.len() != 1 {
        return Err(WaveError::Usage("several functionals need --dir".into()));
    }
    let quad = QuadratureSettings {
        n_q: a.quad.n_q,
        n_p: a.quad.n_p,
    };
    let grid = uniform_p_grid(&wave, a.quad.p_points);
    let regions = functionals.iter().any(|f| f.is_region());
    let curves = with_workers(workers, || -> Result<Vec<_>> {
        let book = CurveBook::new(&wave, &grid, quad, regions)?;
        functionals
            .iter()
            .map(|&f| book.curve(f, if f.needs_exponent() { a.s } else { None }))
            .collect()
    })??;
    match &a.dir {
        None => out
            .write_all(curves[0].to_csv().as_bytes())
            .map_err(io_err)?,
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let stem = stem_of(&a.wave);
            for c in &curves {
                let path = dir.join(curve_file_name(&stem, c.functional, c.s));
                write_curve_csv(&path, c)?;
                writeln!(out, "wrote {}", path.display()).map_err(io_err)?;
            }
        }
    }
    Ok(0)
}

fn trace(a: TraceArgs, workers: usize, out: &mut dyn Write) -> Result<i32> {
    let wave = load_wave(&a.wave)?.wave;
    if !(0.0..=1.0).contains(&a.p_frac) {
        return Err(WaveError::Usage(format!(
            "--p-frac must lie in [0, 1], got {}",
            a.p_frac
        )));
    }
    if a.dir.is_none() && a.q0_frac.len() != 1 {
        return Err(WaveError::Usage("several starts need --dir".into()));
    }
    let p = a.p_frac * wave.m_abs;
    let starts: Vec<(f64, f64)> = a.q0_frac.iter().map(|f| (f * wave.phi_max, p)).collect();
    let trajectories = with_workers(workers, || integrate_many(&wave, &starts, a.tol))??;
    match &a.dir {
        None => out
            .write_all(trajectories[0].to_csv().as_bytes())
            .map_err(io_err)?,
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let stem = stem_of(&a.wave);
            writeln!(
                out,
                "start,q0,p,period,fixed_energy,moving_energy,arclength,file"
            )
            .map_err(io_err)?;
            for (i, t) in trajectories.iter().enumerate() {
                let path = dir.join(format!("{stem}.trajectory{i}.csv"));
                std::fs::write(&path, t.to_csv())?;
                writeln!(
                    out,
                    "{i},{:.12e},{:.12e},{:.15e},{:.15e},{:.15e},{:.15e},{}",
                    t.q0,
                    t.p,
                    t.measured_period,
                    t.fixed_energy,
                    t.moving_energy,
                    t.arclength,
                    path.display()
                )
                .map_err(io_err)?;
            }
        }
    }
    Ok(0)
}

fn verify_config(quad: &QuadArgs, seed: u64) -> VerifyConfig {
    VerifyConfig {
        n_q: quad.n_q,
        n_p: quad.n_p,
        p_points: quad.p_points,
        seed,
        ..VerifyConfig::default()
    }
}

fn verify(a: VerifyArgs, workers: usize, out: &mut dyn Write) -> Result<i32> {
    let wave = load_wave(&a.wave)?.wave;
    let config = verify_config(&a.quad, a.seed);
    let reports = with_workers(workers, || verify_all(&wave, &config))?;
    writeln!(
        out,
        "{:<40} {:<8} {:>14} {:>9}  note",
        "claim", "status", "margin", "tol"
    )
    .map_err(io_err)?;
    for r in &reports {
        writeln!(
            out,
            "{:<40} {:<8} {:>14.6e} {:>9.1e}  {}",
            r.claim_id, r.status, r.worst_margin, r.tolerance, r.note
        )
        .map_err(io_err)?;
    }
    let s = summarize(&reports);
    writeln!(
        out,
        "{} claims: {} pass, {} fail, {} finding, {} skipped",
        reports.len(),
        s.pass,
        s.fail,
        s.finding,
        s.skipped
    )
    .map_err(io_err)?;
    if let Some(dir) = &a.dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.report.csv", stem_of(&a.wave)));
        write_report_csv(&path, &reports)?;
        writeln!(out, "wrote {}", path.display()).map_err(io_err)?;
    }
    Ok(if s.fail > 0 { 1 } else { 0 })
}

fn sweep(a: SweepArgs, workers: usize, out: &mut dyn Write) -> Result<i32> {
    if a.wave.depth.is_some() || a.wave.height.is_some() {
        return Err(WaveError::Usage(
            "sweep takes --depths and --heights instead of --d and --H".into(),
        ));
    }
    let config = VerifyConfig {
        seed: a.seed,
        ..VerifyConfig::default()
    };
    if let Some(dir) = &a.dir {
        std::fs::create_dir_all(dir)?;
    }
    writeln!(out, "depth,height,c,residual,pass,fail,finding,skipped").map_err(io_err)?;
    let mut any_fail = false;
    for &d in &a.depths {
        for &h in &a.heights {
            let params = a.wave.params(d, h);
            let (wave, reports) = with_workers(workers, || -> Result<(ConformalWave, Vec<_>)> {
                let wave = solve_wave(&params)?;
                let reports = verify_all(&wave, &config);
                Ok((wave, reports))
            })??;
            let s = summarize(&reports);
            any_fail |= s.fail > 0;
            writeln!(
                out,
                "{d},{h},{:.15e},{:.3e},{},{},{},{}",
                wave.c, wave.residual_norm, s.pass, s.fail, s.finding, s.skipped
            )
            .map_err(io_err)?;
            if let Some(dir) = &a.dir {
                let stem = format!("d{d}_H{h}");
                let manifest = RunManifest::new(&wave, config, workers);
                save_wave(
                    &dir.join(format!("{stem}.wave.json")),
                    &WaveFile { manifest, wave },
                )?;
                std::fs::write(
                    dir.join(format!("{stem}.report.csv")),
                    report_csv(&reports)?,
                )?;
            }
        }
    }
    Ok(if any_fail { 1 } else { 0 })
}
