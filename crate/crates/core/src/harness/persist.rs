//! JSON wave files and CSV exports.
//!
//! A wave file is `<name>.wave.json`; curves go to `<name>.<functional>.csv`
//! and verdicts to `<name>.report.csv`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::claims::{fingerprint, PropertyReport, VerifyConfig};
use crate::diagnostics::{DiagnosticCurve, Functional};
use crate::error::{Result, WaveError};
use crate::solver::{residual, ConformalWave, PhysicalParams};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSummary {
    pub c: f64,
    pub phi_max: f64,
    pub m_abs: f64,
    pub bernoulli_b: f64,
    pub g_eff: f64,
    pub residual: f64,
    pub modes: usize,
    pub fingerprint: String,
}

impl WaveSummary {
    pub fn of(wave: &ConformalWave) -> Self {
        Self {
            c: wave.c,
            phi_max: wave.phi_max,
            m_abs: wave.m_abs,
            bernoulli_b: wave.bernoulli_b,
            g_eff: wave.g_eff,
            residual: wave.residual_norm,
            modes: wave.series.modes(),
            fingerprint: fingerprint(wave),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub params: PhysicalParams,
    pub wave: WaveSummary,
    pub verify: VerifyConfig,
    pub workers: usize,
    pub timings: Vec<Timing>,
}

impl RunManifest {
    pub fn new(wave: &ConformalWave, verify: VerifyConfig, workers: usize) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            params: wave.params.clone(),
            wave: WaveSummary::of(wave),
            verify,
            workers,
            timings: Vec::new(),
        }
    }

    pub fn time(&mut self, stage: &str, seconds: f64) {
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFile {
    pub manifest: RunManifest,
    pub wave: ConformalWave,
}

pub fn save_wave(path: &Path, file: &WaveFile) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(file)?)?;
    Ok(())
}

/// Loads a wave file and checks that it still satisfies its own equations.
pub fn load_wave(path: &Path) -> Result<WaveFile> {
    let text = fs::read_to_string(path)?;
    let file: WaveFile = serde_json::from_str(&text)?;
    let w = &file.wave;
    if w.series.coeffs.is_empty() || !(w.series.period_q > 0.0) || !(w.series.depth_p > 0.0) {
        return Err(WaveError::Format(format!(
            "{}: malformed series",
            path.display()
        )));
    }
    let r = residual(w);
    let stored = w.residual_norm;
    if !((r - stored).abs() <= 1e-6 * stored.max(r) + 1e-13 * w.c * w.c) {
        return Err(WaveError::Format(format!(
            "{}: residual {r:.3e} does not match the stored {stored:.3e}; file is corrupt or edited",
            path.display()
        )));
    }
    Ok(file)
}

pub fn curve_file_name(stem: &str, functional: Functional, s: Option<f64>) -> String {
    match s {
        Some(s) => format!("{stem}.{}_s{s}.csv", functional.name()),
        None => format!("{stem}.{}.csv", functional.name()),
    }
}

pub fn write_curve_csv(path: &Path, curve: &DiagnosticCurve) -> Result<()> {
    fs::write(path, curve.to_csv())?;
    Ok(())
}

/// Reads `(p, value)` rows written by [`write_curve_csv`].
pub fn read_curve_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| WaveError::Format(e.to_string()))?;
    reader
        .deserialize::<(f64, f64)>()
        .map(|r| r.map_err(|e| WaveError::Format(e.to_string())))
        .collect()
}

pub fn report_csv(reports: &[PropertyReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "claim_id",
        "status",
        "worst_margin",
        "tolerance",
        "wave_fingerprint",
        "note",
        "statement",
    ])
    .map_err(|e| WaveError::Format(e.to_string()))?;
    for r in reports {
        w.write_record([
            r.claim_id.as_str(),
            &r.status.to_string(),
            &format!("{:.6e}", r.worst_margin),
            &format!("{:.1e}", r.tolerance),
            &r.wave_fingerprint,
            &r.note,
            &r.statement,
        ])
        .map_err(|e| WaveError::Format(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| WaveError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| WaveError::Format(e.to_string()))
}

pub fn write_report_csv(path: &Path, reports: &[PropertyReport]) -> Result<()> {
    fs::write(path, report_csv(reports)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{diagnostic_curve, uniform_p_grid, QuadratureSettings};
    use crate::solver::flat_wave;
    use num_complex::Complex64;

    fn flat() -> ConformalWave {
        flat_wave(&PhysicalParams::new(100.0, 10.0, 0.0)).unwrap()
    }

    #[test]
    fn wave_file_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.wave.json");
        let w = flat();
        let file = WaveFile {
            manifest: RunManifest::new(&w, VerifyConfig::default(), 2),
            wave: w.clone(),
        };
        save_wave(&path, &file).unwrap();
        let back = load_wave(&path).unwrap();
        assert_eq!(back, file);
        assert_eq!(fingerprint(&back.wave), fingerprint(&w));
    }

    #[test]
    fn edited_wave_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.wave.json");
        let w = flat();
        let mut file = WaveFile {
            manifest: RunManifest::new(&w, VerifyConfig::default(), 1),
            wave: w,
        };
        file.wave.series.coeffs[0] = Complex64::new(0.0, 1e-2);
        save_wave(&path, &file).unwrap();
        assert!(matches!(load_wave(&path), Err(WaveError::Format(_))));
        fs::write(&path, "{not json").unwrap();
        assert!(matches!(load_wave(&path), Err(WaveError::Format(_))));
    }

    #[test]
    fn curve_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let w = flat();
        let grid = uniform_p_grid(&w, 9);
        let c = diagnostic_curve(
            &w,
            Functional::T,
            None,
            &grid,
            QuadratureSettings::default(),
        )
        .unwrap();
        let path = dir
            .path()
            .join(curve_file_name("flat", Functional::T, None));
        write_curve_csv(&path, &c).unwrap();
        let rows = read_curve_csv(&path).unwrap();
        assert_eq!(rows.len(), 9);
        for ((p, v), (p2, v2)) in rows.iter().zip(grid.iter().zip(&c.values)) {
            assert_eq!((p, v), (p2, v2));
        }
        assert_eq!(
            curve_file_name("w", Functional::Ms, Some(-0.5)),
            "w.Ms_s-0.5.csv"
        );
    }
}
