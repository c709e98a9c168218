//! Streamlines and particle trajectories in the frame moving with the wave.
//!
//! Along a streamline `p` is fixed and the velocity potential obeys
//! `dq/dt = 2E(q, p)`, so a particle is advanced by integrating that scalar
//! equation. A slower path integrates `dX/dt = u - c, dZ/dt = w` in physical
//! space and is used to cross-check periods and the pattern shift.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::Frame;
use crate::error::{Result, WaveError};
use crate::flow::{invert_near, sample_at_qp, sample_from, FlowSample};
use crate::ode::Dopri5;
use crate::solver::ConformalWave;

/// Default relative tolerance of the particle integrator.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Relative distance from `L` accepted by the pattern-shift check.
pub const PATTERN_SHIFT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Streamline {
    pub p: f64,
    /// `(x, z)` over one period, ordered by q from `-phi_max/2`.
    pub points: Vec<(f64, f64)>,
    /// `w / (u - c)` at each point.
    pub slopes: Vec<f64>,
}

/// Physical image of the level line `p`, sampled at `n` points.
pub fn trace_streamline(wave: &ConformalWave, p: f64, n: usize) -> Result<Streamline> {
    if n < 64 {
        return Err(WaveError::Usage(format!(
            "need n >= 64 streamline points, got {n}"
        )));
    }
    let mut points = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    for j in 0..n {
        let q = wave.phi_max * (j as f64 / n as f64 - 0.5);
        let s = sample_at_qp(wave, q, p)?;
        points.push((s.x, s.z));
        slopes.push(s.w / s.u_rel);
    }
    Ok(Streamline { p, points, slopes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub q: f64,
    pub p: f64,
    pub x: f64,
    pub z: f64,
    /// Fixed-frame horizontal velocity.
    pub u: f64,
    pub w: f64,
}

/// One streamline period of a particle in the moving frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub p: f64,
    pub q0: f64,
    pub points: Vec<TrajectoryPoint>,
    pub measured_period: f64,
    pub frame: Frame,
    /// `int_0^T E0 dt`.
    pub fixed_energy: f64,
    /// `int_0^T E dt`.
    pub moving_energy: f64,
    /// Path length travelled in the moving frame.
    pub arclength: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn points_qp(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.q, p.p)).collect()
    }

    pub fn points_xz(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.x, p.z)).collect()
    }

    /// Largest deviation of the stream-function level from `p`.
    pub fn level_drift(&self) -> f64 {
        self.points
            .iter()
            .map(|x| (x.p - self.p).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,q,p,x,z,u,w\n");
        for x in &self.points {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                x.t, x.q, x.p, x.x, x.z, x.u, x.w
            ));
        }
        out
    }
}

fn integrator(wave: &ConformalWave, tol: f64) -> Result<Dopri5> {
    if !(1e-12..1.0).contains(&tol) {
        return Err(WaveError::Usage(format!(
            "integrator tolerance {tol} outside [1e-12, 1)"
        )));
    }
    // absolute floor sized to the potential range so that q is resolved
    Ok(Dopri5::new(tol, tol * 1e-3 * wave.phi_max.max(1.0)))
}

fn point(wave: &ConformalWave, t: f64, s: &FlowSample) -> TrajectoryPoint {
    TrajectoryPoint {
        t,
        q: s.q,
        p: s.p,
        x: s.x,
        z: s.z,
        u: s.u(wave.c),
        w: s.w,
    }
}

/// Integrates `dq/dt = 2E` from `q0` until q has advanced by `phi_max`.
pub fn integrate_particle(wave: &ConformalWave, q0: f64, p: f64, tol: f64) -> Result<Trajectory> {
    let ode = integrator(wave, tol)?;
    sample_at_qp(wave, q0, p)?;
    // state: q, int E0 dt, int E dt, arclength
    let rhs = |_: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let s = sample_at_qp(wave, y[0], p)?;
        Ok([2.0 * s.e, s.e0, s.e, (2.0 * s.e).sqrt()])
    };
    let mut points = Vec::new();
    let mut failure = None;
    let (t_end, y_end, stats) = ode.integrate_until(
        rhs,
        0.0,
        [q0, 0.0, 0.0, 0.0],
        0,
        q0 + wave.phi_max,
        |t, y| match sample_at_qp(wave, y[0], p) {
            Ok(s) => points.push(point(wave, t, &s)),
            Err(e) => failure = Some(e),
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Trajectory {
        p,
        q0,
        points,
        measured_period: t_end,
        frame: Frame::Moving,
        fixed_energy: y_end[1],
        moving_energy: y_end[2],
        arclength: y_end[3],
        steps: stats.accepted,
    })
}

/// Several trajectories integrated concurrently, in input order.
pub fn integrate_many(
    wave: &ConformalWave,
    starts: &[(f64, f64)],
    tol: f64,
) -> Result<Vec<Trajectory>> {
    starts
        .par_iter()
        .map(|&(q0, p)| integrate_particle(wave, q0, p, tol))
        .collect()
}

/// Per-period kinetic energy measured along a trajectory: fixed-frame
/// `(1/2) int (u^2 + w^2) dt` or moving-frame `(1/2) int ((u-c)^2 + w^2) dt`.
pub fn time_domain_energy(
    wave: &ConformalWave,
    p: f64,
    q0: f64,
    frame: Frame,
    tol: f64,
) -> Result<f64> {
    let tr = integrate_particle(wave, q0, p, tol)?;
    Ok(match frame {
        Frame::Fixed => tr.fixed_energy,
        Frame::Moving => tr.moving_energy,
    })
}

/// Path integrated in physical space from the image of `(q0, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPath {
    pub p: f64,
    pub times: Vec<f64>,
    pub points_xz: Vec<(f64, f64)>,
    /// Stream-function level recovered by inverting each accepted point.
    pub levels: Vec<f64>,
}

impl PhysicalPath {
    pub fn level_drift(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| (l - self.p).abs())
            .fold(0.0, f64::max)
    }

    pub fn end(&self) -> (f64, f64) {
        *self
            .points_xz
            .last()
            .expect("a path has at least its start point")
    }
}

fn physical_rhs<'a>(
    wave: &'a ConformalWave,
    seed: &'a Cell<(f64, f64)>,
) -> impl Fn(f64, &[f64; 2]) -> Result<[f64; 2]> + 'a {
    move |_, y| {
        let (q, p) = invert_near(wave, y[0], y[1], seed.get())?;
        seed.set((q, p));
        let (z, dz) = (
            wave.series.eval_map_unchecked(q, p),
            wave.series.eval_map_derivative_unchecked(q, p),
        );
        let s = sample_from(wave, q, p, z, dz);
        Ok([s.u_rel, s.w])
    }
}

/// Integrates `dX/dt = u - c, dZ/dt = w` for a fixed duration.
pub fn integrate_physical(
    wave: &ConformalWave,
    q0: f64,
    p: f64,
    duration: f64,
    tol: f64,
) -> Result<PhysicalPath> {
    let ode = Dopri5::new(tol, tol * 1e-3 * wave.wavelength());
    let start = sample_at_qp(wave, q0, p)?;
    let seed = Cell::new((q0, p));
    let rhs = physical_rhs(wave, &seed);
    let mut path = PhysicalPath {
        p,
        times: vec![],
        points_xz: vec![],
        levels: vec![],
    };
    let track = Cell::new((q0, p));
    let mut failure = None;
    ode.integrate(
        rhs,
        0.0,
        [start.x, start.z],
        duration,
        |t, y| match invert_near(wave, y[0], y[1], track.get()) {
            Ok(qp) => {
                track.set(qp);
                path.times.push(t);
                path.points_xz.push((y[0], y[1]));
                path.levels.push(qp.1);
            }
            Err(e) => failure = Some(e),
        },
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(path),
    }
}

/// Period measured in physical space: time for X to advance by one wavelength.
pub fn physical_period(wave: &ConformalWave, q0: f64, p: f64, tol: f64) -> Result<f64> {
    let ode = Dopri5::new(tol, tol * 1e-3 * wave.wavelength());
    let start = sample_at_qp(wave, q0, p)?;
    let seed = Cell::new((q0, p));
    let rhs = physical_rhs(wave, &seed);
    // X is strictly increasing because u - c > 0
    let (t, _, _) = ode.integrate_until(
        rhs,
        0.0,
        [start.x, start.z],
        0,
        start.x + wave.wavelength(),
        |_, _| {},
    )?;
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternShift {
    pub p: f64,
    pub period: f64,
    /// Moving-frame horizontal advance after `period`.
    pub advance: f64,
    /// Fixed-frame advance, `advance + c period`.
    pub fixed_advance: f64,
    /// Vertical mismatch after `period`.
    pub vertical_gap: f64,
    pub wavelength: f64,
    pub passed: bool,
}

/// Checks that after one measured period the particle sits one wavelength
/// downstream at the same height.
pub fn pattern_shift_check(wave: &ConformalWave, p: f64, tol: f64) -> Result<PatternShift> {
    let q0 = 0.125 * wave.phi_max;
    let period = integrate_particle(wave, q0, p, tol)?.measured_period;
    pattern_shift_with_period(wave, p, period, tol)
}

/// As [`pattern_shift_check`] with the elapsed time supplied by the caller.
pub fn pattern_shift_with_period(
    wave: &ConformalWave,
    p: f64,
    period: f64,
    tol: f64,
) -> Result<PatternShift> {
    let q0 = 0.125 * wave.phi_max;
    let path = integrate_physical(wave, q0, p, period, tol)?;
    let (x0, z0) = path.points_xz[0];
    let (x1, z1) = path.end();
    let l = wave.wavelength();
    let advance = x1 - x0;
    let vertical_gap = z1 - z0;
    let passed =
        (advance - l).abs() <= PATTERN_SHIFT_TOL * l && vertical_gap.abs() <= PATTERN_SHIFT_TOL * l;
    Ok(PatternShift {
        p,
        period,
        advance,
        fixed_advance: advance + wave.c * period,
        vertical_gap,
        wavelength: l,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{energy_period_fixed, period_t, streamline_length};
    use crate::flow::surface_elevation;
    use crate::solver::{solve_wave, PhysicalParams};
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    fn w1() -> &'static ConformalWave {
        static W: OnceLock<ConformalWave> = OnceLock::new();
        W.get_or_init(|| solve_wave(&PhysicalParams::new(100.0, 10.0, 5.0)).unwrap())
    }

    fn flat() -> ConformalWave {
        solve_wave(&PhysicalParams::new(100.0, 10.0, 0.0)).unwrap()
    }

    #[test]
    fn flat_streamlines_and_particles() {
        let w = flat();
        let p = 0.25 * w.m_abs;
        let s = trace_streamline(&w, p, 64).unwrap();
        for &(_, z) in &s.points {
            assert_relative_eq!(z, -p / w.c.abs(), epsilon = 1e-12);
        }
        let tr = integrate_particle(&w, 0.0, p, 1e-12).unwrap();
        assert_relative_eq!(tr.measured_period, 100.0 / w.c.abs(), max_relative = 1e-12);
        assert!(tr.fixed_energy.abs() < 1e-20);
        let shift = pattern_shift_check(&w, p, 1e-12).unwrap();
        assert!(shift.passed);
        assert_relative_eq!(shift.advance, 100.0, max_relative = 1e-10);
        assert!(trace_streamline(&w, p, 10).is_err());
        assert!(integrate_particle(&w, 0.0, p, 1e-14).is_err());
    }

    #[test]
    fn streamline_boundaries_and_slopes() {
        let w = w1();
        let surf = trace_streamline(w, 0.0, 128).unwrap();
        for &(x, z) in surf.points.iter().step_by(8) {
            let target = surface_elevation(w, x).unwrap();
            assert!((z - target).abs() < 1e-10 * 100.0);
        }
        let bed = trace_streamline(w, w.m_abs, 64).unwrap();
        for &(_, z) in &bed.points {
            assert!((z + 10.0).abs() < 1e-10);
        }
        let fine = trace_streamline(w, 0.5 * w.m_abs, 4096).unwrap();
        for j in (1..4095).step_by(97) {
            let (a, b) = (fine.points[j - 1], fine.points[j + 1]);
            let fd = (b.1 - a.1) / (b.0 - a.0);
            assert!(
                (fd - fine.slopes[j]).abs() < 1e-6,
                "slope {fd} vs {}",
                fine.slopes[j]
            );
        }
    }

    #[test]
    fn w1_periods_match_quadrature_and_are_start_independent() {
        let w = w1();
        let p = 0.5 * w.m_abs;
        let starts: Vec<(f64, f64)> = (0..8).map(|j| (w.phi_max * j as f64 / 8.0, p)).collect();
        let trs = integrate_many(w, &starts, 1e-12).unwrap();
        let t_quad = period_t(w, p, 512).unwrap();
        for tr in &trs {
            assert_relative_eq!(
                tr.measured_period,
                trs[0].measured_period,
                max_relative = 1e-8
            );
            assert_relative_eq!(tr.measured_period, t_quad, max_relative = 1e-7);
            assert_relative_eq!(tr.moving_energy, 0.5 * w.phi_max, max_relative = 1e-7);
            assert_eq!(tr.level_drift(), 0.0);
        }
        let fixed = energy_period_fixed(w, p, 512).unwrap();
        assert_relative_eq!(trs[3].fixed_energy, fixed, max_relative = 1e-6);
        assert_relative_eq!(
            trs[5].arclength,
            streamline_length(w, p, 512).unwrap(),
            max_relative = 1e-6
        );
    }

    #[test]
    fn physical_cross_check() {
        let w = w1();
        let p = 0.3 * w.m_abs;
        let tol = 1e-11;
        let t1 = integrate_particle(w, 0.0, p, tol).unwrap().measured_period;
        let t2 = physical_period(w, 0.0, p, tol).unwrap();
        assert!((t1 - t2).abs() <= 10.0 * tol * t1, "{t1} vs {t2}");
        let path = integrate_physical(w, 0.0, p, t1, tol).unwrap();
        assert!(path.level_drift() < 1e-9 * w.m_abs);
    }

    #[test]
    fn pattern_shift_and_truncated_period() {
        let w = w1();
        for p in [0.0, 0.5 * w.m_abs, w.m_abs] {
            let s = pattern_shift_check(w, p, 1e-12).unwrap();
            assert!(s.passed, "{s:?}");
            assert_relative_eq!(s.fixed_advance, 100.0 + w.c * s.period, max_relative = 1e-9);
        }
        let t = period_t(w, 0.5 * w.m_abs, 512).unwrap();
        let bad = pattern_shift_with_period(w, 0.5 * w.m_abs, 0.99 * t, 1e-12).unwrap();
        assert!(!bad.passed);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let tr = integrate_particle(w1(), 0.0, 0.0, 1e-10).unwrap();
        let csv = tr.to_csv();
        assert!(csv.starts_with("t,q,p,x,z,u,w\n"));
        assert_eq!(csv.lines().count(), tr.points.len() + 1);
        assert_eq!(tr.times().len(), tr.points_qp().len());
        assert_eq!(tr.points_xz().len(), tr.points.len());
    }
}
