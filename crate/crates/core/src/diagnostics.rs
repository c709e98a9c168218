//! Streamline functionals evaluated by spectral quadrature in q.
//!
//! Every functional is built from the samples of one p-level line of the
//! rectangle (`p = 0` free surface, `p = |m|` bed). Integrals in q use the
//! periodic trapezoid rule; integrals in p use Gauss-Legendre.
//!
//! Units: `Ms` carries (m^2/s^2)^s, `T` seconds, per-period energies m^2/s
//! (energy per unit mass times time), region energies m^4/s^2 per unit mass
//! over the cross-section, `Area` m^2 and `Length` m.

use std::f64::consts::SQRT_2;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::flow::{
    golden_min, invert_map, invert_near, sample_at_qp, sample_from, surface_elevation, FlowSample,
};
use crate::quadrature::{gauss_legendre_on, periodic_trapezoid};
use crate::solver::ConformalWave;

/// Default number of q-points for the trapezoid rule.
pub const DEFAULT_NQ: usize = 512;
/// Default Gauss-Legendre order for p-integrals.
pub const DEFAULT_NP: usize = 32;
/// Gauss-Legendre order per sub-interval when region curves are accumulated.
const CURVE_SUBINTERVAL_ORDER: usize = 8;
/// Levels where `min E0 < VALLEY_RATIO * max E0` get a graded rule for
/// negative or non-integer powers of `E0`.
const VALLEY_RATIO: f64 = 1e-2;
/// Geometric grading ratio and depth of the graded rule.
const GRADING: f64 = 0.15;
const GRADED_LEVELS: usize = 16;
const PANEL_ORDER: usize = 16;
/// Coarsest panel of the graded rule, as a fraction of phi_max.
const PANEL_FRACTION: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    Fixed,
    Moving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Functional {
    Ms,
    T,
    EnergyFixed,
    EnergyMoving,
    EnergyFixedS,
    EnergyMovingS,
    RegionEnergyFixed,
    RegionEnergyMoving,
    RegionEnergyFixedS,
    RegionEnergyMovingS,
    Area,
    Length,
}

impl Functional {
    pub const ALL: [Functional; 12] = [
        Functional::Ms,
        Functional::T,
        Functional::EnergyFixed,
        Functional::EnergyMoving,
        Functional::EnergyFixedS,
        Functional::EnergyMovingS,
        Functional::RegionEnergyFixed,
        Functional::RegionEnergyMoving,
        Functional::RegionEnergyFixedS,
        Functional::RegionEnergyMovingS,
        Functional::Area,
        Functional::Length,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::Ms => "Ms",
            Functional::T => "T",
            Functional::EnergyFixed => "EnergyFixed",
            Functional::EnergyMoving => "EnergyMoving",
            Functional::EnergyFixedS => "EnergyFixedS",
            Functional::EnergyMovingS => "EnergyMovingS",
            Functional::RegionEnergyFixed => "RegionEnergyFixed",
            Functional::RegionEnergyMoving => "RegionEnergyMoving",
            Functional::RegionEnergyFixedS => "RegionEnergyFixedS",
            Functional::RegionEnergyMovingS => "RegionEnergyMovingS",
            Functional::Area => "Area",
            Functional::Length => "Length",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(name))
    }

    pub fn units(self) -> &'static str {
        match self {
            Functional::Ms => "(m^2/s^2)^s",
            Functional::T => "s",
            Functional::EnergyFixed | Functional::EnergyMoving => "m^2/s",
            Functional::EnergyFixedS | Functional::EnergyMovingS => "(m^2/s^2)^s s",
            Functional::RegionEnergyFixed | Functional::RegionEnergyMoving => "m^4/s^2",
            Functional::RegionEnergyFixedS | Functional::RegionEnergyMovingS => "(m^2/s^2)^s m^2",
            Functional::Area => "m^2",
            Functional::Length => "m",
        }
    }

    pub fn needs_exponent(self) -> bool {
        matches!(
            self,
            Functional::Ms
                | Functional::EnergyFixedS
                | Functional::EnergyMovingS
                | Functional::RegionEnergyFixedS
                | Functional::RegionEnergyMovingS
        )
    }

    pub fn is_region(self) -> bool {
        matches!(
            self,
            Functional::RegionEnergyFixed
                | Functional::RegionEnergyMoving
                | Functional::RegionEnergyFixedS
                | Functional::RegionEnergyMovingS
                | Functional::Area
        )
    }
}

/// Exponent admissible for the integral means: `|s| >= 1/2`.
pub fn check_mean_exponent(s: f64) -> Result<()> {
    if s.is_finite() && s.abs() >= 0.5 {
        Ok(())
    } else {
        Err(WaveError::UnsupportedExponent(s))
    }
}

/// Exponent admissible for the per-period (and region) energies in a frame.
pub fn check_energy_exponent(s: f64, frame: Frame) -> Result<()> {
    let ok = s.is_finite()
        && match frame {
            Frame::Fixed => s == 0.0 || s.abs() >= 0.5,
            Frame::Moving => s <= 0.5 || s == 1.0 || s >= 1.5,
        };
    if ok {
        Ok(())
    } else {
        Err(WaveError::UnsupportedExponent(s))
    }
}

fn check_nq(n_q: usize) -> Result<()> {
    if n_q < 64 {
        return Err(WaveError::Usage(format!("need n_q >= 64, got {n_q}")));
    }
    Ok(())
}

/// Samples of one p-level line on the uniform grid `q_j = j phi_max / n_q`.
#[derive(Debug, Clone)]
pub struct Level {
    pub p: f64,
    pub phi_max: f64,
    pub c: f64,
    pub samples: Vec<FlowSample>,
    /// `dZ/dzeta` at each sample.
    pub derivative: Vec<Complex64>,
    source: Arc<ConformalWave>,
    graded: OnceLock<Result<Option<GradedRule>>>,
}

/// Composite Gauss-Legendre rule graded towards the minima of `E0`.
#[derive(Debug, Clone)]
struct GradedRule {
    nodes: Vec<(f64, FlowSample)>,
    /// `E0` has a true zero on the level (bed points where `u` changes sign).
    zero: bool,
}

fn sample_q(wave: &ConformalWave, q: f64, p: f64) -> Result<FlowSample> {
    let q = q.rem_euclid(wave.phi_max);
    let (z, dz) = wave.series.eval_both(q, p)?;
    Ok(sample_from(wave, q, p, z, dz))
}

/// Root of `u` bracketed by `[a, b]` on the bed, by bisection.
fn bed_root(wave: &ConformalWave, p: f64, mut a: f64, mut b: f64) -> Result<f64> {
    let mut fa = sample_q(wave, a, p)?.u(wave.c);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = sample_q(wave, m, p)?.u(wave.c);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn graded_rule(wave: &ConformalWave, p: f64, samples: &[FlowSample]) -> Result<Option<GradedRule>> {
    let n = samples.len();
    let phi = wave.phi_max;
    let h = phi / n as f64;
    let max = samples.iter().map(|s| s.e0).fold(0.0, f64::max);
    let min = samples.iter().map(|s| s.e0).fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min >= VALLEY_RATIO * max {
        return Ok(None);
    }
    let bed = p >= wave.m_abs * (1.0 - 1e-12);
    let mut breaks = Vec::new();
    if bed {
        // w vanishes on the bed, so E0 = u^2 / 2 and its zeros are roots of u
        for j in 0..n {
            let (ua, ub) = (samples[j].u(wave.c), samples[(j + 1) % n].u(wave.c));
            if ua == 0.0 {
                breaks.push(j as f64 * h);
            } else if (ua > 0.0) != (ub > 0.0) && ub != 0.0 {
                breaks.push(bed_root(wave, p, j as f64 * h, (j + 1) as f64 * h)?);
            }
        }
    }
    let zero = !breaks.is_empty();
    if breaks.is_empty() {
        for j in 0..n {
            let (a, b, c) = (
                samples[(j + n - 1) % n].e0,
                samples[j].e0,
                samples[(j + 1) % n].e0,
            );
            if b <= a && b < c && b < VALLEY_RATIO * max {
                let mut err = None;
                let (q, _) = golden_min(
                    |q| match sample_q(wave, q, p) {
                        Ok(s) => s.e0,
                        Err(e) => {
                            err = Some(e);
                            f64::INFINITY
                        }
                    },
                    (j as f64 - 1.0) * h,
                    (j as f64 + 1.0) * h,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                breaks.push(q.rem_euclid(phi));
            }
        }
    }
    if breaks.is_empty() {
        return Ok(None);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|b, a| *b - *a <= 1e-12 * phi);
    let mut nodes = Vec::new();
    for (i, &a) in breaks.iter().enumerate() {
        let b = if i + 1 < breaks.len() {
            breaks[i + 1]
        } else {
            breaks[0] + phi
        };
        for (lo, hi) in graded_panels(a, b) {
            let pieces = ((hi - lo) / (PANEL_FRACTION * phi)).ceil().max(1.0) as usize;
            let step = (hi - lo) / pieces as f64;
            for k in 0..pieces {
                let x0 = lo + k as f64 * step;
                for (x, w) in gauss_legendre_on(PANEL_ORDER, x0, x0 + step) {
                    nodes.push((w, sample_q(wave, x, p)?));
                }
            }
        }
    }
    Ok(Some(GradedRule { nodes, zero }))
}

/// Sub-panels of `[a, b]` shrinking geometrically towards both ends.
fn graded_panels(a: f64, b: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mut cuts: Vec<f64> = (0..=GRADED_LEVELS)
        .rev()
        .map(|k| half * GRADING.powi(k as i32))
        .collect();
    cuts.insert(0, 0.0);
    let mut out = Vec::with_capacity(2 * GRADED_LEVELS + 2);
    for w in cuts.windows(2) {
        out.push((a + w[0], a + w[1]));
    }
    for w in cuts.windows(2).rev() {
        out.push((b - w[1], b - w[0]));
    }
    out
}

impl Level {
    pub fn new(wave: &ConformalWave, p: f64, n_q: usize) -> Result<Self> {
        Self::shared(Arc::new(wave.clone()), p, n_q)
    }

    fn shared(source: Arc<ConformalWave>, p: f64, n_q: usize) -> Result<Self> {
        let wave = source.as_ref();
        check_nq(n_q)?;
        // validate once, then evaluate without re-checking
        sample_at_qp(wave, 0.0, p)?;
        let mut samples = Vec::with_capacity(n_q);
        let mut derivative = Vec::with_capacity(n_q);
        for j in 0..n_q {
            let q = wave.phi_max * j as f64 / n_q as f64;
            let (z, dz) = wave.series.eval_both(q, p)?;
            samples.push(sample_from(wave, q, p, z, dz));
            derivative.push(dz);
        }
        Ok(Self {
            p,
            phi_max: wave.phi_max,
            c: wave.c,
            samples,
            derivative,
            graded: OnceLock::new(),
            source,
        })
    }

    fn integrate(&self, f: impl Fn(&FlowSample) -> f64) -> f64 {
        let v: Vec<f64> = self.samples.iter().map(f).collect();
        periodic_trapezoid(&v, self.phi_max)
    }

    pub fn mean_of(&self, f: impl Fn(&FlowSample) -> f64) -> f64 {
        self.integrate(f) / self.phi_max
    }

    /// M_s(E, p).
    pub fn integral_mean(&self, s: f64) -> f64 {
        self.mean_of(|x| x.e.powf(s))
    }

    pub fn period(&self) -> f64 {
        self.integrate(|x| 0.5 / x.e)
    }

    pub fn energy_fixed(&self) -> f64 {
        0.5 * self.integrate(|x| x.e0 / x.e)
    }

    /// Same quantity as [`Self::energy_fixed`] through `|1 + c (f^-1)'|^2`.
    pub fn energy_fixed_derivative_form(&self) -> f64 {
        let v: Vec<f64> = self
            .derivative
            .iter()
            .map(|d| (Complex64::new(1.0, 0.0) + self.c * d).norm_sqr())
            .collect();
        0.5 * periodic_trapezoid(&v, self.phi_max)
    }

    pub fn energy_moving(&self) -> f64 {
        0.5 * self.integrate(|x| (2.0 * x.e) * (0.5 / x.e))
    }

    pub fn energy_s(&self, s: f64, frame: Frame) -> f64 {
        let factor = 2f64.powf(s - 2.0);
        match frame {
            Frame::Moving => factor * self.integrate(|x| x.e.powf(s - 1.0)),
            // E0^s is not smooth across the minima of E0 unless s is a non-negative integer
            Frame::Fixed if s < 0.0 || s.fract() != 0.0 => {
                match self
                    .graded
                    .get_or_init(|| graded_rule(&self.source, self.p, &self.samples))
                {
                    Ok(Some(g)) if g.zero && s <= -0.5 => f64::INFINITY,
                    Ok(Some(g)) => {
                        factor
                            * g.nodes
                                .iter()
                                .map(|(w, x)| w * x.e0.powf(s) / x.e)
                                .sum::<f64>()
                    }
                    Ok(None) => factor * self.integrate(|x| x.e0.powf(s) / x.e),
                    Err(_) => f64::NAN,
                }
            }
            Frame::Fixed => factor * self.integrate(|x| x.e0.powf(s) / x.e),
        }
    }

    pub fn length(&self) -> f64 {
        0.5 * SQRT_2 * self.integrate(|x| 1.0 / x.e.sqrt())
    }

    /// Value of a per-level functional (the integrand in p for region ones).
    pub fn value(&self, functional: Functional, s: Option<f64>) -> f64 {
        let s = s.unwrap_or(1.0);
        match functional {
            Functional::Ms => self.integral_mean(s),
            Functional::T | Functional::Area => self.period(),
            Functional::EnergyFixed | Functional::RegionEnergyFixed => self.energy_fixed(),
            Functional::EnergyMoving | Functional::RegionEnergyMoving => self.energy_moving(),
            Functional::EnergyFixedS | Functional::RegionEnergyFixedS => {
                self.energy_s(s, Frame::Fixed)
            }
            Functional::EnergyMovingS | Functional::RegionEnergyMovingS => {
                self.energy_s(s, Frame::Moving)
            }
            Functional::Length => self.length(),
        }
    }
}

fn check_exponent_for(functional: Functional, s: Option<f64>) -> Result<()> {
    if !functional.needs_exponent() {
        return Ok(());
    }
    let s =
        s.ok_or_else(|| WaveError::Usage(format!("{} needs an exponent s", functional.name())))?;
    match functional {
        Functional::Ms => check_mean_exponent(s),
        Functional::EnergyFixedS | Functional::RegionEnergyFixedS => {
            check_energy_exponent(s, Frame::Fixed)
        }
        _ => check_energy_exponent(s, Frame::Moving),
    }
}

pub fn integral_mean_ms(wave: &ConformalWave, s: f64, p: f64, n_q: usize) -> Result<f64> {
    check_mean_exponent(s)?;
    Ok(Level::new(wave, p, n_q)?.integral_mean(s))
}

/// Streamline time-period `T(p) = int dq / (2E)`.
pub fn period_t(wave: &ConformalWave, p: f64, n_q: usize) -> Result<f64> {
    let level = Level::new(wave, p, n_q)?;
    let t = level.period();
    let via_mean = 0.5 * wave.phi_max * level.integral_mean(-1.0);
    debug_assert!(
        (t - via_mean).abs() <= 1e-12 * t,
        "T {t} vs mean route {via_mean}"
    );
    Ok(t)
}

pub fn energy_period_fixed(wave: &ConformalWave, p: f64, n_q: usize) -> Result<f64> {
    let level = Level::new(wave, p, n_q)?;
    let a = level.energy_fixed();
    let b = level.energy_fixed_derivative_form();
    let scale = a.abs().max(1e-300 * wave.phi_max);
    if (a - b).abs() > 1e-10 * scale.max(1e-16 * wave.phi_max) {
        return Err(WaveError::Domain(format!(
            "fixed-frame period energy forms disagree: {a} vs {b}"
        )));
    }
    Ok(a)
}

/// Both forms of the fixed-frame per-period energy.
pub fn energy_period_fixed_forms(wave: &ConformalWave, p: f64, n_q: usize) -> Result<(f64, f64)> {
    let level = Level::new(wave, p, n_q)?;
    Ok((level.energy_fixed(), level.energy_fixed_derivative_form()))
}

pub fn energy_period_moving(wave: &ConformalWave, p: f64, n_q: usize) -> Result<f64> {
    Ok(Level::new(wave, p, n_q)?.energy_moving())
}

pub fn energy_period_s(
    wave: &ConformalWave,
    s: f64,
    p: f64,
    n_q: usize,
    frame: Frame,
) -> Result<f64> {
    check_energy_exponent(s, frame)?;
    Ok(Level::new(wave, p, n_q)?.energy_s(s, frame))
}

pub fn streamline_length(wave: &ConformalWave, p: f64, n_q: usize) -> Result<f64> {
    Ok(Level::new(wave, p, n_q)?.length())
}

fn check_np(wave: &ConformalWave, p: f64, n_p: usize) -> Result<()> {
    if n_p < 16 {
        return Err(WaveError::Usage(format!("need n_p >= 16, got {n_p}")));
    }
    if !(0.0..=wave.m_abs * (1.0 + 1e-12)).contains(&p) {
        return Err(WaveError::Domain(format!(
            "p = {p} outside [0, {}]",
            wave.m_abs
        )));
    }
    Ok(())
}

fn integrate_in_p(
    wave: &ConformalWave,
    p: f64,
    n_q: usize,
    n_p: usize,
    per_level: impl Fn(&Level) -> f64 + Sync,
) -> Result<f64> {
    check_np(wave, p, n_p)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    let p = p.min(wave.m_abs);
    gauss_legendre_on(n_p, 0.0, p)
        .into_par_iter()
        .map(|(x, w)| Level::new(wave, x, n_q).map(|l| w * per_level(&l)))
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.iter().sum())
}

/// Energy in the region between the surface and streamline `p`:
/// `K`, `K_s` (fixed frame) or their moving-frame counterparts.
pub fn region_energy(
    wave: &ConformalWave,
    p: f64,
    n_q: usize,
    n_p: usize,
    frame: Frame,
    s: Option<f64>,
) -> Result<f64> {
    if let Some(s) = s {
        check_energy_exponent(s, frame)?;
    }
    integrate_in_p(wave, p, n_q, n_p, |l| match (frame, s) {
        (Frame::Fixed, None) => l.energy_fixed(),
        (Frame::Moving, None) => l.energy_moving(),
        (f, Some(s)) => l.energy_s(s, f),
    })
}

/// Area between the surface and streamline `p`.
pub fn region_area(wave: &ConformalWave, p: f64, n_q: usize, n_p: usize) -> Result<f64> {
    integrate_in_p(wave, p, n_q, n_p, Level::period)
}

/// Kinetic energy of one periodicity cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellEnergy {
    /// `int_0^|m| (1/2) int (2E)/(2E) dq dp` (half the rectangle area).
    pub moving_strip: f64,
    /// `iint E dA` over the physical cell.
    pub moving_physical: f64,
    /// `(1/2) iint E0/E dq dp` over the rectangle.
    pub fixed_strip: f64,
    /// `iint E0 dA` over the physical cell.
    pub fixed_physical: f64,
}

pub fn total_cell_energy(wave: &ConformalWave, n_q: usize, n_p: usize) -> Result<CellEnergy> {
    check_nq(n_q)?;
    let moving_strip = region_energy(wave, wave.m_abs, n_q, n_p, Frame::Moving, None)?;
    let fixed_strip = region_energy(wave, wave.m_abs, n_q, n_p, Frame::Fixed, None)?;
    let (moving_physical, fixed_physical) = physical_cell_integrals(wave, n_q, n_p)?;
    Ok(CellEnergy {
        moving_strip,
        moving_physical,
        fixed_strip,
        fixed_physical,
    })
}

/// `(iint E dA, iint E0 dA)` by trapezoid in x and Gauss-Legendre in z, with
/// the velocity obtained by inverting the map at every node.
pub fn physical_cell_integrals(wave: &ConformalWave, n_x: usize, n_z: usize) -> Result<(f64, f64)> {
    let l = wave.wavelength();
    let bed = wave.series.bed_level();
    let columns = (0..n_x)
        .into_par_iter()
        .map(|i| {
            let x = -0.5 * l + l * i as f64 / n_x as f64;
            let eta = surface_elevation(wave, x)?;
            let mut acc = (0.0, 0.0);
            let mut prev: Option<(f64, f64)> = None;
            for (z, w) in gauss_legendre_on(n_z, bed, eta) {
                // consecutive nodes of a column are close, so seed from the last one
                let (q, p) = match prev {
                    Some(seed) => match invert_near(wave, x, z, seed)? {
                        r if (0.0..=wave.m_abs).contains(&r.1) => r,
                        _ => invert_map(wave, x, z)?,
                    },
                    None => invert_map(wave, x, z)?,
                };
                prev = Some((q, p));
                let s = sample_at_qp(wave, q, p)?;
                acc.0 += w * s.e;
                acc.1 += w * s.e0;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let dx = l / n_x as f64;
    Ok(columns
        .iter()
        .fold((0.0, 0.0), |a, c| (a.0 + dx * c.0, a.1 + dx * c.1)))
}

/// Cell area `int (eta + d) dx` by trapezoid in x on the physical surface.
pub fn physical_cell_area(wave: &ConformalWave, n_x: usize) -> Result<f64> {
    let l = wave.wavelength();
    let bed = wave.series.bed_level();
    let heights = (0..n_x)
        .map(|i| surface_elevation(wave, -0.5 * l + l * i as f64 / n_x as f64).map(|e| e - bed))
        .collect::<Result<Vec<f64>>>()?;
    Ok(periodic_trapezoid(&heights, l))
}

/// Location of the surface extrema of E.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceExtrema {
    pub argmin_q: f64,
    pub argmax_q: f64,
    pub min_e: f64,
    pub max_e: f64,
    /// Grid spacing of the surface scan.
    pub cell: f64,
    /// Largest E found on a dense interior grid (0 < p <= |m|).
    pub interior_max_e: f64,
    /// `E(trough) - E(crest)`.
    pub trough_minus_crest: f64,
    /// `g_eff * (eta(crest) - eta(trough))`.
    pub g_eff_height: f64,
    /// `max |E + g_eff eta - B|` along the surface scan.
    pub bernoulli_deviation: f64,
}

impl SurfaceExtrema {
    /// Periodic distance of the minimum from the crest line q = 0.
    pub fn min_offset(&self, phi_max: f64) -> f64 {
        periodic_distance(self.argmin_q, 0.0, phi_max)
    }

    pub fn max_offset(&self, phi_max: f64) -> f64 {
        periodic_distance(self.argmax_q, 0.5 * phi_max, phi_max)
    }
}

pub fn periodic_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExtremaOutcome {
    Skipped { note: String },
    Located(SurfaceExtrema),
}

pub fn surface_energy_extrema(wave: &ConformalWave, n_q: usize) -> Result<ExtremaOutcome> {
    check_nq(n_q)?;
    if wave.is_flat() {
        return Ok(ExtremaOutcome::Skipped {
            note: "flat wave: E is constant, extremum location undefined".into(),
        });
    }
    let surf = Level::new(wave, 0.0, n_q)?;
    let (mut imin, mut imax) = (0, 0);
    let mut dev: f64 = 0.0;
    for (i, s) in surf.samples.iter().enumerate() {
        if s.e < surf.samples[imin].e {
            imin = i;
        }
        if s.e > surf.samples[imax].e {
            imax = i;
        }
        dev = dev.max((s.e + wave.g_eff * s.z - wave.bernoulli_b).abs());
    }
    let interior_levels = 32;
    let interior_max_e = (1..=interior_levels)
        .into_par_iter()
        .map(|j| {
            Level::new(wave, wave.m_abs * j as f64 / interior_levels as f64, n_q).map(|l| {
                l.samples
                    .iter()
                    .map(|s| s.e)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let crest = sample_at_qp(wave, 0.0, 0.0)?;
    let trough = sample_at_qp(wave, 0.5 * wave.phi_max, 0.0)?;
    Ok(ExtremaOutcome::Located(SurfaceExtrema {
        argmin_q: surf.samples[imin].q,
        argmax_q: surf.samples[imax].q,
        min_e: surf.samples[imin].e,
        max_e: surf.samples[imax].e,
        cell: wave.phi_max / n_q as f64,
        interior_max_e,
        trough_minus_crest: trough.e - crest.e,
        g_eff_height: wave.g_eff * (crest.z - trough.z),
        bernoulli_deviation: dev,
    }))
}

/// Settings for building curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub n_q: usize,
    pub n_p: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            n_q: DEFAULT_NQ,
            n_p: DEFAULT_NP,
        }
    }
}

/// A functional sampled on an ascending p-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticCurve {
    pub functional: Functional,
    pub s: Option<f64>,
    pub p_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub quadrature_n: usize,
}

impl DiagnosticCurve {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# functional={} s={} units={} n_q={}\np,value\n",
            self.functional.name(),
            self.s
                .map(|s| format!("{s}"))
                .unwrap_or_else(|| "none".into()),
            self.functional.units(),
            self.quadrature_n
        );
        for (p, v) in self.p_grid.iter().zip(&self.values) {
            out.push_str(&format!("{p:.17e},{v:.17e}\n"));
        }
        out
    }
}

/// `n` uniform points on `[0, |m|]` including both ends.
pub fn uniform_p_grid(wave: &ConformalWave, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                wave.m_abs
            } else {
                wave.m_abs * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Levels sampled once on a p-grid (and, for region functionals, at
/// Gauss-Legendre nodes between consecutive grid points) so that many curves
/// can share them.
#[derive(Debug, Clone)]
pub struct CurveBook {
    pub p_grid: Vec<f64>,
    pub quad: QuadratureSettings,
    levels: Vec<Level>,
    /// Per sub-interval `[prev, p_i]`: weighted node levels; empty when built
    /// without region support.
    pieces: Vec<Vec<(f64, Level)>>,
}

impl CurveBook {
    pub fn new(
        wave: &ConformalWave,
        p_grid: &[f64],
        quad: QuadratureSettings,
        regions: bool,
    ) -> Result<Self> {
        check_nq(quad.n_q)?;
        if p_grid.is_empty() || p_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(WaveError::Usage(
                "p-grid must be non-empty and strictly ascending".into(),
            ));
        }
        let source = Arc::new(wave.clone());
        let levels = p_grid
            .par_iter()
            .map(|&p| Level::shared(source.clone(), p, quad.n_q))
            .collect::<Result<Vec<_>>>()?;
        let pieces = if regions {
            let mut knots = vec![0.0];
            knots.extend(p_grid.iter().copied().filter(|&p| p > 0.0));
            knots
                .windows(2)
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|w| {
                    gauss_legendre_on(CURVE_SUBINTERVAL_ORDER, w[0], w[1])
                        .into_iter()
                        .map(|(x, wt)| Level::shared(source.clone(), x, quad.n_q).map(|l| (wt, l)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            p_grid: p_grid.to_vec(),
            quad,
            levels,
            pieces,
        })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Per-level values of an arbitrary functional of a [`Level`].
    pub fn map(&self, f: impl Fn(&Level) -> f64 + Sync + Send) -> Vec<f64> {
        self.levels.par_iter().map(f).collect()
    }

    /// Cumulative `int_0^p g(level) dp` at every grid point.
    pub fn accumulate(&self, g: impl Fn(&Level) -> f64 + Sync + Send) -> Result<Vec<f64>> {
        if self.pieces.is_empty() && self.p_grid.iter().any(|&p| p > 0.0) {
            return Err(WaveError::Usage(
                "curve book was built without region support".into(),
            ));
        }
        let sums: Vec<f64> = self
            .pieces
            .par_iter()
            .map(|piece| piece.iter().map(|(w, l)| w * g(l)).sum())
            .collect();
        let mut acc = 0.0;
        let mut it = sums.into_iter();
        Ok(self
            .p_grid
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    acc += it.next().unwrap_or(0.0);
                }
                acc
            })
            .collect())
    }

    pub fn curve(&self, functional: Functional, s: Option<f64>) -> Result<DiagnosticCurve> {
        check_exponent_for(functional, s)?;
        let values = if functional.is_region() {
            self.accumulate(|l| l.value(functional, s))?
        } else {
            self.map(|l| l.value(functional, s))
        };
        Ok(DiagnosticCurve {
            functional,
            s,
            p_grid: self.p_grid.clone(),
            values,
            quadrature_n: self.quad.n_q,
        })
    }
}

/// Evaluates a functional on a p-grid. Region functionals accumulate their
/// p-integral over consecutive grid intervals.
pub fn diagnostic_curve(
    wave: &ConformalWave,
    functional: Functional,
    s: Option<f64>,
    p_grid: &[f64],
    quad: QuadratureSettings,
) -> Result<DiagnosticCurve> {
    check_exponent_for(functional, s)?;
    CurveBook::new(wave, p_grid, quad, functional.is_region())?.curve(functional, s)
}
