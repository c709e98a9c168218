//! Fourier machinery on the periodic strip `0 <= p <= depth_p`.
//!
//! The inverse hodograph map is represented as
//!
//! ```text
//! Z(zeta) = slope * zeta + i * mean_level
//!         + sum_n [ c_n e^{-i n k zeta} + conj(c_n) e^{-2 n k h} e^{+i n k zeta} ]
//! ```
//!
//! with `zeta = q - i p`, `k = 2 pi / period_q` and `h = depth_p`. The paired
//! (bed-reflected) amplitudes make `Im Z` constant on `p = h`, and the linear
//! term gives `Z(q + period_q, p) = Z(q, p) + slope * period_q` exactly.
//!
//! Orientation: `p = 0` is the free surface and `p = h` the flat bed. A wave
//! symmetric about its crest at `q = 0` has purely imaginary `c_n`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};

/// Relative trailing-coefficient threshold used to call a series converged.
pub const DEFAULT_DECAY_THRESHOLD: f64 = 1e-10;

/// `|dZ/dzeta|` below this fraction of the linear slope is treated as a
/// degenerate (non-conformal) point of the map.
pub const DEGENERATE_DERIVATIVE_FRACTION: f64 = 1e-12;

/// Fourier series of the inverse hodograph map on the strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripSeries {
    /// Coefficient of the linear-in-zeta term (m per unit potential).
    pub linear_slope: f64,
    /// Constant imaginary offset (m).
    pub mean_level: f64,
    /// Amplitudes `c_n`, n = 1..N, of `e^{-i n k zeta}` (m).
    pub coeffs: Vec<Complex64>,
    /// Horizontal period in q, equal to phi_max (m^2/s).
    pub period_q: f64,
    /// Strip height, equal to |m| (m^2/s).
    pub depth_p: f64,
}

impl StripSeries {
    pub fn new(
        linear_slope: f64,
        mean_level: f64,
        coeffs: Vec<Complex64>,
        period_q: f64,
        depth_p: f64,
    ) -> Result<Self> {
        if !(period_q > 0.0) || !(depth_p > 0.0) {
            return Err(WaveError::Domain(format!(
                "strip needs period_q > 0 and depth_p > 0, got {period_q} and {depth_p}"
            )));
        }
        if coeffs.is_empty() {
            return Err(WaveError::Domain("strip series needs N >= 1 modes".into()));
        }
        Ok(Self {
            linear_slope,
            mean_level,
            coeffs,
            period_q,
            depth_p,
        })
    }

    /// Uniform flow: no oscillation, bed at `-depth` and surface at `z = 0`.
    pub fn uniform(wavelength: f64, depth: f64, period_q: f64, modes: usize) -> Result<Self> {
        let slope = wavelength / period_q;
        let depth_p = depth / slope;
        Self::new(
            slope,
            0.0,
            vec![Complex64::new(0.0, 0.0); modes.max(1)],
            period_q,
            depth_p,
        )
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.period_q
    }

    /// Horizontal period in physical space, L = slope * period_q.
    pub fn wavelength(&self) -> f64 {
        self.linear_slope * self.period_q
    }

    /// Bed elevation, `Im Z` on `p = depth_p`.
    pub fn bed_level(&self) -> f64 {
        self.mean_level - self.linear_slope * self.depth_p
    }

    /// `|c_N| / max_n |c_n|`; zero for an identically flat series.
    pub fn trailing_ratio(&self) -> f64 {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        self.coeffs.last().map(|c| c.norm()).unwrap_or(0.0) / max
    }

    pub fn is_spectrally_converged(&self, threshold: f64) -> bool {
        self.trailing_ratio() < threshold
    }

    fn check_p(&self, p: f64) -> Result<()> {
        let slack = 1e-12 * self.depth_p;
        if !(p >= -slack && p <= self.depth_p + slack) {
            return Err(WaveError::Domain(format!(
                "p = {p} outside [0, {}]",
                self.depth_p
            )));
        }
        Ok(())
    }

    /// Base exponentials `e^{-i k zeta}` and `e^{i k zeta} e^{-2 k h}`.
    /// Both have modulus <= 1 on the strip, so their powers are stable.
    fn bases(&self, q: f64, p: f64) -> (Complex64, Complex64) {
        let k = self.wavenumber();
        let (s, c) = (k * q).sin_cos();
        let down = (-k * p).exp();
        let up = (k * (p - 2.0 * self.depth_p)).exp();
        (
            Complex64::new(c * down, -s * down),
            Complex64::new(c * up, s * up),
        )
    }

    /// Oscillatory part of the map and of its derivative at one point.
    fn oscillation(&self, q: f64, p: f64) -> (Complex64, Complex64) {
        // powers below this modulus contribute nothing at double precision;
        // dropping them also keeps the loop out of subnormal arithmetic
        const DEAD: f64 = 1e-150;
        let k = self.wavenumber();
        let (e_dn, e_up) = self.bases(q, p);
        let live = self
            .coeffs
            .iter()
            .rposition(|c| c.norm_sqr() > 1e-280)
            .map_or(0, |i| i + 1);
        let mut pow_dn = Complex64::new(1.0, 0.0);
        let mut pow_up = Complex64::new(1.0, 0.0);
        let (mut dn_live, mut up_live) = (true, true);
        let mut value = Complex64::new(0.0, 0.0);
        let mut deriv = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs[..live].iter().enumerate() {
            let n = (i + 1) as f64;
            let mut a = Complex64::new(0.0, 0.0);
            let mut b = Complex64::new(0.0, 0.0);
            if dn_live {
                pow_dn *= e_dn;
                dn_live = pow_dn.norm_sqr() > DEAD * DEAD;
                a = c * pow_dn;
            }
            if up_live {
                pow_up *= e_up;
                up_live = pow_up.norm_sqr() > DEAD * DEAD;
                b = c.conj() * pow_up;
            }
            if !dn_live && !up_live {
                break;
            }
            value += a + b;
            deriv += Complex64::new(0.0, n * k) * (b - a);
        }
        (value, deriv)
    }

    /// Evaluates `Z = x + i z` at `(q, p)`.
    pub fn eval_map(&self, q: f64, p: f64) -> Result<Complex64> {
        self.check_p(p)?;
        Ok(self.eval_map_unchecked(q, p))
    }

    pub(crate) fn eval_map_unchecked(&self, q: f64, p: f64) -> Complex64 {
        let (osc, _) = self.oscillation(q, p);
        let linear = Complex64::new(self.linear_slope * q, -self.linear_slope * p);
        linear + Complex64::new(0.0, self.mean_level) + osc
    }

    /// Complex derivative `dZ/dzeta`, the reciprocal of `f' = u - c - i w`.
    pub fn eval_map_derivative(&self, q: f64, p: f64) -> Result<Complex64> {
        self.check_p(p)?;
        let d = self.eval_map_derivative_unchecked(q, p);
        let threshold = DEGENERATE_DERIVATIVE_FRACTION * self.linear_slope.abs();
        if d.norm() < threshold {
            return Err(WaveError::NearStagnation {
                magnitude: d.norm(),
                threshold,
            });
        }
        Ok(d)
    }

    pub(crate) fn eval_map_derivative_unchecked(&self, q: f64, p: f64) -> Complex64 {
        let (_, d) = self.oscillation(q, p);
        Complex64::new(self.linear_slope, 0.0) + d
    }

    /// Map and derivative together, sharing the series summation.
    pub fn eval_both(&self, q: f64, p: f64) -> Result<(Complex64, Complex64)> {
        self.check_p(p)?;
        let (osc, d) = self.oscillation(q, p);
        let z = Complex64::new(
            self.linear_slope * q,
            self.mean_level - self.linear_slope * p,
        ) + osc;
        Ok((z, Complex64::new(self.linear_slope, 0.0) + d))
    }

    /// Full two-sided coefficient set of this series (see [`apply_bed_reflection`]).
    pub fn two_sided(&self) -> TwoSidedCoefficients {
        apply_bed_reflection(&self.coeffs, self.depth_p, self.wavenumber())
    }
}

/// Amplitudes of `e^{-i n k zeta}` (`decaying`) and of `e^{+i n k zeta}`
/// (`growing`), n = 1..N.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedCoefficients {
    pub decaying: Vec<Complex64>,
    pub growing: Vec<Complex64>,
    pub depth_p: f64,
    pub k_q: f64,
}

impl TwoSidedCoefficients {
    /// Oscillatory part `sum_n decaying_n e^{-i n k zeta} + growing_n e^{i n k zeta}`.
    pub fn eval(&self, q: f64, p: f64) -> Complex64 {
        let zeta = Complex64::new(q, -p);
        let i = Complex64::new(0.0, 1.0);
        self.decaying
            .iter()
            .zip(&self.growing)
            .enumerate()
            .map(|(idx, (a, b))| {
                let n = (idx + 1) as f64;
                a * (-i * n * self.k_q * zeta).exp() + b * (i * n * self.k_q * zeta).exp()
            })
            .sum()
    }
}

/// Pairs every surface amplitude with its bed image,
/// `growing_n = conj(c_n) * exp(-2 n k_q depth_p)`, so that the imaginary part
/// of every mode vanishes on `p = depth_p`.
pub fn apply_bed_reflection(
    surface_coeffs: &[Complex64],
    depth_p: f64,
    k_q: f64,
) -> TwoSidedCoefficients {
    let growing = surface_coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let n = (i + 1) as f64;
            c.conj() * (-2.0 * n * k_q * depth_p).exp()
        })
        .collect();
    TwoSidedCoefficients {
        decaying: surface_coeffs.to_vec(),
        growing,
        depth_p,
        k_q,
    }
}

/// Forward/inverse discrete Fourier transform on a uniform periodic grid.
///
/// `forward` returns `hat_j = (1/n) sum_m v_m e^{-2 pi i j m / n}` so that the
/// zero mode is the grid mean; `inverse` undoes it.
pub struct GridTransform {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl GridTransform {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(WaveError::Usage(
                "grid transform needs at least one point".into(),
            ));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.len {
            return Err(WaveError::Usage(format!(
                "grid transform planned for {} points, got {n}",
                self.len
            )));
        }
        Ok(())
    }

    pub fn forward(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(values.len())?;
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        Ok(buf)
    }

    pub fn forward_real(&self, values: &[f64]) -> Result<Vec<Complex64>> {
        let buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&buf)
    }

    pub fn inverse(&self, spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(spectrum.len())?;
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        Ok(buf)
    }
}

/// Uniform periodic grid `q_j = j * period / n`, j = 0..n-1.
pub fn periodic_grid(period: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| period * j as f64 / n as f64).collect()
}
