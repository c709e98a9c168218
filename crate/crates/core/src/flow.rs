//! Point evaluation of the flow: positions, velocities and kinetic energies,
//! plus the flow constants used by the bounds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::solver::{ConformalWave, STAGNATION_FRACTION};

/// Full state at one point of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub q: f64,
    pub p: f64,
    pub x: f64,
    pub z: f64,
    /// u - c (m/s).
    pub u_rel: f64,
    pub w: f64,
    /// Moving-frame kinetic energy ((u-c)^2 + w^2)/2.
    pub e: f64,
    /// Fixed-frame kinetic energy (u^2 + w^2)/2.
    pub e0: f64,
}

impl FlowSample {
    /// Fixed-frame horizontal velocity u.
    pub fn u(&self, c: f64) -> f64 {
        self.u_rel + c
    }
}

/// `u - c - i w = 1 / (dZ/dzeta)`, built from an already evaluated derivative.
pub(crate) fn sample_from(
    wave: &ConformalWave,
    q: f64,
    p: f64,
    z: Complex64,
    dz: Complex64,
) -> FlowSample {
    let f = 1.0 / dz;
    let u_rel = f.re;
    let w = -f.im;
    let u = u_rel + wave.c;
    FlowSample {
        q,
        p,
        x: z.re,
        z: z.im,
        u_rel,
        w,
        e: 0.5 * (u_rel * u_rel + w * w),
        e0: 0.5 * (u * u + w * w),
    }
}

pub fn sample_at_qp(wave: &ConformalWave, q: f64, p: f64) -> Result<FlowSample> {
    let (z, dz) = wave.series.eval_both(q, p)?;
    let s = sample_from(wave, q, p, z, dz);
    let threshold = STAGNATION_FRACTION * wave.c.abs();
    let speed = (2.0 * s.e).sqrt();
    if !(speed > threshold) {
        return Err(WaveError::NearStagnation {
            magnitude: speed,
            threshold,
        });
    }
    Ok(s)
}

/// Solves `Z(q - i p) = x + i z` for `(q, p)` by complex Newton iteration.
pub fn invert_map(wave: &ConformalWave, x: f64, z: f64) -> Result<(f64, f64)> {
    let l = wave.wavelength();
    let bed = wave.series.bed_level();
    if z < bed - 1e-12 * l {
        return Err(WaveError::Domain(format!(
            "point ({x}, {z}) lies below the bed"
        )));
    }
    // reduce to one period around the crest
    let shift = ((x + 0.5 * l) / l).floor();
    let x_red = x - shift * l;
    let target = Complex64::new(x_red, z);
    let seed = Complex64::new(
        x_red / wave.series.linear_slope,
        (z - wave.series.mean_level) / wave.series.linear_slope,
    );
    let h = wave.m_abs;
    let slack = 1e-10 * h;
    let inside = |r: &(f64, f64)| r.1 >= -slack && r.1 <= h + slack;
    // a root of the continued map outside the strip is retried from a grid seed
    let (q, p) = match newton_invert(wave, target, seed).filter(inside) {
        Some(r) => r,
        None => {
            let seed = nearest_sample(wave, target);
            newton_invert(wave, target, seed).ok_or_else(|| WaveError::Inversion {
                x,
                z,
                reason: "Newton iteration stalled".into(),
            })?
        }
    };
    if p < -slack || p > h + slack {
        return Err(WaveError::Domain(format!(
            "point ({x}, {z}) lies outside the fluid (p = {p:.6e})"
        )));
    }
    Ok((q + shift * wave.phi_max, p.clamp(0.0, h)))
}

/// Inversion seeded by a nearby `(q, p)`, without period reduction or domain
/// checks; falls back to [`invert_map`] when the local iteration fails.
pub(crate) fn invert_near(
    wave: &ConformalWave,
    x: f64,
    z: f64,
    seed: (f64, f64),
) -> Result<(f64, f64)> {
    match newton_invert(wave, Complex64::new(x, z), Complex64::new(seed.0, -seed.1)) {
        Some(r) => Ok(r),
        None => invert_map(wave, x, z),
    }
}

/// Newton in the complex variable `zeta = q - i p`; returns `(q, p)`.
fn newton_invert(wave: &ConformalWave, target: Complex64, seed: Complex64) -> Option<(f64, f64)> {
    let l = wave.wavelength();
    let h = wave.m_abs;
    let mut zeta = seed;
    for _ in 0..60 {
        let (q, p) = (zeta.re, -zeta.im);
        if !(p > -0.5 * h && p < 1.5 * h) || !q.is_finite() {
            return None;
        }
        let z = wave.series.eval_map_unchecked(q, p);
        let err = z - target;
        if err.norm() <= 1e-13 * l {
            return Some((q, p));
        }
        let dz = wave.series.eval_map_derivative_unchecked(q, p);
        zeta -= err / dz;
    }
    None
}

fn nearest_sample(wave: &ConformalWave, target: Complex64) -> Complex64 {
    let (nq, np) = (64, 16);
    let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
    for i in 0..nq {
        let q = wave.phi_max * (i as f64 / nq as f64 - 0.5);
        for j in 0..=np {
            let p = wave.m_abs * j as f64 / np as f64;
            let d = (wave.series.eval_map_unchecked(q, p) - target).norm();
            if d < best.0 {
                best = (d, Complex64::new(q, -p));
            }
        }
    }
    best.1
}

/// Flow constants; `delta` and `delta0` are the same minimum of `u - c`
/// (over the periodic fluid domain and over the rectangle respectively).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConstants {
    pub phi_max: f64,
    pub m_abs: f64,
    pub delta: f64,
    pub delta0: f64,
    pub bernoulli_b: f64,
    /// Minimum of `u - c` restricted to the surface and bed lines.
    pub boundary_delta: f64,
    /// Location `(q, p)` of the minimum.
    pub argmin: (f64, f64),
    /// Change of the estimate produced by the local polish.
    pub polish_change: f64,
}

impl FlowConstants {
    /// Slightly deflated delta for bound checks against sampled minima.
    pub fn delta_for_bounds(&self) -> f64 {
        self.delta * (1.0 - 1e-8)
    }
}

pub(crate) fn golden_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    // endpoints matter when the minimum sits on a boundary
    [(a, f(a)), (b, f(b)), (c, fc), (d, fd)]
        .into_iter()
        .fold((a, f64::INFINITY), |best, cand| {
            if cand.1 < best.1 {
                cand
            } else {
                best
            }
        })
}

pub fn flow_constants(wave: &ConformalWave, nq: usize, np: usize) -> Result<FlowConstants> {
    if nq < 64 || np < 16 {
        return Err(WaveError::Usage(format!(
            "scan grid must be at least 64x16, got {nq}x{np}"
        )));
    }
    let (phi, h) = (wave.phi_max, wave.m_abs);
    let u_rel = |q: f64, p: f64| {
        (1.0 / wave
            .series
            .eval_map_derivative_unchecked(q, p.clamp(0.0, h)))
        .re
    };

    let mut grid_min = (f64::INFINITY, 0.0, 0.0);
    let mut boundary_min = f64::INFINITY;
    for i in 0..nq {
        let q = phi * i as f64 / nq as f64;
        for j in 0..=np {
            let p = h * j as f64 / np as f64;
            let v = u_rel(q, p);
            if v < grid_min.0 {
                grid_min = (v, q, p);
            }
            if j == 0 || j == np {
                boundary_min = boundary_min.min(v);
            }
        }
    }

    // coordinate-wise golden-section polish within one cell of the grid argmin
    let (dq, dp) = (phi / nq as f64, h / np as f64);
    let (mut best, mut q, mut p) = grid_min;
    for _ in 0..6 {
        let (qn, vq) = golden_min(|t| u_rel(t, p), q - dq, q + dq);
        let (pn, vp) = golden_min(|t| u_rel(qn, t), (p - dp).max(0.0), (p + dp).min(h));
        let v = vq.min(vp);
        let improved = v < best;
        if vq < best {
            q = qn;
            best = vq;
        }
        if vp < best {
            p = pn;
            best = vp;
        }
        if !improved {
            break;
        }
    }
    // boundary lines are polished separately so that boundary_delta is comparable
    for &pb in &[0.0, h] {
        let i0 = (0..nq)
            .min_by(|&a, &b| {
                u_rel(phi * a as f64 / nq as f64, pb)
                    .total_cmp(&u_rel(phi * b as f64 / nq as f64, pb))
            })
            .unwrap_or(0);
        let q0 = phi * i0 as f64 / nq as f64;
        let (_, v) = golden_min(|t| u_rel(t, pb), q0 - dq, q0 + dq);
        boundary_min = boundary_min.min(v);
    }
    let delta = best.min(boundary_min);
    Ok(FlowConstants {
        phi_max: phi,
        m_abs: h,
        delta,
        delta0: delta,
        bernoulli_b: wave.bernoulli_b,
        boundary_delta: boundary_min,
        argmin: (q.rem_euclid(phi), p),
        polish_change: grid_min.0 - delta,
    })
}

/// Abscissa x -> parameter q on the surface line (1D Newton on Re Z).
pub fn surface_q_at(wave: &ConformalWave, x: f64) -> Result<f64> {
    let s = &wave.series;
    let mut q = x / s.linear_slope;
    for _ in 0..60 {
        let z = s.eval_map_unchecked(q, 0.0);
        let err = z.re - x;
        if err.abs() <= 1e-14 * wave.wavelength().max(x.abs()) {
            return Ok(q);
        }
        q -= err / s.eval_map_derivative_unchecked(q, 0.0).re;
    }
    let z = s.eval_map_unchecked(q, 0.0);
    if (z.re - x).abs() <= 1e-11 * wave.wavelength() {
        Ok(q)
    } else {
        Err(WaveError::Inversion {
            x,
            z: f64::NAN,
            reason: "surface abscissa inversion failed".into(),
        })
    }
}

/// Surface elevation at abscissa x.
pub fn surface_elevation(wave: &ConformalWave, x: f64) -> Result<f64> {
    let q = surface_q_at(wave, x)?;
    Ok(wave.series.eval_map_unchecked(q, 0.0).im)
}

/// `n` samples `(x, eta(x))` on the uniform grid `x_j = -L/2 + j L / n`.
/// With `n` even the crest `x = 0` is sample `n/2` and the trough is sample 0.
pub fn surface_profile(wave: &ConformalWave, n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 16 {
        return Err(WaveError::Usage(format!(
            "surface profile needs n >= 16, got {n}"
        )));
    }
    let l = wave.wavelength();
    (0..n)
        .map(|j| {
            let x = -0.5 * l + l * j as f64 / n as f64;
            surface_elevation(wave, x).map(|e| (x, e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_wave, PhysicalParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::sync::OnceLock;

    fn w1() -> &'static ConformalWave {
        static W: OnceLock<ConformalWave> = OnceLock::new();
        W.get_or_init(|| solve_wave(&PhysicalParams::new(100.0, 10.0, 5.0)).unwrap())
    }

    fn flat() -> ConformalWave {
        solve_wave(&PhysicalParams::new(100.0, 10.0, 0.0)).unwrap()
    }

    #[test]
    fn flat_samples() {
        let w = flat();
        let s = sample_at_qp(&w, 123.0, 0.4 * w.m_abs).unwrap();
        assert_relative_eq!(s.u_rel, w.c.abs(), max_relative = 1e-14);
        assert!(s.w.abs() < 1e-15);
        assert_relative_eq!(s.e, 0.5 * w.c * w.c, max_relative = 1e-14);
        assert!(s.e0 < 1e-25);
    }

    #[test]
    fn crest_and_trough_samples() {
        let w = w1();
        let crest = sample_at_qp(w, 0.0, 0.0).unwrap();
        let trough = sample_at_qp(w, 0.5 * w.phi_max, 0.0).unwrap();
        assert!(crest.w.abs() < 1e-12);
        assert!(trough.e > crest.e);
        assert!(crest.x.abs() < 1e-12);
        assert_relative_eq!(trough.x, 50.0, max_relative = 1e-12);
    }

    #[test]
    fn flat_inversion_is_affine() {
        let w = flat();
        let (q, p) = invert_map(&w, 12.0, -3.0).unwrap();
        assert_relative_eq!(q, w.c.abs() * 12.0, max_relative = 1e-12);
        assert_relative_eq!(p, w.c.abs() * 3.0, max_relative = 1e-12);
    }

    #[test]
    fn inversion_round_trip() {
        let w = w1();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let q = rng.gen_range(-0.5..1.5) * w.phi_max;
            let p = rng.gen_range(0.0..1.0) * w.m_abs;
            let z = w.series.eval_map(q, p).unwrap();
            let (qi, pi) = invert_map(w, z.re, z.im).unwrap();
            assert!((qi - q).abs() < 1e-9 * w.phi_max, "q {q} -> {qi}");
            assert!((pi - p).abs() < 1e-9 * w.m_abs, "p {p} -> {pi}");
        }
        let crest = invert_map(w, 0.0, w.crest_elevation()).unwrap();
        assert!(crest.0.abs() < 1e-9 * w.phi_max && crest.1.abs() < 1e-9 * w.m_abs);
    }

    #[test]
    fn inversion_rejects_outside_points() {
        let w = w1();
        assert!(matches!(
            invert_map(w, 3.0, -10.5),
            Err(WaveError::Domain(_))
        ));
        assert!(invert_map(w, 0.0, w.crest_elevation() + 1.0).is_err());
    }

    #[test]
    fn flow_constants_flat_and_w1() {
        let fc = flow_constants(&flat(), 64, 16).unwrap();
        assert_relative_eq!(fc.delta, fc.phi_max / 100.0, max_relative = 1e-13);

        let w = w1();
        let fc = flow_constants(w, 128, 32).unwrap();
        assert!(fc.delta > 0.0 && fc.delta < w.c.abs());
        // the minimum is on the boundary (surface crest)
        assert!((fc.delta - fc.boundary_delta).abs() < 1e-12 * fc.delta);
        let fine = flow_constants(w, 256, 64).unwrap();
        assert!((fine.delta - fc.delta).abs() < 1e-6 * fc.delta);
        assert!(flow_constants(w, 32, 16).is_err());
    }

    #[test]
    fn surface_profile_shape() {
        let f = surface_profile(&flat(), 32).unwrap();
        assert!(f.iter().all(|(_, e)| e.abs() < 1e-14));

        let w = w1();
        let prof = surface_profile(w, 64).unwrap();
        let crest = prof[32].1;
        let trough = prof[0].1;
        assert!(prof[32].0.abs() < 1e-14);
        assert!((crest - trough - 5.0).abs() < 1e-10 * 100.0);
        for &(x, e) in &prof {
            let mirrored = surface_elevation(w, -x).unwrap();
            assert!((e - mirrored).abs() < 1e-12 * 5.0);
        }
        // monotone from crest to trough
        for k in 32..63 {
            assert!(prof[k + 1].1 <= prof[k].1);
        }
        assert!(surface_profile(w, 8).is_err());
    }

    #[test]
    fn cauchy_riemann_and_jacobian() {
        let w = w1();
        let h = 1e-4 * w.phi_max;
        for &(qf, pf) in &[(0.1, 0.2), (0.3, 0.5), (0.7, 0.8)] {
            let (q, p) = (qf * w.phi_max, pf * w.m_abs);
            let zq = (w.series.eval_map(q + h, p).unwrap() - w.series.eval_map(q - h, p).unwrap())
                / (2.0 * h);
            let zp = (w.series.eval_map(q, p + h).unwrap() - w.series.eval_map(q, p - h).unwrap())
                / (2.0 * h);
            // (x,z) as functions of (q, -p): x_q = -z_p ... in zeta = q - i p
            let scale = zq.norm();
            assert!((zq.re + zp.im).abs() < 1e-6 * scale);
            assert!((zq.im - zp.re).abs() < 1e-6 * scale);
            // Jacobian of (q,p) with respect to (x,z) equals |f'|^2 = 2E
            let det = (zq.re * zp.im - zq.im * zp.re).abs();
            let s = sample_at_qp(w, q, p).unwrap();
            assert_relative_eq!(1.0 / det, 2.0 * s.e, max_relative = 1e-6);
        }
    }

    #[test]
    fn sign_pattern_and_boundaries() {
        let w = w1();
        let n = 64;
        for j in 0..=8 {
            let p = w.m_abs * j as f64 / 8.0;
            for i in 1..n / 2 {
                let q = w.phi_max * i as f64 / n as f64;
                let right = sample_at_qp(w, q, p).unwrap();
                let left = sample_at_qp(w, -q, p).unwrap();
                assert!(right.w <= 1e-13 && left.w >= -1e-13);
            }
        }
        for i in 0..n {
            let q = w.phi_max * i as f64 / n as f64;
            let b = sample_at_qp(w, q, w.m_abs).unwrap();
            assert!((b.z + 10.0).abs() < 1e-10 * 10.0);
            assert!(b.w.abs() < 1e-13);
            let s = sample_at_qp(w, q, 0.0).unwrap();
            assert!((surface_elevation(w, s.x).unwrap() - s.z).abs() < 1e-11);
        }
    }
}
