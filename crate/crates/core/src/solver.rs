//! Steady periodic waves in conformal variables.
//!
//! For irrotational flow on the equatorial f-plane the momentum equations
//! integrate to `E + P + 2 omega psi + (g - 2 omega c) z = const`. On the
//! free surface (`psi = 0`, `P = P_atm`) this is a classical Bernoulli law
//! with the effective gravity `g_eff = g - 2 omega c`, so the velocity field
//! and the surface are those of a gravity wave under `g_eff`. The speed `c`
//! follows Stokes' first definition (zero mean horizontal velocity),
//! `c = -phi_max / L`, which closes the coupling `g_eff(c)`.
//!
//! Unknowns for a crest-symmetric wave: real amplitudes `a_n` (with
//! `c_n = i a_n`), the strip aspect `kappa = k |m|`, the speed `v = |c|` and
//! the Bernoulli constant `B`. Equations: the dynamic condition at `N + 1`
//! collocation points on the half period, the crest-to-trough height, and a
//! zero mean surface elevation (so `d` is the mean depth).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::spectral::StripSeries;

/// Fraction of the limiting steepness accepted by the solver.
pub const STEEPNESS_CAP_FRACTION: f64 = 0.85;
/// Stagnation guard, as a fraction of |c|.
pub const STAGNATION_FRACTION: f64 = 1e-6;
/// Smallest continuation step, as a fraction of the target height.
pub const MIN_STEP_FRACTION: f64 = 1.0 / 1024.0;

fn default_g() -> f64 {
    9.8
}
fn default_omega() -> f64 {
    7.3e-5
}
fn default_modes() -> usize {
    256
}
fn default_tol() -> f64 {
    1e-12
}
fn default_iters() -> usize {
    50
}
fn default_steps() -> usize {
    4
}

/// Physical description of a wave problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Wavelength L (m).
    pub wavelength: f64,
    /// Mean depth d (m).
    pub depth: f64,
    /// Crest-to-trough height H (m).
    pub wave_height: f64,
    #[serde(default = "default_g")]
    pub gravity: f64,
    /// Rotation rate of the Earth (rad/s).
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_iters")]
    pub max_newton_iters: usize,
    #[serde(default = "default_steps")]
    pub continuation_steps: usize,
}

impl PhysicalParams {
    pub fn new(wavelength: f64, depth: f64, wave_height: f64) -> Self {
        Self {
            wavelength,
            depth,
            wave_height,
            gravity: default_g(),
            omega: default_omega(),
            modes: default_modes(),
            newton_tol: default_tol(),
            max_newton_iters: default_iters(),
            continuation_steps: default_steps(),
        }
    }

    pub fn with_modes(mut self, modes: usize) -> Self {
        self.modes = modes;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_height(mut self, h: f64) -> Self {
        self.wave_height = h;
        self
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(WaveError::Domain(m));
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return bad(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            ));
        }
        if !(self.depth > 0.0 && self.depth.is_finite()) {
            return bad(format!("depth must be positive, got {}", self.depth));
        }
        if !(self.wave_height >= 0.0 && self.wave_height.is_finite()) {
            return bad(format!(
                "wave height must be >= 0, got {}",
                self.wave_height
            ));
        }
        if !(self.gravity > 0.0) {
            return bad(format!("gravity must be positive, got {}", self.gravity));
        }
        if !(self.omega >= 0.0) {
            return bad(format!("omega must be >= 0, got {}", self.omega));
        }
        if self.modes < 8 {
            return bad(format!("need at least 8 modes, got {}", self.modes));
        }
        if !(self.newton_tol > 0.0) || self.max_newton_iters == 0 {
            return bad("newton_tol must be positive and max_newton_iters nonzero".into());
        }
        let cap = STEEPNESS_CAP_FRACTION * limiting_steepness(self.depth / self.wavelength);
        if self.wave_height / self.wavelength > cap {
            return bad(format!(
                "H/L = {:.4} exceeds the steepness cap {:.4} for d/L = {:.4}",
                self.wave_height / self.wavelength,
                cap,
                self.depth / self.wavelength
            ));
        }
        Ok(())
    }
}

/// Limiting (highest-wave) steepness H/L as a function of d/L, from the
/// rational fit of Williams' tabulated values (Fenton 1990).
pub fn limiting_steepness(depth_over_length: f64) -> f64 {
    let r = 1.0 / depth_over_length;
    let num = 0.141063 * r + 0.0095721 * r * r + 0.0077829 * r * r * r;
    let den = 1.0 + 0.078834 * r + 0.0317567 * r * r + 0.0093407 * r * r * r;
    num / den / r
}

/// Linear phase speed |c| with the self-consistent effective gravity
/// `g + 2 omega |c|`: the positive root of `c^2 = (g + 2 omega c) tanh(kd)/k`.
pub fn linear_speed(params: &PhysicalParams) -> f64 {
    let k = params.wavenumber();
    let t = (k * params.depth).tanh() / k;
    let b = 2.0 * params.omega * t;
    0.5 * (b + (b * b + 4.0 * params.gravity * t).sqrt())
}

/// A converged steady wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalWave {
    pub series: StripSeries,
    /// Phase speed (m/s), negative: the wave travels west.
    pub c: f64,
    pub phi_max: f64,
    /// |m|, the stream-function range (m^2/s).
    pub m_abs: f64,
    /// Surface Bernoulli constant `E + g_eff z` (m^2/s^2).
    pub bernoulli_b: f64,
    pub g_eff: f64,
    /// Off-collocation dynamic residual, see [`residual`].
    pub residual_norm: f64,
    pub params: PhysicalParams,
}

impl ConformalWave {
    pub fn wavelength(&self) -> f64 {
        self.params.wavelength
    }

    pub fn depth(&self) -> f64 {
        self.params.depth
    }

    pub fn is_flat(&self) -> bool {
        self.series.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    /// Surface elevation at the crest line, `z(0, 0)`.
    pub fn crest_elevation(&self) -> f64 {
        self.series.eval_map_unchecked(0.0, 0.0).im
    }

    pub fn trough_elevation(&self) -> f64 {
        self.series.eval_map_unchecked(0.5 * self.phi_max, 0.0).im
    }

    /// Real amplitudes `a_n` with `c_n = i a_n`.
    fn amplitudes(&self) -> Vec<f64> {
        self.series.coeffs.iter().map(|c| c.im).collect()
    }

    fn unknowns(&self) -> Unknowns {
        Unknowns {
            a: self.amplitudes(),
            kappa: self.series.wavenumber() * self.m_abs,
            v: -self.c,
            b: self.bernoulli_b,
        }
    }

    /// Copy with one map coefficient overwritten; used for corruption probes.
    pub fn with_coefficient(&self, n: usize, value: Complex64) -> Self {
        let mut w = self.clone();
        w.series.coeffs[n - 1] = value;
        w.residual_norm = residual(&w);
        w
    }
}

#[derive(Debug, Clone)]
struct Unknowns {
    a: Vec<f64>,
    kappa: f64,
    v: f64,
    b: f64,
}

impl Unknowns {
    fn to_vector(&self) -> DVector<f64> {
        let n = self.a.len();
        let mut x = DVector::zeros(n + 3);
        x.rows_mut(0, n).copy_from_slice(&self.a);
        x[n] = self.kappa;
        x[n + 1] = self.v;
        x[n + 2] = self.b;
        x
    }

    fn from_vector(x: &DVector<f64>) -> Self {
        let n = x.len() - 3;
        Self {
            a: x.rows(0, n).iter().copied().collect(),
            kappa: x[n],
            v: x[n + 1],
            b: x[n + 2],
        }
    }

    fn resized(&self, modes: usize) -> Self {
        let mut a = self.a.clone();
        a.resize(modes, 0.0);
        Self { a, ..self.clone() }
    }
}

/// Collocation system for one set of physical parameters.
struct System<'a> {
    params: &'a PhysicalParams,
    /// cos(n s_j), sin(n s_j) for n = 1..N at the collocation points.
    cos_tab: Vec<Vec<f64>>,
    sin_tab: Vec<Vec<f64>>,
}

impl<'a> System<'a> {
    fn new(params: &'a PhysicalParams) -> Self {
        let n = params.modes;
        let nodes: Vec<f64> = (0..=n).map(|j| PI * j as f64 / n as f64).collect();
        let cos_tab = nodes
            .iter()
            .map(|s| (1..=n).map(|m| (m as f64 * s).cos()).collect())
            .collect();
        let sin_tab = nodes
            .iter()
            .map(|s| (1..=n).map(|m| (m as f64 * s).sin()).collect())
            .collect();
        Self {
            params,
            cos_tab,
            sin_tab,
        }
    }

    fn modes(&self) -> usize {
        self.params.modes
    }

    /// Residual vector and (optionally) its Jacobian.
    fn evaluate(&self, u: &Unknowns, with_jacobian: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let nm = self.modes();
        let pr = self.params;
        let l = pr.wavelength;
        let scale = 2.0 * PI / l;
        let g_eff = pr.gravity + 2.0 * pr.omega * u.v;
        let mean_level = -pr.depth + l * u.kappa / (2.0 * PI);

        let e2: Vec<f64> = (1..=nm)
            .map(|n| (-2.0 * n as f64 * u.kappa).exp())
            .collect();
        let alpha: Vec<f64> = e2.iter().map(|e| 1.0 + e).collect();
        let beta: Vec<f64> = e2.iter().map(|e| 1.0 - e).collect();
        // d alpha / d kappa = -2n e2, d beta / d kappa = +2n e2
        let dbeta: Vec<f64> = e2
            .iter()
            .enumerate()
            .map(|(i, e)| 2.0 * (i + 1) as f64 * e)
            .collect();

        let rows = nm + 3;
        let mut r = DVector::zeros(rows);
        let mut jac = with_jacobian.then(|| DMatrix::zeros(rows, rows));

        for j in 0..=nm {
            let (ct, st) = (&self.cos_tab[j], &self.sin_tab[j]);
            let mut wr = 1.0;
            let mut wi = 0.0;
            let mut z = mean_level;
            let mut dwr_k = 0.0;
            let mut dwi_k = 0.0;
            let mut dz_k = l / (2.0 * PI);
            for i in 0..nm {
                let n = (i + 1) as f64;
                let a = u.a[i];
                wr += scale * n * a * alpha[i] * ct[i];
                wi -= scale * n * a * beta[i] * st[i];
                z += a * beta[i] * ct[i];
                dwr_k -= scale * n * a * dbeta[i] * ct[i];
                dwi_k -= scale * n * a * dbeta[i] * st[i];
                dz_k += a * dbeta[i] * ct[i];
            }
            let w2 = wr * wr + wi * wi;
            r[j] = u.v * u.v / (2.0 * w2) + g_eff * z - u.b;

            if let Some(jm) = jac.as_mut() {
                let kin = -u.v * u.v / (w2 * w2);
                for i in 0..nm {
                    let n = (i + 1) as f64;
                    let dwr = scale * n * alpha[i] * ct[i];
                    let dwi = -scale * n * beta[i] * st[i];
                    jm[(j, i)] = kin * (wr * dwr + wi * dwi) + g_eff * beta[i] * ct[i];
                }
                jm[(j, nm)] = kin * (wr * dwr_k + wi * dwi_k) + g_eff * dz_k;
                jm[(j, nm + 1)] = u.v / w2 + 2.0 * pr.omega * z;
                jm[(j, nm + 2)] = -1.0;
            }
        }

        // crest-to-trough height
        let hrow = nm + 1;
        let mut height = -pr.wave_height;
        for i in (0..nm).step_by(2) {
            height += 2.0 * u.a[i] * beta[i];
        }
        r[hrow] = height;

        // zero mean surface elevation: L*ml + pi * sum n a_n^2 alpha_n beta_n = 0
        let mrow = nm + 2;
        let mut mean = mean_level;
        for i in 0..nm {
            mean += PI / l * (i + 1) as f64 * u.a[i] * u.a[i] * alpha[i] * beta[i];
        }
        r[mrow] = mean;

        if let Some(jm) = jac.as_mut() {
            let mut dh_k = 0.0;
            for i in (0..nm).step_by(2) {
                jm[(hrow, i)] = 2.0 * beta[i];
                dh_k += 2.0 * u.a[i] * dbeta[i];
            }
            jm[(hrow, nm)] = dh_k;
            let mut dm_k = l / (2.0 * PI);
            for i in 0..nm {
                let n = (i + 1) as f64;
                jm[(mrow, i)] = 2.0 * PI / l * n * u.a[i] * alpha[i] * beta[i];
                // d(alpha beta)/d kappa = 4n e^{-4 n kappa}
                dm_k += PI / l * n * u.a[i] * u.a[i] * 4.0 * n * e2[i] * e2[i];
            }
            jm[(mrow, nm)] = dm_k;
        }
        (r, jac)
    }

    fn measure(&self, r: &DVector<f64>) -> (f64, f64) {
        let nm = self.modes();
        let dynamic = r.rows(0, nm + 1).amax();
        let geometric = r[nm + 1].abs().max(r[nm + 2].abs());
        (dynamic, geometric)
    }

    fn converged(&self, r: &DVector<f64>) -> bool {
        let (dynamic, geometric) = self.measure(r);
        dynamic <= self.params.newton_tol && geometric <= 1e-13 * self.params.wavelength
    }

    fn newton(&self, start: Unknowns) -> Result<Unknowns> {
        let mut u = start;
        let (mut r, _) = self.evaluate(&u, false);
        let merit = |r: &DVector<f64>| {
            let (d, g) = self.measure(r);
            d.max(g * self.params.gravity)
        };
        let mut last = merit(&r);
        for iteration in 0..self.params.max_newton_iters {
            if self.converged(&r) {
                return Ok(u);
            }
            let (_, jac) = self.evaluate(&u, true);
            let lu = jac.expect("jacobian requested").lu();
            // a singular Jacobian ends the iteration where it stands
            let step = lu.solve(&(-&r)).ok_or(WaveError::NoConvergence {
                iterations: iteration,
                residual: last,
            })?;
            let x0 = u.to_vector();
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..8 {
                let trial = Unknowns::from_vector(&(&x0 + &step * lambda));
                if trial.kappa > 0.0 && trial.v > 0.0 {
                    let (rt, _) = self.evaluate(&trial, false);
                    let m = merit(&rt);
                    if m.is_finite()
                        && (m < last || lambda < 1.0 / 64.0 || m < 10.0 * self.params.newton_tol)
                    {
                        accepted = Some((trial, rt, m));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            let Some((trial, rt, m)) = accepted else {
                return Err(WaveError::NoConvergence {
                    iterations: self.params.max_newton_iters,
                    residual: last,
                });
            };
            u = trial;
            r = rt;
            last = m;
        }
        if self.converged(&r) {
            Ok(u)
        } else {
            Err(WaveError::NoConvergence {
                iterations: self.params.max_newton_iters,
                residual: last,
            })
        }
    }
}

fn linear_guess(params: &PhysicalParams, height: f64) -> Unknowns {
    let k = params.wavenumber();
    let kappa = k * params.depth;
    let v = linear_speed(params);
    let mut a = vec![0.0; params.modes];
    a[0] = 0.5 * height / (1.0 - (-2.0 * kappa).exp());
    Unknowns {
        a,
        kappa,
        v,
        b: 0.5 * v * v,
    }
}

fn assemble(params: &PhysicalParams, u: &Unknowns) -> Result<ConformalWave> {
    let l = params.wavelength;
    let phi_max = u.v * l;
    let m_abs = u.kappa * phi_max / (2.0 * PI);
    let mean_level = -params.depth + l * u.kappa / (2.0 * PI);
    let coeffs = u.a.iter().map(|&a| Complex64::new(0.0, a)).collect();
    let series = StripSeries::new(1.0 / u.v, mean_level, coeffs, phi_max, m_abs)?;
    let mut wave = ConformalWave {
        series,
        c: -u.v,
        phi_max,
        m_abs,
        bernoulli_b: u.b,
        g_eff: params.gravity + 2.0 * params.omega * u.v,
        residual_norm: 0.0,
        params: params.clone(),
    };
    wave.residual_norm = residual(&wave);
    Ok(wave)
}

fn check_stagnation(wave: &ConformalWave) -> Result<()> {
    let threshold = STAGNATION_FRACTION * wave.c.abs();
    let n = 4 * wave.series.modes();
    let mut min_rel = f64::INFINITY;
    for j in 0..n {
        let q = wave.phi_max * j as f64 / n as f64;
        for &p in &[0.0, wave.m_abs] {
            let d = wave.series.eval_map_derivative_unchecked(q, p);
            min_rel = min_rel.min((1.0 / d).re);
        }
    }
    if !(min_rel > threshold) {
        return Err(WaveError::Stagnation {
            min_relative_speed: min_rel,
            threshold,
        });
    }
    Ok(())
}

/// The uniform-flow solution with the linear speed.
pub fn flat_wave(params: &PhysicalParams) -> Result<ConformalWave> {
    let v = linear_speed(params);
    let u = Unknowns {
        a: vec![0.0; params.modes],
        kappa: params.wavenumber() * params.depth,
        v,
        b: 0.5 * v * v,
    };
    assemble(&params.clone().with_height(0.0), &u)
}

fn solve_seeded(params: &PhysicalParams, seed: Option<(f64, Unknowns)>) -> Result<Unknowns> {
    let target = params.wave_height;
    let steps = params.continuation_steps.max(1);
    let min_step = target * MIN_STEP_FRACTION;
    let (mut h_done, mut state) = match seed {
        Some((h, u)) => (h, u.resized(params.modes)),
        None => (0.0, linear_guess(params, 0.0)),
    };
    let mut step = (target - h_done) / steps as f64;
    while h_done < target {
        let h_next = (h_done + step).min(target);
        let local = params.clone().with_height(h_next);
        let system = System::new(&local);
        let guess = if h_done == 0.0 {
            linear_guess(&local, h_next)
        } else {
            // scale the previous shape towards the new height
            let mut g = state.clone();
            let ratio = h_next / h_done;
            g.a.iter_mut().for_each(|a| *a *= ratio);
            g
        };
        match system.newton(guess) {
            Ok(u) => {
                state = u;
                h_done = h_next;
            }
            Err(e) => {
                step *= 0.5;
                if step < min_step {
                    return Err(e);
                }
            }
        }
    }
    Ok(state)
}

/// Solves for the steady wave described by `params`.
pub fn solve_wave(params: &PhysicalParams) -> Result<ConformalWave> {
    params.validate()?;
    if params.wave_height == 0.0 {
        return flat_wave(params);
    }
    let u = solve_seeded(params, None)?;
    let wave = assemble(params, &u)?;
    check_stagnation(&wave)?;
    Ok(wave)
}

/// Solves a sequence of ascending heights, each seeded from the previous.
pub fn continuation_path(params: &PhysicalParams, heights: &[f64]) -> Result<Vec<ConformalWave>> {
    if heights.windows(2).any(|w| w[1] < w[0]) {
        return Err(WaveError::Usage(
            "continuation heights must be ascending".into(),
        ));
    }
    let mut out = Vec::with_capacity(heights.len());
    let mut seed: Option<(f64, Unknowns)> = None;
    for &h in heights {
        let local = params.clone().with_height(h);
        let annotate = |e: WaveError| WaveError::Continuation {
            height: h,
            source: Box::new(e),
        };
        local.validate().map_err(annotate)?;
        let wave = if h == 0.0 {
            flat_wave(&local).map_err(annotate)?
        } else {
            let u = solve_seeded(&local, seed.clone()).map_err(annotate)?;
            let w = assemble(&local, &u).map_err(annotate)?;
            check_stagnation(&w).map_err(annotate)?;
            seed = Some((h, u));
            w
        };
        out.push(wave);
    }
    Ok(out)
}

/// Re-solves `wave` with a different number of modes, seeded from it.
pub fn refine(wave: &ConformalWave, modes: usize) -> Result<ConformalWave> {
    let params = wave.params.clone().with_modes(modes);
    params.validate()?;
    if wave.is_flat() {
        return flat_wave(&params);
    }
    let system = System::new(&params);
    let u = system.newton(wave.unknowns().resized(modes))?;
    assemble(&params, &u)
}

/// Max over a uniform grid of at least 4N points of the surface Bernoulli
/// defect `|1/(2|dZ/dzeta|^2) + g_eff Im Z - B|` (m^2/s^2).
pub fn residual(wave: &ConformalWave) -> f64 {
    let n = (4 * wave.series.modes()).max(64);
    (0..n)
        .map(|j| {
            let q = wave.phi_max * j as f64 / n as f64;
            let z = wave.series.eval_map_unchecked(q, 0.0);
            let d = wave.series.eval_map_derivative_unchecked(q, 0.0);
            (0.5 / d.norm_sqr() + wave.g_eff * z.im - wave.bernoulli_b).abs()
        })
        .fold(0.0, f64::max)
}

/// Coefficients of the classical finite-depth Stokes expansion in
/// `eps = k H / 2` (Fenton's form, Stokes' first definition of speed).
#[derive(Debug, Clone, Copy)]
pub struct StokesCoefficients {
    pub c0: f64,
    pub c2: f64,
    pub b22: f64,
    pub b31: f64,
}

impl StokesCoefficients {
    pub fn new(kd: f64) -> Self {
        let s = 1.0 / (2.0 * kd).cosh();
        let c0 = kd.tanh().sqrt();
        Self {
            c0,
            c2: c0 * (2.0 + 7.0 * s * s) / (4.0 * (1.0 - s) * (1.0 - s)),
            b22: (1.0 + 2.0 * s) / (2.0 * (1.0 - s) * kd.tanh()),
            b31: -3.0 * (1.0 + 3.0 * s + 3.0 * s * s + 2.0 * s * s * s) / (8.0 * (1.0 - s).powi(3)),
        }
    }
}

/// Phase speed |c| of the Stokes expansion of the given order, with the
/// self-consistent effective gravity.
pub fn stokes_speed(params: &PhysicalParams, order: usize) -> Result<f64> {
    if !(1..=3).contains(&order) {
        return Err(WaveError::Unsupported(format!(
            "Stokes order {order} (max 3)"
        )));
    }
    let k = params.wavenumber();
    let eps = 0.5 * k * params.wave_height;
    let co = StokesCoefficients::new(k * params.depth);
    let dimless = if order >= 3 {
        co.c0 + eps * eps * co.c2
    } else {
        co.c0
    };
    // |c| = A sqrt(g + 2 omega |c|) with A = dimless / sqrt(k)
    let a2 = dimless * dimless / k;
    let w = params.omega * a2;
    Ok(w + (w * w + a2 * params.gravity).sqrt())
}

/// Approximate wave from the Stokes expansion (order <= 3), expressed in the
/// same conformal representation as [`solve_wave`] output.
pub fn stokes_expansion(params: &PhysicalParams, order: usize) -> Result<ConformalWave> {
    let speed = stokes_speed(params, order)?;
    if !(params.wavelength > 0.0 && params.depth > 0.0 && params.modes >= 1) {
        return Err(WaveError::Domain(
            "invalid wavelength, depth or modes".into(),
        ));
    }
    let k = params.wavenumber();
    let eps = 0.5 * k * params.wave_height;
    let co = StokesCoefficients::new(k * params.depth);
    let eta = |x: f64| -> f64 {
        let t = k * x;
        let mut ke = eps * t.cos();
        if order >= 2 {
            ke += eps * eps * co.b22 * (2.0 * t).cos();
        }
        if order >= 3 {
            ke += eps.powi(3) * co.b31 * (t.cos() - (3.0 * t).cos());
        }
        ke / k
    };

    // Fixed point: z(s) = eta(x(s)), x(s) = L s / 2pi + sum A_n coth(n kappa) sin(n s).
    let nm = params.modes;
    let ns = 4 * nm;
    let l = params.wavelength;
    let mut surf = vec![0.0; nm];
    let mut kappa = k * params.depth;
    for _ in 0..200 {
        let nodes: Vec<f64> = (0..ns).map(|j| 2.0 * PI * j as f64 / ns as f64).collect();
        let z: Vec<f64> = nodes
            .iter()
            .map(|&s| {
                let x = l * s / (2.0 * PI)
                    + surf
                        .iter()
                        .enumerate()
                        .map(|(i, &a)| {
                            let n = (i + 1) as f64;
                            a / (n * kappa).tanh() * (n * s).sin()
                        })
                        .sum::<f64>();
                eta(x)
            })
            .collect();
        let mean = z.iter().sum::<f64>() / ns as f64;
        let new_surf: Vec<f64> = (1..=nm)
            .map(|n| {
                2.0 / ns as f64
                    * z.iter()
                        .zip(&nodes)
                        .map(|(v, s)| v * (n as f64 * s).cos())
                        .sum::<f64>()
            })
            .collect();
        let new_kappa = 2.0 * PI * (params.depth + mean) / l;
        let change = new_surf
            .iter()
            .zip(&surf)
            .map(|(a, b)| (a - b).abs())
            .fold((new_kappa - kappa).abs(), f64::max);
        surf = new_surf;
        kappa = new_kappa;
        if change < 1e-15 * l {
            break;
        }
    }
    let a: Vec<f64> = surf
        .iter()
        .enumerate()
        .map(|(i, s)| s / (1.0 - (-2.0 * (i + 1) as f64 * kappa).exp()))
        .collect();
    let mut u = Unknowns {
        a,
        kappa,
        v: speed,
        b: 0.0,
    };
    let mut wave = assemble(params, &u)?;
    let crest = wave.series.eval_map_derivative_unchecked(0.0, 0.0);
    u.b = 0.5 / crest.norm_sqr() + wave.g_eff * wave.crest_elevation();
    wave = assemble(params, &u)?;
    Ok(wave)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn w1() -> PhysicalParams {
        PhysicalParams::new(100.0, 10.0, 5.0)
    }

    #[test]
    fn flat_wave_matches_dispersion() {
        let p = w1().with_height(0.0);
        let w = solve_wave(&p).unwrap();
        assert!(w.is_flat());
        let k = p.wavenumber();
        let expected = ((w.g_eff / k) * (k * 10.0).tanh()).sqrt();
        assert_relative_eq!(-w.c, expected, max_relative = 1e-14);
        assert_relative_eq!(w.phi_max, 100.0 * w.c.abs(), max_relative = 1e-14);
        assert_relative_eq!(w.m_abs, 10.0 * w.c.abs(), max_relative = 1e-13);
        assert_relative_eq!(w.bernoulli_b, 0.5 * w.c * w.c, max_relative = 1e-14);
        assert!(w.residual_norm < 1e-13);
        // frozen: sqrt((9.8/k) tanh(kd)) with g_eff ~ g
        assert!((-w.c - 9.318).abs() < 5e-3, "c = {}", w.c);
    }

    #[test]
    fn limiting_steepness_table() {
        assert!((limiting_steepness(10.0) - 0.141).abs() < 2e-3);
        // H/d -> 0.833 in the shallow limit
        assert!((limiting_steepness(1e-3) * 1e3 - 0.8332).abs() < 5e-3);
        assert!((limiting_steepness(0.1) - 0.0710).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(matches!(
            solve_wave(&PhysicalParams::new(-1.0, 10.0, 1.0)),
            Err(WaveError::Domain(_))
        ));
        assert!(matches!(
            solve_wave(&w1().with_height(6.5)),
            Err(WaveError::Domain(_))
        ));
        assert!(matches!(
            solve_wave(&w1().with_modes(4)),
            Err(WaveError::Domain(_))
        ));
    }

    #[test]
    fn solves_w1() {
        let w = solve_wave(&w1()).unwrap();
        assert!(
            w.residual_norm <= w.params.newton_tol,
            "residual {}",
            w.residual_norm
        );
        assert!((w.crest_elevation() - w.trough_elevation() - 5.0).abs() < 1e-10 * 100.0);
        assert_relative_eq!(w.c, -w.phi_max / 100.0, max_relative = 1e-14);
        assert_relative_eq!(w.g_eff - 9.8, -2.0 * 7.3e-5 * w.c, max_relative = 1e-12);
        assert!(
            w.series.is_spectrally_converged(1e-10),
            "ratio {}",
            w.series.trailing_ratio()
        );
    }

    #[test]
    fn perturbed_coefficient_breaks_residual() {
        let w = solve_wave(&w1()).unwrap();
        let c1 = w.series.coeffs[0];
        let bad = w.with_coefficient(1, c1 + Complex64::new(0.0, 1e-3));
        assert!(bad.residual_norm > w.params.newton_tol);
    }

    #[test]
    fn stokes_order_one_is_linear_dispersion() {
        let p = w1();
        assert_relative_eq!(
            stokes_speed(&p, 1).unwrap(),
            linear_speed(&p),
            max_relative = 1e-15
        );
        assert!(matches!(
            stokes_speed(&p, 4),
            Err(WaveError::Unsupported(_))
        ));
        let flat = stokes_expansion(&p.clone().with_height(0.0), 3).unwrap();
        let exact = flat_wave(&p).unwrap();
        assert_relative_eq!(flat.c, exact.c, max_relative = 1e-15);
        assert!(flat.series.coeffs.iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn continuation_edge_cases() {
        assert!(continuation_path(&w1(), &[]).unwrap().is_empty());
        let one = continuation_path(&w1(), &[0.0]).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].is_flat());
        assert!(matches!(
            continuation_path(&w1(), &[2.0, 1.0]),
            Err(WaveError::Usage(_))
        ));
        let bad = continuation_path(&w1(), &[1.0, 9.0]).unwrap_err();
        assert!(matches!(bad, WaveError::Continuation { height, .. } if height == 9.0));
    }
}
