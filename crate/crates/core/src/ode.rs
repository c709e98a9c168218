//! Dormand-Prince 5(4) integrator with mixed absolute/relative error control.

use crate::error::{Result, WaveError};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; `None` picks one from the right-hand side.
    pub h_init: Option<f64>,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 200_000,
            h_init: None,
        }
    }
}

/// Summary of an integration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    /// One step of size `h`; returns the 5th-order solution and the error norm.
    fn step<const D: usize, F>(
        &self,
        f: &F,
        t: f64,
        y: &[f64; D],
        h: f64,
    ) -> Result<([f64; D], f64)>
    where
        F: Fn(f64, &[f64; D]) -> Result<[f64; D]>,
    {
        let mut k = [[0.0; D]; 7];
        for s in 0..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for i in 0..D {
                    ys[i] += h * A[s][j] * kj[i];
                }
            }
            k[s] = f(t + C[s] * h, &ys)?;
        }
        let mut y5 = *y;
        let mut err = 0.0f64;
        for i in 0..D {
            let (mut d5, mut d4) = (0.0, 0.0);
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let sc = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (d5 - d4) / sc).abs());
        }
        Ok((y5, err))
    }

    fn initial_step<const D: usize>(&self, y: &[f64; D], dy: &[f64; D], span: f64) -> f64 {
        if let Some(h) = self.h_init {
            return h.min(span);
        }
        let mut d0 = 0.0f64;
        let mut d1 = 0.0f64;
        for i in 0..D {
            let sc = self.atol + self.rtol * y[i].abs();
            d0 = d0.max((y[i] / sc).abs());
            d1 = d1.max((dy[i] / sc).abs());
        }
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h.min(span)
    }

    /// Integrates from `t0` to `t1 > t0`, calling `observe` after each
    /// accepted step.
    pub fn integrate<const D: usize, F>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; D],
        t1: f64,
        mut observe: impl FnMut(f64, &[f64; D]),
    ) -> Result<([f64; D], RunStats)>
    where
        F: Fn(f64, &[f64; D]) -> Result<[f64; D]>,
    {
        if !(t1 > t0) {
            return Err(WaveError::Usage(format!(
                "integration span [{t0}, {t1}] is empty"
            )));
        }
        let mut t = t0;
        let mut y = y0;
        let dy = f(t, &y)?;
        let mut h = self.initial_step(&y, &dy, t1 - t0);
        let mut stats = RunStats {
            accepted: 0,
            rejected: 0,
        };
        observe(t, &y);
        while t < t1 {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(WaveError::Integrator {
                    t,
                    step: h,
                    reason: format!("step budget {} exhausted", self.max_steps),
                });
            }
            let last = t + h >= t1;
            let h_try = if last { t1 - t } else { h };
            let (y_new, err) = self.step(&f, t, &y, h_try)?;
            if !err.is_finite() {
                return Err(WaveError::Integrator {
                    t,
                    step: h_try,
                    reason: "non-finite error estimate".into(),
                });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + h_try };
                y = y_new;
                stats.accepted += 1;
                observe(t, &y);
                h = h_try * factor;
            } else {
                stats.rejected += 1;
                h = h_try * factor.min(1.0);
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(WaveError::Integrator {
                    t,
                    step: h,
                    reason: "step size underflow".into(),
                });
            }
        }
        Ok((y, stats))
    }

    /// Integrates until component `index` (which must increase strictly
    /// along the solution) reaches `target`. The final stretch switches the
    /// independent variable to that component, so the stop is exact.
    /// Returns `(t_end, y_end, stats)`.
    pub fn integrate_until<const D: usize, F>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; D],
        index: usize,
        target: f64,
        mut observe: impl FnMut(f64, &[f64; D]),
    ) -> Result<(f64, [f64; D], RunStats)>
    where
        F: Fn(f64, &[f64; D]) -> Result<[f64; D]>,
    {
        if !(target > y0[index]) {
            return Err(WaveError::Usage(format!(
                "stop value {target} does not exceed the start {}",
                y0[index]
            )));
        }
        let mut t = t0;
        let mut y = y0;
        let dy = f(t, &y)?;
        if !(dy[index] > 0.0) {
            return Err(WaveError::Integrator {
                t,
                step: 0.0,
                reason: "stop component is not increasing".into(),
            });
        }
        let mut h = self.initial_step(&y, &dy, (target - y[index]) / dy[index]);
        let mut stats = RunStats {
            accepted: 0,
            rejected: 0,
        };
        observe(t, &y);
        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(WaveError::Integrator {
                    t,
                    step: h,
                    reason: format!("step budget {} exhausted", self.max_steps),
                });
            }
            let (y_new, err) = self.step(&f, t, &y, h)?;
            if !err.is_finite() {
                return Err(WaveError::Integrator {
                    t,
                    step: h,
                    reason: "non-finite error estimate".into(),
                });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err > 1.0 {
                stats.rejected += 1;
                h *= factor.min(1.0);
                if h <= 1e-14 * t.abs().max(1.0) {
                    return Err(WaveError::Integrator {
                        t,
                        step: h,
                        reason: "step size underflow".into(),
                    });
                }
                continue;
            }
            if y_new[index] >= target {
                break;
            }
            t += h;
            y = y_new;
            stats.accepted += 1;
            observe(t, &y);
            h *= factor;
        }
        // final stretch in the stop variable: state (t, y) as functions of y[index]
        let g = |s: f64, w: &[f64; D]| -> Result<[f64; D]> {
            let mut state = *w;
            state[index] = s;
            let rhs = f(w[index], &state)?;
            let rate = rhs[index];
            if !(rate > 0.0) {
                return Err(WaveError::Integrator {
                    t: w[index],
                    step: 0.0,
                    reason: "stop component stalled".into(),
                });
            }
            let mut out = [0.0; D];
            for i in 0..D {
                out[i] = rhs[i] / rate;
            }
            // slot `index` carries time in the swapped system
            out[index] = 1.0 / rate;
            Ok(out)
        };
        let mut w = y;
        w[index] = t;
        let s0 = y[index];
        let inner = Dopri5 {
            h_init: None,
            ..*self
        };
        let (w_end, more) = inner.integrate(g, s0, w, target, |_, _| {})?;
        let t_end = w_end[index];
        let mut y_end = w_end;
        y_end[index] = target;
        stats.accepted += more.accepted;
        stats.rejected += more.rejected;
        observe(t_end, &y_end);
        Ok((t_end, y_end, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let ode = Dopri5::new(1e-12, 1e-14);
        let (y, stats) = ode
            .integrate(|_, y: &[f64; 1]| Ok([y[0]]), 0.0, [1.0], 2.0, |_, _| {})
            .unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-10 * 2f64.exp());
        assert!(stats.accepted > 10);
    }

    #[test]
    fn harmonic_oscillator_is_fifth_order_accurate() {
        let ode = Dopri5::new(1e-11, 1e-13);
        let f = |_: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let (y, _) = ode
            .integrate(f, 0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI, |_, _| {})
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn exact_stop_on_increasing_component() {
        // dq/dt = 2 + cos q: period of q over 2 pi is 2 pi / sqrt(3)
        let ode = Dopri5::new(1e-12, 1e-14);
        let f = |_: f64, y: &[f64; 2]| Ok([2.0 + y[0].cos(), 1.0]);
        let mut count = 0;
        let (t, y, _) = ode
            .integrate_until(f, 0.0, [0.0, 0.0], 0, 2.0 * std::f64::consts::PI, |_, _| {
                count += 1
            })
            .unwrap();
        let exact = 2.0 * std::f64::consts::PI / 3f64.sqrt();
        assert!((t - exact).abs() < 1e-11 * exact, "{t} vs {exact}");
        assert!((y[1] - exact).abs() < 1e-11 * exact);
        assert_eq!(y[0], 2.0 * std::f64::consts::PI);
        assert!(count > 2);
    }

    #[test]
    fn errors_are_reported() {
        let ode = Dopri5::new(1e-10, 1e-12);
        assert!(ode
            .integrate(|_, y: &[f64; 1]| Ok([y[0]]), 1.0, [1.0], 1.0, |_, _| {})
            .is_err());
        let r = ode.integrate_until(|_, _: &[f64; 1]| Ok([-1.0]), 0.0, [0.0], 0, 1.0, |_, _| {});
        assert!(matches!(r, Err(WaveError::Integrator { .. })));
        let blow = Dopri5 {
            max_steps: 3,
            ..ode
        };
        let r = blow.integrate(
            |_, y: &[f64; 1]| Ok([y[0] * y[0]]),
            0.0,
            [1.0],
            0.999,
            |_, _| {},
        );
        assert!(matches!(r, Err(WaveError::Integrator { .. })));
    }
}
