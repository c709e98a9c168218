//! Shape checks on sampled curves. Margins are normalized so that a check
//! passes exactly when `worst_margin >= -tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub worst_margin: f64,
}

impl CheckOutcome {
    fn new(worst_margin: f64, tol: f64) -> Self {
        Self {
            passed: worst_margin >= -tol,
            worst_margin,
        }
    }
}

fn scale(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn require(values: &[f64], n: usize) -> Result<()> {
    if values.len() < n {
        return Err(WaveError::Usage(format!(
            "need at least {n} curve points, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(WaveError::Domain("curve has non-finite values".into()));
    }
    Ok(())
}

fn normalized(raw: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        raw / scale
    } else {
        raw
    }
}

/// Worst step against `direction`, relative to `max |v|`.
pub fn check_monotone(values: &[f64], direction: Direction, tol: f64) -> Result<CheckOutcome> {
    require(values, 3)?;
    let sign = match direction {
        Direction::NonIncreasing => 1.0,
        Direction::NonDecreasing => -1.0,
    };
    let worst = values
        .windows(2)
        .map(|w| sign * (w[0] - w[1]))
        .fold(f64::INFINITY, f64::min);
    Ok(CheckOutcome::new(normalized(worst, scale(values)), tol))
}

/// Every step must rise by at least `strictness * max |v|`.
pub fn check_strictly_increasing(values: &[f64], strictness: f64) -> Result<CheckOutcome> {
    require(values, 3)?;
    let worst = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let s = scale(values);
    if s == 0.0 {
        return Ok(CheckOutcome::new(-strictness, 0.0));
    }
    Ok(CheckOutcome::new(worst / s - strictness, 0.0))
}

fn min_second_difference(values: &[f64]) -> f64 {
    values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min)
}

/// Worst second difference on a uniform grid, relative to `max |v|`.
pub fn check_convex(values: &[f64], tol: f64) -> Result<CheckOutcome> {
    require(values, 5)?;
    Ok(CheckOutcome::new(
        normalized(min_second_difference(values), scale(values)),
        tol,
    ))
}

pub fn check_concave(values: &[f64], tol: f64) -> Result<CheckOutcome> {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    check_convex(&neg, tol)
}

/// Worst second difference of `ln v`; already dimensionless, so unscaled.
pub fn check_log_convex(values: &[f64], tol: f64) -> Result<CheckOutcome> {
    require(values, 5)?;
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(WaveError::Domain(format!(
            "log-convexity needs positive values, found {v}"
        )));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(CheckOutcome::new(min_second_difference(&logs), tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_curve_is_monotone_with_zero_margin() {
        let r = check_monotone(&[2.0; 10], Direction::NonIncreasing, 1e-9).unwrap();
        assert!(r.passed);
        assert_eq!(r.worst_margin, 0.0);
        assert!(!check_strictly_increasing(&[2.0; 10], 1e-12).unwrap().passed);
    }

    #[test]
    fn increasing_line_is_not_non_increasing() {
        let v: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(
            !check_monotone(&v, Direction::NonIncreasing, 1e-9)
                .unwrap()
                .passed
        );
        assert!(
            check_monotone(&v, Direction::NonDecreasing, 1e-9)
                .unwrap()
                .passed
        );
        assert!(check_strictly_increasing(&v, 1e-12).unwrap().passed);
    }

    #[test]
    fn parabola_and_exponential() {
        let p: Vec<f64> = (0..21).map(|i| (i as f64 / 20.0).powi(2)).collect();
        assert!(check_convex(&p, 1e-9).unwrap().passed);
        assert!(!check_concave(&p, 1e-9).unwrap().passed);
        let e: Vec<f64> = (0..21).map(|i| (i as f64 / 20.0).exp()).collect();
        let r = check_log_convex(&e, 1e-9).unwrap();
        assert!(r.passed && r.worst_margin.abs() < 1e-14);
    }

    #[test]
    fn preconditions() {
        assert!(check_monotone(&[1.0, 2.0], Direction::NonIncreasing, 0.0).is_err());
        assert!(check_convex(&[1.0; 4], 0.0).is_err());
        assert!(matches!(
            check_log_convex(&[1.0, 0.0, 1.0, 1.0, 1.0], 0.0),
            Err(WaveError::Domain(_))
        ));
        assert!(check_convex(&[1.0, f64::NAN, 1.0, 1.0, 1.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn pass_iff_margin_above_tolerance(v in prop::collection::vec(-10.0f64..10.0, 5..40), tol in 0.0f64..0.1) {
            for r in [
                check_monotone(&v, Direction::NonIncreasing, tol).unwrap(),
                check_convex(&v, tol).unwrap(),
                check_concave(&v, tol).unwrap(),
            ] {
                prop_assert_eq!(r.passed, r.worst_margin >= -tol);
            }
        }

        #[test]
        fn convex_quadratics_pass(a in 0.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
            let v: Vec<f64> = (0..33).map(|i| { let x = i as f64 / 32.0; a * x * x + b * x + c }).collect();
            prop_assert!(check_convex(&v, 1e-12).unwrap().passed);
        }

        #[test]
        fn reversing_swaps_direction(v in prop::collection::vec(-10.0f64..10.0, 3..30)) {
            let mut r = v.clone();
            r.reverse();
            let a = check_monotone(&v, Direction::NonIncreasing, 0.0).unwrap();
            let b = check_monotone(&r, Direction::NonDecreasing, 0.0).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
