//! The claim registry and the verification engine.
//!
//! Every claim evaluates to a normalized margin and a tolerance; the status is
//! `Pass` exactly when `margin >= -tolerance`. Claims marked `suspect` turn a
//! violation into a `Finding` instead of a `Fail`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::checks::{
    check_concave, check_convex, check_log_convex, check_monotone, check_strictly_increasing,
    CheckOutcome, Direction,
};
use crate::diagnostics::{
    energy_period_fixed, period_t, physical_cell_area, region_area, region_energy,
    streamline_length, surface_energy_extrema, total_cell_energy, uniform_p_grid, CellEnergy,
    CurveBook, DiagnosticCurve, ExtremaOutcome, Frame, Functional, QuadratureSettings,
};
use crate::error::{Result, WaveError};
use crate::flow::{flow_constants, FlowConstants};
use crate::lagrangian::{
    integrate_many, integrate_particle, pattern_shift_check, physical_period, PatternShift,
    Trajectory, PATTERN_SHIFT_TOL,
};
use crate::solver::ConformalWave;

/// Exact algebraic identities evaluated by quadrature.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Comparisons against physical-space quadrature.
pub const GEOMETRY_TOL: f64 = 1e-8;
/// ODE against quadrature.
pub const ORACLE_TOL: f64 = 1e-6;
/// Sign of first and second differences, relative to the curve scale.
pub const SIGN_TOL: f64 = 1e-9;
/// Required relative rise per step for "strictly increasing".
pub const STRICTNESS: f64 = 1e-12;
/// Centered differences against the integrand.
pub const DERIVATIVE_TOL: f64 = 1e-5;
/// Rounding allowance for inequalities.
pub const BOUND_TOL: f64 = 1e-12;
/// Spread of measured periods over start points.
pub const SPREAD_TOL: f64 = 1e-8;

pub const MEAN_EXPONENTS: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
pub const FIXED_ENERGY_EXPONENTS: [f64; 5] = [-1.0, 0.0, 0.5, 1.0, 2.0];
pub const MOVING_ENERGY_EXPONENTS: [f64; 4] = [-1.0, 0.0, 0.5, 2.0];
pub const FIXED_REGION_EXPONENTS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
pub const MOVING_REGION_EXPONENTS: [f64; 3] = [-1.0, 0.5, 2.0];
/// Streamlines used by the particle experiments, as fractions of |m|.
pub const ODE_LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const SHIFT_LEVELS: [f64; 3] = [0.0, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Finding,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
            Status::Finding => "finding",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub claim_id: String,
    pub statement: String,
    pub status: Status,
    pub worst_margin: f64,
    pub tolerance: f64,
    pub wave_fingerprint: String,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub n_q: usize,
    pub n_p: usize,
    pub p_points: usize,
    pub ode_tol: f64,
    /// Seed for the random start points of the particle experiments.
    pub seed: u64,
    pub random_starts: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n_q: 512,
            n_p: 32,
            p_points: 65,
            ode_tol: 1e-12,
            seed: 0,
            random_starts: 3,
        }
    }
}

/// Raw outcome of one claim before the status is assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub margin: f64,
    pub tolerance: f64,
    pub note: String,
    pub skipped: bool,
}

impl Verdict {
    fn from_check(o: CheckOutcome, tolerance: f64) -> Self {
        Self {
            margin: o.worst_margin,
            tolerance,
            note: String::new(),
            skipped: false,
        }
    }

    /// Relative error measured against `tolerance`.
    fn error(rel_err: f64, tolerance: f64) -> Self {
        Self {
            margin: if rel_err.is_nan() {
                f64::NEG_INFINITY
            } else {
                -rel_err
            },
            tolerance,
            note: String::new(),
            skipped: false,
        }
    }

    /// `lhs <= rhs`, slack relative to `scale`.
    fn bound(lhs: f64, rhs: f64, scale: f64) -> Self {
        Self {
            margin: (rhs - lhs) / scale,
            tolerance: BOUND_TOL,
            note: format!("lhs={lhs:.12e} rhs={rhs:.12e}"),
            skipped: false,
        }
    }

    fn skip(note: impl Into<String>) -> Self {
        Self {
            margin: 0.0,
            tolerance: 0.0,
            note: note.into(),
            skipped: true,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        self.note = if self.note.is_empty() {
            note
        } else {
            format!("{}; {}", self.note, note)
        };
        self
    }
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(a.abs()).max(floor)
}

/// Inputs shared by the claims, each computed once per wave.
pub struct Context<'a> {
    pub wave: &'a ConformalWave,
    pub config: VerifyConfig,
    book: std::result::Result<CurveBook, String>,
    constants: std::result::Result<FlowConstants, String>,
    starts: Vec<f64>,
    /// `ODE_LEVELS.len()` blocks of `starts.len()` trajectories.
    trajectories: std::result::Result<Vec<Trajectory>, String>,
    shifts: std::result::Result<Vec<PatternShift>, String>,
    physical_periods: std::result::Result<(f64, f64), String>,
    cell: std::result::Result<CellEnergy, String>,
    cell_area: std::result::Result<f64, String>,
    extrema: std::result::Result<ExtremaOutcome, String>,
}

fn shared<T>(r: &std::result::Result<T, String>) -> Result<&T> {
    r.as_ref()
        .map_err(|e| WaveError::Domain(format!("shared input failed: {e}")))
}

impl<'a> Context<'a> {
    pub fn new(wave: &'a ConformalWave, config: VerifyConfig) -> Self {
        let quad = QuadratureSettings {
            n_q: config.n_q,
            n_p: config.n_p,
        };
        let grid = uniform_p_grid(wave, config.p_points);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut starts = vec![0.0];
        starts.extend((0..config.random_starts).map(|_| rng.gen_range(0.0..wave.phi_max)));
        let text = |e: WaveError| e.to_string();
        let m = wave.m_abs;
        let ode_starts: Vec<(f64, f64)> = ODE_LEVELS
            .iter()
            .flat_map(|f| starts.iter().map(move |&q| (q, f * m)))
            .collect();
        let (
            (book, constants),
            ((trajectories, shifts), (physical_periods, (cell, (cell_area, extrema)))),
        ) = rayon::join(
            || {
                (
                    CurveBook::new(wave, &grid, quad, true).map_err(text),
                    flow_constants(wave, 256, 32).map_err(text),
                )
            },
            || {
                rayon::join(
                    || {
                        (
                            integrate_many(wave, &ode_starts, config.ode_tol).map_err(text),
                            SHIFT_LEVELS
                                .par_iter()
                                .map(|f| pattern_shift_check(wave, f * m, config.ode_tol))
                                .collect::<Result<Vec<_>>>()
                                .map_err(text),
                        )
                    },
                    || {
                        (
                            physical_periods(wave, config.ode_tol).map_err(text),
                            (
                                total_cell_energy(wave, config.n_q, config.n_p).map_err(text),
                                (
                                    physical_cell_area(wave, config.n_q.max(512)).map_err(text),
                                    surface_energy_extrema(wave, 1024).map_err(text),
                                ),
                            ),
                        )
                    },
                )
            },
        );
        Self {
            wave,
            config,
            book,
            constants,
            starts,
            trajectories,
            shifts,
            physical_periods,
            cell,
            cell_area,
            extrema,
        }
    }

    pub fn curve(&self, functional: Functional, s: Option<f64>) -> Result<DiagnosticCurve> {
        shared(&self.book)?.curve(functional, s)
    }

    fn book(&self) -> Result<&CurveBook> {
        shared(&self.book)
    }

    fn delta(&self) -> Result<f64> {
        Ok(shared(&self.constants)?.delta_for_bounds())
    }

    fn trajectory_blocks(&self) -> Result<Vec<&[Trajectory]>> {
        Ok(shared(&self.trajectories)?
            .chunks(self.starts.len())
            .collect())
    }

    fn located_extrema(&self) -> Result<Option<crate::diagnostics::SurfaceExtrema>> {
        Ok(match shared(&self.extrema)? {
            ExtremaOutcome::Located(x) => Some(*x),
            ExtremaOutcome::Skipped { .. } => None,
        })
    }
}

/// Periods at mid-depth from the scalar and the physical-space integrations.
fn physical_periods(wave: &ConformalWave, tol: f64) -> Result<(f64, f64)> {
    let tol = tol.max(1e-11);
    let p = 0.5 * wave.m_abs;
    let one = integrate_particle(wave, 0.0, p, tol)?.measured_period;
    let two = physical_period(wave, 0.0, p, tol)?;
    Ok((one, two))
}

type Eval = Box<dyn Fn(&Context) -> Result<Verdict> + Send + Sync>;

pub struct Claim {
    pub id: String,
    pub statement: String,
    pub suspect: bool,
    eval: Eval,
}

impl Claim {
    fn new(id: impl Into<String>, statement: impl Into<String>, eval: Eval) -> Self {
        Self {
            id: id.into(),
            statement: statement.into(),
            suspect: false,
            eval,
        }
    }

    fn suspect(mut self) -> Self {
        self.suspect = true;
        self
    }

    pub fn evaluate(&self, ctx: &Context, fingerprint: &str) -> PropertyReport {
        let (status, margin, tolerance, note) = match (self.eval)(ctx) {
            Ok(v) if v.skipped => (Status::Skipped, v.margin, v.tolerance, v.note),
            Ok(v) => {
                let status = if v.margin >= -v.tolerance {
                    Status::Pass
                } else if self.suspect {
                    Status::Finding
                } else {
                    Status::Fail
                };
                (status, v.margin, v.tolerance, v.note)
            }
            Err(e) => (
                if self.suspect {
                    Status::Finding
                } else {
                    Status::Fail
                },
                f64::NEG_INFINITY,
                0.0,
                format!("error: {e}"),
            ),
        };
        PropertyReport {
            claim_id: self.id.clone(),
            statement: self.statement.clone(),
            status,
            worst_margin: margin,
            tolerance,
            wave_fingerprint: fingerprint.to_string(),
            note,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    NonIncreasing,
    Convex,
    LogConvex,
    Concave,
    StrictlyIncreasing,
}

impl Shape {
    fn tag(self) -> &'static str {
        match self {
            Shape::NonIncreasing => "monotone",
            Shape::Convex => "convex",
            Shape::LogConvex => "logconvex",
            Shape::Concave => "concave",
            Shape::StrictlyIncreasing => "increasing",
        }
    }

    fn words(self) -> &'static str {
        match self {
            Shape::NonIncreasing => "is non-increasing in p",
            Shape::Convex => "is convex in p",
            Shape::LogConvex => "is log-convex in p",
            Shape::Concave => "is concave in p",
            Shape::StrictlyIncreasing => "is strictly increasing in p",
        }
    }

    fn check(self, values: &[f64]) -> Result<Verdict> {
        Ok(match self {
            Shape::NonIncreasing => Verdict::from_check(
                check_monotone(values, Direction::NonIncreasing, SIGN_TOL)?,
                SIGN_TOL,
            ),
            Shape::Convex => Verdict::from_check(check_convex(values, SIGN_TOL)?, SIGN_TOL),
            Shape::LogConvex => Verdict::from_check(check_log_convex(values, SIGN_TOL)?, SIGN_TOL),
            Shape::Concave => Verdict::from_check(check_concave(values, SIGN_TOL)?, SIGN_TOL),
            Shape::StrictlyIncreasing => {
                Verdict::from_check(check_strictly_increasing(values, STRICTNESS)?, 0.0)
            }
        })
    }
}

fn exponent_tag(s: f64) -> String {
    format!("s={s}")
}

/// Fixed-frame functionals built from `E0`, which vanishes identically on
/// the flat wave.
fn vanishes_on_flat(functional: Functional, s: Option<f64>) -> bool {
    match functional {
        Functional::EnergyFixed | Functional::RegionEnergyFixed => true,
        Functional::EnergyFixedS | Functional::RegionEnergyFixedS => s != Some(0.0),
        _ => false,
    }
}

fn shape_claim(
    prefix: &str,
    name: &str,
    functional: Functional,
    s: Option<f64>,
    shape: Shape,
) -> Claim {
    let id = match s {
        Some(s) => format!("{prefix}.{}.{}", shape.tag(), exponent_tag(s)),
        None => format!("{prefix}.{}", shape.tag()),
    };
    let statement = match s {
        Some(s) => format!("{name} {} (s = {s})", shape.words()),
        None => format!("{name} {}", shape.words()),
    };
    Claim::new(
        id,
        statement,
        Box::new(move |ctx| {
            if ctx.wave.is_flat() && vanishes_on_flat(functional, s) {
                let negative = s.is_some_and(|s| s < 0.0);
                if negative || matches!(shape, Shape::LogConvex | Shape::StrictlyIncreasing) {
                    return Ok(Verdict::skip(
                        "flat wave: the fixed-frame energy E0 vanishes identically",
                    ));
                }
            }
            let curve = ctx.curve(functional, s)?;
            let v = &curve.values;
            let finite = v.iter().take_while(|x| x.is_finite()).count();
            if finite == v.len() {
                return shape.check(v);
            }
            if v[finite..].iter().any(|x| *x != f64::INFINITY) {
                return Err(WaveError::Domain("curve has non-finite values".into()));
            }
            // the functional diverges on the bed; shapes are checked on the rest
            let mut verdict = shape.check(&v[..finite])?;
            if shape == Shape::NonIncreasing {
                verdict.margin = f64::NEG_INFINITY;
            }
            Ok(verdict.with_note(format!(
                "+inf on the last {} grid level(s): E0 vanishes where u changes sign on the bed",
                v.len() - finite
            )))
        }),
    )
}

fn shape_family(
    out: &mut Vec<Claim>,
    prefix: &str,
    name: &str,
    functional: Functional,
    s: Option<f64>,
    shapes: &[Shape],
    suspect: bool,
) {
    for &shape in shapes {
        let c = shape_claim(prefix, name, functional, s, shape);
        out.push(if suspect { c.suspect() } else { c });
    }
}

/// Relative step of the centered differences used by derivative claims.
pub const DERIVATIVE_STEP: f64 = 1e-3;
/// Gauss-Legendre order of the region integrals inside derivative claims.
const DERIVATIVE_NP: usize = 16;

/// Max relative mismatch between centered differences of a region integral
/// and its integrand, at every eighth interior grid point.
fn derivative_mismatch(
    ctx: &Context,
    region: impl Fn(f64) -> Result<f64> + Sync + Send,
    integrand: impl Fn(f64) -> Result<f64> + Sync + Send,
    floor: f64,
) -> Result<f64> {
    let book = ctx.book()?;
    let g = &book.p_grid;
    let h = DERIVATIVE_STEP * ctx.wave.m_abs;
    let points: Vec<f64> = (1..g.len() - 1)
        .step_by(8)
        .map(|i| g[i])
        .filter(|&p| p > h && p < ctx.wave.m_abs - h)
        .collect();
    let errs = points
        .par_iter()
        .map(|&p| {
            let d = (region(p + h)? - region(p - h)?) / (2.0 * h);
            Ok(rel(d, integrand(p)?, floor * ctx.wave.phi_max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

const DECREASING: [Shape; 3] = [Shape::NonIncreasing, Shape::Convex, Shape::LogConvex];
const INCREASING: [Shape; 2] = [Shape::Concave, Shape::StrictlyIncreasing];

/// Every claim, sorted by id.
pub fn claim_registry() -> Vec<Claim> {
    let mut out: Vec<Claim> = Vec::new();

    for s in MEAN_EXPONENTS {
        shape_family(
            &mut out,
            "means",
            "integral mean M_s(E,p)",
            Functional::Ms,
            Some(s),
            &DECREASING,
            false,
        );
    }

    out.push(Claim::new(
        "cell_energy.moving.strip",
        "moving-frame kinetic energy of a cell equals phi_max |m| / 2 (rectangle route)",
        Box::new(|ctx| {
            let c = shared(&ctx.cell)?;
            let target = 0.5 * ctx.wave.phi_max * ctx.wave.m_abs;
            Ok(Verdict::error(
                rel(c.moving_strip, target, 0.0),
                IDENTITY_TOL,
            ))
        }),
    ));
    out.push(Claim::new(
        "cell_energy.moving.physical",
        "moving-frame kinetic energy of a cell equals phi_max |m| / 2 (physical quadrature)",
        Box::new(|ctx| {
            let c = shared(&ctx.cell)?;
            let target = 0.5 * ctx.wave.phi_max * ctx.wave.m_abs;
            Ok(Verdict::error(
                rel(c.moving_physical, target, 0.0),
                GEOMETRY_TOL,
            ))
        }),
    ));
    out.push(Claim::new(
        "cell_energy.fixed.physical",
        "fixed-frame kinetic energy of a cell agrees between rectangle and physical quadrature",
        Box::new(|ctx| {
            let c = shared(&ctx.cell)?;
            let floor = 1e-12 * c.moving_strip;
            Ok(Verdict::error(
                rel(c.fixed_physical, c.fixed_strip, floor),
                GEOMETRY_TOL,
            ))
        }),
    ));

    shape_family(
        &mut out,
        "period",
        "streamline period T(p)",
        Functional::T,
        None,
        &DECREASING,
        false,
    );
    out.push(Claim::new(
        "period.formula",
        "T(p) equals (phi_max / 2) M_{-1}(E,p)",
        Box::new(|ctx| {
            let book = ctx.book()?;
            let worst = book
                .levels()
                .iter()
                .map(|l| rel(l.period(), 0.5 * l.phi_max * l.integral_mean(-1.0), 0.0))
                .fold(0.0, f64::max);
            Ok(Verdict::error(worst, IDENTITY_TOL))
        }),
    ));
    out.push(Claim::new(
        "period.ode_oracle",
        "particle periods from time integration match the quadrature T(p)",
        Box::new(|ctx| {
            let mut worst: f64 = 0.0;
            for (block, f) in ctx.trajectory_blocks()?.iter().zip(ODE_LEVELS) {
                let t = period_t(ctx.wave, f * ctx.wave.m_abs, ctx.config.n_q)?;
                for tr in block.iter() {
                    worst = worst.max(rel(tr.measured_period, t, 0.0));
                }
            }
            Ok(Verdict::error(worst, ORACLE_TOL))
        }),
    ));
    out.push(Claim::new(
        "period.start_independence",
        "the particle period does not depend on the start point on a streamline",
        Box::new(|ctx| {
            let mut worst: f64 = 0.0;
            for block in ctx.trajectory_blocks()? {
                let periods: Vec<f64> = block.iter().map(|t| t.measured_period).collect();
                let mean = periods.iter().sum::<f64>() / periods.len() as f64;
                let (lo, hi) = periods
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                        (a.min(v), b.max(v))
                    });
                worst = worst.max((hi - lo) / mean);
            }
            Ok(Verdict::error(worst, SPREAD_TOL)
                .with_note(format!("{} starts per streamline", ctx.starts.len())))
        }),
    ));
    out.push(Claim::new(
        "period.physical_oracle",
        "the period from physical-space integration matches the scalar integration",
        Box::new(|ctx| {
            let (one, two) = *shared(&ctx.physical_periods)?;
            Ok(Verdict::error(
                rel(two, one, 0.0),
                10.0 * ctx.config.ode_tol.max(1e-11),
            ))
        }),
    ));
    out.push(Claim::new(
        "period.pattern_shift",
        "after one period a particle sits one wavelength downstream at its start height",
        Box::new(|ctx| {
            let shifts = shared(&ctx.shifts)?;
            let l = ctx.wave.wavelength();
            let worst = shifts
                .iter()
                .map(|s| (s.advance - l).abs().max(s.vertical_gap.abs()) / l)
                .fold(0.0, f64::max);
            Ok(Verdict::error(worst, PATTERN_SHIFT_TOL))
        }),
    ));
    out.push(Claim::new(
        "period.extrema",
        "T(p) is largest on the surface and smallest on the bed",
        Box::new(|ctx| {
            let v = ctx.curve(Functional::T, None)?.values;
            let (top, bed) = (v[0], v[v.len() - 1]);
            let worst = v
                .iter()
                .map(|x| (top - x).min(x - bed))
                .fold(f64::INFINITY, f64::min);
            Ok(Verdict::error(-worst / top, SIGN_TOL))
        }),
    ));
    out.push(Claim::new(
        "period.bound",
        "T(|m|) <= L / delta",
        Box::new(|ctx| {
            let v = ctx.curve(Functional::T, None)?.values;
            let rhs = ctx.wave.wavelength() / ctx.delta()?;
            Ok(Verdict::bound(v[v.len() - 1], rhs, rhs))
        }),
    ));

    shape_family(
        &mut out,
        "energy.fixed",
        "fixed-frame period energy",
        Functional::EnergyFixed,
        None,
        &DECREASING,
        false,
    );
    out.push(Claim::new(
        "energy.moving.constant",
        "moving-frame period energy equals phi_max / 2 on every streamline",
        Box::new(|ctx| {
            let v = ctx.curve(Functional::EnergyMoving, None)?.values;
            let target = 0.5 * ctx.wave.phi_max;
            Ok(Verdict::error(
                v.iter().map(|x| rel(*x, target, 0.0)).fold(0.0, f64::max),
                IDENTITY_TOL,
            ))
        }),
    ));
    out.push(Claim::new(
        "energy.fixed.forms",
        "the two integrands for the fixed-frame period energy agree",
        Box::new(|ctx| {
            let floor = 1e-12 * ctx.wave.phi_max;
            let worst = ctx
                .book()?
                .levels()
                .iter()
                .map(|l| rel(l.energy_fixed(), l.energy_fixed_derivative_form(), floor))
                .fold(0.0, f64::max);
            Ok(Verdict::error(worst, IDENTITY_TOL))
        }),
    ));
    out.push(Claim::new(
        "energy.fixed_below_moving",
        "fixed-frame period energy is at most the moving-frame one",
        Box::new(|ctx| {
            let fixed = ctx.curve(Functional::EnergyFixed, None)?.values;
            let moving = ctx.curve(Functional::EnergyMoving, None)?.values;
            let scale = 0.5 * ctx.wave.phi_max;
            let worst = fixed
                .iter()
                .zip(&moving)
                .map(|(a, b)| (b - a) / scale)
                .fold(f64::INFINITY, f64::min);
            Ok(Verdict {
                margin: worst,
                tolerance: BOUND_TOL,
                note: String::new(),
                skipped: false,
            })
        }),
    ));
    out.push(Claim::new(
        "energy.cauchy_schwarz",
        "fixed-frame period energy <= (phi_max / 2) sqrt(M_2(E0,p) M_{-2}(E,p))",
        Box::new(|ctx| {
            let scale = 0.5 * ctx.wave.phi_max;
            let worst = ctx
                .book()?
                .levels()
                .iter()
                .map(|l| {
                    let rhs = scale * (l.mean_of(|s| s.e0 * s.e0) * l.integral_mean(-2.0)).sqrt();
                    (rhs - l.energy_fixed()) / scale
                })
                .fold(f64::INFINITY, f64::min);
            Ok(Verdict {
                margin: worst,
                tolerance: BOUND_TOL,
                note: String::new(),
                skipped: false,
            })
        }),
    ));
    out.push(Claim::new(
        "energy.time_domain.moving",
        "moving-frame energy accumulated along trajectories equals phi_max / 2",
        Box::new(|ctx| {
            let target = 0.5 * ctx.wave.phi_max;
            let worst = shared(&ctx.trajectories)?
                .iter()
                .map(|t| rel(t.moving_energy, target, 0.0))
                .fold(0.0, f64::max);
            Ok(Verdict::error(worst, ORACLE_TOL))
        }),
    ));
    out.push(Claim::new(
        "energy.time_domain.fixed",
        "fixed-frame energy accumulated along trajectories matches the quadrature",
        Box::new(|ctx| {
            let floor = 1e-9 * ctx.wave.phi_max;
            let mut worst: f64 = 0.0;
            for (block, f) in ctx.trajectory_blocks()?.iter().zip(ODE_LEVELS) {
                let e = energy_period_fixed(ctx.wave, f * ctx.wave.m_abs, ctx.config.n_q)?;
                for tr in block.iter() {
                    worst = worst.max(rel(tr.fixed_energy, e, floor));
                }
            }
            Ok(Verdict::error(worst, ORACLE_TOL))
        }),
    ));

    out.push(Claim::new(
        "energy_s.identity.fixed.s=0",
        "fixed-frame s-energy at s = 0 equals T(p) / 2",
        Box::new(|ctx| {
            let worst = ctx
                .book()?
                .levels()
                .iter()
                .map(|l| rel(l.energy_s(0.0, Frame::Fixed), 0.5 * l.period(), 0.0))
                .fold(0.0, f64::max);
            Ok(Verdict::error(worst, IDENTITY_TOL))
        }),
    ));
    out.push(Claim::new(
        "energy_s.identity.moving.s=1",
        "moving-frame s-energy at s = 1 equals the moving-frame period energy",
        Box::new(|ctx| {
            let worst = ctx
                .book()?
                .levels()
                .iter()
                .map(|l| rel(l.energy_s(1.0, Frame::Moving), l.energy_moving(), 0.0))
                .fold(0.0, f64::max);
            Ok(Verdict::error(worst, IDENTITY_TOL))
        }),
    ));
    for s in FIXED_ENERGY_EXPONENTS {
        shape_family(
            &mut out,
            "energy_s.fixed",
            "fixed-frame s-energy",
            Functional::EnergyFixedS,
            Some(s),
            &DECREASING,
            true,
        );
    }
    for s in MOVING_ENERGY_EXPONENTS {
        shape_family(
            &mut out,
            "energy_s.moving",
            "moving-frame s-energy",
            Functional::EnergyMovingS,
            Some(s),
            &DECREASING,
            false,
        );
    }

    shape_family(
        &mut out,
        "region.fixed",
        "fixed-frame region energy",
        Functional::RegionEnergyFixed,
        None,
        &INCREASING,
        false,
    );
    out.push(Claim::new(
        "region.moving.identity",
        "moving-frame region energy equals phi_max p / 2",
        Box::new(|ctx| {
            let c = ctx.curve(Functional::RegionEnergyMoving, None)?;
            let floor = 1e-12 * ctx.wave.phi_max * ctx.wave.m_abs;
            let worst = c
                .p_grid
                .iter()
                .zip(&c.values)
                .map(|(p, v)| rel(*v, 0.5 * ctx.wave.phi_max * p, floor))
                .fold(0.0, f64::max);
            Ok(Verdict::error(worst, IDENTITY_TOL))
        }),
    ));
    out.push(Claim::new(
        "region.fixed.derivative",
        "the p-derivative of the fixed-frame region energy is the period energy",
        Box::new(|ctx| {
            let (w, c) = (ctx.wave, ctx.config);
            let worst = derivative_mismatch(
                ctx,
                |p| region_energy(w, p, c.n_q, DERIVATIVE_NP, Frame::Fixed, None),
                |p| energy_period_fixed(w, p, c.n_q),
                1e-9,
            )?;
            Ok(Verdict::error(worst, DERIVATIVE_TOL))
        }),
    ));
    out.push(Claim::new(
        "region.fixed_below_moving",
        "fixed-frame region energy is at most the moving-frame one",
        Box::new(|ctx| {
            let k = ctx.curve(Functional::RegionEnergyFixed, None)?.values;
            let kk = ctx.curve(Functional::RegionEnergyMoving, None)?.values;
            let scale = 0.5 * ctx.wave.phi_max * ctx.wave.m_abs;
            let worst = k
                .iter()
                .zip(&kk)
                .map(|(a, b)| (b - a) / scale)
                .fold(f64::INFINITY, f64::min);
            Ok(Verdict {
                margin: worst,
                tolerance: BOUND_TOL,
                note: String::new(),
                skipped: false,
            })
        }),
    ));
    for s in FIXED_REGION_EXPONENTS {
        shape_family(
            &mut out,
            "region_s.fixed",
            "fixed-frame region s-energy",
            Functional::RegionEnergyFixedS,
            Some(s),
            &INCREASING,
            true,
        );
    }
    for s in MOVING_REGION_EXPONENTS {
        shape_family(
            &mut out,
            "region_s.moving",
            "moving-frame region s-energy",
            Functional::RegionEnergyMovingS,
            Some(s),
            &INCREASING,
            true,
        );
    }

    shape_family(
        &mut out,
        "area",
        "region area S(p)",
        Functional::Area,
        None,
        &INCREASING,
        false,
    );
    out.push(Claim::new(
        "area.derivative",
        "the p-derivative of S(p) is T(p)",
        Box::new(|ctx| {
            let (w, c) = (ctx.wave, ctx.config);
            let worst = derivative_mismatch(
                ctx,
                |p| region_area(w, p, c.n_q, DERIVATIVE_NP),
                |p| period_t(w, p, c.n_q),
                0.0,
            )?;
            Ok(Verdict::error(worst, DERIVATIVE_TOL))
        }),
    ));
    out.push(Claim::new(
        "area.geometry",
        "S(|m|) equals the physical cell area",
        Box::new(|ctx| {
            let v = ctx.curve(Functional::Area, None)?.values;
            let geo = *shared(&ctx.cell_area)?;
            Ok(Verdict::error(rel(v[v.len() - 1], geo, 0.0), ORACLE_TOL))
        }),
    ));
    out.push(Claim::new(
        "area.extrema",
        "S(p) vanishes on the surface and is largest on the bed",
        Box::new(|ctx| {
            let v = ctx.curve(Functional::Area, None)?.values;
            let top = v[v.len() - 1];
            let worst = v
                .iter()
                .map(|x| top - x)
                .fold(f64::INFINITY, f64::min)
                .min(-v[0].abs());
            Ok(Verdict::error(-worst / top, SIGN_TOL))
        }),
    ));
    out.push(
        Claim::new(
            "area.bound.stated",
            "S(|m|) <= |m| phi_max / (2 delta0^2)",
            Box::new(|ctx| {
                let v = ctx.curve(Functional::Area, None)?.values;
                let d = ctx.delta()?;
                let rhs = ctx.wave.m_abs * ctx.wave.phi_max / (2.0 * d * d);
                Ok(Verdict::bound(v[v.len() - 1], rhs, rhs))
            }),
        )
        .suspect(),
    );
    out.push(Claim::new(
        "area.bound.corrected",
        "S(|m|) <= |m| phi_max / delta0^2",
        Box::new(|ctx| {
            let v = ctx.curve(Functional::Area, None)?.values;
            let d = ctx.delta()?;
            let rhs = ctx.wave.m_abs * ctx.wave.phi_max / (d * d);
            Ok(Verdict::bound(v[v.len() - 1], rhs, rhs))
        }),
    ));

    shape_family(
        &mut out,
        "length",
        "streamline length L(p)",
        Functional::Length,
        None,
        &DECREASING,
        false,
    );
    out.push(Claim::new(
        "length.bed",
        "the bed streamline has length L",
        Box::new(|ctx| {
            let v = ctx.curve(Functional::Length, None)?.values;
            Ok(Verdict::error(
                rel(v[v.len() - 1], ctx.wave.wavelength(), 0.0),
                GEOMETRY_TOL,
            ))
        }),
    ));
    out.push(Claim::new(
        "length.arclength",
        "L(p) equals the arclength travelled by a particle in one period",
        Box::new(|ctx| {
            let mut worst: f64 = 0.0;
            for (block, f) in ctx.trajectory_blocks()?.iter().zip(ODE_LEVELS) {
                let l = streamline_length(ctx.wave, f * ctx.wave.m_abs, ctx.config.n_q)?;
                for tr in block.iter() {
                    worst = worst.max(rel(tr.arclength, l, 0.0));
                }
            }
            Ok(Verdict::error(worst, ORACLE_TOL))
        }),
    ));
    out.push(Claim::new(
        "length.extrema",
        "L(p) is largest on the surface",
        Box::new(|ctx| {
            let v = ctx.curve(Functional::Length, None)?.values;
            let worst = v.iter().map(|x| v[0] - x).fold(f64::INFINITY, f64::min);
            Ok(Verdict::error(-worst / v[0], SIGN_TOL))
        }),
    ));
    out.push(
        Claim::new(
            "length.bound.stated",
            "L(|m|) <= sqrt(2) phi_max / (2 delta0)",
            Box::new(|ctx| {
                let v = ctx.curve(Functional::Length, None)?.values;
                let rhs = std::f64::consts::SQRT_2 * ctx.wave.phi_max / (2.0 * ctx.delta()?);
                Ok(Verdict::bound(v[v.len() - 1], rhs, rhs))
            }),
        )
        .suspect(),
    );
    out.push(Claim::new(
        "length.bound.corrected",
        "L(|m|) <= phi_max / delta0",
        Box::new(|ctx| {
            let v = ctx.curve(Functional::Length, None)?.values;
            let rhs = ctx.wave.phi_max / ctx.delta()?;
            Ok(Verdict::bound(v[v.len() - 1], rhs, rhs))
        }),
    ));

    out.push(Claim::new(
        "bernoulli.surface",
        "E + g_eff z is constant along the free surface",
        Box::new(|ctx| {
            let w = ctx.wave;
            let level = &ctx.book()?.levels()[0];
            let dev = level
                .samples
                .iter()
                .map(|s| (s.e + w.g_eff * s.z - w.bernoulli_b).abs())
                .fold(0.0, f64::max);
            Ok(Verdict::error(dev, 10.0 * w.params.newton_tol)
                .with_note(format!("max deviation {dev:.3e} m^2/s^2")))
        }),
    ));

    out.push(Claim::new(
        "extrema.crest_min",
        "the surface minimum of E lies at the crest",
        Box::new(|ctx| {
            Ok(match ctx.located_extrema()? {
                None => Verdict::skip("flat wave: E is constant"),
                Some(x) => Verdict {
                    margin: (x.cell - x.min_offset(ctx.wave.phi_max)) / ctx.wave.phi_max,
                    tolerance: 0.0,
                    note: format!(
                        "offset {:.3e}, cell {:.3e}",
                        x.min_offset(ctx.wave.phi_max),
                        x.cell
                    ),
                    skipped: false,
                },
            })
        }),
    ));
    out.push(Claim::new(
        "extrema.trough_max",
        "the surface maximum of E lies at the trough",
        Box::new(|ctx| {
            Ok(match ctx.located_extrema()? {
                None => Verdict::skip("flat wave: E is constant"),
                Some(x) => Verdict {
                    margin: (x.cell - x.max_offset(ctx.wave.phi_max)) / ctx.wave.phi_max,
                    tolerance: 0.0,
                    note: format!(
                        "offset {:.3e}, cell {:.3e}",
                        x.max_offset(ctx.wave.phi_max),
                        x.cell
                    ),
                    skipped: false,
                },
            })
        }),
    ));
    out.push(Claim::new(
        "extrema.surface_max",
        "the maximum of E over the fluid is attained on the surface",
        Box::new(|ctx| {
            Ok(match ctx.located_extrema()? {
                None => Verdict::skip("flat wave: E is constant"),
                Some(x) => Verdict::bound(x.interior_max_e, x.max_e, x.max_e),
            })
        }),
    ));
    out.push(Claim::new(
        "extrema.bernoulli_difference",
        "E(trough) - E(crest) equals g_eff H",
        Box::new(|ctx| {
            let w = ctx.wave;
            Ok(match ctx.located_extrema()? {
                None => Verdict::skip("flat wave: H = 0"),
                Some(x) => {
                    let tol = 10.0 * w.residual_norm.max(1e-14 * w.c * w.c);
                    Verdict::error((x.trough_minus_crest - x.g_eff_height).abs(), tol)
                        .with_note(format!("g_eff H = {:.12e}", x.g_eff_height))
                }
            })
        }),
    ));

    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

pub fn claim_ids() -> Vec<String> {
    claim_registry().into_iter().map(|c| c.id).collect()
}

/// Short hash of the full wave state.
pub fn fingerprint(wave: &ConformalWave) -> String {
    let bytes = serde_json::to_vec(wave).expect("a wave always serializes");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

/// Evaluates every registered claim; reports are sorted by claim id.
pub fn verify_all(wave: &ConformalWave, config: &VerifyConfig) -> Vec<PropertyReport> {
    let ctx = Context::new(wave, *config);
    let fp = fingerprint(wave);
    let mut reports: Vec<PropertyReport> = claim_registry()
        .par_iter()
        .map(|c| c.evaluate(&ctx, &fp))
        .collect();
    reports.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    reports
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
    pub finding: usize,
}

pub fn summarize(reports: &[PropertyReport]) -> Summary {
    let mut s = Summary::default();
    for r in reports {
        match r.status {
            Status::Pass => s.pass += 1,
            Status::Fail => s.fail += 1,
            Status::Skipped => s.skipped += 1,
            Status::Finding => s.finding += 1,
        }
    }
    s
}

/// First report with the given id.
pub fn find<'r>(reports: &'r [PropertyReport], id: &str) -> Option<&'r PropertyReport> {
    reports.iter().find(|r| r.claim_id == id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{flat_wave, PhysicalParams};
    use num_complex::Complex64;

    #[test]
    fn registry_is_sorted_unique_and_frozen() {
        let ids = claim_ids();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(ids, sorted);
        assert_eq!(ids.len(), REGISTRY_SIZE);
    }

    const REGISTRY_SIZE: usize = 18 + 3 + 10 + 9 + 2 + 15 + 12 + 5 + 8 + 6 + 7 + 8 + 1 + 4;

    #[test]
    fn flat_wave_suite() {
        let w = flat_wave(&PhysicalParams::new(100.0, 10.0, 0.0)).unwrap();
        let reports = verify_all(&w, &VerifyConfig::default());
        assert_eq!(reports.len(), REGISTRY_SIZE);
        for r in &reports {
            assert_ne!(r.status, Status::Fail, "{r:?}");
        }
        assert_eq!(
            find(&reports, "extrema.crest_min").unwrap().status,
            Status::Skipped
        );
        assert_eq!(
            find(&reports, "area.bound.stated").unwrap().status,
            Status::Finding
        );
        assert_eq!(
            find(&reports, "area.bound.corrected").unwrap().status,
            Status::Pass
        );
        assert_eq!(
            find(&reports, "energy.moving.constant").unwrap().status,
            Status::Pass
        );
    }

    #[test]
    fn corrupted_coefficient_breaks_bernoulli() {
        let w = flat_wave(&PhysicalParams::new(100.0, 10.0, 0.0)).unwrap();
        let bad = w.with_coefficient(1, Complex64::new(0.0, 1e-3));
        let reports = verify_all(&bad, &VerifyConfig::default());
        assert_eq!(
            find(&reports, "bernoulli.surface").unwrap().status,
            Status::Fail
        );
    }
}
