use eqwave::diagnostics::{
    energy_period_fixed, energy_period_moving, integral_mean_ms, period_t, region_energy,
    streamline_length, Frame,
};
use eqwave::flow::{invert_map, sample_at_qp};
use eqwave::lagrangian::integrate_particle;
use eqwave::solver::{limiting_steepness, solve_wave, ConformalWave, PhysicalParams};
use proptest::prelude::*;

const NQ: usize = 512;

fn wave(depth: f64, fraction: f64) -> ConformalWave {
    let cap = limiting_steepness(depth / 100.0) * 100.0;
    solve_wave(&PhysicalParams::new(100.0, depth, fraction * cap)).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10, ..ProptestConfig::default() })]

    #[test]
    fn energy_identities(depth in 8.0f64..60.0, fraction in 0.0f64..0.6, t in 0.0f64..=1.0) {
        let w = wave(depth, fraction);
        let p = t * w.m_abs;
        prop_assert!(rel(energy_period_moving(&w, p, NQ).unwrap(), 0.5 * w.phi_max) < 1e-10);
        let k = region_energy(&w, p, NQ, 32, Frame::Moving, None).unwrap();
        prop_assert!((k - 0.5 * w.phi_max * p).abs() <= 1e-10 * w.phi_max * w.m_abs);
        let m = integral_mean_ms(&w, -1.0, p, NQ).unwrap();
        prop_assert!(rel(period_t(&w, p, NQ).unwrap(), 0.5 * w.phi_max * m) < 1e-12);
        let fixed = energy_period_fixed(&w, p, NQ).unwrap();
        prop_assert!(fixed <= 0.5 * w.phi_max * (1.0 + 1e-12));
        prop_assert!(rel(streamline_length(&w, w.m_abs, NQ).unwrap(), 100.0) < 1e-10);
    }

    #[test]
    fn period_and_length_decrease_downwards(depth in 8.0f64..60.0, fraction in 0.05f64..0.6, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        prop_assume!((a - b).abs() > 1e-3);
        let w = wave(depth, fraction);
        let (upper, lower) = (a.min(b) * w.m_abs, a.max(b) * w.m_abs);
        prop_assert!(period_t(&w, upper, NQ).unwrap() > period_t(&w, lower, NQ).unwrap());
        prop_assert!(streamline_length(&w, upper, NQ).unwrap() > streamline_length(&w, lower, NQ).unwrap());
    }

    #[test]
    fn particle_period_matches_quadrature(depth in 8.0f64..60.0, fraction in 0.0f64..0.6, t in 0.0f64..=1.0, q in 0.0f64..1.0) {
        let w = wave(depth, fraction);
        let p = t * w.m_abs;
        let tr = integrate_particle(&w, q * w.phi_max, p, 1e-11).unwrap();
        prop_assert!(rel(tr.measured_period, period_t(&w, p, NQ).unwrap()) < 1e-8);
        prop_assert!(tr.level_drift() == 0.0);
    }

    #[test]
    fn map_inversion_round_trips(depth in 8.0f64..60.0, fraction in 0.0f64..0.6, q in -0.5f64..0.5, t in 0.0f64..=1.0) {
        let w = wave(depth, fraction);
        let (q, p) = (q * w.phi_max, t * w.m_abs);
        let s = sample_at_qp(&w, q, p).unwrap();
        let (q2, p2) = invert_map(&w, s.x, s.z).unwrap();
        prop_assert!((q2 - q).abs() <= 1e-9 * w.phi_max);
        prop_assert!((p2 - p).abs() <= 1e-9 * w.m_abs);
    }

    #[test]
    fn surface_bernoulli_holds(depth in 8.0f64..60.0, fraction in 0.0f64..0.6, q in 0.0f64..1.0) {
        let w = wave(depth, fraction);
        let s = sample_at_qp(&w, q * w.phi_max, 0.0).unwrap();
        prop_assert!((s.e + w.g_eff * s.z - w.bernoulli_b).abs() <= 10.0 * w.residual_norm.max(1e-13));
    }
}
