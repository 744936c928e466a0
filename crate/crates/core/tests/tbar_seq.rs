use std::f64::consts::PI;

use proptest::prelude::*;
use zladder::special_fns::{theta_prime_unchecked, theta_unchecked, z_prime_f1_unchecked};
use zladder::tbar_seq::*;
use zladder::{EvalConfig, Error};

fn cfg() -> EvalConfig {
    EvalConfig::testing()
}

#[test]
fn spacing_follows_inverse_theta_prime() {
    let start = tbar_range(1e4, 50.0, ParityFilter::All, &cfg()).unwrap();
    for w in start.windows(2) {
        let predicted = PI / theta_prime_unchecked(w[0].t);
        assert!(((w[1].t - w[0].t) / predicted - 1.0).abs() < 0.01);
        assert!((theta_unchecked(w[1].t) - theta_unchecked(w[0].t) - PI).abs() < 1e-8);
    }
}

#[test]
fn spacing_at_ten_thousand() {
    let pts = tbar_range(1e4, 2.0, ParityFilter::All, &cfg()).unwrap();
    let gap = pts[1].t - pts[0].t;
    assert!((gap - PI / 3.6865).abs() < 2e-3, "{gap}");
    assert!((gap - 0.852).abs() < 1e-3);
}

#[test]
fn single_point_solver_meets_tolerance() {
    let c = cfg();
    for nu in [nu_min(&c), 100, 31_861, 5_488_816, 50_000_000] {
        let p = tbar(nu, &c).unwrap();
        assert!(theta_residual(nu, p.t).abs() <= tolerance_at(p.t), "nu={nu}");
        assert_eq!(p.parity, Parity::of(nu));
    }
}

#[test]
fn index_below_floor_is_rejected() {
    let c = EvalConfig::default();
    let floor = nu_min(&c);
    assert!(tbar(floor, &c).unwrap().t >= c.min_t);
    assert!(tbar(floor - 1, &c).is_err());
    assert!(matches!(tbar_range(50.0, 1.0, ParityFilter::All, &c), Err(Error::Domain { .. })));
}

#[test]
fn window_counts() {
    let c = cfg();
    let big_t: f64 = 1e4;
    // H = T^{1/6} ln T
    let h = big_t.powf(1.0 / 6.0) * big_t.ln();
    let odd = tbar_range(big_t, h, ParityFilter::Odd, &c).unwrap();
    let predicted = h * theta_prime_unchecked(big_t) / (2.0 * PI);
    assert!((odd.len() as f64 - predicted).abs() <= 1.0, "{} vs {predicted}", odd.len());
    assert_eq!(odd.len(), 25);
    // The wider window H = 198.4 gives ≈ 116 odd points.
    let wide = tbar_range(big_t, 198.4, ParityFilter::Odd, &c).unwrap();
    assert!((wide.len() as i64 - 116).abs() <= 1, "{}", wide.len());
}

#[test]
fn empty_window_between_points() {
    let c = cfg();
    let pts = tbar_range(1e4, 2.0, ParityFilter::All, &c).unwrap();
    let gap_start = pts[0].t + 1e-3;
    let h = pts[1].t - pts[0].t - 2e-3;
    assert!(tbar_range(gap_start, h, ParityFilter::All, &c).unwrap().is_empty());
}

#[test]
fn parities_partition_the_window() {
    let c = cfg();
    let all = tbar_range(2e4, 30.0, ParityFilter::All, &c).unwrap();
    let mut merged = tbar_range(2e4, 30.0, ParityFilter::Even, &c).unwrap();
    merged.extend(tbar_range(2e4, 30.0, ParityFilter::Odd, &c).unwrap());
    merged.sort_by(|a, b| a.t.total_cmp(&b.t));
    assert_eq!(all, merged);
    assert!(all.windows(2).all(|w| w[1].t > w[0].t && w[1].nu == w[0].nu + 1));
}

#[test]
fn first_oscillator_sign_alternates_with_parity() {
    // The n = 1 term of Formula 1 is −2θ′ sin θ = −2θ′ (−1)^ν at t̄ν.
    for p in tbar_range(1e4, 3.0, ParityFilter::All, &cfg()).unwrap() {
        let term = -2.0 * theta_prime_unchecked(p.t) * theta_unchecked(p.t).sin();
        let expected = match p.parity {
            Parity::Even => -2.0 * theta_prime_unchecked(p.t),
            Parity::Odd => 2.0 * theta_prime_unchecked(p.t),
        };
        assert!((term - expected).abs() < 1e-6);
        assert!(z_prime_f1_unchecked(p.t).is_finite());
    }
}

#[test]
fn parity_filter_parses() {
    assert_eq!("odd".parse::<ParityFilter>().unwrap(), ParityFilter::Odd);
    assert_eq!(ParityFilter::Even.to_string(), "even");
    assert!("both".parse::<ParityFilter>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn window_is_complete(big_t in 100.0f64..1e6, h in 0.01f64..40.0) {
        let pts = tbar_range(big_t, h, ParityFilter::All, &cfg()).unwrap();
        prop_assert_eq!(pts.len() as i64, expected_count(big_t, h));
        for p in &pts {
            prop_assert!(p.t >= big_t && p.t <= big_t + h);
            prop_assert!(theta_residual(p.nu, p.t).abs() <= SOLVER_TOL);
        }
    }

    #[test]
    fn solutions_increase_with_index(nu in 10u64..10_000_000) {
        let a = tbar(nu, &cfg()).unwrap();
        let b = tbar(nu + 1, &cfg()).unwrap();
        prop_assert!(b.t > a.t);
    }
}
