use proptest::prelude::*;
use zladder::special_fns::{theta_prime_unchecked, z_prime_fd};
use zladder::sum_asymptotics::*;
use zladder::tbar_seq::tbar_range;
use zladder::{EvalConfig, Error, ParityFilter};

const SIXTH: f64 = 1.0 / 6.0;

fn cfg() -> EvalConfig {
    EvalConfig::default()
}

#[test]
fn odd_sum_at_ten_thousand() {
    let r = sum_zprime(1e4, SIXTH, ParityFilter::Odd, &cfg()).unwrap();
    assert!((r.h - 42.7506).abs() < 1e-3, "{}", r.h);
    assert!((r.main_term - 184.9).abs() < 0.1, "{}", r.main_term);
    assert_eq!(r.n_points, 25);
    assert!(r.ratio > 0.6 && r.ratio < 1.4, "{r:?}");
    assert!(r.beyond_formula2_window);
}

#[test]
fn first_oscillator_alone_reproduces_main_term() {
    // The n = 1 term of Formula 1 at t̄ν is +2θ′ for odd ν and −2θ′ for even ν.
    let big_t = 1e5;
    let h = window_length(big_t, SIXTH);
    let main = main_term(big_t, h);
    for (filter, sign) in [(ParityFilter::Odd, 1.0), (ParityFilter::Even, -1.0)] {
        let pts = tbar_range(big_t, h, filter, &cfg()).unwrap();
        let partial: f64 = pts.iter().map(|p| sign * 2.0 * theta_prime_unchecked(p.t)).sum();
        assert!((partial / (sign * main) - 1.0).abs() < 0.05, "{filter}: {partial} vs {main}");
    }
}

#[test]
fn parities_carry_opposite_signs_at_one_million() {
    let odd = sum_zprime(1e6, SIXTH, ParityFilter::Odd, &cfg()).unwrap();
    let even = sum_zprime(1e6, SIXTH, ParityFilter::Even, &cfg()).unwrap();
    assert!(odd.sum > 0.0 && even.sum < 0.0);
    assert!((odd.sum.abs() / even.sum.abs() - 1.0).abs() < 0.2);
}

#[test]
fn all_parity_is_sum_of_both() {
    for big_t in [1e4, 3.3e5] {
        let all = sum_zprime(big_t, SIXTH, ParityFilter::All, &cfg()).unwrap();
        let odd = sum_zprime(big_t, SIXTH, ParityFilter::Odd, &cfg()).unwrap();
        let even = sum_zprime(big_t, SIXTH, ParityFilter::Even, &cfg()).unwrap();
        assert_eq!(all.sum, even.sum + odd.sum);
        assert_eq!(all.n_points, even.n_points + odd.n_points);
    }
}

#[test]
fn report_invariants() {
    let big_t = 2.5e4;
    let r = sum_zprime(big_t, 0.15, ParityFilter::Even, &cfg()).unwrap();
    assert_eq!(r.h, big_t.powf(0.15) * big_t.ln());
    let pts = tbar_range(big_t, r.h, ParityFilter::Even, &cfg()).unwrap();
    assert_eq!(r.n_points, pts.len());
    assert_eq!(r.nu_first, Some(pts[0].nu));
    assert!(r.error_envelope > 0.0);
}

#[test]
fn sum_preconditions() {
    assert!(matches!(sum_zprime(500.0, SIXTH, ParityFilter::Odd, &cfg()), Err(Error::Domain { .. })));
    assert!(sum_zprime(1e4, 0.2, ParityFilter::Odd, &cfg()).is_err());
    assert!(sum_zprime(1e4, 0.0, ParityFilter::Odd, &cfg()).is_err());
    assert!(sum_zprime(1e4, 0.1666667, ParityFilter::Odd, &cfg()).is_ok());
}

#[test]
fn window_sequence_is_contiguous() {
    let w = consecutive_windows(1e4, SIXTH, ParityFilter::Odd, 4, &cfg()).unwrap();
    for pair in w.windows(2) {
        assert_eq!(pair[1].big_t, pair[0].big_t + pair[0].h);
    }
    assert!(rms_deviation(&w) < 0.1);
}

fn check_bracket(b: &RootBracket) {
    let h = window_length(b.big_t, b.delta);
    assert!(b.big_t < b.lo && b.lo < b.hi && b.hi < b.big_t + h);
    assert!(b.hi - b.lo <= 1.5 * std::f64::consts::PI / theta_prime_unchecked(b.big_t));
    let fd_lo = z_prime_fd(b.lo, &cfg()).unwrap();
    let fd_hi = z_prime_fd(b.hi, &cfg()).unwrap();
    assert_eq!(fd_lo.signum() * fd_hi.signum(), -1.0);
    assert!(b.lo <= b.refined_lo && b.refined_hi <= b.hi);
    assert!(b.refined_hi - b.refined_lo <= REFINED_WIDTH);
}

#[test]
fn root_at_ten_thousand_classical_exponent() {
    let b = locate_odd_root(1e4, SIXTH, &cfg()).unwrap();
    check_bracket(&b);
}

#[test]
fn root_at_one_million_kolesnik_exponent() {
    let b = locate_odd_root(1e6, 35.0 / 216.0, &cfg()).unwrap();
    check_bracket(&b);
}

#[test]
fn tiny_exponent_either_finds_or_reports() {
    match locate_odd_root(1e4, 1e-4, &cfg()) {
        Ok(b) => check_bracket(&b),
        Err(e) => assert!(matches!(e, Error::RootNotFound { .. })),
    }
}

#[test]
fn root_preconditions() {
    assert!(locate_odd_root(1e4, 0.5, &cfg()).is_err());
    assert!(locate_odd_root(10.0, 0.1, &cfg()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn roots_found_at_random_heights(big_t in 1e4f64..2e5) {
        let b = locate_odd_root(big_t, SIXTH, &cfg()).unwrap();
        check_bracket(&b);
    }
}
