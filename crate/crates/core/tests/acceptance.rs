//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line to stderr (uncaptured) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zladder::functionals::*;
use zladder::harness::{render_run, Command, RunConfig};
use zladder::ladder::{Ladder, LadderConfig};
use zladder::special_fns::{fd_truncation_bound, theta_prime_unchecked, z, z_oracle, z_prime_f1, z_prime_fd};
use zladder::sum_asymptotics::{consecutive_windows, locate_odd_root, rms_deviation, window_length};
use zladder::tbar_seq::{tbar_range, theta_residual};
use zladder::trig_sums::DeltaPreset;
use zladder::{Error, EvalConfig, ParityFilter, QuadratureSpec};

const SIXTH: f64 = 1.0 / 6.0;
const ONE_MINUS_C: f64 = 1.0 - 0.5772156649015329;

fn cfg() -> EvalConfig {
    EvalConfig::default()
}

fn report(n: u32, pass: bool, detail: impl AsRef<str>) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {n}: {verdict} {}", detail.as_ref());
}

/// One ladder for criteria 5 to 9, covering every chain up to T = 1e6.
fn ladder() -> &'static Ladder {
    static L: OnceLock<Ladder> = OnceLock::new();
    L.get_or_init(|| {
        let l = Ladder::new(LadderConfig::default(), QuadratureSpec::default(), cfg()).unwrap().with_cache_dir(None);
        let top = 1.0e6 * 1.0001;
        l.extend_to(required_extent(&l, top)).unwrap();
        l
    })
}

#[test]
fn criterion_01_special_functions() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_z = 0.0f64;
    let mut worst_d = 0.0f64;
    let mut failures = 0;
    for _ in 0..1000 {
        let t = rng.gen_range(1.0e3..1.0e6);
        let zv = z(t, &cfg()).unwrap();
        let exact = z_oracle(t, &cfg()).unwrap();
        let rz = (zv.value - exact).abs() / zv.remainder_bound;
        let d = z_prime_f1(t, &cfg()).unwrap();
        let fd = z_prime_fd(t, &cfg()).unwrap();
        let rd = (d.value - fd).abs() / (d.remainder_bound + fd_truncation_bound(t, &cfg()));
        worst_z = worst_z.max(rz);
        worst_d = worst_d.max(rd);
        if rz > 1.0 || rd > 1.0 {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = failures == 0 && elapsed <= Duration::from_secs(120);
    report(
        1,
        pass,
        format!(
            "1000 points, worst |z−oracle|/bound {worst_z:.3}, worst |Z′−fd|/envelope {worst_d:.3}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_tbar_enumeration() {
    let start = Instant::now();
    let big_t = 1.0e5;
    let count = 100_000usize;
    let h = 1.01 * count as f64 * PI / theta_prime_unchecked(big_t);
    let points = tbar_range(big_t, h, ParityFilter::All, &cfg()).unwrap();
    let points = &points[..count.min(points.len())];
    let consecutive = points.windows(2).all(|w| w[1].nu == w[0].nu + 1);
    let worst_residual = points.iter().map(|p| theta_residual(p.nu, p.t).abs()).fold(0.0, f64::max);
    let worst_spacing = points
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0].t + w[1].t);
            ((w[1].t - w[0].t) / (PI / theta_prime_unchecked(mid)) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let pass = points.len() == count
        && consecutive
        && worst_residual <= 1e-9
        && worst_spacing <= 0.01
        && elapsed <= Duration::from_secs(60);
    report(
        2,
        pass,
        format!(
            "{} points, max residual {worst_residual:.2e}, max spacing deviation {worst_spacing:.2e}, {:.1}s",
            points.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_central_sum() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut first_ok = true;
    let mut rms = Vec::new();
    let mut signs_ok = true;
    for &big_t in &[1.0e4, 1.0e5, 1.0e6] {
        let odd = consecutive_windows(big_t, SIXTH, ParityFilter::Odd, 16, &cfg()).unwrap();
        let even = consecutive_windows(big_t, SIXTH, ParityFilter::Even, 1, &cfg()).unwrap();
        let r = odd[0].ratio.abs();
        first_ok &= (0.6..=1.4).contains(&r);
        // odd sums come out positive and even sums negative
        signs_ok &= odd[0].sum > 0.0 && even[0].sum < 0.0;
        let dev = rms_deviation(&odd);
        rms.push(dev);
        lines.push(format!("T={big_t:.0e} |ratio| {r:.4} window-rms {dev:.4}"));
    }
    let trend = rms.windows(2).all(|w| w[1] <= w[0]);
    let elapsed = start.elapsed();
    let pass = first_ok && trend && signs_ok && elapsed <= Duration::from_secs(1200);
    report(3, pass, format!("{}; signs odd+/even− {signs_ok}; {:.1}s", lines.join(", "), elapsed.as_secs_f64()));
    assert!(pass);
}

#[test]
fn criterion_04_root_localization() {
    let kolesnik = DeltaPreset::parse("kolesnik").unwrap().value();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let heights: Vec<f64> = (0..100).map(|_| rng.gen_range(1.0e4..1.0e6)).collect();
    let mut found = [0usize; 2];
    for (i, &delta) in [SIXTH, kolesnik].iter().enumerate() {
        for &big_t in &heights {
            let Ok(b) = locate_odd_root(big_t, delta, &cfg()) else { continue };
            let inside = big_t < b.lo && b.hi < big_t + window_length(big_t, delta);
            let fd_lo = z_prime_fd(b.lo, &cfg()).unwrap();
            let fd_hi = z_prime_fd(b.hi, &cfg()).unwrap();
            if inside && fd_lo * fd_hi < 0.0 {
                found[i] += 1;
            }
        }
    }
    let pass = found == [100, 100];
    report(4, pass, format!("brackets verified: {}/100 at Δ=1/6, {}/100 at Δ=35/216", found[0], found[1]));
    assert!(pass);
}

#[test]
fn criterion_05_ladder_properties() {
    let l = ladder();
    let tol = l.quadrature().abs_tol;
    let mut residual = 0.0f64;
    let mut steps = Vec::new();
    for &t in &[1.0e4, 1.0e5, 1.0e6] {
        let s = l.reverse_step_detailed(t).unwrap();
        residual = residual.max(s.residual.abs());
        steps.push((s.t_hat - t) / (ONE_MINUS_C * t / t.ln()));
    }
    let part = l.check_partition(1.0e5, 3).unwrap();
    for &r in &part.chain.solver_residuals {
        residual = residual.max(r.abs());
    }
    let pass = residual <= tol
        && part.equidistance_deviation <= 0.05
        && part.integral_equality_deviation <= 0.05
        && steps.iter().all(|r| (r - 1.0).abs() <= 0.15);
    report(
        5,
        pass,
        format!(
            "max residual {residual:.2e} (tol {tol:.0e}), equidistance {:.4}, integral equality {:.4}, step/prediction {:?}",
            part.equidistance_deviation,
            part.integral_equality_deviation,
            steps.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_product_integral() {
    let l = ladder();
    let ratio = |t: f64| product_integral(l, t, 3, L_BAR).unwrap() / (2.0 * L_BAR * t.ln().powi(3));
    let (r4, r5) = (ratio(1.0e4), ratio(1.0e5));
    let pass = (r4 - 1.0).abs() <= 0.4 && (r5 - 1.0).abs() <= 0.4 && (r5 - 1.0).abs() <= (r4 - 1.0).abs();
    report(6, pass, format!("ratio {r4:.4} at 1e4, {r5:.4} at 1e5"));
    assert!(pass);
}

/// τ values per x so that x·τ sweeps T = (xτ)^6 from about 2e3 to 1e6.
const X_TAU: [f64; 5] = [3.6, 4.6, 6.0, 7.5, 10.0];

fn trend_holds(devs: &[f64], envs: &[f64]) -> bool {
    devs.iter().zip(envs).all(|(d, e)| d <= e) && devs.windows(2).all(|w| w[1] <= w[0])
}

#[test]
fn criterion_07_lemma_and_main_functional() {
    let l = ladder();
    let mut pass = true;
    let mut lines = Vec::new();
    for &t in &[1.0e4, 1.0e5] {
        let a = lemma1_check(l, t, SIXTH, L_BAR).unwrap();
        let b = lemma1_check(l, t, SIXTH, 0.5 * L_BAR).unwrap();
        pass &= (0.5..=1.5).contains(&a.ratio.abs());
        pass &= (a.ratio - b.ratio).abs() <= a.envelope;
        lines.push(format!("lemma T={t:.0e} {:.4} (half l {:.4})", a.ratio, b.ratio));
    }
    for &x in &[0.5, 1.0, 2.0] {
        let mut devs = Vec::new();
        let mut envs = Vec::new();
        for &xt in &X_TAU {
            let s = functional_main(l, x, xt / x, SIXTH).unwrap();
            devs.push((s.abs_ratio_over_tau / x - 1.0).abs());
            envs.push(s.envelope);
        }
        pass &= trend_holds(&devs, &envs);
        lines.push(format!("x={x} rel. deviation {:.3} → {:.3}", devs[0], devs[devs.len() - 1]));
    }
    report(7, pass, lines.join(", "));
    assert!(pass);
}

#[test]
fn criterion_08_equilibrium() {
    let l = ladder();
    let mut pass = true;
    let mut lines = Vec::new();
    for &tau in &[4.65, 6.0, 7.5, 10.0] {
        let e = equilibrium(l, tau, SIXTH).unwrap();
        let ratio = e.lhs.abs() / (e.c1 * e.c2);
        pass &= (0.4..=1.6).contains(&ratio);
        pass &= (e.altitude * e.altitude - e.c1 * e.c2).abs() <= 4.0 * f64::EPSILON * e.rhs;
        lines.push(format!("τ={tau} T={:.2e} {ratio:.4}", e.big_t));
    }
    report(8, pass, lines.join(", "));
    assert!(pass);
}

#[test]
fn criterion_09_split_functional() {
    let l = ladder();
    let balanced = 1.0 / (4.0 * PI.sqrt());
    let enforced = matches!(split21_functional(l, 1.0, 6.0, SIXTH, 0.1, 0.1), Err(Error::Constraint(_)));
    let mut pass = enforced;
    let mut lines = Vec::new();
    for &(l1, l2) in &[(balanced, balanced), (0.5, 1.0 / (8.0 * PI))] {
        for &x in &[0.5, 1.0, 2.0] {
            let mut devs = Vec::new();
            let mut envs = Vec::new();
            for &xt in &X_TAU {
                let split = split21_functional(l, x, xt / x, SIXTH, l1, l2).unwrap();
                let main = functional_main(l, x, xt / x, SIXTH).unwrap();
                pass &= (split.ratio_over_tau - main.ratio_over_tau).abs() / x <= split.envelope + main.envelope;
                devs.push((split.abs_ratio_over_tau / x - 1.0).abs());
                envs.push(split.envelope);
            }
            pass &= trend_holds(&devs, &envs);
            if x == 1.0 {
                lines.push(format!("l1={l1:.4} rel. deviation {:.3} → {:.3}", devs[0], devs[devs.len() - 1]));
            }
        }
    }
    report(9, pass, format!("constraint enforced {enforced}, {}", lines.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_10_determinism() {
    // the first run of each ladder configuration builds and persists the
    // cache, later runs load it
    let cache = tempfile::tempdir().unwrap();
    let configs = [
        RunConfig::new(Command::SumCheck).param("T", "1e4,1e5").param("delta", "sixth").param("windows", 3),
        RunConfig::new(Command::FindRoot).param("random", 4).param("seed", 3).param("delta", "kolesnik"),
        RunConfig::new(Command::Equilibrium).param("tau", "4.65,5.0").param("delta", "sixth"),
        RunConfig::new(Command::FermatScan)
            .param("max-n", 3)
            .param("max-xyz", 2)
            .param("tau", "4.6")
            .param("delta", "sixth"),
        RunConfig::new(Command::LadderCheck).param("T", "1e4,3e4").param("k", 3),
    ];
    let mut pass = true;
    for base in &configs {
        let outputs: Vec<String> = [1usize, 2, 4]
            .iter()
            .map(|&threads| {
                let mut c = base.clone();
                c.threads = threads;
                c.cache_dir = Some(cache.path().to_path_buf());
                render_run(&c).unwrap().text
            })
            .collect();
        pass &= outputs.windows(2).all(|w| w[0].as_bytes() == w[1].as_bytes());
    }
    report(10, pass, format!("{} configurations byte-identical at 1, 2 and 4 threads", configs.len()));
    assert!(pass);
}
