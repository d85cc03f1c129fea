//! Acceptance suite: one test per numbered criterion, each printing a
//! PASS/FAIL line with the measured quantities (run with `--nocapture` to
//! see them all).
//!
//! Criteria 5 and 6 carry known desk-scale deviations that are asserted
//! faithfully rather than widened; see the failure messages for the
//! measured values and the mechanism.

use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};

use modular_spectra::amplitude::{
    amp, amp_via_class_data, amp_via_lseries, build_table, default_kappa, partial_stats,
    peter_kappa, AmplitudeTable,
};
use modular_spectra::quadratic::{class_data, is_discriminant, nu_count, Discriminant};
use modular_spectra::relations::{find_relations, liouville_gap_check, RelationTerm};
use modular_spectra::stats::{moment_report, sample_taus, MomentReport};
use modular_spectra::testfn::{
    make_test_function, make_weight, sigma_model, TestFunctionKind, WeightKind,
};
use modular_spectra::trace::{
    hyperbolic_sum, hyperbolic_sum_batch, mean_term, residual_term_batch, ExperimentConfig,
    SamplingMode,
};

fn cache_dir() -> PathBuf {
    std::env::var_os("GSL_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/gsl-cache"))
}

/// Table covering every window used here (L <= 3 needs ceil(e^{3 pi})).
fn window_table() -> &'static AmplitudeTable {
    static TABLE: OnceLock<AmplitudeTable> = OnceLock::new();
    TABLE.get_or_init(|| build_table(12_392, Some(&cache_dir())).expect("window table"))
}

/// The big summatory table for the mean and mean-square criteria.
fn big_table() -> &'static AmplitudeTable {
    static TABLE: OnceLock<AmplitudeTable> = OnceLock::new();
    TABLE.get_or_init(|| build_table(100_000, Some(&cache_dir())).expect("big table"))
}

fn experiment_config(l: f64) -> ExperimentConfig {
    ExperimentConfig {
        t: 1e6,
        l,
        samples: 200_000,
        seed: 7,
        f: TestFunctionKind::Triangle,
        w: WeightKind::SmoothBump,
        mode: SamplingMode::Montecarlo,
    }
}

/// Moment reports shared across criteria 5-7, keyed by L.
fn report_for(l: f64) -> MomentReport {
    static CACHE: OnceLock<Mutex<Vec<(u64, MomentReport)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let key = l.to_bits();
    {
        let guard = cache.lock().unwrap();
        if let Some((_, r)) = guard.iter().find(|(k, _)| *k == key) {
            return r.clone();
        }
    }
    let report = moment_report(&experiment_config(l), window_table()).expect("moment report");
    let mut guard = cache.lock().unwrap();
    guard.push((key, report.clone()));
    report
}

#[test]
fn criterion_01_peter_constant() {
    let t0 = Instant::now();
    let k = peter_kappa(1_000_000);
    let elapsed = t0.elapsed();
    let dev = (k.value - 1.328).abs();
    println!(
        "ACCEPTANCE 1 (Peter's constant): kappa(1e6) = {:.8}, |kappa - 1.328| = {:.2e} (<= 2e-3), {:?}",
        k.value, dev, elapsed
    );
    assert!(dev <= 2e-3, "kappa {} strays from 1.328", k.value);
    assert!(elapsed.as_secs() < 60, "kappa took {elapsed:?}");
    println!("ACCEPTANCE 1: PASS");
}

#[test]
fn criterion_02_class_number_formula() {
    use rayon::prelude::*;
    let t0 = Instant::now();
    let (worst, at) = (5u64..=10_000)
        .into_par_iter()
        .filter(|&d| is_discriminant(d))
        .map(|d| {
            let data = class_data(Discriminant::new(d).unwrap());
            assert!(data.l1_from_series, "series L1 expected at d = {d}");
            let lhs = data.class_number_times_regulator();
            let rhs = (d as f64).sqrt() * data.l1;
            ((lhs - rhs).abs() / rhs, d)
        })
        .reduce(|| (0.0, 0), |a, b| if a.0 > b.0 { a } else { b });
    let elapsed = t0.elapsed();
    println!(
        "ACCEPTANCE 2 (class number formula): worst |h log eps - sqrt(d) L1| / (sqrt(d) L1) = {worst:.3e} at d = {at} (<= 1e-3), {elapsed:?}"
    );
    assert!(worst <= 1e-3);
    assert!(elapsed.as_secs() < 600, "CNF sweep took {elapsed:?}");
    println!("ACCEPTANCE 2: PASS");
}

#[test]
fn criterion_03_amplitude_mean() {
    let table = big_table();
    let dev = |upto: u64| {
        let (s, _) = partial_stats(table, upto).unwrap();
        (s / upto as f64 - 1.0).abs()
    };
    let (dev3, dev4, dev5) = (dev(1_000), dev(10_000), dev(100_000));
    println!(
        "ACCEPTANCE 3 (amplitude mean): |mean - 1| = {dev3:.4e} at 1e3, {dev4:.4e} at 1e4, {dev5:.4e} at 1e5 (<= 0.05, decreasing)"
    );
    assert!(dev5 <= 0.05);
    assert!(
        dev5 < dev4 && dev4 < dev3,
        "trend not monotone over the decades"
    );
    println!("ACCEPTANCE 3: PASS");
}

#[test]
fn criterion_04_amplitude_mean_square() {
    let table = big_table();
    let (_, sq) = partial_stats(table, 100_000).unwrap();
    let kappa = default_kappa();
    let ratio = sq / (kappa * 1e5);
    println!("ACCEPTANCE 4 (amplitude mean square): meansq / kappa = {ratio:.5} (within 10% of 1)");
    assert!((ratio - 1.0).abs() <= 0.10);
    println!("ACCEPTANCE 4: PASS");
}

#[test]
fn criterion_05_variance_formula() {
    let mut failures = Vec::new();
    for l in [2.0, 2.5, 3.0] {
        let r = report_for(l);
        let ok = (0.8..=1.2).contains(&r.var_ratio);
        println!(
            "ACCEPTANCE 5 (variance formula): L = {l}: var_ratio = {:.4} +- {:.4} {} mean = {:.5} +- {:.5}",
            r.var_ratio,
            r.stderr.var_ratio,
            if ok { "(in [0.8, 1.2])" } else { "(OUTSIDE [0.8, 1.2])" },
            r.mean,
            r.stderr.mean
        );
        assert!(
            r.mean.abs() <= 3.0 * r.stderr.mean,
            "standardized mean {} breaks 3 sigma at L = {l}",
            r.mean
        );
        if !ok {
            failures.push((l, r.var_ratio));
        }
    }
    assert!(
        failures.is_empty(),
        "var_ratio outside [0.8, 1.2] at {failures:?}: the empirical variance equals the exact \
         diagonal sum (0.7798 at L = 2), which the asymptotic sigma_L^2 formula overshoots at \
         small L because the spectral integral extends below the first trace n = 3 and the \
         amplitude mean square has not yet reached kappa over the window (meansq/kappa = 0.945 \
         for n <= 535). A genuine finite-L shortfall, not a sampling artifact."
    );
    println!("ACCEPTANCE 5: PASS");
}

#[test]
fn criterion_06_central_limit_theorem() {
    let r25 = report_for(2.5);
    println!(
        "ACCEPTANCE 6 (CLT at L = 2.5): m3 = {:.4} (|.| <= 0.15), m4 = {:.4} (|m4 - 3| <= 0.45), KS = {:.4} (<= 0.05)",
        r25.moments.m3, r25.moments.m4, r25.ks
    );
    assert!(r25.moments.m3.abs() <= 0.15);
    assert!((r25.moments.m4 - 3.0).abs() <= 0.45);
    assert!(r25.ks <= 0.05);
    // Higher Gaussian targets m5 -> 0, m6 -> 15 at the same width.
    println!(
        "ACCEPTANCE 6 (higher moments): m5 = {:.4}, m6 = {:.4} (targets 0 and 15)",
        r25.moments.m5, r25.moments.m6
    );
    assert!(r25.moments.m5.abs() <= 0.75);
    assert!((r25.moments.m6 - 15.0).abs() <= 1.5);

    let d15 = (report_for(1.5).moments.m4 - 3.0).abs();
    let d30 = (report_for(3.0).moments.m4 - 3.0).abs();
    println!(
        "ACCEPTANCE 6 (moment direction): |m4 - 3| = {d15:.4} at L = 1.5 vs {d30:.4} at L = 3.0 (want smaller at 3.0)"
    );
    assert!(
        d30 < d15,
        "|m4 - 3| grows from {d15:.4} (L = 1.5) to {d30:.4} (L = 3.0) at T = 1e6: multiplicative \
         quadruple near-resonances a*b = c*d among traces above ~sqrt(T/10) enter the window \
         once e^(pi L) is large enough and inflate the fourth moment; the excess dies off with \
         T (m4 = 3.55, 3.06, 3.00 at T = 1e6, 1e7, 1e8), but at the pinned T = 1e6 the fourth \
         moment needs roughly 2 pi L < log T, i.e. L < 2.2."
    );
    println!("ACCEPTANCE 6: PASS");
}

#[test]
fn criterion_07_residual_negligibility() {
    let f = make_test_function(TestFunctionKind::Triangle);
    let w = make_weight(WeightKind::SmoothBump);
    let kappa = default_kappa();
    let rms_over_sigma = |l: f64| {
        let mut cfg = experiment_config(l);
        cfg.samples = 50_000;
        cfg.seed = 11;
        let s = sample_taus(&cfg, &w).unwrap();
        let values = residual_term_batch(&s.taus, l, &f).unwrap();
        let ms: f64 = values
            .iter()
            .zip(&s.weights)
            .map(|(v, wt)| wt * v * v)
            .sum();
        ms.sqrt() / sigma_model(l, &f, kappa).unwrap().sigma_sq.sqrt()
    };
    let (r2, r25, r3) = (
        rms_over_sigma(2.0),
        rms_over_sigma(2.5),
        rms_over_sigma(3.0),
    );
    println!(
        "ACCEPTANCE 7 (residual negligibility): RMS(R)/sigma = {r2:.4} (L=2), {r25:.4} (L=2.5, <= 0.25), {r3:.4} (L=3, < L=2 value)"
    );
    assert!(r25 <= 0.25);
    assert!(r3 < r2);
    println!("ACCEPTANCE 7: PASS");
}

#[test]
fn criterion_08_nu_counting() {
    // Exact value at 10 against an independent brute-force scan.
    let v10 = nu_count(10.0);
    let mut brute = 0u64;
    for x in 3u64..10 {
        let m = x * x - 4;
        let mut y = 1u64;
        while y * y <= m {
            if m % (y * y) == 0 && (m / (y * y)) % 4 <= 1 {
                brute += 1;
            }
            y += 1;
        }
    }
    let target = 35.0 / 16.0;
    let d4 = (nu_count(1e4) as f64 / 1e4 / target - 1.0).abs();
    let density = nu_count(1e5) as f64 / 1e5;
    let dev = (density / target - 1.0).abs();
    println!(
        "ACCEPTANCE 8 (nu counting): nu(10) = {v10} (= brute {brute} = 9); nu(1e5)/1e5 = {density:.4} vs 35/16 = {target:.4} (within 5%: dev = {dev:.4}, improving on {d4:.4} at 1e4)"
    );
    assert_eq!(v10, 9);
    assert_eq!(v10, brute);
    assert!(dev <= 0.05);
    assert!(dev < d4, "density trend is not monotone");
    println!("ACCEPTANCE 8: PASS");
}

#[test]
fn criterion_09_relations_and_gaps() {
    let rels = find_relations(20, 4).unwrap();
    let shape: Vec<Vec<(u64, i8)>> = rels
        .iter()
        .map(|r| r.terms.iter().map(|t| (t.n, t.sign)).collect())
        .collect();
    let expected: Vec<Vec<(u64, i8)>> = vec![
        vec![(3, 1), (3, 1), (7, -1)],
        vec![(3, 1), (3, 1), (3, 1), (18, -1)],
        vec![(4, 1), (4, 1), (14, -1)],
    ];
    println!("ACCEPTANCE 9 (relations): find_relations(20, 4) -> {shape:?}");
    assert_eq!(shape.len(), 3, "expected exactly the three power relations");
    for e in &expected {
        assert!(shape.contains(e), "missing relation {e:?}");
    }
    // Every relation decomposes into same-field blocks with zero k-sums,
    // witnessed by the exact residual.
    for r in &rels {
        assert!(r.float_residual().abs() < 1e-9);
        assert_eq!(r.blocks.len(), 1);
        let _ = RelationTerm { n: 3, sign: 1 }; // type is part of the contract
    }

    let gaps = liouville_gap_check(200).unwrap();
    println!(
        "ACCEPTANCE 9 (Liouville gaps): min gap * min(m, n) = {:.4} at {:?} (>= 1); min log-margin (K <= 3) = {:.3}",
        gaps.min_gap_product, gaps.min_gap_pair, gaps.min_margin_log
    );
    assert!(gaps.min_gap_product >= 1.0);
    assert!(gaps.min_margin_log >= 0.0);
    println!("ACCEPTANCE 9: PASS");
}

#[test]
fn criterion_10_oracle_equivalence() {
    // Amplitude: exact path against the truncated L-series oracle.
    let mut worst_series = 0.0f64;
    let mut worst_class = 0.0f64;
    for n in 3..=200u64 {
        let fast = amp(n).unwrap();
        let series = amp_via_lseries(n).unwrap();
        let class = amp_via_class_data(n).unwrap();
        worst_series = worst_series.max((fast - series).abs() / fast);
        worst_class = worst_class.max((fast - class).abs() / fast);
    }
    println!(
        "ACCEPTANCE 10 (oracles): amp vs L-series worst rel = {worst_series:.2e} (<= 1e-3); vs class-data worst rel = {worst_class:.2e}"
    );
    assert!(worst_series <= 1e-3);
    assert!(worst_class <= 1e-9);

    // Hyperbolic sum: blocked/parallel batch vs the scalar loop on 100
    // random (tau, L) pairs.
    let table = window_table();
    let f = make_test_function(TestFunctionKind::Triangle);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst_batch = 0.0f64;
    for _ in 0..100 {
        let l = 0.5 + 2.5 * rng.gen::<f64>();
        let tau = 1e2 + (1e6 - 1e2) * rng.gen::<f64>();
        let batch = hyperbolic_sum_batch(&[tau], l, &f, table).unwrap()[0];
        let scalar = hyperbolic_sum(tau, l, &f, table).unwrap();
        let scale = scalar.abs().max(1e-12);
        worst_batch = worst_batch.max((batch - scalar).abs() / scale);
    }
    println!("ACCEPTANCE 10 (paths): batch vs scalar worst rel = {worst_batch:.2e} (<= 1e-9)");
    assert!(worst_batch <= 1e-9);
    println!("ACCEPTANCE 10: PASS");
}

#[test]
fn criterion_11_mean_term_asymptotic() {
    let f = make_test_function(TestFunctionKind::Triangle);
    let value = mean_term(1e4, 2.5, &f).unwrap();
    let ratio = value * 6.0 * 2.5 / 1e4;
    println!(
        "ACCEPTANCE 11 (mean term): mean_term(1e4, 2.5) = {value:.4}; * 6L/tau = {ratio:.5} (within 2% of 1)"
    );
    assert!((ratio - 1.0).abs() <= 0.02);
    // Leading order makes mean_term * L nearly constant in L.
    let v3 = mean_term(1e4, 3.0, &f).unwrap();
    let stability = (v3 * 3.0) / (value * 2.5);
    println!("ACCEPTANCE 11 (L stability): (L=3)/(L=2.5) scaled ratio = {stability:.6}");
    assert!((stability - 1.0).abs() <= 0.02);
    println!("ACCEPTANCE 11: PASS");
}
