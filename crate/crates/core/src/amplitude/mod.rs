//! The amplitude Lambda(n): weighted count of hyperbolic conjugacy classes
//! of trace n, its precomputed table, summatory statistics, and the Euler
//! product for Peter's constant kappa (the mean square of the amplitude).

mod scan;
mod table;

pub use scan::OrbitScanner;
pub use table::{build_table, build_table_in_memory, render_cache, AmplitudeEntry, AmplitudeTable};

use crate::error::{Error, Result};
use crate::numeric::{primes_up_to, Kahan};
use crate::quadratic::{class_data, dirichlet_l1, Discriminant};

/// The square-divisor decomposition n^2 - 4 = d u^2 over discriminants d.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub n: u64,
    /// (d, u) pairs with d u^2 = n^2 - 4, ordered by ascending u.
    pub parts: Vec<(Discriminant, u64)>,
}

/// Factor m by trial division (m fits comfortably at desk scale).
fn factor_trial(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

/// All (d, u) with d u^2 = n^2 - 4 and d a discriminant, found by factoring
/// (n - 2)(n + 2) and scanning square divisors.
pub fn decompose(n: u64) -> Result<Decomposition> {
    if n <= 2 {
        return Err(Error::TraceTooSmall(n));
    }
    let big = n * n - 4;
    let mut factors = factor_trial(n - 2);
    for (p, e) in factor_trial(n + 2) {
        match factors.iter_mut().find(|(q, _)| *q == p) {
            Some((_, e0)) => *e0 += e,
            None => factors.push((p, e)),
        }
    }

    let mut us = vec![1u64];
    for &(p, e) in &factors {
        let take = us.len();
        let mut pw = p;
        for _ in 0..(e / 2) {
            for i in 0..take {
                us.push(us[i] * pw);
            }
            pw *= p;
        }
    }
    us.sort_unstable();

    let mut parts = Vec::new();
    for u in us {
        let d = big / (u * u);
        if d % 4 <= 1 {
            parts.push((Discriminant::new(d)?, u));
        }
    }
    Ok(Decomposition { n, parts })
}

/// Production amplitude: exact class-number-times-regulator aggregation via
/// the orbit scan over all reduced forms of discriminant n^2 - 4.
pub fn amp(n: u64) -> Result<f64> {
    if n <= 2 {
        return Err(Error::TraceTooSmall(n));
    }
    let mut scanner = OrbitScanner::for_max_trace(n);
    Ok(scanner.amp(n))
}

/// Reference path: sum h(d) log eps_d / (u sqrt(d)) over the decomposition,
/// with each (h, log eps) from an explicit cycle count. Cost grows like d,
/// so keep n moderate.
pub fn amp_via_class_data(n: u64) -> Result<f64> {
    let dec = decompose(n)?;
    let mut s = 0.0;
    for (d, u) in dec.parts {
        let data = class_data(d);
        s += data.class_number_times_regulator() / (u as f64 * (d.get() as f64).sqrt());
    }
    Ok(s)
}

/// Oracle path: sum L(1, chi_d)/u over the decomposition with truncated
/// L-series. Never used in production arithmetic.
pub fn amp_via_lseries(n: u64) -> Result<f64> {
    let dec = decompose(n)?;
    let mut s = 0.0;
    for (d, u) in dec.parts {
        let trunc = (50 * d.get()).max(20_000);
        s += dirichlet_l1(d, trunc).value / u as f64;
    }
    Ok(s)
}

/// Prefix sums (sum amp, sum amp^2) over 2 < n <= upto.
pub fn partial_stats(table: &AmplitudeTable, upto: u64) -> Result<(f64, f64)> {
    if upto < 3 || upto > table.n_max() {
        return Err(Error::RangeTooSmall {
            min: 3,
            got: upto.min(table.n_max()),
        });
    }
    let mut s = Kahan::default();
    let mut s2 = Kahan::default();
    for e in table.entries() {
        if e.n > upto {
            break;
        }
        s.add(e.amp);
        s2.add(e.amp * e.amp);
    }
    Ok((s.value(), s2.value()))
}

/// Peter's constant kappa = 1015/864 prod_{p odd} (1 + (p^4-2p^3+1)/(p^2-1)^3),
/// the mean square of the amplitude, with a reported tail bound.
#[derive(Debug, Clone, Copy)]
pub struct PeterKappa {
    pub value: f64,
    /// Relative bound on the omitted factors over primes beyond p_max.
    pub tail_bound: f64,
    pub p_max: u64,
}

pub const LEADING_KAPPA_FACTOR: f64 = 1015.0 / 864.0;

pub fn peter_kappa(p_max: u64) -> PeterKappa {
    let mut value = LEADING_KAPPA_FACTOR;
    for p in primes_up_to(p_max) {
        if p == 2 {
            continue;
        }
        let pf = p as f64;
        let num = pf.powi(4) - 2.0 * pf.powi(3) + 1.0;
        let den = (pf * pf - 1.0).powi(3);
        value *= 1.0 + num / den;
    }
    // Each omitted factor is 1 + x_p with x_p < 1.43/p^2 for p >= 3, and
    // sum_{p > P} 1/p^2 < 1/P.
    let tail_bound = (1.43 / p_max as f64).exp_m1();
    PeterKappa {
        value,
        tail_bound,
        p_max,
    }
}

/// Default prime cutoff used when a single kappa value is needed.
pub const DEFAULT_KAPPA_PMAX: u64 = 1_000_000;

/// kappa at the default cutoff, computed once.
pub fn default_kappa() -> f64 {
    use std::sync::OnceLock;
    static KAPPA: OnceLock<f64> = OnceLock::new();
    *KAPPA.get_or_init(|| peter_kappa(DEFAULT_KAPPA_PMAX).value)
}
