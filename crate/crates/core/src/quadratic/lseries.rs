//! L(1, chi_d) by direct summation plus a periodic tail expansion.
//!
//! The cross-check path of the amplitude arithmetic: production code never
//! consumes these values, tests compare them against h(d) log eps_d / sqrt(d).

use std::cell::RefCell;

use super::{kronecker::kronecker_chi, Discriminant};
use crate::error::{Error, Result};
use crate::numeric::Kahan;

/// A truncated L-value with its rigorous (conservative) error bound.
#[derive(Debug, Clone, Copy)]
pub struct L1Value {
    pub value: f64,
    /// Bound on |value - L(1, chi_d)| from the periodic tail expansion plus
    /// floating-point slack.
    pub error_bound: f64,
    /// Number of directly summed terms (after rounding up to whole periods).
    pub terms: u64,
}

/// Default truncation ceil(sqrt(d) (ln d + 10) 1e3), deliberately generous.
pub fn default_truncation(d: u64) -> u64 {
    let df = d as f64;
    (df.sqrt() * (df.ln() + 10.0) * 1e3).ceil() as u64
}

thread_local! {
    // Reciprocal table shared across calls on one thread; entry n holds 1/n.
    static RECIP: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

/// Evaluate sum_{n <= m} chi(n)/n + tail, where the tail over whole periods
/// is expanded through third order in r/X with exact character moments.
pub fn dirichlet_l1(d: Discriminant, truncation: u64) -> L1Value {
    let dd = d.get();
    // chi[0] (residue 0) is 0 since gcd(d, d) = d > 1.
    let chi: Vec<i8> = (0..dd).map(|r| kronecker_chi(d, r) as i8).collect();

    // Round the cutoff up to a whole number of periods, at least one.
    let periods = truncation.div_ceil(dd).max(1);
    let m = periods * dd;

    let direct = RECIP.with(|cell| {
        let mut recip = cell.borrow_mut();
        let need = (m + 1) as usize;
        if recip.len() < need {
            let start = recip.len().max(1);
            if recip.is_empty() {
                recip.push(0.0);
            }
            for n in start..need {
                recip.push(1.0 / n as f64);
            }
        }
        let mut acc = Kahan::default();
        let mut idx = 0usize;
        for n in 1..=m {
            idx += 1;
            if idx == dd as usize {
                idx = 0;
            }
            let c = chi[idx];
            if c != 0 {
                acc.add(f64::from(c) * recip[n as usize]);
            }
        }
        acc.value()
    });

    // Character moments C_k = sum_{r=1..d} r^k chi(r), exactly.
    let mut c1 = 0i128;
    let mut c2 = 0i128;
    let mut c3 = 0i128;
    let mut c4_abs = 0i128;
    for (r, &c) in chi.iter().enumerate().take(dd as usize).skip(1) {
        if c == 0 {
            continue;
        }
        let r = r as i128;
        let s = i128::from(c);
        c1 += s * r;
        c2 += s * r * r;
        c3 += s * r * r * r;
        c4_abs += r * r * r * r;
    }
    // Residue d (= 0 mod d) has chi = 0, so the period sum is complete.

    // S_k = sum_{j >= 0} (m + j d)^{-k} via 64 explicit terms plus
    // Euler-Maclaurin continuation.
    let s_k = |k: i32| -> f64 {
        let df = dd as f64;
        let mut acc = 0.0;
        let jmax = 64u64;
        for j in 0..jmax {
            acc += ((m + j * dd) as f64).powi(-k);
        }
        let x = (m + jmax * dd) as f64;
        acc + x.powi(1 - k) / (f64::from(k - 1) * df)
            + 0.5 * x.powi(-k)
            + f64::from(k) * df * x.powi(-k - 1) / 12.0
    };

    let tail = -(c1 as f64) * s_k(2) + (c2 as f64) * s_k(3) - (c3 as f64) * s_k(4);
    let remainder_bound = (c4_abs as f64) * s_k(5);
    let rounding_slack = 4e-16 * ((m as f64).ln() + 2.0);

    L1Value {
        value: direct + tail,
        error_bound: remainder_bound + rounding_slack,
        terms: m,
    }
}

/// Like [`dirichlet_l1`] but fails when the bound cannot meet `target_abs`.
pub fn dirichlet_l1_with_target(
    d: Discriminant,
    truncation: u64,
    target_abs: f64,
) -> Result<L1Value> {
    let v = dirichlet_l1(d, truncation);
    if v.error_bound > target_abs {
        // The remainder scales like (d/m)^4 / d, so invert that.
        let factor = (v.error_bound / target_abs).powf(0.25);
        let required = ((v.terms as f64) * factor).ceil() as u64;
        return Err(Error::PrecisionUnreachable {
            d: d.get(),
            truncation,
            target: target_abs,
            bound: v.error_bound,
            required,
        });
    }
    Ok(v)
}
