//! Exact arithmetic of real quadratic discriminants: Pell fundamental
//! solutions, Kronecker characters, Dirichlet L-values, class numbers and
//! regulators via reduced indefinite forms, and the fundamental-solution
//! counting function nu(X).

pub mod forms;
pub mod kronecker;
pub mod lseries;
pub mod pell;
pub(crate) mod sqrtmod;

use num_integer::Roots;

pub use forms::{cycle_decomposition, reduced_forms, QuadraticForm};
pub use kronecker::{kronecker, kronecker_chi};
pub use lseries::{default_truncation, dirichlet_l1, dirichlet_l1_with_target, L1Value};
pub use pell::{pell_fundamental, principal_cycle_regulator, PellSolution};

use crate::error::{Error, Result};

/// True iff d > 0, d = 0 or 1 (mod 4), and d is not a perfect square.
pub fn is_discriminant(d: u64) -> bool {
    if d == 0 || d % 4 == 2 || d % 4 == 3 {
        return false;
    }
    let r = d.sqrt();
    r * r != d
}

/// A validated discriminant of a real quadratic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Discriminant(u64);

impl Discriminant {
    pub fn new(d: u64) -> Result<Self> {
        if is_discriminant(d) {
            Ok(Discriminant(d))
        } else {
            Err(Error::NotADiscriminant(d))
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }
}

impl std::fmt::Display for Discriminant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Tuning knobs for [`class_data`].
#[derive(Debug, Clone, Copy)]
pub struct ClassDataOptions {
    /// Fill L1 from the L-series when d is at most this bound; otherwise the
    /// class number formula supplies it.
    pub l1_crosscheck_bound: u64,
    /// Cap on the L-series truncation (the default truncation formula is
    /// generous; lower this to trade accuracy for speed).
    pub l1_truncation_cap: u64,
}

impl Default for ClassDataOptions {
    fn default() -> Self {
        ClassDataOptions {
            l1_crosscheck_bound: 10_000,
            l1_truncation_cap: u64::MAX,
        }
    }
}

/// Everything attached to one discriminant: Pell solution, class number,
/// regulator and L-value.
#[derive(Debug, Clone)]
pub struct DiscriminantData {
    pub d: Discriminant,
    pub pell: PellSolution,
    /// Number of reduction cycles of primitive forms (= proper classes).
    pub h: u64,
    /// L(1, chi_d): from the truncated series below the cross-check bound,
    /// from h log eps / sqrt(d) above it.
    pub l1: f64,
    /// Whether `l1` came from the independent series evaluation.
    pub l1_from_series: bool,
}

impl DiscriminantData {
    /// h(d) log eps_d, the quantity entering the amplitude.
    pub fn class_number_times_regulator(&self) -> f64 {
        self.h as f64 * self.pell.log_eps
    }
}

/// Enumerate the primitive reduced forms of discriminant d, partition them
/// into reduction cycles, and derive (h, log eps, L1).
pub fn class_data(d: Discriminant) -> DiscriminantData {
    class_data_with(d, &ClassDataOptions::default())
}

pub fn class_data_with(d: Discriminant, opts: &ClassDataOptions) -> DiscriminantData {
    let dd = d.get();
    let primitive: Vec<QuadraticForm> = reduced_forms(dd)
        .into_iter()
        .filter(QuadraticForm::is_primitive)
        .collect();
    debug_assert!(!primitive.is_empty());
    let cycles = cycle_decomposition(&primitive, dd);
    let h = cycles.len() as u64;

    let pell = pell_fundamental(d);
    // Every cycle accumulates the regulator; use the first as a cross-check.
    debug_assert!(
        (cycles[0].1 - pell.log_eps).abs() <= 1e-9 * pell.log_eps.max(1.0),
        "cycle regulator disagrees with Pell for d = {dd}"
    );

    let (l1, l1_from_series) = if dd <= opts.l1_crosscheck_bound {
        let trunc = default_truncation(dd).min(opts.l1_truncation_cap);
        (dirichlet_l1(d, trunc).value, true)
    } else {
        (h as f64 * pell.log_eps / (dd as f64).sqrt(), false)
    };

    DiscriminantData {
        d,
        pell,
        h,
        l1,
        l1_from_series,
    }
}

/// Exact count of triples (d, x, y), d = 0,1 (mod 4), x^2 - d y^2 = 4,
/// 2 < x < X. Asymptotically 35/16 X.
pub fn nu_count(x_bound: f64) -> u64 {
    if !x_bound.is_finite() || x_bound <= 3.0 {
        return 0;
    }
    let x_max = if x_bound.fract() == 0.0 {
        (x_bound as u64).saturating_sub(1)
    } else {
        x_bound.floor() as u64
    };
    let spf = crate::numeric::spf_sieve((x_max + 2) as usize);
    let mut count = 0u64;
    for x in 3..=x_max {
        // d y^2 = x^2 - 4 = (x-2)(x+2): merge the two factorizations.
        let mut factors = crate::numeric::factor_with_spf(x - 2, &spf);
        for (p, e) in crate::numeric::factor_with_spf(x + 2, &spf) {
            match factors.iter_mut().find(|(q, _)| *q == p) {
                Some((_, e0)) => *e0 += e,
                None => factors.push((p, e)),
            }
        }
        count += count_square_divisor_quotients(&factors, x * x - 4);
    }
    count
}

/// Number of y with y^2 | m and (m / y^2) = 0,1 (mod 4), from m's factors.
fn count_square_divisor_quotients(factors: &[(u64, u32)], m: u64) -> u64 {
    fn rec(factors: &[(u64, u32)], i: usize, y2: u64, m: u64, count: &mut u64) {
        if i == factors.len() {
            let d = m / y2;
            if d % 4 <= 1 {
                *count += 1;
            }
            return;
        }
        let (p, e) = factors[i];
        let mut pw = 1u64;
        for k in 0..=(e / 2) {
            let _ = k;
            rec(factors, i + 1, y2 * pw, m, count);
            pw *= p * p;
        }
    }
    let mut count = 0;
    rec(factors, 0, 1, m, &mut count);
    count
}
