//! Reduced indefinite binary quadratic forms and their reduction cycles.
//!
//! A form (a, b, c) of positive non-square discriminant d = b^2 - 4ac is
//! reduced iff 0 < b < sqrt(d) and sqrt(d) - b < 2|a| < sqrt(d) + b, which is
//! equivalent to the exact integer conditions ac < 0, 0 < b, b^2 < d and
//! (|a| + |c|)^2 < d. Reduced forms fall into disjoint cycles under the
//! reduction operator rho; the cycles are exactly the proper equivalence
//! classes, and the product of (b + sqrt(d)) / 2|c| around any cycle of
//! discriminant d is the fundamental automorphism factor eps_d.

use num_integer::Roots;

/// An integral binary quadratic form a x^2 + b xy + c y^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadraticForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadraticForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        QuadraticForm { a, b, c }
    }

    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_primitive(&self) -> bool {
        num_integer::gcd(
            num_integer::gcd(self.a.unsigned_abs(), self.b.unsigned_abs()),
            self.c.unsigned_abs(),
        ) == 1
    }

    /// Exact reducedness test for positive non-square discriminant d.
    pub fn is_reduced(&self, d: u64) -> bool {
        if self.a == 0 || self.c == 0 || (self.a > 0) == (self.c > 0) {
            return false;
        }
        if self.b <= 0 {
            return false;
        }
        let b = self.b as u64;
        if b * b >= d {
            return false;
        }
        let s = self.a.unsigned_abs() + self.c.unsigned_abs();
        s * s < d
    }

    /// One reduction step rho. `sqd` must be floor(sqrt(d)).
    pub fn reduce_step(&self, sqd: i64) -> QuadraticForm {
        let ca = self.c.abs();
        // floor((b + sqrt(d)) / (2|c|)) is exact with floor(sqrt(d)) because
        // d is not a perfect square.
        let q = (self.b + sqd).div_euclid(2 * ca);
        let s = if self.c < 0 { -q } else { q };
        QuadraticForm {
            a: self.c,
            b: -self.b + 2 * s * self.c,
            c: self.a - self.b * s + self.c * s * s,
        }
    }

    /// log of the step multiplier (b + sqrt(d)) / (2|c|).
    pub fn step_log(&self, sqrt_d: f64) -> f64 {
        ((self.b as f64 + sqrt_d) / (2.0 * self.c.abs() as f64)).ln()
    }
}

/// All reduced forms of discriminant d (both signs of the leading
/// coefficient), found by scanning divisors of (d - b^2)/4 in the reduced
/// window for every admissible b.
pub fn reduced_forms(d: u64) -> Vec<QuadraticForm> {
    let mut out = Vec::new();
    let mut b = if d % 2 == 0 { 2u64 } else { 1u64 };
    while b * b < d {
        let m = (d - b * b) / 4;
        // alpha + m/alpha < sqrt(d) and alpha <= m/alpha pin the window;
        // iterate the smaller divisor and emit the swapped partner too.
        let mut alpha = 1u64;
        while alpha * alpha <= m {
            if m % alpha == 0 {
                let gamma = m / alpha;
                let s = alpha + gamma;
                if s * s < d {
                    let (a, bb, c) = (alpha as i64, b as i64, -(gamma as i64));
                    out.push(QuadraticForm::new(a, bb, c));
                    out.push(QuadraticForm::new(-a, bb, -c));
                    if alpha != gamma {
                        out.push(QuadraticForm::new(-c, bb, -a));
                        out.push(QuadraticForm::new(c, bb, a));
                    }
                }
            }
            alpha += 1;
        }
        b += 2;
    }
    out
}

/// Cycle decomposition of a set of reduced forms under rho.
/// Returns one (length, sum of step logs) record per cycle.
pub fn cycle_decomposition(forms: &[QuadraticForm], d: u64) -> Vec<(usize, f64)> {
    use std::collections::HashSet;
    let sqd_f = (d as f64).sqrt();
    let sqd = d.sqrt() as i64;
    let mut remaining: HashSet<QuadraticForm> = forms.iter().copied().collect();
    let mut cycles = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut f = start;
        let mut len = 0usize;
        let mut log_sum = 0.0;
        loop {
            let present = remaining.remove(&f);
            debug_assert!(present, "rho left the enumerated set at {f:?}");
            log_sum += f.step_log(sqd_f);
            len += 1;
            f = f.reduce_step(sqd);
            if f == start {
                break;
            }
        }
        cycles.push((len, log_sum));
    }
    cycles
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn forms_of_small_discriminants() {
        let f5 = reduced_forms(5);
        assert_eq!(f5.len(), 2);
        assert!(f5.contains(&QuadraticForm::new(1, 1, -1)));

        let f40 = reduced_forms(40);
        assert_eq!(f40.len(), 8);
        for f in &f40 {
            assert_eq!(f.discriminant(), 40);
            assert!(f.is_reduced(40));
        }
    }

    #[test]
    fn rho_preserves_discriminant_and_reducedness() {
        for d in [5u64, 8, 12, 13, 40, 60, 205, 316] {
            let sqd = d.sqrt() as i64;
            for f in reduced_forms(d) {
                let g = f.reduce_step(sqd);
                assert_eq!(g.discriminant() as u64, d);
                assert!(g.is_reduced(d), "rho({f:?}) = {g:?} not reduced for d={d}");
            }
        }
    }

    #[test]
    fn every_cycle_carries_the_regulator() {
        // All cycles of one discriminant accumulate the same log eps_d.
        for d in [40u64, 60, 205, 145] {
            let forms = reduced_forms(d);
            let cycles = cycle_decomposition(&forms, d);
            let r0 = cycles[0].1;
            for (_, r) in &cycles {
                assert_relative_eq!(*r, r0, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn enumeration_matches_direct_filter() {
        // Cross-check the windowed divisor scan against a brute-force scan
        // over a full (a, b) box.
        for d in [
            5u64, 8, 12, 13, 17, 21, 24, 28, 32, 33, 40, 41, 44, 45, 48, 53, 56, 57, 60, 61,
        ] {
            let mut brute = Vec::new();
            let bound = (d.sqrt() as i64) + 2;
            for a in -bound..=bound {
                if a == 0 {
                    continue;
                }
                for b in 1..=bound {
                    let num = (b * b) as i64 - d as i64;
                    if num % (4 * a) == 0 {
                        let c = num / (4 * a);
                        let f = QuadraticForm::new(a, b, c);
                        if f.is_reduced(d) {
                            brute.push(f);
                        }
                    }
                }
            }
            let mut ours = reduced_forms(d);
            ours.sort();
            brute.sort();
            brute.dedup();
            assert_eq!(ours, brute, "d = {d}");
        }
    }
}
