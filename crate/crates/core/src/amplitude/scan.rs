//! Fast exact evaluation of H(D) = sum over all reduced forms of
//! discriminant D = n^2 - 4 of log((b + sqrt(D)) / 2|c|).
//!
//! Around every reduction cycle that sum telescopes to the regulator of the
//! form's own order, so H(D) = sum_{d u^2 = D} h(d) log eps_d and the
//! amplitude is amp(n) = H(D) / sqrt(D) with no per-divisor class-group
//! work at all.
//!
//! Forms are grouped into orbits {(±a, b, ∓c), (±c, b, ∓a)} whose total
//! contribution depends only on b, so the scan enumerates one (a, b) pair
//! per orbit: for every leading coefficient a it solves b^2 = D (mod 4a)
//! and walks the solutions through the reduced window. Square-root and
//! Legendre data per prime are cached across the a-loop for one n.

use std::sync::Arc;

use num_integer::Roots;

use crate::numeric::spf_sieve;
use crate::quadratic::sqrtmod::{
    crt_combine, legendre, roots_mod_odd_prime_power, roots_mod_two_power, tonelli,
};

/// Immutable lookup tables shared by all scanner instances of one build.
pub(crate) struct ScanTables {
    spf: Vec<u32>,
    prime_index: Vec<u32>,
    n_primes: usize,
    limit: usize,
}

impl ScanTables {
    pub(crate) fn new(limit: usize) -> Self {
        let spf = spf_sieve(limit);
        let mut prime_index = vec![u32::MAX; limit + 1];
        let mut n_primes = 0usize;
        for p in 2..=limit {
            if spf[p] == p as u32 {
                prime_index[p] = n_primes as u32;
                n_primes += 1;
            }
        }
        ScanTables {
            spf,
            prime_index,
            n_primes,
            limit,
        }
    }
}

/// Reusable scanner with per-trace caches; one per worker thread.
pub struct OrbitScanner {
    tables: Arc<ScanTables>,
    epoch: u32,
    jac_epoch: Vec<u32>,
    jac_val: Vec<i8>,
    root_epoch: Vec<u32>,
    root_val: Vec<u32>,
    roots_acc: Vec<u64>,
    roots_tmp: Vec<u64>,
    pp_roots: Vec<u64>,
}

impl OrbitScanner {
    pub(crate) fn from_tables(tables: Arc<ScanTables>) -> Self {
        let n = tables.n_primes;
        OrbitScanner {
            tables,
            epoch: 0,
            jac_epoch: vec![0; n],
            jac_val: vec![0; n],
            root_epoch: vec![0; n],
            root_val: vec![0; n],
            roots_acc: Vec::with_capacity(64),
            roots_tmp: Vec::with_capacity(64),
            pp_roots: Vec::with_capacity(16),
        }
    }

    /// Scanner able to handle every trace up to and including `n_max`.
    pub fn for_max_trace(n_max: u64) -> Self {
        let limit = (n_max / 2 + 2) as usize;
        Self::from_tables(Arc::new(ScanTables::new(limit)))
    }

    /// H(n^2 - 4) = sum_{d u^2 = n^2 - 4} h(d) log eps_d.
    pub fn class_regulator_sum(&mut self, n: u64) -> f64 {
        debug_assert!(n > 2);
        self.epoch = self.epoch.wrapping_add(1);
        if n % 2 == 1 {
            // D = n^2 - 4 is 5 mod 8: b odd, a odd, 4a | D - b^2.
            self.scan_half(n * n - 4, true)
        } else {
            // With b = 2 beta and m0 = (n/2)^2 - 1: a | m0 - beta^2.
            let half = n / 2;
            self.scan_half(half * half - 1, false)
        }
    }

    /// amp(n) = H(n^2 - 4) / sqrt(n^2 - 4).
    pub fn amp(&mut self, n: u64) -> f64 {
        self.class_regulator_sum(n) / ((n * n - 4) as f64).sqrt()
    }

    /// Shared scan: enumerate x in [1, sqrt(T - s a^2)] with
    /// x^2 = T (mod s*a) per admissible a, where s = 4 on the odd branch
    /// (x = b, T = D) and s = 1 on the even branch (x = beta, T = m0).
    /// Every surviving (a, x) is one orbit; its contribution is
    /// (2 - [a = c]) * log((sqrt(T) + x)^2 / (T - x^2)).
    fn scan_half(&mut self, t: u64, odd_branch: bool) -> f64 {
        let s: u64 = if odd_branch { 4 } else { 1 };
        // Reduced test compares (a + c)^2 against the true discriminant.
        let win = 4 * t / s;
        let sqrt_t = (t as f64).sqrt();
        let step_scale = (s as f64).sqrt();
        let a_step = if odd_branch { 2 } else { 1 };
        let a_max = if t > s { ((t - 1) / s).sqrt() } else { 0 };
        debug_assert!(a_max <= self.tables.limit as u64);

        let mut total = 0.0;
        let mut a = 1u64;
        'a_loop: while a <= a_max {
            // Solutions of x^2 = t (mod a) by prime-power CRT.
            self.roots_acc.clear();
            self.roots_acc.push(0);
            let mut combined = 1u64;
            let mut rem = a as usize;
            while rem > 1 {
                let p = u64::from(self.tables.spf[rem]);
                let mut e = 0u32;
                while rem as u64 % p == 0 {
                    rem /= p as usize;
                    e += 1;
                }
                let pe = p.pow(e);
                self.pp_roots.clear();
                if p == 2 {
                    roots_mod_two_power(e, t % pe, &mut self.pp_roots);
                } else {
                    let pi = self.tables.prime_index[p as usize] as usize;
                    match self.jacobi_cached(pi, p, t) {
                        -1 => {
                            a += a_step;
                            continue 'a_loop;
                        }
                        1 if e == 1 => {
                            let r = u64::from(self.root_cached(pi, p, t));
                            self.pp_roots.push(r);
                            if r != p - r {
                                self.pp_roots.push(p - r);
                            }
                        }
                        _ => {
                            // p | t, or a prime power needing a Hensel lift.
                            roots_mod_odd_prime_power(p, e, t % pe, &mut self.pp_roots);
                        }
                    }
                }
                if self.pp_roots.is_empty() {
                    a += a_step;
                    continue 'a_loop;
                }
                if combined == 1 {
                    std::mem::swap(&mut self.roots_acc, &mut self.pp_roots);
                } else {
                    crt_combine(
                        &self.roots_acc,
                        combined,
                        &self.pp_roots,
                        pe,
                        &mut self.roots_tmp,
                    );
                    std::mem::swap(&mut self.roots_acc, &mut self.roots_tmp);
                }
                combined *= pe;
            }

            // Walk each residue chain through the window.
            let x_hi_sq = t - s * a * a;
            let x_hi = x_hi_sq.sqrt();
            let lo_f = sqrt_t - step_scale * a as f64 - 2.0;
            let lo = if lo_f > 1.0 { lo_f as u64 } else { 1 };
            let (chain_step, n_roots) = (a_step * a, self.roots_acc.len());
            for i in 0..n_roots {
                let r = self.roots_acc[i];
                let start = if odd_branch {
                    if r % 2 == 1 {
                        r
                    } else {
                        r + a
                    }
                } else if r == 0 {
                    a
                } else {
                    r
                };
                let mut x = if start >= lo {
                    start
                } else {
                    start + (lo - start).div_ceil(chain_step) * chain_step
                };
                while x <= x_hi {
                    let num = t - x * x;
                    debug_assert_eq!(num % (s * a), 0, "t={t} a={a} x={x}");
                    let c = num / (s * a);
                    let edge = a + c;
                    if edge * edge < win {
                        let weight = if c == a { 1.0 } else { 2.0 };
                        let sx = sqrt_t + x as f64;
                        total += weight * ((sx * sx) / num as f64).ln();
                    }
                    x += chain_step;
                }
            }
            a += a_step;
        }
        total
    }

    fn jacobi_cached(&mut self, pi: usize, p: u64, t: u64) -> i8 {
        if self.jac_epoch[pi] == self.epoch {
            return self.jac_val[pi];
        }
        let tm = t % p;
        let v = if tm == 0 { 0 } else { legendre(tm, p) as i8 };
        self.jac_epoch[pi] = self.epoch;
        self.jac_val[pi] = v;
        v
    }

    fn root_cached(&mut self, pi: usize, p: u64, t: u64) -> u32 {
        if self.root_epoch[pi] == self.epoch {
            return self.root_val[pi];
        }
        let r = tonelli(t % p, p) as u32;
        self.root_epoch[pi] = self.epoch;
        self.root_val[pi] = r;
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratic::{cycle_decomposition, reduced_forms};
    use approx::assert_relative_eq;

    /// Brute-force H(D): enumerate every reduced form, sum the step logs.
    fn h_brute(d: u64) -> f64 {
        let forms = reduced_forms(d);
        cycle_decomposition(&forms, d).iter().map(|(_, r)| r).sum()
    }

    #[test]
    fn matches_full_form_enumeration() {
        let mut scanner = OrbitScanner::for_max_trace(700);
        for n in 3..=700u64 {
            let fast = scanner.class_regulator_sum(n);
            let brute = h_brute(n * n - 4);
            assert_relative_eq!(fast, brute, max_relative = 1e-9);
        }
    }

    #[test]
    fn amp_small_values() {
        let mut scanner = OrbitScanner::for_max_trace(10);
        assert_relative_eq!(scanner.amp(3), 0.430_408_940_964_004, max_relative = 1e-12);
        assert_relative_eq!(
            scanner.amp(4),
            0.760_345_996_300_946_3,
            max_relative = 1e-12
        );
        assert_relative_eq!(scanner.amp(6), 0.934_837_860_210_345_7, max_relative = 1e-9);
    }
}
