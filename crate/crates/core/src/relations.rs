//! Multiplicative relations among hyperbolic norms N(n) and the Liouville
//! gap bounds that control nonvanishing signed log-norm sums.
//!
//! Every unit (n + sqrt(n^2 - 4))/2 is a power eps_d^k of the fundamental
//! norm-one unit of its real quadratic field, so a signed sum of log-norms
//! vanishes exactly when the integer k-sums cancel field by field. Relations
//! are therefore detected in exact integer arithmetic on (d, k) pairs;
//! floating-point sums are only a prefilter.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::quadratic::{pell_fundamental, Discriminant};
use crate::trace::log_norm;

/// One signed term of a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelationTerm {
    pub n: u64,
    pub sign: i8,
}

/// A same-field block of a relation: indices into `terms`, all of whose
/// norms lie in Q(sqrt(d)) for the block's fundamental discriminant d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationBlock {
    pub fundamental_d: u64,
    pub indices: Vec<usize>,
}

/// A vanishing signed combination of log-norms, canonically ordered
/// (terms ascending by trace, leading sign positive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormRelation {
    pub terms: Vec<RelationTerm>,
    pub blocks: Vec<RelationBlock>,
}

impl NormRelation {
    /// Signed log-norm sum; zero to rounding for a genuine relation.
    pub fn float_residual(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| f64::from(t.sign) * log_norm(t.n).unwrap())
            .sum()
    }
}

/// A trace resolved to its field: (n + sqrt(n^2-4))/2 = eps_d^k for the
/// fundamental discriminant d of Q(sqrt(n^2 - 4)).
#[derive(Debug, Clone, Copy)]
pub struct ResolvedTrace {
    pub n: u64,
    pub fundamental_d: u64,
    pub k: u64,
}

/// Multiply (a1 + b1 sqrt(d))/2 by (a2 + b2 sqrt(d))/2; halves stay integral
/// inside the order.
fn half_mul(x: (BigInt, BigInt), y: &(BigInt, BigInt), d: &BigInt) -> (BigInt, BigInt) {
    let a = (&x.0 * &y.0 + &x.1 * &y.1 * d) / 2;
    let b = (&x.0 * &y.1 + &x.1 * &y.0) / 2;
    (a, b)
}

/// Resolve n > 2 to (fundamental d, k), verifying eps_d^k = lambda(n)
/// exactly in integer arithmetic.
pub fn resolve_trace(n: u64) -> Result<ResolvedTrace> {
    if n <= 2 {
        return Err(Error::TraceTooSmall(n));
    }
    // Squarefree kernel of n^2 - 4 fixes the field; strip square factors.
    let big = n * n - 4;
    let mut kernel = 1u64;
    {
        let mut m = big;
        let mut p = 2u64;
        while p * p <= m {
            if m % p == 0 {
                let mut e = 0u32;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                if e % 2 == 1 {
                    kernel *= p;
                }
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if m > 1 {
            kernel *= m;
        }
    }
    let fundamental_d = if kernel % 4 == 1 { kernel } else { 4 * kernel };
    debug_assert!(big % fundamental_d == 0);
    let y_sq = big / fundamental_d;
    let y = num_integer::Roots::sqrt(&y_sq);
    debug_assert_eq!(y * y, y_sq);

    let pell = pell_fundamental(Discriminant::new(fundamental_d)?);
    // First guess from floats, then verify exactly.
    let lambda_log = log_norm(n)? / 2.0;
    let k0 = (lambda_log / pell.log_eps).round().max(1.0) as u64;
    let d_big = BigInt::from(fundamental_d);
    let target = (BigInt::from(n), BigInt::from(y));
    for k in [k0, k0.saturating_sub(1).max(1), k0 + 1] {
        if half_pow(&pell.t, &pell.u, &d_big, k) == target {
            return Ok(ResolvedTrace {
                n,
                fundamental_d,
                k,
            });
        }
    }
    unreachable!("trace {n} is not a power of the fundamental unit of {fundamental_d}");
}

/// (t + u sqrt(d))^k / 2^k in half-coordinates.
fn half_pow(t: &BigInt, u: &BigInt, d: &BigInt, k: u64) -> (BigInt, BigInt) {
    let base = (t.clone(), u.clone());
    let mut acc: Option<(BigInt, BigInt)> = None;
    let mut sq = base;
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => sq.clone(),
                Some(a) => half_mul(a, &sq, d),
            });
        }
        k >>= 1;
        if k > 0 {
            sq = half_mul(sq.clone(), &sq.clone(), d);
        }
    }
    acc.expect("k >= 1")
}

fn check_bounds(n_max: u64, k_max: u32) -> Result<()> {
    if !(3..=500).contains(&n_max) || !(2..=4).contains(&k_max) {
        return Err(Error::RelationBounds { n_max, k_max });
    }
    Ok(())
}

fn group_by_field(n_max: u64) -> Result<BTreeMap<u64, Vec<ResolvedTrace>>> {
    let mut groups: BTreeMap<u64, Vec<ResolvedTrace>> = BTreeMap::new();
    for n in 3..=n_max {
        let r = resolve_trace(n)?;
        groups.entry(r.fundamental_d).or_default().push(r);
    }
    for members in groups.values_mut() {
        members.sort_by_key(|m| m.k);
        // The base unit's own trace t_d <= n for every member n, so k = 1
        // is always present.
        debug_assert_eq!(members[0].k, 1);
    }
    Ok(groups)
}

fn single_block(terms: &[RelationTerm], fundamental_d: u64) -> Vec<RelationBlock> {
    vec![RelationBlock {
        fundamental_d,
        indices: (0..terms.len()).collect(),
    }]
}

/// The canonical generating relations within each field: every trace whose
/// unit power k admits the power identity N(n) = N(base)^k inside the term
/// budget yields k copies of (base, +) against one (n, -).
pub fn find_relations(n_max: u64, k_max: u32) -> Result<Vec<NormRelation>> {
    check_bounds(n_max, k_max)?;
    let mut out = Vec::new();
    for (d, members) in group_by_field(n_max)? {
        let base = members[0];
        for m in &members[1..] {
            // k(base) = 1, so the power relation has m.k + 1 terms.
            if m.k + 1 <= u64::from(k_max) {
                let mut terms: Vec<RelationTerm> =
                    std::iter::repeat_n(RelationTerm { n: base.n, sign: 1 }, m.k as usize)
                        .collect();
                terms.push(RelationTerm { n: m.n, sign: -1 });
                canonicalize(&mut terms);
                let blocks = single_block(&terms, d);
                out.push(NormRelation { terms, blocks });
            }
        }
    }
    Ok(out)
}

/// Exhaustive same-field search: every reduced, non-degenerate signed
/// multiset of at most k_max traces whose log-norms cancel. "Reduced" bars
/// matched (n, +), (n, -) padding; "non-degenerate" bars vanishing proper
/// sub-sums. Detection is exact on the (d, k) representation.
pub fn find_vanishing_multisets(n_max: u64, k_max: u32) -> Result<Vec<NormRelation>> {
    check_bounds(n_max, k_max)?;
    let mut out = Vec::new();
    for (d, members) in group_by_field(n_max)? {
        if members.len() < 2 {
            continue;
        }
        let mut chosen: Vec<(usize, i8)> = Vec::new();
        enumerate_multisets(&members, k_max as usize, 0, &mut chosen, &mut |combo| {
            let ks: Vec<i64> = combo
                .iter()
                .map(|&(i, s)| i64::from(s) * members[i].k as i64)
                .collect();
            if ks.iter().sum::<i64>() != 0 {
                return;
            }
            // Reduced: no matched +/- pair on one trace.
            for w in 0..combo.len() {
                for v in (w + 1)..combo.len() {
                    if combo[w].0 == combo[v].0 && combo[w].1 != combo[v].1 {
                        return;
                    }
                }
            }
            // Non-degenerate: no proper subset cancels.
            let full = (1usize << ks.len()) - 1;
            for mask in 1..full {
                let s: i64 = ks
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, k)| k)
                    .sum();
                if s == 0 {
                    return;
                }
            }
            let mut terms: Vec<RelationTerm> = combo
                .iter()
                .map(|&(i, s)| RelationTerm {
                    n: members[i].n,
                    sign: s,
                })
                .collect();
            canonicalize(&mut terms);
            let blocks = single_block(&terms, d);
            let rel = NormRelation { terms, blocks };
            if !out.contains(&rel) {
                out.push(rel);
            }
        });
    }
    Ok(out)
}

/// Sort terms by trace with positive signs first, and flip the global sign
/// so the leading term is positive.
fn canonicalize(terms: &mut [RelationTerm]) {
    let sort = |v: &mut [RelationTerm]| v.sort_by_key(|t| (t.n, std::cmp::Reverse(t.sign)));
    sort(terms);
    if terms[0].sign < 0 {
        for t in terms.iter_mut() {
            t.sign = -t.sign;
        }
        sort(terms);
    }
}

/// Recursively pick (member, sign) combinations of size 2..=k_max; the
/// first picked sign is fixed positive to quotient out the global flip.
fn enumerate_multisets(
    members: &[ResolvedTrace],
    k_max: usize,
    from: usize,
    chosen: &mut Vec<(usize, i8)>,
    visit: &mut impl FnMut(&[(usize, i8)]),
) {
    if chosen.len() >= 2 {
        visit(chosen);
    }
    if chosen.len() == k_max {
        return;
    }
    for i in from..members.len() {
        for sign in [1i8, -1] {
            if chosen.is_empty() && sign < 0 {
                continue;
            }
            // Keep multisets sorted by member index; within one index allow
            // any sign mix (reduction filtering happens in the visitor).
            chosen.push((i, sign));
            enumerate_multisets(members, k_max, i, chosen, visit);
            chosen.pop();
        }
    }
}

/// Report of the Liouville-style lower bounds.
#[derive(Debug, Clone)]
pub struct LiouvilleReport {
    pub n_max: u64,
    /// min over pairs of |log N(m) - log N(n)| * min(m, n).
    pub min_gap_product: f64,
    pub min_gap_pair: (u64, u64),
    /// |gap(n-1, n) * (n-1) / 2 - 1| at n = n_max (tends to 0).
    pub consecutive_deviation: f64,
    /// Part (ii): min over nonzero signed sums (K <= 3) of
    /// ln|sum| + (2^{K-1} - 1/2) sum_j log N(n_j); nonnegative means the
    /// bound holds with constant 1.
    pub min_margin_log: f64,
    pub sums_checked: u64,
}

/// Exhaustive gap scan: part (i) pairwise gaps scaled by min(m, n), part
/// (ii) the Liouville lower bound over all nonzero signed sums of at most
/// three log-norms.
pub fn liouville_gap_check(n_max: u64) -> Result<LiouvilleReport> {
    if n_max < 4 {
        return Err(Error::RangeTooSmall { min: 4, got: n_max });
    }
    let logs: Vec<f64> = (3..=n_max).map(|n| log_norm(n).unwrap()).collect();
    let resolved: Vec<ResolvedTrace> = (3..=n_max).map(|n| resolve_trace(n).unwrap()).collect();

    let mut min_gap_product = f64::INFINITY;
    let mut min_gap_pair = (0u64, 0u64);
    for i in 0..logs.len() {
        for j in (i + 1)..logs.len() {
            let gap = (logs[j] - logs[i]).abs() * (i as f64 + 3.0);
            if gap < min_gap_product {
                min_gap_product = gap;
                min_gap_pair = (i as u64 + 3, j as u64 + 3);
            }
        }
    }
    let last = logs.len() - 1;
    let consecutive_deviation =
        ((logs[last] - logs[last - 1]) * (n_max as f64 - 1.0) / 2.0 - 1.0).abs();

    // Part (ii): sizes 2 and 3 with all sign patterns modulo global flip.
    let mut min_margin_log = f64::INFINITY;
    let mut sums_checked = 0u64;
    let exact_zero = |idx: &[(usize, i8)]| -> bool {
        let mut per_field: BTreeMap<u64, i64> = BTreeMap::new();
        for &(i, s) in idx {
            *per_field.entry(resolved[i].fundamental_d).or_default() +=
                i64::from(s) * resolved[i].k as i64;
        }
        per_field.values().all(|&v| v == 0)
    };
    let mut consider = |idx: &[(usize, i8)]| {
        let sum: f64 = idx.iter().map(|&(i, s)| f64::from(s) * logs[i]).sum();
        let exact = exact_zero(idx);
        if exact {
            return;
        }
        let k = idx.len() as i32;
        let exponent = (2f64).powi(k - 1) - 0.5;
        let log_prod: f64 = idx.iter().map(|&(i, _)| logs[i]).sum();
        let margin = sum.abs().ln() + exponent * log_prod;
        if margin < min_margin_log {
            min_margin_log = margin;
        }
        sums_checked += 1;
    };
    let count = logs.len();
    for i in 0..count {
        for j in i..count {
            consider(&[(i, 1), (j, -1)]);
            if i != j {
                consider(&[(i, 1), (j, 1)]);
            }
            for k in j..count {
                consider(&[(i, 1), (j, 1), (k, 1)]);
                consider(&[(i, 1), (j, 1), (k, -1)]);
                consider(&[(i, 1), (j, -1), (k, 1)]);
                consider(&[(i, 1), (j, -1), (k, -1)]);
            }
        }
    }

    Ok(LiouvilleReport {
        n_max,
        min_gap_product,
        min_gap_pair,
        consecutive_deviation,
        min_margin_log,
        sums_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(terms: &[(u64, i8)]) -> Vec<RelationTerm> {
        terms
            .iter()
            .map(|&(n, sign)| RelationTerm { n, sign })
            .collect()
    }

    #[test]
    fn resolve_power_chains() {
        // Field of sqrt(5): traces 3, 7, 18, 47 are eps^1..4.
        for (n, k) in [(3u64, 1u64), (7, 2), (18, 3), (47, 4)] {
            let r = resolve_trace(n).unwrap();
            assert_eq!(r.fundamental_d, 5);
            assert_eq!(r.k, k);
        }
        // Field of sqrt(3) (fundamental discriminant 12): traces 4, 14, 52.
        for (n, k) in [(4u64, 1u64), (14, 2), (52, 3)] {
            let r = resolve_trace(n).unwrap();
            assert_eq!(r.fundamental_d, 12);
            assert_eq!(r.k, k);
        }
        let r11 = resolve_trace(11).unwrap();
        assert_eq!((r11.fundamental_d, r11.k), (13, 1));
    }

    #[test]
    fn power_relations_at_twenty() {
        let rels = find_relations(20, 4).unwrap();
        let got: Vec<Vec<RelationTerm>> = rels.iter().map(|r| r.terms.clone()).collect();
        let expected = [
            rel(&[(3, 1), (3, 1), (7, -1)]),
            rel(&[(3, 1), (3, 1), (3, 1), (18, -1)]),
            rel(&[(4, 1), (4, 1), (14, -1)]),
        ];
        assert_eq!(got.len(), 3);
        for e in &expected {
            let mut e = e.clone();
            canonicalize(&mut e);
            assert!(got.contains(&e), "missing {e:?}");
        }
    }

    #[test]
    fn k_max_three_drops_the_cube() {
        let rels = find_relations(20, 3).unwrap();
        assert_eq!(rels.len(), 2);
        assert!(rels.iter().all(|r| r.terms.len() <= 3));
        let mut squared = rel(&[(4, 1), (4, 1), (14, -1)]);
        canonicalize(&mut squared);
        assert!(rels.iter().any(|r| r.terms == squared));
    }

    #[test]
    fn exhaustive_search_sees_mixed_relations() {
        // N(18) = N(3) N(7) is a genuine non-degenerate relation that is
        // not of power shape.
        let all = find_vanishing_multisets(20, 4).unwrap();
        let mut mixed = rel(&[(3, 1), (7, 1), (18, -1)]);
        canonicalize(&mut mixed);
        assert!(all.iter().any(|r| r.terms == mixed));
        // Every returned relation vanishes to rounding and stays in one field.
        for r in &all {
            assert!(r.float_residual().abs() < 1e-9);
            assert_eq!(r.blocks.len(), 1);
        }
        // Power relations are included.
        for p in find_relations(20, 4).unwrap() {
            assert!(all.iter().any(|r| r.terms == p.terms));
        }
    }

    #[test]
    fn no_cross_field_relations_below_hundred() {
        for r in find_vanishing_multisets(100, 4).unwrap() {
            let d0 = resolve_trace(r.terms[0].n).unwrap().fundamental_d;
            for t in &r.terms {
                assert_eq!(resolve_trace(t.n).unwrap().fundamental_d, d0);
            }
        }
    }

    #[test]
    fn canonical_form_is_sign_and_order_stable() {
        let mut a = rel(&[(7, -1), (3, 1), (3, 1)]);
        let mut b = rel(&[(3, -1), (3, -1), (7, 1)]);
        canonicalize(&mut a);
        canonicalize(&mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn gap_check_small_values() {
        let report = liouville_gap_check(200).unwrap();
        // (3, 4): gap = log N(4) - log N(3) = 0.709..., * 3 = 2.127...
        let g34 = (log_norm(4).unwrap() - log_norm(3).unwrap()) * 3.0;
        assert!((g34 - 2.127_205_480_833_657).abs() < 1e-9);
        assert!(
            report.min_gap_product >= 1.0,
            "min = {}",
            report.min_gap_product
        );
        assert!(report.consecutive_deviation < 0.15);
        assert!(report.min_margin_log >= 0.0);
        assert!(report.sums_checked > 1_000_000);
        assert!(liouville_gap_check(3).is_err());
    }

    #[test]
    fn bounds_are_enforced() {
        assert!(find_relations(501, 4).is_err());
        assert!(find_relations(20, 5).is_err());
        assert!(find_relations(2, 3).is_err());
    }
}
