//! Kronecker symbol and the real quadratic character chi_d.

use super::Discriminant;

/// (2/n) for odd n, by n mod 8.
const TAB2: [i32; 8] = [0, 1, 0, -1, 0, -1, 0, 1];

/// Kronecker symbol (a/n), fully multiplicative extension of the Legendre
/// symbol, with (a/2) = 0 for even a and (-1)^((a^2-1)/8) for odd a.
pub fn kronecker(mut a: i64, mut n: i64) -> i32 {
    if n == 0 {
        return i32::from(a.abs() == 1);
    }
    if a % 2 == 0 && n % 2 == 0 {
        return 0;
    }
    let mut k = 1i32;
    // Pull the 2-part out of n.
    let mut v = 0u32;
    while n % 2 == 0 {
        n /= 2;
        v += 1;
    }
    if v % 2 == 1 {
        k = TAB2[(a.rem_euclid(8)) as usize];
    }
    if n < 0 {
        n = -n;
        if a < 0 {
            k = -k;
        }
    }
    // Now n odd and positive.
    if a < 0 {
        a = -a;
        if n % 4 == 3 {
            k = -k;
        }
    }
    a = a.rem_euclid(n);
    while a != 0 {
        let mut v = 0u32;
        while a % 2 == 0 {
            a /= 2;
            v += 1;
        }
        if v % 2 == 1 {
            k *= TAB2[(n % 8) as usize];
        }
        // Reciprocity flip: both a and n are odd here.
        if a % 4 == 3 && n % 4 == 3 {
            k = -k;
        }
        let r = a;
        a = n % r;
        n = r;
    }
    if n == 1 {
        k
    } else {
        0
    }
}

/// The quadratic character chi_d(n) = (d/n) attached to a discriminant.
///
/// Zero exactly when gcd(n, d) > 1; on odd primes this is the Legendre
/// symbol (d/p), and chi_d(2) follows d mod 8 for odd d.
pub fn kronecker_chi(d: Discriminant, n: u64) -> i32 {
    debug_assert!(n <= i64::MAX as u64);
    kronecker(d.get() as i64, n as i64)
}
