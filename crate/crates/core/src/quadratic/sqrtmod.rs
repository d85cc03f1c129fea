//! Square roots of a fixed target modulo small prime powers and composites.
//!
//! This is the inner engine of the amplitude-table scan: for each leading
//! coefficient a it lists the b with b^2 = D (mod 4a). Moduli stay small
//! (at most ~2 sqrt(D) in callers), so all arithmetic is plain u64.

pub(crate) fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    debug_assert!(m <= u32::MAX as u64 + 1);
    a * b % m
}

fn powmod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        e >>= 1;
    }
    acc
}

fn invmod(a: u64, m: u64) -> u64 {
    // Extended Euclid; gcd(a, m) = 1 expected.
    let (mut r0, mut r1) = (m as i64, (a % m) as i64);
    let (mut s0, mut s1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1);
    s0.rem_euclid(m as i64) as u64
}

/// Legendre symbol (a/p) by the Euler criterion; p an odd prime.
pub(crate) fn legendre(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    let r = powmod(a, (p - 1) / 2, p);
    if r == 1 {
        1
    } else {
        -1
    }
}

/// Tonelli-Shanks: a square root of a mod odd prime p, assuming (a/p) = 1.
pub(crate) fn tonelli(a: u64, p: u64) -> u64 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if p % 4 == 3 {
        return powmod(a, (p + 1) / 4, p);
    }
    // Write p - 1 = q 2^s with q odd.
    let mut q = p - 1;
    let mut s = 0u32;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    // A quadratic non-residue z.
    let mut z = 2u64;
    while legendre(z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(a, q, p);
    let mut r = powmod(a, (q + 1) / 2, p);
    while t != 1 {
        // Least i with t^(2^i) = 1.
        let mut i = 0u32;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mulmod(t2, t2, p);
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    r
}

/// All x mod p^e with x^2 = target (mod p^e), p odd. `target` is reduced
/// mod p^e by the caller or here; handles p | target including zero.
pub(crate) fn roots_mod_odd_prime_power(p: u64, e: u32, target: u64, out: &mut Vec<u64>) {
    let pe = p.pow(e);
    let t = target % pe;
    if t == 0 {
        // x must be divisible by p^ceil(e/2).
        let step = p.pow(e.div_ceil(2));
        let mut x = 0;
        while x < pe {
            out.push(x);
            x += step;
        }
        return;
    }
    let mut j = 0u32;
    let mut unit = t;
    while unit % p == 0 {
        unit /= p;
        j += 1;
    }
    if j % 2 == 1 {
        return;
    }
    if legendre(unit, p) != 1 {
        return;
    }
    // Root of the unit part mod p^(e-j), lifted by Hensel from mod p.
    let f = e - j;
    let mut r = tonelli(unit % p, p);
    let mut pk = p;
    for _ in 1..f {
        let pk1 = pk * p;
        // r <- r - (r^2 - unit) * inv(2r) (mod pk1)
        let val = (mulmod(r, r, pk1) + pk1 - unit % pk1) % pk1;
        let inv = invmod(2 * r % pk1, pk1);
        r = (r + pk1 - mulmod(val, inv, pk1)) % pk1;
        pk = pk1;
    }
    let pf = p.pow(f);
    let ph = p.pow(j / 2);
    // x = p^(j/2) (±r + s p^(e-j)), s = 0..p^(j/2)-1
    for base in [r % pf, (pf - r % pf) % pf] {
        let mut s = 0u64;
        while s < ph {
            out.push(ph * (base + s * pf) % pe);
            s += 1;
        }
        if base == 0 || 2 * base == pf {
            break; // ±r coincide
        }
    }
}

/// All x mod 2^e with x^2 = target (mod 2^e).
pub(crate) fn roots_mod_two_power(e: u32, target: u64, out: &mut Vec<u64>) {
    let pe = 1u64 << e;
    let t = target % pe;
    match e {
        1 => out.push(t % 2),
        2 => match t {
            0 => out.extend_from_slice(&[0, 2]),
            1 => out.extend_from_slice(&[1, 3]),
            _ => {}
        },
        _ => {
            if t == 0 {
                let step = 1u64 << e.div_ceil(2);
                let mut x = 0;
                while x < pe {
                    out.push(x);
                    x += step;
                }
                return;
            }
            let mut j = 0u32;
            let mut unit = t;
            while unit % 2 == 0 {
                unit /= 2;
                j += 1;
            }
            if j % 2 == 1 {
                return;
            }
            let f = e - j;
            // Unit square mod 2^f: for f >= 3 need unit = 1 mod 8.
            let mut base_roots: Vec<u64> = Vec::new();
            match f {
                1 => base_roots.push(1),
                2 => {
                    if unit % 4 == 1 {
                        base_roots.extend_from_slice(&[1, 3]);
                    } else {
                        return;
                    }
                }
                _ => {
                    if unit % 8 != 1 {
                        return;
                    }
                    let mut r = 1u64;
                    for k in 3..f {
                        let next = 1u64 << (k + 1);
                        if (r * r) % next != unit % next {
                            r += 1 << (k - 1);
                        }
                    }
                    let pf = 1u64 << f;
                    let half = 1u64 << (f - 1);
                    for cand in [r, pf - r, (r + half) % pf, (pf - r + half) % pf] {
                        if !base_roots.contains(&cand) {
                            base_roots.push(cand);
                        }
                    }
                }
            }
            let pf = 1u64 << f;
            let ph = 1u64 << (j / 2);
            for &base in &base_roots {
                let mut s = 0u64;
                while s < ph {
                    out.push(ph * (base + s * pf) % pe);
                    s += 1;
                }
            }
            out.sort_unstable();
            out.dedup();
        }
    }
}

/// CRT-combine residue classes: given roots mod m and mod n (coprime),
/// produce roots mod m*n into `dst`.
pub(crate) fn crt_combine(roots_m: &[u64], m: u64, roots_n: &[u64], n: u64, dst: &mut Vec<u64>) {
    dst.clear();
    // x = rm + m * k, k = (rn - rm) * m^{-1} mod n
    let m_inv = invmod(m % n, n);
    for &rm in roots_m {
        for &rn in roots_n {
            let diff = (rn + n - rm % n) % n;
            let k = mulmod(diff, m_inv, n);
            dst.push(rm + m * k);
        }
    }
}
