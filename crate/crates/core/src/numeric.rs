//! Shared numerical machinery: prime sieves, Gauss-Legendre quadrature,
//! the digamma function on vertical lines, and compensated summation.

use std::sync::OnceLock;

/// Smallest-prime-factor table for 0..=limit. `spf[n]` is the least prime
/// dividing n (spf[0] = spf[1] = 0).
pub fn spf_sieve(limit: usize) -> Vec<u32> {
    let mut spf = vec![0u32; limit + 1];
    for i in 2..=limit {
        if spf[i] == 0 {
            let mut j = i;
            while j <= limit {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

/// Primes up to and including `limit`.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Factor `n` with a smallest-prime-factor table covering it.
/// Returns (prime, exponent) pairs in ascending prime order.
pub fn factor_with_spf(mut n: u64, spf: &[u32]) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    while n > 1 {
        let p = u64::from(spf[n as usize]);
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        out.push((p, e));
    }
    out
}

/// Kahan-compensated accumulator for long sums.
#[derive(Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(self) -> f64 {
        self.sum
    }
}

/// Pairwise summation; order-stable and independent of chunking used upstream.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = (n as f64) * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn gl32() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(32))
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(16))
}

/// Fixed-order Gauss-Legendre on [a, b].
pub fn integrate_gl(f: &dyn Fn(f64) -> f64, a: f64, b: f64, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(&weights[..]) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Adaptive Gauss-Legendre: bisect until GL16 and GL32 agree on each panel.
///
/// `rel_tol` is measured against the running magnitude of the whole integral;
/// `abs_floor` stops refinement of panels that are absolutely negligible.
pub fn integrate_adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> f64 {
    fn panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let eval = |rule: &(Vec<f64>, Vec<f64>)| {
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let mut acc = 0.0;
            for (x, w) in rule.0.iter().zip(&rule.1[..]) {
                acc += w * f(mid + half * x);
            }
            acc * half
        };
        let coarse = eval(gl16());
        let fine = eval(gl32());
        (fine, (fine - coarse).abs())
    }

    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        rel_tol: f64,
        abs_floor: f64,
        depth: u32,
    ) -> f64 {
        let (value, err) = panel(f, a, b);
        if depth >= 40 || err <= abs_floor || err <= rel_tol * value.abs() {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, rel_tol, abs_floor * 0.5, depth + 1)
            + recurse(f, mid, b, rel_tol, abs_floor * 0.5, depth + 1)
    }

    recurse(f, a, b, rel_tol, abs_floor, 0)
}

// ---------------------------------------------------------------------------
// Digamma on the lines 1 + ir and 1/2 + ir
// ---------------------------------------------------------------------------

/// Bernoulli numbers B_2..B_14 over 2k, for the asymptotic digamma series.
const DIGAMMA_COEFF: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// Re psi(sigma + i r) via the asymptotic series after shifting |z| >= 12.
///
/// Accuracy is ~1e-13 absolute over the ranges exercised here.
pub fn re_digamma(sigma: f64, r: f64) -> f64 {
    // Shift z -> z + m so |z| is large; subtract Re(1/(z+k)).
    let mut re = sigma;
    let im = r;
    let mut correction = 0.0;
    while re * re + im * im < 144.0 {
        correction += re / (re * re + im * im);
        re += 1.0;
    }
    // Asymptotic: psi(z) ~ ln z - 1/(2z) - sum B_2k / (2k z^{2k}).
    let norm2 = re * re + im * im;
    let ln_re = 0.5 * norm2.ln();
    let inv_re = re / norm2; // Re(1/z)
    let inv_im = -im / norm2; // Im(1/z)
    let mut acc = ln_re - 0.5 * inv_re;
    // Powers of 1/z^2.
    let z2_re = inv_re * inv_re - inv_im * inv_im;
    let z2_im = 2.0 * inv_re * inv_im;
    let mut p_re = z2_re;
    let mut p_im = z2_im;
    for (k, c) in DIGAMMA_COEFF.iter().enumerate().take(6) {
        let _ = k;
        acc -= c * p_re;
        let nr = p_re * z2_re - p_im * z2_im;
        let ni = p_re * z2_im + p_im * z2_re;
        p_re = nr;
        p_im = ni;
    }
    acc - correction
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
