//! Trace-formula pieces for the modular surface: log-norms, the hyperbolic
//! sum S_{f,L}(tau), the mean term with spectral density M(r), the residual
//! (parabolic + elliptic) term, Weyl's law, and a spectral-side comparator
//! fed by an external eigenvalue list.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::AmplitudeTable;
use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, re_digamma};
use crate::testfn::{TestFunction, TestFunctionKind, WeightKind};

/// How tau samples are drawn in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    Montecarlo,
    Quadrature,
}

impl std::fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplingMode::Montecarlo => write!(f, "montecarlo"),
            SamplingMode::Quadrature => write!(f, "quadrature"),
        }
    }
}

/// The knobs of one sampling experiment over tau in [T, 2T].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Window base T.
    #[serde(rename = "T")]
    pub t: f64,
    /// Inverse width L of the spectral window.
    #[serde(rename = "L")]
    pub l: f64,
    /// Sample count M.
    #[serde(rename = "M")]
    pub samples: u64,
    pub seed: u64,
    pub f: TestFunctionKind,
    pub w: WeightKind,
    pub mode: SamplingMode,
}

impl ExperimentConfig {
    /// Enforce the variance regime pi L < log T; returns warnings for the
    /// band above 0.9 log T where convergence degrades.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.t > 1.0) {
            return Err(Error::InvalidParameter {
                name: "T",
                value: self.t,
                reason: "window base must exceed 1",
            });
        }
        if !(self.l > 0.0) {
            return Err(Error::InvalidParameter {
                name: "L",
                value: self.l,
                reason: "inverse width must be positive",
            });
        }
        let pil = PI * self.l;
        let logt = self.t.ln();
        if pil >= logt {
            return Err(Error::RegimeViolation { pil, logt });
        }
        let mut warnings = Vec::new();
        if pil > 0.9 * logt {
            warnings.push(format!(
                "pi*L = {pil:.4} exceeds 0.9 log T = {:.4}; variance estimates degrade near the regime boundary",
                0.9 * logt
            ));
        }
        Ok(warnings)
    }

    /// Expected number of levels in the window at tau = T:
    /// sqrt(E)/(6L) with E = 1/4 + T^2.
    pub fn n_levels(&self) -> f64 {
        (0.25 + self.t * self.t).sqrt() / (6.0 * self.l)
    }
}

/// log N(n) = 2 log((n + sqrt(n^2 - 4))/2) for a hyperbolic trace n > 2.
pub fn log_norm(n: u64) -> Result<f64> {
    if n <= 2 {
        return Err(Error::TraceTooSmall(n));
    }
    let x = n as f64;
    Ok(2.0 * ((x + (x * x - 4.0).sqrt()) / 2.0).ln())
}

/// Smallest table size that covers the support of the window at width L:
/// terms survive only for n below e^{pi L} (support radius 1).
pub fn required_n_max(l: f64, f: &TestFunction) -> u64 {
    (PI * l * f.support_radius()).exp().ceil() as u64
}

/// Frequencies and folded coefficients of the hyperbolic sum at width L:
/// S(tau) = sum_i c_i cos(tau omega_i).
fn hyperbolic_coefficients(l: f64, f: &TestFunction, table: &AmplitudeTable) -> Vec<(f64, f64)> {
    let two_pi_l = 2.0 * PI * l;
    let mut out = Vec::new();
    for e in table.entries() {
        let u = e.log_norm / two_pi_l;
        if u > f.support_radius() {
            break; // log-norms ascend with n
        }
        let c = e.amp * f.f_hat(u) * 2.0 / (PI * l);
        if c != 0.0 {
            out.push((e.log_norm, c));
        }
    }
    out
}

/// The hyperbolic sum S_{f,L}(tau): reference scalar evaluation.
///
/// (1/pi L) sum_{n>2} amp(n) f_hat(log N(n) / 2 pi L) 2 cos(tau log N(n)).
/// The table must reach ceil(e^{pi L}).
pub fn hyperbolic_sum(tau: f64, l: f64, f: &TestFunction, table: &AmplitudeTable) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::InvalidParameter {
            name: "L",
            value: l,
            reason: "inverse width must be positive",
        });
    }
    let need = required_n_max(l, f);
    if table.n_max() < need {
        return Err(Error::TableTooShort {
            have: table.n_max(),
            need,
        });
    }
    let two_pi_l = 2.0 * PI * l;
    let mut acc = 0.0;
    for e in table.entries() {
        let u = e.log_norm / two_pi_l;
        if u > f.support_radius() {
            break;
        }
        acc += e.amp * f.f_hat(u) * 2.0 * (tau * e.log_norm).cos();
    }
    Ok(acc / (PI * l))
}

/// Blocked, parallel evaluation of S_{f,L} over many tau values.
///
/// Work is split into fixed-size chunks independent of the worker count, so
/// the result is bitwise reproducible for any parallelism level.
pub fn hyperbolic_sum_batch(
    taus: &[f64],
    l: f64,
    f: &TestFunction,
    table: &AmplitudeTable,
) -> Result<Vec<f64>> {
    if !(l > 0.0) {
        return Err(Error::InvalidParameter {
            name: "L",
            value: l,
            reason: "inverse width must be positive",
        });
    }
    let need = required_n_max(l, f);
    if table.n_max() < need {
        return Err(Error::TableTooShort {
            have: table.n_max(),
            need,
        });
    }
    let coeffs = hyperbolic_coefficients(l, f, table);
    let out: Vec<f64> = taus
        .par_chunks(1024)
        .flat_map_iter(|chunk| {
            chunk.iter().map(|&tau| {
                // Four independent accumulators keep the FP adds pipelined;
                // combining them in a fixed order keeps results stable.
                let mut acc = [0.0f64; 4];
                let mut it = coeffs.chunks_exact(4);
                for quad in it.by_ref() {
                    acc[0] += quad[0].1 * (tau * quad[0].0).cos();
                    acc[1] += quad[1].1 * (tau * quad[1].0).cos();
                    acc[2] += quad[2].1 * (tau * quad[2].0).cos();
                    acc[3] += quad[3].1 * (tau * quad[3].0).cos();
                }
                for t in it.remainder() {
                    acc[0] += t.1 * (tau * t.0).cos();
                }
                (acc[0] + acc[1]) + (acc[2] + acc[3])
            })
        })
        .collect();
    Ok(out)
}

/// Spectral mean density M(r) = (pi/6) r tanh(pi r) - Re psi(1 + ir)
/// - Re psi(1/2 + ir); even in r.
pub fn mean_density(r: f64) -> f64 {
    let area_half = PI / 6.0; // area(H/Gamma)/2 with area pi/3
    area_half * r * (PI * r).tanh() - re_digamma(1.0, r) - re_digamma(0.5, r)
}

fn gl7() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(7))
}

/// The mean (identity + smooth parabolic) term
/// (1/2 pi) int [f(L(r - tau)) + f(L(-r - tau))] M(r) dr,
/// integrated over the effective support of f (|f| < 1e-12 f(0) beyond).
pub fn mean_term(tau: f64, l: f64, f: &TestFunction) -> Result<f64> {
    if !(l > 0.0) || tau < 0.0 {
        return Err(Error::InvalidParameter {
            name: "tau/L",
            value: if l > 0.0 { tau } else { l },
            reason: "need tau >= 0 and L > 0",
        });
    }
    // Evenness of M folds the two window halves together:
    // (1/pi L) int f(x) M(tau + x/L) dx.
    let x_cut = f.effective_support();
    let n_panels = (2.0 * x_cut).ceil() as usize; // unit panels
    let x0 = -x_cut;
    let (nodes, weights) = gl7();
    let total: f64 = (0..n_panels)
        .into_par_iter()
        .map(|k| {
            let a = x0 + k as f64;
            let b = (a + 1.0).min(x_cut);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let mut acc = 0.0;
            for (xi, wi) in nodes.iter().zip(weights.iter()) {
                let x = mid + half * xi;
                acc += wi * f.f(x) * mean_density(tau + x / l);
            }
            acc * half
        })
        .sum();
    Ok(total / (PI * l))
}

/// d/dtau of [`mean_term`], by quadrature of the differentiated integrand
/// (M' taken by central differences).
pub fn mean_term_derivative(tau: f64, l: f64, f: &TestFunction) -> Result<f64> {
    if !(l > 0.0) || tau < 0.0 {
        return Err(Error::InvalidParameter {
            name: "tau/L",
            value: tau,
            reason: "need tau >= 0 and L > 0",
        });
    }
    let x_cut = f.effective_support();
    let n_panels = (2.0 * x_cut).ceil() as usize;
    let x0 = -x_cut;
    let (nodes, weights) = gl7();
    let h = 1e-3;
    let total: f64 = (0..n_panels)
        .into_par_iter()
        .map(|k| {
            let a = x0 + k as f64;
            let b = (a + 1.0).min(x_cut);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let mut acc = 0.0;
            for (xi, wi) in nodes.iter().zip(weights.iter()) {
                let x = mid + half * xi;
                let r = tau + x / l;
                let dm = (mean_density(r + h) - mean_density(r - h)) / (2.0 * h);
                acc += wi * f.f(x) * dm;
            }
            acc * half
        })
        .sum();
    Ok(total / (PI * l))
}

/// Von Mangoldt pairs (n, Lambda(n)) for 2 <= n <= cut.
fn von_mangoldt_terms(cut: u64) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    if cut < 2 {
        return out;
    }
    for p in crate::numeric::primes_up_to(cut) {
        let lp = (p as f64).ln();
        let mut q = p;
        loop {
            out.push((q, lp));
            match q.checked_mul(p) {
                Some(next) if next <= cut => q = next,
                _ => break,
            }
        }
    }
    out.sort_unstable_by_key(|&(n, _)| n);
    out
}

/// Elliptic classes of the modular group: one of order 2, two of order 3,
/// as (order m, power k) with rotation angle pi k / m.
const ELLIPTIC_CLASSES: [(u32, u32); 3] = [(2, 1), (3, 1), (3, 2)];

/// Even kernel cosh(beta r)/cosh(pi r) in overflow-safe form.
fn elliptic_kernel(beta: f64, r: f64) -> f64 {
    let t = r.abs();
    let b = beta.abs();
    (((b - PI) * t).exp() + (-(b + PI) * t).exp()) / (1.0 + (-2.0 * PI * t).exp())
}

/// Contribution of the elliptic conjugacy classes:
/// sum over classes of (1/(2 m sin(pi k/m))) int h(r) cosh((1-2k/m) pi r)
/// / cosh(pi r) dr with h(r) = f(L(r-tau)) + f(L(-r-tau)).
pub fn elliptic_term(tau: f64, l: f64, f: &TestFunction) -> f64 {
    // The kernel is even and h is even, so the two halves of h integrate
    // equally: per class the integral is 2 int f(L(r-tau)) K(r) dr.
    // Beyond |r| = 60 the kernel is below e^{-2 pi 60 / 3}; nothing with
    // f bounded by 1 survives there.
    let r_max = 60.0;
    let width = (0.25 / l).min(0.5);
    let n_panels = (2.0 * r_max / width).ceil() as usize;
    let (nodes, weights) = gl7();
    let mut total = 0.0;
    for &(m, k) in &ELLIPTIC_CLASSES {
        let beta = PI * (1.0 - 2.0 * k as f64 / m as f64);
        let coeff = 1.0 / (2.0 * m as f64 * (PI * k as f64 / m as f64).sin());
        let mut integral = 0.0;
        for p in 0..n_panels {
            let a = -r_max + p as f64 * width;
            let b = (a + width).min(r_max);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let mut acc = 0.0;
            for (xi, wi) in nodes.iter().zip(weights.iter()) {
                let r = mid + half * xi;
                acc += wi * f.f(l * (r - tau)) * elliptic_kernel(beta, r);
            }
            integral += acc * half;
        }
        total += coeff * 2.0 * integral;
    }
    total
}

/// Coarse upper bound on |elliptic_term|; used to skip the quadrature when
/// the term cannot matter.
fn elliptic_negligible(tau: f64, l: f64) -> bool {
    if tau < 100.0 {
        return false;
    }
    // |f| <= 1 everywhere and the kernels integrate to O(1); away from the
    // window centre f is bounded by its envelope at distance L(tau - 60).
    let envelope = 1.0 / (PI * l * (tau - 60.0)).powi(2);
    4.0 * envelope < 1e-12
}

/// The residual term R(tau): the parabolic constant, the von Mangoldt
/// oscillating sum, and the elliptic contribution.
///
/// (1/pi L) f_hat(0) log(pi/2)
///   + (1/pi L) sum_{n>=2} (Lambda(n)/n) f_hat(log n / pi L) 2 cos(2 tau log n)
///   + elliptic classes.
pub fn residual_term(tau: f64, l: f64, f: &TestFunction) -> Result<f64> {
    Ok(residual_term_batch(std::slice::from_ref(&tau), l, f)?[0])
}

/// Residual term over many tau values with shared precomputation.
pub fn residual_term_batch(taus: &[f64], l: f64, f: &TestFunction) -> Result<Vec<f64>> {
    if !(l > 0.0) {
        return Err(Error::InvalidParameter {
            name: "L",
            value: l,
            reason: "inverse width must be positive",
        });
    }
    let pil = PI * l;
    let constant = f.f_hat(0.0) * (PI / 2.0).ln() / pil;
    let cut = (pil * f.support_radius()).exp().floor() as u64;
    let terms: Vec<(f64, f64)> = von_mangoldt_terms(cut)
        .into_iter()
        .filter_map(|(n, lambda)| {
            let ln_n = (n as f64).ln();
            let c = lambda / n as f64 * f.f_hat(ln_n / pil) * 2.0 / pil;
            (c != 0.0).then_some((2.0 * ln_n, c))
        })
        .collect();

    let out: Vec<f64> = taus
        .par_chunks(1024)
        .flat_map_iter(|chunk| {
            chunk.iter().map(|&tau| {
                let mut acc = constant;
                for &(omega, c) in &terms {
                    acc += c * (tau * omega).cos();
                }
                if !elliptic_negligible(tau, l) {
                    acc += elliptic_term(tau, l, f);
                }
                acc
            })
        })
        .collect();
    Ok(out)
}

/// d/dtau of [`residual_term`]: the von Mangoldt sum differentiates term by
/// term; the elliptic part is included only when it can matter.
pub fn residual_term_derivative(tau: f64, l: f64, f: &TestFunction) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::InvalidParameter {
            name: "L",
            value: l,
            reason: "inverse width must be positive",
        });
    }
    let pil = PI * l;
    let cut = (pil * f.support_radius()).exp().floor() as u64;
    let mut acc = 0.0;
    for (n, lambda) in von_mangoldt_terms(cut) {
        let ln_n = (n as f64).ln();
        let c = lambda / n as f64 * f.f_hat(ln_n / pil) * 2.0 / pil;
        let omega = 2.0 * ln_n;
        acc -= c * omega * (tau * omega).sin();
    }
    if !elliptic_negligible(tau, l) {
        let h = 1e-4;
        acc += (elliptic_term(tau + h, l, f) - elliptic_term(tau - h, l, f)) / (2.0 * h);
    }
    Ok(acc)
}

/// Constant c1 in Weyl's law for the modular surface.
pub fn weyl_c1() -> f64 {
    (2.0 + (PI / 2.0).ln()) / PI
}

/// Smoothed Weyl count of r_j up to T:
/// T^2/12 - (2/pi) T log T + c1 T (the O(T/log T) remainder is not modeled).
pub fn weyl_count(t: f64) -> f64 {
    t * t / 12.0 - 2.0 / PI * t * t.ln() + weyl_c1() * t
}

/// Spectral parameters r_j (eigenvalues E_j = 1/4 + r_j^2), ascending.
#[derive(Debug, Clone)]
pub struct EigenvalueList {
    r: Vec<f64>,
}

impl EigenvalueList {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.is_empty() || r.windows(2).any(|w| w[1] <= w[0]) || r[0] < 0.0 {
            return Err(Error::BadEigenvalueList);
        }
        Ok(EigenvalueList { r })
    }

    /// Parse a text file: one r per line, `#` starts a comment, blank lines
    /// ignored; values must be strictly ascending and nonnegative.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut r = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let value: f64 = line.parse().map_err(|e| Error::EigenvalueParse {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: format!("{e}"),
            })?;
            if let Some(&prev) = r.last() {
                if value <= prev {
                    return Err(Error::EigenvalueParse {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        reason: format!("value {value} not strictly above previous {prev}"),
                    });
                }
            } else if value < 0.0 {
                return Err(Error::EigenvalueParse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    reason: "negative spectral parameter".into(),
                });
            }
            r.push(value);
        }
        Self::new(r)
    }

    pub fn r_values(&self) -> &[f64] {
        &self.r
    }
}

/// Spectral-side window count sum_j f(L(r_j - tau)) + f(L(-r_j - tau)).
///
/// A qualitative comparator only: list truncation and the missing
/// continuous spectrum matter unless the list covers the window with
/// headroom (f(L delta) below 1e-6 at the coverage margin delta).
pub fn spectral_side(tau: f64, l: f64, f: &TestFunction, eigs: &EigenvalueList) -> f64 {
    eigs.r
        .iter()
        .map(|&r| f.f(l * (r - tau)) + f.f(l * (-r - tau)))
        .sum()
}
