//! The experiment harness: sample tau, average with weights, estimate the
//! variance and standardized moments of the hyperbolic sum, compare with
//! the sigma_L^2 model and Gaussian targets, and emit reference form-factor
//! curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::amplitude::{default_kappa, AmplitudeTable};
use crate::error::{Error, Result};
use crate::numeric::normal_cdf;
use crate::testfn::{make_test_function, make_weight, sigma_model, WeightFunction};
use crate::trace::{hyperbolic_sum_batch, ExperimentConfig, SamplingMode};

/// Weighted tau samples in [T, 2T]; regeneration from the same
/// (seed, mode, M, T) is bit-identical.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub taus: Vec<f64>,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub mode: SamplingMode,
}

/// Tabulated inverse CDF of a weight density on its support.
fn inverse_cdf_table(w: &WeightFunction) -> (Vec<f64>, f64, f64) {
    let (lo, hi) = w.support();
    let n = 4096usize;
    let h = (hi - lo) / n as f64;
    let mut cdf = Vec::with_capacity(n + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    for i in 0..n {
        acc += w.w(lo + (i as f64 + 0.5) * h) * h;
        cdf.push(acc);
    }
    let total = acc;
    for v in &mut cdf {
        *v /= total;
    }
    (cdf, lo, h)
}

fn invert_cdf(cdf: &[f64], lo: f64, h: f64, p: f64) -> f64 {
    // Binary search for the bin containing p, then linear interpolation.
    let mut a = 0usize;
    let mut b = cdf.len() - 1;
    while b - a > 1 {
        let mid = (a + b) / 2;
        if cdf[mid] <= p {
            a = mid;
        } else {
            b = mid;
        }
    }
    let span = cdf[b] - cdf[a];
    let frac = if span > 0.0 { (p - cdf[a]) / span } else { 0.5 };
    lo + (a as f64 + frac) * h
}

/// Draw the tau sample set prescribed by the config.
///
/// Monte Carlo mode draws M values from the density w(tau/T)/T by inverse
/// CDF with equal weights; quadrature mode lays down equispaced midpoint
/// nodes with weights proportional to w(tau/T), normalized to unit mass.
pub fn sample_taus(cfg: &ExperimentConfig, w: &WeightFunction) -> Result<SampleSet> {
    cfg.validate()?;
    let t = cfg.t;
    let m = cfg.samples;
    match cfg.mode {
        SamplingMode::Montecarlo => {
            if m < 1000 {
                return Err(Error::TooFewSamples { min: 1000, got: m });
            }
            let (cdf, lo, h) = inverse_cdf_table(w);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let taus: Vec<f64> = (0..m)
                .map(|_| t * invert_cdf(&cdf, lo, h, rng.gen::<f64>()))
                .collect();
            let weights = vec![1.0 / m as f64; m as usize];
            Ok(SampleSet {
                taus,
                weights,
                seed: cfg.seed,
                mode: cfg.mode,
            })
        }
        SamplingMode::Quadrature => {
            let (lo, hi) = w.support();
            let step = (hi - lo) * t / m as f64;
            // Resolve the fastest oscillation 2 pi L in the hyperbolic sum.
            let max_log_norm = 2.0 * std::f64::consts::PI * cfg.l;
            if step * max_log_norm > std::f64::consts::FRAC_PI_4 {
                return Err(Error::QuadratureStepTooCoarse {
                    step,
                    required: std::f64::consts::FRAC_PI_4 / max_log_norm,
                });
            }
            let mut taus = Vec::with_capacity(m as usize);
            let mut weights = Vec::with_capacity(m as usize);
            for i in 0..m {
                let tau = t * lo + (i as f64 + 0.5) * step;
                taus.push(tau);
                weights.push(w.w(tau / t));
            }
            let mut total = crate::numeric::Kahan::default();
            for &v in &weights {
                total.add(v);
            }
            let total = total.value();
            for v in &mut weights {
                *v /= total;
            }
            Ok(SampleSet {
                taus,
                weights,
                seed: cfg.seed,
                mode: cfg.mode,
            })
        }
    }
}

/// Weighted average sum_i w_i v_i (weights already sum to one).
pub fn weighted_average(values: &[f64], s: &SampleSet) -> Result<f64> {
    if values.len() != s.weights.len() {
        return Err(Error::LengthMismatch {
            values: values.len(),
            weights: s.weights.len(),
        });
    }
    Ok(values.iter().zip(&s.weights).map(|(v, w)| v * w).sum())
}

/// Standardized moments, their batch standard errors, KS distance and the
/// histogram of S / sigma_L.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub config: ConfigEcho,
    /// sigma_L^2 from the variance model.
    pub sigma_model: f64,
    /// Mean of S / sigma_L.
    pub mean: f64,
    /// Empirical variance of S divided by sigma_L^2.
    pub var_ratio: f64,
    pub moments: Moments,
    pub stderr: StdErrors,
    pub ks: f64,
    pub histogram: Histogram,
    pub version: String,
}

/// Reproducibility stanza echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub samples: u64,
    pub seed: u64,
    pub f: String,
    pub w: String,
    pub mode: String,
    pub workers: usize,
}

/// Central standardized moments m_k = E[((x - mean)/std)^k].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Moments {
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub m6: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StdErrors {
    pub mean: f64,
    pub var_ratio: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub m6: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub overflow: Overflow,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Overflow {
    pub below: u64,
    pub above: u64,
}

const HIST_BINS: usize = 81;
const HIST_LO: f64 = -5.0;
const HIST_HI: f64 = 5.0;
const BATCHES: usize = 20;

/// Weighted summary statistics of one slice: (mean, var, m3..m6).
fn weighted_stats(xs: &[f64], ws: &[f64]) -> (f64, f64, [f64; 4]) {
    let total: f64 = ws.iter().sum();
    let mean: f64 = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / total;
    let var: f64 = xs
        .iter()
        .zip(ws)
        .map(|(x, w)| w * (x - mean) * (x - mean))
        .sum::<f64>()
        / total;
    let std = var.sqrt();
    let mut m = [0.0f64; 4];
    if std > 0.0 {
        for (x, w) in xs.iter().zip(ws) {
            let z = (x - mean) / std;
            let z3 = z * z * z;
            m[0] += w * z3;
            m[1] += w * z3 * z;
            m[2] += w * z3 * z * z;
            m[3] += w * z3 * z3;
        }
        for v in &mut m {
            *v /= total;
        }
    }
    (mean, var, m)
}

/// Run the full moment experiment for one configuration.
///
/// Evaluates S over the sample set, divides by sigma_L from the variance
/// model (S is already centered), and reports the variance ratio, the
/// standardized central moments m3..m6 with 20-batch standard errors, the
/// KS distance of the standardized sample against the normal CDF, and the
/// histogram of S / sigma_L on [-5, 5] with 81 bins.
pub fn moment_report(cfg: &ExperimentConfig, table: &AmplitudeTable) -> Result<MomentReport> {
    cfg.validate()?;
    let f = make_test_function(cfg.f);
    let w = make_weight(cfg.w);
    let sigma = sigma_model(cfg.l, &f, default_kappa())?;
    let sample = sample_taus(cfg, &w)?;
    let raw = hyperbolic_sum_batch(&sample.taus, cfg.l, &f, table)?;

    let sd = sigma.sigma_sq.sqrt();
    let xs: Vec<f64> = raw.iter().map(|s| s / sd).collect();
    let (mean, var_ratio, moments) = weighted_stats(&xs, &sample.weights);
    let std = var_ratio.sqrt();

    // Batch standard errors over index-contiguous batches.
    let mut batch_stats: Vec<[f64; 6]> = Vec::with_capacity(BATCHES);
    let n = xs.len();
    for b in 0..BATCHES {
        let lo = b * n / BATCHES;
        let hi = ((b + 1) * n / BATCHES).max(lo + 1).min(n);
        let (bm, bv, bmk) = weighted_stats(&xs[lo..hi], &sample.weights[lo..hi]);
        batch_stats.push([bm, bv, bmk[0], bmk[1], bmk[2], bmk[3]]);
    }
    let stderr_of = |idx: usize| {
        let vals: Vec<f64> = batch_stats.iter().map(|s| s[idx]).collect();
        let m: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        let v: f64 =
            vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (vals.len() as f64 - 1.0);
        (v / vals.len() as f64).sqrt()
    };
    let stderr = StdErrors {
        mean: stderr_of(0),
        var_ratio: stderr_of(1),
        m3: stderr_of(2),
        m4: stderr_of(3),
        m5: stderr_of(4),
        m6: stderr_of(5),
    };

    // KS on the standardized sample.
    let zs: Vec<f64> = xs.iter().map(|x| (x - mean) / std).collect();
    let ks = ks_distance_weighted(&zs, &sample.weights);

    // Histogram of S / sigma_L.
    let bin_w = (HIST_HI - HIST_LO) / HIST_BINS as f64;
    let edges: Vec<f64> = (0..=HIST_BINS)
        .map(|i| HIST_LO + i as f64 * bin_w)
        .collect();
    let mut counts = vec![0u64; HIST_BINS];
    let mut overflow = Overflow { below: 0, above: 0 };
    for &x in &xs {
        if x < HIST_LO {
            overflow.below += 1;
        } else if x >= HIST_HI {
            overflow.above += 1;
        } else {
            let idx = (((x - HIST_LO) / bin_w) as usize).min(HIST_BINS - 1);
            counts[idx] += 1;
        }
    }

    Ok(MomentReport {
        config: ConfigEcho {
            t: cfg.t,
            l: cfg.l,
            samples: cfg.samples,
            seed: cfg.seed,
            f: cfg.f.to_string(),
            w: cfg.w.to_string(),
            mode: cfg.mode.to_string(),
            workers: rayon::current_num_threads(),
        },
        sigma_model: sigma.sigma_sq,
        mean,
        var_ratio,
        moments: Moments {
            m3: moments[0],
            m4: moments[1],
            m5: moments[2],
            m6: moments[3],
        },
        stderr,
        ks,
        histogram: Histogram {
            edges,
            counts,
            overflow,
        },
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Kolmogorov-Smirnov distance of a sample against the standard normal.
pub fn ks_distance(standardized: &[f64]) -> f64 {
    let w = vec![1.0 / standardized.len() as f64; standardized.len()];
    ks_distance_weighted(standardized, &w)
}

fn ks_distance_weighted(xs: &[f64], ws: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "KS distance of an empty sample");
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let total: f64 = ws.iter().sum();
    let mut cum = 0.0;
    let mut d: f64 = 0.0;
    for &i in &order {
        let phi = normal_cdf(xs[i]);
        d = d.max((phi - cum).abs());
        cum += ws[i] / total;
        d = d.max((cum - phi).abs());
    }
    d
}

/// Reference form-factor curves.
#[derive(Debug, Clone, Copy)]
pub enum FormFactorModel {
    /// Uncorrelated levels: K = 1.
    Poisson,
    /// Gaussian orthogonal ensemble, two-branch formula.
    Goe,
    /// Arithmetic regime K = c1 exp(c2 sqrt(E) tau)/sqrt(E) with
    /// c1 = 6 kappa / pi, c2 = pi / 6.
    Arithmetic { kappa: f64, energy: f64 },
}

/// c1 = 6 kappa / pi of the arithmetic form factor.
pub fn form_factor_c1(kappa: f64) -> f64 {
    6.0 * kappa / std::f64::consts::PI
}

/// c2 = pi / 6 of the arithmetic form factor.
pub fn form_factor_c2() -> f64 {
    std::f64::consts::PI / 6.0
}

pub fn form_factor_reference(model: &FormFactorModel, tau: f64) -> f64 {
    match model {
        FormFactorModel::Poisson => 1.0,
        FormFactorModel::Goe => {
            let t = tau.abs();
            if t <= 1.0 {
                2.0 * t - t * (1.0 + 2.0 * t).ln()
            } else {
                2.0 - t * ((2.0 * t + 1.0) / (2.0 * t - 1.0)).ln()
            }
        }
        FormFactorModel::Arithmetic { kappa, energy } => {
            let se = energy.sqrt();
            form_factor_c1(*kappa) * (form_factor_c2() * se * tau).exp() / se
        }
    }
}
