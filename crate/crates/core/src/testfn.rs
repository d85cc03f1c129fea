//! Admissible test-function pairs (f, f_hat), averaging weights (w, w_hat)
//! and the theoretical variance model sigma_L^2.
//!
//! Fourier convention: f_hat(u) = integral f(x) e^{-2 pi i x u} dx, so the
//! triangle pair is f_hat(u) = max(0, 1 - |u|) against f(x) = sinc^2(x)
//! with sinc(x) = sin(pi x)/(pi x), and f_hat(0) = integral f = 1.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{integrate_adaptive, Kahan};

/// Which Fourier pair an experiment runs with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestFunctionKind {
    #[serde(rename = "triangle")]
    Triangle,
    #[serde(rename = "bump")]
    SmoothBump,
}

impl std::fmt::Display for TestFunctionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestFunctionKind::Triangle => write!(f, "triangle"),
            TestFunctionKind::SmoothBump => write!(f, "bump"),
        }
    }
}

/// An even test function f with compactly supported even transform f_hat,
/// normalized so f_hat(0) = 1 and sup{|u| : f_hat(u) != 0} = 1.
#[derive(Clone)]
pub struct TestFunction {
    kind: TestFunctionKind,
    bump: Option<Arc<BumpGrid>>,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("kind", &self.kind)
            .finish()
    }
}

/// f for the smooth bump, tabulated by inverse transform on a fixed grid.
struct BumpGrid {
    values: Vec<f64>,
    x_half: f64,
    dx: f64,
}

const BUMP_GRID_POINTS: usize = 1 << 16;
const BUMP_GRID_HALF: f64 = 50.0;
/// Spectral sampling step for the inverse transform; by Poisson summation
/// the resulting aliasing error is bounded by sup_{|x| >= 50} |f|, below
/// 1e-10 for this bump.
const BUMP_DU: f64 = 0.01;

fn bump_hat_raw(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

fn bump_grid() -> &'static Arc<BumpGrid> {
    static GRID: OnceLock<Arc<BumpGrid>> = OnceLock::new();
    GRID.get_or_init(|| {
        let dx = 2.0 * BUMP_GRID_HALF / BUMP_GRID_POINTS as f64;
        // Nonzero spectral samples: u = j * du, 0 < j < 1/du.
        let j_max = (1.0 / BUMP_DU).round() as usize;
        let hats: Vec<f64> = (1..j_max)
            .map(|j| bump_hat_raw(j as f64 * BUMP_DU))
            .collect();
        let values: Vec<f64> = (0..BUMP_GRID_POINTS)
            .map(|i| {
                let x = -BUMP_GRID_HALF + i as f64 * dx;
                let mut acc = 1.0; // j = 0 term, f_hat(0) = 1
                for (j, h) in hats.iter().enumerate() {
                    acc +=
                        2.0 * h * (2.0 * std::f64::consts::PI * x * (j + 1) as f64 * BUMP_DU).cos();
                }
                acc * BUMP_DU
            })
            .collect();
        Arc::new(BumpGrid {
            values,
            x_half: BUMP_GRID_HALF,
            dx,
        })
    })
}

impl BumpGrid {
    /// Catmull-Rom cubic interpolation on the uniform grid; 0 outside.
    fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= self.x_half - 2.0 * self.dx {
            return 0.0;
        }
        let pos = (x + self.x_half) / self.dx;
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        let v = &self.values;
        let (p0, p1, p2, p3) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
        let a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
        let b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
        let c = -0.5 * p0 + 0.5 * p2;
        ((a * t + b) * t + c) * t + p1
    }
}

/// Construct the requested Fourier pair.
pub fn make_test_function(kind: TestFunctionKind) -> TestFunction {
    let bump = match kind {
        TestFunctionKind::Triangle => None,
        TestFunctionKind::SmoothBump => Some(bump_grid().clone()),
    };
    TestFunction { kind, bump }
}

impl TestFunction {
    pub fn kind(&self) -> TestFunctionKind {
        self.kind
    }

    /// Support radius of f_hat (1 by normalization).
    pub fn support_radius(&self) -> f64 {
        1.0
    }

    /// f_hat(u).
    pub fn f_hat(&self, u: f64) -> f64 {
        match self.kind {
            TestFunctionKind::Triangle => (1.0 - u.abs()).max(0.0),
            TestFunctionKind::SmoothBump => bump_hat_raw(u),
        }
    }

    /// f(x).
    pub fn f(&self, x: f64) -> f64 {
        match self.kind {
            TestFunctionKind::Triangle => {
                let px = std::f64::consts::PI * x;
                if px.abs() < 1e-4 {
                    1.0 - px * px / 3.0
                } else {
                    let s = px.sin() / px;
                    s * s
                }
            }
            TestFunctionKind::SmoothBump => self.bump.as_ref().expect("bump grid").eval(x),
        }
    }

    /// Half-width of the effective support: |f| stays below 1e-12 * f(0)
    /// beyond it. The triangle envelope is 1/(pi x)^2; the bump grid is
    /// identically zero past its tabulated range.
    pub fn effective_support(&self) -> f64 {
        match self.kind {
            TestFunctionKind::Triangle => 1e6 / std::f64::consts::PI,
            TestFunctionKind::SmoothBump => BUMP_GRID_HALF,
        }
    }
}

/// Averaging-weight flavours for the window average over tau in [T, 2T].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    #[serde(rename = "bump")]
    SmoothBump,
    #[serde(rename = "indicator")]
    Indicator,
}

impl std::fmt::Display for WeightKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightKind::SmoothBump => write!(f, "bump"),
            WeightKind::Indicator => write!(f, "indicator"),
        }
    }
}

/// Nonnegative weight w with unit mass, supported in (1, 2).
#[derive(Debug, Clone, Copy)]
pub struct WeightFunction {
    kind: WeightKind,
    norm: f64,
}

fn weight_bump_raw(x: f64) -> f64 {
    if x <= 1.0 || x >= 2.0 {
        0.0
    } else {
        (-1.0 / ((x - 1.0) * (2.0 - x))).exp()
    }
}

fn weight_bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        // Midpoint rule; the integrand vanishes to all orders at both
        // endpoints, so convergence is superalgebraic.
        let n = 1 << 14;
        let h = 1.0 / n as f64;
        let mut acc = Kahan::default();
        for i in 0..n {
            acc.add(weight_bump_raw(1.0 + (i as f64 + 0.5) * h));
        }
        acc.value() * h
    })
}

/// Construct the requested averaging weight.
pub fn make_weight(kind: WeightKind) -> WeightFunction {
    let norm = match kind {
        WeightKind::SmoothBump => 1.0 / weight_bump_mass(),
        WeightKind::Indicator => 1.0,
    };
    WeightFunction { kind, norm }
}

impl WeightFunction {
    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// w(x); unit mass over the support.
    pub fn w(&self, x: f64) -> f64 {
        match self.kind {
            WeightKind::SmoothBump => self.norm * weight_bump_raw(x),
            WeightKind::Indicator => {
                if (1.0..=2.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Support interval within (0, infinity).
    pub fn support(&self) -> (f64, f64) {
        (1.0, 2.0)
    }
}

/// The variance model sigma_L^2 = (2 kappa / (pi L)) int_0^inf
/// f_hat(u)^2 e^{pi L u} du at inverse width L.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VarianceModel {
    pub l: f64,
    pub sigma_sq: f64,
}

/// Closed form for the triangle pair: int_0^1 (1-u)^2 e^{au} du
/// = (2/a^3) e^a - (1/a + 2/a^2 + 2/a^3).
fn triangle_sigma_integral(a: f64) -> f64 {
    (2.0 / a.powi(3)) * a.exp() - (1.0 / a + 2.0 / a.powi(2) + 2.0 / a.powi(3))
}

/// sigma_L^2. The triangle pair evaluates in closed form; other pairs run
/// adaptive quadrature to 1e-10 relative.
pub fn sigma_model(l: f64, f: &TestFunction, kappa: f64) -> Result<VarianceModel> {
    if !(l > 0.0) {
        return Err(Error::InvalidParameter {
            name: "L",
            value: l,
            reason: "must be positive",
        });
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            value: kappa,
            reason: "must be positive",
        });
    }
    let a = std::f64::consts::PI * l;
    let integral = match f.kind() {
        TestFunctionKind::Triangle => triangle_sigma_integral(a),
        _ => sigma_integral_quadrature(a, f),
    };
    Ok(VarianceModel {
        l,
        sigma_sq: 2.0 * kappa / a * integral,
    })
}

/// Quadrature route for int_0^1 f_hat(u)^2 e^{au} du, exposed so the
/// closed form can be cross-checked against it.
pub fn sigma_model_quadrature(l: f64, f: &TestFunction, kappa: f64) -> Result<VarianceModel> {
    if !(l > 0.0) || !(kappa > 0.0) {
        return sigma_model(l, f, kappa); // reuse validation
    }
    let a = std::f64::consts::PI * l;
    let integral = sigma_integral_quadrature(a, f);
    Ok(VarianceModel {
        l,
        sigma_sq: 2.0 * kappa / a * integral,
    })
}

fn sigma_integral_quadrature(a: f64, f: &TestFunction) -> f64 {
    let g = |u: f64| {
        let h = f.f_hat(u);
        h * h * (a * u).exp()
    };
    integrate_adaptive(&g, 0.0, 1.0, 1e-10, 1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn triangle_normalization() {
        let f = make_test_function(TestFunctionKind::Triangle);
        assert_relative_eq!(f.f_hat(0.0), 1.0);
        assert_eq!(f.f_hat(1.5), 0.0);
        assert_relative_eq!(f.f(0.0), 1.0);
        // Fejer pair: f(1/2) = (2/pi)^2.
        assert_relative_eq!(
            f.f(0.5),
            (2.0 / std::f64::consts::PI).powi(2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn triangle_parseval() {
        // int f^2 = int f_hat^2 = 2/3.
        let f = make_test_function(TestFunctionKind::Triangle);
        let hat2 = integrate_adaptive(&|u| f.f_hat(u) * f.f_hat(u), -1.0, 1.0, 1e-12, 1e-16);
        assert_relative_eq!(hat2, 2.0 / 3.0, max_relative = 1e-10);
        // Spatial side: integrate over a wide window; the x^-4 tail beyond
        // 2000 is far below the 1e-6 target.
        let mut acc = Kahan::default();
        for k in 0..2000 {
            acc.add(integrate_adaptive(
                &|x| f.f(x) * f.f(x),
                k as f64,
                (k + 1) as f64,
                1e-12,
                1e-18,
            ));
        }
        assert_relative_eq!(2.0 * acc.value(), 2.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn bump_pair_basics() {
        let f = make_test_function(TestFunctionKind::SmoothBump);
        assert_relative_eq!(f.f_hat(0.0), 1.0);
        assert_eq!(f.f_hat(1.0), 0.0);
        // f integrates to f_hat(0) = 1: trapezoid over the grid.
        let n = 200_000;
        let h = 100.0 / n as f64;
        let mut acc = Kahan::default();
        for i in 0..=n {
            acc.add(f.f(-50.0 + i as f64 * h));
        }
        assert_relative_eq!(acc.value() * h, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn bump_hat_flat_at_support_edge() {
        let f = make_test_function(TestFunctionKind::SmoothBump);
        // Value and first two finite-difference derivatives vanish at 1.
        let h = 1e-3;
        let d1 = (f.f_hat(1.0 - h) - f.f_hat(1.0 + h)) / (2.0 * h);
        let d2 = (f.f_hat(1.0 - h) - 2.0 * f.f_hat(1.0) + f.f_hat(1.0 + h)) / (h * h);
        assert!(f.f_hat(1.0).abs() < 1e-8);
        assert!(d1.abs() < 1e-8);
        assert!(d2.abs() < 1e-8);
    }

    #[test]
    fn weights_have_unit_mass() {
        for kind in [WeightKind::SmoothBump, WeightKind::Indicator] {
            let w = make_weight(kind);
            let n = 1 << 14;
            let h = 2.0 / n as f64;
            let mut acc = Kahan::default();
            for i in 0..n {
                acc.add(w.w(0.5 + (i as f64 + 0.5) * h));
            }
            assert_relative_eq!(acc.value() * h, 1.0, epsilon = 1e-6);
        }
        let wb = make_weight(WeightKind::SmoothBump);
        assert_eq!(wb.w(0.5), 0.0);
        assert_eq!(wb.w(2.5), 0.0);
        let wi = make_weight(WeightKind::Indicator);
        assert_eq!(wi.w(1.5), 1.0);
    }

    #[test]
    fn sigma_closed_form_value() {
        // L = 1, kappa = 1.328: (2 kappa / pi) * 0.9071903681734674.
        let f = make_test_function(TestFunctionKind::Triangle);
        let v = sigma_model(1.0, &f, 1.328).unwrap();
        assert_relative_eq!(v.sigma_sq, 0.766_966_912_503_91, max_relative = 1e-10);
    }

    #[test]
    fn sigma_closed_form_matches_quadrature() {
        let f = make_test_function(TestFunctionKind::Triangle);
        for l in [0.5, 1.0, 2.0, 3.0] {
            let a = sigma_model(l, &f, 1.3283).unwrap().sigma_sq;
            let b = sigma_model_quadrature(l, &f, 1.3283).unwrap().sigma_sq;
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }

    #[test]
    fn sigma_scales_linearly_in_kappa() {
        let f = make_test_function(TestFunctionKind::Triangle);
        let v1 = sigma_model(2.0, &f, 1.0).unwrap().sigma_sq;
        let v2 = sigma_model(2.0, &f, 2.0).unwrap().sigma_sq;
        assert_relative_eq!(v2, 2.0 * v1, max_relative = 1e-14);
    }

    #[test]
    fn sigma_growth_sandwich() {
        // e^{(1-eps) pi L / 2} << sigma_L << e^{pi L / 2} / L. Rendered at
        // desk scale as a rate check: between unit steps of L the growth
        // factor sits inside (e^{0.1 pi}, e^{0.5 pi}), and the explicit
        // upper envelope holds pointwise on [1, 4].
        let f = make_test_function(TestFunctionKind::Triangle);
        let kappa = 1.3283;
        let pi = std::f64::consts::PI;
        let sigma = |l: f64| sigma_model(l, &f, kappa).unwrap().sigma_sq.sqrt();
        for l in [1.0, 2.0, 3.0, 4.0] {
            assert!(
                sigma(l) < (pi * l / 2.0).exp() / l,
                "upper bound fails at L={l}"
            );
        }
        for l in [1.0, 2.0, 3.0] {
            let growth = sigma(l + 1.0) / sigma(l);
            assert!(growth > (0.1 * pi).exp(), "growth too slow at L={l}");
            assert!(growth < (0.5 * pi).exp(), "growth too fast at L={l}");
        }
    }

    #[test]
    fn sigma_rejects_bad_input() {
        let f = make_test_function(TestFunctionKind::Triangle);
        assert!(sigma_model(0.0, &f, 1.0).is_err());
        assert!(sigma_model(1.0, &f, -1.0).is_err());
    }
}
