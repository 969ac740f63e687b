//! Deconvolution estimators of the density and distribution function, the
//! auxiliary kernel density estimate of `f_Y`, and the leading-order
//! bias/variance expressions used as theoretical references.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{GnTable, KernelSpec};
use crate::noise::{NoiseModel, ObservedDensity};
use crate::quadrature::{self, GaussLegendre};

/// Fraction of out-of-grid kernel evaluations above which a result is flagged.
pub const TRUNCATION_WARNING_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    Density,
    Cdf,
    KdeY,
}

impl EstimateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateKind::Density => "density",
            EstimateKind::Cdf => "cdf",
            EstimateKind::KdeY => "kde_y",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub x0: f64,
    pub value: f64,
    pub h: f64,
    pub n: usize,
    pub kind: EstimateKind,
    /// Number of `(x0 - y_j)/h` falling outside the tabulated grid.
    pub truncated: usize,
    /// Set when `truncated` exceeds 0.1% of the terms.
    pub truncation_warning: bool,
    /// Distribution-function value outside `[-0.05, 1.05]` (raw value kept).
    pub out_of_range: bool,
}

fn check_inputs(y: &[f64], table: &GnTable) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Data("no observations".into()));
    }
    if !(table.h > 0.0) {
        return Err(Error::domain("bandwidth must be positive"));
    }
    Ok(())
}

fn result(kind: EstimateKind, x0: f64, value: f64, table: &GnTable, n: usize, truncated: usize) -> EstimateResult {
    EstimateResult {
        x0,
        value,
        h: table.h,
        n,
        kind,
        truncated,
        truncation_warning: truncated as f64 > TRUNCATION_WARNING_FRACTION * n as f64,
        out_of_range: kind == EstimateKind::Cdf && !(-0.05..=1.05).contains(&value),
    }
}

/// `f̂_n(x0) = (1/(n h)) Σ_j g_n((x0 - y_j)/h)` at each `x0`.
pub fn density_estimate(y: &[f64], table: &GnTable, x0_list: &[f64]) -> Result<Vec<EstimateResult>> {
    check_inputs(y, table)?;
    let n = y.len();
    Ok(x0_list
        .iter()
        .map(|&x0| {
            let mut sum = 0.0;
            let mut truncated = 0;
            for &yj in y {
                let u = (x0 - yj) / table.h;
                if table.covers(u) {
                    sum += table.gn_at(u);
                } else {
                    truncated += 1;
                }
            }
            result(EstimateKind::Density, x0, sum / (n as f64 * table.h), table, n, truncated)
        })
        .collect())
}

/// `F̂_n(x0) = (1/n) Σ_j G_n((x0 - y_j)/h)`.
pub fn cdf_estimate(y: &[f64], table: &GnTable, x0_list: &[f64]) -> Result<Vec<EstimateResult>> {
    check_inputs(y, table)?;
    let n = y.len();
    Ok(x0_list
        .iter()
        .map(|&x0| {
            let mut sum = 0.0;
            let mut truncated = 0;
            for &yj in y {
                let u = (x0 - yj) / table.h;
                if !table.covers(u) {
                    truncated += 1;
                }
                sum += table.big_gn_at(u);
            }
            result(EstimateKind::Cdf, x0, sum / n as f64, table, n, truncated)
        })
        .collect())
}

/// Ordinary kernel density estimate `(1/(n b)) Σ K((x0 - y_j)/b)` with `K`
/// evaluated by quadrature.
pub fn kde_y(y: &[f64], kernel: &KernelSpec, b: f64, x0: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::domain(format!("pilot bandwidth must be positive, got {b}")));
    }
    if y.is_empty() {
        return Err(Error::Data("no observations".into()));
    }
    let sum: f64 = y.iter().map(|&yj| kernel.kernel_value((x0 - yj) / b)).sum();
    Ok(sum / (y.len() as f64 * b))
}

/// [`kde_y`] reading `K` from a noise-free table.
pub fn kde_y_tabulated(y: &[f64], kernel_table: &GnTable, b: f64, x0: f64) -> Result<f64> {
    if kernel_table.noise != NoiseModel::None {
        return Err(Error::domain("kernel table must be built without noise"));
    }
    if !(b > 0.0) {
        return Err(Error::domain(format!("pilot bandwidth must be positive, got {b}")));
    }
    if y.is_empty() {
        return Err(Error::Data("no observations".into()));
    }
    let sum: f64 = y.iter().map(|&yj| kernel_table.gn_at((x0 - yj) / b)).sum();
    Ok(sum / (y.len() as f64 * b))
}

/// Leading bias `h² f''(x0) μ₂ / 2`.
pub fn theory_bias(f_xx_at_x0: f64, mu2: f64, h: f64) -> f64 {
    h * h * 0.5 * f_xx_at_x0 * mu2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DependenceRegime {
    Srd,
    Lrd,
}

/// Leading terms of the mean squared error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryMse {
    pub bias_sq: f64,
    pub var_iid_term: f64,
    pub var_lrd_term: f64,
    pub total: f64,
    pub regime: DependenceRegime,
}

impl TheoryMse {
    pub fn variance(&self) -> f64 {
        self.var_iid_term + self.var_lrd_term
    }
}

/// Inputs of the density MSE expansion at one point `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityTheoryInputs {
    pub f_y: f64,
    pub f_y_prime: f64,
    pub f_xx: f64,
    pub mu2: f64,
    pub d1: f64,
    pub n: usize,
    pub h: f64,
    pub beta: f64,
    /// `Var(Σ X_j)`; `None` selects the short-range expansion without the
    /// dependence term.
    pub sigma_n1_sq: Option<f64>,
}

/// `(½ f''(x0) μ₂)² h⁴ + D₁ f_Y(x0) n⁻¹ h^{-(2β+1)} + f_Y'(x0)² n⁻² σ²_{n,1} h^{-2β}`.
pub fn theory_mse_density(p: &DensityTheoryInputs) -> TheoryMse {
    let n = p.n as f64;
    let bias_sq = (0.5 * p.f_xx * p.mu2).powi(2) * p.h.powi(4);
    let var_iid_term = p.d1 * p.f_y / n * p.h.powf(-(2.0 * p.beta + 1.0));
    let (var_lrd_term, regime) = match p.sigma_n1_sq {
        Some(s2) => (p.f_y_prime.powi(2) * s2 / (n * n) * p.h.powf(-2.0 * p.beta), DependenceRegime::Lrd),
        None => (0.0, DependenceRegime::Srd),
    };
    TheoryMse {
        bias_sq,
        var_iid_term,
        var_lrd_term,
        total: bias_sq + var_iid_term + var_lrd_term,
        regime,
    }
}

/// Inputs of the distribution-function MSE expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfTheoryInputs {
    pub f_y: f64,
    /// `f_X'(x0)`, driving the bias.
    pub f_prime: f64,
    pub mu2: f64,
    pub n: usize,
    pub h: f64,
    pub beta: f64,
    pub sigma_n1_sq: f64,
}

/// `(½ f'(x0) μ₂)² h⁴ + f_Y(x0)² σ²_{n,1} n⁻² h^{-2β}`.
pub fn theory_mse_cdf(p: &CdfTheoryInputs) -> TheoryMse {
    let n = p.n as f64;
    let bias_sq = (0.5 * p.f_prime * p.mu2).powi(2) * p.h.powi(4);
    let var_lrd_term = p.f_y.powi(2) * p.sigma_n1_sq / (n * n) * p.h.powf(-2.0 * p.beta);
    TheoryMse {
        bias_sq,
        var_iid_term: 0.0,
        var_lrd_term,
        total: bias_sq + var_lrd_term,
        regime: DependenceRegime::Lrd,
    }
}

/// `E f̂_n(x0) = ∫ (1/h) g_n((x0 - u)/h) f_Y(u) du`, by quadrature against
/// the `f_Y` oracle.
pub fn expected_density_estimate(table: &GnTable, oracle: &ObservedDensity, x0: f64) -> f64 {
    table.smooth_against(x0, |u| oracle.pdf(u))
}

/// `E F̂_n(x0) = ∫ G_n((x0 - u)/h) f_Y(u) du`.
pub fn expected_cdf_estimate(table: &GnTable, oracle: &ObservedDensity, x0: f64) -> f64 {
    table.smooth_antiderivative_against(x0, |u| oracle.pdf(u), oracle.cdf(x0))
}

/// Panels of the frequency-domain expectation integrals on `[0, d/h]`.
fn frequency_panels(kernel: &KernelSpec, h: f64, x0: f64) -> usize {
    ((kernel.d / h) * (1.0 + x0.abs())).ceil() as usize + 8
}

/// `E f̂_n(x0)` when `X` is centred normal with standard deviation
/// `sigma_x`. The noise characteristic function cancels, leaving
/// `(1/π) ∫_0^{d/h} cos(t x0) φ_K(h t) e^{-σ²t²/2} dt`.
pub fn expected_density_normal(kernel: &KernelSpec, sigma_x: f64, h: f64, x0: f64) -> f64 {
    let rule = GaussLegendre::cached(32);
    let f = |t: f64| (t * x0).cos() * kernel.phi(h * t) * (-0.5 * sigma_x * sigma_x * t * t).exp();
    quadrature::composite(&rule, f, 0.0, kernel.d / h, frequency_panels(kernel, h, x0)) / PI
}

/// `E F̂_n(x0) = 1/2 + (1/π) ∫_0^{d/h} sin(t x0)/t φ_K(h t) e^{-σ²t²/2} dt`
/// for centred normal `X`.
pub fn expected_cdf_normal(kernel: &KernelSpec, sigma_x: f64, h: f64, x0: f64) -> f64 {
    let rule = GaussLegendre::cached(32);
    let f = |t: f64| (t * x0).sin() / t * kernel.phi(h * t) * (-0.5 * sigma_x * sigma_x * t * t).exp();
    0.5 + quadrature::composite(&rule, f, 0.0, kernel.d / h, frequency_panels(kernel, h, x0)) / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_gn, default_kernel, GridConfig};
    use crate::special::normal_pdf;

    fn kernel_table(h: f64) -> GnTable {
        build_gn(&default_kernel(), &NoiseModel::None, h, &GridConfig::default()).unwrap()
    }

    #[test]
    fn single_observation() {
        let t = kernel_table(1.0);
        let r = density_estimate(&[0.0], &t, &[0.0]).unwrap();
        assert_eq!(r[0].value, t.gn_at(0.0));
        assert_eq!(r[0].n, 1);
        let k0 = default_kernel().kernel_value(0.0);
        assert!((r[0].value - k0).abs() < 1e-12);
    }

    #[test]
    fn deconvolution_without_noise_is_kde() {
        let h = 0.37;
        let t = kernel_table(h);
        let y: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 25.0 - 2.0 + 0.001 * i as f64).collect();
        for &x0 in &[0.0, 0.3, -1.7] {
            let deconv = density_estimate(&y, &t, &[x0]).unwrap()[0].value;
            let kde = kde_y(&y, &default_kernel(), h, x0).unwrap();
            assert!((deconv - kde).abs() < 1e-8, "x0={x0}: {deconv} vs {kde}");
        }
    }

    #[test]
    fn cdf_limits() {
        let t = build_gn(&default_kernel(), &NoiseModel::laplace(1.0).unwrap(), 0.5, &GridConfig::default()).unwrap();
        let y = [-1.0, 0.2, 0.9, 2.5];
        let hi = 2.5 + t.x_max * t.h;
        let lo = -1.0 - t.x_max * t.h;
        let r = cdf_estimate(&y, &t, &[hi, lo]).unwrap();
        assert!((r[0].value - 1.0).abs() < 1e-4);
        assert!(r[1].value.abs() < 1e-4);
    }

    #[test]
    fn cdf_is_integral_of_density() {
        let t = build_gn(&default_kernel(), &NoiseModel::laplace(1.0).unwrap(), 0.5, &GridConfig::default()).unwrap();
        let y = [-1.0, 0.2, 0.9, 2.5, 0.1];
        let dx = 0.01;
        let xs: Vec<f64> = (-9000..=0).map(|i| i as f64 * dx).collect();
        let dens: Vec<f64> = density_estimate(&y, &t, &xs).unwrap().iter().map(|r| r.value).collect();
        let lower = cdf_estimate(&y, &t, &[xs[0]]).unwrap()[0].value;
        let integral = crate::quadrature::trapezoid(&dens, dx) + lower;
        let direct = cdf_estimate(&y, &t, &[0.0]).unwrap()[0].value;
        assert!((integral - direct).abs() < 1e-4, "{integral} vs {direct}");
    }

    #[test]
    fn truncation_counter() {
        let t = kernel_table(0.01);
        let y = [0.0, 10.0];
        let r = density_estimate(&y, &t, &[0.0]).unwrap();
        assert_eq!(r[0].truncated, 1);
        assert!(r[0].truncation_warning);
        assert!(density_estimate(&[], &t, &[0.0]).is_err());
    }

    #[test]
    fn kde_limits() {
        let k = default_kernel();
        assert!((kde_y(&[0.0], &k, 1.0, 0.0).unwrap() - 0.14551).abs() < 1e-5);
        assert!(kde_y(&[0.0, 1.0], &k, 1e6, 0.0).unwrap() < 1e-6);
        assert!(kde_y(&[0.0], &k, 0.0, 0.0).is_err());
        let t = kernel_table(1.0);
        let y = [0.1, -0.4, 2.2];
        let a = kde_y(&y, &k, 0.6, 0.3).unwrap();
        let b = kde_y_tabulated(&y, &t, 0.6, 0.3).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn bias_formula() {
        assert_eq!(theory_bias(0.0, 6.0, 0.3), 0.0);
        let f2 = -normal_pdf(0.0);
        let b = theory_bias(f2, 6.0, 0.1);
        assert!((b - 0.01 * 0.5 * (-0.3989422804014327) * 6.0).abs() < 1e-15);
        assert!((b + 0.011968).abs() < 1e-6);
        assert!((theory_bias(f2, 6.0, 0.2) / b - 4.0).abs() < 1e-12);
    }

    fn inputs() -> DensityTheoryInputs {
        DensityTheoryInputs {
            f_y: 0.2,
            f_y_prime: -0.05,
            f_xx: -0.4,
            mu2: 6.0,
            d1: 1.277e-3,
            n: 1000,
            h: 0.4,
            beta: 2.0,
            sigma_n1_sq: None,
        }
    }

    #[test]
    fn srd_expansion_has_two_terms() {
        let p = inputs();
        let t = theory_mse_density(&p);
        assert_eq!(t.var_lrd_term, 0.0);
        assert_eq!(t.regime, DependenceRegime::Srd);
        assert_eq!(t.bias_sq, (0.5 * -0.4 * 6.0f64).powi(2) * 0.4f64.powi(4));
        assert_eq!(t.var_iid_term, 1.277e-3 * 0.2 / 1000.0 * 0.4f64.powf(-5.0));
        assert_eq!(t.total, t.bias_sq + t.var_iid_term + t.var_lrd_term);
        let big = theory_mse_density(&DensityTheoryInputs { n: 1 << 40, ..p });
        assert_eq!(big.bias_sq, t.bias_sq);
        assert!(big.var_iid_term < 1e-12);
    }

    #[test]
    fn lrd_term_exponent() {
        // σ² ∝ n^{3-2γ} ⇒ var_lrd ∝ n^{1-2γ}
        let gamma: f64 = 0.7;
        let term = |n: usize| {
            let s2 = (n as f64).powf(3.0 - 2.0 * gamma);
            theory_mse_density(&DensityTheoryInputs {
                n,
                sigma_n1_sq: Some(s2),
                ..inputs()
            })
            .var_lrd_term
        };
        let slope = (term(1 << 20) / term(1 << 10)).ln() / (1024f64).ln();
        assert!((slope - (1.0 - 2.0 * gamma)).abs() < 1e-12);
    }

    #[test]
    fn cdf_expansion() {
        let base = CdfTheoryInputs {
            f_y: 0.25,
            f_prime: 0.0,
            mu2: 6.0,
            n: 4096,
            h: 0.5,
            beta: 2.0,
            sigma_n1_sq: 1.0e5,
        };
        let t = theory_mse_cdf(&base);
        assert_eq!(t.bias_sq, 0.0);
        assert_eq!(t.total, t.var_lrd_term);
        let halved = theory_mse_cdf(&CdfTheoryInputs { h: 0.25, ..base });
        assert!((halved.var_lrd_term / t.var_lrd_term - 16.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_bias_and_variance_balance_at_optimum() {
        // Minimise A h⁴ + B h^{-2β} by golden-section search; at the optimum
        // 4 A h⁴ = 2β B h^{-2β}, so the two terms are in ratio β/2 = 1 for β = 2.
        let gamma: f64 = 0.7;
        let n = 1usize << 16;
        let s2 = 9.0 * (n as f64).powf(3.0 - 2.0 * gamma);
        let base = CdfTheoryInputs {
            f_y: 0.25,
            f_prime: 0.2,
            mu2: 6.0,
            n,
            h: 1.0,
            beta: 2.0,
            sigma_n1_sq: s2,
        };
        let mse = |h: f64| theory_mse_cdf(&CdfTheoryInputs { h, ..base }).total;
        let (mut a, mut b) = (1e-3, 10.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if mse(c) < mse(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let h = 0.5 * (a + b);
        let t = theory_mse_cdf(&CdfTheoryInputs { h, ..base });
        assert!((t.bias_sq / t.var_lrd_term - 1.0).abs() < 0.01);
        // and the optimiser follows the (σ²/n²)^{1/(2(β+2))} law
        let c = crate::bandwidth::bw_cdf(n, 2.0, s2, 1.0).unwrap().h;
        let ratio = h / c;
        let other = {
            let base2 = CdfTheoryInputs { n: n * 4, sigma_n1_sq: 9.0 * ((4 * n) as f64).powf(3.0 - 2.0 * gamma), ..base };
            let mse2 = |h: f64| theory_mse_cdf(&CdfTheoryInputs { h, ..base2 }).total;
            let (mut a, mut b) = (1e-3, 10.0);
            for _ in 0..200 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if mse2(c) < mse2(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            0.5 * (a + b) / crate::bandwidth::bw_cdf(4 * n, 2.0, base2.sigma_n1_sq, 1.0).unwrap().h
        };
        assert!((ratio / other - 1.0).abs() < 1e-6);
    }

    #[test]
    fn expectation_quadrature_matches_fourier_identity() {
        // E f̂ = (K_h * f_X)(x0) = (1/π) ∫_0^{d/h} cos(t x0) φ_K(h t) e^{-t²/2} dt
        let h = 0.4;
        let noise = NoiseModel::laplace(1.0).unwrap();
        let t = build_gn(&default_kernel(), &noise, h, &GridConfig::default()).unwrap();
        let oracle = ObservedDensity::new(1.0, noise).unwrap();
        let k = default_kernel();
        let rule = crate::quadrature::GaussLegendre::new(200);
        for &x0 in &[0.0, 1.0] {
            let fourier = rule.integrate(|s| (s * x0).cos() * k.phi(h * s) * (-0.5 * s * s).exp(), 0.0, 1.0 / h)
                / std::f64::consts::PI;
            let quad = expected_density_estimate(&t, &oracle, x0);
            assert!((quad - fourier).abs() < 1e-6, "x0={x0}: {quad} vs {fourier}");
            assert!((expected_density_normal(&k, 1.0, h, x0) - fourier).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_expectation_matches_fourier_identity() {
        // E F̂ = (K_h * F_X)(x0) = 1/2 + (1/π) ∫_0^{d/h} sin(t x0)/t φ_K(h t) e^{-t²/2} dt
        let h = 0.5;
        let noise = NoiseModel::laplace(1.0).unwrap();
        let t = build_gn(&default_kernel(), &noise, h, &GridConfig::default()).unwrap();
        let oracle = ObservedDensity::new(1.0, noise).unwrap();
        let k = default_kernel();
        let rule = crate::quadrature::GaussLegendre::new(200);
        for &x0 in &[0.0, 0.8] {
            let fourier = 0.5
                + rule.integrate(|s| (s * x0).sin() / s * k.phi(h * s) * (-0.5 * s * s).exp(), 0.0, 1.0 / h)
                    / std::f64::consts::PI;
            let quad = expected_cdf_estimate(&t, &oracle, x0);
            assert!((quad - fourier).abs() < 1e-5, "x0={x0}: {quad} vs {fourier}");
            assert!((expected_cdf_normal(&k, 1.0, h, x0) - fourier).abs() < 1e-12);
        }
    }

    fn laplace_table() -> &'static GnTable {
        static TABLE: std::sync::OnceLock<GnTable> = std::sync::OnceLock::new();
        TABLE.get_or_init(|| {
            build_gn(&default_kernel(), &NoiseModel::laplace(1.0).unwrap(), 0.4, &GridConfig::default()).unwrap()
        })
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn estimates_are_translation_equivariant(
            y in proptest::collection::vec(-5.0f64..5.0, 1..50),
            x0 in -3.0f64..3.0,
            shift in -2.0f64..2.0,
        ) {
            let t = laplace_table();
            let moved: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let a = density_estimate(&y, t, &[x0]).unwrap()[0].value;
            let b = density_estimate(&moved, t, &[x0 + shift]).unwrap()[0].value;
            proptest::prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn cdf_is_reflection_symmetric(
            y in proptest::collection::vec(-5.0f64..5.0, 1..50),
            x0 in -3.0f64..3.0,
        ) {
            // G_n(u) + G_n(-u) = ∫g_n for even g_n
            let t = laplace_table();
            let mirrored: Vec<f64> = y.iter().map(|v| -v).collect();
            let a = cdf_estimate(&y, t, &[x0]).unwrap()[0].value;
            let b = cdf_estimate(&mirrored, t, &[-x0]).unwrap()[0].value;
            proptest::prop_assert!((a + b - t.total).abs() < 1e-6);
        }
    }
}
