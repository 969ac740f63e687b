//! Band-limited smoothing kernel and the deconvolution kernel
//! `g_n(x) = (1/2π) ∫ exp(-itx) φ_K(t) / φ_ε(t/h) dt`, tabulated on a
//! uniform grid together with its antiderivative.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseModel, SmoothnessClass};
use crate::quadrature::{self, GaussLegendre};
use crate::series;

/// Kernel with characteristic function `φ_K(t) = (1 - t²/d²)^m` on `[-d, d]`.
///
/// `K` is symmetric and of second order with `μ₂ = -φ_K''(0) = 2m/d²`;
/// `φ_K` vanishes to order `m` at `±d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSpec {
    pub d: f64,
    pub m: u32,
    pub mu2: f64,
    /// Coefficients of `φ_K` as a polynomial in `t`, lowest power first.
    #[serde(skip)]
    coeffs: Vec<f64>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        default_kernel()
    }
}

/// `φ_K(t) = (1 - t²)³`: `d = 1`, `m = 3`, `μ₂ = 6`.
pub fn default_kernel() -> KernelSpec {
    KernelSpec::new(1.0, 3).expect("default kernel parameters are valid")
}

impl KernelSpec {
    pub fn new(d: f64, m: u32) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::domain(format!("kernel support d must be positive, got {d}")));
        }
        if m < 1 {
            return Err(Error::domain("kernel flatness order m must be >= 1"));
        }
        let mut coeffs = vec![0.0; 2 * m as usize + 1];
        let mut binom = 1.0;
        for j in 0..=m as usize {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[2 * j] = sign * binom / d.powi(2 * j as i32);
            binom = binom * (m as usize - j) as f64 / (j + 1) as f64;
        }
        Ok(KernelSpec {
            d,
            m,
            mu2: 2.0 * m as f64 / (d * d),
            coeffs,
        })
    }

    /// `φ_K(t)`, zero outside `(-d, d)`.
    pub fn phi(&self, t: f64) -> f64 {
        self.phi_derivative(t, 0)
    }

    /// `j`-th derivative of `φ_K` (zero outside the support).
    pub fn phi_derivative(&self, t: f64, j: usize) -> f64 {
        if t.abs() >= self.d {
            return 0.0;
        }
        let mut acc = 0.0;
        for (p, &c) in self.coeffs.iter().enumerate().skip(j).rev() {
            let mut falling = 1.0;
            for q in 0..j {
                falling *= (p - q) as f64;
            }
            acc = acc * t + c * falling;
        }
        acc
    }

    /// `K(x) = (1/2π) ∫_{-d}^{d} cos(tx) φ_K(t) dt`, composite Gauss–Legendre
    /// with the panel count following the oscillation frequency.
    pub fn kernel_value(&self, x: f64) -> f64 {
        self.cosine_transform(x, |t| self.phi(t))
    }

    /// `K''(x) = -(1/2π) ∫ t² cos(tx) φ_K(t) dt`.
    pub fn kernel_second_derivative(&self, x: f64) -> f64 {
        -self.cosine_transform(x, |t| t * t * self.phi(t))
    }

    fn cosine_transform<F: Fn(f64) -> f64>(&self, x: f64, f: F) -> f64 {
        let rule = GaussLegendre::cached(24);
        let panels = ((self.d * x.abs() / PI).ceil() as usize).max(4);
        quadrature::composite(&rule, |t| (t * x).cos() * f(t), 0.0, self.d, panels) / PI
    }

    /// Warnings for the integrability conditions on `φ_K` that involve the
    /// noise exponent `β`, checked by quadrature with a shrinking cut-off at
    /// the origin. An integral is reported divergent when moving the cut-off
    /// from `1e-6` to `1e-9` changes it by more than `1e-3`.
    pub fn regularity_warnings(&self, beta: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |label: String, power: f64, j: usize| {
            let outer = self.log_integral(power, j, 1e-6);
            let inner = self.log_integral(power, j, 1e-9);
            if (inner - outer).abs() > 1e-3 * outer.abs().max(1.0) || !inner.is_finite() {
                out.push(format!("{label}: ∫|u|^{power}|φ_K^({j})(u)|du appears divergent"));
            }
        };
        if beta == 1.0 {
            check("variance regularity (β = 1)".into(), beta - 2.0, 0);
        }
        check("variance regularity".into(), beta - 1.0, 1);
        check("variance regularity".into(), beta, 2);
        if beta > 1.0 {
            for j in 0..=3 {
                check("bias regularity".into(), beta - j as f64, j);
            }
        } else {
            out.push(format!("bias regularity requires β > 1, got β = {beta}"));
        }
        out
    }

    /// `2 ∫_{cut}^{d} u^power |φ_K^{(j)}(u)| du` on a logarithmic scale.
    fn log_integral(&self, power: f64, j: usize, cut: f64) -> f64 {
        let rule = GaussLegendre::cached(32);
        let lo = cut.ln();
        let hi = self.d.ln();
        let panels = ((hi - lo) * 2.0).ceil() as usize;
        2.0 * quadrature::composite(
            &rule,
            |v| {
                let u = v.exp();
                u.powf(power) * self.phi_derivative(u, j).abs() * u
            },
            lo,
            hi,
            panels,
        )
    }
}

/// Spatial grid and frequency rule used to tabulate `g_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Grid spacing `Δx`.
    pub dx: f64,
    /// Half-width `X_max`; the grid is `[-X_max, X_max]`.
    pub x_max: f64,
    /// Size of the Gauss–Legendre rule on `[-d, d]`.
    pub nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dx: 0.005,
            x_max: 200.0,
            nodes: 4096,
        }
    }
}

impl GridConfig {
    /// Checks the grid and returns the number of points on each side of 0.
    pub fn validate(&self) -> Result<usize> {
        if !(self.dx > 0.0 && self.dx <= 0.01) {
            return Err(Error::domain(format!("grid spacing must satisfy 0 < dx <= 0.01, got {}", self.dx)));
        }
        if !(self.x_max >= 100.0 && self.x_max.is_finite()) {
            return Err(Error::domain(format!("grid half-width must be >= 100, got {}", self.x_max)));
        }
        if self.nodes < 2 {
            return Err(Error::domain("quadrature needs at least 2 nodes"));
        }
        let half = (self.x_max / self.dx).round();
        if ((half * self.dx - self.x_max) / self.x_max).abs() > 1e-12 {
            return Err(Error::domain("grid half-width must be a multiple of the spacing"));
        }
        Ok(half as usize)
    }
}

/// Tabulated deconvolution kernel `g_n`, its running integral `G_n`, and
/// summary integrals.
#[derive(Debug, Clone)]
pub struct GnTable {
    pub h: f64,
    pub dx: f64,
    pub x_max: f64,
    pub gn: Vec<f64>,
    pub big_gn: Vec<f64>,
    /// `∫|g_n|`.
    pub l1: f64,
    /// `∫g_n`, including the analytic tail beyond the grid.
    pub total: f64,
    /// Asymptotic form of `g_n` beyond the grid.
    pub tail: GnTail,
    pub noise: NoiseModel,
    pub noise_class: SmoothnessClass,
    pub kernel: KernelSpec,
}

/// Tabulates `g_n` for bandwidth `h`.
///
/// All supported noise laws have real even characteristic functions, so
/// `g_n` is the cosine transform of `φ_K(t)/φ_ε(t/h)` over `[0, d]` and is
/// even; only `x >= 0` is computed.
pub fn build_gn(kernel: &KernelSpec, noise: &NoiseModel, h: f64, grid: &GridConfig) -> Result<GnTable> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("bandwidth h must be positive, got {h}")));
    }
    let half = grid.validate()?;
    let floor = 1e-300f64.ln();
    if noise.ln_cf_abs(kernel.d / h) < floor {
        return Err(Error::NumericalRange(format!(
            "|phi_eps(t/h)| underflows below 1e-300 on [-d/h, d/h] for h = {h} ({noise}); use a larger bandwidth"
        )));
    }
    let rule = GaussLegendre::cached(grid.nodes);
    // A kink of φ_ε at 0 spoils the symmetric rule; integrate [0, d] directly.
    let nodes: Vec<(f64, f64)> = if has_kink(noise) {
        rule.mapped(0.0, kernel.d).map(|(t, w)| (t, 2.0 * w)).collect()
    } else {
        rule.even_half(kernel.d)
    };
    let weighted: Vec<(f64, f64)> = nodes
        .into_iter()
        .map(|(t, w)| (t, w * kernel.phi(t) * (-noise.ln_cf_abs(t / h)).exp() / (2.0 * PI)))
        .collect();

    const BLOCK: usize = 256;
    let dx = grid.dx;
    let positive: Vec<f64> = (0..=half)
        .step_by(BLOCK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|start| {
            let len = BLOCK.min(half + 1 - start);
            let mut acc = vec![0.0; len];
            let x0 = start as f64 * dx;
            for &(t, a) in &weighted {
                let (step_s, step_c) = (t * dx).sin_cos();
                let (mut s, mut c) = (t * x0).sin_cos();
                for v in acc.iter_mut() {
                    *v += a * c;
                    let c_next = c * step_c - s * step_s;
                    s = s * step_c + c * step_s;
                    c = c_next;
                }
            }
            acc
        })
        .collect();

    let mut gn = Vec::with_capacity(2 * half + 1);
    gn.extend(positive[1..].iter().rev());
    gn.extend(positive.iter());
    let tail = GnTail::new(kernel, noise, h);
    let x_max = half as f64 * dx;
    let outside = tail.mass_beyond(x_max);
    let total = quadrature::trapezoid(&gn, dx) + 2.0 * outside;
    let abs: Vec<f64> = gn.iter().map(|v| v.abs()).collect();
    let l1 = quadrature::trapezoid(&abs, dx) + 2.0 * tail.monotone_mass_beyond(x_max).abs();
    let mut big_gn = quadrature::cumulative_trapezoid(&gn, dx);
    if outside != 0.0 {
        big_gn.iter_mut().for_each(|v| *v += outside);
    }
    Ok(GnTable {
        h,
        dx,
        x_max,
        gn,
        big_gn,
        l1,
        total,
        tail,
        noise: *noise,
        noise_class: noise.classify(),
        kernel: kernel.clone(),
    })
}

fn has_kink(noise: &NoiseModel) -> bool {
    matches!(noise, NoiseModel::Cauchy { .. })
}

const TAIL_TERMS: usize = 32;

/// Large-`x` expansion of `g_n`.
///
/// With `ψ(t) = φ_K(t)/φ_ε(t/h)` on `[0, d]`, repeated integration by parts
/// gives
/// `π g_n(x) = Re Σ_k (-1)^k [ψ^(k)(d) e^{idx} - ψ^(k)(0)] / (ix)^{k+1}`.
/// The `t = 0` terms are non-oscillating and vanish unless `φ_ε` has a kink
/// at the origin (Cauchy), where they decay like `x⁻²`. The `t = d` terms
/// start at order `x^{-(m+1)}` because `φ_K` vanishes to order `m` there.
#[derive(Debug, Clone, PartialEq)]
pub struct GnTail {
    /// Taylor coefficients of `ψ` at `0+`.
    at_zero: Vec<f64>,
    /// Taylor coefficients of `ψ` at `d-`.
    at_support: Vec<f64>,
    d: f64,
}

impl GnTail {
    fn new(kernel: &KernelSpec, noise: &NoiseModel, h: f64) -> Self {
        let psi = |t0: f64| {
            let phi = series::shift(&kernel.coeffs, t0, TAIL_TERMS);
            let inv = match *noise {
                NoiseModel::None => vec![1.0],
                NoiseModel::Laplace { scale } => series::shift(&[1.0, 0.0, (scale / h).powi(2)], t0, 3),
                NoiseModel::SymmetricGamma { shape, scale } => series::pow(
                    &series::shift(&[1.0, 0.0, (scale / h).powi(2)], t0, 3),
                    0.5 * shape,
                    TAIL_TERMS,
                ),
                NoiseModel::Gaussian { sigma } => series::exp(
                    &series::shift(&[0.0, 0.0, 0.5 * (sigma / h).powi(2)], t0, 3),
                    TAIL_TERMS,
                ),
                NoiseModel::Cauchy { scale } => series::exp(&series::shift(&[0.0, scale / h], t0, 2), TAIL_TERMS),
            };
            // k! a_k
            let mut out = series::mul(&phi, &inv);
            let mut fact = 1.0;
            for (k, v) in out.iter_mut().enumerate() {
                if k > 0 {
                    fact *= k as f64;
                }
                *v *= fact;
            }
            out
        };
        GnTail {
            at_zero: psi(0.0),
            at_support: psi(kernel.d),
            d: kernel.d,
        }
    }

    /// Non-oscillating part of `∫_X^∞ g_n`.
    pub fn monotone_mass_beyond(&self, x: f64) -> f64 {
        // ∫_X^∞ x^{-(k+1)} = X^{-k}/k; the k = 0 term is purely imaginary.
        let mut sum = 0.0;
        for (k, &dk) in self.at_zero.iter().enumerate().skip(1) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let c = Complex64::i().powi(-(k as i32 + 1)) * (sign * dk);
            sum -= c.re * x.powi(-(k as i32)) / k as f64;
        }
        sum / PI
    }

    /// `∫_X^∞ g_n` from the expansion; accurate for `X >> 1/h`-scale
    /// oscillations of the endpoint terms.
    pub fn mass_beyond(&self, x: f64) -> f64 {
        // ∫_X^∞ e^{idx} x^{-p} dx = -e^{idX} Σ_j (p)_j X^{-p-j} / (id)^{j+1}
        let id = Complex64::new(0.0, self.d);
        let phase = Complex64::from_polar(1.0, self.d * x);
        let mut osc = Complex64::new(0.0, 0.0);
        for (k, &dk) in self.at_support.iter().enumerate() {
            if dk == 0.0 {
                continue;
            }
            let p = (k + 1) as f64;
            let mut integral = Complex64::new(0.0, 0.0);
            let mut term = -phase * x.powf(-p) / id;
            let mut last = f64::INFINITY;
            for j in 0..TAIL_TERMS {
                let size = term.norm();
                if size > last || size == 0.0 {
                    break;
                }
                integral += term;
                last = size;
                term = term * (p + j as f64) / (x * id);
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            osc += Complex64::i().powi(-(k as i32 + 1)) * (sign * dk) * integral;
        }
        self.monotone_mass_beyond(x) + osc.re / PI
    }
}

impl GnTable {
    pub fn len(&self) -> usize {
        self.gn.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gn.is_empty()
    }

    pub fn x_at(&self, i: usize) -> f64 {
        (i as f64 - ((self.gn.len() - 1) / 2) as f64) * self.dx
    }

    pub fn covers(&self, u: f64) -> bool {
        u.abs() <= self.x_max
    }

    /// `g_n(u)` by four-point Lagrange interpolation; zero off the grid.
    pub fn gn_at(&self, u: f64) -> f64 {
        if !self.covers(u) {
            return 0.0;
        }
        interpolate(&self.gn, (u + self.x_max) / self.dx)
    }

    /// `G_n(u)`; off the grid the analytic tail is used.
    pub fn big_gn_at(&self, u: f64) -> f64 {
        if u < -self.x_max {
            self.tail.mass_beyond(-u)
        } else if u > self.x_max {
            self.total - self.tail.mass_beyond(u)
        } else {
            interpolate(&self.big_gn, (u + self.x_max) / self.dx)
        }
    }

    /// `max |x³ g_n(x)|` over `X_max/2 <= |x| <= X_max`.
    pub fn tail_moment(&self) -> f64 {
        let centre = (self.gn.len() - 1) / 2;
        let from = centre + centre / 2;
        (from..self.gn.len())
            .map(|i| {
                let x = self.x_at(i);
                (x.powi(3) * self.gn[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `max |x³ g_n(x)|` over the ten outermost grid points on each side.
    pub fn outer_tail_moment(&self) -> f64 {
        let n = self.gn.len();
        (0..10)
            .chain(n - 10..n)
            .map(|i| (self.x_at(i).powi(3) * self.gn[i]).abs())
            .fold(0.0, f64::max)
    }

    /// `∫ g_n(v) f(x0 - h v) dv` by the trapezoid rule on the table grid.
    pub fn smooth_against<F: Fn(f64) -> f64 + Sync>(&self, x0: f64, f: F) -> f64 {
        let values: Vec<f64> = (0..self.gn.len())
            .into_par_iter()
            .map(|i| self.gn[i] * f(x0 - self.h * self.x_at(i)))
            .collect();
        quadrature::trapezoid(&values, self.dx)
    }

    /// `h ∫ G_n(v) f(x0 - h v) dv`, where `f` is a density with distribution
    /// function value `cdf_at_x0 = F(x0)`.
    pub fn smooth_antiderivative_against<F: Fn(f64) -> f64 + Sync>(&self, x0: f64, f: F, cdf_at_x0: f64) -> f64 {
        // G_n tends to `total` on the right, so integrate G_n - total·1{v>0} on
        // the grid and add total·F(x0) for the step.
        let centre = (self.gn.len() - 1) / 2;
        let values: Vec<f64> = (0..self.gn.len())
            .into_par_iter()
            .map(|i| {
                let step = match i.cmp(&centre) {
                    std::cmp::Ordering::Greater => self.total,
                    std::cmp::Ordering::Equal => 0.5 * self.total,
                    std::cmp::Ordering::Less => 0.0,
                };
                (self.big_gn[i] - step) * f(x0 - self.h * self.x_at(i))
            })
            .collect();
        self.h * quadrature::trapezoid(&values, self.dx) + self.total * cdf_at_x0
    }
}

fn interpolate(values: &[f64], pos: f64) -> f64 {
    let last = values.len() - 1;
    let i = (pos.floor() as usize).min(last.saturating_sub(1));
    let f = pos - i as f64;
    if i == 0 || i + 2 > last {
        return values[i] + f * (values[(i + 1).min(last)] - values[i]);
    }
    let (a, b, c, d) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
    // cubic through (-1, a), (0, b), (1, c), (2, d)
    let fm1 = f - 1.0;
    let fm2 = f - 2.0;
    let fp1 = f + 1.0;
    -a * f * fm1 * fm2 / 6.0 + b * fp1 * fm1 * fm2 / 2.0 - c * fp1 * f * fm2 / 2.0 + d * fp1 * f * fm1 / 6.0
}

/// Regression slope of `ln ‖g_n‖₁` against `ln(1/h)`.
pub fn l1_norm_scaling(kernel: &KernelSpec, noise: &NoiseModel, h_list: &[f64], grid: &GridConfig) -> Result<f64> {
    if let SmoothnessClass::Supersmooth { .. } = noise.classify() {
        return Err(Error::UnsupportedClass(format!(
            "{noise} is supersmooth; ‖g_n‖₁ has no polynomial rate in h"
        )));
    }
    let mut hs = h_list.to_vec();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    if hs.len() < 2 || hs[hs.len() - 1] / hs[0] < 2.0 {
        return Err(Error::domain("h_list needs at least two bandwidths spanning a factor of 2"));
    }
    let points = hs
        .iter()
        .map(|&h| build_gn(kernel, noise, h, grid).map(|t| ((1.0 / h).ln(), t.l1.ln())))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::stats::least_squares(&points).slope)
}

/// `D₁ = (1/(2π B₁²)) ∫ |t|^{2β} φ_K²(t) dt`. The degenerate class uses
/// `β = 0`, `B₁ = 1`, giving the kernel-density constant `∫K²`.
pub fn d1_constant(kernel: &KernelSpec, class: &SmoothnessClass) -> Result<f64> {
    let (beta, b1) = match *class {
        SmoothnessClass::OrdinarySmooth { beta, b1 } => (beta, b1),
        SmoothnessClass::Degenerate => (0.0, 1.0),
        SmoothnessClass::Supersmooth { .. } => {
            return Err(Error::UnsupportedClass(
                "D1 is defined for ordinary smooth noise only".into(),
            ))
        }
    };
    Ok(d1_for(kernel, beta, b1))
}

/// `D₁` for explicit `β`, `B₁`.
pub fn d1_for(kernel: &KernelSpec, beta: f64, b1: f64) -> f64 {
    let rule = GaussLegendre::cached(256);
    let integral: f64 = rule
        .even_half(kernel.d)
        .into_iter()
        .map(|(t, w)| w * t.abs().powf(2.0 * beta) * kernel.phi(t).powi(2))
        .sum();
    integral / (2.0 * PI * b1 * b1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_kernel_constants() {
        let k = default_kernel();
        assert_eq!(k.phi(0.0), 1.0);
        assert!((k.phi(0.5) - 0.421875).abs() < 1e-15);
        assert_eq!(k.mu2, 6.0);
        assert_eq!(k.phi(1.0), 0.0);
        assert_eq!(k.phi(-1.5), 0.0);
        // finite-difference cross-check of μ₂ = -φ''(0)
        let e = 1e-4;
        let fd = -(k.phi(e) - 2.0 * k.phi(0.0) + k.phi(-e)) / (e * e);
        assert!((fd - 6.0).abs() < 1e-6);
        assert!((k.phi_derivative(0.0, 2) + 6.0).abs() < 1e-14);
        assert!(k.phi_derivative(0.0, 1).abs() < 1e-15);
    }

    #[test]
    fn phi_derivatives_match_differences() {
        let k = default_kernel();
        let e = 1e-5;
        for &t in &[0.1, 0.4, 0.8] {
            for j in 1..=3 {
                let fd = (k.phi_derivative(t + e, j - 1) - k.phi_derivative(t - e, j - 1)) / (2.0 * e);
                assert!((fd - k.phi_derivative(t, j)).abs() < 1e-6, "t={t} j={j}");
            }
        }
    }

    #[test]
    fn kernel_at_zero() {
        // (1/2π) · 32/35
        let k0 = default_kernel().kernel_value(0.0);
        assert!((k0 - 32.0 / 35.0 / (2.0 * PI)).abs() < 1e-14);
        assert!((k0 - 0.14551).abs() < 1e-5);
    }

    #[test]
    fn kernel_integrates_to_one_with_second_moment_six() {
        let k = default_kernel();
        let dx = 0.01;
        let xs: Vec<f64> = (-40_000..=40_000).map(|i| i as f64 * dx).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| k.kernel_value(x)).collect();
        assert!((quadrature::trapezoid(&vals, dx) - 1.0).abs() < 1e-6);
        // second moment: K(u) u² ~ cos(u)/u² tail, so add the analytic tail
        // correction of the truncated window, which is oscillatory and O(1/L²).
        let m2: Vec<f64> = xs.iter().zip(&vals).map(|(x, v)| x * x * v).collect();
        assert!((quadrature::trapezoid(&m2, dx) - 6.0).abs() < 1e-3);
    }

    #[test]
    fn gn_without_noise_is_the_kernel() {
        let k = default_kernel();
        let t = build_gn(&k, &NoiseModel::None, 0.7, &GridConfig::default()).unwrap();
        for &x in &[0.0, 0.005, 1.3, 17.0, -55.555, 199.0] {
            let i = ((x + t.x_max) / t.dx).round() as usize;
            let x = t.x_at(i);
            assert!((t.gn[i] - k.kernel_value(x)).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn gn_is_even_and_normalized() {
        let t = build_gn(&default_kernel(), &NoiseModel::laplace(1.0).unwrap(), 0.3, &GridConfig::default()).unwrap();
        let n = t.len();
        for i in (0..n / 2).step_by(997) {
            assert_eq!(t.gn[i], t.gn[n - 1 - i]);
        }
        assert!((t.total - 1.0).abs() < 1e-6);
        assert!(t.big_gn[0].abs() < 1e-4);
        assert!((t.big_gn[n - 1] - t.total).abs() < 1e-4);
    }

    #[test]
    fn tail_expansion_matches_table() {
        let cases = [
            (NoiseModel::cauchy(1.0).unwrap(), 0.3),
            (NoiseModel::cauchy(1.0).unwrap(), 0.1),
            (NoiseModel::laplace(1.0).unwrap(), 0.1),
            (NoiseModel::gaussian(1.0).unwrap(), 0.3),
            (NoiseModel::symmetric_gamma(1.0, 1.0).unwrap(), 0.1),
        ];
        for (noise, h) in cases {
            let t = build_gn(&default_kernel(), &noise, h, &GridConfig::default()).unwrap();
            assert!((t.total - 1.0).abs() < 1e-6, "{noise} h={h} total={}", t.total);
            // ∫_150^∞ g = ∫_150^200 g (table) + ∫_200^∞ g
            let i = ((150.0 + t.x_max) / t.dx).round() as usize;
            let on_grid = quadrature::trapezoid(&t.gn[i..], t.dx);
            let err = (t.tail.mass_beyond(150.0) - on_grid - t.tail.mass_beyond(t.x_max)).abs();
            // gamma noise adds an e^{-h x} branch-point term the expansion omits
            assert!(err < 1e-7, "{noise} h={h} err={err}");
        }
        let smooth = build_gn(&default_kernel(), &NoiseModel::laplace(1.0).unwrap(), 0.5, &GridConfig::default()).unwrap();
        assert_eq!(smooth.tail.monotone_mass_beyond(200.0), 0.0);
        let kinked = build_gn(&default_kernel(), &NoiseModel::cauchy(1.0).unwrap(), 1.0, &GridConfig::default()).unwrap();
        assert!(kinked.big_gn_at(-1e4) < 0.0 && kinked.big_gn_at(-1e4) > kinked.big_gn[0]);
    }

    #[test]
    fn underflow_is_reported() {
        let err = build_gn(&default_kernel(), &NoiseModel::gaussian(1.0).unwrap(), 0.02, &GridConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::NumericalRange(_)));
    }

    #[test]
    fn grid_preconditions() {
        let bad = GridConfig {
            dx: 0.02,
            ..GridConfig::default()
        };
        assert!(build_gn(&default_kernel(), &NoiseModel::None, 1.0, &bad).is_err());
        assert!(build_gn(&default_kernel(), &NoiseModel::None, 0.0, &GridConfig::default()).is_err());
    }

    #[test]
    fn d1_values() {
        let k = default_kernel();
        let laplace = NoiseModel::laplace(1.0).unwrap().classify();
        let d1 = d1_constant(&k, &laplace).unwrap();
        // B(5/2, 7) / (2π), B(5/2,7) = Γ(5/2)Γ(7)/Γ(19/2)
        let beta = (crate::special::ln_gamma(2.5) + crate::special::ln_gamma(7.0) - crate::special::ln_gamma(9.5)).exp();
        assert!((d1 - beta / (2.0 * PI)).abs() < 1e-15);
        assert!((d1 - 1.277e-3).abs() < 1e-6);
        let wide = d1_constant(&k, &NoiseModel::laplace(2.0).unwrap().classify()).unwrap();
        assert!((wide / d1 - 16.0).abs() < 1e-12);
        let kde = d1_for(&k, 0.0, 1.0);
        let direct = GaussLegendre::new(64).integrate(|t| k.phi(t).powi(2), -1.0, 1.0) / (2.0 * PI);
        assert!((kde - direct).abs() < 1e-15);
        assert!(d1_constant(&k, &NoiseModel::gaussian(1.0).unwrap().classify()).is_err());
    }

    #[test]
    fn regularity_diagnostics() {
        let k = default_kernel();
        assert!(k.regularity_warnings(2.0).is_empty(), "{:?}", k.regularity_warnings(2.0));
        let w = k.regularity_warnings(1.0);
        assert!(w.iter().any(|m| m.contains("(β = 1)")), "{w:?}");
    }

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let v: Vec<f64> = (0..10).map(|i| (i as f64).powi(3) - 2.0 * i as f64).collect();
        let p = 4.3f64;
        assert!((interpolate(&v, p) - (p.powi(3) - 2.0 * p)).abs() < 1e-12);
    }
}
