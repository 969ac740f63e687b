//! Dependence-regime classification, bandwidth rules, CLT normalisations and
//! plug-in confidence intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::normal_quantile;

/// Tolerance within which `γ` is considered equal to the threshold.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Floor applied to a non-positive plug-in density in [`confidence_interval`].
pub const PLUGIN_DENSITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Moderate,
    Strong,
    Boundary,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Moderate => "moderate",
            Regime::Strong => "strong",
            Regime::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthRule {
    IidLike,
    /// `iid-like` divided by `ln n`.
    IidUndersmoothed,
    StrongLrd,
    CdfLrd,
    Supersmooth,
    PilotKde,
    PluginOptimal,
    Fixed,
}

impl BandwidthRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            BandwidthRule::IidLike => "iid-like",
            BandwidthRule::IidUndersmoothed => "iid-undersmoothed",
            BandwidthRule::StrongLrd => "strong-lrd",
            BandwidthRule::CdfLrd => "cdf-lrd",
            BandwidthRule::Supersmooth => "supersmooth",
            BandwidthRule::PilotKde => "pilot-kde",
            BandwidthRule::PluginOptimal => "plugin-optimal",
            BandwidthRule::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthPlan {
    pub h: f64,
    pub rule: BandwidthRule,
    /// Dependence regime the rule was chosen for; `None` for rules that do
    /// not depend on it.
    pub regime: Option<Regime>,
    pub c: f64,
    pub theta: Option<f64>,
}

impl BandwidthPlan {
    pub fn is_boundary(&self) -> bool {
        self.regime == Some(Regime::Boundary)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.5 && gamma < 1.0) {
        return Err(Error::domain(format!("gamma must lie in (1/2, 1), got {gamma}")));
    }
    Ok(())
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("bandwidth constant must be positive, got {c}")));
    }
    Ok(())
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::domain(format!("sample size must be at least {min}, got {n}")));
    }
    Ok(())
}

/// `γ* = (4(2+β)+1)/(4(2+β)+2)`.
pub fn regime_threshold(beta: f64) -> f64 {
    let q = 4.0 * (2.0 + beta);
    (q + 1.0) / (q + 2.0)
}

pub fn classify_regime(gamma: f64, beta: f64) -> Result<Regime> {
    check_gamma(gamma)?;
    let star = regime_threshold(beta);
    Ok(if (gamma - star).abs() < BOUNDARY_TOLERANCE {
        Regime::Boundary
    } else if gamma > star {
        Regime::Moderate
    } else {
        Regime::Strong
    })
}

/// Whether the i.i.d.-rate bandwidth `n^{-1/(5+2β)}` satisfies
/// `h σ²_{n,1}/n → 0` under `σ²_{n,1} ∝ n^{3-2γ}`, checked on exponents.
pub fn iid_bandwidth_admissible(gamma: f64, beta: f64) -> bool {
    -1.0 / (5.0 + 2.0 * beta) < -(2.0 - 2.0 * gamma)
}

/// Density bandwidth. `gamma = None` means short-range dependence, which is
/// handled like the moderate regime.
pub fn bw_density(n: usize, beta: f64, gamma: Option<f64>, c: f64) -> Result<BandwidthPlan> {
    check_n(n, 2)?;
    check_c(c)?;
    let regime = match gamma {
        Some(g) => classify_regime(g, beta)?,
        None => Regime::Moderate,
    };
    let nf = n as f64;
    let (h, rule) = match regime {
        Regime::Moderate | Regime::Boundary => (c * nf.powf(-1.0 / (5.0 + 2.0 * beta)), BandwidthRule::IidLike),
        Regime::Strong => {
            let g = gamma.expect("strong regime requires gamma");
            (c * nf.powf(-(2.0 * g - 1.0) / (2.0 * (2.0 + beta))), BandwidthRule::StrongLrd)
        }
    };
    Ok(BandwidthPlan {
        h,
        rule,
        regime: Some(regime),
        c,
        theta: None,
    })
}

/// `C n^{-1/(5+2β)} / ln n`, the undersmoothed choice behind the plug-in
/// confidence interval.
pub fn bw_undersmoothed(n: usize, beta: f64, c: f64) -> Result<BandwidthPlan> {
    check_n(n, 3)?;
    check_c(c)?;
    let nf = n as f64;
    Ok(BandwidthPlan {
        h: c * nf.powf(-1.0 / (5.0 + 2.0 * beta)) / nf.ln(),
        rule: BandwidthRule::IidUndersmoothed,
        regime: Some(Regime::Moderate),
        c,
        theta: None,
    })
}

/// `C (σ²_{n,1}/n²)^{1/(2(β+2))}`.
pub fn bw_cdf(n: usize, beta: f64, sigma_n1_sq: f64, c: f64) -> Result<BandwidthPlan> {
    check_n(n, 1)?;
    check_c(c)?;
    if !(sigma_n1_sq > 0.0) {
        return Err(Error::domain(format!("partial-sum variance must be positive, got {sigma_n1_sq}")));
    }
    let nf = n as f64;
    Ok(BandwidthPlan {
        h: c * (sigma_n1_sq / (nf * nf)).powf(1.0 / (2.0 * (beta + 2.0))),
        rule: BandwidthRule::CdfLrd,
        regime: None,
        c,
        theta: None,
    })
}

/// `d (2a / ((1-θ) ln n))^{1/β}` with `θ ∈ (2-2γ, 1)`; without `γ` the lower
/// end is 0.
pub fn bw_supersmooth(n: usize, d: f64, a: f64, beta: f64, theta: f64, gamma: Option<f64>) -> Result<BandwidthPlan> {
    check_n(n, 3)?;
    let lower = match gamma {
        Some(g) => {
            check_gamma(g)?;
            2.0 - 2.0 * g
        }
        None => 0.0,
    };
    if !(theta > lower && theta < 1.0) {
        return Err(Error::domain(format!(
            "theta must lie in (2 - 2*gamma, 1) = ({lower}, 1) for the supersmooth bandwidth, got {theta}"
        )));
    }
    if !(a > 0.0 && beta > 0.0 && d > 0.0) {
        return Err(Error::domain("supersmooth constants a, beta and d must be positive"));
    }
    let h = d * (2.0 * a / ((1.0 - theta) * (n as f64).ln())).powf(1.0 / beta);
    Ok(BandwidthPlan {
        h,
        rule: BandwidthRule::Supersmooth,
        regime: None,
        c: d,
        theta: Some(theta),
    })
}

/// Pilot bandwidth `C n^{-1/5}` for the kernel estimate of `f_Y`.
pub fn bw_pilot_kde(n: usize, c: f64) -> Result<BandwidthPlan> {
    check_n(n, 2)?;
    check_c(c)?;
    Ok(BandwidthPlan {
        h: c * (n as f64).powf(-0.2),
        rule: BandwidthRule::PilotKde,
        regime: None,
        c,
        theta: None,
    })
}

/// Oracle inputs of the two-term density MSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluginInputs {
    pub f_y: f64,
    pub f_xx: f64,
    pub mu2: f64,
    pub d1: f64,
    pub n: usize,
    pub beta: f64,
}

/// Exact minimiser of `(½ f'' μ₂)² h⁴ + D₁ f_Y n⁻¹ h^{-(2β+1)}`.
pub fn bw_plugin_optimal(p: &PluginInputs) -> Result<BandwidthPlan> {
    check_n(p.n, 1)?;
    if p.f_xx == 0.0 {
        return Err(Error::Degenerate(
            "f''(x0) = 0: the squared-bias term vanishes and the MSE has no interior minimiser".into(),
        ));
    }
    if !(p.f_y > 0.0 && p.d1 > 0.0) {
        return Err(Error::domain("f_Y(x0) and D1 must be positive"));
    }
    let a = (0.5 * p.f_xx * p.mu2).powi(2);
    let b = p.d1 * p.f_y;
    let h = ((2.0 * p.beta + 1.0) * b / (4.0 * a * p.n as f64)).powf(1.0 / (2.0 * p.beta + 5.0));
    Ok(BandwidthPlan {
        h,
        rule: BandwidthRule::PluginOptimal,
        regime: Some(Regime::Moderate),
        c: h * (p.n as f64).powf(1.0 / (2.0 * p.beta + 5.0)),
        theta: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CltTarget {
    /// Density under short-range or moderate long-range dependence.
    DensityIid,
    /// Density under strong long-range dependence.
    DensityLrd,
    Cdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceFormula {
    D1Fy,
    FyPrimeSq,
    FySq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltScaling {
    pub target: CltTarget,
    pub rate_factor: f64,
    pub asym_var: f64,
    pub variance_formula: VarianceFormula,
    /// The limit law is degenerate (`asym_var = 0`).
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltInputs {
    pub n: usize,
    pub h: f64,
    pub beta: f64,
    pub sigma_n1_sq: Option<f64>,
    pub d1: f64,
    pub f_y: f64,
    pub f_y_prime: f64,
}

pub fn clt_scaling(target: CltTarget, p: &CltInputs) -> Result<CltScaling> {
    if !(p.h > 0.0) || p.n == 0 {
        return Err(Error::domain("clt scaling needs n >= 1 and h > 0"));
    }
    let n = p.n as f64;
    let mut warnings = Vec::new();
    let lrd = |warnings: &mut Vec<String>| -> Result<f64> {
        let s2 = p
            .sigma_n1_sq
            .filter(|s| *s > 0.0)
            .ok_or_else(|| Error::domain("long-range scaling requires a positive partial-sum variance"))?;
        if target == CltTarget::DensityLrd && p.h * s2 / n < 0.1 {
            warnings.push(format!(
                "regime mismatch: h*sigma^2/n = {:.3e} < 0.1, the i.i.d. term dominates",
                p.h * s2 / n
            ));
        }
        Ok(n * p.h.powf(p.beta) / s2.sqrt())
    };
    let (rate_factor, asym_var, variance_formula) = match target {
        CltTarget::DensityIid => (n.sqrt() * p.h.powf(p.beta + 0.5), p.d1 * p.f_y, VarianceFormula::D1Fy),
        CltTarget::DensityLrd => (lrd(&mut warnings)?, p.f_y_prime * p.f_y_prime, VarianceFormula::FyPrimeSq),
        CltTarget::Cdf => (lrd(&mut warnings)?, p.f_y * p.f_y, VarianceFormula::FySq),
    };
    if !(rate_factor > 0.0 && rate_factor.is_finite()) {
        return Err(Error::NumericalRange(format!("rate factor {rate_factor} is not a positive number")));
    }
    let degenerate = asym_var == 0.0;
    if degenerate {
        warnings.push("asymptotic variance is zero; the limit is degenerate at this point".into());
    }
    Ok(CltScaling {
        target,
        rate_factor,
        asym_var,
        variance_formula,
        degenerate,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub half_width: f64,
    pub warning: Option<String>,
}

/// Plug-in normal interval `f̂ ± z sqrt(D₁ f̂_Y(x0)) / (n^{1/2} h^{β+1/2})`.
pub fn confidence_interval(
    fhat: f64,
    kde_fy: f64,
    d1: f64,
    n: usize,
    h: f64,
    beta: f64,
    level: f64,
) -> Result<ConfidenceInterval> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::domain(format!("confidence level must lie in [0, 1), got {level}")));
    }
    if !(h > 0.0) || n == 0 {
        return Err(Error::domain("confidence interval needs n >= 1 and h > 0"));
    }
    let (fy, warning) = if kde_fy > 0.0 {
        (kde_fy, None)
    } else {
        (
            PLUGIN_DENSITY_FLOOR,
            Some(format!("plug-in density {kde_fy} is not positive; floored at {PLUGIN_DENSITY_FLOOR}")),
        )
    };
    let z = if level == 0.0 { 0.0 } else { normal_quantile(0.5 * (1.0 + level)) };
    let half_width = z * (d1 * fy).sqrt() / ((n as f64).sqrt() * h.powf(beta + 0.5));
    Ok(ConfidenceInterval {
        lo: fhat - half_width,
        hi: fhat + half_width,
        half_width,
        warning,
    })
}
