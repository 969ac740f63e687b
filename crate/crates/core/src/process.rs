//! Stationary linear processes `X_j = Σ_k c_k Z_{j-k}` with short- or
//! long-range dependent coefficients, and their exact second-order
//! structure.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ChaCha stream used for innovations; measurement noise uses a different one.
pub(crate) const PROCESS_STREAM: u64 = 0;

/// Largest `n + M` a simulation may request.
const MAX_SIMULATION_LEN: usize = 1 << 30;

/// Rule generating the moving-average weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientKind {
    /// `c_k = phi^k`, summable.
    SrdGeometric { phi: f64 },
    /// Explicit finite weights, `c_0` must be 1.
    SrdFinite { weights: Vec<f64> },
    /// `c_k = k^{-gamma}` for `k >= 1`, `gamma ∈ (1/2, 1)`.
    LrdPower { gamma: f64 },
}

impl CoefficientKind {
    pub fn is_lrd(&self) -> bool {
        matches!(self, CoefficientKind::LrdPower { .. })
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            CoefficientKind::LrdPower { gamma } => Some(*gamma),
            _ => None,
        }
    }

    /// Truncation lag used when none is given: `max(10 n, 10^5)` for the
    /// power law, the lag where `|phi|^M` falls below `1e-17` for geometric
    /// weights, and the natural length for finite weights.
    pub fn default_truncation_lag(&self, n: usize) -> usize {
        match self {
            CoefficientKind::LrdPower { .. } => (10 * n).max(100_000),
            CoefficientKind::SrdGeometric { phi } => {
                if *phi == 0.0 {
                    1
                } else {
                    ((1e-17f64).ln() / phi.abs().ln()).ceil().max(1.0) as usize
                }
            }
            CoefficientKind::SrdFinite { weights } => weights.len().saturating_sub(1),
        }
    }
}

/// Moving-average weights `c_0..c_M` together with the rule that made them.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence {
    kind: CoefficientKind,
    weights: Vec<f64>,
}

impl CoefficientSequence {
    /// Builds `c_0..c_M`. For [`CoefficientKind::SrdFinite`] the explicit
    /// weights define `M` and `truncation_lag` is ignored.
    pub fn build(kind: CoefficientKind, truncation_lag: usize) -> Result<Self> {
        let weights = match &kind {
            CoefficientKind::LrdPower { gamma } => {
                if !(*gamma > 0.5 && *gamma < 1.0) {
                    return Err(Error::domain(format!(
                        "gamma = {gamma} violates 1/2 < gamma < 1"
                    )));
                }
                if truncation_lag < 1 {
                    return Err(Error::domain("truncation lag M must be >= 1"));
                }
                let mut w = Vec::with_capacity(truncation_lag + 1);
                w.push(1.0);
                w.extend((1..=truncation_lag).map(|k| (k as f64).powf(-gamma)));
                w
            }
            CoefficientKind::SrdGeometric { phi } => {
                if !(phi.abs() < 1.0) {
                    return Err(Error::domain(format!("phi = {phi} violates |phi| < 1")));
                }
                if truncation_lag < 1 {
                    return Err(Error::domain("truncation lag M must be >= 1"));
                }
                let mut w = Vec::with_capacity(truncation_lag + 1);
                let mut c = 1.0;
                for _ in 0..=truncation_lag {
                    w.push(c);
                    c *= phi;
                }
                w
            }
            CoefficientKind::SrdFinite { weights } => {
                if weights.first() != Some(&1.0) {
                    return Err(Error::domain("explicit weights must start with c_0 = 1"));
                }
                if weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::domain("explicit weights must be finite"));
                }
                weights.clone()
            }
        };
        if !kind.is_lrd() {
            let sum: f64 = weights.iter().sum();
            if sum == 0.0 {
                return Err(Error::domain("short-range weights must satisfy sum c_k != 0"));
            }
        }
        Ok(CoefficientSequence { kind, weights })
    }

    pub fn lrd_power(gamma: f64, truncation_lag: usize) -> Result<Self> {
        Self::build(CoefficientKind::LrdPower { gamma }, truncation_lag)
    }

    pub fn geometric(phi: f64, truncation_lag: usize) -> Result<Self> {
        Self::build(CoefficientKind::SrdGeometric { phi }, truncation_lag)
    }

    pub fn finite(weights: Vec<f64>) -> Result<Self> {
        Self::build(CoefficientKind::SrdFinite { weights }, 0)
    }

    /// The i.i.d. case, `X_j = Z_j`.
    pub fn white_noise() -> Self {
        CoefficientSequence {
            kind: CoefficientKind::SrdFinite { weights: vec![1.0] },
            weights: vec![1.0],
        }
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truncation_lag(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.weights.iter().map(|c| c * c).sum()
    }
}

/// Law of the innovations `Z`. Only centred normal innovations are supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnovationLaw {
    pub variance: f64,
}

impl InnovationLaw {
    pub fn normal(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::domain(format!(
                "innovation variance must be positive, got {variance}"
            )));
        }
        Ok(InnovationLaw { variance })
    }

    pub fn standard() -> Self {
        InnovationLaw { variance: 1.0 }
    }

    /// `E Z^4 = 3 var^2`.
    pub fn fourth_moment(&self) -> f64 {
        3.0 * self.variance * self.variance
    }
}

impl Default for InnovationLaw {
    fn default() -> Self {
        Self::standard()
    }
}

/// One simulated path `x_1..x_n`.
#[derive(Debug, Clone)]
pub struct SeriesSample {
    pub x: Vec<f64>,
    pub coefficients: Arc<CoefficientSequence>,
    pub innovation: InnovationLaw,
    pub seed: u64,
}

enum Plan {
    Direct,
    Fft {
        size: usize,
        spectrum: Vec<Complex64>,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
}

/// Reusable simulator for a fixed coefficient sequence and length: the
/// transformed weights are computed once and shared by every replicate.
pub struct Simulator {
    coefficients: Arc<CoefficientSequence>,
    innovation: InnovationLaw,
    n: usize,
    plan: Plan,
}

impl Simulator {
    pub fn new(coefficients: CoefficientSequence, innovation: InnovationLaw, n: usize) -> Result<Self> {
        Self::from_shared(Arc::new(coefficients), innovation, n)
    }

    pub fn from_shared(
        coefficients: Arc<CoefficientSequence>,
        innovation: InnovationLaw,
        n: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("series length n must be >= 1"));
        }
        let m = coefficients.truncation_lag();
        let total = n
            .checked_add(m)
            .filter(|&t| t <= MAX_SIMULATION_LEN)
            .ok_or_else(|| {
                Error::Resource(format!("n + M = {n} + {m} exceeds the addressable simulation size"))
            })?;
        let direct = m <= 32 || (m as u128 + 1) * (n as u128) <= 1 << 20;
        let plan = if direct {
            Plan::Direct
        } else {
            let size = total.next_power_of_two();
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
            for (s, &c) in spectrum.iter_mut().zip(coefficients.weights()) {
                s.re = c;
            }
            forward.process(&mut spectrum);
            let scale = 1.0 / size as f64;
            for s in &mut spectrum {
                *s *= scale;
            }
            Plan::Fft {
                size,
                spectrum,
                forward,
                inverse,
            }
        };
        Ok(Simulator {
            coefficients,
            innovation,
            n,
            plan,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &Arc<CoefficientSequence> {
        &self.coefficients
    }

    /// Number of innovations consumed: `n + M` (a burn-in of `M`).
    pub fn innovations_len(&self) -> usize {
        self.n + self.coefficients.truncation_lag()
    }

    pub fn simulate(&self, seed: u64) -> SeriesSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(PROCESS_STREAM);
        let sd = self.innovation.variance.sqrt();
        let z: Vec<f64> = (0..self.innovations_len())
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                sd * v
            })
            .collect();
        let x = self.filter(&z).expect("innovation length matches by construction");
        SeriesSample {
            x,
            coefficients: self.coefficients.clone(),
            innovation: self.innovation,
            seed,
        }
    }

    /// Applies the filter to explicit innovations `z_{1-M}..z_n` (length `n + M`).
    pub fn filter(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.innovations_len() {
            return Err(Error::domain(format!(
                "expected {} innovations, got {}",
                self.innovations_len(),
                z.len()
            )));
        }
        let c = self.coefficients.weights();
        let m = c.len() - 1;
        match &self.plan {
            Plan::Direct => Ok((0..self.n)
                .map(|j| c.iter().enumerate().map(|(k, ck)| ck * z[m + j - k]).sum())
                .collect()),
            Plan::Fft {
                size,
                spectrum,
                forward,
                inverse,
            } => {
                let mut buf = vec![Complex64::new(0.0, 0.0); *size];
                for (b, &v) in buf.iter_mut().zip(z) {
                    b.re = v;
                }
                forward.process(&mut buf);
                for (b, s) in buf.iter_mut().zip(spectrum) {
                    *b *= s;
                }
                inverse.process(&mut buf);
                Ok(buf[m..m + self.n].iter().map(|v| v.re).collect())
            }
        }
    }
}

/// Simulates `x_1..x_n` for the given weights and innovation law.
pub fn simulate(
    coefficients: &CoefficientSequence,
    innovation: InnovationLaw,
    n: usize,
    seed: u64,
) -> Result<SeriesSample> {
    Ok(Simulator::new(coefficients.clone(), innovation, n)?.simulate(seed))
}

/// Exact autocovariances `rho_k = varZ Σ_j c_j c_{j+k}` of the truncated
/// process for `k = 0..=max_lag`.
pub fn autocovariance(coefficients: &CoefficientSequence, var_z: f64, max_lag: usize) -> Result<Vec<f64>> {
    let c = coefficients.weights();
    let m = c.len() - 1;
    if max_lag > m {
        return Err(Error::domain(format!(
            "max lag {max_lag} exceeds the truncation lag M = {m}"
        )));
    }
    let work = (m as u128 + 1) * (max_lag as u128 + 1);
    if work <= 1 << 24 {
        return Ok((0..=max_lag)
            .map(|k| var_z * c[..=m - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>())
            .collect());
    }
    let size = (2 * (m + 1)).next_power_of_two();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (b, &v) in buf.iter_mut().zip(c) {
        b.re = v;
    }
    forward.process(&mut buf);
    for b in &mut buf {
        *b = Complex64::new(b.norm_sqr(), 0.0);
    }
    inverse.process(&mut buf);
    let scale = var_z / size as f64;
    Ok(buf[..=max_lag].iter().map(|v| v.re * scale).collect())
}

/// `Var(Σ_{j=1}^n X_j) = n rho_0 + 2 Σ_{k=1}^{n-1} (n-k) rho_k`.
pub fn sigma_n1_sq(rho: &[f64], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    if rho.len() < n {
        return Err(Error::domain(format!(
            "need {n} autocovariances for n = {n}, got {}",
            rho.len()
        )));
    }
    let nf = n as f64;
    let cross: f64 = rho[1..n]
        .iter()
        .enumerate()
        .map(|(i, r)| (nf - (i + 1) as f64) * r)
        .sum();
    Ok(nf * rho[0] + 2.0 * cross)
}

/// `sigma_n1_sq` for the truncated process; lags beyond `M` have zero covariance.
pub fn partial_sum_variance(coefficients: &CoefficientSequence, var_z: f64, n: usize) -> Result<f64> {
    let lag = (n - 1).min(coefficients.truncation_lag());
    let mut rho = autocovariance(coefficients, var_z, lag)?;
    rho.resize(n, 0.0);
    sigma_n1_sq(&rho, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lrd_weights_follow_power_law() {
        let c = CoefficientSequence::lrd_power(0.7, 4).unwrap();
        let expected = [1.0, 1.0, 2f64.powf(-0.7), 3f64.powf(-0.7), 4f64.powf(-0.7)];
        for (a, b) in c.weights().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((c.weights()[2] - 0.6156).abs() < 1e-4);
        assert!((c.weights()[3] - 0.46346).abs() < 1e-5);
        assert!((c.weights()[4] - 0.3789).abs() < 1e-4);
    }

    #[test]
    fn geometric_and_finite_weights() {
        let c = CoefficientSequence::geometric(0.5, 3).unwrap();
        assert_eq!(c.weights(), &[1.0, 0.5, 0.25, 0.125]);
        let c = CoefficientSequence::finite(vec![1.0]).unwrap();
        assert_eq!(c.weights(), &[1.0]);
        assert_eq!(c.truncation_lag(), 0);
    }

    #[test]
    fn parameter_errors_name_the_bound() {
        let err = CoefficientSequence::lrd_power(1.2, 10).unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");
        let err = CoefficientSequence::geometric(1.0, 10).unwrap_err().to_string();
        assert!(err.contains("|phi| < 1"), "{err}");
        assert!(CoefficientSequence::lrd_power(0.7, 0).is_err());
        assert!(CoefficientSequence::finite(vec![0.5, 1.0]).is_err());
        assert!(CoefficientSequence::finite(vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn white_noise_passes_innovations_through() {
        let sim = Simulator::new(CoefficientSequence::white_noise(), InnovationLaw::standard(), 5).unwrap();
        let z = [0.3, -1.0, 2.0, 0.0, 4.5];
        assert_eq!(sim.filter(&z).unwrap(), z.to_vec());
    }

    #[test]
    fn geometric_filter_of_ones_approaches_two() {
        let c = CoefficientSequence::geometric(0.5, 60).unwrap();
        let sim = Simulator::new(c, InnovationLaw::standard(), 50).unwrap();
        let ones = vec![1.0; sim.innovations_len()];
        let x = sim.filter(&ones).unwrap();
        assert!((x[49] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fft_and_direct_filters_agree() {
        let c = CoefficientSequence::lrd_power(0.7, 3000).unwrap();
        let sim = Simulator::new(c.clone(), InnovationLaw::standard(), 1000).unwrap();
        assert!(matches!(sim.plan, Plan::Fft { .. }));
        let z: Vec<f64> = (0..sim.innovations_len()).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let fast = sim.filter(&z).unwrap();
        let w = c.weights();
        let m = w.len() - 1;
        for j in [0usize, 1, 500, 999] {
            let direct: f64 = w.iter().enumerate().map(|(k, ck)| ck * z[m + j - k]).sum();
            assert!((direct - fast[j]).abs() < 1e-10, "j={j}");
        }
    }

    #[test]
    fn simulation_is_reproducible() {
        let c = CoefficientSequence::lrd_power(0.7, 5000).unwrap();
        let a = simulate(&c, InnovationLaw::standard(), 2000, 11).unwrap();
        let b = simulate(&c, InnovationLaw::standard(), 2000, 11).unwrap();
        let d = simulate(&c, InnovationLaw::standard(), 2000, 12).unwrap();
        assert_eq!(a.x, b.x);
        assert_ne!(a.x, d.x);
    }

    #[test]
    fn white_noise_autocovariance() {
        let rho = autocovariance(&CoefficientSequence::white_noise(), 1.0, 0).unwrap();
        assert_eq!(rho, vec![1.0]);
        let c = CoefficientSequence::finite(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(autocovariance(&c, 1.0, 2).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn geometric_autocovariance_closed_form() {
        let c = CoefficientSequence::geometric(0.5, 200).unwrap();
        let rho = autocovariance(&c, 1.0, 5).unwrap();
        for (k, r) in rho.iter().enumerate() {
            let exact = 0.5f64.powi(k as i32) / (1.0 - 0.25);
            assert!((r - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_autocovariance_matches_direct_sum() {
        let c = CoefficientSequence::lrd_power(0.7, 20_000).unwrap();
        let rho = autocovariance(&c, 1.0, 1500).unwrap();
        let w = c.weights();
        for k in [0usize, 1, 100, 1500] {
            let direct: f64 = w[..w.len() - k].iter().zip(&w[k..]).map(|(a, b)| a * b).sum();
            assert!((rho[k] - direct).abs() < 1e-9 * direct, "k={k}");
        }
    }

    #[test]
    fn sigma_white_noise_and_geometric_limit() {
        let rho = vec![1.0; 1].into_iter().chain(std::iter::repeat(0.0)).take(100).collect::<Vec<_>>();
        assert_eq!(sigma_n1_sq(&rho, 100).unwrap(), 100.0);
        let c = CoefficientSequence::geometric(0.5, 200).unwrap();
        let s = partial_sum_variance(&c, 1.0, 100_000).unwrap();
        assert!((s / 100_000.0 - 4.0).abs() < 1e-4);
        assert!(sigma_n1_sq(&rho, 101).is_err());
    }

    #[test]
    fn oversized_request_is_a_resource_error() {
        let c = CoefficientSequence::white_noise();
        let err = Simulator::new(c, InnovationLaw::standard(), usize::MAX).err().unwrap();
        assert!(matches!(err, Error::Resource(_)));
    }
}
