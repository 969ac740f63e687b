//! Measurement-error laws with closed-form characteristic functions,
//! samplers, and their smoothness classification.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::special;

/// ChaCha stream reserved for measurement noise.
pub(crate) const NOISE_STREAM: u64 = 1;

/// A symmetric measurement-error law `ε`.
///
/// Every law in the catalogue is symmetric about zero, so its characteristic
/// function is real, even and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NoiseModel {
    /// No measurement error; the observations are the process itself.
    None,
    /// Density `exp(-|x|/s) / (2s)`, `φ(t) = 1 / (1 + s²t²)`.
    Laplace { scale: f64 },
    /// Difference of two independent `Gamma(k/2, s)` variables,
    /// `φ(t) = (1 + s²t²)^{-k/2}`.
    SymmetricGamma { shape: f64, scale: f64 },
    /// `N(0, σ²)`, `φ(t) = exp(-σ²t²/2)`.
    Gaussian { sigma: f64 },
    /// `φ(t) = exp(-s|t|)`.
    Cauchy { scale: f64 },
}

/// Decay class of `|φ_ε|` at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "tag")]
pub enum SmoothnessClass {
    /// `|t|^β |φ_ε(t)| → B1`.
    OrdinarySmooth { beta: f64, b1: f64 },
    /// `B1 |t|^β0 exp(-a|t|^β) ≤ |φ_ε(t)| ≤ B2 |t|^β0 exp(-a|t|^β)`.
    Supersmooth {
        a: f64,
        beta: f64,
        beta0: f64,
        b1: f64,
        b2: f64,
    },
    /// `φ_ε ≡ 1`.
    Degenerate,
}

impl SmoothnessClass {
    pub fn beta(&self) -> Option<f64> {
        match self {
            SmoothnessClass::OrdinarySmooth { beta, .. } | SmoothnessClass::Supersmooth { beta, .. } => {
                Some(*beta)
            }
            SmoothnessClass::Degenerate => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SmoothnessClass::OrdinarySmooth { .. } => "ordinary-smooth",
            SmoothnessClass::Supersmooth { .. } => "supersmooth",
            SmoothnessClass::Degenerate => "degenerate",
        }
    }

    pub fn is_ordinary(&self) -> bool {
        matches!(self, SmoothnessClass::OrdinarySmooth { .. })
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

impl NoiseModel {
    pub fn laplace(scale: f64) -> Result<Self> {
        Ok(NoiseModel::Laplace {
            scale: positive("laplace scale", scale)?,
        })
    }

    pub fn symmetric_gamma(shape: f64, scale: f64) -> Result<Self> {
        Ok(NoiseModel::SymmetricGamma {
            shape: positive("gamma shape", shape)?,
            scale: positive("gamma scale", scale)?,
        })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Ok(NoiseModel::Gaussian {
            sigma: positive("gaussian sigma", sigma)?,
        })
    }

    pub fn cauchy(scale: f64) -> Result<Self> {
        Ok(NoiseModel::Cauchy {
            scale: positive("cauchy scale", scale)?,
        })
    }

    /// Characteristic function value; real for every supported law.
    pub fn cf_real(&self, t: f64) -> f64 {
        match *self {
            NoiseModel::None => 1.0,
            NoiseModel::Laplace { scale } => 1.0 / (1.0 + scale * scale * t * t),
            NoiseModel::SymmetricGamma { shape, scale } => (1.0 + scale * scale * t * t).powf(-0.5 * shape),
            NoiseModel::Gaussian { sigma } => (-0.5 * sigma * sigma * t * t).exp(),
            NoiseModel::Cauchy { scale } => (-scale * t.abs()).exp(),
        }
    }

    pub fn cf(&self, t: f64) -> Complex64 {
        Complex64::new(self.cf_real(t), 0.0)
    }

    /// `ln |φ_ε(t)|`, evaluated without underflow.
    pub fn ln_cf_abs(&self, t: f64) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Laplace { scale } => -(scale * scale * t * t).ln_1p(),
            NoiseModel::SymmetricGamma { shape, scale } => -0.5 * shape * (scale * scale * t * t).ln_1p(),
            NoiseModel::Gaussian { sigma } => -0.5 * sigma * sigma * t * t,
            NoiseModel::Cauchy { scale } => -scale * t.abs(),
        }
    }

    /// Probability density. The degenerate law returns `+∞` at 0 and 0 elsewhere.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            NoiseModel::None => {
                if x == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            NoiseModel::Laplace { scale } => (-x.abs() / scale).exp() / (2.0 * scale),
            NoiseModel::SymmetricGamma { shape, scale } => symmetric_gamma_density(shape, scale, x),
            NoiseModel::Gaussian { sigma } => special::normal_pdf(x / sigma) / sigma,
            NoiseModel::Cauchy { scale } => 1.0 / (PI * scale * (1.0 + (x / scale).powi(2))),
        }
    }

    /// Variance of the law (`+∞` for Cauchy).
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Laplace { scale } => 2.0 * scale * scale,
            NoiseModel::SymmetricGamma { shape, scale } => shape * scale * scale,
            NoiseModel::Gaussian { sigma } => sigma * sigma,
            NoiseModel::Cauchy { .. } => f64::INFINITY,
        }
    }

    /// Scale parameter (`s` or `σ`); `None` for the degenerate law.
    pub fn scale(&self) -> Option<f64> {
        match *self {
            NoiseModel::None => None,
            NoiseModel::Laplace { scale }
            | NoiseModel::SymmetricGamma { scale, .. }
            | NoiseModel::Cauchy { scale } => Some(scale),
            NoiseModel::Gaussian { sigma } => Some(sigma),
        }
    }

    pub fn classify(&self) -> SmoothnessClass {
        match *self {
            NoiseModel::None => SmoothnessClass::Degenerate,
            NoiseModel::Laplace { scale } => SmoothnessClass::OrdinarySmooth {
                beta: 2.0,
                b1: scale.powi(-2),
            },
            NoiseModel::SymmetricGamma { shape, scale } => SmoothnessClass::OrdinarySmooth {
                beta: shape,
                b1: scale.powf(-shape),
            },
            NoiseModel::Gaussian { sigma } => SmoothnessClass::Supersmooth {
                a: 0.5 * sigma * sigma,
                beta: 2.0,
                beta0: 0.0,
                b1: 1.0,
                b2: 1.0,
            },
            NoiseModel::Cauchy { scale } => SmoothnessClass::Supersmooth {
                a: scale,
                beta: 1.0,
                beta0: 0.0,
                b1: 1.0,
                b2: 1.0,
            },
        }
    }

    /// Confirms the hard-coded classification against the characteristic
    /// function: `|t|^β|φ(t)|` at `t = 1000` within 1% of `B1` for ordinary
    /// smooth laws, `ln|φ(t)| / |t|^β` at `t = 30` within 2% of `-a` for
    /// supersmooth ones.
    pub fn check_classification(&self) -> Result<()> {
        match self.classify() {
            SmoothnessClass::OrdinarySmooth { beta, b1 } => {
                let t: f64 = 1e3;
                let v = (beta * t.ln() + self.ln_cf_abs(t)).exp();
                if ((v - b1) / b1).abs() > 0.01 {
                    return Err(Error::Data(format!(
                        "{self}: |t|^beta |phi(t)| = {v} at t = 1000, expected {b1}"
                    )));
                }
            }
            SmoothnessClass::Supersmooth { a, beta, .. } => {
                let t: f64 = 30.0;
                let v = self.ln_cf_abs(t) / t.powf(beta);
                if ((v + a) / a).abs() > 0.02 {
                    return Err(Error::Data(format!(
                        "{self}: ln|phi(t)|/|t|^beta = {v} at t = 30, expected {}",
                        -a
                    )));
                }
            }
            SmoothnessClass::Degenerate => {}
        }
        Ok(())
    }

    /// `n` i.i.d. draws. Uses its own ChaCha stream, so sharing a seed with a
    /// process simulation never reuses its random numbers.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NOISE_STREAM);
        match *self {
            NoiseModel::None => vec![0.0; n],
            NoiseModel::Laplace { scale } => (0..n)
                .map(|_| {
                    let a: f64 = Exp1.sample(&mut rng);
                    let b: f64 = Exp1.sample(&mut rng);
                    scale * (a - b)
                })
                .collect(),
            NoiseModel::SymmetricGamma { shape, scale } => {
                let g = Gamma::new(0.5 * shape, scale).expect("validated gamma parameters");
                (0..n).map(|_| g.sample(&mut rng) - g.sample(&mut rng)).collect()
            }
            NoiseModel::Gaussian { sigma } => (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sigma * z
                })
                .collect(),
            NoiseModel::Cauchy { scale } => {
                let c = Cauchy::new(0.0, scale).expect("validated cauchy scale");
                (0..n).map(|_| c.sample(&mut rng)).collect()
            }
        }
    }
}

/// Variance-gamma density with `λ = k/2`, `α = 1/s`:
/// `α^{2λ} |x|^{λ-1/2} K_{λ-1/2}(α|x|) / (√π Γ(λ) (2α)^{λ-1/2})`.
fn symmetric_gamma_density(shape: f64, scale: f64, x: f64) -> f64 {
    let lambda = 0.5 * shape;
    let alpha = 1.0 / scale;
    let nu = lambda - 0.5;
    let ax = alpha * x.abs();
    if ax == 0.0 {
        return if lambda > 0.5 {
            alpha * special::gamma(nu) / (2.0 * PI.sqrt() * special::gamma(lambda))
        } else {
            f64::INFINITY
        };
    }
    let k = special::bessel_k(nu, ax);
    if k == 0.0 {
        return 0.0;
    }
    // alpha^{2λ} |x|^{ν} / (2α)^{ν} = alpha (ax)^{ν} / 2^{ν}
    let log = alpha.ln() + nu * (ax.ln() - 2f64.ln()) + k.ln() - 0.5 * PI.ln() - special::ln_gamma(lambda);
    log.exp()
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::None => write!(f, "none"),
            NoiseModel::Laplace { scale } => write!(f, "laplace:{scale}"),
            NoiseModel::SymmetricGamma { shape, scale } => write!(f, "gamma:{shape}:{scale}"),
            NoiseModel::Gaussian { sigma } => write!(f, "gauss:{sigma}"),
            NoiseModel::Cauchy { scale } => write!(f, "cauchy:{scale}"),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    /// Parses `laplace:s`, `gamma:k:s`, `gauss:sigma`, `cauchy:s` or `none`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| -> Result<f64> {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::domain(format!("invalid number '{p}' in noise spec '{s}'")))
        };
        match parts.as_slice() {
            ["none"] => Ok(NoiseModel::None),
            ["laplace", sc] => NoiseModel::laplace(num(sc)?),
            ["gamma", k, sc] => NoiseModel::symmetric_gamma(num(k)?, num(sc)?),
            ["gauss", sg] | ["gaussian", sg] => NoiseModel::gaussian(num(sg)?),
            ["cauchy", sc] => NoiseModel::cauchy(num(sc)?),
            _ => Err(Error::domain(format!(
                "unrecognised noise spec '{s}' (expected laplace:s, gamma:k:s, gauss:sigma, cauchy:s or none)"
            ))),
        }
    }
}

impl TryFrom<String> for NoiseModel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NoiseModel> for String {
    fn from(m: NoiseModel) -> String {
        m.to_string()
    }
}

/// Density of `Y = X + ε` for `X ~ N(0, σ_X²)`, with its derivative and
/// distribution function.
///
/// Evaluated by Fourier inversion of `exp(-σ_X² t²/2) φ_ε(t)`, whose Gaussian
/// factor makes the frequency integral converge rapidly.
#[derive(Debug, Clone, Copy)]
pub struct ObservedDensity {
    sigma_x: f64,
    noise: NoiseModel,
    cutoff: f64,
}

impl ObservedDensity {
    pub fn new(sigma_x: f64, noise: NoiseModel) -> Result<Self> {
        positive("process marginal standard deviation", sigma_x)?;
        // exp(-σ²T²/2) = exp(-42) is below double precision relative to the peak.
        let cutoff = (84.0f64).sqrt() / sigma_x;
        Ok(ObservedDensity {
            sigma_x,
            noise,
            cutoff,
        })
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    fn spectrum(&self, t: f64) -> f64 {
        (-0.5 * self.sigma_x * self.sigma_x * t * t).exp() * self.noise.cf_real(t)
    }

    fn integrate<F: Fn(f64) -> f64>(&self, y: f64, f: F) -> f64 {
        let rule = GaussLegendre::cached(20);
        let panels = ((self.cutoff * y.abs() / PI).ceil() as usize).max(8);
        crate::quadrature::composite(&rule, f, 0.0, self.cutoff, panels)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if self.noise == NoiseModel::None {
            return special::normal_pdf(y / self.sigma_x) / self.sigma_x;
        }
        self.integrate(y, |t| (t * y).cos() * self.spectrum(t)) / PI
    }

    pub fn pdf_derivative(&self, y: f64) -> f64 {
        if self.noise == NoiseModel::None {
            let s = self.sigma_x;
            return -y / (s * s) * special::normal_pdf(y / s) / s;
        }
        -self.integrate(y, |t| t * (t * y).sin() * self.spectrum(t)) / PI
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if self.noise == NoiseModel::None {
            return special::normal_cdf(y / self.sigma_x);
        }
        0.5 + self.integrate(y, |t| (t * y).sin() / t * self.spectrum(t)) / PI
    }
}

/// Ground-truth `f_Y` and `f_Y'` on `grid` for `X ~ N(0, σ_X²)`.
///
/// Rejects grids whose spacing exceeds a tenth of the noise scale.
pub fn density_y_oracle(sigma_x: f64, noise: NoiseModel, grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let oracle = ObservedDensity::new(sigma_x, noise)?;
    if let Some(scale) = noise.scale() {
        if let Some(gap) = grid.windows(2).map(|w| (w[1] - w[0]).abs()).reduce(f64::max) {
            if gap > scale / 10.0 {
                return Err(Error::config(format!(
                    "grid spacing {gap} exceeds noise scale / 10 = {}",
                    scale / 10.0
                )));
            }
        }
    }
    let f = grid.iter().map(|&y| oracle.pdf(y)).collect();
    let fp = grid.iter().map(|&y| oracle.pdf_derivative(y)).collect();
    Ok((f, fp))
}
