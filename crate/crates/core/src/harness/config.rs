//! Experiment configuration documents.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bandwidth::CltTarget;
use crate::error::{Error, Result};
use crate::kernel::{GridConfig, KernelSpec};
use crate::noise::{NoiseModel, SmoothnessClass};
use crate::process::{CoefficientKind, CoefficientSequence, InnovationLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MseDensity,
    MseCdf,
    Clt,
    Coverage,
    VarLaw,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::MseDensity => "mse-density",
            ExperimentKind::MseCdf => "mse-cdf",
            ExperimentKind::Clt => "clt",
            ExperimentKind::Coverage => "coverage",
            ExperimentKind::VarLaw => "var-law",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Density,
    Cdf,
}

/// Linear process generating `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub coefficients: CoefficientKind,
    /// Truncation lag `M`; defaults to the rule's own choice for each `n`.
    #[serde(default)]
    pub truncation_lag: Option<usize>,
    #[serde(default = "one")]
    pub innovation_variance: f64,
}

impl ProcessSpec {
    pub fn iid() -> Self {
        ProcessSpec {
            coefficients: CoefficientKind::SrdFinite { weights: vec![1.0] },
            truncation_lag: None,
            innovation_variance: 1.0,
        }
    }

    pub fn lrd(gamma: f64) -> Self {
        ProcessSpec {
            coefficients: CoefficientKind::LrdPower { gamma },
            truncation_lag: None,
            innovation_variance: 1.0,
        }
    }

    pub fn coefficients_for(&self, n: usize) -> Result<CoefficientSequence> {
        let m = self
            .truncation_lag
            .unwrap_or_else(|| self.coefficients.default_truncation_lag(n));
        CoefficientSequence::build(self.coefficients.clone(), m)
    }

    pub fn innovation(&self) -> Result<InnovationLaw> {
        InnovationLaw::normal(self.innovation_variance)
    }
}

/// Bandwidth rule applied at every `n` of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BandwidthSpec {
    /// Density rule picked from the dependence regime of the process.
    Auto {
        #[serde(default = "one")]
        c: f64,
    },
    IidLike {
        #[serde(default = "one")]
        c: f64,
    },
    IidUndersmoothed {
        #[serde(default = "one")]
        c: f64,
    },
    StrongLrd {
        #[serde(default = "one")]
        c: f64,
    },
    CdfLrd {
        #[serde(default = "one")]
        c: f64,
    },
    /// `d (2a/((1-θ) ln n))^{1/β}` with `d` the kernel support.
    Supersmooth {
        theta: f64,
    },
    PluginOptimal,
    Fixed {
        h: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    #[serde(default = "one")]
    pub d: f64,
    #[serde(default = "three")]
    pub m: u32,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams { d: 1.0, m: 3 }
    }
}

fn one() -> f64 {
    1.0
}

fn three() -> u32 {
    3
}

fn default_level() -> f64 {
    0.95
}

fn default_id() -> String {
    "experiment".into()
}

fn default_noise() -> NoiseModel {
    NoiseModel::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_id")]
    pub experiment_id: String,
    pub kind: ExperimentKind,
    pub process: ProcessSpec,
    #[serde(default = "default_noise")]
    pub noise: NoiseModel,
    pub x0: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub bandwidth: BandwidthSpec,
    pub replicates: usize,
    pub seed: u64,
    /// Directory receiving `records.csv`, `summary.json` and, for coverage
    /// runs, `intervals.csv`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Estimated function for `clt` and `var-law` runs (default density).
    #[serde(default)]
    pub target: Option<Target>,
    /// Normalisation for `clt` runs; chosen from the process when absent.
    #[serde(default)]
    pub clt_target: Option<CltTarget>,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Constant of the pilot bandwidth `C n^{-1/5}` used by coverage runs.
    #[serde(default = "one")]
    pub pilot_c: f64,
    #[serde(default)]
    pub theory_slope: Option<f64>,
    #[serde(default)]
    pub rate_tolerance: Option<f64>,
    #[serde(default)]
    pub kernel: KernelParams,
    #[serde(default)]
    pub grid: GridConfig,
}

/// Converts a `serde_path_to_error` path into a JSON pointer.
fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

impl ExperimentConfig {
    /// Parses and validates a JSON document. Errors carry the JSON pointer of
    /// the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = json_pointer(e.path());
            Error::config_at(pointer, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn target_fn(&self) -> Target {
        match self.kind {
            ExperimentKind::MseCdf => Target::Cdf,
            ExperimentKind::MseDensity | ExperimentKind::Coverage => Target::Density,
            ExperimentKind::Clt | ExperimentKind::VarLaw => self.target.unwrap_or(Target::Density),
        }
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.kernel.d, self.kernel.m).map_err(|e| Error::config_at("/kernel", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::config_at("/replicates", "at least 2 replicates are required"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::config_at("/n_grid", "n grid is empty"));
        }
        for (i, &n) in self.n_grid.iter().enumerate() {
            if n < 3 {
                return Err(Error::config_at(format!("/n_grid/{i}"), "sample sizes must be at least 3"));
            }
            if i > 0 && n <= self.n_grid[i - 1] {
                return Err(Error::config_at(format!("/n_grid/{i}"), "n grid must be strictly increasing"));
            }
        }
        if self.x0.is_empty() {
            return Err(Error::config_at("/x0", "no evaluation points"));
        }
        if let Some(i) = self.x0.iter().position(|x| !x.is_finite()) {
            return Err(Error::config_at(format!("/x0/{i}"), "evaluation point is not finite"));
        }
        if self.kind == ExperimentKind::MseCdf && self.target.is_some_and(|t| t != Target::Cdf)
            || matches!(self.kind, ExperimentKind::MseDensity | ExperimentKind::Coverage)
                && self.target.is_some_and(|t| t != Target::Density)
        {
            return Err(Error::config_at("/target", format!("target conflicts with kind {}", self.kind.as_str())));
        }
        for &n in &self.n_grid {
            self.process
                .coefficients_for(n)
                .map_err(|e| Error::config_at("/process", e.to_string()))?;
        }
        self.process
            .innovation()
            .map_err(|e| Error::config_at("/process/innovation_variance", e.to_string()))?;
        self.kernel_spec()?;
        self.grid.validate().map_err(|e| Error::config_at("/grid", e.to_string()))?;
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::config_at("/level", "level must lie in (0, 1)"));
        }
        if !(self.pilot_c > 0.0) {
            return Err(Error::config_at("/pilot_c", "pilot constant must be positive"));
        }
        self.noise
            .check_classification()
            .map_err(|e| Error::config_at("/noise", e.to_string()))?;
        let class = self.noise.classify();
        let supersmooth = matches!(class, SmoothnessClass::Supersmooth { .. });
        let target = self.target_fn();
        if supersmooth && target == Target::Cdf {
            return Err(Error::UnsupportedClass(
                "distribution-function estimation is only covered for ordinary smooth noise".into(),
            ));
        }
        if supersmooth && matches!(self.kind, ExperimentKind::Clt | ExperimentKind::Coverage) {
            return Err(Error::UnsupportedClass(
                "normal limits and plug-in intervals are only available for ordinary smooth noise".into(),
            ));
        }
        let lrd = self.process.coefficients.is_lrd();
        match self.bandwidth {
            BandwidthSpec::Auto { c }
            | BandwidthSpec::IidLike { c }
            | BandwidthSpec::IidUndersmoothed { c }
            | BandwidthSpec::StrongLrd { c }
            | BandwidthSpec::CdfLrd { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::config_at("/bandwidth/c", "bandwidth constant must be positive"));
                }
            }
            BandwidthSpec::Fixed { h } => {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::config_at("/bandwidth/h", "bandwidth must be positive"));
                }
            }
            BandwidthSpec::Supersmooth { theta } => {
                if !supersmooth {
                    return Err(Error::config_at("/bandwidth/rule", "supersmooth rule needs supersmooth noise"));
                }
                let lower = self.process.coefficients.gamma().map_or(0.0, |g| 2.0 - 2.0 * g);
                if !(theta > lower && theta < 1.0) {
                    return Err(Error::config_at(
                        "/bandwidth/theta",
                        format!("theta must lie in (2 - 2*gamma, 1) = ({lower}, 1)"),
                    ));
                }
            }
            BandwidthSpec::PluginOptimal => {
                if !class.is_ordinary() && class != SmoothnessClass::Degenerate || target != Target::Density {
                    return Err(Error::config_at(
                        "/bandwidth/rule",
                        "plugin-optimal needs a density target and ordinary smooth or no noise",
                    ));
                }
            }
        }
        match self.bandwidth {
            BandwidthSpec::StrongLrd { .. } if !lrd => {
                return Err(Error::config_at("/bandwidth/rule", "strong-lrd rule needs a long-memory process"));
            }
            BandwidthSpec::Auto { .. } | BandwidthSpec::IidLike { .. } | BandwidthSpec::IidUndersmoothed { .. }
                if supersmooth =>
            {
                return Err(Error::config_at(
                    "/bandwidth/rule",
                    "polynomial bandwidth rules need ordinary smooth or no noise",
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "kind": "mse-density",
        "process": {"kind": "srd-finite", "weights": [1.0]},
        "noise": "laplace:1",
        "x0": [0.0],
        "n_grid": [256],
        "bandwidth": {"rule": "iid-like"},
        "replicates": 2,
        "seed": 1
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.level, 0.95);
        assert_eq!(c.bandwidth, BandwidthSpec::IidLike { c: 1.0 });
        assert_eq!(c.noise, NoiseModel::laplace(1.0).unwrap());
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.process, ProcessSpec::iid());
    }

    fn pointer_of(text: &str) -> Option<String> {
        match ExperimentConfig::from_json(text) {
            Err(Error::Config { pointer, .. }) => pointer,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_point_at_the_field() {
        assert_eq!(pointer_of(&MINIMAL.replace("\"replicates\": 2", "\"replicates\": 1")).as_deref(), Some("/replicates"));
        assert_eq!(pointer_of(&MINIMAL.replace("[256]", "[256, 128]")).as_deref(), Some("/n_grid/1"));
        assert_eq!(pointer_of(&MINIMAL.replace("laplace:1", "laplace:x")).as_deref(), Some("/noise"));
        assert_eq!(
            pointer_of(&MINIMAL.replace("\"seed\": 1", "\"seed\": \"one\"")).as_deref(),
            Some("/seed")
        );
        assert_eq!(pointer_of(&MINIMAL.replace("[256]", "[256, \"x\"]")).as_deref(), Some("/n_grid/1"));
        assert_eq!(
            pointer_of(&MINIMAL.replace("\"weights\": [1.0]", "\"weights\": [2.0]")).as_deref(),
            Some("/process")
        );
    }

    #[test]
    fn inconsistent_rules_are_rejected() {
        let strong = MINIMAL.replace("iid-like", "strong-lrd");
        assert!(ExperimentConfig::from_json(&strong).is_err());
        let ss = MINIMAL
            .replace("laplace:1", "gauss:1")
            .replace("\"rule\": \"iid-like\"", "\"rule\": \"supersmooth\", \"theta\": 0.7")
            .replace("mse-density", "mse-cdf");
        assert!(matches!(ExperimentConfig::from_json(&ss), Err(Error::UnsupportedClass(_))));
        let lrd_theta = MINIMAL
            .replace("laplace:1", "gauss:1")
            .replace("\"rule\": \"iid-like\"", "\"rule\": \"supersmooth\", \"theta\": 0.7")
            .replace("{\"kind\": \"srd-finite\", \"weights\": [1.0]}", "{\"kind\": \"lrd-power\", \"gamma\": 0.6}");
        assert_eq!(pointer_of(&lrd_theta).as_deref(), Some("/bandwidth/theta"));
    }
}
