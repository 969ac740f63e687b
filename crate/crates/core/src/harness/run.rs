//! Experiment driver.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::analysis::{
    self, clt_check_values, fit_rate, var_law_check, CltReport, RateFit, VarLawReport, MODERATE_RATE_TOLERANCE,
    STRONG_RATE_TOLERANCE,
};
use super::config::{BandwidthSpec, ExperimentConfig, ExperimentKind, Target};
use crate::bandwidth::{
    bw_cdf, bw_density, bw_pilot_kde, bw_plugin_optimal, bw_supersmooth, bw_undersmoothed, clt_scaling,
    classify_regime, confidence_interval, BandwidthPlan, BandwidthRule, CltInputs, CltScaling, CltTarget,
    PluginInputs, Regime,
};
use crate::error::{Error, Result};
use crate::estimators::{
    cdf_estimate, density_estimate, expected_cdf_normal, expected_density_normal, kde_y_tabulated,
    theory_bias, theory_mse_cdf, theory_mse_density, CdfTheoryInputs, DensityTheoryInputs, TheoryMse,
};
use crate::kernel::{build_gn, d1_constant, GnTable, KernelSpec};
use crate::noise::{NoiseModel, ObservedDensity, SmoothnessClass};
use crate::process::{partial_sum_variance, Simulator};
use crate::special::{normal_cdf, normal_pdf};

/// One estimate of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRecord {
    pub experiment_id: String,
    pub replicate: usize,
    pub n: usize,
    pub h: f64,
    pub x0: f64,
    pub estimate: f64,
    pub truth: f64,
    pub squared_error: f64,
    pub standardized: Option<f64>,
    pub seed: u64,
}

/// Plug-in confidence interval of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRecord {
    pub experiment_id: String,
    pub replicate: usize,
    pub n: usize,
    pub h: f64,
    pub x0: f64,
    pub estimate: f64,
    pub kde: f64,
    pub lo: f64,
    pub hi: f64,
    pub truth: f64,
}

/// Per-(n, x0) summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub x0: f64,
    pub h: f64,
    pub truth: f64,
    /// Expectation of the estimator, computed in the frequency domain.
    pub expected: f64,
    pub mean_estimate: f64,
    pub var_estimate: f64,
    pub mse: f64,
    pub theory_bias: f64,
    pub theory: Option<TheoryMse>,
    pub sigma_n1_sq: f64,
    pub truncated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthSummary {
    pub n: usize,
    pub plan: BandwidthPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFitEntry {
    pub x0: f64,
    pub fit: RateFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltEntry {
    pub n: usize,
    pub x0: f64,
    pub scaling: CltScaling,
    pub report: CltReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageEntry {
    pub n: usize,
    pub x0: f64,
    pub level: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment_id: String,
    pub kind: ExperimentKind,
    pub replicates: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    pub bandwidths: Vec<BandwidthSummary>,
    pub cells: Vec<CellSummary>,
    pub rate_fits: Vec<RateFitEntry>,
    pub clt: Vec<CltEntry>,
    pub coverage: Vec<CoverageEntry>,
    pub var_law: Vec<VarLawReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<McRecord>,
    pub intervals: Vec<IntervalRecord>,
    pub summary: Summary,
}

/// Execution knobs that must not change results.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Called with a short message after each sample size completes.
    pub progress: Option<&'a (dyn Fn(&str) + Sync)>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate` at the `n_index`-th sample size. The map
/// `(n_index, replicate) -> seed` is injective for indices below `2^32`,
/// because it is a fixed XOR followed by a bijection of `u64`.
pub fn child_seed(master: u64, n_index: usize, replicate: usize) -> u64 {
    let counter = ((n_index as u64) << 32) | (replicate as u64 & 0xFFFF_FFFF);
    splitmix64(splitmix64(master) ^ counter)
}

struct Point {
    x0: f64,
    truth: f64,
    expected: f64,
    theory_bias: f64,
    theory: Option<TheoryMse>,
    clt: Option<CltScaling>,
}

struct Prepared {
    n: usize,
    plan: BandwidthPlan,
    sim: Simulator,
    table: GnTable,
    kernel_table: Option<GnTable>,
    pilot_b: f64,
    sigma_n1_sq: f64,
    points: Vec<Point>,
}

struct Context {
    kernel: KernelSpec,
    class: SmoothnessClass,
    beta: f64,
    d1: Option<f64>,
    target: Target,
}

fn beta_of(class: &SmoothnessClass) -> f64 {
    class.beta().unwrap_or(0.0)
}

/// `f_X`, `f_X'`, `f_X''` and `F_X` of the centred normal marginal.
fn marginal(sigma: f64, x: f64) -> (f64, f64, f64, f64) {
    let z = x / sigma;
    let f = normal_pdf(z) / sigma;
    (f, -z / sigma * f, (z * z - 1.0) / (sigma * sigma) * f, normal_cdf(z))
}

fn plan_for(cfg: &ExperimentConfig, ctx: &Context, n: usize, sigma_n1_sq: f64, oracle: &ObservedDensity, sigma_x: f64) -> Result<BandwidthPlan> {
    let gamma = cfg.process.coefficients.gamma();
    let beta = ctx.beta;
    match cfg.bandwidth {
        BandwidthSpec::Auto { c } => bw_density(n, beta, gamma, c),
        BandwidthSpec::IidLike { c } => {
            let mut p = bw_density(n, beta, None, c)?;
            p.regime = gamma.map(|g| classify_regime(g, beta)).transpose()?;
            Ok(p)
        }
        BandwidthSpec::IidUndersmoothed { c } => bw_undersmoothed(n, beta, c),
        BandwidthSpec::StrongLrd { c } => {
            let g = gamma.ok_or_else(|| Error::config_at("/bandwidth/rule", "strong-lrd rule needs gamma"))?;
            Ok(BandwidthPlan {
                h: c * (n as f64).powf(-(2.0 * g - 1.0) / (2.0 * (2.0 + beta))),
                rule: BandwidthRule::StrongLrd,
                regime: Some(classify_regime(g, beta)?),
                c,
                theta: None,
            })
        }
        BandwidthSpec::CdfLrd { c } => bw_cdf(n, beta, sigma_n1_sq, c),
        BandwidthSpec::Supersmooth { theta } => match ctx.class {
            SmoothnessClass::Supersmooth { a, beta, .. } => bw_supersmooth(n, ctx.kernel.d, a, beta, theta, gamma),
            _ => Err(Error::config_at("/bandwidth/rule", "supersmooth rule needs supersmooth noise")),
        },
        BandwidthSpec::PluginOptimal => {
            let x0 = cfg.x0[0];
            let (_, _, f_xx, _) = marginal(sigma_x, x0);
            bw_plugin_optimal(&PluginInputs {
                f_y: oracle.pdf(x0),
                f_xx,
                mu2: ctx.kernel.mu2,
                d1: ctx.d1.ok_or_else(|| Error::config_at("/bandwidth/rule", "plugin-optimal needs D1"))?,
                n,
                beta,
            })
        }
        BandwidthSpec::Fixed { h } => Ok(BandwidthPlan {
            h,
            rule: BandwidthRule::Fixed,
            regime: None,
            c: h,
            theta: None,
        }),
    }
}

fn clt_target_for(cfg: &ExperimentConfig, ctx: &Context) -> Result<CltTarget> {
    if let Some(t) = cfg.clt_target {
        return Ok(t);
    }
    Ok(match ctx.target {
        Target::Cdf => CltTarget::Cdf,
        Target::Density => match cfg.process.coefficients.gamma() {
            Some(g) if classify_regime(g, ctx.beta)? == Regime::Strong => CltTarget::DensityLrd,
            _ => CltTarget::DensityIid,
        },
    })
}

fn prepare(cfg: &ExperimentConfig, ctx: &Context, n: usize, warnings: &mut Vec<String>) -> Result<Prepared> {
    let coefficients = Arc::new(cfg.process.coefficients_for(n)?);
    let innovation = cfg.process.innovation()?;
    let sigma_x = (innovation.variance * coefficients.sum_of_squares()).sqrt();
    let oracle = ObservedDensity::new(sigma_x, cfg.noise)?;
    let sigma_n1_sq = partial_sum_variance(&coefficients, innovation.variance, n)?;
    let sim = Simulator::from_shared(coefficients, innovation, n)?;
    let plan = plan_for(cfg, ctx, n, sigma_n1_sq, &oracle, sigma_x)?;
    let table = build_gn(&ctx.kernel, &cfg.noise, plan.h, &cfg.grid)?;
    let (kernel_table, pilot_b) = if cfg.kind == ExperimentKind::Coverage {
        let b = bw_pilot_kde(n, cfg.pilot_c)?.h;
        (Some(build_gn(&ctx.kernel, &NoiseModel::None, 1.0, &cfg.grid)?), b)
    } else {
        (None, f64::NAN)
    };
    let lrd = cfg.process.coefficients.is_lrd();
    let clt_target = if cfg.kind == ExperimentKind::Clt {
        Some(clt_target_for(cfg, ctx)?)
    } else {
        None
    };
    let mut points = Vec::with_capacity(cfg.x0.len());
    for &x0 in &cfg.x0 {
        let (f, fp, fxx, big_f) = marginal(sigma_x, x0);
        let f_y = oracle.pdf(x0);
        let f_y_prime = oracle.pdf_derivative(x0);
        let (truth, expected, bias, theory) = match ctx.target {
            Target::Density => {
                let theory = ctx.d1.map(|d1| {
                    theory_mse_density(&DensityTheoryInputs {
                        f_y,
                        f_y_prime,
                        f_xx: fxx,
                        mu2: ctx.kernel.mu2,
                        d1,
                        n,
                        h: plan.h,
                        beta: ctx.beta,
                        sigma_n1_sq: lrd.then_some(sigma_n1_sq),
                    })
                });
                (
                    f,
                    expected_density_normal(&ctx.kernel, sigma_x, plan.h, x0),
                    theory_bias(fxx, ctx.kernel.mu2, plan.h),
                    theory,
                )
            }
            Target::Cdf => {
                let theory = theory_mse_cdf(&CdfTheoryInputs {
                    f_y,
                    f_prime: fp,
                    mu2: ctx.kernel.mu2,
                    n,
                    h: plan.h,
                    beta: ctx.beta,
                    sigma_n1_sq,
                });
                (
                    big_f,
                    expected_cdf_normal(&ctx.kernel, sigma_x, plan.h, x0),
                    theory_bias(fp, ctx.kernel.mu2, plan.h),
                    Some(theory),
                )
            }
        };
        let clt = match clt_target {
            Some(t) => {
                let s = clt_scaling(
                    t,
                    &CltInputs {
                        n,
                        h: plan.h,
                        beta: ctx.beta,
                        sigma_n1_sq: Some(sigma_n1_sq),
                        d1: ctx.d1.unwrap_or(f64::NAN),
                        f_y,
                        f_y_prime,
                    },
                )?;
                if s.degenerate {
                    return Err(Error::Degenerate(format!(
                        "asymptotic variance is zero at x0 = {x0}; the normal limit is degenerate"
                    )));
                }
                warnings.extend(s.warnings.iter().map(|w| format!("n = {n}, x0 = {x0}: {w}")));
                Some(s)
            }
            None => None,
        };
        points.push(Point {
            x0,
            truth,
            expected,
            theory_bias: bias,
            theory,
            clt,
        });
    }
    Ok(Prepared {
        n,
        plan,
        sim,
        table,
        kernel_table,
        pilot_b,
        sigma_n1_sq,
        points,
    })
}

struct ReplicateOut {
    records: Vec<McRecord>,
    intervals: Vec<IntervalRecord>,
    truncated: Vec<usize>,
}

fn replicate(cfg: &ExperimentConfig, ctx: &Context, p: &Prepared, index: usize, seed: u64) -> Result<ReplicateOut> {
    let x = p.sim.simulate(seed).x;
    let e = cfg.noise.sample(p.n, seed);
    let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + b).collect();
    let estimates = match ctx.target {
        Target::Density => density_estimate(&y, &p.table, &cfg.x0)?,
        Target::Cdf => cdf_estimate(&y, &p.table, &cfg.x0)?,
    };
    let mut out = ReplicateOut {
        records: Vec::with_capacity(p.points.len()),
        intervals: Vec::new(),
        truncated: Vec::with_capacity(p.points.len()),
    };
    for (pt, est) in p.points.iter().zip(&estimates) {
        let standardized = pt
            .clt
            .as_ref()
            .map(|s| s.rate_factor * (est.value - pt.expected) / s.asym_var.sqrt());
        out.records.push(McRecord {
            experiment_id: cfg.experiment_id.clone(),
            replicate: index,
            n: p.n,
            h: p.plan.h,
            x0: pt.x0,
            estimate: est.value,
            truth: pt.truth,
            squared_error: (est.value - pt.truth).powi(2),
            standardized,
            seed,
        });
        out.truncated.push(est.truncated);
        if let Some(kt) = &p.kernel_table {
            let kde = kde_y_tabulated(&y, kt, p.pilot_b, pt.x0)?;
            let d1 = ctx.d1.ok_or_else(|| Error::UnsupportedClass("coverage needs ordinary smooth noise".into()))?;
            let ci = confidence_interval(est.value, kde, d1, p.n, p.plan.h, ctx.beta, cfg.level)?;
            out.intervals.push(IntervalRecord {
                experiment_id: cfg.experiment_id.clone(),
                replicate: index,
                n: p.n,
                h: p.plan.h,
                x0: pt.x0,
                estimate: est.value,
                kde,
                lo: ci.lo,
                hi: ci.hi,
                truth: pt.truth,
            });
        }
    }
    Ok(out)
}

/// Theory slope of `ln MSE` against `ln n` implied by the configured rule,
/// when it is a pure power law.
pub fn default_theory_slope(cfg: &ExperimentConfig) -> Option<(f64, f64)> {
    let beta = cfg.noise.classify().beta()?;
    if matches!(cfg.noise.classify(), SmoothnessClass::Supersmooth { .. }) {
        return None;
    }
    let gamma = cfg.process.coefficients.gamma();
    let moderate = (-4.0 / (5.0 + 2.0 * beta), MODERATE_RATE_TOLERANCE);
    let strong = |g: f64| (-2.0 * (2.0 * g - 1.0) / (2.0 + beta), STRONG_RATE_TOLERANCE);
    match (cfg.kind, cfg.bandwidth) {
        (ExperimentKind::MseDensity, BandwidthSpec::IidLike { .. } | BandwidthSpec::PluginOptimal) => Some(moderate),
        (ExperimentKind::MseDensity, BandwidthSpec::Auto { .. }) => match gamma {
            Some(g) if classify_regime(g, beta).ok()? == Regime::Strong => Some(strong(g)),
            _ => Some(moderate),
        },
        (ExperimentKind::MseDensity, BandwidthSpec::StrongLrd { .. }) => gamma.map(strong),
        (ExperimentKind::MseCdf, BandwidthSpec::CdfLrd { .. }) => {
            let growth = gamma.map_or(1.0, |g| 3.0 - 2.0 * g);
            // h ∝ n^{(growth-2)/(2(β+2))}, MSE ∝ h⁴
            Some((2.0 * (growth - 2.0) / (beta + 2.0), STRONG_RATE_TOLERANCE))
        }
        _ => None,
    }
}

/// Runs every (n, replicate) pair. Records are ordered by n, then replicate,
/// then x0, and are bit-identical for any thread count.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions<'_>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let kernel = cfg.kernel_spec()?;
    let class = cfg.noise.classify();
    let d1 = match class {
        SmoothnessClass::Supersmooth { .. } => None,
        _ => Some(d1_constant(&kernel, &class)?),
    };
    let ctx = Context {
        beta: beta_of(&class),
        kernel,
        class,
        d1,
        target: cfg.target_fn(),
    };
    let pool = match opts.threads {
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::Resource(e.to_string()))?,
        ),
        None => None,
    };
    let mut warnings = ctx.kernel.regularity_warnings(ctx.beta);
    if !ctx.class.is_ordinary() {
        warnings.clear();
    }
    let mut records = Vec::new();
    let mut intervals = Vec::new();
    let mut cells = Vec::new();
    let mut bandwidths = Vec::new();
    let mut clt = Vec::new();
    let mut coverage = Vec::new();
    let mut var_law = Vec::new();
    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let prep = prepare(cfg, &ctx, n, &mut warnings)?;
        let work = || -> Result<Vec<ReplicateOut>> {
            (0..cfg.replicates)
                .into_par_iter()
                .map(|r| replicate(cfg, &ctx, &prep, r, child_seed(cfg.seed, ni, r)))
                .collect()
        };
        let outs = match &pool {
            Some(p) => p.install(work)?,
            None => work()?,
        };
        let start = records.len();
        let istart = intervals.len();
        let mut truncated = vec![0usize; prep.points.len()];
        for o in outs {
            records.extend(o.records);
            intervals.extend(o.intervals);
            for (t, k) in truncated.iter_mut().zip(o.truncated) {
                *t += k;
            }
        }
        for (j, pt) in prep.points.iter().enumerate() {
            let cell: Vec<McRecord> = records[start..].iter().skip(j).step_by(prep.points.len()).cloned().collect();
            let est: Vec<f64> = cell.iter().map(|r| r.estimate).collect();
            let mean = crate::stats::mean(&est);
            cells.push(CellSummary {
                n,
                x0: pt.x0,
                h: prep.plan.h,
                truth: pt.truth,
                expected: pt.expected,
                mean_estimate: mean,
                var_estimate: crate::stats::variance(&est),
                mse: cell.iter().map(|r| r.squared_error).sum::<f64>() / cell.len() as f64,
                theory_bias: pt.theory_bias,
                theory: pt.theory,
                sigma_n1_sq: prep.sigma_n1_sq,
                truncated: truncated[j],
            });
            if let Some(s) = &pt.clt {
                let z: Vec<f64> = cell.iter().filter_map(|r| r.standardized).collect();
                clt.push(CltEntry {
                    n,
                    x0: pt.x0,
                    scaling: s.clone(),
                    report: clt_check_values(&z)?,
                });
            }
            if cfg.kind == ExperimentKind::Coverage {
                let iv: Vec<IntervalRecord> = intervals[istart..]
                    .iter()
                    .skip(j)
                    .step_by(prep.points.len())
                    .cloned()
                    .collect();
                coverage.push(CoverageEntry {
                    n,
                    x0: pt.x0,
                    level: cfg.level,
                    coverage: analysis::coverage_check(&iv),
                });
            }
            if cfg.kind == ExperimentKind::VarLaw {
                if let Some(t) = &pt.theory {
                    var_law.push(var_law_check(&cell, t)?);
                }
            }
        }
        bandwidths.push(BandwidthSummary { n, plan: prep.plan });
        if let Some(cb) = opts.progress {
            cb(&format!("n = {n}: {} replicates done (h = {:.6})", cfg.replicates, prep.plan.h));
        }
    }
    let mut rate_fits = Vec::new();
    let slope = cfg
        .theory_slope
        .map(|s| (s, cfg.rate_tolerance.unwrap_or(MODERATE_RATE_TOLERANCE)))
        .or_else(|| default_theory_slope(cfg).map(|(s, t)| (s, cfg.rate_tolerance.unwrap_or(t))));
    let spans = cfg.n_grid.len() >= 4 && cfg.n_grid[cfg.n_grid.len() - 1] >= 4 * cfg.n_grid[0];
    if let (Some((theory, tol)), true, ExperimentKind::MseDensity | ExperimentKind::MseCdf) = (slope, spans, cfg.kind) {
        for &x0 in &cfg.x0 {
            let sel: Vec<McRecord> = records.iter().filter(|r| r.x0 == x0).cloned().collect();
            rate_fits.push(RateFitEntry {
                x0,
                fit: fit_rate(&sel, theory, tol)?,
            });
        }
    }
    let summary = Summary {
        experiment_id: cfg.experiment_id.clone(),
        kind: cfg.kind,
        replicates: cfg.replicates,
        seed: cfg.seed,
        noise: cfg.noise,
        bandwidths,
        cells,
        rate_fits,
        clt,
        coverage,
        var_law,
        warnings,
    };
    Ok(ExperimentOutput {
        records,
        intervals,
        summary,
    })
}
