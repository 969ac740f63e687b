use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use deconv_core::bandwidth::{
    bw_cdf, bw_density, bw_pilot_kde, bw_supersmooth, bw_undersmoothed, regime_threshold, BandwidthPlan,
};
use deconv_core::estimators::{cdf_estimate, density_estimate, kde_y_tabulated, EstimateKind, EstimateResult};
use deconv_core::harness::{self, ExperimentConfig, RunOptions};
use deconv_core::io::{self as dio, fmt_f64};
use deconv_core::kernel::d1_constant;
use deconv_core::{
    build_gn, stats, CoefficientKind, CoefficientSequence, GridConfig, InnovationLaw, KernelSpec, NoiseModel,
    SmoothnessClass, Simulator,
};
use serde_json::json;

use crate::args::{
    BandwidthArgs, EstimateArgs, EstimateKindArg, GnArgs, KernelArgs, McArgs, RateFitArgs, RuleArg, SimulateArgs,
};
use crate::error::{input_error, CliError};

type Result<T> = std::result::Result<T, CliError>;

/// Invalid flag values are usage errors.
fn bad_arg(e: deconv_core::Error) -> CliError {
    CliError::usage(e.to_string())
}

fn parse_noise(s: &str) -> Result<NoiseModel> {
    NoiseModel::from_str(s).map_err(bad_arg)
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(deconv_core::Error::from)?;
    writeln!(out).map_err(deconv_core::Error::from)?;
    Ok(())
}

fn kernel_and_grid(k: &KernelArgs) -> Result<(KernelSpec, GridConfig)> {
    let kernel = KernelSpec::new(k.d, k.m).map_err(bad_arg)?;
    let grid = GridConfig {
        dx: k.dx,
        x_max: k.x_max,
        nodes: k.nodes,
    };
    grid.validate().map_err(bad_arg)?;
    Ok((kernel, grid))
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    if a.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let c = &a.coefficients;
    let kind = if let Some(gamma) = c.gamma {
        CoefficientKind::LrdPower { gamma }
    } else if let Some(phi) = c.phi {
        CoefficientKind::SrdGeometric { phi }
    } else {
        let mut weights = vec![1.0];
        weights.extend(c.ma.iter().flatten());
        CoefficientKind::SrdFinite { weights }
    };
    let noise = parse_noise(&a.noise)?;
    let m = a.truncation.unwrap_or_else(|| kind.default_truncation_lag(a.n));
    let coefficients = CoefficientSequence::build(kind.clone(), m).map_err(bad_arg)?;
    let sim = Simulator::new(coefficients, InnovationLaw::standard(), a.n)?;
    let x = sim.simulate(a.seed).x;
    let e = noise.sample(a.n, a.seed);
    let y: Vec<f64> = x.iter().zip(&e).map(|(x, e)| x + e).collect();
    dio::write_series(&a.out, &x, Some(&y))?;
    let var = |v: &[f64]| if v.len() > 1 { Some(stats::variance(v)) } else { None };
    print_json(&json!({
        "n": a.n,
        "coefficients": kind,
        "gamma": kind.gamma(),
        "truncation_lag": m,
        "noise": noise.to_string(),
        "seed": a.seed,
        "sample_variance_x": var(&x),
        "sample_variance_y": var(&y),
        "out": a.out,
    }))
}

pub fn gn(a: &GnArgs) -> Result<()> {
    let noise = parse_noise(&a.noise)?;
    let (kernel, grid) = kernel_and_grid(&a.kernel)?;
    if !a.h.is_finite() || a.h <= 0.0 {
        return Err(CliError::usage("--h must be positive"));
    }
    let table = build_gn(&kernel, &noise, a.h, &grid)?;
    dio::write_atomic(&a.out, |w| {
        writeln!(w, "x,gn,Gn")?;
        for i in 0..table.len() {
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(table.x_at(i)),
                fmt_f64(table.gn[i]),
                fmt_f64(table.big_gn[i])
            )?;
        }
        Ok(())
    })?;
    let class = noise.classify();
    let d1 = match class {
        SmoothnessClass::Supersmooth { .. } => None,
        _ => d1_constant(&kernel, &class).ok(),
    };
    let sidecar = json!({
        "h": a.h,
        "noise": noise.to_string(),
        "class": class.tag(),
        "beta": class.beta(),
        "kernel": {"d": kernel.d, "m": kernel.m, "mu2": kernel.mu2},
        "dx": grid.dx,
        "x_max": grid.x_max,
        "l1": table.l1,
        "integral": table.total,
        "d1": d1,
        "warnings": class.beta().map(|b| kernel.regularity_warnings(b)).unwrap_or_default(),
    });
    let side = a.out.with_extension("json");
    dio::write_json_atomic(&side, &sidecar)?;
    print_json(&json!({"table": a.out, "sidecar": side, "points": table.len(), "l1": table.l1, "integral": table.total}))
}

/// `lo:hi:count` or a comma-separated list.
fn parse_points(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::usage(format!("invalid evaluation point '{t}'")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').map(num).collect(),
        3 => {
            let lo = num(parts[0])?;
            let hi = num(parts[1])?;
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("invalid point count '{}'", parts[2])))?;
            match count {
                0 => Err(CliError::usage("point count must be positive")),
                1 => Ok(vec![lo]),
                _ => Ok((0..count)
                    .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                    .collect()),
            }
        }
        _ => Err(CliError::usage(format!("invalid --x0 '{s}': expected a list or lo:hi:count"))),
    }
}

fn auto_bandwidth(a: &EstimateArgs, noise: &NoiseModel, kernel: &KernelSpec, n: usize) -> Result<BandwidthPlan> {
    let class = noise.classify();
    let beta = class.beta().unwrap_or(0.0);
    Ok(match (a.kind, class) {
        (EstimateKindArg::Kde, _) => bw_pilot_kde(n, a.c).map_err(bad_arg)?,
        (EstimateKindArg::Density, SmoothnessClass::Supersmooth { a: aa, beta, .. }) => {
            let theta = a
                .theta
                .ok_or_else(|| CliError::usage("--h auto with supersmooth noise needs --theta"))?;
            bw_supersmooth(n, kernel.d, aa, beta, theta, a.gamma).map_err(bad_arg)?
        }
        (EstimateKindArg::Density, _) => bw_density(n, beta, a.gamma, a.c).map_err(bad_arg)?,
        (EstimateKindArg::Cdf, _) => {
            let nf = n as f64;
            let sigma_sq = a.gamma.map_or(nf, |g| nf.powf(3.0 - 2.0 * g));
            bw_cdf(n, beta, sigma_sq, a.c).map_err(bad_arg)?
        }
    })
}

pub fn estimate(a: &EstimateArgs) -> Result<()> {
    let y = dio::read_series(&a.input).map_err(input_error)?;
    let noise = parse_noise(&a.noise)?;
    let (kernel, grid) = kernel_and_grid(&a.kernel)?;
    let x0 = parse_points(&a.x0)?;
    let class = noise.classify();
    if a.kind == EstimateKindArg::Cdf && matches!(class, SmoothnessClass::Supersmooth { .. }) {
        return Err(deconv_core::Error::UnsupportedClass(format!(
            "distribution-function estimation needs ordinary smooth noise; {noise} is supersmooth"
        ))
        .into());
    }
    let h = if a.h == "auto" {
        auto_bandwidth(a, &noise, &kernel, y.len())?.h
    } else {
        a.h.parse::<f64>()
            .ok()
            .filter(|h| *h > 0.0 && h.is_finite())
            .ok_or_else(|| CliError::usage(format!("--h must be 'auto' or a positive number, got '{}'", a.h)))?
    };
    let results: Vec<EstimateResult> = match a.kind {
        EstimateKindArg::Density => density_estimate(&y, &build_gn(&kernel, &noise, h, &grid)?, &x0)?,
        EstimateKindArg::Cdf => cdf_estimate(&y, &build_gn(&kernel, &noise, h, &grid)?, &x0)?,
        EstimateKindArg::Kde => {
            let table = build_gn(&kernel, &NoiseModel::None, 1.0, &grid)?;
            x0.iter()
                .map(|&x| {
                    Ok(EstimateResult {
                        x0: x,
                        value: kde_y_tabulated(&y, &table, h, x)?,
                        h,
                        n: y.len(),
                        kind: EstimateKind::KdeY,
                        truncated: 0,
                        truncation_warning: false,
                        out_of_range: false,
                    })
                })
                .collect::<deconv_core::Result<_>>()?
        }
    };
    for r in results.iter().filter(|r| r.truncation_warning || r.out_of_range) {
        eprintln!(
            "{}",
            json!({"warning": {"x0": r.x0, "truncated": r.truncated, "out_of_range": r.out_of_range}})
        );
    }
    match &a.out {
        Some(p) => dio::write_atomic(p, |w| dio::write_estimates(w, &results))?,
        None => dio::write_estimates(&mut std::io::stdout().lock(), &results)?,
    }
    Ok(())
}

pub fn bandwidth(a: &BandwidthArgs) -> Result<()> {
    let gamma_star = regime_threshold(a.beta);
    let plan = match a.rule {
        RuleArg::Density => bw_density(a.n, a.beta, a.gamma, a.c),
        RuleArg::Undersmoothed => bw_undersmoothed(a.n, a.beta, a.c),
        RuleArg::Cdf => {
            let nf = a.n as f64;
            let s2 = a.sigma_sq.unwrap_or_else(|| a.gamma.map_or(nf, |g| nf.powf(3.0 - 2.0 * g)));
            bw_cdf(a.n, a.beta, s2, a.c)
        }
        RuleArg::Supersmooth => {
            let (aa, theta) = a
                .a
                .zip(a.theta)
                .ok_or_else(|| CliError::usage("the supersmooth rule needs --a and --theta"))?;
            bw_supersmooth(a.n, a.d, aa, a.beta, theta, a.gamma)
        }
        RuleArg::Pilot => bw_pilot_kde(a.n, a.c),
    }
    .map_err(bad_arg)?;
    print_json(&json!({
        "h": plan.h,
        "rule": plan.rule.as_str(),
        "regime": plan.regime.map(|r| r.as_str()),
        "gamma_star": gamma_star,
    }))
}

pub fn mc(a: &McArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CliError::usage(format!("{}: {e}", a.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text).map_err(input_error)?;
    if let Some(out) = &a.out {
        cfg.output = Some(out.clone());
    }
    let dir = cfg
        .output
        .clone()
        .ok_or_else(|| CliError::usage("no output directory: set \"output\" in the config or pass --out"))?;
    let progress = |msg: &str| eprintln!("[{}] {msg}", cfg.experiment_id);
    let output = harness::run_experiment(
        &cfg,
        &RunOptions {
            threads: a.threads,
            progress: Some(&progress),
        },
    )?;
    harness::write_outputs(&dir, &output)?;
    let path = |f: &str| dir.join(f);
    print_json(&json!({
        "experiment_id": cfg.experiment_id,
        "records": path("records.csv"),
        "summary": path("summary.json"),
        "intervals": (!output.intervals.is_empty()).then(|| path("intervals.csv")),
        "record_count": output.records.len(),
        "rate_fits": output.summary.rate_fits,
    }))
}

pub fn rate_fit(a: &RateFitArgs) -> Result<()> {
    let mut records = harness::read_records(Path::new(&a.records)).map_err(input_error)?;
    if let Some(x0) = a.x0 {
        records.retain(|r| r.x0 == x0);
    }
    let fit = harness::fit_rate(&records, a.theory_slope, a.tolerance).map_err(input_error)?;
    print_json(&serde_json::to_value(fit).map_err(deconv_core::Error::from)?)
}
