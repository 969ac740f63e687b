//! Reductions over Monte Carlo records: rate regression, normality and
//! coverage checks, variance-law ratios.

use std::collections::BTreeMap;

use serde::Serialize;

use super::run::{IntervalRecord, McRecord};
use crate::error::{Error, Result};
use crate::estimators::TheoryMse;
use crate::stats::{self, least_squares};

/// Default slope tolerance for moderate-regime (i.i.d.-like) rates.
pub const MODERATE_RATE_TOLERANCE: f64 = 0.12;
/// Default slope tolerance for strong-dependence and cdf rates.
pub const STRONG_RATE_TOLERANCE: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r2: f64,
    pub theory_slope: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Mean squared error per sample size, in increasing `n`.
pub fn mean_squared_error_by_n(records: &[McRecord]) -> Vec<(usize, f64)> {
    let mut cells: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = cells.entry(r.n).or_insert((0.0, 0));
        e.0 += r.squared_error;
        e.1 += 1;
    }
    cells.into_iter().map(|(n, (s, c))| (n, s / c as f64)).collect()
}

/// Least-squares fit of `ln MSE` on `ln n`.
pub fn fit_rate(records: &[McRecord], theory_slope: f64, tolerance: f64) -> Result<RateFit> {
    fit_rate_points(&mean_squared_error_by_n(records), theory_slope, tolerance)
}

/// [`fit_rate`] on precomputed `(n, mean squared error)` pairs.
pub fn fit_rate_points(cells: &[(usize, f64)], theory_slope: f64, tolerance: f64) -> Result<RateFit> {
    if cells.len() < 4 {
        return Err(Error::Data(format!("rate fit needs at least 4 sample sizes, got {}", cells.len())));
    }
    let lo = cells.iter().map(|c| c.0).min().unwrap_or(0) as f64;
    let hi = cells.iter().map(|c| c.0).max().unwrap_or(0) as f64;
    if hi < 4.0 * lo {
        return Err(Error::Data("rate fit needs sample sizes spanning at least two octaves".into()));
    }
    if let Some((n, m)) = cells.iter().find(|c| !(c.1 > 0.0)) {
        return Err(Error::Data(format!("mean squared error {m} at n = {n} is not positive")));
    }
    let points: Vec<(f64, f64)> = cells.iter().map(|&(n, m)| ((n as f64).ln(), m.ln())).collect();
    let fit = least_squares(&points);
    Ok(RateFit {
        slope: fit.slope,
        intercept: fit.intercept,
        stderr: fit.slope_stderr,
        r2: fit.r2,
        theory_slope,
        tolerance,
        pass: (fit.slope - theory_slope).abs() <= tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltReport {
    pub count: usize,
    pub ks_distance: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Kolmogorov–Smirnov distance and moments of the standardized replicates.
pub fn clt_check(records: &[McRecord]) -> Result<CltReport> {
    let z: Vec<f64> = records
        .iter()
        .map(|r| {
            r.standardized
                .ok_or_else(|| Error::Data("record has no standardized value".into()))
        })
        .collect::<Result<_>>()?;
    clt_check_values(&z)
}

pub fn clt_check_values(z: &[f64]) -> Result<CltReport> {
    if z.len() < 2 {
        return Err(Error::Data("normality check needs at least 2 values".into()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate(
            "standardized values are not finite; the limiting variance is zero".into(),
        ));
    }
    Ok(CltReport {
        count: z.len(),
        ks_distance: stats::ks_distance_normal(z),
        mean: stats::mean(z),
        sd: stats::variance(z).sqrt(),
    })
}

/// Fraction of intervals containing the truth.
pub fn coverage_check(intervals: &[IntervalRecord]) -> f64 {
    if intervals.is_empty() {
        return f64::NAN;
    }
    intervals.iter().filter(|i| i.lo <= i.truth && i.truth <= i.hi).count() as f64 / intervals.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarLawReport {
    pub n: usize,
    pub x0: f64,
    pub h: f64,
    pub empirical_var: f64,
    pub var_iid_term: f64,
    pub var_lrd_term: f64,
    /// Empirical variance over the sum of the theoretical terms.
    pub ratio_total: f64,
    pub ratio_iid: Option<f64>,
    pub ratio_lrd: Option<f64>,
}

/// Compares the replicate variance of the estimates with the theoretical
/// variance terms.
pub fn var_law_check(records: &[McRecord], theory: &TheoryMse) -> Result<VarLawReport> {
    let first = records.first().ok_or_else(|| Error::Data("no records".into()))?;
    let est: Vec<f64> = records.iter().map(|r| r.estimate).collect();
    if est.len() < 2 {
        return Err(Error::Data("variance needs at least 2 replicates".into()));
    }
    let v = stats::variance(&est);
    let ratio = |t: f64| if t > 0.0 { Some(v / t) } else { None };
    Ok(VarLawReport {
        n: first.n,
        x0: first.x0,
        h: first.h,
        empirical_var: v,
        var_iid_term: theory.var_iid_term,
        var_lrd_term: theory.var_lrd_term,
        ratio_total: v / theory.variance(),
        ratio_iid: ratio(theory.var_iid_term),
        ratio_lrd: ratio(theory.var_lrd_term),
    })
}
