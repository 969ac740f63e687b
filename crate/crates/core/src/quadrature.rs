//! Gauss–Legendre rules and trapezoid helpers.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess for the i-th largest root.
            let theta = PI * (4.0 * i as f64 + 3.0) / (4.0 * nf + 2.0);
            let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            nodes[n - 1 - i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared, lazily computed rule of size `n`.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&n) {
            return rule.clone();
        }
        let rule = Arc::new(GaussLegendre::new(n));
        cache
            .lock()
            .expect("quadrature cache poisoned")
            .entry(n)
            .or_insert(rule)
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// The non-negative half of the rule mapped onto `[0, b]` for an even
    /// integrand over `[-b, b]`; the returned weights already carry the factor 2.
    ///
    /// Summing `f(t) w` over these pairs equals the full rule on `[-b, b]`
    /// exactly when `f` is even.
    pub fn even_half(&self, b: f64) -> Vec<(f64, f64)> {
        let n = self.nodes.len();
        let mut out = Vec::with_capacity(n.div_ceil(2));
        for i in 0..n.div_ceil(2) {
            let x = self.nodes[i];
            let w = self.weights[i];
            if x == 0.0 {
                out.push((0.0, b * w));
            } else {
                out.push((b * x, 2.0 * b * w));
            }
        }
        out
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss–Legendre integration of `f` over `[a, b]` with `panels`
/// equal panels, each using `rule`.
pub fn composite<F: Fn(f64) -> f64>(rule: &GaussLegendre, f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + width * p as f64;
            rule.integrate(&f, lo, lo + width)
        })
        .sum()
}

/// Trapezoid rule for samples on a uniform grid of spacing `dx`.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, .., last] => dx * (values.iter().sum::<f64>() - 0.5 * (first + last)),
    }
}

/// Running trapezoid integral; element `i` is the integral from the first
/// sample up to sample `i`.
pub fn cumulative_trapezoid(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * dx * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(5);
        // degree 9 is exact for 5 nodes
        let got = rule.integrate(|x| x.powi(8) + 3.0 * x.powi(3), -1.0, 1.0);
        assert!((got - 2.0 / 9.0).abs() < 1e-14);
        let sum: f64 = rule.weights().iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rule_is_accurate() {
        let rule = GaussLegendre::new(4096);
        let sum: f64 = rule.weights().iter().sum();
        assert!((sum - 2.0).abs() < 1e-12);
        let got = rule.integrate(|t| (50.0 * t).cos(), 0.0, 1.0);
        assert!((got - 50f64.sin() / 50.0).abs() < 1e-13);
    }

    #[test]
    fn even_half_matches_full_rule() {
        for n in [7usize, 8] {
            let rule = GaussLegendre::new(n);
            let f = |t: f64| (1.0 - t * t).powi(3) * (3.0 * t).cos();
            let full = rule.integrate(f, -2.0, 2.0);
            let half: f64 = rule.even_half(2.0).iter().map(|&(t, w)| w * f(t)).sum();
            assert!((full - half).abs() < 1e-14, "{n}: {full} vs {half}");
        }
    }

    #[test]
    fn trapezoid_helpers_agree() {
        let v: Vec<f64> = (0..=100).map(|i| (i as f64 * 0.01).powi(2)).collect();
        let total = trapezoid(&v, 0.01);
        let cum = cumulative_trapezoid(&v, 0.01);
        assert!((total - cum[100]).abs() < 1e-14);
        assert!((total - 1.0 / 3.0).abs() < 1e-4);
    }
}
