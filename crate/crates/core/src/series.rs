//! Truncated power series, used for Taylor expansions of `φ_K/φ_ε`.

/// `a·b`, truncated to the length of `a`.
pub(crate) fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len())
        .map(|k| (0..=k).map(|j| a[j] * b.get(k - j).copied().unwrap_or(0.0)).sum())
        .collect()
}

/// `exp(g)` to `len` terms.
pub(crate) fn exp(g: &[f64], len: usize) -> Vec<f64> {
    let coef = |j: usize| g.get(j).copied().unwrap_or(0.0);
    let mut f = vec![0.0; len];
    f[0] = coef(0).exp();
    for k in 1..len {
        f[k] = (1..=k).map(|j| j as f64 * coef(j) * f[k - j]).sum::<f64>() / k as f64;
    }
    f
}

/// `q^alpha` to `len` terms; `q[0]` must be positive.
pub(crate) fn pow(q: &[f64], alpha: f64, len: usize) -> Vec<f64> {
    let coef = |j: usize| q.get(j).copied().unwrap_or(0.0);
    let mut f = vec![0.0; len];
    f[0] = coef(0).powf(alpha);
    for k in 1..len {
        // q f' = alpha q' f
        let s: f64 = (1..=k)
            .map(|j| (alpha * j as f64 - (k - j) as f64) * coef(j) * f[k - j])
            .sum();
        f[k] = s / (k as f64 * coef(0));
    }
    f
}

/// Coefficients of `p(t0 + u)` in powers of `u`, for `p` given in powers of `t`.
pub(crate) fn shift(p: &[f64], t0: f64, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (k, o) in out.iter_mut().enumerate() {
        let mut binom = 1.0;
        let mut acc = 0.0;
        for (i, &c) in p.iter().enumerate().skip(k) {
            if i > k {
                binom = binom * i as f64 / (i - k) as f64;
            }
            acc += c * binom * t0.powi((i - k) as i32);
        }
        *o = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(c: &[f64], u: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &v| acc * u + v)
    }

    #[test]
    fn exp_and_pow_match_closed_forms() {
        let e = exp(&[0.3, 1.5, -0.2], 30);
        let p = pow(&[2.0, 0.4, 1.0], 0.5, 40);
        for u in [0.0, 0.05, -0.1] {
            assert!((eval(&e, u) - (0.3 + 1.5 * u - 0.2 * u * u).exp()).abs() < 1e-13);
            assert!((eval(&p, u) - (2.0 + 0.4 * u + u * u).sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn shift_recentres_polynomial() {
        let p = [1.0, -2.0, 0.5, 3.0];
        let s = shift(&p, 0.7, 4);
        for u in [-0.3, 0.0, 0.9] {
            assert!((eval(&s, u) - eval(&p, 0.7 + u)).abs() < 1e-12);
        }
        assert_eq!(mul(&[1.0, 1.0, 0.0], &[1.0, -1.0]), vec![1.0, 0.0, -1.0]);
    }

    proptest::proptest! {
        #[test]
        fn powers_multiply(q1 in 0.5f64..3.0, q2 in -1.0f64..1.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let q = [q1, q2, 0.25];
            let lhs = mul(&pow(&q, a, 12), &pow(&q, b, 12));
            let rhs = pow(&q, a + b, 12);
            for (l, r) in lhs.iter().zip(&rhs) {
                proptest::prop_assert!((l - r).abs() < 1e-9 * (1.0 + r.abs()));
            }
        }
    }
}
