//! Normal distribution helpers, Kolmogorov–Smirnov check and summary moments.

use statrs::distribution::{ContinuousCDF, Normal};
use libm::erfc;

/// `Φ(z)`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `1 − Φ(z)` without cancellation in the upper tail.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Upper `α` quantile `z_α` with `1 − Φ(z_α) = α`.
pub fn upper_quantile(alpha: f64) -> f64 {
    let std = Normal::standard();
    let mut z = -std.inverse_cdf(alpha);
    // one Newton step on the accurate tail
    let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if density > 0.0 {
        z += (normal_sf(z) - alpha) / density;
    }
    z
}

/// One-sample Kolmogorov–Smirnov result against a continuous CDF.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Kolmogorov–Smirnov statistic of `sample` against `cdf`, with the
/// asymptotic p-value `Q_KS((√n + 0.12 + 0.11/√n)·D)`.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let en = nf.sqrt();
    let p_value = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    KsResult {
        statistic: d,
        p_value,
        n,
    }
}

pub fn ks_normal(sample: &[f64]) -> KsResult {
    ks_test(sample, normal_cdf)
}

/// `Q_KS(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = sign * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Mean, unbiased variance, and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub se: f64,
    pub count: usize,
}

/// Two-pass moments in input order.
pub fn moments(xs: &[f64]) -> Moments {
    let count = xs.len();
    let nf = count as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = if count > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    Moments {
        mean,
        var,
        se: (var / nf).sqrt(),
        count,
    }
}

/// Standard error of a sample variance, `√(var((x−x̄)²)/R)`.
pub fn variance_se(xs: &[f64]) -> f64 {
    let m = moments(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m.mean) * (x - m.mean)).collect();
    moments(&sq).se
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample covariance and its Monte Carlo standard error.
pub fn covariance_with_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mx = moments(xs).mean;
    let my = moments(ys).mean;
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let m = moments(&prods);
    let n = xs.len() as f64;
    (m.mean * n / (n - 1.0), m.se)
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (cov, _) = covariance_with_se(xs, ys);
    cov / (moments(xs).var * moments(ys).var).sqrt()
}

/// Binomial standard error `√(r(1−r)/reps)`.
pub fn binomial_se(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tails() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((upper_quantile(0.05) - 1.6448536269514722).abs() < 1e-9);
        assert!((normal_sf(1.6448536269514722) - 0.05).abs() < 1e-12);
        assert!(normal_sf(40.0) < 1e-300);
        for z in [-3.0, -0.4, 0.0, 1.2, 5.0] {
            assert!((normal_cdf(z) + normal_sf(z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn kolmogorov_q_reference_values() {
        // Q_KS(1.36) ≈ 0.0494, Q_KS(1.63) ≈ 0.0098
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 3e-4);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_normal_quantiles_and_rejects_shift() {
        let n = 1000;
        let std = Normal::standard();
        let q: Vec<f64> = (0..n)
            .map(|i| std.inverse_cdf((i as f64 + 0.5) / n as f64))
            .collect();
        let r = ks_normal(&q);
        assert!(r.statistic < 1e-3 && r.p_value > 0.99);
        let shifted: Vec<f64> = q.iter().map(|x| x + 0.5).collect();
        assert!(ks_normal(&shifted).p_value < 1e-6);
    }

    #[test]
    fn moment_helpers() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.var - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!((binomial_se(0.5, 100) - 0.05).abs() < 1e-15);
    }
}
