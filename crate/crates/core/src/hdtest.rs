//! One- and two-sample tests of the mean vector.
//!
//! The one-sample statistic is `Mₙ = X̄ᵀX̄ − n⁻¹ tr̂(Ωₙ)`, unbiased for `μᵀμ`,
//! standardized by an estimate of `var(Mₙ) ≈ (2/n²) tr(Ωₙ²)`. Large positive
//! values are evidence against `μ = 0`, so the test rejects in the upper tail.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::autocov::{
    estimator_system, lag_traces, trace_omega_hat, unbiased_long_run_weights, EstimatorSystem,
};
use crate::error::{Error, Result};
use crate::linalg::{cross_gram, psd_sqrt, trace_lagged_product, SampleMatrix};
use crate::procsim::{omega_n, AutocovSequence};
use crate::stats::{normal_cdf, normal_sf, upper_quantile};

/// How `tr(Ωₙ²)` is estimated from data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMethod {
    /// `Σ_{h,k} (1−|h|/n)(1−|k|/n) tr(Γ̂(h)Γ̂(k))` on the full sample.
    Plugin,
    /// `tr(Ω̂⁽¹⁾Ω̂⁽²⁾)` from two halves separated by a gap of `M` rows. Each
    /// half's `Ω̂` reweights its `Γ̂(h)` so that it is unbiased despite the
    /// within-half centering, which makes the cross product unbiased for
    /// `tr(Ωₙ²)`.
    #[default]
    Split,
}

impl fmt::Display for VarianceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceMethod::Plugin => "plugin",
            VarianceMethod::Split => "split",
        })
    }
}

impl FromStr for VarianceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plugin" => Ok(VarianceMethod::Plugin),
            "split" => Ok(VarianceMethod::Split),
            other => Err(Error::InvalidData(format!("unknown variance method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestMeta {
    /// `[n]` for one sample, `[n₁, n₂]` for two.
    pub n: Vec<usize>,
    pub p: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub variance_method: VarianceMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub m_stat: f64,
    pub var_hat: f64,
    pub z: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub meta: TestMeta,
}

impl TestResult {
    fn assemble(m_stat: f64, var_hat: f64, alpha: f64, meta: TestMeta) -> Self {
        let z = m_stat / var_hat.sqrt();
        let mut p_value = normal_sf(z);
        if p_value < 1e-300 {
            p_value = 0.0;
        }
        TestResult {
            m_stat,
            var_hat,
            z,
            p_value,
            reject: z > upper_quantile(alpha),
            alpha,
            meta,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidData(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `Mₙ = X̄ᵀX̄ − n⁻¹ βₙᵀγ̂ₙ`.
pub fn m_statistic(x: &SampleMatrix, m: usize) -> Result<f64> {
    if m >= x.n() {
        return Err(Error::Lag { lag: m, n: x.n() });
    }
    let sys = estimator_system(x.n(), m)?;
    m_statistic_with(x, &sys)
}

/// `Mₙ` with a prebuilt estimator system, for repeated evaluation.
pub fn m_statistic_with(x: &SampleMatrix, sys: &EstimatorSystem) -> Result<f64> {
    let mean = x.mean();
    Ok(mean.dot(&mean) - trace_omega_hat(x, sys)? / x.n() as f64)
}

/// `tr(A B)` for square matrices without forming the product.
fn trace_of_product(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    a.iter().zip(b.t().iter()).map(|(x, y)| x * y).sum()
}

/// `(2/n²) tr(Ωₙ²)`.
pub fn var_mn_population(gam: &AutocovSequence, n: usize) -> Result<f64> {
    let om = omega_n(gam, n)?;
    Ok(2.0 / (n as f64 * n as f64) * trace_of_product(om.view(), om.view()))
}

/// Lag weights `(1 − |h|/n)` for `h = −M..=M`.
fn lag_weights(m: usize, n: usize) -> Vec<(isize, f64)> {
    (-(m as isize)..=m as isize)
        .map(|h| (h, 1.0 - h.unsigned_abs() as f64 / n as f64))
        .collect()
}

/// `Σ_{a,b} w_a w_b tr(Γ̂_x(a) Γ̂_y(b))` from centered blocks `x` and `y`.
///
/// `wx`/`wy` are the lag weights of the two long-run covariance estimates and
/// `dx`/`dy` the autocovariance divisors.
fn weighted_cross_trace(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    wx: &[(isize, f64)],
    wy: &[(isize, f64)],
    dx: f64,
    dy: f64,
) -> f64 {
    let g = cross_gram(x, y);
    let mut acc = 0.0;
    for &(a, wa) in wx {
        for &(b, wb) in wy {
            acc += wa * wb * trace_lagged_product(g.view(), a, b, dx, dy);
        }
    }
    acc
}

/// Rejects data whose centered spread is at round-off level.
fn check_spread(x: &SampleMatrix) -> Result<()> {
    let raw = x.data().iter().map(|v| v * v).sum::<f64>() / x.n() as f64;
    let centered = lag_traces(x, 0)?.values[0];
    if !(centered > 1e-24 * raw.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateVariance(format!(
            "sample has no variation (tr Γ̂(0) = {centered:e})"
        )));
    }
    Ok(())
}

/// Estimate of `tr(Ωₙ²)` where `Ωₙ` uses the weights of length `n_target`.
fn trace_omega_sq_hat(
    x: &SampleMatrix,
    m: usize,
    n_target: usize,
    method: VarianceMethod,
) -> Result<f64> {
    let n = x.n();
    let w = lag_weights(m, n_target);
    let c = x.centered();
    match method {
        VarianceMethod::Plugin => Ok(weighted_cross_trace(
            c.view(),
            c.view(),
            &w,
            &w,
            n as f64,
            n as f64,
        )),
        VarianceMethod::Split => {
            let half = (n - m) / 2;
            let first = x.slice_rows(0, half)?;
            let second = x.slice_rows(n - half, n)?;
            let c1 = first.centered();
            let c2 = second.centered();
            let v = unbiased_long_run_weights(half, m, n_target)?;
            Ok(weighted_cross_trace(
                c1.view(),
                c2.view(),
                &v,
                &v,
                half as f64,
                half as f64,
            ))
        }
    }
}

fn positive_variance(v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::DegenerateVariance(format!("estimate {v:e} is not positive")))
    }
}

fn check_lag_quarter(x: &SampleMatrix, m: usize) -> Result<()> {
    if 4 * m >= x.n() {
        return Err(Error::Lag { lag: m, n: x.n() });
    }
    Ok(())
}

/// Estimate of `var(Mₙ) ≈ (2/n²) tr(Ωₙ²)`.
pub fn var_mn_hat(x: &SampleMatrix, m: usize, method: VarianceMethod) -> Result<f64> {
    check_lag_quarter(x, m)?;
    check_spread(x)?;
    let n = x.n() as f64;
    let tr = trace_omega_sq_hat(x, m, x.n(), method)?;
    positive_variance(2.0 / (n * n) * tr)
}

pub fn one_sample_test(
    x: &SampleMatrix,
    m: usize,
    alpha: f64,
    method: VarianceMethod,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let m_stat = m_statistic(x, m)?;
    let var_hat = var_mn_hat(x, m, method)?;
    Ok(TestResult::assemble(
        m_stat,
        var_hat,
        alpha,
        TestMeta {
            n: vec![x.n()],
            p: x.p(),
            m,
            variance_method: method,
        },
    ))
}

fn check_pair(x1: &SampleMatrix, x2: &SampleMatrix, m: usize) -> Result<()> {
    if x1.p() != x2.p() {
        return Err(Error::InvalidData(format!(
            "groups have different dimensions {} and {}",
            x1.p(),
            x2.p()
        )));
    }
    let n = x1.n().min(x2.n());
    if m >= n {
        return Err(Error::Lag { lag: m, n });
    }
    Ok(())
}

/// `(X̄₁−X̄₂)ᵀ(X̄₁−X̄₂) − n₁⁻¹ tr̂(Ω⁽¹⁾) − n₂⁻¹ tr̂(Ω⁽²⁾)`.
pub fn two_sample_statistic(x1: &SampleMatrix, x2: &SampleMatrix, m: usize) -> Result<f64> {
    check_pair(x1, x2, m)?;
    let s1 = estimator_system(x1.n(), m)?;
    let s2 = estimator_system(x2.n(), m)?;
    two_sample_statistic_with(x1, x2, &s1, &s2)
}

pub fn two_sample_statistic_with(
    x1: &SampleMatrix,
    x2: &SampleMatrix,
    s1: &EstimatorSystem,
    s2: &EstimatorSystem,
) -> Result<f64> {
    let d: Array1<f64> = x1.mean() - x2.mean();
    let t1 = trace_omega_hat(x1, s1)? / x1.n() as f64;
    let t2 = trace_omega_hat(x2, s2)? / x2.n() as f64;
    Ok(d.dot(&d) - (t1 + t2))
}

/// `(2/n₁²) tr(Ω₁²) + (2/n₂²) tr(Ω₂²) + (4/(n₁n₂)) tr(Ω₁Ω₂)`.
pub fn two_sample_variance(
    gam1: &AutocovSequence,
    gam2: &AutocovSequence,
    n1: usize,
    n2: usize,
) -> Result<f64> {
    if gam1.p() != gam2.p() {
        return Err(Error::InvalidData("autocovariances differ in dimension".into()));
    }
    let o1 = omega_n(gam1, n1)?;
    let o2 = omega_n(gam2, n2)?;
    let (a, b) = (n1 as f64, n2 as f64);
    Ok(2.0 / (a * a) * trace_of_product(o1.view(), o1.view())
        + 2.0 / (b * b) * trace_of_product(o2.view(), o2.view())
        + 4.0 / (a * b) * trace_of_product(o1.view(), o2.view()))
}

/// Data version of [`two_sample_variance`]. The cross term pairs the two
/// independent groups directly; with [`VarianceMethod::Split`] both of its
/// factors are centering-corrected so it is unbiased.
pub fn two_sample_var_hat(
    x1: &SampleMatrix,
    x2: &SampleMatrix,
    m: usize,
    method: VarianceMethod,
) -> Result<f64> {
    check_pair(x1, x2, m)?;
    check_lag_quarter(x1, m)?;
    check_lag_quarter(x2, m)?;
    check_spread(x1)?;
    check_spread(x2)?;
    let (n1, n2) = (x1.n(), x2.n());
    let (a, b) = (n1 as f64, n2 as f64);
    let sq1 = trace_omega_sq_hat(x1, m, n1, method)?;
    let sq2 = trace_omega_sq_hat(x2, m, n2, method)?;
    let c1 = x1.centered();
    let c2 = x2.centered();
    let (w1, w2) = match method {
        VarianceMethod::Plugin => (lag_weights(m, n1), lag_weights(m, n2)),
        VarianceMethod::Split => (
            unbiased_long_run_weights(n1, m, n1)?,
            unbiased_long_run_weights(n2, m, n2)?,
        ),
    };
    let cross = weighted_cross_trace(c1.view(), c2.view(), &w1, &w2, a, b);
    positive_variance(2.0 / (a * a) * sq1 + 2.0 / (b * b) * sq2 + 4.0 / (a * b) * cross)
}

pub fn two_sample_test(
    x1: &SampleMatrix,
    x2: &SampleMatrix,
    m: usize,
    alpha: f64,
    method: VarianceMethod,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let m_stat = two_sample_statistic(x1, x2, m)?;
    let var_hat = two_sample_var_hat(x1, x2, m, method)?;
    Ok(TestResult::assemble(
        m_stat,
        var_hat,
        alpha,
        TestMeta {
            n: vec![x1.n(), x2.n()],
            p: x1.p(),
            m,
            variance_method: method,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub power: f64,
    /// `n μᵀμ / √(2 tr Ωₙ²)`.
    pub ncp: f64,
    /// `μᵀ[Γ(h)Γ(−h)]^{1/2}μ / ((M+1)⁻¹ n⁻¹ tr Ωₙ²)` for `h = 0..=M`.
    /// Finite-sample diagnostics of the local-alternative condition; small
    /// values indicate the power approximation is appropriate.
    pub local_alt_ratios: Vec<f64>,
}

/// `Φ(−z_α + n μᵀμ / √(2 tr Ωₙ²))` and the local-alternative ratios.
pub fn asymptotic_power(
    mu: &Array1<f64>,
    gam: &AutocovSequence,
    n: usize,
    alpha: f64,
) -> Result<PowerReport> {
    check_alpha(alpha)?;
    if mu.len() != gam.p() {
        return Err(Error::InvalidData(format!(
            "mean has length {}, expected {}",
            mu.len(),
            gam.p()
        )));
    }
    let om = omega_n(gam, n)?;
    let tr_sq = trace_of_product(om.view(), om.view());
    let nf = n as f64;
    let ncp = nf * mu.dot(mu) / (2.0 * tr_sq).sqrt();
    let power = normal_cdf(-upper_quantile(alpha) + ncp);
    let m = gam.lag();
    let denom = tr_sq / ((m + 1) as f64 * nf);
    let local_alt_ratios = (0..=m as isize)
        .map(|h| {
            let g = gam.get(h);
            let prod = g.dot(&g.t());
            let root = psd_sqrt(prod.view())?;
            Ok(mu.dot(&root.dot(mu)).max(0.0) / denom)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PowerReport {
        power,
        ncp,
        local_alt_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autocov::pi_weights;
    use crate::procsim::{implied_autocov, sample_path, ProcessSpec};
    use ndarray::{array, Array2};

    fn lcg_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut state = seed;
        Array2::from_shape_fn((n, p), |_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    fn explicit_autocov(c: &Array2<f64>, lag: isize, n: f64) -> Array2<f64> {
        let len = c.nrows() as isize;
        let p = c.ncols();
        let mut out = Array2::zeros((p, p));
        for t in 0..len {
            let u = t + lag;
            if (0..len).contains(&u) {
                for i in 0..p {
                    for j in 0..p {
                        out[[i, j]] += c[[t as usize, i]] * c[[u as usize, j]];
                    }
                }
            }
        }
        out / n
    }

    fn explicit_omega(c: &Array2<f64>, m: usize, n_target: usize) -> Array2<f64> {
        let w: Vec<(isize, f64)> = (-(m as isize)..=m as isize)
            .map(|h| (h, 1.0 - h.unsigned_abs() as f64 / n_target as f64))
            .collect();
        explicit_weighted(c, &w)
    }

    fn explicit_weighted(c: &Array2<f64>, w: &[(isize, f64)]) -> Array2<f64> {
        let p = c.ncols();
        let mut om = Array2::zeros((p, p));
        for &(h, wh) in w {
            om = om + explicit_autocov(c, h, c.nrows() as f64) * wh;
        }
        om
    }

    #[test]
    fn constant_rows_give_squared_norm() {
        let x = SampleMatrix::from_rows(&vec![vec![1.0, -2.0, 0.5]; 10]).unwrap();
        let m = m_statistic(&x, 1).unwrap();
        assert!((m - 5.25).abs() < 1e-12);
    }

    #[test]
    fn iid_reduction_uses_sample_covariance() {
        let x = SampleMatrix::new(lcg_matrix(12, 3, 8)).unwrap();
        let mean = x.mean();
        let c = x.centered();
        let tr_s = c.iter().map(|v| v * v).sum::<f64>() / 11.0;
        let want = mean.dot(&mean) - tr_s / 12.0;
        assert!((m_statistic(&x, 0).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn m_statistic_equals_pi_quadratic_form() {
        let x = SampleMatrix::new(lcg_matrix(18, 5, 31)).unwrap();
        let sys = estimator_system(18, 3).unwrap();
        let qf = pi_weights(&sys).quadratic_form(&x).unwrap();
        assert!((m_statistic(&x, 3).unwrap() - qf).abs() < 1e-10);
    }

    #[test]
    fn population_variance_examples() {
        let iid = AutocovSequence::new(vec![array![[3.0]]]).unwrap();
        assert!((var_mn_population(&iid, 10).unwrap() - 2.0 * 9.0 / 100.0).abs() < 1e-15);
        let gam = AutocovSequence::new(vec![Array2::eye(2), Array2::eye(2) * 0.5]).unwrap();
        assert!((var_mn_population(&gam, 4).unwrap() - 0.765625).abs() < 1e-15);
    }

    #[test]
    fn plugin_matches_explicit_formation() {
        let x = SampleMatrix::new(lcg_matrix(14, 6, 2)).unwrap();
        let c = x.centered();
        let om = explicit_omega(&c, 2, 14);
        let want = 2.0 / 196.0 * om.dot(&om).diag().sum();
        let got = var_mn_hat(&x, 2, VarianceMethod::Plugin).unwrap();
        assert!((got - want).abs() < 1e-10 * want);
    }

    #[test]
    fn split_matches_explicit_formation() {
        let n = 21;
        let m = 2;
        let x = SampleMatrix::new(lcg_matrix(n, 30, 4)).unwrap();
        let half = (n - m) / 2;
        let a = x.slice_rows(0, half).unwrap().centered();
        let b = x.slice_rows(n - half, n).unwrap().centered();
        let v = unbiased_long_run_weights(half, m, n).unwrap();
        let oa = explicit_weighted(&a, &v);
        let ob = explicit_weighted(&b, &v);
        let want = 2.0 / (n * n) as f64 * oa.dot(&ob).diag().sum();
        let got = var_mn_hat(&x, m, VarianceMethod::Split).unwrap();
        assert!((got - want).abs() < 1e-10 * want.abs());
    }

    #[test]
    fn constant_data_is_degenerate() {
        let x = SampleMatrix::from_rows(&vec![vec![0.1, 0.7]; 40]).unwrap();
        for method in [VarianceMethod::Plugin, VarianceMethod::Split] {
            assert!(matches!(
                var_mn_hat(&x, 1, method),
                Err(Error::DegenerateVariance(_))
            ));
        }
    }

    #[test]
    fn variance_lag_precondition() {
        let x = SampleMatrix::new(lcg_matrix(12, 2, 1)).unwrap();
        assert!(matches!(
            var_mn_hat(&x, 3, VarianceMethod::Split),
            Err(Error::Lag { .. })
        ));
    }

    #[test]
    fn test_result_invariants() {
        let spec = ProcessSpec::scaled_identity(20, &[1.0, 0.5]).unwrap();
        let x = sample_path(&spec, 80, 5).unwrap();
        let r = one_sample_test(&x, 1, 0.05, VarianceMethod::Split).unwrap();
        assert!((r.p_value + normal_cdf(r.z) - 1.0).abs() < 1e-12);
        assert_eq!(r.reject, r.z > upper_quantile(0.05));
        assert!(r.var_hat > 0.0);
        assert_eq!(r.meta.n, vec![80]);

        let shifted = x.shifted(&Array1::from_elem(20, 3.0)).unwrap();
        let r = one_sample_test(&shifted, 1, 0.05, VarianceMethod::Split).unwrap();
        assert!(r.reject);
        assert_eq!(r.p_value, 0.0);

        assert!(one_sample_test(&x, 1, 1.0, VarianceMethod::Split).is_err());
    }

    #[test]
    fn two_sample_scalar_variance() {
        let g1 = AutocovSequence::new(vec![array![[1.0]]]).unwrap();
        let g2 = AutocovSequence::new(vec![array![[2.0]]]).unwrap();
        let v = two_sample_variance(&g1, &g2, 10, 10).unwrap();
        assert!((v - 0.18).abs() < 1e-15);

        let gam = implied_autocov(&ProcessSpec::scaled_identity(3, &[1.0, 0.4]).unwrap());
        let om = omega_n(&gam, 50).unwrap();
        let want = 8.0 * om.dot(&om).diag().sum() / 2500.0;
        assert!((two_sample_variance(&gam, &gam, 50, 50).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn two_sample_symmetry_and_degenerate_cases() {
        let x1 = SampleMatrix::new(lcg_matrix(25, 4, 10)).unwrap();
        let x2 = SampleMatrix::new(lcg_matrix(31, 4, 11)).unwrap();
        let a = two_sample_statistic(&x1, &x2, 2).unwrap();
        let b = two_sample_statistic(&x2, &x1, 2).unwrap();
        assert_eq!(a, b);

        let c = SampleMatrix::from_rows(&vec![vec![1.0, 1.0]; 10]).unwrap();
        assert!(two_sample_statistic(&c, &c, 1).unwrap().abs() < 1e-14);

        let y = SampleMatrix::new(lcg_matrix(25, 3, 12)).unwrap();
        assert!(matches!(
            two_sample_statistic(&x1, &y, 1),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn two_sample_var_hat_cross_term_matches_explicit() {
        let x1 = SampleMatrix::new(lcg_matrix(24, 5, 20)).unwrap();
        let x2 = SampleMatrix::new(lcg_matrix(17, 5, 21)).unwrap();
        let m = 1;
        let c1 = x1.centered();
        let c2 = x2.centered();
        let o1 = explicit_omega(&c1, m, 24);
        let o2 = explicit_omega(&c2, m, 17);
        let want = 2.0 / 576.0 * o1.dot(&o1).diag().sum()
            + 2.0 / 289.0 * o2.dot(&o2).diag().sum()
            + 4.0 / (24.0 * 17.0) * o1.dot(&o2).diag().sum();
        let got = two_sample_var_hat(&x1, &x2, m, VarianceMethod::Plugin).unwrap();
        assert!((got - want).abs() < 1e-10 * want);
    }

    #[test]
    fn power_examples() {
        let gam = implied_autocov(&ProcessSpec::scaled_identity(10, &[1.0, 0.5]).unwrap());
        let zero = Array1::zeros(10);
        let r = asymptotic_power(&zero, &gam, 100, 0.05).unwrap();
        assert!((r.power - 0.05).abs() < 1e-12);
        assert_eq!(r.ncp, 0.0);
        assert!(r.local_alt_ratios.iter().all(|&v| v == 0.0));

        let mut last = r.power;
        for scale in [0.1, 0.2, 0.4, 0.8, 1.6] {
            let mu = Array1::from_elem(10, scale);
            let r = asymptotic_power(&mu, &gam, 100, 0.05).unwrap();
            assert!(r.power > last || (last == 1.0 && r.power == 1.0));
            assert!(r.local_alt_ratios.iter().all(|&v| v >= 0.0));
            last = r.power;
        }
        assert!(last > 0.999);
    }

    #[test]
    fn local_alt_ratio_matches_hand_value() {
        // Γ(0) = 1.25 I, Γ(1) = 0.5 I → [Γ(1)Γ(−1)]^{1/2} = 0.5 I
        let gam = implied_autocov(&ProcessSpec::scaled_identity(4, &[1.0, 0.5]).unwrap());
        let mu = array![1.0, 0.0, 0.0, 0.0];
        let n = 10;
        let r = asymptotic_power(&mu, &gam, n, 0.05).unwrap();
        let om = 1.25 + 2.0 * 0.9 * 0.5;
        let denom = 4.0 * om * om / (2.0 * 10.0);
        assert!((r.local_alt_ratios[0] - 1.25 / denom).abs() < 1e-12);
        assert!((r.local_alt_ratios[1] - 0.5 / denom).abs() < 1e-12);
    }

    #[test]
    fn variance_method_parsing() {
        assert_eq!("plugin".parse::<VarianceMethod>().unwrap(), VarianceMethod::Plugin);
        assert_eq!("split".parse::<VarianceMethod>().unwrap(), VarianceMethod::Split);
        assert!("bogus".parse::<VarianceMethod>().is_err());
        assert_eq!(VarianceMethod::default(), VarianceMethod::Split);
    }
}
