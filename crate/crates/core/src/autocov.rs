//! Sample autocovariances and the unbiased estimator of `tr(Ωₙ)`.
//!
//! With `γ = (tr Γ(0), …, tr Γ(M))` and `γ̂ₙ` its naive sample counterpart,
//! `E γ̂ₙ = Θₙ γ` for a coefficient matrix `Θₙ` that depends only on `(n, M)`.
//! Since `tr(Ωₙ) = bₙᵀγ`, the estimator `βₙᵀγ̂ₙ` with `βₙ = Θₙ⁻¹bₙ` is
//! unbiased for `tr(Ωₙ)` whatever the mean of the process.

use nalgebra::DVector;
use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{to_nalgebra, SampleMatrix};

/// `Γ̂(h) = (1/n) Σ_{t=1}^{n−h} (X_t − X̄)(X_{t+h} − X̄)ᵀ`, `Γ̂(−h) = Γ̂(h)ᵀ`.
pub fn sample_autocov(x: &SampleMatrix, h: isize) -> Result<Array2<f64>> {
    let n = x.n();
    let lag = h.unsigned_abs();
    if lag >= n {
        return Err(Error::Lag { lag, n });
    }
    let c = x.centered();
    let lead = c.slice(ndarray::s![..n - lag, ..]);
    let trail = c.slice(ndarray::s![lag.., ..]);
    let g = lead.t().dot(&trail) / n as f64;
    Ok(if h < 0 { g.t().to_owned() } else { g })
}

/// `(tr Γ̂(0), …, tr Γ̂(M))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagTraceVector {
    pub values: Vec<f64>,
}

impl LagTraceVector {
    pub fn lag(&self) -> usize {
        self.values.len() - 1
    }
}

/// Lag traces from the Gram diagonals `g[t][t+h]`, computed row pair by row
/// pair; neither the `n×n` Gram matrix nor any `p×p` matrix is formed.
pub fn lag_traces(x: &SampleMatrix, m: usize) -> Result<LagTraceVector> {
    let n = x.n();
    if m >= n {
        return Err(Error::Lag { lag: m, n });
    }
    Ok(lag_traces_centered(x.centered().view(), m, n as f64))
}

pub(crate) fn lag_traces_centered(c: ArrayView2<f64>, m: usize, divisor: f64) -> LagTraceVector {
    let n = c.nrows();
    let values = (0..=m)
        .map(|h| {
            let mut acc = 0.0;
            for t in 0..n - h {
                acc += c.row(t).dot(&c.row(t + h));
            }
            acc / divisor
        })
        .collect();
    LagTraceVector { values }
}

/// `bₙ = (1, 2(1 − 1/n), …, 2(1 − M/n))`, so that `tr(Ωₙ) = bₙᵀγ`.
pub fn weight_vector(n: usize, m: usize) -> Result<Vec<f64>> {
    if n <= m {
        return Err(Error::Lag { lag: m, n });
    }
    Ok((0..=m)
        .map(|h| {
            if h == 0 {
                1.0
            } else {
                2.0 * (1.0 - h as f64 / n as f64)
            }
        })
        .collect())
}

/// Size of `[lo1, hi1] ∩ [lo2, hi2]` over the integers.
fn overlap(lo1: i64, hi1: i64, lo2: i64, hi2: i64) -> i64 {
    (hi1.min(hi2) - lo1.max(lo2) + 1).max(0)
}

/// `Θₙ` with `E γ̂ₙ = Θₙ γ` for any M-dependent stationary process.
///
/// Expanding `E[(X_t − X̄)ᵀ(X_{t+h} − X̄)]` gives, for 0-based times,
///
/// ```text
/// n·Θ(h,k) = (n−h)·δ_hk
///          − (1/n) Σ_{k'=±k} #{t < n−h : 0 ≤ t+k' < n}
///          − (1/n) Σ_{k'=±k} #{t < n−h : 0 ≤ t+h+k' < n}
///          + (n−h)(n−k)·m_k / n²
/// ```
///
/// with `m_0 = 1` and `m_k = 2` otherwise.
pub fn coefficient_matrix(n: usize, m: usize) -> Result<Array2<f64>> {
    if n <= 2 * m + 2 {
        return Err(Error::System(format!(
            "need n > 2M + 2, got n = {n}, M = {m}"
        )));
    }
    let nf = n as f64;
    let ni = n as i64;
    Ok(Array2::from_shape_fn((m + 1, m + 1), |(h, k)| {
        let (hi, ki) = (h as i64, k as i64);
        let signs: &[i64] = if k == 0 { &[0] } else { &[ki, -ki] };
        let mut cross = 0;
        for &kp in signs {
            cross += overlap(0, ni - hi - 1, -kp, ni - 1 - kp);
            cross += overlap(0, ni - hi - 1, -hi - kp, ni - 1 - hi - kp);
        }
        let mult = if k == 0 { 1.0 } else { 2.0 };
        let diag = if h == k { (ni - hi) as f64 } else { 0.0 };
        let grand = (ni - hi) as f64 * (ni - ki) as f64 * mult / (nf * nf);
        (diag - cross as f64 / nf + grand) / nf
    }))
}

/// Matrix-level analogue of `Θₙ`: for a centered sample of length `len`,
/// `E Γ̂(h) = Σ_{k=−M}^{M} Ψ(h,k) Γ(k)` for `h, k ∈ −M..=M`.
///
/// Row/column index `i` corresponds to lag `i − M`. Summing `Ψ(h,k)` and
/// `Ψ(h,−k)` recovers `Θₙ(h,k)`.
pub fn lag_bias_matrix(len: usize, m: usize) -> Result<Array2<f64>> {
    if len <= 2 * m + 2 {
        return Err(Error::System(format!(
            "need length > 2M + 2, got {len} with M = {m}"
        )));
    }
    let lf = len as f64;
    let li = len as i64;
    let mi = m as i64;
    Ok(Array2::from_shape_fn((2 * m + 1, 2 * m + 1), |(i, j)| {
        let h = i as i64 - mi;
        let k = j as i64 - mi;
        // t ranges over the start indices valid for lag h
        let (lo, hi) = (0.max(-h), (li - 1).min(li - 1 - h));
        let cross = overlap(lo, hi, -k, li - 1 - k) + overlap(lo, hi, k - h, li - 1 - h + k);
        let count = (hi - lo + 1) as f64;
        let diag = if h == k { count } else { 0.0 };
        let grand = count * (li - k.abs()) as f64 / (lf * lf);
        (diag - cross as f64 / lf + grand) / lf
    }))
}

/// Lag weights `v_h` (for `h = −M..=M`) such that `Σ_h v_h Γ̂(h)` computed on
/// a centered sample of length `len` is unbiased for
/// `Σ_h (1 − |h|/n_target) Γ(h)`.
pub fn unbiased_long_run_weights(len: usize, m: usize, n_target: usize) -> Result<Vec<(isize, f64)>> {
    let psi = lag_bias_matrix(len, m)?;
    let target: Vec<f64> = (-(m as isize)..=m as isize)
        .map(|h| 1.0 - h.unsigned_abs() as f64 / n_target as f64)
        .collect();
    // E Σ_h v_h Γ̂(h) = Σ_k (Ψᵀv)_k Γ(k), so solve Ψᵀ v = target
    let v = to_nalgebra(psi.t())
        .lu()
        .solve(&DVector::from_column_slice(&target))
        .ok_or_else(|| Error::System("lag bias matrix is singular".into()))?;
    Ok((-(m as isize)..=m as isize).zip(v.iter().copied()).collect())
}

/// `(n, M, bₙ, Θₙ, βₙ)` plus the 2-norm condition number of `Θₙ`.
///
/// `Θₙ` maps `γ` to `E[γ̂ₙ]` row by row, so `E[βᵀγ̂ₙ] = (Θₙᵀβ)ᵀγ`; the
/// weights solve `Θₙᵀβₙ = bₙ`, making `βₙᵀγ̂ₙ = bₙᵀΘₙ⁻¹γ̂ₙ` unbiased for
/// `bₙᵀγ = tr(Ωₙ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSystem {
    pub n: usize,
    pub m: usize,
    pub b: Vec<f64>,
    pub theta: Array2<f64>,
    pub beta: Vec<f64>,
    pub cond: f64,
}

const MAX_CONDITION: f64 = 1e8;

pub fn estimator_system(n: usize, m: usize) -> Result<EstimatorSystem> {
    let b = weight_vector(n, m)?;
    let theta = coefficient_matrix(n, m)?;
    let t = to_nalgebra(theta.view());
    let sv = t.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::System(format!("Θₙ condition number {cond:e}")));
    }
    let beta = t
        .transpose()
        .lu()
        .solve(&DVector::from_column_slice(&b))
        .ok_or_else(|| Error::System("Θₙ is singular".into()))?;
    let beta: Vec<f64> = beta.iter().copied().collect();
    let sys = EstimatorSystem {
        n,
        m,
        b,
        theta,
        beta,
        cond,
    };
    let resid = sys.residual();
    if resid > 1e-9 {
        return Err(Error::System(format!("solve residual {resid:e}")));
    }
    Ok(sys)
}

impl EstimatorSystem {
    /// `max_h |(Θᵀβ − b)_h| / max(1, ‖b‖_∞)`.
    pub fn residual(&self) -> f64 {
        let beta = Array1::from(self.beta.clone());
        let tb = self.theta.t().dot(&beta);
        let scale = self.b.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        tb.iter()
            .zip(&self.b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale
    }
}

/// `βₙᵀ γ̂ₙ`, unbiased for `tr(Ωₙ)`.
pub fn trace_omega_hat(x: &SampleMatrix, sys: &EstimatorSystem) -> Result<f64> {
    if sys.n != x.n() {
        return Err(Error::InvalidData(format!(
            "estimator system built for n = {}, data has n = {}",
            sys.n,
            x.n()
        )));
    }
    let gh = lag_traces(x, sys.m)?;
    Ok(dot(&sys.beta, &gh.values))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weights `πₙ(t,s)` with `Σ_{t,s} πₙ(t,s) X_tᵀX_s = Mₙ(X)` for every `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiWeights {
    pub weights: Array2<f64>,
}

impl PiWeights {
    /// `Σ_{t,s} πₙ(t,s) X_tᵀX_s`.
    pub fn quadratic_form(&self, x: &SampleMatrix) -> Result<f64> {
        if self.weights.nrows() != x.n() {
            return Err(Error::InvalidData(format!(
                "weights are for n = {}, data has n = {}",
                self.weights.nrows(),
                x.n()
            )));
        }
        let raw = x.data().dot(&x.data().t());
        Ok((&raw * &self.weights).sum())
    }
}

/// Symmetric `πₙ` obtained by expanding `X̄ᵀX̄ − n⁻¹βₙᵀγ̂ₙ` as a quadratic
/// form in the raw rows.
///
/// With `C = I − J/n`, `γ̂(h) = (1/n) Σ_{u,v} [Σ_{t<n−h} C_{tu} C_{t+h,v}] X_uᵀX_v`
/// and the bracket equals
/// `1{u < n−h}·1{v = u+h} − 1{u < n−h}/n − 1{v ≥ h}/n + (n−h)/n²`.
pub fn pi_weights(sys: &EstimatorSystem) -> PiWeights {
    let n = sys.n;
    let nf = n as f64;
    let mut w = Array2::from_elem((n, n), 1.0 / (nf * nf));
    for (h, &beta) in sys.beta.iter().enumerate() {
        let c = beta / (nf * nf);
        let tail = (nf - h as f64) / (nf * nf);
        for u in 0..n {
            let lead = if u + h < n { 1.0 } else { 0.0 };
            for v in 0..n {
                let shift = if u + h < n && v == u + h { 1.0 } else { 0.0 };
                let trail = if v >= h { 1.0 } else { 0.0 };
                w[[u, v]] -= c * (shift - lead / nf - trail / nf + tail);
            }
        }
    }
    let sym = (&w + &w.t()) * 0.5;
    PiWeights { weights: sym }
}

/// The closed-form `πₙ(t,s)` in the published correction, evaluated literally
/// with the sum over `h = 0..M` (1-based `t, s`):
///
/// ```text
/// π(t,s) = n⁻²{1 − n⁻¹ Σ_h (1 − h/n) β_h}
///        − Σ_h { β_h n⁻¹ 1(t+h = s) − β_h n⁻² (1(t ≤ n−h) + 1(t > h)) }
/// ```
pub fn printed_pi_weights(sys: &EstimatorSystem) -> PiWeights {
    let n = sys.n;
    let nf = n as f64;
    let head: f64 = sys
        .beta
        .iter()
        .enumerate()
        .map(|(h, b)| (1.0 - h as f64 / nf) * b)
        .sum();
    let base = (1.0 - head / nf) / (nf * nf);
    let weights = Array2::from_shape_fn((n, n), |(t0, s0)| {
        let (t, s) = (t0 + 1, s0 + 1);
        let mut v = base;
        for (h, &b) in sys.beta.iter().enumerate() {
            let shift = if t + h == s { 1.0 } else { 0.0 };
            let ind = (t + h <= n) as u8 as f64 + (t > h) as u8 as f64;
            v -= b / nf * shift - b / (nf * nf) * ind;
        }
        v
    });
    PiWeights { weights }
}

/// Entrywise comparison of the derived and printed `πₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiDiscrepancy {
    pub max_abs_diff: f64,
    /// `(t, s)` (1-based) where the largest deviation occurs.
    pub argmax: (usize, usize),
    pub derived_at_argmax: f64,
    pub printed_at_argmax: f64,
}

pub fn pi_discrepancy(sys: &EstimatorSystem) -> PiDiscrepancy {
    let derived = pi_weights(sys).weights;
    let printed = printed_pi_weights(sys).weights;
    let mut best = PiDiscrepancy {
        max_abs_diff: 0.0,
        argmax: (1, 1),
        derived_at_argmax: derived[[0, 0]],
        printed_at_argmax: printed[[0, 0]],
    };
    for ((i, j), d) in derived.indexed_iter() {
        let diff = (d - printed[[i, j]]).abs();
        if diff > best.max_abs_diff {
            best = PiDiscrepancy {
                max_abs_diff: diff,
                argmax: (i + 1, j + 1),
                derived_at_argmax: *d,
                printed_at_argmax: printed[[i, j]],
            };
        }
    }
    best
}

/// `Θₙ` by brute force: applies the centering matrix to every index pair.
/// Test oracle only; `O(n³)` per entry.
#[cfg(test)]
pub(crate) fn coefficient_matrix_brute(n: usize, m: usize) -> Array2<f64> {
    let nf = n as f64;
    let c = |i: usize, j: usize| if i == j { 1.0 - 1.0 / nf } else { -1.0 / nf };
    Array2::from_shape_fn((m + 1, m + 1), |(h, k)| {
        let mut acc = 0.0;
        for t in 0..n - h {
            for u in 0..n {
                for v in 0..n {
                    if u.abs_diff(v) == k {
                        acc += c(t, u) * c(t + h, v);
                    }
                }
            }
        }
        acc / nf
    })
}
