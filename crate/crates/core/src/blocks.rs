//! Trimmed-block decomposition of `X̄ᵀX̄ − n⁻¹tr(Ωₙ)`.
//!
//! The index set `1..n` is cut into `k` blocks of width `w` plus a remainder
//! of `r` indices. Dropping the last `M` indices of each block leaves trimmed
//! blocks that are mutually independent under M-dependence. With
//! `𝒜_{ts} = n⁻²[X_tᵀX_s − tr Γ(t−s)]`,
//!
//! - `B_ij` sums `𝒜` over trimmed block `i` × trimmed block `j`,
//! - `D_ij` sums `𝒜` over full block `i` × full block `j`, minus `B_ij`,
//! - `F` sums `𝒜` over every pair touching the remainder,
//!
//! so that `Σ B + Σ D + F = Σ 𝒜`. All sums are evaluated through segment
//! sums of the rows; the `n×n` array `𝒜` is never materialized.

use ndarray::{Array1, Array2, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hdtest::var_mn_population;
use crate::linalg::SampleMatrix;
use crate::procsim::{weighted_long_run, AutocovSequence};

/// Width policy `w = max(⌈C·nᵅ⌉, (M+1)⌈√n⌉)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthPolicy {
    pub alpha_exp: f64,
    pub c: f64,
}

impl Default for WidthPolicy {
    fn default() -> Self {
        Self {
            alpha_exp: 7.0 / 8.0,
            c: 1.0,
        }
    }
}

/// `n = w·k + r` with `0 ≤ r < w` and `w > 2M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockScheme {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub w: usize,
    pub k: usize,
    pub r: usize,
    /// `None` when the width was given explicitly.
    pub policy: Option<WidthPolicy>,
}

pub fn block_scheme(n: usize, m: usize, alpha_exp: f64, c: f64) -> Result<BlockScheme> {
    if !(alpha_exp > 0.0 && alpha_exp < 1.0) {
        return Err(Error::Block(format!("exponent must lie in (0, 1), got {alpha_exp}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Block(format!("width constant must be positive, got {c}")));
    }
    let root = (n as f64).sqrt().ceil() as usize;
    let w = ((c * (n as f64).powf(alpha_exp)).ceil() as usize).max((m + 1) * root);
    let mut scheme = BlockScheme::with_width(n, m, w)?;
    if scheme.k < 2 {
        return Err(Error::Block(format!(
            "width {w} leaves {} block(s) for n = {n}; need at least 2",
            scheme.k
        )));
    }
    scheme.policy = Some(WidthPolicy { alpha_exp, c });
    Ok(scheme)
}

impl BlockScheme {
    /// Scheme with the default policy `C = 1`, `α = 7/8`.
    pub fn default_policy(n: usize, m: usize) -> Result<Self> {
        let p = WidthPolicy::default();
        block_scheme(n, m, p.alpha_exp, p.c)
    }

    /// Scheme with a given width; allows a single block. Trimmed blocks must
    /// be longer than `M` so that the weights `1 − |h|/(w−M)` of `Ω_w` stay
    /// positive.
    pub fn with_width(n: usize, m: usize, w: usize) -> Result<Self> {
        if w <= 2 * m {
            return Err(Error::Block(format!("width {w} must exceed 2M = {}", 2 * m)));
        }
        if w > n {
            return Err(Error::Block(format!("width {w} exceeds n = {n}")));
        }
        Ok(Self {
            n,
            m,
            w,
            k: n / w,
            r: n % w,
            policy: None,
        })
    }

    /// 0-based inclusive index range of trimmed block `i`.
    fn trimmed(&self, i: usize) -> (i64, i64) {
        let start = (i * self.w) as i64;
        (start, start + (self.w - self.m) as i64 - 1)
    }

    fn full(&self, i: usize) -> (i64, i64) {
        let start = (i * self.w) as i64;
        (start, start + self.w as i64 - 1)
    }
}

fn overlap(lo1: i64, hi1: i64, lo2: i64, hi2: i64) -> i64 {
    (hi1.min(hi2) - lo1.max(lo2) + 1).max(0)
}

/// `Σ_{t∈P, s∈Q} tr Γ(t−s)` for index intervals `P` and `Q`.
fn trace_mass(traces: &[f64], p: (i64, i64), q: (i64, i64)) -> f64 {
    let m = traces.len() as i64 - 1;
    (-m..=m)
        .map(|d| traces[d.unsigned_abs() as usize] * overlap(p.0, p.1, q.0 + d, q.1 + d) as f64)
        .sum()
}

fn segment_sum(x: &SampleMatrix, range: (i64, i64)) -> Array1<f64> {
    x.data()
        .slice(ndarray::s![range.0 as usize..=range.1 as usize, ..])
        .sum_axis(Axis(0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    /// Trimmed block means `Y_i`, one row per block.
    pub y: Array2<f64>,
    pub b: Array2<f64>,
    pub d: Array2<f64>,
    pub f: f64,
    /// `Σ_{t,s} 𝒜_{ts} = X̄ᵀX̄ − n⁻¹ tr(Ωₙ)`.
    pub total: f64,
    pub delta11: f64,
    pub delta12: f64,
    /// `σₙ²` evaluated with the supplied autocovariances.
    pub sigma_sq: f64,
    /// `(2/n²) tr(Ωₙ²)`, the standardizer of `Δ₁₁` and `Δ₁₂`.
    pub var_mn: f64,
}

impl BlockDecomposition {
    pub fn sum_b(&self) -> f64 {
        self.b.sum()
    }

    pub fn sum_d(&self) -> f64 {
        self.d.sum()
    }

    /// `Σ_{i≠j} B_ij`.
    pub fn off_diagonal_b(&self) -> f64 {
        self.b.sum() - self.b.diag().sum()
    }
}

/// Decomposes `Σ 𝒜` for one sample; `gam` supplies the `tr Γ(h)` that `𝒜`
/// subtracts (population values in simulation studies).
pub fn decompose(
    x: &SampleMatrix,
    gam: &AutocovSequence,
    scheme: &BlockScheme,
) -> Result<BlockDecomposition> {
    if x.n() != scheme.n {
        return Err(Error::Block(format!(
            "scheme is for n = {}, data has n = {}",
            scheme.n,
            x.n()
        )));
    }
    if gam.p() != x.p() || gam.lag() != scheme.m {
        return Err(Error::Block(format!(
            "autocovariances are p = {}, M = {}; expected p = {}, M = {}",
            gam.p(),
            gam.lag(),
            x.p(),
            scheme.m
        )));
    }
    let n = scheme.n;
    let k = scheme.k;
    let nf2 = (n as f64) * (n as f64);
    let traces = gam.traces();

    let trimmed: Vec<Array1<f64>> = (0..k).map(|i| segment_sum(x, scheme.trimmed(i))).collect();
    let full: Vec<Array1<f64>> = (0..k).map(|i| segment_sum(x, scheme.full(i))).collect();

    let mut b = Array2::zeros((k, k));
    let mut d = Array2::zeros((k, k));
    let mut full_total = 0.0;
    for i in 0..k {
        for j in 0..k {
            let bij = (trimmed[i].dot(&trimmed[j])
                - trace_mass(&traces, scheme.trimmed(i), scheme.trimmed(j)))
                / nf2;
            let fij = (full[i].dot(&full[j]) - trace_mass(&traces, scheme.full(i), scheme.full(j)))
                / nf2;
            b[[i, j]] = bij;
            d[[i, j]] = fij - bij;
            full_total += fij;
        }
    }

    let all = x.data().sum_axis(Axis(0));
    let total = (all.dot(&all) - trace_mass(&traces, (0, n as i64 - 1), (0, n as i64 - 1))) / nf2;
    let f = total - full_total;

    let width = (scheme.w - scheme.m) as f64;
    let mut y = Array2::zeros((k, x.p()));
    for (i, s) in trimmed.iter().enumerate() {
        y.row_mut(i).assign(&(s / width));
    }

    let var_mn = var_mn_population(gam, n)?;
    let sd = var_mn.sqrt();
    let omega_w = omega_w(gam, scheme)?;
    let sigma_sq = sigma_formula(scheme, &omega_w);
    Ok(BlockDecomposition {
        delta11: b.sum() / sd,
        delta12: (d.sum() + f) / sd,
        y,
        b,
        d,
        f,
        total,
        sigma_sq,
        var_mn,
    })
}

/// `Ω_w = Σ_{|h|≤M} (1 − |h|/(w−M)) Γ(h)`, so that `Cov(Y_i) = Ω_w/(w−M)`.
pub fn omega_w(gam: &AutocovSequence, scheme: &BlockScheme) -> Result<Array2<f64>> {
    let len = scheme.w - scheme.m;
    weighted_long_run(gam, len, len)
}

fn trace_sq(a: &Array2<f64>) -> f64 {
    a.iter().zip(a.t().iter()).map(|(x, y)| x * y).sum()
}

fn sigma_formula(scheme: &BlockScheme, omega_w: &Array2<f64>) -> f64 {
    let k = scheme.k as f64;
    let wm = (scheme.w - scheme.m) as f64;
    let n4 = (scheme.n as f64).powi(4);
    2.0 * k * (k - 1.0) * wm * wm * trace_sq(omega_w) / n4
}

/// `σₙ² = 2k(k−1)(w−M)² tr(Ω_w²) / n⁴`, the variance of `Σ_{i≠j} B_ij`.
pub fn sigma_n_sq(scheme: &BlockScheme, omega_w: &Array2<f64>) -> Result<f64> {
    if scheme.k < 2 {
        return Err(Error::Block(format!("need at least 2 blocks, have {}", scheme.k)));
    }
    Ok(sigma_formula(scheme, omega_w))
}

/// `Var(B₁₁) = 2(w−M)² tr(Ω_w²) / n⁴`.
pub fn var_b11(scheme: &BlockScheme, omega_w: &Array2<f64>) -> f64 {
    let wm = (scheme.w - scheme.m) as f64;
    2.0 * wm * wm * trace_sq(omega_w) / (scheme.n as f64).powi(4)
}
