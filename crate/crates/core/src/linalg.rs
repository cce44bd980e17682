//! Dense kernels shared by the estimators.
//!
//! Everything that needs a trace of a product of lagged autocovariance
//! matrices goes through an inner-product (Gram) matrix of the centered
//! rows. For a pair of samples `x` (n_x rows) and `y` (n_y rows) with
//! `G[t][s] = x_t · y_s`,
//!
//! ```text
//! tr(Γ̂_x(a) Γ̂_y(b)) = 1/(n_x n_y) · Σ_t Σ_s G[t+a][s] · G[t][s+b]
//! ```
//!
//! where `Γ̂(a) = (1/n) Σ_t x_t x_{t+a}ᵀ` over the valid `t` and negative
//! lags follow `Γ̂(−a) = Γ̂(a)ᵀ`. The `p×p` matrices are never formed, so the
//! cost is `O(n_x n_y p)` for the Gram product plus `O(n_x n_y)` per lag pair.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Observations `X_1..X_n` stored row-wise (rows are time points).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Array2<f64>,
}

impl SampleMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, p) = data.dim();
        if n < 2 {
            return Err(Error::InvalidData(format!("need at least 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(Error::InvalidData("need at least 1 column".into()));
        }
        if let Some(((t, j), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite entry {v} at row {t}, column {j}"
            )));
        }
        Ok(Self {
            data: data.as_standard_layout().into_owned(),
        })
    }

    /// Builds a sample from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidData("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), p), flat)
            .map_err(|e| Error::InvalidData(e.to_string()))?;
        Self::new(data)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }

    /// Sample mean `X̄ₙ`.
    pub fn mean(&self) -> Array1<f64> {
        self.data.sum_axis(Axis(0)) / self.n() as f64
    }

    /// Rows minus the sample mean.
    pub fn centered(&self) -> Array2<f64> {
        &self.data - &self.mean()
    }

    /// Rows `start..end` as a new sample.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        Self::new(self.data.slice(ndarray::s![start..end, ..]).to_owned())
    }

    /// Adds `shift` to every row.
    pub fn shifted(&self, shift: &Array1<f64>) -> Result<Self> {
        if shift.len() != self.p() {
            return Err(Error::InvalidData(format!(
                "shift has length {}, expected {}",
                shift.len(),
                self.p()
            )));
        }
        Self::new(&self.data + shift)
    }
}

/// `g[t][s] = (X_t − X̄)ᵀ(X_s − X̄)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    g: Array2<f64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.g
    }

    pub fn get(&self, t: usize, s: usize) -> f64 {
        self.g[[t, s]]
    }
}

pub fn centered_gram(x: &SampleMatrix) -> GramMatrix {
    let c = x.centered();
    GramMatrix { g: c.dot(&c.t()) }
}

/// Inner products between the rows of two (already centered) blocks.
pub fn cross_gram(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Array2<f64> {
    x.dot(&y.t())
}

/// Valid start indices `t` such that both `t` and `t + lag` lie in `0..len`.
fn lag_range(len: usize, lag: isize) -> std::ops::Range<usize> {
    let lo = if lag < 0 { lag.unsigned_abs() } else { 0 };
    let hi = if lag > 0 {
        len.saturating_sub(lag as usize)
    } else {
        len
    };
    lo..hi.max(lo)
}

/// `tr(Γ̂_x(a) Γ̂_y(b))` from a cross Gram matrix `g[t][s] = x_t · y_s`
/// of centered rows, with autocovariance divisors `n_x` and `n_y`.
///
/// Lags must satisfy `|a| < rows(g)` and `|b| < cols(g)`.
pub fn trace_lagged_product(g: ArrayView2<f64>, a: isize, b: isize, nx: f64, ny: f64) -> f64 {
    let (rows, cols) = g.dim();
    let ts = lag_range(rows, a);
    let ss = lag_range(cols, b);
    if ss.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for t in ts {
        let shifted = (t as isize + a) as usize;
        let lead = g.row(shifted);
        let base = g.row(t);
        let lo = ss.start;
        let hi = ss.end;
        let off = (lo as isize + b) as usize;
        let mut row_acc = 0.0;
        for (k, s) in (lo..hi).enumerate() {
            row_acc += lead[s] * base[off + k];
        }
        acc += row_acc;
    }
    acc / (nx * ny)
}

/// `tr(Γ̂(a) Γ̂(b))` for the sample whose centered Gram matrix is `g`.
pub fn trace_autocov_product(g: &GramMatrix, a: isize, b: isize, n: usize) -> Result<f64> {
    let size = g.n();
    if size != n {
        return Err(Error::InvalidData(format!(
            "Gram matrix is {size}x{size} but n = {n}"
        )));
    }
    for lag in [a, b] {
        if lag.unsigned_abs() >= n {
            return Err(Error::Lag {
                lag: lag.unsigned_abs(),
                n,
            });
        }
    }
    Ok(trace_lagged_product(g.g.view(), a, b, n as f64, n as f64))
}

/// `max(1, ‖m‖_F)`, the reference scale for relative tolerances.
pub fn scale_of(m: ArrayView2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0)
}

pub fn to_nalgebra(m: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

pub fn from_nalgebra(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Symmetric positive-semidefinite square root.
///
/// Negative eigenvalues within `1e-10·scale` of zero are clipped to zero.
pub fn psd_sqrt(s: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (r, c) = s.dim();
    if r != c {
        return Err(Error::NotPsd(format!("matrix is {r}x{c}, not square")));
    }
    let scale = scale_of(s);
    let asym = s
        .iter()
        .zip(s.t().iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if asym > 1e-8 * scale {
        return Err(Error::NotPsd(format!("asymmetry {asym:e} exceeds tolerance")));
    }
    let sym = (&s + &s.t()) * 0.5;
    let eig = to_nalgebra(sym.view()).symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * scale {
        return Err(Error::NotPsd(format!("eigenvalue {min:e} is negative")));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let root = v * DMatrix::from_diagonal(&roots) * v.transpose();
    let out = from_nalgebra(&root);
    Ok((&out + &out.t()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn explicit_autocov(c: &Array2<f64>, lag: isize, n: f64) -> Array2<f64> {
        let p = c.ncols();
        let mut out = Array2::zeros((p, p));
        let len = c.nrows() as isize;
        for t in 0..len {
            let u = t + lag;
            if u < 0 || u >= len {
                continue;
            }
            for i in 0..p {
                for j in 0..p {
                    out[[i, j]] += c[[t as usize, i]] * c[[u as usize, j]];
                }
            }
        }
        out / n
    }

    fn lcg_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut state = seed;
        Array2::from_shape_fn((n, p), |_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn gram_of_two_opposite_rows() {
        let x = SampleMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let g = centered_gram(&x);
        assert_eq!(g.matrix(), &array![[1.0, -1.0], [-1.0, 1.0]]);
    }

    #[test]
    fn gram_of_identical_rows_is_zero() {
        let x = SampleMatrix::from_rows(&vec![vec![3.0, -2.0, 0.5]; 6]).unwrap();
        let g = centered_gram(&x);
        assert!(g.matrix().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gram_matches_double_loop() {
        let x = SampleMatrix::new(lcg_matrix(10, 3, 7)).unwrap();
        let g = centered_gram(&x);
        let c = x.centered();
        for t in 0..10 {
            let mut row_sum = 0.0;
            for s in 0..10 {
                let mut ip = 0.0;
                for j in 0..3 {
                    ip += c[[t, j]] * c[[s, j]];
                }
                assert!((g.get(t, s) - ip).abs() < 1e-12);
                assert_eq!(g.get(t, s), g.get(s, t));
                row_sum += g.get(t, s);
            }
            assert!(row_sum.abs() < 1e-9 * scale_of(g.matrix().view()));
            assert!(g.get(t, t) >= 0.0);
        }
    }

    #[test]
    fn non_finite_entries_rejected() {
        let err = SampleMatrix::from_rows(&[vec![1.0], vec![f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::InvalidData(_)));
        let err = SampleMatrix::from_rows(&[vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidData(_)));
    }

    #[test]
    fn trace_product_hand_example() {
        let x = SampleMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let g = centered_gram(&x);
        assert!((trace_autocov_product(&g, 0, 0, 2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_product_of_constant_data_is_zero() {
        let x = SampleMatrix::from_rows(&vec![vec![2.0, 2.0]; 5]).unwrap();
        let g = centered_gram(&x);
        for a in -2..=2 {
            for b in -2..=2 {
                assert!(trace_autocov_product(&g, a, b, 5).unwrap().abs() < 1e-20);
            }
        }
    }

    #[test]
    fn trace_product_matches_explicit_matrices() {
        let x = SampleMatrix::new(lcg_matrix(12, 4, 11)).unwrap();
        let g = centered_gram(&x);
        let c = x.centered();
        for a in -2isize..=2 {
            for b in -2isize..=2 {
                let ga = explicit_autocov(&c, a, 12.0);
                let gb = explicit_autocov(&c, b, 12.0);
                let want = ga.dot(&gb).diag().sum();
                let got = trace_autocov_product(&g, a, b, 12).unwrap();
                assert!(
                    (got - want).abs() <= 1e-8 * want.abs().max(1e-12),
                    "a={a} b={b} got={got} want={want}"
                );
            }
        }
    }

    #[test]
    fn trace_product_rejects_out_of_range_lag() {
        let x = SampleMatrix::new(lcg_matrix(4, 2, 3)).unwrap();
        let g = centered_gram(&x);
        assert!(matches!(
            trace_autocov_product(&g, 4, 0, 4),
            Err(Error::Lag { lag: 4, n: 4 })
        ));
        assert!(trace_autocov_product(&g, -3, 3, 4).is_ok());
    }

    #[test]
    fn psd_sqrt_examples() {
        let id = Array2::<f64>::eye(3);
        let r = psd_sqrt(id.view()).unwrap();
        assert!((&r - &id).iter().all(|v| v.abs() < 1e-14));

        let d = array![[4.0, 0.0], [0.0, 9.0]];
        let r = psd_sqrt(d.view()).unwrap();
        assert!((&r - &array![[2.0, 0.0], [0.0, 3.0]]).iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn psd_sqrt_reconstructs_gram_product() {
        let a = lcg_matrix(5, 5, 99);
        let s = a.dot(&a.t());
        let r = psd_sqrt(s.view()).unwrap();
        let back = r.dot(&r);
        let scale = scale_of(s.view());
        assert!((&back - &s).iter().all(|v| v.abs() < 1e-7 * scale));
        assert!((&r - &r.t()).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn psd_sqrt_rejects_indefinite_and_asymmetric() {
        let indefinite = array![[1.0, 0.0], [0.0, -1.0]];
        assert!(matches!(psd_sqrt(indefinite.view()), Err(Error::NotPsd(_))));
        let asym = array![[1.0, 0.5], [0.0, 1.0]];
        assert!(matches!(psd_sqrt(asym.view()), Err(Error::NotPsd(_))));
    }
}
