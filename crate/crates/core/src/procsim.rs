//! M-dependent stationary Gaussian processes built as moving averages.
//!
//! `X_t = μ + Σ_{j=0}^{M} A_j ε_{t−j}` with iid standard Gaussian innovations
//! `ε_s ∈ ℝᵖ`. The autocovariances are known exactly,
//! `Γ(h) = Σ_{j=0}^{M−h} A_j A_{j+h}ᵀ`, and vanish for `|h| > M`.
//!
//! Innovation `ε_s` is drawn from its own ChaCha stream keyed by `(seed, s)`,
//! so a path does not depend on generation order or thread count, and the
//! first `n` rows of a path of length `n' > n` equal the path of length `n`.

use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SampleMatrix;

/// Moving-average specification of an M-dependent Gaussian process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDocument", into = "SpecDocument")]
pub struct ProcessSpec {
    mu: Array1<f64>,
    coeffs: Vec<Array2<f64>>,
}

impl ProcessSpec {
    /// Loadings `A_0..A_M`; every loading must be `p×p` with `p = mu.len()`.
    pub fn new(mu: Array1<f64>, coeffs: Vec<Array2<f64>>) -> Result<Self> {
        let p = mu.len();
        if p == 0 {
            return Err(Error::InvalidData("dimension p must be positive".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidData("need at least the loading A_0".into()));
        }
        for (j, a) in coeffs.iter().enumerate() {
            if a.dim() != (p, p) {
                return Err(Error::InvalidData(format!(
                    "loading A_{j} is {:?}, expected ({p}, {p})",
                    a.dim()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("loading A_{j} is not finite")));
            }
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("mean is not finite".into()));
        }
        Ok(Self { mu, coeffs })
    }

    /// `A_j = weights[j] · I_p` with zero mean.
    pub fn scaled_identity(p: usize, weights: &[f64]) -> Result<Self> {
        let coeffs = weights
            .iter()
            .map(|&w| Array2::eye(p) * w)
            .collect();
        Self::new(Array1::zeros(p), coeffs)
    }

    pub fn with_mean(mut self, mu: Array1<f64>) -> Result<Self> {
        if mu.len() != self.p() {
            return Err(Error::InvalidData(format!(
                "mean has length {}, expected {}",
                mu.len(),
                self.p()
            )));
        }
        self.mu = mu;
        Self::new(self.mu, self.coeffs)
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }

    /// Dependence lag `M`.
    pub fn lag(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mu(&self) -> &Array1<f64> {
        &self.mu
    }

    pub fn coeffs(&self) -> &[Array2<f64>] {
        &self.coeffs
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixDoc {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct SpecDocument {
    p: usize,
    #[serde(rename = "M")]
    m: usize,
    mu: Vec<f64>,
    coeffs: Vec<MatrixDoc>,
}

impl TryFrom<SpecDocument> for ProcessSpec {
    type Error = Error;

    fn try_from(doc: SpecDocument) -> Result<Self> {
        let p = doc.p;
        if doc.mu.len() != p {
            return Err(Error::Format(format!(
                "mu has length {}, expected p = {p}",
                doc.mu.len()
            )));
        }
        if doc.coeffs.len() != doc.m + 1 {
            return Err(Error::Format(format!(
                "expected M + 1 = {} loadings, got {}",
                doc.m + 1,
                doc.coeffs.len()
            )));
        }
        let coeffs = doc
            .coeffs
            .into_iter()
            .enumerate()
            .map(|(j, m)| {
                let flat = match m {
                    MatrixDoc::Rows(rows) => {
                        if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                            return Err(Error::Format(format!("loading {j} is not {p}x{p}")));
                        }
                        rows.into_iter().flatten().collect()
                    }
                    MatrixDoc::Flat(v) => v,
                };
                Array2::from_shape_vec((p, p), flat)
                    .map_err(|_| Error::Format(format!("loading {j} is not {p}x{p}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ProcessSpec::new(Array1::from(doc.mu), coeffs)
    }
}

impl From<ProcessSpec> for SpecDocument {
    fn from(spec: ProcessSpec) -> Self {
        SpecDocument {
            p: spec.p(),
            m: spec.lag(),
            mu: spec.mu.to_vec(),
            coeffs: spec
                .coeffs
                .iter()
                .map(|a| MatrixDoc::Rows(a.outer_iter().map(|r| r.to_vec()).collect()))
                .collect(),
        }
    }
}

/// Autocovariances `Γ(0..M)`; negative lags are served as transposes.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovSequence {
    gammas: Vec<Array2<f64>>,
}

impl AutocovSequence {
    pub fn new(gammas: Vec<Array2<f64>>) -> Result<Self> {
        let p = match gammas.first() {
            Some(g) => g.nrows(),
            None => return Err(Error::InvalidData("need Γ(0)".into())),
        };
        if gammas.iter().any(|g| g.dim() != (p, p)) {
            return Err(Error::InvalidData("autocovariances must all be p×p".into()));
        }
        if gammas.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("autocovariance is not finite".into()));
        }
        let g0 = &gammas[0];
        let tol = 1e-10 * crate::linalg::scale_of(g0.view());
        if g0.iter().zip(g0.t().iter()).any(|(a, b)| (a - b).abs() > tol) {
            return Err(Error::InvalidData("Γ(0) is not symmetric".into()));
        }
        Ok(Self { gammas })
    }

    pub fn lag(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn p(&self) -> usize {
        self.gammas[0].nrows()
    }

    /// `Γ(h)` for any integer `h`; zero for `|h| > M`.
    pub fn get(&self, h: isize) -> Array2<f64> {
        match self.gammas.get(h.unsigned_abs()) {
            Some(g) if h >= 0 => g.clone(),
            Some(g) => g.t().to_owned(),
            None => Array2::zeros((self.p(), self.p())),
        }
    }

    /// `Γ(h)` for `h ∈ 0..=M` without copying.
    pub fn nonnegative(&self, h: usize) -> ArrayView2<'_, f64> {
        self.gammas[h].view()
    }

    /// `tr Γ(h)`; equal for `h` and `−h`.
    pub fn trace(&self, h: isize) -> f64 {
        self.gammas
            .get(h.unsigned_abs())
            .map_or(0.0, |g| g.diag().sum())
    }

    /// `(tr Γ(0), …, tr Γ(M))`.
    pub fn traces(&self) -> Vec<f64> {
        (0..=self.lag() as isize).map(|h| self.trace(h)).collect()
    }

    /// Multiplies every `Γ(h)` by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            gammas: self.gammas.iter().map(|g| g * c).collect(),
        }
    }
}

pub fn implied_autocov(spec: &ProcessSpec) -> AutocovSequence {
    let m = spec.lag();
    let gammas = (0..=m)
        .map(|h| {
            (0..=m - h).fold(Array2::zeros((spec.p(), spec.p())), |acc, j| {
                acc + spec.coeffs[j].dot(&spec.coeffs[j + h].t())
            })
        })
        .collect();
    AutocovSequence { gammas }
}

/// `Ωₙ = Σ_{|h|≤M} (1 − |h|/n) Γ(h)`.
pub fn omega_n(gam: &AutocovSequence, n: usize) -> Result<Array2<f64>> {
    weighted_long_run(gam, n, n)
}

/// `Σ_{|h|≤M} (1 − |h|/d) Γ(h)` with divisor `d`; `d = n` gives `Ωₙ`.
pub(crate) fn weighted_long_run(gam: &AutocovSequence, n: usize, d: usize) -> Result<Array2<f64>> {
    let m = gam.lag();
    if n <= m || d <= m {
        return Err(Error::Block(format!(
            "need length greater than M = {m}, got n = {n}, divisor = {d}"
        )));
    }
    let mut out = gam.gammas[0].clone();
    for h in 1..=m {
        let w = 1.0 - h as f64 / d as f64;
        let g = &gam.gammas[h];
        out.scaled_add(w, g);
        out.scaled_add(w, &g.t());
    }
    Ok(out)
}

/// SplitMix64 finalizer; used to derive independent seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `index` of a study seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(index.wrapping_add(0x6A09_E667_F3BC_C909)))
}

/// Sparse row storage of one loading; loadings in practice are often banded.
struct SparseLoading {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseLoading {
    fn new(a: &Array2<f64>) -> Self {
        let mut row_start = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in a.outer_iter() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Self {
            row_start,
            cols,
            vals,
        }
    }

    fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    fn add_apply(&self, eps: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let range = self.row_start[i]..self.row_start[i + 1];
            let mut acc = 0.0;
            for k in range {
                acc += self.vals[k] * eps[self.cols[k]];
            }
            *o += acc;
        }
    }
}

/// Reusable path generator for one specification.
pub struct PathSampler {
    mu: Array1<f64>,
    loadings: Vec<SparseLoading>,
    p: usize,
}

impl PathSampler {
    pub fn new(spec: &ProcessSpec) -> Self {
        Self {
            mu: spec.mu.clone(),
            loadings: spec.coeffs.iter().map(SparseLoading::new).collect(),
            p: spec.p(),
        }
    }

    fn innovation(rng: &mut ChaCha8Rng, s: i64, buf: &mut [f64]) {
        rng.set_stream(s as u64);
        rng.set_word_pos(0);
        for v in buf.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
    }

    /// Raw path as an `n×p` array (no row-count restriction).
    pub fn path(&self, n: usize, seed: u64) -> Array2<f64> {
        let p = self.p;
        let m = self.loadings.len() - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // ring of the last M+1 innovations, slot (s mod (M+1))
        let mut ring = vec![0.0; (m + 1) * p];
        let slot = |s: i64| (s.rem_euclid(m as i64 + 1)) as usize;
        for s in (1 - m as i64)..1 {
            let k = slot(s);
            Self::innovation(&mut rng, s, &mut ring[k * p..(k + 1) * p]);
        }
        let mut out = Array2::zeros((n, p));
        let mut row = vec![0.0; p];
        for t in 1..=n as i64 {
            let k = slot(t);
            Self::innovation(&mut rng, t, &mut ring[k * p..(k + 1) * p]);
            row.copy_from_slice(self.mu.as_slice().expect("contiguous mean"));
            for (j, a) in self.loadings.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let kj = slot(t - j as i64);
                a.add_apply(&ring[kj * p..(kj + 1) * p], &mut row);
            }
            out.row_mut((t - 1) as usize)
                .as_slice_mut()
                .expect("standard layout")
                .copy_from_slice(&row);
        }
        out
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleMatrix> {
        SampleMatrix::new(self.path(n, seed))
    }
}

/// One realization `X_1..X_n`, deterministic in `(spec, n, seed)`.
pub fn sample_path(spec: &ProcessSpec, n: usize, seed: u64) -> Result<SampleMatrix> {
    PathSampler::new(spec).sample(n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn white_noise_autocov_is_identity() {
        let spec = ProcessSpec::scaled_identity(3, &[1.0]).unwrap();
        let gam = implied_autocov(&spec);
        assert_eq!(gam.lag(), 0);
        assert_eq!(gam.get(0), Array2::<f64>::eye(3));
    }

    #[test]
    fn scalar_ma1_autocov() {
        let spec = ProcessSpec::new(array![0.0], vec![array![[1.0]], array![[0.5]]]).unwrap();
        let gam = implied_autocov(&spec);
        assert!((gam.get(0)[[0, 0]] - 1.25).abs() < 1e-15);
        assert!((gam.get(1)[[0, 0]] - 0.5).abs() < 1e-15);
        assert!((gam.get(-1)[[0, 0]] - 0.5).abs() < 1e-15);
        assert_eq!(gam.get(2)[[0, 0]], 0.0);
    }

    #[test]
    fn negative_lag_is_transpose() {
        let a0 = array![[1.0, 0.3], [0.0, 1.0]];
        let a1 = array![[0.2, 0.7], [-0.4, 0.1]];
        let spec = ProcessSpec::new(array![0.0, 0.0], vec![a0, a1]).unwrap();
        let gam = implied_autocov(&spec);
        assert_eq!(gam.get(-1), gam.get(1).t().to_owned());
    }

    #[test]
    fn zero_loadings_give_constant_rows() {
        let spec = ProcessSpec::new(array![1.5, -2.0], vec![Array2::zeros((2, 2))]).unwrap();
        let x = sample_path(&spec, 7, 3).unwrap();
        for row in x.data().outer_iter() {
            assert_eq!(row.to_vec(), vec![1.5, -2.0]);
        }
    }

    #[test]
    fn determinism_contract() {
        let spec = ProcessSpec::scaled_identity(4, &[1.0, 0.5, 0.25]).unwrap();
        let a = sample_path(&spec, 20, 42).unwrap();
        let b = sample_path(&spec, 20, 42).unwrap();
        let c = sample_path(&spec, 20, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // prefix property
        let long = sample_path(&spec, 30, 42).unwrap();
        assert_eq!(
            long.data().slice(ndarray::s![..20, ..]),
            a.data().view()
        );
    }

    #[test]
    fn omega_examples() {
        let gam = AutocovSequence::new(vec![Array2::eye(2), Array2::eye(2) * 0.5]).unwrap();
        let om = omega_n(&gam, 4).unwrap();
        assert!((&om - &(Array2::<f64>::eye(2) * 1.75)).iter().all(|v| v.abs() < 1e-15));
        assert!((om.diag().sum() - 3.5).abs() < 1e-15);

        let iid = AutocovSequence::new(vec![array![[2.0, 0.5], [0.5, 1.0]]]).unwrap();
        assert_eq!(omega_n(&iid, 3).unwrap(), iid.get(0));

        assert!(matches!(omega_n(&gam, 1), Err(Error::Block(_))));
    }

    #[test]
    fn omega_matches_term_by_term_sum() {
        let a0 = array![[1.0, 0.2, 0.0], [0.1, 0.9, 0.3], [0.0, -0.2, 1.1]];
        let a1 = array![[0.4, 0.0, 0.1], [0.2, -0.3, 0.0], [0.5, 0.1, 0.2]];
        let a2 = array![[0.1, 0.2, 0.3], [0.0, 0.1, 0.0], [-0.1, 0.0, 0.2]];
        let spec = ProcessSpec::new(Array1::zeros(3), vec![a0, a1, a2]).unwrap();
        let gam = implied_autocov(&spec);
        let n = 9;
        let mut want = Array2::<f64>::zeros((3, 3));
        for h in -2isize..=2 {
            let w = (n as f64 - h.abs() as f64) / n as f64;
            want = want + gam.get(h) * w;
        }
        let got = omega_n(&gam, n).unwrap();
        assert!((&got - &want).iter().all(|v| v.abs() < 1e-14));
        assert!((&got - &got.t()).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn spec_json_round_trip_and_flat_form() {
        let spec = ProcessSpec::new(
            array![0.5, -1.0],
            vec![array![[1.0, 0.0], [0.2, 1.0]], array![[0.3, 0.1], [0.0, 0.4]]],
        )
        .unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"M\":1"));
        let back: ProcessSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);

        let flat = r#"{"p":2,"M":0,"mu":[0,0],"coeffs":[[1,0,0,1]]}"#;
        let parsed: ProcessSpec = serde_json::from_str(flat).unwrap();
        assert_eq!(parsed.coeffs()[0], Array2::<f64>::eye(2));

        let bad = r#"{"p":2,"M":1,"mu":[0,0],"coeffs":[[1,0,0,1]]}"#;
        assert!(serde_json::from_str::<ProcessSpec>(bad).is_err());
    }
}
