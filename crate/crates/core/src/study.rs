//! Monte Carlo study engine.
//!
//! Replicate `i` draws its data from `derive_seed(seed, i)` and is otherwise
//! independent of every other replicate, so replicates run in parallel on the
//! rayon pool while aggregation walks them in index order. The report is
//! therefore identical for any number of worker threads.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autocov::{estimator_system, trace_omega_hat, EstimatorSystem};
use crate::blocks::{self, BlockScheme, WidthPolicy};
use crate::error::{Error, Result};
use crate::hdtest::{
    asymptotic_power, m_statistic_with, one_sample_test, two_sample_statistic_with,
    two_sample_test, two_sample_variance, var_mn_population, VarianceMethod,
};
use crate::linalg::SampleMatrix;
use crate::procsim::{derive_seed, implied_autocov, omega_n, AutocovSequence, PathSampler, ProcessSpec};
use crate::stats::{
    binomial_se, covariance_with_se, ks_normal, median, moments, normal_cdf, upper_quantile,
    variance_se,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Rejection rate with every mean set to zero.
    Size,
    /// Rejection rate under the configured means, with the asymptotic power.
    Power,
    /// Means of `Mₙ` and `tr̂(Ωₙ)` against `μᵀμ` and `tr(Ωₙ)`.
    Bias,
    /// Moments of the trimmed-block decomposition.
    Blocks,
}

impl Scenario {
    fn name(self) -> &'static str {
        match self {
            Scenario::Size => "size",
            Scenario::Power => "power",
            Scenario::Bias => "bias",
            Scenario::Blocks => "blocks",
        }
    }
}

/// Block width: either explicit or from the width policy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlockConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_exp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "C")]
    pub c: Option<f64>,
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub spec: ProcessSpec,
    /// Second group; a two-sample study runs when this or `n2` is present.
    /// Defaults to `spec` when only `n2` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec2: Option<ProcessSpec>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<usize>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub variance_method: VarianceMethod,
    /// Where the CLI writes the JSON report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Optional CSV table with one row per replicate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<PathBuf>,
    /// Include per-replicate summaries in the JSON report.
    #[serde(default)]
    pub keep_replicates: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockConfig>,
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn two_sample(&self) -> bool {
        self.spec2.is_some() || self.n2.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidData("reps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidData(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.spec.lag() != self.m {
            return Err(Error::InvalidData(format!(
                "spec has M = {}, config has M = {}",
                self.spec.lag(),
                self.m
            )));
        }
        if let Some(s2) = &self.spec2 {
            if s2.p() != self.spec.p() || s2.lag() != self.m {
                return Err(Error::InvalidData(
                    "second spec must match the first in p and M".into(),
                ));
            }
        }
        if self.two_sample() && self.scenario == Scenario::Blocks {
            return Err(Error::InvalidData("block studies are one-sample".into()));
        }
        if self.n < 2 || self.n2.is_some_and(|n2| n2 < 2) {
            return Err(Error::InvalidData("sample sizes must be at least 2".into()));
        }
        Ok(())
    }

    fn block_scheme(&self) -> Result<BlockScheme> {
        let cfg = self.blocks.unwrap_or_default();
        match cfg.width {
            Some(w) => BlockScheme::with_width(self.n, self.m, w),
            None => {
                let d = WidthPolicy::default();
                blocks::block_scheme(
                    self.n,
                    self.m,
                    cfg.alpha_exp.unwrap_or(d.alpha_exp),
                    cfg.c.unwrap_or(d.c),
                )
            }
        }
    }
}

/// Per-replicate output. Fields a scenario does not produce are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ReplicateSummary {
    pub index: usize,
    pub seed: u64,
    pub m_stat: f64,
    pub var_hat: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub reject: Option<bool>,
    pub trace_omega_hat: Option<f64>,
    pub b11: Option<f64>,
    pub b12: Option<f64>,
    pub b13: Option<f64>,
    pub b34: Option<f64>,
    pub off_diagonal_b: Option<f64>,
    pub delta11: Option<f64>,
    pub delta12: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub scenario: String,
    pub config: StudyConfig,
    pub aggregates: BTreeMap<String, f64>,
    /// Standard errors, keyed like the aggregates they belong to.
    pub se: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<ReplicateSummary>>,
    pub version: String,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub rows: Vec<ReplicateSummary>,
}

impl StudyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the wall-clock time removed; equal for equal configs.
    pub fn numeric_content(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("wall_clock_seconds");
        }
        Ok(v)
    }

    pub fn write_replicate_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
        for row in &self.rows {
            wtr.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

struct Context {
    cfg: StudyConfig,
    sampler1: PathSampler,
    sampler2: Option<PathSampler>,
    sys1: EstimatorSystem,
    sys2: Option<EstimatorSystem>,
    gam1: AutocovSequence,
    gam2: Option<AutocovSequence>,
    scheme: Option<BlockScheme>,
}

impl Context {
    fn new(cfg: &StudyConfig) -> Result<Self> {
        cfg.validate()?;
        let mut spec1 = cfg.spec.clone();
        let mut spec2 = if cfg.two_sample() {
            Some(cfg.spec2.clone().unwrap_or_else(|| cfg.spec.clone()))
        } else {
            None
        };
        if cfg.scenario == Scenario::Size {
            let zero = Array1::zeros(spec1.p());
            spec1 = spec1.with_mean(zero.clone())?;
            spec2 = spec2.map(|s| s.with_mean(zero)).transpose()?;
        }
        let n2 = cfg.n2.unwrap_or(cfg.n);
        let scheme = match cfg.scenario {
            Scenario::Blocks => Some(cfg.block_scheme()?),
            _ => None,
        };
        Ok(Self {
            sys1: estimator_system(cfg.n, cfg.m)?,
            sys2: spec2.as_ref().map(|_| estimator_system(n2, cfg.m)).transpose()?,
            gam1: implied_autocov(&spec1),
            gam2: spec2.as_ref().map(implied_autocov),
            sampler1: PathSampler::new(&spec1),
            sampler2: spec2.as_ref().map(PathSampler::new),
            cfg: cfg.clone(),
            scheme,
        })
    }

    fn n2(&self) -> usize {
        self.cfg.n2.unwrap_or(self.cfg.n)
    }

    fn replicate(&self, index: usize) -> Result<ReplicateSummary> {
        let cfg = &self.cfg;
        let seed = derive_seed(cfg.seed, index as u64);
        let x1 = self.sampler1.sample(cfg.n, derive_seed(seed, 0))?;
        let x2 = match &self.sampler2 {
            Some(s) => Some(s.sample(self.n2(), derive_seed(seed, 1))?),
            None => None,
        };
        let mut row = ReplicateSummary {
            index,
            seed,
            ..Default::default()
        };
        match cfg.scenario {
            Scenario::Size | Scenario::Power => {
                let r = match &x2 {
                    Some(x2) => two_sample_test(&x1, x2, cfg.m, cfg.alpha, cfg.variance_method)?,
                    None => one_sample_test(&x1, cfg.m, cfg.alpha, cfg.variance_method)?,
                };
                row.m_stat = r.m_stat;
                row.var_hat = Some(r.var_hat);
                row.z = Some(r.z);
                row.p_value = Some(r.p_value);
                row.reject = Some(r.reject);
            }
            Scenario::Bias => {
                row.m_stat = self.statistic(&x1, x2.as_ref())?;
                row.trace_omega_hat = Some(trace_omega_hat(&x1, &self.sys1)?);
            }
            Scenario::Blocks => {
                let scheme = self.scheme.as_ref().expect("block scheme");
                let dec = blocks::decompose(&x1, &self.gam1, scheme)?;
                let b = |i: usize, j: usize| (i < scheme.k && j < scheme.k).then(|| dec.b[[i, j]]);
                row.m_stat = m_statistic_with(&x1, &self.sys1)?;
                row.b11 = b(0, 0);
                row.b12 = b(0, 1);
                row.b13 = b(0, 2);
                row.b34 = b(2, 3);
                row.off_diagonal_b = Some(dec.off_diagonal_b());
                row.delta11 = Some(dec.delta11);
                row.delta12 = Some(dec.delta12);
            }
        }
        Ok(row)
    }

    fn statistic(&self, x1: &SampleMatrix, x2: Option<&SampleMatrix>) -> Result<f64> {
        match (x2, &self.sys2) {
            (Some(x2), Some(s2)) => two_sample_statistic_with(x1, x2, &self.sys1, s2),
            _ => m_statistic_with(x1, &self.sys1),
        }
    }

    /// Population variance of the statistic.
    fn var_theory(&self) -> Result<f64> {
        match &self.gam2 {
            Some(g2) => two_sample_variance(&self.gam1, g2, self.cfg.n, self.n2()),
            None => var_mn_population(&self.gam1, self.cfg.n),
        }
    }

    /// Squared distance between the population means.
    fn signal(&self) -> f64 {
        let mu1 = self.sampler_mean(1);
        match self.sampler2 {
            Some(_) => {
                let d = &mu1 - &self.sampler_mean(2);
                d.dot(&d)
            }
            None => mu1.dot(&mu1),
        }
    }

    fn sampler_mean(&self, group: usize) -> Array1<f64> {
        let spec = if group == 1 || self.cfg.spec2.is_none() {
            &self.cfg.spec
        } else {
            self.cfg.spec2.as_ref().unwrap()
        };
        if self.cfg.scenario == Scenario::Size {
            Array1::zeros(spec.p())
        } else {
            spec.mu().clone()
        }
    }
}

struct Aggregates {
    values: BTreeMap<String, f64>,
    se: BTreeMap<String, f64>,
}

impl Aggregates {
    fn new() -> Self {
        Self {
            values: BTreeMap::new(),
            se: BTreeMap::new(),
        }
    }

    fn put(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    fn put_se(&mut self, key: &str, value: f64, se: f64) {
        self.put(key, value);
        self.se.insert(key.to_string(), se);
    }
}

fn column(rows: &[ReplicateSummary], f: impl Fn(&ReplicateSummary) -> Option<f64>) -> Vec<f64> {
    rows.iter().filter_map(f).collect()
}

fn test_aggregates(ctx: &Context, rows: &[ReplicateSummary], agg: &mut Aggregates) -> Result<()> {
    let reps = rows.len();
    let rejections = rows.iter().filter(|r| r.reject == Some(true)).count();
    let rate = rejections as f64 / reps as f64;
    agg.put_se("rejection_rate", rate, binomial_se(rate, reps));

    let stats = column(rows, |r| Some(r.m_stat));
    let mm = moments(&stats);
    let var_theory = ctx.var_theory()?;
    agg.put_se("mean_statistic", mm.mean, mm.se);
    agg.put("signal", ctx.signal());
    agg.put_se("var_statistic", mm.var, variance_se(&stats));
    agg.put("var_theory", var_theory);
    agg.put_se("var_ratio", mm.var / var_theory, variance_se(&stats) / var_theory);

    let ratios: Vec<f64> = column(rows, |r| r.var_hat).iter().map(|v| v / var_theory).collect();
    let rm = moments(&ratios);
    agg.put_se("mean_var_hat_ratio", rm.mean, rm.se);
    agg.put("median_var_hat_ratio", median(&ratios));

    let z = column(rows, |r| r.z);
    let ks = ks_normal(&z);
    agg.put("ks_statistic", ks.statistic);
    agg.put("ks_p_value", ks.p_value);

    if ctx.cfg.scenario == Scenario::Power {
        let (power, ncp) = match &ctx.gam2 {
            None => {
                let r = asymptotic_power(&ctx.sampler_mean(1), &ctx.gam1, ctx.cfg.n, ctx.cfg.alpha)?;
                (r.power, r.ncp)
            }
            Some(_) => {
                let ncp = ctx.signal() / var_theory.sqrt();
                (normal_cdf(-upper_quantile(ctx.cfg.alpha) + ncp), ncp)
            }
        };
        agg.put("theoretical_power", power);
        agg.put("ncp", ncp);
    }
    Ok(())
}

fn bias_aggregates(ctx: &Context, rows: &[ReplicateSummary], agg: &mut Aggregates) -> Result<()> {
    let tr = column(rows, |r| r.trace_omega_hat);
    let tm = moments(&tr);
    let truth = omega_n(&ctx.gam1, ctx.cfg.n)?.diag().sum();
    agg.put_se("mean_trace_omega_hat", tm.mean, tm.se);
    agg.put("trace_omega", truth);
    agg.put("trace_bias_in_se", (tm.mean - truth) / tm.se);

    let stats = column(rows, |r| Some(r.m_stat));
    let mm = moments(&stats);
    let signal = ctx.signal();
    agg.put_se("mean_statistic", mm.mean, mm.se);
    agg.put("signal", signal);
    agg.put("statistic_bias_in_se", (mm.mean - signal) / mm.se);

    let var_theory = ctx.var_theory()?;
    agg.put_se("var_statistic", mm.var, variance_se(&stats));
    agg.put("var_theory", var_theory);
    agg.put_se("var_ratio", mm.var / var_theory, variance_se(&stats) / var_theory);
    Ok(())
}

fn block_aggregates(ctx: &Context, rows: &[ReplicateSummary], agg: &mut Aggregates) -> Result<()> {
    let scheme = ctx.scheme.as_ref().expect("block scheme");
    let om = blocks::omega_w(&ctx.gam1, scheme)?;
    let vb11 = blocks::var_b11(scheme, &om);
    agg.put("w", scheme.w as f64);
    agg.put("k", scheme.k as f64);
    agg.put("r", scheme.r as f64);

    let b11 = column(rows, |r| r.b11);
    agg.put_se("var_b11", moments(&b11).var, variance_se(&b11));
    agg.put("var_b11_theory", vb11);

    let off = column(rows, |r| r.off_diagonal_b);
    let sigma_sq = if scheme.k >= 2 {
        let s = blocks::sigma_n_sq(scheme, &om)?;
        agg.put_se("var_off_diagonal_b", moments(&off).var, variance_se(&off));
        agg.put("sigma_sq", s);
        s
    } else {
        0.0
    };

    // ΣB has variance k·Var(B₁₁) + σₙ²: diagonal and off-diagonal terms are
    // uncorrelated
    let var_mn = var_mn_population(&ctx.gam1, ctx.cfg.n)?;
    let scale = (var_mn / (scheme.k as f64 * vb11 + sigma_sq)).sqrt();
    let z: Vec<f64> = column(rows, |r| r.delta11).iter().map(|d| d * scale).collect();
    let ks = ks_normal(&z);
    agg.put("delta11_ks_statistic", ks.statistic);
    agg.put("delta11_ks_p_value", ks.p_value);
    let d12: Vec<f64> = column(rows, |r| r.delta12.map(f64::abs));
    let dm = moments(&d12);
    agg.put_se("mean_abs_delta12", dm.mean, dm.se);

    if scheme.k >= 3 {
        let b12 = column(rows, |r| r.b12);
        let b13 = column(rows, |r| r.b13);
        let (cov, cov_se) = covariance_with_se(&b12, &b13);
        let sd = (moments(&b12).var * moments(&b13).var).sqrt();
        agg.put_se("corr_b12_b13", cov / sd, cov_se / sd);
        let sq12: Vec<f64> = b12.iter().map(|v| v * v).collect();
        let sq13: Vec<f64> = b13.iter().map(|v| v * v).collect();
        let (cov, cov_se) = covariance_with_se(&sq12, &sq13);
        agg.put_se("cov_b12sq_b13sq", cov, cov_se);
    }
    if scheme.k >= 4 {
        let b12 = column(rows, |r| r.b12);
        let b34 = column(rows, |r| r.b34);
        let (cov, cov_se) = covariance_with_se(&b12, &b34);
        let sd = (moments(&b12).var * moments(&b34).var).sqrt();
        agg.put_se("corr_b12_b34", cov / sd, cov_se / sd);
    }
    Ok(())
}

/// Runs every replicate on the current rayon pool and aggregates in order.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let start = Instant::now();
    let ctx = Context::new(cfg)?;
    let results: Vec<Result<ReplicateSummary>> =
        (0..cfg.reps).into_par_iter().map(|i| ctx.replicate(i)).collect();
    let mut rows = Vec::with_capacity(cfg.reps);
    for (index, r) in results.into_iter().enumerate() {
        rows.push(r.map_err(|e| Error::Replicate {
            index,
            source: Box::new(e),
        })?);
    }

    let mut agg = Aggregates::new();
    agg.put("reps", cfg.reps as f64);
    match cfg.scenario {
        Scenario::Size | Scenario::Power => test_aggregates(&ctx, &rows, &mut agg)?,
        Scenario::Bias => bias_aggregates(&ctx, &rows, &mut agg)?,
        Scenario::Blocks => block_aggregates(&ctx, &rows, &mut agg)?,
    }
    Ok(StudyReport {
        scenario: cfg.scenario.name().to_string(),
        config: cfg.clone(),
        aggregates: agg.values,
        se: agg.se,
        replicates: cfg.keep_replicates.then(|| rows.clone()),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        rows,
    })
}
