//! Replicate datasets for the simulation designs.
//!
//! Every design draws covariates `Z1 ~ Bernoulli(0.5)`, `Z2 ~ N(0, 1)` and a
//! latent response, then censors at an empirical quantile of the latent
//! values. The quantile is always the `⌈f·n⌉`-th order statistic, which
//! makes the number of censored rows exact.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::{CensorSide, CensoredDataset, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DesignKind {
    /// Normal log-scale model, exponentiated and left-censored at a detection
    /// limit; fitted as right-censored on the log scale.
    LodLogScale,
    /// Weibull AFT event times with administrative right-censoring.
    WeibullAft,
    /// Log-normal AFT event times with administrative right-censoring.
    LogNormalAft,
    /// Normal linear model left-censored at a detection limit.
    TobitNormal,
}

impl DesignKind {
    pub const ALL: [DesignKind; 4] = [
        DesignKind::LodLogScale,
        DesignKind::WeibullAft,
        DesignKind::LogNormalAft,
        DesignKind::TobitNormal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DesignKind::LodLogScale => "lod",
            DesignKind::WeibullAft => "weibull",
            DesignKind::LogNormalAft => "lognormal",
            DesignKind::TobitNormal => "tobit-normal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|d| d.label() == s)
    }

    /// Side of the censoring in the dataset handed to the fitters.
    pub fn censor_side(self) -> CensorSide {
        match self {
            DesignKind::TobitNormal => CensorSide::LeftCensored,
            _ => CensorSide::RightCensored,
        }
    }

    /// Stable index used to key random streams.
    pub fn index(self) -> u64 {
        match self {
            DesignKind::LodLogScale => 0,
            DesignKind::WeibullAft => 1,
            DesignKind::LogNormalAft => 2,
            DesignKind::TobitNormal => 3,
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One data-generating scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub n: usize,
    /// Detection-limit fraction (left-censored designs) or censoring rate
    /// (right-censored designs).
    pub censor_frac: f64,
    /// `Intercept, z1, z2` of the data-generating linear predictor.
    pub truth: ParamVector,
    /// Error variance for the normal designs.
    pub sigma2: f64,
    /// Weibull shape; ignored by the other designs.
    pub shape_k: f64,
}

pub const DEFAULT_N: usize = 200;
pub const DEFAULT_SIGMA2: f64 = 0.2;
pub const DEFAULT_SHAPE_K: f64 = 3.0;
pub const DEFAULT_TOBIT_SIGMA: f64 = 1.0;

impl DesignSpec {
    /// Scenario with the standard parameter values for `kind`.
    pub fn new(kind: DesignKind, n: usize, censor_frac: f64) -> Result<Self> {
        let (coefs, sigma2) = match kind {
            DesignKind::TobitNormal => ([1.0, 1.0, 1.0], DEFAULT_TOBIT_SIGMA.powi(2)),
            _ => ([-1.0, 0.5, -1.0], DEFAULT_SIGMA2),
        };
        let spec = Self {
            kind,
            n,
            censor_frac,
            truth: ParamVector::from_pairs([
                ("Intercept", coefs[0]),
                ("z1", coefs[1]),
                ("z2", coefs[2]),
            ])?,
            sigma2,
            shape_k: DEFAULT_SHAPE_K,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                got: self.n,
            });
        }
        if !(self.censor_frac > 0.0 && self.censor_frac < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "censoring fraction {} is outside (0, 1)",
                self.censor_frac
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma2 = {} must be positive", self.sigma2)));
        }
        if !(self.shape_k > 0.0 && self.shape_k.is_finite()) {
            return Err(Error::InvalidConfig(format!("shape_k = {} must be positive", self.shape_k)));
        }
        if self.truth.len() != 3 {
            return Err(Error::DimensionMismatch {
                what: "design coefficients",
                expected: 3,
                got: self.truth.len(),
            });
        }
        Ok(())
    }

    fn coefs(&self) -> [f64; 3] {
        let v = self.truth.values();
        [v[0], v[1], v[2]]
    }

    fn require(&self, kind: DesignKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::InvalidConfig(format!(
                "expected a {kind} design, got {}",
                self.kind
            )));
        }
        Ok(())
    }

    /// Exact number of censored rows every dataset from this spec has.
    pub fn expected_censored(&self) -> usize {
        match self.kind {
            DesignKind::LodLogScale | DesignKind::TobitNormal => {
                order_stat_rank(self.censor_frac, self.n)
            }
            DesignKind::WeibullAft | DesignKind::LogNormalAft => {
                self.n - order_stat_rank(1.0 - self.censor_frac, self.n)
            }
        }
    }
}

/// Key of one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub design: u64,
    pub censor_level: u64,
    pub replicate: u64,
}

/// Deterministic random stream. The 256-bit ChaCha seed is the key itself,
/// so distinct keys never share a stream.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(key: StreamKey) -> Self {
        let mut seed = [0u8; 32];
        for (chunk, word) in seed.chunks_exact_mut(8).zip([
            key.master_seed,
            key.design,
            key.censor_level,
            key.replicate,
        ]) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self(ChaCha8Rng::from_seed(seed))
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(StreamKey {
            master_seed: seed,
            design: 0,
            censor_level: 0,
            replicate: 0,
        })
    }

    pub fn normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        1.0 - self.0.random::<f64>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.0.random_bool(p)
    }
}

/// `⌈frac·n⌉`, clamped to `1..=n`. A small guard absorbs representation error
/// in products such as `0.3 * 10`.
pub fn order_stat_rank(frac: f64, n: usize) -> usize {
    let r = (frac * n as f64 - 1e-9).ceil();
    (r.max(1.0) as usize).min(n)
}

/// The `rank`-th smallest value (1-based).
fn order_statistic(values: &[f64], rank: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[rank - 1]
}

/// `n × 2` matrix with a Bernoulli(0.5) column and a standard normal column.
pub fn gen_covariates(n: usize, rng: &mut RngStream) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(n, 2);
    for i in 0..n {
        z[(i, 0)] = if rng.bernoulli(0.5) { 1.0 } else { 0.0 };
        z[(i, 1)] = rng.normal();
    }
    z
}

fn linear_predictor(coefs: [f64; 3], z: &DMatrix<f64>, i: usize) -> f64 {
    coefs[0] + coefs[1] * z[(i, 0)] + coefs[2] * z[(i, 1)]
}

/// Latent values of the detection-limit design before censoring.
#[derive(Debug, Clone)]
pub struct LodLatent {
    pub z: DMatrix<f64>,
    /// Log-scale responses.
    pub t: Vec<f64>,
    /// `exp(-t)`, the positive-scale measurement.
    pub x_star: Vec<f64>,
}

pub fn lod_latent(spec: &DesignSpec, rng: &mut RngStream) -> Result<LodLatent> {
    spec.require(DesignKind::LodLogScale)?;
    let z = gen_covariates(spec.n, rng);
    let coefs = spec.coefs();
    let sd = spec.sigma2.sqrt();
    let t: Vec<f64> = (0..spec.n)
        .map(|i| linear_predictor(coefs, &z, i) + sd * rng.normal())
        .collect();
    let x_star = t.iter().map(|v| (-v).exp()).collect();
    Ok(LodLatent { z, t, x_star })
}

/// Detection-limit design mapped to right-censoring on the log scale.
///
/// `D` is the `⌈q·n⌉`-th order statistic of `X* = exp(−T)`; rows with
/// `X* ≤ D` are censored at `C = −log D`.
pub fn gen_lod_design(spec: &DesignSpec, rng: &mut RngStream) -> Result<CensoredDataset> {
    let latent = lod_latent(spec, rng)?;
    let d = order_statistic(&latent.x_star, order_stat_rank(spec.censor_frac, spec.n));
    let c = -d.ln();
    let delta: Vec<u8> = latent.x_star.iter().map(|&x| u8::from(x > d)).collect();
    let y = latent
        .t
        .iter()
        .zip(&delta)
        .map(|(&t, &dl)| if dl == 1 { t } else { c })
        .collect();
    CensoredDataset::new(y, delta, latent.z, CensorSide::RightCensored, None)
}

/// Administrative censoring of log event times at the `⌈(1−π)·n⌉`-th order statistic.
fn administrative(
    z: DMatrix<f64>,
    log_t: Vec<f64>,
    censor_rate: f64,
) -> Result<CensoredDataset> {
    let n = log_t.len();
    let log_c = order_statistic(&log_t, order_stat_rank(1.0 - censor_rate, n));
    let delta: Vec<u8> = log_t.iter().map(|&t| u8::from(t <= log_c)).collect();
    let y = log_t.iter().map(|&t| t.min(log_c)).collect();
    CensoredDataset::new(y, delta, z, CensorSide::RightCensored, None)
}

/// Weibull AFT design: `T = exp(η)·(−log U)^{1/k}`, returned on the log scale.
pub fn gen_weibull_design(spec: &DesignSpec, rng: &mut RngStream) -> Result<CensoredDataset> {
    spec.require(DesignKind::WeibullAft)?;
    let z = gen_covariates(spec.n, rng);
    let coefs = spec.coefs();
    let log_t = (0..spec.n)
        .map(|i| linear_predictor(coefs, &z, i) + (-rng.uniform().ln()).ln() / spec.shape_k)
        .collect();
    administrative(z, log_t, spec.censor_frac)
}

/// Log-normal AFT design: `log T = η + ε`, `ε ~ N(0, σ²)`, returned on the log scale.
pub fn gen_lognormal_design(spec: &DesignSpec, rng: &mut RngStream) -> Result<CensoredDataset> {
    spec.require(DesignKind::LogNormalAft)?;
    let z = gen_covariates(spec.n, rng);
    let coefs = spec.coefs();
    let sd = spec.sigma2.sqrt();
    let log_t = (0..spec.n)
        .map(|i| linear_predictor(coefs, &z, i) + sd * rng.normal())
        .collect();
    administrative(z, log_t, spec.censor_frac)
}

/// Normal linear model left-censored at its `⌈q·n⌉`-th order statistic.
pub fn gen_tobit_design(spec: &DesignSpec, rng: &mut RngStream) -> Result<CensoredDataset> {
    spec.require(DesignKind::TobitNormal)?;
    let z = gen_covariates(spec.n, rng);
    let coefs = spec.coefs();
    let sd = spec.sigma2.sqrt();
    let x_star: Vec<f64> = (0..spec.n)
        .map(|i| linear_predictor(coefs, &z, i) + sd * rng.normal())
        .collect();
    let d = order_statistic(&x_star, order_stat_rank(spec.censor_frac, spec.n));
    let delta: Vec<u8> = x_star.iter().map(|&x| u8::from(x > d)).collect();
    let y = x_star.iter().map(|&x| x.max(d)).collect();
    CensoredDataset::new(y, delta, z, CensorSide::LeftCensored, Some(d))
}

/// Dispatches on `spec.kind`.
pub fn gen_dataset(spec: &DesignSpec, rng: &mut RngStream) -> Result<CensoredDataset> {
    match spec.kind {
        DesignKind::LodLogScale => gen_lod_design(spec, rng),
        DesignKind::WeibullAft => gen_weibull_design(spec, rng),
        DesignKind::LogNormalAft => gen_lognormal_design(spec, rng),
        DesignKind::TobitNormal => gen_tobit_design(spec, rng),
    }
}
