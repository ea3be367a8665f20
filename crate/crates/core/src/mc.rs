//! Monte Carlo grid: designs × censoring levels × replicates, every
//! applicable model fitted per replicate, summarized against its targets.

use rayon::prelude::*;

use crate::coxph::{fit_cox, implied_cox_truth};
use crate::datagen::{gen_dataset, DesignKind, DesignSpec, RngStream, StreamKey, DEFAULT_N};
use crate::error::{Error, Result};
use crate::parametric_mle::{fit_tobit, fit_weibull_aft};
use crate::rank_aft::fit_semipar_aft;
use crate::types::{CensoredDataset, ModelFit, ModelKind};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub const DEFAULT_REPS: usize = 500;
pub const DEFAULT_CENSOR_FRACS: [f64; 3] = [0.1, 0.3, 0.6];

/// Minimum share of converged replicate fits expected in every cell.
pub const MIN_CONVERGED_SHARE: f64 = 0.95;

/// Label of the semiparametric intercept row scored against `γ0 − γ_E/k`.
pub const CORRECTED_INTERCEPT: &str = "Intercept_corrected";

/// One reported parameter: which fitted value to read and what to compare it with.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub model: ModelKind,
    /// Row label in the results table.
    pub parameter: String,
    /// Name of the fitted parameter the row summarizes.
    pub estimate: String,
    pub truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    pub design: DesignKind,
    pub targets: Vec<Target>,
}

impl TargetSet {
    pub fn for_model(&self, model: ModelKind) -> impl Iterator<Item = &Target> {
        self.targets.iter().filter(move |t| t.model == model)
    }

    /// `Some(truth)` when the row exists; the inner option is the truth itself.
    pub fn truth(&self, model: ModelKind, parameter: &str) -> Option<Option<f64>> {
        self.targets
            .iter()
            .find(|t| t.model == model && t.parameter == parameter)
            .map(|t| t.truth)
    }
}

/// Models that can be fitted to datasets from `design`.
pub fn compatible_models(design: DesignKind) -> Vec<ModelKind> {
    match design {
        DesignKind::TobitNormal => vec![ModelKind::Tobit],
        _ => vec![ModelKind::SemiparAft, ModelKind::WeibullAft, ModelKind::CoxPh],
    }
}

fn target(model: ModelKind, parameter: &str, truth: Option<f64>) -> Target {
    Target {
        model,
        parameter: parameter.to_string(),
        estimate: parameter.to_string(),
        truth,
    }
}

/// Population values every reported parameter is compared with.
///
/// Under the Weibull design the semiparametric intercept gets two rows: one
/// against `γ0 + γ_E/k` and one against `γ0 − γ_E/k`, which is the actual
/// mean of `log T` at `Z = 0` for Weibull times.
pub fn targets_for(spec: &DesignSpec) -> TargetSet {
    let v = spec.truth.values();
    let (b0, b1, b2) = (v[0], v[1], v[2]);
    let k = spec.shape_k;
    let mut targets = Vec::new();
    match spec.kind {
        DesignKind::LodLogScale | DesignKind::LogNormalAft => {
            targets.push(target(ModelKind::SemiparAft, "Intercept", Some(b0)));
            targets.push(target(ModelKind::SemiparAft, "z1", Some(b1)));
            targets.push(target(ModelKind::SemiparAft, "z2", Some(b2)));
            for p in ["Intercept", "z1", "z2", "shape_k"] {
                targets.push(target(ModelKind::WeibullAft, p, None));
            }
            for p in ["z1", "z2"] {
                targets.push(target(ModelKind::CoxPh, p, None));
            }
        }
        DesignKind::WeibullAft => {
            targets.push(target(
                ModelKind::SemiparAft,
                "Intercept",
                Some(b0 + EULER_GAMMA / k),
            ));
            targets.push(Target {
                model: ModelKind::SemiparAft,
                parameter: CORRECTED_INTERCEPT.to_string(),
                estimate: "Intercept".to_string(),
                truth: Some(b0 - EULER_GAMMA / k),
            });
            targets.push(target(ModelKind::SemiparAft, "z1", Some(b1)));
            targets.push(target(ModelKind::SemiparAft, "z2", Some(b2)));
            targets.push(target(ModelKind::WeibullAft, "Intercept", Some(b0)));
            targets.push(target(ModelKind::WeibullAft, "z1", Some(b1)));
            targets.push(target(ModelKind::WeibullAft, "z2", Some(b2)));
            targets.push(target(ModelKind::WeibullAft, "shape_k", Some(k)));
            let theta = implied_cox_truth(&[b1, b2], k);
            targets.push(target(ModelKind::CoxPh, "z1", Some(theta[0])));
            targets.push(target(ModelKind::CoxPh, "z2", Some(theta[1])));
        }
        DesignKind::TobitNormal => {
            targets.push(target(ModelKind::Tobit, "Intercept", Some(b0)));
            targets.push(target(ModelKind::Tobit, "z1", Some(b1)));
            targets.push(target(ModelKind::Tobit, "z2", Some(b2)));
            targets.push(target(ModelKind::Tobit, "sigma", Some(spec.sigma2.sqrt())));
        }
    }
    TargetSet {
        design: spec.kind,
        targets,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub emp_sd: f64,
    pub rel_bias_pct: Option<f64>,
}

/// Mean, empirical SD (divisor `B − 1`) and `100·(mean − truth)/truth`.
pub fn summarize(replicates: &[f64], truth: Option<f64>) -> Result<Summary> {
    let b = replicates.len();
    if b < 2 {
        return Err(Error::InsufficientReplicates(b));
    }
    let mean = replicates.iter().sum::<f64>() / b as f64;
    let ss: f64 = replicates.iter().map(|x| (x - mean).powi(2)).sum();
    let emp_sd = (ss / (b - 1) as f64).sqrt();
    let rel_bias_pct = truth
        .filter(|&t| t != 0.0)
        .map(|t| 100.0 * (mean - t) / t);
    Ok(Summary {
        mean,
        emp_sd,
        rel_bias_pct,
    })
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct McSummaryRow {
    pub design: DesignKind,
    pub censor_frac: f64,
    pub model: ModelKind,
    pub parameter: String,
    pub truth: Option<f64>,
    /// NaN when fewer than two replicate fits converged.
    pub mean: f64,
    pub emp_sd: f64,
    pub rel_bias_pct: Option<f64>,
    pub n_converged: usize,
    pub n_total: usize,
}

impl McSummaryRow {
    pub fn convergence_ok(&self) -> bool {
        self.n_total > 0 && self.n_converged as f64 >= MIN_CONVERGED_SHARE * self.n_total as f64
    }

    pub fn is_complete(&self) -> bool {
        self.mean.is_finite() && self.emp_sd.is_finite()
    }
}

pub fn fit_model(model: ModelKind, ds: &CensoredDataset) -> Result<ModelFit> {
    match model {
        ModelKind::SemiparAft => fit_semipar_aft(ds),
        ModelKind::Tobit => fit_tobit(ds),
        ModelKind::WeibullAft => fit_weibull_aft(ds),
        ModelKind::CoxPh => fit_cox(ds),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub master_seed: u64,
    pub designs: Vec<DesignKind>,
    pub censor_fracs: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    /// `None` fits every model compatible with each design.
    pub models: Option<Vec<ModelKind>>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            master_seed: 20_240_601,
            designs: DesignKind::ALL.to_vec(),
            censor_fracs: DEFAULT_CENSOR_FRACS.to_vec(),
            n: DEFAULT_N,
            reps: DEFAULT_REPS,
            models: None,
            threads: None,
        }
    }
}

impl GridConfig {
    /// Models fitted for `design`, in declaration order.
    pub fn models_for(&self, design: DesignKind) -> Vec<ModelKind> {
        let compatible = compatible_models(design);
        match &self.models {
            None => compatible,
            Some(requested) => ModelKind::ALL
                .into_iter()
                .filter(|m| requested.contains(m) && compatible.contains(m))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::InvalidConfig(format!("reps = {} must be at least 2", self.reps)));
        }
        if self.designs.is_empty() || self.censor_fracs.is_empty() {
            return Err(Error::InvalidConfig("empty design or censoring list".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        for &design in &self.designs {
            if self.models_for(design).is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "none of the requested models applies to the {design} design"
                )));
            }
            for &f in &self.censor_fracs {
                DesignSpec::new(design, self.n, f)?;
            }
        }
        if let Some(models) = &self.models {
            for m in models {
                if !self.designs.iter().any(|&d| compatible_models(d).contains(m)) {
                    return Err(Error::InvalidConfig(format!(
                        "model {m} applies to none of the requested designs"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Designs and censoring levels in table order, deduplicated.
    pub fn cells(&self) -> Vec<(DesignKind, f64)> {
        let mut designs = self.designs.clone();
        designs.sort();
        designs.dedup();
        let mut fracs = self.censor_fracs.clone();
        fracs.sort_by(f64::total_cmp);
        fracs.dedup();
        designs
            .into_iter()
            .flat_map(|d| fracs.iter().map(move |&f| (d, f)))
            .collect()
    }
}

/// Random stream key of one replicate. The censoring level is keyed by the
/// bit pattern of its fraction, so a cell's data do not depend on which
/// other cells are in the grid.
pub fn stream_key(master_seed: u64, design: DesignKind, censor_frac: f64, replicate: usize) -> StreamKey {
    StreamKey {
        master_seed,
        design: design.index(),
        censor_level: censor_frac.to_bits(),
        replicate: replicate as u64,
    }
}

/// Dataset of one replicate, exactly as `run_grid` generates it.
pub fn replicate_dataset(
    master_seed: u64,
    spec: &DesignSpec,
    replicate: usize,
) -> Result<CensoredDataset> {
    let key = stream_key(master_seed, spec.kind, spec.censor_frac, replicate);
    gen_dataset(spec, &mut RngStream::new(key))
}

/// Per-replicate fits of one cell, in replicate order. A failed fit is `None`.
fn run_cell(
    master_seed: u64,
    spec: &DesignSpec,
    models: &[ModelKind],
    reps: usize,
) -> Result<Vec<Vec<Option<ModelFit>>>> {
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let ds = replicate_dataset(master_seed, spec, r)?;
            Ok(models.iter().map(|&m| fit_model(m, &ds).ok()).collect())
        })
        .collect()
}

fn summarize_cell(
    spec: &DesignSpec,
    models: &[ModelKind],
    fits: &[Vec<Option<ModelFit>>],
) -> Vec<McSummaryRow> {
    let targets = targets_for(spec);
    let mut rows = Vec::new();
    for (mi, &model) in models.iter().enumerate() {
        let converged: Vec<&ModelFit> = fits
            .iter()
            .filter_map(|rep| rep[mi].as_ref())
            .filter(|f| f.converged)
            .collect();
        for t in targets.for_model(model) {
            let estimates: Vec<f64> = converged
                .iter()
                .filter_map(|f| f.params.get(&t.estimate))
                .collect();
            let (mean, emp_sd, rel_bias_pct) = match summarize(&estimates, t.truth) {
                Ok(s) => (s.mean, s.emp_sd, s.rel_bias_pct),
                Err(_) => (f64::NAN, f64::NAN, None),
            };
            rows.push(McSummaryRow {
                design: spec.kind,
                censor_frac: spec.censor_frac,
                model,
                parameter: t.parameter.clone(),
                truth: t.truth,
                mean,
                emp_sd,
                rel_bias_pct,
                n_converged: converged.len(),
                n_total: fits.len(),
            });
        }
    }
    rows
}

/// Runs the whole grid. Output depends only on the configuration (including
/// the seed), never on the number of worker threads.
pub fn run_grid(cfg: &GridConfig) -> Result<Vec<McSummaryRow>> {
    cfg.validate()?;
    let work = || -> Result<Vec<McSummaryRow>> {
        let mut rows = Vec::new();
        for (design, frac) in cfg.cells() {
            let spec = DesignSpec::new(design, cfg.n, frac)?;
            let models = cfg.models_for(design);
            let fits = run_cell(cfg.master_seed, &spec, &models, cfg.reps)?;
            rows.extend(summarize_cell(&spec, &models, &fits));
        }
        Ok(rows)
    };
    match cfg.threads {
        None => work(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work),
    }
}
