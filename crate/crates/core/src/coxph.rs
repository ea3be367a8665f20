//! Cox proportional hazards by Breslow partial likelihood.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::optimize::{newton_maximize, NewtonOptions, StopReason};
use crate::types::{covariate_names, CensorSide, CensoredDataset, ModelFit, ModelKind, ParamVector};

/// `‖θ‖` beyond which the likelihood is treated as monotone (separated data).
pub const DIVERGENCE_NORM: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CoxParams {
    /// Log hazard ratios, one per covariate.
    pub theta: DVector<f64>,
}

/// Partial-likelihood evaluator with the risk-set order precomputed.
pub struct CoxPartialLikelihood<'a> {
    ds: &'a CensoredDataset,
    /// Tie groups of indices in decreasing response order.
    groups: Vec<Vec<usize>>,
}

impl<'a> CoxPartialLikelihood<'a> {
    pub fn new(ds: &'a CensoredDataset) -> Result<Self> {
        ds.require_side(CensorSide::RightCensored)?;
        ds.require_events()?;
        let y = ds.y();
        let mut order: Vec<usize> = (0..ds.n()).collect();
        order.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in order {
            match groups.last_mut() {
                Some(g) if y[g[0]] == y[i] => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        Ok(Self { ds, groups })
    }

    /// Log partial likelihood with gradient and Hessian.
    ///
    /// Everyone whose response is at least the event time is at risk,
    /// including censorings tied with the event.
    pub fn evaluate(&self, theta: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let p = self.ds.p();
        if theta.len() != p {
            return Err(Error::DimensionMismatch {
                what: "theta",
                expected: p,
                got: theta.len(),
            });
        }
        let z = self.ds.z();
        let lin: Vec<f64> = (0..self.ds.n())
            .map(|i| (0..p).map(|j| z[(i, j)] * theta[j]).sum())
            .collect();
        let offset = lin.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let mut s0 = 0.0;
        let mut s1 = DVector::<f64>::zeros(p);
        let mut s2 = DMatrix::<f64>::zeros(p, p);
        let mut value = 0.0;
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);

        for group in &self.groups {
            for &i in group {
                let w = (lin[i] - offset).exp();
                let zi = z.row(i).transpose();
                s0 += w;
                s2 += &zi * zi.transpose() * w;
                s1 += zi * w;
            }
            let mean = &s1 / s0;
            let cov = &s2 / s0 - &mean * mean.transpose();
            let log_s0 = s0.ln() + offset;
            for &i in group.iter().filter(|&&i| self.ds.is_event(i)) {
                value += lin[i] - log_s0;
                grad += z.row(i).transpose() - &mean;
                hess -= &cov;
            }
        }
        if !value.is_finite() {
            return Err(Error::NonFinite("cox partial likelihood"));
        }
        Ok((value, grad, hess))
    }
}

pub fn cox_logpl(params: &CoxParams, ds: &CensoredDataset) -> Result<f64> {
    Ok(CoxPartialLikelihood::new(ds)?.evaluate(&params.theta)?.0)
}

/// Newton fit from `θ = 0`. Divergence past [`DIVERGENCE_NORM`] (monotone
/// likelihood) yields `converged = false`.
pub fn fit_cox(ds: &CensoredDataset) -> Result<ModelFit> {
    let pl = CoxPartialLikelihood::new(ds)?;
    let p = ds.p();
    let opts = NewtonOptions {
        // Gradients vanish along a separating direction, so only parameter
        // change and the norm bound decide termination.
        grad_tol: 0.0,
        max_norm: Some(DIVERGENCE_NORM),
        ..NewtonOptions::default()
    };
    let result = newton_maximize(
        |t| pl.evaluate(t).map_or(f64::NEG_INFINITY, |v| v.0),
        |t| pl.evaluate(t).map_or_else(|_| DVector::from_element(p, f64::NAN), |v| v.1),
        |t| pl.evaluate(t).map_or_else(|_| DMatrix::from_element(p, p, f64::NAN), |v| v.2),
        &DVector::zeros(p),
        &opts,
    );
    Ok(ModelFit {
        model: ModelKind::CoxPh,
        params: ParamVector::new(covariate_names(p), result.x.iter().copied().collect())?,
        converged: result.converged && result.reason == StopReason::Tolerance,
        objective_at_solution: result.objective,
        iterations: result.iterations,
    })
}

/// Log hazard ratios implied by Weibull AFT slopes: `θ_j = −k γ_j`.
pub fn implied_cox_truth(gamma_slopes: &[f64], k: f64) -> Vec<f64> {
    gamma_slopes.iter().map(|g| -k * g).collect()
}
