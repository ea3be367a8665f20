//! Kaplan–Meier product-limit estimation.

use crate::error::{Error, Result};

/// Right-continuous step survival curve with jumps at the distinct event times.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSurvival {
    pub jump_times: Vec<f64>,
    /// `S(t)` just after each jump.
    pub surv_after: Vec<f64>,
    pub n_at_risk: Vec<usize>,
    pub n_events: Vec<usize>,
}

impl StepSurvival {
    /// `S(t)`, right-continuous; 1 before the first jump.
    pub fn survival(&self, t: f64) -> f64 {
        // Number of jumps at or before t.
        let k = self.jump_times.partition_point(|&jt| jt <= t);
        if k == 0 {
            1.0
        } else {
            self.surv_after[k - 1]
        }
    }
}

/// Product-limit estimate from `(times, delta)`.
///
/// At a time shared by events and censorings the censored subjects are still
/// counted at risk for those events.
pub fn km_fit(times: &[f64], delta: &[u8]) -> Result<StepSurvival> {
    if times.len() != delta.len() {
        return Err(Error::DimensionMismatch {
            what: "delta length",
            expected: times.len(),
            got: delta.len(),
        });
    }
    if times.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("survival time"));
    }
    if !delta.contains(&1) {
        return Err(Error::NoEvents);
    }

    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let n = times.len();
    let mut curve = StepSurvival {
        jump_times: Vec::new(),
        surv_after: Vec::new(),
        n_at_risk: Vec::new(),
        n_events: Vec::new(),
    };
    let mut surv = 1.0;
    let mut start = 0;
    while start < n {
        let t = times[order[start]];
        let mut end = start;
        let mut events = 0;
        while end < n && times[order[end]] == t {
            events += usize::from(delta[order[end]] == 1);
            end += 1;
        }
        if events > 0 {
            let at_risk = n - start;
            surv *= (at_risk - events) as f64 / at_risk as f64;
            curve.jump_times.push(t);
            curve.surv_after.push(surv);
            curve.n_at_risk.push(at_risk);
            curve.n_events.push(events);
        }
        start = end;
    }
    Ok(curve)
}

/// `F(t) = 1 - S(t)` with `S` right-continuous.
pub fn km_eval_cdf(curve: &StepSurvival, t: f64) -> f64 {
    1.0 - curve.survival(t)
}

/// Restricted mean of the product-limit curve, with the largest observation
/// treated as an event so the curve reaches zero.
///
/// Times are shifted by their minimum `m` before integrating from zero, so
/// negative inputs are fine; the result is `m + ∫_0^∞ S(u) du` on the shifted
/// scale.
pub fn km_mean(times: &[f64], delta: &[u8]) -> Result<f64> {
    if times.len() != delta.len() {
        return Err(Error::DimensionMismatch {
            what: "delta length",
            expected: times.len(),
            got: delta.len(),
        });
    }
    if !delta.contains(&1) {
        return Err(Error::NoEvents);
    }
    let m = times.iter().copied().fold(f64::INFINITY, f64::min);
    let max = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = times.iter().map(|&t| t - m).collect();
    let closed: Vec<u8> = times
        .iter()
        .zip(delta)
        .map(|(&t, &d)| if t == max { 1 } else { d })
        .collect();
    let curve = km_fit(&shifted, &closed)?;

    let mut area = 0.0;
    let mut prev_t = 0.0;
    let mut prev_s = 1.0;
    for (&t, &s) in curve.jump_times.iter().zip(&curve.surv_after) {
        area += (t - prev_t) * prev_s;
        prev_t = t;
        prev_s = s;
    }
    Ok(m + area)
}
