//! Shared domain vocabulary: datasets, parameter vectors and fit results.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Which side of the response is censored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CensorSide {
    /// `y = min(T, C)`; `delta = 1` when the event was observed.
    RightCensored,
    /// `y = max(X, D)`; `delta = 1` when the value was above the detection bound.
    LeftCensored,
}

/// Observed responses, event indicators and covariates.
///
/// Responses live on the scale the consuming fitter expects: log time for
/// the AFT and Cox fitters, the raw left-censored value for Tobit. The value
/// is immutable after construction and always satisfies the invariants
/// checked by [`CensoredDataset::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredDataset {
    y: Vec<f64>,
    delta: Vec<u8>,
    z: DMatrix<f64>,
    side: CensorSide,
    bound: Option<f64>,
}

impl CensoredDataset {
    pub fn new(
        y: Vec<f64>,
        delta: Vec<u8>,
        z: DMatrix<f64>,
        side: CensorSide,
        bound: Option<f64>,
    ) -> Result<Self> {
        let ds = Self {
            y,
            delta,
            z,
            side,
            bound,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Right-censored dataset from row-major covariates.
    pub fn right_censored(y: Vec<f64>, delta: Vec<u8>, z_rows: &[Vec<f64>]) -> Result<Self> {
        let z = rows_to_matrix(z_rows, y.len())?;
        Self::new(y, delta, z, CensorSide::RightCensored, None)
    }

    /// Left-censored dataset at detection bound `bound`.
    pub fn left_censored(
        y: Vec<f64>,
        delta: Vec<u8>,
        z_rows: &[Vec<f64>],
        bound: f64,
    ) -> Result<Self> {
        let z = rows_to_matrix(z_rows, y.len())?;
        Self::new(y, delta, z, CensorSide::LeftCensored, Some(bound))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if self.delta.len() != n {
            return Err(Error::DimensionMismatch {
                what: "delta length",
                expected: n,
                got: self.delta.len(),
            });
        }
        if self.z.nrows() != n {
            return Err(Error::DimensionMismatch {
                what: "covariate rows",
                expected: n,
                got: self.z.nrows(),
            });
        }
        if n < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: n });
        }
        if let Some(index) = self.delta.iter().position(|&d| d > 1) {
            return Err(Error::InvalidIndicator {
                index,
                value: self.delta[index],
            });
        }
        if self.side == CensorSide::LeftCensored {
            let bound = self.bound.ok_or(Error::MissingBound)?;
            for (index, (&y, &d)) in self.y.iter().zip(&self.delta).enumerate() {
                if d == 0 && y != bound {
                    return Err(Error::BoundViolation {
                        index,
                        value: y,
                        bound,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of covariate columns.
    pub fn p(&self) -> usize {
        self.z.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn delta(&self) -> &[u8] {
        &self.delta
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn censor_side(&self) -> CensorSide {
        self.side
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn is_event(&self, i: usize) -> bool {
        self.delta[i] == 1
    }

    pub fn n_events(&self) -> usize {
        self.delta.iter().filter(|&&d| d == 1).count()
    }

    pub fn n_censored(&self) -> usize {
        self.n() - self.n_events()
    }

    pub(crate) fn require_side(&self, side: CensorSide) -> Result<()> {
        if self.side != side {
            return Err(Error::InvalidConfig(format!(
                "expected {side:?} data, got {:?}",
                self.side
            )));
        }
        Ok(())
    }

    pub(crate) fn require_events(&self) -> Result<()> {
        if self.n_events() == 0 {
            return Err(Error::NoEvents);
        }
        Ok(())
    }

    /// Applies `f` to every response (and to the bound, if any).
    ///
    /// `f` must be strictly increasing for the result to describe the same
    /// censoring pattern.
    pub fn map_response(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.y.iter().map(|&v| f(v)).collect(),
            self.delta.clone(),
            self.z.clone(),
            self.side,
            self.bound.map(&f),
        )
    }

    /// Adds `c` to every response.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        self.map_response(|v| v + c)
    }

    /// Reorders rows so that row `i` of the result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "permutation length",
                expected: self.n(),
                got: order.len(),
            });
        }
        let z = DMatrix::from_fn(self.n(), self.p(), |i, j| self.z[(order[i], j)]);
        Self::new(
            order.iter().map(|&i| self.y[i]).collect(),
            order.iter().map(|&i| self.delta[i]).collect(),
            z,
            self.side,
            self.bound,
        )
    }
}

fn rows_to_matrix(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n {
        return Err(Error::DimensionMismatch {
            what: "covariate rows",
            expected: n,
            got: rows.len(),
        });
    }
    let p = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch {
            what: "covariate columns",
            expected: p,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

/// Named parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "parameter values",
                expected: names.len(),
                got: values.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        Ok(Self { names, values })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let (names, values): (Vec<String>, Vec<f64>) =
            pairs.into_iter().map(|(n, v)| (n.into(), v)).unzip();
        Self::new(names, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.names.iter().map(String::as_str).zip(self.values.iter().copied())
    }
}

/// Covariate labels `z1, …, zp`.
pub fn covariate_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("z{j}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    SemiparAft,
    Tobit,
    WeibullAft,
    CoxPh,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::SemiparAft,
        ModelKind::Tobit,
        ModelKind::WeibullAft,
        ModelKind::CoxPh,
    ];

    /// Label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::SemiparAft => "semipar_aft",
            ModelKind::Tobit => "tobit",
            ModelKind::WeibullAft => "weibull_aft",
            ModelKind::CoxPh => "coxph",
        }
    }

    /// Accepts the table label or the short command-line name.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "semipar" | "semipar_aft" | "semipar-aft" => Some(ModelKind::SemiparAft),
            "tobit" => Some(ModelKind::Tobit),
            "weibull" | "weibull_aft" | "weibull-aft" => Some(ModelKind::WeibullAft),
            "cox" | "coxph" | "cox_ph" => Some(ModelKind::CoxPh),
            _ => None,
        }
    }

    pub fn censor_side(self) -> CensorSide {
        match self {
            ModelKind::Tobit => CensorSide::LeftCensored,
            _ => CensorSide::RightCensored,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Output of any fitter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub model: ModelKind,
    pub params: ParamVector,
    pub converged: bool,
    /// Score norm for the rank solver, log-likelihood for the likelihood fitters.
    pub objective_at_solution: f64,
    pub iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(n: usize) -> Vec<Vec<f64>> {
        vec![vec![0.0]; n]
    }

    #[test]
    fn minimal_valid_dataset() {
        let ds = CensoredDataset::right_censored(vec![1.0, 2.0], vec![1, 0], &zeros(2)).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.p(), 1);
        assert_eq!(ds.n_events(), 1);
    }

    #[test]
    fn indicator_outside_zero_one() {
        let err = CensoredDataset::right_censored(vec![1.0, 2.0], vec![1, 2], &zeros(2)).unwrap_err();
        assert_eq!(err, Error::InvalidIndicator { index: 1, value: 2 });
    }

    #[test]
    fn censored_value_must_equal_bound() {
        let err = CensoredDataset::left_censored(vec![0.4, 1.0], vec![0, 1], &zeros(2), 0.5)
            .unwrap_err();
        assert!(matches!(err, Error::BoundViolation { index: 0, .. }));
    }

    #[test]
    fn dimension_checks() {
        let err = CensoredDataset::right_censored(vec![1.0, 2.0], vec![1], &zeros(2)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = CensoredDataset::right_censored(vec![1.0, 2.0], vec![1, 1], &zeros(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = CensoredDataset::right_censored(vec![1.0], vec![1], &zeros(1)).unwrap_err();
        assert!(matches!(err, Error::TooFewObservations { .. }));
    }

    #[test]
    fn left_censored_needs_bound() {
        let z = DMatrix::zeros(2, 1);
        let err = CensoredDataset::new(vec![1.0, 2.0], vec![1, 1], z, CensorSide::LeftCensored, None)
            .unwrap_err();
        assert_eq!(err, Error::MissingBound);
    }

    #[test]
    fn param_vector_rejects_duplicates() {
        assert!(ParamVector::from_pairs([("a", 1.0), ("a", 2.0)]).is_err());
        assert!(ParamVector::new(vec!["a".into()], vec![]).is_err());
        let pv = ParamVector::from_pairs([("a", 1.0), ("b", 2.0)]).unwrap();
        assert_eq!(pv.get("b"), Some(2.0));
        assert_eq!(pv.get("c"), None);
    }

    #[test]
    fn permutation_and_shift() {
        let ds = CensoredDataset::right_censored(
            vec![1.0, 2.0, 3.0],
            vec![1, 0, 1],
            &[vec![0.0], vec![1.0], vec![2.0]],
        )
        .unwrap();
        let p = ds.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.y(), &[3.0, 1.0, 2.0]);
        assert_eq!(p.delta(), &[1, 1, 0]);
        assert_eq!(p.z()[(0, 0)], 2.0);
        let s = ds.shifted(1.5).unwrap();
        assert_eq!(s.y(), &[2.5, 3.5, 4.5]);
    }

    #[test]
    fn model_labels_round_trip() {
        for m in ModelKind::ALL {
            assert_eq!(ModelKind::parse(m.label()), Some(m));
        }
        assert_eq!(ModelKind::parse("cox"), Some(ModelKind::CoxPh));
        assert_eq!(ModelKind::parse("nope"), None);
    }
}
