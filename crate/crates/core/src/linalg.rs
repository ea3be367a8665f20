use nalgebra::{DMatrix, DVector};

use crate::types::CensoredDataset;

/// `[1, Z]` restricted to `rows`.
pub(crate) fn design_with_intercept(z: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), z.ncols() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            z[(rows[i], j - 1)]
        }
    })
}

/// Ordinary least squares; `None` when `x` is rank deficient or underdetermined.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    if x.nrows() < x.ncols() || x.ncols() == 0 {
        return None;
    }
    let svd = x.clone().svd(true, true);
    let top = svd.singular_values.max();
    if top.is_nan() || top <= 0.0 || svd.singular_values.iter().any(|&s| s <= 1e-10 * top) {
        return None;
    }
    svd.solve(y, 0.0).ok()
}

/// Least squares of `y` on `[1, Z]` over the uncensored rows.
///
/// Returns the coefficients and the residual standard deviation (divisor `m`).
pub(crate) fn uncensored_least_squares(ds: &CensoredDataset) -> Option<(DVector<f64>, f64)> {
    let rows: Vec<usize> = (0..ds.n()).filter(|&i| ds.is_event(i)).collect();
    let x = design_with_intercept(ds.z(), &rows);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| ds.y()[i]));
    let coef = least_squares(&x, &y)?;
    let resid = &y - &x * &coef;
    let sd = (resid.norm_squared() / rows.len() as f64).sqrt();
    Some((coef, sd))
}

/// Linear predictor `Z·slopes` (no intercept) for every row.
pub(crate) fn linear_predictor(z: &DMatrix<f64>, slopes: &[f64]) -> Vec<f64> {
    (0..z.nrows())
        .map(|i| (0..z.ncols()).map(|j| z[(i, j)] * slopes[j]).sum())
        .collect()
}
