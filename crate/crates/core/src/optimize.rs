//! Small-dimension optimizers: a Nelder–Mead simplex for the non-smooth rank
//! score and a safeguarded Newton ascent for the likelihood fitters.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIter,
    /// The objective was non-finite where a finite value was required.
    Degenerate,
    /// Iterates left the admissible norm ball (used to flag monotone likelihoods).
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub reason: StopReason,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub initial_step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_iter: usize,
    /// Stop once every vertex is within this distance of the best one.
    pub x_tol: f64,
    /// Stop once worst and best objective values differ by less than this.
    pub f_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.25,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_iter: 500,
            x_tol: 1e-8,
            f_tol: 1e-12,
        }
    }
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Nelder–Mead minimization of `f` starting from a right-angled simplex at `init`.
///
/// Non-finite objective values are treated as `+inf`, so the simplex simply
/// moves away from them. The result is `Degenerate` only if no finite value
/// is ever observed.
pub fn simplex_minimize<F>(f: F, init: &DVector<f64>, opts: &SimplexOptions) -> OptimResult
where
    F: Fn(&DVector<f64>) -> f64,
{
    let dim = init.len();
    let eval = |x: &DVector<f64>| finite_or_inf(f(x));

    let mut verts: Vec<(DVector<f64>, f64)> = Vec::with_capacity(dim + 1);
    verts.push((init.clone(), eval(init)));
    for j in 0..dim {
        let mut v = init.clone();
        v[j] += opts.initial_step;
        let fv = eval(&v);
        verts.push((v, fv));
    }

    let mut iterations = 0;
    let reason = loop {
        verts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = verts[0].1;
        let worst = verts[dim].1;

        if !best.is_finite() {
            break StopReason::Degenerate;
        }
        let diameter = verts[1..]
            .iter()
            .map(|(v, _)| (v - &verts[0].0).norm())
            .fold(0.0, f64::max);
        if diameter < opts.x_tol {
            break StopReason::Tolerance;
        }
        if worst - best < opts.f_tol {
            // A level simplex can straddle a valley (e.g. |x|); probe its
            // centroid before accepting the plateau.
            let mut centroid = DVector::zeros(dim);
            for (v, _) in &verts {
                centroid += v;
            }
            centroid /= (dim + 1) as f64;
            let f_centroid = eval(&centroid);
            if f_centroid < best - opts.f_tol && iterations < opts.max_iter {
                iterations += 1;
                verts[dim] = (centroid, f_centroid);
                continue;
            }
            break StopReason::Tolerance;
        }
        if iterations >= opts.max_iter {
            break StopReason::MaxIter;
        }
        iterations += 1;

        let mut centroid = DVector::zeros(dim);
        for (v, _) in &verts[..dim] {
            centroid += v;
        }
        centroid /= dim as f64;

        let (worst_x, worst_f) = verts[dim].clone();
        let second_worst = verts[dim - 1].1;

        let reflected = &centroid + (&centroid - &worst_x) * opts.reflection;
        let f_reflected = eval(&reflected);

        if f_reflected < best {
            let expanded = &centroid + (&reflected - &centroid) * opts.expansion;
            let f_expanded = eval(&expanded);
            verts[dim] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < second_worst {
            verts[dim] = (reflected, f_reflected);
            continue;
        }

        let accepted = if f_reflected < worst_f {
            let outside = &centroid + (&reflected - &centroid) * opts.contraction;
            let f_outside = eval(&outside);
            (f_outside <= f_reflected).then_some((outside, f_outside))
        } else {
            let inside = &centroid + (&worst_x - &centroid) * opts.contraction;
            let f_inside = eval(&inside);
            (f_inside < worst_f).then_some((inside, f_inside))
        };
        match accepted {
            Some(v) => verts[dim] = v,
            None => {
                let anchor = verts[0].0.clone();
                for vert in verts.iter_mut().skip(1) {
                    let x = &anchor + (&vert.0 - &anchor) * opts.shrink;
                    let fx = eval(&x);
                    *vert = (x, fx);
                }
            }
        }
    };

    let (x, objective) = verts.swap_remove(0);
    OptimResult {
        x,
        objective,
        iterations,
        converged: reason == StopReason::Tolerance,
        reason,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Relative parameter change `‖Δx‖ / (1 + ‖x‖)` below which iteration stops.
    pub rel_tol: f64,
    /// Gradient norm below which iteration stops. Zero disables the test.
    pub grad_tol: f64,
    pub max_halvings: usize,
    /// Report `Diverged` once `‖x‖` exceeds this.
    pub max_norm: Option<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            rel_tol: 1e-8,
            grad_tol: 1e-8,
            max_halvings: 60,
            max_norm: None,
        }
    }
}

/// Newton ascent with step halving.
///
/// The direction solves `(-H) d = g` by Cholesky; when `-H` is not positive
/// definite the gradient itself is used. A step is accepted once the
/// objective does not decrease, so the returned objective is never below
/// `f(init)`.
pub fn newton_maximize<F, G, H>(
    f: F,
    grad: G,
    hess: H,
    init: &DVector<f64>,
    opts: &NewtonOptions,
) -> OptimResult
where
    F: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
    H: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let mut x = init.clone();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return OptimResult {
            x,
            objective: fx,
            iterations: 0,
            converged: false,
            reason: StopReason::Degenerate,
        };
    }

    let done = |x: DVector<f64>, objective: f64, iterations: usize, reason: StopReason| {
        OptimResult {
            x,
            objective,
            iterations,
            converged: reason == StopReason::Tolerance,
            reason,
        }
    };

    for iter in 0..opts.max_iter {
        let g = grad(&x);
        if g.iter().any(|v| !v.is_finite()) {
            return done(x, fx, iter, StopReason::Degenerate);
        }
        if g.norm() < opts.grad_tol {
            return done(x, fx, iter, StopReason::Tolerance);
        }

        let neg_h = -hess(&x);
        let direction = neg_h
            .cholesky()
            .map(|c| c.solve(&g))
            .filter(|d| d.iter().all(|v| v.is_finite()) && d.dot(&g) > 0.0)
            .unwrap_or_else(|| g.clone());

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let candidate = &x + &direction * step;
            let fc = f(&candidate);
            if fc.is_finite() && fc >= fx {
                accepted = Some((candidate, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((next, f_next)) = accepted else {
            // No ascent along the direction: we are at the optimum to working precision.
            return done(x, fx, iter + 1, StopReason::Tolerance);
        };

        let rel_change = (&next - &x).norm() / (1.0 + x.norm());
        x = next;
        fx = f_next;

        if let Some(limit) = opts.max_norm {
            if x.norm() > limit {
                return done(x, fx, iter + 1, StopReason::Diverged);
            }
        }
        if rel_change < opts.rel_tol {
            return done(x, fx, iter + 1, StopReason::Tolerance);
        }
    }
    done(x, fx, opts.max_iter, StopReason::MaxIter)
}

/// Coordinate step used for central differences around `x`.
pub fn fd_step(h: f64, xi: f64) -> f64 {
    h * (1.0 + xi.abs())
}

/// Central-difference gradient of `f` at `x`.
pub fn numeric_gradient<F>(f: F, x: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    DVector::from_fn(x.len(), |i, _| {
        let step = fd_step(h, x[i]);
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[i] += step;
        lo[i] -= step;
        (f(&hi) - f(&lo)) / (2.0 * step)
    })
}

/// Maximum relative discrepancy between `grad(x)` and central differences of `f`.
///
/// Each component is scaled by `max(|numeric|, 1)`, so tiny components are
/// compared absolutely.
pub fn check_gradient<F, G>(f: F, grad: G, x: &DVector<f64>, h: f64) -> f64
where
    F: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    let analytic = grad(x);
    let numeric = numeric_gradient(f, x, h);
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(a, n)| (a - n).abs() / n.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Same as [`check_gradient`] for a Hessian, differencing the gradient.
pub fn check_hessian<G, H>(grad: G, hess: H, x: &DVector<f64>, h: f64) -> f64
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
    H: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let analytic = hess(x);
    let mut worst: f64 = 0.0;
    for j in 0..x.len() {
        let step = fd_step(h, x[j]);
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[j] += step;
        lo[j] -= step;
        let col = (grad(&hi) - grad(&lo)) / (2.0 * step);
        for i in 0..x.len() {
            worst = worst.max((analytic[(i, j)] - col[i]).abs() / col[i].abs().max(1.0));
        }
    }
    worst
}
