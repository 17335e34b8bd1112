//! Small damped least-squares engine for the trace fitters.
//!
//! Levenberg-Marquardt with multiplicative damping, step acceptance by
//! residual decrease, and lower-bound projection. Parameter uncertainties
//! come from the scaled inverse normal matrix at the solution.

/// Scalar model `y = f(params, x)` with analytic partial derivatives.
pub trait Model {
    fn value(&self, params: &[f64], x: f64) -> f64;

    /// Writes `∂f/∂params` at `(params, x)` into `out`.
    fn gradient(&self, params: &[f64], x: f64, out: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct Options {
    pub max_iter: usize,
    /// Scale-free gradient criterion: the fit is converged when every
    /// column cosine `|Jᵀr|_j / (‖J_j‖·‖r‖)` falls below this.
    pub gradient_tol: f64,
    /// Exact-recovery criterion: converged when the RMS residual drops
    /// below this fraction of the data scale (rounding-noise territory,
    /// where the gradient cosine is meaningless).
    pub residual_floor_rel: f64,
    pub lambda_init: f64,
    pub lambda_scale: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iter: 200,
            gradient_tol: 1e-8,
            residual_floor_rel: 1e-12,
            lambda_init: 1e-3,
            lambda_scale: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub params: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Sum of squared residuals at the returned parameters.
    pub cost: f64,
    /// Root-mean-square residual.
    pub residual_rms: f64,
    pub converged: bool,
    pub n_iter: usize,
}

/// Minimizes `Σ (y_i - f(p, x_i))²` starting from `init`.
///
/// `lower` gives per-parameter lower bounds enforced by projection
/// (use `f64::NEG_INFINITY` for unbounded). Never panics on
/// non-convergence: the last iterate is always returned with
/// `converged = false`.
pub fn fit(
    model: &impl Model,
    xs: &[f64],
    ys: &[f64],
    init: &[f64],
    lower: &[f64],
    options: &Options,
) -> Fit {
    assert_eq!(xs.len(), ys.len());
    assert_eq!(init.len(), lower.len());
    let n_params = init.len();
    let n_points = xs.len();

    let mut params: Vec<f64> = init
        .iter()
        .zip(lower)
        .map(|(&p, &lo)| p.max(lo))
        .collect();
    let mut cost = cost_at(model, xs, ys, &params);
    let mut lambda = options.lambda_init;
    let mut converged = false;
    let mut n_iter = 0;

    let y_scale = ys.iter().fold(0.0_f64, |acc, &y| acc.max(y.abs())).max(1e-300);
    let cost_floor = n_points as f64 * (options.residual_floor_rel * y_scale).powi(2);

    let mut jacobian = vec![0.0; n_points * n_params];
    let mut residuals = vec![0.0; n_points];
    let mut grad_row = vec![0.0; n_params];

    for iter in 0..options.max_iter {
        n_iter = iter + 1;
        if cost <= cost_floor {
            converged = true;
            break;
        }
        for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            residuals[i] = y - model.value(&params, x);
            model.gradient(&params, x, &mut grad_row);
            jacobian[i * n_params..(i + 1) * n_params].copy_from_slice(&grad_row);
        }

        if gradient_converged(&jacobian, &residuals, n_params, options.gradient_tol) {
            converged = true;
            break;
        }

        // normal matrix JᵀJ and right-hand side Jᵀr
        let mut normal = vec![0.0; n_params * n_params];
        let mut rhs = vec![0.0; n_params];
        for i in 0..n_points {
            let row = &jacobian[i * n_params..(i + 1) * n_params];
            for a in 0..n_params {
                rhs[a] += row[a] * residuals[i];
                for b in a..n_params {
                    normal[a * n_params + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..n_params {
            for b in 0..a {
                normal[a * n_params + b] = normal[b * n_params + a];
            }
        }

        let mut stepped = false;
        while lambda < 1e14 {
            let mut damped = normal.clone();
            for a in 0..n_params {
                let diag = normal[a * n_params + a];
                damped[a * n_params + a] = diag + lambda * diag.max(1e-300);
            }
            if let Some(step) = solve(&damped, &rhs, n_params) {
                let candidate: Vec<f64> = params
                    .iter()
                    .zip(&step)
                    .zip(lower)
                    .map(|((&p, &dp), &lo)| (p + dp).max(lo))
                    .collect();
                let candidate_cost = cost_at(model, xs, ys, &candidate);
                if candidate_cost.is_finite() && candidate_cost < cost {
                    params = candidate;
                    cost = candidate_cost;
                    lambda = (lambda / options.lambda_scale).max(1e-12);
                    stepped = true;
                    break;
                }
            }
            lambda *= options.lambda_scale;
        }
        if !stepped {
            // damping exhausted; classify by where we stand
            converged = cost <= cost_floor
                || gradient_converged(&jacobian, &residuals, n_params, options.gradient_tol);
            break;
        }
    }

    if !converged && n_iter == options.max_iter {
        for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            residuals[i] = y - model.value(&params, x);
            model.gradient(&params, x, &mut grad_row);
            jacobian[i * n_params..(i + 1) * n_params].copy_from_slice(&grad_row);
        }
        converged = cost <= cost_floor
            || gradient_converged(&jacobian, &residuals, n_params, options.gradient_tol);
    }

    let sigmas = parameter_sigmas(model, xs, &params, cost, n_points, n_params);
    Fit {
        params,
        sigmas,
        cost,
        residual_rms: (cost / n_points as f64).sqrt(),
        converged,
        n_iter,
    }
}

fn cost_at(model: &impl Model, xs: &[f64], ys: &[f64], params: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - model.value(params, x);
            r * r
        })
        .sum()
}

fn gradient_converged(jacobian: &[f64], residuals: &[f64], n_params: usize, tol: f64) -> bool {
    let n_points = residuals.len();
    let res_norm = residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
    if res_norm == 0.0 {
        return true;
    }
    for a in 0..n_params {
        let mut dot = 0.0;
        let mut col_norm_sq = 0.0;
        for i in 0..n_points {
            let j = jacobian[i * n_params + a];
            dot += j * residuals[i];
            col_norm_sq += j * j;
        }
        let denom = col_norm_sq.sqrt() * res_norm;
        if denom > 0.0 && (dot.abs() / denom) > tol {
            return false;
        }
    }
    true
}

fn parameter_sigmas(
    model: &impl Model,
    xs: &[f64],
    params: &[f64],
    cost: f64,
    n_points: usize,
    n_params: usize,
) -> Vec<f64> {
    let mut normal = vec![0.0; n_params * n_params];
    let mut grad_row = vec![0.0; n_params];
    for &x in xs {
        model.gradient(params, x, &mut grad_row);
        for a in 0..n_params {
            for b in 0..n_params {
                normal[a * n_params + b] += grad_row[a] * grad_row[b];
            }
        }
    }
    let dof = n_points.saturating_sub(n_params).max(1);
    let variance = cost / dof as f64;
    match invert(&normal, n_params) {
        Some(inverse) => (0..n_params)
            .map(|a| (inverse[a * n_params + a].max(0.0) * variance).sqrt())
            .collect(),
        None => vec![f64::NAN; n_params],
    }
}

/// Gaussian elimination with partial pivoting; `None` on singular systems.
fn solve(matrix: &[f64], rhs: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut a = matrix.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| a[r1 * n + col].abs().total_cmp(&a[r2 * n + col].abs()))
            .unwrap();
        let pivot = a[pivot_row * n + col];
        if pivot.abs() < 1e-300 || !pivot.is_finite() {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

fn invert(matrix: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inverse = vec![0.0; n * n];
    let mut unit = vec![0.0; n];
    for col in 0..n {
        unit.iter_mut().for_each(|v| *v = 0.0);
        unit[col] = 1.0;
        let column = solve(matrix, &unit, n)?;
        for row in 0..n {
            inverse[row * n + col] = column[row];
        }
    }
    Some(inverse)
}

/// Central-difference gradient for checking analytic [`Model::gradient`]
/// implementations in tests.
pub fn numeric_gradient(model: &impl Model, params: &[f64], x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(params.len());
    for j in 0..params.len() {
        let h = 1e-6 * params[j].abs().max(1e-6);
        let mut plus = params.to_vec();
        plus[j] += h;
        let mut minus = params.to_vec();
        minus[j] -= h;
        out.push((model.value(&plus, x) - model.value(&minus, x)) / (2.0 * h));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Exponential;

    impl Model for Exponential {
        fn value(&self, p: &[f64], x: f64) -> f64 {
            p[0] * (-p[1] * x).exp()
        }

        fn gradient(&self, p: &[f64], x: f64, out: &mut [f64]) {
            let e = (-p[1] * x).exp();
            out[0] = e;
            out[1] = -p[0] * x * e;
        }
    }

    #[test]
    fn recovers_exact_exponential() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 2.5 * (-0.7 * x).exp()).collect();
        let fit = fit(
            &Exponential,
            &xs,
            &ys,
            &[1.0, 0.2],
            &[f64::NEG_INFINITY, f64::NEG_INFINITY],
            &Options::default(),
        );
        assert!(fit.converged);
        assert_relative_eq!(fit.params[0], 2.5, max_relative = 1e-9);
        assert_relative_eq!(fit.params[1], 0.7, max_relative = 1e-9);
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 2.5 * (-0.7 * x).exp()).collect();
        let fit = fit(
            &Exponential,
            &xs,
            &ys,
            &[30.0, 5.0],
            &[f64::NEG_INFINITY, f64::NEG_INFINITY],
            &Options {
                max_iter: 2,
                ..Options::default()
            },
        );
        assert!(!fit.converged);
        assert_eq!(fit.n_iter, 2);
        assert!(fit.params.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn lower_bounds_are_respected() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 0.01 * (-0.1 * x).exp()).collect();
        let fit = fit(
            &Exponential,
            &xs,
            &ys,
            &[0.5, 0.5],
            &[0.0, 0.0],
            &Options::default(),
        );
        assert!(fit.params[0] >= 0.0 && fit.params[1] >= 0.0);
    }

    #[test]
    fn analytic_gradient_matches_numeric() {
        let p = [2.5, 0.7];
        for x in [0.0, 0.4, 2.2] {
            let mut analytic = [0.0; 2];
            Exponential.gradient(&p, x, &mut analytic);
            let numeric = numeric_gradient(&Exponential, &p, x);
            assert_relative_eq!(analytic[0], numeric[0], max_relative = 1e-6);
            assert_relative_eq!(analytic[1], numeric[1], max_relative = 1e-6);
        }
    }

    #[test]
    fn solver_handles_permuted_systems() {
        // 3x3 with zero on the diagonal forces pivoting
        let a = vec![0.0, 2.0, 1.0, 1.0, 0.0, 3.0, 2.0, 1.0, 0.0];
        let b = vec![5.0, 10.0, 4.0];
        let x = solve(&a, &b, 3).unwrap();
        for (row, expected) in [(0, 5.0), (1, 10.0), (2, 4.0)] {
            let acc: f64 = (0..3).map(|k| a[row * 3 + k] * x[k]).sum();
            assert_relative_eq!(acc, expected, max_relative = 1e-12);
        }
        let singular = vec![1.0, 2.0, 2.0, 4.0];
        assert!(solve(&singular, &[1.0, 2.0], 2).is_none());
    }
}
