//! Newton refinement of periodic points.
//!
//! Solves `V^p(x) = x` on the affine hull of the simplex using the analytic
//! Jacobian of the composed map. Least-squares steps through an SVD keep this
//! usable when `V^p - id` is singular (continua of periodic points).

use nalgebra::{DMatrix, DVector};

use crate::operator::OperatorSpec;
use crate::simplex::l1;

/// Residual below which refinement stops.
const TARGET_RESIDUAL: f64 = 1e-15;
const MAX_HALVINGS: usize = 30;
const SVD_MAX_SWEEPS: usize = 500;

/// `V^p(x)` on raw coordinates.
pub(crate) fn iterate_raw(op: &OperatorSpec, x: &[f64], p: usize) -> Vec<f64> {
    let mut y = x.to_vec();
    for _ in 0..p {
        y = op.apply_raw(&y);
    }
    y
}

pub(crate) fn periodic_residual(op: &OperatorSpec, x: &[f64], p: usize) -> f64 {
    l1(&iterate_raw(op, x, p), x)
}

/// Returns `(V^p(x), Jacobian of V^p at x)`, row-major.
fn composed_jacobian(op: &OperatorSpec, x: &[f64], p: usize) -> (Vec<f64>, DMatrix<f64>) {
    let m = x.len();
    let mut jac = DMatrix::<f64>::identity(m, m);
    let mut y = x.to_vec();
    for _ in 0..p {
        let step = DMatrix::from_row_slice(m, m, &op.jacobian_raw(&y));
        jac = step * jac;
        y = op.apply_raw(&y);
    }
    (y, jac)
}

fn project(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
}

/// Damped Newton on `F(x) = V^p(x) - x` constrained to `Σx = 1`, `x >= 0`.
/// Returns the best point found and its l1 residual.
pub(crate) fn refine_periodic(op: &OperatorSpec, start: &[f64], p: usize, iterations: usize) -> (Vec<f64>, f64) {
    let m = start.len();
    let mut x = start.to_vec();
    let mut residual = periodic_residual(op, &x, p);
    for _ in 0..iterations {
        if residual <= TARGET_RESIDUAL {
            break;
        }
        let (image, jac) = composed_jacobian(op, &x, p);
        let mut g = DMatrix::<f64>::zeros(m + 1, m);
        let mut rhs = DVector::<f64>::zeros(m + 1);
        for k in 0..m {
            for j in 0..m {
                g[(k, j)] = jac[(k, j)] - if k == j { 1.0 } else { 0.0 };
            }
            g[(m, k)] = 1.0;
            rhs[k] = x[k] - image[k];
        }
        if g.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
            break;
        }
        // the plain SVD constructor can fail to terminate on nearly-zero blocks
        let Some(svd) = g.try_svd(true, true, f64::EPSILON, SVD_MAX_SWEEPS) else {
            break;
        };
        let scale = svd.singular_values.max().max(1.0);
        let Ok(step) = svd.solve(&rhs, 1e-11 * scale) else {
            break;
        };
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..MAX_HALVINGS {
            let mut candidate: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
            project(&mut candidate);
            let r = periodic_residual(op, &candidate, p);
            if r < residual {
                x = candidate;
                residual = r;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, residual)
}
