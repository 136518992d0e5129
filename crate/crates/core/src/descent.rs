//! Quasi-Newton descent with Armijo backtracking.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescentOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            grad_tol: 1e-8,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DescentResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 80;

/// Minimize `f` from `x0`; `f` returns the value and gradient.
///
/// BFGS on the inverse Hessian, reset to a scaled identity whenever the
/// curvature condition fails or the search direction stops descending.
pub fn minimize<F>(f: F, x0: &DVector<f64>, opts: &DescentOptions) -> DescentResult
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let mut x = x0.clone();
    let (mut fx, mut g) = f(&x);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let gn = g.norm();
        if !gn.is_finite() || gn <= opts.grad_tol {
            break;
        }
        iterations += 1;
        let mut dir = -(&h * &g);
        let mut slope = dir.dot(&g);
        if !(slope < 0.0) {
            h.fill_with_identity();
            fresh = true;
            dir = -g.clone();
            slope = -gn * gn;
        }
        // the first step of a fresh identity model is capped to unit length
        let mut t = if fresh {
            (1.0 / dir.norm()).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let xn = &x + &dir * t;
            let (fn_, gn_) = f(&xn);
            if fn_.is_finite() && fn_ <= fx + ARMIJO * t * slope {
                accepted = Some((xn, fn_, gn_));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn_)) = accepted else {
            if fresh {
                break;
            }
            h.fill_with_identity();
            fresh = true;
            continue;
        };
        let s = &xn - &x;
        let y = &gn_ - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                h *= sy / y.norm_squared();
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s hy^T + hy s^T) + (rho^2 yHy + rho) s s^T
            h -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
            fresh = false;
        } else {
            h.fill_with_identity();
            fresh = true;
        }
        x = xn;
        fx = fn_;
        g = gn_;
    }
    let grad_norm = g.norm();
    DescentResult {
        converged: grad_norm <= opts.grad_tol,
        x,
        value: fx,
        grad_norm,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let f = |x: &DVector<f64>| (0.5 * x.dot(&(&a * x)) - b.dot(x), &a * x - &b);
        let r = minimize(f, &DVector::zeros(3), &DescentOptions::default());
        assert!(r.converged);
        let exact = a.clone().lu().solve(&b).unwrap();
        assert!((r.x - exact).amax() < 1e-8);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &DVector<f64>| {
            let (a, b) = (x[0], x[1]);
            (
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
                DVector::from_vec(vec![
                    -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                    200.0 * (b - a * a),
                ]),
            )
        };
        let r = minimize(
            f,
            &DVector::from_vec(vec![-1.2, 1.0]),
            &DescentOptions::default(),
        );
        assert!(r.converged, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn iteration_cap() {
        let f = |x: &DVector<f64>| (x[0].powi(4), DVector::from_vec(vec![4.0 * x[0].powi(3)]));
        let r = minimize(
            f,
            &DVector::from_vec(vec![3.0]),
            &DescentOptions {
                grad_tol: 0.0,
                max_iter: 5,
            },
        );
        assert_eq!(r.iterations, 5);
        assert!(!r.converged);
    }
}
