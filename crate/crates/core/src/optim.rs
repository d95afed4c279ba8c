//! BFGS ascent with a backtracking line search.
//!
//! Maximizes a smooth objective given its value and gradient. Every accepted
//! step satisfies the Armijo sufficient-increase condition, except close to
//! the optimum where value differences fall below rounding noise; there a step
//! is accepted on gradient evidence (a positive trapezoidal estimate of the
//! increase and a smaller gradient), and the value may not drop by more than
//! the noise bound [`value_noise`].

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    /// Convergence requires the gradient infinity norm below this.
    pub gradient_tol: f64,
    /// ... and the relative objective change of the last step below this.
    pub rel_value_tol: f64,
    pub max_iterations: usize,
    /// Largest infinity-norm step tried by the line search.
    pub max_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            gradient_tol: 1e-6,
            rel_value_tol: 1e-10,
            max_iterations: 500,
            max_step: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start and after every accepted step.
    pub trace: Vec<f64>,
    pub message: String,
}

impl OptimOutcome {
    pub fn gradient_norm(&self) -> f64 {
        inf_norm(&self.gradient)
    }
}

/// Rounding noise bound on objective differences at magnitude `value`.
pub fn value_noise(value: f64) -> f64 {
    1e-13 * (1.0 + value.abs())
}

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximizes `objective`, which returns `None` where it cannot be evaluated
/// (treated as `-inf` by the line search).
pub fn maximize<F>(mut objective: F, x0: &[f64], opts: &OptimOptions) -> Option<OptimOutcome>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let (mut f, g0) = objective(x0)?;
    let mut x = DVector::from_column_slice(x0);
    let mut g = DVector::from_vec(g0);
    let mut trace = vec![f];

    if n == 0 || inf_norm(g.as_slice()) < opts.gradient_tol {
        return Some(OptimOutcome {
            x: x.as_slice().to_vec(),
            value: f,
            gradient: g.as_slice().to_vec(),
            iterations: 0,
            converged: true,
            trace,
            message: "gradient below tolerance at the starting point".into(),
        });
    }

    // Inverse of the negative Hessian approximation.
    let mut h = DMatrix::<f64>::identity(n, n) / g.norm().max(1.0);
    let mut fresh = true;
    let mut converged = false;
    let mut iterations = 0;
    let mut message = String::from("iteration cap reached");

    while iterations < opts.max_iterations {
        let mut d = &h * &g;
        let mut slope = g.dot(&d);
        if slope.is_nan() || slope <= 0.0 {
            h = DMatrix::identity(n, n) / g.norm().max(1.0);
            fresh = true;
            d = &h * &g;
            slope = g.dot(&d);
        }
        let dmax = inf_norm(d.as_slice());
        let mut alpha = if dmax > opts.max_step { opts.max_step / dmax } else { 1.0 };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = &x + alpha * &d;
            if let Some((ft, gt)) = objective(trial.as_slice()) {
                if ft.is_finite() {
                    let gt = DVector::from_vec(gt);
                    if ft >= f + ARMIJO_C1 * alpha * slope {
                        accepted = Some((trial, ft, gt));
                        break;
                    }
                    let s = &trial - &x;
                    let estimate = 0.5 * (&g + &gt).dot(&s);
                    if (ft - f).abs() <= value_noise(f)
                        && estimate > 0.0
                        && inf_norm(gt.as_slice()) < inf_norm(g.as_slice())
                    {
                        accepted = Some((trial, ft, gt));
                        break;
                    }
                }
            }
            alpha *= BACKTRACK;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if !fresh {
                h = DMatrix::identity(n, n) / g.norm().max(1.0);
                fresh = true;
                continue;
            }
            converged = inf_norm(g.as_slice()) < opts.gradient_tol;
            message = "line search could not find an ascent step".into();
            break;
        };

        iterations += 1;
        let s = &x_new - &x;
        // Gradient change of the minimization objective -f.
        let yv = &g - &g_new;
        let sy = s.dot(&yv);
        if sy > 1e-12 * s.norm() * yv.norm() {
            if fresh {
                h = DMatrix::identity(n, n) * (sy / yv.dot(&yv));
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ, expanded.
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }

        let rel_change = (f_new - f).abs() / f.abs().max(1.0);
        x = x_new;
        f = f_new;
        g = g_new;
        trace.push(f);

        if inf_norm(g.as_slice()) < opts.gradient_tol && rel_change < opts.rel_value_tol {
            converged = true;
            message = "gradient and objective-change criteria met".into();
            break;
        }
    }

    Some(OptimOutcome {
        x: x.as_slice().to_vec(),
        value: f,
        gradient: g.as_slice().to_vec(),
        iterations,
        converged,
        trace,
        message,
    })
}
