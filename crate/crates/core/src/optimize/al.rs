//! Augmented Lagrangian outer loop with BFGS inner steps.
//!
//! Minimizes `f(x)` subject to `c(x) = 0` through the merit
//! `f + λ·c + (ρ/2)|c|²`. Inner iterations run in blocks; after each block
//! the multipliers take a first-order update and the penalty is multiplied
//! by the schedule factor (up to its cap).

use nalgebra::{DMatrix, DVector};

/// Objective, gradient, constraints and constraint Jacobian at a point.
pub(crate) struct Eval {
    pub f: f64,
    pub grad: DVector<f64>,
    pub c: DVector<f64>,
    /// `n_constraints x dim`.
    pub jac: DMatrix<f64>,
}

pub(crate) trait Problem {
    fn dim(&self) -> usize;
    fn eval(&self, x: &DVector<f64>) -> Eval;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct AlSettings {
    pub max_outer: usize,
    pub inner_per_outer: usize,
    pub penalty_init: f64,
    pub penalty_factor: f64,
    pub penalty_max: f64,
    pub tol_constraint: f64,
    pub tol_grad: f64,
    pub max_step: f64,
}

/// One accepted inner iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub outer: usize,
    /// Objective (perimeter plus weighted potential).
    pub energy: f64,
    pub constraint_norm: f64,
    pub step: f64,
    /// Augmented Lagrangian merit for the block's multipliers and penalty.
    pub merit: f64,
}

pub(crate) struct AlOutcome {
    pub x: DVector<f64>,
    pub multipliers: DVector<f64>,
    pub log: Vec<LogRow>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub constraint_norm: f64,
    pub grad_norm: f64,
}

struct Merit {
    value: f64,
    grad: DVector<f64>,
    eval: Eval,
}

fn merit(p: &dyn Problem, x: &DVector<f64>, lambda: &DVector<f64>, rho: f64) -> Merit {
    let eval = p.eval(x);
    let shifted = lambda + &eval.c * rho;
    let value = eval.f + lambda.dot(&eval.c) + 0.5 * rho * eval.c.norm_squared();
    let grad = &eval.grad + eval.jac.tr_mul(&shifted);
    Merit { value, grad, eval }
}

/// Relative merit increase tolerated by the approximate Wolfe test.
pub(crate) const ROUNDING: f64 = 1e-12;

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Runs the solver. `check` is called on the iterate after every outer
/// block and may abort the run.
pub(crate) fn minimize<E>(
    problem: &dyn Problem,
    x0: DVector<f64>,
    lambda0: DVector<f64>,
    s: &AlSettings,
    mut check: impl FnMut(&DVector<f64>) -> Result<(), E>,
) -> Result<AlOutcome, E> {
    let n = problem.dim();
    let mut x = x0;
    let mut lambda = lambda0;
    let mut rho = s.penalty_init;
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut log = Vec::new();
    let mut iter = 0;
    let mut cur = merit(problem, &x, &lambda, rho);
    for outer in 0..s.max_outer {
        for _ in 0..s.inner_per_outer {
            if inf_norm(&cur.grad) <= s.tol_grad {
                break;
            }
            let mut dir = -(&h_inv * &cur.grad);
            let mut slope = dir.dot(&cur.grad);
            if !(slope < 0.0) {
                h_inv.fill_with_identity();
                fresh = true;
                dir = -cur.grad.clone();
                slope = dir.dot(&cur.grad);
            }
            let dmax = inf_norm(&dir);
            if dmax > s.max_step {
                dir *= s.max_step / dmax;
                slope *= s.max_step / dmax;
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial = &x + &dir * alpha;
                let m = merit(problem, &trial, &lambda, rho);
                if !m.value.is_finite() {
                    alpha *= 0.5;
                    continue;
                }
                let armijo = m.value <= cur.value + 1e-4 * alpha * slope;
                // Approximate Wolfe test: near the optimum merit differences
                // drop below rounding and only the slope is informative.
                let dslope = m.grad.dot(&dir);
                let approx = m.value <= cur.value + ROUNDING * cur.value.abs().max(1.0)
                    && dslope >= 0.9 * slope
                    && dslope <= -(1.0 - 2e-4) * slope;
                if armijo || approx {
                    accepted = Some((trial, m));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((x_new, m_new)) = accepted else {
                if fresh {
                    break;
                }
                h_inv.fill_with_identity();
                fresh = true;
                continue;
            };
            let step = &x_new - &x;
            let y = &m_new.grad - &cur.grad;
            let sy = step.dot(&y);
            if sy > 1e-14 * step.norm() * y.norm() {
                if fresh {
                    h_inv *= sy / y.norm_squared();
                    fresh = false;
                }
                // H <- (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ
                let r = 1.0 / sy;
                let hy = &h_inv * &y;
                let yhy = y.dot(&hy);
                h_inv -= (&hy * step.transpose() + &step * hy.transpose()) * r;
                h_inv += (&step * step.transpose()) * (r * r * yhy + r);
            }
            iter += 1;
            x = x_new;
            cur = m_new;
            log.push(LogRow {
                iter,
                outer,
                energy: cur.eval.f,
                constraint_norm: inf_norm(&cur.eval.c),
                step: alpha * inf_norm(&dir),
                merit: cur.value,
            });
        }
        check(&x)?;
        let cnorm = inf_norm(&cur.eval.c);
        let gnorm = inf_norm(&cur.grad);
        lambda += &cur.eval.c * rho;
        if cnorm <= s.tol_constraint && gnorm <= s.tol_grad {
            return Ok(AlOutcome {
                x,
                multipliers: lambda,
                log,
                outer_iterations: outer + 1,
                converged: true,
                constraint_norm: cnorm,
                grad_norm: gnorm,
            });
        }
        rho = (rho * s.penalty_factor).min(s.penalty_max);
        cur = merit(problem, &x, &lambda, rho);
    }
    let cnorm = inf_norm(&cur.eval.c);
    let gnorm = inf_norm(&cur.grad);
    Ok(AlOutcome {
        x,
        multipliers: lambda,
        log,
        outer_iterations: s.max_outer,
        converged: false,
        constraint_norm: cnorm,
        grad_norm: gnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min x² + 2y² subject to x + y = 1: optimum (2/3, 1/3), λ = -4/3.
    struct Toy;

    impl Problem for Toy {
        fn dim(&self) -> usize {
            2
        }

        fn eval(&self, x: &DVector<f64>) -> Eval {
            Eval {
                f: x[0] * x[0] + 2.0 * x[1] * x[1],
                grad: DVector::from_vec(vec![2.0 * x[0], 4.0 * x[1]]),
                c: DVector::from_vec(vec![x[0] + x[1] - 1.0]),
                jac: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            }
        }
    }

    fn settings() -> AlSettings {
        AlSettings {
            max_outer: 100,
            inner_per_outer: 20,
            penalty_init: 1.0,
            penalty_factor: 2.0,
            penalty_max: 1e4,
            tol_constraint: 1e-12,
            tol_grad: 1e-10,
            max_step: 10.0,
        }
    }

    #[test]
    fn solves_equality_constrained_quadratic() {
        let out = minimize::<()>(&Toy, DVector::from_vec(vec![3.0, -2.0]), DVector::zeros(1), &settings(), |_| Ok(()))
            .unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((out.x[1] - 1.0 / 3.0).abs() < 1e-9);
        assert!((out.multipliers[0] + 4.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn merit_never_increases_within_a_block() {
        let out = minimize::<()>(&Toy, DVector::from_vec(vec![3.0, -2.0]), DVector::zeros(1), &settings(), |_| Ok(()))
            .unwrap();
        for w in out.log.windows(2) {
            if w[0].outer == w[1].outer {
                assert!(w[1].merit <= w[0].merit + ROUNDING * w[0].merit.abs().max(1.0));
            }
        }
    }
}
