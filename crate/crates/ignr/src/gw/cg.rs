//! Conditional-gradient (Frank-Wolfe) scheme for the squared GW objective.
//!
//! Each iteration linearizes the quadratic objective at the current
//! coupling, solves the resulting linear OT problem exactly with the
//! network simplex, and takes the closed-form optimal step along the
//! feasible segment. Because the objective is an exact quadratic along the
//! segment, the line search needs no backtracking and the objective is
//! non-increasing by construction.

use ndarray::{Array1, Array2};

use crate::error::Result;
use crate::gw::{
    cross_term, emd, gw_cost, initial_coupling, linearization, objective_gradient, validate_inputs,
    Coupling, GwResult, GwSolverOptions,
};

pub fn solve_cg(
    a1: &Array2<f64>,
    a2: &Array2<f64>,
    h1: &Array1<f64>,
    h2: &Array1<f64>,
    opts: &GwSolverOptions,
) -> Result<GwResult> {
    validate_inputs(a1, a2, h1, h2)?;
    opts.validate()?;

    let lin = linearization(a1, a2, h1, h2);
    let mut t = initial_coupling(&opts.init, h1, h2)?;
    // A1 T A2^T is linear in T, so it can be updated incrementally from the
    // step direction instead of recomputed.
    let (mut cross, inner) = cross_term(a1, a2, &t);
    let mut cost = lin.const_cost - 2.0 * inner;

    let mut iterations = 0;
    let mut converged = false;
    let mut final_decrease = f64::NAN;
    let mut history = Vec::with_capacity(opts.max_outer_iters + 1);
    history.push(cost);

    for _ in 0..opts.max_outer_iters {
        iterations += 1;
        let grad = objective_gradient(&lin, &cross);
        let vertex = emd(h1, h2, &grad)?;
        let delta = &vertex.plan - &t;

        // Quadratic profile along T + gamma * delta:
        //   cost(gamma) = cost + b * gamma + a * gamma^2
        let b: f64 = grad.iter().zip(delta.iter()).map(|(g, d)| g * d).sum();
        let (cross_delta, _) = cross_term(a1, a2, &delta);
        let a: f64 = -2.0
            * cross_delta
                .iter()
                .zip(delta.iter())
                .map(|(c, d)| c * d)
                .sum::<f64>();
        let gamma = if a > 0.0 {
            (-b / (2.0 * a)).clamp(0.0, 1.0)
        } else if a + b < 0.0 {
            1.0
        } else {
            0.0
        };
        if gamma == 0.0 {
            // the linearized problem offers no descent direction
            converged = true;
            final_decrease = 0.0;
            break;
        }

        t.zip_mut_with(&delta, |x, &d| *x += gamma * d);
        cross.zip_mut_with(&cross_delta, |x, &d| *x += gamma * d);
        let new_cost = cost + gamma * b + gamma * gamma * a;
        let decrease = cost - new_cost;
        cost = new_cost;
        history.push(cost);
        final_decrease = decrease / cost.abs().max(1e-16);
        if final_decrease <= opts.tol {
            converged = true;
            break;
        }
    }

    let coupling = Coupling::new(t, h1, h2, 1e-8)?;
    // evaluate the returned cost from scratch to drop incremental drift
    let cost = gw_cost(a1, a2, &coupling)?.max(0.0);
    Ok(GwResult {
        cost,
        coupling,
        iterations,
        converged,
        history,
        final_decrease,
    })
}
