//! Proximal-gradient scheme for the squared GW objective.
//!
//! Each outer iteration solves the entropic-KL proximal subproblem
//!
//! ```text
//! T_{k+1} = argmin_{T in C(h1,h2)}  <grad(T_k), T> + eps * KL(T || T_k)
//! ```
//!
//! via Sinkhorn-style scaling on the kernel `T_k .* exp(-grad / eps)`. The
//! linearized cost is shifted to zero minimum (which leaves the argmin
//! unchanged) and scaled to unit range before exponentiation so the kernel
//! stays inside f64 range for any epsilon of practical size. The reported
//! cost is always the unregularized objective at the returned coupling.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::gw::{
    cross_term, gw_cost, initial_coupling, linearization, objective_gradient, round_to_feasible,
    validate_inputs, Coupling, GwResult, GwSolverOptions,
};

pub fn solve_pg(
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
    let (mut cross, inner) = cross_term(a1, a2, &t);
    let mut cost = lin.const_cost - 2.0 * inner;

    let mut iterations = 0;
    let mut converged = false;
    let mut final_decrease = f64::NAN;
    let mut history = Vec::with_capacity(opts.max_outer_iters + 1);
    history.push(cost);

    for outer in 0..opts.max_outer_iters {
        iterations += 1;
        let grad = objective_gradient(&lin, &cross);

        // kernel = T .* exp(-normalized grad / eps)
        let gmin = grad.iter().cloned().fold(f64::INFINITY, f64::min);
        let gmax = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let range = (gmax - gmin).max(1e-300);
        let inv = 1.0 / (range * opts.pg_epsilon);
        let mut kernel = grad;
        kernel.zip_mut_with(&t, |g, &ti| *g = ti.max(0.0) * (-(*g - gmin) * inv).exp());

        let (u, v) = scale_to_marginals(&kernel, h1, h2, opts.pg_inner_iters).map_err(|e| {
            Error::Numerical(format!("proximal step {outer}: {e}"))
        })?;
        for i in 0..h1.len() {
            for j in 0..h2.len() {
                kernel[[i, j]] *= u[i] * v[j];
            }
        }
        t = kernel;
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!(
                "proximal step {outer} produced non-finite coupling"
            )));
        }

        let (new_cross, new_inner) = cross_term(a1, a2, &t);
        cross = new_cross;
        let new_cost = lin.const_cost - 2.0 * new_inner;
        let decrease = cost - new_cost;
        cost = new_cost;
        history.push(cost);
        final_decrease = decrease / cost.abs().max(1e-16);
        if final_decrease <= opts.tol {
            converged = true;
            break;
        }
    }

    round_to_feasible(&mut t, h1, h2);
    let coupling = Coupling::new(t, h1, h2, 1e-6)?;
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

/// Sinkhorn scaling `diag(u) K diag(v)` towards marginals `(h1, h2)`.
/// Stops early once the row marginals match within 1e-9.
fn scale_to_marginals(
    kernel: &Array2<f64>,
    h1: &Array1<f64>,
    h2: &Array1<f64>,
    max_iters: usize,
) -> std::result::Result<(Array1<f64>, Array1<f64>), String> {
    let mut u = Array1::from_elem(h1.len(), 1.0);
    let mut v = Array1::from_elem(h2.len(), 1.0);
    for it in 0..max_iters {
        let kv = kernel.dot(&v);
        for i in 0..u.len() {
            if kv[i] <= 0.0 || !kv[i].is_finite() {
                return Err(format!("inner scaling degenerated at row {i}, iter {it}"));
            }
            u[i] = h1[i] / kv[i];
        }
        let ktu = kernel.t().dot(&u);
        for j in 0..v.len() {
            if ktu[j] <= 0.0 || !ktu[j].is_finite() {
                return Err(format!("inner scaling degenerated at column {j}, iter {it}"));
            }
            v[j] = h2[j] / ktu[j];
        }
        if it % 8 == 7 || it + 1 == max_iters {
            // after the v-update columns are exact; check the rows
            let kv = kernel.dot(&v);
            let err = u
                .iter()
                .zip(kv.iter())
                .zip(h1.iter())
                .map(|((ui, kvi), h)| (ui * kvi - h).abs())
                .fold(0.0_f64, f64::max);
            if err < 1e-9 {
                break;
            }
        }
    }
    Ok((u, v))
}
