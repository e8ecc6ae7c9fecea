//! Squared 2-order Gromov-Wasserstein distance between weighted graphs.
//!
//! For graphs `(A1, h1)` and `(A2, h2)` the squared GW distance is
//!
//! ```text
//! min_{T in C(h1,h2)}  sum_{i,k,j,l} (A1[i,k] - A2[j,l])^2 T[i,j] T[k,l]
//! ```
//!
//! where `C(h1,h2)` is the set of couplings whose row sums equal `h1` and
//! column sums equal `h2`. Because the loss is squared, the objective
//! decomposes as
//!
//! ```text
//! cost(T) = sum A1[i,k]^2 h1[i] h1[k] + sum A2[j,l]^2 h2[j] h2[l]
//!           - 2 <A1 T A2^T, T>
//! ```
//!
//! which brings evaluation down from `O(N1^2 N2^2)` to `O(N1^2 N2 + N1 N2^2)`.
//! The problem is a non-convex quadratic program; the two solvers here (a
//! conditional-gradient scheme with exact linear-OT steps, and a proximal
//! scheme with entropic-KL inner problems) find good local solutions.

mod cg;
mod emd;
mod pg;

pub use cg::solve_cg;
pub use emd::{emd, EmdResult};
pub use pg::solve_pg;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A transport plan with prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    t: Array2<f64>,
}

impl Coupling {
    /// Wrap a nonnegative matrix, checking its marginals against the two
    /// histograms within `tol`.
    pub fn new(t: Array2<f64>, h1: &Array1<f64>, h2: &Array1<f64>, tol: f64) -> Result<Self> {
        if t.nrows() != h1.len() || t.ncols() != h2.len() {
            return Err(Error::DimensionMismatch(format!(
                "coupling {}x{} vs histograms {} and {}",
                t.nrows(),
                t.ncols(),
                h1.len(),
                h2.len()
            )));
        }
        if t.iter().any(|&x| x < -1e-15 || x.is_nan()) {
            return Err(Error::InputDomain("coupling has negative entries".into()));
        }
        let rows = t.sum_axis(ndarray::Axis(1));
        let cols = t.sum_axis(ndarray::Axis(0));
        let row_err = max_abs_diff(&rows, h1);
        let col_err = max_abs_diff(&cols, h2);
        if row_err > tol || col_err > tol {
            return Err(Error::InputDomain(format!(
                "coupling marginals off by ({row_err:.2e}, {col_err:.2e}) > {tol:.0e}"
            )));
        }
        Ok(Self { t })
    }

    /// The product coupling `h1 h2^T` (maximum entropy, always feasible).
    pub fn product(h1: &Array1<f64>, h2: &Array1<f64>) -> Self {
        let mut t = Array2::zeros((h1.len(), h2.len()));
        for i in 0..h1.len() {
            for j in 0..h2.len() {
                t[[i, j]] = h1[i] * h2[j];
            }
        }
        Self { t }
    }

    /// `diag(h)`, feasible only when both histograms coincide.
    pub fn identity(h: &Array1<f64>) -> Self {
        Self {
            t: Array2::from_diag(h),
        }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.t
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.t
    }

    pub fn marginals(&self) -> (Array1<f64>, Array1<f64>) {
        (
            self.t.sum_axis(ndarray::Axis(1)),
            self.t.sum_axis(ndarray::Axis(0)),
        )
    }
}

fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Outcome of a GW solve.
#[derive(Debug, Clone)]
pub struct GwResult {
    /// Squared GW objective at the returned coupling, clamped to be
    /// nonnegative on report.
    pub cost: f64,
    pub coupling: Coupling,
    /// Outer iterations performed.
    pub iterations: usize,
    /// Whether the relative-decrease stopping rule fired before the cap.
    pub converged: bool,
    /// Objective value after every outer iteration (incremental updates;
    /// `cost` above is re-evaluated from scratch).
    pub history: Vec<f64>,
    /// Relative decrease of the last iteration taken.
    pub final_decrease: f64,
}

/// Initial coupling for the solvers.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitCoupling {
    /// `h1 h2^T`.
    #[default]
    Product,
    /// `diag(h1)` when the problem is square with matching histograms,
    /// product otherwise.
    IdentityIfSquare,
    /// Caller-provided feasible coupling.
    Warm(Array2<f64>),
}

/// Which iterative scheme solves the coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GwSolver {
    Cg,
    Pg,
}

impl std::str::FromStr for GwSolver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg" => Ok(GwSolver::Cg),
            "pg" => Ok(GwSolver::Pg),
            other => Err(Error::InputDomain(format!(
                "unknown solver '{other}' (expected cg or pg)"
            ))),
        }
    }
}

/// Solver knobs. Defaults favour accuracy; training configs cap the
/// iteration counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GwSolverOptions {
    pub max_outer_iters: usize,
    /// Relative objective-decrease threshold for the outer loop.
    pub tol: f64,
    /// Proximal regularization strength for the PG scheme.
    pub pg_epsilon: f64,
    /// Sinkhorn-style scaling iterations per PG outer step.
    pub pg_inner_iters: usize,
    #[serde(skip)]
    pub init: InitCoupling,
}

impl Default for GwSolverOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 200,
            tol: 1e-9,
            pg_epsilon: 0.01,
            pg_inner_iters: 50,
            init: InitCoupling::Product,
        }
    }
}

impl GwSolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.pg_inner_iters == 0 {
            return Err(Error::InputDomain("iteration counts must be positive".into()));
        }
        if self.pg_epsilon <= 0.0 {
            return Err(Error::InputDomain(format!(
                "pg_epsilon must be positive, got {}",
                self.pg_epsilon
            )));
        }
        Ok(())
    }

    pub fn with_init(mut self, init: InitCoupling) -> Self {
        self.init = init;
        self
    }
}

/// Dispatch to the configured solver.
pub fn solve(
    solver: GwSolver,
    a1: &Array2<f64>,
    a2: &Array2<f64>,
    h1: &Array1<f64>,
    h2: &Array1<f64>,
    opts: &GwSolverOptions,
) -> Result<GwResult> {
    match solver {
        GwSolver::Cg => solve_cg(a1, a2, h1, h2, opts),
        GwSolver::Pg => solve_pg(a1, a2, h1, h2, opts),
    }
}

/// Squared GW objective at a fixed coupling, via the squared-loss
/// decomposition. The histograms are taken from the coupling's own
/// marginals, which makes the identity with the quadruple-loop definition
/// exact for any nonnegative `t`.
pub fn gw_cost(a1: &Array2<f64>, a2: &Array2<f64>, t: &Coupling) -> Result<f64> {
    let tm = t.matrix();
    check_square_pair(a1, a2, tm)?;
    let (r, c) = t.marginals();
    let sq1 = a1.mapv(|x| x * x).dot(&r);
    let sq2 = a2.mapv(|x| x * x).dot(&c);
    let f1 = sq1.dot(&r);
    let f2 = sq2.dot(&c);
    let cross = a1.dot(tm).dot(&a2.t());
    let inner: f64 = cross.iter().zip(tm.iter()).map(|(x, y)| x * y).sum();
    Ok(f1 + f2 - 2.0 * inner)
}

/// Gradient of the squared GW objective with respect to the first matrix,
/// holding the coupling fixed:
/// `D[i,k] = 2 (A1[i,k] h1[i] h1[k] - (T A2 T^T)[i,k])`.
pub fn gw_grad_first(a1: &Array2<f64>, a2: &Array2<f64>, t: &Coupling) -> Result<Array2<f64>> {
    let tm = t.matrix();
    check_square_pair(a1, a2, tm)?;
    let (r, _) = t.marginals();
    let ta2t = tm.dot(a2).dot(&tm.t());
    let n = a1.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for k in 0..n {
            d[[i, k]] = 2.0 * (a1[[i, k]] * r[i] * r[k] - ta2t[[i, k]]);
        }
    }
    Ok(d)
}

fn check_square_pair(a1: &Array2<f64>, a2: &Array2<f64>, t: &Array2<f64>) -> Result<()> {
    if a1.nrows() != a1.ncols() || a2.nrows() != a2.ncols() {
        return Err(Error::DimensionMismatch(
            "adjacency matrices must be square".into(),
        ));
    }
    if t.nrows() != a1.nrows() || t.ncols() != a2.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "coupling {}x{} vs matrices {} and {}",
            t.nrows(),
            t.ncols(),
            a1.nrows(),
            a2.nrows()
        )));
    }
    Ok(())
}

/// Shared pieces of the linearized objective used by both solvers.
pub(crate) struct Linearization {
    /// `sq1[i] + sq2[j]`, the coupling-independent part of the gradient.
    pub const_part: Array2<f64>,
    /// `f1 + f2`, the coupling-independent part of the cost.
    pub const_cost: f64,
}

pub(crate) fn linearization(
    a1: &Array2<f64>,
    a2: &Array2<f64>,
    h1: &Array1<f64>,
    h2: &Array1<f64>,
) -> Linearization {
    let sq1 = a1.mapv(|x| x * x).dot(h1);
    let sq2 = a2.mapv(|x| x * x).dot(h2);
    let const_cost = sq1.dot(h1) + sq2.dot(h2);
    let mut const_part = Array2::zeros((h1.len(), h2.len()));
    for i in 0..h1.len() {
        for j in 0..h2.len() {
            const_part[[i, j]] = sq1[i] + sq2[j];
        }
    }
    Linearization {
        const_part,
        const_cost,
    }
}

/// `<A1 T A2^T, T>` together with the product `A1 T A2^T` (reused by the
/// gradient).
pub(crate) fn cross_term(
    a1: &Array2<f64>,
    a2: &Array2<f64>,
    t: &Array2<f64>,
) -> (Array2<f64>, f64) {
    let prod = a1.dot(t).dot(&a2.t());
    let inner = prod.iter().zip(t.iter()).map(|(x, y)| x * y).sum();
    (prod, inner)
}

/// Gradient of the objective in `T`: `2 const_part - 4 A1 T A2^T`.
pub(crate) fn objective_gradient(lin: &Linearization, cross: &Array2<f64>) -> Array2<f64> {
    let mut g = lin.const_part.clone();
    g.zip_mut_with(cross, |c, &x| *c = 2.0 * *c - 4.0 * x);
    g
}

pub(crate) fn validate_inputs(
    a1: &Array2<f64>,
    a2: &Array2<f64>,
    h1: &Array1<f64>,
    h2: &Array1<f64>,
) -> Result<()> {
    if a1.nrows() != a1.ncols() || a2.nrows() != a2.ncols() {
        return Err(Error::DimensionMismatch(
            "adjacency matrices must be square".into(),
        ));
    }
    if a1.nrows() != h1.len() || a2.nrows() != h2.len() {
        return Err(Error::DimensionMismatch(format!(
            "histogram lengths ({}, {}) vs matrix sizes ({}, {})",
            h1.len(),
            h2.len(),
            a1.nrows(),
            a2.nrows()
        )));
    }
    for (name, h) in [("h1", h1), ("h2", h2)] {
        if h.iter().any(|&x| x <= 0.0 || x.is_nan()) {
            return Err(Error::InputDomain(format!(
                "{name} must be strictly positive"
            )));
        }
        if (h.sum() - 1.0).abs() > 1e-8 {
            return Err(Error::InputDomain(format!(
                "{name} must sum to 1, got {}",
                h.sum()
            )));
        }
    }
    Ok(())
}

pub(crate) fn initial_coupling(
    init: &InitCoupling,
    h1: &Array1<f64>,
    h2: &Array1<f64>,
) -> Result<Array2<f64>> {
    match init {
        InitCoupling::Product => Ok(Coupling::product(h1, h2).into_matrix()),
        InitCoupling::IdentityIfSquare => {
            if h1.len() == h2.len() && max_abs_diff(h1, h2) <= 1e-12 {
                Ok(Coupling::identity(h1).into_matrix())
            } else {
                Ok(Coupling::product(h1, h2).into_matrix())
            }
        }
        InitCoupling::Warm(t0) => {
            let c = Coupling::new(t0.clone(), h1, h2, 1e-6)?;
            Ok(c.into_matrix())
        }
    }
}

/// Project a nonnegative matrix onto the exact coupling polytope
/// (row-scale, column-scale, then a rank-one correction). Entries stay
/// nonnegative and the marginals become exact up to float rounding.
pub(crate) fn round_to_feasible(
    t: &mut Array2<f64>,
    h1: &Array1<f64>,
    h2: &Array1<f64>,
) {
    let rows = t.sum_axis(ndarray::Axis(1));
    for (i, mut row) in t.rows_mut().into_iter().enumerate() {
        if rows[i] > 0.0 {
            let s = (h1[i] / rows[i]).min(1.0);
            row.mapv_inplace(|x| x * s);
        }
    }
    let cols = t.sum_axis(ndarray::Axis(0));
    for (j, mut col) in t.columns_mut().into_iter().enumerate() {
        if cols[j] > 0.0 {
            let s = (h2[j] / cols[j]).min(1.0);
            col.mapv_inplace(|x| x * s);
        }
    }
    let err_r = h1 - &t.sum_axis(ndarray::Axis(1));
    let err_c = h2 - &t.sum_axis(ndarray::Axis(0));
    let total: f64 = err_r.iter().map(|x| x.abs()).sum();
    if total > 0.0 {
        for i in 0..h1.len() {
            for j in 0..h2.len() {
                t[[i, j]] += err_r[i] * err_c[j] / total;
            }
        }
    }
    // rounding can leave ulp-level negatives that later scaling rounds
    // would amplify
    t.mapv_inplace(|x| x.max(0.0));
}
