//! Closed-form graphons, coordinate grids, and graph sampling.
//!
//! A graphon is a symmetric measurable function `W: [0,1]^2 -> [0,1]`. Given
//! a graphon, an unweighted graph of any size is generated by placing nodes
//! `v_i` on the unit interval (uniformly at random, or on the fixed grid
//! `v_i = (i-1)/N`) and drawing each edge `a_ij ~ Bernoulli(W(v_i, v_j))`
//! for `i < j` only, mirroring to the lower triangle and keeping the
//! diagonal zero.
//!
//! This module hosts the closed-form graphon families used across the
//! experiments: thirteen benchmark surfaces, a two-block stochastic block
//! model whose block size is governed by a ratio parameter, and a noisy
//! ring whose thickness is governed by a width parameter.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a closed-form graphon together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GraphonSpec {
    /// One of the thirteen benchmark surfaces, indexed 0..=12.
    Benchmark(u8),
    /// Two-block stochastic block model: dense blocks `[0,alpha)^2` and
    /// `[1-alpha,1]^2` at 0.8 over a 0.1 background. `alpha in [0.1, 0.5]`.
    TwoBlockRatio { alpha: f64 },
    /// Noisy ring: two Gaussian corner bumps plus a diagonal ridge, all at
    /// height 0.9, with thickness `alpha in [0.05, 0.15]`.
    NoisyRing { alpha: f64 },
}

impl GraphonSpec {
    /// Check that the spec's parameters lie in their legal ranges.
    pub fn validate(&self) -> Result<()> {
        match *self {
            GraphonSpec::Benchmark(idx) if idx > 12 => Err(Error::InputDomain(format!(
                "benchmark index {idx} out of range 0..=12"
            ))),
            GraphonSpec::TwoBlockRatio { alpha } if !(0.1..=0.5).contains(&alpha) => Err(
                Error::InputDomain(format!("two-block alpha {alpha} outside [0.1, 0.5]")),
            ),
            GraphonSpec::NoisyRing { alpha } if !(0.05..=0.15).contains(&alpha) => Err(
                Error::InputDomain(format!("noisy-ring alpha {alpha} outside [0.05, 0.15]")),
            ),
            _ => Ok(()),
        }
    }

    /// Short human-readable name, used in provenance and reports.
    pub fn name(&self) -> String {
        match *self {
            GraphonSpec::Benchmark(idx) => format!("benchmark:{idx}"),
            GraphonSpec::TwoBlockRatio { alpha } => format!("two-block:{alpha}"),
            GraphonSpec::NoisyRing { alpha } => format!("noisy-ring:{alpha}"),
        }
    }
}

/// Evaluate `W(x, y)` for a validated spec at a point of `[0,1]^2`.
pub fn eval_graphon(spec: &GraphonSpec, x: f64, y: f64) -> Result<f64> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::InputDomain(format!(
            "coordinates ({x}, {y}) outside [0,1]^2"
        )));
    }
    Ok(eval_unchecked(spec, x, y))
}

fn eval_unchecked(spec: &GraphonSpec, x: f64, y: f64) -> f64 {
    match *spec {
        GraphonSpec::Benchmark(idx) => benchmark(idx, x, y),
        GraphonSpec::TwoBlockRatio { alpha } => two_block(alpha, x, y),
        GraphonSpec::NoisyRing { alpha } => noisy_ring(alpha, x, y),
    }
}

// Formulas are evaluated on the sorted pair (lo, hi) so that W(x, y) and
// W(y, x) are the same float, not merely equal in exact arithmetic.
fn benchmark(idx: u8, x: f64, y: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    match idx {
        0 => lo * hi,
        1 => (-(lo.powf(0.7) + hi.powf(0.7))).exp(),
        2 => 0.25 * (lo * lo + hi * hi + lo.sqrt() + hi.sqrt()),
        3 => 0.5 * (lo + hi),
        4 => 1.0 / (1.0 + (-2.0 * (lo * lo + hi * hi)).exp()),
        5 => 1.0 / (1.0 + (-hi.powi(2) - lo.powi(4)).exp()),
        6 => (-hi.powf(0.75)).exp(),
        7 => (-0.5 * (lo + lo.sqrt() + hi.sqrt())).exp(),
        8 => (1.0 + hi).ln(),
        9 => hi - lo,
        10 => 1.0 - (hi - lo),
        // Block forms: 0.8 on the diagonal (11) or off-diagonal (12) blocks
        // of the half-open partition [0, 1/2), [1/2, 1].
        11 => {
            if (x < 0.5) == (y < 0.5) {
                0.8
            } else {
                0.0
            }
        }
        12 => {
            if (x < 0.5) == (y < 0.5) {
                0.0
            } else {
                0.8
            }
        }
        _ => unreachable!("benchmark index validated"),
    }
}

// Block membership is half-open on the left block so the two indicators
// never overlap (at alpha = 0.5 the closed form would assign 1.7 to the
// single point x = y = 0.5).
fn two_block(alpha: f64, x: f64, y: f64) -> f64 {
    let mut w = 0.1;
    if x < alpha && y < alpha {
        w += 0.8;
    } else if x >= 1.0 - alpha && y >= 1.0 - alpha {
        w += 0.8;
    }
    w
}

fn noisy_ring(alpha: f64, x: f64, y: f64) -> f64 {
    let a2 = alpha * alpha;
    let corner1 = ((-y * y - (x - 1.0) * (x - 1.0)) / a2).exp();
    let corner2 = ((-(y - 1.0) * (y - 1.0) - x * x) / a2).exp();
    // sin(3pi/4) x + cos(3pi/4) y factors as sin(3pi/4) (x - y); written
    // that way the ridge is symmetric in floats, not just on paper.
    let s = (0.75 * std::f64::consts::PI).sin();
    let ridge = (-(s * (x - y).abs() / alpha).powi(2)).exp();
    (0.9 * (corner1 + corner2 + ridge)).min(1.0)
}

/// The regular coordinate grid `x_p = (p-1)/N`, as row-major `(x_p, y_q)`
/// pairs. The same grid is used for graph sampling in deterministic mode,
/// for network evaluation, and for ground-truth discretization.
pub fn coordinate_grid(n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InputDomain("grid size must be positive".into()));
    }
    let nf = n as f64;
    let mut coords = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            coords.push((p as f64 / nf, q as f64 / nf));
        }
    }
    Ok(coords)
}

/// First coordinates of [`coordinate_grid`]: the node positions used by
/// deterministic sampling.
pub fn grid_positions(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InputDomain("grid size must be positive".into()));
    }
    Ok((0..n).map(|p| p as f64 / n as f64).collect())
}

/// A `K x K` discretization of a graphon on the regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphonGrid {
    values: Array2<f64>,
}

impl GraphonGrid {
    /// Wrap a matrix of edge probabilities, enforcing symmetry (within
    /// 1e-12 after symmetrization) and the `[0,1]` range.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() || values.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "grid must be square and nonempty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let sym = 0.5 * (&values + &values.t());
        for &v in sym.iter() {
            if !(-1e-12..=1.0 + 1e-12).contains(&v) || v.is_nan() {
                return Err(Error::InputDomain(format!("grid value {v} outside [0,1]")));
            }
        }
        Ok(Self {
            values: sym.mapv(|v| v.clamp(0.0, 1.0)),
        })
    }

    pub fn resolution(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }
}

/// Discretize a graphon at resolution `K` on the regular grid:
/// `values[p][q] = W(x_p, x_q)`.
pub fn sample_grid(spec: &GraphonSpec, k: usize) -> Result<GraphonGrid> {
    spec.validate()?;
    if k == 0 {
        return Err(Error::InputDomain("resolution must be positive".into()));
    }
    let pos = grid_positions(k)?;
    let mut values = Array2::zeros((k, k));
    for p in 0..k {
        for q in 0..=p {
            let w = eval_unchecked(spec, pos[p], pos[q]);
            values[[p, q]] = w;
            values[[q, p]] = w;
        }
    }
    GraphonGrid::new(values)
}

/// How node positions are chosen when sampling a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleMode {
    /// `v_i ~ Uniform([0,1])`, i.i.d.
    Stochastic,
    /// `v_i = (i-1)/N` on the fixed grid.
    Deterministic,
}

/// An unweighted or weighted graph with a node histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adj: Array2<f64>,
    hist: Array1<f64>,
}

impl Graph {
    /// Build a graph from a symmetric adjacency matrix with the uniform
    /// histogram `1/n`.
    pub fn from_adjacency(adj: Array2<f64>) -> Result<Self> {
        let n = adj.nrows();
        let hist = Array1::from_elem(n, 1.0 / n as f64);
        Self::new(adj, hist)
    }

    /// Build a graph with an explicit histogram. The adjacency must be
    /// square and symmetric; the histogram must be a probability vector.
    pub fn new(adj: Array2<f64>, hist: Array1<f64>) -> Result<Self> {
        let n = adj.nrows();
        if n == 0 || adj.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "adjacency must be square and nonempty, got {}x{}",
                adj.nrows(),
                adj.ncols()
            )));
        }
        if hist.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "histogram length {} does not match {n} nodes",
                hist.len()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if (adj[[i, j]] - adj[[j, i]]).abs() > 1e-12 {
                    return Err(Error::InputDomain(format!(
                        "adjacency not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let total: f64 = hist.sum();
        if hist.iter().any(|&h| h < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InputDomain(format!(
                "histogram must be a probability vector (sum {total})"
            )));
        }
        Ok(Self { adj, hist })
    }

    pub fn n(&self) -> usize {
        self.adj.nrows()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adj
    }

    pub fn histogram(&self) -> &Array1<f64> {
        &self.hist
    }

    /// Edge list of the strict upper triangle (`i < j`) for 0/1 graphs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adj[[i, j]] != 0.0 {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    /// Fraction of present edges among the n(n-1)/2 possible ones.
    pub fn density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let pairs = (n * (n - 1) / 2) as f64;
        self.edges().len() as f64 / pairs
    }

    /// Node degrees divided by `n` (the default GIN input feature).
    pub fn scaled_degrees(&self) -> Array1<f64> {
        let n = self.n() as f64;
        self.adj.sum_axis(ndarray::Axis(1)) / n
    }
}

/// Sample one graph from a graphon. Stochastic mode draws node positions
/// uniformly; deterministic mode places them on the grid. Edges are drawn
/// `Bernoulli(W(v_i, v_j))` over the strict upper triangle only, then
/// mirrored; the diagonal stays zero. The same `(spec, n, mode, seed)`
/// always yields the same graph.
pub fn sample_graph(spec: &GraphonSpec, n: usize, mode: SampleMode, seed: u64) -> Result<Graph> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InputDomain("graph size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<f64> = match mode {
        SampleMode::Stochastic => (0..n).map(|_| rng.random::<f64>()).collect(),
        SampleMode::Deterministic => grid_positions(n)?,
    };
    let mut adj = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let w = eval_unchecked(spec, positions[i], positions[j]);
            if rng.random::<f64>() < w {
                adj[[i, j]] = 1.0;
                adj[[j, i]] = 1.0;
            }
        }
    }
    Graph::from_adjacency(adj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn benchmark_closed_forms() {
        let w = |i, x, y| eval_graphon(&GraphonSpec::Benchmark(i), x, y).unwrap();
        assert_abs_diff_eq!(w(0, 0.3, 0.7), 0.21, epsilon = 1e-15);
        assert_abs_diff_eq!(w(9, 0.5, 0.5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w(11, 0.25, 0.75), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w(11, 0.25, 0.25), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(w(12, 0.25, 0.75), 0.8, epsilon = 1e-15);
        // Boundary x = 0.5 belongs to the second block.
        assert_abs_diff_eq!(w(11, 0.5, 0.75), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(w(3, 0.2, 0.6), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(w(10, 0.0, 1.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn two_block_evaluation() {
        let spec = GraphonSpec::TwoBlockRatio { alpha: 0.3 };
        assert_abs_diff_eq!(eval_graphon(&spec, 0.1, 0.1).unwrap(), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_graphon(&spec, 0.5, 0.5).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_graphon(&spec, 0.8, 0.9).unwrap(), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_graphon(&spec, 0.1, 0.9).unwrap(), 0.1, epsilon = 1e-15);
        // alpha = 0.5 stays within [0,1] at the shared boundary point.
        let spec = GraphonSpec::TwoBlockRatio { alpha: 0.5 };
        assert_abs_diff_eq!(eval_graphon(&spec, 0.5, 0.5).unwrap(), 0.9, epsilon = 1e-15);
    }

    #[test]
    fn out_of_range_inputs_error() {
        assert!(eval_graphon(&GraphonSpec::Benchmark(0), -0.1, 0.5).is_err());
        assert!(eval_graphon(&GraphonSpec::Benchmark(13), 0.5, 0.5).is_err());
        assert!(eval_graphon(&GraphonSpec::TwoBlockRatio { alpha: 0.6 }, 0.5, 0.5).is_err());
        assert!(eval_graphon(&GraphonSpec::NoisyRing { alpha: 0.3 }, 0.5, 0.5).is_err());
        assert!(coordinate_grid(0).is_err());
    }

    #[test]
    fn grid_convention() {
        assert_eq!(coordinate_grid(1).unwrap(), vec![(0.0, 0.0)]);
        assert_eq!(
            coordinate_grid(2).unwrap(),
            vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)]
        );
        // element (p=3, q=2), 1-indexed, of the 4-grid
        let g = coordinate_grid(4).unwrap();
        assert_eq!(g[2 * 4 + 1], (0.5, 0.25));
    }

    #[test]
    fn sample_grid_small() {
        let g = sample_grid(&GraphonSpec::Benchmark(0), 2).unwrap();
        assert_eq!(g.values().as_slice().unwrap(), &[0.0, 0.0, 0.0, 0.25]);
        let g = sample_grid(&GraphonSpec::Benchmark(3), 2).unwrap();
        assert_eq!(g.values().as_slice().unwrap(), &[0.0, 0.25, 0.25, 0.5]);
        let g = sample_grid(&GraphonSpec::Benchmark(10), 2).unwrap();
        assert_eq!(g.values().as_slice().unwrap(), &[1.0, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn probe_grid_range_and_symmetry() {
        let mut specs = Vec::new();
        for idx in 0..=12 {
            specs.push(GraphonSpec::Benchmark(idx));
        }
        for alpha in [0.1, 0.3, 0.5] {
            specs.push(GraphonSpec::TwoBlockRatio { alpha });
        }
        for alpha in [0.05, 0.1, 0.15] {
            specs.push(GraphonSpec::NoisyRing { alpha });
        }
        for spec in &specs {
            for p in 0..=100 {
                for q in 0..=p {
                    let x = p as f64 / 100.0;
                    let y = q as f64 / 100.0;
                    let w = eval_graphon(spec, x, y).unwrap();
                    let wt = eval_graphon(spec, y, x).unwrap();
                    assert!((0.0..=1.0).contains(&w), "{spec:?} at ({x},{y}) -> {w}");
                    assert_eq!(w, wt, "{spec:?} not symmetric at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let spec = GraphonSpec::Benchmark(4);
        let a = sample_graph(&spec, 30, SampleMode::Stochastic, 7).unwrap();
        let b = sample_graph(&spec, 30, SampleMode::Stochastic, 7).unwrap();
        assert_eq!(a.adjacency(), b.adjacency());
        let c = sample_graph(&spec, 30, SampleMode::Stochastic, 8).unwrap();
        assert_ne!(a.adjacency(), c.adjacency());
    }

    #[test]
    fn single_node_graph_is_empty() {
        let g = sample_graph(&GraphonSpec::Benchmark(0), 1, SampleMode::Stochastic, 1).unwrap();
        assert_eq!(g.adjacency()[[0, 0]], 0.0);
        assert_eq!(g.histogram()[0], 1.0);
    }

    #[test]
    fn block_graphon_cross_block_edges_impossible() {
        // nodes at v = {0, 0.5} straddle the block boundary of benchmark 11,
        // where the cross-block value is exactly 0
        for seed in 0..20 {
            let g =
                sample_graph(&GraphonSpec::Benchmark(11), 2, SampleMode::Deterministic, seed)
                    .unwrap();
            assert_eq!(g.adjacency()[[0, 1]], 0.0);
        }
    }

    #[test]
    fn deterministic_positions_match_grid() {
        let n = 17;
        let pos = grid_positions(n).unwrap();
        let grid = coordinate_grid(n).unwrap();
        for (i, &p) in pos.iter().enumerate() {
            assert_eq!(grid[i * n].0, p);
        }
    }

    #[test]
    fn empirical_edge_frequency_matches_graphon() {
        // Hoeffding bound: max deviation <= 4 sqrt(ln(2 N^2) / (2 R))
        let n = 20;
        let reps = 2000;
        let spec = GraphonSpec::Benchmark(3);
        let mut freq = Array2::<f64>::zeros((n, n));
        for seed in 0..reps {
            let g = sample_graph(&spec, n, SampleMode::Deterministic, seed as u64).unwrap();
            freq = freq + g.adjacency();
        }
        freq /= reps as f64;
        let pos = grid_positions(n).unwrap();
        let bound = 4.0 * ((2.0 * (n * n) as f64).ln() / (2.0 * reps as f64)).sqrt();
        let mut max_dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = eval_graphon(&spec, pos[i], pos[j]).unwrap();
                max_dev = max_dev.max((freq[[i, j]] - w).abs());
            }
        }
        assert!(max_dev <= bound, "max deviation {max_dev} > bound {bound}");
    }

    #[test]
    fn two_block_density_matches_integral() {
        // integral of W over the square: 0.8 * (2 alpha^2) + 0.1; at
        // alpha = 0.5 this is 0.5
        let spec = GraphonSpec::TwoBlockRatio { alpha: 0.5 };
        let g = sample_graph(&spec, 2000, SampleMode::Stochastic, 42).unwrap();
        let density = g.density();
        assert!(
            (density - 0.5).abs() <= 0.02,
            "density {density} not within 0.50 +/- 0.02"
        );
    }
}
