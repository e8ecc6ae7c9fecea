//! Estimation-error metrics and latent-space diagnostics.
//!
//! The primary error measure between an estimated and a ground-truth
//! graphon is the squared GW distance between their discretizations at a
//! common resolution. Since both grids share the same coordinate
//! orientation, the solver is started from the identity coupling and then
//! restarted from the product coupling, keeping the better of the two
//! costs. For graphons whose degree function is strictly increasing, a
//! sorted mean-squared error is also meaningful: rows and columns of each
//! grid are ordered by their own degrees before the entrywise comparison.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{Graph, GraphonGrid};
use crate::gw::{solve, GwSolver, GwSolverOptions, InitCoupling};

/// One evaluated trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    /// Benchmark index, or the test-graph index for family evaluations.
    pub graphon_index: usize,
    /// Name of the ground truth being compared against.
    pub graphon: String,
    /// Squared GW distance between estimate and truth.
    pub error: f64,
    /// Degree-sorted MSE, scaled by 1e4 (easy-to-align graphons only).
    pub mse_sorted: Option<f64>,
    /// Wall-clock seconds spent on this trial.
    pub seconds: f64,
}

/// Aggregated evaluation outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub trials: Vec<TrialResult>,
    pub mean: f64,
    pub std: f64,
    pub resolution: usize,
}

impl EvalReport {
    /// Aggregate trials; mean and standard deviation (population) over the
    /// per-trial GW errors.
    pub fn from_trials(trials: Vec<TrialResult>, resolution: usize) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::InputDomain("no trials to aggregate".into()));
        }
        let n = trials.len() as f64;
        let mean = trials.iter().map(|t| t.error).sum::<f64>() / n;
        let var = trials.iter().map(|t| (t.error - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            trials,
            mean,
            std: var.sqrt(),
            resolution,
        })
    }
}

/// Squared GW distance between two grids of equal resolution with uniform
/// histograms, via the configured solver started from the identity
/// coupling and restarted from the product coupling (better cost wins).
pub fn graphon_error_gw(
    estimate: &GraphonGrid,
    truth: &GraphonGrid,
    solver: GwSolver,
    opts: &GwSolverOptions,
) -> Result<f64> {
    if estimate.resolution() != truth.resolution() {
        return Err(Error::DimensionMismatch(format!(
            "estimate resolution {} vs truth {}",
            estimate.resolution(),
            truth.resolution()
        )));
    }
    let r = estimate.resolution();
    let h = Array1::from_elem(r, 1.0 / r as f64);
    let identity = solve(
        solver,
        estimate.values(),
        truth.values(),
        &h,
        &h,
        &GwSolverOptions {
            init: InitCoupling::IdentityIfSquare,
            ..opts.clone()
        },
    )?;
    let product = solve(
        solver,
        estimate.values(),
        truth.values(),
        &h,
        &h,
        &GwSolverOptions {
            init: InitCoupling::Product,
            ..opts.clone()
        },
    )?;
    Ok(identity.cost.min(product.cost))
}

/// Row means of the grid: the Riemann approximation of
/// `d(u) = int W(u, v) dv` on the fixed grid.
pub fn degree_function(grid: &GraphonGrid) -> Array1<f64> {
    grid.values().mean_axis(ndarray::Axis(1)).expect("nonempty")
}

/// Reorder rows and columns by ascending degree (stable in the original
/// index on ties).
fn sort_by_degree(grid: &GraphonGrid) -> Array2<f64> {
    let r = grid.resolution();
    let deg = degree_function(grid);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| deg[a].total_cmp(&deg[b]).then(a.cmp(&b)));
    let v = grid.values();
    Array2::from_shape_fn((r, r), |(i, j)| v[[order[i], order[j]]])
}

/// Degree-sorted mean squared error between two grids. `scaled` carries
/// the 1e4 factor used by the reference tables; `raw` is the plain MSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortedMse {
    pub scaled: f64,
    pub raw: f64,
}

pub fn graphon_error_mse_sorted(estimate: &GraphonGrid, truth: &GraphonGrid) -> Result<SortedMse> {
    if estimate.resolution() != truth.resolution() {
        return Err(Error::DimensionMismatch(format!(
            "estimate resolution {} vs truth {}",
            estimate.resolution(),
            truth.resolution()
        )));
    }
    let a = sort_by_degree(estimate);
    let b = sort_by_degree(truth);
    let raw = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / (a.len() as f64);
    Ok(SortedMse {
        scaled: raw * 1e4,
        raw,
    })
}

/// Bilinear upsampling with endpoint alignment: source nodes sit at
/// `(p-1)/(K-1)`, target nodes at `(r-1)/(R-1)`, so `K == R` is the
/// identity and a 2x2 grid interpolates corner-to-corner. Used to bring
/// the fixed-resolution baseline up to the evaluation resolution.
pub fn upsample_linear(grid: &GraphonGrid, target: usize) -> Result<GraphonGrid> {
    let k = grid.resolution();
    if target < k {
        return Err(Error::InputDomain(format!(
            "target resolution {target} below source {k}"
        )));
    }
    if k == 1 {
        return GraphonGrid::new(Array2::from_elem((target, target), grid.values()[[0, 0]]));
    }
    let v = grid.values();
    let pos = |r: usize| -> (usize, f64) {
        if target == 1 {
            return (0, 0.0);
        }
        let x = r as f64 / (target - 1) as f64 * (k - 1) as f64;
        let cell = (x.floor() as usize).min(k - 2);
        (cell, x - cell as f64)
    };
    let out = Array2::from_shape_fn((target, target), |(i, j)| {
        let (ci, ti) = pos(i);
        let (cj, tj) = pos(j);
        let a = v[[ci, cj]] * (1.0 - ti) * (1.0 - tj);
        let b = v[[ci, cj + 1]] * (1.0 - ti) * tj;
        let c = v[[ci + 1, cj]] * ti * (1.0 - tj);
        let d = v[[ci + 1, cj + 1]] * ti * tj;
        (a + b + c + d).clamp(0.0, 1.0)
    });
    GraphonGrid::new(out)
}

/// First principal component of a set of vectors by power iteration on the
/// centered covariance, and the projections onto it.
pub fn principal_projection(codes: &[Array1<f64>]) -> Result<Vec<f64>> {
    if codes.is_empty() {
        return Err(Error::InputDomain("no codes to project".into()));
    }
    let d = codes[0].len();
    if codes.iter().any(|c| c.len() != d) || d == 0 {
        return Err(Error::DimensionMismatch("ragged latent codes".into()));
    }
    let n = codes.len() as f64;
    let mut mean = Array1::zeros(d);
    for c in codes {
        mean += c;
    }
    mean /= n;
    let mut cov = Array2::zeros((d, d));
    for c in codes {
        let x = c - &mean;
        for i in 0..d {
            for j in 0..d {
                cov[[i, j]] += x[i] * x[j];
            }
        }
    }
    cov /= n.max(2.0) - 1.0;

    let mut v = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
    for _ in 0..500 {
        let w = cov.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm <= 1e-300 {
            break; // zero covariance: all projections are 0
        }
        v = w / norm;
    }
    Ok(codes.iter().map(|c| (c - &mean).dot(&v)).collect())
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

/// |Spearman rank correlation| between the family parameter and the first
/// principal projection of the latent codes. Ties get average ranks.
pub fn latent_alpha_correlation(codes: &[Array1<f64>], alphas: &[f64]) -> Result<f64> {
    if codes.len() != alphas.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} codes vs {} alphas",
            codes.len(),
            alphas.len()
        )));
    }
    if codes.len() < 2 {
        return Err(Error::InputDomain("need at least two codes".into()));
    }
    let proj = principal_projection(codes)?;
    let ra = average_ranks(&proj);
    let rb = average_ranks(alphas);
    Ok(pearson(&ra, &rb).abs())
}

/// Fraction of nodes on the smaller side of a spectral bipartition:
/// 2-means on the Fiedler vector of the normalized graph Laplacian. For
/// two-block graphs this estimates the relative size of one dense block.
pub fn spectral_bipartition_fraction(g: &Graph) -> f64 {
    let n = g.n();
    if n < 2 {
        return 0.0;
    }
    let a = g.adjacency();
    let deg = a.sum_axis(ndarray::Axis(1)).mapv(|d: f64| d.max(1e-9));
    let dis = deg.mapv(|d| 1.0 / d.sqrt());
    // M = I + D^{-1/2} A D^{-1/2} has spectrum in [0, 2] with top
    // eigenvector D^{1/2} 1; power iteration with that direction deflated
    // converges to the normalized Fiedler vector.
    let mut top = deg.mapv(f64::sqrt);
    top /= top.dot(&top).sqrt();
    let mut v = Array1::from_shape_fn(n, |i| ((i * 2654435761 + 1) % 1000) as f64 / 1000.0 - 0.5);
    v -= &(&top * top.dot(&v));
    for _ in 0..2000 {
        let av = a.dot(&(&v * &dis));
        let mut w = &v + &(&av * &dis);
        w -= &(&top * top.dot(&w));
        let norm = w.dot(&w).sqrt();
        if norm <= 1e-300 {
            break;
        }
        v = w / norm;
    }
    // cluster on the Ncut relaxation's indicator D^{-1/2} v
    let v = &v * &dis;
    let (_, counts, _) = two_means(v.as_slice().expect("contiguous"));
    let frac = counts[0] as f64 / n as f64;
    frac.min(1.0 - frac)
}

/// 1-d 2-means: centers, counts, and within-cluster standard deviations,
/// centers initialized at the extremes.
fn two_means(vals: &[f64]) -> ([f64; 2], [usize; 2], [f64; 2]) {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut centers = [lo, hi];
    let mut counts = [vals.len(), 0];
    let mut stds = [0.0, 0.0];
    for _ in 0..100 {
        let mut sums = [0.0; 2];
        let mut sq = [0.0; 2];
        let mut ns = [0usize; 2];
        for &x in vals {
            let k = if (x - centers[0]).abs() <= (x - centers[1]).abs() {
                0
            } else {
                1
            };
            sums[k] += x;
            sq[k] += x * x;
            ns[k] += 1;
        }
        if ns[0] == 0 || ns[1] == 0 {
            break;
        }
        let mut moved = 0.0;
        for k in 0..2 {
            let nc = sums[k] / ns[k] as f64;
            moved += (nc - centers[k]).abs();
            centers[k] = nc;
            stds[k] = (sq[k] / ns[k] as f64 - nc * nc).max(0.0).sqrt();
        }
        counts = ns;
        if moved < 1e-12 {
            break;
        }
    }
    (centers, counts, stds)
}

/// Estimate the dense-block fraction of a two-block graph. Block members
/// have systematically higher degrees than the sparse background, so the
/// estimate is half the high-degree fraction whenever the degree levels
/// separate (2-means gap beyond 2.5 within-cluster sigmas); when the
/// background is absent the degrees are unimodal and the spectral
/// bipartition fraction (about 1/2 there) takes over.
pub fn two_block_fraction(g: &Graph) -> f64 {
    let n = g.n();
    if n < 2 {
        return 0.0;
    }
    let degs: Vec<f64> = g.adjacency().sum_axis(ndarray::Axis(1)).to_vec();
    let (centers, counts, stds) = two_means(&degs);
    let (lo, hi) = if centers[0] <= centers[1] { (0, 1) } else { (1, 0) };
    let gap = centers[hi] - centers[lo];
    let sigma = stds[lo].max(stds[hi]).max(1.0);
    // A genuine sparse background sits near degree 0.1 n, well below any
    // block level; 2-means on unimodal degrees (blocks covering the whole
    // domain) leaves both centers high instead.
    let background = centers[lo] < 0.3 * n as f64;
    if background && gap > 2.0 * sigma {
        counts[hi] as f64 / (2.0 * n as f64)
    } else {
        spectral_bipartition_fraction(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::{sample_grid, GraphonSpec};
    use crate::gw::test_util::seeded;
    use rand::Rng;

    fn const_grid(r: usize, c: f64) -> GraphonGrid {
        GraphonGrid::new(Array2::from_elem((r, r), c)).unwrap()
    }

    #[test]
    fn identical_grids_have_zero_error() {
        let g = sample_grid(&GraphonSpec::Benchmark(4), 24).unwrap();
        let e = graphon_error_gw(&g, &g, GwSolver::Cg, &GwSolverOptions::default()).unwrap();
        assert!(e <= 1e-6, "error {e}");
    }

    #[test]
    fn permuted_grid_reaches_zero_with_warm_init() {
        let mut rng = seeded(3);
        let r = 12;
        let vals = Array2::from_shape_fn((r, r), |(i, j)| {
            if i <= j {
                0.0
            } else {
                rng.random::<f64>()
            }
        });
        let vals = &vals + &vals.t();
        let g = GraphonGrid::new(vals.mapv(|v| v / 2.0)).unwrap();
        let pv = Array2::from_shape_fn((r, r), |(i, j)| g.values()[[r - 1 - i, r - 1 - j]]);
        let gp = GraphonGrid::new(pv).unwrap();
        let h = Array1::from_elem(r, 1.0 / r as f64);
        let mut p = Array2::zeros((r, r));
        for i in 0..r {
            p[[i, r - 1 - i]] = 1.0 / r as f64;
        }
        let res = solve(
            GwSolver::Cg,
            g.values(),
            gp.values(),
            &h,
            &h,
            &GwSolverOptions::default().with_init(InitCoupling::Warm(p)),
        )
        .unwrap();
        assert!(res.cost <= 1e-6, "cost {}", res.cost);
    }

    #[test]
    fn error_is_symmetric_within_local_solver_slack() {
        for seed in 0..10 {
            let est = sample_grid(&GraphonSpec::Benchmark((seed % 11) as u8), 16).unwrap();
            let mut rng = seeded(seed);
            let noise = Array2::from_shape_fn((16, 16), |_| rng.random::<f64>() * 0.2);
            let noise = 0.5 * (&noise + &noise.t());
            let tr =
                GraphonGrid::new((est.values() + &noise).mapv(|v| v.clamp(0.0, 1.0))).unwrap();
            let opts = GwSolverOptions::default();
            let ab = graphon_error_gw(&est, &tr, GwSolver::Cg, &opts).unwrap();
            let ba = graphon_error_gw(&tr, &est, GwSolver::Cg, &opts).unwrap();
            assert!((ab - ba).abs() <= 1e-4, "seed {seed}: {ab} vs {ba}");
        }
    }

    #[test]
    fn constant_half_vs_block_graphon_matches_second_solver() {
        let est = const_grid(32, 0.5);
        let truth = sample_grid(&GraphonSpec::Benchmark(11), 32).unwrap();
        let opts = GwSolverOptions::default();
        let cg = graphon_error_gw(&est, &truth, GwSolver::Cg, &opts).unwrap();
        let pg = graphon_error_gw(&est, &truth, GwSolver::Pg, &opts).unwrap();
        // constant estimate: every coupling gives the same cost, so the two
        // solvers must agree tightly
        assert!((cg - pg).abs() <= 1e-6, "cg {cg} vs pg {pg}");
    }

    #[test]
    fn degree_function_row_means() {
        let g = sample_grid(&GraphonSpec::Benchmark(3), 2).unwrap();
        let d = degree_function(&g);
        assert_eq!(d.to_vec(), vec![0.125, 0.375]);
        let c = const_grid(5, 0.3);
        assert!(degree_function(&c).iter().all(|&x| (x - 0.3).abs() < 1e-15));
    }

    #[test]
    fn sorted_mse_basics() {
        let g = sample_grid(&GraphonSpec::Benchmark(0), 20).unwrap();
        let m = graphon_error_mse_sorted(&g, &g).unwrap();
        assert_eq!(m.raw, 0.0);

        // a permuted copy of a strictly-increasing-degree grid sorts back
        let r = 10;
        let base = sample_grid(&GraphonSpec::Benchmark(0), r).unwrap();
        let perm: Vec<usize> = (0..r).rev().collect();
        let shuffled =
            Array2::from_shape_fn((r, r), |(i, j)| base.values()[[perm[i], perm[j]]]);
        let shuffled = GraphonGrid::new(shuffled).unwrap();
        let m = graphon_error_mse_sorted(&shuffled, &base).unwrap();
        assert!(m.raw <= 1e-24, "sorted mse {}", m.raw);

        let a = const_grid(6, 0.8);
        let b = const_grid(6, 0.5);
        let m = graphon_error_mse_sorted(&a, &b).unwrap();
        assert!((m.raw - 0.09).abs() <= 1e-12);
        assert!((m.scaled - 900.0).abs() <= 1e-8);
    }

    #[test]
    fn sorting_yields_nondecreasing_degrees() {
        let g = sample_grid(&GraphonSpec::Benchmark(7), 33).unwrap();
        let sorted = GraphonGrid::new(sort_by_degree(&g)).unwrap();
        let d = degree_function(&sorted);
        for w in d.to_vec().windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn upsample_identity_constant_and_midpoint() {
        let g = sample_grid(&GraphonSpec::Benchmark(4), 7).unwrap();
        let same = upsample_linear(&g, 7).unwrap();
        assert_eq!(same.values(), g.values());

        let c = const_grid(3, 0.42);
        let up = upsample_linear(&c, 11).unwrap();
        assert!(up.values().iter().all(|&v| (v - 0.42).abs() <= 1e-15));

        let checker = GraphonGrid::new(ndarray::array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let up = upsample_linear(&checker, 3).unwrap();
        assert!((up.values()[[1, 1]] - 0.5).abs() <= 1e-15);
        assert!(up.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(upsample_linear(&checker, 1).is_err());
    }

    #[test]
    fn report_aggregation_is_consistent() {
        let trials = vec![
            TrialResult {
                trial: 0,
                graphon_index: 0,
                graphon: "benchmark:0".into(),
                error: 0.03,
                mse_sorted: None,
                seconds: 1.0,
            },
            TrialResult {
                trial: 1,
                graphon_index: 0,
                graphon: "benchmark:0".into(),
                error: 0.05,
                mse_sorted: None,
                seconds: 1.0,
            },
        ];
        let rep = EvalReport::from_trials(trials, 300).unwrap();
        assert!((rep.mean - 0.04).abs() <= 1e-12);
        assert!((rep.std - 0.01).abs() <= 1e-12);
        assert!(EvalReport::from_trials(vec![], 300).is_err());
    }

    #[test]
    fn latent_correlation_perfect_and_random() {
        // codes = (alpha, 0) embed the parameter exactly
        let alphas: Vec<f64> = (0..60).map(|i| 0.1 + 0.4 * (i as f64) / 59.0).collect();
        let codes: Vec<Array1<f64>> = alphas.iter().map(|&a| ndarray::array![a, 0.0]).collect();
        let rho = latent_alpha_correlation(&codes, &alphas).unwrap();
        assert!((rho - 1.0).abs() <= 1e-12, "rho {rho}");

        // independent random codes: correlation stays low
        let mut rng = seeded(8);
        let codes: Vec<Array1<f64>> = (0..100)
            .map(|_| Array1::from_shape_fn(3, |_| rng.random::<f64>()))
            .collect();
        let alphas: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let rho = latent_alpha_correlation(&codes, &alphas).unwrap();
        assert!(rho <= 0.3, "rho {rho}");

        // duplicated alphas get average ranks without panicking
        let codes: Vec<Array1<f64>> =
            vec![ndarray::array![0.1], ndarray::array![0.2], ndarray::array![0.3]];
        let rho = latent_alpha_correlation(&codes, &[0.5, 0.5, 0.9]).unwrap();
        assert!(rho > 0.5);
    }

    #[test]
    fn block_fraction_recovers_planted_blocks() {
        for (alpha, n) in [(0.15, 100), (0.25, 80), (0.4, 100), (0.5, 100)] {
            let spec = GraphonSpec::TwoBlockRatio { alpha };
            let g = crate::graphon::sample_graph(
                &spec,
                n,
                crate::graphon::SampleMode::Deterministic,
                5,
            )
            .unwrap();
            let frac = two_block_fraction(&g);
            assert!((frac - alpha).abs() <= 0.1, "alpha {alpha}: fraction {frac}");
        }
    }

    #[test]
    fn spectral_bipartition_splits_balanced_blocks() {
        // benchmark 11 is two equal diagonal blocks: the balanced cut
        let g = crate::graphon::sample_graph(
            &GraphonSpec::Benchmark(11),
            60,
            crate::graphon::SampleMode::Deterministic,
            2,
        )
        .unwrap();
        let frac = spectral_bipartition_fraction(&g);
        assert!((frac - 0.5).abs() <= 0.05, "fraction {frac}");
    }
}
