//! Scratch: c-IGNR S1 calibration (development aid).

use graphon_ignr::dataset::{make_dataset_family, Family};
use graphon_ignr::eval::{graphon_error_gw, latent_alpha_correlation};
use graphon_ignr::graphon::{coordinate_grid, sample_grid, GraphonGrid, GraphonSpec};
use graphon_ignr::gw::{GwSolver, GwSolverOptions};
use graphon_ignr::nn::{gin_encode, modsiren_forward};
use graphon_ignr::train::{train_cignr, TrainConfig};
use ndarray::Array2;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let m: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(600);
    let d: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(16);
    let n_eval: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(24);
    let r = 300;

    let t0 = Instant::now();
    let ds = make_dataset_family(Family::S1, m, 77).unwrap();
    let train_n = m * 4 / 5;
    let (train, test) = ds.split(train_n).unwrap();
    let mut cfg = TrainConfig::cignr(d);
    cfg.epochs = epochs;
    cfg.solver = GwSolver::Cg;
    cfg.solver_opts = GwSolverOptions { max_outer_iters: 4, tol: 1e-7, ..Default::default() };
    cfg.seed = 5;
    let (enc, dec, history) = train_cignr(&train, &cfg).unwrap();
    let t_train = t0.elapsed().as_secs_f64();
    println!(
        "train: loss {:.4} -> {:.4} in {t_train:.0}s ({} graphs, {} epochs, d={d})",
        history[0], history.last().unwrap(), train.len(), epochs
    );

    // test error on a subset (n_eval graphs) at R=300
    let coords = coordinate_grid(r).unwrap();
    let mut errs = Vec::new();
    let mut codes = Vec::new();
    let mut alphas = Vec::new();
    for (g, meta) in test.graphs.iter().zip(&test.meta).take(n_eval) {
        let (z, _) = gin_encode(&enc, g);
        let (out, _) = modsiren_forward(&dec, &z, &coords).unwrap();
        let f = Array2::from_shape_vec((r, r), out.to_vec()).unwrap();
        let est = GraphonGrid::new(0.5 * (&f + &f.t())).unwrap();
        let alpha = meta.alpha.unwrap();
        let truth = sample_grid(&GraphonSpec::TwoBlockRatio { alpha }, r).unwrap();
        let e = graphon_error_gw(&est, &truth, GwSolver::Cg, &GwSolverOptions::default()).unwrap();
        errs.push(e);
        codes.push(z);
        alphas.push(alpha);
    }
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let rho = latent_alpha_correlation(&codes, &alphas).unwrap();
    println!(
        "test ({} graphs): mean err {mean:.4}  max {:.4}  |rho| {rho:.3}  total {:.0}s",
        errs.len(),
        errs.iter().cloned().fold(0.0, f64::max),
        t0.elapsed().as_secs_f64()
    );
}
