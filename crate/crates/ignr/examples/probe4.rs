//! Scratch: c-IGNR S2 calibration (development aid).

use graphon_ignr::dataset::{make_dataset_family, Family};
use graphon_ignr::eval::graphon_error_gw;
use graphon_ignr::graphon::{coordinate_grid, sample_grid, GraphonGrid, GraphonSpec};
use graphon_ignr::gw::{GwSolver, GwSolverOptions};
use graphon_ignr::nn::{gin_encode, modsiren_forward};
use graphon_ignr::train::{train_cignr, TrainConfig};
use ndarray::Array2;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let r = 300;
    let t0 = Instant::now();
    let ds = make_dataset_family(Family::S2, 100, 99).unwrap();
    let (train, test) = ds.split(80).unwrap();
    let mut cfg = TrainConfig::cignr(16);
    cfg.epochs = epochs;
    cfg.solver = GwSolver::Cg;
    cfg.solver_opts = GwSolverOptions { max_outer_iters: 4, tol: 1e-7, ..Default::default() };
    cfg.seed = 5;
    let (enc, dec, history) = train_cignr(&train, &cfg).unwrap();
    let t_train = t0.elapsed().as_secs_f64();
    println!("train: loss {:.4} -> {:.4} in {t_train:.0}s", history[0], history.last().unwrap());

    let coords = coordinate_grid(r).unwrap();
    let mut errs = Vec::new();
    for (g, meta) in test.graphs.iter().zip(&test.meta) {
        let (z, _) = gin_encode(&enc, g);
        let (out, _) = modsiren_forward(&dec, &z, &coords).unwrap();
        let f = Array2::from_shape_vec((r, r), out.to_vec()).unwrap();
        let est = GraphonGrid::new(0.5 * (&f + &f.t())).unwrap();
        let alpha = meta.alpha.unwrap();
        let truth = sample_grid(&GraphonSpec::NoisyRing { alpha }, r).unwrap();
        errs.push(graphon_error_gw(&est, &truth, GwSolver::Cg, &GwSolverOptions::default()).unwrap());
    }
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    println!(
        "test ({}): mean err {mean:.4}  max {:.4}  total {:.0}s",
        errs.len(),
        errs.iter().cloned().fold(0.0, f64::max),
        t0.elapsed().as_secs_f64()
    );
}
