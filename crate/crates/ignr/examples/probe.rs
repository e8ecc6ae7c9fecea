//! Scratch: CG training calibration (development aid).

use graphon_ignr::dataset::make_dataset_single;
use graphon_ignr::eval::graphon_error_gw;
use graphon_ignr::graphon::{coordinate_grid, sample_grid, GraphonGrid, GraphonSpec};
use graphon_ignr::gw::{GwSolver, GwSolverOptions};
use graphon_ignr::nn::siren_forward;
use graphon_ignr::train::{train_ignr, TrainConfig};
use ndarray::Array2;
use std::time::Instant;

const SIZES: [usize; 10] = [50, 77, 105, 133, 161, 188, 216, 244, 272, 300];

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let outer: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);
    let bench: u8 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(11);
    let r = 300;

    let spec = GraphonSpec::Benchmark(bench);
    let truth = sample_grid(&spec, r).unwrap();
    for trial in 0..1u64 {
        let t0 = Instant::now();
        let ds = make_dataset_single(&spec, &SIZES, 1000 + trial).unwrap();
        let mut cfg = TrainConfig::ignr();
        cfg.epochs = epochs;
        cfg.solver = GwSolver::Pg;
        cfg.solver_opts = GwSolverOptions {
            max_outer_iters: outer,
            pg_inner_iters: 30,
            tol: 1e-7,
            ..Default::default()
        };
        cfg.seed = 7 + trial;
        let (params, history) = train_ignr(&ds, &cfg).unwrap();
        let t_train = t0.elapsed().as_secs_f64();

        let coords = coordinate_grid(r).unwrap();
        let out = siren_forward(&params, &coords);
        let f = Array2::from_shape_vec((r, r), out.to_vec()).unwrap();
        let est = GraphonGrid::new(0.5 * (&f + &f.t())).unwrap();
        let err = graphon_error_gw(&est, &truth, GwSolver::Cg, &GwSolverOptions::default()).unwrap();
        println!(
            "bench {bench} trial {trial}: epochs {epochs} outer {outer} | loss {:.4} -> {:.4} | err {err:.4} | train {t_train:.1}s total {:.1}s",
            history[0], history.last().unwrap(), t0.elapsed().as_secs_f64()
        );
    }
}
