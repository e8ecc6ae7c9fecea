//! Scratch: c-IGNR learning dynamics diagnosis (development aid).

use graphon_ignr::dataset::{make_dataset_family, Family};
use graphon_ignr::graphon::coordinate_grid;
use graphon_ignr::gw::{GwSolver, GwSolverOptions};
use graphon_ignr::nn::{gin_encode, modsiren_forward, ParamTensors};
use graphon_ignr::train::{train_cignr, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let lr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let ds = make_dataset_family(Family::S1, 10, 77).unwrap();
    let mut cfg = TrainConfig::cignr(16);
    cfg.epochs = epochs;
    cfg.lr = lr;
    cfg.solver = GwSolver::Cg;
    cfg.solver_opts = GwSolverOptions { max_outer_iters: 4, tol: 1e-7, ..Default::default() };
    cfg.seed = 5;
    let (enc, dec, history) = train_cignr(&ds, &cfg).unwrap();
    for e in (0..epochs).step_by((epochs / 10).max(1)) {
        println!("epoch {e}: loss {:.5}", history[e]);
    }
    println!("final: {:.5}", history.last().unwrap());

    // gate statistics on the trained model
    let (z, _) = gin_encode(&enc, &ds.graphs[0]);
    println!("z: {:?}", z.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>());
    let coords = coordinate_grid(8).unwrap();
    let (out, trace) = modsiren_forward(&dec, &z, &coords).unwrap();
    for (i, g) in trace.gates().iter().enumerate() {
        let alive = g.iter().filter(|&&x| x > 0.0).count();
        let mean = g.sum() / g.len() as f64;
        println!("gate {i}: {alive}/{} alive, mean {mean:.3}", g.len());
    }
    println!(
        "output range: {:.3} .. {:.3}",
        out.iter().cloned().fold(f64::INFINITY, f64::min),
        out.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
    let norms: Vec<f64> = dec.tensors().iter().map(|t| t.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    println!("decoder tensor norms: {:?}", norms.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>());
}
