use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;

use super::{
    EmbedArgs, EvalArgs, GenArgs, GenerateArgs, RecipeArgs, ReportArgs, TrainArgs,
};
use crate::dataset::{
    make_dataset_family, make_dataset_single, read_jsonl, write_jsonl, Dataset, Family,
};
use crate::error::{Error, Result};
use crate::eval::{
    graphon_error_gw, graphon_error_mse_sorted, EvalReport, TrialResult,
};
use crate::graphon::{sample_grid, GraphonGrid, GraphonSpec, SampleMode};
use crate::gw::{GwSolver, GwSolverOptions};
use crate::nn::gin_encode;
use crate::train::{
    decode_probability_grid, generate_graph, load_checkpoint, save_checkpoint, train_cignr,
    train_discrete_baseline, train_ignr, Checkpoint, ModelParams, Objective, TrainConfig,
};

/// What a `--spec` string denotes.
pub enum SpecArg {
    Single(GraphonSpec),
    Family(Family),
}

pub fn parse_spec(s: &str) -> Result<SpecArg> {
    if s == "s1" {
        return Ok(SpecArg::Family(Family::S1));
    }
    if s == "s2" {
        return Ok(SpecArg::Family(Family::S2));
    }
    let spec = if let Some(idx) = s.strip_prefix("benchmark:") {
        let idx: u8 = idx
            .parse()
            .map_err(|_| Error::InputDomain(format!("bad benchmark index in '{s}'")))?;
        GraphonSpec::Benchmark(idx)
    } else if let Some(a) = s.strip_prefix("two-block:") {
        GraphonSpec::TwoBlockRatio {
            alpha: a
                .parse()
                .map_err(|_| Error::InputDomain(format!("bad alpha in '{s}'")))?,
        }
    } else if let Some(a) = s.strip_prefix("noisy-ring:") {
        GraphonSpec::NoisyRing {
            alpha: a
                .parse()
                .map_err(|_| Error::InputDomain(format!("bad alpha in '{s}'")))?,
        }
    } else {
        return Err(Error::InputDomain(format!(
            "unknown spec '{s}' (benchmark:K, s1, s2, two-block:A, noisy-ring:A)"
        )));
    };
    spec.validate()?;
    Ok(SpecArg::Single(spec))
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InputDomain(format!("bad size '{p}'")))
        })
        .collect()
}

/// Insert `_trialN` before the extension when running multiple trials.
fn trial_path(base: &Path, trial: usize, trials: usize) -> PathBuf {
    if trials == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = base.extension().and_then(|s| s.to_str());
    let name = match ext {
        Some(e) => format!("{stem}_trial{trial}.{e}"),
        None => format!("{stem}_trial{trial}"),
    };
    base.with_file_name(name)
}

/// Per-trial base seeds are spaced far enough apart that the per-graph
/// derived seeds of different trials never collide.
fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64 * 1_000_003)
}

pub fn cmd_gen(args: &GenArgs) -> Result<()> {
    if args.trials == 0 {
        return Err(Error::InputDomain("trials must be positive".into()));
    }
    for trial in 0..args.trials {
        let seed = trial_seed(args.seed, trial);
        let ds = match parse_spec(&args.spec)? {
            SpecArg::Single(spec) => {
                let sizes = args.sizes.as_deref().ok_or_else(|| {
                    Error::InputDomain("single-graphon specs need --sizes".into())
                })?;
                make_dataset_single(&spec, &parse_sizes(sizes)?, seed)?
            }
            SpecArg::Family(family) => {
                let count = args
                    .count
                    .ok_or_else(|| Error::InputDomain("family specs need --count".into()))?;
                make_dataset_family(family, count, seed)?
            }
        };
        let path = trial_path(&args.out, trial, args.trials);
        write_jsonl(&path, &ds)?;
        let sizes: Vec<usize> = ds.graphs.iter().map(|g| g.n()).collect();
        let density =
            ds.graphs.iter().map(|g| g.density()).sum::<f64>() / ds.len() as f64;
        println!(
            "wrote {} graphs (sizes {}..{}, mean density {density:.3}) to {}",
            ds.len(),
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap(),
            path.display()
        );
    }
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => TrainConfig::from_key_values(&std::fs::read_to_string(path)?)?,
        None => TrainConfig::ignr(),
    };
    if let Some(objective) = &args.objective {
        let objective: Objective = objective.parse()?;
        if args.config.is_none() {
            // restart from that objective's defaults
            cfg = match objective {
                Objective::Ignr => TrainConfig::ignr(),
                Objective::Cignr => TrainConfig::cignr(cfg.latent_dim),
                Objective::Discrete => {
                    TrainConfig::discrete(cfg.latent_dim, cfg.decoder_resolution)
                }
            };
        }
        cfg.objective = objective;
    }
    if args.latent_dim.is_some() && cfg.objective == Objective::Ignr {
        return Err(Error::InputDomain(
            "--latent-dim applies only to cignr/discrete objectives".into(),
        ));
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.lr {
        cfg.lr = v;
    }
    if let Some(v) = &args.solver {
        cfg.solver = v.parse()?;
    }
    if let Some(v) = args.latent_dim {
        cfg.latent_dim = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.resolution {
        cfg.decoder_resolution = v;
    }
    cfg.validate()?;

    let ds = read_jsonl(&args.data)?;
    let ckpt = run_training(&ds, &cfg)?;
    write_loss_history(&loss_history_path(&args.out), &ckpt.loss_history)?;
    save_checkpoint(&args.out, &ckpt)?;
    println!(
        "final mean loss {} after {} epochs -> {}",
        ckpt.loss_history.last().copied().unwrap_or(f64::NAN),
        ckpt.loss_history.len(),
        args.out.display()
    );
    Ok(())
}

pub(crate) fn run_training(ds: &Dataset, cfg: &TrainConfig) -> Result<Checkpoint> {
    let (model, history) = match cfg.objective {
        Objective::Ignr => {
            let (siren, history) = train_ignr(ds, cfg)?;
            (ModelParams::Ignr { siren }, history)
        }
        Objective::Cignr => {
            let (encoder, decoder, history) = train_cignr(ds, cfg)?;
            (ModelParams::Cignr { encoder, decoder }, history)
        }
        Objective::Discrete => {
            let (encoder, decoder, history) = train_discrete_baseline(ds, cfg)?;
            (ModelParams::Discrete { encoder, decoder }, history)
        }
    };
    Ok(Checkpoint::new(model, cfg.clone(), history))
}

fn loss_history_path(ckpt_path: &Path) -> PathBuf {
    ckpt_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join("loss_history.csv")
}

fn write_loss_history(path: &Path, history: &[f64]) -> Result<()> {
    let mut out = String::from("epoch,mean_gw2\n");
    for (epoch, loss) in history.iter().enumerate() {
        out.push_str(&format!("{epoch},{loss}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub(crate) struct Metrics {
    gw: bool,
    mse_sorted: bool,
}

pub(crate) fn parse_metrics(s: &str) -> Result<Metrics> {
    let mut m = Metrics {
        gw: false,
        mse_sorted: false,
    };
    for part in s.split(',') {
        match part.trim() {
            "gw" => m.gw = true,
            "msesorted" => m.mse_sorted = true,
            other => {
                return Err(Error::InputDomain(format!(
                    "unknown metric '{other}' (gw, msesorted)"
                )))
            }
        }
    }
    if !m.gw {
        return Err(Error::InputDomain("the gw metric is required".into()));
    }
    Ok(m)
}

/// Decode a checkpoint's graphon estimate at resolution `r` and score it
/// against a truth grid.
fn score_estimate(
    ckpt: &Checkpoint,
    z: Option<&Array1<f64>>,
    truth: &GraphonGrid,
    r: usize,
    metrics: &Metrics,
    solver: GwSolver,
    opts: &GwSolverOptions,
) -> Result<(f64, Option<f64>)> {
    let est = GraphonGrid::new(decode_probability_grid(&ckpt.model, z, r)?)?;
    let error = graphon_error_gw(&est, truth, solver, opts)?;
    let mse = if metrics.mse_sorted {
        Some(graphon_error_mse_sorted(&est, truth)?.scaled)
    } else {
        None
    };
    Ok((error, mse))
}

pub(crate) fn eval_single(
    ckpts: &[Checkpoint],
    spec: &GraphonSpec,
    r: usize,
    metrics: &Metrics,
    solver: GwSolver,
) -> Result<EvalReport> {
    let truth = sample_grid(spec, r)?;
    let opts = GwSolverOptions::default();
    let graphon_index = match spec {
        GraphonSpec::Benchmark(idx) => *idx as usize,
        _ => 0,
    };
    let mut trials: Vec<(usize, Result<TrialResult>)> = ckpts
        .par_iter()
        .enumerate()
        .map(|(trial, ckpt)| {
            let t0 = Instant::now();
            let scored = score_estimate(ckpt, None, &truth, r, metrics, solver, &opts);
            let res = scored.map(|(error, mse_sorted)| TrialResult {
                trial,
                graphon_index,
                graphon: spec.name(),
                error,
                mse_sorted,
                seconds: t0.elapsed().as_secs_f64(),
            });
            (trial, res)
        })
        .collect();
    trials.sort_by_key(|(i, _)| *i);
    let trials: Result<Vec<TrialResult>> = trials.into_iter().map(|(_, r)| r).collect();
    EvalReport::from_trials(trials?, r)
}

pub(crate) fn eval_family(
    ckpt: &Checkpoint,
    test: &Dataset,
    r: usize,
    metrics: &Metrics,
    solver: GwSolver,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InputDomain("empty test set".into()));
    }
    let encoder = ckpt
        .model
        .encoder()
        .ok_or_else(|| Error::InputDomain("checkpoint has no encoder".into()))?;
    let family = match ckpt.model {
        ModelParams::Ignr { .. } => unreachable!("encoder checked above"),
        _ => (),
    };
    let _ = family;
    let opts = GwSolverOptions::default();
    let mut trials: Vec<(usize, Result<TrialResult>)> = test
        .graphs
        .par_iter()
        .zip(test.meta.par_iter())
        .enumerate()
        .map(|(i, (g, meta))| {
            let t0 = Instant::now();
            let run = || -> Result<TrialResult> {
                let alpha = meta.alpha.ok_or_else(|| {
                    Error::Data(format!("test graph {i} carries no alpha label"))
                })?;
                let spec = infer_family_spec(alpha)?;
                let truth = sample_grid(&spec, r)?;
                let (z, _) = gin_encode(encoder, g);
                let (error, mse_sorted) =
                    score_estimate(ckpt, Some(&z), &truth, r, metrics, solver, &opts)?;
                Ok(TrialResult {
                    trial: i,
                    graphon_index: i,
                    graphon: spec.name(),
                    error,
                    mse_sorted,
                    seconds: t0.elapsed().as_secs_f64(),
                })
            };
            (i, run())
        })
        .collect();
    trials.sort_by_key(|(i, _)| *i);
    let trials: Result<Vec<TrialResult>> = trials.into_iter().map(|(_, r)| r).collect();
    EvalReport::from_trials(trials?, r)
}

/// Alpha ranges of the two families do not overlap, so the label alone
/// identifies the generating graphon.
fn infer_family_spec(alpha: f64) -> Result<GraphonSpec> {
    if (0.1..=0.5).contains(&alpha) {
        Ok(GraphonSpec::TwoBlockRatio { alpha })
    } else if (0.05..0.1).contains(&alpha) {
        Ok(GraphonSpec::NoisyRing { alpha })
    } else {
        Err(Error::Data(format!("alpha {alpha} outside both family ranges")))
    }
}

pub(crate) fn write_report_files(out_dir: &Path, report: &EvalReport) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut csv = String::from("trial,graphon_index,error,mse_sorted\n");
    for t in &report.trials {
        let mse = t.mse_sorted.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{mse}\n", t.trial, t.graphon_index, t.error));
    }
    // timing varies run to run; it lives on a metadata line
    let secs: Vec<String> = report.trials.iter().map(|t| format!("{:.3}", t.seconds)).collect();
    csv.push_str(&format!("# seconds: {}\n", secs.join(",")));
    std::fs::write(out_dir.join("report.csv"), csv)?;

    let json = serde_json::to_string_pretty(report).map_err(Error::from)?;
    std::fs::write(out_dir.join("report.json"), json)?;
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let metrics = parse_metrics(&args.metric)?;
    let solver: GwSolver = args.solver.parse()?;
    let ckpts: Result<Vec<Checkpoint>> = args.ckpt.iter().map(load_checkpoint).collect();
    let ckpts = ckpts?;
    let report = match (&args.spec, &args.data) {
        (Some(spec), None) => {
            let SpecArg::Single(spec) = parse_spec(spec)? else {
                return Err(Error::InputDomain(
                    "family specs are evaluated against --data test sets".into(),
                ));
            };
            eval_single(&ckpts, &spec, args.resolution, &metrics, solver)?
        }
        (None, Some(data)) => {
            if ckpts.len() != 1 {
                return Err(Error::InputDomain(
                    "family evaluation takes exactly one checkpoint".into(),
                ));
            }
            let test = read_jsonl(data)?;
            eval_family(&ckpts[0], &test, args.resolution, &metrics, solver)?
        }
        _ => {
            return Err(Error::InputDomain(
                "pass exactly one of --spec or --data".into(),
            ))
        }
    };
    write_report_files(&args.out_dir, &report)?;
    println!(
        "mean error {:.6} +/- {:.6} over {} trials at resolution {} -> {}",
        report.mean,
        report.std,
        report.trials.len(),
        report.resolution,
        args.out_dir.display()
    );
    Ok(())
}

pub fn cmd_embed(args: &EmbedArgs) -> Result<()> {
    let ckpt = load_checkpoint(&args.ckpt)?;
    let encoder = ckpt.model.encoder().ok_or_else(|| {
        Error::InputDomain("checkpoint was trained without an encoder".into())
    })?;
    let ds = read_jsonl(&args.data)?;
    let d = encoder.latent_dim();
    let mut out = String::from("index,alpha");
    for k in 1..=d {
        out.push_str(&format!(",z{k}"));
    }
    out.push('\n');
    for (i, (g, meta)) in ds.graphs.iter().zip(&ds.meta).enumerate() {
        let (z, _) = gin_encode(encoder, g);
        let alpha = meta.alpha.map(|a| a.to_string()).unwrap_or_default();
        out.push_str(&format!("{i},{alpha}"));
        for v in z.iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    std::fs::write(&args.out, out)?;
    println!("wrote {} embeddings to {}", ds.len(), args.out.display());
    Ok(())
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let ckpt = load_checkpoint(&args.ckpt)?;
    let sizes = parse_sizes(&args.sizes)?;
    let mode = match args.mode.as_str() {
        "deterministic" => SampleMode::Deterministic,
        "stochastic" => SampleMode::Stochastic,
        other => {
            return Err(Error::InputDomain(format!(
                "unknown mode '{other}' (deterministic, stochastic)"
            )))
        }
    };
    let z: Option<Array1<f64>> = match (&args.z, args.z_index) {
        (Some(_), Some(_)) => {
            return Err(Error::InputDomain("pass --z or --z-index, not both".into()))
        }
        (Some(z), None) => {
            let vals: Result<Vec<f64>> = z
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InputDomain(format!("bad latent value '{p}'")))
                })
                .collect();
            Some(Array1::from_vec(vals?))
        }
        (None, Some(index)) => {
            let data = args.data.as_ref().ok_or_else(|| {
                Error::InputDomain("--z-index needs --data to take the code from".into())
            })?;
            let ds = read_jsonl(data)?;
            if index >= ds.len() {
                return Err(Error::InputDomain(format!(
                    "--z-index {index} out of range for {} graphs",
                    ds.len()
                )));
            }
            let encoder = ckpt.model.encoder().ok_or_else(|| {
                Error::InputDomain("checkpoint was trained without an encoder".into())
            })?;
            Some(gin_encode(encoder, &ds.graphs[index]).0)
        }
        (None, None) => None,
    };
    if let (Some(z), Some(d)) = (&z, ckpt.model.latent_dim()) {
        if z.len() != d {
            return Err(Error::InputDomain(format!(
                "latent vector has length {}, model expects {d}",
                z.len()
            )));
        }
    }

    let mut graphs = Vec::new();
    let mut meta = Vec::new();
    let stem = args
        .out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("generated")
        .to_string();
    for (i, &n) in sizes.iter().enumerate() {
        let seed = args.seed.wrapping_add(i as u64);
        let (graph, probs) = generate_graph(&ckpt.model, z.as_ref(), n, mode, seed)?;
        let grid_path = args.out.with_file_name(format!("{stem}_grid_{n}.csv"));
        let mut grid_csv = String::new();
        for row in probs.rows() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            grid_csv.push_str(&cells.join(","));
            grid_csv.push('\n');
        }
        std::fs::write(grid_path, grid_csv)?;
        graphs.push(graph);
        meta.push(crate::dataset::GraphMeta { alpha: None, seed });
    }
    let ds = Dataset {
        graphs,
        meta,
        provenance: crate::dataset::Provenance::File("generated".into()),
    };
    write_jsonl(&args.out, &ds)?;
    println!(
        "generated {} graphs (sizes {:?}) to {}",
        ds.len(),
        sizes,
        args.out.display()
    );
    Ok(())
}

/// Rows parsed back out of a report.csv.
struct ReportRow {
    graphon_index: usize,
    error: f64,
}

fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < 3 {
            return Err(Error::Data(format!("{name}:{}: short row", lineno + 1)));
        }
        rows.push(ReportRow {
            graphon_index: parts[1]
                .parse()
                .map_err(|_| Error::Data(format!("{name}:{}: bad index", lineno + 1)))?,
            error: parts[2]
                .parse()
                .map_err(|_| Error::Data(format!("{name}:{}: bad error", lineno + 1)))?,
        });
    }
    Ok(rows)
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    for path in &args.input {
        rows.extend(read_report_csv(path)?);
    }
    if rows.is_empty() {
        return Err(Error::Data("no report rows to aggregate".into()));
    }
    std::fs::create_dir_all(&args.out_dir)?;

    let mut by_graphon: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for row in &rows {
        by_graphon.entry(row.graphon_index).or_default().push(row.error);
    }
    let mut table = String::from("graphon  trials  mean      std\n");
    for (idx, errs) in &by_graphon {
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let std = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt();
        table.push_str(&format!("{idx:<8} {:<7} {mean:<9.4} {std:.4}\n", errs.len()));
    }
    print!("{table}");
    std::fs::write(args.out_dir.join("summary.txt"), &table)?;

    if let Some(emb_path) = &args.embeddings {
        let (points, alphas) = read_embeddings(emb_path)?;
        let svg = super::svg::scatter_svg(&points, &alphas);
        std::fs::write(args.out_dir.join("scatter.svg"), svg)?;
        println!("scatter with {} points -> {}", points.len(), args.out_dir.join("scatter.svg").display());
    }
    Ok(())
}

fn read_embeddings(path: &Path) -> Result<(Vec<(f64, f64)>, Vec<Option<f64>>)> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    let mut alphas = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < 3 {
            return Err(Error::Data(format!("{name}:{}: short row", lineno + 1)));
        }
        let alpha = if parts[1].is_empty() {
            None
        } else {
            Some(parts[1].parse().map_err(|_| {
                Error::Data(format!("{name}:{}: bad alpha", lineno + 1))
            })?)
        };
        let x: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Data(format!("{name}:{}: bad z1", lineno + 1)))?;
        let y: f64 = if parts.len() > 3 {
            parts[3]
                .parse()
                .map_err(|_| Error::Data(format!("{name}:{}: bad z2", lineno + 1)))?
        } else {
            0.0
        };
        points.push((x, y));
        alphas.push(alpha);
    }
    if points.is_empty() {
        return Err(Error::Data(format!("{name}: no embedding rows")));
    }
    Ok((points, alphas))
}

pub fn cmd_recipe(args: &RecipeArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.file)?;
    let recipe: super::ExperimentRecipe =
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("recipe: {e}")))?;
    let outputs = super::run_recipe(&recipe)?;
    println!(
        "recipe '{}' complete: checkpoint {}, report {}",
        recipe.name,
        outputs.checkpoint.display(),
        outputs.report_csv.display()
    );
    Ok(())
}
