//! Experiment recipes: one JSON file that pins a full gen -> train -> eval
//! pipeline, seeds included, so every artifact is reproducible
//! byte-for-byte on a given platform.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::commands;
use crate::dataset::write_jsonl;
use crate::error::{Error, Result};
use crate::train::{save_checkpoint, TrainConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenStage {
    /// Spec string as accepted by `gen --spec`.
    pub spec: String,
    pub sizes: Option<Vec<usize>>,
    pub count: Option<usize>,
    pub seed: u64,
    /// Train on the first `split` graphs and evaluate on the rest
    /// (family pipelines).
    pub split: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalStage {
    pub resolution: usize,
    /// Comma-separated metric list.
    pub metrics: String,
    pub solver: String,
}

/// A named pipeline with every knob inlined.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecipe {
    pub name: String,
    pub out_dir: PathBuf,
    pub gen: GenStage,
    /// Flat key = value training options (same keys as the config file).
    pub train: BTreeMap<String, String>,
    pub eval: EvalStage,
}

/// Paths of everything a recipe produced.
pub struct RecipeOutputs {
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub loss_history_csv: PathBuf,
    pub report_csv: PathBuf,
    pub report_json: PathBuf,
}

pub fn run_recipe(recipe: &ExperimentRecipe) -> Result<RecipeOutputs> {
    std::fs::create_dir_all(&recipe.out_dir)?;
    let dataset_path = recipe.out_dir.join("dataset.jsonl");
    let ckpt_path = recipe.out_dir.join("model.ckpt.json");

    // gen
    let full = match commands::parse_spec(&recipe.gen.spec)? {
        commands::SpecArg::Single(spec) => {
            let sizes = recipe.gen.sizes.as_ref().ok_or_else(|| {
                Error::InputDomain("single-graphon recipes need gen.sizes".into())
            })?;
            crate::dataset::make_dataset_single(&spec, sizes, recipe.gen.seed)?
        }
        commands::SpecArg::Family(family) => {
            let count = recipe.gen.count.ok_or_else(|| {
                Error::InputDomain("family recipes need gen.count".into())
            })?;
            crate::dataset::make_dataset_family(family, count, recipe.gen.seed)?
        }
    };
    write_jsonl(&dataset_path, &full)?;

    let (train_ds, test_ds) = match recipe.gen.split {
        Some(k) => {
            let (a, b) = full.split(k)?;
            (a, Some(b))
        }
        None => (full, None),
    };

    // train
    let mut cfg = TrainConfig::from_key_values("")?;
    // apply objective first so later keys override its defaults
    if let Some(objective) = recipe.train.get("objective") {
        cfg = TrainConfig::from_key_values(&format!("objective = {objective}\n"))?;
    }
    for (key, value) in &recipe.train {
        cfg.apply_key_value(key, value)?;
    }
    cfg.validate()?;
    let ckpt = commands::run_training(&train_ds, &cfg)?;
    let loss_csv = recipe.out_dir.join("loss_history.csv");
    let mut text = String::from("epoch,mean_gw2\n");
    for (epoch, loss) in ckpt.loss_history.iter().enumerate() {
        text.push_str(&format!("{epoch},{loss}\n"));
    }
    std::fs::write(&loss_csv, text)?;
    save_checkpoint(&ckpt_path, &ckpt)?;

    // eval
    let metrics = commands::parse_metrics(&recipe.eval.metrics)?;
    let solver = recipe.eval.solver.parse()?;
    let report = match (&test_ds, commands::parse_spec(&recipe.gen.spec)?) {
        (Some(test), _) => {
            commands::eval_family(&ckpt, test, recipe.eval.resolution, &metrics, solver)?
        }
        (None, commands::SpecArg::Single(spec)) => commands::eval_single(
            std::slice::from_ref(&ckpt),
            &spec,
            recipe.eval.resolution,
            &metrics,
            solver,
        )?,
        (None, commands::SpecArg::Family(_)) => {
            return Err(Error::InputDomain(
                "family recipes need gen.split for a held-out test set".into(),
            ))
        }
    };
    commands::write_report_files(&recipe.out_dir, &report)?;

    Ok(RecipeOutputs {
        dataset: dataset_path,
        checkpoint: ckpt_path,
        loss_history_csv: loss_csv,
        report_csv: recipe.out_dir.join("report.csv"),
        report_json: recipe.out_dir.join("report.json"),
    })
}
