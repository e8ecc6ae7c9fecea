//! Checkpoint files: a version-tagged JSON object mapping tensor names to
//! `{shape, row-major data}` plus the full training configuration. Floats
//! survive the trip bit-exactly (decimal shortest-roundtrip), so a loaded
//! model reproduces forward outputs to the last bit.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::ArrayViewMutD;
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::nn::{DiscreteConfig, DiscreteDecoderParams, GinParams, ModSirenParams, ParamTensors, SirenParams};

const FORMAT: &str = "graphon-ignr-checkpoint";
const VERSION: u32 = 1;

/// Trained parameters for one of the three objectives.
#[derive(Debug, Clone)]
pub enum ModelParams {
    Ignr {
        siren: SirenParams,
    },
    Cignr {
        encoder: GinParams,
        decoder: ModSirenParams,
    },
    Discrete {
        encoder: GinParams,
        decoder: DiscreteDecoderParams,
    },
}

impl ModelParams {
    pub fn latent_dim(&self) -> Option<usize> {
        match self {
            ModelParams::Ignr { .. } => None,
            ModelParams::Cignr { encoder, .. } | ModelParams::Discrete { encoder, .. } => {
                Some(encoder.latent_dim())
            }
        }
    }

    pub fn encoder(&self) -> Option<&GinParams> {
        match self {
            ModelParams::Ignr { .. } => None,
            ModelParams::Cignr { encoder, .. } | ModelParams::Discrete { encoder, .. } => {
                Some(encoder)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: ModelParams,
    pub config: TrainConfig,
    pub loss_history: Vec<f64>,
    pub rng_digest: String,
}

impl Checkpoint {
    pub fn new(model: ModelParams, config: TrainConfig, loss_history: Vec<f64>) -> Self {
        let rng_digest = run_digest(&config, &loss_history);
        Self {
            model,
            config,
            loss_history,
            rng_digest,
        }
    }
}

/// FNV-1a fingerprint of the run's seeded trajectory; stable across
/// platforms, unlike the std hasher.
fn run_digest(config: &TrainConfig, loss_history: &[f64]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(&config.seed.to_le_bytes());
    eat(&(config.epochs as u64).to_le_bytes());
    eat(&[config.shuffle as u8]);
    for v in loss_history {
        eat(&v.to_bits().to_le_bytes());
    }
    format!("{h:016x}")
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: TrainConfig,
    loss_history: Vec<f64>,
    rng_digest: String,
    tensors: BTreeMap<String, TensorRecord>,
}

fn collect<P: ParamTensors>(prefix: &str, p: &P, out: &mut BTreeMap<String, TensorRecord>) {
    for (name, t) in p.tensor_names().into_iter().zip(p.tensors()) {
        out.insert(
            format!("{prefix}.{name}"),
            TensorRecord {
                shape: t.shape().to_vec(),
                data: t.iter().copied().collect(),
            },
        );
    }
}

fn fill<P: ParamTensors>(
    prefix: &str,
    p: &mut P,
    tensors: &BTreeMap<String, TensorRecord>,
) -> Result<()> {
    let names = p.tensor_names();
    let mut views: Vec<ArrayViewMutD<'_, f64>> = p.tensors_mut();
    for (name, view) in names.iter().zip(views.iter_mut()) {
        let key = format!("{prefix}.{name}");
        let rec = tensors
            .get(&key)
            .ok_or_else(|| Error::Data(format!("checkpoint missing tensor '{key}'")))?;
        if rec.shape != view.shape() {
            return Err(Error::Data(format!(
                "tensor '{key}' has shape {:?}, expected {:?}",
                rec.shape,
                view.shape()
            )));
        }
        if rec.data.len() != view.len() {
            return Err(Error::Data(format!(
                "tensor '{key}' has {} values, expected {}",
                rec.data.len(),
                view.len()
            )));
        }
        for (dst, &src) in view.iter_mut().zip(rec.data.iter()) {
            *dst = src;
        }
    }
    Ok(())
}

pub fn save_checkpoint<P: AsRef<Path>>(path: P, ckpt: &Checkpoint) -> Result<()> {
    let mut tensors = BTreeMap::new();
    match &ckpt.model {
        ModelParams::Ignr { siren } => collect("siren", siren, &mut tensors),
        ModelParams::Cignr { encoder, decoder } => {
            collect("encoder", encoder, &mut tensors);
            collect("decoder", decoder, &mut tensors);
        }
        ModelParams::Discrete { encoder, decoder } => {
            collect("encoder", encoder, &mut tensors);
            collect("decoder", decoder, &mut tensors);
        }
    }
    let file = CheckpointFile {
        format: FORMAT.into(),
        version: VERSION,
        config: ckpt.config.clone(),
        loss_history: ckpt.loss_history.clone(),
        rng_digest: ckpt.rng_digest.clone(),
        tensors,
    };
    let out = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(out, &file)?;
    Ok(())
}

pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<Checkpoint> {
    let name = path.as_ref().display().to_string();
    let data = std::fs::read_to_string(&path)?;
    let file: CheckpointFile =
        serde_json::from_str(&data).map_err(|e| Error::Data(format!("{name}: {e}")))?;
    if file.format != FORMAT {
        return Err(Error::Data(format!(
            "{name}: not a checkpoint (format '{}')",
            file.format
        )));
    }
    if file.version != VERSION {
        return Err(Error::Data(format!(
            "{name}: unsupported checkpoint version {} (expected {VERSION})",
            file.version
        )));
    }
    let cfg = &file.config;
    let model = match cfg.objective {
        super::Objective::Ignr => {
            let mut siren = SirenParams::init(&cfg.siren_hidden, cfg.omega0, 0);
            fill("siren", &mut siren, &file.tensors)?;
            ModelParams::Ignr { siren }
        }
        super::Objective::Cignr => {
            let mut encoder = GinParams::init(cfg.gin_config(), 0);
            let mut decoder =
                ModSirenParams::init(&cfg.modsiren_widths, cfg.latent_dim, cfg.omega0, 0);
            fill("encoder", &mut encoder, &file.tensors)?;
            fill("decoder", &mut decoder, &file.tensors)?;
            ModelParams::Cignr { encoder, decoder }
        }
        super::Objective::Discrete => {
            let mut encoder = GinParams::init(cfg.gin_config(), 0);
            let mut decoder = DiscreteDecoderParams::init(
                DiscreteConfig {
                    latent_dim: cfg.latent_dim,
                    hidden: cfg.decoder_hidden.clone(),
                    resolution: cfg.decoder_resolution,
                },
                0,
            )?;
            fill("encoder", &mut encoder, &file.tensors)?;
            fill("decoder", &mut decoder, &file.tensors)?;
            ModelParams::Discrete { encoder, decoder }
        }
    };
    Ok(Checkpoint {
        model,
        config: file.config,
        loss_history: file.loss_history,
        rng_digest: file.rng_digest,
    })
}
