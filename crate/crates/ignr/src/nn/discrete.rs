//! Fixed-resolution baseline decoder: a bias-free ReLU MLP mapping the
//! latent code to the strict upper triangle of a K x K logit matrix. The
//! logits are mirrored (zero diagonal) and passed through a sigmoid, so the
//! decoded grid is symmetric by construction with the diagonal pinned at
//! 0.5. The layer shapes reproduce the reference parameter counts exactly
//! (e.g. 20224 for d=16, hidden [32, 64], K=24).

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use serde::{Deserialize, Serialize};

use super::{relu_limit, seeded_rng, sigmoid, uniform_matrix, ParamTensors};
use crate::error::{Error, Result};
use crate::graphon::GraphonGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteConfig {
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub resolution: usize,
}

impl DiscreteConfig {
    pub fn new(latent_dim: usize, resolution: usize) -> Self {
        Self {
            latent_dim,
            hidden: vec![32, 64],
            resolution,
        }
    }

    fn output_len(&self) -> usize {
        self.resolution * (self.resolution - 1) / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDecoderParams {
    /// Bias-free weight stack: d -> hidden... -> K(K-1)/2.
    pub weights: Vec<Array2<f64>>,
    pub config: DiscreteConfig,
}

impl DiscreteDecoderParams {
    pub fn init(config: DiscreteConfig, seed: u64) -> Result<Self> {
        if config.resolution < 2 || config.latent_dim == 0 {
            return Err(Error::InputDomain(format!(
                "decoder needs resolution >= 2 and a latent code, got K={} d={}",
                config.resolution, config.latent_dim
            )));
        }
        let mut rng = seeded_rng(seed);
        let mut weights = Vec::new();
        let mut fan_in = config.latent_dim;
        for &w in &config.hidden {
            weights.push(uniform_matrix(w, fan_in, relu_limit(fan_in), &mut rng));
            fan_in = w;
        }
        weights.push(uniform_matrix(
            config.output_len(),
            fan_in,
            relu_limit(fan_in),
            &mut rng,
        ));
        Ok(Self { weights, config })
    }
}

impl ParamTensors for DiscreteDecoderParams {
    fn tensor_names(&self) -> Vec<String> {
        (0..self.weights.len())
            .map(|i| format!("decoder.{i}.w"))
            .collect()
    }

    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        self.weights.iter().map(|w| w.view().into_dyn()).collect()
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        self.weights
            .iter_mut()
            .map(|w| w.view_mut().into_dyn())
            .collect()
    }
}

pub struct DiscreteTrace {
    z: Array1<f64>,
    /// Hidden pre-activations (before ReLU).
    pre: Vec<Array1<f64>>,
    /// Upper-triangle logits.
    logits: Array1<f64>,
    /// Decoded grid values.
    grid: Array2<f64>,
}

fn triangle_index(k: usize, p: usize, q: usize) -> usize {
    // strict upper triangle (p < q), row-major
    debug_assert!(p < q && q < k);
    p * k - p * (p + 1) / 2 + (q - p - 1)
}

/// Decode a latent code into a symmetric K x K grid.
pub fn discrete_decode(
    p: &DiscreteDecoderParams,
    z: &Array1<f64>,
) -> Result<(GraphonGrid, DiscreteTrace)> {
    if z.len() != p.config.latent_dim {
        return Err(Error::DimensionMismatch(format!(
            "latent code length {} vs latent_dim {}",
            z.len(),
            p.config.latent_dim
        )));
    }
    let k = p.config.resolution;
    let mut pre = Vec::with_capacity(p.config.hidden.len());
    let mut h = z.clone();
    for (i, w) in p.weights.iter().enumerate() {
        let out = w.dot(&h);
        if i + 1 < p.weights.len() {
            h = out.mapv(|v| v.max(0.0));
            pre.push(out);
        } else {
            h = out;
        }
    }
    let logits = h;
    let mut grid = Array2::zeros((k, k));
    for row in 0..k {
        grid[[row, row]] = 0.5; // sigmoid of the zero diagonal logit
        for col in (row + 1)..k {
            let v = sigmoid(logits[triangle_index(k, row, col)]);
            grid[[row, col]] = v;
            grid[[col, row]] = v;
        }
    }
    let trace = DiscreteTrace {
        z: z.clone(),
        pre,
        logits,
        grid: grid.clone(),
    };
    Ok((GraphonGrid::new(grid)?, trace))
}

/// Gradients of `<dgrid, decode(z)>` with respect to the weights and the
/// latent code. The diagonal of `dgrid` is ignored: no parameter feeds it.
pub fn discrete_backward(
    p: &DiscreteDecoderParams,
    trace: &DiscreteTrace,
    dgrid: &Array2<f64>,
) -> (DiscreteDecoderParams, Array1<f64>) {
    let k = p.config.resolution;
    assert_eq!(dgrid.nrows(), k, "upstream grid shape");
    let mut dlogits = Array1::zeros(trace.logits.len());
    for row in 0..k {
        for col in (row + 1)..k {
            let idx = triangle_index(k, row, col);
            let y = trace.grid[[row, col]];
            dlogits[idx] = (dgrid[[row, col]] + dgrid[[col, row]]) * y * (1.0 - y);
        }
    }

    let mut grad = p.zeroed();
    let mut dout = dlogits;
    for i in (0..p.weights.len()).rev() {
        let input: Array1<f64> = if i == 0 {
            trace.z.clone()
        } else {
            trace.pre[i - 1].mapv(|v| v.max(0.0))
        };
        grad.weights[i] = dout
            .clone()
            .insert_axis(Axis(1))
            .dot(&input.insert_axis(Axis(0)));
        let din = p.weights[i].t().dot(&dout);
        if i == 0 {
            return (grad, din);
        }
        dout = Array1::from_iter(
            din.iter()
                .zip(trace.pre[i - 1].iter())
                .map(|(&d, &pre)| if pre > 0.0 { d } else { 0.0 }),
        );
    }
    unreachable!("loop returns at i == 0")
}
