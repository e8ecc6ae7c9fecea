//! Graph isomorphism network encoder producing graph-level latent codes.
//!
//! Each message-passing layer aggregates `(1 + eps) x_v + sum_{u ~ v} x_u`
//! and pushes the result through a two-layer ReLU MLP; global average
//! pooling followed by a linear readout yields the code. Sum aggregation
//! and mean pooling make the embedding exactly permutation invariant.

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use serde::{Deserialize, Serialize};

use super::{relu_limit, seeded_rng, uniform_matrix, uniform_vector, ParamTensors};
use crate::graphon::Graph;

/// Scalar feature each node starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFeature {
    /// degree(v) / n — informative for attribute-free graphs.
    #[default]
    ScaledDegree,
    /// Constant 1 for every node.
    ConstantOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GinConfig {
    pub layers: usize,
    pub width: usize,
    pub latent_dim: usize,
    pub input_feature: InputFeature,
}

impl GinConfig {
    pub fn new(latent_dim: usize) -> Self {
        Self {
            layers: 3,
            width: 32,
            latent_dim,
            input_feature: InputFeature::ScaledDegree,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GinLayer {
    pub eps: Array1<f64>, // length 1, learnable
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GinParams {
    pub layers: Vec<GinLayer>,
    pub readout_w: Array2<f64>, // d x width
    pub readout_b: Array1<f64>, // d
    pub config: GinConfig,
}

impl GinParams {
    pub fn init(config: GinConfig, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut layers = Vec::with_capacity(config.layers);
        let mut fan_in = 1usize;
        for _ in 0..config.layers {
            let w = config.width;
            layers.push(GinLayer {
                eps: Array1::zeros(1),
                w1: uniform_matrix(w, fan_in, relu_limit(fan_in), &mut rng),
                b1: uniform_vector(w, 1.0 / (fan_in as f64).sqrt(), &mut rng),
                w2: uniform_matrix(w, w, relu_limit(w), &mut rng),
                b2: uniform_vector(w, 1.0 / (w as f64).sqrt(), &mut rng),
            });
            fan_in = w;
        }
        let readout_w = uniform_matrix(config.latent_dim, fan_in, relu_limit(fan_in), &mut rng);
        let readout_b = uniform_vector(config.latent_dim, 1.0 / (fan_in as f64).sqrt(), &mut rng);
        Self {
            layers,
            readout_w,
            readout_b,
            config,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }
}

impl ParamTensors for GinParams {
    fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.layers.len() {
            names.push(format!("gin.{i}.eps"));
            names.push(format!("gin.{i}.w1"));
            names.push(format!("gin.{i}.b1"));
            names.push(format!("gin.{i}.w2"));
            names.push(format!("gin.{i}.b2"));
        }
        names.push("readout.w".into());
        names.push("readout.b".into());
        names
    }

    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        let mut v = Vec::new();
        for l in &self.layers {
            v.push(l.eps.view().into_dyn());
            v.push(l.w1.view().into_dyn());
            v.push(l.b1.view().into_dyn());
            v.push(l.w2.view().into_dyn());
            v.push(l.b2.view().into_dyn());
        }
        v.push(self.readout_w.view().into_dyn());
        v.push(self.readout_b.view().into_dyn());
        v
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut v = Vec::new();
        for l in &mut self.layers {
            v.push(l.eps.view_mut().into_dyn());
            v.push(l.w1.view_mut().into_dyn());
            v.push(l.b1.view_mut().into_dyn());
            v.push(l.w2.view_mut().into_dyn());
            v.push(l.b2.view_mut().into_dyn());
        }
        v.push(self.readout_w.view_mut().into_dyn());
        v.push(self.readout_b.view_mut().into_dyn());
        v
    }
}

pub struct GinTrace {
    /// Layer inputs X_i (n x w_in), including the initial features.
    inputs: Vec<Array2<f64>>,
    /// Aggregated messages S_i = (1 + eps) X + A X.
    aggregated: Vec<Array2<f64>>,
    /// MLP pre-activations.
    pre1: Vec<Array2<f64>>,
    pre2: Vec<Array2<f64>>,
    /// Mean-pooled features before RMS normalization, and the RMS itself.
    pooled: Array1<f64>,
    rms: f64,
}

/// Encode a graph into its latent code, keeping the trace for backward.
pub fn gin_encode(p: &GinParams, g: &Graph) -> (Array1<f64>, GinTrace) {
    let n = g.n();
    let features = match p.config.input_feature {
        InputFeature::ScaledDegree => g.scaled_degrees().insert_axis(Axis(1)),
        InputFeature::ConstantOne => Array2::from_elem((n, 1), 1.0),
    };
    let adj = g.adjacency();

    let mut inputs = Vec::with_capacity(p.layers.len());
    let mut aggregated = Vec::with_capacity(p.layers.len());
    let mut pre1 = Vec::with_capacity(p.layers.len());
    let mut pre2 = Vec::with_capacity(p.layers.len());
    let mut x = features;
    for layer in &p.layers {
        inputs.push(x.clone());
        let s = &x * (1.0 + layer.eps[0]) + adj.dot(&x);
        let p1 = s.dot(&layer.w1.t()) + &layer.b1;
        let r1 = p1.mapv(|v| v.max(0.0));
        let p2 = r1.dot(&layer.w2.t()) + &layer.b2;
        x = p2.mapv(|v| v.max(0.0));
        aggregated.push(s);
        pre1.push(p1);
        pre2.push(p2);
    }
    let pooled = x.mean_axis(Axis(0)).expect("nonempty graph");
    // Sum aggregation grows activations by a degree factor per layer; RMS
    // normalization of the pooled vector keeps the code scale independent
    // of graph size and density (the batch-free counterpart of the batch
    // normalization the reference GIN relies on).
    let rms = (pooled.dot(&pooled) / pooled.len() as f64 + 1e-12).sqrt();
    let z = p.readout_w.dot(&(&pooled / rms)) + &p.readout_b;
    (
        z,
        GinTrace {
            inputs,
            aggregated,
            pre1,
            pre2,
            pooled,
            rms,
        },
    )
}

/// Gradients of `<dz, encode(g)>` with respect to the encoder parameters.
pub fn gin_backward(p: &GinParams, g: &Graph, trace: &GinTrace, dz: &Array1<f64>) -> GinParams {
    let n = g.n();
    let adj = g.adjacency();
    let mut grad = p.zeroed();

    let normalized = &trace.pooled / trace.rms;
    grad.readout_w = dz
        .clone()
        .insert_axis(Axis(1))
        .dot(&normalized.clone().insert_axis(Axis(0)));
    grad.readout_b = dz.clone();
    let dnorm = p.readout_w.t().dot(dz);
    // y = p / rms with rms^2 = mean(p^2) + eps:
    // dL/dp = u/rms - p <u, p> / (width rms^3)
    let width = trace.pooled.len() as f64;
    let inner = dnorm.dot(&trace.pooled);
    let dpooled =
        &dnorm / trace.rms - &(&trace.pooled * (inner / (width * trace.rms.powi(3))));

    // mean pooling spreads the gradient uniformly over nodes
    let mut dx = Array2::from_shape_fn((n, dpooled.len()), |(_, c)| dpooled[c] / n as f64);

    for (i, layer) in p.layers.iter().enumerate().rev() {
        let dp2 = &dx * &trace.pre2[i].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let r1 = trace.pre1[i].mapv(|v| v.max(0.0));
        grad.layers[i].w2 = dp2.t().dot(&r1);
        grad.layers[i].b2 = dp2.sum_axis(Axis(0));
        let dr1 = dp2.dot(&layer.w2);
        let dp1 = &dr1 * &trace.pre1[i].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        grad.layers[i].w1 = dp1.t().dot(&trace.aggregated[i]);
        grad.layers[i].b1 = dp1.sum_axis(Axis(0));
        let ds = dp1.dot(&layer.w1);
        grad.layers[i].eps[0] = trace.inputs[i]
            .iter()
            .zip(ds.iter())
            .map(|(x, d)| x * d)
            .sum();
        if i > 0 {
            dx = &ds * (1.0 + layer.eps[0]) + adj.dot(&ds);
        }
    }
    grad
}
