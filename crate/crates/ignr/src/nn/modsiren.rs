//! Latent-conditioned sine network: a synthesis stack whose sine
//! activations are gated elementwise by modulation variables computed from
//! a latent code.
//!
//! The modulation net is a ReLU MLP fed its own hidden state with the
//! latent code re-concatenated at every layer:
//!
//! ```text
//! a_1 = relu(W'_1 z + b'_1)
//! a_i = relu(W'_i [a_{i-1}; z] + b'_i)      i = 2..L
//! h_i = a_i .* sin(W_i h_{i-1} + b_i)
//! ```
//!
//! Layer widths follow the synthesis stack (48, 36, 24 by default), so the
//! gates line up with the hidden activations.

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};

use super::{
    relu_limit, seeded_rng, sigmoid, sine_limit, uniform_matrix, uniform_vector, ParamTensors,
};
use crate::error::{Error, Result};

pub const DEFAULT_WIDTHS: [usize; 3] = [48, 36, 24];

#[derive(Debug, Clone, PartialEq)]
pub struct ModSirenParams {
    /// Synthesis stack, first layer fed the 2-d coordinate.
    pub synthesis: Vec<(Array2<f64>, Array1<f64>)>,
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
    /// Modulation stack; `W'_1` has `d` columns, later layers
    /// `width + d`.
    pub modulation: Vec<(Array2<f64>, Array1<f64>)>,
    pub latent_dim: usize,
    pub omega0: f64,
}

impl ModSirenParams {
    pub fn init(widths: &[usize], latent_dim: usize, omega0: f64, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut synthesis = Vec::with_capacity(widths.len());
        let mut fan_in = 2usize;
        for (i, &width) in widths.iter().enumerate() {
            let w_limit = if i == 0 {
                1.0 / fan_in as f64
            } else {
                sine_limit(fan_in)
            };
            synthesis.push((
                uniform_matrix(width, fan_in, w_limit, &mut rng),
                uniform_vector(width, 1.0 / (fan_in as f64).sqrt(), &mut rng),
            ));
            fan_in = width;
        }
        let w_out = uniform_matrix(1, fan_in, sine_limit(fan_in), &mut rng);
        let b_out = uniform_vector(1, 1.0 / (fan_in as f64).sqrt(), &mut rng);

        let mut modulation = Vec::with_capacity(widths.len());
        let mut mod_in = latent_dim;
        for &width in widths {
            modulation.push((
                uniform_matrix(width, mod_in, relu_limit(mod_in), &mut rng),
                uniform_vector(width, 1.0 / (mod_in as f64).sqrt(), &mut rng),
            ));
            mod_in = width + latent_dim;
        }
        Self {
            synthesis,
            w_out,
            b_out,
            modulation,
            latent_dim,
            omega0,
        }
    }

    pub fn default_arch(latent_dim: usize, seed: u64) -> Self {
        Self::init(&DEFAULT_WIDTHS, latent_dim, 30.0, seed)
    }

    /// Number of weight-matrix entries, excluding bias vectors — the
    /// counting convention of the reference parameter tables
    /// (5304 + 108 d for the default stack).
    pub fn weight_param_count(&self) -> usize {
        self.synthesis
            .iter()
            .map(|(w, _)| w.len())
            .chain(self.modulation.iter().map(|(w, _)| w.len()))
            .sum::<usize>()
            + self.w_out.len()
    }
}

impl ParamTensors for ModSirenParams {
    fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.synthesis.len() {
            names.push(format!("synthesis.{i}.w"));
            names.push(format!("synthesis.{i}.b"));
        }
        names.push("out.w".into());
        names.push("out.b".into());
        for i in 0..self.modulation.len() {
            names.push(format!("modulation.{i}.w"));
            names.push(format!("modulation.{i}.b"));
        }
        names
    }

    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        let mut v = Vec::new();
        for (w, b) in &self.synthesis {
            v.push(w.view().into_dyn());
            v.push(b.view().into_dyn());
        }
        v.push(self.w_out.view().into_dyn());
        v.push(self.b_out.view().into_dyn());
        for (w, b) in &self.modulation {
            v.push(w.view().into_dyn());
            v.push(b.view().into_dyn());
        }
        v
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut v = Vec::new();
        for (w, b) in &mut self.synthesis {
            v.push(w.view_mut().into_dyn());
            v.push(b.view_mut().into_dyn());
        }
        v.push(self.w_out.view_mut().into_dyn());
        v.push(self.b_out.view_mut().into_dyn());
        for (w, b) in &mut self.modulation {
            v.push(w.view_mut().into_dyn());
            v.push(b.view_mut().into_dyn());
        }
        v
    }
}

pub struct ModSirenTrace {
    z: Array1<f64>,
    input: Array2<f64>,
    /// Modulation pre-activations and gates.
    mod_pre: Vec<Array1<f64>>,
    gates: Vec<Array1<f64>>,
    /// Synthesis scaled pre-activations, sines, and gated hiddens.
    pre: Vec<Array2<f64>>,
    sines: Vec<Array2<f64>>,
    hidden: Vec<Array2<f64>>,
    output: Array1<f64>,
}

impl ModSirenTrace {
    pub fn output(&self) -> &Array1<f64> {
        &self.output
    }

    pub fn gates(&self) -> &[Array1<f64>] {
        &self.gates
    }
}

fn coords_matrix(coords: &[(f64, f64)]) -> Array2<f64> {
    let mut x = Array2::zeros((coords.len(), 2));
    for (row, &(a, b)) in coords.iter().enumerate() {
        x[[row, 0]] = a;
        x[[row, 1]] = b;
    }
    x
}

/// Evaluate the conditional network at a latent code on a coordinate batch.
pub fn modsiren_forward(
    p: &ModSirenParams,
    z: &Array1<f64>,
    coords: &[(f64, f64)],
) -> Result<(Array1<f64>, ModSirenTrace)> {
    if z.len() != p.latent_dim {
        return Err(Error::DimensionMismatch(format!(
            "latent code length {} vs latent_dim {}",
            z.len(),
            p.latent_dim
        )));
    }
    let input = coords_matrix(coords);

    // Modulation path (coordinate-independent).
    let mut mod_pre = Vec::with_capacity(p.modulation.len());
    let mut gates: Vec<Array1<f64>> = Vec::with_capacity(p.modulation.len());
    for (i, (w, b)) in p.modulation.iter().enumerate() {
        let fed: Array1<f64> = if i == 0 {
            z.clone()
        } else {
            concat(&gates[i - 1], z)
        };
        let pre = w.dot(&fed) + b;
        gates.push(pre.mapv(|v| v.max(0.0)));
        mod_pre.push(pre);
    }

    // Synthesis path.
    let mut pre = Vec::with_capacity(p.synthesis.len());
    let mut sines = Vec::with_capacity(p.synthesis.len());
    let mut hidden = Vec::with_capacity(p.synthesis.len());
    let mut h = input.clone();
    for (i, (w, b)) in p.synthesis.iter().enumerate() {
        let mut zpre = h.dot(&w.t()) + b;
        if i == 0 {
            zpre *= p.omega0;
        }
        let s = zpre.mapv(f64::sin);
        h = &s * &gates[i];
        pre.push(zpre);
        sines.push(s);
        hidden.push(h.clone());
    }
    let logits = h.dot(&p.w_out.t());
    let output = Array1::from_iter(logits.column(0).iter().map(|&l| sigmoid(l + p.b_out[0])));
    let trace = ModSirenTrace {
        z: z.clone(),
        input,
        mod_pre,
        gates,
        pre,
        sines,
        hidden,
        output: output.clone(),
    };
    Ok((output, trace))
}

fn concat(a: &Array1<f64>, b: &Array1<f64>) -> Array1<f64> {
    Array1::from_iter(a.iter().chain(b.iter()).copied())
}

/// Gradients of `sum_k upstream[k] * f(z, coords[k])` with respect to all
/// parameters and the latent code.
pub fn modsiren_backward(
    p: &ModSirenParams,
    trace: &ModSirenTrace,
    upstream: &Array1<f64>,
) -> (ModSirenParams, Array1<f64>) {
    assert_eq!(upstream.len(), trace.output.len(), "upstream length");
    let mut grad = p.zeroed();
    let last = p.synthesis.len() - 1;

    let dlogit = Array1::from_iter(
        upstream
            .iter()
            .zip(trace.output.iter())
            .map(|(&u, &y)| u * y * (1.0 - y)),
    );
    let dlogit2 = dlogit.clone().insert_axis(Axis(1));
    grad.w_out = dlogit2.t().dot(&trace.hidden[last]);
    grad.b_out[0] = dlogit.sum();
    let mut dh = dlogit2.dot(&p.w_out);

    // synthesis backward, collecting gate gradients per layer
    let mut dgates: Vec<Array1<f64>> = vec![Array1::zeros(0); p.synthesis.len()];
    for i in (0..=last).rev() {
        // h_i = gate_i .* sin(z_i)
        let dgate = (&dh * &trace.sines[i]).sum_axis(Axis(0));
        dgates[i] = dgate;
        let ds = &dh * &trace.gates[i];
        let mut dz = &ds * &trace.pre[i].mapv(f64::cos);
        if i == 0 {
            dz *= p.omega0;
        }
        let below = if i == 0 {
            &trace.input
        } else {
            &trace.hidden[i - 1]
        };
        grad.synthesis[i].0 = dz.t().dot(below);
        grad.synthesis[i].1 = dz.sum_axis(Axis(0));
        if i > 0 {
            dh = dz.dot(&p.synthesis[i].0);
        }
    }

    // modulation backward, top layer down, accumulating into earlier gates
    // and the latent code
    let d = p.latent_dim;
    let mut dz_latent = Array1::zeros(d);
    for i in (0..p.modulation.len()).rev() {
        let dpre = Array1::from_iter(
            dgates[i]
                .iter()
                .zip(trace.mod_pre[i].iter())
                .map(|(&g, &pre)| if pre > 0.0 { g } else { 0.0 }),
        );
        let fed: Array1<f64> = if i == 0 {
            trace.z.clone()
        } else {
            concat(&trace.gates[i - 1], &trace.z)
        };
        grad.modulation[i].0 = dpre
            .clone()
            .insert_axis(Axis(1))
            .dot(&fed.insert_axis(Axis(0)));
        grad.modulation[i].1 = dpre.clone();
        let dfed = p.modulation[i].0.t().dot(&dpre);
        if i == 0 {
            dz_latent += &dfed;
        } else {
            let w = trace.gates[i - 1].len();
            for k in 0..w {
                dgates[i - 1][k] += dfed[k];
            }
            for k in 0..d {
                dz_latent[k] += dfed[w + k];
            }
        }
    }
    (grad, dz_latent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::siren::{siren_forward, SirenParams};
    use crate::nn::{finite_diff_grad, gradient_agreement};

    #[test]
    fn weight_count_matches_reference_tables() {
        // 5304 + 108 d for the 48/36/24 stack
        for (d, expected) in [(2usize, 5520usize), (16, 7032), (32, 8760)] {
            let p = ModSirenParams::default_arch(d, 0);
            assert_eq!(p.weight_param_count(), expected, "d={d}");
        }
    }

    #[test]
    fn closed_gates_give_constant_output() {
        let mut p = ModSirenParams::default_arch(4, 2);
        for (w, b) in &mut p.modulation {
            w.fill(0.0);
            b.fill(0.0);
        }
        p.b_out[0] = 0.8;
        let z = Array1::zeros(4);
        let (out, _) = modsiren_forward(&p, &z, &[(0.1, 0.9), (0.5, 0.5)]).unwrap();
        let expected = 1.0 / (1.0 + (-0.8_f64).exp());
        assert!((out[0] - expected).abs() <= 1e-15);
        assert!((out[1] - expected).abs() <= 1e-15);
    }

    #[test]
    fn unit_gates_reduce_to_plain_siren() {
        let widths = [6, 5, 4];
        let p = ModSirenParams::init(&widths, 3, 30.0, 9);
        let mut gated = p.clone();
        for (w, b) in &mut gated.modulation {
            w.fill(0.0);
            b.fill(1.0);
        }
        let plain = SirenParams {
            layers: p.synthesis.clone(),
            w_out: p.w_out.clone(),
            b_out: p.b_out.clone(),
            omega0: p.omega0,
        };
        let coords = [(0.2, 0.3), (0.9, 0.1), (0.6, 0.6)];
        let z = Array1::zeros(3);
        let (out, _) = modsiren_forward(&gated, &z, &coords).unwrap();
        let reference = siren_forward(&plain, &coords);
        for (a, b) in out.iter().zip(reference.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn constant_positive_gates_match_scaled_siren() {
        // z = 0 and positive modulation biases c_i turn each layer into
        // c_i * sin(...); folding c_i into the next layer's weights gives an
        // equivalent plain network.
        let widths = [5, 4, 3];
        let mut p = ModSirenParams::init(&widths, 2, 30.0, 21);
        let biases = [0.7, 1.9, 0.4];
        for ((w, b), c) in p.modulation.iter_mut().zip(biases) {
            w.fill(0.0);
            b.fill(c);
        }
        let mut folded = SirenParams {
            layers: p.synthesis.clone(),
            w_out: p.w_out.clone(),
            b_out: p.b_out.clone(),
            omega0: p.omega0,
        };
        for i in 1..widths.len() {
            for col in 0..widths[i - 1] {
                for row in 0..widths[i] {
                    folded.layers[i].0[[row, col]] *= biases[i - 1];
                }
            }
        }
        for col in 0..widths[2] {
            folded.w_out[[0, col]] *= biases[2];
        }
        let coords = [(0.05, 0.95), (0.4, 0.6)];
        let (out, _) = modsiren_forward(&p, &Array1::zeros(2), &coords).unwrap();
        let reference = siren_forward(&folded, &coords);
        for (a, b) in out.iter().zip(reference.iter()) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_wrong_latent_dimension() {
        let p = ModSirenParams::default_arch(4, 0);
        assert!(modsiren_forward(&p, &Array1::zeros(3), &[(0.0, 0.0)]).is_err());
    }

    #[test]
    fn backward_matches_finite_differences_params_and_latent() {
        for seed in 0..3 {
            let p = ModSirenParams::init(&[5, 4, 3], 3, 30.0, seed);
            let coords = [(0.3, 0.8), (0.7, 0.2)];
            let z = ndarray::array![0.4, -0.9, 0.2];
            let upstream = ndarray::array![1.1, -0.6];
            let (_, trace) = modsiren_forward(&p, &z, &coords).unwrap();
            let (analytic, dz) = modsiren_backward(&p, &trace, &upstream);

            let fd = finite_diff_grad(
                &mut |q: &ModSirenParams| {
                    let (out, _) = modsiren_forward(q, &z, &coords).unwrap();
                    out.dot(&upstream)
                },
                &p,
                1e-6,
            )
            .unwrap();
            let frac = gradient_agreement(&analytic.tensors(), &fd, 1e-5);
            assert!(frac >= 0.99, "seed {seed}: parameter agreement {frac}");

            // latent gradient by direct perturbation
            for k in 0..z.len() {
                let mut zp = z.clone();
                zp[k] += 1e-6;
                let (up, _) = modsiren_forward(&p, &zp, &coords).unwrap();
                zp[k] -= 2e-6;
                let (down, _) = modsiren_forward(&p, &zp, &coords).unwrap();
                let fd = (up.dot(&upstream) - down.dot(&upstream)) / 2e-6;
                let denom = dz[k].abs().max(fd.abs()).max(1e-7);
                assert!(
                    (dz[k] - fd).abs() / denom <= 1e-5,
                    "dz[{k}] {} vs fd {fd}",
                    dz[k]
                );
            }
        }
    }

    #[test]
    fn zero_upstream_and_closed_gate_block_gradients() {
        let p = ModSirenParams::default_arch(3, 5);
        let z = ndarray::array![0.1, 0.2, 0.3];
        let coords = [(0.25, 0.75)];
        let (_, trace) = modsiren_forward(&p, &z, &coords).unwrap();
        let (g, dz) = modsiren_backward(&p, &trace, &Array1::zeros(1));
        assert!(g.tensors().iter().all(|t| t.iter().all(|&x| x == 0.0)));
        assert!(dz.iter().all(|&x| x == 0.0));

        // closed gates: synthesis gradients below the gate vanish
        let mut closed = p.clone();
        for (w, b) in &mut closed.modulation {
            w.fill(0.0);
            b.fill(-1.0); // relu pre-activations all negative
        }
        let (_, trace) = modsiren_forward(&closed, &z, &coords).unwrap();
        let (g, _) = modsiren_backward(&closed, &trace, &ndarray::array![1.0]);
        for (w, b) in &g.synthesis {
            assert!(w.iter().all(|&x| x == 0.0));
            assert!(b.iter().all(|&x| x == 0.0));
        }
    }
}
