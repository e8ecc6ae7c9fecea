//! Sine-activated coordinate network mapping `(x, y)` to an edge
//! probability.
//!
//! Hidden layers compute `sin(W h + b)`, with the first pre-activation
//! scaled by `omega0`; the output layer applies a sigmoid. Sampled on the
//! regular grid, the network *is* the current graphon estimate.

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};

use super::{seeded_rng, sigmoid, sine_limit, uniform_matrix, uniform_vector, ParamTensors};

#[derive(Debug, Clone, PartialEq)]
pub struct SirenParams {
    /// Hidden layers: `(W_i, b_i)` with `W_1` taking the 2-d coordinate.
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
    /// Output layer onto a single logit.
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
    /// Frequency scale applied to the first pre-activation only.
    pub omega0: f64,
}

impl SirenParams {
    /// Seeded initialization: first layer `U(-1/2, 1/2)` (fan-in 2), later
    /// sine layers by the `sqrt(6/fan_in)` rule, biases `U(-1/sqrt(fan_in),
    /// 1/sqrt(fan_in))`.
    pub fn init(hidden: &[usize], omega0: f64, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut layers = Vec::with_capacity(hidden.len());
        let mut fan_in = 2usize;
        for (i, &width) in hidden.iter().enumerate() {
            let w_limit = if i == 0 {
                1.0 / fan_in as f64
            } else {
                sine_limit(fan_in)
            };
            let b_limit = 1.0 / (fan_in as f64).sqrt();
            layers.push((
                uniform_matrix(width, fan_in, w_limit, &mut rng),
                uniform_vector(width, b_limit, &mut rng),
            ));
            fan_in = width;
        }
        let w_out = uniform_matrix(1, fan_in, sine_limit(fan_in), &mut rng);
        let b_out = uniform_vector(1, 1.0 / (fan_in as f64).sqrt(), &mut rng);
        Self {
            layers,
            w_out,
            b_out,
            omega0,
        }
    }

    /// The default single-graphon architecture: three hidden layers of 20.
    pub fn default_arch(seed: u64) -> Self {
        Self::init(&[20, 20, 20], 30.0, seed)
    }
}

impl ParamTensors for SirenParams {
    fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.layers.len() {
            names.push(format!("layers.{i}.w"));
            names.push(format!("layers.{i}.b"));
        }
        names.push("out.w".into());
        names.push("out.b".into());
        names
    }

    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        let mut v = Vec::new();
        for (w, b) in &self.layers {
            v.push(w.view().into_dyn());
            v.push(b.view().into_dyn());
        }
        v.push(self.w_out.view().into_dyn());
        v.push(self.b_out.view().into_dyn());
        v
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut v = Vec::new();
        for (w, b) in &mut self.layers {
            v.push(w.view_mut().into_dyn());
            v.push(b.view_mut().into_dyn());
        }
        v.push(self.w_out.view_mut().into_dyn());
        v.push(self.b_out.view_mut().into_dyn());
        v
    }
}

/// Activations retained for the backward pass.
pub struct SirenTrace {
    /// n x 2 coordinate batch.
    input: Array2<f64>,
    /// Scaled pre-activations `Z_i` (what the sine actually sees).
    pre: Vec<Array2<f64>>,
    /// Hidden activations `H_i = sin(Z_i)`.
    hidden: Vec<Array2<f64>>,
    /// Sigmoid outputs.
    output: Array1<f64>,
}

impl SirenTrace {
    pub fn output(&self) -> &Array1<f64> {
        &self.output
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

/// Evaluate the network on a batch of coordinates.
pub fn siren_forward(p: &SirenParams, coords: &[(f64, f64)]) -> Array1<f64> {
    siren_forward_trace(p, coords).output
}

/// Forward pass that retains the activations needed by
/// [`siren_backward_trace`].
pub fn siren_forward_trace(p: &SirenParams, coords: &[(f64, f64)]) -> SirenTrace {
    let input = coords_matrix(coords);
    let mut pre = Vec::with_capacity(p.layers.len());
    let mut hidden = Vec::with_capacity(p.layers.len());
    let mut h = input.clone();
    for (i, (w, b)) in p.layers.iter().enumerate() {
        let mut z = h.dot(&w.t()) + b;
        if i == 0 {
            z *= p.omega0;
        }
        h = z.mapv(f64::sin);
        pre.push(z);
        hidden.push(h.clone());
    }
    let logits = h.dot(&p.w_out.t());
    let output = Array1::from_iter(
        logits
            .column(0)
            .iter()
            .map(|&l| sigmoid(l + p.b_out[0])),
    );
    SirenTrace {
        input,
        pre,
        hidden,
        output,
    }
}

/// Gradients of `sum_k upstream[k] * f(coords[k])` with respect to every
/// parameter tensor, recomputing the forward pass internally.
pub fn siren_backward(
    p: &SirenParams,
    coords: &[(f64, f64)],
    upstream: &Array1<f64>,
) -> SirenParams {
    let trace = siren_forward_trace(p, coords);
    siren_backward_trace(p, &trace, upstream)
}

/// Backward pass from a retained trace.
pub fn siren_backward_trace(
    p: &SirenParams,
    trace: &SirenTrace,
    upstream: &Array1<f64>,
) -> SirenParams {
    assert_eq!(upstream.len(), trace.output.len(), "upstream length");
    let mut grad = p.zeroed();
    let last = p.layers.len() - 1;

    // d/dlogit of sigmoid
    let dlogit =
        Array1::from_iter(upstream.iter().zip(trace.output.iter()).map(|(&u, &y)| {
            u * y * (1.0 - y)
        }));
    let dlogit2 = dlogit.clone().insert_axis(Axis(1));
    grad.w_out = dlogit2.t().dot(&trace.hidden[last]);
    grad.b_out[0] = dlogit.sum();
    let mut dh = dlogit2.dot(&p.w_out);

    for i in (0..=last).rev() {
        let mut dz = &dh * &trace.pre[i].mapv(f64::cos);
        if i == 0 {
            dz *= p.omega0;
        }
        let below = if i == 0 { &trace.input } else { &trace.hidden[i - 1] };
        grad.layers[i].0 = dz.t().dot(below);
        grad.layers[i].1 = dz.sum_axis(Axis(0));
        if i > 0 {
            dh = dz.dot(&p.layers[i].0);
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::coordinate_grid;
    use crate::nn::{finite_diff_grad, gradient_agreement};

    #[test]
    fn zero_params_give_half() {
        let mut p = SirenParams::default_arch(0);
        for mut t in p.tensors_mut() {
            t.fill(0.0);
        }
        let out = siren_forward(&p, &[(0.3, 0.7), (0.0, 0.0)]);
        assert_eq!(out[0], 0.5);
        assert_eq!(out[1], 0.5);
    }

    #[test]
    fn saturated_output_bias() {
        let mut p = SirenParams::default_arch(1);
        p.w_out.fill(0.0);
        p.b_out[0] = 30.0;
        let out = siren_forward(&p, &[(0.5, 0.5)]);
        assert!(out[0] >= 0.9999);
    }

    #[test]
    fn matches_straight_line_reimplementation() {
        let p = SirenParams::default_arch(7);
        let (x, y) = (0.37, 0.81);
        // scalar re-evaluation with plain loops
        let mut h = vec![x, y];
        for (i, (w, b)) in p.layers.iter().enumerate() {
            let mut next = vec![0.0; w.nrows()];
            for r in 0..w.nrows() {
                let mut acc = b[r];
                for c in 0..w.ncols() {
                    acc += w[[r, c]] * h[c];
                }
                if i == 0 {
                    acc *= p.omega0;
                }
                next[r] = acc.sin();
            }
            h = next;
        }
        let mut logit = p.b_out[0];
        for c in 0..h.len() {
            logit += p.w_out[[0, c]] * h[c];
        }
        let expected = 1.0 / (1.0 + (-logit).exp());
        let got = siren_forward(&p, &[(x, y)])[0];
        assert!((got - expected).abs() <= 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn outputs_stay_in_unit_interval() {
        for seed in 0..5 {
            let p = SirenParams::default_arch(seed);
            let coords = coordinate_grid(14).unwrap();
            let out = siren_forward(&p, &coords);
            assert!(out.iter().all(|&v| v > 0.0 && v < 1.0 && v.is_finite()));
        }
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let p = SirenParams::default_arch(3);
        let coords = [(0.1, 0.2), (0.8, 0.4)];
        let g = siren_backward(&p, &coords, &Array1::zeros(2));
        assert!(g.tensors().iter().all(|t| t.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..3 {
            let p = SirenParams::init(&[6, 5], 30.0, seed);
            let coords = [(0.15, 0.85), (0.5, 0.25), (0.9, 0.9)];
            let upstream = ndarray::array![0.7, -1.3, 0.4];
            let analytic = siren_backward(&p, &coords, &upstream);
            let fd = finite_diff_grad(
                &mut |q: &SirenParams| siren_forward(q, &coords).dot(&upstream),
                &p,
                1e-6,
            )
            .unwrap();
            let frac = gradient_agreement(&analytic.tensors(), &fd, 1e-5);
            assert!(frac >= 0.99, "agreement {frac}");
        }
    }

    #[test]
    fn output_bias_gradient_closed_form() {
        // single hidden unit: d/db_out = sum_k upstream_k sigma'(logit_k)
        let p = SirenParams::init(&[1], 30.0, 11);
        let coords = [(0.2, 0.6), (0.7, 0.1)];
        let upstream = ndarray::array![1.0, 2.0];
        let trace = siren_forward_trace(&p, &coords);
        let g = siren_backward_trace(&p, &trace, &upstream);
        let expected: f64 = upstream
            .iter()
            .zip(trace.output().iter())
            .map(|(&u, &y)| u * y * (1.0 - y))
            .sum();
        assert!((g.b_out[0] - expected).abs() <= 1e-14);
    }

    #[test]
    fn init_is_seeded_and_distinct() {
        let a = SirenParams::default_arch(5);
        let b = SirenParams::default_arch(5);
        let c = SirenParams::default_arch(6);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn first_layer_preactivation_variance_near_target() {
        // W ~ U(-1/2, 1/2), x ~ U(0,1), b ~ U(-1/sqrt(2), 1/sqrt(2)):
        // Var(pre) = 2 * E[w^2] E[x^2] + Var(b) = 2/36 + 1/6, then the
        // omega0^2 factor.
        let target = 30.0_f64.powi(2) * (2.0 / 36.0 + 1.0 / 6.0);
        let mut acc = 0.0;
        let mut count = 0usize;
        let coords = coordinate_grid(40).unwrap();
        for seed in 0..20 {
            let p = SirenParams::default_arch(seed);
            let trace = siren_forward_trace(&p, &coords);
            for v in trace.pre[0].iter() {
                acc += v * v;
                count += 1;
            }
        }
        let measured = acc / count as f64;
        assert!(
            measured >= target / 2.0 && measured <= target * 2.0,
            "variance {measured} vs target {target}"
        );
    }
}
