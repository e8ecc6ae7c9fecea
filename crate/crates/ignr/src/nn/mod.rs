//! Dense networks with hand-written forward and backward passes.
//!
//! Three architectures cover everything the training loops need: a
//! sine-activated coordinate network (the graphon representation), its
//! modulated variant gated by a latent code, and a GIN encoder that maps a
//! graph to that code. A bias-free MLP decoder onto a fixed grid serves as
//! the discrete baseline. The architectures are small and fixed, so each
//! network carries an explicit backward pass instead of a general autodiff
//! tape; every backward is checked against central finite differences.
//!
//! All math is in `f64`: the finite-difference tolerances and the GW
//! solver tolerances assume it.

mod adam;
mod discrete;
mod gin;
mod modsiren;
mod siren;

pub use adam::AdamState;
pub use discrete::{
    discrete_backward, discrete_decode, DiscreteConfig, DiscreteDecoderParams, DiscreteTrace,
};
pub use gin::{gin_backward, gin_encode, GinConfig, GinParams, GinTrace, InputFeature};
pub use modsiren::{modsiren_backward, modsiren_forward, ModSirenParams, ModSirenTrace};
pub use siren::{
    siren_backward, siren_backward_trace, siren_forward, siren_forward_trace, SirenParams,
    SirenTrace,
};

use ndarray::{ArrayD, ArrayViewD, ArrayViewMutD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Uniform access to a network's parameter tensors, in a stable order with
/// stable names. Gradients reuse the parameter struct itself, so the same
/// ordering serves the optimizer, checkpoints, and finite differences.
pub trait ParamTensors {
    fn tensor_names(&self) -> Vec<String>;
    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>>;
    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>>;

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn zeroed(&self) -> Self
    where
        Self: Clone,
    {
        let mut copy = self.clone();
        for mut t in copy.tensors_mut() {
            t.fill(0.0);
        }
        copy
    }

    /// Accumulate `other` scaled by `factor` into `self` tensor-by-tensor.
    fn add_scaled(&mut self, other: &Self, factor: f64) {
        let mut mine = self.tensors_mut();
        let theirs = other.tensors();
        assert_eq!(mine.len(), theirs.len());
        for (m, t) in mine.iter_mut().zip(theirs.iter()) {
            m.zip_mut_with(t, |a, &b| *a += factor * b);
        }
    }
}

/// Central finite differences of a scalar function of the parameters,
/// tensor-aligned with [`ParamTensors::tensors`]. Test oracle only; cost is
/// two evaluations per scalar parameter.
pub fn finite_diff_grad<P, F>(f: &mut F, params: &P, step: f64) -> Result<Vec<ArrayD<f64>>>
where
    P: ParamTensors + Clone,
    F: FnMut(&P) -> f64,
{
    if step <= 0.0 {
        return Err(Error::InputDomain("finite-difference step must be positive".into()));
    }
    let mut work = params.clone();
    let n_tensors = params.tensors().len();
    let mut grads = Vec::with_capacity(n_tensors);
    for ti in 0..n_tensors {
        let shape = params.tensors()[ti].shape().to_vec();
        let len = params.tensors()[ti].len();
        let mut g = Vec::with_capacity(len);
        for k in 0..len {
            let orig = work.tensors()[ti].as_slice().map(|s| s[k]).unwrap_or_else(|| {
                *work.tensors()[ti].iter().nth(k).unwrap()
            });
            set_flat(&mut work, ti, k, orig + step);
            let up = f(&work);
            set_flat(&mut work, ti, k, orig - step);
            let down = f(&work);
            set_flat(&mut work, ti, k, orig);
            g.push((up - down) / (2.0 * step));
        }
        grads.push(ArrayD::from_shape_vec(shape, g).expect("shape preserved"));
    }
    Ok(grads)
}

fn set_flat<P: ParamTensors>(params: &mut P, tensor: usize, k: usize, value: f64) {
    let mut tensors = params.tensors_mut();
    if let Some(s) = tensors[tensor].as_slice_mut() {
        s[k] = value;
    } else {
        *tensors[tensor].iter_mut().nth(k).unwrap() = value;
    }
}

/// Fraction of scalars where the analytic gradient matches a
/// finite-difference gradient within `rel_tol` (with an absolute floor for
/// near-zero pairs). Used by the gradient test suites.
pub fn gradient_agreement(analytic: &[ArrayViewD<'_, f64>], fd: &[ArrayD<f64>], rel_tol: f64) -> f64 {
    let mut total = 0usize;
    let mut ok = 0usize;
    for (a, b) in analytic.iter().zip(fd.iter()) {
        for (&x, &y) in a.iter().zip(b.iter()) {
            total += 1;
            let denom = x.abs().max(y.abs());
            if denom < 1e-7 || (x - y).abs() <= rel_tol * denom {
                ok += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        ok as f64 / total as f64
    }
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `U(-limit, limit)` matrix.
pub(crate) fn uniform_matrix(
    rows: usize,
    cols: usize,
    limit: f64,
    rng: &mut ChaCha8Rng,
) -> ndarray::Array2<f64> {
    ndarray::Array2::from_shape_fn((rows, cols), |_| (rng.random::<f64>() * 2.0 - 1.0) * limit)
}

pub(crate) fn uniform_vector(len: usize, limit: f64, rng: &mut ChaCha8Rng) -> ndarray::Array1<f64> {
    ndarray::Array1::from_shape_fn(len, |_| (rng.random::<f64>() * 2.0 - 1.0) * limit)
}

/// Fan-in rule for sine layers after the first: `sqrt(6 / fan_in)`.
pub(crate) fn sine_limit(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}

/// He-uniform limit for ReLU layers.
pub(crate) fn relu_limit(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};

    #[derive(Clone)]
    struct Quad {
        a: Array2<f64>,
        b: Array1<f64>,
    }

    impl ParamTensors for Quad {
        fn tensor_names(&self) -> Vec<String> {
            vec!["a".into(), "b".into()]
        }
        fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
            vec![self.a.view().into_dyn(), self.b.view().into_dyn()]
        }
        fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
            vec![self.a.view_mut().into_dyn(), self.b.view_mut().into_dyn()]
        }
    }

    #[test]
    fn finite_diff_on_quadratic() {
        let p = Quad {
            a: ndarray::array![[1.0, -2.0], [0.5, 3.0]],
            b: ndarray::array![4.0, -1.0],
        };
        let mut f = |q: &Quad| {
            q.a.iter().map(|x| x * x).sum::<f64>() + q.b.iter().map(|x| x * x).sum::<f64>()
        };
        let grads = finite_diff_grad(&mut f, &p, 1e-6).unwrap();
        for (g, x) in grads[0].iter().zip(p.a.iter()) {
            assert!((g - 2.0 * x).abs() <= 1e-8, "grad {g} vs {}", 2.0 * x);
        }
        for (g, x) in grads[1].iter().zip(p.b.iter()) {
            assert!((g - 2.0 * x).abs() <= 1e-8);
        }
    }

    #[test]
    fn finite_diff_on_constant_is_zero() {
        let p = Quad {
            a: Array2::ones((2, 2)),
            b: Array1::ones(2),
        };
        let grads = finite_diff_grad(&mut |_| 7.5, &p, 1e-6).unwrap();
        assert!(grads.iter().all(|g| g.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn finite_diff_rejects_bad_step() {
        let p = Quad {
            a: Array2::zeros((1, 1)),
            b: Array1::zeros(1),
        };
        assert!(finite_diff_grad(&mut |_| 0.0, &p, 0.0).is_err());
    }
}
