//! Adam with bias correction, one moment pair per parameter tensor.

use ndarray::ArrayD;

use super::ParamTensors;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    m: Vec<ArrayD<f64>>,
    v: Vec<ArrayD<f64>>,
}

impl AdamState {
    pub fn new<P: ParamTensors>(params: &P, lr: f64) -> Self {
        let m = params
            .tensors()
            .iter()
            .map(|t| ArrayD::zeros(t.shape().to_vec()))
            .collect::<Vec<_>>();
        let v = m.clone();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            m,
            v,
        }
    }

    /// One update over all tensors: `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step<P: ParamTensors>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let mut ps = params.tensors_mut();
        let gs = grads.tensors();
        if ps.len() != self.m.len() || gs.len() != self.m.len() {
            return Err(Error::DimensionMismatch(format!(
                "optimizer tracks {} tensors, got {} params and {} grads",
                self.m.len(),
                ps.len(),
                gs.len()
            )));
        }
        self.step_count += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step_count as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step_count as i32);
        for ((p, g), (m, v)) in ps
            .iter_mut()
            .zip(gs.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::DimensionMismatch(
                    "parameter/gradient/moment shapes diverged".into(),
                ));
            }
            m.zip_mut_with(g, |mi, &gi| *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi);
            v.zip_mut_with(g, |vi, &gi| *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi);
            for ((pi, mi), vi) in p.iter_mut().zip(m.iter()).zip(v.iter()) {
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                *pi -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::SirenParams;
    use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};

    #[derive(Clone, Debug, PartialEq)]
    struct Scalar(Array1<f64>);

    impl ParamTensors for Scalar {
        fn tensor_names(&self) -> Vec<String> {
            vec!["x".into()]
        }
        fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
            vec![self.0.view().into_dyn()]
        }
        fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
            vec![self.0.view_mut().into_dyn()]
        }
    }

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut p = SirenParams::default_arch(0);
        let orig = p.clone();
        let zero = p.zeroed();
        let mut adam = AdamState::new(&p, 1e-3);
        adam.step(&mut p, &zero).unwrap();
        assert_eq!(p, orig);
        assert_eq!(adam.step_count, 1);
    }

    #[test]
    fn first_step_magnitude_is_about_lr() {
        // first step: m_hat = g, v_hat = g^2, update = -lr g/(|g| + eps')
        let mut p = Scalar(ndarray::array![1.0]);
        let g = Scalar(ndarray::array![0.003]);
        let mut adam = AdamState::new(&p, 0.01);
        adam.step(&mut p, &g).unwrap();
        let moved = 1.0 - p.0[0];
        assert!((moved - 0.01).abs() <= 1e-6, "moved {moved}");
    }

    #[test]
    fn two_steps_match_hand_rolled_trace() {
        let lr = 0.1;
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let g1 = 0.5;
        let g2 = -0.25;
        // hand-rolled scalar Adam
        let mut x = 2.0;
        let mut m = 0.0;
        let mut v = 0.0;
        for (t, g) in [(1, g1), (2, g2)] {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1_pow(b1, t));
            let vh = v / (1.0 - b1_pow(b2, t));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        let mut p = Scalar(ndarray::array![2.0]);
        let mut adam = AdamState::new(&p, lr);
        adam.step(&mut p, &Scalar(ndarray::array![g1])).unwrap();
        adam.step(&mut p, &Scalar(ndarray::array![g2])).unwrap();
        assert!((p.0[0] - x).abs() <= 1e-15, "{} vs {x}", p.0[0]);
    }

    fn b1_pow(b: f64, t: i32) -> f64 {
        b.powi(t)
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = Scalar(ndarray::array![1.0]);
        let mut adam = AdamState::new(&p, 0.1);
        let bad = Scalar(Array1::zeros(2));
        assert!(adam.step(&mut p, &bad).is_err());
        let _ = Array2::<f64>::zeros((1, 1));
    }
}
