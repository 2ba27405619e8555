//! Adam optimizer over per-layer parameter gradients.

use nalgebra::{DMatrix, DVector};

use crate::nets::{Mlp, ParamGrads};

pub struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    m: Vec<(DMatrix<f64>, DVector<f64>)>,
    v: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl Adam {
    pub fn new(params: &Mlp, learning_rate: f64, beta1: f64, beta2: f64) -> Self {
        let zeros = || {
            params
                .layers()
                .iter()
                .map(|l| {
                    (
                        DMatrix::zeros(l.weights.nrows(), l.weights.ncols()),
                        DVector::zeros(l.bias.len()),
                    )
                })
                .collect::<Vec<_>>()
        };
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon: 1e-8,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    /// One bias-corrected update of every parameter tensor.
    pub fn step(&mut self, params: &mut Mlp, grads: &ParamGrads) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let lr = self.learning_rate;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);

        for (layer, ((mw, mb), ((vw, vb), (gw, gb)))) in params
            .layers_mut()
            .iter_mut()
            .zip(self.m.iter_mut().zip(self.v.iter_mut().zip(grads.layers.iter())))
        {
            mw.zip_apply(gw, |m, g| *m = b1 * *m + (1.0 - b1) * g);
            vw.zip_apply(gw, |v, g| *v = b2 * *v + (1.0 - b2) * g * g);
            layer
                .weights
                .zip_zip_apply(mw, vw, |p, m, v| *p -= lr * (m / bc1) / ((v / bc2).sqrt() + eps));

            mb.zip_apply(gb, |m, g| *m = b1 * *m + (1.0 - b1) * g);
            vb.zip_apply(gb, |v, g| *v = b2 * *v + (1.0 - b2) * g * g);
            layer
                .bias
                .zip_zip_apply(mb, vb, |p, m, v| *p -= lr * (m / bc1) / ((v / bc2).sqrt() + eps));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{CriticHead, CriticSpec};
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn first_step_moves_against_gradient_at_learning_rate() {
        let spec = CriticSpec {
            input_dim: 3,
            hidden_widths: vec![],
            output_dim: 1,
            label_dim: 0,
            head: CriticHead::Linear,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut mlp = Mlp::critic(&spec, &mut rng).unwrap();
        let before = mlp.layers()[0].weights.clone();
        let mut grads = ParamGrads::zeros_like(&mlp);
        grads.layers[0].0[(0, 0)] = 2.0;
        grads.layers[0].0[(0, 1)] = -3.0;

        let mut adam = Adam::new(&mlp, 1e-3, 0.9, 0.999);
        adam.step(&mut mlp, &grads);

        // With bias correction, the first Adam step has magnitude ~lr in the
        // direction opposite the gradient, independent of its scale.
        let d0 = mlp.layers()[0].weights[(0, 0)] - before[(0, 0)];
        let d1 = mlp.layers()[0].weights[(0, 1)] - before[(0, 1)];
        assert!((d0 + 1e-3).abs() < 1e-8, "d0 = {d0}");
        assert!((d1 - 1e-3).abs() < 1e-8, "d1 = {d1}");
        // Zero-gradient entries stay put.
        assert_eq!(mlp.layers()[0].weights[(0, 2)], before[(0, 2)]);
    }
}
