//! Adversarial loss computations and the JS-divergence identity utility.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::nets::{stack_input, Mlp};

/// Discriminator outputs are clamped to `[CLAMP_EPS, 1 - CLAMP_EPS]` before
/// taking logs.
pub const CLAMP_EPS: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("non-finite value in loss inputs")]
    NonFinite,
    #[error("batch size mismatch: {0} vs {1}")]
    BatchMismatch(usize, usize),
    #[error("empty batch")]
    EmptyBatch,
    #[error("distribution not normalized (sum = {0})")]
    NotNormalized(f64),
    #[error("distributions must share a support size: {0} vs {1}")]
    SupportMismatch(usize, usize),
    #[error("negative probability {0}")]
    NegativeProbability(f64),
}

/// Where the gradient penalty is evaluated: at random interpolates between
/// real and fake pairs (the standard construction) or at the real samples
/// only (the literal expectation in the penalty formula).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpSampling {
    Interpolates,
    RealOnly,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Discriminator and generator losses of the conditional GAN.
///
/// `loss_d = -mean(log d_real) - mean(log(1 - d_fake))`; the generator loss
/// is the non-saturating form `-mean(log d_fake)`. Inputs are clamped into
/// the open unit interval; anything not finite after clamping is an error.
pub fn cgan_losses(d_real: &[f64], d_fake: &[f64]) -> Result<(f64, f64), LossError> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    if d_real.iter().chain(d_fake).any(|v| !v.is_finite()) {
        return Err(LossError::NonFinite);
    }
    let clamp = |v: f64| v.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
    let loss_d = -mean(&d_real.iter().map(|&v| clamp(v).ln()).collect::<Vec<_>>())
        - mean(&d_fake.iter().map(|&v| (1.0 - clamp(v)).ln()).collect::<Vec<_>>());
    let loss_g = -mean(&d_fake.iter().map(|&v| clamp(v).ln()).collect::<Vec<_>>());
    if !loss_d.is_finite() || !loss_g.is_finite() {
        return Err(LossError::NonFinite);
    }
    Ok((loss_d, loss_g))
}

/// Critic and generator losses of the Wasserstein GAN.
///
/// The critic maximizes the earth-mover estimate `mean(f_real) -
/// mean(f_fake)`, so its minimized core loss is the negation; the generator
/// minimizes `-mean(f_fake)`.
pub fn wgan_losses(f_real: &[f64], f_fake: &[f64]) -> Result<(f64, f64), LossError> {
    if f_real.is_empty() || f_fake.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    if f_real.iter().chain(f_fake).any(|v| !v.is_finite()) {
        return Err(LossError::NonFinite);
    }
    let loss_critic_core = mean(f_fake) - mean(f_real);
    let loss_g = -mean(f_fake);
    Ok((loss_critic_core, loss_g))
}

/// Per-sample interpolates `u * x_real + (1 - u) * x_fake` (columns are
/// samples; `u` has one entry per column).
pub fn interpolate_columns(
    x_real: &DMatrix<f64>,
    x_fake: &DMatrix<f64>,
    u: &[f64],
) -> DMatrix<f64> {
    assert_eq!(x_real.shape(), x_fake.shape());
    assert_eq!(x_real.ncols(), u.len());
    let mut out = x_real.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let uj = u[j];
        for (i, v) in col.iter_mut().enumerate() {
            *v = uj * x_real[(i, j)] + (1.0 - uj) * x_fake[(i, j)];
        }
    }
    out
}

/// Everything the training loop needs from one gradient-penalty evaluation.
pub struct PenaltyEval {
    /// `gp_lambda * mean((||grad|| - 1)^2)`.
    pub penalty: f64,
    /// Evaluation points (with the label row attached), cached forward pass
    /// and adjoint seed, for the parameter-gradient pass.
    pub cache: crate::nets::ForwardCache,
    pub deltas: Vec<DMatrix<f64>>,
    pub v: DMatrix<f64>,
}

/// Gradient-penalty value for a critic at the sampled evaluation points.
///
/// For each real/fake column pair, the evaluation point is the random
/// interpolate (or the real sample, per `sampling`); the gradient is taken
/// with respect to the shape coordinates only, never the label row. A
/// zero-norm gradient is valid input and contributes `gp_lambda * 1`.
pub fn gradient_penalty(
    critic: &Mlp,
    x_real: &DMatrix<f64>,
    x_fake: &DMatrix<f64>,
    labels: &[f64],
    gp_lambda: f64,
    sampling: GpSampling,
    rng: &mut ChaCha8Rng,
) -> Result<f64, LossError> {
    if x_real.ncols() != x_fake.ncols() {
        return Err(LossError::BatchMismatch(x_real.ncols(), x_fake.ncols()));
    }
    if x_real.ncols() != labels.len() {
        return Err(LossError::BatchMismatch(x_real.ncols(), labels.len()));
    }
    Ok(gradient_penalty_eval(critic, x_real, x_fake, labels, gp_lambda, sampling, rng).penalty)
}

/// As [`gradient_penalty`], but additionally returns the intermediates
/// needed to differentiate the penalty with respect to the critic
/// parameters (via [`Mlp::penalty_param_grads`]).
pub fn gradient_penalty_eval(
    critic: &Mlp,
    x_real: &DMatrix<f64>,
    x_fake: &DMatrix<f64>,
    labels: &[f64],
    gp_lambda: f64,
    sampling: GpSampling,
    rng: &mut ChaCha8Rng,
) -> PenaltyEval {
    let batch = x_real.ncols();
    let shape_rows = x_real.nrows();
    let x_hat = match sampling {
        GpSampling::Interpolates => {
            let u: Vec<f64> = (0..batch).map(|_| rng.random_range(0.0..1.0)).collect();
            interpolate_columns(x_real, x_fake, &u)
        }
        GpSampling::RealOnly => x_real.clone(),
    };
    let cache = critic.forward_cache(stack_input(&x_hat, labels));
    let (g, deltas) = critic.input_gradient_with_deltas(&cache);

    let mut penalty = 0.0;
    let mut v = DMatrix::zeros(g.nrows(), batch);
    for s in 0..batch {
        let norm: f64 = (0..shape_rows)
            .map(|i| g[(i, s)] * g[(i, s)])
            .sum::<f64>()
            .sqrt();
        penalty += (norm - 1.0) * (norm - 1.0);
        if norm > 0.0 {
            let coeff = gp_lambda * 2.0 * (norm - 1.0) / (norm * batch as f64);
            for i in 0..shape_rows {
                v[(i, s)] = coeff * g[(i, s)];
            }
        }
    }
    penalty *= gp_lambda / batch as f64;
    PenaltyEval { penalty, cache, deltas, v }
}

/// Evaluates both sides of the optimal-discriminator identity
/// `V(D*, G) = 2 D_JS(p_r || p_g) - 2 log 2` on a pair of discrete
/// distributions, computing each side independently.
pub fn js_identity_check(p_r: &[f64], p_g: &[f64]) -> Result<(f64, f64), LossError> {
    if p_r.len() != p_g.len() {
        return Err(LossError::SupportMismatch(p_r.len(), p_g.len()));
    }
    for &p in p_r.iter().chain(p_g) {
        if !p.is_finite() {
            return Err(LossError::NonFinite);
        }
        if p < 0.0 {
            return Err(LossError::NegativeProbability(p));
        }
    }
    for dist in [p_r, p_g] {
        let sum: f64 = dist.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(LossError::NotNormalized(sum));
        }
    }

    // Left side: V evaluated at the analytic optimum D*(x) = p_r / (p_r + p_g).
    let mut v_at_opt = 0.0;
    for (&pr, &pg) in p_r.iter().zip(p_g) {
        let total = pr + pg;
        if pr > 0.0 {
            v_at_opt += pr * (pr / total).ln();
        }
        if pg > 0.0 {
            v_at_opt += pg * (pg / total).ln();
        }
    }

    // Right side: direct JS divergence against the mixture.
    let mut d_js = 0.0;
    for (&pr, &pg) in p_r.iter().zip(p_g) {
        let m = 0.5 * (pr + pg);
        if pr > 0.0 {
            d_js += 0.5 * pr * (pr / m).ln();
        }
        if pg > 0.0 {
            d_js += 0.5 * pg * (pg / m).ln();
        }
    }
    let rhs = 2.0 * d_js - 2.0 * std::f64::consts::LN_2;

    Ok((v_at_opt, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{CriticHead, CriticSpec};
    use nalgebra::DVector;
    use rand_chacha::rand_core::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(77)
    }

    #[test]
    fn cgan_loss_at_the_uninformative_point() {
        // d = 1/2 everywhere: loss_D = 2 log 2, i.e. V = -2 log 2, the
        // optimum when the two distributions coincide.
        let half = vec![0.5; 8];
        let (loss_d, _) = cgan_losses(&half, &half).unwrap();
        assert!((loss_d - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn cgan_loss_perfect_discriminator() {
        let eps = 1e-7;
        let (loss_d, _) = cgan_losses(&[1.0 - eps; 4], &[eps; 4]).unwrap();
        assert!(loss_d.abs() < 1e-5, "loss_d = {loss_d}");
    }

    #[test]
    fn cgan_loss_direct_arithmetic() {
        let (loss_d, _) = cgan_losses(&[0.9; 3], &[0.1; 3]).unwrap();
        let expected = -(0.9f64.ln() + 0.9f64.ln());
        assert!((loss_d - expected).abs() < 1e-12);
        assert!((loss_d - 0.2107).abs() < 1e-4);
    }

    #[test]
    fn cgan_rejects_non_finite() {
        assert_eq!(cgan_losses(&[f64::NAN], &[0.5]), Err(LossError::NonFinite));
    }

    #[test]
    fn wgan_loss_identical_batches_zero_core() {
        for c in [-3.0, 0.0, 2.5] {
            let (core, _) = wgan_losses(&[c; 5], &[c; 5]).unwrap();
            assert_eq!(core, 0.0);
        }
    }

    #[test]
    fn wgan_loss_arithmetic() {
        let (core, loss_g) = wgan_losses(&[1.0, 3.0], &[0.0, 0.0]).unwrap();
        assert_eq!(core, -2.0);
        assert_eq!(loss_g, 0.0);
    }

    #[test]
    fn wgan_loss_translation_invariant() {
        let real = [0.3, -1.2, 2.0];
        let fake = [0.9, 0.4, -0.5];
        let (core, _) = wgan_losses(&real, &fake).unwrap();
        let shift = 17.25;
        let real_s: Vec<f64> = real.iter().map(|v| v + shift).collect();
        let fake_s: Vec<f64> = fake.iter().map(|v| v + shift).collect();
        let (core_s, _) = wgan_losses(&real_s, &fake_s).unwrap();
        assert!((core - core_s).abs() < 1e-12);
    }

    /// A critic computing exactly `f(x, y) = w . x` (ignoring the label):
    /// single linear layer, no hidden layers.
    fn linear_critic(w: &[f64]) -> Mlp {
        let spec = CriticSpec {
            input_dim: w.len(),
            hidden_widths: vec![],
            output_dim: 1,
            label_dim: 1,
            head: CriticHead::Linear,
        };
        let mut mlp = Mlp::critic(&spec, &mut rng()).unwrap();
        let mut weights = DMatrix::zeros(1, w.len() + 1);
        for (i, &wi) in w.iter().enumerate() {
            weights[(0, i)] = wi;
        }
        mlp.layers_mut()[0].weights = weights;
        mlp.layers_mut()[0].bias = DVector::zeros(1);
        mlp
    }

    fn random_batch(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
    }

    #[test]
    fn unit_norm_linear_critic_has_zero_penalty() {
        // ||w||_2 = 1 -> gradient norm is exactly 1 everywhere.
        let w = [0.6, 0.8, 0.0, 0.0];
        let critic = linear_critic(&w);
        let mut r = rng();
        let x_real = random_batch(&mut r, 4, 6);
        let x_fake = random_batch(&mut r, 4, 6);
        let labels = vec![0.5; 6];
        for sampling in [GpSampling::Interpolates, GpSampling::RealOnly] {
            let p = gradient_penalty(&critic, &x_real, &x_fake, &labels, 10.0, sampling, &mut r)
                .unwrap();
            assert!(p.abs() <= 1e-9, "penalty = {p}");
        }
    }

    #[test]
    fn zero_critic_penalty_is_lambda() {
        let critic = linear_critic(&[0.0; 4]);
        let mut r = rng();
        let x_real = random_batch(&mut r, 4, 5);
        let x_fake = random_batch(&mut r, 4, 5);
        let labels = vec![0.5; 5];
        let p = gradient_penalty(
            &critic,
            &x_real,
            &x_fake,
            &labels,
            10.0,
            GpSampling::Interpolates,
            &mut r,
        )
        .unwrap();
        assert!((p - 10.0).abs() <= 1e-9, "penalty = {p}");
    }

    #[test]
    fn steep_linear_critic_penalty_closed_form() {
        // f = 3 x_1: gradient norm 3, penalty = lambda * (3 - 1)^2.
        let critic = linear_critic(&[3.0, 0.0, 0.0, 0.0]);
        let mut r = rng();
        let x_real = random_batch(&mut r, 4, 5);
        let x_fake = random_batch(&mut r, 4, 5);
        let labels = vec![0.5; 5];
        let lambda = 10.0;
        let p = gradient_penalty(
            &critic,
            &x_real,
            &x_fake,
            &labels,
            lambda,
            GpSampling::Interpolates,
            &mut r,
        )
        .unwrap();
        assert!((p - 4.0 * lambda).abs() <= 1e-9, "penalty = {p}");
    }

    #[test]
    fn penalty_ignores_label_direction() {
        // The critic leans on the label row, but the penalty differentiates
        // with respect to the shape coordinates only: f = 5 * label has zero
        // shape gradient, so the penalty is lambda * (0 - 1)^2 = lambda.
        let critic = linear_critic(&[0.0, 0.0, 0.0]); // 3 shape dims
        let mut c = critic;
        c.layers_mut()[0].weights[(0, 3)] = 5.0; // label column
        let mut r = rng();
        let x_real = random_batch(&mut r, 3, 4);
        let x_fake = random_batch(&mut r, 3, 4);
        let labels = vec![1.0; 4];
        let p = gradient_penalty(&c, &x_real, &x_fake, &labels, 7.0, GpSampling::Interpolates, &mut r)
            .unwrap();
        assert!((p - 7.0).abs() <= 1e-9);
    }

    #[test]
    fn js_identity_equal_distributions() {
        let p = vec![0.25; 4];
        let (v, rhs) = js_identity_check(&p, &p).unwrap();
        let expected = -2.0 * std::f64::consts::LN_2;
        assert!((v - expected).abs() < 1e-15);
        assert!((rhs - expected).abs() < 1e-15);
    }

    #[test]
    fn js_identity_disjoint_supports() {
        let p_r = [0.5, 0.5, 0.0, 0.0];
        let p_g = [0.0, 0.0, 0.25, 0.75];
        let (v, rhs) = js_identity_check(&p_r, &p_g).unwrap();
        assert!(v.abs() < 1e-15, "v = {v}");
        assert!(rhs.abs() < 1e-15, "rhs = {rhs}");
    }

    #[test]
    fn js_identity_hand_example() {
        let (v, rhs) = js_identity_check(&[0.7, 0.3], &[0.4, 0.6]).unwrap();
        assert!((v - rhs).abs() < 1e-12, "{v} vs {rhs}");
    }

    #[test]
    fn js_identity_many_random_pairs() {
        let mut r = rng();
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let n = r.random_range(2..12);
            let mut p_r: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
            let mut p_g: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
            let (sr, sg) = (p_r.iter().sum::<f64>(), p_g.iter().sum::<f64>());
            p_r.iter_mut().for_each(|v| *v /= sr);
            p_g.iter_mut().for_each(|v| *v /= sg);
            let (v, rhs) = js_identity_check(&p_r, &p_g).unwrap();
            worst = worst.max((v - rhs).abs());
        }
        assert!(worst < 1e-12, "max discrepancy {worst}");
    }

    #[test]
    fn js_identity_rejects_unnormalized() {
        assert!(matches!(
            js_identity_check(&[0.5, 0.6], &[0.5, 0.5]),
            Err(LossError::NotNormalized(_))
        ));
    }
}
