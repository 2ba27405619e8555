//! Adversarial training: configuration, the cGAN / cWGAN-gp loop, and loss
//! history.
//!
//! Every outer iteration performs a configured number of critic updates
//! followed by one generator update, both with Adam. All randomness comes
//! from streams derived from the run seed, batch assembly is sequential and
//! seed-ordered, and two runs with the same inputs produce bit-identical
//! parameter trajectories and loss histories.

pub mod adam;
pub mod losses;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::dataset::DatasetManifest;
use crate::nets::{
    stack_input, Checkpoint, CriticHead, CriticSpec, GeneratorSpec, Mlp, NetsError,
};
use crate::seed;

pub use adam::Adam;
pub use losses::{
    cgan_losses, gradient_penalty, js_identity_check, wgan_losses, GpSampling, LossError,
};

/// The adversarial objective being trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Cgan,
    CwganGp,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::Cgan => "cgan",
            Regime::CwganGp => "cwgan-gp",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "cgan" => Some(Regime::Cgan),
            "cwgan-gp" | "cwgan_gp" => Some(Regime::CwganGp),
            _ => None,
        }
    }

    /// The critic head this regime requires.
    pub fn required_head(self) -> CriticHead {
        match self {
            Regime::Cgan => CriticHead::Sigmoid,
            Regime::CwganGp => CriticHead::Linear,
        }
    }

    /// Adam moment decay rates; the momentum term is kept low in both
    /// regimes, with the faster second-moment decay reserved for the
    /// gradient-penalty critic.
    pub fn adam_betas(self) -> (f64, f64) {
        match self {
            Regime::Cgan => (0.5, 0.999),
            Regime::CwganGp => (0.5, 0.9),
        }
    }
}

/// Which generator loss the cGAN regime minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorLoss {
    /// `-mean(log D(G(z|y)|y))` — the standard remedy for vanishing early
    /// gradients.
    NonSaturating,
    /// `mean(log(1 - D(G(z|y)|y)))` — the literal minimax objective.
    Minimax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub regime: Regime,
    pub latent_dim: usize,
    pub learning_rate: f64,
    pub critic_steps_per_iter: usize,
    pub gp_lambda: f64,
    pub batch_size: usize,
    pub total_iterations: u64,
    pub seed: u64,
    /// Emit a checkpoint snapshot every this many iterations (0 = final
    /// checkpoint only).
    pub checkpoint_cadence: u64,
    pub gp_sampling: GpSampling,
    pub generator_loss: GeneratorLoss,
}

impl TrainConfig {
    pub fn new(regime: Regime, latent_dim: usize) -> Self {
        Self {
            regime,
            latent_dim,
            learning_rate: 1e-4,
            critic_steps_per_iter: 5,
            gp_lambda: 10.0,
            batch_size: 64,
            total_iterations: 12_000,
            seed: 0,
            checkpoint_cadence: 0,
            gp_sampling: GpSampling::Interpolates,
            generator_loss: GeneratorLoss::NonSaturating,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate > 0.0) {
            return Err(TrainError::BadConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.critic_steps_per_iter < 1 {
            return Err(TrainError::BadConfig(
                "critic_steps_per_iter must be at least 1".to_string(),
            ));
        }
        if self.gp_lambda < 0.0 {
            return Err(TrainError::BadConfig(format!(
                "gp_lambda must be non-negative, got {}",
                self.gp_lambda
            )));
        }
        if self.batch_size == 0 {
            return Err(TrainError::BadConfig("batch_size must be positive".to_string()));
        }
        if self.latent_dim == 0 {
            return Err(TrainError::BadConfig("latent_dim must be at least 1".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(
        "critic head {head:?} is inconsistent with regime {regime:?}: \
         cgan needs a sigmoid discriminator, cwgan-gp a linear critic"
    )]
    RegimeHeadMismatch { regime: Regime, head: CriticHead },
    #[error("generator output dim {gen_out} does not feed critic input dim {critic_in}")]
    SpecMismatch { gen_out: usize, critic_in: usize },
    #[error("non-finite loss at iteration {iteration}: critic {loss_critic}, generator {loss_generator}")]
    NanLoss {
        iteration: u64,
        loss_critic: f64,
        loss_generator: f64,
    },
    #[error(transparent)]
    Nets(#[from] NetsError),
    #[error(transparent)]
    Loss(#[from] LossError),
}

/// Losses recorded for one outer iteration. `critic` includes the gradient
/// penalty where applicable; `critic_core` is the bare objective (for the
/// Wasserstein regime, the negated earth-mover estimate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: u64,
    pub critic: f64,
    pub generator: f64,
    pub critic_core: f64,
}

/// The result of a training run: final state plus any cadence snapshots.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub config: TrainConfig,
    pub loss_history: Vec<LossRecord>,
    pub snapshots: Vec<(u64, Checkpoint)>,
    pub final_checkpoint: Checkpoint,
}

/// Serializes a loss history as delimiter-separated text.
pub fn loss_history_to_string(history: &[LossRecord]) -> String {
    let mut out = String::with_capacity(history.len() * 64 + 64);
    out.push_str("iteration,loss_critic,loss_generator,critic_core\n");
    for r in history {
        out.push_str(&format!("{},{},{},{}\n", r.iteration, r.critic, r.generator, r.critic_core));
    }
    out
}

struct Batcher<'a> {
    coords: DMatrix<f64>,
    labels: Vec<f64>,
    rng: rand_chacha::ChaCha8Rng,
    manifest: &'a DatasetManifest,
}

impl<'a> Batcher<'a> {
    fn new(manifest: &'a DatasetManifest, master_seed: u64) -> Self {
        let n = manifest.len();
        let dim = manifest.records[0].shape.as_slice().len();
        let coords = DMatrix::from_fn(dim, n, |r, c| manifest.records[c].shape.as_slice()[r]);
        let labels = manifest.records.iter().map(|r| r.cl).collect();
        Batcher {
            coords,
            labels,
            rng: seed::rng(master_seed, "train/batches"),
            manifest,
        }
    }

    /// Draws a real minibatch: coordinates and their labels, seed-ordered.
    fn real_batch(&mut self, batch: usize) -> (DMatrix<f64>, Vec<f64>) {
        let n = self.manifest.len();
        let idx: Vec<usize> = (0..batch).map(|_| self.rng.random_range(0..n)).collect();
        let x = DMatrix::from_fn(self.coords.nrows(), batch, |r, c| self.coords[(r, idx[c])]);
        let y = idx.iter().map(|&i| self.labels[i]).collect();
        (x, y)
    }

    /// Draws a latent batch from the standard normal prior.
    fn latent_batch(&mut self, dim: usize, batch: usize) -> DMatrix<f64> {
        DMatrix::from_iterator(
            dim,
            batch,
            std::iter::repeat_with(|| self.rng.sample::<f64, _>(StandardNormal)).take(dim * batch),
        )
    }
}

/// One critic update. Returns `(full critic loss, core loss)`.
fn critic_step(
    critic: &mut Mlp,
    adam: &mut Adam,
    generator: &Mlp,
    batcher: &mut Batcher,
    config: &TrainConfig,
) -> Result<(f64, f64), TrainError> {
    let b = config.batch_size;
    let (x_real, labels) = batcher.real_batch(b);
    let z = batcher.latent_batch(config.latent_dim, b);
    let x_fake = generator.forward(&stack_input(&z, &labels));

    let real_cache = critic.forward_cache(stack_input(&x_real, &labels));
    let fake_cache = critic.forward_cache(stack_input(&x_fake, &labels));
    let d_real: Vec<f64> = real_cache.output().iter().cloned().collect();
    let d_fake: Vec<f64> = fake_cache.output().iter().cloned().collect();
    let inv_b = 1.0 / b as f64;

    match config.regime {
        Regime::CwganGp => {
            let (core, _) = wgan_losses(&d_real, &d_fake)?;
            let eval = losses::gradient_penalty_eval(
                critic,
                &x_real,
                &x_fake,
                &labels,
                config.gp_lambda,
                config.gp_sampling,
                &mut batcher.rng,
            );

            let delta_real = DMatrix::from_element(1, b, -inv_b);
            let delta_fake = DMatrix::from_element(1, b, inv_b);
            let (mut grads, _) = critic.backward_from_logit_grad(&real_cache, delta_real);
            let (fake_grads, _) = critic.backward_from_logit_grad(&fake_cache, delta_fake);
            grads.add_assign(&fake_grads);
            let gp_grads = critic.penalty_param_grads(&eval.cache, &eval.deltas, &eval.v);
            grads.add_assign(&gp_grads);

            adam.step(critic, &grads);
            Ok((core + eval.penalty, core))
        }
        Regime::Cgan => {
            let (loss_d, _) = cgan_losses(&d_real, &d_fake)?;
            // Gradients taken in logit space: exact for the unclamped loss
            // and immune to saturated sigmoids.
            let delta_real = DMatrix::from_fn(1, b, |_, c| (d_real[c] - 1.0) * inv_b);
            let delta_fake = DMatrix::from_fn(1, b, |_, c| d_fake[c] * inv_b);
            let (mut grads, _) = critic.backward_from_logit_grad(&real_cache, delta_real);
            let (fake_grads, _) = critic.backward_from_logit_grad(&fake_cache, delta_fake);
            grads.add_assign(&fake_grads);

            adam.step(critic, &grads);
            Ok((loss_d, loss_d))
        }
    }
}

/// One generator update. Returns the generator loss.
fn generator_step(
    generator: &mut Mlp,
    adam: &mut Adam,
    critic: &Mlp,
    batcher: &mut Batcher,
    config: &TrainConfig,
) -> Result<f64, TrainError> {
    let b = config.batch_size;
    let (_, labels) = batcher.real_batch(b);
    let z = batcher.latent_batch(config.latent_dim, b);
    let gen_cache = generator.forward_cache(stack_input(&z, &labels));
    let x_fake = gen_cache.output().clone();

    let fake_cache = critic.forward_cache(stack_input(&x_fake, &labels));
    let d_fake: Vec<f64> = fake_cache.output().iter().cloned().collect();
    let inv_b = 1.0 / b as f64;

    let (loss_g, delta_fake) = match config.regime {
        Regime::CwganGp => {
            let (_, loss_g) = wgan_losses(&d_fake, &d_fake)?;
            (loss_g, DMatrix::from_element(1, b, -inv_b))
        }
        Regime::Cgan => match config.generator_loss {
            GeneratorLoss::NonSaturating => {
                let (_, loss_g) = cgan_losses(&d_fake, &d_fake)?;
                (loss_g, DMatrix::from_fn(1, b, |_, c| (d_fake[c] - 1.0) * inv_b))
            }
            GeneratorLoss::Minimax => {
                let clamp = |v: f64| v.clamp(losses::CLAMP_EPS, 1.0 - losses::CLAMP_EPS);
                let loss_g =
                    d_fake.iter().map(|&v| (1.0 - clamp(v)).ln()).sum::<f64>() * inv_b;
                (loss_g, DMatrix::from_fn(1, b, |_, c| -d_fake[c] * inv_b))
            }
        },
    };

    // The critic is frozen here: only its input gradient flows back.
    let (_, d_input) = critic.backward_from_logit_grad(&fake_cache, delta_fake);
    let d_x_fake = d_input.rows(0, x_fake.nrows()).into_owned();
    let (gen_grads, _) = generator.backward_from_output_grad(&gen_cache, &d_x_fake);
    adam.step(generator, &gen_grads);
    Ok(loss_g)
}

fn make_checkpoint(
    config: &TrainConfig,
    gen_spec: &GeneratorSpec,
    critic_spec: &CriticSpec,
    generator: &Mlp,
    critic: &Mlp,
) -> Checkpoint {
    Checkpoint {
        regime_tag: config.regime.tag().to_string(),
        seed: config.seed,
        gen_spec: gen_spec.clone(),
        critic_spec: critic_spec.clone(),
        generator: generator.clone(),
        critic: critic.clone(),
    }
}

/// Trains a generator/critic pair on the dataset.
///
/// `progress` is invoked once per outer iteration with the fresh loss
/// record. A non-finite loss aborts with a diagnostic snapshot of the
/// iteration and loss values.
pub fn train(
    manifest: &DatasetManifest,
    gen_spec: &GeneratorSpec,
    critic_spec: &CriticSpec,
    config: &TrainConfig,
    mut progress: Option<&mut dyn FnMut(&LossRecord)>,
) -> Result<TrainRun, TrainError> {
    config.validate()?;
    if manifest.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if critic_spec.head != config.regime.required_head() {
        return Err(TrainError::RegimeHeadMismatch {
            regime: config.regime,
            head: critic_spec.head,
        });
    }
    if gen_spec.output_dim != critic_spec.input_dim {
        return Err(TrainError::SpecMismatch {
            gen_out: gen_spec.output_dim,
            critic_in: critic_spec.input_dim,
        });
    }
    if gen_spec.latent_dim != config.latent_dim {
        return Err(TrainError::BadConfig(format!(
            "config latent_dim {} does not match generator spec latent_dim {}",
            config.latent_dim, gen_spec.latent_dim
        )));
    }

    let mut generator = Mlp::generator(gen_spec, &mut seed::rng(config.seed, "train/init/generator"))?;
    let mut critic = Mlp::critic(critic_spec, &mut seed::rng(config.seed, "train/init/critic"))?;
    let (beta1, beta2) = config.regime.adam_betas();
    let mut adam_gen = Adam::new(&generator, config.learning_rate, beta1, beta2);
    let mut adam_critic = Adam::new(&critic, config.learning_rate, beta1, beta2);
    let mut batcher = Batcher::new(manifest, config.seed);

    let mut loss_history = Vec::with_capacity(config.total_iterations as usize);
    let mut snapshots = Vec::new();

    for iteration in 0..config.total_iterations {
        let mut critic_acc = 0.0;
        let mut core_acc = 0.0;
        for _ in 0..config.critic_steps_per_iter {
            let (full, core) =
                critic_step(&mut critic, &mut adam_critic, &generator, &mut batcher, config)?;
            critic_acc += full;
            core_acc += core;
        }
        let loss_critic = critic_acc / config.critic_steps_per_iter as f64;
        let critic_core = core_acc / config.critic_steps_per_iter as f64;
        let loss_generator =
            generator_step(&mut generator, &mut adam_gen, &critic, &mut batcher, config)?;

        if !loss_critic.is_finite() || !loss_generator.is_finite() {
            return Err(TrainError::NanLoss { iteration, loss_critic, loss_generator });
        }

        let record = LossRecord { iteration, critic: loss_critic, generator: loss_generator, critic_core };
        if let Some(cb) = progress.as_deref_mut() {
            cb(&record);
        }
        loss_history.push(record);

        if config.checkpoint_cadence > 0 && (iteration + 1) % config.checkpoint_cadence == 0 {
            snapshots.push((
                iteration + 1,
                make_checkpoint(config, gen_spec, critic_spec, &generator, &critic),
            ));
        }
    }

    let final_checkpoint = make_checkpoint(config, gen_spec, critic_spec, &generator, &critic);
    Ok(TrainRun {
        config: config.clone(),
        loss_history,
        snapshots,
        final_checkpoint,
    })
}
