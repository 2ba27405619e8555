//! Conditional generator and critic networks with exact gradients.
//!
//! Both networks are fully connected multilayer perceptrons in f64. The
//! conditioning label is injected by concatenation onto the input of the
//! first layer: a generator consumes `[z; label]`, a critic `[x; label]`,
//! with the label always occupying the final input rows. Batches are stored
//! column-per-sample.
//!
//! Besides the usual parameter gradients, the critic exposes gradients of
//! its output with respect to its *input* — required by the Wasserstein
//! gradient penalty — and a second backward pass that differentiates that
//! input gradient with respect to the parameters. The latter is exact for
//! piecewise-linear hidden activations (the second derivative of the
//! activation vanishes almost everywhere), which is one reason the critic
//! uses leaky rectifier units and no batch normalization.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Standard deviation of the zero-mean normal weight initialization.
pub const INIT_WEIGHT_STD: f64 = 0.02;
/// Negative-side slope of the critic's leaky rectifier units.
pub const LEAKY_SLOPE: f64 = 0.2;

const CHECKPOINT_MAGIC: &str = "foilgen-checkpoint v1";

#[derive(Debug, Error)]
pub enum NetsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid network spec: {0}")]
    BadSpec(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint schema mismatch in {path}: expected {expected:?}, found {found:?}")]
    SchemaMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("checkpoint {path} is truncated or inconsistent: {detail}")]
    Malformed { path: PathBuf, detail: String },
}

/// Elementwise activation functions used by the networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    LeakyRelu,
    Identity,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    x
                } else {
                    LEAKY_SLOPE * x
                }
            }
            Activation::Identity => x,
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative as a function of the pre-activation value.
    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if pre >= 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Identity => 1.0,
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-pre).exp());
                s * (1.0 - s)
            }
        }
    }

    /// True when the second derivative vanishes almost everywhere.
    pub fn is_piecewise_linear(self) -> bool {
        matches!(self, Activation::Relu | Activation::LeakyRelu | Activation::Identity)
    }
}

/// Output nonlinearity of the critic: sigmoid for a cGAN discriminator,
/// linear for a Wasserstein critic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticHead {
    Sigmoid,
    Linear,
}

impl CriticHead {
    pub fn tag(self) -> &'static str {
        match self {
            CriticHead::Sigmoid => "sigmoid",
            CriticHead::Linear => "linear",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "sigmoid" => Some(CriticHead::Sigmoid),
            "linear" => Some(CriticHead::Linear),
            _ => None,
        }
    }

    fn activation(self) -> Activation {
        match self {
            CriticHead::Sigmoid => Activation::Sigmoid,
            CriticHead::Linear => Activation::Identity,
        }
    }
}

/// Architecture of the conditional generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub latent_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    pub label_dim: usize,
}

impl GeneratorSpec {
    /// The default architecture: hidden widths 64, 128, 256, 512 feeding a
    /// 496-dimensional shape vector, conditioned on one continuous label.
    pub fn with_latent_dim(latent_dim: usize) -> Self {
        Self {
            latent_dim,
            hidden_widths: vec![64, 128, 256, 512],
            output_dim: crate::geometry::SHAPE_DIM,
            label_dim: 1,
        }
    }

    pub fn validate(&self) -> Result<(), NetsError> {
        if self.latent_dim == 0 {
            return Err(NetsError::BadSpec("latent_dim must be at least 1".into()));
        }
        if self.output_dim == 0 || self.hidden_widths.iter().any(|&w| w == 0) {
            return Err(NetsError::BadSpec("zero-width layer".into()));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` for each layer in order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut fan_in = self.latent_dim + self.label_dim;
        for &w in &self.hidden_widths {
            dims.push((fan_in, w));
            fan_in = w;
        }
        dims.push((fan_in, self.output_dim));
        dims
    }

    /// Closed-form parameter count: `sum over layers of out * (in + 1)`.
    pub fn parameter_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| o * (i + 1)).sum()
    }
}

/// Architecture of the conditional critic / discriminator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    pub label_dim: usize,
    pub head: CriticHead,
}

impl CriticSpec {
    /// The default architecture: hidden widths 512, 256 feeding a scalar.
    pub fn with_head(head: CriticHead) -> Self {
        Self {
            input_dim: crate::geometry::SHAPE_DIM,
            hidden_widths: vec![512, 256],
            output_dim: 1,
            label_dim: 1,
            head,
        }
    }

    pub fn validate(&self) -> Result<(), NetsError> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_widths.iter().any(|&w| w == 0)
        {
            return Err(NetsError::BadSpec("zero-width layer".into()));
        }
        Ok(())
    }

    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut fan_in = self.input_dim + self.label_dim;
        for &w in &self.hidden_widths {
            dims.push((fan_in, w));
            fan_in = w;
        }
        dims.push((fan_in, self.output_dim));
        dims
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| o * (i + 1)).sum()
    }
}

/// One fully connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

/// A multilayer perceptron; the concrete parameter container behind both
/// network specs.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Per-layer parameter gradients, in the same declared order as [`Mlp`].
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub layers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl ParamGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        ParamGrads {
            layers: mlp
                .layers
                .iter()
                .map(|l| {
                    (
                        DMatrix::zeros(l.weights.nrows(), l.weights.ncols()),
                        DVector::zeros(l.bias.len()),
                    )
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            *w += ow;
            *b += ob;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in self.layers.iter_mut() {
            *w *= factor;
            *b *= factor;
        }
    }
}

/// Forward activations retained for the backward passes.
pub struct ForwardCache {
    /// Layer inputs: `post[0]` is the network input, `post[l]` the output of
    /// layer `l - 1`.
    pub post: Vec<DMatrix<f64>>,
    /// Pre-activation values per layer.
    pub pre: Vec<DMatrix<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &DMatrix<f64> {
        self.post.last().expect("cache always holds the input")
    }
}

fn init_layer(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, act: Activation) -> Layer {
    // Weights drawn in column-major declared order, biases zero.
    let weights = DMatrix::from_iterator(
        fan_out,
        fan_in,
        std::iter::repeat_with(|| INIT_WEIGHT_STD * rng.sample::<f64, _>(StandardNormal))
            .take(fan_out * fan_in),
    );
    Layer {
        weights,
        bias: DVector::zeros(fan_out),
        activation: act,
    }
}

impl Mlp {
    /// Fresh generator parameters: rectifier hidden layers, linear output
    /// (raw coordinates are not squashed).
    pub fn generator(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Self, NetsError> {
        spec.validate()?;
        let dims = spec.layer_dims();
        let last = dims.len() - 1;
        let layers = dims
            .iter()
            .enumerate()
            .map(|(l, &(fi, fo))| {
                let act = if l == last { Activation::Identity } else { Activation::Relu };
                init_layer(rng, fi, fo, act)
            })
            .collect();
        Ok(Mlp { layers })
    }

    /// Fresh critic parameters: leaky-rectifier hidden layers, head selected
    /// by the spec.
    pub fn critic(spec: &CriticSpec, rng: &mut ChaCha8Rng) -> Result<Self, NetsError> {
        spec.validate()?;
        let dims = spec.layer_dims();
        let last = dims.len() - 1;
        let layers = dims
            .iter()
            .enumerate()
            .map(|(l, &(fi, fo))| {
                let act = if l == last { spec.head.activation() } else { Activation::LeakyRelu };
                init_layer(rng, fi, fo, act)
            })
            .collect();
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weights.nrows()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// True when every hidden activation has an almost-everywhere-zero
    /// second derivative, the precondition of [`Mlp::penalty_param_grads`].
    pub fn hidden_piecewise_linear(&self) -> bool {
        self.layers
            .iter()
            .take(self.layers.len() - 1)
            .all(|l| l.activation.is_piecewise_linear())
    }

    pub fn output_activation(&self) -> Activation {
        self.layers.last().unwrap().activation
    }

    /// Batched forward pass; columns are samples.
    pub fn forward(&self, input: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = input.clone();
        for layer in &self.layers {
            let mut a = &layer.weights * z;
            for mut col in a.column_iter_mut() {
                col += &layer.bias;
            }
            a.apply(|v| *v = layer.activation.apply(*v));
            z = a;
        }
        z
    }

    /// Forward pass retaining pre- and post-activation values.
    pub fn forward_cache(&self, input: DMatrix<f64>) -> ForwardCache {
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        post.push(input);
        for layer in &self.layers {
            let mut a = &layer.weights * post.last().unwrap();
            for mut col in a.column_iter_mut() {
                col += &layer.bias;
            }
            pre.push(a.clone());
            a.apply(|v| *v = layer.activation.apply(*v));
            post.push(a);
        }
        ForwardCache { post, pre }
    }

    /// Backward pass seeded at the final layer's *pre-activation*:
    /// `delta_last[(i, s)] = d loss / d a_L[(i, s)]`. Returns parameter
    /// gradients (summed over the batch) and the loss gradient with respect
    /// to the network input.
    pub fn backward_from_logit_grad(
        &self,
        cache: &ForwardCache,
        delta_last: DMatrix<f64>,
    ) -> (ParamGrads, DMatrix<f64>) {
        let n_layers = self.layers.len();
        let mut grads = ParamGrads::zeros_like(self);
        let mut delta = delta_last;
        for l in (0..n_layers).rev() {
            grads.layers[l].0 = &delta * cache.post[l].transpose();
            grads.layers[l].1 = delta.column_sum();
            let back = self.layers[l].weights.tr_mul(&delta);
            if l > 0 {
                let mut scaled = back;
                scale_by_activation_derivative(&mut scaled, &cache.pre[l - 1], self.layers[l - 1].activation);
                delta = scaled;
            } else {
                return (grads, back);
            }
        }
        unreachable!("networks always have at least one layer");
    }

    /// Backward pass seeded at the network *output* (post-activation).
    pub fn backward_from_output_grad(
        &self,
        cache: &ForwardCache,
        grad_output: &DMatrix<f64>,
    ) -> (ParamGrads, DMatrix<f64>) {
        let last = self.layers.len() - 1;
        let mut delta = grad_output.clone();
        scale_by_activation_derivative(&mut delta, &cache.pre[last], self.layers[last].activation);
        self.backward_from_logit_grad(cache, delta)
    }

    /// Gradient of the (scalar) output with respect to the input, per
    /// sample, together with the per-layer deltas needed to differentiate
    /// that gradient again. Requires a scalar output.
    pub fn input_gradient_with_deltas(
        &self,
        cache: &ForwardCache,
    ) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        assert_eq!(self.output_dim(), 1, "input gradient is defined for scalar outputs");
        let n_layers = self.layers.len();
        let batch = cache.post[0].ncols();
        let mut deltas = vec![DMatrix::zeros(0, 0); n_layers];
        // Seed at the last pre-activation: d out / d a_L = sigma'(a_L).
        let mut seed = DMatrix::from_element(1, batch, 1.0);
        scale_by_activation_derivative(&mut seed, &cache.pre[n_layers - 1], self.layers[n_layers - 1].activation);
        deltas[n_layers - 1] = seed;
        for l in (0..n_layers - 1).rev() {
            let mut back = self.layers[l + 1].weights.tr_mul(&deltas[l + 1]);
            scale_by_activation_derivative(&mut back, &cache.pre[l], self.layers[l].activation);
            deltas[l] = back;
        }
        let g = self.layers[0].weights.tr_mul(&deltas[0]);
        (g, deltas)
    }

    /// Convenience: per-sample gradient of the scalar output w.r.t. the
    /// input.
    pub fn input_gradient(&self, cache: &ForwardCache) -> DMatrix<f64> {
        self.input_gradient_with_deltas(cache).0
    }

    /// Differentiates `sum_s v_s . g_s` with respect to the parameters,
    /// where `g_s` is the input gradient of sample `s` (as produced by
    /// [`Mlp::input_gradient_with_deltas`]) and `v` is treated as constant.
    ///
    /// Exact for piecewise-linear activations, where the backward graph is
    /// itself linear in the parameters almost everywhere; bias gradients
    /// vanish identically in that regime. Panics if a hidden activation is
    /// not piecewise linear or the output head is not.
    pub fn penalty_param_grads(
        &self,
        cache: &ForwardCache,
        deltas: &[DMatrix<f64>],
        v: &DMatrix<f64>,
    ) -> ParamGrads {
        assert!(
            self.hidden_piecewise_linear() && self.output_activation().is_piecewise_linear(),
            "the double backward requires piecewise-linear activations"
        );
        let n_layers = self.layers.len();
        let mut grads = ParamGrads::zeros_like(self);
        grads.layers[0].0 = &deltas[0] * v.transpose();
        let mut delta_bar = &self.layers[0].weights * v;
        for l in 0..n_layers - 1 {
            scale_by_activation_derivative(&mut delta_bar, &cache.pre[l], self.layers[l].activation);
            grads.layers[l + 1].0 = &deltas[l + 1] * delta_bar.transpose();
            delta_bar = &self.layers[l + 1].weights * delta_bar;
        }
        grads
    }
}

fn scale_by_activation_derivative(m: &mut DMatrix<f64>, pre: &DMatrix<f64>, act: Activation) {
    debug_assert_eq!(m.shape(), pre.shape());
    m.zip_apply(pre, |v, p| *v *= act.derivative(p));
}

/// Stacks a coordinate batch and a label row into critic input columns
/// `[x; label]`.
pub fn stack_input(x: &DMatrix<f64>, labels: &[f64]) -> DMatrix<f64> {
    assert_eq!(x.ncols(), labels.len());
    let mut out = DMatrix::zeros(x.nrows() + 1, x.ncols());
    out.view_mut((0, 0), (x.nrows(), x.ncols())).copy_from(x);
    for (j, &y) in labels.iter().enumerate() {
        out[(x.nrows(), j)] = y;
    }
    out
}

/// Runs the generator on one latent sample and label.
///
/// Deterministic in `(parameters, z, label)`; the output is a raw
/// coordinate vector whose geometric validity is deliberately unchecked.
pub fn generate(generator: &Mlp, z: &[f64], label: f64) -> Result<Vec<f64>, NetsError> {
    let expected = generator.input_dim() - 1;
    if z.len() != expected {
        return Err(NetsError::DimensionMismatch { expected, got: z.len() });
    }
    if !label.is_finite() {
        return Err(NetsError::BadSpec(format!("label must be finite, got {label}")));
    }
    let mut input = DMatrix::zeros(generator.input_dim(), 1);
    for (i, &v) in z.iter().enumerate() {
        input[(i, 0)] = v;
    }
    input[(expected, 0)] = label;
    Ok(generator.forward(&input).column(0).iter().cloned().collect())
}

/// Runs the critic on one coordinate vector and label, returning the scalar
/// score: in `(0, 1)` for a sigmoid head, unbounded for a linear one.
pub fn criticize(critic: &Mlp, x: &[f64], label: f64) -> Result<f64, NetsError> {
    let expected = critic.input_dim() - 1;
    if x.len() != expected {
        return Err(NetsError::DimensionMismatch { expected, got: x.len() });
    }
    let mut input = DMatrix::zeros(critic.input_dim(), 1);
    for (i, &v) in x.iter().enumerate() {
        input[(i, 0)] = v;
    }
    input[(expected, 0)] = label;
    Ok(critic.forward(&input)[(0, 0)])
}

/// A trained model state: both networks, their specs, the seed they were
/// trained with, and the loss regime tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub regime_tag: String,
    pub seed: u64,
    pub gen_spec: GeneratorSpec,
    pub critic_spec: CriticSpec,
    pub generator: Mlp,
    pub critic: Mlp,
}

fn widths_to_string(widths: &[usize]) -> String {
    widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ")
}

fn widths_from_string(s: &str) -> Result<Vec<usize>, String> {
    s.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| format!("bad width {t:?}")))
        .collect()
}

/// Writes a checkpoint: a key/value header followed by every parameter
/// tensor in declared order (layers in order; weights row by row, then the
/// bias). Floats are printed in shortest round-trip form, so save/load is
/// bit-exact.
pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), NetsError> {
    let io = |source| NetsError::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    let mut header = String::new();
    let _ = writeln!(header, "{CHECKPOINT_MAGIC}");
    let _ = writeln!(header, "regime = {}", ckpt.regime_tag);
    let _ = writeln!(header, "seed = {}", ckpt.seed);
    let _ = writeln!(header, "gen_latent_dim = {}", ckpt.gen_spec.latent_dim);
    let _ = writeln!(header, "gen_hidden = {}", widths_to_string(&ckpt.gen_spec.hidden_widths));
    let _ = writeln!(header, "gen_output_dim = {}", ckpt.gen_spec.output_dim);
    let _ = writeln!(header, "gen_label_dim = {}", ckpt.gen_spec.label_dim);
    let _ = writeln!(header, "critic_input_dim = {}", ckpt.critic_spec.input_dim);
    let _ = writeln!(header, "critic_hidden = {}", widths_to_string(&ckpt.critic_spec.hidden_widths));
    let _ = writeln!(header, "critic_output_dim = {}", ckpt.critic_spec.output_dim);
    let _ = writeln!(header, "critic_label_dim = {}", ckpt.critic_spec.label_dim);
    let _ = writeln!(header, "critic_head = {}", ckpt.critic_spec.head.tag());
    w.write_all(header.as_bytes()).map_err(io)?;

    for (name, mlp) in [("generator", &ckpt.generator), ("critic", &ckpt.critic)] {
        for (l, layer) in mlp.layers().iter().enumerate() {
            writeln!(
                w,
                "tensor {name}.layer{l}.weights {} {}",
                layer.weights.nrows(),
                layer.weights.ncols()
            )
            .map_err(io)?;
            let mut line = String::new();
            for r in 0..layer.weights.nrows() {
                line.clear();
                for c in 0..layer.weights.ncols() {
                    if c > 0 {
                        line.push(' ');
                    }
                    let _ = write!(line, "{}", layer.weights[(r, c)]);
                }
                line.push('\n');
                w.write_all(line.as_bytes()).map_err(io)?;
            }
            writeln!(w, "tensor {name}.layer{l}.bias {}", layer.bias.len()).map_err(io)?;
            line.clear();
            for (i, v) in layer.bias.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{v}");
            }
            line.push('\n');
            w.write_all(line.as_bytes()).map_err(io)?;
        }
    }
    writeln!(w, "end").map_err(io)?;
    w.flush().map_err(io)?;
    Ok(())
}

/// Reads a checkpoint written by [`save_checkpoint`], rejecting wrong magic
/// lines, spec/tensor mismatches, and truncation.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NetsError> {
    let io = |source| NetsError::Io { path: path.to_path_buf(), source };
    let malformed = |detail: String| NetsError::Malformed { path: path.to_path_buf(), detail };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut lines = BufReader::new(file).lines();
    let mut next_line = || -> Result<String, NetsError> {
        match lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(NetsError::Io { path: path.to_path_buf(), source: e }),
            None => Err(NetsError::Malformed {
                path: path.to_path_buf(),
                detail: "unexpected end of file".to_string(),
            }),
        }
    };

    let magic = next_line()?;
    if magic != CHECKPOINT_MAGIC {
        return Err(NetsError::SchemaMismatch {
            path: path.to_path_buf(),
            expected: CHECKPOINT_MAGIC.to_string(),
            found: magic,
        });
    }

    let mut kv = std::collections::BTreeMap::new();
    let pending_tensor_line = loop {
        let line = next_line()?;
        if line.starts_with("tensor ") {
            break Some(line);
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| malformed(format!("expected `key = value`, got {line:?}")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    };
    let get = |key: &str| -> Result<&String, NetsError> {
        kv.get(key).ok_or_else(|| NetsError::Malformed {
            path: path.to_path_buf(),
            detail: format!("missing header key {key:?}"),
        })
    };
    let parse_usize = |key: &str| -> Result<usize, NetsError> {
        get(key)?.parse().map_err(|_| NetsError::Malformed {
            path: path.to_path_buf(),
            detail: format!("bad integer for {key:?}"),
        })
    };

    let regime_tag = get("regime")?.clone();
    let seed: u64 = get("seed")?.parse().map_err(|_| malformed("bad seed".into()))?;
    let gen_spec = GeneratorSpec {
        latent_dim: parse_usize("gen_latent_dim")?,
        hidden_widths: widths_from_string(get("gen_hidden")?).map_err(&malformed)?,
        output_dim: parse_usize("gen_output_dim")?,
        label_dim: parse_usize("gen_label_dim")?,
    };
    let critic_spec = CriticSpec {
        input_dim: parse_usize("critic_input_dim")?,
        hidden_widths: widths_from_string(get("critic_hidden")?).map_err(&malformed)?,
        output_dim: parse_usize("critic_output_dim")?,
        label_dim: parse_usize("critic_label_dim")?,
        head: CriticHead::from_tag(get("critic_head")?)
            .ok_or_else(|| malformed(format!("unknown critic head {:?}", kv["critic_head"])))?,
    };

    let mut read_mlp = |name: &str,
                        dims: Vec<(usize, usize)>,
                        acts: Vec<Activation>,
                        first_line: Option<String>|
     -> Result<(Mlp, Option<String>), NetsError> {
        let mut layers = Vec::with_capacity(dims.len());
        let mut carry = first_line;
        for (l, &(fi, fo)) in dims.iter().enumerate() {
            let head_line = match carry.take() {
                Some(line) => line,
                None => next_line()?,
            };
            let expected = format!("tensor {name}.layer{l}.weights {fo} {fi}");
            if head_line != expected {
                return Err(NetsError::Malformed {
                    path: path.to_path_buf(),
                    detail: format!("spec mismatch: expected {expected:?}, found {head_line:?}"),
                });
            }
            let mut weights = DMatrix::zeros(fo, fi);
            for r in 0..fo {
                let row = next_line()?;
                let mut count = 0;
                for (c, tok) in row.split_whitespace().enumerate() {
                    if c >= fi {
                        return Err(NetsError::Malformed {
                            path: path.to_path_buf(),
                            detail: format!("row {r} of {name}.layer{l} too long"),
                        });
                    }
                    weights[(r, c)] = tok.parse().map_err(|_| NetsError::Malformed {
                        path: path.to_path_buf(),
                        detail: format!("bad float {tok:?} in {name}.layer{l}"),
                    })?;
                    count += 1;
                }
                if count != fi {
                    return Err(NetsError::Malformed {
                        path: path.to_path_buf(),
                        detail: format!("row {r} of {name}.layer{l} has {count} values, expected {fi}"),
                    });
                }
            }
            let bias_head = next_line()?;
            let expected_bias = format!("tensor {name}.layer{l}.bias {fo}");
            if bias_head != expected_bias {
                return Err(NetsError::Malformed {
                    path: path.to_path_buf(),
                    detail: format!("spec mismatch: expected {expected_bias:?}, found {bias_head:?}"),
                });
            }
            let bias_line = next_line()?;
            let vals: Result<Vec<f64>, _> = bias_line.split_whitespace().map(|t| t.parse::<f64>()).collect();
            let vals = vals.map_err(|_| malformed(format!("bad bias floats in {name}.layer{l}")))?;
            if vals.len() != fo {
                return Err(NetsError::Malformed {
                    path: path.to_path_buf(),
                    detail: format!("bias of {name}.layer{l} has {} values, expected {fo}", vals.len()),
                });
            }
            layers.push(Layer {
                weights,
                bias: DVector::from_vec(vals),
                activation: acts[l],
            });
        }
        Ok((Mlp { layers }, None))
    };

    let gen_dims = gen_spec.layer_dims();
    let gen_acts: Vec<Activation> = (0..gen_dims.len())
        .map(|l| if l == gen_dims.len() - 1 { Activation::Identity } else { Activation::Relu })
        .collect();
    let (generator, _) = read_mlp("generator", gen_dims, gen_acts, pending_tensor_line)?;

    let critic_dims = critic_spec.layer_dims();
    let critic_acts: Vec<Activation> = (0..critic_dims.len())
        .map(|l| {
            if l == critic_dims.len() - 1 {
                critic_spec.head.activation()
            } else {
                Activation::LeakyRelu
            }
        })
        .collect();
    let (critic, _) = read_mlp("critic", critic_dims, critic_acts, None)?;

    let terminator = next_line()?;
    if terminator != "end" {
        return Err(malformed(format!("expected terminator, found {terminator:?}")));
    }

    Ok(Checkpoint { regime_tag, seed, gen_spec, critic_spec, generator, critic })
}
