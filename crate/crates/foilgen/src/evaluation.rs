//! The label-sweep evaluation protocol.
//!
//! A trained generator is swept over a grid of lift-coefficient labels;
//! for each label a fixed number of shapes is generated from fresh seeded
//! latents, every shape's lift coefficient is recalculated with a solver
//! backend, and each sample is classified as non-converged (the solver
//! failed — the proxy for a non-smooth shape), a success (recalculated value
//! within the failure threshold of the label) or a failure. Per-label and
//! aggregate tables also carry the label-conditional mean squared error and
//! the diversity measure mu.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::aero::{ClBackend, ClResult, FlowCondition};
use crate::geometry::AirfoilShape;
use crate::nets::Checkpoint;
use crate::seed;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid sweep configuration: {0}")]
    BadConfig(String),
    #[error("checkpoint generator output dim {got} is not a shape vector (expected {expected})")]
    SpecMismatch { expected: usize, got: usize },
    #[error("diversity needs at least two shapes, got {0}")]
    TooFewShapes(usize),
    #[error("shape vectors must share a dimension: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// An inclusive arithmetic label grid, held in scaled-integer form so the
/// printed labels stay exact decimals (0.1, 0.11, ... 1.5).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSequence {
    start_num: i64,
    step_num: i64,
    count: usize,
    denom: i64,
}

impl LabelSequence {
    /// The default grid: 0.10 to 1.50 inclusive in steps of 0.01.
    pub fn default_grid() -> Self {
        Self::from_scaled(10, 1, 150, 100).expect("static grid is valid")
    }

    pub fn from_scaled(start: i64, step: i64, end: i64, denom: i64) -> Result<Self, EvalError> {
        if step <= 0 || denom <= 0 {
            return Err(EvalError::BadConfig("label step must be positive".to_string()));
        }
        if end < start {
            return Err(EvalError::BadConfig("label end precedes start".to_string()));
        }
        let count = ((end - start) / step + 1) as usize;
        Ok(Self { start_num: start, step_num: step, count, denom })
    }

    /// Parses `"start:step:end"` with plain decimal components.
    pub fn parse(spec: &str) -> Result<Self, EvalError> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(EvalError::BadConfig(format!(
                "label range must be start:step:end, got {spec:?}"
            )));
        }
        let decimals = parts
            .iter()
            .map(|p| parse_decimal(p))
            .collect::<Result<Vec<_>, _>>()?;
        let max_dp = decimals.iter().map(|d| d.1).max().unwrap_or(0);
        let scale = |(num, dp): (i64, u32)| num * 10_i64.pow(max_dp - dp);
        Self::from_scaled(
            scale(decimals[0]),
            scale(decimals[1]),
            scale(decimals[2]),
            10_i64.pow(max_dp),
        )
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn label(&self, i: usize) -> f64 {
        (self.start_num + self.step_num * i as i64) as f64 / self.denom as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.label(i))
    }
}

/// `(numerator, decimal places)` of a plain decimal literal.
fn parse_decimal(s: &str) -> Result<(i64, u32), EvalError> {
    let bad = || EvalError::BadConfig(format!("bad decimal {s:?}"));
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if frac_part.len() > 9 || int_part.len() > 9 {
        return Err(bad());
    }
    let int: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
    if int < 0 {
        return Err(bad());
    }
    let frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
    let dp = frac_part.len() as u32;
    Ok((int * 10_i64.pow(dp) + frac, dp))
}

/// Configuration of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub labels: LabelSequence,
    pub samples_per_label: usize,
    pub failure_threshold: f64,
    pub seed: u64,
    /// Labels (matched on the grid within 1e-9) whose generated shapes are
    /// exported as coordinate files.
    pub export_labels: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            labels: LabelSequence::default_grid(),
            samples_per_label: 20,
            failure_threshold: 0.2,
            seed: 0,
            export_labels: vec![0.1, 0.5, 1.0, 1.4],
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.samples_per_label < 2 {
            return Err(EvalError::BadConfig(
                "samples_per_label must be at least 2 (mu needs two shapes)".to_string(),
            ));
        }
        if !(self.failure_threshold > 0.0) {
            return Err(EvalError::BadConfig("failure threshold must be positive".to_string()));
        }
        if self.labels.is_empty() {
            return Err(EvalError::BadConfig("label grid is empty".to_string()));
        }
        Ok(())
    }
}

/// Classification of one generated sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    NonConverged,
    Success,
    Failure,
}

/// Classifies a recalculation against its target label: non-convergence
/// takes precedence; otherwise the sample succeeds iff the absolute error is
/// within the threshold.
pub fn classify(label: f64, result: &ClResult, threshold: f64) -> Outcome {
    match result.cl() {
        None => Outcome::NonConverged,
        Some(cl) => {
            if (cl - label).abs() <= threshold {
                Outcome::Success
            } else {
                Outcome::Failure
            }
        }
    }
}

/// Diversity of a set of shape vectors: the mean squared Euclidean deviation
/// from the element-wise mean shape. Zero iff all shapes are identical.
pub fn diversity_mu<S: AsRef<[f64]>>(shapes: &[S]) -> Result<f64, EvalError> {
    if shapes.len() < 2 {
        return Err(EvalError::TooFewShapes(shapes.len()));
    }
    let dim = shapes[0].as_ref().len();
    for s in shapes {
        if s.as_ref().len() != dim {
            return Err(EvalError::DimensionMismatch(dim, s.as_ref().len()));
        }
    }
    // Center on the first shape before averaging: identical shapes then
    // yield exactly zero instead of accumulated rounding noise.
    let n = shapes.len() as f64;
    let base = shapes[0].as_ref();
    let mut mean_offset = vec![0.0; dim];
    for s in shapes {
        for ((m, v), b) in mean_offset.iter_mut().zip(s.as_ref()).zip(base) {
            *m += v - b;
        }
    }
    mean_offset.iter_mut().for_each(|m| *m /= n);
    let mut acc = 0.0;
    for s in shapes {
        acc += s
            .as_ref()
            .iter()
            .zip(base)
            .zip(&mean_offset)
            .map(|((v, b), m)| {
                let d = (v - b) - m;
                d * d
            })
            .sum::<f64>();
    }
    Ok(acc / n)
}

/// Everything recorded about one generated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub label_index: usize,
    pub sample_index: usize,
    pub coords: Vec<f64>,
    pub outcome: Outcome,
    pub cl_recalc: Option<f64>,
}

/// Per-label metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub label: f64,
    pub n_nonconverged: usize,
    pub n_failure: usize,
    pub n_success: usize,
    /// Mean squared label error over converged samples; NaN when none
    /// converged.
    pub mse: f64,
    pub mu: f64,
    pub smooth_rate: f64,
}

/// Sweep-wide metrics. Rates are over all samples; `mse` weights labels
/// equally (labels with no converged samples are skipped), `mse_pooled`
/// weights converged samples equally; `mu` is the mean of per-label mu, so
/// it measures within-label variety rather than label-driven variation.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub rate_nonconverged: f64,
    pub rate_failure: f64,
    pub rate_success: f64,
    pub mse: f64,
    pub mse_pooled: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub solver_id: String,
    pub regime_tag: String,
    pub rows: Vec<LabelRow>,
    pub aggregate: Aggregate,
    pub samples: Vec<SampleRecord>,
}

/// Runs the sweep protocol on a trained checkpoint.
///
/// For each label, `samples_per_label` latent vectors are drawn from a
/// label-specific seeded stream, shapes are generated, and their lift
/// coefficients recalculated with the backend (in parallel; the report is
/// assembled in deterministic order). With the internal panel backend the
/// whole sweep is a pure function of the checkpoint and seed.
pub fn run_sweep(
    checkpoint: &Checkpoint,
    config: &SweepConfig,
    backend: &dyn ClBackend,
    flow: &FlowCondition,
) -> Result<SweepReport, EvalError> {
    config.validate()?;
    let generator = &checkpoint.generator;
    if checkpoint.gen_spec.output_dim != crate::geometry::SHAPE_DIM {
        return Err(EvalError::SpecMismatch {
            expected: crate::geometry::SHAPE_DIM,
            got: checkpoint.gen_spec.output_dim,
        });
    }
    let latent_dim = checkpoint.gen_spec.latent_dim;
    let per = config.samples_per_label;

    // Generate deterministically, label by label.
    let mut all_coords: Vec<Vec<f64>> = Vec::with_capacity(config.labels.len() * per);
    for (li, label) in config.labels.iter().enumerate() {
        let mut rng = seed::rng(config.seed, &format!("sweep/label/{li}"));
        let z = DMatrix::from_iterator(
            latent_dim,
            per,
            std::iter::repeat_with(|| rng.sample::<f64, _>(StandardNormal)).take(latent_dim * per),
        );
        let labels = vec![label; per];
        let out = generator.forward(&crate::nets::stack_input(&z, &labels));
        for c in 0..per {
            all_coords.push(out.column(c).iter().cloned().collect());
        }
    }

    // Recalculate lift in parallel; order is preserved by collect.
    let results: Vec<ClResult> = all_coords
        .par_iter()
        .map(|coords| {
            let shape = AirfoilShape::from_vec(coords.clone()).expect("dims checked above");
            backend.compute_cl(&shape, flow)
        })
        .collect();

    let mut samples = Vec::with_capacity(all_coords.len());
    let mut rows = Vec::with_capacity(config.labels.len());
    let mut pooled_sq_err = 0.0;
    let mut pooled_converged = 0usize;

    for (li, label) in config.labels.iter().enumerate() {
        let base = li * per;
        let mut counts = (0usize, 0usize, 0usize); // nonconverged, failure, success
        let mut sq_err = 0.0;
        let mut converged = 0usize;
        for si in 0..per {
            let result = &results[base + si];
            let outcome = classify(label, result, config.failure_threshold);
            match outcome {
                Outcome::NonConverged => counts.0 += 1,
                Outcome::Failure => counts.1 += 1,
                Outcome::Success => counts.2 += 1,
            }
            if let Some(cl) = result.cl() {
                sq_err += (cl - label) * (cl - label);
                converged += 1;
            }
            samples.push(SampleRecord {
                label_index: li,
                sample_index: si,
                coords: all_coords[base + si].clone(),
                outcome,
                cl_recalc: result.cl(),
            });
        }
        pooled_sq_err += sq_err;
        pooled_converged += converged;
        let mu = diversity_mu(&all_coords[base..base + per])?;
        rows.push(LabelRow {
            label,
            n_nonconverged: counts.0,
            n_failure: counts.1,
            n_success: counts.2,
            mse: if converged > 0 { sq_err / converged as f64 } else { f64::NAN },
            mu,
            smooth_rate: 1.0 - counts.0 as f64 / per as f64,
        });
    }

    let total = (config.labels.len() * per) as f64;
    let labels_with_converged: Vec<&LabelRow> = rows.iter().filter(|r| !r.mse.is_nan()).collect();
    let aggregate = Aggregate {
        rate_nonconverged: rows.iter().map(|r| r.n_nonconverged).sum::<usize>() as f64 / total,
        rate_failure: rows.iter().map(|r| r.n_failure).sum::<usize>() as f64 / total,
        rate_success: rows.iter().map(|r| r.n_success).sum::<usize>() as f64 / total,
        mse: if labels_with_converged.is_empty() {
            f64::NAN
        } else {
            labels_with_converged.iter().map(|r| r.mse).sum::<f64>()
                / labels_with_converged.len() as f64
        },
        mse_pooled: if pooled_converged > 0 {
            pooled_sq_err / pooled_converged as f64
        } else {
            f64::NAN
        },
        mu: rows.iter().map(|r| r.mu).sum::<f64>() / rows.len() as f64,
    };

    Ok(SweepReport {
        config: config.clone(),
        solver_id: backend.solver_id().to_string(),
        regime_tag: checkpoint.regime_tag.clone(),
        rows,
        aggregate,
        samples,
    })
}

fn write_file(path: &Path, content: &str) -> Result<(), EvalError> {
    std::fs::write(path, content).map_err(|source| EvalError::Io { path: path.to_path_buf(), source })
}

/// Emits the report files into `out_dir`:
///
/// * `sweep_table.csv` — one row per label plus an aggregate row
/// * `scatter.csv` — `(label, recalculated cl)` for every converged sample
/// * `smooth_rate.csv`, `mse.csv`, `mu.csv` — per-label series
/// * `summary.txt` — aggregate metrics as `key = value` lines
/// * `shapes/label_<label>/sample_<k>.dat` — coordinate exports for the
///   configured label subset
///
/// Reruns with the same report content are byte-identical.
pub fn emit_report(report: &SweepReport, out_dir: &Path) -> Result<(), EvalError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|source| EvalError::Io { path: out_dir.to_path_buf(), source })?;

    let mut table = String::from("label,n_nonconv,n_fail,n_success,mse,mu,smooth_rate\n");
    for r in &report.rows {
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{}",
            r.label, r.n_nonconverged, r.n_failure, r.n_success, r.mse, r.mu, r.smooth_rate
        );
    }
    let a = &report.aggregate;
    let _ = writeln!(
        table,
        "aggregate,{},{},{},{},{},{}",
        report.rows.iter().map(|r| r.n_nonconverged).sum::<usize>(),
        report.rows.iter().map(|r| r.n_failure).sum::<usize>(),
        report.rows.iter().map(|r| r.n_success).sum::<usize>(),
        a.mse,
        a.mu,
        1.0 - a.rate_nonconverged,
    );
    write_file(&out_dir.join("sweep_table.csv"), &table)?;

    let mut scatter = String::from("label,cl_recalc\n");
    for s in &report.samples {
        if let Some(cl) = s.cl_recalc {
            let _ = writeln!(scatter, "{},{}", report.config.labels.label(s.label_index), cl);
        }
    }
    write_file(&out_dir.join("scatter.csv"), &scatter)?;

    for (name, f) in [
        ("smooth_rate.csv", &(|r: &LabelRow| r.smooth_rate) as &dyn Fn(&LabelRow) -> f64),
        ("mse.csv", &|r: &LabelRow| r.mse),
        ("mu.csv", &|r: &LabelRow| r.mu),
    ] {
        let mut series = String::from("label,value\n");
        for r in &report.rows {
            let _ = writeln!(series, "{},{}", r.label, f(r));
        }
        write_file(&out_dir.join(name), &series)?;
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "regime = {}", report.regime_tag);
    let _ = writeln!(summary, "solver_id = {}", report.solver_id);
    let _ = writeln!(summary, "labels = {}", report.rows.len());
    let _ = writeln!(summary, "samples_per_label = {}", report.config.samples_per_label);
    let _ = writeln!(summary, "failure_threshold = {}", report.config.failure_threshold);
    let _ = writeln!(summary, "seed = {}", report.config.seed);
    let _ = writeln!(summary, "rate_nonconverged = {}", a.rate_nonconverged);
    let _ = writeln!(summary, "rate_failure = {}", a.rate_failure);
    let _ = writeln!(summary, "rate_success = {}", a.rate_success);
    let _ = writeln!(summary, "mse = {}", a.mse);
    let _ = writeln!(summary, "mse_pooled = {}", a.mse_pooled);
    let _ = writeln!(summary, "mu = {}", a.mu);
    write_file(&out_dir.join("summary.txt"), &summary)?;

    // Coordinate exports for the configured subset of labels.
    for (li, label) in report.config.labels.iter().enumerate() {
        if !report.config.export_labels.iter().any(|e| (e - label).abs() < 1e-9) {
            continue;
        }
        let dir = out_dir.join("shapes").join(format!("label_{label}"));
        std::fs::create_dir_all(&dir)
            .map_err(|source| EvalError::Io { path: dir.clone(), source })?;
        for s in report.samples.iter().filter(|s| s.label_index == li) {
            let shape = AirfoilShape::from_vec(s.coords.clone()).expect("sweep shapes are 496-d");
            let path = dir.join(format!("sample_{:02}.dat", s.sample_index));
            let mut buf = Vec::new();
            crate::aero::xfoil::write_coordinate_file(
                &mut buf,
                &format!("label {label} sample {:02}", s.sample_index),
                &shape,
            )
            .map_err(|source| EvalError::Io { path: path.clone(), source })?;
            std::fs::write(&path, buf)
                .map_err(|source| EvalError::Io { path: path.clone(), source })?;
        }
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aero::PanelSolver;
    use crate::nets::{CriticHead, CriticSpec, GeneratorSpec, Mlp};
    use proptest::prelude::*;

    #[test]
    fn default_grid_has_141_labels_with_exact_decimals() {
        let grid = LabelSequence::default_grid();
        assert_eq!(grid.len(), 141);
        assert_eq!(grid.label(0), 0.1);
        assert_eq!(grid.label(1), 0.11);
        assert_eq!(grid.label(40), 0.5);
        assert_eq!(grid.label(140), 1.5);
    }

    #[test]
    fn parse_label_range() {
        let grid = LabelSequence::parse("0.5:0.5:1.0").unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid.label(0), 0.5);
        assert_eq!(grid.label(1), 1.0);
        assert!(LabelSequence::parse("1.0:0:2.0").is_err());
        assert!(LabelSequence::parse("oops").is_err());
    }

    #[test]
    fn classify_threshold_arithmetic() {
        let t = 0.2;
        assert_eq!(classify(0.5, &ClResult::converged(0.65), t), Outcome::Success);
        assert_eq!(classify(0.5, &ClResult::converged(0.71), t), Outcome::Failure);
        assert_eq!(
            classify(0.5, &ClResult::non_converged(vec!["x".into()]), t),
            Outcome::NonConverged
        );
        // Boundary is inclusive.
        assert_eq!(classify(0.5, &ClResult::converged(0.7), t), Outcome::Success);
    }

    #[test]
    fn mu_of_identical_shapes_is_zero() {
        let shapes = vec![vec![0.3, -0.2, 1.0]; 20];
        assert_eq!(diversity_mu(&shapes).unwrap(), 0.0);
    }

    #[test]
    fn mu_of_opposite_vectors_is_squared_norm() {
        let v = vec![3.0, 4.0];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let mu = diversity_mu(&[v.clone(), neg]).unwrap();
        assert!((mu - 25.0).abs() < 1e-12);
    }

    #[test]
    fn mu_needs_two_shapes() {
        assert!(matches!(
            diversity_mu(&[vec![1.0, 2.0]]),
            Err(EvalError::TooFewShapes(1))
        ));
    }

    proptest! {
        #[test]
        fn mu_invariances(
            seed in 0u64..1000,
            n in 2usize..8,
            dim in 1usize..6,
            shift in -10.0f64..10.0,
            scale in 0.1f64..4.0,
        ) {
            use rand::Rng as _;
            let mut rng = crate::seed::rng(seed, "test/mu");
            let shapes: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let mu = diversity_mu(&shapes).unwrap();
            prop_assert!(mu >= 0.0);

            // Translation invariance.
            let shifted: Vec<Vec<f64>> = shapes
                .iter()
                .map(|s| s.iter().map(|v| v + shift).collect())
                .collect();
            let mu_shift = diversity_mu(&shifted).unwrap();
            prop_assert!((mu - mu_shift).abs() <= 1e-9 * (1.0 + mu));

            // Permutation invariance.
            let mut permuted = shapes.clone();
            permuted.rotate_left(n / 2);
            let mu_perm = diversity_mu(&permuted).unwrap();
            prop_assert!((mu - mu_perm).abs() <= 1e-12 * (1.0 + mu));

            // Quadratic scaling.
            let scaled: Vec<Vec<f64>> = shapes
                .iter()
                .map(|s| s.iter().map(|v| v * scale).collect())
                .collect();
            let mu_scaled = diversity_mu(&scaled).unwrap();
            prop_assert!((mu_scaled - scale * scale * mu).abs() <= 1e-9 * (1.0 + mu_scaled));
        }
    }

    fn untrained_checkpoint() -> Checkpoint {
        let gen_spec = GeneratorSpec::with_latent_dim(3);
        let critic_spec = CriticSpec::with_head(CriticHead::Linear);
        Checkpoint {
            regime_tag: "cwgan-gp".to_string(),
            seed: 5,
            generator: Mlp::generator(&gen_spec, &mut crate::seed::rng(5, "g")).unwrap(),
            critic: Mlp::critic(&critic_spec, &mut crate::seed::rng(5, "c")).unwrap(),
            gen_spec,
            critic_spec,
        }
    }

    fn small_config() -> SweepConfig {
        SweepConfig {
            labels: LabelSequence::parse("0.5:0.5:1.0").unwrap(),
            samples_per_label: 2,
            failure_threshold: 0.2,
            seed: 3,
            export_labels: vec![0.5],
        }
    }

    #[test]
    fn small_sweep_is_well_formed() {
        let ckpt = untrained_checkpoint();
        let config = small_config();
        let flow = FlowCondition::new(5.0, 3.0e6).unwrap();
        let report = run_sweep(&ckpt, &config, &PanelSolver, &flow).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.samples.len(), 4);
        for r in &report.rows {
            assert_eq!(r.n_nonconverged + r.n_failure + r.n_success, 2);
            assert!((r.smooth_rate - (1.0 - r.n_nonconverged as f64 / 2.0)).abs() < 1e-12);
        }
        let a = &report.aggregate;
        assert!((a.rate_nonconverged + a.rate_failure + a.rate_success - 1.0).abs() < 1e-12);
        // Sample-weighted aggregation of per-label rates.
        let mean_nonconv = report
            .rows
            .iter()
            .map(|r| r.n_nonconverged as f64 / 2.0)
            .sum::<f64>()
            / report.rows.len() as f64;
        assert!((a.rate_nonconverged - mean_nonconv).abs() < 1e-12);
    }

    #[test]
    fn sweep_and_report_are_deterministic() {
        let ckpt = untrained_checkpoint();
        let config = small_config();
        let flow = FlowCondition::new(5.0, 3.0e6).unwrap();
        let a = run_sweep(&ckpt, &config, &PanelSolver, &flow).unwrap();
        let b = run_sweep(&ckpt, &config, &PanelSolver, &flow).unwrap();
        // Struct equality fails on NaN mse entries by design; the contract
        // is byte-identical emitted files.
        assert_eq!(a.samples, b.samples);

        let dir = tempfile::tempdir().unwrap();
        let (da, db) = (dir.path().join("a"), dir.path().join("b"));
        emit_report(&a, &da).unwrap();
        emit_report(&b, &db).unwrap();
        for name in ["sweep_table.csv", "scatter.csv", "smooth_rate.csv", "mse.csv", "mu.csv", "summary.txt"] {
            let fa = std::fs::read(da.join(name)).unwrap();
            let fb = std::fs::read(db.join(name)).unwrap();
            assert_eq!(fa, fb, "{name} differs between identical runs");
        }
    }

    #[test]
    fn report_table_has_rows_plus_aggregate_and_exports() {
        let ckpt = untrained_checkpoint();
        let config = small_config();
        let flow = FlowCondition::new(5.0, 3.0e6).unwrap();
        let report = run_sweep(&ckpt, &config, &PanelSolver, &flow).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report, dir.path()).unwrap();

        let table = std::fs::read_to_string(dir.path().join("sweep_table.csv")).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "label,n_nonconv,n_fail,n_success,mse,mu,smooth_rate");
        assert_eq!(lines.len(), 1 + 2 + 1); // header + labels + aggregate
        assert!(lines.last().unwrap().starts_with("aggregate,"));

        // Export subset: 2 samples for label 0.5, each a 248-point file.
        let export_dir = dir.path().join("shapes").join("label_0.5");
        let mut files: Vec<_> = std::fs::read_dir(&export_dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        assert_eq!(files.len(), 2);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text.lines().count(), 1 + crate::geometry::SURFACE_POINTS);
    }
}
