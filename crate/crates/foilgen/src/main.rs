//! `foilgen` command-line interface: dataset construction, training, shape
//! generation, label sweeps, report rendering, and the JS identity check.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::Rng;

use foilgen::aero::{ClBackend, FlowCondition, PanelSolver, XfoilBackend};
use foilgen::config::{FileConfig, TrainSection};
use foilgen::dataset;
use foilgen::evaluation::{self, LabelSequence, SweepConfig};
use foilgen::geometry::Naca4Code;
use foilgen::nets::{self, CriticHead, CriticSpec, GeneratorSpec};
use foilgen::seed;
use foilgen::training::{self, Regime, TrainConfig};

const DEFAULT_ALPHA_DEG: f64 = 5.0;
const DEFAULT_REYNOLDS: f64 = 3.0e6;
/// Environment variable naming the XFoil executable.
const XFOIL_ENV: &str = "FOILGEN_XFOIL";

#[derive(Parser)]
#[command(name = "foilgen", version, about = "Airfoil dataset construction, conditional adversarial training, and evaluation")]
struct Cli {
    /// TOML configuration file; flags override file values
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; component streams are derived from it
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel lift evaluation (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Overwrite existing output files
    #[arg(long, global = true)]
    force: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate NACA codes, label them with a solver, and write the dataset
    BuildDataset {
        /// Run directory; the dataset lands in <out>/dataset/
        #[arg(long)]
        out: PathBuf,
        /// Angle of attack in degrees
        #[arg(long)]
        alpha: Option<f64>,
        /// Reynolds number
        #[arg(long)]
        reynolds: Option<f64>,
        /// Lift backend: panel | xfoil
        #[arg(long)]
        backend: Option<String>,
        /// "all" or a comma-separated list of 4-digit codes
        #[arg(long)]
        codes: Option<String>,
        /// Path to the XFoil executable (overrides env and config)
        #[arg(long)]
        xfoil_path: Option<PathBuf>,
    },
    /// Train a conditional generator/critic pair
    Train {
        /// Dataset table written by build-dataset
        #[arg(long)]
        dataset: PathBuf,
        /// Run directory; checkpoints land in <out>/checkpoints/
        #[arg(long)]
        out: PathBuf,
        /// Loss regime: cgan | cwgan-gp
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        latent_dim: Option<usize>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        gp_lambda: Option<f64>,
        #[arg(long)]
        critic_steps: Option<usize>,
        /// Snapshot cadence in iterations (0 = final checkpoint only)
        #[arg(long)]
        checkpoint_cadence: Option<u64>,
        /// Console loss cadence in iterations
        #[arg(long)]
        log_every: Option<u64>,
    },
    /// Generate shapes from a checkpoint at a fixed label
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Conditioning lift coefficient
        #[arg(long)]
        label: f64,
        /// Number of shapes
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Output directory; coordinate files land in <out>/shapes/
        #[arg(long)]
        out: PathBuf,
        /// Recalculate lift for each generated shape with the panel solver
        #[arg(long)]
        evaluate: bool,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        reynolds: Option<f64>,
    },
    /// Sweep labels, recalculate lift, classify, and write the report
    Sweep {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Run directory; report files land in <out>/sweep/
        #[arg(long)]
        out: PathBuf,
        /// Lift backend: panel | xfoil
        #[arg(long)]
        backend: Option<String>,
        /// Label grid start:step:end (plain decimals)
        #[arg(long)]
        labels: Option<String>,
        /// Shapes generated per label
        #[arg(long)]
        n: Option<usize>,
        /// Failure threshold on |recalculated - label|
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        reynolds: Option<f64>,
        #[arg(long)]
        xfoil_path: Option<PathBuf>,
    },
    /// Print the summary of an existing sweep directory
    Report {
        /// A sweep directory previously written by `sweep`
        #[arg(long)]
        sweep: PathBuf,
    },
    /// Check the optimal-discriminator identity on random distributions
    JsCheck {
        /// Number of random distribution pairs
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

enum CliError {
    /// Flag misuse, bad config values, missing inputs: exit 1.
    Usage(String),
    /// Failures during the run itself: exit 2.
    Runtime(String),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_config = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(CliError::usage)?,
        None => FileConfig::default(),
    };
    let master_seed = cli.seed.or(file_config.seed).unwrap_or(0);
    let jobs = cli.jobs.or(file_config.jobs).unwrap_or(0);
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }

    match cli.command {
        Command::BuildDataset { out, alpha, reynolds, backend, codes, xfoil_path } => {
            build_dataset_cmd(
                &file_config,
                master_seed,
                cli.force,
                &out,
                alpha,
                reynolds,
                backend,
                codes,
                xfoil_path,
            )
        }
        Command::Train {
            dataset,
            out,
            regime,
            latent_dim,
            iterations,
            batch_size,
            learning_rate,
            gp_lambda,
            critic_steps,
            checkpoint_cadence,
            log_every,
        } => {
            let flags = TrainFlags {
                regime,
                latent_dim,
                iterations,
                batch_size,
                learning_rate,
                gp_lambda,
                critic_steps,
                checkpoint_cadence,
                log_every,
            };
            train_cmd(&file_config, master_seed, cli.force, &dataset, &out, flags)
        }
        Command::Generate { checkpoint, label, n, out, evaluate, alpha, reynolds } => {
            generate_cmd(&file_config, master_seed, cli.force, &checkpoint, label, n, &out, evaluate, alpha, reynolds)
        }
        Command::Sweep {
            checkpoint,
            out,
            backend,
            labels,
            n,
            threshold,
            alpha,
            reynolds,
            xfoil_path,
        } => sweep_cmd(
            &file_config,
            master_seed,
            cli.force,
            &checkpoint,
            &out,
            backend,
            labels,
            n,
            threshold,
            alpha,
            reynolds,
            xfoil_path,
        ),
        Command::Report { sweep } => report_cmd(&sweep),
        Command::JsCheck { trials } => js_check_cmd(master_seed, trials),
    }
}

/// Refuses to clobber an existing output file unless `--force` was given.
fn guard_output(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "output {} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", path.display())))
}

fn resolve_flow(
    config: &FileConfig,
    alpha: Option<f64>,
    reynolds: Option<f64>,
) -> Result<FlowCondition, CliError> {
    let alpha = alpha.or(config.dataset.alpha_deg).unwrap_or(DEFAULT_ALPHA_DEG);
    let reynolds = reynolds.or(config.dataset.reynolds).unwrap_or(DEFAULT_REYNOLDS);
    FlowCondition::new(alpha, reynolds).map_err(CliError::usage)
}

fn resolve_backend(
    config: &FileConfig,
    backend: Option<String>,
    xfoil_path: Option<PathBuf>,
) -> Result<Box<dyn ClBackend>, CliError> {
    let name = backend
        .or_else(|| config.dataset.backend.clone())
        .unwrap_or_else(|| "panel".to_string());
    match name.as_str() {
        "panel" => Ok(Box::new(PanelSolver)),
        "xfoil" => {
            let exe = xfoil_path
                .or_else(|| std::env::var_os(XFOIL_ENV).map(PathBuf::from))
                .or_else(|| config.xfoil.executable.clone().map(PathBuf::from))
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "backend xfoil needs an executable: pass --xfoil-path, set {XFOIL_ENV}, \
                         or configure [xfoil].executable"
                    ))
                })?;
            let timeout = config.xfoil.timeout_s.unwrap_or(10.0);
            let backend = XfoilBackend::new(exe, timeout);
            backend.preflight().map_err(CliError::usage)?;
            Ok(Box::new(backend))
        }
        other => Err(CliError::Usage(format!("unknown backend {other:?} (panel | xfoil)"))),
    }
}

/// Writes the fully resolved configuration next to the run's outputs.
fn echo_effective_config(
    out: &Path,
    config: &FileConfig,
    master_seed: u64,
    train: Option<&TrainConfig>,
    sweep: Option<&SweepConfig>,
    flow: Option<&FlowCondition>,
) -> Result<(), CliError> {
    let mut effective = config.clone();
    effective.seed = Some(master_seed);
    if let Some(f) = flow {
        effective.dataset.alpha_deg = Some(f.alpha_deg());
        effective.dataset.reynolds = Some(f.reynolds());
    }
    if let Some(t) = train {
        effective.train = TrainSection {
            regime: Some(t.regime.tag().to_string()),
            latent_dim: Some(t.latent_dim),
            learning_rate: Some(t.learning_rate),
            critic_steps_per_iter: Some(t.critic_steps_per_iter),
            gp_lambda: Some(t.gp_lambda),
            batch_size: Some(t.batch_size),
            total_iterations: Some(t.total_iterations),
            seed: Some(t.seed),
            checkpoint_cadence: Some(t.checkpoint_cadence),
            gp_sampling: Some(
                match t.gp_sampling {
                    training::GpSampling::Interpolates => "interpolates",
                    training::GpSampling::RealOnly => "real-only",
                }
                .to_string(),
            ),
            generator_loss: Some(
                match t.generator_loss {
                    training::GeneratorLoss::NonSaturating => "non-saturating",
                    training::GeneratorLoss::Minimax => "minimax",
                }
                .to_string(),
            ),
            log_every: effective.train.log_every,
            critic_head: effective.train.critic_head.clone(),
        };
    }
    if let Some(s) = sweep {
        effective.sweep.samples_per_label = Some(s.samples_per_label);
        effective.sweep.failure_threshold = Some(s.failure_threshold);
        effective.sweep.seed = Some(s.seed);
        effective.sweep.export_labels = Some(s.export_labels.clone());
    }
    let text = toml::to_string(&effective)
        .map_err(|e| CliError::runtime(format!("cannot serialize effective config: {e}")))?;
    std::fs::write(out.join("effective.toml"), text)
        .map_err(|e| CliError::runtime(format!("cannot write effective config: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn build_dataset_cmd(
    config: &FileConfig,
    master_seed: u64,
    force: bool,
    out: &Path,
    alpha: Option<f64>,
    reynolds: Option<f64>,
    backend: Option<String>,
    codes: Option<String>,
    xfoil_path: Option<PathBuf>,
) -> Result<(), CliError> {
    let flow = resolve_flow(config, alpha, reynolds)?;
    let backend = resolve_backend(config, backend, xfoil_path)?;

    let codes_spec = codes
        .or_else(|| config.dataset.codes.clone())
        .unwrap_or_else(|| "all".to_string());
    let (codes, attempted): (Vec<Naca4Code>, usize) = if codes_spec == "all" {
        (Naca4Code::enumerate().collect(), 10_000)
    } else {
        let list: Result<Vec<Naca4Code>, _> =
            codes_spec.split(',').map(|s| s.trim().parse()).collect();
        let list = list.map_err(CliError::usage)?;
        let n = list.len();
        (list, n)
    };
    if codes.is_empty() {
        return Err(CliError::Usage("no codes to evaluate".to_string()));
    }

    let dataset_dir = out.join("dataset");
    let table_path = dataset_dir.join("dataset.csv");
    guard_output(&table_path, force)?;
    create_dir(&dataset_dir)?;
    echo_effective_config(out, config, master_seed, None, None, Some(&flow))?;

    let manifest =
        dataset::build_dataset(&codes, &flow, backend.as_ref()).map_err(CliError::runtime)?;
    dataset::save(&manifest, &table_path).map_err(CliError::runtime)?;

    println!("solver: {}", manifest.solver_id);
    println!(
        "alpha = {} deg, reynolds = {}",
        flow.alpha_deg(),
        flow.reynolds()
    );
    println!(
        "retained {} of {attempted} codes ({} eliminated)",
        manifest.len(),
        attempted - manifest.len()
    );
    println!("labels span [{}, {}]", manifest.normalization.min, manifest.normalization.max);
    println!("histogram (bin width 0.1):");
    for (lo, count) in dataset::cl_histogram(&manifest, 0.1) {
        println!("  [{lo:.1}, {:.1}) {count}", lo + 0.1);
    }
    println!("dataset written to {}", table_path.display());
    Ok(())
}

struct TrainFlags {
    regime: Option<String>,
    latent_dim: Option<usize>,
    iterations: Option<u64>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    gp_lambda: Option<f64>,
    critic_steps: Option<usize>,
    checkpoint_cadence: Option<u64>,
    log_every: Option<u64>,
}

fn train_cmd(
    config: &FileConfig,
    master_seed: u64,
    force: bool,
    dataset_path: &Path,
    out: &Path,
    flags: TrainFlags,
) -> Result<(), CliError> {
    let manifest = dataset::load(dataset_path).map_err(CliError::usage)?;

    let mut train_config = config.resolve_train(master_seed).map_err(CliError::usage)?;
    if let Some(tag) = &flags.regime {
        train_config.regime = Regime::from_tag(tag)
            .ok_or_else(|| CliError::Usage(format!("unknown regime {tag:?} (cgan | cwgan-gp)")))?;
    }
    if let Some(d) = flags.latent_dim {
        train_config.latent_dim = d;
    }
    if let Some(v) = flags.iterations {
        train_config.total_iterations = v;
    }
    if let Some(v) = flags.batch_size {
        train_config.batch_size = v;
    }
    if let Some(v) = flags.learning_rate {
        train_config.learning_rate = v;
    }
    if let Some(v) = flags.gp_lambda {
        train_config.gp_lambda = v;
    }
    if let Some(v) = flags.critic_steps {
        train_config.critic_steps_per_iter = v;
    }
    if let Some(v) = flags.checkpoint_cadence {
        train_config.checkpoint_cadence = v;
    }
    train_config.validate().map_err(CliError::usage)?;

    // A critic-head override must agree with the regime before any work
    // starts.
    let required_head = train_config.regime.required_head();
    if let Some(head_tag) = &config.train.critic_head {
        let head = CriticHead::from_tag(head_tag)
            .ok_or_else(|| CliError::Usage(format!("unknown critic head {head_tag:?}")))?;
        if head != required_head {
            return Err(CliError::Usage(format!(
                "critic head {head_tag:?} is inconsistent with regime {}",
                train_config.regime.tag()
            )));
        }
    }

    let gen_spec = GeneratorSpec::with_latent_dim(train_config.latent_dim);
    let critic_spec = CriticSpec::with_head(required_head);

    let ckpt_dir = out.join("checkpoints");
    let final_path = ckpt_dir.join("final.ckpt");
    let history_path = ckpt_dir.join("loss_history.csv");
    guard_output(&final_path, force)?;
    guard_output(&history_path, force)?;
    create_dir(&ckpt_dir)?;
    echo_effective_config(out, config, master_seed, Some(&train_config), None, None)?;

    let log_every = flags.log_every.or(config.train.log_every).unwrap_or(100);
    println!(
        "training {} (d = {}) on {} records for {} iterations (seed {})",
        train_config.regime.tag(),
        train_config.latent_dim,
        manifest.len(),
        train_config.total_iterations,
        train_config.seed,
    );
    let mut progress = |r: &training::LossRecord| {
        if log_every > 0 && (r.iteration + 1) % log_every == 0 {
            println!(
                "iter {:>6}  loss_critic {:+.6}  loss_generator {:+.6}",
                r.iteration + 1,
                r.critic,
                r.generator
            );
        }
    };
    let run = training::train(&manifest, &gen_spec, &critic_spec, &train_config, Some(&mut progress))
        .map_err(CliError::runtime)?;

    for (iter, snapshot) in &run.snapshots {
        let path = ckpt_dir.join(format!("iter_{iter:06}.ckpt"));
        nets::save_checkpoint(snapshot, &path).map_err(CliError::runtime)?;
    }
    nets::save_checkpoint(&run.final_checkpoint, &final_path).map_err(CliError::runtime)?;
    std::fs::write(&history_path, training::loss_history_to_string(&run.loss_history))
        .map_err(|e| CliError::runtime(format!("cannot write loss history: {e}")))?;

    println!("checkpoint written to {}", final_path.display());
    println!("loss history written to {}", history_path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn generate_cmd(
    config: &FileConfig,
    master_seed: u64,
    force: bool,
    checkpoint: &Path,
    label: f64,
    n: usize,
    out: &Path,
    evaluate: bool,
    alpha: Option<f64>,
    reynolds: Option<f64>,
) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".to_string()));
    }
    if !label.is_finite() {
        return Err(CliError::Usage(format!("label must be finite, got {label}")));
    }
    let ckpt = nets::load_checkpoint(checkpoint).map_err(CliError::usage)?;
    let shapes_dir = out.join("shapes");
    guard_output(&shapes_dir.join("sample_00.dat"), force)?;
    create_dir(&shapes_dir)?;

    let flow = resolve_flow(config, alpha, reynolds)?;
    let mut rng = seed::rng(master_seed, &format!("generate/label/{label}"));
    for k in 0..n {
        let z: Vec<f64> = (0..ckpt.gen_spec.latent_dim)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let coords = nets::generate(&ckpt.generator, &z, label).map_err(CliError::runtime)?;
        let shape = foilgen::geometry::AirfoilShape::from_vec(coords)
            .map_err(|e| CliError::runtime(format!("generator output is not a shape vector: {e}")))?;
        let path = shapes_dir.join(format!("sample_{k:02}.dat"));
        let mut buf = Vec::new();
        foilgen::aero::xfoil::write_coordinate_file(
            &mut buf,
            &format!("label {label} sample {k:02}"),
            &shape,
        )
        .map_err(|e| CliError::runtime(format!("cannot encode {}: {e}", path.display())))?;
        std::fs::write(&path, buf)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        if evaluate {
            match foilgen::aero::panel_cl(&shape, &flow).cl() {
                Some(cl) => println!("sample {k:02}: cl = {cl:.4} (target {label})"),
                None => println!("sample {k:02}: non-converged"),
            }
        }
    }
    println!("{n} shapes written to {}", shapes_dir.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep_cmd(
    config: &FileConfig,
    master_seed: u64,
    force: bool,
    checkpoint: &Path,
    out: &Path,
    backend: Option<String>,
    labels: Option<String>,
    n: Option<usize>,
    threshold: Option<f64>,
    alpha: Option<f64>,
    reynolds: Option<f64>,
    xfoil_path: Option<PathBuf>,
) -> Result<(), CliError> {
    let ckpt = nets::load_checkpoint(checkpoint).map_err(CliError::usage)?;
    let backend = resolve_backend(config, backend, xfoil_path)?;
    let flow = resolve_flow(config, alpha, reynolds)?;

    let mut sweep_config = config.resolve_sweep(master_seed).map_err(CliError::usage)?;
    if let Some(spec) = &labels {
        sweep_config.labels = LabelSequence::parse(spec).map_err(CliError::usage)?;
    }
    if let Some(v) = n {
        sweep_config.samples_per_label = v;
    }
    if let Some(v) = threshold {
        sweep_config.failure_threshold = v;
    }
    sweep_config.validate().map_err(CliError::usage)?;

    let sweep_dir = out.join("sweep");
    guard_output(&sweep_dir.join("sweep_table.csv"), force)?;
    create_dir(&sweep_dir)?;
    echo_effective_config(out, config, master_seed, None, Some(&sweep_config), Some(&flow))?;

    println!(
        "sweeping {} labels x {} samples ({} regime checkpoint, backend {})",
        sweep_config.labels.len(),
        sweep_config.samples_per_label,
        ckpt.regime_tag,
        backend.solver_id(),
    );
    let report = evaluation::run_sweep(&ckpt, &sweep_config, backend.as_ref(), &flow)
        .map_err(CliError::runtime)?;
    evaluation::emit_report(&report, &sweep_dir).map_err(CliError::runtime)?;

    let a = &report.aggregate;
    println!("rate_nonconverged = {:.4}", a.rate_nonconverged);
    println!("rate_failure      = {:.4}", a.rate_failure);
    println!("rate_success      = {:.4}", a.rate_success);
    println!("mse               = {:.5}", a.mse);
    println!("mu                = {:.4}", a.mu);
    println!("report written to {}", sweep_dir.display());
    Ok(())
}

fn report_cmd(sweep_dir: &Path) -> Result<(), CliError> {
    let summary_path = sweep_dir.join("summary.txt");
    let table_path = sweep_dir.join("sweep_table.csv");
    let summary = std::fs::read_to_string(&summary_path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", summary_path.display())))?;
    let table = std::fs::read_to_string(&table_path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", table_path.display())))?;

    println!("sweep report: {}", sweep_dir.display());
    print!("{summary}");
    let rows = table.lines().count().saturating_sub(2); // header + aggregate
    println!("per-label rows: {rows}");
    // Labels with the weakest smoothness, as a quick pointer into the table.
    let mut parsed: Vec<(f64, f64)> = table
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with("aggregate"))
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Some((f.first()?.parse().ok()?, f.get(6)?.parse().ok()?))
        })
        .collect();
    parsed.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    if !parsed.is_empty() {
        let worst: Vec<String> = parsed
            .iter()
            .take(5)
            .map(|(l, s)| format!("{l} ({s:.2})"))
            .collect();
        println!("lowest smooth rate at labels: {}", worst.join(", "));
    }
    Ok(())
}

fn js_check_cmd(master_seed: u64, trials: usize) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".to_string()));
    }
    let mut rng = seed::rng(master_seed, "js-check");
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(2..12);
        let normalize = |mut p: Vec<f64>| {
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= s);
            p
        };
        let p_r = normalize((0..n).map(|_| rng.random_range(0.0..1.0)).collect());
        let p_g = normalize((0..n).map(|_| rng.random_range(0.0..1.0)).collect());
        let (v, rhs) = training::js_identity_check(&p_r, &p_g).map_err(CliError::runtime)?;
        worst = worst.max((v - rhs).abs());
    }
    println!("max |V(D*, G) - (2 D_JS - 2 log 2)| over {trials} trials: {worst:.3e}");
    if worst > 1e-9 {
        return Err(CliError::Runtime(format!(
            "identity violated: discrepancy {worst:.3e} exceeds 1e-9"
        )));
    }
    Ok(())
}
