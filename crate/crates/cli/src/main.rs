use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use gurukit_cli::certify::{certify, DEFAULT_GRAD_TOL, DEFAULT_REFINE_ITERS, DEFAULT_THRESHOLD};
use gurukit_cli::noise::{noise_curve, DEFAULT_REPEATS};
use gurukit_cli::output::emit;
use gurukit_cli::train::{DEFAULT_DELTA, DEFAULT_LAMBDA, DEFAULT_ROUNDS, DEFAULT_SIGMA};
use gurukit_cli::{build_pool, run_sweep, train, Algo, CliError, Grid, Predictor, SweepParam, SweepSpec, TrainParams};
use gurukit_core::data::{gen_gaussian_toy, gen_radial_ring, load_libsvm, save_libsvm, RingSpec};
use gurukit_core::model_io::ModelFile;
use gurukit_core::{Dataset, KernelSpec, ToyKind};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "gurukit", version, about = "Gaussian-robust classification: train, sweep, noise curves, dual certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as LIBSVM files
    Gen(GenArgs),
    /// Train a model and write it with its objective trace
    Train(TrainArgs),
    /// Predict labels for a dataset
    Predict(PredictArgs),
    /// Report the accuracy of a model on a dataset
    Evaluate(EvaluateArgs),
    /// Sweep one hyperparameter over a geometric grid, select on the cv split
    Sweep(SweepArgs),
    /// Accuracy under uniform input noise of growing magnitude
    NoiseCurve(NoiseArgs),
    /// Refine a linear model to stationarity and check the dual certificate
    Certify(CertifyArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GenKind {
    TwoGauss,
    Narrow,
    ThreeGauss,
    FourGauss,
    Ring,
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Samples per split (train/cv/test) for the Gaussian toys; total
    /// samples for the ring
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// File name prefix; defaults to the kind
    #[arg(long)]
    prefix: Option<String>,
}

#[derive(Args, Serialize, Clone)]
struct ModelParams {
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// ASVC displacement radius
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// ASVC rounds
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    rounds: usize,
    /// linear, poly:DEGREE[:OFFSET] or rbf:GAMMA
    #[arg(long, default_value = "rbf:1", value_parser = parse_kernel)]
    kernel: KernelSpec,
    /// Initial learning rate; 0.25 for the multiclass trainers, 1 otherwise
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 200)]
    eval_period: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Do not embed the training set in kernel model files
    #[arg(long)]
    no_embed: bool,
}

impl ModelParams {
    fn to_params(&self, algo: Algo) -> TrainParams {
        let mut p = TrainParams::new(algo);
        p.sigma = self.sigma;
        p.lambda = self.lambda;
        p.delta = self.delta;
        p.rounds = self.rounds;
        p.kernel = self.kernel;
        p.cfg.eta0 = self.eta0.unwrap_or(algo.default_eta0());
        p.cfg.epsilon = self.epsilon;
        p.cfg.max_iters = self.max_iters;
        p.cfg.eval_period = self.eval_period;
        p.cfg.seed = self.seed;
        p.embed_train = !self.no_embed;
        p
    }
}

fn parse_kernel(s: &str) -> Result<KernelSpec, String> {
    s.parse()
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    /// Training set (LIBSVM)
    #[arg(long)]
    data: PathBuf,
    /// Model file to write
    #[arg(long)]
    out: PathBuf,
    /// Objective trace CSV; defaults to `<out>.trace.csv`
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    params: ModelParams,
}

#[derive(Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Training set for kernel models saved without an embedded copy
    #[arg(long)]
    train_data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    train_data: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Preset {
    /// σ 2^-20..2^20, λ 4^-15..4^15, η₀ 4^-10..4^10
    Wide,
    /// 2^-6..2^6
    Desk,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long, value_enum)]
    param: SweepParam,
    /// base:min_exp:max_exp, e.g. 2:-4:4; overrides --preset
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    cv: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Sweep CSV
    #[arg(long)]
    out: PathBuf,
    /// Also save the selected model
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, env = "GURUKIT_WORKERS")]
    workers: Option<usize>,
    #[command(flatten)]
    params: ModelParams,
}

#[derive(Args, Serialize)]
struct NoiseArgs {
    /// Model file, optionally as NAME=PATH; repeatable
    #[arg(long = "model", required = true)]
    models: Vec<String>,
    #[arg(long)]
    cv: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    train_data: Option<PathBuf>,
    /// Comma-separated noise magnitudes x; coordinates get U(-x, x) noise
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1,1.5,2")]
    grid: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "GURUKIT_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args, Serialize)]
struct CertifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// The model's training set
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_GRAD_TOL)]
    grad_tol: f64,
    /// Newton refinement iterations before certifying; 0 certifies as is
    #[arg(long, default_value_t = DEFAULT_REFINE_ITERS)]
    refine_iters: usize,
    /// Pass iff gap_rel is below this
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Per-sample report CSV
    #[arg(long)]
    out: PathBuf,
}

fn load(path: &Path) -> anyhow::Result<Dataset> {
    load_libsvm(path).map_err(CliError::from).with_context(|| format!("loading {}", path.display()))
}

fn load_opt(path: Option<&PathBuf>) -> anyhow::Result<Option<Dataset>> {
    path.map(|p| load(p)).transpose()
}

fn load_predictor(model: &Path, train_data: Option<&PathBuf>) -> anyhow::Result<Predictor> {
    let file = ModelFile::load(model)
        .map_err(CliError::from)
        .with_context(|| format!("loading {}", model.display()))?;
    let train = load_opt(train_data)?;
    Ok(Predictor::from_file(&file, train.as_ref())?)
}

fn cmd_gen(a: &GenArgs) -> anyhow::Result<()> {
    std::fs::create_dir_all(&a.out_dir).map_err(CliError::from)?;
    let prefix = a.prefix.clone().unwrap_or_else(|| match a.kind {
        GenKind::TwoGauss => "two-gauss".into(),
        GenKind::Narrow => "narrow".into(),
        GenKind::ThreeGauss => "three-gauss".into(),
        GenKind::FourGauss => "four-gauss".into(),
        GenKind::Ring => "ring".into(),
    });
    let toy = match a.kind {
        GenKind::TwoGauss => ToyKind::TwoGauss,
        GenKind::Narrow => ToyKind::NarrowWithOutliers,
        GenKind::ThreeGauss => ToyKind::ThreeGauss,
        GenKind::FourGauss => ToyKind::FourGauss,
        GenKind::Ring => {
            let d = gen_radial_ring(a.n, RingSpec::default(), a.seed).map_err(CliError::from)?;
            let p = a.out_dir.join(format!("{prefix}.libsvm"));
            save_libsvm(&d, &p).map_err(CliError::from)?;
            println!("{}", p.display());
            return Ok(());
        }
    };
    let (tr, cv, te) = gen_gaussian_toy(toy, a.n, a.seed).map_err(CliError::from)?;
    for (split, d) in [("train", tr), ("cv", cv), ("test", te)] {
        let p = a.out_dir.join(format!("{prefix}-{split}.libsvm"));
        save_libsvm(&d, &p).map_err(CliError::from)?;
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> anyhow::Result<()> {
    let params = a.params.to_params(a.algo);
    params.validate(a.algo)?;
    let data = load(&a.data)?;
    let t = train(a.algo, &data, &params)?;
    t.file.save(&a.out).map_err(CliError::from)?;
    let report = a.report.clone().unwrap_or_else(|| {
        let mut s = a.out.as_os_str().to_owned();
        s.push(".trace.csv");
        PathBuf::from(s)
    });
    #[derive(Serialize)]
    struct Summary {
        iterations: usize,
        converged: bool,
        final_objective: Option<f64>,
        norm: f64,
    }
    let summary = Summary {
        iterations: t.iterations,
        converged: t.converged,
        final_objective: t.trace.last().map(|p| p.1),
        norm: t.predictor.norm(),
    };
    emit(&report, &t.trace_rows(), "train", a, Some(&summary))?;
    println!(
        "{}: {} iterations, converged {}, objective {:?}, norm {}",
        a.algo, summary.iterations, summary.converged, summary.final_objective, summary.norm
    );
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> anyhow::Result<()> {
    let p = load_predictor(&a.model, a.train_data.as_ref())?;
    let data = load(&a.data)?;
    #[derive(Serialize)]
    struct Row {
        index: usize,
        label: i32,
        decision: Option<f64>,
    }
    let rows = (0..data.len())
        .map(|i| {
            Ok(Row {
                index: i,
                label: p.predict(data.row(i))?,
                decision: p.decision(data.row(i))?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    emit(&a.out, &rows, "predict", a, None::<()>)?;
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> anyhow::Result<()> {
    let p = load_predictor(&a.model, a.train_data.as_ref())?;
    let data = load(&a.data)?;
    let acc = p.accuracy(&data)?;
    println!("accuracy {acc}");
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> anyhow::Result<()> {
    let grid = match &a.grid {
        Some(g) => g.parse::<Grid>()?,
        None => match a.preset {
            Preset::Wide => Grid::wide(a.param),
            Preset::Desk => Grid::desk(),
        },
    };
    let spec = SweepSpec { parameter: a.param, grid };
    spec.validate(a.algo)?;
    let base = a.params.to_params(a.algo);
    let pool = build_pool(a.workers)?;
    let (tr, cv, te) = (load(&a.train)?, load(&a.cv)?, load(&a.test)?);
    let result = pool.install(|| run_sweep(a.algo, &base, &spec, &tr, &cv, &te))?;
    let sel = result.selected_row().clone();
    emit(&a.out, &result.rows, "sweep", a, Some(&sel))?;
    if let Some(p) = &a.model_out {
        result.model.file.save(p).map_err(CliError::from)?;
    }
    println!(
        "selected {} = {} (cv {}, test {})",
        a.param,
        sel.param,
        sel.cv_accuracy,
        sel.test_accuracy.unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_noise(a: &NoiseArgs) -> anyhow::Result<()> {
    let mut models = Vec::new();
    for spec in &a.models {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                let n = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (n, p)
            }
        };
        models.push((name, load_predictor(&path, a.train_data.as_ref())?));
    }
    let cv = load_opt(a.cv.as_ref())?;
    let test = load_opt(a.test.as_ref())?;
    let mut splits: Vec<(String, &Dataset)> = Vec::new();
    if let Some(d) = &cv {
        splits.push(("cv".into(), d));
    }
    if let Some(d) = &test {
        splits.push(("test".into(), d));
    }
    if splits.is_empty() {
        return Err(CliError::usage("give --cv and/or --test to evaluate on").into());
    }
    let pool = build_pool(a.workers)?;
    let rows = pool.install(|| noise_curve(&models, &splits, &a.grid, a.repeats, a.seed))?;
    emit(&a.out, &rows, "noise-curve", a, None::<()>)?;
    Ok(())
}

fn cmd_certify(a: &CertifyArgs) -> anyhow::Result<ExitCode> {
    let file = ModelFile::load(&a.model)
        .map_err(CliError::from)
        .with_context(|| format!("loading {}", a.model.display()))?;
    if file.kind() != "linear" {
        return Err(CliError::usage("certification supports linear binary models").into());
    }
    let data = load(&a.data)?;
    let c = certify(&file, &data, a.sigma, a.grad_tol, a.refine_iters, a.threshold)?;
    let summary = c.summary();
    emit(&a.out, &c.rows(), "certify", a, Some(&summary))?;
    println!(
        "gap_rel {} lhs {} rhs {} tightness {} grad_norm {} stationary {} -> {}",
        summary.gap_rel,
        summary.constraint_lhs,
        summary.constraint_rhs,
        summary.tightness,
        summary.grad_norm,
        summary.stationary,
        if summary.passed { "pass" } else { "FAIL" }
    );
    Ok(if summary.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a)?,
        Command::Train(a) => cmd_train(a)?,
        Command::Predict(a) => cmd_predict(a)?,
        Command::Evaluate(a) => cmd_evaluate(a)?,
        Command::Sweep(a) => cmd_sweep(a)?,
        Command::NoiseCurve(a) => cmd_noise(a)?,
        Command::Certify(a) => return cmd_certify(a),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
