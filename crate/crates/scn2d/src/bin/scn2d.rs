//! Command-line front end: train and evaluate networks, run the weight
//! sparsity study, compute generalization indicators, and generate synthetic
//! datasets. All stochastic commands are deterministic given `--seed`, and
//! every CSV artifact records the crate version and seed in a comment line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scn2d::analysis::{indicator_theta_raw, normalize_indicators};
use scn2d::configurator::{train_scn, TrainConfig};
use scn2d::data::{load_csv, synth_matrix_regression, write_csv, Dataset};
use scn2d::metrics::{accuracy, decode_labels, ppa, rmse};
use scn2d::model::{read_model, write_model, InputShape, Network, NodeKind};
use scn2d::rvfl::train_rvfl;
use scn2d::stats::{estimate_grid, StatsSpec, WeightDist};
use scn2d::{Error, Result};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "scn2d", version, about = "Constructive randomized networks on matrix inputs")]
struct Cli {
    /// Master seed for all randomness
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Optional TOML config file; flags override it, it overrides defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output artifacts
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker thread count (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write the model file plus a build report
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset
    Eval(EvalArgs),
    /// Monte Carlo study of near-zero coordinates in random weight vectors
    Stats(StatsArgs),
    /// Generalization indicators for a set of saved models
    Indicator(IndicatorArgs),
    /// Generate a synthetic matrix-regression dataset as CSV
    Synth(SynthOnlyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Scn,
    #[value(name = "2dscn")]
    TwoDScn,
    Rvfl,
    #[value(name = "2drvfl")]
    TwoDRvfl,
}

impl Algo {
    fn kind(self) -> NodeKind {
        match self {
            Algo::Scn | Algo::Rvfl => NodeKind::OneD,
            Algo::TwoDScn | Algo::TwoDRvfl => NodeKind::TwoD,
        }
    }

    fn is_scn(self) -> bool {
        matches!(self, Algo::Scn | Algo::TwoDScn)
    }

    fn tag(self) -> &'static str {
        match self {
            Algo::Scn => "scn",
            Algo::TwoDScn => "2dscn",
            Algo::Rvfl => "rvfl",
            Algo::TwoDRvfl => "2drvfl",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Gaussian,
}

/// Parameters of the synthetic task, shared by every command that can read
/// `--data synth`. The same seed and parameters always regenerate the same
/// train/test split.
#[derive(Args, Clone)]
struct SynthArgs {
    /// Samples per split
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Sample rows
    #[arg(long, default_value_t = 8)]
    d1: usize,
    /// Sample columns
    #[arg(long, default_value_t = 8)]
    d2: usize,
    /// Planted hidden nodes
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Gaussian noise added to training targets
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
}

impl SynthArgs {
    fn generate(&self, seed: u64) -> Result<(Dataset, Dataset, Network)> {
        synth_matrix_regression(self.n, self.d1, self.d2, self.k, self.noise, seed)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training algorithm
    #[arg(long, value_enum)]
    algo: Algo,
    /// Dataset: `synth` or a CSV path
    #[arg(long)]
    data: String,
    /// Sample shape for CSV data: `256` (flat) or `16x16` (matrix)
    #[arg(long)]
    shape: Option<String>,
    /// Target column count for CSV data
    #[arg(long, default_value_t = 1)]
    targets: usize,
    /// Skip one CSV header line
    #[arg(long)]
    skip_header: bool,
    #[command(flatten)]
    synth: SynthArgs,
    /// Maximum hidden nodes (SCN kinds)
    #[arg(long)]
    l_max: Option<usize>,
    /// Residual tolerance (SCN kinds)
    #[arg(long)]
    tol: Option<f64>,
    /// Candidates per pool (SCN kinds)
    #[arg(long)]
    t_max: Option<usize>,
    /// Hidden node count (RVFL kinds)
    #[arg(long)]
    nodes: Option<usize>,
    /// Sampling range (RVFL kinds)
    #[arg(long)]
    lambda: Option<f64>,
    /// Basename for output files (default: the algorithm tag)
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Saved model file
    #[arg(long)]
    model: PathBuf,
    /// Dataset: `synth` (test split) or a CSV path
    #[arg(long)]
    data: String,
    /// Skip one CSV header line
    #[arg(long)]
    skip_header: bool,
    #[command(flatten)]
    synth: SynthArgs,
    /// Error margins for the within-tolerance accuracy (repeatable)
    #[arg(long = "theta")]
    thetas: Vec<f64>,
    /// Write per-sample absolute errors to this CSV (regression only)
    #[arg(long)]
    per_sample_csv: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Factor distribution
    #[arg(long, value_enum, default_value_t = DistArg::Uniform)]
    dist: DistArg,
    /// Weight matrix rows
    #[arg(long)]
    d1: Option<usize>,
    /// Weight matrix columns
    #[arg(long)]
    d2: Option<usize>,
    /// Monte Carlo trials
    #[arg(long)]
    trials: Option<usize>,
    /// Near-zero thresholds (repeatable)
    #[arg(long = "tau")]
    taus: Vec<f64>,
    /// Fraction thresholds (repeatable)
    #[arg(long = "p")]
    ps: Vec<f64>,
}

#[derive(Args)]
struct IndicatorArgs {
    /// Saved model files (repeatable)
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    /// Dataset: `synth` (test split) or a CSV path
    #[arg(long)]
    data: String,
    /// Skip one CSV header line
    #[arg(long)]
    skip_header: bool,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Args)]
struct SynthOnlyArgs {
    #[command(flatten)]
    synth: SynthArgs,
}

/// Optional TOML configuration; every field is optional and is used only when
/// the corresponding flag is absent.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    train: TrainFileConfig,
    #[serde(default)]
    stats: StatsFileConfig,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TrainFileConfig {
    l_max: Option<usize>,
    tol: Option<f64>,
    t_max: Option<usize>,
    nodes: Option<usize>,
    lambda: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct StatsFileConfig {
    d1: Option<usize>,
    d2: Option<usize>,
    trials: Option<usize>,
    taus: Option<Vec<f64>>,
    ps: Option<Vec<f64>>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn csv_comment(seed: u64) -> String {
    format!("# scn2d v{} seed={seed}\n", scn2d::VERSION)
}

/// Load training or evaluation data. `shape` is required for CSV sources and
/// ignored for `synth`; for `synth`, `use_test` picks the split.
fn load_data(
    source: &str,
    shape: Option<InputShape>,
    target_cols: usize,
    skip_header: bool,
    synth: &SynthArgs,
    seed: u64,
    use_test: bool,
) -> Result<Dataset> {
    if source == "synth" {
        let (train, test, _) = synth.generate(seed)?;
        return Ok(if use_test { test } else { train });
    }
    let shape = shape.ok_or_else(|| {
        Error::Config("--shape is required for CSV data (e.g. `256` or `16x16`)".into())
    })?;
    load_csv(Path::new(source), shape, target_cols, skip_header)
}

fn parse_shape(s: &str) -> Result<InputShape> {
    let bad = || Error::Config(format!("bad shape `{s}`: use `256` or `16x16`"));
    match s.split_once('x') {
        Some((a, b)) => Ok(InputShape::TwoD(
            a.parse().map_err(|_| bad())?,
            b.parse().map_err(|_| bad())?,
        )),
        None => Ok(InputShape::OneD(s.parse().map_err(|_| bad())?)),
    }
}

fn cmd_train(cli: &Cli, args: &TrainArgs, file: &TrainFileConfig) -> Result<()> {
    let shape = args.shape.as_deref().map(parse_shape).transpose()?;
    let data = load_data(
        &args.data,
        shape,
        args.targets,
        args.skip_header,
        &args.synth,
        cli.seed,
        false,
    )?;

    let (net, report_csv) = if args.algo.is_scn() {
        let mut config = TrainConfig::new(cli.seed);
        config.l_max = args.l_max.or(file.l_max).unwrap_or(config.l_max);
        config.tol_eps = args.tol.or(file.tol).unwrap_or(config.tol_eps);
        config.t_max = args.t_max.or(file.t_max).unwrap_or(config.t_max);
        let (net, report) = train_scn(&data.inputs, &data.targets, &config, args.algo.kind())?;
        (net, Some(report.to_csv(cli.seed)))
    } else {
        let l = args.nodes.or(file.nodes).unwrap_or(100);
        let lambda = args.lambda.or(file.lambda).unwrap_or(1.0);
        let net = train_rvfl(&data.inputs, &data.targets, l, lambda, args.algo.kind(), cli.seed)?;
        (net, None)
    };

    fs::create_dir_all(&cli.out_dir)?;
    let name = args.name.clone().unwrap_or_else(|| args.algo.tag().to_string());
    let model_path = cli.out_dir.join(format!("{name}.model"));
    write_model(&net, fs::File::create(&model_path)?)?;
    if let Some(csv) = report_csv {
        fs::write(cli.out_dir.join(format!("{name}.report.csv")), csv)?;
    }

    let train_rmse = rmse(&net.predict(&data.inputs)?, &data.targets)?;
    println!("model: {}", model_path.display());
    println!("nodes: {}", net.nodes().len());
    println!("train rmse: {train_rmse}");
    if args.data == "synth" {
        let (_, test, _) = args.synth.generate(cli.seed)?;
        println!("test rmse: {}", rmse(&net.predict(&test.inputs)?, &test.targets)?);
    }
    Ok(())
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let net = read_model(fs::File::open(&args.model)?)?;
    let data = load_data(
        &args.data,
        Some(net.input_shape()),
        net.output_dim(),
        args.skip_header,
        &args.synth,
        cli.seed,
        true,
    )?;
    let pred = net.predict(&data.inputs)?;
    println!("rmse: {}", rmse(&pred, &data.targets)?);

    if net.output_dim() >= 2 {
        let labels = decode_labels(&data.targets);
        println!("accuracy: {}", accuracy(&pred, &labels)?);
    } else {
        let pred_col = pred.vectorize();
        let actual_col = data.targets.vectorize();
        for &theta in &args.thetas {
            println!(
                "ppa(theta={theta}): {}",
                ppa(pred_col.data(), actual_col.data(), theta)?
            );
        }
        if let Some(path) = &args.per_sample_csv {
            let mut csv = csv_comment(cli.seed);
            csv.push_str("sample,abs_error\n");
            for i in 0..pred.rows() {
                csv.push_str(&format!(
                    "{i},{}\n",
                    (pred.get(i, 0) - data.targets.get(i, 0)).abs()
                ));
            }
            fs::write(path, csv)?;
        }
    }
    Ok(())
}

fn cmd_stats(cli: &Cli, args: &StatsArgs, file: &StatsFileConfig) -> Result<()> {
    let taus = if !args.taus.is_empty() {
        args.taus.clone()
    } else {
        file.taus.clone().unwrap_or_else(|| vec![0.001, 0.005, 0.01])
    };
    let ps = if !args.ps.is_empty() {
        args.ps.clone()
    } else {
        file.ps.clone().unwrap_or_else(|| vec![0.08, 0.10, 0.12, 0.15])
    };
    let spec = StatsSpec {
        d1: args.d1.or(file.d1).unwrap_or(28),
        d2: args.d2.or(file.d2).unwrap_or(28),
        dist: match args.dist {
            DistArg::Uniform => WeightDist::UniformPm1,
            DistArg::Gaussian => WeightDist::StandardNormal,
        },
        tau: taus[0],
        p: ps[0],
        trials: args.trials.or(file.trials).unwrap_or(100_000),
        seed: cli.seed,
    };
    let cells = estimate_grid(&spec, &taus, &ps)?;

    // aligned text grid on stdout: one row per p, one column per tau
    println!(
        "{} weights, d = {}x{}, {} trials, cells M3/M2/M1",
        spec.dist.tag(),
        spec.d1,
        spec.d2,
        spec.trials
    );
    print!("{:>8}", "p \\ tau");
    for &tau in &taus {
        print!("  {tau:>22}");
    }
    println!();
    for &p in &ps {
        print!("{p:>8}");
        for c in cells.iter().filter(|c| c.p == p) {
            print!(
                "  {:>22}",
                format!("{:.4}/{:.4}/{:.4}", c.m3.probability, c.m2.probability, c.m1.probability)
            );
        }
        println!();
    }

    let mut csv = csv_comment(cli.seed);
    csv.push_str("dist,tau,p,method,probability,standard_error\n");
    for c in &cells {
        for (tag, est) in [("M3", c.m3), ("M2", c.m2), ("M1", c.m1)] {
            csv.push_str(&format!(
                "{},{},{},{tag},{},{}\n",
                spec.dist.tag(),
                c.tau,
                c.p,
                est.probability,
                est.standard_error
            ));
        }
    }
    fs::create_dir_all(&cli.out_dir)?;
    fs::write(cli.out_dir.join("stats.csv"), csv)?;
    Ok(())
}

fn cmd_indicator(cli: &Cli, args: &IndicatorArgs) -> Result<()> {
    let mut nets = Vec::new();
    for path in &args.models {
        nets.push(read_model(fs::File::open(path)?)?);
    }
    let data = load_data(
        &args.data,
        Some(nets[0].input_shape()),
        nets[0].output_dim(),
        args.skip_header,
        &args.synth,
        cli.seed,
        true,
    )?;
    // 1D models evaluate flattened samples
    let flat: Vec<scn2d::Matrix> = data.inputs.iter().map(|x| x.vectorize()).collect();
    let raws: Vec<f64> = nets
        .iter()
        .map(|net| {
            let inputs = match net.input_shape() {
                InputShape::OneD(_) => &flat,
                InputShape::TwoD(..) => &data.inputs,
            };
            indicator_theta_raw(net, inputs)
        })
        .collect::<Result<_>>()?;
    let thetas = normalize_indicators(&raws)?;

    let mut csv = csv_comment(cli.seed);
    csv.push_str("model,builder,seed,raw_indicator,theta\n");
    for ((path, net), (raw, theta)) in
        args.models.iter().zip(&nets).zip(raws.iter().zip(&thetas))
    {
        csv.push_str(&format!(
            "{},{},{},{raw},{theta}\n",
            path.display(),
            net.provenance().builder.tag(),
            net.provenance().seed
        ));
    }
    print!("{csv}");
    fs::create_dir_all(&cli.out_dir)?;
    fs::write(cli.out_dir.join("indicator.csv"), csv)?;
    Ok(())
}

fn cmd_synth(cli: &Cli, args: &SynthOnlyArgs) -> Result<()> {
    let (train, test, _) = args.synth.generate(cli.seed)?;
    fs::create_dir_all(&cli.out_dir)?;
    let train_path = cli.out_dir.join("synth-train.csv");
    let test_path = cli.out_dir.join("synth-test.csv");
    write_csv(&train, &train_path)?;
    write_csv(&test, &test_path)?;
    println!("wrote {} and {}", train_path.display(), test_path.display());
    println!("shape: {}x{}, {} samples per split", args.synth.d1, args.synth.d2, args.synth.n);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let file = load_file_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Train(args) => cmd_train(cli, args, &file.train),
        Command::Eval(args) => cmd_eval(cli, args),
        Command::Stats(args) => cmd_stats(cli, args, &file.stats),
        Command::Indicator(args) => cmd_indicator(cli, args),
        Command::Synth(args) => cmd_synth(cli, args),
    }
}

fn main() -> ExitCode {
    // clap exits with code 2 on usage errors
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
