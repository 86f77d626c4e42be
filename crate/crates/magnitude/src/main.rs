//! Command-line interface: generate clouds, compute magnitude and
//! magnitude functions, estimate dimensions, train a recorder MLP,
//! analyze trajectories, and evaluate the generalisation bound.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or numeric error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use magnitude::analyze::{analyze, write_analysis_csv, AnalyzeOptions, Normalize, Ph0Options};
use magnitude::bound::{generalisation_bound, BoundInputs};
use magnitude::cloud::pairwise_distances;
use magnitude::dimension::{
    auto_interval, compare_dims, default_delta_grid, default_ph0_sizes, estimate_dim_box,
    estimate_dim_mag, estimate_dim_ph0, estimation_grid, CompareConfig, DimensionEstimate,
};
use magnitude::error::Error;
use magnitude::io::{
    load_cloud, load_trajectory, save_cloud, save_trajectory, write_curve_csv,
    write_dimension_report_csv, CloudFormat,
};
use magnitude::magnitude::{log_spaced, magnitude_function_dm};
use magnitude::synth::{gen_cantor, gen_levy, gen_segment, gen_square, LevyConfig};
use magnitude::train::{train_and_record, DataSpec, TrainerConfig};

#[derive(Parser)]
#[command(name = "magnitude", version, about = "Magnitude and intrinsic dimension of point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic point cloud and write it to a file.
    Gen(GenArgs),
    /// Magnitude of a point cloud at one scale.
    Mag(MagArgs),
    /// Sample the magnitude function over a scale grid (CSV).
    Magfun(MagfunArgs),
    /// Intrinsic dimension estimators.
    #[command(subcommand)]
    Dim(DimCommand),
    /// Train a small classifier, recording the weight trajectory.
    Train(TrainArgs),
    /// Sliding-window magnitude analysis of a trajectory.
    Analyze(AnalyzeArgs),
    /// Evaluate the generalisation bound.
    Bound(BoundArgs),
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    shape: GenShape,
}

#[derive(Args, Clone)]
struct GenCommon {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Output format: csv or bin.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum GenShape {
    /// Uniform samples on the unit segment.
    Segment {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: GenCommon,
    },
    /// Uniform samples on the unit square.
    Square {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: GenCommon,
    },
    /// Middle-thirds Cantor set points.
    Cantor {
        #[arg(long)]
        depth: u32,
        /// Within-interval jitter in [0, 1].
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[command(flatten)]
        common: GenCommon,
    },
    /// Symmetric alpha-stable random walk.
    Levy {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        step_scale: f64,
        #[command(flatten)]
        common: GenCommon,
    },
}

#[derive(Args)]
struct MagArgs {
    /// Point-cloud file (CSV or MAGPC1 binary, sniffed).
    #[arg(long = "in")]
    input: PathBuf,
    /// Scale factor applied to all distances.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
}

#[derive(Args)]
struct MagfunArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Explicit comma-separated scale grid (overrides the range flags).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    t_min: f64,
    #[arg(long, default_value_t = 40.0)]
    t_max: f64,
    #[arg(long, default_value_t = 64)]
    points: usize,
}

#[derive(Subcommand)]
enum DimCommand {
    /// Magnitude dimension (log-log slope of the magnitude function).
    Mag(DimMagArgs),
    /// Degree-0 persistence dimension via MST subsampling.
    Ph(DimPhArgs),
    /// Box-counting dimension.
    Box(DimBoxArgs),
    /// All three estimators side by side.
    Compare(DimCompareArgs),
}

#[derive(Args)]
struct DimMagArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fit interval "t_lo,t_hi" (default: automatic selection).
    #[arg(long)]
    interval: Option<String>,
    #[arg(long, default_value_t = 8)]
    min_points: usize,
    /// Scale grid: t-min,t-max,points (defaults adapt to the data).
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 64)]
    points: usize,
}

#[derive(Args)]
struct DimPhArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Comma-separated subsample sizes (default: 9 log-spaced sizes).
    #[arg(long)]
    sizes: Option<String>,
}

#[derive(Args)]
struct DimBoxArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated strictly decreasing cell sides (default:
    /// diameter halvings).
    #[arg(long)]
    deltas: Option<String>,
}

#[derive(Args)]
struct DimCompareArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
}

#[derive(Args)]
struct TrainArgs {
    /// Comma-separated layer sizes, input first.
    #[arg(long)]
    layers: String,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    batch: usize,
    #[arg(long)]
    iters: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    eval_every: usize,
    #[arg(long)]
    out: PathBuf,
    /// Synthetic blob dataset: n_per_class,n_classes,input_dim,separation.
    #[arg(long)]
    blobs: Option<String>,
    #[arg(long)]
    idx_images: Option<PathBuf>,
    #[arg(long)]
    idx_labels: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated cross-section scales.
    #[arg(long, default_value = "1.36,6.78,16.95,30.51")]
    scales: String,
    #[arg(long, default_value_t = 1000)]
    window: usize,
    #[arg(long, default_value_t = 1000)]
    stride: usize,
    /// median | none
    #[arg(long, default_value = "median")]
    normalize: String,
    /// Keep every k-th record inside a window.
    #[arg(long, default_value_t = 1)]
    thin: usize,
    /// Re-solve exactly at each scale instead of using the nearest grid
    /// point.
    #[arg(long)]
    exact: bool,
    /// Also estimate the PH0 dimension per window (requires --seed).
    #[arg(long)]
    ph0: bool,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.01)]
    t_min: f64,
    #[arg(long, default_value_t = 40.0)]
    t_max: f64,
    #[arg(long, default_value_t = 64)]
    points: usize,
    #[arg(long, default_value_t = 8)]
    min_points: usize,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    dim: f64,
    #[arg(long)]
    n: u64,
    #[arg(long = "C")]
    loss_bound: f64,
    #[arg(long = "K")]
    lipschitz: f64,
    #[arg(long = "M")]
    mixing: f64,
    #[arg(long)]
    gamma: f64,
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInputs(format!("bad {what} entry {p:?}: {e}")))
        })
        .collect()
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| Error::InvalidInputs(format!("bad {what} entry {p:?}: {e}")))
        })
        .collect()
}

fn write_output(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        }),
        None => {
            std::io::stdout()
                .write_all(bytes)
                .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn cloud_format(name: &str) -> Result<CloudFormat, Error> {
    match name {
        "csv" => Ok(CloudFormat::Csv),
        "bin" | "binary" => Ok(CloudFormat::Binary),
        other => Err(Error::InvalidInputs(format!("unknown format {other:?}; use csv or bin"))),
    }
}

fn run_gen(args: GenArgs) -> Result<(), Error> {
    let (cloud, common, desc) = match args.shape {
        GenShape::Segment { n, common } => {
            (gen_segment(n, common.seed)?, common.clone(), format!("segment n={n}"))
        }
        GenShape::Square { n, common } => {
            (gen_square(n, common.seed)?, common.clone(), format!("square n={n}"))
        }
        GenShape::Cantor { depth, jitter, common } => (
            gen_cantor(depth, common.seed, jitter)?,
            common.clone(),
            format!("cantor depth={depth} jitter={jitter}"),
        ),
        GenShape::Levy { alpha, dim, steps, step_scale, common } => {
            let config = LevyConfig { alpha, d: dim, n_steps: steps, seed: common.seed, step_scale };
            (
                gen_levy(&config)?,
                common.clone(),
                format!("levy alpha={alpha} dim={dim} steps={steps} step_scale={step_scale}"),
            )
        }
    };
    let format = cloud_format(&common.format)?;
    let comments = vec![desc, format!("seed: {}", common.seed)];
    save_cloud(&common.out, &cloud, format, &comments)?;
    println!("# seed: {}", common.seed);
    println!("wrote {} points in R^{} to {}", cloud.n(), cloud.dim(), common.out.display());
    Ok(())
}

fn run_mag(args: MagArgs) -> Result<(), Error> {
    let cloud = load_cloud(&args.input)?;
    let dm = pairwise_distances(&cloud)?;
    let scaled = magnitude::cloud::scale_distances(&dm, args.t)?;
    let result = magnitude::magnitude::magnitude(&magnitude::magnitude::similarity(&scaled))?;
    println!("n: {}", cloud.n());
    println!("t: {}", args.t);
    println!("magnitude: {:.16e}", result.value);
    println!("residual_inf_norm: {:.3e}", result.weights.residual_inf_norm);
    println!("condition_estimate: {:.3e}", result.diagnostics.condition_estimate);
    if result.diagnostics.jittered {
        println!("note: diagonal jitter was required");
    }
    if result.diagnostics.ill_conditioned {
        println!("warning: condition estimate exceeds 1e12; treat the value with care");
    }
    Ok(())
}

fn run_magfun(args: MagfunArgs) -> Result<(), Error> {
    let cloud = load_cloud(&args.input)?;
    let dm = pairwise_distances(&cloud)?;
    let grid = match &args.grid {
        Some(g) => parse_f64_list(g, "grid")?,
        None => {
            if args.points < 2 {
                return Err(Error::InvalidInputs("need at least 2 grid points".into()));
            }
            log_spaced(args.t_min, args.t_max, args.points)
        }
    };
    let curve = magnitude_function_dm(&dm, &grid)?;
    let mut out = Vec::new();
    for f in &curve.failures {
        out.extend_from_slice(format!("# failed scale {}: {}\n", f.t, f.reason).as_bytes());
    }
    write_curve_csv(&mut out, &curve, &[])
        .expect("writing to a Vec cannot fail");
    write_output(args.out.as_ref(), &out)
}

fn dimension_report(
    out: Option<&PathBuf>,
    estimates: &[&DimensionEstimate],
    comments: &[String],
) -> Result<(), Error> {
    let mut buf = Vec::new();
    write_dimension_report_csv(&mut buf, estimates, comments)
        .expect("writing to a Vec cannot fail");
    write_output(out, &buf)
}

fn run_dim(cmd: DimCommand) -> Result<(), Error> {
    match cmd {
        DimCommand::Mag(args) => {
            let cloud = load_cloud(&args.input)?;
            let dm = pairwise_distances(&cloud)?;
            let grid = match (args.t_min, args.t_max) {
                (Some(lo), Some(hi)) => log_spaced(lo, hi, args.points),
                (None, None) => estimation_grid(&dm)?,
                _ => {
                    return Err(Error::InvalidInputs(
                        "give both --t-min and --t-max, or neither".into(),
                    ))
                }
            };
            let curve = magnitude_function_dm(&dm, &grid)?;
            let interval = match &args.interval {
                Some(iv) => {
                    let parts = parse_f64_list(iv, "interval")?;
                    if parts.len() != 2 {
                        return Err(Error::InvalidInputs("--interval needs exactly t_lo,t_hi".into()));
                    }
                    (parts[0], parts[1])
                }
                None => auto_interval(&curve, args.min_points)?,
            };
            let est = estimate_dim_mag(&curve, interval)?;
            dimension_report(args.out.as_ref(), &[&est], &[])
        }
        DimCommand::Ph(args) => {
            let cloud = load_cloud(&args.input)?;
            let sizes = match &args.sizes {
                Some(s) => parse_usize_list(s, "sizes")?,
                None => default_ph0_sizes(cloud.n())?,
            };
            let est = estimate_dim_ph0(&cloud, args.alpha, &sizes, args.reps, args.seed)?;
            dimension_report(args.out.as_ref(), &[&est], &[format!("seed: {}", args.seed)])
        }
        DimCommand::Box(args) => {
            let cloud = load_cloud(&args.input)?;
            let deltas = match &args.deltas {
                Some(s) => parse_f64_list(s, "deltas")?,
                None => default_delta_grid(&cloud)?,
            };
            let est = estimate_dim_box(&cloud, &deltas, None)?;
            dimension_report(args.out.as_ref(), &[&est], &[])
        }
        DimCommand::Compare(args) => {
            let cloud = load_cloud(&args.input)?;
            let mut config = CompareConfig::new(args.seed);
            config.alpha = args.alpha;
            config.reps = args.reps;
            let cmp = compare_dims(&cloud, &config);
            let mut comments = vec![format!("seed: {}", args.seed)];
            if let Some(gap) = cmp.mag_ph0_gap() {
                comments.push(format!("abs(dim_mag - dim_ph0): {gap:.6}"));
            }
            for (name, r) in [
                ("magnitude", &cmp.magnitude),
                ("ph0", &cmp.ph0),
                ("box", &cmp.box_count),
            ] {
                if let Err(e) = r {
                    comments.push(format!("{name} failed: {e}"));
                }
            }
            let estimates: Vec<&DimensionEstimate> = [&cmp.magnitude, &cmp.ph0, &cmp.box_count]
                .into_iter()
                .filter_map(|r| r.as_ref().ok())
                .collect();
            dimension_report(args.out.as_ref(), &estimates, &comments)
        }
    }
}

fn run_train(args: TrainArgs) -> Result<(), Error> {
    let layer_sizes = parse_usize_list(&args.layers, "layers")?;
    let dataset = match (&args.blobs, &args.idx_images, &args.idx_labels) {
        (Some(spec), None, None) => {
            let parts: Vec<&str> = spec.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::InvalidInputs(
                    "--blobs needs n_per_class,n_classes,input_dim,separation".into(),
                ));
            }
            DataSpec::Blobs {
                n_per_class: parts[0].trim().parse().map_err(|e| {
                    Error::InvalidInputs(format!("bad n_per_class: {e}"))
                })?,
                n_classes: parts[1].trim().parse().map_err(|e| {
                    Error::InvalidInputs(format!("bad n_classes: {e}"))
                })?,
                input_dim: parts[2].trim().parse().map_err(|e| {
                    Error::InvalidInputs(format!("bad input_dim: {e}"))
                })?,
                separation: parts[3].trim().parse().map_err(|e| {
                    Error::InvalidInputs(format!("bad separation: {e}"))
                })?,
                seed: args.seed,
            }
        }
        (None, Some(images), Some(labels)) => {
            DataSpec::Idx { images: images.clone(), labels: labels.clone() }
        }
        _ => {
            return Err(Error::InvalidInputs(
                "give either --blobs or both --idx-images and --idx-labels".into(),
            ))
        }
    };
    let config = TrainerConfig {
        layer_sizes,
        learning_rate: args.lr,
        batch_size: args.batch,
        iterations: args.iters,
        seed: args.seed,
        eval_every: args.eval_every,
        dataset,
    };
    let data = config.dataset.load()?;
    let log = train_and_record(&config, &data)?;
    save_trajectory(&args.out, &log)?;
    println!("# seed: {}", args.seed);
    println!("dataset: {}", config.dataset);
    println!(
        "recorded {} iterations of {} parameters to {}",
        log.len(),
        log.d,
        args.out.display()
    );
    let last_acc = log.test_accuracy.iter().rev().find(|a| !a.is_nan());
    if let Some(acc) = last_acc {
        println!("final test accuracy: {acc:.4}");
    }
    Ok(())
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let log = load_trajectory(&args.input)?;
    let normalize = match args.normalize.as_str() {
        "median" => Normalize::Median,
        "none" => Normalize::None,
        other => {
            return Err(Error::InvalidInputs(format!(
                "unknown normalize mode {other:?}; use median or none"
            )))
        }
    };
    let ph0 = if args.ph0 {
        let seed = args.seed.ok_or_else(|| {
            Error::InvalidInputs("--ph0 draws random subsamples; --seed is required".into())
        })?;
        Some(Ph0Options { alpha: args.alpha, reps: args.reps, seed })
    } else {
        None
    };
    if args.points < 2 {
        return Err(Error::InvalidInputs("need at least 2 grid points".into()));
    }
    let opts = AnalyzeOptions {
        scales: parse_f64_list(&args.scales, "scales")?,
        window: args.window,
        stride: args.stride,
        normalize,
        grid: log_spaced(args.t_min, args.t_max, args.points),
        min_points: args.min_points,
        thin: args.thin,
        exact_scales: args.exact,
        ph0,
    };
    let report = analyze(&log, &opts)?;
    let mut comments = vec![
        format!(
            "window: {} stride: {} normalize: {} thin: {}",
            args.window, args.stride, args.normalize, args.thin
        ),
    ];
    if let Some(seed) = args.seed {
        comments.insert(0, format!("seed: {seed}"));
    }
    let mut buf = Vec::new();
    write_analysis_csv(&mut buf, &report, &comments).expect("writing to a Vec cannot fail");
    write_output(args.out.as_ref(), &buf)
}

fn run_bound(args: BoundArgs) -> Result<(), Error> {
    let inputs = BoundInputs {
        dim: args.dim,
        n: args.n,
        loss_bound: args.loss_bound,
        lipschitz: args.lipschitz,
        mixing: args.mixing,
        gamma: args.gamma,
    };
    let value = generalisation_bound(&inputs)?;
    // 12 significant digits.
    println!("{value:.11e}");
    if inputs.log_term_degenerate() {
        eprintln!("note: n K^2 <= 1, the squared-log term is outside its monotone regime");
    }
    eprintln!("note: the bound is asymptotic in n; finite-n values carry no guarantee");
    Ok(())
}

fn real_main() -> Result<(), Error> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; anything else is a
            // usage error (exit 1) with the offending flag named by clap.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    match cli.command {
        Command::Gen(args) => run_gen(args),
        Command::Mag(args) => run_mag(args),
        Command::Magfun(args) => run_magfun(args),
        Command::Dim(cmd) => run_dim(cmd),
        Command::Train(args) => run_train(args),
        Command::Analyze(args) => run_analyze(args),
        Command::Bound(args) => run_bound(args),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
