mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use swards::datagen::{
    mouse_dataset, random_walk, sample_mixture, two_region_populations, MixtureSpec, MouseSpec, TwoRegionSpec, WalkSpec,
};
use swards::solver::{best_of_restarts, run_restarts};
use swards::{
    build_matrix, format_f64, mle_dimension, rand_index, rasterize, BoundMeasure, BoundingBox, ClusteringConfig,
    CriterionParams, DimEstimatorConfig, DissimilarityMatrix, DissimilarityMeasure, Environment, Partition,
    VoronoiCriterion, ZeroDistancePolicy,
};

use report::{ConfigEcho, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {msg}", path.display())]
    Input { path: PathBuf, msg: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Load { path: PathBuf, source: swards::Error },
    #[error(transparent)]
    Core(#[from] swards::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } => 2,
            CliError::Io { .. } => 1,
            CliError::Load { source: e, .. } | CliError::Core(e) => {
                if e.is_validation() {
                    2
                } else {
                    1
                }
            }
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser)]
#[command(name = "swards", version, about = "Spherical Wards clustering with arbitrary dissimilarity measures")]
struct Cli {
    /// Maximum number of worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a data set and write labels plus a JSON run report.
    Cluster(ClusterArgs),
    /// Estimate the intrinsic dimension of a data set.
    Dim(DimArgs),
    /// Rasterize the generalized Voronoi diagram of a labelled data set.
    Voronoi(VoronoiArgs),
    /// Rand index between two labellings.
    Rand(RandArgs),
    /// Generate a synthetic data set.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MeasureKind {
    Euclidean,
    Rbf,
    Barrier,
    Region,
}

impl MeasureKind {
    fn name(self) -> &'static str {
        match self {
            MeasureKind::Euclidean => "euclidean",
            MeasureKind::Rbf => "rbf",
            MeasureKind::Barrier => "barrier",
            MeasureKind::Region => "region",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CriterionKind {
    Swards,
    Wards,
}

#[derive(Args)]
struct MeasureArgs {
    /// Dissimilarity measure for --points input [default: euclidean].
    #[arg(long, value_enum)]
    measure: Option<MeasureKind>,
    /// RBF kernel width; defaults to the median squared pairwise distance.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Environment JSON for the barrier and region measures.
    #[arg(long)]
    env: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    /// Points CSV (optional header; a `label` column is ignored).
    #[arg(long, required_unless_present = "matrix", conflicts_with = "matrix")]
    points: Option<PathBuf>,
    /// Precomputed squared-dissimilarity matrix (CSV, or binary for `.bin`).
    #[arg(long, conflicts_with_all = ["measure", "sigma2", "env"])]
    matrix: Option<PathBuf>,
    #[command(flatten)]
    measure: MeasureArgs,
}

#[derive(Args)]
struct DimRange {
    /// Smallest neighbourhood size in the dimension estimate.
    #[arg(long, default_value_t = 10)]
    kmin: usize,
    /// Largest neighbourhood size in the dimension estimate.
    #[arg(long, default_value_t = 20)]
    kmax: usize,
}

impl DimRange {
    fn config(&self) -> Result<DimEstimatorConfig, CliError> {
        Ok(DimEstimatorConfig::new(self.kmin, self.kmax)?)
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "swards")]
    criterion: CriterionKind,
    /// Initial number of clusters (spherical Wards) [default: 10].
    #[arg(long)]
    n_init: Option<usize>,
    /// Number of clusters (Wards).
    #[arg(long)]
    k: Option<usize>,
    /// The criterion's N: `auto` or a positive number (spherical Wards) [default: auto].
    #[arg(long)]
    dim: Option<String>,
    #[command(flatten)]
    range: DimRange,
    /// Relative size below which clusters are dissolved.
    #[arg(long, default_value_t = ClusteringConfig::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = ClusteringConfig::DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, default_value_t = ClusteringConfig::DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Labels CSV (index,label).
    #[arg(long)]
    out_labels: Option<PathBuf>,
    /// Run report JSON.
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ZeroPolicyArg {
    Skip,
    Error,
}

#[derive(Args)]
struct DimArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    range: DimRange,
    /// Handling of zero nearest-neighbour distances.
    #[arg(long, value_enum, default_value = "skip")]
    zero_policy: ZeroPolicyArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GridFormat {
    Csv,
    Pgm,
}

#[derive(Args)]
struct VoronoiArgs {
    /// Two-dimensional points CSV.
    #[arg(long)]
    points: PathBuf,
    /// Cluster labels for the points (index,label CSV).
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    measure: MeasureArgs,
    #[arg(long, value_enum, default_value = "swards")]
    criterion: CriterionKind,
    /// The criterion's N: `auto` or a positive number [default: auto].
    #[arg(long)]
    dim: Option<String>,
    #[command(flatten)]
    range: DimRange,
    /// Grid extent `xmin,ymin,xmax,ymax`; defaults to the environment box or
    /// the data extent padded by 10% of its longer side.
    #[arg(long, allow_hyphen_values = true)]
    bbox: Option<String>,
    #[arg(long, default_value_t = 200)]
    width: usize,
    #[arg(long, default_value_t = 200)]
    height: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: GridFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RandArgs {
    /// First labelling.
    a: PathBuf,
    /// Second labelling.
    b: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    /// Two Gaussians with variances r and 1-r.
    MixtureScale,
    /// Two Gaussians with weights omega and 1-omega.
    MixtureUnbalanced,
    /// Head and two ears with barriers.
    Mouse,
    /// Random-walk population from one seed point.
    Walk,
    /// Two walk populations on either side of a slow/fast border.
    TwoRegion,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    /// Number of points (mixtures) or walkers (walk).
    #[arg(long, default_value_t = 800)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = 800)]
    n_head: usize,
    #[arg(long, default_value_t = 200)]
    n_ear: usize,
    /// Number of walk steps.
    #[arg(long, default_value_t = 100)]
    t: usize,
    /// Walk step length [default: 0.05 of the shorter box side].
    #[arg(long)]
    step: Option<f64>,
    /// Walk start `x,y` [default: centre of the box].
    #[arg(long, allow_hyphen_values = true)]
    seed_point: Option<String>,
    /// Environment JSON for the walk [default: box [-1,1]^2, no barriers].
    #[arg(long)]
    env: Option<PathBuf>,
    /// Slow factor of the two-region preset.
    #[arg(long, default_value_t = 5.0)]
    s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points CSV (x,y,label).
    #[arg(long)]
    out: PathBuf,
    /// Environment JSON for presets that have one.
    #[arg(long)]
    out_env: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot set up the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Cluster(a) => cmd_cluster(a),
        Command::Dim(a) => cmd_dim(a),
        Command::Voronoi(a) => cmd_voronoi(a),
        Command::Rand(a) => cmd_rand(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_env(path: &Option<PathBuf>) -> Result<Option<Environment>, CliError> {
    path.as_ref().map(|p| Environment::load(p).map_err(|source| CliError::Load { path: p.clone(), source })).transpose()
}

fn resolve_measure(args: &MeasureArgs, points: &[Vec<f64>]) -> Result<DissimilarityMeasure, CliError> {
    let kind = args.measure.unwrap_or(MeasureKind::Euclidean);
    if args.sigma2.is_some() && !matches!(kind, MeasureKind::Rbf) {
        return Err(usage("--sigma2 only applies to --measure rbf"));
    }
    let env = load_env(&args.env)?;
    if env.is_some() && !matches!(kind, MeasureKind::Barrier | MeasureKind::Region) {
        return Err(usage("--env only applies to --measure barrier or region"));
    }
    let need_env = || env.clone().ok_or_else(|| usage(format!("--measure {} needs --env", kind.name())));
    Ok(match kind {
        MeasureKind::Euclidean => DissimilarityMeasure::Euclidean,
        MeasureKind::Rbf => {
            let sigma2 = match args.sigma2 {
                Some(s) => s,
                None => swards::dissimilarity::median_sigma2(points)?,
            };
            DissimilarityMeasure::rbf(sigma2)?
        }
        MeasureKind::Barrier => DissimilarityMeasure::barrier(need_env()?),
        MeasureKind::Region => DissimilarityMeasure::region(need_env()?)?,
    })
}

struct LoadedInput {
    matrix: DissimilarityMatrix,
    source: String,
    measure: String,
    truth: Option<Vec<i64>>,
}

fn load_input(input: &InputArgs) -> Result<LoadedInput, CliError> {
    if let Some(path) = &input.matrix {
        let matrix = DissimilarityMatrix::load(path).map_err(|source| CliError::Load { path: path.clone(), source })?;
        return Ok(LoadedInput { matrix, source: io::path_string(path), measure: "precomputed".into(), truth: None });
    }
    let path = input.points.as_ref().expect("clap requires --points or --matrix");
    let data = io::read_points(path)?;
    let measure = resolve_measure(&input.measure, &data.points)?;
    let matrix = build_matrix(&data.points, &measure)?;
    Ok(LoadedInput { matrix, source: io::path_string(path), measure: measure.name().into(), truth: data.labels })
}

/// Exactly `N` comma-separated finite numbers.
fn parse_floats<const N: usize>(text: &str, flag: &str) -> Result<[f64; N], CliError> {
    let bad = || usage(format!("{flag} expects {N} comma-separated numbers, got {text:?}"));
    let values: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(bad)?;
    values.try_into().map_err(|_| bad())
}

/// `None` for `auto`, otherwise the parsed positive value.
fn parse_dim(text: &str) -> Result<Option<f64>, CliError> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    match text.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Some(v)),
        _ => Err(usage(format!("--dim must be `auto` or a positive number, got {text:?}"))),
    }
}

fn resolve_dim(text: Option<&str>, matrix: &DissimilarityMatrix, range: &DimRange) -> Result<f64, CliError> {
    match parse_dim(text.unwrap_or("auto"))? {
        Some(v) => Ok(v),
        None => Ok(mle_dimension(matrix, &range.config()?)?.dimension),
    }
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), CliError> {
    let start = Instant::now();
    match args.criterion {
        CriterionKind::Swards if args.k.is_some() => {
            return Err(usage("--k only applies to --criterion wards; spherical Wards chooses the number of clusters"));
        }
        CriterionKind::Wards if args.k.is_none() => return Err(usage("--criterion wards needs --k")),
        CriterionKind::Wards if args.n_init.is_some() || args.dim.is_some() => {
            return Err(usage("--n-init and --dim only apply to --criterion swards"));
        }
        _ => {}
    }
    let input = load_input(&args.input)?;
    let (config, dimension_n) = match args.criterion {
        CriterionKind::Swards => {
            let dim = resolve_dim(args.dim.as_deref(), &input.matrix, &args.range)?;
            let n_init = args.n_init.unwrap_or(10);
            (ClusteringConfig::spherical(CriterionParams::new(dim)?, n_init), Some(dim))
        }
        CriterionKind::Wards => (ClusteringConfig::wards(args.k.expect("checked above")), None),
    };
    let config = config
        .with_epsilon(args.epsilon)
        .with_restarts(args.restarts)
        .with_max_sweeps(args.max_sweeps)
        .with_seed(args.seed);

    let runs = run_restarts(&input.matrix, &config)?;
    let sweeps_per_restart: Vec<usize> = runs.iter().map(|r| r.sweeps_run).collect();
    let best = best_of_restarts(runs)?;

    let report = RunReport {
        config: ConfigEcho {
            criterion: match args.criterion {
                CriterionKind::Swards => "swards".into(),
                CriterionKind::Wards => "wards".into(),
            },
            input: input.source,
            measure: input.measure,
            n_init: (args.criterion == CriterionKind::Swards).then(|| args.n_init.unwrap_or(10)),
            k: args.k,
            dim: (args.criterion == CriterionKind::Swards).then(|| args.dim.clone().unwrap_or_else(|| "auto".into())),
            epsilon: args.epsilon,
            restarts: args.restarts,
            max_sweeps: args.max_sweeps,
        },
        energy: best.energy,
        rand_vs_labels: input.truth.as_deref().map(|t| rand_index(t, best.partition.labels())).transpose()?,
        n_clusters: best.n_clusters,
        cluster_sizes: best.cluster_sizes(),
        dimension_n,
        restarts_used: sweeps_per_restart.len(),
        best_restart: best.restart_index,
        sweeps_per_restart,
        wall_time_ms: start.elapsed().as_millis() as u64,
        seed: args.seed,
    };

    if let Some(path) = &args.out_labels {
        io::write_labels(path, best.partition.labels())?;
    }
    if let Some(path) = &args.out_report {
        std::fs::write(path, report.to_json()).map_err(|source| CliError::Io { path: path.clone(), source })?;
    }
    println!("n_clusters {}", report.n_clusters);
    println!("energy {}", format_f64(report.energy));
    if let Some(n) = report.dimension_n {
        println!("dimension {}", format_f64(n));
    }
    let sizes: Vec<String> = report.cluster_sizes.iter().map(usize::to_string).collect();
    println!("cluster_sizes {}", sizes.join(","));
    if let Some(r) = report.rand_vs_labels {
        println!("rand_vs_labels {}", format_f64(r));
    }
    Ok(())
}

fn cmd_dim(args: DimArgs) -> Result<(), CliError> {
    let input = load_input(&args.input)?;
    let policy = match args.zero_policy {
        ZeroPolicyArg::Skip => ZeroDistancePolicy::SkipPair,
        ZeroPolicyArg::Error => ZeroDistancePolicy::Error,
    };
    let est = mle_dimension(&input.matrix, &args.range.config()?.with_policy(policy))?;
    println!("{}", format_f64(est.dimension));
    println!("k,estimate");
    for (k, v) in &est.per_k {
        println!("{k},{}", format_f64(*v));
    }
    Ok(())
}

/// Dense cluster ids from arbitrary integer labels, in order of first appearance.
fn dense_labels(labels: &[i64]) -> Vec<usize> {
    let mut seen: Vec<i64> = Vec::new();
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(i) => i,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect()
}

fn cmd_voronoi(args: VoronoiArgs) -> Result<(), CliError> {
    let data = io::read_points(&args.points)?;
    let labels = io::read_labels(&args.labels)?;
    if labels.len() != data.points.len() {
        return Err(usage(format!(
            "{} labels for {} points ({} vs {})",
            labels.len(),
            data.points.len(),
            io::path_string(&args.labels),
            io::path_string(&args.points)
        )));
    }
    if data.points[0].len() != 2 {
        return Err(usage("voronoi needs two-dimensional points"));
    }
    if args.width == 0 || args.height == 0 {
        return Err(usage("--width and --height must be positive"));
    }
    let measure = resolve_measure(&args.measure, &data.points)?;
    let matrix = build_matrix(&data.points, &measure)?;
    let criterion = match args.criterion {
        CriterionKind::Wards => {
            if args.dim.is_some() {
                return Err(usage("--dim only applies to --criterion swards"));
            }
            VoronoiCriterion::WardsKMeans
        }
        CriterionKind::Swards => {
            let dim = resolve_dim(args.dim.as_deref(), &matrix, &args.range)?;
            VoronoiCriterion::SphericalWards(CriterionParams::new(dim)?)
        }
    };
    let bbox = match &args.bbox {
        Some(text) => {
            let b = parse_floats::<4>(text, "--bbox")?;
            BoundingBox::new([b[0], b[1]], [b[2], b[3]])?
        }
        None => match &measure {
            DissimilarityMeasure::Barrier(geo) => geo.environment().bbox,
            DissimilarityMeasure::Region(env) => env.bbox,
            _ => {
                let tight = BoundingBox::around(&data.points, 0.0)?;
                let [w, h] = tight.extent();
                BoundingBox::around(&data.points, 0.1 * w.max(h))?
            }
        },
    };
    let bound = BoundMeasure::new(&measure, &data.points)?;
    let partition = Partition::new(dense_labels(&labels));
    let grid = rasterize(&bound, &matrix, &partition, bbox, args.width, args.height, criterion)?;
    let out = io::create(&args.out)?;
    match args.format {
        GridFormat::Csv => grid.write_csv(out)?,
        GridFormat::Pgm => grid.write_pgm(out)?,
    }
    Ok(())
}

fn cmd_rand(args: RandArgs) -> Result<(), CliError> {
    let a = io::read_labels(&args.a)?;
    let b = io::read_labels(&args.b)?;
    if a.len() != b.len() {
        return Err(usage(format!("labellings have different lengths: {} vs {}", a.len(), b.len())));
    }
    println!("{}", format_f64(rand_index(&a, &b)?));
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let (points, labels, env) = match args.preset {
        Preset::MixtureScale | Preset::MixtureUnbalanced => {
            let spec = match args.preset {
                Preset::MixtureScale => MixtureSpec::scale_preset(args.r, args.n, args.seed)?,
                _ => MixtureSpec::unbalanced_preset(args.omega, args.n, args.seed)?,
            };
            let data = sample_mixture(&spec)?;
            (data.points, data.labels, None)
        }
        Preset::Mouse => {
            let (data, env) = mouse_dataset(&MouseSpec::new(args.n_head, args.n_ear, args.seed))?;
            (data.points, data.labels, Some(env))
        }
        Preset::Walk => {
            let env = match load_env(&args.env)? {
                Some(env) => env,
                None => Environment::new(BoundingBox::new([-1.0, -1.0], [1.0, 1.0])?),
            };
            let start = match &args.seed_point {
                Some(text) => parse_floats::<2>(text, "--seed-point")?,
                None => {
                    let b = env.bbox;
                    [0.5 * (b.min[0] + b.max[0]), 0.5 * (b.min[1] + b.max[1])]
                }
            };
            let mut spec = WalkSpec::new(env.clone(), start, args.n, args.t, args.seed);
            if let Some(step) = args.step {
                spec = spec.with_step(step);
            }
            let points: Vec<Vec<f64>> = random_walk(&spec)?.into_iter().map(|p| p.to_vec()).collect();
            let labels = vec![0; points.len()];
            (points, labels, Some(env))
        }
        Preset::TwoRegion => {
            let spec = TwoRegionSpec::new(args.s, args.seed)?;
            let data = two_region_populations(&spec)?;
            (data.points, data.labels, Some(spec.env))
        }
    };
    if args.out_env.is_some() && env.is_none() {
        return Err(usage("this preset has no environment; drop --out-env"));
    }
    io::write_labeled_points(&args.out, &points, &labels)?;
    if let (Some(path), Some(env)) = (&args.out_env, env) {
        env.save(path).map_err(|source| CliError::Load { path: path.clone(), source })?;
    }
    Ok(())
}
