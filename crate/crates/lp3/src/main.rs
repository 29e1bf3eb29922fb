//! `lp3` command-line tool: kernel evaluation, finite-network training,
//! exact-map fitting, trajectory and basin analysis, periodic-orbit censuses
//! and continuation, quadratic-conjugacy reports, and reproducible scans
//! with figure presets.
//!
//! Exit codes: 0 success, 2 usage error, 1 numerical or I/O failure. Every
//! run echoes its fully resolved configuration to stderr and stamps it (with
//! a hash) into any CSV/JSON artifact it writes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lp3::config::{
    self, dynamics_json, kernel_json, parse_elm_activation, parse_family, parse_interval,
    parse_number_list, parse_usize_list, parse_weight_law, Mode, RunConfig,
    CONFIG_SCHEMA_VERSION,
};
use lp3::core::dataset::PeriodicDataset;
use lp3::core::dynamics::{iterate, DynamicsConfig, Lyapunov};
use lp3::core::elm::FiniteNetwork;
use lp3::core::kernels::{KernelFamily, KernelSpec};
use lp3::core::limitmap::{fit_limit, TrainedMap};
use lp3::core::math::round;
use lp3::core::orbits::{birth_sigma, continue_orbit, find_orbits, orbit_census, Terminus};
use lp3::core::quadratic::{
    classify_kappa, fixed_point_multiplier, quadratic_error, KappaClass, QuadraticError,
    QuadraticFit,
};
use lp3::io::{
    self, csv_document, format_float, json_number, label_string, lyapunov_csv, lyapunov_json,
    terminus_string,
};
use lp3::scan::{
    self, scan_2d, scan_c, scan_csv_header, scan_externalization, scan_finite_vs_limit,
    scan_period_histogram, scan_rows_csv, Axis, HistogramSource, ScanGrid,
};

static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config-schema 1)");
// Keep the literal in VERSION in sync with the schema constant.
const _: () = assert!(CONFIG_SCHEMA_VERSION == 1);

#[derive(Parser)]
#[command(name = "lp3", version = VERSION, disable_help_subcommand = true)]
/// Exact infinite-width trained maps of short periodic datasets and their
/// dynamics: kernels, fits, orbits, scans.
struct Cli {
    /// Root seed; every random task derives its own seed from this and a
    /// stable task label.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: LP3_WORKERS, then logical cores). Affects
    /// scheduling only, never results.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and numeric kernels Θ(x, y).
    Kernel {
        #[command(subcommand)]
        command: KernelCommand,
    },
    /// Finite random-feature networks.
    Elm {
        #[command(subcommand)]
        command: ElmCommand,
    },
    /// Exact infinite-width trained maps.
    Limitmap {
        #[command(subcommand)]
        command: LimitmapCommand,
    },
    /// Trajectories, Lyapunov exponents, basins.
    Dynamics {
        #[command(subcommand)]
        command: DynamicsCommand,
    },
    /// Periodic-orbit censuses and continuation in feedback strength.
    Orbits {
        #[command(subcommand)]
        command: OrbitsCommand,
    },
    /// Quadratic interpolation of three-point data and its normal form.
    Quad {
        #[command(subcommand)]
        command: QuadCommand,
    },
    /// Reproducible parameter sweeps and figure presets.
    Scan {
        #[command(subcommand)]
        command: ScanCommand,
    },
}

#[derive(Subcommand)]
enum KernelCommand {
    /// Print Θ(x, y) (or a derivative in x) for one kernel family.
    Eval(KernelEvalArgs),
}

#[derive(Args)]
struct KernelEvalArgs {
    /// Family grammar: erf | sin | cos | relu | sgn-limit | delta-limit |
    /// uniform:<act>:<nodes> | deep-nngp:<act>:<depth> |
    /// deep-ntk:<act>:<depth> | bias:<inner>.
    #[arg(long)]
    family: String,
    #[arg(long = "sigma-w", default_value_t = 1.0)]
    sigma_w: f64,
    #[arg(long = "sigma-b", default_value_t = 1.0)]
    sigma_b: f64,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, allow_hyphen_values = true)]
    y: f64,
    /// Derivative order in x: 0 = value, 1 = ∂/∂x, 2 = ∂²/∂x².
    #[arg(long, default_value_t = 0)]
    deriv: u8,
}

#[derive(Subcommand)]
enum ElmCommand {
    /// Sample a network, train the readout exactly, write net.json.
    Train(ElmTrainArgs),
}

#[derive(Args)]
struct ElmTrainArgs {
    /// Number of hidden nodes.
    #[arg(long)]
    n: usize,
    /// erf | sin | cos | relu | sgn.
    #[arg(long)]
    activation: String,
    /// Sets both σ_w and σ_b (override with --sigma-w / --sigma-b).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long = "sigma-w")]
    sigma_w: Option<f64>,
    #[arg(long = "sigma-b")]
    sigma_b: Option<f64>,
    /// gaussian | uniform input weights and biases.
    #[arg(long, default_value = "gaussian")]
    law: String,
    /// Orbit points in visit order, e.g. -1,1,0.
    #[arg(long, allow_hyphen_values = true)]
    data: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum LimitmapCommand {
    /// Solve the kernel normal equations on a periodic dataset, write map.json.
    Fit(LimitmapFitArgs),
    /// Evaluate a stored map at a point.
    Eval(LimitmapEvalArgs),
}

#[derive(Args)]
struct LimitmapFitArgs {
    /// Orbit points in visit order, e.g. -1,1,0.
    #[arg(long, allow_hyphen_values = true)]
    data: String,
    /// Kernel family (same grammar as `kernel eval --family`).
    #[arg(long)]
    kernel: String,
    /// Sets both σ_w and σ_b (override with --sigma-w / --sigma-b).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long = "sigma-w")]
    sigma_w: Option<f64>,
    #[arg(long = "sigma-b")]
    sigma_b: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LimitmapEvalArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    /// Override the stored feedback strength.
    #[arg(long = "sigma-fb")]
    sigma_fb: Option<f64>,
}

#[derive(Subcommand)]
enum DynamicsCommand {
    /// Run one trajectory; print a one-line JSON summary.
    Run(DynamicsRunArgs),
    /// Attractor labels over a (σ_fb, x0) grid, as CSV.
    Basin(DynamicsBasinArgs),
}

#[derive(Args)]
struct DynamicsRunArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    x0: f64,
    /// Lyapunov averaging horizon T.
    #[arg(long, default_value_t = 10_000)]
    t: usize,
    /// Relative tolerance of the period test.
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    /// Largest period tested.
    #[arg(long, default_value_t = 20)]
    nmax: usize,
    #[arg(long, default_value_t = 1000)]
    transient: usize,
    /// Keep this many trailing states in the summary.
    #[arg(long = "sample-len", default_value_t = 0)]
    sample_len: usize,
}

#[derive(Args)]
struct DynamicsBasinArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long = "param-min", allow_hyphen_values = true, default_value_t = 0.0)]
    param_min: f64,
    #[arg(long = "param-max", allow_hyphen_values = true, default_value_t = 1.0)]
    param_max: f64,
    #[arg(long = "param-steps", default_value_t = 101)]
    param_steps: usize,
    #[arg(long = "x0-min", allow_hyphen_values = true, default_value_t = -10.0)]
    x0_min: f64,
    #[arg(long = "x0-max", allow_hyphen_values = true, default_value_t = 10.0)]
    x0_max: f64,
    #[arg(long = "x0-steps", default_value_t = 41)]
    x0_steps: usize,
    #[arg(long, default_value_t = 10_000)]
    t: usize,
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    #[arg(long, default_value_t = 20)]
    nmax: usize,
    #[arg(long, default_value_t = 1000)]
    transient: usize,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OrbitsCommand {
    /// Newton census of periodic orbits with minimal period ≤ pmax.
    Census(OrbitsCensusArgs),
    /// Continue every census orbit down in feedback strength.
    Externalize(OrbitsExternalizeArgs),
}

#[derive(Args)]
struct OrbitsCensusArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    pmax: usize,
    /// Search interval lo,hi.
    #[arg(long, allow_hyphen_values = true, default_value = "-10,10")]
    interval: String,
    /// Newton starts (midpoints of an even partition).
    #[arg(long, default_value_t = 1000)]
    starts: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OrbitsExternalizeArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    pmax: usize,
    #[arg(long, allow_hyphen_values = true, default_value = "-10,10")]
    interval: String,
    #[arg(long, default_value_t = 1000)]
    starts: usize,
    /// Continue down to this feedback strength.
    #[arg(long = "sigma-min", default_value_t = 1e-3)]
    sigma_min: f64,
    /// Initial continuation step in σ_fb.
    #[arg(long, default_value_t = 1e-2)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum QuadCommand {
    /// Quadratic interpolation of three-point data; prints coefficients and
    /// the normal-form parameter κ(1).
    Fit(QuadFitArgs),
    /// First feedback strength at which each period is the attractor.
    Births(QuadBirthsArgs),
    /// Distance of a stored trained map from its quadratic interpolation.
    Error(QuadErrorArgs),
}

#[derive(Args)]
struct QuadFitArgs {
    /// Orbit points in visit order, e.g. -1,1,0.
    #[arg(long, allow_hyphen_values = true)]
    data: String,
}

#[derive(Args)]
struct QuadBirthsArgs {
    #[arg(long, allow_hyphen_values = true)]
    data: String,
    /// Periods to report, e.g. 1,2,3,4,5,6.
    #[arg(long)]
    periods: String,
    /// σ_fb grid resolution of the sweep.
    #[arg(long, default_value_t = 1e-4)]
    res: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuadErrorArgs {
    #[arg(long)]
    map: PathBuf,
}

#[derive(Subcommand)]
enum ScanCommand {
    /// Bifurcation scan in c for the erf kernel (a=-1, b=1, σ=1).
    Fig2(PresetArgs),
    /// Externalization diagram and λ_p branches for data {-1, 1, -0.8}.
    Fig3(PresetArgs),
    /// 2-D (c, σ) period/stability diagrams for all four families.
    Fig6(PresetArgs),
    /// Period histograms over random datasets for all four families.
    Fig11(PresetArgs),
    /// Run a TOML-described scan.
    Run(ScanRunArgs),
}

#[derive(Args)]
struct PresetArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScanRunArgs {
    #[arg(long)]
    config: PathBuf,
}

/// Usage errors exit 2, numerical/I-O failures exit 1.
enum CliError {
    Usage(String),
    Failure(String),
}

type CliResult = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn failure(msg: impl std::fmt::Display) -> CliError {
    CliError::Failure(msg.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let workers = resolve_workers(cli.workers);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot build worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Flag, then LP3_WORKERS, then the logical core count.
fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("LP3_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .filter(|&w| w > 0)
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

/// Echo the resolved config where it never mixes with results.
fn echo_config(config: &Value) {
    eprintln!("# config: {config}");
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Kernel {
            command: KernelCommand::Eval(args),
        } => kernel_eval(args),
        Command::Elm {
            command: ElmCommand::Train(args),
        } => elm_train(args, cli.seed),
        Command::Limitmap { command } => match command {
            LimitmapCommand::Fit(args) => limitmap_fit(args),
            LimitmapCommand::Eval(args) => limitmap_eval(args),
        },
        Command::Dynamics { command } => match command {
            DynamicsCommand::Run(args) => dynamics_run(args),
            DynamicsCommand::Basin(args) => dynamics_basin(args),
        },
        Command::Orbits { command } => match command {
            OrbitsCommand::Census(args) => orbits_census(args),
            OrbitsCommand::Externalize(args) => orbits_externalize(args),
        },
        Command::Quad { command } => match command {
            QuadCommand::Fit(args) => quad_fit(args),
            QuadCommand::Births(args) => quad_births(args),
            QuadCommand::Error(args) => quad_error(args),
        },
        Command::Scan { command } => match command {
            ScanCommand::Fig2(args) => preset_fig2(&args.out, cli.seed),
            ScanCommand::Fig3(args) => preset_fig3(&args.out, cli.seed),
            ScanCommand::Fig6(args) => preset_fig6(&args.out, cli.seed),
            ScanCommand::Fig11(args) => preset_fig11(&args.out, cli.seed),
            ScanCommand::Run(args) => scan_run(&args.config),
        },
    }
}

fn parse_spec(family: &str, sigma_w: f64, sigma_b: f64) -> Result<KernelSpec, CliError> {
    let family = parse_family(family).map_err(|e| usage(format!("--family: {e}")))?;
    KernelSpec::new(family, sigma_w, sigma_b).map_err(|e| usage(format!("--sigma-w/--sigma-b: {e}")))
}

fn parse_data(data: &str) -> Result<PeriodicDataset, CliError> {
    let points = parse_number_list(data).map_err(|e| usage(format!("--data: {e}")))?;
    PeriodicDataset::period_orbit(&points).map_err(|e| usage(format!("--data: {e}")))
}

fn read_map(path: &Path) -> Result<TrainedMap, CliError> {
    io::read_map(path).map_err(failure)
}

fn kernel_eval(args: &KernelEvalArgs) -> CliResult {
    let spec = parse_spec(&args.family, args.sigma_w, args.sigma_b)?;
    let config = json!({
        "command": "kernel eval",
        "kernel": kernel_json(&spec),
        "x": args.x,
        "y": args.y,
        "deriv": args.deriv,
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let value = match args.deriv {
        0 => spec.eval(args.x, args.y),
        1 => spec.dx(args.x, args.y),
        2 => spec.dx2(args.x, args.y),
        d => return Err(usage(format!("--deriv: order {d} not in 0|1|2"))),
    }
    .map_err(failure)?;
    println!("{}", format_float(value));
    Ok(())
}

fn elm_train(args: &ElmTrainArgs, seed: u64) -> CliResult {
    let activation =
        parse_elm_activation(&args.activation).map_err(|e| usage(format!("--activation: {e}")))?;
    let law = parse_weight_law(&args.law).map_err(|e| usage(format!("--law: {e}")))?;
    let sigma_w = args.sigma_w.unwrap_or(args.sigma);
    let sigma_b = args.sigma_b.unwrap_or(args.sigma);
    let data = parse_data(&args.data)?;
    let config = json!({
        "command": "elm train",
        "n": args.n,
        "activation": args.activation,
        "weight_law": args.law,
        "sigma_w": sigma_w,
        "sigma_b": sigma_b,
        "data": data.xs(),
        "seed": seed,
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let net = FiniteNetwork::sample(args.n, activation, sigma_w, sigma_b, law, seed)
        .map_err(|e| usage(format!("--n/--sigma: {e}")))?
        .train_readout(&data)
        .map_err(failure)?;
    if net.degenerate_training() {
        eprintln!("warning: training was rank-deficient; net.json is flagged degenerate");
    }
    io::write_net(&args.out, &net).map_err(failure)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn limitmap_fit(args: &LimitmapFitArgs) -> CliResult {
    let spec = parse_spec(
        &args.kernel,
        args.sigma_w.unwrap_or(args.sigma),
        args.sigma_b.unwrap_or(args.sigma),
    )?;
    let data = parse_data(&args.data)?;
    let config = json!({
        "command": "limitmap fit",
        "kernel": kernel_json(&spec),
        "data": data.xs(),
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let map = fit_limit(&data, &spec).map_err(failure)?;
    io::write_map(&args.out, &map).map_err(failure)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn limitmap_eval(args: &LimitmapEvalArgs) -> CliResult {
    let mut map = read_map(&args.map)?;
    if let Some(s) = args.sigma_fb {
        map = map.with_feedback(s);
    }
    let config = json!({
        "command": "limitmap eval",
        "map": args.map.display().to_string(),
        "x": args.x,
        "sigma_fb": map.sigma_fb(),
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let value = map.evaluate(args.x);
    if value.is_nan() {
        return Err(failure("the kernel could not be evaluated at this point"));
    }
    println!("{}", format_float(value));
    Ok(())
}

fn dynamics_config(transient: usize, t: usize, eps: f64, nmax: usize, sample: usize) -> DynamicsConfig {
    DynamicsConfig {
        transient,
        horizon: t,
        x0: 0.0,
        eps_period: eps,
        n_max: nmax,
        diverge_bound: 1e8,
        sample_len: sample,
    }
}

fn dynamics_run(args: &DynamicsRunArgs) -> CliResult {
    if args.t == 0 || args.nmax == 0 || !(args.eps > 0.0) {
        return Err(usage("--t and --nmax must be >= 1 and --eps > 0"));
    }
    let map = read_map(&args.map)?;
    let cfg = DynamicsConfig {
        x0: args.x0,
        ..dynamics_config(args.transient, args.t, args.eps, args.nmax, args.sample_len)
    };
    let config = json!({
        "command": "dynamics run",
        "map": args.map.display().to_string(),
        "dynamics": dynamics_json(&cfg),
        "x0": args.x0,
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let summary = iterate(&map, &cfg);
    let line = json!({
        "x0": json_number(args.x0),
        "period": summary.period,
        "lyapunov": lyapunov_json(summary.lyapunov),
        "diverged": summary.diverged,
        "final_state": json_number(summary.final_state),
        "trajectory_sample": summary
            .trajectory_sample
            .iter()
            .map(|&v| json_number(v))
            .collect::<Vec<_>>(),
    });
    println!("{line}");
    Ok(())
}

fn dynamics_basin(args: &DynamicsBasinArgs) -> CliResult {
    let map = read_map(&args.map)?;
    let params = Axis::new("sigma_fb", args.param_min, args.param_max, args.param_steps)
        .map_err(|e| usage(format!("--param-min/--param-max/--param-steps: {e}")))?
        .values();
    let x0s = Axis::new("x0", args.x0_min, args.x0_max, args.x0_steps)
        .map_err(|e| usage(format!("--x0-min/--x0-max/--x0-steps: {e}")))?
        .values();
    let base = dynamics_config(args.transient, args.t, args.eps, args.nmax, 0);
    let config = json!({
        "command": "dynamics basin",
        "map": args.map.display().to_string(),
        "param": {"name": "sigma_fb", "min": args.param_min, "max": args.param_max, "steps": args.param_steps},
        "x0": {"min": args.x0_min, "max": args.x0_max, "steps": args.x0_steps},
        "dynamics": dynamics_json(&base),
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);

    use rayon::prelude::*;
    let rows: Vec<String> = params
        .par_iter()
        .map(|&p| {
            let scaled = map.with_feedback(p);
            let mut out = Vec::with_capacity(x0s.len());
            for &x0 in &x0s {
                let cfg = DynamicsConfig { x0, ..base };
                let summary = iterate(&scaled, &cfg);
                let label = label_from_summary(&scaled, &summary);
                out.push(format!(
                    "{},{},{},{},{},{}",
                    format_float(p),
                    format_float(x0),
                    summary.period.map(|n| n.to_string()).unwrap_or_default(),
                    label_string(label),
                    lyapunov_csv(summary.lyapunov),
                    summary.diverged,
                ));
            }
            out
        })
        .flatten()
        .collect();
    let doc = csv_document(&config, "param,x0,period,label,lyapunov,diverged", &rows);
    io::write_text(args.out.as_deref(), &doc).map_err(failure)
}

/// Attractor label from an already-run summary; same arithmetic as the
/// label-grid helper, without re-iterating the transient.
fn label_from_summary<M: lp3::core::dynamics::Map1D>(
    map: &M,
    summary: &lp3::core::dynamics::OrbitSummary,
) -> lp3::core::dynamics::AttractorLabel {
    use lp3::core::dynamics::AttractorLabel;
    if summary.diverged {
        return AttractorLabel::Divergent;
    }
    match summary.period {
        Some(period) => {
            let mut x = summary.final_state;
            let mut sum = 0.0;
            for _ in 0..period {
                sum += x;
                x = map.eval(x);
            }
            AttractorLabel::Periodic {
                period,
                centroid_micro: round(sum / period as f64 * 1e6) as i64,
            }
        }
        None => match summary.lyapunov {
            Lyapunov::Finite(l) if l > 0.0 => AttractorLabel::Chaotic,
            _ => AttractorLabel::Undetected,
        },
    }
}

fn orbits_census(args: &OrbitsCensusArgs) -> CliResult {
    if args.pmax == 0 || args.starts == 0 {
        return Err(usage("--pmax and --starts must be >= 1"));
    }
    let map = read_map(&args.map)?;
    let interval = parse_interval(&args.interval).map_err(|e| usage(format!("--interval: {e}")))?;
    let config = json!({
        "command": "orbits census",
        "map": args.map.display().to_string(),
        "pmax": args.pmax,
        "interval": [interval.0, interval.1],
        "starts": args.starts,
        "sigma_fb": map.sigma_fb(),
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let records = find_orbits(&map, args.pmax, interval, args.starts);
    let census = orbit_census(&records, args.pmax);
    let marginal: usize = census.iter().map(|r| r.marginal).sum();
    let rows: Vec<String> = census
        .iter()
        .map(|r| format!("{},{},{}", r.period, r.stable, r.unstable))
        .collect();
    let mut doc = csv_document(&config, "p,stable,unstable", &rows);
    if marginal > 0 {
        // |λ_p| below tolerance is reported rather than forced to a side.
        doc.push_str(&format!("# marginal-orbits: {marginal}\n"));
    }
    io::write_text(args.out.as_deref(), &doc).map_err(failure)
}

fn orbits_externalize(args: &OrbitsExternalizeArgs) -> CliResult {
    if args.pmax == 0 || args.starts == 0 {
        return Err(usage("--pmax and --starts must be >= 1"));
    }
    if !(args.step > 0.0) || !(args.sigma_min >= 0.0) {
        return Err(usage("--step must be > 0 and --sigma-min >= 0"));
    }
    let map = read_map(&args.map)?;
    let interval = parse_interval(&args.interval).map_err(|e| usage(format!("--interval: {e}")))?;
    let config = json!({
        "command": "orbits externalize",
        "map": args.map.display().to_string(),
        "pmax": args.pmax,
        "interval": [interval.0, interval.1],
        "starts": args.starts,
        "sigma_start": map.sigma_fb(),
        "sigma_min": args.sigma_min,
        "step": args.step,
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let (rows, notes) = externalize_branches(
        &map,
        args.pmax,
        interval,
        args.starts,
        args.step,
        args.sigma_min,
    );
    let mut doc = csv_document(&config, "p,sigma_fb,x_p,lambda_p,terminus", &rows);
    for note in notes {
        doc.push_str(&note);
        doc.push('\n');
    }
    io::write_text(args.out.as_deref(), &doc).map_err(failure)
}

/// Census at the map's own feedback strength, then one continued branch per
/// orbit. Returns CSV rows (branches separated by blank lines) and trailing
/// comment lines: per-branch λ_p zero crossings (the externalization onset)
/// and skipped seeds.
fn externalize_branches(
    map: &TrainedMap,
    p_max: usize,
    interval: (f64, f64),
    starts: usize,
    step: f64,
    sigma_min: f64,
) -> (Vec<String>, Vec<String>) {
    use rayon::prelude::*;
    let records = find_orbits(map, p_max, interval, starts);
    let sigma_start = map.sigma_fb();
    let results: Vec<(usize, Result<_, _>)> = records
        .par_iter()
        .map(|orbit| {
            let family = |s: f64| map.with_feedback(s);
            (
                orbit.period,
                continue_orbit(
                    family,
                    sigma_start,
                    orbit.points[0],
                    orbit.period,
                    step,
                    sigma_min,
                ),
            )
        })
        .collect();
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for (i, (period, result)) in results.iter().enumerate() {
        match result {
            Ok(branch) => {
                if i > 0 {
                    rows.push(String::new());
                }
                for pt in &branch.path {
                    rows.push(format!(
                        "{},{},{},{},{}",
                        branch.period,
                        format_float(pt.sigma),
                        format_float(pt.x),
                        format_float(pt.lambda),
                        terminus_string(branch.terminus),
                    ));
                }
                if let Terminus::Fold { sigma } = branch.terminus {
                    notes.push(format!("# fold: p={} sigma_fb={}", branch.period, format_float(sigma)));
                }
                if let Some(birth) = birth_sigma(&branch.path) {
                    notes.push(format!(
                        "# birth: p={} sigma_fb={}",
                        branch.period,
                        format_float(birth)
                    ));
                }
            }
            Err(e) => notes.push(format!("# skipped: p={period} seed {i}: {e}")),
        }
    }
    (rows, notes)
}

fn quad_fit_from(data: &PeriodicDataset) -> Result<QuadraticFit, CliError> {
    QuadraticFit::from_dataset(data).map_err(|e| match e {
        QuadraticError::NeedExactlyThreePoints { .. } => usage(format!("--data: {e}")),
        other => failure(other),
    })
}

fn kappa_class_str(class: KappaClass) -> &'static str {
    match class {
        KappaClass::DecreasingConcave => "decreasing-concave",
        KappaClass::InteriorMaximum => "interior-maximum",
        KappaClass::InteriorMinimum => "interior-minimum",
        KappaClass::DecreasingConvex => "decreasing-convex",
    }
}

fn quad_fit(args: &QuadFitArgs) -> CliResult {
    let data = parse_data(&args.data)?;
    let config = json!({
        "command": "quad fit",
        "data": data.xs(),
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let fit = quad_fit_from(&data)?;
    let class = match classify_kappa(&fit) {
        Ok((class, _, _)) => Value::String(kappa_class_str(class).into()),
        Err(QuadraticError::NotPeriodThree { .. }) => Value::String("not-period-three".into()),
        Err(e) => return Err(failure(e)),
    };
    let line = json!({
        "alpha": json_number(fit.alpha()),
        "beta": json_number(fit.beta()),
        "gamma": json_number(fit.gamma()),
        "discriminant": json_number(fit.discriminant()),
        "kappa_1": json_number(fit.kappa(1.0)),
        "critical_point": json_number(fit.critical_point()),
        "class": class,
    });
    println!("{line}");
    Ok(())
}

fn quad_births(args: &QuadBirthsArgs) -> CliResult {
    let data = parse_data(&args.data)?;
    let periods = parse_usize_list(&args.periods).map_err(|e| usage(format!("--periods: {e}")))?;
    if periods.is_empty() || periods.contains(&0) {
        return Err(usage("--periods: need positive periods"));
    }
    let config = json!({
        "command": "quad births",
        "data": data.xs(),
        "periods": periods,
        "resolution": args.res,
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let fit = quad_fit_from(&data)?;
    let n_max = *periods.iter().max().unwrap();
    let births = births_parallel(&fit, n_max, args.res).map_err(failure)?;
    let rows: Vec<String> = periods
        .iter()
        .map(|&p| match births[p - 1] {
            Some(sigma) => format!(
                "{},{},{}",
                p,
                format_float(sigma),
                format_float(fixed_point_multiplier(fit.kappa(sigma)))
            ),
            None => format!("{p},,"),
        })
        .collect();
    let doc = csv_document(&config, "period,sigma_fb_birth,mu_at_birth", &rows);
    io::write_text(args.out.as_deref(), &doc).map_err(failure)
}

/// Chunked parallel version of the core birth sweep: σ grid split into
/// ranges, per-period first hits merged in grid order.
fn births_parallel(
    fit: &QuadraticFit,
    n_max: usize,
    resolution: f64,
) -> Result<Vec<Option<f64>>, QuadraticError> {
    use rayon::prelude::*;
    if n_max == 0 {
        return Err(QuadraticError::InvalidParam("n_max must be >= 1"));
    }
    if !(resolution.is_finite() && resolution > 0.0 && resolution <= 1.0) {
        return Err(QuadraticError::InvalidParam("resolution must be in (0, 1]"));
    }
    let x_c = fit.critical_point();
    let steps = (1.0 / resolution + 0.5) as usize;
    let chunk = steps.div_ceil(256).max(1);
    let partials: Vec<Vec<Option<f64>>> = (1..=steps)
        .collect::<Vec<_>>()
        .par_chunks(chunk)
        .map(|indices| {
            let mut local = vec![None; n_max];
            for &i in indices {
                let sigma = (i as f64 * resolution).min(1.0);
                if let Some(period) =
                    lp3::core::quadratic::attractor_period(&fit.map(sigma), x_c, n_max)
                {
                    if local[period - 1].is_none() {
                        local[period - 1] = Some(sigma);
                        if local.iter().all(Option::is_some) {
                            break;
                        }
                    }
                }
            }
            local
        })
        .collect();
    let mut births = vec![None; n_max];
    for partial in partials {
        for (slot, found) in births.iter_mut().zip(partial) {
            if slot.is_none() {
                *slot = found;
            }
        }
    }
    Ok(births)
}

fn quad_error(args: &QuadErrorArgs) -> CliResult {
    let map = read_map(&args.map)?;
    let config = json!({
        "command": "quad error",
        "map": args.map.display().to_string(),
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let fit = quad_fit_from(map.data())?;
    let e = quadratic_error(&map, &fit).map_err(failure)?;
    println!("{}", format_float(e));
    Ok(())
}

// ---------------------------------------------------------------------------
// Scans and presets
// ---------------------------------------------------------------------------

fn write_doc(path: &Path, doc: &str) -> CliResult {
    io::write_text(Some(path), doc).map_err(failure)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn axis_json(axis: &Axis) -> Value {
    json!({"name": axis.name, "min": axis.min, "max": axis.max, "steps": axis.steps})
}

fn grid_json(grid: &ScanGrid) -> Value {
    json!({
        "axis1": axis_json(&grid.axis1),
        "axis2": grid.axis2.as_ref().map(axis_json),
        "x0_set": grid.x0_set,
        "dynamics": dynamics_json(&grid.dynamics),
        "excluded": grid.excluded,
    })
}

fn scan_error(e: scan::ScanError) -> CliError {
    match e {
        scan::ScanError::InvalidParam(msg) => usage(msg),
        other => failure(other),
    }
}

fn preset_fig2(out: &Path, seed: u64) -> CliResult {
    let spec = KernelSpec::new(KernelFamily::Erf, 1.0, 1.0).expect("static spec");
    let (a, b) = (-1.0, 1.0);
    let grid = ScanGrid {
        axis1: Axis::new("c", -3.0, 3.0, 1201).expect("static axis"),
        axis2: None,
        x0_set: Axis::new("x0", -10.0, 10.0, 21).expect("static axis").values(),
        dynamics: DynamicsConfig {
            sample_len: 100,
            ..DynamicsConfig::default()
        },
        excluded: Vec::new(),
    };
    let config = json!({
        "preset": "fig2",
        "mode": Mode::ScanC.as_str(),
        "seed": seed,
        "kernel": kernel_json(&spec),
        "a": a,
        "b": b,
        "grid": grid_json(&grid),
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let rows = scan_c(&spec, a, b, &grid).map_err(scan_error)?;
    let doc = csv_document(&config, &scan_csv_header(&["c"]), &scan_rows_csv(&rows));
    write_doc(&out.join("fig2.csv"), &doc)
}

fn preset_fig3(out: &Path, seed: u64) -> CliResult {
    let spec = KernelSpec::new(KernelFamily::Erf, 1.0, 1.0).expect("static spec");
    let data = PeriodicDataset::period_orbit(&[-1.0, 1.0, -0.8]).expect("static data");
    let map = fit_limit(&data, &spec).map_err(failure)?;
    let grid = ScanGrid {
        axis1: Axis::new("sigma_fb", 0.0, 1.0, 1001).expect("static axis"),
        axis2: None,
        x0_set: Axis::new("x0", -10.0, 10.0, 21).expect("static axis").values(),
        dynamics: DynamicsConfig {
            sample_len: 100,
            ..DynamicsConfig::default()
        },
        excluded: Vec::new(),
    };
    let config = json!({
        "preset": "fig3",
        "mode": Mode::Externalization.as_str(),
        "seed": seed,
        "kernel": kernel_json(&spec),
        "data": data.xs(),
        "grid": grid_json(&grid),
        "branches": {"pmax": 8, "interval": [-10.0, 10.0], "starts": 1000,
                     "step": 1e-2, "sigma_min": 1e-3},
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let rows = scan_externalization(&map, &grid).map_err(scan_error)?;
    let attractors = csv_document(
        &config,
        &scan_csv_header(&["sigma_fb"]),
        &scan_rows_csv(&rows),
    );
    write_doc(&out.join("fig3_attractors.csv"), &attractors)?;

    let (branch_rows, notes) = externalize_branches(&map, 8, (-10.0, 10.0), 1000, 1e-2, 1e-3);
    let mut branches = csv_document(&config, "p,sigma_fb,x_p,lambda_p,terminus", &branch_rows);
    for note in notes {
        branches.push_str(&note);
        branches.push('\n');
    }
    write_doc(&out.join("fig3_branches.csv"), &branches)
}

fn preset_fig6(out: &Path, seed: u64) -> CliResult {
    let families = [
        ("erf", KernelFamily::Erf),
        ("sin", KernelFamily::Sin),
        ("cos", KernelFamily::Cos),
        ("relu", KernelFamily::Relu),
    ];
    let (a, b) = (-1.0, 1.0);
    let grid = ScanGrid {
        axis1: Axis::new("c", -3.0, 3.0, 400).expect("static axis"),
        axis2: Some(Axis::new("sigma", 0.1, 10.0, 400).expect("static axis")),
        x0_set: vec![0.0],
        dynamics: DynamicsConfig {
            sample_len: 0,
            ..DynamicsConfig::default()
        },
        excluded: Vec::new(),
    };
    for (name, family) in families {
        let config = json!({
            "preset": "fig6",
            "mode": Mode::Scan2d.as_str(),
            "seed": seed,
            "family": name,
            "a": a,
            "b": b,
            "x0": 0.0,
            "grid": grid_json(&grid),
            "schema": CONFIG_SCHEMA_VERSION,
        });
        echo_config(&config);
        let rows = scan_2d(&family, a, b, &grid, 0.0).map_err(scan_error)?;
        let doc = csv_document(
            &config,
            &scan_csv_header(&["c", "sigma"]),
            &scan_rows_csv(&rows),
        );
        write_doc(&out.join(format!("fig6_{name}.csv")), &doc)?;
    }
    Ok(())
}

fn preset_fig11(out: &Path, seed: u64) -> CliResult {
    let families = [
        ("erf", KernelFamily::Erf),
        ("sin", KernelFamily::Sin),
        ("cos", KernelFamily::Cos),
        ("relu", KernelFamily::Relu),
    ];
    let n_datasets = 100;
    let p_max = 10;
    let data_interval = (-10.0, 10.0);
    let config = json!({
        "preset": "fig11",
        "mode": Mode::PeriodHistogram.as_str(),
        "seed": seed,
        "families": ["erf", "sin", "cos", "relu"],
        "sigma": 1.0,
        "n_period": [1, 2, 3, 4, 5],
        "n_datasets": n_datasets,
        "data_interval": [data_interval.0, data_interval.1],
        "p_max": p_max,
        "census": {"interval": [scan::CENSUS_INTERVAL.0, scan::CENSUS_INTERVAL.1],
                   "starts": scan::CENSUS_STARTS},
        "source": "fitted",
        "schema": CONFIG_SCHEMA_VERSION,
    });
    echo_config(&config);
    let mut rows = Vec::new();
    for (name, family) in families {
        let spec = KernelSpec::new(family, 1.0, 1.0).expect("static spec");
        for n in 1..=5 {
            let hist = scan_period_histogram(
                &spec,
                n,
                n_datasets,
                data_interval,
                p_max,
                &HistogramSource::FittedMap,
                seed,
            )
            .map_err(scan_error)?;
            for r in &hist.rows {
                rows.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    name, n, r.period, r.stable, r.unstable, r.marginal, hist.counted, hist.skipped,
                ));
            }
        }
    }
    let doc = csv_document(
        &config,
        "family,n,p,stable,unstable,marginal,counted,skipped",
        &rows,
    );
    write_doc(&out.join("fig11.csv"), &doc)
}

fn scan_run(config_path: &Path) -> CliResult {
    let text = std::fs::read_to_string(config_path).map_err(failure)?;
    let cfg = RunConfig::from_toml(&text).map_err(usage)?;
    let spec = cfg.kernel.to_spec().map_err(usage)?;
    match cfg.mode {
        Mode::ScanC => {
            let a = cfg.a.ok_or_else(|| usage("mode scan-c requires a"))?;
            let b = cfg.b.ok_or_else(|| usage("mode scan-c requires b"))?;
            let grid = ScanGrid {
                axis1: cfg.axis1("c").map_err(usage)?,
                axis2: None,
                x0_set: cfg.x0_values().map_err(usage)?,
                dynamics: cfg.dynamics.to_config(),
                excluded: cfg.excluded.clone(),
            };
            let config = json!({
                "mode": cfg.mode.as_str(),
                "seed": cfg.seed,
                "kernel": kernel_json(&spec),
                "a": a,
                "b": b,
                "grid": grid_json(&grid),
                "schema": CONFIG_SCHEMA_VERSION,
            });
            echo_config(&config);
            let rows = scan_c(&spec, a, b, &grid).map_err(scan_error)?;
            let name = grid.axis1.name.clone();
            let doc = csv_document(&config, &scan_csv_header(&[&name]), &scan_rows_csv(&rows));
            write_doc(&cfg.output, &doc)
        }
        Mode::Scan2d => {
            let a = cfg.a.ok_or_else(|| usage("mode scan-2d requires a"))?;
            let b = cfg.b.ok_or_else(|| usage("mode scan-2d requires b"))?;
            let x0 = *cfg
                .x0_values()
                .map_err(usage)?
                .first()
                .ok_or_else(|| usage("mode scan-2d requires one x0"))?;
            let grid = ScanGrid {
                axis1: cfg.axis1("c").map_err(usage)?,
                axis2: Some(cfg.axis2("sigma").map_err(usage)?),
                x0_set: vec![x0],
                dynamics: cfg.dynamics.to_config(),
                excluded: cfg.excluded.clone(),
            };
            let config = json!({
                "mode": cfg.mode.as_str(),
                "seed": cfg.seed,
                "family": config::family_string(spec.family()),
                "a": a,
                "b": b,
                "x0": x0,
                "grid": grid_json(&grid),
                "schema": CONFIG_SCHEMA_VERSION,
            });
            echo_config(&config);
            let rows = scan_2d(spec.family(), a, b, &grid, x0).map_err(scan_error)?;
            let (n1, n2) = (grid.axis1.name.clone(), grid.axis2.as_ref().unwrap().name.clone());
            let doc = csv_document(&config, &scan_csv_header(&[&n1, &n2]), &scan_rows_csv(&rows));
            write_doc(&cfg.output, &doc)
        }
        Mode::Externalization => {
            let data = PeriodicDataset::period_orbit(&cfg.data_points().map_err(usage)?)
                .map_err(|e| usage(format!("data: {e}")))?;
            let map = fit_limit(&data, &spec).map_err(failure)?;
            let grid = ScanGrid {
                axis1: cfg.axis1("sigma_fb").map_err(usage)?,
                axis2: None,
                x0_set: cfg.x0_values().map_err(usage)?,
                dynamics: cfg.dynamics.to_config(),
                excluded: cfg.excluded.clone(),
            };
            let config = json!({
                "mode": cfg.mode.as_str(),
                "seed": cfg.seed,
                "kernel": kernel_json(&spec),
                "data": data.xs(),
                "grid": grid_json(&grid),
                "schema": CONFIG_SCHEMA_VERSION,
            });
            echo_config(&config);
            let rows = scan_externalization(&map, &grid).map_err(scan_error)?;
            let name = grid.axis1.name.clone();
            let doc = csv_document(&config, &scan_csv_header(&[&name]), &scan_rows_csv(&rows));
            write_doc(&cfg.output, &doc)
        }
        Mode::FiniteVsLimit => {
            let data = PeriodicDataset::period_orbit(&cfg.data_points().map_err(usage)?)
                .map_err(|e| usage(format!("data: {e}")))?;
            let n_values = cfg
                .n_values
                .clone()
                .ok_or_else(|| usage("mode finite-vs-limit requires n-values"))?;
            let n_seeds = cfg
                .n_seeds
                .ok_or_else(|| usage("mode finite-vs-limit requires n-seeds"))?;
            let grid_axis = cfg
                .grid
                .clone()
                .ok_or_else(|| usage("mode finite-vs-limit requires grid"))?
                .to_axis("x")
                .map_err(usage)?;
            let grid = grid_axis.values();
            let config = json!({
                "mode": cfg.mode.as_str(),
                "seed": cfg.seed,
                "kernel": kernel_json(&spec),
                "data": data.xs(),
                "n_values": n_values,
                "n_seeds": n_seeds,
                "grid": axis_json(&grid_axis),
                "schema": CONFIG_SCHEMA_VERSION,
            });
            echo_config(&config);
            let out = scan_finite_vs_limit(&spec, &data, &n_values, n_seeds, &grid, cfg.seed)
                .map_err(scan_error)?;
            let trial_rows: Vec<String> = out
                .trials
                .iter()
                .map(|t| {
                    format!(
                        "{},{},{},{},{}",
                        t.n_nodes,
                        t.trial,
                        t.seed,
                        format_float(t.sup_distance),
                        t.degenerate
                    )
                })
                .collect();
            let doc = csv_document(&config, "n,trial,seed,sup_distance,degenerate", &trial_rows);
            write_doc(&cfg.output, &doc)?;
            let env_rows: Vec<String> = out
                .envelope
                .iter()
                .map(|p| {
                    format!(
                        "{},{},{},{},{}",
                        p.n_nodes,
                        format_float(p.x),
                        format_float(p.f_min),
                        format_float(p.f_max),
                        format_float(p.f_limit)
                    )
                })
                .collect();
            let env_doc = csv_document(&config, "n,x,f_min,f_max,f_limit", &env_rows);
            write_doc(&sibling_path(&cfg.output, "_envelope"), &env_doc)
        }
        Mode::PeriodHistogram => {
            let n_period = cfg
                .n_period
                .ok_or_else(|| usage("mode period-histogram requires n-period"))?;
            let n_datasets = cfg
                .n_datasets
                .ok_or_else(|| usage("mode period-histogram requires n-datasets"))?;
            let [lo, hi] = cfg
                .data_interval
                .ok_or_else(|| usage("mode period-histogram requires data-interval"))?;
            let p_max = cfg
                .p_max
                .ok_or_else(|| usage("mode period-histogram requires p-max"))?;
            let source = match &cfg.source {
                None | Some(config::SourceSection::Fitted) => HistogramSource::FittedMap,
                Some(config::SourceSection::RandomNetwork {
                    nodes,
                    readout_scale,
                }) => HistogramSource::RandomNetwork {
                    n_nodes: *nodes,
                    readout_scale: *readout_scale,
                },
            };
            let source_json = match &source {
                HistogramSource::FittedMap => json!("fitted"),
                HistogramSource::RandomNetwork {
                    n_nodes,
                    readout_scale,
                } => json!({"random-network": {"nodes": n_nodes, "readout_scale": readout_scale}}),
            };
            let config = json!({
                "mode": cfg.mode.as_str(),
                "seed": cfg.seed,
                "kernel": kernel_json(&spec),
                "n_period": n_period,
                "n_datasets": n_datasets,
                "data_interval": [lo, hi],
                "p_max": p_max,
                "census": {"interval": [scan::CENSUS_INTERVAL.0, scan::CENSUS_INTERVAL.1],
                           "starts": scan::CENSUS_STARTS},
                "source": source_json,
                "schema": CONFIG_SCHEMA_VERSION,
            });
            echo_config(&config);
            let hist = scan_period_histogram(
                &spec,
                n_period,
                n_datasets,
                (lo, hi),
                p_max,
                &source,
                cfg.seed,
            )
            .map_err(scan_error)?;
            let rows: Vec<String> = hist
                .rows
                .iter()
                .map(|r| format!("{},{},{},{}", r.period, r.stable, r.unstable, r.marginal))
                .collect();
            let mut doc = String::new();
            doc.push_str(&csv_document(&config, "period,stable,unstable,marginal", &rows));
            doc.push_str(&format!("# counted: {}\n# skipped: {}\n", hist.counted, hist.skipped));
            write_doc(&cfg.output, &doc)
        }
    }
}

/// `out.csv` → `out_envelope.csv`.
fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let ext = path
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}
