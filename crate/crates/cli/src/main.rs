use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use chirplike::asymptotics::{attach_standard_errors, c_constant, plugin_noise_level};
use chirplike::estimators::{fit, select_order_bic, BicEntry};
use chirplike::io::{format_f64, parse_params, parse_signal_csv, write_fitted_csv, write_signal_csv};
use chirplike::model::synthesize;
use chirplike::montecarlo::{run_experiment, ExperimentConfig, ExperimentReport};
use chirplike::{Error, FitOptions, FitResult, Method, NoiseSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "chirplike", version, about = "Fit and simulate chirp-like signal models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a signal and write it as CSV.
    Synth(SynthArgs),
    /// Fit a model to a signal file.
    Fit(FitArgs),
    /// Run a replicated simulation experiment from a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum NoiseKind {
    Iid,
    Ma1,
}

#[derive(Args, Debug, Serialize)]
struct NoiseArgs {
    /// Innovation variance.
    #[arg(long, default_value_t = 0.0)]
    sigma2: f64,
    #[arg(long, value_enum, default_value_t = NoiseKind::Iid)]
    noise: NoiseKind,
    /// Lag-1 coefficient for `--noise ma1`.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
}

impl NoiseArgs {
    fn spec(&self) -> NoiseSpec {
        match self.noise {
            NoiseKind::Iid => NoiseSpec::iid(self.sigma2),
            NoiseKind::Ma1 => NoiseSpec::ma1(self.rho, self.sigma2),
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// `A,B,alpha;...;C,D,beta;...` with p sinusoids then q chirps.
    #[arg(long, default_value = "")]
    params: String,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, default_value = "sequential")]
    method: Method,
    /// Choose (p, q) by BIC instead of using --p/--q.
    #[arg(long)]
    select_order: bool,
    #[arg(long, default_value_t = 3)]
    pmax: usize,
    #[arg(long, default_value_t = 3)]
    qmax: usize,
    /// Known innovation variance for standard errors.
    #[arg(long, conflicts_with = "plugin_sigma2")]
    sigma2: Option<f64>,
    /// Noise law paired with --sigma2.
    #[arg(long, value_enum, default_value_t = NoiseKind::Iid)]
    noise: NoiseKind,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Estimate the noise level from the residual for standard errors.
    #[arg(long)]
    plugin_sigma2: bool,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// JSON experiment config.
    #[arg(long, visible_alias = "config")]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Overrides the config's replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        let mut inner = &e;
        while let Error::Stage { source, .. } = inner {
            inner = source;
        }
        match inner {
            Error::Parse { .. } | Error::Config(_) => Failure::Data(msg),
            e if e.is_numerical() => Failure::Numerical(msg),
            _ => Failure::Usage(msg),
        }
    }
}

fn io_failure(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

/// `report.json` -> `report.json.<suffix>`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config: Value,
    seed: Option<u64>,
    version: &'a str,
    started_at: f64,
    finished_at: f64,
    outputs: Vec<String>,
}

fn write_manifest(
    command: &str,
    config: Value,
    seed: Option<u64>,
    started_at: f64,
    outputs: &[&Path],
) -> Result<(), Failure> {
    let manifest = RunManifest {
        command,
        config,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        started_at,
        finished_at: unix_now(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let path = sidecar(outputs[0], "manifest.json");
    write_json(&path, &manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let file = File::create(path).map_err(io_failure(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_failure(path))
}

fn write_with<F>(path: &Path, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(io_failure(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_failure(path))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    let started = unix_now();
    let params = parse_params(&args.params, args.p, args.q).map_err(|e| Failure::Usage(e.to_string()))?;
    let noise = args.noise.spec();
    noise.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let y = synthesize(&params, args.n, Some(&noise), args.seed)?;
    write_with(&args.output, |w| write_signal_csv(w, &y))?;
    let config = json!({ "args": to_value(args), "params": to_value(&params), "noise": to_value(&noise) });
    write_manifest("synth", config, Some(args.seed), started, &[&args.output])
}

#[derive(Serialize)]
struct Estimate<'a> {
    name: &'a str,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    asym_se: Option<f64>,
}

#[derive(Serialize)]
struct FitReport<'a> {
    n: usize,
    p: usize,
    q: usize,
    n_params: usize,
    method: Method,
    sse: f64,
    bic: f64,
    estimates: Vec<Estimate<'a>>,
    /// The `sigma^2 c` used for standard errors, when any.
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_level: Option<f64>,
    fit: &'a FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    bic_table: Option<&'a [BicEntry]>,
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let started = unix_now();
    let file = File::open(&args.input).map_err(|e| Failure::Data(format!("{}: {e}", args.input.display())))?;
    let y = parse_signal_csv(std::io::BufReader::new(file))?;
    if let Some(s2) = args.sigma2 {
        if !(s2.is_finite() && s2 >= 0.0) {
            return Err(Failure::Usage(format!("--sigma2 {s2} must be finite and non-negative")));
        }
    }
    let opts = FitOptions::default();
    let (mut result, table) = if args.select_order {
        if args.method != Method::Sequential {
            return Err(Failure::Usage("--select-order uses the sequential method".into()));
        }
        let sel = select_order_bic(&y, args.pmax, args.qmax, &opts)?;
        (sel.fit, Some(sel.table))
    } else {
        (fit(&y, args.p, args.q, args.method, &opts)?, None)
    };

    let noise_level = match (args.sigma2, args.plugin_sigma2) {
        (Some(s2), _) => {
            let spec = match args.noise {
                NoiseKind::Iid => NoiseSpec::iid(s2),
                NoiseKind::Ma1 => NoiseSpec::ma1(args.rho, s2),
            };
            Some(s2 * c_constant(&spec))
        }
        (None, true) => Some(plugin_noise_level(&y.sub(&result.fitted()))?),
        (None, false) => None,
    };
    if let Some(level) = noise_level {
        attach_standard_errors(&mut result, level, 1.0)?;
    }

    let names = result.params.param_names();
    let values = result.params.to_vec();
    let estimates = names
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(i, (name, &value))| Estimate {
            name,
            value,
            asym_se: result.asym_se.as_ref().map(|se| se[i]),
        })
        .collect();
    let report = FitReport {
        n: y.n(),
        p: result.params.p(),
        q: result.params.q(),
        n_params: 3 * (result.params.p() + result.params.q()),
        method: result.method,
        sse: result.sse,
        bic: result.bic,
        estimates,
        noise_level,
        fit: &result,
        bic_table: table.as_deref(),
    };
    write_json(&args.output, &report)?;
    let fitted_path = sidecar(&args.output, "fitted.csv");
    write_with(&fitted_path, |w| write_fitted_csv(w, &y, &result.fitted()))?;
    write_manifest(
        "fit",
        json!({ "args": to_value(args) }),
        None,
        started,
        &[&args.output, &fitted_path],
    )
}

fn stats_table<W: Write>(w: &mut W, report: &ExperimentReport) -> std::io::Result<()> {
    let names: Vec<&str> = report.stats.iter().map(|s| s.name.as_str()).collect();
    writeln!(w, "row,{}", names.join(","))?;
    type Getter = fn(&chirplike::montecarlo::ParamStats) -> Option<f64>;
    let rows: [(&str, Getter); 5] = [
        ("Average", |s| Some(s.average)),
        ("Bias", |s| Some(s.bias)),
        ("Variance", |s| Some(s.variance)),
        ("MSE", |s| Some(s.mse)),
        ("Asym Var", |s| s.asym_var),
    ];
    for (label, get) in rows {
        let cells: Vec<String> = report
            .stats
            .iter()
            .map(|s| get(s).map_or(String::new(), format_f64))
            .collect();
        writeln!(w, "{label},{}", cells.join(","))?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let started = unix_now();
    let text =
        std::fs::read_to_string(&args.input).map_err(|e| Failure::Data(format!("{}: {e}", args.input.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    config.validate()?;
    let report = run_experiment(&config, &FitOptions::default())?;
    write_json(&args.output, &report)?;
    let table_path = sidecar(&args.output, "table.csv");
    write_with(&table_path, |w| stats_table(w, &report))?;
    let resolved = json!({ "args": to_value(args), "experiment": to_value(&config) });
    write_manifest(
        "simulate",
        resolved,
        Some(config.base_seed),
        started,
        &[&args.output, &table_path],
    )
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CHIRPLIKE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("CHIRPLIKE_THREADS={raw} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
