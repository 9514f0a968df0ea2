//! Command-line surface. Exit codes: 0 success, 1 usage error, 2 data error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rgbwkit_core::datagen::Upsample;
use rgbwkit_core::dataset::Split;
use rgbwkit_core::isp::run_isp;
use rgbwkit_core::metrics::{evaluate_pair, metrics_csv, EvalConfig, LpipsSource, LpipsTable};
use rgbwkit_core::mraw;
use rgbwkit_core::noise::{calibrate_noise, FlatPatch, NoiseTable};
use rgbwkit_core::remosaic::{run_remosaic, AlgoKind, RemosaicAlgo, RunOptions, TimingProtocol};
use rgbwkit_core::{DiagonalConvention, Error};

use crate::bench::{extrapolate_runtime, run_benchmark, score_predictions, BenchOptions};
use crate::config::Config;
use crate::generate::{generate_dataset, DatasetSpec};
use crate::ingest::ingest;
use crate::report::{emit_report, ReportFormat};

pub const THREADS_ENV: &str = "RGBWKIT_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(name = "rgbwkit", version, about = "RGBW to Bayer remosaic toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic RGBW/Bayer dataset.
    Datagen(DatagenArgs),
    /// Remosaic one RGBW file into a GBRG Bayer file.
    Remosaic(RemosaicArgs),
    /// Render a Bayer file to an 8-bit PPM through the reference ISP.
    Isp(IspArgs),
    /// Score one predicted Bayer against its ground truth.
    Eval(EvalArgs),
    /// Benchmark algorithms over a dataset and write a report.
    Bench(BenchArgs),
    /// Fit noise parameters from flat-field patches.
    Calibrate(CalibrateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum UpsampleArg {
    Nearest,
    Bilinear,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConventionArg {
    Main,
    Anti,
}

#[derive(Args, Debug)]
pub struct DatagenArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub scenes: usize,
    #[arg(long, default_value_t = 2400)]
    pub width: usize,
    #[arg(long, default_value_t = 3600)]
    pub height: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,24,42")]
    pub gains: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "nearest")]
    pub upsample: UpsampleArg,
    /// Which diagonal of each 2×2 block carries color.
    #[arg(long, value_enum, default_value = "main")]
    pub convention: ConventionArg,
    /// Number of trailing scenes tagged as validation.
    #[arg(long, default_value_t = 0)]
    pub val: usize,
    /// Number of trailing scenes tagged as test.
    #[arg(long, default_value_t = 0)]
    pub test: usize,
    /// Write test-split ground truth here instead of into the dataset.
    #[arg(long)]
    pub hide_test_gt: Option<PathBuf>,
    /// RGBW MRAW1 capture to use as a scene (repeatable).
    #[arg(long = "capture")]
    pub captures: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RemosaicArgs {
    /// nearest, bilinear, wguided, plugin, or a plugin name from the config.
    #[arg(long)]
    pub algo: String,
    /// Plugin command; input and output paths are appended.
    #[arg(long)]
    pub cmd: Option<String>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Algorithm parameter as KEY=VALUE (repeatable).
    #[arg(long = "param")]
    pub params: Vec<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Plugin timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
}

#[derive(Args, Debug)]
pub struct IspArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output PPM path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Externally computed LPIPS for this pair.
    #[arg(long)]
    pub lpips: Option<f64>,
    #[arg(long, default_value = "image")]
    pub scene_id: String,
    #[arg(long, default_value_t = 0.0)]
    pub gain: f64,
    /// Also write the metric CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Algorithm to run (repeatable); builtin kind or plugin name from the config.
    #[arg(long = "algo")]
    pub algos: Vec<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// md, csv or both.
    #[arg(long, default_value = "both")]
    pub report: String,
    /// Only benchmark scenes of this split (train, val, test).
    #[arg(long)]
    pub split: Option<String>,
    /// Score pre-computed predictions (`<dir>/<scene>/pred_<gain>db.bayer`) instead of running algorithms.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Label for the predictions in the report.
    #[arg(long, default_value = "predictions")]
    pub name: String,
    /// Location of hidden ground truth.
    #[arg(long)]
    pub gt_root: Option<PathBuf>,
    /// LPIPS CSV as PATH (all algorithms) or ALGO=PATH (repeatable).
    #[arg(long)]
    pub lpips: Vec<String>,
    /// Plugin timeout in seconds per image.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Accepted for interface symmetry; benchmarking itself is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Flat patch as PATH or PATH@MEAN_DN (repeatable); the sample mean is used when omitted.
    #[arg(long = "patch", required = true)]
    pub patches: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    pub gain: f64,
    /// Noise table JSON to create or update with the fitted entry.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> CliResult<Config> {
    Ok(Config::load_or_default(path)?)
}

fn timeout(cfg: &Config, flag: Option<f64>) -> CliResult<Duration> {
    let secs = flag.unwrap_or(cfg.timeout_s);
    if !(secs > 0.0 && secs.is_finite()) {
        return Err(usage(format!("timeout must be positive, got {secs}")));
    }
    Ok(Duration::from_secs_f64(secs))
}

/// Resolves a builtin kind or a plugin configured by name.
fn resolve_algo(name: &str, cfg: &Config, cmd: Option<&str>) -> CliResult<RemosaicAlgo> {
    if let Some(p) = cfg.plugin(name) {
        return Ok(p);
    }
    match name.parse::<AlgoKind>() {
        Ok(AlgoKind::Plugin) => match cmd {
            Some(c) if !c.trim().is_empty() => Ok(RemosaicAlgo::plugin("plugin", c)),
            _ => Err(usage("--algo plugin needs --cmd")),
        },
        Ok(kind) => Ok(RemosaicAlgo::builtin(kind)),
        Err(_) => Err(usage(format!(
            "unknown algorithm {name:?}; expected nearest, bilinear, wguided, plugin or a configured plugin name"
        ))),
    }
}

fn parse_param(s: &str) -> CliResult<(String, f64)> {
    let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("--param {s:?} is not KEY=VALUE")))?;
    let v: f64 = v.parse().map_err(|_| usage(format!("--param {k}: {v:?} is not a number")))?;
    Ok((k.to_string(), v))
}

fn cmd_datagen(a: DatagenArgs) -> CliResult {
    let cfg = load_config(a.config.as_deref())?;
    let spec = DatasetSpec {
        out: a.out,
        scenes: a.scenes,
        width: a.width,
        height: a.height,
        gains: a.gains,
        seed: a.seed,
        noise: cfg.noise,
        upsample: match a.upsample {
            UpsampleArg::Nearest => Upsample::Nearest,
            UpsampleArg::Bilinear => Upsample::Bilinear,
        },
        convention: match a.convention {
            ConventionArg::Main => DiagonalConvention::MainColor,
            ConventionArg::Anti => DiagonalConvention::AntiColor,
        },
        val: a.val,
        test: a.test,
        hide_test_gt: a.hide_test_gt,
        captures: a.captures,
    };
    let m = generate_dataset(&spec)?;
    println!("wrote {} scene(s) × {} gain(s) to {}", m.scenes.len(), m.gains.len(), spec.out.display());
    Ok(())
}

fn cmd_remosaic(a: RemosaicArgs) -> CliResult {
    let cfg = load_config(a.config.as_deref())?;
    let mut algo = resolve_algo(&a.algo, &cfg, a.cmd.as_deref())?;
    if a.cmd.is_some() && !algo.is_plugin() {
        return Err(usage("--cmd only applies to plugins"));
    }
    for p in &a.params {
        let (k, v) = parse_param(p)?;
        algo = algo.with_param(&k, v);
    }
    algo.validate().map_err(|e| usage(e.to_string()))?;
    let opts = RunOptions {
        timeout: timeout(&cfg, a.timeout)?,
        timing: TimingProtocol::SINGLE,
    };
    let out = run_remosaic(&algo, &a.input, &a.out, &opts)?;
    if !out.log.is_empty() {
        eprint!("{}", out.log);
    }
    println!(
        "{}: {}x{} in {:.4} s (64M estimate {:.2} s) -> {}",
        algo.name,
        out.output.width(),
        out.output.height(),
        out.runtime_s,
        extrapolate_runtime(out.runtime_s, out.output.width(), out.output.height()),
        a.out.display()
    );
    Ok(())
}

fn cmd_isp(a: IspArgs) -> CliResult {
    let cfg = load_config(a.config.as_deref())?;
    let bayer = mraw::read(&a.input)?;
    bayer.require_gbrg()?;
    run_isp(&bayer, &cfg.isp)?.write_ppm(&a.out)?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let cfg = load_config(a.config.as_deref())?;
    let pred = mraw::read(&a.pred)?;
    let gt = mraw::read(&a.gt)?;
    let eval = EvalConfig {
        isp: cfg.isp,
        ssim_mode: cfg.ssim_mode,
        ..EvalConfig::default()
    };
    let lpips = match a.lpips {
        Some(v) if v >= 0.0 && v.is_finite() => (v, LpipsSource::External),
        Some(v) => return Err(usage(format!("--lpips {v} must be non-negative"))),
        None => (0.0, LpipsSource::Absent),
    };
    let record = evaluate_pair(&pred, &gt, &a.scene_id, a.gain, &eval, lpips)?;
    let csv = metrics_csv(std::slice::from_ref(&record));
    print!("{csv}");
    if let Some(out) = a.out {
        std::fs::write(&out, csv).map_err(|e| Error::io(&out, e))?;
    }
    Ok(())
}

fn lpips_tables(specs: &[String]) -> CliResult<(BTreeMap<String, LpipsTable>, LpipsTable)> {
    let mut named = BTreeMap::new();
    let mut default = LpipsTable::absent();
    for s in specs {
        let (name, path) = match s.split_once('=') {
            Some((n, p)) => (Some(n.to_string()), PathBuf::from(p)),
            None => (None, PathBuf::from(s)),
        };
        let table = LpipsTable::load(&path)?;
        if !table.is_loaded() {
            log::warn!("LPIPS file {} not found; scores treated as absent", path.display());
        }
        match name {
            Some(n) => {
                named.insert(n, table);
            }
            None => default = table,
        }
    }
    Ok((named, default))
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    let cfg = load_config(a.config.as_deref())?;
    let format: ReportFormat = a.report.parse().map_err(|e: Error| usage(e.to_string()))?;
    let split = a
        .split
        .as_deref()
        .map(str::parse::<Split>)
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    if a.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let (lpips, default_lpips) = lpips_tables(&a.lpips)?;
    let opts = BenchOptions {
        eval: EvalConfig {
            isp: cfg.isp.clone(),
            ssim_mode: cfg.ssim_mode,
            ..EvalConfig::default()
        },
        lpips,
        default_lpips,
        run: RunOptions {
            timeout: timeout(&cfg, a.timeout)?,
            timing: TimingProtocol {
                warmup: a.warmup,
                repeats: a.repeats,
            },
        },
        split,
        gt_root: a.gt_root,
    };
    let dataset = ingest(&a.dataset)?;
    let report = match &a.predictions {
        Some(dir) => {
            if !a.algos.is_empty() {
                return Err(usage("--predictions and --algo are mutually exclusive"));
            }
            score_predictions(&dataset, dir, &a.name, &opts)?
        }
        None => {
            let names = if a.algos.is_empty() {
                vec!["nearest".to_string(), "bilinear".to_string(), "wguided".to_string()]
            } else {
                a.algos.clone()
            };
            let algos = names
                .iter()
                .map(|n| resolve_algo(n, &cfg, None))
                .collect::<CliResult<Vec<_>>>()?;
            run_benchmark(&dataset, &algos, &opts)?
        }
    };
    let files = emit_report(&report, &a.out, format)?;
    for (rank, algo) in report.ranking().iter().enumerate() {
        let o = &algo.aggregates.as_ref().expect("ranked").overall;
        println!("{}. {:<12} M4 {:>6.2}  PSNR {:>7.3}  SSIM {:.4}  KLD {:.4}", rank + 1, algo.name, o.m4, o.psnr, o.ssim, o.kld);
    }
    for n in &report.notices {
        eprintln!("notice: {n}");
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn parse_patch(spec: &str) -> CliResult<FlatPatch> {
    let (path, mean) = match spec.rsplit_once('@') {
        Some((p, m)) => {
            let m: f64 = m.parse().map_err(|_| usage(format!("--patch {spec:?}: {m:?} is not a number")))?;
            (p, Some(m))
        }
        None => (spec, None),
    };
    let patch = mraw::read(path)?;
    let mean_dn = mean.unwrap_or_else(|| patch.data().iter().map(|&v| f64::from(v)).sum::<f64>() / patch.data().len() as f64);
    Ok(FlatPatch { mean_dn, patch })
}

fn cmd_calibrate(a: CalibrateArgs) -> CliResult {
    let patches = a.patches.iter().map(|s| parse_patch(s)).collect::<CliResult<Vec<_>>>()?;
    let cal = calibrate_noise(&patches, a.gain)?;
    println!(
        "{{\"gain_db\": {}, \"sigma_s_sq\": {}, \"sigma_c_sq\": {}, \"r_squared\": {}}}",
        a.gain, cal.params.sigma_s_sq, cal.params.sigma_c_sq, cal.r_squared
    );
    if let Some(out) = a.out {
        let mut table: NoiseTable = match std::fs::read_to_string(&out) {
            Ok(text) => serde_json::from_str(&text).map_err(Error::from)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => NoiseTable::default(),
            Err(e) => return Err(Error::io(&out, e).into()),
        };
        table.insert(cal.params);
        let mut text = serde_json::to_string_pretty(&table).map_err(Error::from)?;
        text.push('\n');
        std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
    }
    Ok(())
}

fn configure_threads() -> CliResult {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
    // A pool may already exist when embedded in a host process; that is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn dispatch(cli: Cli) -> CliResult {
    configure_threads()?;
    match cli.command {
        Command::Datagen(a) => cmd_datagen(a),
        Command::Remosaic(a) => cmd_remosaic(a),
        Command::Isp(a) => cmd_isp(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
