//! Experiment configuration: command-line flags layered over an optional
//! `key = value` file, layered over built-in defaults.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dynamics::free_packet_width;

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "WORKBENCH_SEED";

#[derive(Debug)]
pub enum CliError {
    /// Unknown flag or key, or malformed command line. Exit code 2.
    Usage(String),
    /// Well-formed but invalid value. Exit code 2.
    Validation(String),
    /// Reading the config file or writing results failed. Exit code 3.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Cat,
    WellSpectrum,
    Spread,
    Eq3,
    VnGenerator,
    EnsembleDensity,
    Claims,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Cat => "cat",
            Experiment::WellSpectrum => "well-spectrum",
            Experiment::Spread => "spread",
            Experiment::Eq3 => "eq3",
            Experiment::VnGenerator => "vn-generator",
            Experiment::EnsembleDensity => "ensemble-density",
            Experiment::Claims => "claims",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Pass/fail thresholds applied by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Trace form of commutator expectations.
    pub comm: f64,
    /// `‖Aψ − (αψ + βψ⊥)‖`.
    pub av: f64,
    /// `|<ψ|ψ⊥>|`.
    pub ortho: f64,
    /// Dispersion of eigenvectors, relative to `sqrt(1 + ‖A‖²)`.
    pub disp: f64,
    /// Eigen-equation residual, relative to `1 + ‖A‖`.
    pub eig: f64,
    /// Minimal-polynomial residual, relative to `1 + N(x)`.
    pub minpoly: f64,
    /// Generator reconstruction error.
    pub generator: f64,
    /// Gap between the two sides of the Poisson/commutator identity.
    pub eq3: f64,
    /// Relative error of grid well levels.
    pub spectrum: f64,
    /// Minimum error reduction when the grid spacing halves.
    pub refine: f64,
    /// Relative error of the packet width against the free spread law.
    pub spread: f64,
    /// Relative error of the width at the predicted doubling time.
    pub doubling: f64,
    /// Drift of a stationary state's width.
    pub stationary: f64,
    /// Width of statistical bands in standard deviations.
    pub sigma: f64,
    /// Minimum single-cell mass of a dispersion-free preparation.
    pub concentration: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            comm: 1e-10,
            av: 1e-9,
            ortho: 1e-10,
            disp: 1e-8,
            eig: 1e-9,
            minpoly: 1e-9,
            generator: 1e-9,
            eq3: 1e-9,
            spectrum: 0.005,
            refine: 3.0,
            spread: 0.01,
            doubling: 0.02,
            stationary: 1e-6,
            sigma: 3.0,
            concentration: 0.99,
        }
    }
}

/// Fully resolved configuration for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: u64,
    pub seed: u64,
    pub grid_n: usize,
    pub length: f64,
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    pub dim: usize,
    pub times: Vec<f64>,
    pub a1: f64,
    pub a2: f64,
    pub out_path: String,
    pub format: OutputFormat,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// Initial width of the free packet used by `spread`.
    pub fn packet_sigma(&self) -> f64 {
        self.length / 40.0
    }

    /// Time at which the free packet width doubles: `2√3·mσ0²/ħ`.
    pub fn doubling_time(&self) -> f64 {
        let s = self.packet_sigma();
        2.0 * 3f64.sqrt() * self.mass * s * s / self.hbar
    }

    /// Width predicted by the free spread law at `t`.
    pub fn predicted_width(&self, t: f64) -> f64 {
        free_packet_width(self.packet_sigma(), self.mass, self.hbar, t)
    }
}

/// Values that may come from flags or the config file. `None` means unset.
#[derive(Debug, Clone, Default, Args)]
pub struct RawParams {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Ladder dimension for oscillator models.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated evolution times.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long = "tol-comm")]
    pub tol_comm: Option<f64>,
    #[arg(long = "tol-av")]
    pub tol_av: Option<f64>,
    #[arg(long = "tol-ortho")]
    pub tol_ortho: Option<f64>,
    #[arg(long = "tol-disp")]
    pub tol_disp: Option<f64>,
    #[arg(long = "tol-eig")]
    pub tol_eig: Option<f64>,
    #[arg(long = "tol-minpoly")]
    pub tol_minpoly: Option<f64>,
    #[arg(long = "tol-generator")]
    pub tol_generator: Option<f64>,
    #[arg(long = "tol-eq3")]
    pub tol_eq3: Option<f64>,
    #[arg(long = "tol-spectrum")]
    pub tol_spectrum: Option<f64>,
    #[arg(long = "tol-refine")]
    pub tol_refine: Option<f64>,
    #[arg(long = "tol-spread")]
    pub tol_spread: Option<f64>,
    #[arg(long = "tol-doubling")]
    pub tol_doubling: Option<f64>,
    #[arg(long = "tol-stationary")]
    pub tol_stationary: Option<f64>,
    #[arg(long = "tol-sigma")]
    pub tol_sigma: Option<f64>,
    #[arg(long = "tol-concentration")]
    pub tol_concentration: Option<f64>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl RawParams {
    /// Fields set in `top` win over fields set in `self`.
    fn overlaid_with(mut self, top: &RawParams) -> RawParams {
        overlay!(self, top; n, seed, grid_n, length, mass, omega, hbar, dim, times, a1, a2, out, format,
            tol_comm, tol_av, tol_ortho, tol_disp, tol_eig, tol_minpoly, tol_generator, tol_eq3,
            tol_spectrum, tol_refine, tol_spread, tol_doubling, tol_stationary, tol_sigma, tol_concentration);
        self
    }
}

#[derive(Debug, Parser)]
#[command(name = "workbench", version, about = "Matrix-mechanics experiments with built-in pass/fail checks")]
#[command(allow_negative_numbers = true)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: RawParams,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Validation(format!("cannot parse value {value:?} for {key}")))
}

/// Parses `key = value` lines; `#` starts a comment. Keys use flag names,
/// with `_` accepted for `-`.
pub fn parse_config_file(text: &str) -> Result<RawParams, CliError> {
    let mut raw = RawParams::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "n" => raw.n = Some(parse_value(&key, value)?),
            "seed" => raw.seed = Some(parse_value(&key, value)?),
            "grid-n" => raw.grid_n = Some(parse_value(&key, value)?),
            "length" => raw.length = Some(parse_value(&key, value)?),
            "mass" => raw.mass = Some(parse_value(&key, value)?),
            "omega" => raw.omega = Some(parse_value(&key, value)?),
            "hbar" => raw.hbar = Some(parse_value(&key, value)?),
            "dim" => raw.dim = Some(parse_value(&key, value)?),
            "times" => {
                raw.times = Some(value.split(',').map(|t| parse_value(&key, t.trim())).collect::<Result<_, _>>()?)
            }
            "a1" => raw.a1 = Some(parse_value(&key, value)?),
            "a2" => raw.a2 = Some(parse_value(&key, value)?),
            "out" => raw.out = Some(value.to_string()),
            "format" => {
                raw.format = Some(
                    OutputFormat::from_str(value, true)
                        .map_err(|_| CliError::Validation(format!("unknown format {value:?}")))?,
                )
            }
            "tol-comm" => raw.tol_comm = Some(parse_value(&key, value)?),
            "tol-av" => raw.tol_av = Some(parse_value(&key, value)?),
            "tol-ortho" => raw.tol_ortho = Some(parse_value(&key, value)?),
            "tol-disp" => raw.tol_disp = Some(parse_value(&key, value)?),
            "tol-eig" => raw.tol_eig = Some(parse_value(&key, value)?),
            "tol-minpoly" => raw.tol_minpoly = Some(parse_value(&key, value)?),
            "tol-generator" => raw.tol_generator = Some(parse_value(&key, value)?),
            "tol-eq3" => raw.tol_eq3 = Some(parse_value(&key, value)?),
            "tol-spectrum" => raw.tol_spectrum = Some(parse_value(&key, value)?),
            "tol-refine" => raw.tol_refine = Some(parse_value(&key, value)?),
            "tol-spread" => raw.tol_spread = Some(parse_value(&key, value)?),
            "tol-doubling" => raw.tol_doubling = Some(parse_value(&key, value)?),
            "tol-stationary" => raw.tol_stationary = Some(parse_value(&key, value)?),
            "tol-sigma" => raw.tol_sigma = Some(parse_value(&key, value)?),
            "tol-concentration" => raw.tol_concentration = Some(parse_value(&key, value)?),
            other => return Err(CliError::Usage(format!("unknown config key {other:?}"))),
        }
    }
    Ok(raw)
}

/// Outcome of parsing the command line: a config to run, or text to print.
#[derive(Debug)]
pub enum Parsed {
    Run(ExperimentConfig),
    /// `--help` or `--version` output.
    Info(String),
}

/// Parses `args` (including the program name) with an optional config file
/// body and an optional `WORKBENCH_SEED` value.
pub fn parse_config(args: &[String], file: Option<&str>, env_seed: Option<&str>) -> Result<Parsed, CliError> {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Parsed::Info(e.to_string())),
                ErrorKind::ValueValidation | ErrorKind::InvalidValue => Err(CliError::Validation(e.to_string())),
                _ => Err(CliError::Usage(e.to_string())),
            };
        }
    };
    let from_file = match file {
        Some(text) => parse_config_file(text)?,
        None => RawParams::default(),
    };
    let raw = from_file.overlaid_with(&cli.params);
    let env_seed = env_seed
        .map(|s| s.trim().parse::<u64>().map_err(|_| CliError::Validation(format!("{SEED_ENV}={s:?} is not an integer"))))
        .transpose()?;
    resolve(cli.experiment, raw, env_seed).map(Parsed::Run)
}

/// Reads the config file named by `--config`, if any, then calls [`parse_config`].
pub fn load_config(args: &[String]) -> Result<Parsed, CliError> {
    let path = args
        .iter()
        .enumerate()
        .find_map(|(i, a)| match a.strip_prefix("--config") {
            Some("") => args.get(i + 1).cloned(),
            Some(rest) => rest.strip_prefix('=').map(str::to_string),
            None => None,
        });
    let body = match path {
        Some(p) => Some(std::fs::read_to_string(&p).map_err(|e| CliError::Io(format!("reading {p}: {e}")))?),
        None => None,
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    parse_config(args, body.as_deref(), env_seed.as_deref())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{name} must be positive, got {v}")))
    }
}

fn resolve(experiment: Experiment, raw: RawParams, env_seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let defaults = Tolerances::default();
    let tol = |name: &str, v: Option<f64>, d: f64| positive(name, v.unwrap_or(d));
    let tolerances = Tolerances {
        comm: tol("tol-comm", raw.tol_comm, defaults.comm)?,
        av: tol("tol-av", raw.tol_av, defaults.av)?,
        ortho: tol("tol-ortho", raw.tol_ortho, defaults.ortho)?,
        disp: tol("tol-disp", raw.tol_disp, defaults.disp)?,
        eig: tol("tol-eig", raw.tol_eig, defaults.eig)?,
        minpoly: tol("tol-minpoly", raw.tol_minpoly, defaults.minpoly)?,
        generator: tol("tol-generator", raw.tol_generator, defaults.generator)?,
        eq3: tol("tol-eq3", raw.tol_eq3, defaults.eq3)?,
        spectrum: tol("tol-spectrum", raw.tol_spectrum, defaults.spectrum)?,
        refine: tol("tol-refine", raw.tol_refine, defaults.refine)?,
        spread: tol("tol-spread", raw.tol_spread, defaults.spread)?,
        doubling: tol("tol-doubling", raw.tol_doubling, defaults.doubling)?,
        stationary: tol("tol-stationary", raw.tol_stationary, defaults.stationary)?,
        sigma: tol("tol-sigma", raw.tol_sigma, defaults.sigma)?,
        concentration: tol("tol-concentration", raw.tol_concentration, defaults.concentration)?,
    };
    if tolerances.concentration > 1.0 {
        return Err(CliError::Validation("tol-concentration must not exceed 1".into()));
    }

    let n = raw.n.unwrap_or(match experiment {
        Experiment::EnsembleDensity => 50_000,
        Experiment::VnGenerator => 100,
        _ => 10_000,
    });
    if n == 0 {
        return Err(CliError::Validation("n must be at least 1".into()));
    }
    let grid_n = raw.grid_n.unwrap_or(match experiment {
        Experiment::WellSpectrum => 2000,
        Experiment::Spread => 512,
        _ => 32,
    });
    if grid_n < crate::state::MIN_GRID_POINTS {
        return Err(CliError::Validation(format!("grid-n must be at least {}", crate::state::MIN_GRID_POINTS)));
    }
    let dim = raw.dim.unwrap_or(16);
    if dim < crate::dynamics::MIN_LADDER_DIM {
        return Err(CliError::Validation(format!("dim must be at least {}", crate::dynamics::MIN_LADDER_DIM)));
    }
    let a1 = raw.a1.unwrap_or(1.0);
    let a2 = raw.a2.unwrap_or(-1.0);
    if !(a1.is_finite() && a2.is_finite()) {
        return Err(CliError::Validation("a1 and a2 must be finite".into()));
    }
    if experiment == Experiment::Cat && a1 == a2 {
        return Err(CliError::Validation(format!("cat needs distinct outcomes, got a1 = a2 = {a1}")));
    }
    let format = raw.format.unwrap_or(OutputFormat::Csv);

    let mut cfg = ExperimentConfig {
        experiment,
        n,
        seed: raw.seed.or(env_seed).unwrap_or(DEFAULT_SEED),
        grid_n,
        length: positive("length", raw.length.unwrap_or(1.0))?,
        mass: positive("mass", raw.mass.unwrap_or(1.0))?,
        omega: positive("omega", raw.omega.unwrap_or(1.0))?,
        hbar: positive("hbar", raw.hbar.unwrap_or(1.0))?,
        dim,
        times: Vec::new(),
        a1,
        a2,
        out_path: raw.out.unwrap_or_else(|| format!("{}.{}", experiment.name(), format.extension())),
        format,
        tolerances,
    };
    cfg.times = match raw.times {
        Some(times) => {
            if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(CliError::Validation("times must be finite and non-negative".into()));
            }
            if times.windows(2).any(|w| w[1] < w[0]) {
                return Err(CliError::Validation("times must be ascending".into()));
            }
            times
        }
        // quarter steps up to 1.25 doubling times
        None => (0..=5).map(|k| k as f64 * cfg.doubling_time() / 4.0).collect(),
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        std::iter::once("workbench").chain(list.iter().copied()).map(String::from).collect()
    }

    fn run_cfg(list: &[&str], file: Option<&str>) -> Result<ExperimentConfig, CliError> {
        match parse_config(&args(list), file, None)? {
            Parsed::Run(cfg) => Ok(cfg),
            Parsed::Info(text) => panic!("unexpected info output: {text}"),
        }
    }

    #[test]
    fn flags_with_defaults() {
        let cfg = run_cfg(&["cat", "--n", "10000", "--seed", "7"], None).unwrap();
        assert_eq!(cfg.experiment, Experiment::Cat);
        assert_eq!((cfg.n, cfg.seed), (10000, 7));
        assert_eq!((cfg.hbar, cfg.mass), (1.0, 1.0));
        assert_eq!(cfg.format, OutputFormat::Csv);
        assert_eq!(cfg.out_path, "cat.csv");
        assert_eq!(cfg.tolerances, Tolerances::default());
    }

    #[test]
    fn negative_hbar_is_a_validation_error() {
        let err = run_cfg(&["cat", "--hbar", "-1"], None).unwrap_err();
        assert!(matches!(err, CliError::Validation(_)), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn flags_override_file() {
        let cfg = run_cfg(&["cat", "--n", "200"], Some("n = 100\nseed = 9 # comment\n")).unwrap();
        assert_eq!(cfg.n, 200);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn unknown_flag_and_key_are_usage_errors() {
        assert!(matches!(run_cfg(&["cat", "--bogus", "1"], None), Err(CliError::Usage(_))));
        assert!(matches!(run_cfg(&["cat"], Some("bogus = 1")), Err(CliError::Usage(_))));
        assert!(matches!(run_cfg(&["telepathy"], None), Err(CliError::Validation(_)) | Err(CliError::Usage(_))));
        assert!(matches!(run_cfg(&["cat"], Some("n = many")), Err(CliError::Validation(_))));
    }

    #[test]
    fn seed_fallback_order() {
        let from_env = match parse_config(&args(&["cat"]), None, Some("123")).unwrap() {
            Parsed::Run(cfg) => cfg.seed,
            Parsed::Info(_) => unreachable!(),
        };
        assert_eq!(from_env, 123);
        let flag_wins = match parse_config(&args(&["cat", "--seed", "5"]), None, Some("123")).unwrap() {
            Parsed::Run(cfg) => cfg.seed,
            Parsed::Info(_) => unreachable!(),
        };
        assert_eq!(flag_wins, 5);
        assert_eq!(run_cfg(&["cat"], None).unwrap().seed, DEFAULT_SEED);
    }

    #[test]
    fn times_and_tolerances() {
        let cfg = run_cfg(&["spread", "--times", "0,0.001,0.002", "--tol-spread", "0.05"], None).unwrap();
        assert_eq!(cfg.times, vec![0.0, 0.001, 0.002]);
        assert_eq!(cfg.tolerances.spread, 0.05);
        assert!(run_cfg(&["spread", "--times", "0.2,0.1"], None).is_err());
        assert!(run_cfg(&["spread", "--tol-spread", "0"], None).is_err());
        let cfg = run_cfg(&["spread"], Some("tol_spread = 0.02\ntimes = 0, 0.5")).unwrap();
        assert_eq!(cfg.times, vec![0.0, 0.5]);
        assert_eq!(cfg.tolerances.spread, 0.02);
        assert_eq!(run_cfg(&["spread"], None).unwrap().times.len(), 6);
    }

    #[test]
    fn cat_rejects_equal_outcomes() {
        assert!(matches!(run_cfg(&["cat", "--a1", "2", "--a2", "2"], None), Err(CliError::Validation(_))));
    }

    #[test]
    fn help_is_info() {
        assert!(matches!(parse_config(&args(&["--help"]), None, None), Ok(Parsed::Info(_))));
    }
}
