//! Command-line front end: `qfi`, `scan`, `loss` and `simulate`.
//!
//! Every option can also be given in a plain `key = value` file passed with
//! `--config`; flags win over the file. Keys match the long flag names.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::Error;
use crate::gaussian::{lossy_advantage, lossy_qfi_closed_form, lossy_qfi_pipeline, LossScenario};
use crate::measurement::{run_crb_study, sample_photon_pairs, write_events_csv, CrbConfig, CrbReport};
use crate::qfi_classical::qfi_coherent_narrowband;
use crate::qfi_quantum::{
    classify_regime, figure2_profile, figure3_grid, normalized_heisenberg_qfi, pulse_duration_sq, qfi_quantum,
    signal_photon_number, QfiBreakdown, RegimeReport, RegimeThresholds,
};
use crate::spectral::SpectralParams;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "QLIDAR_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Lines in the `#` manifest heading every CSV.
pub const MANIFEST_LINES: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "qlidar", version, about = "Doppler lidar Fisher-information toolkit")]
pub struct Cli {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Maximum worker threads (also read from QLIDAR_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantum and classical QFI, advantage ratio and regime report.
    Qfi(QfiArgs),
    /// Normalized series profiles and the Heisenberg-scaling grid.
    Scan(ScanArgs),
    /// Lossy QFI sweep over the round-trip transmissivity.
    Loss(LossArgs),
    /// Monte Carlo maximum-likelihood runs against the Cramer-Rao bound.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    /// Squeezing parameter.
    #[arg(long)]
    pub xi: Option<f64>,
    /// Schmidt number.
    #[arg(long = "K")]
    pub k: Option<f64>,
    /// Pump frequency.
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Relative bandwidth sqrt(sigma eps)/omega0.
    #[arg(long)]
    pub bw: Option<f64>,
    /// Explicit sigma (with --epsilon, replaces --K/--bw).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Explicit epsilon (with --sigma).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Doppler parameter.
    #[arg(long)]
    pub mu: Option<f64>,
}

#[derive(Debug, Args)]
pub struct QfiArgs {
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Comma-separated Schmidt numbers for the profile files.
    #[arg(long = "fig2-K")]
    pub fig2_k: Option<String>,
    #[arg(long = "fig2-xi-min")]
    pub fig2_xi_min: Option<f64>,
    #[arg(long = "fig2-xi-max")]
    pub fig2_xi_max: Option<f64>,
    #[arg(long = "fig2-xi-n")]
    pub fig2_xi_n: Option<usize>,
    #[arg(long = "xi-min")]
    pub xi_min: Option<f64>,
    #[arg(long = "xi-max")]
    pub xi_max: Option<f64>,
    #[arg(long = "xi-n")]
    pub xi_n: Option<usize>,
    #[arg(long = "K-min")]
    pub k_min: Option<f64>,
    #[arg(long = "K-max")]
    pub k_max: Option<f64>,
    #[arg(long = "K-n")]
    pub k_n: Option<usize>,
    /// Relative bandwidth for the grid.
    #[arg(long)]
    pub bw: Option<f64>,
    /// Output directory.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Comma-separated transmissivities (default 0, 0.1, ..., 1).
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long)]
    pub ns0: Option<f64>,
    #[arg(long)]
    pub ns1: Option<f64>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub omega0: Option<f64>,
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long)]
    pub bw: Option<f64>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// Detected pairs per replication.
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional CSV of the first replication's events.
    #[arg(long = "events-out")]
    pub events_out: Option<PathBuf>,
}

/// Resolves each option from flag, then config file, then default, and
/// remembers the result for the manifest.
pub struct Settings {
    file: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
    resolved: RefCell<Vec<(String, String)>>,
}

impl Settings {
    pub fn from_file(path: Option<&Path>) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        if let Some(p) = path {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            file = parse_config(&text)?;
        }
        Ok(Self { file, used: RefCell::default(), resolved: RefCell::default() })
    }

    fn raw<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        self.used.borrow_mut().insert(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(s) => {
                s.parse().map(Some).map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{s}`")))
            }
        }
    }

    pub fn get<T: FromStr + Display>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        let v = self.raw(key, flag)?.unwrap_or(default);
        self.resolved.borrow_mut().push((key.to_string(), v.to_string()));
        Ok(v)
    }

    pub fn get_opt<T: FromStr + Display>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        let v = self.raw(key, flag)?;
        if let Some(x) = &v {
            self.resolved.borrow_mut().push((key.to_string(), x.to_string()));
        }
        Ok(v)
    }

    /// Rejects config keys that no option consumed.
    pub fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self.file.keys().filter(|k| !used.contains(*k)).collect();
        if !unknown.is_empty() {
            return Err(CliError::Usage(format!("unknown config keys: {unknown:?}")));
        }
        Ok(())
    }

    /// `k=v` pairs in resolution order.
    pub fn resolved(&self) -> Vec<(String, String)> {
        self.resolved.borrow().clone()
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("{key}: cannot parse `{t}`"))))
        .collect()
}

/// n log-spaced points from lo to hi with exact endpoints.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0 && hi >= lo && n >= 1) {
        return Err(CliError::Usage(format!("bad grid: [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    let mut g: Vec<f64> = (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect();
    g[0] = lo;
    g[n - 1] = hi;
    Ok(g)
}

/// Full round-trip formatting (17 significant digits).
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// The eight `#` lines heading every CSV artifact.
pub fn manifest(command: &str, artifact: &str, resolved: &[(String, String)], columns: &[&str], rows: usize) -> String {
    let cfg: Vec<String> = resolved.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let lines = [
        format!("# qlidar {}", env!("CARGO_PKG_VERSION")),
        format!("# command: {command}"),
        format!("# artifact: {artifact}"),
        format!("# config: {}", cfg.join(" ")),
        format!("# columns: {}", columns.join(",")),
        format!("# rows: {rows}"),
        "# number format: 17 significant digits".to_string(),
        "# end of manifest".to_string(),
    ];
    debug_assert_eq!(lines.len(), MANIFEST_LINES);
    lines.join("\n") + "\n"
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn spectral_params(
    s: &Settings,
    a: &SpectralArgs,
    xi_default: f64,
    k_default: f64,
) -> Result<SpectralParams, CliError> {
    let omega0 = s.get("omega0", a.omega0, 1.0)?;
    let xi = s.get("xi", a.xi, xi_default)?;
    let mu = s.get("mu", a.mu, 1.0)?;
    let sigma = s.get_opt("sigma", a.sigma)?;
    let epsilon = s.get_opt("epsilon", a.epsilon)?;
    match (sigma, epsilon) {
        (Some(sg), Some(ep)) => {
            s.raw::<f64>("K", None)?;
            s.raw::<f64>("bw", None)?;
            Ok(SpectralParams::new(omega0, sg, ep, xi, mu)?)
        }
        (None, None) => {
            let k = s.get("K", a.k, k_default)?;
            let bw = s.get("bw", a.bw, 0.01)?;
            Ok(SpectralParams::from_schmidt_number(omega0, k, bw, xi, mu)?)
        }
        _ => Err(CliError::Usage("--sigma and --epsilon must be given together".into())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QfiReport {
    pub config: BTreeMap<String, String>,
    pub params: SpectralParams,
    pub schmidt_number: f64,
    pub breakdown: QfiBreakdown,
    pub signal_photon_number: f64,
    pub pulse_duration_sq: f64,
    pub j_classical: f64,
    pub advantage_ratio: f64,
    pub ln_advantage_ratio: f64,
    pub normalized_heisenberg_qfi: f64,
    pub regime: RegimeReport,
}

pub fn cmd_qfi(params: &SpectralParams, resolved: &[(String, String)]) -> Result<QfiReport, CliError> {
    let mut breakdown = qfi_quantum(params)?;
    breakdown.ln_per_mode_photons.truncate(64);
    let ns = signal_photon_number(params)?;
    let dt2 = pulse_duration_sq(params)?;
    let j_c = qfi_coherent_narrowband(ns, params.omega0, dt2, params.mu)?;
    let regime = classify_regime(params, &RegimeThresholds::default())?;
    Ok(QfiReport {
        config: resolved.iter().cloned().collect(),
        params: *params,
        schmidt_number: params.schmidt_number(),
        breakdown,
        signal_photon_number: ns,
        pulse_duration_sq: dt2,
        j_classical: j_c,
        advantage_ratio: regime.exact_ratio,
        ln_advantage_ratio: regime.ln_exact_ratio,
        normalized_heisenberg_qfi: normalized_heisenberg_qfi(params)?,
        regime,
    })
}

/// Resolved options of `scan`.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub fig2_k: Vec<f64>,
    pub fig2_xi: Vec<f64>,
    pub xi: Vec<f64>,
    pub k: Vec<f64>,
    pub bw: f64,
    pub out_dir: PathBuf,
}

/// Writes `fig2_K{K}.csv` for each profile K and `fig3_grid.csv`; returns
/// the paths written.
pub fn cmd_scan(cfg: &ScanConfig, resolved: &[(String, String)]) -> Result<Vec<PathBuf>, CliError> {
    if !cfg.out_dir.is_dir() {
        return Err(CliError::Io(format!("{}: not a directory", cfg.out_dir.display())));
    }
    let mut written = Vec::new();
    for &k in &cfg.fig2_k {
        let rows = figure2_profile(k, &cfg.fig2_xi)?;
        let name = format!("fig2_K{k}.csv");
        let cols = ["xi", "norm_freq", "norm_bw"];
        let mut s = manifest("scan", &name, resolved, &cols, rows.len());
        s.push_str(&cols.join(","));
        s.push('\n');
        for r in &rows {
            s.push_str(&format!("{},{},{}\n", fmt_num(r.xi), fmt_num(r.norm_freq), fmt_num(r.norm_bw)));
        }
        let path = cfg.out_dir.join(name);
        write_file(&path, &s)?;
        written.push(path);
    }
    let grid = figure3_grid(&cfg.xi, &cfg.k, cfg.bw)?;
    let cols = ["xi", "K", "normalized_qfi"];
    let mut s = manifest("scan", "fig3_grid.csv", resolved, &cols, cfg.xi.len() * cfg.k.len());
    s.push_str(&cols.join(","));
    s.push('\n');
    for (i, &k) in grid.k.iter().enumerate() {
        for (j, &xi) in grid.xi.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", fmt_num(xi), fmt_num(k), fmt_num(grid.get(i, j))));
        }
    }
    let path = cfg.out_dir.join("fig3_grid.csv");
    write_file(&path, &s)?;
    written.push(path);
    Ok(written)
}

/// One row of the loss sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossRow {
    pub eta: f64,
    pub j_closed: f64,
    pub j_pipeline: f64,
    pub ratio_exact: f64,
    pub ratio_asymptote: f64,
}

pub fn cmd_loss(etas: &[f64], base: &LossScenario) -> Result<Vec<LossRow>, CliError> {
    etas.iter()
        .map(|&eta| {
            let sc = LossScenario::new(eta, base.mu0, base.ns0, base.ns1, base.params)?;
            let adv = lossy_advantage(&sc);
            Ok(LossRow {
                eta,
                j_closed: lossy_qfi_closed_form(&sc),
                j_pipeline: lossy_qfi_pipeline(&sc)?.value,
                ratio_exact: adv.exact_ratio,
                ratio_asymptote: adv.asymptote.unwrap_or(f64::INFINITY),
            })
        })
        .collect()
}

pub fn loss_csv(rows: &[LossRow], resolved: &[(String, String)], artifact: &str) -> String {
    let cols = ["eta", "J_closed", "J_pipeline", "ratio_exact", "ratio_asymptote"];
    let mut s = manifest("loss", artifact, resolved, &cols, rows.len());
    s.push_str(&cols.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_num(r.eta),
            fmt_num(r.j_closed),
            fmt_num(r.j_pipeline),
            fmt_num(r.ratio_exact),
            fmt_num(r.ratio_asymptote)
        ));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub config: BTreeMap<String, String>,
    pub params: SpectralParams,
    #[serde(flatten)]
    pub study: CrbReport,
    pub pass: bool,
}

pub fn cmd_simulate(
    params: &SpectralParams,
    cfg: &CrbConfig,
    resolved: &[(String, String)],
) -> Result<SimulateReport, CliError> {
    let study = run_crb_study(params, cfg)?;
    let pass = study.within_band && !study.sub_crb_significant;
    Ok(SimulateReport { config: resolved.iter().cloned().collect(), params: *params, study, pass })
}

fn thread_cap(settings: &Settings, flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match settings.file.get("threads") {
            Some(s) => Some(s.parse().map_err(|_| CliError::Usage(format!("threads: cannot parse `{s}`")))?),
            None => match std::env::var(THREADS_ENV) {
                Ok(s) if !s.trim().is_empty() => {
                    Some(s.trim().parse().map_err(|_| CliError::Usage(format!("{THREADS_ENV}: cannot parse `{s}`")))?)
                }
                _ => None,
            },
        },
    };
    settings.used.borrow_mut().insert("threads".into());
    if n == Some(0) {
        return Err(CliError::Usage("threads must be >= 1".into()));
    }
    Ok(n)
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Numeric(e.to_string()))
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let s = Settings::from_file(cli.config.as_deref())?;
    let threads = thread_cap(&s, cli.threads)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Numeric(e.to_string()))?
    };
    match cli.command {
        Command::Qfi(a) => {
            let params = spectral_params(&s, &a.spectral, 0.05, 10.0)?;
            let out = s.get_opt("out", a.out.map(|p| p.display().to_string()))?;
            s.finish()?;
            let resolved = s.resolved();
            let report = pool.install(|| cmd_qfi(&params, &resolved))?;
            let json = to_json(&report)?;
            if let Some(p) = out {
                write_file(Path::new(&p), &json)?;
            }
            emit(None, &json, stdout)
        }
        Command::Scan(a) => {
            let fig2_k = s.get("fig2-K", a.fig2_k, "10,20".to_string())?;
            let cfg = ScanConfig {
                fig2_k: parse_list("fig2-K", &fig2_k)?,
                fig2_xi: log_grid(
                    s.get("fig2-xi-min", a.fig2_xi_min, 0.1)?,
                    s.get("fig2-xi-max", a.fig2_xi_max, 1e5)?,
                    s.get("fig2-xi-n", a.fig2_xi_n, 121)?,
                )?,
                xi: log_grid(
                    s.get("xi-min", a.xi_min, 1.0)?,
                    s.get("xi-max", a.xi_max, 100.0)?,
                    s.get("xi-n", a.xi_n, 100)?,
                )?,
                k: log_grid(s.get("K-min", a.k_min, 1.0)?, s.get("K-max", a.k_max, 100.0)?, s.get("K-n", a.k_n, 100)?)?,
                bw: s.get("bw", a.bw, 0.01)?,
                out_dir: PathBuf::from(s.get("out-dir", a.out_dir.map(|p| p.display().to_string()), ".".into())?),
            };
            s.finish()?;
            let resolved = s.resolved();
            let written = pool.install(|| cmd_scan(&cfg, &resolved))?;
            let list: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
            emit(None, &(list.join("\n") + "\n"), stdout)
        }
        Command::Loss(a) => {
            let eta = s.get("eta", a.eta, "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1".to_string())?;
            let etas = parse_list("eta", &eta)?;
            let ns0 = s.get("ns0", a.ns0, 1e4)?;
            let ns1 = s.get("ns1", a.ns1, 1e2)?;
            let mu0 = s.get("mu0", a.mu0, 1.0)?;
            let omega0 = s.get("omega0", a.omega0, 1.0)?;
            let k = s.get("K", a.k, 10.0)?;
            let bw = s.get("bw", a.bw, 0.01)?;
            let out = s.get_opt("out", a.out.map(|p| p.display().to_string()))?;
            s.finish()?;
            let params = SpectralParams::from_schmidt_number(omega0, k, bw, 0.0, mu0)?;
            let base = LossScenario::new(1.0, mu0, ns0, ns1, params)?;
            let rows = pool.install(|| cmd_loss(&etas, &base))?;
            let artifact = out.as_deref().map_or("stdout".to_string(), |p| {
                Path::new(p).file_name().map_or(p.to_string(), |f| f.to_string_lossy().into_owned())
            });
            emit(out.as_deref().map(Path::new), &loss_csv(&rows, &s.resolved(), &artifact), stdout)
        }
        Command::Simulate(a) => {
            let params = spectral_params(&s, &a.spectral, 0.05, 10.0)?;
            let d = CrbConfig::default();
            let cfg = CrbConfig {
                mu_true: params.mu,
                m: s.get("M", a.m, d.m)?,
                replications: s.get("reps", a.reps, d.replications)?,
                seed: s.get("seed", a.seed, d.seed)?,
                ..d
            };
            let out = s.get_opt("out", a.out.map(|p| p.display().to_string()))?;
            let events_out = s.get_opt("events-out", a.events_out.map(|p| p.display().to_string()))?;
            s.finish()?;
            if cfg.m == 0 {
                return Err(CliError::Usage("M must be >= 1".into()));
            }
            let resolved = s.resolved();
            let report = pool.install(|| cmd_simulate(&params, &cfg, &resolved))?;
            if let Some(p) = events_out {
                let ev = sample_photon_pairs(params.mu, &params, cfg.m, cfg.seed)?;
                let path = Path::new(&p);
                let f = fs::File::create(path).map_err(|e| io_err(path, e))?;
                write_events_csv(&ev, std::io::BufWriter::new(f)).map_err(|e| io_err(path, e))?;
            }
            emit(out.as_deref().map(Path::new), &to_json(&report)?, stdout)
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors go to stderr.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
