//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 1 when the
//! computation itself fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::blocks::{BlockCache, BlockIndex, Interaction};
use crate::experiments::{
    find_optimal_tau_with, first_dip, full_pipeline, scaling_study_with, stage1_sweep, stage1_time_for_energy,
    stage2_sweep_with, summarize_output, Settings, SweepRecord,
};
use crate::io::{
    create, write_json, write_pipeline_csv, write_scaling_csv, write_sweep_csv, PipelineRow, RecordRow, RunDocument,
    ScalingRow,
};
use crate::metrics::MIN_PHASE_GRID;
use crate::states::twin_beam_modulus_for_energy;

const EXIT_RUNTIME: i32 = 1;
const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "triwave", version, about = "Exact three-wave mixing simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Down-conversion of a coherent pump.
    Stage1 {
        #[command(flatten)]
        pump: PumpArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Up-conversion of a twin-beam.
    Stage2 {
        #[command(flatten)]
        twin: TwinArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Both stages chained, with the stage-1 pump traced out.
    Pipeline {
        #[command(flatten)]
        pump: PumpArgs,
        /// Target twin-beam energy; fixes --tau1 and --tau2 when they are omitted.
        #[arg(long)]
        n_in: Option<f64>,
        #[arg(long)]
        tau1: Option<f64>,
        #[arg(long)]
        tau2: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Optimal interaction time versus input energy, with power-law fits.
    Scaling {
        /// `start:stop:step` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "2:54:2")]
        n_in_list: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print the tridiagonal Hamiltonian of one invariant block.
    BlockInfo {
        #[arg(long)]
        s: usize,
        #[arg(long)]
        k: usize,
        /// Use the ideal-recombination model instead of the trilinear one.
        #[arg(long)]
        pnd: bool,
    },
}

#[derive(Debug, Args)]
struct PumpArgs {
    /// Mean pump photon number |α|².
    #[arg(long)]
    n_pump: f64,
    #[arg(long, default_value_t = 0.0)]
    pump_phase: f64,
}

#[derive(Debug, Args)]
struct TwinArgs {
    /// Twin-beam photon number (both modes together).
    #[arg(long, conflicts_with = "chi2", required_unless_present = "chi2")]
    n_in: Option<f64>,
    /// Squared twin-beam parameter |χ|².
    #[arg(long)]
    chi2: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    chi_phase: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.0)]
    tau_min: f64,
    #[arg(long, default_value_t = 3.0)]
    tau_max: f64,
    #[arg(long, default_value_t = 200)]
    tau_steps: usize,
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, default_value_t = crate::states::DEFAULT_EPS)]
    eps: f64,
    #[arg(long, default_value_t = crate::metrics::DEFAULT_PHASE_GRID)]
    phase_grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

/// Everything that determines a run's output, echoed into JSON files.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_pump: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pump_phase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_phase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_in_list: Option<Vec<f64>>,
    eps: f64,
    phase_grid: usize,
    format: Format,
}

impl RunConfig {
    fn new(command: &'static str, common: &CommonArgs, format: Format) -> Self {
        Self {
            command,
            n_pump: None,
            pump_phase: None,
            chi2: None,
            chi_phase: None,
            tau_min: None,
            tau_max: None,
            tau_steps: None,
            tau1: None,
            tau2: None,
            n_in_list: None,
            eps: common.eps,
            phase_grid: common.phase_grid,
            format,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<crate::error::Error> for Failure {
    fn from(e: crate::error::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("writing output: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn config<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Config(msg.into()))
}

pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|()| dispatch(cli.command));
    match result {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("TRIWAVE_THREADS") else { return Ok(()) };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return config(format!("TRIWAVE_THREADS: expected a positive integer, got {raw:?}")),
    };
    // A pool built by an earlier call in the same process stays in place.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn check_common(common: &CommonArgs) -> CliResult<(Settings, Format)> {
    if !(common.eps > 0.0 && common.eps <= 1e-4) {
        return config(format!("--eps: {} is outside (0, 1e-4]", common.eps));
    }
    if common.phase_grid < MIN_PHASE_GRID {
        return config(format!("--phase-grid: must be at least {MIN_PHASE_GRID}"));
    }
    let format = match (common.format, &common.out) {
        (Some(f), _) => f,
        (None, Some(p)) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => Format::Json,
        _ => Format::Csv,
    };
    if let Some(out) = &common.out {
        let dir = out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !dir.is_dir() {
            return config(format!("--out: directory {} does not exist", dir.display()));
        }
    }
    let settings = Settings { eps: common.eps, phase_grid: common.phase_grid, ..Settings::default() };
    Ok((settings, format))
}

fn tau_grid(sweep: &SweepArgs) -> CliResult<Vec<f64>> {
    if sweep.tau_steps < 2 {
        return config("--tau-steps: need at least 2 points");
    }
    if !(sweep.tau_min.is_finite() && sweep.tau_min >= 0.0) {
        return config(format!("--tau-min: {} must be finite and non-negative", sweep.tau_min));
    }
    if !(sweep.tau_max.is_finite() && sweep.tau_max > sweep.tau_min) {
        return config(format!("--tau-max: {} must exceed --tau-min", sweep.tau_max));
    }
    let last = (sweep.tau_steps - 1) as f64;
    Ok((0..sweep.tau_steps)
        .map(|i| sweep.tau_min + (sweep.tau_max - sweep.tau_min) * i as f64 / last)
        .collect())
}

fn pump_alpha(pump: &PumpArgs) -> CliResult<C64> {
    if !(pump.n_pump.is_finite() && pump.n_pump > 0.0) {
        return config(format!("--n-pump: {} must be positive", pump.n_pump));
    }
    if !pump.pump_phase.is_finite() {
        return config("--pump-phase: must be finite");
    }
    Ok(C64::from_polar(pump.n_pump.sqrt(), pump.pump_phase))
}

fn twin_chi(twin: &TwinArgs) -> CliResult<C64> {
    let modulus = match (twin.n_in, twin.chi2) {
        (Some(n), _) if !(n.is_finite() && n > 0.0) => return config(format!("--n-in: {n} must be positive")),
        (Some(n), _) => twin_beam_modulus_for_energy(n),
        (None, Some(c2)) if !(c2.is_finite() && c2 > 0.0 && c2 < 1.0) => {
            return config(format!("--chi2: {c2} must lie in (0, 1), i.e. |chi| < 1"))
        }
        (None, Some(c2)) => c2.sqrt(),
        (None, None) => return config("--n-in or --chi2 is required"),
    };
    if !twin.chi_phase.is_finite() {
        return config("--chi-phase: must be finite");
    }
    Ok(C64::from_polar(modulus, twin.chi_phase))
}

/// `start:stop:step` with inclusive stop, or `a,b,c`.
fn parse_energy_list(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |why: &str| config(format!("--n-in-list: {why} in {spec:?}"));
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let values: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts[..] else { return bad("expected start:stop:step") };
        let (Some(start), Some(stop), Some(step)) = (num(start), num(stop), num(step)) else {
            return bad("unparsable number");
        };
        if step <= 0.0 || stop < start {
            return bad("empty range");
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else {
        match spec.split(',').map(num).collect::<Option<Vec<f64>>>() {
            Some(v) => v,
            None => return bad("unparsable number"),
        }
    };
    if values.iter().any(|v| *v <= 0.0) {
        return bad("energies must be positive");
    }
    if values.len() < 3 {
        return bad("need at least 3 energies for the fits");
    }
    Ok(values)
}

fn dispatch(command: Command) -> CliResult<String> {
    match command {
        Command::Stage1 { pump, sweep, common } => run_stage1(&pump, &sweep, &common),
        Command::Stage2 { twin, sweep, common } => run_stage2(&twin, &sweep, &common),
        Command::Pipeline { pump, n_in, tau1, tau2, common } => run_pipeline(&pump, n_in, tau1, tau2, &common),
        Command::Scaling { n_in_list, common } => run_scaling(&n_in_list, &common),
        Command::BlockInfo { s, k, pnd } => run_block_info(s, k, pnd),
    }
}

fn save_sweep(
    common: &CommonArgs,
    format: Format,
    cfg: &RunConfig,
    records: &[SweepRecord],
    reference: &str,
) -> CliResult<()> {
    let Some(path) = &common.out else { return Ok(()) };
    let out = create(path)?;
    match format {
        Format::Csv => write_sweep_csv(out, records, reference)?,
        Format::Json => {
            let rows: Vec<RecordRow> = records.iter().map(RecordRow::from).collect();
            write_json(out, &RunDocument { config: cfg, records: &rows, fits: &serde_json::Value::Null })?
        }
    }
    Ok(())
}

fn summary_line(label: &str, r: &SweepRecord) -> String {
    format!("{label}: tau_opt={:.6} overlap={:.6} eta={:.6}", r.tau, r.overlap, r.eta)
}

fn run_stage1(pump: &PumpArgs, sweep: &SweepArgs, common: &CommonArgs) -> CliResult<String> {
    let (settings, format) = check_common(common)?;
    let alpha = pump_alpha(pump)?;
    let grid = tau_grid(sweep)?;
    let records = stage1_sweep(alpha, &grid, settings.eps)?;
    let mut cfg = RunConfig::new("stage1", common, format);
    cfg.n_pump = Some(pump.n_pump);
    cfg.pump_phase = Some(pump.pump_phase);
    cfg.tau_min = Some(sweep.tau_min);
    cfg.tau_max = Some(sweep.tau_max);
    cfg.tau_steps = Some(sweep.tau_steps);
    save_sweep(common, format, &cfg, &records, "chi")?;
    // The stage-1 optimum is the time of maximal conversion.
    let best = records.iter().fold(&records[0], |b, r| if r.eta > b.eta { r } else { b });
    Ok(summary_line("stage1", best))
}

fn run_stage2(twin: &TwinArgs, sweep: &SweepArgs, common: &CommonArgs) -> CliResult<String> {
    let (settings, format) = check_common(common)?;
    let chi = twin_chi(twin)?;
    let grid = tau_grid(sweep)?;
    let records = stage2_sweep_with(chi, &grid, &settings)?;
    let mut cfg = RunConfig::new("stage2", common, format);
    cfg.chi2 = Some(chi.norm_sqr());
    cfg.chi_phase = Some(twin.chi_phase);
    cfg.tau_min = Some(sweep.tau_min);
    cfg.tau_max = Some(sweep.tau_max);
    cfg.tau_steps = Some(sweep.tau_steps);
    save_sweep(common, format, &cfg, &records, "lambda")?;
    // Skip the trivial near-vacuum match at small τ, as the optimizer does.
    let overlaps: Vec<f64> = records.iter().map(|r| r.overlap).collect();
    let from = if grid[0] == 0.0 { first_dip(&overlaps) } else { 0 };
    let best = records[from..].iter().fold(&records[from], |b, r| if r.overlap > b.overlap { r } else { b });
    Ok(summary_line("stage2", best))
}

fn run_pipeline(
    pump: &PumpArgs,
    n_in: Option<f64>,
    tau1: Option<f64>,
    tau2: Option<f64>,
    common: &CommonArgs,
) -> CliResult<String> {
    let (settings, format) = check_common(common)?;
    let alpha = pump_alpha(pump)?;
    let n_in = match n_in {
        Some(n) if !(n.is_finite() && n > 0.0) => return config(format!("--n-in: {n} must be positive")),
        other => other,
    };
    let tau1 = match (tau1, n_in) {
        (Some(t), _) => t,
        (None, Some(n)) => stage1_time_for_energy(alpha, n),
        (None, None) => return config("--tau1: required unless --n-in is given"),
    };
    let tau2 = match (tau2, n_in) {
        (Some(t), _) => t,
        (None, Some(n)) => {
            find_optimal_tau_with(C64::new(twin_beam_modulus_for_energy(n), 0.0), &settings)?.tau_opt
        }
        (None, None) => return config("--tau2: required unless --n-in is given"),
    };
    for (flag, t) in [("--tau1", tau1), ("--tau2", tau2)] {
        if !(t.is_finite() && t >= 0.0) {
            return config(format!("{flag}: {t} must be finite and non-negative"));
        }
    }
    let rho = full_pipeline(alpha, tau1, tau2, settings.eps)?;
    let summary = summarize_output(&rho, settings.phase_grid);
    let row = PipelineRow::new(tau1, tau2, &summary);
    if let Some(path) = &common.out {
        let mut cfg = RunConfig::new("pipeline", common, format);
        cfg.n_pump = Some(pump.n_pump);
        cfg.pump_phase = Some(pump.pump_phase);
        cfg.tau1 = Some(tau1);
        cfg.tau2 = Some(tau2);
        let out = create(path)?;
        match format {
            Format::Csv => write_pipeline_csv(out, &[row])?,
            Format::Json => write_json(
                out,
                &RunDocument { config: &cfg, records: &[row], fits: &serde_json::Value::Null },
            )?,
        }
    }
    Ok(format!(
        "pipeline: tau1={tau1:.6} tau2={tau2:.6} overlap={:.6} n_c={:.6} purity={:.6}",
        summary.overlap, summary.n_c, summary.purity
    ))
}

#[derive(Serialize)]
struct ScalingFits<'a> {
    tau_vs_n_in: &'a crate::optimize::PowerLawFit,
    tau_vs_n_out: &'a crate::optimize::PowerLawFit,
    delta_phi_vs_n_out: &'a crate::optimize::PowerLawFit,
}

fn run_scaling(spec: &str, common: &CommonArgs) -> CliResult<String> {
    let (settings, format) = check_common(common)?;
    let energies = parse_energy_list(spec)?;
    let study = scaling_study_with(&energies, &settings)?;
    if let Some(path) = &common.out {
        let out = create(path)?;
        match format {
            Format::Csv => write_scaling_csv(out, &study.points)?,
            Format::Json => {
                let mut cfg = RunConfig::new("scaling", common, format);
                cfg.n_in_list = Some(energies.clone());
                let rows: Vec<ScalingRow> = study.points.iter().map(ScalingRow::from).collect();
                let fits = ScalingFits {
                    tau_vs_n_in: &study.tau_vs_n_in,
                    tau_vs_n_out: &study.tau_vs_n_out,
                    delta_phi_vs_n_out: &study.delta_phi_vs_n_out,
                };
                write_json(out, &RunDocument { config: &cfg, records: &rows, fits: &fits })?
            }
        }
    }
    let (f_in, f_out) = (&study.tau_vs_n_in, &study.tau_vs_n_out);
    Ok(format!(
        "scaling: {} points, tau_opt = {:.4} N_in^{:.4}, tau_opt = {:.4} N_out^{:.4}",
        study.points.len(),
        f_in.prefactor,
        f_in.exponent,
        f_out.prefactor,
        f_out.exponent
    ))
}

fn run_block_info(s: usize, k: usize, pnd: bool) -> CliResult<String> {
    let b = match BlockIndex::new(s, k) {
        Ok(b) => b,
        Err(e) => return config(format!("--k: {e}")),
    };
    let interaction = if pnd { Interaction::Recombination } else { Interaction::Trilinear };
    let h = BlockCache::global().get(interaction, b);
    let offdiag: Vec<String> = h.offdiag.iter().map(|x| format!("{x}")).collect();
    let eig: Vec<String> = h.eigenvalues().iter().map(|x| format!("{x}")).collect();
    Ok(format!("block {b}: dimension {} offdiag [{}] eigenvalues [{}]", b.dim(), offdiag.join(", "), eig.join(", ")))
}
