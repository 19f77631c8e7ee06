//! `epscan`: spectra, EP scans, seams, scaling fits, defectiveness tests,
//! trajectories and the validation suite from the command line.

mod config;
mod plot;
mod validate;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use epscan_core::c64;
use epscan_core::dynamics::{jordan_chain, jordan_chain_check, propagate, InitialState, Observable};
use epscan_core::opspace::Superoperator;
use epscan_core::scan::{extract_seam, fit_scaling, median_value, run_scan, seam_polylines, ObservableName, ScanConfig, ScanResult};
use epscan_core::spectral::{self, defectiveness_test, SpectralOptions, SpectralReport, DEFAULT_RANK_TOL};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use config::{ModelArgs, Resolved, ScanArgs, Tolerances};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("compute error: {0}")]
    Compute(String),
    #[error("validation failed")]
    Validation,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation => 1,
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Parser)]
#[command(name = "epscan", version, about = "Exceptional-point diagnostics for Liouvillians with graph-correlated noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    #[value(name = "site-1-excited")]
    SiteOneExcited,
    Symmetric,
    Antisymmetric,
    #[value(name = "maximally-mixed")]
    MaximallyMixed,
}

impl From<Preset> for InitialState {
    fn from(p: Preset) -> Self {
        match p {
            Preset::SiteOneExcited => InitialState::SiteOneExcited,
            Preset::Symmetric => InitialState::Symmetric,
            Preset::Antisymmetric => InitialState::Antisymmetric,
            Preset::MaximallyMixed => InitialState::MaximallyMixed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full eigendecomposition report as JSON.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        /// Output path [default: output.path or stdout].
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Parameter scan written as CSV, with a `<csv>.meta.json` config echo.
    Scan {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Also write an SVG plot of the EP strength.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Ridge points of the EP strength over a scan.
    Seam {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        scan: ScanArgs,
        /// Absolute prominence threshold [default: 10x median EP strength].
        #[arg(long)]
        prominence: Option<f64>,
        /// Largest axis-1 jump, in grid steps, when chaining 2D seam polylines.
        #[arg(long, default_value_t = 3)]
        max_jump: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Power-law fit of the EP strength against distance from a seam.
    Fit {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        scan: ScanArgs,
        /// Seam location [default: the single detected seam point].
        #[arg(long, allow_negative_numbers = true)]
        mu_ep: Option<f64>,
        /// Fit window as LO:HI in grid steps from the seam.
        #[arg(long, default_value = "3:300")]
        window_steps: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Rank-nullity defectiveness test at one eigenvalue.
    Defect {
        #[command(flatten)]
        model: ModelArgs,
        /// Eigenvalue as RE,IM; snapped to the nearest cluster when close
        /// [default: most defective cluster, else slowest decaying one].
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Time evolution written as CSV.
    Propagate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "site-1-excited")]
        initial: Preset,
        #[arg(long, default_value_t = 20.0)]
        t_max: f64,
        /// Number of equally spaced samples in [0, t_max].
        #[arg(long, default_value_t = 401)]
        samples: usize,
        /// Comma-separated: trace, nK (site population), pop:I, coh:I:J
        /// [default: trace and all site populations].
        #[arg(long, value_delimiter = ',')]
        observables: Option<Vec<String>>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Analytic-vs-numerical consistency suite. Exit 0 iff every check passes.
    Validate {
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
        /// Print the JSON report instead of a summary.
        #[arg(long)]
        json: bool,
        #[arg(long, env = "EPSCAN_JOBS")]
        jobs: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    version: &'static str,
    model: &'a epscan_core::scan::ModelSpec,
    tolerances: &'a Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<&'a ScanConfig>,
}

fn echo<'a>(r: &'a Resolved, scan: Option<&'a ScanConfig>) -> ConfigEcho<'a> {
    ConfigEcho { version: env!("CARGO_PKG_VERSION"), model: &r.model, tolerances: &r.tolerances, scan }
}

fn output_path(flag: &Option<PathBuf>, r: Option<&Resolved>) -> Option<PathBuf> {
    flag.clone().or_else(|| r.and_then(|r| r.file.output.path.clone()))
}

fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| compute(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout().write_all(bytes).map_err(compute),
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(compute)?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

fn write_meta<T: Serialize>(data_path: &Path, command: &str, config: &T) -> Result<(), CliError> {
    let mut meta = data_path.as_os_str().to_owned();
    meta.push(".meta.json");
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let doc = json!({ "command": command, "created_unix": created, "config": config });
    write_json(Some(Path::new(&meta)), &doc)
}

fn liouvillian(r: &Resolved) -> Result<Superoperator, CliError> {
    let graph = r.model.graph().map_err(|e| CliError::Config(e.to_string()))?;
    r.model
        .liouvillian(&graph, &r.model.base_params())
        .map_err(compute)?
        .ok_or_else(|| CliError::Config(format!("model.c = {} violates positivity or gamma0 <= 0", r.model.c)))
}

fn spectral_options(t: &Tolerances) -> SpectralOptions {
    SpectralOptions { rank_tol: t.rank_tol, cluster_radius: t.cluster_radius, ..SpectralOptions::default() }
}

fn scan_result(model: &ModelArgs, scan: &ScanArgs) -> Result<(Resolved, ScanResult), CliError> {
    let r = model.resolve()?;
    let cfg = scan.scan_config(&r)?;
    let result = run_scan(&cfg, scan.jobs()).map_err(compute)?;
    Ok((r, result))
}

fn cmd_spectrum(model: &ModelArgs, output: &Option<PathBuf>) -> Result<(), CliError> {
    let r = model.resolve()?;
    let l = liouvillian(&r)?;
    let report = spectral::decompose_with(&l, &spectral_options(&r.tolerances)).map_err(compute)?;
    #[derive(Serialize)]
    struct Out<'a> {
        config: ConfigEcho<'a>,
        trace_preservation_residual: f64,
        traceless_block_residual: f64,
        max_eigen_residual: f64,
        report: &'a SpectralReport,
    }
    let out = Out {
        config: echo(&r, None),
        trace_preservation_residual: spectral::trace_preservation_residual(&l),
        traceless_block_residual: spectral::traceless_block_check(&l),
        max_eigen_residual: report.max_residual(&l),
        report: &report,
    };
    write_json(output_path(output, Some(&r)).as_deref(), &out)
}

fn cmd_scan(model: &ModelArgs, scan: &ScanArgs, output: &Option<PathBuf>, plot: &Option<PathBuf>) -> Result<(), CliError> {
    let (r, result) = scan_result(model, scan)?;
    let mut csv = Vec::new();
    result.write_csv(&mut csv).map_err(compute)?;
    let path = output_path(output, Some(&r));
    write_bytes(path.as_deref(), &csv)?;
    if let Some(p) = &path {
        write_meta(p, "scan", &echo(&r, Some(&result.config)))?;
    }
    if let Some(svg_path) = plot.clone().or_else(|| r.file.output.plot.clone()) {
        let seam = extract_seam(&result, ObservableName::EpStrength, r.file.scan.prominence);
        let svg = plot::ep_strength_svg(&result, &seam);
        fs::write(&svg_path, svg).map_err(|e| compute(format!("cannot write {}: {e}", svg_path.display())))?;
    }
    eprintln!(
        "scanned {} points ({} excluded)",
        result.points.len(),
        result.excluded_count()
    );
    Ok(())
}

fn cmd_seam(model: &ModelArgs, scan: &ScanArgs, prominence: Option<f64>, max_jump: usize, output: &Option<PathBuf>) -> Result<(), CliError> {
    let (r, result) = scan_result(model, scan)?;
    let prominence = prominence.or(r.file.scan.prominence);
    let points = extract_seam(&result, ObservableName::EpStrength, prominence);
    let polylines = result.grid2.as_ref().map(|_| seam_polylines(&points, max_jump));
    let doc = json!({
        "config": echo(&r, Some(&result.config)),
        "median_ep_strength": median_value(&result, ObservableName::EpStrength),
        "prominence": prominence,
        "points": points,
        "polylines": polylines,
    });
    write_json(output_path(output, Some(&r)).as_deref(), &doc)
}

fn parse_pair(s: &str, sep: char, what: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Config(format!("{what} '{s}' must look like A{sep}B"));
    let (a, b) = s.split_once(sep).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn cmd_fit(model: &ModelArgs, scan: &ScanArgs, mu_ep: Option<f64>, window_steps: &str, output: &Option<PathBuf>) -> Result<(), CliError> {
    let (ws_lo, ws_hi) = parse_pair(window_steps, ':', "--window-steps")?;
    let (r, result) = scan_result(model, scan)?;
    if result.grid2.is_some() {
        return Err(CliError::Config("fit needs a one-dimensional scan (drop axis2)".into()));
    }
    let mu = match mu_ep {
        Some(m) => m,
        None => {
            let seam = extract_seam(&result, ObservableName::EpStrength, r.file.scan.prominence);
            match seam.as_slice() {
                [one] => one.axis1,
                _ => {
                    return Err(CliError::Config(format!(
                        "found {} seam points; pass --mu-ep to choose one",
                        seam.len()
                    )))
                }
            }
        }
    };
    let step = result.config.axis1.step();
    let window = (ws_lo * step, ws_hi * step);
    let fit = fit_scaling(&result, mu, window).map_err(compute)?;
    let doc = json!({
        "config": echo(&r, Some(&result.config)),
        "mu_ep": mu,
        "window": [window.0, window.1],
        "window_steps": [ws_lo, ws_hi],
        "fit": fit,
    });
    write_json(output_path(output, Some(&r)).as_deref(), &doc)
}

fn pick_lambda(report: &SpectralReport, requested: Option<c64>) -> (c64, bool) {
    if let Some(z) = requested {
        let snap = 1e-3 * report.generator_norm().max(1.0);
        return match report.nearest_cluster(z) {
            Some(cl) if (cl.center - z).norm() <= snap => (cl.center, true),
            _ => (z, false),
        };
    }
    let clusters = report.clusters();
    let chosen = clusters
        .iter()
        .filter(|c| c.defective)
        .max_by_key(|c| c.delta2 - c.delta1)
        .or_else(|| {
            let zero = 1e-9 * report.generator_norm().max(1.0);
            clusters.iter().filter(|c| c.center.norm() > zero).max_by(|a, b| a.center.re.total_cmp(&b.center.re))
        })
        .or(clusters.first());
    (chosen.map_or(c64::new(0.0, 0.0), |c| c.center), true)
}

fn cmd_defect(model: &ModelArgs, lambda: &Option<String>, output: &Option<PathBuf>) -> Result<(), CliError> {
    let r = model.resolve()?;
    let requested = lambda
        .as_deref()
        .map(|s| parse_pair(s, ',', "--lambda").map(|(re, im)| c64::new(re, im)))
        .transpose()?;
    let l = liouvillian(&r)?;
    let report = spectral::decompose_with(&l, &spectral_options(&r.tolerances)).map_err(compute)?;
    let (z, on_spectrum) = pick_lambda(&report, requested);
    if !on_spectrum {
        eprintln!("warning: lambda = {} {:+}i is not close to any eigenvalue", z.re, z.im);
    }
    let d = defectiveness_test(&l, z, r.tolerances.rank_tol).map_err(compute)?;
    let mut chain_residual = None;
    let mut chain_error = None;
    if d.defective {
        let times: Vec<f64> = (0..=50).map(|k| 0.1 * k as f64).collect();
        match jordan_chain(&l, z, r.tolerances.rank_tol).and_then(|(x0, x1)| jordan_chain_check(&l, z, &x0, &x1, &times)) {
            Ok(v) => chain_residual = Some(v),
            Err(e) => chain_error = Some(e.to_string()),
        }
    }
    let doc = json!({
        "config": echo(&r, None),
        "lambda": [z.re, z.im],
        "requested": requested.map(|q| [q.re, q.im]),
        "near_spectrum": on_spectrum,
        "delta1": d.delta1,
        "delta2": d.delta2,
        "defective": d.defective,
        "jordan_chain_residual": chain_residual,
        "jordan_chain_error": chain_error,
    });
    write_json(output_path(output, Some(&r)).as_deref(), &doc)
}

fn parse_observable(s: &str) -> Result<Observable, CliError> {
    let bad = || CliError::Config(format!("unknown observable '{s}' (trace, nK, pop:I, coh:I:J)"));
    let parts: Vec<&str> = s.trim().split(':').collect();
    let idx = |t: &str| t.parse::<usize>().map_err(|_| bad());
    match parts.as_slice() {
        ["trace"] => Ok(Observable::Trace),
        ["pop", i] => Ok(Observable::Population(idx(i)?)),
        ["coh", i, j] => Ok(Observable::Coherence(idx(i)?, idx(j)?)),
        [n] if n.starts_with('n') => match idx(&n[1..])? {
            0 => Err(bad()),
            k => Ok(Observable::SitePopulation(k - 1)),
        },
        _ => Err(bad()),
    }
}

fn cmd_propagate(
    model: &ModelArgs,
    initial: Preset,
    t_max: f64,
    samples: usize,
    observables: &Option<Vec<String>>,
    output: &Option<PathBuf>,
) -> Result<(), CliError> {
    if !(t_max > 0.0 && t_max.is_finite()) || samples < 2 {
        return Err(CliError::Config("need t_max > 0 and at least 2 samples".into()));
    }
    let r = model.resolve()?;
    let l = liouvillian(&r)?;
    let d = l.dim().ok_or_else(|| compute("generator dimension is not a perfect square"))?;
    let n = d.trailing_zeros() as usize;
    let obs = observables
        .as_ref()
        .map(|list| list.iter().map(|s| parse_observable(s)).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    let rho0 = InitialState::from(initial).build(n);
    let times: Vec<f64> = (0..samples).map(|k| t_max * k as f64 / (samples - 1) as f64).collect();
    let mut traj = propagate(&l, &rho0, &times).map_err(compute)?;
    if let Some(obs) = obs {
        traj.observables.clear();
        traj.add_observables(&obs);
    }
    let mut csv = Vec::new();
    traj.write_csv(&mut csv).map_err(compute)?;
    let path = output_path(output, Some(&r));
    write_bytes(path.as_deref(), &csv)?;
    if let Some(p) = &path {
        let cfg = json!({
            "model": echo(&r, None),
            "initial": format!("{initial:?}"),
            "t_max": t_max,
            "samples": samples,
            "observables": traj.observables.iter().map(|(name, _)| name.clone()).collect::<Vec<_>>(),
        });
        write_meta(p, "propagate", &cfg)?;
    }
    Ok(())
}

fn cmd_validate(rank_tol: f64, as_json: bool, jobs: Option<usize>, output: &Option<PathBuf>) -> Result<(), CliError> {
    if !(rank_tol > 0.0) {
        return Err(CliError::Config("rank_tol must be positive".into()));
    }
    let jobs = jobs.filter(|&j| j > 0).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = validate::run(rank_tol, jobs);
    if let Some(p) = output {
        write_json(Some(p), &report)?;
    }
    if as_json {
        write_json(None, &report)?;
    } else {
        for c in &report.checks {
            println!("{} {}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured);
            if let Some(n) = &c.note {
                println!("     note: {n}");
            }
        }
        let a = &report.dephasing_ep_formula;
        println!(
            "dephasing EP formula: winner {} (c = {}), loser {} (c = {}, deviation {:?})",
            a.winner, a.winner_c, a.loser, a.loser_c, a.loser_deviation
        );
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Validation)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Spectrum { model, output } => cmd_spectrum(model, output),
        Command::Scan { model, scan, output, plot } => cmd_scan(model, scan, output, plot),
        Command::Seam { model, scan, prominence, max_jump, output } => cmd_seam(model, scan, *prominence, *max_jump, output),
        Command::Fit { model, scan, mu_ep, window_steps, output } => cmd_fit(model, scan, *mu_ep, window_steps, output),
        Command::Defect { model, lambda, output } => cmd_defect(model, lambda, output),
        Command::Propagate { model, initial, t_max, samples, observables, output } => {
            cmd_propagate(model, *initial, *t_max, *samples, observables, output)
        }
        Command::Validate { rank_tol, json, jobs, output } => cmd_validate(*rank_tol, *json, *jobs, output),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Validation) {
                eprintln!("epscan: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
