//! TOML run configuration and its merge with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use epscan_core::dimer::Channel;
use epscan_core::scan::{Axis, Family, ModelSpec, ObservableName, Param, ScanConfig, DEFAULT_MARGINAL_REL};
use epscan_core::spectral::DEFAULT_RANK_TOL;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: TolSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "type")]
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub channel: Option<String>,
    pub gamma0: Option<f64>,
    pub c: Option<f64>,
    pub j: Option<f64>,
    pub delta: Option<f64>,
    pub adjacency_file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub axis1: Option<AxisSection>,
    pub axis2: Option<AxisSection>,
    pub observables: Option<Vec<String>>,
    pub prominence: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSection {
    pub rank_tol: Option<f64>,
    pub cluster_radius: Option<f64>,
    pub marginal_tol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Model flags shared by every model-driven subcommand. Flags override the
/// config file.
#[derive(Args, Debug, Default, Clone)]
pub struct ModelArgs {
    /// TOML run configuration with [model], [scan], [output] and [tolerances] sections.
    #[arg(long, short = 'f')]
    pub config: Option<PathBuf>,
    /// Model family: dimer, cycle or custom.
    #[arg(long = "model")]
    pub kind: Option<String>,
    /// Number of qubits for the cycle family.
    #[arg(long)]
    pub n: Option<usize>,
    /// Jump channel: dephasing or relaxation.
    #[arg(long)]
    pub channel: Option<String>,
    /// Base rate. For the dimer family this is the dimer rate γ (dephasing jumps run at γ/2).
    #[arg(long, allow_negative_numbers = true)]
    pub gamma0: Option<f64>,
    /// Correlation strength c [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Hopping amplitude J [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub j: Option<f64>,
    /// Detuning Δ [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Whitespace-separated adjacency matrix file for the custom family.
    #[arg(long)]
    pub adjacency: Option<PathBuf>,
    /// Relative rank tolerance for kernel dimensions [default: 1e-8].
    #[arg(long)]
    pub rank_tol: Option<f64>,
    /// Absolute eigenvalue cluster radius [default: 1e-6·‖L‖_F].
    #[arg(long)]
    pub cluster_radius: Option<f64>,
    /// Marginal-mode tolerance in units of gamma0 [default: 1e-7].
    #[arg(long)]
    pub marginal_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    pub rank_tol: f64,
    pub cluster_radius: Option<f64>,
    pub marginal_tol: f64,
}

pub struct Resolved {
    pub file: RunConfig,
    pub model: ModelSpec,
    pub tolerances: Tolerances,
}

fn parse_channel(s: &str) -> Result<Channel, CliError> {
    match s {
        "dephasing" => Ok(Channel::Dephasing),
        "relaxation" => Ok(Channel::Relaxation),
        _ => Err(CliError::Config(format!("model.channel: unknown channel '{s}' (dephasing|relaxation)"))),
    }
}

/// Plain-text matrix: whitespace-separated rows, `#` comments, blank lines ignored.
pub fn read_adjacency(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read adjacency file {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), k + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let m = &file.model;
        let kind = self.kind.clone().or_else(|| m.kind.clone()).ok_or_else(|| CliError::Config("model.type is required (dimer|cycle|custom)".into()))?;
        let channel = parse_channel(
            &self.channel.clone().or_else(|| m.channel.clone()).ok_or_else(|| CliError::Config("model.channel is required".into()))?,
        )?;
        let gamma0 = self.gamma0.or(m.gamma0).ok_or_else(|| CliError::Config("model.gamma0 is required".into()))?;
        let gamma0 = positive("model.gamma0", gamma0)?;
        let c = self.c.or(m.c).unwrap_or(0.0);
        let j = self.j.or(m.j).unwrap_or(0.0);
        let delta = self.delta.or(m.delta).unwrap_or(0.0);
        for (name, v) in [("model.c", c), ("model.j", j), ("model.delta", delta)] {
            if !v.is_finite() {
                return Err(CliError::Config(format!("{name} must be finite")));
            }
        }
        let family = match kind.as_str() {
            "dimer" => Family::Dimer,
            "cycle" => {
                let n = self.n.or(m.n).ok_or_else(|| CliError::Config("model.n is required for type = \"cycle\"".into()))?;
                if !(3..=6).contains(&n) {
                    return Err(CliError::Config(format!("model.n must be in 3..=6 for dense cycles, got {n}")));
                }
                Family::Cycle { n }
            }
            "custom" => {
                let path = self
                    .adjacency
                    .clone()
                    .or_else(|| m.adjacency_file.clone())
                    .ok_or_else(|| CliError::Config("model.adjacency_file is required for type = \"custom\"".into()))?;
                Family::Custom { adjacency: read_adjacency(&path)? }
            }
            other => return Err(CliError::Config(format!("model.type: unknown family '{other}' (dimer|cycle|custom)"))),
        };
        let t = &file.tolerances;
        let tolerances = Tolerances {
            rank_tol: positive("tolerances.rank_tol", self.rank_tol.or(t.rank_tol).unwrap_or(DEFAULT_RANK_TOL))?,
            cluster_radius: self.cluster_radius.or(t.cluster_radius).map(|r| positive("tolerances.cluster_radius", r)).transpose()?,
            marginal_tol: positive("tolerances.marginal_tol", self.marginal_tol.or(t.marginal_tol).unwrap_or(DEFAULT_MARGINAL_REL))?,
        };
        let model = ModelSpec { family, channel, gamma0, c, j, delta };
        model.graph().map_err(|e| CliError::Config(format!("model: {e}")))?;
        Ok(Resolved { file, model, tolerances })
    }
}

/// Parses `PARAM:LO:HI:STEPS`.
pub fn parse_axis_flag(s: &str) -> Result<AxisSection, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::Config(format!("axis '{s}' must look like PARAM:LO:HI:STEPS")));
    }
    let num = |t: &str| t.parse::<f64>().map_err(|e| CliError::Config(format!("axis '{s}': {e}")));
    Ok(AxisSection {
        param: parts[0].to_string(),
        lo: num(parts[1])?,
        hi: num(parts[2])?,
        steps: parts[3].parse().map_err(|e| CliError::Config(format!("axis '{s}': {e}")))?,
    })
}

fn to_axis(name: &str, a: &AxisSection) -> Result<Axis, CliError> {
    let param = Param::parse(&a.param)
        .ok_or_else(|| CliError::Config(format!("{name}.param: unknown parameter '{}' (c|gamma0|j|delta)", a.param)))?;
    let axis = Axis::new(param, a.lo, a.hi, a.steps);
    axis.validate().map_err(|e| CliError::Config(format!("{name}: {e}")))?;
    Ok(axis)
}

/// Scan flags shared by `scan`, `seam` and `fit`.
#[derive(Args, Debug, Default, Clone)]
pub struct ScanArgs {
    /// First axis as PARAM:LO:HI:STEPS, e.g. c:0:1:201.
    #[arg(long, allow_hyphen_values = true)]
    pub axis1: Option<String>,
    /// Optional second axis as PARAM:LO:HI:STEPS.
    #[arg(long, allow_hyphen_values = true)]
    pub axis2: Option<String>,
    /// Comma-separated observables [default: ep_strength,spectral_gap,n_marginal,defective_any].
    #[arg(long, value_delimiter = ',')]
    pub observables: Option<Vec<String>>,
    /// Worker threads [default: available cores].
    #[arg(long, env = "EPSCAN_JOBS")]
    pub jobs: Option<usize>,
}

impl ScanArgs {
    pub fn scan_config(&self, r: &Resolved) -> Result<ScanConfig, CliError> {
        let s = &r.file.scan;
        let a1 = match &self.axis1 {
            Some(f) => parse_axis_flag(f)?,
            None => s.axis1.clone().ok_or_else(|| CliError::Config("scan.axis1 is required".into()))?,
        };
        let a2 = match &self.axis2 {
            Some(f) => Some(parse_axis_flag(f)?),
            None => s.axis2.clone(),
        };
        let mut cfg = ScanConfig::new(r.model.clone(), to_axis("scan.axis1", &a1)?, a2.as_ref().map(|a| to_axis("scan.axis2", a)).transpose()?);
        if let Some(names) = self.observables.clone().or_else(|| s.observables.clone()) {
            cfg.observables = names
                .iter()
                .map(|n| ObservableName::parse(n.trim()).ok_or_else(|| CliError::Config(format!("scan.observables: unknown observable '{n}'"))))
                .collect::<Result<_, _>>()?;
        }
        cfg.marginal_rel = r.tolerances.marginal_tol;
        cfg.rank_tol = r.tolerances.rank_tol;
        cfg.cluster_radius = r.tolerances.cluster_radius;
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn jobs(&self) -> usize {
        self.jobs
            .filter(|&j| j > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}
