//! Parameter sweeps over model families: per-point EP strength and spectral
//! observables, seam (ridge) extraction and power-law fits near a seam.

use std::io::{self, Write};

use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dimer::{full_dimer_liouvillian, Channel, DimerError, DimerParams};
use crate::lindblad::{assemble_liouvillian, network_model, LindbladError};
use crate::noisegraph::{build_custom, build_cycle, build_dimer, positivity_range, GraphError, NoiseGraph};
use crate::opspace::Superoperator;
use crate::spectral::{self, SpectralError, SpectralOptions};

/// EP strengths above this are written as the cap with the overflow flag set.
pub const EP_STRENGTH_CAP: f64 = 1e15;
/// Default marginal tolerance relative to the point's `γ₀`.
pub const DEFAULT_MARGINAL_REL: f64 = 1e-7;
/// Default seam prominence as a multiple of the median EP strength.
pub const DEFAULT_PROMINENCE_FACTOR: f64 = 10.0;
pub const MIN_FIT_POINTS: usize = 8;

pub const CSV_HEADER: &str = "axis1,axis2,ep_strength,spectral_gap,n_marginal,defective_any,excluded,overflow";

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid scan configuration: {0}")]
    InvalidConfig(String),
    #[error("every grid point violates the positivity constraint")]
    AllPointsExcluded,
    #[error("grid point {index} ({axis1}, {axis2:?}): {source}")]
    Compute {
        index: usize,
        axis1: f64,
        axis2: Option<f64>,
        source: ComputeError,
    },
    #[error("fit window holds {found} usable points, at least {needed} needed")]
    InsufficientPoints { found: usize, needed: usize },
    #[error("failed to build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error)]
pub enum ComputeError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Dimer(#[from] DimerError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    C,
    Gamma0,
    J,
    Delta,
}

impl Param {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "c" => Some(Param::C),
            "gamma0" => Some(Param::Gamma0),
            "j" => Some(Param::J),
            "delta" => Some(Param::Delta),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::C => "c",
            Param::Gamma0 => "gamma0",
            Param::J => "j",
            Param::Delta => "delta",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub param: Param,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(param: Param, lo: f64, hi: f64, steps: usize) -> Self {
        Self { param, lo, hi, steps }
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if self.steps < 2 {
            return Err(ScanError::InvalidConfig(format!("axis {} needs at least 2 steps", self.param.name())));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(ScanError::InvalidConfig(format!(
                "axis {} needs finite lo < hi, got [{}, {}]",
                self.param.name(),
                self.lo,
                self.hi
            )));
        }
        Ok(())
    }

    /// Spacing between neighbouring grid points.
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.steps - 1) as f64
    }

    /// `lo + (hi - lo) k / (steps - 1)`; the last point is exactly `hi`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..=n)
            .map(|k| if k == n { self.hi } else { self.lo + (self.hi - self.lo) * k as f64 / n as f64 })
            .collect()
    }
}

/// Graph family of a scanned model.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    /// Two-site model with the dimer rate conventions: `gamma0` is the
    /// dimer rate `γ`, and dephasing jumps run at `γ/2`.
    Dimer,
    Cycle { n: usize },
    Custom { adjacency: Vec<Vec<f64>> },
}

/// Model template: family, jump channel and base parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSpec {
    pub family: Family,
    pub channel: Channel,
    pub gamma0: f64,
    pub c: f64,
    pub j: f64,
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointParams {
    pub gamma0: f64,
    pub c: f64,
    pub j: f64,
    pub delta: f64,
}

impl PointParams {
    fn set(&mut self, p: Param, v: f64) {
        match p {
            Param::C => self.c = v,
            Param::Gamma0 => self.gamma0 = v,
            Param::J => self.j = v,
            Param::Delta => self.delta = v,
        }
    }
}

impl ModelSpec {
    pub fn dimer(channel: Channel, gamma: f64, c: f64, j: f64, delta: f64) -> Self {
        Self { family: Family::Dimer, channel, gamma0: gamma, c, j, delta }
    }

    pub fn base_params(&self) -> PointParams {
        PointParams { gamma0: self.gamma0, c: self.c, j: self.j, delta: self.delta }
    }

    pub fn graph(&self) -> Result<NoiseGraph, GraphError> {
        match &self.family {
            Family::Dimer => Ok(build_dimer()),
            Family::Cycle { n } => build_cycle(*n),
            Family::Custom { adjacency } => {
                let n = adjacency.len();
                if let Some(row) = adjacency.iter().find(|r| r.len() != n) {
                    return Err(GraphError::NotSquare { rows: n, cols: row.len() });
                }
                build_custom(Mat::from_fn(n, n, |i, j| adjacency[i][j]))
            }
        }
    }

    /// Liouvillian at `p`, or `None` when `p` violates `γ₀ > 0` or positivity.
    pub fn liouvillian(&self, graph: &NoiseGraph, p: &PointParams) -> Result<Option<Superoperator>, ComputeError> {
        if !(p.gamma0 > 0.0 && p.gamma0.is_finite()) {
            return Ok(None);
        }
        let (c_min, c_max) = positivity_range(graph);
        if !(p.c >= c_min - 1e-12 && p.c <= c_max + 1e-12) {
            return Ok(None);
        }
        let l = match self.family {
            Family::Dimer => full_dimer_liouvillian(&DimerParams {
                gamma: p.gamma0,
                c: p.c,
                j: p.j,
                delta: p.delta,
                channel: self.channel,
            })?,
            _ => assemble_liouvillian(&network_model(
                graph.clone(),
                self.channel.jump_kind(),
                p.gamma0,
                p.c,
                p.j,
                p.delta,
            )?)?,
        };
        Ok(Some(l))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableName {
    EpStrength,
    SpectralGap,
    NMarginal,
    DefectiveAny,
}

impl ObservableName {
    pub const ALL: [ObservableName; 4] = [
        ObservableName::EpStrength,
        ObservableName::SpectralGap,
        ObservableName::NMarginal,
        ObservableName::DefectiveAny,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ep_strength" => Some(Self::EpStrength),
            "spectral_gap" => Some(Self::SpectralGap),
            "n_marginal" => Some(Self::NMarginal),
            "defective_any" => Some(Self::DefectiveAny),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanConfig {
    pub model: ModelSpec,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub observables: Vec<ObservableName>,
    /// Marginal tolerance relative to the point's `γ₀`.
    pub marginal_rel: f64,
    pub rank_tol: f64,
    /// Absolute cluster radius; default `1e-6 · ‖L‖_F` per point.
    pub cluster_radius: Option<f64>,
}

impl ScanConfig {
    pub fn new(model: ModelSpec, axis1: Axis, axis2: Option<Axis>) -> Self {
        Self {
            model,
            axis1,
            axis2,
            observables: ObservableName::ALL.to_vec(),
            marginal_rel: DEFAULT_MARGINAL_REL,
            rank_tol: spectral::DEFAULT_RANK_TOL,
            cluster_radius: None,
        }
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        self.axis1.validate()?;
        if let Some(a2) = &self.axis2 {
            a2.validate()?;
            if a2.param == self.axis1.param {
                return Err(ScanError::InvalidConfig("both axes scan the same parameter".into()));
            }
        }
        if self.observables.is_empty() {
            return Err(ScanError::InvalidConfig("no observables selected".into()));
        }
        if !(self.marginal_rel > 0.0 && self.rank_tol > 0.0) {
            return Err(ScanError::InvalidConfig("tolerances must be positive".into()));
        }
        if let Family::Cycle { n } = self.model.family {
            if n > 6 {
                return Err(ScanError::InvalidConfig(format!("cycle with {n} qubits is too large for dense scans")));
            }
        }
        Ok(())
    }

    fn wants(&self, o: ObservableName) -> bool {
        self.observables.contains(&o)
    }
}

/// Values recorded at one grid point. Unrequested observables and excluded
/// points hold NaN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub excluded: bool,
    pub ep_strength: f64,
    pub spectral_gap: f64,
    pub n_marginal: Option<usize>,
    pub defective_any: Option<bool>,
}

impl ScanPoint {
    fn excluded(axis1: f64, axis2: Option<f64>) -> Self {
        Self {
            axis1,
            axis2,
            excluded: true,
            ep_strength: f64::NAN,
            spectral_gap: f64::NAN,
            n_marginal: None,
            defective_any: None,
        }
    }

    pub fn overflow(&self) -> bool {
        !self.excluded && self.ep_strength > EP_STRENGTH_CAP
    }

    pub fn value(&self, o: ObservableName) -> f64 {
        match o {
            ObservableName::EpStrength => self.ep_strength,
            ObservableName::SpectralGap => self.spectral_gap,
            ObservableName::NMarginal => self.n_marginal.map_or(f64::NAN, |n| n as f64),
            ObservableName::DefectiveAny => self.defective_any.map_or(f64::NAN, |b| f64::from(u8::from(b))),
        }
    }
}

/// Grid and per-point values; `points[i1 * steps2 + i2]`.
#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub config: ScanConfig,
    pub grid1: Vec<f64>,
    pub grid2: Option<Vec<f64>>,
    pub points: Vec<ScanPoint>,
    pub version: &'static str,
}

impl ScanResult {
    pub fn steps2(&self) -> usize {
        self.grid2.as_ref().map_or(1, Vec::len)
    }

    pub fn point(&self, i1: usize, i2: usize) -> &ScanPoint {
        &self.points[i1 * self.steps2() + i2]
    }

    pub fn excluded_count(&self) -> usize {
        self.points.iter().filter(|p| p.excluded).count()
    }

    /// Values of `o` along axis 1 at fixed axis-2 index.
    pub fn profile(&self, o: ObservableName, i2: usize) -> Vec<f64> {
        (0..self.grid1.len()).map(|i1| self.point(i1, i2).value(o)).collect()
    }

    /// CSV with the fixed header, 17 significant digits and LF endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(CSV_HEADER.as_bytes())?;
        w.write_all(b"\n")?;
        for p in &self.points {
            let overflow = p.overflow();
            let ep = if overflow { EP_STRENGTH_CAP } else { p.ep_strength };
            let line = format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt_f64(p.axis1),
                p.axis2.map(fmt_f64).unwrap_or_default(),
                fmt_f64(ep),
                fmt_f64(p.spectral_gap),
                p.n_marginal.map(|n| n.to_string()).unwrap_or_default(),
                p.defective_any.map(|b| u8::from(b).to_string()).unwrap_or_default(),
                u8::from(p.excluded),
                u8::from(overflow),
            );
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Full-precision float formatting shared by all CSV writers.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn evaluate(
    cfg: &ScanConfig,
    graph: &NoiseGraph,
    axis1: f64,
    axis2: Option<f64>,
) -> Result<ScanPoint, ComputeError> {
    let mut p = cfg.model.base_params();
    p.set(cfg.axis1.param, axis1);
    if let (Some(a), Some(v)) = (&cfg.axis2, axis2) {
        p.set(a.param, v);
    }
    let Some(l) = cfg.model.liouvillian(graph, &p)? else {
        return Ok(ScanPoint::excluded(axis1, axis2));
    };
    let tol = cfg.marginal_rel * p.gamma0;
    let need_report = cfg.wants(ObservableName::EpStrength) || cfg.wants(ObservableName::DefectiveAny);
    let opts = SpectralOptions {
        rank_tol: cfg.rank_tol,
        cluster_radius: cfg.cluster_radius,
        ..SpectralOptions::default()
    };
    let (eigvals, report) = if need_report {
        let r = spectral::decompose_with(&l, &opts)?;
        (r.eigvals().to_vec(), Some(r))
    } else {
        (spectral::eigenvalues(&l)?, None)
    };
    let mut out = ScanPoint {
        axis1,
        axis2,
        excluded: false,
        ep_strength: f64::NAN,
        spectral_gap: f64::NAN,
        n_marginal: None,
        defective_any: None,
    };
    if let Some(r) = &report {
        if cfg.wants(ObservableName::EpStrength) {
            out.ep_strength = r.ep_strength();
        }
        if cfg.wants(ObservableName::DefectiveAny) {
            out.defective_any = Some(r.any_defective());
        }
    }
    if cfg.wants(ObservableName::SpectralGap) {
        out.spectral_gap = eigvals
            .iter()
            .filter(|z| z.norm() > tol)
            .map(|z| -z.re)
            .fold(f64::INFINITY, f64::min);
    }
    if cfg.wants(ObservableName::NMarginal) {
        out.n_marginal = Some(eigvals.iter().filter(|z| z.re.abs() < tol && z.im.abs() > tol).count());
    }
    Ok(out)
}

/// Evaluates every grid point on `jobs` worker threads. Each point writes
/// into its own slot, so the result does not depend on `jobs`.
pub fn run_scan(cfg: &ScanConfig, jobs: usize) -> Result<ScanResult, ScanError> {
    cfg.validate()?;
    let graph = cfg.model.graph()?;
    let grid1 = cfg.axis1.grid();
    let grid2 = cfg.axis2.as_ref().map(Axis::grid);
    let steps2 = grid2.as_ref().map_or(1, Vec::len);
    let coords: Vec<(f64, Option<f64>)> = grid1
        .iter()
        .flat_map(|&a| (0..steps2).map(move |k| (a, k)))
        .map(|(a, k)| (a, grid2.as_ref().map(|g| g[k])))
        .collect();
    let mut slots: Vec<Option<Result<ScanPoint, ComputeError>>> = (0..coords.len()).map(|_| None).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ScanError::Pool(e.to_string()))?;
    pool.install(|| {
        slots.par_iter_mut().zip(coords.par_iter()).for_each(|(slot, &(a1, a2))| {
            *slot = Some(evaluate(cfg, &graph, a1, a2));
        });
    });
    let mut points = Vec::with_capacity(coords.len());
    for (index, slot) in slots.into_iter().enumerate() {
        match slot.expect("every slot is filled") {
            Ok(p) => points.push(p),
            Err(source) => {
                return Err(ScanError::Compute { index, axis1: coords[index].0, axis2: coords[index].1, source });
            }
        }
    }
    if points.iter().all(|p| p.excluded) {
        return Err(ScanError::AllPointsExcluded);
    }
    Ok(ScanResult { config: cfg.clone(), grid1, grid2, points, version: env!("CARGO_PKG_VERSION") })
}

/// A detected ridge point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeamPoint {
    pub i1: usize,
    pub i2: usize,
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub value: f64,
    pub prominence: f64,
}

/// Median of the included values of `o` (infinite values sort last).
pub fn median_value(r: &ScanResult, o: ObservableName) -> Option<f64> {
    let mut v: Vec<f64> = r.points.iter().filter(|p| !p.excluded).map(|p| p.value(o)).filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Some(if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) })
}

/// Interior local maxima of `values` with topographic prominence of at
/// least `threshold`. NaN entries split the profile into independent runs.
/// Returns `(index, prominence)` pairs.
pub fn profile_peaks(values: &[f64], threshold: f64) -> Vec<(usize, f64)> {
    let mut peaks = Vec::new();
    let mut start = 0;
    while start < values.len() {
        if values[start].is_nan() {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < values.len() && !values[end].is_nan() {
            end += 1;
        }
        let run = &values[start..end];
        for i in 1..run.len().saturating_sub(1) {
            let v = run[i];
            // first index of a plateau counts, later ones do not
            if !(v > run[i - 1]) {
                continue;
            }
            let mut k = i + 1;
            while k < run.len() && run[k] == v {
                k += 1;
            }
            if k == run.len() || run[k] > v {
                continue;
            }
            let left = run[..i].iter().rev().take_while(|&&x| x <= v).fold(f64::INFINITY, |m, &x| m.min(x));
            let right = run[k..].iter().take_while(|&&x| x <= v).fold(f64::INFINITY, |m, &x| m.min(x));
            let base = left.max(right);
            let prom = if v.is_infinite() { f64::INFINITY } else { v - base };
            if prom >= threshold {
                peaks.push((start + i, prom));
            }
        }
        start = end;
    }
    peaks
}

/// Ridge points of observable `o`. In 1D these are the profile peaks; in 2D
/// the peaks of every axis-1 profile at fixed axis 2. The prominence
/// threshold defaults to 10x the median of `o`.
pub fn extract_seam(r: &ScanResult, o: ObservableName, prominence: Option<f64>) -> Vec<SeamPoint> {
    let threshold = prominence
        .or_else(|| median_value(r, o).map(|m| DEFAULT_PROMINENCE_FACTOR * m))
        .unwrap_or(0.0);
    let mut out = Vec::new();
    for i2 in 0..r.steps2() {
        let prof = r.profile(o, i2);
        for (i1, prom) in profile_peaks(&prof, threshold) {
            let p = r.point(i1, i2);
            out.push(SeamPoint { i1, i2, axis1: p.axis1, axis2: p.axis2, value: prof[i1], prominence: prom });
        }
    }
    out
}

/// Chains 2D seam points row by row: a point continues the polyline whose
/// last point lies in the previous row within `max_jump` axis-1 steps.
pub fn seam_polylines(points: &[SeamPoint], max_jump: usize) -> Vec<Vec<SeamPoint>> {
    let mut lines: Vec<Vec<SeamPoint>> = Vec::new();
    let mut rows: Vec<usize> = points.iter().map(|p| p.i2).collect();
    rows.sort_unstable();
    rows.dedup();
    for row in rows {
        let mut claimed = vec![false; lines.len()];
        for p in points.iter().filter(|p| p.i2 == row) {
            let best = lines
                .iter()
                .enumerate()
                .filter(|(k, l)| !claimed[*k] && l.last().is_some_and(|q| q.i2 + 1 == row && q.i1.abs_diff(p.i1) <= max_jump))
                .min_by_key(|(_, l)| l.last().map_or(usize::MAX, |q| q.i1.abs_diff(p.i1)))
                .map(|(k, _)| k);
            match best {
                Some(k) => {
                    claimed[k] = true;
                    lines[k].push(*p);
                }
                None => {
                    lines.push(vec![*p]);
                    claimed.push(true);
                }
            }
        }
    }
    lines
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Least-squares slope of `ln E` against `ln |μ - μ_EP|` over the points on
/// both sides of `mu_ep` with distance in `window`. Points within one grid
/// step of `mu_ep`, excluded points and capped values are dropped.
pub fn fit_scaling(r: &ScanResult, mu_ep: f64, window: (f64, f64)) -> Result<ScalingFit, ScanError> {
    if r.grid2.is_some() {
        return Err(ScanError::InvalidConfig("scaling fits need a one-dimensional scan".into()));
    }
    let step = r.config.axis1.step();
    let (lo, hi) = window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in &r.points {
        let dist = (p.axis1 - mu_ep).abs();
        let e = p.ep_strength;
        if p.excluded || p.overflow() || !(e.is_finite() && e > 0.0) {
            continue;
        }
        if dist <= step || dist < lo || dist > hi {
            continue;
        }
        xs.push(dist.ln());
        ys.push(e.ln());
    }
    let fit = linear_fit(&xs, &ys).ok_or(ScanError::InsufficientPoints { found: xs.len(), needed: MIN_FIT_POINTS })?;
    Ok(fit)
}

/// Ordinary least squares `y = a + b x`; `None` below [`MIN_FIT_POINTS`].
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<ScalingFit> {
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let b = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(ScalingFit { exponent: b, r_squared: r2, n_points: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(values: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> ScanResult {
        let axis = Axis::new(Param::C, lo, hi, steps);
        let cfg = ScanConfig::new(ModelSpec::dimer(Channel::Dephasing, 1.0, 0.0, 0.25, 0.0), axis, None);
        let grid1 = axis.grid();
        let points = grid1
            .iter()
            .map(|&c| ScanPoint {
                axis1: c,
                axis2: None,
                excluded: false,
                ep_strength: values(c),
                spectral_gap: 1.0,
                n_marginal: Some(0),
                defective_any: Some(false),
            })
            .collect();
        ScanResult { config: cfg, grid1, grid2: None, points, version: "test" }
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = Axis::new(Param::C, -1.0, 1.0, 401).grid();
        assert_eq!(g.len(), 401);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[400], 1.0);
        assert_eq!(g[200], 0.0);
    }

    #[test]
    fn invalid_axes_rejected() {
        assert!(Axis::new(Param::C, 0.0, 1.0, 1).validate().is_err());
        assert!(Axis::new(Param::C, 1.0, 0.0, 5).validate().is_err());
    }

    #[test]
    fn monotone_profile_has_no_seam() {
        let r = synthetic(|c| 1.0 + c, 0.0, 1.0, 51);
        assert!(extract_seam(&r, ObservableName::EpStrength, None).is_empty());
    }

    #[test]
    fn synthetic_pole_seam() {
        let r = synthetic(|c| 1.0 / (c - 0.5).abs().max(1e-300), 0.0, 1.0, 40);
        let seam = extract_seam(&r, ObservableName::EpStrength, None);
        assert_eq!(seam.len(), 1);
        let nearest = r.grid1.iter().enumerate().min_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs())).unwrap().0;
        assert_eq!(seam[0].i1, nearest);
    }

    #[test]
    fn exact_power_law_fit() {
        let r = synthetic(|c| (c - 0.5).abs().powf(-0.5), 0.0, 1.0, 1001);
        let fit = fit_scaling(&r, 0.5, (1e-3, 0.3)).unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-6);
        assert!(fit.r_squared > 0.999999);
        let err = fit_scaling(&r, 0.5, (0.0105, 0.0125)).unwrap_err();
        assert!(matches!(err, ScanError::InsufficientPoints { found: 4, .. }));
    }

    #[test]
    fn plateau_and_infinite_peaks() {
        let v = [1.0, 2.0, f64::INFINITY, f64::INFINITY, 2.0, 1.0];
        assert_eq!(profile_peaks(&v, 5.0), vec![(2, f64::INFINITY)]);
        let v = [1.0, 3.0, 1.0, f64::NAN, 1.0, 4.0, 2.0];
        let p = profile_peaks(&v, 1.5);
        assert_eq!(p, vec![(1, 2.0), (5, 2.0)]);
    }

    #[test]
    fn csv_layout() {
        let mut r = synthetic(|c| c, 0.0, 1.0, 2);
        r.points[1].ep_strength = 1e20;
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0.0000000000000000e0,,0.0000000000000000e0,1.0000000000000000e0,0,0,0,0");
        assert!(lines[2].ends_with(",0,0,0,1") && lines[2].contains(",1.0000000000000000e15,"));
        assert!(!s.contains('\r'));
    }

    #[test]
    fn polylines_chain_neighbouring_rows() {
        let mk = |i1, i2| SeamPoint { i1, i2, axis1: 0.0, axis2: None, value: 1.0, prominence: 1.0 };
        let pts = [mk(10, 0), mk(30, 0), mk(11, 1), mk(29, 1), mk(13, 2)];
        let lines = seam_polylines(&pts, 2);
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].len(), 3);
        assert_eq!(lines[1].len(), 2);
    }

    #[test]
    fn positivity_excludes_points() {
        let model = ModelSpec {
            family: Family::Cycle { n: 4 },
            channel: Channel::Dephasing,
            gamma0: 1.0,
            c: 0.0,
            j: 0.1,
            delta: 0.0,
        };
        let cfg = ScanConfig::new(model, Axis::new(Param::C, -1.0, 1.0, 5), None);
        let r = run_scan(&cfg, 2).unwrap();
        let ex: Vec<bool> = r.points.iter().map(|p| p.excluded).collect();
        assert_eq!(ex, vec![true, false, false, false, true]);
        let all_out = ScanConfig::new(cfg.model.clone(), Axis::new(Param::C, 0.6, 1.0, 3), None);
        assert!(matches!(run_scan(&all_out, 1), Err(ScanError::AllPointsExcluded)));
    }

    #[test]
    fn dephasing_dimer_peak_and_determinism() {
        let model = ModelSpec::dimer(Channel::Dephasing, 1.0, 0.0, 0.25, 0.0);
        let cfg = ScanConfig::new(model, Axis::new(Param::C, 0.0, 1.0, 201), None);
        let r1 = run_scan(&cfg, 1).unwrap();
        let seam = extract_seam(&r1, ObservableName::EpStrength, None);
        assert_eq!(seam.len(), 1, "{seam:?}");
        assert!((seam[0].axis1 - 0.5).abs() <= 0.005 + 1e-12);
        let r4 = run_scan(&cfg, 4).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        r1.write_csv(&mut a).unwrap();
        r4.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }
}
