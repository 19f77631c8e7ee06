//! Time-domain behaviour of Liouvillians: matrix-exponential propagation,
//! Jordan-chain (polynomial-in-time) checks, and detection of undamped
//! oscillations in the long-time limit.

use std::f64::consts::PI;
use std::io::{self, Write};

use faer::linalg::solvers::Solve;
use faer::{c64, Col, Mat, MatRef};
use serde::Serialize;
use thiserror::Error;

use crate::opspace::{devectorize, qubit, vectorize, OpError, OpVector, QOperator, Superoperator};
use crate::spectral::{self, sigma_min_normalized, SpectralError, SpectralOptions};

/// Default marginality tolerance, relative to `‖L‖_F`.
pub const DEFAULT_MARGINAL_TOL: f64 = 1e-9;
/// Slow-sector EP strength above which eigen-projections are refused.
pub const MAX_SLOW_EP_STRENGTH: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("initial state is not a density matrix: {0}")]
    InvalidDensity(String),
    #[error("times must be finite, non-negative and strictly increasing")]
    InvalidTimes,
    #[error("vectors do not form a Jordan chain (residuals {r0:e}, {r1:e})")]
    NotAChain { r0: f64, r1: f64 },
    #[error("no Jordan chain at this eigenvalue (delta2 = delta1)")]
    NoChain,
    #[error("slow sector is ill-conditioned (EP strength {0:e})")]
    IllConditionedProjection(f64),
}

fn one_norm(a: MatRef<'_, c64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn add_scaled_identity(m: &mut Mat<c64>, s: f64) {
    for i in 0..m.nrows() {
        m[(i, i)] += c64::new(s, 0.0);
    }
}

fn lin_comb(terms: &[(f64, &Mat<c64>)], n: usize) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(n, n);
    for &(s, m) in terms {
        if s == 0.0 {
            continue;
        }
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] += m[(i, j)] * s;
            }
        }
    }
    out
}

const PADE3: [f64; 4] = [120., 60., 12., 1.];
const PADE5: [f64; 6] = [30240., 15120., 3360., 420., 30., 1.];
const PADE7: [f64; 8] = [17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.];
const PADE9: [f64; 10] = [
    17643225600., 8821612800., 2075673600., 302702400., 30270240., 2162160., 110880., 3960., 90., 1.,
];
const PADE13: [f64; 14] = [
    64764752532480000.,
    32382376266240000.,
    7771770303897600.,
    1187353796428800.,
    129060195264000.,
    10559470521600.,
    670442572800.,
    33522128640.,
    1323241920.,
    40840800.,
    960960.,
    16380.,
    182.,
    1.,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of degree 3 to 13 chosen from the 1-norm.
pub fn expm(a: MatRef<'_, c64>) -> Mat<c64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let norm = one_norm(a);
    let id = Mat::<c64>::identity(n, n);
    let a = a.to_owned();
    let a2 = &a * &a;
    for &(m, theta) in &THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let mut powers = vec![id.clone(), a2.clone()];
            while powers.len() <= m / 2 {
                let next = powers.last().unwrap() * &a2;
                powers.push(next);
            }
            let odd: Vec<(f64, &Mat<c64>)> = (0..=m / 2).map(|k| (b[2 * k + 1], &powers[k])).collect();
            let even: Vec<(f64, &Mat<c64>)> = (0..=m / 2).map(|k| (b[2 * k], &powers[k])).collect();
            let u = &a * &lin_comb(&odd, n);
            let v = lin_comb(&even, n);
            return pade_solve(&u, &v);
        }
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a1 = lin_comb(&[(scale, &a)], n);
    let a2 = lin_comb(&[(scale * scale, &a2)], n);
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let inner_u = &a6 * &lin_comb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let mut u_poly = &inner_u + &lin_comb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2)], n);
    add_scaled_identity(&mut u_poly, b[1]);
    let u = &a1 * &u_poly;
    let inner_v = &a6 * &lin_comb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let mut v = &inner_v + &lin_comb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2)], n);
    add_scaled_identity(&mut v, b[0]);
    let mut r = pade_solve(&u, &v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn pade_solve(u: &Mat<c64>, v: &Mat<c64>) -> Mat<c64> {
    let p = v + u;
    let q = v - u;
    q.partial_piv_lu().solve(&p)
}

/// `exp(t · L)` as a superoperator.
pub fn propagator(l: &Superoperator, t: f64) -> Superoperator {
    let m = l.matrix();
    let scaled = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * t);
    Superoperator::from_matrix_unchecked(expm(scaled.as_ref()))
}

/// Sampled evolution of a density matrix together with named observables.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<OpVector>,
    pub observables: Vec<(String, Vec<f64>)>,
}

/// Observable selection for trajectory output.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Trace,
    /// `⟨n_k⟩` for qubit `k` (0-based) of a qubit register.
    SitePopulation(usize),
    /// Diagonal entry `ρ_ii`.
    Population(usize),
    /// Real and imaginary parts of `ρ_ij`.
    Coherence(usize, usize),
}

impl Trajectory {
    pub fn state(&self, k: usize) -> QOperator {
        devectorize(&self.states[k]).expect("trajectory states are square")
    }

    /// Appends the requested observables evaluated on every stored state.
    pub fn add_observables(&mut self, obs: &[Observable]) {
        let ops: Vec<QOperator> = (0..self.states.len()).map(|k| self.state(k)).collect();
        let d = ops.first().map_or(0, QOperator::dim);
        for o in obs {
            match *o {
                Observable::Trace => {
                    self.observables
                        .push(("trace".into(), ops.iter().map(|r| r.trace().re).collect()));
                }
                Observable::SitePopulation(k) => {
                    let n = d.trailing_zeros() as usize;
                    if !d.is_power_of_two() || k >= n {
                        continue;
                    }
                    let series = ops
                        .iter()
                        .map(|r| {
                            (0..d)
                                .filter(|&i| (i >> (n - 1 - k)) & 1 == 1)
                                .map(|i| r.get(i, i).re)
                                .sum()
                        })
                        .collect();
                    self.observables.push((format!("n{}", k + 1), series));
                }
                Observable::Population(i) if i < d => {
                    self.observables
                        .push((format!("rho_{i}_{i}"), ops.iter().map(|r| r.get(i, i).re).collect()));
                }
                Observable::Coherence(i, j) if i < d && j < d => {
                    self.observables
                        .push((format!("re_rho_{i}_{j}"), ops.iter().map(|r| r.get(i, j).re).collect()));
                    self.observables
                        .push((format!("im_rho_{i}_{j}"), ops.iter().map(|r| r.get(i, j).im).collect()));
                }
                _ => {}
            }
        }
    }

    /// Largest `|Tr ρ(t) - 1|` along the trajectory.
    pub fn max_trace_error(&self) -> f64 {
        (0..self.states.len())
            .map(|k| (self.state(k).trace() - c64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    /// CSV with a `time` column followed by one column per observable.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = vec!["time".to_string()];
        header.extend(self.observables.iter().map(|(n, _)| n.clone()));
        writeln!(w, "{}", header.join(","))?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.16e}")];
            row.extend(self.observables.iter().map(|(_, s)| format!("{:.16e}", s[k])));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Default observables: trace, then site populations for qubit registers or
/// diagonal populations otherwise.
pub fn default_observables(d: usize) -> Vec<Observable> {
    let mut obs = vec![Observable::Trace];
    if d.is_power_of_two() && d > 1 {
        obs.extend((0..d.trailing_zeros() as usize).map(Observable::SitePopulation));
    } else {
        obs.extend((0..d).map(Observable::Population));
    }
    obs
}

/// Evolves `rho0` to every time in `times` using `exp(L Δt)`, reusing the
/// propagator when consecutive steps agree to 1e-13 relative.
pub fn propagate(l: &Superoperator, rho0: &QOperator, times: &[f64]) -> Result<Trajectory, DynamicsError> {
    rho0.check_density()
        .map_err(|e| DynamicsError::InvalidDensity(e.to_string()))?;
    if l.dim() != Some(rho0.dim()) {
        return Err(OpError::DimMismatch { left: l.dim2(), right: rho0.dim() * rho0.dim() }.into());
    }
    let valid = times.iter().all(|t| t.is_finite() && *t >= 0.0)
        && times.windows(2).all(|w| w[1] > w[0]);
    if !valid {
        return Err(DynamicsError::InvalidTimes);
    }
    let mut states = Vec::with_capacity(times.len());
    let mut current = vectorize(rho0);
    let mut t_prev = 0.0;
    let mut cached: Option<(f64, Superoperator)> = None;
    for &t in times {
        let dt = t - t_prev;
        if dt > 0.0 {
            let reuse = matches!(&cached, Some((h, _)) if (h - dt).abs() <= 1e-13 * dt);
            if !reuse {
                cached = Some((dt, propagator(l, dt)));
            }
            current = cached.as_ref().unwrap().1.apply(&current)?;
        }
        states.push(current.clone());
        t_prev = t;
    }
    let mut traj = Trajectory { times: times.to_vec(), states, observables: Vec::new() };
    traj.add_observables(&default_observables(rho0.dim()));
    Ok(traj)
}

fn shifted(m: MatRef<'_, c64>, lambda: c64) -> Mat<c64> {
    let mut a = m.to_owned();
    for i in 0..a.nrows() {
        a[(i, i)] -= lambda;
    }
    a
}

/// Builds a length-2 chain `(x0, x1)` with `(L-λ)x1 = x0`, `(L-λ)x0 ≈ 0`
/// from the kernel of `(L-λ)²`. `x0` is normalized to unit length.
pub fn jordan_chain(l: &Superoperator, lambda: c64, rank_tol: f64) -> Result<(OpVector, OpVector), DynamicsError> {
    let (x0, x1) = jordan_chain_of(l.matrix(), lambda, rank_tol)?;
    Ok((OpVector::new(x0)?, OpVector::new(x1)?))
}

/// [`jordan_chain`] for an arbitrary square matrix.
pub fn jordan_chain_of(m: MatRef<'_, c64>, lambda: c64, rank_tol: f64) -> Result<(Col<c64>, Col<c64>), DynamicsError> {
    let a = shifted(m, lambda);
    let a2 = &a * &a;
    let n = a.nrows();
    let svd = a2.svd().map_err(|_| SpectralError::SvdFailure(n))?;
    let smax = svd.S()[0].re;
    let vmat = svd.V();
    let kernel: Vec<usize> = (0..n)
        .filter(|&i| smax == 0.0 || svd.S()[i].re < rank_tol * smax)
        .collect();
    let mut best: Option<(f64, Col<c64>)> = None;
    for k in kernel {
        let v = Col::from_fn(n, |i| vmat[(i, k)]);
        let s = (&a * &v).norm_l2();
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, v));
        }
    }
    let (s, x1) = best.ok_or(DynamicsError::NoChain)?;
    if s < rank_tol.sqrt() {
        return Err(DynamicsError::NoChain);
    }
    let x1 = Col::from_fn(n, |i| x1[i] / s);
    let x0 = &a * &x1;
    Ok((x0, x1))
}

/// `max_t ‖e^{Lt}x1 - e^{λt}(x1 + t x0)‖ / (‖x1‖ + t‖x0‖)`.
pub fn jordan_chain_check(
    l: &Superoperator,
    lambda: c64,
    x0: &OpVector,
    x1: &OpVector,
    times: &[f64],
) -> Result<f64, DynamicsError> {
    jordan_chain_check_of(l.matrix(), lambda, x0.column(), x1.column(), times)
}

/// [`jordan_chain_check`] for an arbitrary square matrix.
pub fn jordan_chain_check_of(
    m: MatRef<'_, c64>,
    lambda: c64,
    x0: &Col<c64>,
    x1: &Col<c64>,
    times: &[f64],
) -> Result<f64, DynamicsError> {
    let a = shifted(m, lambda);
    let n0 = x0.norm_l2();
    let r0 = (&a * x0).norm_l2() / n0.max(f64::MIN_POSITIVE);
    let r1 = (&(&a * x1) - x0).norm_l2() / n0.max(f64::MIN_POSITIVE);
    if n0 == 0.0 || !(r0 < 1e-8 && r1 < 1e-8) {
        return Err(DynamicsError::NotAChain { r0, r1 });
    }
    let n1 = x1.norm_l2();
    let mut worst = 0.0f64;
    for &t in times {
        let scaled = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * t);
        let lhs = expm(scaled.as_ref()) * x1;
        let f = (lambda * t).exp();
        let r: f64 = (0..m.nrows())
            .map(|i| (lhs[i] - f * (x1[i] + x0[i] * t)).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r / (n1 + t * n0));
    }
    Ok(worst)
}

/// Undamped oscillation data extracted from a spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitCycleReport {
    /// `(ω, Re λ)` for each marginal eigenvalue with `ω > 0`, ascending in `ω`.
    pub marginal_pairs: Vec<(f64, f64)>,
    pub is_limit_cycle: bool,
    /// `2π/ω` of the slowest marginal pair.
    pub period: Option<f64>,
    /// Slowest decay rate among the damped modes, `-max Re λ`.
    pub slowest_damping: Option<f64>,
}

/// Classifies the spectrum of `l` with tolerance `tol · ‖L‖_F`.
pub fn detect_limit_cycle(l: &Superoperator, tol: f64) -> Result<LimitCycleReport, DynamicsError> {
    let ev = spectral::eigenvalues(l)?;
    Ok(classify_marginal(&ev, tol * l.frobenius_norm()))
}

/// [`detect_limit_cycle`] on precomputed eigenvalues with an absolute tolerance.
pub fn classify_marginal(eigvals: &[c64], tol: f64) -> LimitCycleReport {
    let mut pairs = Vec::new();
    let mut all_damped = true;
    let mut slowest: Option<f64> = None;
    for &z in eigvals {
        if z.norm() <= tol {
            continue;
        }
        if z.re.abs() < tol {
            if z.im > tol {
                pairs.push((z.im, z.re));
            }
            continue;
        }
        if z.re >= -tol {
            all_damped = false;
        }
        slowest = Some(slowest.map_or(-z.re, |s: f64| s.min(-z.re)));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let period = pairs.first().map(|p| 2.0 * PI / p.0);
    LimitCycleReport {
        is_limit_cycle: !pairs.is_empty() && all_damped,
        marginal_pairs: pairs,
        period,
        slowest_damping: slowest,
    }
}

/// Long-time content of an initial state: the stationary part and the
/// undamped oscillating components `R_λ e^{λt}`.
#[derive(Clone, Debug)]
pub struct AsymptoticDecomposition {
    pub stationary: QOperator,
    pub oscillatory: Vec<(c64, QOperator)>,
}

impl AsymptoticDecomposition {
    /// `ρ_∞ + Σ e^{λt} R_λ`.
    pub fn reconstruct(&self, t: f64) -> QOperator {
        self.oscillatory
            .iter()
            .fold(self.stationary.clone(), |acc, (lam, r)| &acc + &r.scale((lam * t).exp()))
    }
}

/// Projects `rho0` onto the zero and marginal eigenspaces of `l` with the
/// spectral projector `V (W†V)^{-1} W†` built from right and left null
/// vectors of each slow cluster.
pub fn asymptotic_decompose(l: &Superoperator, rho0: &QOperator) -> Result<AsymptoticDecomposition, DynamicsError> {
    asymptotic_decompose_with(l, rho0, DEFAULT_MARGINAL_TOL)
}

pub fn asymptotic_decompose_with(
    l: &Superoperator,
    rho0: &QOperator,
    tol: f64,
) -> Result<AsymptoticDecomposition, DynamicsError> {
    let report = spectral::decompose_with(l, &SpectralOptions::default())?;
    let scale = tol * l.frobenius_norm();
    let x = vectorize(rho0);
    let n = l.dim2();
    let d = rho0.dim();
    let mut stationary = QOperator::zeros(d);
    let mut oscillatory = Vec::new();
    for cl in report.clusters() {
        if cl.center.re.abs() >= scale.max(f64::MIN_POSITIVE) {
            continue;
        }
        if cl.defective {
            return Err(DynamicsError::IllConditionedProjection(f64::INFINITY));
        }
        let cols: Vec<Col<c64>> = cl.members.iter().map(|&a| report.eigvec(a)).collect();
        let vm = Mat::from_fn(n, cols.len(), |i, j| cols[j][i]);
        let sigma = sigma_min_normalized(vm.as_ref())?;
        if sigma * MAX_SLOW_EP_STRENGTH < 1.0 {
            return Err(DynamicsError::IllConditionedProjection(1.0 / sigma));
        }
        let k = cols.len();
        let a = shifted(l.matrix(), cl.center);
        let svd = a.svd().map_err(|_| SpectralError::SvdFailure(n))?;
        let u = svd.U();
        // left null vectors: last k left singular vectors
        let w = Mat::from_fn(n, k, |i, j| u[(i, n - k + j)]);
        let gram = w.adjoint() * &vm;
        let wx = w.adjoint() * x.column().as_mat();
        let coef = gram.partial_piv_lu().solve(&wx);
        let comp = &vm * &coef;
        let op = devectorize(&OpVector::new(Col::from_fn(n, |i| comp[(i, 0)]))?)?;
        if cl.center.norm() <= scale.max(f64::MIN_POSITIVE) {
            stationary = &stationary + &op;
        } else {
            oscillatory.push((cl.center, op));
        }
    }
    Ok(AsymptoticDecomposition { stationary, oscillatory })
}

/// Named initial states for a qubit register of `n` sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    /// `|10...0>`: only the first site excited.
    SiteOneExcited,
    /// `(|10> + |01>)/√2` on the first two sites.
    Symmetric,
    /// `(|01> - |10>)/√2` on the first two sites.
    Antisymmetric,
    MaximallyMixed,
}

impl InitialState {
    pub fn build(self, n: usize) -> QOperator {
        let d = 1usize << n;
        let basis = |bits: &[u8]| {
            let mut full = vec![0u8; n];
            full[..bits.len()].copy_from_slice(bits);
            qubit::basis_index(&full)
        };
        let pure = |amps: Vec<(usize, f64)>| {
            let mut psi = vec![c64::new(0.0, 0.0); d];
            for (i, a) in amps {
                psi[i] += c64::new(a, 0.0);
            }
            QOperator::outer(&psi, &psi)
        };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            InitialState::SiteOneExcited => pure(vec![(basis(&[1]), 1.0)]),
            InitialState::Symmetric => pure(vec![(basis(&[1, 0]), h), (basis(&[0, 1]), h)]),
            InitialState::Antisymmetric => pure(vec![(basis(&[0, 1]), h), (basis(&[1, 0]), -h)]),
            InitialState::MaximallyMixed => QOperator::identity(d).scale_real(1.0 / d as f64),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimer::{full_dimer_liouvillian, reduced_dephasing, DimerParams};
    use crate::lindblad::{assemble_liouvillian, JumpFamily, LindbladModel};
    use crate::noisegraph::{build_custom, CorrelationModel};

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn expm_of_diagonal_and_jordan() {
        for &s in &[0.001, 0.3, 2.0, 40.0, 100.0] {
            let d = Mat::from_fn(3, 3, |i, j| if i == j { c(-s * (i as f64 + 1.0) / 3.0, s * 0.1) } else { c(0., 0.) });
            let e = expm(d.as_ref());
            for i in 0..3 {
                let exact = d[(i, i)].exp();
                assert!((e[(i, i)] - exact).norm() <= 1e-12 * exact.norm().max(1e-300));
            }
            // exp of [[λ,1],[0,λ]] t = e^{λt}[[1,t],[0,1]]
            let lam = c(-0.2, 0.5);
            let j = Mat::from_fn(2, 2, |i, k| match (i, k) {
                (0, 0) | (1, 1) => lam * s,
                (0, 1) => c(s, 0.),
                _ => c(0., 0.),
            });
            let e = expm(j.as_ref());
            let f = (lam * s).exp();
            assert!((e[(0, 0)] - f).norm() < 1e-12 * f.norm());
            assert!((e[(0, 1)] - f * s).norm() < 1e-12 * (f * s).norm());
            assert!(e[(1, 0)].norm() < 1e-300 + 1e-12 * f.norm());
        }
    }

    fn single_qubit_dephasing(rate: f64) -> Superoperator {
        let g = build_custom(Mat::zeros(1, 1)).unwrap();
        let m = LindbladModel::new(
            QOperator::zeros(2),
            JumpFamily::custom(vec![crate::opspace::qubit::sigma_z()]).unwrap(),
            CorrelationModel::new(g, rate, 0.0).unwrap(),
        )
        .unwrap();
        assemble_liouvillian(&m).unwrap()
    }

    #[test]
    fn zero_generator_keeps_state() {
        let rho = InitialState::MaximallyMixed.build(1);
        let tr = propagate(&Superoperator::zeros(2), &rho, &[0.0, 1.0, 3.0]).unwrap();
        for k in 0..3 {
            assert_eq!(tr.state(k), rho);
        }
    }

    #[test]
    fn dephasing_coherence_follows_scalar_ode() {
        // L = σz at rate γ₀ damps coherences at Γφ = 2γ₀
        let l = single_qubit_dephasing(0.35);
        let psi = [c(0.6, 0.), c(0.8, 0.)];
        let rho = QOperator::outer(&psi, &psi);
        let times = linspace(0.0, 5.0, 21);
        let tr = propagate(&l, &rho, &times).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let expect = 0.48 * (-0.7 * t).exp();
            assert!((tr.state(k).get(0, 1).re - expect).abs() < 1e-8);
        }
        assert!(tr.max_trace_error() < 1e-10);
    }

    #[test]
    fn relaxation_dimer_decays_to_ground_state() {
        let l = full_dimer_liouvillian(&DimerParams::relaxation(1.0, 0.3, 0.2)).unwrap();
        let rho = InitialState::SiteOneExcited.build(2);
        let tr = propagate(&l, &rho, &[0.0, 60.0]).unwrap();
        let last = tr.state(1);
        let ground = QOperator::basis_projector(4, 0, 0);
        assert!((&last - &ground).max_abs() < 1e-8);
        let rep = spectral::decompose(&l).unwrap();
        let zeros = rep.eigvals().iter().filter(|z| z.norm() < 1e-10).count();
        assert_eq!(zeros, 1);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let l = single_qubit_dephasing(1.0);
        let bad = QOperator::identity(2);
        assert!(matches!(propagate(&l, &bad, &[0.0]), Err(DynamicsError::InvalidDensity(_))));
        let rho = InitialState::MaximallyMixed.build(1);
        assert!(matches!(propagate(&l, &rho, &[1.0, 0.5]), Err(DynamicsError::InvalidTimes)));
    }

    #[test]
    fn exact_jordan_block_chain() {
        let lam = c(-0.3, 0.2);
        let j = Superoperator::from_matrix_unchecked(Mat::from_fn(4, 4, |i, k| match (i, k) {
            (i, k) if i == k => lam,
            (0, 1) => c(1., 0.),
            _ => c(0., 0.),
        }));
        let e = |k: usize| OpVector::from_slice(&(0..4).map(|i| if i == k { c(1., 0.) } else { c(0., 0.) }).collect::<Vec<_>>()).unwrap();
        let r = jordan_chain_check(&j, lam, &e(0), &e(1), &linspace(0.0, 10.0, 41)).unwrap();
        assert!(r < 1e-10, "{r:e}");
        let diag = Superoperator::from_matrix_unchecked(Mat::from_fn(4, 4, |i, k| if i == k { lam } else { c(0., 0.) }));
        assert!(matches!(
            jordan_chain_check(&diag, lam, &e(0), &e(1), &[1.0]),
            Err(DynamicsError::NotAChain { .. })
        ));
        assert!(matches!(jordan_chain(&diag, lam, 1e-8), Err(DynamicsError::NoChain)));
    }

    #[test]
    fn reduced_dephasing_chain_at_ep() {
        let red = reduced_dephasing(&DimerParams::dephasing(1.0, 0.0, 0.5)).unwrap();
        let m = red.to_mat();
        let lam = c(-1.0, 0.0);
        let (x0, x1) = jordan_chain_of(m.as_ref(), lam, 1e-8).unwrap();
        let r = jordan_chain_check_of(m.as_ref(), lam, &x0, &x1, &linspace(0.0, 5.0, 51)).unwrap();
        assert!(r < 1e-8, "{r:e}");
    }

    #[test]
    fn limit_cycle_classification() {
        let l = full_dimer_liouvillian(&DimerParams::dephasing(1.0, 1.0, 0.5)).unwrap();
        let rep = detect_limit_cycle(&l, DEFAULT_MARGINAL_TOL).unwrap();
        assert!(rep.is_limit_cycle, "{rep:?}");
        assert!((rep.marginal_pairs[0].0 - 1.0).abs() < 1e-9);
        let l = full_dimer_liouvillian(&DimerParams::dephasing(1.0, 0.5, 0.5)).unwrap();
        assert!(!detect_limit_cycle(&l, DEFAULT_MARGINAL_TOL).unwrap().is_limit_cycle);
        let damped = Superoperator::from_matrix_unchecked(Mat::from_fn(2, 2, |i, j| if i == j { c(-1.0 - i as f64, 0.) } else { c(0., 0.) }));
        assert!(!detect_limit_cycle(&damped, 1e-9).unwrap().is_limit_cycle);
    }

    #[test]
    fn asymptotics_match_propagation() {
        let l = full_dimer_liouvillian(&DimerParams::dephasing(1.0, 1.0, 0.5)).unwrap();
        let rho = InitialState::SiteOneExcited.build(2);
        let dec = asymptotic_decompose(&l, &rho).unwrap();
        assert!(!dec.oscillatory.is_empty());
        let t = 50.0;
        let tr = propagate(&l, &rho, &[t]).unwrap();
        assert!((&dec.reconstruct(t) - &tr.state(0)).max_abs() < 1e-6);

        let l = full_dimer_liouvillian(&DimerParams::dephasing(1.0, 0.3, 0.2)).unwrap();
        let dec = asymptotic_decompose(&l, &rho).unwrap();
        assert!(dec.oscillatory.is_empty());
        let tr = propagate(&l, &rho, &[200.0]).unwrap();
        assert!((&dec.stationary - &tr.state(0)).max_abs() < 1e-8);
        let again = asymptotic_decompose(&l, &dec.stationary).unwrap();
        assert!(again.oscillatory.iter().all(|(_, r)| r.max_abs() < 1e-12));
    }
}
