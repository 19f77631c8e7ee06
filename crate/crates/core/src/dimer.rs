//! Two-site reference models: reduced 2x2 generators, closed-form
//! eigenvalues, exceptional-point conditions and a projection check of the
//! full 16x16 adjoint Liouvillian onto the reduced coordinates.
//!
//! Full-space conventions (site 1 is the leftmost tensor factor):
//!
//! * Dephasing: `L_j = σ_j^z` at base rate `γ/2`,
//!   `H = -J(|10><01| + |01><10|) + (Δ/2)(n_1 - n_2)`. The reduced coordinates
//!   live on the single-excitation states `|a> = |10>`, `|b> = |01>`.
//! * Relaxation: `L_j = σ_j^-` at base rate `γ`, same Hamiltonian. The reduced
//!   coordinates live on `|S>, |A> = (|01> ± |10>)/√2`.

use faer::{c64, Mat};
use serde::Serialize;
use thiserror::Error;

use crate::lindblad::{adjoint_liouvillian, assemble_liouvillian, network_model, JumpKind, LindbladError, LindbladModel};
use crate::noisegraph::build_dimer;
use crate::opspace::{hs_inner, qubit, vectorize, devectorize, QOperator, Superoperator};

/// Leakage above which a projection is reported as not closed.
pub const CLOSURE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Dephasing,
    Relaxation,
}

impl Channel {
    pub fn jump_kind(self) -> JumpKind {
        match self {
            Channel::Dephasing => JumpKind::Dephasing,
            Channel::Relaxation => JumpKind::Relaxation,
        }
    }

    /// Base rate `γ₀` of the site-local jumps for a dimer rate `γ`.
    pub fn gamma0(self, gamma: f64) -> f64 {
        match self {
            Channel::Dephasing => 0.5 * gamma,
            Channel::Relaxation => gamma,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DimerError {
    #[error("operation needs the {expected:?} channel, got {got:?}")]
    WrongChannel { expected: Channel, got: Channel },
    #[error("invalid dimer parameters: {0}")]
    InvalidParams(String),
    #[error("reduced subspace is not invariant (leakage {:e})", .0.leakage)]
    ClosureViolation(Box<ReductionReport>),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DimerParams {
    pub gamma: f64,
    pub c: f64,
    pub j: f64,
    pub delta: f64,
    pub channel: Channel,
}

impl DimerParams {
    pub fn dephasing(gamma: f64, c: f64, j: f64) -> Self {
        Self { gamma, c, j, delta: 0.0, channel: Channel::Dephasing }
    }

    pub fn relaxation(gamma: f64, c: f64, delta: f64) -> Self {
        Self { gamma, c, j: 0.0, delta, channel: Channel::Relaxation }
    }

    pub fn validate(&self) -> Result<(), DimerError> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(DimerError::InvalidParams(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.c.abs() <= 1.0 + 1e-12) {
            return Err(DimerError::InvalidParams(format!("|c| must be at most 1, got {}", self.c)));
        }
        if !(self.j.is_finite() && self.delta.is_finite()) {
            return Err(DimerError::InvalidParams("j and delta must be finite".into()));
        }
        Ok(())
    }

    fn require(&self, expected: Channel) -> Result<(), DimerError> {
        if self.channel != expected {
            return Err(DimerError::WrongChannel { expected, got: self.channel });
        }
        self.validate()
    }
}

/// Real 2x2 generator acting on the coordinates `(y, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReducedGenerator {
    pub matrix: [[f64; 2]; 2],
    pub basis_labels: (&'static str, &'static str),
}

impl ReducedGenerator {
    fn new(matrix: [[f64; 2]; 2]) -> Self {
        Self { matrix, basis_labels: ("y", "z") }
    }

    pub fn to_mat(&self) -> Mat<c64> {
        Mat::from_fn(2, 2, |i, j| c64::new(self.matrix[i][j], 0.0))
    }
}

/// `[[0, -Δ], [Δ, -γ(1-2c)]]`.
///
/// The lower-left sign is the one a Hamiltonian coupling produces; it makes
/// the eigenvalues those of [`relaxation_eigs`].
pub fn reduced_relaxation(p: &DimerParams) -> Result<ReducedGenerator, DimerError> {
    p.require(Channel::Relaxation)?;
    Ok(ReducedGenerator::new([
        [0.0, -p.delta],
        [p.delta, -p.gamma * (1.0 - 2.0 * p.c)],
    ]))
}

/// `[[-2γ(1-c), -2J], [2J, 0]]`.
pub fn reduced_dephasing(p: &DimerParams) -> Result<ReducedGenerator, DimerError> {
    p.require(Channel::Dephasing)?;
    Ok(ReducedGenerator::new([
        [-2.0 * p.gamma * (1.0 - p.c), -2.0 * p.j],
        [2.0 * p.j, 0.0],
    ]))
}

/// `(a + √disc, a - √disc)` on the principal branch: for `disc < 0` the first
/// entry carries the positive imaginary part.
fn split_pair(a: f64, disc: f64) -> (c64, c64) {
    let r = if disc >= 0.0 {
        c64::new(disc.sqrt(), 0.0)
    } else {
        c64::new(0.0, (-disc).sqrt())
    };
    (c64::new(a, 0.0) + r, c64::new(a, 0.0) - r)
}

/// `λ± = -γ(1-2c)/2 ± ½√(γ²(1-2c)² - 4Δ²)`.
pub fn relaxation_eigs(p: &DimerParams) -> Result<(c64, c64), DimerError> {
    p.require(Channel::Relaxation)?;
    let g = p.gamma * (1.0 - 2.0 * p.c);
    Ok(split_pair(-0.5 * g, 0.25 * (g * g - 4.0 * p.delta * p.delta)))
}

/// `λ± = -γ(1-c) ± √(γ²(1-c)² - 4J²)`.
pub fn dephasing_eigs(p: &DimerParams) -> Result<(c64, c64), DimerError> {
    p.require(Channel::Dephasing)?;
    let g = p.gamma * (1.0 - p.c);
    Ok(split_pair(-g, g * g - 4.0 * p.j * p.j))
}

/// Imbalance `|Δ|` at which the relaxation pair coalesces: `γ|1-2c|/2`.
pub fn ep_condition_relaxation(gamma: f64, c: f64) -> f64 {
    0.5 * gamma * (1.0 - 2.0 * c).abs()
}

/// Location of a correlation-strength seam and whether it is physical.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeamPoint {
    pub c_crit: f64,
    pub in_range: bool,
}

impl SeamPoint {
    fn new(c_crit: f64) -> Self {
        Self { c_crit, in_range: (-1.0..=1.0).contains(&c_crit) }
    }
}

/// Dephasing seam `c = 1 - 2|J|/γ`, the root of the discriminant.
pub fn ep_condition_dephasing(gamma: f64, j: f64) -> SeamPoint {
    SeamPoint::new(1.0 - 2.0 * j.abs() / gamma)
}

/// The competing closed form `c = 1 - |J|/γ`. Kept for the validation
/// report; the full Liouvillian does not peak there.
pub fn ep_condition_dephasing_alt(gamma: f64, j: f64) -> SeamPoint {
    SeamPoint::new(1.0 - j.abs() / gamma)
}

pub fn dimer_model(p: &DimerParams) -> Result<LindbladModel, DimerError> {
    p.validate()?;
    let c = p.c.clamp(-1.0, 1.0);
    Ok(network_model(
        build_dimer(),
        p.channel.jump_kind(),
        p.channel.gamma0(p.gamma),
        c,
        p.j,
        p.delta,
    )?)
}

/// The 16x16 Liouvillian of the two-qubit model.
pub fn full_dimer_liouvillian(p: &DimerParams) -> Result<Superoperator, DimerError> {
    Ok(assemble_liouvillian(&dimer_model(p)?)?)
}

fn ket(bits: [u8; 2]) -> Vec<c64> {
    let mut v = vec![c64::new(0.0, 0.0); 4];
    v[qubit::basis_index(&bits)] = c64::new(1.0, 0.0);
    v
}

/// Operators `(O_y, O_z) = (i(|u><v| - |v><u|), |u><u| - |v><v|)` whose
/// expectation values are the reduced coordinates of `channel`.
pub fn reduced_basis(channel: Channel) -> (QOperator, QOperator) {
    let (u, v) = match channel {
        Channel::Dephasing => (ket([1, 0]), ket([0, 1])),
        Channel::Relaxation => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let (a, b) = (ket([0, 1]), ket([1, 0]));
            let s: Vec<c64> = a.iter().zip(&b).map(|(x, y)| (x + y) * h).collect();
            let t: Vec<c64> = a.iter().zip(&b).map(|(x, y)| (x - y) * h).collect();
            (s, t)
        }
    };
    let uv = QOperator::outer(&u, &v);
    let vu = QOperator::outer(&v, &u);
    let oy = (&uv - &vu).scale(c64::new(0.0, 1.0));
    let oz = &QOperator::outer(&u, &u) - &QOperator::outer(&v, &v);
    (oy, oz)
}

/// Outcome of projecting the adjoint Liouvillian onto the reduced coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionReport {
    pub channel: Channel,
    pub params: DimerParams,
    pub projected: [[f64; 2]; 2],
    pub expected: [[f64; 2]; 2],
    /// `max |projected - expected|` over entries.
    pub deviation: f64,
    /// Largest norm of `L†[O] - Π L†[O]` over the two basis operators.
    pub leakage: f64,
}

/// Projects `ld` (an adjoint Liouvillian on two qubits) onto `span{O_y, O_z}`.
/// Row `k` of the result holds the coefficients of `L†[O_k]`.
pub fn project_adjoint(ld: &Superoperator, channel: Channel) -> ([[c64; 2]; 2], f64) {
    let (oy, oz) = reduced_basis(channel);
    let basis = [oy, oz];
    let mut coef = [[c64::new(0.0, 0.0); 2]; 2];
    let mut leak = 0.0f64;
    for (k, o) in basis.iter().enumerate() {
        let image = devectorize(&ld.apply(&vectorize(o)).expect("16x16 adjoint")).expect("square");
        let mut rest = image.clone();
        for (m, b) in basis.iter().enumerate() {
            let x = hs_inner(b, &image).expect("same dim") / hs_inner(b, b).expect("same dim");
            coef[k][m] = x;
            rest = &rest - &b.scale(x);
        }
        leak = leak.max(rest.frobenius_norm());
    }
    (coef, leak)
}

/// Compares a projected adjoint with the reduced generator of `p`.
pub fn compare_reduction(p: &DimerParams, ld: &Superoperator) -> Result<ReductionReport, DimerError> {
    let expected = match p.channel {
        Channel::Relaxation => reduced_relaxation(p)?,
        Channel::Dephasing => reduced_dephasing(p)?,
    }
    .matrix;
    let (coef, leakage) = project_adjoint(ld, p.channel);
    let mut projected = [[0.0; 2]; 2];
    let mut deviation = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            projected[i][j] = coef[i][j].re;
            deviation = deviation.max((coef[i][j] - c64::new(expected[i][j], 0.0)).norm());
        }
    }
    let report = ReductionReport { channel: p.channel, params: *p, projected, expected, deviation, leakage };
    if leakage > CLOSURE_TOL {
        return Err(DimerError::ClosureViolation(Box::new(report)));
    }
    Ok(report)
}

/// Projects the adjoint of the full dimer model and checks it against the
/// reduced generator. Fails with `ClosureViolation` if the reduced span is
/// not invariant.
pub fn validate_reduction(p: &DimerParams) -> Result<ReductionReport, DimerError> {
    let ld = adjoint_liouvillian(&dimer_model(p)?)?;
    compare_reduction(p, &ld)
}
