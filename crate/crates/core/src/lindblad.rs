//! Liouvillian assembly for qubit networks with correlated dissipation.
//!
//! Two equivalent dissipator forms are provided: the collective-channel sum
//! over eigenmodes of `Γ = γ₀(I + cA)` and the pairwise sum over `Γ_ij`.

use faer::c64;
use serde::Serialize;
use thiserror::Error;

use crate::noisegraph::{CorrelationModel, GraphError, NoiseGraph};
use crate::opspace::{qubit, OpError, QOperator, Superoperator, HERMITIAN_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LindbladError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error("hamiltonian is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("{ops} jump operators for a graph with {sites} sites")]
    JumpCountMismatch { ops: usize, sites: usize },
    #[error("jump operator family is empty")]
    NoJumps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpKind {
    Dephasing,
    Relaxation,
    Custom,
}

/// One jump operator per graph site, all on the same Hilbert space.
#[derive(Clone, Debug)]
pub struct JumpFamily {
    kind: JumpKind,
    ops: Vec<QOperator>,
}

impl JumpFamily {
    /// `L_j = σ_j^z` on an `n`-qubit register.
    pub fn dephasing(n: usize) -> Self {
        let sz = qubit::sigma_z();
        Self {
            kind: JumpKind::Dephasing,
            ops: (0..n).map(|j| qubit::embed(&sz, j, n)).collect(),
        }
    }

    /// `L_j = σ_j^-` on an `n`-qubit register.
    pub fn relaxation(n: usize) -> Self {
        let sm = qubit::sigma_minus();
        Self {
            kind: JumpKind::Relaxation,
            ops: (0..n).map(|j| qubit::embed(&sm, j, n)).collect(),
        }
    }

    pub fn custom(ops: Vec<QOperator>) -> Result<Self, LindbladError> {
        let d = ops.first().ok_or(LindbladError::NoJumps)?.dim();
        if let Some(bad) = ops.iter().find(|o| o.dim() != d) {
            return Err(OpError::DimMismatch {
                left: d,
                right: bad.dim(),
            }
            .into());
        }
        Ok(Self {
            kind: JumpKind::Custom,
            ops,
        })
    }

    pub fn for_kind(kind: JumpKind, n: usize) -> Option<Self> {
        match kind {
            JumpKind::Dephasing => Some(Self::dephasing(n)),
            JumpKind::Relaxation => Some(Self::relaxation(n)),
            JumpKind::Custom => None,
        }
    }

    pub fn kind(&self) -> JumpKind {
        self.kind
    }

    pub fn ops(&self) -> &[QOperator] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops.first().map_or(0, QOperator::dim)
    }
}

/// Hamiltonian, site-local jump operators and their correlation structure.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    hamiltonian: QOperator,
    jumps: JumpFamily,
    correlation: CorrelationModel,
}

impl LindbladModel {
    pub fn new(
        hamiltonian: QOperator,
        jumps: JumpFamily,
        correlation: CorrelationModel,
    ) -> Result<Self, LindbladError> {
        let dev = hamiltonian.hermiticity_deviation();
        if dev >= HERMITIAN_TOL {
            return Err(LindbladError::NotHermitian(dev));
        }
        if jumps.ops.len() != correlation.graph.n() {
            return Err(LindbladError::JumpCountMismatch {
                ops: jumps.ops.len(),
                sites: correlation.graph.n(),
            });
        }
        if jumps.dim() != hamiltonian.dim() {
            return Err(OpError::DimMismatch {
                left: hamiltonian.dim(),
                right: jumps.dim(),
            }
            .into());
        }
        correlation.check_positivity()?;
        Ok(Self {
            hamiltonian,
            jumps,
            correlation,
        })
    }

    pub fn hamiltonian(&self) -> &QOperator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &JumpFamily {
        &self.jumps
    }

    pub fn correlation(&self) -> &CorrelationModel {
        &self.correlation
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }
}

/// `H = -J Σ_{i<j} A_ij (σ_i^+ σ_j^- + h.c.) + (Δ/2) Σ_j (-1)^j n_j`.
///
/// For two sites this is `-J(|10><01| + |01><10|) + (Δ/2)(n_1 - n_2)`.
pub fn network_hamiltonian(graph: &NoiseGraph, j: f64, delta: f64) -> QOperator {
    let n = graph.n();
    let d = 1usize << n;
    let mut h = QOperator::zeros(d);
    if j != 0.0 {
        let sp = qubit::sigma_plus();
        let sm = qubit::sigma_minus();
        for a in 0..n {
            for b in (a + 1)..n {
                let w = graph.adjacency()[(a, b)];
                if w == 0.0 {
                    continue;
                }
                let hop = &qubit::embed(&sp, a, n) * &qubit::embed(&sm, b, n);
                let term = &hop + &hop.dagger();
                h = &h - &term.scale_real(j * w);
            }
        }
    }
    if delta != 0.0 {
        let num = qubit::number();
        for a in 0..n {
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            h = &h + &qubit::embed(&num, a, n).scale_real(0.5 * delta * sign);
        }
    }
    h
}

/// Network model with site-local dephasing or relaxation jumps and the
/// Hamiltonian from [`network_hamiltonian`].
pub fn network_model(
    graph: NoiseGraph,
    kind: JumpKind,
    gamma0: f64,
    c: f64,
    j: f64,
    delta: f64,
) -> Result<LindbladModel, LindbladError> {
    let n = graph.n();
    let jumps = JumpFamily::for_kind(kind, n).ok_or(LindbladError::NoJumps)?;
    let h = network_hamiltonian(&graph, j, delta);
    LindbladModel::new(h, jumps, CorrelationModel::new(graph, gamma0, c)?)
}

/// Collective channels `(γ_α, L̃_α)` with `L̃_α = Σ_j U_jα* L_j`, in ascending
/// adjacency-eigenvalue order. At `c = 0` the site operators are returned.
pub fn collective_jumps(model: &LindbladModel) -> Result<Vec<(f64, QOperator)>, LindbladError> {
    let corr = &model.correlation;
    corr.check_positivity()?;
    let ops = &model.jumps.ops;
    if corr.c == 0.0 {
        return Ok(ops.iter().map(|l| (corr.gamma0, l.clone())).collect());
    }
    let g = &corr.graph;
    let u = g.eigvecs();
    let d = model.dim();
    Ok(g.eigvals()
        .iter()
        .enumerate()
        .map(|(a, &lam)| {
            let rate = (corr.gamma0 * (1.0 + corr.c * lam)).max(0.0);
            let mut op = QOperator::zeros(d);
            for (j, l) in ops.iter().enumerate() {
                let w = u[(j, a)];
                if w != 0.0 {
                    op = &op + &l.scale_real(w);
                }
            }
            (rate, op)
        })
        .collect())
}

fn hamiltonian_part(out: &mut Superoperator, h: &QOperator, sign: f64) {
    let d = h.dim();
    let id = QOperator::identity(d);
    // sign = -1: -i(I⊗H - Hᵀ⊗I); sign = +1 gives the adjoint
    out.add_kron(c64::new(0.0, sign), &id, h);
    out.add_kron(c64::new(0.0, -sign), &h.transpose(), &id);
}

fn anticommutator_part(out: &mut Superoperator, rate: c64, m: &QOperator) {
    let id = QOperator::identity(m.dim());
    out.add_kron(rate * -0.5, &id, m);
    out.add_kron(rate * -0.5, &m.transpose(), &id);
}

/// `𝓛 = -i(I⊗H - Hᵀ⊗I) + Σ_α γ_α [L̃*⊗L̃ - ½ I⊗L̃†L̃ - ½ (L̃†L̃)ᵀ⊗I]`.
pub fn assemble_liouvillian(model: &LindbladModel) -> Result<Superoperator, LindbladError> {
    let d = model.dim();
    let mut out = Superoperator::zeros(d);
    hamiltonian_part(&mut out, &model.hamiltonian, -1.0);
    for (rate, l) in collective_jumps(model)? {
        if rate == 0.0 {
            continue;
        }
        let r = c64::new(rate, 0.0);
        out.add_kron(r, &l.conj(), &l);
        anticommutator_part(&mut out, r, &(&l.dagger() * &l));
    }
    Ok(out)
}

/// `Σ_ij Γ_ij [L_j*⊗L_i - ½ I⊗L_j†L_i - ½ (L_j†L_i)ᵀ⊗I]` plus the Hamiltonian part.
pub fn assemble_pairwise(model: &LindbladModel) -> Result<Superoperator, LindbladError> {
    model.correlation.check_positivity()?;
    let d = model.dim();
    let gamma = model.correlation.gamma_matrix();
    let ops = &model.jumps.ops;
    let mut out = Superoperator::zeros(d);
    hamiltonian_part(&mut out, &model.hamiltonian, -1.0);
    for (i, li) in ops.iter().enumerate() {
        for (j, lj) in ops.iter().enumerate() {
            let gij = gamma[(i, j)];
            if gij == 0.0 {
                continue;
            }
            let r = c64::new(gij, 0.0);
            out.add_kron(r, &lj.conj(), li);
            anticommutator_part(&mut out, r, &(&lj.dagger() * li));
        }
    }
    Ok(out)
}

/// Heisenberg-picture generator `O ↦ i[H,O] + Σ γ_α (L̃†OL̃ - ½{L̃†L̃, O})`.
pub fn adjoint_liouvillian(model: &LindbladModel) -> Result<Superoperator, LindbladError> {
    let d = model.dim();
    let mut out = Superoperator::zeros(d);
    hamiltonian_part(&mut out, &model.hamiltonian, 1.0);
    for (rate, l) in collective_jumps(model)? {
        if rate == 0.0 {
            continue;
        }
        let r = c64::new(rate, 0.0);
        out.add_kron(r, &l.transpose(), &l.dagger());
        anticommutator_part(&mut out, r, &(&l.dagger() * &l));
    }
    Ok(out)
}
