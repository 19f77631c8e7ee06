//! Non-Hermitian eigendecomposition of generators, eigenvector conditioning
//! (EP strength), eigenvalue clustering and the rank-nullity test for
//! Jordan blocks.
//!
//! [`decompose`] splits the generator into invariant blocks (connected
//! components of its sparsity graph) and solves each block separately. The
//! eigenvector matrix is then block diagonal up to a permutation, so its
//! smallest singular value is the minimum over blocks.

use faer::{c64, Col, Mat, MatRef};
use serde::ser::{Serialize, SerializeStruct, Serializer};
use thiserror::Error;

use crate::opspace::Superoperator;

pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// Cluster radius relative to `‖L‖_F`.
pub const DEFAULT_CLUSTER_REL: f64 = 1e-6;
/// `σ_min` below this is reported as an infinite EP strength.
pub const SIGMA_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("eigensolver failed to converge on a block of size {0}")]
    EigFailure(usize),
    #[error("singular value decomposition failed on a matrix of size {0}")]
    SvdFailure(usize),
    #[error("generator has non-finite entries")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralOptions {
    pub rank_tol: f64,
    /// Absolute cluster radius; `None` means `1e-6 · ‖L‖_F`.
    pub cluster_radius: Option<f64>,
    /// Replace eigenvectors of numerically degenerate, semisimple clusters by
    /// an orthonormal basis of the eigenspace.
    pub orthonormalize_semisimple: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            cluster_radius: None,
            orthonormalize_semisimple: true,
        }
    }
}

impl SpectralOptions {
    pub fn radius_for(&self, frob: f64) -> f64 {
        self.cluster_radius
            .unwrap_or(DEFAULT_CLUSTER_REL * frob)
            .max(f64::MIN_POSITIVE)
    }
}

/// Group of numerically coincident eigenvalues with its Jordan diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct EigCluster {
    pub center: c64,
    pub members: Vec<usize>,
    pub delta1: usize,
    pub delta2: usize,
    pub defective: bool,
}

impl Serialize for EigCluster {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("EigCluster", 5)?;
        st.serialize_field("center", &[self.center.re, self.center.im])?;
        st.serialize_field("members", &self.members)?;
        st.serialize_field("delta1", &self.delta1)?;
        st.serialize_field("delta2", &self.delta2)?;
        st.serialize_field("defective", &self.defective)?;
        st.end()
    }
}

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    eigvecs: Mat<c64>,
}

/// Full eigen data of one generator.
///
/// Eigenvalues are sorted by decreasing real part, then increasing imaginary
/// part. Eigenvector columns have unit 2-norm.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    dim: usize,
    eigvals: Vec<c64>,
    // (block, local column) for each global eigenvalue index
    locate: Vec<(usize, usize)>,
    blocks: Vec<Block>,
    sigma_min: f64,
    ep_strength: f64,
    clusters: Vec<EigCluster>,
    frobenius: f64,
}

impl SpectralReport {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigvals(&self) -> &[c64] {
        &self.eigvals
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// `1/σ_min(V)`, or `+inf` when `σ_min < 1e-300`.
    pub fn ep_strength(&self) -> f64 {
        self.ep_strength
    }

    pub fn clusters(&self) -> &[EigCluster] {
        &self.clusters
    }

    /// `‖L‖_F` of the decomposed generator.
    pub fn generator_norm(&self) -> f64 {
        self.frobenius
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Eigenvector `α` as a dense column.
    pub fn eigvec(&self, alpha: usize) -> Col<c64> {
        let (b, k) = self.locate[alpha];
        let blk = &self.blocks[b];
        let mut v = Col::zeros(self.dim);
        for (r, &g) in blk.indices.iter().enumerate() {
            v[g] = blk.eigvecs[(r, k)];
        }
        v
    }

    /// Dense `n x n` eigenvector matrix with columns in eigenvalue order.
    pub fn eigvecs(&self) -> Mat<c64> {
        let mut v = Mat::zeros(self.dim, self.dim);
        for (alpha, &(b, k)) in self.locate.iter().enumerate() {
            let blk = &self.blocks[b];
            for (r, &g) in blk.indices.iter().enumerate() {
                v[(g, alpha)] = blk.eigvecs[(r, k)];
            }
        }
        v
    }

    /// Cluster containing eigenvalue index `alpha`.
    pub fn cluster_of(&self, alpha: usize) -> Option<&EigCluster> {
        self.clusters.iter().find(|c| c.members.contains(&alpha))
    }

    /// Cluster whose center is closest to `lambda`.
    pub fn nearest_cluster(&self, lambda: c64) -> Option<&EigCluster> {
        self.clusters
            .iter()
            .min_by(|a, b| (a.center - lambda).norm().total_cmp(&(b.center - lambda).norm()))
    }

    pub fn any_defective(&self) -> bool {
        self.clusters.iter().any(|c| c.defective)
    }

    /// `max_α ‖L v_α − λ_α v_α‖`.
    pub fn max_residual(&self, l: &Superoperator) -> f64 {
        let m = l.matrix();
        let mut worst = 0.0f64;
        for alpha in 0..self.dim {
            let v = self.eigvec(alpha);
            let lv = m * &v;
            let lam = self.eigvals[alpha];
            let r: f64 = (0..self.dim)
                .map(|i| (lv[i] - lam * v[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }
}

impl Serialize for SpectralReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let eig: Vec<[f64; 2]> = self.eigvals.iter().map(|z| [z.re, z.im]).collect();
        let ep = self.ep_strength.is_finite().then_some(self.ep_strength);
        let mut st = s.serialize_struct("SpectralReport", 4)?;
        st.serialize_field("eigvals", &eig)?;
        st.serialize_field("sigma_min", &self.sigma_min)?;
        st.serialize_field("ep_strength", &ep)?;
        st.serialize_field("clusters", &self.clusters)?;
        st.end()
    }
}

fn check_finite(m: MatRef<'_, c64>) -> Result<(), SpectralError> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(SpectralError::NonFinite);
            }
        }
    }
    Ok(())
}

/// Partitions indices into weakly connected components of the nonzero
/// pattern. Components are ordered by their smallest index.
pub fn invariant_blocks(m: MatRef<'_, c64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let zero = c64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != zero {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn submatrix(m: MatRef<'_, c64>, idx: &[usize]) -> Mat<c64> {
    Mat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn normalize_columns(v: &mut Mat<c64>) {
    for j in 0..v.ncols() {
        let mut norm = 0.0;
        let mut lead = c64::new(0.0, 0.0);
        let mut lead_abs = -1.0;
        for i in 0..v.nrows() {
            let z = v[(i, j)];
            norm += z.norm_sqr();
            // first component within 1e-8 of the largest magnitude fixes the phase
            if z.norm() > lead_abs * (1.0 + 1e-8) {
                lead_abs = z.norm();
                lead = z;
            }
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            continue;
        }
        let phase = if lead_abs > 0.0 {
            lead.conj() / lead_abs
        } else {
            c64::new(1.0, 0.0)
        };
        let f = phase / norm;
        for i in 0..v.nrows() {
            v[(i, j)] *= f;
        }
    }
}

fn eig_order(a: &c64, b: &c64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im))
}

/// Smallest singular value of `v` after normalizing its columns to unit
/// 2-norm.
pub fn sigma_min_normalized(v: MatRef<'_, c64>) -> Result<f64, SpectralError> {
    if v.ncols() == 0 {
        return Ok(1.0);
    }
    let mut w = v.to_owned();
    for j in 0..w.ncols() {
        let norm: f64 = (0..w.nrows()).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..w.nrows() {
                w[(i, j)] /= norm;
            }
        }
    }
    let sv = w
        .singular_values()
        .map_err(|_| SpectralError::SvdFailure(w.nrows()))?;
    Ok(sv.last().copied().unwrap_or(0.0).max(0.0))
}

/// `1/σ_min(V)` with columns normalized first; `+inf` below the floor.
pub fn ep_strength_of(v: MatRef<'_, c64>) -> f64 {
    match sigma_min_normalized(v) {
        Ok(s) if s >= SIGMA_FLOOR => 1.0 / s,
        _ => f64::INFINITY,
    }
}

/// Single-linkage clustering: eigenvalues chained within `radius` share a
/// cluster. Clusters are ordered by their smallest member; centers are means.
pub fn cluster_eigs(eigvals: &[c64], radius: f64) -> Vec<(c64, Vec<usize>)> {
    let n = eigvals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    // sweep in order of real part so only nearby candidates are compared
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigvals[a].re.total_cmp(&eigvals[b].re));
    for (pos, &a) in order.iter().enumerate() {
        for &b in &order[pos + 1..] {
            if eigvals[b].re - eigvals[a].re > radius {
                break;
            }
            if (eigvals[a] - eigvals[b]).norm() <= radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut out: Vec<(c64, Vec<usize>)> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push((c64::new(0.0, 0.0), Vec::new()));
        }
        out[slot[r]].1.push(i);
    }
    for (center, members) in &mut out {
        let sum: c64 = members.iter().map(|&i| eigvals[i]).sum();
        *center = sum / members.len() as f64;
    }
    out
}

fn shifted(m: MatRef<'_, c64>, lambda: c64) -> Mat<c64> {
    let mut s = m.to_owned();
    for i in 0..s.nrows() {
        s[(i, i)] -= lambda;
    }
    s
}

/// Singular values below `rank_tol · max(σ_max, scale)` count as zero. The
/// `scale` floor keeps the test meaningful when the shifted matrix is itself
/// tiny, as for `λI` or a rounding-level shift.
fn kernel_dim(sv: &[f64], rank_tol: f64, scale: f64) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0).max(scale);
    if smax == 0.0 {
        return sv.len();
    }
    sv.iter().filter(|&&s| s < rank_tol * smax).count()
}

/// `(δ₁, δ₂)` for a dense matrix.
pub fn defectiveness_of(
    m: MatRef<'_, c64>,
    lambda: c64,
    rank_tol: f64,
) -> Result<(usize, usize), SpectralError> {
    let n = m.nrows();
    if n == 0 {
        return Ok((0, 0));
    }
    let a = shifted(m, lambda);
    let a2 = &a * &a;
    let s1 = a.singular_values().map_err(|_| SpectralError::SvdFailure(n))?;
    let s2 = a2.singular_values().map_err(|_| SpectralError::SvdFailure(n))?;
    let scale = m.norm_l2();
    Ok((kernel_dim(&s1, rank_tol, scale), kernel_dim(&s2, rank_tol, scale * scale)))
}

/// Result of the rank-nullity test at one eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Defectiveness {
    pub delta1: usize,
    pub delta2: usize,
    pub defective: bool,
}

/// `δ₁ = dim ker(L − λ)`, `δ₂ = dim ker((L − λ)²)` from dense SVDs, with
/// singular values below `rank_tol · max(σ_max, ‖L‖_F)` (squared for `δ₂`) counted as zero.
pub fn defectiveness_test(
    l: &Superoperator,
    lambda: c64,
    rank_tol: f64,
) -> Result<Defectiveness, SpectralError> {
    let (delta1, delta2) = defectiveness_of(l.matrix(), lambda, rank_tol)?;
    Ok(Defectiveness {
        delta1,
        delta2,
        defective: delta2 > delta1,
    })
}

/// `‖vec(I)† L‖₂ / ‖L‖_F`; zero for the zero generator.
pub fn trace_preservation_residual(l: &Superoperator) -> f64 {
    let frob = l.frobenius_norm();
    if frob == 0.0 {
        return 0.0;
    }
    match trace_row(l) {
        Some(w) => w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / frob,
        None => f64::NAN,
    }
}

fn trace_row(l: &Superoperator) -> Option<Vec<c64>> {
    let d = l.dim()?;
    let m = l.matrix();
    let n = l.dim2();
    Some(
        (0..n)
            .map(|col| (0..d).map(|j| m[(j * d + j, col)]).sum())
            .collect(),
    )
}

/// `‖(I − P) L P‖` with `P` the orthogonal projector onto vectorized
/// traceless operators. Vanishes iff the traceless subspace is invariant.
pub fn traceless_block_check(l: &Superoperator) -> f64 {
    let Some(d) = l.dim() else {
        return f64::NAN;
    };
    let w = trace_row(l).expect("perfect-square dimension");
    // (I-P) L P = u (w - (w·u) u†) / √d with u = vec(I)/√d
    let inv = 1.0 / (d as f64).sqrt();
    let wu: c64 = (0..d).map(|j| w[j * d + j]).sum::<c64>() * inv;
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let uk = if k % (d + 1) == 0 { inv } else { 0.0 };
        acc += (wk * inv - wu * inv * uk).norm_sqr();
    }
    acc.sqrt()
}

/// Eigenvalues only, solved blockwise and sorted like [`decompose`].
pub fn eigenvalues(l: &Superoperator) -> Result<Vec<c64>, SpectralError> {
    let m = l.matrix();
    check_finite(m)?;
    let mut out = Vec::with_capacity(m.nrows());
    for idx in invariant_blocks(m) {
        let b = submatrix(m, &idx);
        let ev = b
            .eigenvalues()
            .map_err(|_| SpectralError::EigFailure(idx.len()))?;
        out.extend(ev);
    }
    out.sort_by(eig_order);
    Ok(out)
}

pub fn decompose(l: &Superoperator) -> Result<SpectralReport, SpectralError> {
    decompose_with(l, &SpectralOptions::default())
}

pub fn decompose_with(
    l: &Superoperator,
    opts: &SpectralOptions,
) -> Result<SpectralReport, SpectralError> {
    decompose_matrix(l.matrix(), opts)
}

/// [`decompose`] for an arbitrary square matrix.
pub fn decompose_matrix(
    m: MatRef<'_, c64>,
    opts: &SpectralOptions,
) -> Result<SpectralReport, SpectralError> {
    check_finite(m)?;
    let n = m.nrows();
    let frob = m.norm_l2();
    let radius = opts.radius_for(frob);

    let mut blocks: Vec<Block> = Vec::new();
    let mut raw: Vec<(c64, usize, usize)> = Vec::with_capacity(n);
    let mut block_mats: Vec<Mat<c64>> = Vec::new();
    for idx in invariant_blocks(m) {
        let b = submatrix(m, &idx);
        let eig = b.eigen().map_err(|_| SpectralError::EigFailure(idx.len()))?;
        let s = eig.S().column_vector();
        let mut v = eig.U().to_owned();
        normalize_columns(&mut v);
        let bi = blocks.len();
        for k in 0..idx.len() {
            raw.push((s[k], bi, k));
        }
        blocks.push(Block { indices: idx, eigvecs: v });
        block_mats.push(b);
    }
    raw.sort_by(|a, b| eig_order(&a.0, &b.0));
    let eigvals: Vec<c64> = raw.iter().map(|r| r.0).collect();
    let locate: Vec<(usize, usize)> = raw.iter().map(|r| (r.1, r.2)).collect();

    let mut clusters = Vec::new();
    for (center, members) in cluster_eigs(&eigvals, radius) {
        let size = members.len();
        if size == 1 {
            clusters.push(EigCluster {
                center,
                members,
                delta1: 1,
                delta2: 1,
                defective: false,
            });
            continue;
        }
        let mut by_block: Vec<(usize, Vec<usize>)> = Vec::new();
        for &a in &members {
            let (b, k) = locate[a];
            match by_block.iter_mut().find(|(bb, _)| *bb == b) {
                Some((_, ks)) => ks.push(k),
                None => by_block.push((b, vec![k])),
            }
        }
        let (mut d1, mut d2) = (0, 0);
        for (b, ks) in &by_block {
            let part = ks.len();
            if part == 1 {
                d1 += 1;
                d2 += 1;
                continue;
            }
            let bm = &block_mats[*b];
            let a = shifted(bm.as_ref(), center);
            let svd = a.svd().map_err(|_| SpectralError::SvdFailure(a.nrows()))?;
            let sv: Vec<f64> = (0..a.nrows()).map(|i| svd.S()[i].re).collect();
            let scale = bm.norm_l2();
            let k1 = kernel_dim(&sv, opts.rank_tol, scale).min(part);
            let a2 = &a * &a;
            let s2 = a2
                .singular_values()
                .map_err(|_| SpectralError::SvdFailure(a.nrows()))?;
            let k2 = kernel_dim(&s2, opts.rank_tol, scale * scale).clamp(k1, part);
            if opts.orthonormalize_semisimple && k1 == part {
                let nb = a.nrows();
                let vmat = svd.V();
                let eigvecs = &mut blocks[*b].eigvecs;
                for (t, &k) in ks.iter().enumerate() {
                    let src = nb - part + t;
                    for r in 0..nb {
                        eigvecs[(r, k)] = vmat[(r, src)];
                    }
                }
            }
            d1 += k1.max(1);
            d2 += k2.max(1);
        }
        clusters.push(EigCluster {
            center,
            members,
            delta1: d1,
            delta2: d2,
            defective: d2 > d1,
        });
    }
    for blk in &mut blocks {
        normalize_columns(&mut blk.eigvecs);
    }

    let mut sigma_min = f64::INFINITY;
    for blk in &blocks {
        sigma_min = sigma_min.min(sigma_min_normalized(blk.eigvecs.as_ref())?);
    }
    if n == 0 {
        sigma_min = 1.0;
    }
    let ep_strength = if sigma_min >= SIGMA_FLOOR {
        1.0 / sigma_min
    } else {
        f64::INFINITY
    };
    Ok(SpectralReport {
        dim: n,
        eigvals,
        locate,
        blocks,
        sigma_min,
        ep_strength,
        clusters,
        frobenius: frob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opspace::{left_mult_superop, right_mult_superop, QOperator};

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn gen(m: Mat<c64>) -> Superoperator {
        Superoperator::from_matrix_unchecked(m)
    }

    fn diag(vals: &[c64]) -> Mat<c64> {
        Mat::from_fn(vals.len(), vals.len(), |i, j| if i == j { vals[i] } else { c(0., 0.) })
    }

    #[test]
    fn diagonal_generator_is_well_conditioned() {
        let l = gen(diag(&[c(-1., 0.), c(-2., 0.), c(-3., 1.)]));
        let r = decompose(&l).unwrap();
        assert!((r.ep_strength() - 1.0).abs() < 1e-12);
        assert_eq!(r.eigvals()[0], c(-1., 0.));
        assert_eq!(r.block_count(), 3);
    }

    #[test]
    fn jordan_block_diverges() {
        let l = gen(Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c(1., 0.) } else { c(0., 0.) }));
        let r = decompose(&l).unwrap();
        assert!(r.ep_strength() > 1e7);
        assert_eq!(r.clusters().len(), 1);
        let cl = &r.clusters()[0];
        assert_eq!((cl.delta1, cl.delta2, cl.defective), (1, 2, true));
    }

    #[test]
    fn ep_strength_closed_form() {
        assert_eq!(ep_strength_of(Mat::<c64>::identity(3, 3).as_ref()), 1.0);
        for &eps in &[1e-2, 1e-4, 1e-6] {
            let v = Mat::from_fn(2, 2, |i, j| match (i, j) {
                (0, _) => c(1., 0.),
                (1, 1) => c(eps, 0.),
                _ => c(0., 0.),
            });
            // columns e1 and (1,ε)/√(1+ε²): σ_min² = 1 − cos θ = ε²/(r(1+r)), r = √(1+ε²)
            let r = (1.0 + eps * eps).sqrt();
            let exact = (r * (1.0 + r)).sqrt() / eps;
            let e = ep_strength_of(v.as_ref());
            assert!((e - exact).abs() / exact < 1e-8, "{e} vs {exact}");
            // asymptotically √2/ε
            assert!((e * eps / 2f64.sqrt() - 1.0).abs() < eps);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let unitary = Mat::from_fn(2, 2, |i, j| {
            if i == 1 && j == 1 { c(0., -h) } else if i == 1 { c(0., h) } else { c(h, 0.) }
        });
        assert!((ep_strength_of(unitary.as_ref()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clustering_examples() {
        let cl = cluster_eigs(&[c(0., 0.), c(0., 1e-12), c(-1., 0.)], 1e-9);
        assert_eq!(cl.len(), 2);
        let cl = cluster_eigs(&[c(-1., 0.), c(-2., 0.), c(-3., 0.)], 1e-9);
        assert_eq!(cl.len(), 3);
        let cl = cluster_eigs(&[c(-1. + 1e-10, 0.), c(-1. - 1e-10, 0.)], 1e-9);
        assert_eq!(cl.len(), 1);
        assert!((cl[0].0 - c(-1., 0.)).norm() < 1e-15);
        // chained linkage
        let cl = cluster_eigs(&[c(0., 0.), c(0.8e-9, 0.), c(1.6e-9, 0.)], 1e-9);
        assert_eq!(cl.len(), 1);
    }

    #[test]
    fn defectiveness_examples() {
        let lam = c(-0.5, 0.2);
        let jb = gen(Mat::from_fn(2, 2, |i, j| if i == j { lam } else if i == 0 { c(1., 0.) } else { c(0., 0.) }));
        let d = defectiveness_test(&jb, lam, 1e-8).unwrap();
        assert_eq!((d.delta1, d.delta2, d.defective), (1, 2, true));
        let dd = gen(diag(&[lam, lam]));
        let d = defectiveness_test(&dd, lam, 1e-8).unwrap();
        assert_eq!((d.delta1, d.delta2, d.defective), (2, 2, false));
        let dm = gen(diag(&[lam, c(1., 0.)]));
        let d = defectiveness_test(&dm, lam, 1e-8).unwrap();
        assert_eq!((d.delta1, d.delta2, d.defective), (1, 1, false));
    }

    #[test]
    fn trace_and_traceless_checks() {
        assert_eq!(trace_preservation_residual(&Superoperator::zeros(2)), 0.0);
        let h = QOperator::from_fn(2, |i, j| c((i + 2 * j) as f64, 0.) + c((j + 2 * i) as f64, 0.));
        let comm = &left_mult_superop(&h) - &right_mult_superop(&h);
        assert!(traceless_block_check(&comm) < 1e-13);
        assert!(trace_preservation_residual(&comm) < 1e-15);
        let junk = Superoperator::new(Mat::from_fn(4, 4, |i, j| c(((3 * i + j) % 5) as f64 - 2.0, 0.3))).unwrap();
        assert!(trace_preservation_residual(&junk) > 0.1);
        assert!(traceless_block_check(&junk) > 0.1);
    }

    #[test]
    fn semisimple_degeneracy_is_orthonormalized() {
        // two equal eigenvalues coupled into one block through a third state
        let m = Mat::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) | (1, 1) => c(-1., 0.),
            (2, 2) => c(-3., 0.),
            (0, 2) => c(0.5, 0.),
            (1, 2) => c(0.25, 0.),
            _ => c(0., 0.),
        });
        let r = decompose_matrix(m.as_ref(), &SpectralOptions::default()).unwrap();
        let cl = r.cluster_of(0).unwrap();
        assert_eq!((cl.delta1, cl.delta2, cl.defective), (2, 2, false));
        let l = gen(m);
        assert!(r.max_residual(&l) < 1e-12);
        let v0 = r.eigvec(0);
        let v1 = r.eigvec(1);
        let ip: c64 = (0..3).map(|i| v0[i].conj() * v1[i]).sum();
        assert!(ip.norm() < 1e-12);
    }

    #[test]
    fn report_serializes_infinite_strength_as_null() {
        let l = gen(Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c(1., 0.) } else { c(0., 0.) }));
        let mut r = decompose(&l).unwrap();
        r.ep_strength = f64::INFINITY;
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"ep_strength\":null"));
        assert!(s.contains("\"eigvals\":[[0.0,0.0],[0.0,0.0]]") || s.contains("\"eigvals\":[["));
    }

    #[test]
    fn blocks_follow_sparsity() {
        let m = Mat::from_fn(4, 4, |i, j| if (i, j) == (0, 3) || i == j { c(1., 0.) } else { c(0., 0.) });
        let b = invariant_blocks(m.as_ref());
        assert_eq!(b, vec![vec![0, 3], vec![1], vec![2]]);
    }
}
