//! Dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Everything here works on dynamically sized complex matrices. Empty
//! matrices (zero rows or columns) are legal inputs throughout, since defect
//! spaces and unitary parts are routinely trivial.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint()
}

/// Largest singular value. Zero for empty matrices.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `(m + m*) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted in
/// descending order. Each eigenvector is normalized so that its
/// largest-modulus entry is real and positive.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn hermitian_eigen(m: &CMat) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen { values: vec![], vectors: zeros(0, 0) };
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut vectors = zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut col = eig.eigenvectors.column(src).into_owned();
        normalize_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    HermitianEigen { values, vectors }
}

/// Rotate `v` so that its largest-modulus entry is real positive.
/// Ties are broken toward the first index whose modulus is within a
/// relative 1e-9 of the maximum.
pub fn normalize_phase(v: &mut CVec) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    if let Some(pivot) = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)) {
        let phase = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

/// Eigenvalues of a general complex square matrix.
///
/// nalgebra's shifted QR can stall on some non-normal matrices, so the
/// iteration count is capped; on a stall the matrix is shifted by a multiple
/// of the identity, which changes the iterates but not the eigenvectors.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    let n = m.nrows();
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![m[(0, 0)]];
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let max_niter = 200 * n;
    for attempt in 0..12 {
        let sigma = Complex64::from_polar(0.25 * scale * attempt as f64, 0.7 * attempt as f64);
        let shifted = m + identity(n) * sigma;
        if let Some(schur) = shifted.try_schur(f64::EPSILON, max_niter) {
            return schur.unpack().1.diagonal().iter().map(|z| z - sigma).collect();
        }
    }
    let schur = m.clone().try_schur(1e-12, 100 * max_niter).expect("Schur iteration failed to converge");
    schur.unpack().1.diagonal().iter().cloned().collect()
}

pub fn spectral_radius(m: &CMat) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Full SVD `m = U diag(s) V*` with square `U` and `V`, obtained by zero
/// padding so that nalgebra's thin SVD yields complete bases.
pub struct FullSvd {
    pub u: CMat,
    pub singular: Vec<f64>,
    pub v: CMat,
}

pub fn full_svd(m: &CMat) -> FullSvd {
    let (r, c) = m.shape();
    let n = r.max(c);
    if n == 0 {
        return FullSvd { u: zeros(0, 0), singular: vec![], v: zeros(0, 0) };
    }
    let mut padded = zeros(n, n);
    padded.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = SVD::new(padded, true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V*").adjoint();
    // Padded rows/columns only contribute zero singular values, which sort last.
    let k = r.min(c);
    FullSvd {
        u: u.view((0, 0), (r, r)).into_owned(),
        singular: svd.singular_values.iter().take(k).cloned().collect(),
        v: v.view((0, 0), (c, c)).into_owned(),
    }
}

/// Orthonormal basis of `{x : m x = 0}` where singular values at or below
/// `threshold` count as zero.
pub fn null_space(m: &CMat, threshold: f64) -> CMat {
    let c = m.ncols();
    if c == 0 {
        return zeros(0, 0);
    }
    if m.nrows() == 0 {
        return identity(c);
    }
    let svd = full_svd(m);
    let rank = svd.singular.iter().filter(|&&s| s > threshold).count();
    svd.v.columns(rank, c - rank).into_owned()
}

/// Orthonormal basis of the column space, dropping singular values at or
/// below `threshold`.
pub fn range_basis(m: &CMat, threshold: f64) -> CMat {
    let r = m.nrows();
    if m.ncols() == 0 || r == 0 {
        return zeros(r, 0);
    }
    let svd = full_svd(m);
    let rank = svd.singular.iter().filter(|&&s| s > threshold).count();
    svd.u.columns(0, rank).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the span of `q`,
/// whose columns are assumed orthonormal.
pub fn orthonormal_complement(q: &CMat) -> CMat {
    let (m, r) = q.shape();
    if r == 0 {
        return identity(m);
    }
    if r >= m {
        return zeros(m, 0);
    }
    let svd = full_svd(&q.adjoint());
    svd.v.columns(r, m - r).into_owned()
}

/// The unitary (or isometric) polar factor `W V*` of `m = W S V*`.
pub fn polar_factor(m: &CMat) -> CMat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return zeros(r, c);
    }
    let svd = SVD::new(m.clone(), true, true);
    svd.u.expect("requested U") * svd.v_t.expect("requested V*")
}

/// `‖m* m − I‖`, the departure from having orthonormal columns.
pub fn isometry_defect(m: &CMat) -> f64 {
    op_norm(&(m.adjoint() * m - identity(m.ncols())))
}

/// `max(‖U*U − I‖, ‖UU* − I‖)`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    isometry_defect(u).max(isometry_defect(&u.adjoint()))
}

pub fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.iter().map(|b| b.ncols()).max().unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        assert!(b.nrows() == 0 || b.ncols() == cols, "vstack: column mismatch");
        if b.nrows() > 0 {
            out.view_mut((r0, 0), b.shape()).copy_from(*b);
        }
        r0 += b.nrows();
    }
    out
}

pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.iter().map(|b| b.nrows()).max().unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        assert!(b.ncols() == 0 || b.nrows() == rows, "hstack: row mismatch");
        if b.ncols() > 0 {
            out.view_mut((0, c0), b.shape()).copy_from(*b);
        }
        c0 += b.ncols();
    }
    out
}

/// Block-diagonal matrix `diag(a, b)`.
pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

/// Diagonal orthogonal projection onto coordinates `start..start+len` of `C^n`.
pub fn coordinate_projection(n: usize, start: usize, len: usize) -> CMat {
    let mut p = zeros(n, n);
    for i in start..start + len {
        p[(i, i)] = ONE;
    }
    p
}

/// `m^k` by repeated squaring.
pub fn matrix_power(m: &CMat, mut k: u64) -> CMat {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Smallest `k` in `[1, cap]` with `‖m^k‖ <= target`, or `None` when the
/// powers are still above the target at `k = cap`.
pub fn decay_length(m: &CMat, target: f64, cap: usize) -> Option<usize> {
    let mut power = m.clone();
    for k in 1..=cap {
        if op_norm(&power) <= target {
            return Some(k);
        }
        power = &power * m;
    }
    None
}
