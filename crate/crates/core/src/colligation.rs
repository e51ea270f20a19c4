//! Block unitaries `U = [A B; C D]`, their transfer functions
//! `τ_U(z) = A + zB(I − zD)⁻¹C`, unitary completion of partial isometries,
//! and the unitary / completely non-unitary splitting of a contraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};
use crate::operator_core::{OperatorTuple, ToleranceConfig};

/// Pivot threshold below which `I − zD` counts as singular.
const SINGULAR_PIVOT: f64 = 1e-12;
/// Angle nudge applied to boundary samples that hit a pole.
const BOUNDARY_NUDGE: f64 = 1e-9;

/// A square block unitary on `𝓔 ⊕ 𝓕`, with `outer = dim 𝓔`.
#[derive(Debug, Clone)]
pub struct UnitaryColligation {
    u: CMat,
    outer: usize,
    pad_dim: usize,
}

impl UnitaryColligation {
    pub fn new(u: CMat, outer: usize) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::Input(format!("colligation matrix is {}x{}, not square", u.nrows(), u.ncols())));
        }
        if outer > u.nrows() {
            return Err(Error::Input(format!("outer block {outer} exceeds size {}", u.nrows())));
        }
        Ok(Self { u, outer, pad_dim: 0 })
    }

    pub fn with_pad(mut self, pad_dim: usize) -> Self {
        self.pad_dim = pad_dim;
        self
    }

    pub fn matrix(&self) -> &CMat {
        &self.u
    }

    pub fn outer(&self) -> usize {
        self.outer
    }

    pub fn inner(&self) -> usize {
        self.u.nrows() - self.outer
    }

    pub fn pad_dim(&self) -> usize {
        self.pad_dim
    }

    pub fn a(&self) -> CMat {
        self.u.view((0, 0), (self.outer, self.outer)).into_owned()
    }

    pub fn b(&self) -> CMat {
        self.u.view((0, self.outer), (self.outer, self.inner())).into_owned()
    }

    pub fn c(&self) -> CMat {
        self.u.view((self.outer, 0), (self.inner(), self.outer)).into_owned()
    }

    pub fn d(&self) -> CMat {
        self.u.view((self.outer, self.outer), (self.inner(), self.inner())).into_owned()
    }

    /// `U*` with the same partition; its blocks are `[A* C*; B* D*]`.
    pub fn adjoint(&self) -> Self {
        Self { u: self.u.adjoint(), outer: self.outer, pad_dim: self.pad_dim }
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.u)
    }

    /// `τ_U(z)` by a direct solve with `I − zD`.
    pub fn transfer_eval(&self, z: Complex64) -> Result<CMat> {
        realization_eval(&self.a(), &self.b(), &self.c(), &self.d(), z)
    }

    /// `‖(I − τ*τ) − (1−|z|²) C*(I − z̄D*)⁻¹(I − zD)⁻¹C‖`.
    pub fn schur_identity_residual(&self, z: Complex64) -> Result<f64> {
        let tau = self.transfer_eval(z)?;
        let x = solve_shifted(&self.d(), z, &self.c())?;
        let lhs = linalg::identity(self.outer) - tau.adjoint() * &tau;
        let rhs = x.adjoint() * &x * c64(1.0 - z.norm_sqr(), 0.0);
        Ok(linalg::op_norm(&(lhs - rhs)))
    }

    /// Taylor coefficients `[A, BC, BDC, ..., BD^{m−1}C]` of `τ_U`, `m + 1` in total.
    pub fn transfer_taylor(&self, order: usize) -> Vec<CMat> {
        realization_taylor(&self.a(), &self.b(), &self.c(), &self.d(), order)
    }
}

/// `(I − zD)⁻¹ X`, rejecting near-singular `I − zD`.
fn solve_shifted(d: &CMat, z: Complex64, x: &CMat) -> Result<CMat> {
    let k = d.nrows();
    if k == 0 {
        return Ok(linalg::zeros(0, x.ncols()));
    }
    let m = linalg::identity(k) - d * z;
    let smallest = m.clone().singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest < SINGULAR_PIVOT {
        return Err(Error::BoundarySingular(z));
    }
    m.lu().solve(x).ok_or(Error::BoundarySingular(z))
}

fn realization_eval(a: &CMat, b: &CMat, c: &CMat, d: &CMat, z: Complex64) -> Result<CMat> {
    if d.nrows() == 0 {
        return Ok(a.clone());
    }
    Ok(a + b * solve_shifted(d, z, c)? * z)
}

fn realization_taylor(a: &CMat, b: &CMat, c: &CMat, d: &CMat, order: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(order + 1);
    out.push(a.clone());
    let mut dc = c.clone();
    for _ in 0..order {
        out.push(b * &dc);
        dc = d * &dc;
    }
    out
}

/// Result of [`complete_to_unitary`].
#[derive(Debug, Clone)]
pub struct Completion {
    pub u: CMat,
    /// Zero coordinates appended to realize the map.
    pub pad_dim: usize,
    /// Dimension of the span of the domain vectors.
    pub rank: usize,
    /// `max_j ‖U x_j − y_j‖`.
    pub fit_residual: f64,
}

/// Extends the partial isometry `x_j ↦ y_j` (columns of `x` and `y`) to a
/// unitary.
///
/// On the span of the domain vectors `U = Y X⁺`; on the orthogonal
/// complement `U` is the polar factor of the compression between the
/// domain and range complements, which does not depend on the bases chosen
/// for them. When `x` and `y` live in spaces of different dimension, the
/// smaller side is zero-padded if `allow_padding` is set. `extra_pad`
/// appends further zero coordinates to both sides.
pub fn complete_to_unitary(
    x: &CMat,
    y: &CMat,
    tol: &ToleranceConfig,
    allow_padding: bool,
    extra_pad: usize,
) -> Result<Completion> {
    if x.ncols() != y.ncols() {
        return Err(Error::Input(format!("{} domain vectors but {} images", x.ncols(), y.ncols())));
    }
    let gram_x = x.adjoint() * x;
    let mismatch = linalg::op_norm(&(&gram_x - y.adjoint() * y));
    let scale = 1.0f64.max(linalg::op_norm(&gram_x));
    if mismatch > tol.mat * scale {
        return Err(Error::NotIsometric { mismatch });
    }
    let deficit = x.nrows().abs_diff(y.nrows());
    if deficit > 0 && !allow_padding {
        return Err(Error::NeedsPadding { deficit });
    }
    let ambient = x.nrows().max(y.nrows()) + extra_pad;
    let pad_dim = ambient - x.nrows().min(y.nrows());
    let lift = |m: &CMat| {
        let mut out = linalg::zeros(ambient, m.ncols());
        out.view_mut((0, 0), m.shape()).copy_from(m);
        out
    };
    let (x, y) = (lift(x), lift(y));

    let svd = linalg::full_svd(&x);
    let smax = svd.singular.first().cloned().unwrap_or(0.0);
    let rank = svd.singular.iter().filter(|&&s| s > tol.rank * smax && s > 0.0).count();
    let qx = svd.u.columns(0, rank).into_owned();
    let mut images = &y * svd.v.columns(0, rank);
    for (j, s) in svd.singular[..rank].iter().enumerate() {
        images.column_mut(j).scale_mut(1.0 / s);
    }
    let qy = linalg::polar_factor(&images);
    let mut u = &qy * qx.adjoint();
    if rank < ambient {
        let cx = linalg::orthonormal_complement(&qx);
        let cy = linalg::orthonormal_complement(&qy);
        u += &cy * linalg::polar_factor(&(cy.adjoint() * &cx)) * cx.adjoint();
    }
    let fit_residual = (&u * &x - &y).column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(Completion { u, pad_dim, rank, fit_residual })
}

/// Representation of a one-variable symbol.
#[derive(Debug, Clone)]
pub enum SymbolForm {
    /// `Φ(z) = Σ c_m z^m`, finitely many terms.
    Taylor(Vec<CMat>),
    /// `Φ(z) = a + z b (I − z d)⁻¹ c`, with Taylor coefficients `a, bc, bdc, ...`.
    Realization { a: CMat, b: CMat, c: CMat, d: CMat },
}

/// A matrix-valued analytic function of the polydisc variable `slot`.
#[derive(Debug, Clone)]
pub struct AnalyticSymbol {
    pub slot: usize,
    pub form: SymbolForm,
    /// Number of coefficients past the constant term that matter when the
    /// adjoint multiplication is applied to truncated data: `len − 1` for a
    /// Taylor list, a decay length for a realization.
    pub effective_degree: usize,
}

impl AnalyticSymbol {
    pub fn taylor(slot: usize, coeffs: Vec<CMat>) -> Result<Self> {
        let first = coeffs.first().ok_or_else(|| Error::Input("symbol needs at least one coefficient".into()))?;
        let e = first.nrows();
        if coeffs.iter().any(|c| c.nrows() != e || c.ncols() != e) {
            return Err(Error::Input("symbol coefficients must be square of a common size".into()));
        }
        let effective_degree = coeffs.len() - 1;
        Ok(Self { slot, form: SymbolForm::Taylor(coeffs), effective_degree })
    }

    /// `τ_U` on slot `slot`.
    pub fn transfer_of(u: &UnitaryColligation, slot: usize, effective_degree: usize) -> Self {
        Self {
            slot,
            form: SymbolForm::Realization { a: u.a(), b: u.b(), c: u.c(), d: u.d() },
            effective_degree,
        }
    }

    /// `τ_{U*}(z) = A* + zC*(I − zD*)⁻¹B*` on slot `slot`.
    pub fn adjoint_transfer_of(u: &UnitaryColligation, slot: usize, effective_degree: usize) -> Self {
        Self::transfer_of(&u.adjoint(), slot, effective_degree)
    }

    /// Size of the (square) values.
    pub fn dim(&self) -> usize {
        match &self.form {
            SymbolForm::Taylor(c) => c[0].nrows(),
            SymbolForm::Realization { a, .. } => a.nrows(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<CMat> {
        match &self.form {
            SymbolForm::Taylor(coeffs) => {
                let mut acc = coeffs.last().expect("non-empty").clone();
                for c in coeffs.iter().rev().skip(1) {
                    acc = acc * z + c;
                }
                Ok(acc)
            }
            SymbolForm::Realization { a, b, c, d } => realization_eval(a, b, c, d, z),
        }
    }

    /// Boundary evaluation at `e^{iθ}`, nudging the angle by `1e-9` when
    /// the point hits a pole.
    pub fn eval_boundary(&self, theta: f64) -> Result<CMat> {
        match self.eval(Complex64::from_polar(1.0, theta)) {
            Err(Error::BoundarySingular(_)) => self.eval(Complex64::from_polar(1.0, theta + BOUNDARY_NUDGE)),
            other => other,
        }
    }

    /// First `order + 1` Taylor coefficients (zero-padded for short lists).
    pub fn taylor_coeffs(&self, order: usize) -> Vec<CMat> {
        match &self.form {
            SymbolForm::Taylor(coeffs) => {
                let e = self.dim();
                (0..=order).map(|m| coeffs.get(m).cloned().unwrap_or_else(|| linalg::zeros(e, e))).collect()
            }
            SymbolForm::Realization { a, b, c, d } => realization_taylor(a, b, c, d, order),
        }
    }

    /// `−Φ`, used as a corrupted symbol in negative controls.
    pub fn negate(&self) -> Self {
        let minus = c64(-1.0, 0.0);
        let form = match &self.form {
            SymbolForm::Taylor(coeffs) => SymbolForm::Taylor(coeffs.iter().map(|c| c * minus).collect()),
            SymbolForm::Realization { a, b, c, d } => {
                SymbolForm::Realization { a: a * minus, b: b * minus, c: c.clone(), d: d.clone() }
            }
        };
        Self { slot: self.slot, form, effective_degree: self.effective_degree }
    }
}

/// `max_θ ‖Φ(e^{iθ})*Φ(e^{iθ}) − I‖` over `samples` equally spaced angles.
pub fn inner_check(phi: &AnalyticSymbol, samples: usize) -> Result<f64> {
    let e = phi.dim();
    let mut worst: f64 = 0.0;
    for j in 0..samples {
        let v = phi.eval_boundary(2.0 * PI * j as f64 / samples as f64)?;
        worst = worst.max(linalg::op_norm(&(v.adjoint() * &v - linalg::identity(e))));
    }
    Ok(worst)
}

/// `sup_θ ‖Φ(e^{iθ})‖ − 1` over the sampled angles, the contractivity
/// margin reported when a symbol is only expected to be contractive.
pub fn contractivity_excess(phi: &AnalyticSymbol, samples: usize) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for j in 0..samples {
        let v = phi.eval_boundary(2.0 * PI * j as f64 / samples as f64)?;
        worst = worst.max(linalg::op_norm(&v) - 1.0);
    }
    Ok(worst)
}

/// Splitting of a contraction into its unitary and completely
/// non-unitary parts.
#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    pub basis_u: CMat,
    pub basis_c: CMat,
    pub a_u: CMat,
    pub a_c: CMat,
}

/// Largest reducing subspace on which `a` is unitary.
///
/// Starts from `ker(I − A*A) ∩ ker(I − AA*)` and repeatedly keeps the
/// vectors of the current subspace `S` that `A` and `A*` map back into
/// `S`. The iteration stops once the dimension no longer drops.
pub fn canonical_decomposition(a: &CMat, tol: &ToleranceConfig) -> Result<CanonicalDecomposition> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Input("canonical decomposition needs a square matrix".into()));
    }
    let norm = linalg::op_norm(a);
    if norm > 1.0 + tol.contraction {
        return Err(Error::Input(format!("matrix is not a contraction (norm {norm})")));
    }
    let threshold = tol.residual;
    let id = linalg::identity(n);
    let defects = linalg::vstack(&[&(&id - a.adjoint() * a), &(&id - a * a.adjoint())]);
    let mut q = linalg::null_space(&defects, threshold);
    if n == 0 {
        q = linalg::zeros(0, 0);
    }
    for _ in 0..=n {
        if q.ncols() == 0 {
            break;
        }
        let proj_out = &id - &q * q.adjoint();
        let leak = linalg::vstack(&[&(&proj_out * a * &q), &(&proj_out * a.adjoint() * &q)]);
        let keep = linalg::null_space(&leak, threshold);
        if keep.ncols() == q.ncols() {
            break;
        }
        q = &q * keep;
    }
    let basis_u = if q.ncols() == 0 { linalg::zeros(n, 0) } else { q };
    let basis_c = linalg::orthonormal_complement(&basis_u);
    Ok(CanonicalDecomposition {
        a_u: basis_u.adjoint() * a * &basis_u,
        a_c: basis_c.adjoint() * a * &basis_c,
        basis_u,
        basis_c,
    })
}

/// `U' = [Q_c* A Q_c, Q_c* B; C Q_c, D]`, the colligation left after
/// removing the unitary part of the `A` block.
pub fn reduced_colligation(u: &UnitaryColligation, basis_c: &CMat, tol: &ToleranceConfig) -> Result<UnitaryColligation> {
    let (a, b, c, d) = (u.a(), u.b(), u.c(), u.d());
    let top = linalg::hstack(&[&(basis_c.adjoint() * &a * basis_c), &(basis_c.adjoint() * &b)]);
    let bottom = linalg::hstack(&[&(&c * basis_c), &d]);
    let m = linalg::vstack(&[&top, &bottom]);
    let deviation = linalg::unitarity_defect(&m);
    if deviation > tol.unitary.max(tol.residual) {
        return Err(Error::Decomposition(deviation));
    }
    UnitaryColligation::new(m, basis_c.ncols())
}

/// `max_z ‖[Q_u Q_c]* τ_U(z) [Q_u Q_c] − diag(A_u, τ_{U'}(z))‖`.
pub fn block_diagonal_residual(
    u: &UnitaryColligation,
    dec: &CanonicalDecomposition,
    reduced: &UnitaryColligation,
    points: &[Complex64],
) -> Result<f64> {
    let w = linalg::hstack(&[&dec.basis_u, &dec.basis_c]);
    let mut worst: f64 = 0.0;
    for &z in points {
        let lhs = w.adjoint() * u.transfer_eval(z)? * &w;
        let rhs = linalg::block_diag(&dec.a_u, &reduced.transfer_eval(z)?);
        worst = worst.max(linalg::op_norm(&(lhs - rhs)));
    }
    Ok(worst)
}

/// Residual of the truncated series representation of `D_p T_p*`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeriesCheck {
    pub residual: f64,
    /// `‖D_q‖ · ‖T_q^{*(m+2)}‖`, which dominates the dropped remainder.
    pub tail_bound: f64,
}

/// `‖D_p T_p* − (A D_p + Σ_{i=0}^{m} B D^i C D_p T_q^{*(i+1)})‖`, where
/// `D_p`, `D_q` are the compressed defect roots of `T̂_p`, `T̂_q` and `u`
/// acts on `𝒟_p ⊕ 𝒟_q`.
pub fn defect_series_check(
    t: &OperatorTuple,
    p: usize,
    q: usize,
    dp: &CMat,
    dq: &CMat,
    u: &UnitaryColligation,
    order: usize,
) -> SeriesCheck {
    let (a, b, c, d) = (u.a(), u.b(), u.c(), u.d());
    let tp_star = t.op(p).adjoint();
    let tq_star = t.op(q).adjoint();
    let mut approx = &a * dp;
    let mut power = tq_star.clone();
    let mut d_i = linalg::identity(d.nrows());
    for _ in 0..=order {
        approx += &b * &d_i * &c * dp * &power;
        d_i = &d_i * &d;
        power = &power * &tq_star;
    }
    let residual = linalg::op_norm(&(dp * tp_star - approx));
    SeriesCheck { residual, tail_bound: linalg::op_norm(dq) * linalg::op_norm(&power) }
}
