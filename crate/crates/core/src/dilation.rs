//! The two dilation constructions and their verification.
//!
//! Finite-rank mode models `T` on the Hardy space over `𝔻^{n−1}` with
//! coefficients in `𝒟_{T̂_p}`: every `T_i` with `i ≠ p` becomes a shift and
//! `T_p` becomes multiplication by `Φ_p = τ_{U*}` in the slot of `T_q`.
//!
//! General mode starts from the product tuple `T̂_{pq}` and models both
//! `T_p` and `T_q` by degree-one symbols in slot `p`, whose product is
//! `z_p I`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::colligation::{self, AnalyticSymbol, UnitaryColligation};
use crate::error::{Error, Result};
use crate::hardy::{self, CanonicalEmbedding, HardyVector, ModelOperator};
use crate::linalg::{self, CMat};
use crate::operator_core::{self, OperatorTuple, ToleranceConfig};
use crate::par::{self, Execution};
use crate::poly::Polynomial;

/// Norm below which `‖T_q^{*m}‖` counts as negligible when sizing the
/// realization symbol's reach.
const SYMBOL_TAIL: f64 = 1e-14;
const SYMBOL_REACH_CAP: usize = 4096;
/// Boundary samples used for inner and product identities.
pub const BOUNDARY_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DilationMode {
    FiniteRank,
    General,
}

#[derive(Debug, Clone, Copy)]
pub struct DilationOptions {
    /// Minimum per-slot degree cutoff of the truncated model.
    pub base_degree: usize,
    pub max_cutoff: usize,
    /// Target for `‖T_j^{*(N_j+1)}‖` when choosing per-slot cutoffs.
    pub tail: f64,
    /// Upper bound on the number of coefficient cells of the box.
    pub box_budget: usize,
    /// Extra zero coordinates added to the colligation space.
    pub extra_pad: usize,
    pub exec: Execution,
}

impl Default for DilationOptions {
    fn default() -> Self {
        Self { base_degree: 8, max_cutoff: 2048, tail: 1e-5, box_budget: 1 << 20, extra_pad: 0, exec: Execution::default() }
    }
}

#[derive(Debug, Clone)]
pub struct DilationPackage {
    pub mode: DilationMode,
    pub p: usize,
    pub q: usize,
    pub embedding: CanonicalEmbedding,
    /// Model operator of every original coordinate.
    pub coordinate_map: Vec<ModelOperator>,
    pub colligation: UnitaryColligation,
    /// `(U_1, U_2)` realizing `Φ_p`, `Φ_q` in general mode.
    pub symbol_colligations: Option<(UnitaryColligation, UnitaryColligation)>,
    /// Model slot carrying the symbols.
    pub symbol_slot: usize,
    /// Truncation box of the model.
    pub extents: Vec<usize>,
    pub pad_dim: usize,
    /// General mode: `V` with `V D_{T̂pq} h = (0, D_{T̂q} h, D_{T̂p} T_p* h)`.
    pub isometry: Option<CMat>,
    /// General mode: the projection `P_p` onto the `𝒟_{T̂p}` summand.
    pub projection: Option<CMat>,
}

impl DilationPackage {
    pub fn vars(&self) -> usize {
        self.embedding.vars()
    }

    pub fn symbol(&self, i: usize) -> Option<&AnalyticSymbol> {
        match &self.coordinate_map[i] {
            ModelOperator::Symbol(phi) => Some(phi),
            ModelOperator::Shift(_) => None,
        }
    }

    /// Copy with `Φ_p` replaced by `−Φ_p`, for negative controls.
    pub fn with_negated_symbol(&self) -> Self {
        let mut out = self.clone();
        if let ModelOperator::Symbol(phi) = &self.coordinate_map[self.p] {
            out.coordinate_map[self.p] = ModelOperator::Symbol(phi.negate());
        }
        out
    }

    /// Per-slot reach of the model adjoints, the maximum over coordinates.
    fn demand(&self) -> Vec<usize> {
        let mut d = vec![0; self.vars()];
        for m in &self.coordinate_map {
            d[m.slot()] = d[m.slot()].max(m.degree());
        }
        d
    }
}

fn require_class(t: &OperatorTuple, p: usize, q: usize, tol: &ToleranceConfig) -> Result<()> {
    let r = operator_core::class_membership(t, p, q, tol)?;
    if r.in_class {
        return Ok(());
    }
    let mut reasons = vec![];
    if !r.is_contractive {
        reasons.push(format!("not contractive (max norm {:.3e})", r.max_norm));
    }
    if !r.is_commuting {
        reasons.push(format!("not commuting (commutator {:.3e})", r.max_commutator));
    }
    if !r.subtuple_p_pure {
        reasons.push("subtuple without T_p is not pure".to_string());
    }
    if !r.szego_positive {
        reasons.push(format!("defect not positive {:?}", r.szego_min_eig));
    }
    Err(Error::NotInClass { p, q, reason: reasons.join("; ") })
}

fn symbol_reach(tq: &CMat) -> usize {
    linalg::decay_length(&tq.adjoint(), SYMBOL_TAIL, SYMBOL_REACH_CAP).unwrap_or(SYMBOL_REACH_CAP)
}

/// Builds the finite-rank dilation. With `extra_pad > 0` the colligation
/// acts on `𝒟_{T̂p} ⊕ (𝒟_{T̂q} ⊕ C^pad)` and `Φ_p` is only expected to be
/// contractive.
pub fn build_finite_rank_dilation(
    t: &OperatorTuple,
    p: usize,
    q: usize,
    tol: &ToleranceConfig,
    opts: &DilationOptions,
) -> Result<DilationPackage> {
    require_class(t, p, q, tol)?;
    let tp_hat = operator_core::subtuple(t, p)?;
    let tq_hat = operator_core::subtuple(t, q)?;
    let dp = operator_core::defect_of(&tp_hat, tol)?.compressed();
    let dq = operator_core::defect_of(&tq_hat, tol)?.compressed();
    let (tp, tq) = (t.op(p), t.op(q));
    let x = linalg::vstack(&[&dp, &(&dq * tq.adjoint())]);
    let y = linalg::vstack(&[&(&dp * tp.adjoint()), &dq]);
    let comp = colligation::complete_to_unitary(&x, &y, tol, true, opts.extra_pad)?;
    let u = UnitaryColligation::new(comp.u, dp.nrows())?.with_pad(comp.pad_dim);

    let slot = q - 1;
    let phi = AnalyticSymbol::adjoint_transfer_of(&u, slot, symbol_reach(tq));
    let coordinate_map = (0..t.len())
        .map(|i| match i.cmp(&p) {
            std::cmp::Ordering::Less => ModelOperator::Shift(i),
            std::cmp::Ordering::Equal => ModelOperator::Symbol(phi.clone()),
            std::cmp::Ordering::Greater => ModelOperator::Shift(i - 1),
        })
        .collect();
    let extents = hardy::suggest_extents(&tp_hat, opts.base_degree, opts.max_cutoff, opts.tail, opts.box_budget);
    Ok(DilationPackage {
        mode: DilationMode::FiniteRank,
        p,
        q,
        embedding: CanonicalEmbedding::new(tp_hat, tol)?,
        coordinate_map,
        pad_dim: u.pad_dim(),
        colligation: u,
        symbol_colligations: None,
        symbol_slot: slot,
        extents,
        isometry: None,
        projection: None,
    })
}

/// Builds the general dilation on `𝓔 = 𝒟_pad ⊕ 𝒟_{T̂q} ⊕ 𝒟_{T̂p}`.
pub fn build_general_dilation(
    t: &OperatorTuple,
    p: usize,
    q: usize,
    tol: &ToleranceConfig,
    opts: &DilationOptions,
) -> Result<DilationPackage> {
    require_class(t, p, q, tol)?;
    let d = t.dim();
    let tpq = operator_core::product_tuple(t, p, q)?;
    let dp = operator_core::defect_of(&operator_core::subtuple(t, p)?, tol)?.compressed();
    let dq = operator_core::defect_of(&operator_core::subtuple(t, q)?, tol)?.compressed();
    let (tp, tq) = (t.op(p), t.op(q));
    let pad = opts.extra_pad;
    let (rq, rp) = (dq.nrows(), dp.nrows());
    let e = pad + rq + rp;
    let zero = linalg::zeros(pad, d);
    let x = linalg::vstack(&[&zero, &(&dq * tq.adjoint()), &dp]);
    let y = linalg::vstack(&[&zero, &dq, &(&dp * tp.adjoint())]);
    let comp = colligation::complete_to_unitary(&x, &y, tol, false, 0)?;
    let u = comp.u;

    // V is determined on ran D_{T̂pq}: V (D_pq h) = Y h.
    let pq_defect = operator_core::defect_of(&tpq, tol)?;
    let dpq = pq_defect.compressed();
    let v = if dpq.nrows() == 0 {
        linalg::zeros(e, 0)
    } else {
        &y * dpq.clone().pseudo_inverse(0.0).map_err(|e| Error::Input(e.to_string()))?
    };
    let mismatch = linalg::isometry_defect(&v);
    if mismatch > tol.residual.max(tol.mat) {
        return Err(Error::NotIsometric { mismatch });
    }

    let proj = linalg::coordinate_projection(e, pad + rq, rp);
    let perp = linalg::identity(e) - &proj;
    let u_star = u.adjoint();
    let phi_p = AnalyticSymbol::taylor(p, vec![&proj * &u_star, &perp * &u_star])?;
    let phi_q = AnalyticSymbol::taylor(p, vec![&u * &perp, &u * &proj])?;

    let iota_q = linalg::identity(e).columns(0, pad + rq).into_owned();
    let iota_p = linalg::identity(e).columns(pad + rq, rp).into_owned();
    let u1 = linalg::vstack(&[
        &linalg::hstack(&[&(&u * &proj), &(&u * &iota_q)]),
        &linalg::hstack(&[&iota_q.adjoint(), &linalg::zeros(pad + rq, pad + rq)]),
    ]);
    let u2 = linalg::vstack(&[
        &linalg::hstack(&[&(&perp * &u_star), &iota_p]),
        &linalg::hstack(&[&(iota_p.adjoint() * &u_star), &linalg::zeros(rp, rp)]),
    ]);

    let coordinate_map = (0..t.len())
        .map(|i| {
            if i == p {
                ModelOperator::Symbol(phi_p.clone())
            } else if i == q {
                ModelOperator::Symbol(phi_q.clone())
            } else if i < q {
                ModelOperator::Shift(i)
            } else {
                ModelOperator::Shift(i - 1)
            }
        })
        .collect();
    let extents = hardy::suggest_extents(&tpq, opts.base_degree, opts.max_cutoff, opts.tail, opts.box_budget);
    Ok(DilationPackage {
        mode: DilationMode::General,
        p,
        q,
        embedding: CanonicalEmbedding::with_isometry(tpq, tol, &v)?,
        coordinate_map,
        colligation: UnitaryColligation::new(u, e)?.with_pad(pad),
        symbol_colligations: Some((UnitaryColligation::new(u1, e)?, UnitaryColligation::new(u2, e)?)),
        symbol_slot: p,
        extents,
        pad_dim: pad,
        isometry: Some(v),
        projection: Some(proj),
    })
}

pub fn build_dilation(
    mode: DilationMode,
    t: &OperatorTuple,
    p: usize,
    q: usize,
    tol: &ToleranceConfig,
    opts: &DilationOptions,
) -> Result<DilationPackage> {
    match mode {
        DilationMode::FiniteRank => build_finite_rank_dilation(t, p, q, tol, opts),
        DilationMode::General => build_general_dilation(t, p, q, tol, opts),
    }
}

fn boundary_points(samples: usize) -> Vec<Complex64> {
    (0..samples).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / samples as f64)).collect()
}

/// `max_w max(‖Φ_p(w)Φ_q(w) − wI‖, ‖Φ_q(w)Φ_p(w) − wI‖)` over boundary samples.
pub fn bcl_residual(phi_p: &AnalyticSymbol, phi_q: &AnalyticSymbol, samples: usize) -> Result<f64> {
    let e = phi_p.dim();
    let mut worst: f64 = 0.0;
    for w in boundary_points(samples) {
        let (a, b) = (phi_p.eval(w)?, phi_q.eval(w)?);
        let target = linalg::identity(e) * w;
        worst = worst.max(linalg::op_norm(&(&a * &b - &target))).max(linalg::op_norm(&(&b * &a - &target)));
    }
    Ok(worst)
}

/// Unitarity of `U_1`, `U_2` and agreement of `A_i* + zC_i*B_i*` with the
/// symbols at boundary samples.
pub fn symbol_realization_residual(pkg: &DilationPackage, samples: usize) -> Result<Option<f64>> {
    let Some((u1, u2)) = &pkg.symbol_colligations else { return Ok(None) };
    let mut worst = u1.unitarity_defect().max(u2.unitarity_defect());
    for (ui, coord) in [(u1, pkg.p), (u2, pkg.q)] {
        let phi = pkg.symbol(coord).ok_or_else(|| Error::Input("missing symbol".into()))?;
        let (a, b, c) = (ui.a(), ui.b(), ui.c());
        for z in boundary_points(samples) {
            let form = a.adjoint() + c.adjoint() * b.adjoint() * z;
            worst = worst.max(linalg::op_norm(&(phi.eval(z)? - form)));
        }
    }
    Ok(Some(worst))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DilationReport {
    pub mode: DilationMode,
    /// Intertwining residual per original coordinate.
    pub coordinate_residuals: Vec<f64>,
    /// `‖compress(i) − T_i‖` per coordinate.
    pub compression_residuals: Vec<f64>,
    /// `max_h (‖h‖² − ‖Πh‖²_box)` over probes.
    pub isometry_residual: f64,
    /// Inner deviation of the symbols, or the contractivity excess when
    /// `contractive_only` is set.
    pub symbol_deviation: f64,
    pub contractive_only: bool,
    pub bcl_residual: Option<f64>,
    pub symbol_realization_residual: Option<f64>,
    pub unitarity_defect: f64,
    pub extents: Vec<usize>,
    pub passed: bool,
}

/// Runs every check of a package against `t`. `probes` are the columns
/// pushed through the intertwining identities.
pub fn verify_dilation(
    pkg: &DilationPackage,
    t: &OperatorTuple,
    probes: &CMat,
    tol: &ToleranceConfig,
    exec: Execution,
) -> Result<DilationReport> {
    if t.len() != pkg.coordinate_map.len() || probes.nrows() != t.dim() {
        return Err(Error::Input("package, tuple and probes are inconsistent".into()));
    }
    let big: Vec<usize> = pkg.extents.iter().zip(pkg.demand()).map(|(e, d)| e + d).collect();
    // `Π` is linear, so one embedding of the identity serves every probe batch.
    let g = pkg.embedding.embed(&linalg::identity(t.dim()), &big);
    let inter = intertwining_from(pkg, t, &g, probes, exec)?;
    let isometry_residual = {
        let v = g.resized(&pkg.extents).right_mul(probes);
        v.column_norms_sq()
            .iter()
            .zip(probes.column_iter())
            .map(|(s, col)| (col.norm_squared() - s).abs())
            .fold(0.0, f64::max)
    };
    let compression_residuals = par::map_indices(exec, t.len(), |i| {
        let terms = coordinate_terms(pkg, i)?;
        compress_from(pkg, &g, &terms).map(|m| linalg::op_norm(&(m - t.op(i))))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;

    let contractive_only = pkg.mode == DilationMode::FiniteRank && pkg.pad_dim > 0;
    let mut symbol_deviation: f64 = 0.0;
    for i in [pkg.p, pkg.q] {
        if let Some(phi) = pkg.symbol(i) {
            let dev = if contractive_only {
                colligation::contractivity_excess(phi, BOUNDARY_SAMPLES)?
            } else {
                colligation::inner_check(phi, BOUNDARY_SAMPLES)?
            };
            symbol_deviation = symbol_deviation.max(dev);
        }
    }
    let bcl = match (pkg.mode, pkg.symbol(pkg.p), pkg.symbol(pkg.q)) {
        (DilationMode::General, Some(a), Some(b)) => Some(bcl_residual(a, b, BOUNDARY_SAMPLES)?),
        _ => None,
    };
    let realization = symbol_realization_residual(pkg, BOUNDARY_SAMPLES)?;
    let unitarity_defect = pkg.colligation.unitarity_defect();

    let eps = tol.residual;
    let passed = inter.max_residual <= eps
        && compression_residuals.iter().all(|&r| r <= eps)
        && isometry_residual <= eps
        && symbol_deviation <= eps
        && bcl.is_none_or(|r| r <= eps)
        && realization.is_none_or(|r| r <= eps)
        && unitarity_defect <= tol.unitary.max(eps);
    Ok(DilationReport {
        mode: pkg.mode,
        coordinate_residuals: inter.residuals,
        compression_residuals,
        isometry_residual,
        symbol_deviation,
        contractive_only,
        bcl_residual: bcl,
        symbol_realization_residual: realization,
        unitarity_defect,
        extents: pkg.extents.clone(),
        passed,
    })
}

#[derive(Debug, Clone, Copy)]
pub enum CompressTarget<'a> {
    Coordinate(usize),
    Polynomial(&'a Polynomial),
}

/// `Π* X Π` on `H` for a model operator or a polynomial in the model
/// operators, evaluated through the adjoint: `(Π* X Π)* = Π* X* Π`. The
/// embedding box is enlarged by the reach of `X*`, so the truncation error
/// is the embedding residual of the package box.
pub fn compress(pkg: &DilationPackage, target: CompressTarget<'_>) -> Result<CMat> {
    let n = pkg.coordinate_map.len();
    let terms: Vec<(Vec<usize>, Complex64)> = match target {
        CompressTarget::Coordinate(i) => coordinate_terms(pkg, i)?,
        CompressTarget::Polynomial(poly) => {
            if poly.vars() != n {
                return Err(Error::Input(format!("polynomial has {} variables, tuple has {n}", poly.vars())));
            }
            poly.terms().to_vec()
        }
    };
    let mut demand = vec![0; pkg.vars()];
    for (k, _) in &terms {
        let mut need = vec![0; pkg.vars()];
        for (i, &e) in k.iter().enumerate() {
            let m = &pkg.coordinate_map[i];
            need[m.slot()] += e * m.degree();
        }
        for (a, b) in demand.iter_mut().zip(need) {
            *a = (*a).max(b);
        }
    }
    let big: Vec<usize> = pkg.extents.iter().zip(&demand).map(|(e, d)| e + d).collect();
    let g = pkg.embedding.embed(&linalg::identity(pkg.embedding.tuple().dim()), &big);
    compress_from(pkg, &g, &terms)
}

fn coordinate_terms(pkg: &DilationPackage, i: usize) -> Result<Vec<(Vec<usize>, Complex64)>> {
    let n = pkg.coordinate_map.len();
    if i >= n {
        return Err(Error::Input(format!("coordinate {i} out of range")));
    }
    let mut k = vec![0; n];
    k[i] = 1;
    Ok(vec![(k, linalg::ONE)])
}

/// `Π* X Π` from an embedding `g` of the identity on a box that covers the
/// package box plus the reach of every term.
fn compress_from(pkg: &DilationPackage, g: &HardyVector, terms: &[(Vec<usize>, Complex64)]) -> Result<CMat> {
    let mut acc = HardyVector::zeros(pkg.extents.clone(), g.rows(), g.cols());
    for (k, c) in terms {
        let mut w = g.clone();
        for (i, &e) in k.iter().enumerate() {
            for _ in 0..e {
                w = pkg.coordinate_map[i].apply_adjoint(&w)?;
            }
        }
        acc = acc.add(&w.resized(&pkg.extents).scale(c.conj()));
    }
    Ok(g.inner(&acc).adjoint())
}

/// Intertwining residuals `‖Π T_i* h − V_i* Π h‖` from an embedding `g` of
/// the identity.
fn intertwining_from(
    pkg: &DilationPackage,
    t: &OperatorTuple,
    g: &HardyVector,
    probes: &CMat,
    exec: Execution,
) -> Result<hardy::IntertwiningReport> {
    let base = g.right_mul(probes);
    let residuals = par::map_indices(exec, t.len(), |i| -> Result<f64> {
        let rhs = pkg.coordinate_map[i].apply_adjoint(&base)?;
        let lhs = g.resized(rhs.extents()).right_mul(&(t.op(i).adjoint() * probes));
        Ok(lhs.max_column_diff(&rhs))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let max_residual = residuals.iter().cloned().fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    Ok(hardy::IntertwiningReport { residuals, max_residual })
}

/// Intertwining residuals alone, for negative controls that do not need
/// the rest of [`verify_dilation`].
pub fn intertwining_residuals(pkg: &DilationPackage, t: &OperatorTuple, probes: &CMat, exec: Execution) -> Result<Vec<f64>> {
    let big: Vec<usize> = pkg.extents.iter().zip(pkg.demand()).map(|(e, d)| e + d).collect();
    let g = pkg.embedding.embed(&linalg::identity(t.dim()), &big);
    Ok(intertwining_from(pkg, t, &g, probes, exec)?.residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn scalars(v: &[f64]) -> OperatorTuple {
        OperatorTuple::from_scalars(&v.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>()).unwrap()
    }

    fn diag_tuple() -> OperatorTuple {
        let ds = [[0.3, -0.2, 0.1], [0.1, 0.4, -0.3], [0.2, 0.0, 0.35], [-0.25, 0.15, 0.3]];
        let ops = ds
            .iter()
            .enumerate()
            .map(|(i, d)| {
                CMat::from_diagonal(&linalg::CVec::from_iterator(
                    3,
                    d.iter().enumerate().map(|(j, &x)| c64(x, 0.05 * (i + j) as f64)),
                ))
            })
            .collect();
        OperatorTuple::new(ops).unwrap()
    }

    fn probes(d: usize) -> CMat {
        linalg::identity(d)
    }

    #[test]
    fn finite_rank_scalar_package() {
        let t = scalars(&[0.3, 0.4, 0.5]);
        let pkg = build_finite_rank_dilation(&t, 0, 1, &tol(), &DilationOptions::default()).unwrap();
        assert_eq!(pkg.vars(), 2);
        assert_eq!(pkg.symbol_slot, 0);
        assert!(matches!(pkg.coordinate_map[1], ModelOperator::Shift(0)));
        assert!(matches!(pkg.coordinate_map[2], ModelOperator::Shift(1)));
        let r = verify_dilation(&pkg, &t, &probes(1), &tol(), Execution::default()).unwrap();
        assert!(r.coordinate_residuals.iter().all(|&x| x <= 1e-9), "{r:?}");
        assert!(r.symbol_deviation <= 1e-8);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn general_scalar_package() {
        let t = scalars(&[0.3, 0.4, 0.5]);
        let pkg = build_general_dilation(&t, 0, 1, &tol(), &DilationOptions::default()).unwrap();
        let r = verify_dilation(&pkg, &t, &probes(1), &tol(), Execution::default()).unwrap();
        assert!(r.coordinate_residuals.iter().all(|&x| x <= 1e-9), "{r:?}");
        assert!(r.compression_residuals.iter().all(|&x| x <= 1e-8), "{r:?}");
        assert!(r.passed, "{r:?}");
        for i in [0, 1] {
            let phi = pkg.symbol(i).unwrap();
            assert_eq!(phi.effective_degree, 1);
            assert_eq!(phi.taylor_coeffs(1).len(), 2);
        }
        let (a, b) = (pkg.symbol(0).unwrap(), pkg.symbol(1).unwrap());
        for z in [c64(0.0, 0.0), c64(0.5, 0.0), c64(0.0, 0.7)] {
            let e = a.dim();
            let prod = a.eval(z).unwrap() * b.eval(z).unwrap();
            assert!(linalg::op_norm(&(prod - linalg::identity(e) * z)) < 1e-14);
        }
    }

    #[test]
    fn diagonal_tuple_all_coordinates() {
        let t = diag_tuple();
        for mode in [DilationMode::FiniteRank, DilationMode::General] {
            for (p, q) in [(0, 1), (1, 3), (0, 2)] {
                let pkg = build_dilation(mode, &t, p, q, &tol(), &DilationOptions::default()).unwrap();
                let r = verify_dilation(&pkg, &t, &probes(3), &tol(), Execution::default()).unwrap();
                assert!(r.coordinate_residuals.iter().all(|&x| x <= 1e-9), "{mode:?} {p} {q} {r:?}");
                assert!(r.passed, "{mode:?} {p} {q} {r:?}");
            }
        }
    }

    #[test]
    fn zero_tuple_has_zero_residuals() {
        let t = OperatorTuple::new(vec![linalg::zeros(2, 2); 3]).unwrap();
        for mode in [DilationMode::FiniteRank, DilationMode::General] {
            let pkg = build_dilation(mode, &t, 0, 2, &tol(), &DilationOptions::default()).unwrap();
            let r = verify_dilation(&pkg, &t, &probes(2), &tol(), Execution::Sequential).unwrap();
            assert!(r.coordinate_residuals.iter().all(|&x| x < 1e-15), "{r:?}");
            assert!(r.isometry_residual < 1e-15);
        }
    }

    #[test]
    fn negated_symbol_is_detected() {
        let t = scalars(&[0.3, 0.4, 0.5]);
        for mode in [DilationMode::FiniteRank, DilationMode::General] {
            let pkg = build_dilation(mode, &t, 0, 1, &tol(), &DilationOptions::default()).unwrap();
            let bad = pkg.with_negated_symbol();
            let r = verify_dilation(&bad, &t, &probes(1), &tol(), Execution::default()).unwrap();
            assert!(r.coordinate_residuals[0] >= 0.1, "{r:?}");
            assert!(!r.passed);
        }
    }

    #[test]
    fn compress_polynomials() {
        let t = diag_tuple();
        let pkg = build_general_dilation(&t, 1, 2, &tol(), &DilationOptions::default()).unwrap();
        let c = Polynomial::constant(4, c64(0.5, -1.0));
        let m = compress(&pkg, CompressTarget::Polynomial(&c)).unwrap();
        assert!(linalg::op_norm(&(m - linalg::identity(3) * c64(0.5, -1.0))) < 1e-8);
        for k in [vec![1, 1, 0, 0], vec![0, 2, 1, 0], vec![1, 0, 1, 2], vec![0, 1, 1, 0]] {
            let mono = Polynomial::monomial(k.clone(), linalg::ONE);
            let m = compress(&pkg, CompressTarget::Polynomial(&mono)).unwrap();
            assert!(linalg::op_norm(&(m - t.monomial(&k))) < 1e-7, "{k:?}");
        }
    }

    #[test]
    fn not_in_class_is_reported() {
        let t = scalars(&[0.5, 1.0, 0.3]);
        assert!(matches!(
            build_finite_rank_dilation(&t, 0, 1, &tol(), &DilationOptions::default()),
            Err(Error::NotInClass { .. })
        ));
    }

    #[test]
    fn padding_keeps_identities() {
        let t = scalars(&[0.3, 0.4, 0.5]);
        let opts = DilationOptions { extra_pad: 2, ..Default::default() };
        for mode in [DilationMode::FiniteRank, DilationMode::General] {
            let pkg = build_dilation(mode, &t, 0, 1, &tol(), &opts).unwrap();
            assert_eq!(pkg.pad_dim, 2);
            let r = verify_dilation(&pkg, &t, &probes(1), &tol(), Execution::default()).unwrap();
            assert!(r.coordinate_residuals.iter().all(|&x| x <= 1e-9), "{mode:?} {r:?}");
        }
    }
}
