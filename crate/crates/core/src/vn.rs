//! Polynomial suprema over the torus and over the boundary samples of a
//! distinguished variety, and the von Neumann comparisons built on them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::colligation::{self, AnalyticSymbol, SymbolForm, UnitaryColligation};
use crate::dilation::{self, DilationMode, DilationOptions, DilationPackage};
use crate::error::{Error, Result};
use crate::linalg;
use crate::operator_core::{OperatorTuple, ToleranceConfig};
use crate::par::{self, Execution};
use crate::poly::{horner, Polynomial};

pub fn grid_angles(g: usize) -> Vec<f64> {
    (0..g).map(|j| 2.0 * PI * j as f64 / g as f64).collect()
}

fn unit(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// `max |q|` with the leading coordinates fixed to `fixed` and the
/// remaining ones ranging over `free`. Uses the same specialization order
/// as [`Polynomial::eval_nested`], so single points agree bit for bit.
fn sup_nested(q: &Polynomial, fixed: &[Complex64], free: &[Complex64]) -> f64 {
    if q.vars() == 0 {
        return q.constant_value().norm();
    }
    if q.vars() == 1 {
        let coeffs = q.univariate_coeffs();
        return match fixed.first() {
            Some(&w) => horner(&coeffs, w).norm(),
            None => free.iter().map(|&w| horner(&coeffs, w).norm()).fold(0.0, nan_max),
        };
    }
    match fixed.split_first() {
        Some((&w, rest)) => sup_nested(&q.specialize_first(w), rest, free),
        None => free.iter().map(|&w| sup_nested(&q.specialize_first(w), &[], free)).fold(0.0, nan_max),
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// `max |p|` over the torus grid `θ_j = 2πj/G` in every variable.
pub fn torus_sup(p: &Polynomial, grid: usize, exec: Execution) -> f64 {
    let pts: Vec<Complex64> = grid_angles(grid).into_iter().map(unit).collect();
    if p.vars() <= 1 {
        return sup_nested(p, &[], &pts);
    }
    par::max_over(exec, pts.len(), |j| sup_nested(&p.specialize_first(pts[j]), &[], &pts))
}

/// Grid error allowance `L π √n / G` with `L` from [`Polynomial::lipschitz`].
pub fn slack(p: &Polynomial, grid: usize) -> f64 {
    p.lipschitz() * PI * (p.vars() as f64).sqrt() / grid as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarietyPart {
    U,
    C,
}

impl VarietyPart {
    pub fn label(self) -> &'static str {
        match self {
            VarietyPart::U => "u",
            VarietyPart::C => "c",
        }
    }
}

/// A boundary point `(λ, e^{iθ_1}, ...)` of the variety, possibly with
/// trailing angles left to the set's grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarietySample {
    pub part: VarietyPart,
    pub lambda: Complex64,
    pub thetas: Vec<f64>,
}

/// Boundary samples of a variety in `n` variables. Each sample fixes `λ`
/// and its listed angles; the angles it does not list range over
/// `trailing_angles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarietySampleSet {
    pub n: usize,
    pub grid: usize,
    pub samples: Vec<VarietySample>,
    pub trailing_angles: Vec<f64>,
}

impl VarietySampleSet {
    pub fn count(&self, part: VarietyPart) -> usize {
        self.samples.iter().filter(|s| s.part == part).count()
    }

    /// Every sample with all `n − 1` angles spelled out.
    pub fn expanded(&self) -> Vec<VarietySample> {
        let mut out = vec![];
        for s in &self.samples {
            let missing = (self.n - 1).saturating_sub(s.thetas.len());
            let mut combos: Vec<Vec<f64>> = vec![s.thetas.clone()];
            for _ in 0..missing {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        self.trailing_angles.iter().map(move |&a| {
                            let mut v = c.clone();
                            v.push(a);
                            v
                        })
                    })
                    .collect();
            }
            out.extend(combos.into_iter().map(|thetas| VarietySample { part: s.part, lambda: s.lambda, thetas }));
        }
        out
    }

    /// `max_c ||λ| − 1|` over the c-part.
    pub fn unimodularity_defect(&self) -> f64 {
        self.samples.iter().filter(|s| s.part == VarietyPart::C).map(|s| (s.lambda.norm() - 1.0).abs()).fold(0.0, nan_max)
    }
}

/// Boundary samples of the variety cut out by `det(zI − Φ(w)) = 0`, where
/// `Φ = τ_{U*}` in finite-rank form.
///
/// The constant block `A*` of `Φ` is split into its unitary part, which
/// contributes the constant eigenvalues of the u-part, and its completely
/// non-unitary part, whose reduced colligation supplies `Φ_c`; the c-part
/// samples are the eigenvalues of `Φ_c(e^{iθ})` on the `grid` angles.
pub fn variety_from_symbol(
    u: &UnitaryColligation,
    n: usize,
    grid: usize,
    trailing_grid: usize,
    tol: &ToleranceConfig,
) -> Result<VarietySampleSet> {
    if n < 2 {
        return Err(Error::Input("a variety sample set needs n >= 2".into()));
    }
    let u_star = u.adjoint();
    let dec = colligation::canonical_decomposition(&u_star.a(), tol)?;
    let reduced = colligation::reduced_colligation(&u_star, &dec.basis_c, tol)?;
    let phi_c = AnalyticSymbol {
        slot: 0,
        form: SymbolForm::Realization { a: reduced.a(), b: reduced.b(), c: reduced.c(), d: reduced.d() },
        effective_degree: 0,
    };
    let constant = linalg::eigenvalues(&dec.a_u);
    let mut samples = vec![];
    for theta in grid_angles(grid) {
        for &lambda in &constant {
            samples.push(VarietySample { part: VarietyPart::U, lambda, thetas: vec![theta] });
        }
        if reduced.outer() > 0 {
            let value = phi_c.eval_boundary(theta)?;
            for lambda in linalg::eigenvalues(&value) {
                samples.push(VarietySample { part: VarietyPart::C, lambda, thetas: vec![theta] });
            }
        }
    }
    let trailing_angles = if n > 2 { grid_angles(trailing_grid) } else { vec![] };
    Ok(VarietySampleSet { n, grid, samples, trailing_angles })
}

/// Variety of a finite-rank package with `(p, q) = (0, 1)`.
pub fn variety_for_package(pkg: &DilationPackage, grid: usize, trailing_grid: usize, tol: &ToleranceConfig) -> Result<VarietySampleSet> {
    if pkg.mode != DilationMode::FiniteRank || (pkg.p, pkg.q) != (0, 1) {
        return Err(Error::Input("variety sampling needs a finite-rank package with (p, q) = (1, 2)".into()));
    }
    variety_from_symbol(&pkg.colligation, pkg.coordinate_map.len(), grid, trailing_grid, tol)
}

/// `max |p(λ, e^{iθ_1}, ..., e^{iθ_{n−1}})|` over the sample set.
pub fn variety_sup(p: &Polynomial, set: &VarietySampleSet, exec: Execution) -> Result<f64> {
    if p.vars() != set.n {
        return Err(Error::Input(format!("polynomial has {} variables, variety lives in {}", p.vars(), set.n)));
    }
    if set.samples.is_empty() {
        return Err(Error::EmptyVariety);
    }
    let trailing: Vec<Complex64> = set.trailing_angles.iter().map(|&a| unit(a)).collect();
    Ok(par::max_over(exec, set.samples.len(), |i| {
        let s = &set.samples[i];
        let fixed: Vec<Complex64> = std::iter::once(s.lambda).chain(s.thetas.iter().map(|&a| unit(a))).collect();
        sup_nested(p, &fixed, &trailing)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VnMode {
    Classical,
    Refined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VnEntry {
    pub index: usize,
    pub op_norm: f64,
    pub torus_sup: f64,
    pub variety_sup: Option<f64>,
    pub slack: f64,
    /// `op_norm > torus_sup + slack`.
    pub violation: bool,
    /// `op_norm > variety_sup + slack`, refined mode only.
    pub refined_violation: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VnReport {
    pub grid: usize,
    pub mode: VnMode,
    pub notice: Option<String>,
    /// Number of u-part samples of the variety (refined mode).
    pub u_part_samples: Option<usize>,
    pub entries: Vec<VnEntry>,
    pub violations: usize,
}

/// Classical comparison for every polynomial, plus the variety comparison
/// when `mode` is refined. The refined path needs `(p, q) = (0, 1)`; any
/// other pair falls back to the classical comparison with a notice.
#[allow(clippy::too_many_arguments)]
pub fn vn_report(
    t: &OperatorTuple,
    p: usize,
    q: usize,
    polys: &[Polynomial],
    grid: usize,
    mode: VnMode,
    tol: &ToleranceConfig,
    exec: Execution,
) -> Result<VnReport> {
    let torus: Vec<f64> = polys.iter().map(|poly| torus_sup(poly, grid, exec)).collect();
    let (variety, notice) = match mode {
        VnMode::Refined if (p, q) == (0, 1) => {
            let pkg = dilation::build_finite_rank_dilation(t, 0, 1, tol, &DilationOptions::default())?;
            (Some(variety_for_package(&pkg, grid, grid, tol)?), None)
        }
        VnMode::Refined => (None, Some("refined comparison is only implemented for (p, q) = (1, 2); reporting the classical bound".to_string())),
        VnMode::Classical => (None, None),
    };
    let mut report = vn_report_cached(t, polys, &torus, variety.as_ref(), grid, tol, exec)?;
    report.notice = notice;
    Ok(report)
}

/// [`vn_report`] with precomputed torus suprema and variety samples, for
/// campaigns that reuse the same polynomials or tuple.
pub fn vn_report_cached(
    t: &OperatorTuple,
    polys: &[Polynomial],
    torus_sups: &[f64],
    variety: Option<&VarietySampleSet>,
    grid: usize,
    tol: &ToleranceConfig,
    exec: Execution,
) -> Result<VnReport> {
    if torus_sups.len() != polys.len() {
        return Err(Error::Input("one torus supremum per polynomial is required".into()));
    }
    let mut entries = Vec::with_capacity(polys.len());
    for (index, (poly, &torus_sup)) in polys.iter().zip(torus_sups).enumerate() {
        let op_norm = linalg::op_norm(&poly.eval_tuple(t)?);
        let s = slack(poly, grid);
        let variety_sup = variety.map(|v| variety_sup(poly, v, exec)).transpose()?;
        entries.push(VnEntry {
            index,
            op_norm,
            torus_sup,
            variety_sup,
            slack: s,
            violation: op_norm > torus_sup + s + tol.residual,
            refined_violation: variety_sup.map(|v| op_norm > v + s + tol.residual),
        });
    }
    let violations = entries.iter().filter(|e| e.violation || e.refined_violation == Some(true)).count();
    Ok(VnReport {
        grid,
        mode: if variety.is_some() { VnMode::Refined } else { VnMode::Classical },
        notice: None,
        u_part_samples: variety.map(|v| v.count(VarietyPart::U)),
        entries,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, CMat, ONE, ZERO};

    fn poly(n: usize, terms: &[(&[usize], f64)]) -> Polynomial {
        Polynomial::new(n, terms.iter().map(|(k, c)| (k.to_vec(), c64(*c, 0.0))).collect()).unwrap()
    }

    #[test]
    fn torus_sup_examples() {
        assert!((torus_sup(&poly(3, &[(&[1, 0, 0], 1.0)]), 5, Execution::default()) - 1.0).abs() < 1e-15);
        assert!((torus_sup(&poly(2, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]), 8, Execution::default()) - 2.0).abs() < 1e-15);
        let p = poly(3, &[(&[1, 1, 1], 1.0), (&[1, 0, 0], 1.0)]);
        assert!((torus_sup(&p, 16, Execution::Sequential) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn torus_grid_refinement_is_monotone() {
        let p = Polynomial::new(
            2,
            vec![(vec![1, 0], c64(0.3, 0.7)), (vec![0, 2], c64(-0.5, 0.1)), (vec![1, 1], c64(0.2, -0.4))],
        )
        .unwrap();
        let mut prev = 0.0;
        for g in [4, 8, 16, 32, 64] {
            let s = torus_sup(&p, g, Execution::default());
            assert!(s >= prev - 1e-15);
            prev = s;
        }
        let fine = torus_sup(&p, 4096, Execution::default());
        assert!(fine - torus_sup(&p, 16, Execution::default()) <= slack(&p, 16));
    }

    fn scalar_colligation(theta: f64) -> UnitaryColligation {
        let (s, c) = theta.sin_cos();
        UnitaryColligation::new(CMat::from_row_slice(2, 2, &[c64(c, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(c, 0.0)]), 1)
            .unwrap()
    }

    #[test]
    fn diagonal_variety_from_identity_symbol() {
        // U = [[0, 1], [1, 0]] gives τ_{U*}(w) = w.
        let u = UnitaryColligation::new(CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]), 1).unwrap();
        let set = variety_from_symbol(&u, 2, 8, 8, &ToleranceConfig::default()).unwrap();
        assert_eq!(set.count(VarietyPart::U), 0);
        for s in &set.samples {
            assert!((s.lambda - unit(s.thetas[0])).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_unitary_symbol_is_u_part() {
        let u = UnitaryColligation::new(linalg::identity(2), 1).unwrap();
        let set = variety_from_symbol(&u, 3, 6, 4, &ToleranceConfig::default()).unwrap();
        assert_eq!(set.count(VarietyPart::C), 0);
        assert_eq!(set.count(VarietyPart::U), 6);
        assert!(set.samples.iter().all(|s| (s.lambda - ONE).norm() < 1e-14));
        assert_eq!(set.expanded().len(), 24);
    }

    #[test]
    fn variety_sup_examples_and_domination() {
        let set = variety_from_symbol(&scalar_colligation(0.7), 3, 16, 16, &ToleranceConfig::default()).unwrap();
        assert!(set.unimodularity_defect() < 1e-12);
        let z1 = poly(3, &[(&[1, 0, 0], 1.0)]);
        assert!((variety_sup(&z1, &set, Execution::default()).unwrap() - 1.0).abs() < 1e-12);
        let c = Polynomial::constant(3, c64(0.0, -2.5));
        assert_eq!(variety_sup(&c, &set, Execution::default()).unwrap(), 2.5);
        let p = poly(3, &[(&[1, 1, 0], 1.0), (&[0, 0, 2], -1.0), (&[2, 0, 1], 0.5)]);
        let v = variety_sup(&p, &set, Execution::default()).unwrap();
        assert!(v <= torus_sup(&p, 16, Execution::default()) + slack(&p, 16));
    }

    #[test]
    fn compact_and_expanded_sets_agree_exactly() {
        let set = variety_from_symbol(&scalar_colligation(1.1), 4, 8, 5, &ToleranceConfig::default()).unwrap();
        let flat = VarietySampleSet { samples: set.expanded(), trailing_angles: vec![], ..set.clone() };
        let p = poly(4, &[(&[1, 1, 0, 1], 0.7), (&[0, 2, 1, 0], -1.0), (&[1, 0, 0, 3], 0.25)]);
        assert_eq!(
            variety_sup(&p, &set, Execution::default()).unwrap(),
            variety_sup(&p, &flat, Execution::Sequential).unwrap()
        );
    }

    #[test]
    fn empty_variety_is_an_error() {
        let set = VarietySampleSet { n: 3, grid: 4, samples: vec![], trailing_angles: grid_angles(4) };
        assert!(matches!(variety_sup(&poly(3, &[(&[0, 0, 0], 1.0)]), &set, Execution::default()), Err(Error::EmptyVariety)));
    }

    #[test]
    fn scalar_tuple_report() {
        let t = OperatorTuple::from_scalars(&[c64(0.3, 0.0), c64(0.4, 0.0), c64(0.5, 0.0)]).unwrap();
        let polys = vec![poly(3, &[(&[1, 0, 0], 1.0)]), poly(3, &[(&[1, 1, 0], 1.0), (&[0, 0, 2], -1.0)])];
        let tol = ToleranceConfig::default();
        let r = vn_report(&t, 0, 1, &polys, 64, VnMode::Refined, &tol, Execution::default()).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.u_part_samples, Some(0));
        assert!((r.entries[0].op_norm - 0.3).abs() < 1e-15 && r.entries[0].torus_sup == 1.0);
        assert!(r.entries.iter().all(|e| e.variety_sup.is_some()));
        let r = vn_report(&t, 0, 2, &polys, 64, VnMode::Refined, &tol, Execution::default()).unwrap();
        assert!(r.notice.is_some() && r.mode == VnMode::Classical);
    }
}
