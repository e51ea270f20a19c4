//! Seeded random tuples, unitaries, contractions and polynomials.
//!
//! Every generator draws from a ChaCha8 stream, so a seed pins the output
//! on every platform.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::colligation::{AnalyticSymbol, UnitaryColligation};
use crate::error::{Error, Result};
use crate::hardy::{HardyVector, ModelOperator};
use crate::linalg::{self, c64, CMat};
use crate::operator_core::OperatorTuple;
use crate::poly::Polynomial;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniform point of the disc of radius `r`.
pub fn uniform_disc<R: Rng + ?Sized>(rng: &mut R, r: f64) -> Complex64 {
    let radius = r * rng.random::<f64>().sqrt();
    Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * rng.random::<f64>())
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(e: usize, rng: &mut R) -> CMat {
    if e == 0 {
        return linalg::zeros(0, 0);
    }
    let qr = gaussian_matrix(e, e, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..e {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { linalg::ONE };
        for i in 0..e {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Orthogonal projection onto a Haar-random subspace of dimension `rank`.
pub fn random_projection<R: Rng + ?Sized>(e: usize, rank: usize, rng: &mut R) -> CMat {
    let u = random_unitary(e, rng);
    let cols = u.columns(0, rank.min(e)).into_owned();
    &cols * cols.adjoint()
}

/// Diagonal tuple with entries uniform in the disc of radius `rho_max`.
pub fn gen_diagonal(n: usize, dim: usize, rho_max: f64, seed: u64) -> Result<OperatorTuple> {
    if !(0.0..1.0).contains(&rho_max) {
        return Err(Error::Input(format!("rho_max must lie in [0, 1), got {rho_max}")));
    }
    if n == 0 || dim == 0 {
        return Err(Error::Input("n and dim must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let ops = (0..n)
        .map(|_| CMat::from_diagonal(&linalg::CVec::from_fn(dim, |_, _| uniform_disc(&mut rng, rho_max))))
        .collect();
    OperatorTuple::new(ops)
}

/// Model tuple together with the data it was built from.
#[derive(Debug, Clone)]
pub struct ModelCompression {
    pub tuple: OperatorTuple,
    pub unitary: CMat,
    pub projection: CMat,
}

/// Compression of the model `n`-tuple to polynomials of degree at most
/// `degree` in each of the `n − 1` variables, with coefficients in `C^e`.
///
/// `Φ_p = (P + zP^⊥)U*` and `Φ_q = U(P^⊥ + zP)` act in slot `p`; the other
/// coordinates are shifts, with `T_i` for `i > q` in slot `i − 1`.
pub fn model_compression_from(n: usize, p: usize, q: usize, degree: usize, u: &CMat, proj: &CMat) -> Result<OperatorTuple> {
    let cells = box_cells(n.saturating_sub(1), degree);
    model_compression_on(n, p, q, &cells, u, proj)
}

/// Multi-indices with every entry at most `degree`, last slot fastest.
pub fn box_cells(vars: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut cells: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..vars {
        cells = cells.into_iter().flat_map(|c| (0..=degree).map(move |k| [c.clone(), vec![k]].concat())).collect();
    }
    cells
}

/// Multi-indices of total degree at most `degree`, in lexicographic order.
pub fn total_degree_cells(vars: usize, degree: usize) -> Vec<Vec<usize>> {
    box_cells(vars, degree).into_iter().filter(|c| c.iter().sum::<usize>() <= degree).collect()
}

/// Compression of the model tuple to the span of `z^k C^e` for `k` in
/// `cells`. The set must be closed under lowering any entry, which makes
/// the span invariant under every model adjoint, so the compressions
/// commute. Row block `i` of each matrix belongs to `cells[i]`.
pub fn model_compression_on(n: usize, p: usize, q: usize, cells: &[Vec<usize>], u: &CMat, proj: &CMat) -> Result<OperatorTuple> {
    if n < 3 || p >= q || q >= n {
        return Err(Error::Input(format!("need n >= 3 and p < q < n, got n = {n}, p = {p}, q = {q}")));
    }
    let e = u.nrows();
    if e == 0 || u.shape() != proj.shape() || u.ncols() != e {
        return Err(Error::Input("unitary and projection must be square of the same positive size".into()));
    }
    let vars = n - 1;
    if cells.is_empty() || cells.iter().any(|c| c.len() != vars) {
        return Err(Error::Input(format!("cells must be non-empty multi-indices of length {vars}")));
    }
    let lookup: std::collections::HashMap<&[usize], usize> = cells.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
    for c in cells {
        for j in 0..vars {
            if c[j] > 0 {
                let mut lower = c.clone();
                lower[j] -= 1;
                if !lookup.contains_key(lower.as_slice()) {
                    return Err(Error::Input(format!("cell set is not closed under lowering at {c:?}")));
                }
            }
        }
    }
    let perp = linalg::identity(e) - proj;
    let u_star = u.adjoint();
    let phi_p = AnalyticSymbol::taylor(p, vec![proj * &u_star, &perp * &u_star])?;
    let phi_q = AnalyticSymbol::taylor(p, vec![u * &perp, u * proj])?;
    let extents: Vec<usize> = (0..vars).map(|j| cells.iter().map(|c| c[j]).max().unwrap_or(0) + 1).collect();
    let dim = cells.len() * e;
    let mut basis = HardyVector::zeros(extents, e, dim);
    for (i, c) in cells.iter().enumerate() {
        let mut block = linalg::zeros(e, dim);
        block.view_mut((0, i * e), (e, e)).copy_from(&linalg::identity(e));
        basis.set_coeff(c, block)?;
    }
    let models: Vec<ModelOperator> = (0..n)
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
    let ops = models
        .iter()
        .map(|m| {
            let image = m.apply(&basis)?;
            let mut t = linalg::zeros(dim, dim);
            for (i, c) in cells.iter().enumerate() {
                t.view_mut((i * e, 0), (e, dim)).copy_from(&image.coeff(c));
            }
            Ok(t)
        })
        .collect::<Result<Vec<CMat>>>()?;
    OperatorTuple::new(ops)
}

/// Model compression with a Haar unitary and a random projection of the
/// given rank.
#[allow(clippy::too_many_arguments)]
pub fn gen_model_compression_with<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    q: usize,
    e: usize,
    degree: usize,
    rank: usize,
    rng: &mut R,
) -> Result<ModelCompression> {
    if degree == 0 || e == 0 || rank > e {
        return Err(Error::Input("need degree >= 1, e >= 1 and rank <= e".into()));
    }
    let unitary = random_unitary(e, rng);
    let projection = random_projection(e, rank, rng);
    let tuple = model_compression_from(n, p, q, degree, &unitary, &projection)?;
    Ok(ModelCompression { tuple, unitary, projection })
}

/// Model compression with the projection rank drawn uniformly from `1..=e`.
/// Rank zero makes `Φ_q` a constant unitary, and the tuple then leaves the
/// class.
pub fn gen_model_compression(n: usize, p: usize, q: usize, e: usize, degree: usize, seed: u64) -> Result<OperatorTuple> {
    let mut rng = rng_from_seed(seed);
    let rank = rng.random_range(1..=e.max(1));
    Ok(gen_model_compression_with(n, p, q, e, degree, rank, &mut rng)?.tuple)
}

/// Random contraction of size `dim` with a planted unitary part of random
/// size, conjugated by a Haar unitary. Returns the matrix and the planted
/// unitary dimension.
pub fn random_contraction_with_unitary_part<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> (CMat, usize) {
    let k = rng.random_range(0..=dim);
    let unitary = random_unitary(k, rng);
    let rest = dim - k;
    // A 1x1 Jordan block would be unitary.
    let kind = if rest <= 1 { 1 } else { rng.random_range(0..3) };
    let cnu = match kind {
        // Strict contraction.
        0 => {
            let g = gaussian_matrix(rest, rest, rng);
            let norm = linalg::op_norm(&g).max(1e-300);
            g * c64(rng.random_range(0.2..0.95) / norm, 0.0)
        }
        // Truncated shift: isometric on all but one vector, yet c.n.u.
        1 => {
            let mut s = linalg::zeros(rest, rest);
            for i in 1..rest {
                s[(i, i - 1)] = linalg::ONE;
            }
            s
        }
        // Jordan-type block with a unimodular eigenvalue, scaled into a contraction.
        _ => {
            let lam = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let mut j = linalg::identity(rest) * lam;
            for i in 1..rest {
                j[(i - 1, i)] = linalg::ONE;
            }
            let norm = linalg::op_norm(&j).max(1.0);
            j * c64(1.0 / norm, 0.0)
        }
    };
    let w = random_unitary(dim, rng);
    (&w * linalg::block_diag(&unitary, &cnu) * w.adjoint(), k)
}

/// Unitary `[[A, (I − AA*)^{1/2}], [(I − A*A)^{1/2}, −A*]]` with `A` in the corner.
pub fn julia_colligation(a: &CMat) -> Result<UnitaryColligation> {
    if a.nrows() != a.ncols() {
        return Err(Error::Input("Julia colligation needs a square matrix".into()));
    }
    if linalg::op_norm(a) > 1.0 + 1e-12 {
        return Err(Error::Input("Julia colligation needs a contraction".into()));
    }
    // A = W Σ V*: both defect roots come from one SVD, so they intertwine A exactly.
    let svd = linalg::full_svd(a);
    let roots = linalg::CVec::from_iterator(
        svd.singular.len(),
        // A square root turns rounding noise in `1 − s²` into O(1e-8) entries.
        svd.singular.iter().map(|s| {
            let gap = 1.0 - s * s;
            c64(if gap <= 64.0 * f64::EPSILON { 0.0 } else { gap.sqrt() }, 0.0)
        }),
    );
    let d = CMat::from_diagonal(&roots);
    let left = &svd.u * &d * svd.u.adjoint();
    let right = &svd.v * &d * svd.v.adjoint();
    let u = linalg::vstack(&[&linalg::hstack(&[a, &left]), &linalg::hstack(&[&right, &(-a.adjoint())])]);
    UnitaryColligation::new(u, a.nrows())
}

/// Haar-random unitary colligation of size `outer + inner`.
pub fn random_colligation<R: Rng + ?Sized>(outer: usize, inner: usize, rng: &mut R) -> UnitaryColligation {
    UnitaryColligation::new(random_unitary(outer + inner, rng), outer).expect("square by construction")
}

/// Random polynomial of degree at most `max_degree`: each monomial of
/// degree `≤ max_degree` is kept with probability one half and gets a
/// coefficient uniform in the unit disc. Never empty.
pub fn random_polynomial<R: Rng + ?Sized>(n: usize, max_degree: usize, rng: &mut R) -> Polynomial {
    let mut exps: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..n {
        exps = exps
            .into_iter()
            .flat_map(|k| {
                let used: usize = k.iter().sum();
                (0..=max_degree - used).map(move |e| {
                    let mut v = k.clone();
                    v.push(e);
                    v
                })
            })
            .collect();
    }
    let mut terms: Vec<(Vec<usize>, Complex64)> = Vec::new();
    for k in &exps {
        if rng.random_bool(0.5) {
            terms.push((k.clone(), uniform_disc(rng, 1.0)));
        }
    }
    if terms.is_empty() {
        let k = exps[rng.random_range(0..exps.len())].clone();
        terms.push((k, uniform_disc(rng, 1.0)));
    }
    Polynomial::new(n, terms).expect("exponent vectors have length n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::{self, ToleranceConfig};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_from_seed(7);
        for e in 1..6 {
            assert!(linalg::unitarity_defect(&random_unitary(e, &mut rng)) < 1e-13);
        }
        let p = random_projection(4, 2, &mut rng);
        assert!(linalg::op_norm(&(&p * &p - &p)) < 1e-13);
        assert!((p.trace().re - 2.0).abs() < 1e-13);
    }

    #[test]
    fn diagonal_generator_contract() {
        assert_eq!(gen_diagonal(3, 4, 0.7, 11).unwrap(), gen_diagonal(3, 4, 0.7, 11).unwrap());
        let z = gen_diagonal(3, 2, 0.0, 1).unwrap();
        assert!(z.ops().iter().all(|m| m.norm() == 0.0));
        let t = gen_diagonal(4, 3, 0.9, 5).unwrap();
        for p in 0..4 {
            for q in p + 1..4 {
                assert!(operator_core::class_membership(&t, p, q, &tol()).unwrap().in_class);
            }
        }
        assert!(gen_diagonal(3, 2, 1.0, 0).is_err());
    }

    #[test]
    fn model_compression_shapes_and_class() {
        let t = gen_model_compression(3, 0, 1, 2, 1, 3).unwrap();
        assert_eq!((t.len(), t.dim()), (3, 8));
        let t4 = gen_model_compression(4, 1, 3, 1, 2, 9).unwrap();
        assert_eq!(t4.dim(), 27);
        let mut rng = rng_from_seed(21);
        let m = gen_model_compression_with(3, 0, 1, 3, 2, 1, &mut rng).unwrap();
        let v = operator_core::validate_tuple(&m.tuple, &tol());
        assert!(v.max_commutator < 1e-12 && v.is_contractive);
        for seed in 0..20 {
            for (n, p, q) in [(3, 0, 1), (3, 1, 2), (4, 0, 2)] {
                let t = gen_model_compression(n, p, q, 2, 1, seed).unwrap();
                let r = operator_core::class_membership(&t, p, q, &tol()).unwrap();
                assert!(r.in_class, "seed {seed}, (n, p, q) = ({n}, {p}, {q}): {r:?}");
            }
        }
    }

    #[test]
    fn down_set_compressions_commute() {
        let mut rng = rng_from_seed(8);
        let u = random_unitary(2, &mut rng);
        let proj = random_projection(2, 1, &mut rng);
        let cells = total_degree_cells(3, 1);
        assert_eq!(cells.len(), 4);
        let t = model_compression_on(4, 1, 2, &cells, &u, &proj).unwrap();
        assert_eq!(t.dim(), 8);
        assert!(operator_core::validate_tuple(&t, &tol()).max_commutator < 1e-12);
        assert!(operator_core::class_membership(&t, 1, 2, &tol()).unwrap().in_class);
        assert!(model_compression_on(3, 0, 1, &[vec![0, 1]], &u, &proj).is_err());
    }

    #[test]
    fn one_dimensional_model_with_full_projection() {
        // e = 1, P = I: Φ_p ≡ conj(u) and Φ_q = u z_p.
        let u = CMat::from_element(1, 1, Complex64::from_polar(1.0, 0.8));
        let t = model_compression_from(3, 0, 1, 2, &u, &linalg::identity(1)).unwrap();
        let expected = linalg::identity(t.dim()) * u[(0, 0)].conj();
        assert!((t.op(0) - expected).norm() < 1e-15);
    }

    #[test]
    fn planted_unitary_part_is_recovered() {
        let mut rng = rng_from_seed(99);
        for _ in 0..20 {
            let (a, k) = random_contraction_with_unitary_part(5, &mut rng);
            assert!(linalg::op_norm(&a) <= 1.0 + 1e-12);
            let dec = crate::colligation::canonical_decomposition(&a, &tol()).unwrap();
            assert_eq!(dec.basis_u.ncols(), k);
        }
    }

    #[test]
    fn julia_colligation_is_unitary() {
        let mut rng = rng_from_seed(4);
        let (a, _) = random_contraction_with_unitary_part(4, &mut rng);
        assert!(julia_colligation(&a).unwrap().unitarity_defect() < 1e-12);
    }

    #[test]
    fn random_polynomial_respects_degree() {
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            let p = random_polynomial(3, 4, &mut rng);
            assert!(p.degree() <= 4 && !p.terms().is_empty());
            assert!(p.terms().iter().all(|(_, c)| c.norm() <= 1.0));
        }
    }
}
