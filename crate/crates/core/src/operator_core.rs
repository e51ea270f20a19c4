//! Commuting contraction tuples, their Szegő defect operators, purity and
//! membership in the dilation class.
//!
//! All operator indices in the library are zero-based: `p` and `q` with
//! `p < q` name positions in the tuple. The CLI converts from the one-based
//! convention used in reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};

/// Numerical thresholds used by every check in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Allowed excess of an operator norm over 1.
    pub contraction: f64,
    /// Commutator threshold, multiplied by the dimension.
    pub commute: f64,
    /// Negative-eigenvalue allowance, multiplied by `1 + ‖S‖`.
    pub psd: f64,
    pub sym: f64,
    pub mat: f64,
    /// Relative eigenvalue/singular value cut-off for numerical rank.
    pub rank: f64,
    pub unitary: f64,
    pub residual: f64,
    /// Purity margin: a matrix is pure when its spectral radius is at most `1 - pure_margin`.
    pub pure_margin: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            contraction: 1e-10,
            commute: 1e-10,
            psd: 1e-10,
            sym: 1e-12,
            mat: 1e-10,
            rank: 1e-10,
            unitary: 1e-10,
            residual: 1e-8,
            pure_margin: 1e-8,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("contraction", self.contraction),
            ("commute", self.commute),
            ("psd", self.psd),
            ("sym", self.sym),
            ("mat", self.mat),
            ("rank", self.rank),
            ("unitary", self.unitary),
            ("residual", self.residual),
            ("pure_margin", self.pure_margin),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Input(format!("tolerance {name} must be finite and >= 0, got {v}")));
            }
        }
        if self.pure_margin >= 1.0 {
            return Err(Error::Input("tolerance pure_margin must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// An ordered tuple of square complex matrices of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTuple {
    ops: Vec<CMat>,
    dim: usize,
}

impl OperatorTuple {
    pub fn new(ops: Vec<CMat>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::Input("tuple must contain at least one operator".into()))?;
        let dim = first.nrows();
        for (i, m) in ops.iter().enumerate() {
            if m.nrows() != m.ncols() {
                return Err(Error::Input(format!("operator {i} is {}x{}, not square", m.nrows(), m.ncols())));
            }
            if m.nrows() != dim {
                return Err(Error::Input(format!("operator {i} has dimension {}, expected {dim}", m.nrows())));
            }
        }
        Ok(Self { ops, dim })
    }

    /// A tuple of 1x1 operators.
    pub fn from_scalars(values: &[num_complex::Complex64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| CMat::from_element(1, 1, v)).collect())
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn op(&self, i: usize) -> &CMat {
        &self.ops[i]
    }

    pub fn into_ops(self) -> Vec<CMat> {
        self.ops
    }

    /// `T^k = T_1^{k_1} ... T_n^{k_n}`.
    pub fn monomial(&self, k: &[usize]) -> CMat {
        assert_eq!(k.len(), self.len());
        let mut out = linalg::identity(self.dim);
        for (op, &e) in self.ops.iter().zip(k) {
            for _ in 0..e {
                out = &out * op;
            }
        }
        out
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::Input(format!("index {i} out of range for a tuple of length {}", self.len())));
        }
        Ok(())
    }

    fn check_pair(&self, p: usize, q: usize) -> Result<()> {
        self.check_index(p)?;
        self.check_index(q)?;
        if p >= q {
            return Err(Error::Input(format!("expected p < q, got p = {p}, q = {q}")));
        }
        Ok(())
    }
}

/// Contractivity and commutativity residuals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TupleValidation {
    pub max_norm: f64,
    pub max_norm_excess: f64,
    pub max_commutator: f64,
    pub is_contractive: bool,
    pub is_commuting: bool,
}

pub fn validate_tuple(t: &OperatorTuple, tol: &ToleranceConfig) -> TupleValidation {
    let norms: Vec<f64> = t.ops().iter().map(linalg::op_norm).collect();
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    let mut max_commutator: f64 = 0.0;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            let c = t.op(i) * t.op(j) - t.op(j) * t.op(i);
            max_commutator = max_commutator.max(linalg::op_norm(&c));
        }
    }
    TupleValidation {
        max_norm,
        max_norm_excess: (max_norm - 1.0).max(0.0),
        max_commutator,
        is_contractive: max_norm <= 1.0 + tol.contraction,
        is_commuting: max_commutator <= tol.commute * t.dim() as f64,
    }
}

/// `Σ_{k ∈ {0,1}^n} (−1)^{|k|} T^k T^{*k}` via the recursion
/// `S_k = S_{k−1} − T_k S_{k−1} T_k^*`, symmetrized at the end.
pub fn szego_defect(t: &OperatorTuple) -> CMat {
    let mut s = linalg::identity(t.dim());
    for op in t.ops() {
        s = &s - op * &s * op.adjoint();
    }
    linalg::hermitian_part(&s)
}

/// The same alternating sum, expanded over all `2^n` corners of the cube.
/// Agrees with [`szego_defect`] for commuting tuples.
pub fn szego_defect_expanded(t: &OperatorTuple) -> CMat {
    let n = t.len();
    let mut s = linalg::zeros(t.dim(), t.dim());
    for mask in 0u64..(1u64 << n) {
        let k: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        let tk = t.monomial(&k);
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        s += (&tk * tk.adjoint()) * c64(sign, 0.0);
    }
    linalg::hermitian_part(&s)
}

/// Defect operator data: the Hermitian defect, its positive square root and
/// an orthonormal basis of its (numerical) range.
#[derive(Debug, Clone)]
pub struct DefectData {
    pub gram: CMat,
    pub sqrt: CMat,
    /// `dim x rank` matrix with orthonormal columns spanning the defect space.
    pub basis: CMat,
    pub rank: usize,
    /// Eigenvalues of `gram`, descending.
    pub eigenvalues: Vec<f64>,
}

impl DefectData {
    /// The square root expressed in coordinates of the defect space:
    /// `basis^* · sqrt`, a `rank x dim` matrix `D` with `D^* D = sqrt^2`.
    pub fn compressed(&self) -> CMat {
        self.basis.adjoint() * &self.sqrt
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().cloned().unwrap_or(0.0)
    }
}

/// Positive square root and range basis of a Hermitian defect.
///
/// Eigenvalues in `[−ε_psd(1+‖S‖), 0]` are clipped to zero; anything more
/// negative is rejected. An eigenvalue is kept when its root exceeds
/// `ε_rank · √λ_max` and it sits above rounding noise (`64 ε_mach (1 + ‖S‖)`);
/// the rest are zero in both the root and the basis, so the root's range
/// is exactly the span of `basis`. The threshold acts on roots because a
/// dropped eigenvalue `λ` moves the root by `√λ`.
pub fn defect_sqrt(s: &CMat, tol: &ToleranceConfig) -> Result<DefectData> {
    let gram = linalg::hermitian_part(s);
    let eig = linalg::hermitian_eigen(&gram);
    let scale = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = eig.values.last().cloned().unwrap_or(0.0);
    if min < -tol.psd * (1.0 + scale) {
        return Err(Error::NotSzegoPositive { min_eig: min });
    }
    let lambda_max = eig.values.first().cloned().unwrap_or(0.0).max(0.0);
    let cut = (tol.rank * tol.rank * lambda_max).max(64.0 * f64::EPSILON * (1.0 + scale));
    let rank = eig.values.iter().filter(|&&v| v > cut && v > 0.0).count();
    let basis = eig.vectors.columns(0, rank).into_owned();
    let roots: Vec<f64> = eig.values[..rank].iter().map(|v| v.sqrt()).collect();
    let mut scaled = basis.clone();
    for (j, r) in roots.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*r);
    }
    let sqrt = linalg::hermitian_part(&(scaled * basis.adjoint()));
    Ok(DefectData { gram, sqrt, basis, rank, eigenvalues: eig.values })
}

/// Defect data of a tuple: [`szego_defect`] followed by [`defect_sqrt`].
pub fn defect_of(t: &OperatorTuple, tol: &ToleranceConfig) -> Result<DefectData> {
    defect_sqrt(&szego_defect(t), tol)
}

/// Purity verdict for one operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PurityCheck {
    pub spectral_radius: f64,
    /// Exponent `m` at which `‖T^{*m}‖` was evaluated (0 when skipped).
    pub power: u64,
    pub power_norm: f64,
    pub pure: bool,
}

const MAX_PURITY_POWER: u64 = 1 << 40;

/// Purity of a single matrix: spectral radius at most `1 − ρ_pure`, confirmed
/// by `‖T^{*m}‖ < ε_residual` at `m = ⌈log ε_residual / log(ρ + ρ_pure)⌉`.
/// When the first power has not decayed yet (non-normal transients), the
/// exponent keeps doubling up to `2^40`.
pub fn purity_of(op: &CMat, tol: &ToleranceConfig) -> PurityCheck {
    let rho = linalg::spectral_radius(op);
    if rho > 1.0 - tol.pure_margin {
        return PurityCheck { spectral_radius: rho, power: 0, power_norm: f64::NAN, pure: false };
    }
    let target = tol.residual.max(f64::MIN_POSITIVE);
    let base = (rho + tol.pure_margin).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    let m = (target.ln() / base.ln()).ceil();
    let mut m = if m.is_finite() && m >= 1.0 { (m as u64).min(MAX_PURITY_POWER) } else { 1 };
    let mut power = linalg::matrix_power(&op.adjoint(), m);
    let mut norm = linalg::op_norm(&power);
    while norm >= target && m < MAX_PURITY_POWER {
        power = &power * &power;
        m *= 2;
        norm = linalg::op_norm(&power);
    }
    PurityCheck { spectral_radius: rho, power: m, power_norm: norm, pure: norm < target }
}

pub fn is_pure(t: &OperatorTuple, tol: &ToleranceConfig) -> Vec<PurityCheck> {
    t.ops().iter().map(|op| purity_of(op, tol)).collect()
}

/// The tuple with operator `drop` removed.
pub fn subtuple(t: &OperatorTuple, drop: usize) -> Result<OperatorTuple> {
    t.check_index(drop)?;
    if t.len() == 1 {
        return Err(Error::Input("cannot remove the only operator of a tuple".into()));
    }
    let ops = t.ops().iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, m)| m.clone()).collect();
    OperatorTuple::new(ops)
}

/// The tuple with operators `p` and `q` removed. An empty result is
/// reported as `None` (possible when `n = 2`).
pub fn subtuple_pq(t: &OperatorTuple, p: usize, q: usize) -> Result<Option<OperatorTuple>> {
    t.check_pair(p, q)?;
    let ops: Vec<CMat> =
        t.ops().iter().enumerate().filter(|(i, _)| *i != p && *i != q).map(|(_, m)| m.clone()).collect();
    if ops.is_empty() {
        Ok(None)
    } else {
        OperatorTuple::new(ops).map(Some)
    }
}

/// Removes `T_q` and replaces `T_p` by `T_p T_q`.
pub fn product_tuple(t: &OperatorTuple, p: usize, q: usize) -> Result<OperatorTuple> {
    t.check_pair(p, q)?;
    let mut ops = Vec::with_capacity(t.len() - 1);
    for (i, m) in t.ops().iter().enumerate() {
        if i == p {
            ops.push(t.op(p) * t.op(q));
        } else if i != q {
            ops.push(m.clone());
        }
    }
    OperatorTuple::new(ops)
}

/// `(rT_1, ..., rT_n)` for `0 < r < 1`.
pub fn scale_tuple(t: &OperatorTuple, r: f64) -> Result<OperatorTuple> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Input(format!("scale factor must lie in (0, 1), got {r}")));
    }
    OperatorTuple::new(t.ops().iter().map(|m| m * c64(r, 0.0)).collect())
}

/// Membership report for the class of tuples whose `T̂_p` and `T̂_q` are
/// Szegő-positive and whose `T̂_p` is pure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    pub p: usize,
    pub q: usize,
    pub is_contractive: bool,
    pub max_norm: f64,
    pub is_commuting: bool,
    pub max_commutator: f64,
    pub pure_flags: Vec<bool>,
    pub spectral_radii: Vec<f64>,
    pub subtuple_p_pure: bool,
    /// Smallest eigenvalue of the defect of each tested subtuple, keyed by label.
    pub szego_min_eig: BTreeMap<String, f64>,
    pub szego_positive: bool,
    pub in_class: bool,
}

pub fn class_membership(t: &OperatorTuple, p: usize, q: usize, tol: &ToleranceConfig) -> Result<ClassReport> {
    t.check_pair(p, q)?;
    if t.len() < 3 {
        return Err(Error::Input(format!("class membership needs n >= 3, got {}", t.len())));
    }
    let v = validate_tuple(t, tol);
    let purity = is_pure(t, tol);
    let pure_flags: Vec<bool> = purity.iter().map(|c| c.pure).collect();
    let subtuple_p_pure = pure_flags.iter().enumerate().all(|(i, &f)| i == p || f);
    let mut szego_min_eig = BTreeMap::new();
    let mut szego_positive = true;
    for (label, drop) in [(format!("T^_{}", p + 1), p), (format!("T^_{}", q + 1), q)] {
        let s = szego_defect(&subtuple(t, drop)?);
        let eig = linalg::hermitian_eigen(&s);
        let min = eig.values.last().cloned().unwrap_or(0.0);
        let scale = eig.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
        szego_positive &= min >= -tol.psd * (1.0 + scale);
        szego_min_eig.insert(label, min);
    }
    Ok(ClassReport {
        p,
        q,
        is_contractive: v.is_contractive,
        max_norm: v.max_norm,
        is_commuting: v.is_commuting,
        max_commutator: v.max_commutator,
        spectral_radii: purity.iter().map(|c| c.spectral_radius).collect(),
        pure_flags,
        subtuple_p_pure,
        szego_positive,
        in_class: v.is_contractive && v.is_commuting && subtuple_p_pure && szego_positive,
        szego_min_eig,
    })
}

/// Residuals of the two defect identities
/// `D²(T̂_pq) = D²(T̂_p) + T_q D²(T̂_q) T_q^*` and
/// `D²(T̂_pq) = T_p D²(T̂_p) T_p^* + D²(T̂_q)`.
pub fn defect_identity_check(t: &OperatorTuple, p: usize, q: usize) -> Result<(f64, f64)> {
    let d_pq = szego_defect(&product_tuple(t, p, q)?);
    let d_p = szego_defect(&subtuple(t, p)?);
    let d_q = szego_defect(&subtuple(t, q)?);
    let (tp, tq) = (t.op(p), t.op(q));
    let first = &d_pq - (&d_p + tq * &d_q * tq.adjoint());
    let second = &d_pq - (tp * &d_p * tp.adjoint() + &d_q);
    Ok((linalg::op_norm(&first), linalg::op_norm(&second)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    fn scalars(v: &[f64]) -> OperatorTuple {
        OperatorTuple::from_scalars(&v.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>()).unwrap()
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn zero_tuple_is_contractive_and_commuting() {
        let t = OperatorTuple::new(vec![linalg::zeros(2, 2); 3]).unwrap();
        let v = validate_tuple(&t, &tol());
        assert!(v.is_contractive && v.is_commuting);
        assert_eq!(v.max_commutator, 0.0);
        assert_eq!(v.max_norm, 0.0);
        assert!((szego_defect(&t) - linalg::identity(2)).norm() == 0.0);
    }

    #[test]
    fn norm_two_is_not_contractive() {
        let t = scalars(&[2.0, 0.0, 0.0]);
        let v = validate_tuple(&t, &tol());
        assert!(!v.is_contractive);
        assert!((v.max_norm - 2.0).abs() < 1e-14);
    }

    #[test]
    fn jordan_pair_does_not_commute() {
        let e12 = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let t = OperatorTuple::new(vec![e12.clone(), e12.transpose(), linalg::zeros(2, 2)]).unwrap();
        let v = validate_tuple(&t, &tol());
        // [E12, E21] = diag(1, -1): norm 1.
        assert!(!v.is_commuting);
        assert!((v.max_commutator - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let r = OperatorTuple::new(vec![linalg::zeros(2, 2), linalg::zeros(3, 3)]);
        assert!(matches!(r, Err(Error::Input(_))));
        let r = OperatorTuple::new(vec![linalg::zeros(2, 3)]);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn scalar_pair_defect() {
        let s = szego_defect(&scalars(&[0.5, 0.5]));
        assert!((s[(0, 0)].re - 0.5625).abs() < 1e-15);
        let d = defect_sqrt(&s, &tol()).unwrap();
        assert!((d.sqrt[(0, 0)].re - 0.75).abs() < 1e-15);
        assert_eq!(d.rank, 1);
    }

    #[test]
    fn defect_sqrt_examples() {
        let d = defect_sqrt(&linalg::identity(2), &tol()).unwrap();
        assert_eq!(d.rank, 2);
        assert!((d.sqrt.clone() - linalg::identity(2)).norm() < 1e-14);

        let s = CMat::from_diagonal(&linalg::CVec::from_vec(vec![c64(4.0, 0.0), ZERO]));
        let d = defect_sqrt(&s, &tol()).unwrap();
        assert_eq!(d.rank, 1);
        assert!((d.sqrt[(0, 0)].re - 2.0).abs() < 1e-14 && d.sqrt[(1, 1)].norm() < 1e-14);
        assert!((d.basis[(0, 0)] - ONE).norm() < 1e-14 && d.basis[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn negative_defect_is_rejected() {
        let s = CMat::from_diagonal(&linalg::CVec::from_vec(vec![ONE, c64(-0.1, 0.0)]));
        assert!(matches!(defect_sqrt(&s, &tol()), Err(Error::NotSzegoPositive { .. })));
        // A tiny negative eigenvalue is clipped instead.
        let s = CMat::from_diagonal(&linalg::CVec::from_vec(vec![ONE, c64(-1e-14, 0.0)]));
        assert_eq!(defect_sqrt(&s, &tol()).unwrap().rank, 1);
    }

    #[test]
    fn purity_examples() {
        assert!(purity_of(&linalg::zeros(2, 2), &tol()).pure);
        assert!(!purity_of(&linalg::identity(2), &tol()).pure);
        let j = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let c = purity_of(&j, &tol());
        assert!(c.pure);
        assert!(c.power >= 2);
    }

    #[test]
    fn subtuple_examples() {
        let t = scalars(&[1.0, 2.0, 3.0]);
        assert_eq!(subtuple(&t, 0).unwrap(), scalars(&[2.0, 3.0]));
        assert_eq!(subtuple_pq(&t, 0, 1).unwrap().unwrap(), scalars(&[3.0]));
        let t4 = scalars(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(subtuple_pq(&t4, 1, 2).unwrap().unwrap(), scalars(&[1.0, 4.0]));
        assert!(subtuple(&t, 3).is_err());
        assert!(subtuple_pq(&t, 2, 1).is_err());
    }

    #[test]
    fn product_tuple_examples() {
        let t = scalars(&[0.5, 0.25, 0.75]);
        assert_eq!(product_tuple(&t, 0, 1).unwrap(), scalars(&[0.125, 0.75]));
        assert_eq!(product_tuple(&t, 0, 2).unwrap(), scalars(&[0.375, 0.25]));
        assert_eq!(product_tuple(&t, 1, 2).unwrap(), scalars(&[0.5, 0.1875]));
    }

    #[test]
    fn class_membership_scalar_example() {
        let r = class_membership(&scalars(&[0.5, 0.4, 0.3]), 0, 1, &tol()).unwrap();
        assert!(r.in_class);
        assert!((r.szego_min_eig["T^_1"] - 0.7644).abs() < 1e-14);
        // T_2 = identity: T̂_1 contains a non-pure operator.
        let r = class_membership(&scalars(&[0.5, 1.0, 0.3]), 0, 1, &tol()).unwrap();
        assert!(!r.in_class && !r.subtuple_p_pure);
    }

    #[test]
    fn scale_tuple_examples() {
        let t = OperatorTuple::new(vec![linalg::identity(2); 3]).unwrap();
        let s = scale_tuple(&t, 0.5).unwrap();
        assert!(s.ops().iter().all(|m| (m - linalg::identity(2) * c64(0.5, 0.0)).norm() == 0.0));
        assert!(is_pure(&s, &tol()).iter().all(|c| c.pure));
        let z = OperatorTuple::new(vec![linalg::zeros(2, 2); 3]).unwrap();
        assert_eq!(scale_tuple(&z, 0.3).unwrap(), z);
        assert!(scale_tuple(&t, 1.0).is_err() && scale_tuple(&t, 0.0).is_err());
    }

    #[test]
    fn defect_identity_scalar_and_zero() {
        let (a, b, c) = (0.3, 0.4, 0.5);
        let (r1, r2) = defect_identity_check(&scalars(&[a, b, c]), 0, 1).unwrap();
        assert!(r1 < 1e-15 && r2 < 1e-15);
        let expected = (1.0 - (a * b) * (a * b)) * (1.0 - c * c);
        let d_pq = szego_defect(&product_tuple(&scalars(&[a, b, c]), 0, 1).unwrap());
        assert!((d_pq[(0, 0)].re - expected).abs() < 1e-15);
        let z = OperatorTuple::new(vec![linalg::zeros(3, 3); 3]).unwrap();
        assert_eq!(defect_identity_check(&z, 0, 2).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn tolerance_validation() {
        assert!(tol().validate().is_ok());
        let bad = ToleranceConfig { psd: -1.0, ..tol() };
        assert!(bad.validate().is_err());
        let bad = ToleranceConfig { pure_margin: 1.0, ..tol() };
        assert!(bad.validate().is_err());
    }
}
