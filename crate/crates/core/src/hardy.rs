//! Truncated vector-valued Hardy space over the polydisc.
//!
//! An element is stored as a dense box of Taylor coefficients: slot `j`
//! carries indices `0..extents[j]`, and every coefficient is an `e x s`
//! matrix, i.e. a batch of `s` vectors of `C^e` pushed through the same
//! operators at once. Indices are laid out row-major with the last slot
//! fastest.
//!
//! Adjoint operators shrink the box: a coefficient of `M_Φ* f` at `k`
//! needs the coefficients of `f` up to `k + deg Φ` in the symbol's slot,
//! so only the indices whose full input lies inside the box are kept.
//! Every coefficient that survives is therefore exact, and comparisons on
//! the common box carry no truncation error.

use serde::{Deserialize, Serialize};

use crate::colligation::{AnalyticSymbol, SymbolForm};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::operator_core::{self, DefectData, OperatorTuple, ToleranceConfig};
use crate::par::{self, Execution};

/// Multi-index `(k_1, ..., k_m)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }
}

fn cell_count(extents: &[usize]) -> usize {
    extents.iter().product()
}

/// Calls `f(start, stride, len)` for every line of the box running along `slot`.
fn for_each_fiber(extents: &[usize], slot: usize, mut f: impl FnMut(usize, usize, usize)) {
    let stride: usize = extents[slot + 1..].iter().product();
    let len = extents[slot];
    let outer: usize = extents[..slot].iter().product();
    for o in 0..outer {
        for i in 0..stride {
            f(o * len * stride + i, stride, len);
        }
    }
}

/// Row-major strides of a box (last slot fastest).
fn strides(extents: &[usize]) -> Vec<usize> {
    let mut out = vec![1; extents.len()];
    for j in (0..extents.len().saturating_sub(1)).rev() {
        out[j] = out[j + 1] * extents[j + 1];
    }
    out
}

/// Offsets in boxes `a` and `b` of every index of `within`, which must fit
/// in both, in lexicographic order.
fn paired_offsets(within: &[usize], a: &[usize], b: &[usize]) -> Vec<(usize, usize)> {
    let mut cur = vec![(0usize, 0usize)];
    for j in 0..within.len() {
        let mut next = Vec::with_capacity(cur.len() * within[j]);
        for &(oa, ob) in &cur {
            for i in 0..within[j] {
                next.push((oa * a[j] + i, ob * b[j] + i));
            }
        }
        cur = next;
    }
    if within.contains(&0) {
        cur.clear();
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardyVector {
    extents: Vec<usize>,
    rows: usize,
    cols: usize,
    coeffs: Vec<CMat>,
}

impl HardyVector {
    pub fn zeros(extents: Vec<usize>, rows: usize, cols: usize) -> Self {
        let coeffs = vec![linalg::zeros(rows, cols); cell_count(&extents)];
        Self { extents, rows, cols, coeffs }
    }

    /// The constant function `c` in `vars` variables.
    pub fn constant(vars: usize, c: CMat) -> Self {
        Self { extents: vec![1; vars], rows: c.nrows(), cols: c.ncols(), coeffs: vec![c] }
    }

    pub fn vars(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    fn offset(&self, k: &[usize]) -> Option<usize> {
        if k.len() != self.vars() {
            return None;
        }
        let mut off = 0;
        for (&ki, &ext) in k.iter().zip(&self.extents) {
            if ki >= ext {
                return None;
            }
            off = off * ext + ki;
        }
        Some(off)
    }

    fn index_of(&self, mut off: usize) -> Vec<usize> {
        let mut k = vec![0; self.vars()];
        for j in (0..self.vars()).rev() {
            k[j] = off % self.extents[j];
            off /= self.extents[j];
        }
        k
    }

    /// Coefficient at `k`, zero outside the box.
    pub fn coeff(&self, k: &[usize]) -> CMat {
        match self.offset(k) {
            Some(o) => self.coeffs[o].clone(),
            None => linalg::zeros(self.rows, self.cols),
        }
    }

    pub fn set_coeff(&mut self, k: &[usize], value: CMat) -> Result<()> {
        if value.shape() != (self.rows, self.cols) {
            return Err(Error::Input("coefficient shape mismatch".into()));
        }
        let o = self.offset(k).ok_or_else(|| Error::Input(format!("index {k:?} outside the box")))?;
        self.coeffs[o] = value;
        Ok(())
    }

    /// Nonzero-capable entries as `(index, coefficient)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, &CMat)> + '_ {
        self.coeffs.iter().enumerate().map(|(o, c)| (MultiIndex(self.index_of(o)), c))
    }

    /// `Σ_k ‖f(k)‖²_F`.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_squared()).sum()
    }

    /// Squared norm of each batch column.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for c in &self.coeffs {
            for (j, col) in c.column_iter().enumerate() {
                out[j] += col.norm_squared();
            }
        }
        out
    }

    /// Restricts or zero-extends to the box `extents`.
    pub fn resized(&self, extents: &[usize]) -> Self {
        assert_eq!(extents.len(), self.vars());
        let mut out = Self::zeros(extents.to_vec(), self.rows, self.cols);
        let common: Vec<usize> = self.extents.iter().zip(extents).map(|(a, b)| *a.min(b)).collect();
        for (src, dst) in paired_offsets(&common, &self.extents, extents) {
            out.coeffs[dst] = self.coeffs[src].clone();
        }
        out
    }

    /// Box shared by `self` and `other`.
    pub fn common_extents(&self, other: &Self) -> Vec<usize> {
        self.extents.iter().zip(&other.extents).map(|(a, b)| *a.min(b)).collect()
    }

    /// `Σ_k f(k)* g(k)` over the common box: an `s x s'` Gram block.
    pub fn inner(&self, other: &Self) -> CMat {
        assert_eq!(self.rows, other.rows, "coefficient dimension mismatch");
        let ext = self.common_extents(other);
        let mut acc = linalg::zeros(self.cols, other.cols);
        for (a, b) in paired_offsets(&ext, &self.extents, &other.extents) {
            acc += self.coeffs[a].ad_mul(&other.coeffs[b]);
        }
        acc
    }

    /// Per-column norm of `self − other` on the common box; the maximum is returned.
    pub fn max_column_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        let ext = self.common_extents(other);
        let mut sums = vec![0.0; self.cols];
        for (a, b) in paired_offsets(&ext, &self.extents, &other.extents) {
            let (x, y) = (&self.coeffs[a], &other.coeffs[b]);
            for (j, sum) in sums.iter_mut().enumerate() {
                *sum += x.column(j).iter().zip(y.column(j).iter()).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>();
            }
        }
        sums.into_iter().map(f64::sqrt).fold(0.0, |a: f64, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
    }

    /// Multiplies every coefficient on the right by `m`.
    pub fn right_mul(&self, m: &CMat) -> Self {
        assert_eq!(self.cols, m.nrows(), "batch dimension mismatch");
        Self {
            extents: self.extents.clone(),
            rows: self.rows,
            cols: m.ncols(),
            coeffs: self.coeffs.iter().map(|c| c * m).collect(),
        }
    }

    /// Applies a fixed matrix to every coefficient.
    pub fn map_left(&self, m: &CMat) -> Self {
        Self {
            extents: self.extents.clone(),
            rows: m.nrows(),
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|c| m * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.extents, other.extents, "box mismatch");
        Self {
            extents: self.extents.clone(),
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: num_complex::Complex64) -> Self {
        Self {
            extents: self.extents.clone(),
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.vars() {
            return Err(Error::Input(format!("slot {slot} out of range for {} variables", self.vars())));
        }
        Ok(())
    }

    /// Multiplication by `z_slot`; the box grows by one in that slot.
    pub fn shift(&self, slot: usize) -> Result<Self> {
        self.check_slot(slot)?;
        let mut ext = self.extents.clone();
        ext[slot] += 1;
        let step = strides(&ext)[slot];
        let mut out = Self::zeros(ext, self.rows, self.cols);
        for (src, dst) in paired_offsets(&self.extents, &self.extents, &out.extents) {
            out.coeffs[dst + step] = self.coeffs[src].clone();
        }
        Ok(out)
    }

    /// Backward shift in `slot`: `out(k) = in(k + e_slot)`.
    pub fn shift_adjoint(&self, slot: usize) -> Result<Self> {
        self.check_slot(slot)?;
        let mut ext = self.extents.clone();
        ext[slot] = ext[slot].saturating_sub(1);
        let step = strides(&self.extents)[slot];
        let mut out = Self::zeros(ext, self.rows, self.cols);
        for (dst, src) in paired_offsets(&out.extents, &out.extents, &self.extents) {
            out.coeffs[dst] = self.coeffs[src + step].clone();
        }
        Ok(out)
    }

    fn check_symbol(&self, phi: &AnalyticSymbol) -> Result<()> {
        self.check_slot(phi.slot)?;
        if phi.dim() != self.rows {
            return Err(Error::Input(format!("symbol acts on C^{}, vector has C^{} coefficients", phi.dim(), self.rows)));
        }
        Ok(())
    }

    /// Multiplication by `Φ(z_slot)`. A Taylor symbol of degree `m` grows the
    /// box by `m`; a realization keeps the box (its product is infinite and
    /// the retained coefficients are exact).
    pub fn symbol_mult(&self, phi: &AnalyticSymbol) -> Result<Self> {
        self.check_symbol(phi)?;
        let s = phi.slot;
        match &phi.form {
            SymbolForm::Taylor(c) => {
                let mut ext = self.extents.clone();
                ext[s] += c.len() - 1;
                let step = strides(&ext)[s];
                let mut out = Self::zeros(ext, self.rows, self.cols);
                for (src, dst) in paired_offsets(&self.extents, &self.extents, &out.extents) {
                    for (m, cm) in c.iter().enumerate() {
                        out.coeffs[dst + m * step] += cm * &self.coeffs[src];
                    }
                }
                Ok(out)
            }
            SymbolForm::Realization { a, b, c, d } => {
                let mut out = Self::zeros(self.extents.clone(), self.rows, self.cols);
                for_each_fiber(&self.extents, s, |start, stride, len| {
                    // t(k) = c g(k−1) + d t(k−1), out(k) = a g(k) + b t(k).
                    let mut state = linalg::zeros(d.nrows(), self.cols);
                    for i in 0..len {
                        let idx = start + i * stride;
                        if i > 0 {
                            state = c * &self.coeffs[idx - stride] + d * &state;
                        }
                        out.coeffs[idx] = a * &self.coeffs[idx] + b * &state;
                    }
                });
                Ok(out)
            }
        }
    }

    /// `M_Φ*`: `out(k) = Σ_m c_m* in(k + m e_slot)`. The box shrinks by the
    /// symbol's effective degree in its slot.
    pub fn symbol_mult_adjoint(&self, phi: &AnalyticSymbol) -> Result<Self> {
        self.check_symbol(phi)?;
        let s = phi.slot;
        let deg = phi.effective_degree;
        let mut ext = self.extents.clone();
        ext[s] = ext[s].saturating_sub(deg);
        let mut out = Self::zeros(ext.clone(), self.rows, self.cols);
        match &phi.form {
            SymbolForm::Taylor(c) => {
                let step = strides(&self.extents)[s];
                for (dst, src) in paired_offsets(&ext, &ext, &self.extents) {
                    let mut acc = linalg::zeros(self.rows, self.cols);
                    for (m, cm) in c.iter().enumerate() {
                        acc += cm.ad_mul(&self.coeffs[src + m * step]);
                    }
                    out.coeffs[dst] = acc;
                }
            }
            SymbolForm::Realization { a, b, c, d } => {
                // s(k) = b* g(k+1) + d* s(k+1), out(k) = a* g(k) + c* s(k),
                // run backward from the end of each fiber.
                let (a, b, c, d) = (a.adjoint(), b.adjoint(), c.adjoint(), d.adjoint());
                let out_len = ext[s];
                let out_ext = ext.clone();
                let out_stride: usize = out_ext[s + 1..].iter().product();
                for_each_fiber(&self.extents, s, |start, stride, len| {
                    if out_len == 0 {
                        return;
                    }
                    // Map the fiber start to the output box (same position
                    // in every other slot).
                    let k0 = self.index_of(start);
                    let dst0 = {
                        let mut off = 0;
                        for (j, &kj) in k0.iter().enumerate() {
                            off = off * out_ext[j] + kj;
                        }
                        off
                    };
                    let mut state = linalg::zeros(d.nrows(), self.cols);
                    for i in (0..len).rev() {
                        let idx = start + i * stride;
                        if i < out_len {
                            out.coeffs[dst0 + i * out_stride] = &a * &self.coeffs[idx] + &c * &state;
                        }
                        state = &b * &self.coeffs[idx] + &d * &state;
                    }
                });
            }
        }
        Ok(out)
    }
}

/// An operator of the functional model: `M_{z_slot}` or `M_Φ`.
#[derive(Debug, Clone)]
pub enum ModelOperator {
    Shift(usize),
    Symbol(AnalyticSymbol),
}

impl ModelOperator {
    pub fn slot(&self) -> usize {
        match self {
            ModelOperator::Shift(s) => *s,
            ModelOperator::Symbol(phi) => phi.slot,
        }
    }

    /// How far the adjoint reaches beyond each output index in its slot.
    pub fn degree(&self) -> usize {
        match self {
            ModelOperator::Shift(_) => 1,
            ModelOperator::Symbol(phi) => phi.effective_degree,
        }
    }

    pub fn apply(&self, v: &HardyVector) -> Result<HardyVector> {
        match self {
            ModelOperator::Shift(s) => v.shift(*s),
            ModelOperator::Symbol(phi) => v.symbol_mult(phi),
        }
    }

    pub fn apply_adjoint(&self, v: &HardyVector) -> Result<HardyVector> {
        match self {
            ModelOperator::Shift(s) => v.shift_adjoint(*s),
            ModelOperator::Symbol(phi) => v.symbol_mult_adjoint(phi),
        }
    }
}

/// The canonical isometry `h ↦ Σ_k z^k D T^{*k} h` of a pure Szegő-positive
/// tuple, optionally followed by a fixed isometry `V` on the coefficient space.
#[derive(Debug, Clone)]
pub struct CanonicalEmbedding {
    tuple: OperatorTuple,
    defect: DefectData,
    /// `D` in defect-basis coordinates, possibly premultiplied by `V`.
    coeff_map: CMat,
    adjoints: Vec<CMat>,
}

impl CanonicalEmbedding {
    pub fn new(tuple: OperatorTuple, tol: &ToleranceConfig) -> Result<Self> {
        let defect = operator_core::defect_of(&tuple, tol)?;
        let coeff_map = defect.compressed();
        Ok(Self::assemble(tuple, defect, coeff_map))
    }

    /// Embedding whose coefficients are `V D T^{*k} h`, where `v` maps the
    /// defect space (in its basis coordinates) isometrically.
    pub fn with_isometry(tuple: OperatorTuple, tol: &ToleranceConfig, v: &CMat) -> Result<Self> {
        let defect = operator_core::defect_of(&tuple, tol)?;
        if v.ncols() != defect.rank {
            return Err(Error::Input(format!("isometry has {} columns, defect rank is {}", v.ncols(), defect.rank)));
        }
        let coeff_map = v * defect.compressed();
        Ok(Self::assemble(tuple, defect, coeff_map))
    }

    fn assemble(tuple: OperatorTuple, defect: DefectData, coeff_map: CMat) -> Self {
        let adjoints = tuple.ops().iter().map(|m| m.adjoint()).collect();
        Self { tuple, defect, coeff_map, adjoints }
    }

    pub fn tuple(&self) -> &OperatorTuple {
        &self.tuple
    }

    pub fn defect(&self) -> &DefectData {
        &self.defect
    }

    pub fn vars(&self) -> usize {
        self.tuple.len()
    }

    /// Dimension of the coefficient space.
    pub fn coeff_dim(&self) -> usize {
        self.coeff_map.nrows()
    }

    /// Coefficients of the embedded batch `h` (columns) on the box `extents`.
    ///
    /// `T^{*k} h` is generated slot by slot: first along the leading slots
    /// with the last index at zero, then along the last slot, so only one
    /// line of intermediate vectors is alive at a time.
    pub fn embed(&self, h: &CMat, extents: &[usize]) -> HardyVector {
        assert_eq!(extents.len(), self.vars(), "box has wrong number of slots");
        assert_eq!(h.nrows(), self.tuple.dim(), "probe dimension mismatch");
        let m = self.vars();
        let mut out = HardyVector::zeros(extents.to_vec(), self.coeff_dim(), h.ncols());
        if out.coeffs.is_empty() {
            return out;
        }
        let last = extents[m - 1];
        let heads: Vec<usize> = extents[..m - 1].to_vec();
        // Vectors T^{*k} h for every head index (k_last = 0).
        let mut line = vec![h.clone()];
        let mut dims = vec![];
        for (j, &ext) in heads.iter().enumerate() {
            let mut next = Vec::with_capacity(line.len() * ext);
            for v in &line {
                let mut cur = v.clone();
                for i in 0..ext {
                    if i > 0 {
                        cur = &self.adjoints[j] * &cur;
                    }
                    next.push(cur.clone());
                }
            }
            line = next;
            dims.push(ext);
        }
        for (head, v) in line.into_iter().enumerate() {
            let mut cur = v;
            for i in 0..last {
                if i > 0 {
                    cur = &self.adjoints[m - 1] * &cur;
                }
                out.coeffs[head * last + i] = &self.coeff_map * &cur;
            }
        }
        out
    }

    /// `‖h‖² − Σ_{k in box} ‖(Πh)(k)‖²`, maximized over the batch columns.
    pub fn embedding_residual(&self, h: &CMat, extents: &[usize]) -> f64 {
        let v = self.embed(h, extents);
        v.column_norms_sq()
            .iter()
            .zip(h.column_iter())
            .map(|(s, col)| col.norm_squared() - s)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-slot box for embedding `t`: the smallest `N_j ≥ base` with
/// `‖T_j^{*(N_j+1)}‖ ≤ tail` (capped at `max_cutoff`), returned as extents
/// `N_j + 1`. The largest slots are trimmed until the box has at most
/// `budget` cells.
pub fn suggest_extents(t: &OperatorTuple, base: usize, max_cutoff: usize, tail: f64, budget: usize) -> Vec<usize> {
    let mut ext: Vec<usize> = t
        .ops()
        .iter()
        .map(|op| {
            let adj = op.adjoint();
            let mut power = linalg::matrix_power(&adj, base as u64 + 1);
            let mut n = base;
            while n < max_cutoff && linalg::op_norm(&power) > tail {
                power = &power * &adj;
                n += 1;
            }
            n + 1
        })
        .collect();
    while cell_count(&ext) > budget.max(1) {
        let (j, &biggest) = ext.iter().enumerate().max_by_key(|(_, e)| **e).expect("non-empty");
        if biggest <= base + 1 {
            break;
        }
        ext[j] = (biggest - biggest / 10 - 1).max(base + 1);
    }
    ext
}

/// Residuals of `Π T_i* h = V_i* Π h` per coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntertwiningReport {
    /// Max over probes, per original coordinate.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Compares `embed(T_i* h)` with `V_i* embed(h)` on the box where the
/// model adjoint is exact.
pub fn verify_intertwining(
    embedding: &CanonicalEmbedding,
    tuple: &OperatorTuple,
    models: &[ModelOperator],
    probes: &CMat,
    extents: &[usize],
    exec: Execution,
) -> Result<IntertwiningReport> {
    if models.len() != tuple.len() {
        return Err(Error::Input(format!("{} model operators for {} coordinates", models.len(), tuple.len())));
    }
    let base = embedding.embed(probes, extents);
    let results = par::map_indices(exec, tuple.len(), |i| -> Result<f64> {
        let rhs = models[i].apply_adjoint(&base)?;
        let lhs = embedding.embed(&(tuple.op(i).adjoint() * probes), rhs.extents());
        Ok(lhs.max_column_diff(&rhs))
    });
    let residuals = results.into_iter().collect::<Result<Vec<f64>>>()?;
    let max_residual = residuals.iter().cloned().fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    Ok(IntertwiningReport { residuals, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, ONE, ZERO};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn scalars(v: &[f64]) -> OperatorTuple {
        OperatorTuple::from_scalars(&v.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>()).unwrap()
    }

    fn one() -> CMat {
        linalg::identity(1)
    }

    #[test]
    fn zero_tuple_embeds_as_constant() {
        let e = CanonicalEmbedding::new(scalars(&[0.0, 0.0]), &tol()).unwrap();
        let v = e.embed(&one(), &[3, 3]);
        assert!((v.coeff(&[0, 0]) - one()).norm() == 0.0);
        assert!((v.norm_sq() - 1.0).abs() == 0.0);
        assert_eq!(e.embedding_residual(&one(), &[1, 1]), 0.0);
    }

    #[test]
    fn geometric_embedding_and_residual() {
        let e = CanonicalEmbedding::new(scalars(&[0.5, 0.0]), &tol()).unwrap();
        let v = e.embed(&one(), &[4, 4]);
        for k in 0..4 {
            let expected = 0.75f64.sqrt() * 0.5f64.powi(k as i32);
            assert!((v.coeff(&[k, 0])[(0, 0)].re - expected).abs() < 1e-15);
            assert_eq!(v.coeff(&[k, 1])[(0, 0)], ZERO);
        }
        assert!((e.embedding_residual(&one(), &[4, 4]) - 0.00390625).abs() < 1e-15);
    }

    #[test]
    fn shift_adjoint_examples() {
        let mut v = HardyVector::zeros(vec![2, 2], 1, 1);
        v.set_coeff(&[0, 0], one()).unwrap();
        assert_eq!(v.shift_adjoint(0).unwrap().norm_sq(), 0.0);
        let mut w = HardyVector::zeros(vec![2, 2], 1, 1);
        w.set_coeff(&[1, 0], one() * c64(0.0, 2.0)).unwrap();
        let s = w.shift_adjoint(0).unwrap();
        assert_eq!(s.coeff(&[0, 0])[(0, 0)], c64(0.0, 2.0));
        assert!(w.shift(1).unwrap().shift_adjoint(1).unwrap().max_column_diff(&w) == 0.0);
    }

    #[test]
    fn symbol_mult_examples() {
        let mut v = HardyVector::zeros(vec![3, 2], 2, 1);
        v.set_coeff(&[0, 1], CMat::from_column_slice(2, 1, &[ONE, c64(0.5, 0.0)])).unwrap();
        v.set_coeff(&[2, 0], CMat::from_column_slice(2, 1, &[ZERO, c64(0.0, 1.0)])).unwrap();
        let id = AnalyticSymbol::taylor(0, vec![linalg::identity(2)]).unwrap();
        assert_eq!(v.symbol_mult(&id).unwrap(), v);
        let z = AnalyticSymbol::taylor(0, vec![linalg::zeros(2, 2), linalg::identity(2)]).unwrap();
        assert_eq!(v.symbol_mult(&z).unwrap(), v.shift(0).unwrap());

        let a = CMat::from_row_slice(2, 2, &[ONE, c64(0.2, 0.0), ZERO, c64(0.0, 1.0)]);
        let cb = CMat::from_row_slice(2, 2, &[c64(0.3, 0.0), ZERO, ONE, ONE]);
        let phi = AnalyticSymbol::taylor(0, vec![a.clone(), cb.clone()]).unwrap();
        let out = v.symbol_mult(&phi).unwrap();
        for k0 in 0..4 {
            for k1 in 0..2 {
                let mut expected = &a * v.coeff(&[k0, k1]);
                if k0 > 0 {
                    expected += &cb * v.coeff(&[k0 - 1, k1]);
                }
                assert!((out.coeff(&[k0, k1]) - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn realization_matches_taylor_expansion() {
        let th: f64 = 1.2;
        let (s, c) = th.sin_cos();
        let u = crate::colligation::UnitaryColligation::new(
            CMat::from_row_slice(2, 2, &[c64(c, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(c, 0.0)]),
            1,
        )
        .unwrap();
        let real = AnalyticSymbol::transfer_of(&u, 1, 60);
        let tay = AnalyticSymbol::taylor(1, real.taylor_coeffs(60)).unwrap();
        let mut v = HardyVector::zeros(vec![2, 70], 1, 1);
        for k in 0..70 {
            v.set_coeff(&[k % 2, k], one() * c64(0.9f64.powi(k as i32), 0.1)).unwrap();
        }
        let fwd_r = v.symbol_mult(&real).unwrap();
        let fwd_t = v.symbol_mult(&tay).unwrap().resized(fwd_r.extents());
        assert!(fwd_r.max_column_diff(&fwd_t) < 1e-12);
        let adj_r = v.symbol_mult_adjoint(&real).unwrap();
        let adj_t = v.symbol_mult_adjoint(&tay).unwrap();
        assert_eq!(adj_r.extents(), &[2, 10]);
        assert!(adj_r.max_column_diff(&adj_t) < 1e-12);
    }

    #[test]
    fn adjoint_pairs_with_forward() {
        let phi = AnalyticSymbol::taylor(0, vec![one() * c64(0.3, 0.1), one() * c64(-0.2, 0.4)]).unwrap();
        let mut f = HardyVector::zeros(vec![3, 2], 1, 1);
        let mut g = HardyVector::zeros(vec![4, 2], 1, 1);
        for (i, (k0, k1)) in [(0, 0), (1, 1), (2, 0)].iter().enumerate() {
            f.set_coeff(&[*k0, *k1], one() * c64(i as f64 + 1.0, 0.5)).unwrap();
        }
        for (i, (k0, k1)) in [(0, 1), (1, 0), (3, 1), (2, 1)].iter().enumerate() {
            g.set_coeff(&[*k0, *k1], one() * c64(0.2, i as f64)).unwrap();
        }
        // <M_Φ f, g> = <f, M_Φ* g> with both boxes large enough.
        let lhs = f.symbol_mult(&phi).unwrap().inner(&g);
        let rhs = f.inner(&g.symbol_mult_adjoint(&phi).unwrap());
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn residual_is_monotone_in_cutoff() {
        let e = CanonicalEmbedding::new(scalars(&[0.6, 0.3, 0.2]), &tol()).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..12 {
            let r = e.embedding_residual(&one(), &[n, n, n]);
            assert!(r >= -1e-15 && r <= prev + 1e-15);
            prev = r;
        }
    }

    #[test]
    fn shift_coordinates_intertwine_exactly() {
        let t = scalars(&[0.3, 0.4]);
        let e = CanonicalEmbedding::new(t.clone(), &tol()).unwrap();
        let models = vec![ModelOperator::Shift(0), ModelOperator::Shift(1)];
        let r = verify_intertwining(&e, &t, &models, &one(), &[6, 6], Execution::default()).unwrap();
        assert!(r.max_residual < 1e-15);
    }

    #[test]
    fn suggested_extents_reach_tail() {
        let t = scalars(&[0.5, 0.0, 0.9]);
        let ext = suggest_extents(&t, 8, 2048, 1e-5, 1 << 20);
        assert_eq!(ext[1], 9);
        assert!(0.5f64.powi(ext[0] as i32) <= 1e-5 && 0.9f64.powi(ext[2] as i32) <= 1e-5);
        let capped = suggest_extents(&t, 2, 2048, 1e-5, 100);
        assert!(capped.iter().product::<usize>() <= 100);
    }
}
