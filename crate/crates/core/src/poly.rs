//! Polynomials in `n` commuting variables with complex coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ZERO};
use crate::operator_core::OperatorTuple;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    /// Monomials sorted by exponent, like terms merged.
    terms: Vec<(Vec<usize>, Complex64)>,
}

impl Polynomial {
    pub fn new(n: usize, terms: Vec<(Vec<usize>, Complex64)>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
        for (i, (k, c)) in terms.into_iter().enumerate() {
            if k.len() != n {
                return Err(Error::Input(format!("monomial {i} has {} exponents, expected {n}", k.len())));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Input(format!("monomial {i} has a non-finite coefficient")));
            }
            *merged.entry(k).or_insert(ZERO) += c;
        }
        Ok(Self { n, terms: merged.into_iter().collect() })
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        Self { n, terms: vec![(vec![0; n], c)] }
    }

    pub fn monomial(k: Vec<usize>, c: Complex64) -> Self {
        Self { n: k.len(), terms: vec![(k, c)] }
    }

    pub fn vars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Vec<usize>, Complex64)] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(k, _)| k.iter().sum()).max().unwrap_or(0)
    }

    /// `Σ |c_k| · |k|`, a Lipschitz constant of `p` on the closed polydisc
    /// with respect to the max-norm on angle vectors.
    pub fn lipschitz(&self) -> f64 {
        self.terms.iter().map(|(k, c)| c.norm() * k.iter().sum::<usize>() as f64).sum()
    }

    /// Direct evaluation at a point.
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.n, "point has wrong number of coordinates");
        self.terms
            .iter()
            .map(|(k, c)| k.iter().zip(z).fold(*c, |acc, (&e, &zi)| acc * zi.powu(e as u32)))
            .sum()
    }

    /// `q(z_2, ..., z_n) = p(w, z_2, ..., z_n)`.
    pub fn specialize_first(&self, w: Complex64) -> Self {
        assert!(self.n >= 1, "no variable to specialize");
        let mut merged: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
        for (k, c) in &self.terms {
            *merged.entry(k[1..].to_vec()).or_insert(ZERO) += c * w.powu(k[0] as u32);
        }
        Self { n: self.n - 1, terms: merged.into_iter().collect() }
    }

    /// Dense coefficients of a one-variable polynomial, constant term first.
    pub fn univariate_coeffs(&self) -> Vec<Complex64> {
        assert_eq!(self.n, 1, "not a one-variable polynomial");
        let mut out = vec![ZERO; self.degree() + 1];
        for (k, c) in &self.terms {
            out[k[0]] += c;
        }
        out
    }

    /// Constant value of a polynomial in zero variables.
    pub fn constant_value(&self) -> Complex64 {
        assert_eq!(self.n, 0, "polynomial still has variables");
        self.terms.iter().map(|(_, c)| *c).sum()
    }

    /// Evaluation by specializing the leading variables one at a time and
    /// finishing with Horner's rule in the last one. Grid sweeps use the
    /// same sequence of operations, so both give bit-identical values.
    pub fn eval_nested(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.n, "point has wrong number of coordinates");
        if self.n == 0 {
            return self.constant_value();
        }
        let mut q = self.clone();
        for &w in &z[..self.n - 1] {
            q = q.specialize_first(w);
        }
        horner(&q.univariate_coeffs(), z[self.n - 1])
    }

    /// `p(T) = Σ c_k T^k`, with the powers of every `T_i` computed once.
    pub fn eval_tuple(&self, t: &OperatorTuple) -> Result<CMat> {
        if t.len() != self.n {
            return Err(Error::Input(format!("polynomial has {} variables, tuple has {} operators", self.n, t.len())));
        }
        let mut powers: Vec<Vec<CMat>> = (0..self.n).map(|_| vec![linalg::identity(t.dim())]).collect();
        for (k, _) in &self.terms {
            for (i, &e) in k.iter().enumerate() {
                while powers[i].len() <= e {
                    let next = powers[i].last().expect("non-empty") * t.op(i);
                    powers[i].push(next);
                }
            }
        }
        let mut acc = linalg::zeros(t.dim(), t.dim());
        for (k, c) in &self.terms {
            let mut m = linalg::identity(t.dim());
            for (i, &e) in k.iter().enumerate() {
                if e > 0 {
                    m *= &powers[i][e];
                }
            }
            acc += m * *c;
        }
        Ok(acc)
    }
}

pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn scalars() -> OperatorTuple {
        OperatorTuple::from_scalars(&[c64(0.3, 0.0), c64(0.4, 0.0), c64(0.5, 0.0)]).unwrap()
    }

    #[test]
    fn tuple_evaluation_examples() {
        let t = scalars();
        let one = Polynomial::constant(3, c64(1.0, 0.0));
        assert_eq!(one.eval_tuple(&t).unwrap()[(0, 0)], c64(1.0, 0.0));
        let z1 = Polynomial::monomial(vec![1, 0, 0], c64(1.0, 0.0));
        assert!((z1.eval_tuple(&t).unwrap()[(0, 0)] - c64(0.3, 0.0)).norm() < 1e-16);
        let p = Polynomial::new(3, vec![(vec![1, 1, 0], c64(1.0, 0.0)), (vec![0, 0, 2], c64(-1.0, 0.0))]).unwrap();
        assert!((p.eval_tuple(&t).unwrap()[(0, 0)] - c64(-0.13, 0.0)).norm() < 1e-15);
        assert!(Polynomial::constant(2, c64(1.0, 0.0)).eval_tuple(&t).is_err());
    }

    #[test]
    fn like_terms_merge() {
        let p = Polynomial::new(2, vec![(vec![1, 0], c64(1.0, 0.0)), (vec![1, 0], c64(2.0, 1.0))]).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].1, c64(3.0, 1.0));
        assert!(Polynomial::new(2, vec![(vec![1], c64(1.0, 0.0))]).is_err());
    }

    #[test]
    fn nested_matches_direct() {
        let p = Polynomial::new(
            3,
            vec![(vec![1, 1, 1], c64(1.0, 0.0)), (vec![2, 0, 1], c64(0.0, -0.5)), (vec![0, 0, 3], c64(0.25, 0.25))],
        )
        .unwrap();
        let z = [c64(0.3, 0.2), c64(-0.7, 0.1), Complex64::from_polar(1.0, 2.0)];
        assert!((p.eval(&z) - p.eval_nested(&z)).norm() < 1e-15);
        assert!((p.lipschitz() - (3.0 + 1.5 + 3.0 * 0.5f64.sqrt() * 0.5)).abs() < 1e-15);
    }
}
