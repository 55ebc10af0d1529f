//! Sparse homogeneous polynomials and the polynomial hierarchies (ZVP, NN)
//! built on them.

pub mod gram;
pub mod nn;
pub mod zvp;

use crate::combinatorics::MultiIndex;
use crate::error::{Error, Result};
use crate::scalar::Coeff;
use std::collections::BTreeMap;

/// Homogeneous polynomial of fixed degree in `d` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePoly<T> {
    pub nvars: usize,
    pub degree: u32,
    pub terms: BTreeMap<MultiIndex, T>,
}

impl<T: Coeff> SparsePoly<T> {
    pub fn zero(nvars: usize, degree: u32) -> Self {
        Self { nvars, degree, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        let mut p = Self::zero(nvars, 0);
        p.add_term(MultiIndex::zero(nvars), c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut p = Self::zero(nvars, 1);
        p.add_term(MultiIndex::unit(nvars, i), T::one());
        p
    }

    /// Linear form `sum_i c_i x_i`.
    pub fn linear(coeffs: &[T]) -> Self {
        let mut p = Self::zero(coeffs.len(), 1);
        for (i, c) in coeffs.iter().enumerate() {
            p.add_term(MultiIndex::unit(coeffs.len(), i), c.clone());
        }
        p
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: T) {
        assert_eq!(alpha.degree(), self.degree, "term degree");
        if c == T::zero() {
            return;
        }
        let entry = self.terms.entry(alpha.clone()).or_insert_with(T::zero);
        *entry = entry.clone() + c;
        if *entry == T::zero() {
            self.terms.remove(&alpha);
        }
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> T {
        self.terms.get(alpha).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zero(self.nvars, self.degree);
        for (a, v) in &self.terms {
            out.add_term(a.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.nvars != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: other.nvars });
        }
        if other.degree != self.degree && !other.is_zero() && !self.is_zero() {
            return Err(Error::DegreeMismatch { expected: self.degree as usize, got: other.degree as usize });
        }
        let mut out = if self.is_zero() { Self::zero(self.nvars, other.degree) } else { self.clone() };
        for (a, v) in &other.terms {
            out.add_term(a.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if other.nvars != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: other.nvars });
        }
        let mut out = Self::zero(self.nvars, self.degree + other.degree);
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                out.add_term(a.add(b), u.clone() * v.clone());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.nvars, T::one());
        for _ in 0..k {
            out = out.mul(self).expect("same variable count");
        }
        out
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (a, c) in &self.terms {
            let mut m = c.clone();
            for (xi, &e) in x.iter().zip(&a.0) {
                for _ in 0..e {
                    m = m * xi.clone();
                }
            }
            acc = acc + m;
        }
        acc
    }
}

impl SparsePoly<f64> {
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.abs()))
    }
}
