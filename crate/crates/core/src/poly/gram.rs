//! Sum-of-squares certificates as PSD Gram matrices, plus the coefficient
//! matching equations that tie them to a target polynomial.

use super::SparsePoly;
use crate::combinatorics::{enumerate_eq, MultiIndex};
use crate::error::{Error, Result};
use crate::model::{ConicProblem, MatrixVar};
use std::collections::BTreeMap;

/// Polynomial whose coefficients are affine in problem variables:
/// `constant + sum_k x_k * poly_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePoly {
    pub constant: SparsePoly<f64>,
    pub terms: Vec<(usize, SparsePoly<f64>)>,
}

impl AffinePoly {
    pub fn constant(p: SparsePoly<f64>) -> Self {
        Self { constant: p, terms: vec![] }
    }

    pub fn degree(&self) -> u32 {
        self.constant.degree
    }

    pub fn nvars(&self) -> usize {
        self.constant.nvars
    }
}

/// Linear equations `lhs(x) = rhs` indexed by monomial.
#[derive(Debug, Clone, Default)]
pub struct PolyEquations {
    rows: BTreeMap<MultiIndex, (BTreeMap<usize, f64>, f64)>,
}

impl PolyEquations {
    pub fn new() -> Self {
        Self::default()
    }

    fn row(&mut self, g: MultiIndex) -> &mut (BTreeMap<usize, f64>, f64) {
        self.rows.entry(g).or_default()
    }

    fn add_lhs(&mut self, g: MultiIndex, var: usize, c: f64) {
        *self.row(g).0.entry(var).or_insert(0.0) += c;
    }

    /// `lhs += multiplier(x) * m(x)^T Q m(x)` with `m` the monomial basis.
    pub fn add_gram(&mut self, q: &MatrixVar, basis: &[MultiIndex], multiplier: &SparsePoly<f64>) {
        for b in 0..basis.len() {
            for a in 0..=b {
                let ab = basis[a].add(&basis[b]);
                let f = if a == b { 1.0 } else { 2.0 };
                for (d, c) in &multiplier.terms {
                    self.add_lhs(ab.add(d), q.index(a, b), f * c);
                }
            }
        }
    }

    /// Requires `lhs = target`.
    pub fn set_target(&mut self, target: &AffinePoly) {
        for (g, c) in &target.constant.terms {
            self.row(g.clone()).1 += c;
        }
        for (var, poly) in &target.terms {
            for (g, c) in &poly.terms {
                self.add_lhs(g.clone(), *var, -c);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes one equality per monomial, skipping trivial `0 = 0` rows.
    pub fn emit(self, p: &mut ConicProblem, label: &str) -> usize {
        let mut count = 0;
        for (g, (lhs, rhs)) in self.rows {
            let terms: Vec<(usize, f64)> = lhs.into_iter().filter(|(_, c)| *c != 0.0).collect();
            if terms.is_empty() && rhs == 0.0 {
                continue;
            }
            let name = g.0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",");
            p.add_equality(format!("{label}[{name}]"), terms, rhs);
            count += 1;
        }
        count
    }
}

/// Gram data for one SOS condition.
#[derive(Debug, Clone)]
pub struct GramConstraint {
    pub gram: MatrixVar,
    pub basis: Vec<MultiIndex>,
    pub equations: usize,
}

/// Adds "target is a sum of squares" to `p`.
pub fn add_sos_constraint(p: &mut ConicProblem, label: &str, target: &AffinePoly) -> Result<GramConstraint> {
    let deg = target.degree();
    if deg % 2 == 1 {
        return Err(Error::OddDegree(deg as usize));
    }
    let d = target.nvars();
    let basis = enumerate_eq(d, deg / 2);
    let gram = p.add_psd_var(&format!("{label}.Q"), basis.len());
    let mut eqs = PolyEquations::new();
    eqs.add_gram(&gram, &basis, &SparsePoly::constant(d, 1.0));
    eqs.set_target(target);
    let equations = eqs.emit(p, label);
    Ok(GramConstraint { gram, basis, equations })
}

/// Feasibility problem "target is SOS" for a fixed polynomial.
pub fn sos_to_psd(target: &SparsePoly<f64>) -> Result<(ConicProblem, GramConstraint)> {
    let mut p = ConicProblem::new("sos");
    let g = add_sos_constraint(&mut p, "sos", &AffinePoly::constant(target.clone()))?;
    Ok((p, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(d: usize, deg: u32, terms: &[(&[u32], f64)]) -> SparsePoly<f64> {
        let mut p = SparsePoly::zero(d, deg);
        for (a, c) in terms {
            p.add_term(MultiIndex(a.to_vec()), *c);
        }
        p
    }

    #[test]
    fn gram_equations_for_a_square() {
        // (x1 - x2)^2
        let t = poly(2, 2, &[(&[2, 0], 1.0), (&[1, 1], -2.0), (&[0, 2], 1.0)]);
        let (p, g) = sos_to_psd(&t).unwrap();
        assert_eq!(g.basis.len(), 2);
        assert_eq!(g.equations, 3);
        // Q = [[1,-1],[-1,1]] satisfies every equation
        let mut x = vec![0.0; p.num_vars()];
        x[g.gram.index(0, 0)] = 1.0;
        x[g.gram.index(0, 1)] = -1.0;
        x[g.gram.index(1, 1)] = 1.0;
        for eq in &p.equalities {
            let lhs: f64 = eq.terms.iter().map(|(v, c)| c * x[*v]).sum();
            assert_eq!(lhs, eq.rhs);
        }
    }

    #[test]
    fn odd_degree_is_rejected() {
        let t = poly(2, 3, &[(&[3, 0], 1.0)]);
        assert!(matches!(sos_to_psd(&t), Err(Error::OddDegree(3))));
    }

    #[test]
    fn one_equation_per_monomial() {
        let t = poly(3, 4, &[(&[2, 2, 0], 1.0)]);
        let (_, g) = sos_to_psd(&t).unwrap();
        assert_eq!(g.equations, enumerate_eq(3, 4).len());
    }
}
