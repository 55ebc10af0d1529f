//! NN-type inner hierarchy at tensor order 2: `A` is accepted at depth `r`
//! when `(x^T x)^r (x o x)^T A (x o x)` is a sum of squares.

use super::gram::{add_sos_constraint, AffinePoly, GramConstraint};
use super::SparsePoly;
use crate::error::Result;
use crate::jordan::{structure_constants, ConeShape, StructureConstants, SymMatrix};
use crate::model::{AffineMat, ConicProblem};
use crate::scalar::Coeff;

/// Coordinates of `x o x` as quadratic forms.
pub fn square_polys<T: Coeff>(sc: &StructureConstants) -> Vec<SparsePoly<T>> {
    let n = sc.n;
    (0..n)
        .map(|i| {
            let mut p = SparsePoly::zero(n, 2);
            for (j, k, c) in sc.square_terms(i) {
                debug_assert_eq!(c.fract(), 0.0);
                let mut al = crate::combinatorics::MultiIndex::zero(n);
                al.0[j] += 1;
                al.0[k] += 1;
                p.add_term(al, T::from_i64(c as i64));
            }
            p
        })
        .collect()
}

/// `(x^T x)^r (x o x)^T A (x o x)` with `A` given row-major.
pub fn nn_poly_generic<T: Coeff>(a: &[T], r: u32, sc: &StructureConstants) -> SparsePoly<T> {
    let n = sc.n;
    assert_eq!(a.len(), n * n, "matrix size");
    let q = square_polys::<T>(sc);
    let mut f = SparsePoly::zero(n, 4);
    for i in 0..n {
        for j in 0..n {
            if a[i * n + j] == T::zero() {
                continue;
            }
            f = f.add(&q[i].mul(&q[j]).expect("same nvars").scale(&a[i * n + j])).expect("same degree");
        }
    }
    let mut norm = SparsePoly::zero(n, 2);
    for i in 0..n {
        let mut al = crate::combinatorics::MultiIndex::zero(n);
        al.0[i] = 2;
        norm.add_term(al, T::one());
    }
    norm.pow(r).mul(&f).expect("same nvars")
}

pub fn nn_substituted_poly(a: &SymMatrix, r: u32, shape: ConeShape) -> SparsePoly<f64> {
    nn_poly_with(a, r, &structure_constants(shape))
}

pub fn nn_poly_with(a: &SymMatrix, r: u32, sc: &StructureConstants) -> SparsePoly<f64> {
    let flat: Vec<f64> = (0..sc.n).flat_map(|i| (0..sc.n).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect();
    nn_poly_generic(&flat, r, sc)
}

/// Adds the NN condition for an affine matrix to `p`.
pub fn add_nn_constraints(p: &mut ConicProblem, a: &AffineMat, r: u32, sc: &StructureConstants) -> Result<GramConstraint> {
    let target = AffinePoly {
        constant: nn_poly_with(&a.constant, r, sc),
        terms: a.terms.iter().map(|(v, m)| (*v, nn_poly_with(m, r, sc))).collect(),
    };
    add_sos_constraint(p, &format!("nn{r}"), &target)
}

/// Feasibility problem "A is in the NN approximation at depth r".
pub fn nn_membership_constraints(a: &SymMatrix, r: u32, sc: &StructureConstants) -> Result<ConicProblem> {
    let mut p = ConicProblem::new(format!("nn-member-r{r}"));
    add_nn_constraints(&mut p, &AffineMat::constant(a.clone()), r, sc)?;
    Ok(p)
}
