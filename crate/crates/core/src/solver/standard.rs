//! Conversion of a [`ConicProblem`] to `min c^T x` s.t. `A x = b`,
//! `G x + s = h`, `s in K`.

use super::cones::Cone;
use crate::model::{ConeKind, ConicProblem};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::SQRT_2;

/// Rows of `G` and `h` belonging to one cone, restricted to the columns
/// that actually appear.
#[derive(Debug, Clone)]
pub struct GBlock {
    pub cone: Cone,
    pub cols: Vec<usize>,
    pub mat: DMatrix<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StandardForm {
    pub n: usize,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub blocks: Vec<GBlock>,
    /// Row of `A` for each original equality, `None` when the row was empty.
    pub eq_rows: Vec<Option<usize>>,
    /// An empty equality row with nonzero right-hand side.
    pub trivially_infeasible: Option<usize>,
}

fn svec_index(i: usize, j: usize) -> usize {
    j * (j + 1) / 2 + i
}

pub(crate) fn entry_pos(kind: ConeKind, i: usize, j: usize) -> (usize, f64) {
    match kind {
        ConeKind::Psd(_) if i != j => (svec_index(i, j), SQRT_2),
        ConeKind::Psd(_) => (svec_index(i, j), 1.0),
        _ => (i, 1.0),
    }
}

pub fn cone_of(kind: ConeKind) -> Cone {
    match kind {
        ConeKind::Nonneg(k) => Cone::Nonneg(k),
        ConeKind::Soc(k) => Cone::Soc(k),
        ConeKind::Psd(k) => Cone::Psd(k),
    }
}

impl StandardForm {
    pub fn from_problem(p: &ConicProblem) -> Self {
        let n = p.num_vars();
        let mut c = DVector::zeros(n);
        for &(v, w) in &p.objective {
            c[v] -= w;
        }
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        let mut eq_rows = Vec::new();
        let mut trivially_infeasible = None;
        for (q, eq) in p.equalities.iter().enumerate() {
            let mut dense: std::collections::BTreeMap<usize, f64> = Default::default();
            for &(v, w) in &eq.terms {
                *dense.entry(v).or_insert(0.0) += w;
            }
            dense.retain(|_, w| *w != 0.0);
            if dense.is_empty() {
                if eq.rhs != 0.0 && trivially_infeasible.is_none() {
                    trivially_infeasible = Some(q);
                }
                eq_rows.push(None);
            } else {
                eq_rows.push(Some(rows.len()));
                rows.push((dense.into_iter().collect(), eq.rhs));
            }
        }
        let mut a = DMatrix::zeros(rows.len(), n);
        let mut b = DVector::zeros(rows.len());
        for (r, (terms, rhs)) in rows.iter().enumerate() {
            for &(v, w) in terms {
                a[(r, v)] = w;
            }
            b[r] = *rhs;
        }
        let blocks = p
            .cones
            .iter()
            .map(|con| {
                let cone = cone_of(con.kind);
                let dim = cone.dim();
                let mut h = vec![0.0; dim];
                for e in &con.constant {
                    let (pos, f) = entry_pos(con.kind, e.i, e.j);
                    h[pos] += f * e.v;
                }
                let mut cols: Vec<usize> = con.linear.iter().map(|e| e.var).collect();
                cols.sort_unstable();
                cols.dedup();
                let mut mat = DMatrix::zeros(dim, cols.len());
                for e in &con.linear {
                    let col = cols.binary_search(&e.var).expect("column present");
                    let (pos, f) = entry_pos(con.kind, e.i, e.j);
                    mat[(pos, col)] -= f * e.v;
                }
                GBlock { cone, cols, mat, h }
            })
            .collect();
        Self { n, c, a, b, blocks, eq_rows, trivially_infeasible }
    }

    pub fn m(&self) -> usize {
        self.blocks.iter().map(|b| b.cone.dim()).sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut o = Vec::with_capacity(self.blocks.len() + 1);
        let mut acc = 0;
        o.push(0);
        for b in &self.blocks {
            acc += b.cone.dim();
            o.push(acc);
        }
        o
    }

    pub fn h(&self) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.blocks.iter().flat_map(|b| b.h.iter().copied()))
    }

    /// `G x`.
    pub fn g_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.m());
        for b in &self.blocks {
            let xs = DVector::from_iterator(b.cols.len(), b.cols.iter().map(|&c| x[c]));
            out.extend((&b.mat * xs).iter().copied());
        }
        DVector::from_vec(out)
    }

    /// `G^T z`.
    pub fn gt_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        let mut off = 0;
        for b in &self.blocks {
            let d = b.cone.dim();
            let zs = z.rows(off, d);
            let t = b.mat.transpose() * zs;
            for (k, &c) in b.cols.iter().enumerate() {
                out[c] += t[k];
            }
            off += d;
        }
        out
    }
}
