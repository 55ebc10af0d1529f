//! Reduced KKT system
//!
//! ```text
//! [ 0  A^T  G^T    ] [dx]   [bx]
//! [ A  0    0      ] [dy] = [by]
//! [ G  0   -W^T W  ] [dz]   [bz]
//! ```
//!
//! eliminated to `[G^T H G, A^T; A, 0]` with `H = W^{-1} W^{-T}`, factored
//! densely with a small static regularization and iterative refinement.

use super::cones::{Op, Scaling};
use super::standard::StandardForm;
use nalgebra::{DMatrix, DVector, LU, Dyn};

pub struct Kkt<'a> {
    sf: &'a StandardForm,
    scalings: &'a [Scaling],
    lu: LU<f64, Dyn, Dyn>,
}

const REFINE_STEPS: usize = 5;

impl<'a> Kkt<'a> {
    pub fn factor(sf: &'a StandardForm, scalings: &'a [Scaling]) -> Self {
        let n = sf.n;
        let p = sf.a.nrows();
        let mut k0 = DMatrix::zeros(n + p, n + p);
        for (b, w) in sf.blocks.iter().zip(scalings) {
            if b.cols.is_empty() {
                continue;
            }
            let mut scaled = DMatrix::zeros(b.mat.nrows(), b.cols.len());
            for c in 0..b.cols.len() {
                let col: Vec<f64> = b.mat.column(c).iter().copied().collect();
                if col.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let s = w.apply(Op::Winvt, &col);
                scaled.column_mut(c).copy_from_slice(&s);
            }
            let gram = scaled.transpose() * &scaled;
            for (i, &ci) in b.cols.iter().enumerate() {
                for (j, &cj) in b.cols.iter().enumerate() {
                    k0[(ci, cj)] += gram[(i, j)];
                }
            }
        }
        for r in 0..p {
            for c in 0..n {
                let v = sf.a[(r, c)];
                if v != 0.0 {
                    k0[(n + r, c)] = v;
                    k0[(c, n + r)] = v;
                }
            }
        }
        let scale = (0..n).map(|i| k0[(i, i)].abs()).fold(1.0, f64::max);
        let delta = 1e-15 * scale;
        let mut k = k0.clone();
        for i in 0..n {
            k[(i, i)] += delta;
        }
        for i in n..n + p {
            k[(i, i)] -= delta;
        }
        Self { sf, scalings, lu: k.lu() }
    }

    fn apply_h(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = Vec::with_capacity(v.len());
        let mut off = 0;
        for (b, w) in self.sf.blocks.iter().zip(self.scalings) {
            let d = b.cone.dim();
            let seg: Vec<f64> = v.rows(off, d).iter().copied().collect();
            out.extend(w.apply(Op::Winv, &w.apply(Op::Winvt, &seg)));
            off += d;
        }
        DVector::from_vec(out)
    }

    fn apply_wtw(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = Vec::with_capacity(v.len());
        let mut off = 0;
        for (b, w) in self.sf.blocks.iter().zip(self.scalings) {
            let d = b.cone.dim();
            let seg: Vec<f64> = v.rows(off, d).iter().copied().collect();
            out.extend(w.apply(Op::Wt, &w.apply(Op::W, &seg)));
            off += d;
        }
        DVector::from_vec(out)
    }

    fn solve_reduced(&self, bx: &DVector<f64>, by: &DVector<f64>, bz: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let n = self.sf.n;
        let p = by.len();
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&(bx + self.sf.gt_mul(&self.apply_h(bz))));
        rhs.rows_mut(n, p).copy_from(by);
        let sol = self.lu.solve(&rhs).unwrap_or_else(|| DVector::zeros(n + p));
        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, p).into_owned();
        let dz = self.apply_h(&(self.sf.g_mul(&dx) - bz));
        (dx, dy, dz)
    }

    /// Returns `(dx, dy, dz)`. Refinement targets the unreduced system, which
    /// keeps the directions accurate when `H` is badly conditioned.
    pub fn solve(&self, bx: &DVector<f64>, by: &DVector<f64>, bz: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let (mut dx, mut dy, mut dz) = self.solve_reduced(bx, by, bz);
        let scale = 1.0 + bx.amax().max(by.amax()).max(bz.amax());
        let mut last = f64::INFINITY;
        for _ in 0..REFINE_STEPS {
            let rx = bx - self.sf.a.transpose() * &dy - self.sf.gt_mul(&dz);
            let ry = by - &self.sf.a * &dx;
            let rz = bz - self.sf.g_mul(&dx) + self.apply_wtw(&dz);
            let err = rx.amax().max(ry.amax()).max(rz.amax());
            if err <= 1e-15 * scale || err >= 0.5 * last {
                break;
            }
            last = err;
            let (cx, cy, cz) = self.solve_reduced(&rx, &ry, &rz);
            dx += cx;
            dy += cy;
            dz += cz;
        }
        (dx, dy, dz)
    }
}
