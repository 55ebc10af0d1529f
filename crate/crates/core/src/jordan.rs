//! Euclidean Jordan algebra of `R^{n1} x R^{n2}`, whose cone of squares is
//! `K = R_+^{n1} x L^{n2}`.
//!
//! Coordinates follow the order `(11..1n1, 21..2n2)`: orthant entries first,
//! then the second-order block `(t, w)`.

use crate::error::{Error, Result};
use crate::scalar::Coeff;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub type SymMatrix = DMatrix<f64>;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConeShape {
    pub n1: usize,
    pub n2: usize,
}

impl ConeShape {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n2 < 2 {
            return Err(Error::InvalidShape { n1, n2, reason: "n2 must be at least 2" });
        }
        Ok(Self { n1, n2 })
    }

    /// Total dimension `n = n1 + n2`.
    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    /// Rank of the algebra, `n1 + 2`.
    pub fn rank(&self) -> usize {
        self.n1 + 2
    }

    /// Index of coordinate `21` (the SOC head `t`).
    pub fn soc_start(&self) -> usize {
        self.n1
    }

    pub fn identity(&self) -> AlgebraElement {
        let mut data = vec![0.0; self.n()];
        for v in data.iter_mut().take(self.n1 + 1) {
            *v = 1.0;
        }
        AlgebraElement { shape: *self, data }
    }

    pub fn default_tie_break(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n2 - 1];
        v[0] = 1.0;
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraElement {
    pub shape: ConeShape,
    pub data: Vec<f64>,
}

impl AlgebraElement {
    pub fn new(shape: ConeShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.n() {
            return Err(Error::DimensionMismatch { expected: shape.n(), got: data.len() });
        }
        Ok(Self { shape, data })
    }

    pub fn from_parts(orthant: &[f64], soc: &[f64]) -> Result<Self> {
        let shape = ConeShape::new(orthant.len(), soc.len())?;
        let mut data = orthant.to_vec();
        data.extend_from_slice(soc);
        Ok(Self { shape, data })
    }

    pub fn orthant_part(&self) -> &[f64] {
        &self.data[..self.shape.n1]
    }

    pub fn soc_part(&self) -> &[f64] {
        &self.data[self.shape.n1..]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Jordan product on raw coordinate slices; works over any coefficient ring.
pub fn product_slices<T: Coeff>(n1: usize, x: &[T], y: &[T]) -> Vec<T> {
    let mut out: Vec<T> = x[..n1].iter().zip(&y[..n1]).map(|(a, b)| a.clone() * b.clone()).collect();
    let (xs, ys) = (&x[n1..], &y[n1..]);
    let mut dot = T::zero();
    for (a, b) in xs.iter().zip(ys) {
        dot = dot + a.clone() * b.clone();
    }
    out.push(dot);
    for k in 1..xs.len() {
        out.push(xs[0].clone() * ys[k].clone() + ys[0].clone() * xs[k].clone());
    }
    out
}

pub fn jordan_product(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    if x.shape != y.shape {
        return Err(Error::DimensionMismatch { expected: x.shape.n(), got: y.shape.n() });
    }
    Ok(AlgebraElement { shape: x.shape, data: product_slices(x.shape.n1, &x.data, &y.data) })
}

/// Sparse structure constants `(e_j o e_k) . e_i` of the canonical basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    pub n: usize,
    /// `(i, j, k, value)` with every nonzero listed once per ordered `(j, k)`.
    pub entries: Vec<(usize, usize, usize, f64)>,
}

impl StructureConstants {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries
            .iter()
            .find(|&&(a, b, c, _)| a == i && b == j && c == k)
            .map(|e| e.3)
            .unwrap_or(0.0)
    }

    /// Constants of the pure orthant algebra `R^n` (componentwise product).
    pub fn orthant(n: usize) -> Self {
        Self { n, entries: (0..n).map(|i| (i, i, i, 1.0)).collect() }
    }

    /// Coordinate `i` of `x o x` as a list of `(j, k, coefficient)`.
    pub fn square_terms(&self, i: usize) -> Vec<(usize, usize, f64)> {
        self.entries.iter().filter(|e| e.0 == i).map(|e| (e.1, e.2, e.3)).collect()
    }
}

pub fn structure_constants(shape: ConeShape) -> StructureConstants {
    let mut entries: Vec<(usize, usize, usize, f64)> = (0..shape.n1).map(|i| (i, i, i, 1.0)).collect();
    let s = shape.soc_start();
    entries.push((s, s, s, 1.0));
    for j in 1..shape.n2 {
        // e21 o e2j = e2j, and e2j o e2j = e21
        entries.push((s + j, s, s + j, 1.0));
        entries.push((s + j, s + j, s, 1.0));
        entries.push((s, s + j, s + j, 1.0));
    }
    entries.sort_by_key(|e| (e.0, e.1, e.2));
    StructureConstants { n: shape.n(), entries }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JordanFrame {
    pub shape: ConeShape,
    pub v: Vec<f64>,
    pub elements: Vec<AlgebraElement>,
}

impl JordanFrame {
    /// Largest deviation from idempotency, orthogonality and completeness.
    pub fn defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let n = self.shape.n();
        let mut sum = vec![0.0; n];
        for (i, ci) in self.elements.iter().enumerate() {
            for (acc, v) in sum.iter_mut().zip(&ci.data) {
                *acc += v;
            }
            for (j, cj) in self.elements.iter().enumerate() {
                let p = product_slices(self.shape.n1, &ci.data, &cj.data);
                for k in 0..n {
                    let want = if i == j { ci.data[k] } else { 0.0 };
                    worst = worst.max((p[k] - want).abs());
                }
            }
        }
        let e = self.shape.identity();
        for k in 0..n {
            worst = worst.max((sum[k] - e.data[k]).abs());
        }
        worst
    }
}

fn check_unit(v: &[f64]) -> Result<()> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitVector(norm));
    }
    Ok(())
}

/// Frame `(e_11, .., e_1n1, (1, v)/2, (1, -v)/2)`.
pub fn frame_at(shape: ConeShape, v: &[f64]) -> Result<JordanFrame> {
    if v.len() != shape.n2 - 1 {
        return Err(Error::DimensionMismatch { expected: shape.n2 - 1, got: v.len() });
    }
    check_unit(v)?;
    let n = shape.n();
    let mut elements = Vec::with_capacity(shape.rank());
    for i in 0..shape.n1 {
        let mut d = vec![0.0; n];
        d[i] = 1.0;
        elements.push(AlgebraElement { shape, data: d });
    }
    for sign in [1.0, -1.0] {
        let mut d = vec![0.0; n];
        d[shape.n1] = 0.5;
        for (k, vk) in v.iter().enumerate() {
            d[shape.n1 + 1 + k] = 0.5 * sign * vk;
        }
        elements.push(AlgebraElement { shape, data: d });
    }
    Ok(JordanFrame { shape, v: v.to_vec(), elements })
}

/// Exact frame elements for a rational unit vector `v`.
pub fn frame_exact<T: Coeff>(n1: usize, v: &[T], half: T) -> Vec<Vec<T>> {
    let n = n1 + 1 + v.len();
    let mut out = Vec::new();
    for i in 0..n1 {
        let mut d = vec![T::zero(); n];
        d[i] = T::one();
        out.push(d);
    }
    for neg in [false, true] {
        let mut d = vec![T::zero(); n];
        d[n1] = half.clone();
        for (k, vk) in v.iter().enumerate() {
            let c = half.clone() * vk.clone();
            d[n1 + 1 + k] = if neg { -c } else { c };
        }
        out.push(d);
    }
    out
}

/// Eigenvalues and a Jordan frame with `x = sum_i lambda_i c_i`.
pub fn spectral_decompose(x: &AlgebraElement, tie_break_v: &[f64]) -> Result<(Vec<f64>, JordanFrame)> {
    let shape = x.shape;
    let soc = x.soc_part();
    let t = soc[0];
    let w = &soc[1..];
    let wn = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    let v: Vec<f64> = if wn > 0.0 { w.iter().map(|a| a / wn).collect() } else { tie_break_v.to_vec() };
    let frame = frame_at(shape, &v)?;
    let mut eig = x.orthant_part().to_vec();
    eig.push(t + wn);
    eig.push(t - wn);
    Ok((eig, frame))
}

pub fn reconstruct(eig: &[f64], frame: &JordanFrame) -> AlgebraElement {
    let mut d = vec![0.0; frame.shape.n()];
    for (l, c) in eig.iter().zip(&frame.elements) {
        for (acc, v) in d.iter_mut().zip(&c.data) {
            *acc += l * v;
        }
    }
    AlgebraElement { shape: frame.shape, data: d }
}

pub fn check_symmetric(a: &SymMatrix, n: usize) -> Result<()> {
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.nrows() });
    }
    let scale = a.amax().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// `P_ij = c_i^T A c_j` for the frame elements.
pub fn project_to_frame(a: &SymMatrix, frame: &JordanFrame) -> Result<SymMatrix> {
    let n = frame.shape.n();
    check_symmetric(a, n)?;
    let rk = frame.elements.len();
    let cols = DMatrix::from_fn(n, rk, |i, j| frame.elements[j].data[i]);
    let p = cols.transpose() * a * &cols;
    Ok((&p + p.transpose()) * 0.5)
}

pub fn cone_membership(x: &AlgebraElement, tol: f64) -> bool {
    if x.orthant_part().iter().any(|&v| v < -tol) {
        return false;
    }
    let soc = x.soc_part();
    let wn = soc[1..].iter().map(|a| a * a).sum::<f64>().sqrt();
    soc[0] >= wn - tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn el(o: &[f64], s: &[f64]) -> AlgebraElement {
        AlgebraElement::from_parts(o, s).unwrap()
    }

    #[test]
    fn products_match_examples() {
        let p = product_slices::<f64>(2, &[1.0, 2.0, 1.0, 0.0], &[3.0, 4.0, 1.0, 0.0]);
        assert_eq!(p, vec![3.0, 8.0, 1.0, 0.0]);
        let e = el(&[], &[1.0, 0.0]);
        let x = el(&[], &[2.0, 3.0]);
        assert_eq!(jordan_product(&e, &x).unwrap().data, vec![2.0, 3.0]);
        let a = el(&[], &[1.0, 1.0, 0.0]);
        let b = el(&[], &[1.0, 0.0, 1.0]);
        assert_eq!(jordan_product(&a, &b).unwrap().data, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn mismatched_product_is_an_error() {
        let a = el(&[1.0], &[1.0, 0.0]);
        let b = el(&[], &[1.0, 0.0]);
        assert!(jordan_product(&a, &b).is_err());
    }

    #[test]
    fn structure_constants_blocks() {
        let sc = structure_constants(ConeShape::new(1, 3).unwrap());
        assert_eq!(sc.get(0, 0, 0), 1.0);
        assert_eq!(sc.get(1, 2, 2), 1.0);
        assert_eq!(sc.get(2, 1, 2), 1.0);
        assert_eq!(sc.get(2, 2, 1), 1.0);
        for i in 0..4 {
            assert_eq!(sc.get(i, 0, 1), 0.0);
            assert_eq!(sc.get(i, 1, 0), 0.0);
        }
        for &(i, j, k, v) in &sc.entries {
            assert_eq!(sc.get(i, k, j), v);
        }
    }

    #[test]
    fn spectral_examples() {
        let x = el(&[], &[3.0, 0.0, 4.0]);
        let (eig, fr) = spectral_decompose(&x, &[1.0, 0.0]).unwrap();
        assert_eq!(eig, vec![7.0, -1.0]);
        assert_eq!(fr.elements[0].data, vec![0.5, 0.0, 0.5]);
        assert_eq!(fr.elements[1].data, vec![0.5, 0.0, -0.5]);

        let shape = ConeShape::new(2, 3).unwrap();
        let (eig, _) = spectral_decompose(&shape.identity(), &shape.default_tie_break()).unwrap();
        assert!(eig.iter().all(|&l| l == 1.0));

        let x = el(&[5.0], &[2.0, 0.0]);
        let (eig, fr) = spectral_decompose(&x, &[1.0]).unwrap();
        assert_eq!(eig, vec![5.0, 2.0, 2.0]);
        assert_eq!(fr.v, vec![1.0]);
    }

    #[test]
    fn frame_examples() {
        let shape = ConeShape::new(1, 2).unwrap();
        let fr = frame_at(shape, &[1.0]).unwrap();
        assert_eq!(fr.elements[0].data, vec![1.0, 0.0, 0.0]);
        assert_eq!(fr.elements[1].data, vec![0.0, 0.5, 0.5]);
        assert_eq!(fr.elements[2].data, vec![0.0, 0.5, -0.5]);
        assert_eq!(fr.defect(), 0.0);
        let fr = frame_at(ConeShape::new(0, 3).unwrap(), &[0.0, 1.0]).unwrap();
        assert_eq!(fr.elements[0].data, vec![0.5, 0.0, 0.5]);
        assert!(frame_at(shape, &[0.5]).is_err());
    }

    #[test]
    fn exact_frame_is_exact() {
        use crate::scalar::rat;
        // (3/5, 4/5) is a rational unit vector
        let v = vec![rat(3, 5), rat(4, 5)];
        let fr = frame_exact(2, &v, rat(1, 2));
        for (i, ci) in fr.iter().enumerate() {
            for (j, cj) in fr.iter().enumerate() {
                let p = product_slices(2, ci, cj);
                if i == j {
                    assert_eq!(&p, ci);
                } else {
                    assert!(p.iter().all(|q| *q == rat(0, 1)));
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        let shape = ConeShape::new(1, 2).unwrap();
        let fr = frame_at(shape, &[1.0]).unwrap();
        let p = project_to_frame(&SymMatrix::identity(3, 3), &fr).unwrap();
        // oracle: c_i . c_j by hand
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.5, 0.5]));
        assert!((p - expect).amax() < 1e-15);
        let p0 = project_to_frame(&SymMatrix::zeros(3, 3), &fr).unwrap();
        assert_eq!(p0.amax(), 0.0);

        let shape = ConeShape::new(0, 2).unwrap();
        let fr = frame_at(shape, &[1.0]).unwrap();
        let p = project_to_frame(&SymMatrix::from_element(2, 2, 1.0), &fr).unwrap();
        assert!((p - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn membership_examples() {
        let shape = ConeShape::new(1, 3).unwrap();
        assert!(cone_membership(&shape.identity(), 0.0));
        assert!(!cone_membership(&el(&[-1.0], &[1.0, 0.0]), 0.0));
        assert!(cone_membership(&el(&[0.0], &[0.0, 0.0]), 0.0));
    }

    fn shape_and_vec() -> impl Strategy<Value = (ConeShape, Vec<f64>)> {
        (0usize..4, 2usize..5).prop_flat_map(|(n1, n2)| {
            (Just(ConeShape::new(n1, n2).unwrap()), prop::collection::vec(-10.0f64..10.0, n1 + n2))
        })
    }

    proptest! {
        #[test]
        fn decompose_reconstructs((shape, d) in shape_and_vec()) {
            let x = AlgebraElement::new(shape, d).unwrap();
            let (eig, fr) = spectral_decompose(&x, &shape.default_tie_break()).unwrap();
            let y = reconstruct(&eig, &fr);
            let err = x.data.iter().zip(&y.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-12 * (1.0 + x.norm()));
            prop_assert!(fr.defect() <= 1e-12);
        }

        #[test]
        fn membership_iff_nonnegative_eigenvalues((shape, d) in shape_and_vec()) {
            let x = AlgebraElement::new(shape, d).unwrap();
            let (eig, _) = spectral_decompose(&x, &shape.default_tie_break()).unwrap();
            prop_assert_eq!(cone_membership(&x, 0.0), eig.iter().all(|&l| l >= 0.0));
        }
    }
}
