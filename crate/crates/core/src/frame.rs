//! Frame-based hierarchies: the inner dP-type and the outer Yildirim-type
//! approximations. Both reduce copositivity to small matrix conditions of
//! the form "there is `t` with `M - t J` PSD", `J = diag(1, -I)`.

use crate::combinatorics::{binomial_usize, enumerate_eq, MultiIndex};
use crate::error::{Error, Result};
use crate::jordan::{check_symmetric, ConeShape, SymMatrix};
use crate::model::{AffineMat, ConeKind, ConicProblem};
use crate::scalar::rational_to_f64;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num::{BigInt, BigRational, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// How a lifted block is finally imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `M - t J` PSD of order `n2` with a free slack `t`.
    PsdLifted(usize),
    /// `M11 I + M22` PSD of order `n2 - 1` (off-diagonal block vanishes).
    PsdReduced(usize),
    /// `(M11, 2 M21)` in the second-order cone of dimension `n2` (`M22 = 0`).
    Soc(usize),
    /// `M11 >= 0`.
    Nonneg,
}

/// Blocks of an `n2 x n2` symmetric matrix `[[m11, m21^T], [m21, m22]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub m11: f64,
    pub m21: DVector<f64>,
    pub m22: DMatrix<f64>,
}

impl Blocks {
    pub fn assemble(&self) -> DMatrix<f64> {
        let k = self.m21.len() + 1;
        let mut m = DMatrix::zeros(k, k);
        m[(0, 0)] = self.m11;
        for i in 1..k {
            m[(i, 0)] = self.m21[i - 1];
            m[(0, i)] = self.m21[i - 1];
            for j in 1..k {
                m[(i, j)] = self.m22[(i - 1, j - 1)];
            }
        }
        m
    }

    pub fn split(m: &DMatrix<f64>) -> Self {
        let k = m.nrows();
        Self {
            m11: m[(0, 0)],
            m21: DVector::from_fn(k - 1, |i, _| m[(i + 1, 0)]),
            m22: DMatrix::from_fn(k - 1, k - 1, |i, j| m[(i + 1, j + 1)]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockM {
    pub blocks: Blocks,
    pub source_alpha: MultiIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockN {
    pub blocks: Blocks,
    pub source_point: Vec<BigRational>,
}

/// Submatrices of `A` in the orthant/SOC partition.
struct Partition {
    a11: DMatrix<f64>,
    a121: DVector<f64>,
    a122: DMatrix<f64>,
    a2121: f64,
    a2122: DVector<f64>,
    a2222: DMatrix<f64>,
}

fn partition(a: &SymMatrix, shape: ConeShape) -> Partition {
    let (n1, n2) = (shape.n1, shape.n2);
    let s = n1;
    Partition {
        a11: a.view((0, 0), (n1, n1)).into_owned(),
        a121: DVector::from_fn(n1, |i, _| a[(i, s)]),
        a122: a.view((s + 1, 0), (n2 - 1, n1)).into_owned(),
        a2121: a[(s, s)],
        a2122: DVector::from_fn(n2 - 1, |i, _| a[(s + 1 + i, s)]),
        a2222: a.view((s + 1, s + 1), (n2 - 1, n2 - 1)).into_owned(),
    }
}

fn check_alpha(alpha: &MultiIndex, shape: ConeShape) -> Result<()> {
    if alpha.len() != shape.rank() {
        return Err(Error::DimensionMismatch { expected: shape.rank(), got: alpha.len() });
    }
    if alpha.degree() < 2 {
        return Err(Error::DegreeMismatch { expected: 2, got: alpha.degree() as usize });
    }
    Ok(())
}

/// `M(A, alpha)` for `|alpha| = r + 2`.
pub fn build_m(a: &SymMatrix, alpha: &MultiIndex, shape: ConeShape) -> Result<BlockM> {
    check_symmetric(a, shape.n())?;
    check_alpha(alpha, shape)?;
    Ok(BlockM { blocks: m_blocks(a, alpha, shape), source_alpha: alpha.clone() })
}

fn m_blocks(a: &SymMatrix, alpha: &MultiIndex, shape: ConeShape) -> Blocks {
    let p = partition(a, shape);
    let n1 = shape.n1;
    let al1 = DVector::from_fn(n1, |i, _| alpha.0[i] as f64);
    let a21 = alpha.0[n1] as f64;
    let a22 = alpha.0[n1 + 1] as f64;
    let (sum, diff) = (a21 + a22, a21 - a22);
    let diag_term: f64 = (0..n1).map(|i| al1[i] * p.a11[(i, i)]).sum();
    let m11 = 4.0 * (al1.dot(&(&p.a11 * &al1)) - diag_term)
        + 4.0 * sum * al1.dot(&p.a121)
        + sum * (sum - 1.0) * p.a2121;
    let m21 = &p.a122 * &al1 * (2.0 * diff) + &p.a2122 * (diff * (sum - 1.0));
    let m22 = &p.a2222 * (diff * diff - sum);
    Blocks { m11, m21, m22 }
}

/// Case analysis for the concise form, keyed on `(alpha21, alpha22)`.
pub fn classify(a21: u64, a22: u64, n2: usize) -> ConstraintKind {
    if a21 == a22 {
        return if a21 == 0 { ConstraintKind::Nonneg } else { ConstraintKind::PsdReduced(n2 - 1) };
    }
    let (lo, hi) = (a21.min(a22), a21.max(a22));
    // (k(k-1)/2, k(k+1)/2): the (2,2) block vanishes
    if hi - lo == lo_to_k(lo).unwrap_or(u64::MAX) {
        return ConstraintKind::Soc(n2);
    }
    ConstraintKind::PsdLifted(n2)
}

/// `k` with `k(k-1)/2 = lo`, if any.
fn lo_to_k(lo: u64) -> Option<u64> {
    let mut k = 1u64;
    while k * (k - 1) / 2 < lo {
        k += 1;
    }
    (k * (k - 1) / 2 == lo).then_some(k)
}

/// Indices and kinds of the dP constraints at depth `r`.
pub fn dp_template(r: u32, shape: ConeShape, concise: bool) -> Vec<(MultiIndex, ConstraintKind)> {
    let n1 = shape.n1;
    enumerate_eq(shape.rank(), r + 2)
        .into_iter()
        .filter(|al| !concise || al.0[n1] <= al.0[n1 + 1])
        .map(|al| {
            let kind = if concise {
                classify(al.0[n1] as u64, al.0[n1 + 1] as u64, shape.n2)
            } else {
                ConstraintKind::PsdLifted(shape.n2)
            };
            (al, kind)
        })
        .collect()
}

pub fn dp_constraints(a: &SymMatrix, r: u32, shape: ConeShape, concise: bool) -> Result<Vec<(BlockM, ConstraintKind)>> {
    dp_template(r, shape, concise)
        .into_iter()
        .map(|(al, kind)| Ok((build_m(a, &al, shape)?, kind)))
        .collect()
}

/// Count of the full dP list, `C(rk + r + 1, rk - 1)`.
pub fn dp_count_full(r: u32, rk: usize) -> usize {
    binomial_usize(rk + r as usize + 1, rk - 1)
}

/// `J = diag(1, -I_{n2-1})`.
pub fn j_matrix(n2: usize) -> DMatrix<f64> {
    let mut j = -DMatrix::identity(n2, n2);
    j[(0, 0)] = 1.0;
    j
}

/// Result of checking `exists t: M - t J PSD` for a fixed matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftCheck {
    pub t: f64,
    /// Largest attainable minimum eigenvalue of `M - t J`.
    pub min_eig: f64,
}

impl LiftCheck {
    pub fn feasible(&self, tol: f64) -> bool {
        self.min_eig >= -tol
    }
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Maximizes `lambda_min(M - t J)` over `t` (a concave function) by golden
/// section search.
pub fn sz_lift_check(m: &DMatrix<f64>) -> LiftCheck {
    let k = m.nrows();
    let j = j_matrix(k);
    let f = |t: f64| min_eig(&(m - &j * t));
    let bound = 2.0 * m.amax() * k as f64 + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-13 * (1.0 + bound) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    LiftCheck { t, min_eig: f(t) }
}

/// Emits "exists t: M - t J PSD" for an affine `M`, with a fresh slack.
pub fn sz_lift(p: &mut ConicProblem, label: &str, m: &AffineMat) {
    let k = m.constant.nrows();
    let t = p.add_var(format!("t[{label}]"));
    let expr = m.clone().with_term(t, -j_matrix(k));
    p.add_cone_affine(label, ConeKind::Psd(k), &expr);
}

/// Emits one lifted block according to its kind; `n2 = 2` lowers the 1x1
/// PSD block to `Nonneg` and the 2-dimensional SOC to two inequalities.
fn emit(p: &mut ConicProblem, label: &str, m: &AffineMat, kind: ConstraintKind) {
    let k = m.constant.nrows();
    match kind {
        ConstraintKind::PsdLifted(_) => sz_lift(p, label, m),
        ConstraintKind::Nonneg => {
            let e = m.map(|x| DMatrix::from_element(1, 1, x[(0, 0)]));
            p.add_cone_affine(label, ConeKind::Nonneg(1), &e);
        }
        ConstraintKind::PsdReduced(_) => {
            let e = m.map(|x| {
                let b = Blocks::split(x);
                b.m22 + DMatrix::identity(k - 1, k - 1) * b.m11
            });
            let kind = if k == 2 { ConeKind::Nonneg(1) } else { ConeKind::Psd(k - 1) };
            p.add_cone_affine(label, kind, &e);
        }
        ConstraintKind::Soc(_) => {
            if k == 2 {
                let e = m.map(|x| DMatrix::from_column_slice(2, 1, &[x[(0, 0)] + 2.0 * x[(1, 0)], x[(0, 0)] - 2.0 * x[(1, 0)]]));
                p.add_cone_affine(label, ConeKind::Nonneg(2), &e);
            } else {
                let e = m.map(|x| {
                    let mut v = DMatrix::zeros(k, 1);
                    v[(0, 0)] = x[(0, 0)];
                    for i in 1..k {
                        v[(i, 0)] = 2.0 * x[(i, 0)];
                    }
                    v
                });
                p.add_cone_affine(label, ConeKind::Soc(k), &e);
            }
        }
    }
}

fn alpha_label(al: &MultiIndex) -> String {
    al.0.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

/// Adds the dP constraints for the affine matrix `a` to `p`.
pub fn add_dp_constraints(p: &mut ConicProblem, a: &AffineMat, r: u32, shape: ConeShape, concise: bool) {
    for (al, kind) in dp_template(r, shape, concise) {
        let m = a.map(|x| m_blocks(x, &al, shape).assemble());
        emit(p, &format!("dp[{}]", alpha_label(&al)), &m, kind);
    }
}

/// Points `x` of the unit simplex in `R^rk` with `(k + 2) x` integral for
/// some `k <= r`, deduplicated, in order of first appearance.
pub fn yildirim_points(r: u32, rk: usize) -> Vec<Vec<BigRational>> {
    let mut seen: HashSet<Vec<BigRational>> = HashSet::new();
    let mut out = Vec::new();
    for k in 0..=r {
        let den = BigInt::from(k + 2);
        for al in enumerate_eq(rk, k + 2) {
            let x: Vec<BigRational> = al.0.iter().map(|&a| BigRational::new(BigInt::from(a), den.clone())).collect();
            if seen.insert(x.clone()) {
                out.push(x);
            }
        }
    }
    out
}

/// Upper bound `rk^2 (rk^{r+1} - 1) / (rk - 1)` on the number of points.
pub fn yildirim_bound(r: u32, rk: u64) -> u128 {
    let rk = rk as u128;
    rk * rk * (rk.pow(r + 1) - 1) / (rk - 1)
}

fn point_f64(x: &[BigRational]) -> Vec<f64> {
    x.iter().map(rational_to_f64).collect()
}

fn n_blocks(a: &SymMatrix, x: &[f64], shape: ConeShape) -> Blocks {
    let p = partition(a, shape);
    let n1 = shape.n1;
    let x1 = DVector::from_fn(n1, |i, _| x[i]);
    let (x21, x22) = (x[n1], x[n1 + 1]);
    let (sum, diff) = (x21 + x22, x21 - x22);
    let n11 = 4.0 * x1.dot(&(&p.a11 * &x1)) + 4.0 * sum * x1.dot(&p.a121) + sum * sum * p.a2121;
    let n21 = &p.a122 * &x1 * (2.0 * diff) + &p.a2122 * (diff * sum);
    let n22 = &p.a2222 * (diff * diff);
    Blocks { m11: n11, m21: n21, m22: n22 }
}

/// `N(x, A)` for a simplex point `x`.
pub fn build_n(x: &[BigRational], a: &SymMatrix, shape: ConeShape) -> Result<BlockN> {
    check_symmetric(a, shape.n())?;
    if x.len() != shape.rank() {
        return Err(Error::DimensionMismatch { expected: shape.rank(), got: x.len() });
    }
    let sum: BigRational = x.iter().cloned().fold(BigRational::zero(), |a, b| a + b);
    if x.iter().any(|v| *v < BigRational::zero()) || sum != BigRational::from_integer(1.into()) {
        return Err(Error::Invalid("point is not on the unit simplex".into()));
    }
    Ok(BlockN { blocks: n_blocks(a, &point_f64(x), shape), source_point: x.to_vec() })
}

pub fn yildirim_template(r: u32, shape: ConeShape, concise: bool) -> Vec<(Vec<BigRational>, ConstraintKind)> {
    let n1 = shape.n1;
    yildirim_points(r, shape.rank())
        .into_iter()
        .filter(|x| !concise || x[n1] <= x[n1 + 1])
        .map(|x| {
            let kind = if concise && x[n1] == x[n1 + 1] { ConstraintKind::Nonneg } else { ConstraintKind::PsdLifted(shape.n2) };
            (x, kind)
        })
        .collect()
}

pub fn yildirim_constraints(a: &SymMatrix, r: u32, shape: ConeShape, concise: bool) -> Result<Vec<(BlockN, ConstraintKind)>> {
    yildirim_template(r, shape, concise)
        .into_iter()
        .map(|(x, kind)| Ok((build_n(&x, a, shape)?, kind)))
        .collect()
}

pub fn point_label(x: &[BigRational]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub fn add_yildirim_constraints(p: &mut ConicProblem, a: &AffineMat, r: u32, shape: ConeShape, concise: bool) {
    for (x, kind) in yildirim_template(r, shape, concise) {
        let xf = point_f64(&x);
        let m = a.map(|am| n_blocks(am, &xf, shape).assemble());
        emit(p, &format!("yi[{}]", point_label(&x)), &m, kind);
    }
}

/// Checks a single block of a fixed matrix under its kind.
pub fn block_feasible(b: &Blocks, kind: ConstraintKind, tol: f64) -> bool {
    match kind {
        ConstraintKind::Nonneg => b.m11 >= -tol,
        ConstraintKind::Soc(_) => b.m11 - 2.0 * b.m21.norm() >= -tol,
        ConstraintKind::PsdReduced(k) => min_eig(&(&b.m22 + DMatrix::identity(k, k) * b.m11)) >= -tol,
        ConstraintKind::PsdLifted(_) => sz_lift_check(&b.assemble()).feasible(tol),
    }
}

/// Membership of a fixed `A` in the dP approximation at depth `r`.
pub fn dp_member(a: &SymMatrix, r: u32, shape: ConeShape, concise: bool, tol: f64) -> Result<bool> {
    Ok(dp_constraints(a, r, shape, concise)?.iter().all(|(b, k)| block_feasible(&b.blocks, *k, tol)))
}

/// First Yildirim point whose block fails, if any.
pub fn yildirim_violation(a: &SymMatrix, r: u32, shape: ConeShape, concise: bool, tol: f64) -> Result<Option<BlockN>> {
    for (b, k) in yildirim_constraints(a, r, shape, concise)? {
        if !block_feasible(&b.blocks, k, tol) {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::factorial;
    use crate::poly::SparsePoly;
    use crate::scalar::rat;
    use num::ToPrimitive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shape(n1: usize, n2: usize) -> ConeShape {
        ConeShape::new(n1, n2).unwrap()
    }

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&b + b.transpose()) * 0.5
    }

    /// `f_r(x; A, v) = (sum x)^r w^T A w`, `w = (2 x1, x21 + x22, (x21 - x22) v)`.
    fn f_r(a: &SymMatrix, v: &[f64], r: u32, sh: ConeShape) -> SparsePoly<f64> {
        let rk = sh.rank();
        let mut w: Vec<SparsePoly<f64>> = Vec::new();
        for i in 0..sh.n1 {
            let mut c = vec![0.0; rk];
            c[i] = 2.0;
            w.push(SparsePoly::linear(&c));
        }
        let mut c = vec![0.0; rk];
        c[sh.n1] = 1.0;
        c[sh.n1 + 1] = 1.0;
        w.push(SparsePoly::linear(&c));
        for vk in v {
            let mut c = vec![0.0; rk];
            c[sh.n1] = *vk;
            c[sh.n1 + 1] = -*vk;
            w.push(SparsePoly::linear(&c));
        }
        let mut f = SparsePoly::zero(rk, 2);
        for i in 0..sh.n() {
            for j in 0..sh.n() {
                f = f.add(&w[i].mul(&w[j]).unwrap().scale(&a[(i, j)])).unwrap();
            }
        }
        SparsePoly::linear(&vec![1.0; rk]).pow(r).mul(&f).unwrap()
    }

    #[test]
    fn block_m_examples() {
        let sh = shape(1, 3);
        let i4 = SymMatrix::identity(4, 4);
        let m = build_m(&i4, &MultiIndex(vec![0, 1, 1]), sh).unwrap().blocks;
        assert_eq!(m.m11, 2.0);
        assert_eq!(m.m21.amax(), 0.0);
        assert_eq!(m.m22, DMatrix::identity(2, 2) * -2.0);
        let m = build_m(&i4, &MultiIndex(vec![2, 0, 0]), sh).unwrap().blocks;
        assert_eq!((m.m11, m.m21.amax(), m.m22.amax()), (8.0, 0.0, 0.0));
        let z = build_m(&SymMatrix::zeros(4, 4), &MultiIndex(vec![1, 0, 1]), sh).unwrap().blocks;
        assert_eq!(z.assemble().amax(), 0.0);
        assert!(build_m(&i4, &MultiIndex(vec![1, 1]), sh).is_err());
    }

    #[test]
    fn block_m_matches_symbolic_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n1, n2) in [(0, 2), (1, 2), (1, 3), (2, 3), (2, 4)] {
            let sh = shape(n1, n2);
            for r in 0..3u32 {
                let a = random_sym(&mut rng, sh.n());
                let v: Vec<f64> = (0..n2 - 1).map(|_| rng.random_range(-1.5..1.5)).collect();
                let f = f_r(&a, &v, r, sh);
                let mut one_v = vec![1.0];
                one_v.extend(&v);
                let u = DVector::from_vec(one_v);
                for al in enumerate_eq(sh.rank(), r + 2) {
                    let m = build_m(&a, &al, sh).unwrap().blocks.assemble();
                    let scale = factorial(r).to_f64().unwrap() / al.factorial().to_f64().unwrap();
                    let want = scale * u.dot(&(&m * &u));
                    assert!((f.coeff(&al) - want).abs() < 1e-9 * (1.0 + want.abs()), "{al:?}");
                }
            }
        }
    }

    #[test]
    fn dp_concise_example() {
        let t = dp_template(0, shape(1, 3), true);
        let kinds: Vec<_> = t.iter().map(|(a, k)| (a.0.clone(), *k)).collect();
        assert_eq!(
            kinds,
            vec![
                (vec![2, 0, 0], ConstraintKind::Nonneg),
                (vec![1, 0, 1], ConstraintKind::Soc(3)),
                (vec![0, 1, 1], ConstraintKind::PsdReduced(2)),
                (vec![0, 0, 2], ConstraintKind::PsdLifted(3)),
            ]
        );
        let full = dp_template(0, shape(1, 3), false);
        assert_eq!(full.len(), 6);
        assert!(full.iter().all(|(_, k)| *k == ConstraintKind::PsdLifted(3)));
    }

    #[test]
    fn dp_full_count() {
        for rk in 2..=6usize {
            for r in 0..=5u32 {
                let sh = shape(rk - 2, 3);
                assert_eq!(dp_template(r, sh, false).len(), dp_count_full(r, rk));
            }
        }
    }

    #[test]
    fn soc_family_has_vanishing_corner() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sh = shape(1, 3);
        let a = random_sym(&mut rng, 4);
        for r in 0..6 {
            for (al, kind) in dp_template(r, sh, true) {
                let b = build_m(&a, &al, sh).unwrap().blocks;
                match kind {
                    ConstraintKind::Soc(_) | ConstraintKind::Nonneg => assert!(b.m22.amax() < 1e-12),
                    ConstraintKind::PsdReduced(_) => assert!(b.m21.amax() < 1e-12),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn lift_examples() {
        // oracle: scan a t grid and keep the best minimum eigenvalue
        let scan = |m: &DMatrix<f64>| {
            let j = j_matrix(m.nrows());
            (-4000..=4000).map(|k| min_eig(&(m - &j * (k as f64 * 1e-3)))).fold(f64::NEG_INFINITY, f64::max)
        };
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -2.0]));
        let c = sz_lift_check(&m);
        assert!(c.feasible(1e-9));
        assert!(scan(&m) >= -1e-9);
        assert!(sz_lift_check(&DMatrix::identity(3, 3)).feasible(0.0));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.0]));
        assert!(!sz_lift_check(&m).feasible(1e-6));
        assert!(scan(&m) < -0.1);
    }

    #[test]
    fn lift_emits_one_block_and_one_slack() {
        let mut p = ConicProblem::new("t");
        sz_lift(&mut p, "x", &AffineMat::constant(DMatrix::identity(3, 3)));
        assert_eq!(p.num_vars(), 1);
        assert_eq!(p.cones.len(), 1);
        assert_eq!(p.cones[0].kind, ConeKind::Psd(3));
    }

    #[test]
    fn yildirim_point_examples() {
        let p0 = yildirim_points(0, 2);
        assert_eq!(p0, vec![vec![rat(1, 1), rat(0, 1)], vec![rat(1, 2), rat(1, 2)], vec![rat(0, 1), rat(1, 1)]]);
        let p1 = yildirim_points(1, 2);
        assert_eq!(p1.len(), 5);
        assert!(p1.contains(&vec![rat(1, 3), rat(2, 3)]));
        assert!(p1.contains(&vec![rat(2, 3), rat(1, 3)]));
        for x in yildirim_points(3, 4) {
            assert!(x.iter().all(|v| *v >= rat(0, 1)));
            assert_eq!(x.iter().cloned().fold(rat(0, 1), |a, b| a + b), rat(1, 1));
        }
    }

    #[test]
    fn yildirim_count_bound() {
        for rk in 2..=5usize {
            for r in 0..=4u32 {
                assert!(yildirim_points(r, rk).len() as u128 <= yildirim_bound(r, rk as u64));
            }
        }
    }

    #[test]
    fn block_n_examples() {
        let sh = shape(0, 3);
        let a = SymMatrix::identity(3, 3);
        let n = build_n(&[rat(1, 1), rat(0, 1)], &a, sh).unwrap().blocks;
        assert_eq!(n.m11, 1.0);
        assert_eq!(n.m21.amax(), 0.0);
        assert_eq!(n.m22, DMatrix::identity(2, 2));
        let n = build_n(&[rat(1, 2), rat(1, 2)], &a, sh).unwrap().blocks;
        assert_eq!((n.m21.amax(), n.m22.amax()), (0.0, 0.0));
        let z = build_n(&[rat(1, 3), rat(2, 3)], &SymMatrix::zeros(3, 3), sh).unwrap().blocks;
        assert_eq!(z.assemble().amax(), 0.0);
        assert!(build_n(&[rat(1, 3), rat(1, 3)], &a, sh).is_err());
    }

    #[test]
    fn block_n_is_a_weighted_sum_of_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let sh = shape(rng.random_range(0..=4), rng.random_range(2..=4));
            let a = random_sym(&mut rng, sh.n());
            for _ in 0..50 {
                let raw: Vec<f64> = (0..sh.rank()).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                let x: Vec<f64> = raw.iter().map(|v| v / s).collect();
                let n = n_blocks(&a, &x, sh).assemble();
                let mut acc = DMatrix::zeros(sh.n2, sh.n2);
                for al in enumerate_eq(sh.rank(), 2) {
                    let w = al.eval(&x) / al.factorial().to_f64().unwrap();
                    acc += m_blocks(&a, &al, sh).assemble() * w;
                }
                assert!((acc - n).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn yildirim_concise_example() {
        let t = yildirim_template(0, shape(0, 3), true);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0], (vec![rat(1, 2), rat(1, 2)], ConstraintKind::Nonneg));
        assert_eq!(t[1], (vec![rat(0, 1), rat(1, 1)], ConstraintKind::PsdLifted(3)));
        assert_eq!(yildirim_template(2, shape(1, 3), false).len(), yildirim_points(2, 3).len());
    }

    #[test]
    fn blocks_are_linear_in_a() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sh = shape(1, 3);
        let a = random_sym(&mut rng, 4);
        let a2 = &a * 2.0;
        for ((b1, _), (b2, _)) in yildirim_constraints(&a, 1, sh, false).unwrap().iter().zip(yildirim_constraints(&a2, 1, sh, false).unwrap().iter()) {
            assert!((b1.blocks.assemble() * 2.0 - b2.blocks.assemble()).amax() < 1e-12);
        }
    }

    #[test]
    fn identity_is_in_dp_zero() {
        for n1 in 0..=6 {
            for n2 in 2..=6 {
                let sh = shape(n1, n2);
                assert!(dp_member(&SymMatrix::identity(sh.n(), sh.n()), 0, sh, false, 1e-9).unwrap(), "{n1},{n2}");
            }
        }
    }

    #[test]
    fn n2_two_lowering() {
        let sh = shape(1, 2);
        let mut p = ConicProblem::new("t");
        add_dp_constraints(&mut p, &AffineMat::constant(SymMatrix::identity(3, 3)), 0, sh, true);
        let kinds: Vec<_> = p.cones.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, vec![ConeKind::Nonneg(1), ConeKind::Nonneg(2), ConeKind::Nonneg(1), ConeKind::Psd(2)]);
    }
}
