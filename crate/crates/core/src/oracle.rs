//! Solver-independent checks: sampling and grid minimization of `x^T A x`
//! over `K`, the moment-matrix PSD test, exact refutation witnesses and a
//! Monte-Carlo moment estimator.

use crate::combinatorics::{enumerate_eq, MultiIndex};
use crate::error::Result;
use crate::frame::{build_n, yildirim_points, yildirim_violation};
use crate::jordan::{check_symmetric, frame_at, frame_exact, project_to_frame, ConeShape, SymMatrix};
use crate::scalar::{rational_from_f64, rational_to_f64};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num::{BigInt, BigRational, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn quad(a: &SymMatrix, x: &[f64]) -> f64 {
    let v = DVector::from_column_slice(x);
    (v.transpose() * a * &v)[(0, 0)]
}

fn dirichlet(rng: &mut ChaCha8Rng, shapes: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = shapes.iter().map(|&k| Gamma::new(k, 1.0).expect("positive shape").sample(rng)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

fn unit_ball(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    if d == 0 {
        return vec![];
    }
    let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let nrm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = rng.random::<f64>().powf(1.0 / d as f64);
    g.into_iter().map(|v| v / nrm * r).collect()
}

/// Uniform point of `Delta(K) = {x in K : e^T x <= 1}`.
///
/// Writing the SOC part as `(t, t u)` with `u` in the unit ball, the density
/// of `(x_1, t, slack)` is Dirichlet with weight `n2` on `t`.
pub fn sample_delta_k(shape: ConeShape, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n1 = shape.n1;
    let mut shapes = vec![1.0; n1];
    shapes.push(shape.n2 as f64);
    shapes.push(1.0);
    let d = dirichlet(rng, &shapes);
    let t = d[n1];
    let u = unit_ball(rng, shape.n2 - 1);
    let mut x = d[..n1].to_vec();
    x.push(t);
    x.extend(u.into_iter().map(|v| v * t));
    x
}

/// Uniform point of `{x >= 0, sum x <= 1}` in `R^n`.
pub fn sample_orthant_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = dirichlet(rng, &vec![1.0; n + 1]);
    d[..n].to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub min: f64,
    pub argmin: Vec<f64>,
    /// Minimum of `x^T A x / (e^T x)^2`, i.e. over the slice `e^T x = 1`.
    pub slice_min: f64,
    pub slice_argmin: Vec<f64>,
}

fn sample_min_with(a: &SymMatrix, samples: usize, seed: u64, scale: impl Fn(&[f64]) -> f64, mut draw: impl FnMut(&mut ChaCha8Rng) -> Vec<f64>) -> SampleResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SampleResult { min: f64::INFINITY, argmin: vec![], slice_min: f64::INFINITY, slice_argmin: vec![] };
    for _ in 0..samples.max(1) {
        let x = draw(&mut rng);
        let v = quad(a, &x);
        if v < out.min {
            out.min = v;
            out.argmin = x.clone();
        }
        let t = scale(&x);
        if t > 0.0 {
            let sv = v / (t * t);
            if sv < out.slice_min {
                out.slice_min = sv;
                out.slice_argmin = x.iter().map(|c| c / t).collect();
            }
        }
    }
    out
}

/// Minimum of `x^T A x` over uniform samples of `Delta(K)`.
pub fn sample_cone_min(a: &SymMatrix, shape: ConeShape, samples: usize, seed: u64) -> SampleResult {
    let s = shape.soc_start();
    sample_min_with(a, samples, seed, |x| x[..=s].iter().sum(), |rng| sample_delta_k(shape, rng))
}

/// Same over the standard orthant `R_+^n`.
pub fn sample_orthant_min(a: &SymMatrix, samples: usize, seed: u64) -> SampleResult {
    let n = a.nrows();
    sample_min_with(a, samples, seed, |x| x.iter().sum(), |rng| sample_orthant_simplex(n, rng))
}

/// Exactly unit rational vector near `target` (stereographic projection
/// from the last axis, coordinates rounded to multiples of `2^-bits`).
pub fn rational_unit(target: &[f64], bits: u32) -> Vec<BigRational> {
    let d = target.len();
    let nrm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    if d == 1 || nrm == 0.0 {
        let mut v = vec![BigRational::zero(); d];
        v[0] = if d == 1 && target[0] < 0.0 { -BigRational::one() } else { BigRational::one() };
        return v;
    }
    let t: Vec<f64> = target.iter().map(|v| v / nrm).collect();
    // project from the pole opposite to the target's last coordinate sign
    let flip = t[d - 1] > 0.0;
    let last = if flip { -t[d - 1] } else { t[d - 1] };
    let den = BigInt::from(1u64) << bits;
    let u: Vec<BigRational> = t[..d - 1]
        .iter()
        .map(|&c| {
            let q = c / (1.0 - last);
            BigRational::new(BigInt::from((q * 2f64.powi(bits as i32)).round() as i64), den.clone())
        })
        .collect();
    let s2 = u.iter().fold(BigRational::zero(), |acc, q| acc + q * q);
    let denom = &s2 + BigRational::one();
    let two = BigRational::from_integer(2.into());
    let mut v: Vec<BigRational> = u.iter().map(|q| &two * q / &denom).collect();
    let mut tail = (&s2 - BigRational::one()) / &denom;
    if flip {
        tail = -tail;
    }
    v.push(tail);
    v
}

/// Deterministic `k`-point net of unit directions in `R^d`, exactly rational.
pub fn sphere_net(d: usize, k: usize) -> Vec<Vec<BigRational>> {
    if d == 1 {
        return vec![vec![BigRational::one()]];
    }
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[i] = s;
            dirs.push(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    while dirs.len() < k {
        dirs.push((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
    }
    dirs.truncate(k.max(1));
    dirs.iter().map(|t| rational_unit(t, 16)).collect()
}

/// Exactly replayable point of `K` with negative quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactWitness {
    pub point: Vec<BigRational>,
    pub value: BigRational,
}

impl ExactWitness {
    pub fn point_f64(&self) -> Vec<f64> {
        self.point.iter().map(rational_to_f64).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "point": self.point.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
            "value": self.value.to_string(),
            "value_f64": rational_to_f64(&self.value),
        })
    }
}

/// Exact `x^T A x` with the entries of `A` taken as exact binary fractions.
pub fn exact_quad(a: &SymMatrix, x: &[BigRational]) -> BigRational {
    let n = x.len();
    let mut acc = BigRational::zero();
    for i in 0..n {
        if x[i].is_zero() {
            continue;
        }
        for j in 0..n {
            if a[(i, j)] != 0.0 && !x[j].is_zero() {
                acc += rational_from_f64(a[(i, j)]) * &x[i] * &x[j];
            }
        }
    }
    acc
}

/// Exact membership of a rational point in `K`.
pub fn in_cone_exact(shape: ConeShape, x: &[BigRational]) -> bool {
    let s = shape.soc_start();
    if x[..s].iter().any(|v| v.is_negative()) || x[s].is_negative() {
        return false;
    }
    let tail = x[s + 1..].iter().fold(BigRational::zero(), |acc, v| acc + v * v);
    &x[s] * &x[s] >= tail
}

#[derive(Debug, Clone)]
pub struct GridResult {
    /// Minimum over grid points on the slice `e^T x = 1`.
    pub lambda: f64,
    pub argmin: Vec<f64>,
    /// `max |<A, c_i (x) c_j>|` over the frames of the net.
    pub l_const: f64,
    /// Exact witness when the grid minimum is negative and confirmed.
    pub witness: Option<ExactWitness>,
    pub points: usize,
}

/// Frame-space grid: `x = sum lambda_i c_i(v)` with `k lambda` integral and
/// `v` from a `k`-point rational sphere net.
pub fn grid_cone_min(a: &SymMatrix, shape: ConeShape, k: u32) -> Result<GridResult> {
    let n = shape.n();
    check_symmetric(a, n)?;
    let rk = shape.rank();
    let k = k.max(1);
    let net = sphere_net(shape.n2 - 1, k as usize);
    let lambdas = enumerate_eq(rk, k);
    let mut best = (f64::INFINITY, Vec::new(), 0usize, 0usize);
    let mut l_const: f64 = 0.0;
    for (vi, v) in net.iter().enumerate() {
        let vf: Vec<f64> = v.iter().map(rational_to_f64).collect();
        let nv = vf.iter().map(|c| c * c).sum::<f64>().sqrt();
        let vf: Vec<f64> = vf.iter().map(|c| c / nv).collect();
        let frame = frame_at(shape, &vf)?;
        let pm = project_to_frame(a, &frame)?;
        l_const = l_const.max(pm.amax());
        for (li, lam) in lambdas.iter().enumerate() {
            let l: Vec<f64> = lam.0.iter().map(|&c| c as f64 / k as f64).collect();
            let val = quad(&pm, &l);
            if val < best.0 {
                best = (val, l, vi, li);
            }
        }
    }
    let (lambda, lbest, vi, li) = best;
    let cs = frame_exact(shape.n1, &net[vi], BigRational::new(1.into(), 2.into()));
    let kq = BigRational::from_integer(k.into());
    let mut x = vec![BigRational::zero(); n];
    for (i, c) in cs.iter().enumerate() {
        let w = BigRational::from_integer(lambdas[li].0[i].into()) / &kq;
        for j in 0..n {
            x[j] += &w * &c[j];
        }
    }
    let witness = if lambda < 0.0 {
        let value = exact_quad(a, &x);
        (value.is_negative() && in_cone_exact(shape, &x)).then_some(ExactWitness { point: x.clone(), value })
    } else {
        None
    };
    let _ = lbest;
    Ok(GridResult {
        lambda,
        argmin: x.iter().map(rational_to_f64).collect(),
        l_const,
        witness,
        points: net.len() * lambdas.len(),
    })
}

/// Outcome of the moment-matrix test.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub psd: bool,
    pub min_eig: f64,
    /// Eigenvector of the most negative eigenvalue, indexed by `I^n_{=m}`.
    pub certificate: Option<Vec<f64>>,
}

/// Matrix `M(X)_{a, b} = X_{a + b}` over `I^n_{=m}`. Missing entries are zero.
pub fn moment_matrix(x: &BTreeMap<MultiIndex, f64>, n: usize, m: u32) -> DMatrix<f64> {
    let basis = enumerate_eq(n, m);
    let k = basis.len();
    DMatrix::from_fn(k, k, |i, j| x.get(&basis[i].add(&basis[j])).copied().unwrap_or(0.0))
}

/// PSD test of the moment matrix, with tolerance relative to its size.
pub fn dual_moment_check(x: &BTreeMap<MultiIndex, f64>, n: usize, m: u32, tol: f64) -> MomentCheck {
    let mm = moment_matrix(x, n, m);
    let eig = SymmetricEigen::new(mm.clone());
    let (idx, min_eig) = eig.eigenvalues.iter().copied().enumerate().fold((0, f64::INFINITY), |b, (i, v)| if v < b.1 { (i, v) } else { b });
    let psd = min_eig >= -tol * mm.amax().max(1.0);
    let certificate = (!psd).then(|| eig.eigenvectors.column(idx).iter().copied().collect());
    MomentCheck { psd, min_eig, certificate }
}

/// Moments `x^gamma` for `|gamma| = 2m`.
pub fn point_moments(x: &[f64], m: u32) -> BTreeMap<MultiIndex, f64> {
    enumerate_eq(x.len(), 2 * m).into_iter().map(|g| {
        let v = g.eval(x);
        (g, v)
    }).collect()
}

/// Drops entries with an odd exponent.
pub fn zero_odd(x: &BTreeMap<MultiIndex, f64>) -> BTreeMap<MultiIndex, f64> {
    x.iter().map(|(g, v)| (g.clone(), if g.0.iter().any(|e| e % 2 == 1) { 0.0 } else { *v })).collect()
}

/// Refutation found through a violated outer constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Refutation {
    pub depth: u32,
    pub simplex_point: Vec<BigRational>,
    pub witness: ExactWitness,
}

/// Minimizes `(1, v)^T N (1, v)` over unit `v`; returns candidates.
fn sphere_candidates(nm: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let k = nm.nrows();
    let d = k - 1;
    let n21: DVector<f64> = nm.view((1, 0), (d, 1)).into_owned().column(0).into_owned();
    let n22 = nm.view((1, 1), (d, d)).into_owned();
    let g = |v: &DVector<f64>| nm[(0, 0)] + 2.0 * n21.dot(v) + (v.transpose() * &n22 * v)[(0, 0)];
    let mut starts: Vec<DVector<f64>> = Vec::new();
    let eig = SymmetricEigen::new(n22.clone());
    for c in 0..d {
        let e = eig.eigenvectors.column(c).into_owned();
        starts.push(e.clone());
        starts.push(-e);
    }
    if n21.norm() > 0.0 {
        starts.push(-&n21 / n21.norm());
    }
    for _ in 0..8 {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        starts.push(&v / v.norm());
    }
    let step = 0.25 / (1.0 + n22.amax() + n21.amax());
    let mut out = Vec::new();
    for mut v in starts {
        for _ in 0..200 {
            let grad = (&n21 + &n22 * &v) * 2.0;
            let mut next = &v - grad * step;
            let nn = next.norm();
            if nn == 0.0 {
                break;
            }
            next /= nn;
            if g(&next) > g(&v) - 1e-15 {
                break;
            }
            v = next;
        }
        out.push(v.iter().copied().collect());
    }
    out
}

/// Searches Yildirim depths `0..=r_max` for a violated point and turns it
/// into an exact witness `w = (2 x_1, x_21 + x_22, (x_21 - x_22) v)`.
pub fn yildirim_refutation(a: &SymMatrix, shape: ConeShape, r_max: u32, tol: f64) -> Result<Option<Refutation>> {
    check_symmetric(a, shape.n())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n1 = shape.n1;
    let s = shape.soc_start();
    for r in 0..=r_max {
        if yildirim_violation(a, r, shape, false, tol)?.is_none() {
            continue;
        }
        for x in yildirim_points(r, shape.rank()) {
            let nb = build_n(&x, a, shape)?;
            let nm = nb.blocks.assemble();
            for v in sphere_candidates(&nm, &mut rng) {
                if nm.nrows() > 1 && {
                    let mut w = vec![1.0];
                    w.extend(&v);
                    quad(&nm, &w) >= 0.0
                } {
                    continue;
                }
                let vq = rational_unit(&v, 30);
                let two = BigRational::from_integer(2.into());
                let mut w: Vec<BigRational> = x[..n1].iter().map(|c| &two * c).collect();
                w.push(&x[n1] + &x[n1 + 1]);
                let diff = &x[n1] - &x[n1 + 1];
                w.extend(vq.iter().map(|c| &diff * c));
                debug_assert_eq!(w.len(), s + shape.n2);
                let value = exact_quad(a, &w);
                if value.is_negative() && in_cone_exact(shape, &w) {
                    return Ok(Some(Refutation { depth: r, simplex_point: x.clone(), witness: ExactWitness { point: w, value } }));
                }
            }
        }
    }
    Ok(None)
}

/// Monte-Carlo estimate of `int_{Delta(K)} x^alpha dx`: the volume comes
/// from rejection sampling (simplex times ball proposals), the mean of
/// `x^alpha` from the exact sampler.
pub fn mc_moment(alpha: &MultiIndex, shape: ConeShape, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n1 = shape.n1;
    let d = shape.n2 - 1;
    let mut accepted = 0usize;
    for _ in 0..samples {
        let p = sample_orthant_simplex(n1 + 1, &mut rng);
        let w = unit_ball(&mut rng, d);
        let r2: f64 = w.iter().map(|v| v * v).sum();
        if r2 <= p[n1] * p[n1] {
            accepted += 1;
        }
    }
    let simplex_vol = 1.0 / (1..=(n1 + 1)).map(|i| i as f64).product::<f64>();
    let ball_vol = std::f64::consts::PI.powf(d as f64 / 2.0) / statrs::function::gamma::gamma(d as f64 / 2.0 + 1.0);
    let vol = simplex_vol * ball_vol * accepted as f64 / samples as f64;
    let mut acc = 0.0;
    for _ in 0..samples {
        acc += alpha.eval(&sample_delta_k(shape, &mut rng));
    }
    vol * acc / samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasserre::moment;

    fn sh(n1: usize, n2: usize) -> ConeShape {
        ConeShape::new(n1, n2).unwrap()
    }

    #[test]
    fn samples_lie_in_delta_k() {
        let shape = sh(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = sample_delta_k(shape, &mut rng);
            let el = crate::jordan::AlgebraElement::new(shape, x.clone()).unwrap();
            assert!(crate::jordan::cone_membership(&el, 1e-12));
            assert!(x[0] + x[1] + x[2] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn sampling_examples() {
        let shape = sh(1, 3);
        let i = SymMatrix::identity(4, 4);
        assert!(sample_cone_min(&i, shape, 2000, 3).min > 0.0);
        assert!(sample_cone_min(&(-SymMatrix::from_element(4, 4, 1.0)), shape, 2000, 3).min < 0.0);
        let a = SymMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let r = sample_cone_min(&a, sh(0, 2), 20000, 4);
        assert!(r.min >= 0.0);
        assert!(r.slice_min < 0.01);
        let r2 = sample_cone_min(&a, sh(0, 2), 20000, 4);
        assert_eq!(r, r2);
    }

    #[test]
    fn rational_units_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..6 {
            for _ in 0..20 {
                let t: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let v = rational_unit(&t, 20);
                let n2 = v.iter().fold(BigRational::zero(), |a, q| a + q * q);
                assert!(n2.is_one());
                let nrm = t.iter().map(|c| c * c).sum::<f64>().sqrt();
                for i in 0..d {
                    assert!((rational_to_f64(&v[i]) - t[i] / nrm).abs() < 1e-4, "d={d}");
                }
            }
        }
    }

    #[test]
    fn grid_examples() {
        let shape = sh(1, 3);
        let g = grid_cone_min(&SymMatrix::identity(4, 4), shape, 6).unwrap();
        assert!(g.lambda > 0.0);
        assert!(g.witness.is_none());
        let g = grid_cone_min(&(-SymMatrix::identity(4, 4)), shape, 6).unwrap();
        let w = g.witness.expect("negative grid minimum");
        assert!(w.value.is_negative());
        assert!(in_cone_exact(shape, &w.point));
        assert_eq!(exact_quad(&(-SymMatrix::identity(4, 4)), &w.point), w.value);
    }

    #[test]
    fn grid_and_sampling_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let shape = sh(1, 3);
        let k = 12;
        for _ in 0..20 {
            let b = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let a = (&b + b.transpose()) * 0.5;
            let g = grid_cone_min(&a, shape, k).unwrap();
            let s = sample_cone_min(&a, shape, 20000, 9);
            assert!(g.lambda >= s.slice_min - 4.0 * g.l_const / k as f64, "{} {}", g.lambda, s.slice_min);
        }
    }

    #[test]
    fn moment_check_examples() {
        let x = point_moments(&[1.0, 1.0], 2);
        let c = dual_moment_check(&x, 2, 2, 1e-9);
        assert!(c.psd);
        let mm = moment_matrix(&x, 2, 2);
        let e = SymmetricEigen::new(mm).eigenvalues;
        assert_eq!(e.iter().filter(|v| v.abs() > 1e-9).count(), 1);
        assert!(dual_moment_check(&BTreeMap::new(), 3, 1, 1e-9).psd);
        let mut bad = BTreeMap::new();
        bad.insert(MultiIndex(vec![2, 0]), 1.0);
        bad.insert(MultiIndex(vec![0, 2]), 1.0);
        bad.insert(MultiIndex(vec![1, 1]), 2.0);
        let c = dual_moment_check(&bad, 2, 1, 1e-9);
        assert!(!c.psd);
        let v = DVector::from_vec(c.certificate.unwrap());
        let q = (v.transpose() * moment_matrix(&bad, 2, 1) * &v)[(0, 0)];
        assert!(q < -0.5);
    }

    #[test]
    fn parity_of_even_measures() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let mut x: BTreeMap<MultiIndex, f64> = BTreeMap::new();
            for _ in 0..4 {
                let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let w = rng.random_range(0.1..1.0);
                for (g, v) in point_moments(&p, 2) {
                    *x.entry(g).or_insert(0.0) += w * v;
                }
            }
            let a = dual_moment_check(&x, 3, 2, 1e-9);
            let b = dual_moment_check(&zero_odd(&x), 3, 2, 1e-9);
            assert_eq!(a.psd, b.psd);
            assert!(a.psd);
        }
    }

    #[test]
    fn refutes_negative_identity() {
        let shape = sh(1, 3);
        let r = yildirim_refutation(&(-SymMatrix::identity(4, 4)), shape, 2, 1e-9).unwrap().unwrap();
        assert_eq!(r.depth, 0);
        assert!(r.witness.value.is_negative());
        assert!(in_cone_exact(shape, &r.witness.point));
        assert!(yildirim_refutation(&SymMatrix::identity(4, 4), shape, 2, 1e-9).unwrap().is_none());
    }

    #[test]
    fn monte_carlo_triangle() {
        let shape = sh(0, 2);
        let y0 = mc_moment(&MultiIndex(vec![0, 0]), shape, 200_000, 11);
        assert!((y0 - 1.0).abs() < 0.01);
        let y = mc_moment(&MultiIndex(vec![1, 0]), shape, 200_000, 12);
        assert!((y - moment(&MultiIndex(vec![1, 0]), shape).unwrap()).abs() < 0.01);
    }
}
