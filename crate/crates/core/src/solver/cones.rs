//! Cone kernels: Jordan products, Nesterov-Todd scaling and step lengths.
//!
//! PSD blocks are stored in svec format (upper triangle, column by column)
//! with sqrt(2) scaling on off-diagonals, so the trace inner product is the
//! plain dot product.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Nonneg(usize),
    Soc(usize),
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Nonneg(k) | Cone::Soc(k) => k,
            Cone::Psd(k) => k * (k + 1) / 2,
        }
    }

    /// Barrier degree.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonneg(k) | Cone::Psd(k) => k,
            Cone::Soc(_) => 1,
        }
    }

    pub fn identity(&self) -> Vec<f64> {
        match *self {
            Cone::Nonneg(k) => vec![1.0; k],
            Cone::Soc(k) => {
                let mut v = vec![0.0; k];
                v[0] = 1.0;
                v
            }
            Cone::Psd(k) => svec(&DMatrix::identity(k, k)),
        }
    }
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for j in 0..k {
        for i in 0..=j {
            out.push(if i == j { m[(i, j)] } else { SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]) });
        }
    }
    out
}

pub fn smat(v: &[f64], k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(k, k);
    let mut p = 0;
    for j in 0..k {
        for i in 0..=j {
            if i == j {
                m[(i, i)] = v[p];
            } else {
                m[(i, j)] = v[p] / SQRT_2;
                m[(j, i)] = v[p] / SQRT_2;
            }
            p += 1;
        }
    }
    m
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn jordan_product(cone: Cone, u: &[f64], v: &[f64]) -> Vec<f64> {
    match cone {
        Cone::Nonneg(_) => u.iter().zip(v).map(|(a, b)| a * b).collect(),
        Cone::Soc(_) => {
            let mut out = vec![dot(u, v)];
            out.extend((1..u.len()).map(|i| u[0] * v[i] + v[0] * u[i]));
            out
        }
        Cone::Psd(k) => {
            let (a, b) = (smat(u, k), smat(v, k));
            let p = &a * &b;
            svec(&((&p + p.transpose()) * 0.5))
        }
    }
}

/// Smallest eigenvalue in the Jordan-algebra sense.
pub fn min_eig(cone: Cone, u: &[f64]) -> f64 {
    match cone {
        Cone::Nonneg(_) => u.iter().copied().fold(f64::INFINITY, f64::min),
        Cone::Soc(_) => u[0] - u[1..].iter().map(|a| a * a).sum::<f64>().sqrt(),
        Cone::Psd(k) => SymmetricEigen::new(smat(u, k)).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Largest `alpha` with `x + alpha dx` in the cone, for `x` in the interior.
pub fn max_step(cone: Cone, x: &[f64], dx: &[f64]) -> f64 {
    match cone {
        Cone::Nonneg(_) => x
            .iter()
            .zip(dx)
            .filter(|(_, d)| **d < 0.0)
            .map(|(a, d)| -a / d)
            .fold(f64::INFINITY, f64::min),
        Cone::Soc(_) => {
            let a = dx[0] * dx[0] - dot(&dx[1..], &dx[1..]);
            let b = x[0] * dx[0] - dot(&x[1..], &dx[1..]);
            let c = (x[0] * x[0] - dot(&x[1..], &x[1..])).max(0.0);
            // smallest positive root of a t^2 + 2 b t + c
            let disc = b * b - a * c;
            let mut best = f64::INFINITY;
            if a.abs() < 1e-300 {
                if b < 0.0 {
                    best = -c / (2.0 * b);
                }
            } else if disc >= 0.0 {
                let sq = disc.sqrt();
                let q = -(b + b.signum() * sq);
                for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
                    if root > 0.0 && root < best {
                        best = root;
                    }
                }
            }
            if dx[0] < 0.0 {
                best = best.min(-x[0] / dx[0]);
            }
            best
        }
        Cone::Psd(k) => {
            let xm = smat(x, k);
            let dm = smat(dx, k);
            let m = match Cholesky::new(xm.clone()) {
                Some(ch) => {
                    let l = ch.l();
                    let li = l.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(k, k));
                    &li * dm * li.transpose()
                }
                None => {
                    let e = SymmetricEigen::new(xm);
                    let d = e.eigenvalues.map(|v| 1.0 / v.max(1e-300).sqrt());
                    let s = &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose();
                    &s * dm * &s
                }
            };
            let mu = SymmetricEigen::new((&m + m.transpose()) * 0.5).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if mu < 0.0 {
                -1.0 / mu
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Nesterov-Todd scaling `W` with `W z = W^{-T} s = lambda`.
#[derive(Debug, Clone)]
pub enum Scaling {
    Nonneg { d: Vec<f64> },
    Soc { eta: f64, w: Vec<f64> },
    Psd { k: usize, r: DMatrix<f64>, rinv: DMatrix<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    W,
    Wt,
    Winv,
    Winvt,
}

fn soc_j(v: &[f64]) -> f64 {
    v[0] * v[0] - dot(&v[1..], &v[1..])
}

fn psd_sqrt_factor(m: DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    match Cholesky::new(m.clone()) {
        Some(ch) => ch.l(),
        None => {
            let e = SymmetricEigen::new(m);
            let d = e.eigenvalues.map(|v| v.max(1e-300).sqrt());
            let f = &e.eigenvectors * DMatrix::from_diagonal(&d);
            // any factor with F F^T = M works; keep it square
            debug_assert_eq!(f.nrows(), k);
            f
        }
    }
}

impl Scaling {
    pub fn identity(cone: Cone) -> Self {
        match cone {
            Cone::Nonneg(k) => Scaling::Nonneg { d: vec![1.0; k] },
            Cone::Soc(k) => Scaling::Soc { eta: 1.0, w: cone_identity_vec(k) },
            Cone::Psd(k) => Scaling::Psd { k, r: DMatrix::identity(k, k), rinv: DMatrix::identity(k, k) },
        }
    }

    pub fn compute(cone: Cone, s: &[f64], z: &[f64]) -> Self {
        match cone {
            Cone::Nonneg(_) => Scaling::Nonneg { d: s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect() },
            Cone::Soc(_) => {
                let sj = soc_j(s).max(1e-300);
                let zj = soc_j(z).max(1e-300);
                let sn: Vec<f64> = s.iter().map(|v| v / sj.sqrt()).collect();
                let zn: Vec<f64> = z.iter().map(|v| v / zj.sqrt()).collect();
                let gamma = ((1.0 + dot(&sn, &zn)) / 2.0).max(0.0).sqrt();
                let mut w: Vec<f64> = sn.iter().zip(&zn).map(|(a, b)| a - b).collect();
                w[0] = sn[0] + zn[0];
                for v in w.iter_mut() {
                    *v /= 2.0 * gamma;
                }
                // restore w^T J w = 1 against rounding
                let wj = soc_j(&w);
                if wj > 0.0 {
                    for v in w.iter_mut() {
                        *v /= wj.sqrt();
                    }
                }
                Scaling::Soc { eta: (sj / zj).powf(0.25), w }
            }
            Cone::Psd(k) => {
                let ls = psd_sqrt_factor(smat(s, k));
                let lz = psd_sqrt_factor(smat(z, k));
                let svd = (lz.transpose() * &ls).svd(true, true);
                let v = svd.v_t.expect("svd v").transpose();
                let sig = svd.singular_values;
                let dinv = sig.map(|x| 1.0 / x.max(1e-300).sqrt());
                let r = &ls * &v * DMatrix::from_diagonal(&dinv);
                let rinv = r.clone().try_inverse().unwrap_or_else(|| {
                    let d = sig.map(|x| x.max(1e-300).sqrt());
                    DMatrix::from_diagonal(&d) * v.transpose() * ls.clone().pseudo_inverse(1e-300).unwrap()
                });
                Scaling::Psd { k, r, rinv }
            }
        }
    }

    pub fn apply(&self, op: Op, u: &[f64]) -> Vec<f64> {
        match self {
            Scaling::Nonneg { d } => match op {
                Op::W | Op::Wt => u.iter().zip(d).map(|(a, b)| a * b).collect(),
                Op::Winv | Op::Winvt => u.iter().zip(d).map(|(a, b)| a / b).collect(),
            },
            Scaling::Soc { eta, w } => {
                // W = eta Wbar, Wbar symmetric with Wbar J Wbar = J
                let (scale, flip) = match op {
                    Op::W | Op::Wt => (*eta, false),
                    Op::Winv | Op::Winvt => (1.0 / eta, true),
                };
                let mut v = u.to_vec();
                if flip {
                    for x in v.iter_mut().skip(1) {
                        *x = -*x;
                    }
                }
                let w1u1 = dot(&w[1..], &v[1..]);
                let mut out = Vec::with_capacity(v.len());
                out.push(w[0] * v[0] + w1u1);
                let c = v[0] + w1u1 / (1.0 + w[0]);
                for i in 1..v.len() {
                    out.push(v[i] + c * w[i]);
                }
                if flip {
                    for x in out.iter_mut().skip(1) {
                        *x = -*x;
                    }
                }
                out.iter().map(|x| x * scale).collect()
            }
            Scaling::Psd { k, r, rinv } => {
                let m = smat(u, *k);
                let out = match op {
                    Op::W => r.transpose() * m * r,
                    Op::Wt => r * m * r.transpose(),
                    Op::Winv => rinv.transpose() * m * rinv,
                    Op::Winvt => rinv * m * rinv.transpose(),
                };
                svec(&out)
            }
        }
    }
}

fn cone_identity_vec(k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[0] = 1.0;
    v
}

/// Solves `lambda o x = r`.
pub fn jordan_solve(cone: Cone, lambda: &[f64], r: &[f64]) -> Vec<f64> {
    match cone {
        Cone::Nonneg(_) => r.iter().zip(lambda).map(|(a, b)| a / b).collect(),
        Cone::Soc(_) => {
            let d = soc_j(lambda);
            let x0 = (lambda[0] * r[0] - dot(&lambda[1..], &r[1..])) / d;
            let mut out = vec![x0];
            out.extend((1..r.len()).map(|i| (r[i] - x0 * lambda[i]) / lambda[0]));
            out
        }
        Cone::Psd(k) => {
            // lambda is diagonal in the scaled frame
            let lm = smat(lambda, k);
            let rm = smat(r, k);
            let x = DMatrix::from_fn(k, k, |i, j| 2.0 * rm[(i, j)] / (lm[(i, i)] + lm[(j, j)]));
            svec(&x)
        }
    }
}
