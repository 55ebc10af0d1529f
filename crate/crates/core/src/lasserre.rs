//! Lasserre-type outer hierarchy built from the moments of the uniform
//! measure on `Delta(K) = {x in K : e^T x <= 1}`.

use crate::combinatorics::{enumerate_le, factorial, MultiIndex};
use crate::error::{Error, Result};
use crate::jordan::{check_symmetric, ConeShape, SymMatrix};
use crate::model::{AffineMat, ConeKind, ConicProblem};
use nalgebra::DMatrix;
use num::{BigInt, BigRational, ToPrimitive};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::collections::BTreeMap;

/// Moments below this absolute size are reported as nearly zero.
pub const NEAR_ZERO: f64 = 1e-12;

fn tail(alpha: &MultiIndex, shape: ConeShape) -> &[u32] {
    &alpha.0[shape.n1 + 1..]
}

fn check_len(alpha: &MultiIndex, shape: ConeShape) -> Result<()> {
    if alpha.len() != shape.n() {
        return Err(Error::DimensionMismatch { expected: shape.n(), got: alpha.len() });
    }
    Ok(())
}

/// `int_{Delta(K)} x^alpha dx`, evaluated in log-gamma space.
pub fn moment(alpha: &MultiIndex, shape: ConeShape) -> Result<f64> {
    check_len(alpha, shape)?;
    let t = tail(alpha, shape);
    if t.iter().any(|a| a % 2 == 1) {
        return Ok(0.0);
    }
    let n1 = shape.n1;
    let d = (shape.n2 - 1) as f64;
    let tail_sum: f64 = t.iter().map(|&a| a as f64).sum();
    let soc_sum = tail_sum + alpha.0[n1] as f64;
    let total = alpha.degree() as f64;
    let mut ln = 2f64.ln();
    for &a in &alpha.0[..n1] {
        ln += ln_gamma(a as f64 + 1.0);
    }
    ln += ln_gamma(soc_sum + d + 1.0);
    let mut beta_sum = 0.0;
    for &a in t {
        let b = (a as f64 + 1.0) / 2.0;
        ln += ln_gamma(b);
        beta_sum += b;
    }
    ln -= (tail_sum + d).ln();
    ln -= ln_gamma(shape.n() as f64 + total + 1.0);
    ln -= ln_gamma(beta_sum);
    Ok(ln.exp())
}

/// Exact moment `coeff * pi^(pi_halves / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoment {
    pub coeff: BigRational,
    pub pi_halves: u32,
}

impl ExactMoment {
    pub fn to_f64(&self) -> f64 {
        self.coeff.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powf(self.pi_halves as f64 / 2.0)
    }
}

/// `Gamma(h/2)` for a positive integer `h` as `(rational, has sqrt(pi))`.
fn gamma_half(h: u32) -> (BigRational, bool) {
    if h % 2 == 0 {
        return (BigRational::from_integer(factorial(h / 2 - 1).into()), false);
    }
    // Gamma(k + 1/2) = (2k)! / (4^k k!) sqrt(pi)
    let k = (h - 1) / 2;
    let num: BigInt = factorial(2 * k).into();
    let den: BigInt = BigInt::from(4u32).pow(k) * BigInt::from(factorial(k));
    (BigRational::new(num, den), true)
}

/// Exact version of [`moment`]; every Gamma argument is an integer or a
/// half-integer so `sqrt(pi)` factors cancel symbolically.
pub fn moment_exact(alpha: &MultiIndex, shape: ConeShape) -> Result<ExactMoment> {
    check_len(alpha, shape)?;
    let t = tail(alpha, shape);
    let zero = ExactMoment { coeff: BigRational::from_integer(0.into()), pi_halves: 0 };
    if t.iter().any(|a| a % 2 == 1) {
        return Ok(zero);
    }
    let n1 = shape.n1;
    let d = (shape.n2 - 1) as u32;
    let tail_sum: u32 = t.iter().sum();
    let soc_sum = tail_sum + alpha.0[n1];
    let mut q = BigRational::from_integer(2.into());
    for &a in &alpha.0[..n1] {
        q *= BigRational::from_integer(factorial(a).into());
    }
    q *= BigRational::from_integer(factorial(soc_sum + d).into());
    let mut halves: i64 = 0;
    for &a in t {
        let (g, root) = gamma_half(a + 1);
        q *= g;
        halves += root as i64;
    }
    q /= BigRational::from_integer((tail_sum + d).into());
    q /= BigRational::from_integer(factorial(shape.n() as u32 + alpha.degree()).into());
    let (g, root) = gamma_half(tail_sum + d);
    q /= g;
    halves -= root as i64;
    Ok(ExactMoment { coeff: q, pi_halves: halves as u32 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub shape: ConeShape,
    pub max_degree: u32,
    /// Values are divided by `y_0` when set.
    pub normalized: bool,
    pub y0: f64,
    #[serde(with = "entries")]
    pub values: BTreeMap<MultiIndex, f64>,
}

mod entries {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct E {
        alpha: Vec<u32>,
        y: f64,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<MultiIndex, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<E> = m.iter().map(|(a, y)| E { alpha: a.0.clone(), y: *y }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<MultiIndex, f64>, D::Error> {
        let v: Vec<E> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|e| (MultiIndex(e.alpha), e.y)).collect())
    }
}

impl MomentTable {
    pub fn build(shape: ConeShape, max_degree: u32, normalized: bool) -> Self {
        let y0 = moment(&MultiIndex::zero(shape.n()), shape).expect("shape-consistent index");
        let scale = if normalized { 1.0 / y0 } else { 1.0 };
        let values = enumerate_le(shape.n(), max_degree)
            .into_iter()
            .map(|a| {
                let y = moment(&a, shape).expect("shape-consistent index") * scale;
                (a, y)
            })
            .collect();
        Self { shape, max_degree, normalized, y0, values }
    }

    pub fn get(&self, alpha: &MultiIndex) -> f64 {
        *self.values.get(alpha).unwrap_or_else(|| panic!("moment {:?} beyond degree {}", alpha.0, self.max_degree))
    }

    /// Nonzero moments of degree `<= degree` whose stored value is below `threshold`.
    pub fn near_zero(&self, degree: u32, threshold: f64) -> Vec<MultiIndex> {
        self.values
            .iter()
            .filter(|(a, y)| a.degree() <= degree && **y != 0.0 && y.abs() < threshold)
            .map(|(a, _)| a.clone())
            .collect()
    }

    pub fn underflow_flag(&self, degree: u32) -> bool {
        !self.near_zero(degree, NEAR_ZERO).is_empty()
    }

    /// Smallest `|y_alpha| / y_0` over nonzero moments up to `degree`.
    pub fn min_relative(&self, degree: u32) -> f64 {
        let y0 = if self.normalized { 1.0 } else { self.y0 };
        self.values
            .iter()
            .filter(|(a, y)| a.degree() <= degree && **y != 0.0)
            .map(|(_, y)| y.abs() / y0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Localized moment matrix `M_r(f_A y)` indexed by `I^n_{<= r}`.
pub fn lasserre_matrix(a: &SymMatrix, r: u32, table: &MomentTable) -> Result<DMatrix<f64>> {
    let shape = table.shape;
    let n = shape.n();
    check_symmetric(a, n)?;
    if table.max_degree < 2 * r + 2 {
        return Err(Error::Invalid(format!("moment table degree {} < {}", table.max_degree, 2 * r + 2)));
    }
    let basis = enumerate_le(n, r);
    let units: Vec<MultiIndex> = (0..n).map(|i| MultiIndex::unit(n, i)).collect();
    let k = basis.len();
    let mut m = DMatrix::zeros(k, k);
    for p in 0..k {
        for q in p..k {
            let ab = basis[p].add(&basis[q]);
            let mut acc = 0.0;
            for i in 0..n {
                let abi = ab.add(&units[i]);
                for j in 0..n {
                    if a[(i, j)] != 0.0 {
                        acc += a[(i, j)] * table.get(&abi.add(&units[j]));
                    }
                }
            }
            m[(p, q)] = acc;
            m[(q, p)] = acc;
        }
    }
    Ok(m)
}

pub fn lasserre_size(n: usize, r: u32) -> usize {
    crate::combinatorics::binomial_usize(n + r as usize, n)
}

/// Adds the PSD condition on the localized moment matrix of an affine `A`.
pub fn add_lasserre_constraints(p: &mut ConicProblem, a: &AffineMat, r: u32, table: &MomentTable) -> Result<()> {
    let expr = AffineMat {
        constant: lasserre_matrix(&a.constant, r, table)?,
        terms: a.terms.iter().map(|(v, m)| Ok((*v, lasserre_matrix(m, r, table)?))).collect::<Result<_>>()?,
    };
    let k = expr.constant.nrows();
    let kind = if k == 1 { ConeKind::Nonneg(1) } else { ConeKind::Psd(k) };
    p.add_cone_affine(format!("lasserre[{r}]"), kind, &expr);
    Ok(())
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Membership of a fixed `A` at depth `r`: PSD test of the moment matrix.
pub fn lasserre_member(a: &SymMatrix, r: u32, table: &MomentTable, tol: f64) -> Result<bool> {
    let m = lasserre_matrix(a, r, table)?;
    Ok(min_eigenvalue(&m) >= -tol * m.amax().max(f64::MIN_POSITIVE))
}
