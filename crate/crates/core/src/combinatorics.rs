//! Multi-indices, multinomial coefficients and the counting formulas used by
//! the hierarchies. Counts are exact (`BigUint`).

use crate::error::{Error, Result};
use num::{BigUint, One, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Exponent vector. Ordered by degree, then lexicographically with larger
/// leading exponents first, so `(2,0,0) < (1,1,0) < .. < (0,0,2)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn unit(d: usize, i: usize) -> Self {
        let mut v = vec![0; d];
        v[i] = 1;
        Self(v)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `alpha! = prod alpha_i!`
    pub fn factorial(&self) -> BigUint {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// Sorted index tuple `[alpha]`: each coordinate `i` repeated `alpha_i` times.
    pub fn canonical(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.degree() as usize);
        for (i, &a) in self.0.iter().enumerate() {
            out.extend(std::iter::repeat_n(i, a as usize));
        }
        out
    }

    pub fn from_canonical(d: usize, idx: &[usize]) -> Self {
        let mut v = vec![0; d];
        for &i in idx {
            v[i] += 1;
        }
        Self(v)
    }

    /// `x^alpha`
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&a, &xi)| xi.powi(a as i32)).product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn factorial(m: u32) -> BigUint {
    (1..=m).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn binomial_usize(n: usize, k: usize) -> usize {
    use num::ToPrimitive;
    binomial(n as u64, k as u64).to_usize().expect("count fits in usize")
}

/// All `alpha in N^d` with `|alpha| = m`, in the crate's monomial order.
pub fn enumerate_eq(d: usize, m: u32) -> Vec<MultiIndex> {
    assert!(d >= 1, "need at least one variable");
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fill(&mut cur, 0, m, &mut out);
    out
}

fn fill(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<MultiIndex>) {
    if pos == cur.len() - 1 {
        cur[pos] = left;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for a in (0..=left).rev() {
        cur[pos] = a;
        fill(cur, pos + 1, left - a, out);
    }
    cur[pos] = 0;
}

/// All `alpha` with `|alpha| <= m`, graded.
pub fn enumerate_le(d: usize, m: u32) -> Vec<MultiIndex> {
    (0..=m).flat_map(|k| enumerate_eq(d, k)).collect()
}

/// `m! / alpha!`
pub fn multinomial(m: u32, alpha: &MultiIndex) -> Result<BigUint> {
    if alpha.degree() != m {
        return Err(Error::DegreeMismatch { expected: m as usize, got: alpha.degree() as usize });
    }
    Ok(factorial(m) / alpha.factorial())
}

/// `a_m` with `a_0 = 1`, `a_1 = rk`, `a_{m+2} = rk a_{m+1} + a_m`.
pub fn zvp_count(rk: u32, m: u32) -> BigUint {
    let (mut a, mut b) = (BigUint::one(), BigUint::from(rk));
    for _ in 0..m {
        let next = BigUint::from(rk) * &b + &a;
        a = b;
        b = next;
    }
    a
}

/// Closed form of `a_m` via the roots of `z^2 - rk z - 1`.
pub fn zvp_count_closed_form(rk: u32, m: u32) -> f64 {
    let rk = rk as f64;
    let s = (rk * rk + 4.0).sqrt();
    let p = (rk + s) / 2.0;
    let q = (rk - s) / 2.0;
    (p.powi(m as i32 + 1) - q.powi(m as i32 + 1)) / s
}
