//! Strictly feasible starting points for the benchmark and its dual.

use crate::jordan::{ConeShape, SymMatrix};
use crate::scalar::rational_to_f64;
use nalgebra::DMatrix;
use num::{BigInt, BigRational, Zero};

#[derive(Debug, Clone, PartialEq)]
pub struct SlaterPoint {
    pub y0: f64,
    pub s0: SymMatrix,
    /// Integer matrix before normalization.
    pub x0_prime: DMatrix<i64>,
    pub normalizer: i64,
    pub x0_exact: Vec<Vec<BigRational>>,
}

impl SlaterPoint {
    pub fn x0(&self) -> SymMatrix {
        let n = self.x0_exact.len();
        SymMatrix::from_fn(n, n, |i, j| rational_to_f64(&self.x0_exact[i][j]))
    }

    /// `<E_n, X0>` in exact arithmetic.
    pub fn trace_with_ones(&self) -> BigRational {
        self.x0_exact.iter().flatten().fold(BigRational::zero(), |acc, v| acc + v)
    }
}

/// `y0 = 0`, `S0 = C`, and the dual point
/// `X0' = [[E + I, 1, 0], [1^T, 2 n2 + 1, 0], [0, 0, 2 I]]` scaled to `<E, X0> = 1`.
pub fn slater_point(shape: ConeShape, c: &SymMatrix) -> SlaterPoint {
    let (n1, n2) = (shape.n1, shape.n2);
    let n = shape.n();
    let s = shape.soc_start();
    let mut xp = DMatrix::<i64>::zeros(n, n);
    for i in 0..n1 {
        for j in 0..n1 {
            xp[(i, j)] = if i == j { 2 } else { 1 };
        }
        xp[(i, s)] = 1;
        xp[(s, i)] = 1;
    }
    xp[(s, s)] = 2 * n2 as i64 + 1;
    for i in s + 1..n {
        xp[(i, i)] = 2;
    }
    let n1i = n1 as i64;
    let normalizer = n1i * n1i + 3 * n1i + 4 * n2 as i64 - 1;
    let den = BigInt::from(normalizer);
    let x0_exact = (0..n)
        .map(|i| (0..n).map(|j| BigRational::new(BigInt::from(xp[(i, j)]), den.clone())).collect())
        .collect();
    SlaterPoint { y0: 0.0, s0: c.clone(), x0_prime: xp, normalizer, x0_exact }
}
