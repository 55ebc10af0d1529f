//! ZVP-type inner hierarchy. `A` is accepted at depth `r` when
//! `(e^T x)^r x^T A x` lies in the cone `E^{n, r+2}` generated recursively by
//! SOS forms and the semialgebraic description of `K`:
//!
//! `E^m = Sigma^m [m even] + sum_i phi_i E^{m-1} + phi2 E^{m-2}`.
//!
//! Unrolling the recursion, every term is a word in the generators times an
//! SOS form of the remaining (even) degree.

use super::gram::{AffinePoly, PolyEquations};
use super::SparsePoly;
use crate::combinatorics::{enumerate_eq, MultiIndex};
use crate::jordan::{ConeShape, SymMatrix};
use crate::model::{AffineMat, ConicProblem};

/// Linear generators `x_1i`, `x_21`, `e^T x` and the quadratic `x_21^2 - |x_2,2:|^2`.
pub fn semialgebraic_generators(shape: ConeShape) -> (Vec<SparsePoly<f64>>, SparsePoly<f64>) {
    let n = shape.n();
    let s = shape.soc_start();
    let mut lin: Vec<SparsePoly<f64>> = (0..=s).map(|i| SparsePoly::var(n, i)).collect();
    let mut e = vec![0.0; n];
    for v in e.iter_mut().take(s + 1) {
        *v = 1.0;
    }
    lin.push(SparsePoly::linear(&e));
    let mut quad = SparsePoly::zero(n, 2);
    for j in 0..shape.n2 {
        let mut al = MultiIndex::zero(n);
        al.0[s + j] = 2;
        quad.add_term(al, if j == 0 { 1.0 } else { -1.0 });
    }
    (lin, quad)
}

/// A leaf of the unrolled recursion: generator word and SOS degree.
#[derive(Debug, Clone, PartialEq)]
pub struct ZvpBlock {
    /// Generator indices; `rk` stands for the quadratic generator.
    pub word: Vec<usize>,
    pub word_degree: u32,
    /// Order of the Gram matrix, `|I^n_{=(m - word_degree)/2}|`.
    pub gram_size: usize,
}

/// All leaves for target degree `m`, in depth-first order.
pub fn zvp_blocks(m: u32, shape: ConeShape) -> Vec<ZvpBlock> {
    let rk = shape.rank();
    let mut out = Vec::new();
    let mut word = Vec::new();
    walk(m, 0, rk, shape.n(), &mut word, &mut out);
    out
}

fn walk(m: u32, used: u32, rk: usize, n: usize, word: &mut Vec<usize>, out: &mut Vec<ZvpBlock>) {
    let left = m - used;
    if left % 2 == 0 {
        out.push(ZvpBlock { word: word.clone(), word_degree: used, gram_size: enumerate_eq(n, left / 2).len() });
    }
    if left >= 1 {
        for g in 0..rk {
            word.push(g);
            walk(m, used + 1, rk, n, word, out);
            word.pop();
        }
    }
    if left >= 2 {
        word.push(rk);
        walk(m, used + 2, rk, n, word, out);
        word.pop();
    }
}

/// Per SOS degree `2j`: number of blocks and their order.
pub fn zvp_schedule(m: u32, shape: ConeShape) -> Vec<(u32, usize, usize)> {
    let blocks = zvp_blocks(m, shape);
    let mut out = Vec::new();
    for half in (0..=m / 2).rev() {
        let deg = 2 * half;
        if (m - deg) % 2 != 0 {
            continue;
        }
        let bs: Vec<_> = blocks.iter().filter(|b| m - b.word_degree == deg).collect();
        if !bs.is_empty() {
            out.push((deg, bs.len(), bs[0].gram_size));
        }
    }
    out
}

/// `(e^T x)^r x^T A x`.
pub fn zvp_target(a: &SymMatrix, r: u32, shape: ConeShape) -> SparsePoly<f64> {
    let n = shape.n();
    let mut q = SparsePoly::zero(n, 2);
    for i in 0..n {
        for j in 0..n {
            let mut al = MultiIndex::zero(n);
            al.0[i] += 1;
            al.0[j] += 1;
            q.add_term(al, a[(i, j)]);
        }
    }
    let e = shape.identity().data;
    SparsePoly::linear(&e).pow(r).mul(&q).expect("same nvars")
}

/// Adds the ZVP condition for an affine matrix to `p`. Returns the leaves.
pub fn add_zvp_constraints(p: &mut ConicProblem, a: &AffineMat, r: u32, shape: ConeShape) -> Vec<ZvpBlock> {
    let n = shape.n();
    let m = r + 2;
    let (lin, quad) = semialgebraic_generators(shape);
    let rk = shape.rank();
    let blocks = zvp_blocks(m, shape);
    let mut eqs = PolyEquations::new();
    // products of word prefixes, keyed by the word itself
    let mut products: std::collections::HashMap<Vec<usize>, SparsePoly<f64>> = std::collections::HashMap::new();
    products.insert(vec![], SparsePoly::constant(n, 1.0));
    for (bi, b) in blocks.iter().enumerate() {
        for len in 1..=b.word.len() {
            let key = b.word[..len].to_vec();
            if products.contains_key(&key) {
                continue;
            }
            let prev = products[&b.word[..len - 1]].clone();
            let g = b.word[len - 1];
            let gen = if g == rk { &quad } else { &lin[g] };
            products.insert(key, prev.mul(gen).expect("same nvars"));
        }
        let basis = enumerate_eq(n, (m - b.word_degree) / 2);
        let name = if b.word.is_empty() { "zvp.S".to_string() } else {
            format!("zvp.{}", b.word.iter().map(|g| g.to_string()).collect::<Vec<_>>().join("."))
        };
        let gram = p.add_psd_var(&format!("{name}#{bi}"), basis.len());
        eqs.add_gram(&gram, &basis, &products[&b.word]);
    }
    let target = AffinePoly {
        constant: zvp_target(&a.constant, r, shape),
        terms: a.terms.iter().map(|(v, t)| (*v, zvp_target(t, r, shape))).collect(),
    };
    eqs.set_target(&target);
    eqs.emit(p, &format!("zvp{r}"));
    blocks
}

/// Feasibility problem "A is in the ZVP approximation at depth r".
pub fn zvp_membership_constraints(a: &SymMatrix, r: u32, shape: ConeShape) -> ConicProblem {
    let mut p = ConicProblem::new(format!("zvp-member-r{r}"));
    add_zvp_constraints(&mut p, &AffineMat::constant(a.clone()), r, shape);
    p
}
