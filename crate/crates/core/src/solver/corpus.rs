//! Random strictly feasible, bounded block problems for solver testing.

use crate::model::{AffineMat, ConeKind, ConicProblem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy)]
pub struct CorpusSpec {
    pub max_vars: usize,
    pub max_block: usize,
    pub max_blocks: usize,
    pub max_equalities: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self { max_vars: 30, max_block: 8, max_blocks: 4, max_equalities: 3 }
    }
}

pub struct CorpusProblem {
    pub problem: ConicProblem,
    /// Strictly feasible primal point.
    pub x0: Vec<f64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn interior(kind: ConeKind, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    match kind {
        ConeKind::Nonneg(k) => DMatrix::from_fn(k, 1, |_, _| rng.random_range(0.2..2.0)),
        ConeKind::Soc(k) => {
            let mut v = DMatrix::from_fn(k, 1, |_, _| normal(rng));
            let tail = v.rows(1, k - 1).norm();
            v[(0, 0)] = tail + rng.random_range(0.2..2.0);
            v
        }
        ConeKind::Psd(k) => {
            let b = DMatrix::from_fn(k, k, |_, _| normal(rng));
            &b * b.transpose() / k as f64 + DMatrix::identity(k, k) * 0.5
        }
    }
}

fn random_coeff(kind: ConeKind, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    match kind {
        ConeKind::Psd(k) => {
            let m = DMatrix::from_fn(k, k, |_, _| normal(rng));
            (&m + m.transpose()) * 0.5
        }
        _ => DMatrix::from_fn(kind.size(), 1, |_, _| normal(rng)),
    }
}

pub fn generate(seed: u64, spec: &CorpusSpec) -> CorpusProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = rng.random_range(1..=spec.max_vars);
    let mut p = ConicProblem::new(format!("corpus-{seed}"));
    for k in 0..nv {
        p.add_var(format!("x{k}"));
    }
    let x0: Vec<f64> = (0..nv).map(|_| normal(&mut rng)).collect();
    let nb = rng.random_range(1..=spec.max_blocks);
    let mut obj = vec![0.0; nv];
    for b in 0..nb {
        let size = rng.random_range(2..=spec.max_block);
        let kind = match rng.random_range(0..3) {
            0 => ConeKind::Nonneg(size),
            1 => ConeKind::Soc(size),
            _ => ConeKind::Psd(size),
        };
        let coeffs: Vec<DMatrix<f64>> = (0..nv).map(|_| random_coeff(kind, &mut rng)).collect();
        let s0 = interior(kind, &mut rng);
        let z0 = interior(kind, &mut rng);
        let mut constant = s0;
        for (k, a) in coeffs.iter().enumerate() {
            constant -= a * x0[k];
            obj[k] -= a.dot(&z0);
        }
        let mut e = AffineMat::constant(constant);
        for (k, a) in coeffs.into_iter().enumerate() {
            e = e.with_term(k, a);
        }
        p.add_cone_affine(format!("block{b}"), kind, &e);
    }
    let neq = rng.random_range(0..=spec.max_equalities.min(nv.saturating_sub(1)));
    for q in 0..neq {
        let terms: Vec<(usize, f64)> = (0..nv).map(|k| (k, normal(&mut rng))).collect();
        let rhs = terms.iter().map(|(k, w)| w * x0[*k]).sum();
        let y0 = normal(&mut rng);
        for &(k, w) in &terms {
            obj[k] += w * y0;
        }
        p.add_equality(format!("eq{q}"), terms, rhs);
    }
    p.maximize(obj.into_iter().enumerate().collect());
    CorpusProblem { problem: p, x0 }
}

pub fn random_problem(seed: u64, spec: &CorpusSpec) -> ConicProblem {
    generate(seed, spec).problem
}
