//! The benchmark `max { y : C - y E in K_h }` for a hierarchy `K_h`, and
//! membership problems for a fixed matrix.

use super::{AffineMat, ConicProblem};
use crate::error::{Error, Result};
use crate::frame::{add_dp_constraints, add_yildirim_constraints};
use crate::jordan::{check_symmetric, structure_constants, ConeShape, SymMatrix};
use crate::lasserre::{add_lasserre_constraints, MomentTable};
use crate::poly::nn::add_nn_constraints;
use crate::poly::zvp::add_zvp_constraints;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "hierarchy", content = "r", rename_all = "lowercase")]
pub enum Hierarchy {
    Dp(u32),
    Yildirim(u32),
    Zvp(u32),
    Nn(u32),
    Lasserre(u32),
}

impl Hierarchy {
    pub fn depth(&self) -> u32 {
        match *self {
            Hierarchy::Dp(r) | Hierarchy::Yildirim(r) | Hierarchy::Zvp(r) | Hierarchy::Nn(r) | Hierarchy::Lasserre(r) => r,
        }
    }

    pub fn with_depth(&self, r: u32) -> Self {
        match self {
            Hierarchy::Dp(_) => Hierarchy::Dp(r),
            Hierarchy::Yildirim(_) => Hierarchy::Yildirim(r),
            Hierarchy::Zvp(_) => Hierarchy::Zvp(r),
            Hierarchy::Nn(_) => Hierarchy::Nn(r),
            Hierarchy::Lasserre(_) => Hierarchy::Lasserre(r),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Hierarchy::Dp(_) => "dp",
            Hierarchy::Yildirim(_) => "yildirim",
            Hierarchy::Zvp(_) => "zvp",
            Hierarchy::Nn(_) => "nn",
            Hierarchy::Lasserre(_) => "lasserre",
        }
    }

    /// Inner approximations are subsets of the copositive cone.
    pub fn is_inner(&self) -> bool {
        matches!(self, Hierarchy::Dp(_) | Hierarchy::Zvp(_) | Hierarchy::Nn(_))
    }

    pub fn all(r: u32) -> [Hierarchy; 5] {
        [Hierarchy::Dp(r), Hierarchy::Yildirim(r), Hierarchy::Zvp(r), Hierarchy::Nn(r), Hierarchy::Lasserre(r)]
    }

    /// Parses `dp`, `yildirim`, `zvp`, `nn` or `lasserre` at depth `r`.
    pub fn parse(name: &str, r: u32) -> Result<Self> {
        let h = match name.to_ascii_lowercase().as_str() {
            "dp" => Hierarchy::Dp(r),
            "yildirim" | "yi" => Hierarchy::Yildirim(r),
            "zvp" => Hierarchy::Zvp(r),
            "nn" => Hierarchy::Nn(r),
            "lasserre" | "las" => Hierarchy::Lasserre(r),
            other => return Err(Error::Invalid(format!("unknown hierarchy '{other}'"))),
        };
        Ok(h)
    }
}

impl std::fmt::Display for Hierarchy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.name(), self.depth())
    }
}

impl FromStr for Hierarchy {
    type Err = Error;

    /// Accepts `name` (depth 0) or `name(r)` / `name:r`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((name, rest)) = s.split_once(['(', ':']) {
            let digits = rest.trim_end_matches(')');
            let r = digits.parse().map_err(|_| Error::Invalid(format!("bad depth in '{s}'")))?;
            Hierarchy::parse(name, r)
        } else {
            Hierarchy::parse(s, 0)
        }
    }
}

/// `B^T B + I` with standard normal `B`, the benchmark's random cost matrix.
pub fn random_pd(n: usize, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = SymMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    b.transpose() * &b + SymMatrix::identity(n, n)
}

/// Knobs shared by every hierarchy emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub concise: bool,
    /// Divide Lasserre moments by `y_0`.
    pub normalized_moments: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { concise: true, normalized_moments: true }
    }
}

/// Adds "`a` lies in the approximation `h`" to `p`.
pub fn add_hierarchy(p: &mut ConicProblem, a: &AffineMat, h: Hierarchy, shape: ConeShape, opts: BuildOptions) -> Result<()> {
    let n = shape.n();
    if a.constant.nrows() != n || a.constant.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.constant.nrows() });
    }
    match h {
        Hierarchy::Dp(r) => add_dp_constraints(p, a, r, shape, opts.concise),
        Hierarchy::Yildirim(r) => add_yildirim_constraints(p, a, r, shape, opts.concise),
        Hierarchy::Zvp(r) => {
            add_zvp_constraints(p, a, r, shape);
        }
        Hierarchy::Nn(r) => {
            add_nn_constraints(p, a, r, &structure_constants(shape))?;
        }
        Hierarchy::Lasserre(r) => {
            let table = MomentTable::build(shape, 2 * r + 2, opts.normalized_moments);
            add_lasserre_constraints(p, a, r, &table)?;
        }
    }
    Ok(())
}

/// `max y` s.t. `C - y E_n` in the chosen approximation. Variable 0 is `y`.
pub fn assemble_copp(c: &SymMatrix, h: Hierarchy, shape: ConeShape, concise: bool) -> Result<ConicProblem> {
    assemble_copp_with(c, h, shape, BuildOptions { concise, ..Default::default() })
}

pub fn assemble_copp_with(c: &SymMatrix, h: Hierarchy, shape: ConeShape, opts: BuildOptions) -> Result<ConicProblem> {
    let n = shape.n();
    check_symmetric(c, n)?;
    let mut p = ConicProblem::new(format!("copp-{}-r{}-n1_{}-n2_{}", h.name(), h.depth(), shape.n1, shape.n2));
    let y = p.add_var("y");
    p.maximize(vec![(y, 1.0)]);
    let s = AffineMat::constant(c.clone()).with_term(y, -SymMatrix::from_element(n, n, 1.0));
    add_hierarchy(&mut p, &s, h, shape, opts)?;
    Ok(p)
}

/// `max t` s.t. `A - t I` in the approximation. `A` is a member iff the
/// optimum is nonnegative.
pub fn membership_margin(a: &SymMatrix, h: Hierarchy, shape: ConeShape, opts: BuildOptions) -> Result<ConicProblem> {
    let n = shape.n();
    check_symmetric(a, n)?;
    let mut p = ConicProblem::new(format!("margin-{}-r{}", h.name(), h.depth()));
    let t = p.add_var("t");
    p.maximize(vec![(t, 1.0)]);
    let s = AffineMat::constant(a.clone()).with_term(t, -SymMatrix::identity(n, n));
    add_hierarchy(&mut p, &s, h, shape, opts)?;
    Ok(p)
}

/// Pure feasibility version of the membership test.
pub fn membership_feasibility(a: &SymMatrix, h: Hierarchy, shape: ConeShape, opts: BuildOptions) -> Result<ConicProblem> {
    let n = shape.n();
    check_symmetric(a, n)?;
    let mut p = ConicProblem::new(format!("member-{}-r{}", h.name(), h.depth()));
    add_hierarchy(&mut p, &AffineMat::constant(a.clone()), h, shape, opts)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConeKind;

    fn sh(n1: usize, n2: usize) -> ConeShape {
        ConeShape::new(n1, n2).unwrap()
    }

    #[test]
    fn hierarchy_parsing() {
        assert_eq!("dp".parse::<Hierarchy>().unwrap(), Hierarchy::Dp(0));
        assert_eq!("yildirim(3)".parse::<Hierarchy>().unwrap(), Hierarchy::Yildirim(3));
        assert_eq!("NN:2".parse::<Hierarchy>().unwrap(), Hierarchy::Nn(2));
        assert!("foo".parse::<Hierarchy>().is_err());
        assert_eq!(Hierarchy::Zvp(1).to_string(), "zvp(1)");
    }

    #[test]
    fn lasserre_zero_is_one_scalar_inequality() {
        let c = SymMatrix::identity(3, 3);
        let p = assemble_copp(&c, Hierarchy::Lasserre(0), sh(1, 2), true).unwrap();
        assert_eq!(p.num_vars(), 1);
        assert_eq!(p.cones.len(), 1);
        assert_eq!(p.cones[0].kind, ConeKind::Nonneg(1));
        assert!(p.equalities.is_empty());
    }

    #[test]
    fn dp_zero_on_plane_is_single_variable_problem() {
        let p = assemble_copp(&SymMatrix::identity(2, 2), Hierarchy::Dp(0), sh(0, 2), true).unwrap();
        assert_eq!(p.variables[0], "y");
        assert_eq!(p.objective, vec![(0, 1.0)]);
        // besides y, only the lift slacks
        let lifts = p.variables.iter().filter(|v| v.starts_with("t[")).count();
        assert_eq!(p.num_vars(), 1 + lifts);
        assert!(p.cones.iter().all(|c| matches!(c.kind, ConeKind::Nonneg(_) | ConeKind::Psd(2))));
    }

    #[test]
    fn every_hierarchy_assembles_and_validates() {
        let shape = sh(1, 3);
        let c = SymMatrix::from_fn(4, 4, |i, j| if i == j { 2.0 } else { 0.25 });
        for h in Hierarchy::all(1) {
            let p = assemble_copp(&c, h, shape, true).unwrap();
            p.validate().unwrap();
            assert!(!p.cones.is_empty(), "{h}");
        }
    }

    #[test]
    fn y_is_feasible_at_zero_for_identity() {
        // S = C at y = 0 must satisfy the dP blocks of the identity
        let shape = sh(1, 3);
        let c = SymMatrix::identity(4, 4);
        assert!(crate::frame::dp_member(&c, 1, shape, true, 1e-9).unwrap());
        let p = assemble_copp(&c, Hierarchy::Dp(1), shape, true).unwrap();
        assert!(p.num_vars() >= 1);
    }

    #[test]
    fn random_pd_is_reproducible_and_definite() {
        let a = random_pd(5, 3);
        assert_eq!(a, random_pd(5, 3));
        assert_ne!(a, random_pd(5, 4));
        assert!(a.clone().symmetric_eigenvalues().min() >= 1.0 - 1e-9);
    }

    #[test]
    fn rejects_wrong_size() {
        let c = SymMatrix::identity(3, 3);
        assert!(assemble_copp(&c, Hierarchy::Dp(0), sh(2, 2), true).is_err());
    }
}
