//! Primal-dual interior-point solver for block conic programs with
//! nonnegative, second-order and PSD blocks.

pub mod cones;
pub mod corpus;
pub mod external;
mod ipm;
mod kkt;
pub mod standard;

use crate::error::{Error, Result};
use crate::model::{Certificate, CertificateKind, ConeKind, ConicProblem, Residuals, Solution, Status};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use standard::StandardForm;
use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub eps_feas: f64,
    pub eps_gap: f64,
    pub eps_infeas: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iterations: 200, eps_feas: 1e-8, eps_gap: 1e-8, eps_infeas: 1e-10 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_feas > 0.0 && self.eps_gap > 0.0 && self.eps_infeas > 0.0) {
            return Err(Error::Invalid("solver tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Same config with both feasibility and gap tolerance set to `tol`.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.eps_feas = tol;
        self.eps_gap = tol;
        self
    }
}

/// Unpacks a solver-side cone vector into problem coordinates (PSD:
/// unscaled packed upper triangle).
fn unscale(kind: ConeKind, v: &[f64]) -> Vec<f64> {
    match kind {
        ConeKind::Psd(k) => {
            let mut out = v.to_vec();
            let mut p = 0;
            for j in 0..k {
                for i in 0..=j {
                    if i != j {
                        out[p] /= SQRT_2;
                    }
                    p += 1;
                }
            }
            out
        }
        _ => v.to_vec(),
    }
}

fn split_cones(p: &ConicProblem, sf: &StandardForm, z: &DVector<f64>) -> Vec<Vec<f64>> {
    let off = sf.offsets();
    p.cones
        .iter()
        .enumerate()
        .map(|(i, c)| unscale(c.kind, &z.as_slice()[off[i]..off[i + 1]]))
        .collect()
}

fn eq_duals(sf: &StandardForm, y: &DVector<f64>) -> Vec<f64> {
    sf.eq_rows.iter().map(|r| r.map_or(0.0, |r| y[r])).collect()
}

/// Solves `p` (maximization) with the built-in interior-point method.
pub fn solve(p: &ConicProblem, cfg: &SolverConfig) -> Result<Solution> {
    p.validate()?;
    cfg.validate()?;
    let sf = StandardForm::from_problem(p);
    if let Some(q) = sf.trivially_infeasible {
        let mut y = vec![0.0; p.equalities.len()];
        y[q] = -1.0 / p.equalities[q].rhs;
        let cone_duals = p.cones.iter().map(|c| vec![0.0; c.kind.dim()]).collect::<Vec<_>>();
        return Ok(Solution {
            status: Status::Infeasible,
            objective: f64::NAN,
            dual_objective: f64::NAN,
            x: vec![0.0; p.num_vars()],
            eq_duals: vec![0.0; p.equalities.len()],
            cone_duals: cone_duals.clone(),
            residuals: Residuals::default(),
            iterations: 0,
            certificate: Some(Certificate { kind: CertificateKind::PrimalInfeasible, x: vec![], eq_duals: y, cone_duals, violation: 0.0 }),
        });
    }
    let raw = ipm::run(&sf, cfg);
    let it = &raw.it;
    let h = sf.h();
    let sol = match raw.status {
        Status::Infeasible => {
            let scale = -1.0 / (sf.b.dot(&it.y) + h.dot(&it.z));
            let y = &it.y * scale;
            let z = &it.z * scale;
            let violation = (sf.a.transpose() * &y + sf.gt_mul(&z)).amax();
            let cone_duals = split_cones(p, &sf, &z);
            Solution {
                status: raw.status,
                objective: f64::NAN,
                dual_objective: f64::NAN,
                x: vec![0.0; sf.n],
                eq_duals: vec![0.0; p.equalities.len()],
                cone_duals: p.cones.iter().map(|c| vec![0.0; c.kind.dim()]).collect(),
                residuals: raw.residuals,
                iterations: raw.iterations,
                certificate: Some(Certificate { kind: CertificateKind::PrimalInfeasible, x: vec![], eq_duals: eq_duals(&sf, &y), cone_duals, violation }),
            }
        }
        Status::Unbounded => {
            let scale = -1.0 / sf.c.dot(&it.x);
            let x = &it.x * scale;
            let s = &it.s * scale;
            let violation = (&sf.a * &x).amax().max((sf.g_mul(&x) + &s).amax());
            Solution {
                status: raw.status,
                objective: f64::INFINITY,
                dual_objective: f64::NAN,
                x: vec![0.0; sf.n],
                eq_duals: vec![0.0; p.equalities.len()],
                cone_duals: p.cones.iter().map(|c| vec![0.0; c.kind.dim()]).collect(),
                residuals: raw.residuals,
                iterations: raw.iterations,
                certificate: Some(Certificate {
                    kind: CertificateKind::DualInfeasible,
                    x: x.iter().copied().collect(),
                    eq_duals: vec![],
                    cone_duals: vec![],
                    violation,
                }),
            }
        }
        _ => {
            let x = &it.x / it.tau;
            let y = &it.y / it.tau;
            let z = &it.z / it.tau;
            Solution {
                status: raw.status,
                objective: -sf.c.dot(&x),
                dual_objective: sf.b.dot(&y) + h.dot(&z),
                x: x.iter().copied().collect(),
                eq_duals: eq_duals(&sf, &y),
                cone_duals: split_cones(p, &sf, &z),
                residuals: raw.residuals,
                iterations: raw.iterations,
                certificate: None,
            }
        }
    };
    Ok(sol)
}

/// Residuals recomputed from the problem data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub residuals: Residuals,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Largest negative eigenvalue of a cone expression at `x`.
    pub primal_cone_violation: f64,
    pub dual_cone_violation: f64,
    /// Sum of `<S_b(x), Z_b>` over cones.
    pub complementarity: f64,
}

fn dense(kind: ConeKind, packed: &[f64]) -> DMatrix<f64> {
    match kind {
        ConeKind::Psd(k) => {
            let mut m = DMatrix::zeros(k, k);
            let mut p = 0;
            for j in 0..k {
                for i in 0..=j {
                    m[(i, j)] = packed[p];
                    m[(j, i)] = packed[p];
                    p += 1;
                }
            }
            m
        }
        _ => DMatrix::from_column_slice(packed.len(), 1, packed),
    }
}

/// Distance below the cone, `max(0, -lambda_min)`.
pub fn cone_violation(kind: ConeKind, m: &DMatrix<f64>) -> f64 {
    let low = match kind {
        ConeKind::Nonneg(_) => m.iter().copied().fold(f64::INFINITY, f64::min),
        ConeKind::Soc(_) => m[(0, 0)] - m.rows(1, m.nrows() - 1).norm(),
        ConeKind::Psd(_) => SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
    };
    (-low).max(0.0)
}

/// Recomputes primal, dual and gap residuals directly from `p` and `sol`.
pub fn check_kkt(p: &ConicProblem, sol: &Solution) -> KktReport {
    let x = &sol.x;
    let nv = p.num_vars();
    let b_norm = p.equalities.iter().map(|e| e.rhs.abs()).fold(0.0, f64::max);
    let h_norm = p.cones.iter().flat_map(|c| c.constant.iter().map(|e| e.v.abs())).fold(0.0, f64::max);
    let c_norm = p.objective.iter().map(|(_, w)| w.abs()).fold(0.0, f64::max);

    let mut eq_res: f64 = 0.0;
    for e in &p.equalities {
        let lhs: f64 = e.terms.iter().map(|(v, w)| w * x[*v]).sum();
        eq_res = eq_res.max((lhs - e.rhs).abs());
    }
    let mut pcone: f64 = 0.0;
    let mut dcone: f64 = 0.0;
    let mut comp = 0.0;
    let mut stationarity = vec![0.0; nv];
    for &(v, w) in &p.objective {
        stationarity[v] -= w;
    }
    for (q, e) in p.equalities.iter().enumerate() {
        let yq = sol.eq_duals.get(q).copied().unwrap_or(0.0);
        for &(v, w) in &e.terms {
            stationarity[v] += w * yq;
        }
    }
    let mut dobj: f64 = p.equalities.iter().enumerate().map(|(q, e)| e.rhs * sol.eq_duals.get(q).copied().unwrap_or(0.0)).sum();
    for (ci, c) in p.cones.iter().enumerate() {
        let s = p.cone_value(c, x);
        pcone = pcone.max(cone_violation(c.kind, &s));
        let zp = sol.cone_duals.get(ci).cloned().unwrap_or_else(|| vec![0.0; c.kind.dim()]);
        let zm = dense(c.kind, &zp);
        dcone = dcone.max(cone_violation(c.kind, &zm));
        comp += s.dot(&zm);
        let weight = |i: usize, j: usize| if matches!(c.kind, ConeKind::Psd(_)) && i != j { 2.0 } else { 1.0 };
        for e in &c.linear {
            stationarity[e.var] -= e.v * zm[(e.i, e.j)] * weight(e.i, e.j);
        }
        for e in &c.constant {
            dobj += e.v * zm[(e.i, e.j)] * weight(e.i, e.j);
        }
    }
    let pobj: f64 = p.objective.iter().map(|(v, w)| w * x[*v]).sum();
    let stat = stationarity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residuals = Residuals {
        primal: (eq_res / (1.0 + b_norm)).max(pcone / (1.0 + h_norm)),
        dual: (stat / (1.0 + c_norm)).max(dcone / (1.0 + c_norm)),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
    };
    KktReport {
        residuals,
        primal_objective: pobj,
        dual_objective: dobj,
        primal_cone_violation: pcone,
        dual_cone_violation: dcone,
        complementarity: comp,
    }
}
