//! Homogeneous self-dual predictor-corrector iteration.

use super::cones::{dot, jordan_product, jordan_solve, max_step, min_eig, Cone, Op, Scaling};
use super::kkt::Kkt;
use super::standard::StandardForm;
use super::SolverConfig;
use crate::model::{Residuals, Status};
use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct Iterate {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
    pub tau: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone)]
pub struct RawResult {
    pub status: Status,
    pub it: Iterate,
    pub residuals: Residuals,
    pub iterations: usize,
}

struct Norms {
    b: f64,
    h: f64,
    c: f64,
}

struct Metrics {
    res: Residuals,
    pinf: Option<f64>,
    dinf: Option<f64>,
}

fn segments(sf: &StandardForm) -> Vec<(Cone, usize, usize)> {
    let off = sf.offsets();
    sf.blocks.iter().enumerate().map(|(i, b)| (b.cone, off[i], b.cone.dim())).collect()
}

fn seg(v: &DVector<f64>, o: usize, d: usize) -> Vec<f64> {
    v.rows(o, d).iter().copied().collect()
}

fn per_cone(segs: &[(Cone, usize, usize)], total: usize, mut f: impl FnMut(usize, Cone, usize, usize) -> Vec<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(total);
    for (k, &(c, o, d)) in segs.iter().enumerate() {
        let v = f(k, c, o, d);
        out.rows_mut(o, d).copy_from_slice(&v);
    }
    out
}

/// Pushes `v` into the interior by adding a multiple of the identity.
fn shift_into_cone(segs: &[(Cone, usize, usize)], v: &mut DVector<f64>) {
    let mut worst = f64::NEG_INFINITY;
    for &(c, o, d) in segs {
        worst = worst.max(-min_eig(c, &seg(v, o, d)));
    }
    if segs.is_empty() {
        return;
    }
    let nrm = v.amax().max(1.0);
    if worst >= -1e-8 * nrm {
        let a = 1.0 + worst.max(0.0);
        for &(c, o, d) in segs {
            let e = c.identity();
            for i in 0..d {
                v[o + i] += a * e[i];
            }
        }
    }
}

fn metrics(sf: &StandardForm, h: &DVector<f64>, nrm: &Norms, it: &Iterate) -> Metrics {
    let Iterate { x, y, z, s, tau, .. } = it;
    let ax = &sf.a * x;
    let gx = sf.g_mul(x);
    let aty_gtz = sf.a.transpose() * y + sf.gt_mul(z);
    let cx = sf.c.dot(x);
    let by_hz = sf.b.dot(y) + h.dot(z);
    let ry = (&sf.b * *tau - &ax).amax();
    let rz = (&gx + s - h * *tau).amax();
    let rx = (&aty_gtz + &sf.c * *tau).amax();
    let pcost = cx / tau;
    let dcost = -by_hz / tau;
    let primal = (ry / (1.0 + nrm.b)).max(rz / (1.0 + nrm.h)) / tau;
    let dual = rx / (1.0 + nrm.c) / tau;
    let gap = (pcost - dcost).abs() / (1.0 + pcost.abs() + dcost.abs());
    // violations of the rays normalized to b^T y + h^T z = -1 and c^T x = -1
    let pinf = (-by_hz > 0.0).then(|| aty_gtz.amax() / -by_hz);
    let dinf = (-cx > 0.0).then(|| ax.amax().max((&gx + s).amax()) / -cx);
    Metrics { res: Residuals { primal, dual, gap }, pinf, dinf }
}

struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
    dtau: f64,
    dkappa: f64,
    /// Scaled directions `W^{-T} ds` and `W dz`.
    ds_s: DVector<f64>,
    dz_s: DVector<f64>,
}

pub fn run(sf: &StandardForm, cfg: &SolverConfig) -> RawResult {
    let n = sf.n;
    let p = sf.a.nrows();
    let m = sf.m();
    let h = sf.h();
    let segs = segments(sf);
    let nu: f64 = segs.iter().map(|(c, ..)| c.degree() as f64).sum();
    let nrm = Norms { b: sf.b.amax(), h: h.amax(), c: sf.c.amax() };

    // starting point from two least-squares solves with W = I
    let ident: Vec<Scaling> = segs.iter().map(|(c, ..)| Scaling::identity(*c)).collect();
    let kkt = Kkt::factor(sf, &ident);
    let (x, _, zt) = kkt.solve(&DVector::zeros(n), &sf.b, &h);
    let mut s = -zt;
    let (_, y, mut z) = kkt.solve(&(-&sf.c), &DVector::zeros(p), &DVector::zeros(m));
    shift_into_cone(&segs, &mut s);
    shift_into_cone(&segs, &mut z);
    let mut it = Iterate { x, y, z, s, tau: 1.0, kappa: 1.0 };

    let mut best: Option<(f64, Iterate, Residuals)> = None;
    let mut small_steps = 0;
    for iter in 0..=cfg.max_iterations {
        let mt = metrics(sf, &h, &nrm, &it);
        let score = mt.res.max();
        if score.is_finite() && best.as_ref().is_none_or(|(b, ..)| score < *b) {
            best = Some((score, it.clone(), mt.res));
        }
        if mt.res.primal <= cfg.eps_feas && mt.res.dual <= cfg.eps_feas && mt.res.gap <= cfg.eps_gap {
            return RawResult { status: Status::Optimal, it, residuals: mt.res, iterations: iter };
        }
        let yz = it.y.amax().max(it.z.amax());
        let bh = -(sf.b.dot(&it.y) + h.dot(&it.z));
        if mt.pinf.is_some_and(|v| v <= cfg.eps_feas) && bh > cfg.eps_infeas * yz {
            return RawResult { status: Status::Infeasible, it, residuals: mt.res, iterations: iter };
        }
        if mt.dinf.is_some_and(|v| v <= cfg.eps_feas) && -sf.c.dot(&it.x) > cfg.eps_infeas * it.x.amax() {
            return RawResult { status: Status::Unbounded, it, residuals: mt.res, iterations: iter };
        }
        if iter == cfg.max_iterations || small_steps >= 5 || !score.is_finite() {
            break;
        }

        let Iterate { x, y, z, s, tau, kappa } = &it;
        let (tau, kappa) = (*tau, *kappa);
        let scal: Vec<Scaling> = segs.iter().map(|&(c, o, d)| Scaling::compute(c, &seg(s, o, d), &seg(z, o, d))).collect();
        let lambda = per_cone(&segs, m, |k, c, o, d| {
            let mut l = scal[k].apply(Op::W, &seg(z, o, d));
            if let Cone::Psd(sz) = c {
                let mut p = 0;
                for j in 0..sz {
                    for i in 0..=j {
                        if i != j {
                            l[p] = 0.0;
                        }
                        p += 1;
                    }
                }
            }
            l
        });
        let mu = (s.dot(z) + tau * kappa) / (nu + 1.0);

        let rx = sf.a.transpose() * y + sf.gt_mul(z) + &sf.c * tau;
        let ry = &sf.b * tau - &sf.a * x;
        let rz = sf.g_mul(x) + s - &h * tau;
        let rt = kappa + sf.c.dot(x) + sf.b.dot(y) + h.dot(z);

        let kkt = Kkt::factor(sf, &scal);
        let (x1, y1, z1) = kkt.solve(&(-&sf.c), &sf.b, &h);
        let wz1: f64 = segs
            .iter()
            .enumerate()
            .map(|(k, &(_, o, d))| {
                let v = scal[k].apply(Op::W, &seg(&z1, o, d));
                dot(&v, &v)
            })
            .sum();

        let direction = |eta: f64, rc: &DVector<f64>, rtk: f64| -> Direction {
            let lrc = per_cone(&segs, m, |k, c, o, d| {
                let _ = k;
                jordan_solve(c, &seg(&lambda, o, d), &seg(rc, o, d))
            });
            let wt_lrc = per_cone(&segs, m, |k, _, o, d| scal[k].apply(Op::Wt, &seg(&lrc, o, d)));
            let bx = -&rx * eta;
            let by = &ry * eta;
            let bz = -&rz * eta - &wt_lrc;
            let (x2, y2, z2) = kkt.solve(&bx, &by, &bz);
            let q2 = sf.c.dot(&x2) + sf.b.dot(&y2) + h.dot(&z2);
            let dtau = (rtk + tau * (eta * rt + q2)) / (kappa + tau * wz1);
            let dx = x2 + &x1 * dtau;
            let dy = y2 + &y1 * dtau;
            let dz = z2 + &z1 * dtau;
            let dz_s = per_cone(&segs, m, |k, _, o, d| scal[k].apply(Op::W, &seg(&dz, o, d)));
            // from the linear equation, so primal residuals shrink exactly by (1 - eta)
            let ds = -&rz * eta - sf.g_mul(&dx) + &h * dtau;
            let ds_s = per_cone(&segs, m, |k, _, o, d| scal[k].apply(Op::Winvt, &seg(&ds, o, d)));
            let dkappa = (rtk - kappa * dtau) / tau;
            Direction { dx, dy, dz, ds, dtau, dkappa, ds_s, dz_s }
        };
        let step = |d: &Direction| -> f64 {
            let mut a = f64::INFINITY;
            for &(c, o, dd) in &segs {
                let l = seg(&lambda, o, dd);
                a = a.min(max_step(c, &l, &seg(&d.ds_s, o, dd)));
                a = a.min(max_step(c, &l, &seg(&d.dz_s, o, dd)));
            }
            if d.dtau < 0.0 {
                a = a.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-kappa / d.dkappa);
            }
            a
        };

        // predictor
        let lsq = per_cone(&segs, m, |_, c, o, d| {
            let l = seg(&lambda, o, d);
            jordan_product(c, &l, &l)
        });
        let aff = direction(1.0, &(-&lsq), -tau * kappa);
        let a_aff = step(&aff).min(1.0);
        let sigma = (1.0 - a_aff).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc = per_cone(&segs, m, |_, c, o, d| {
            let corr = jordan_product(c, &seg(&aff.ds_s, o, d), &seg(&aff.dz_s, o, d));
            let e = c.identity();
            let l = seg(&lsq, o, d);
            (0..d).map(|i| -l[i] - corr[i] + sigma * mu * e[i]).collect()
        });
        let rtk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
        let dir = direction(1.0 - sigma, &rc, rtk);
        let alpha = (0.99 * step(&dir)).min(1.0);
        if !alpha.is_finite() || alpha < 1e-10 {
            small_steps += 1;
            if !alpha.is_finite() {
                break;
            }
        } else {
            small_steps = 0;
        }
        let Iterate { x, y, z, s, tau, kappa } = &mut it;
        *x += &dir.dx * alpha;
        *y += &dir.dy * alpha;
        *z += &dir.dz * alpha;
        *s += &dir.ds * alpha;
        *tau += dir.dtau * alpha;
        *kappa += dir.dkappa * alpha;
    }
    let (_, it, res) = best.unwrap_or((f64::INFINITY, it.clone(), Residuals { primal: f64::INFINITY, dual: f64::INFINITY, gap: f64::INFINITY }));
    RawResult { status: Status::Stalled, it, residuals: res, iterations: cfg.max_iterations }
}
