//! Carnot–Carathéodory distances by penalized energy minimization over
//! piecewise-constant horizontal controls.
//!
//! A path from `x` is driven by `N` controls `u_k` in the degree-one block
//! `D0 ⊕ D`. On nilpotent algebras each segment is an exact BCH step
//! `x ← x·(h u_k)`; otherwise the segment integrates the flow
//! `ẋ = DL_{−x}(0)⁻¹ u` (the continuous limit of the same steps) with RK4.
//! The energy `½ Σ h uᵀ g u` is minimized with a quadratic endpoint penalty
//! whose weight grows by ten per stage, followed by a minimum-norm Newton
//! projection onto the endpoint constraint.

mod sample;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::GradedAlgebra;
use crate::carnot::bch_series;
use crate::error::{HensError, Result};
use crate::linalg;
use crate::rng;

pub use sample::{ball_sample, sample_from_points};

pub const DEFAULT_SEGMENTS: usize = 32;
pub const DEFAULT_RESTARTS: usize = 8;
/// Endpoint residual below which a path counts as feasible.
pub const ENDPOINT_TOL: f64 = 1e-6;
pub const SERIES_TOL: f64 = 1e-14;
/// `DL` series are trusted while `‖ad_x‖ < 2π`.
pub const SERIES_RADIUS: f64 = 2.0 * std::f64::consts::PI;

const RK_SUBSTEPS: usize = 2;
const D0_REGULARIZATION: f64 = 1e-3;
const PENALTY_START: f64 = 10.0;
const PENALTY_STAGES: usize = 5;
const LM_ITERATIONS: usize = 15;
const SQP_ITERATIONS: usize = 150;
const PROJECTION_ITERATIONS: usize = 25;
const FD_STEP: f64 = 1e-6;

/// `DL_x(0) = Σ_k ad_x^k / (k+1)!`.
#[derive(Clone, Debug)]
pub struct DlOperator {
    pub matrix: DMatrix<f64>,
    /// Number of series terms summed.
    pub terms: usize,
    /// `‖ad_x‖₂ < 2π`.
    pub within_series_domain: bool,
}

pub fn dl_operator(alg: &GradedAlgebra, x: &DVector<f64>) -> Result<DlOperator> {
    if x.len() != alg.dim() {
        return Err(HensError::DimensionMismatch {
            expected: alg.dim(),
            got: x.len(),
        });
    }
    let ad = alg.ad_matrix(x);
    let n = alg.dim();
    let mut matrix = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    let mut terms = 1;
    for k in 1..400 {
        term = (&term * &ad) / (k as f64 + 1.0);
        let size = term.amax();
        if size == 0.0 {
            break;
        }
        matrix += &term;
        terms += 1;
        if size < SERIES_TOL * matrix.amax().max(1.0) {
            break;
        }
    }
    Ok(DlOperator {
        matrix,
        terms,
        within_series_domain: spectral_norm(&ad) < SERIES_RADIUS,
    })
}

/// Taylor coefficients of `z / (1 − e^{−z})`: `1, 1/2`, then
/// `B_{2j}/(2j)! = (−1)^{j+1} 2 ζ(2j) / (2π)^{2j}` at even orders.
fn bernoulli_coefficients() -> &'static [f64] {
    static COEFFS: OnceLock<Vec<f64>> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut c = vec![1.0, 0.5];
        let two_pi = 2.0 * std::f64::consts::PI;
        for k in 2..=120usize {
            if k % 2 == 1 {
                c.push(0.0);
                continue;
            }
            let j = (k / 2) as i32;
            let zeta = if j == 1 {
                std::f64::consts::PI.powi(2) / 6.0
            } else {
                let m = 2000;
                let tail = (m as f64).powi(1 - 2 * j) / (2 * j - 1) as f64;
                (1..=m).rev().map(|i| (i as f64).powi(-2 * j)).sum::<f64>() + tail
            };
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            c.push(sign * 2.0 * zeta / two_pi.powi(2 * j));
        }
        c
    })
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.amax() == 0.0 {
        return 0.0;
    }
    m.clone().singular_values().amax()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CcStatus {
    Converged,
    EndpointInfeasible,
    /// Feasible, but the path left the region where the `DL` series is
    /// trusted.
    OutsideSeriesDomain,
}

#[derive(Clone, Debug)]
pub struct CcOptions {
    pub segments: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Reduce queries on nilpotent cones to unit size at the origin.
    pub cone_reduction: bool,
}

impl Default for CcOptions {
    fn default() -> Self {
        Self {
            segments: DEFAULT_SEGMENTS,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            cone_reduction: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CcResult {
    /// Length of the best feasible path: an upper bound on the distance.
    pub upper: f64,
    /// `g`-length of the displacement of the degree-one coordinates.
    pub lower_projection: f64,
    pub endpoint_residual: f64,
    pub status: CcStatus,
    pub restarts_converged: usize,
    /// Controls of the reported path, one row per segment.
    pub controls: Vec<Vec<f64>>,
}

/// Segment integrator shared by the optimizer and the samplers.
pub(crate) struct Dynamics<'a> {
    alg: &'a GradedAlgebra,
    exact_order: Option<usize>,
    /// Full Jacobi holds, so the endpoint Jacobian has a closed form.
    lie: bool,
    q: usize,
}

impl<'a> Dynamics<'a> {
    pub(crate) fn new(alg: &'a GradedAlgebra) -> Result<Self> {
        let exact_order = match alg.nilpotency_class() {
            Some(s) if s <= crate::carnot::MAX_BCH_ORDER => Some(s),
            _ => None,
        };
        if alg.p() == 0 {
            return Err(HensError::InvalidAlgebra("empty distribution".into()));
        }
        let scale = alg.structure_entries().iter().fold(1.0, |a: f64, e| a.max(e.3.abs()));
        let lie = alg.jacobi_residual(crate::algebra::JacobiMode::Full).max <= 1e-12 * scale * scale;
        Ok(Self {
            alg,
            exact_order,
            lie,
            q: alg.v1_dim(),
        })
    }

    fn embed(&self, u: &[f64], h: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.alg.dim());
        for (i, &c) in u.iter().enumerate() {
            v[i] = h * c;
        }
        v
    }

    /// `DL_{−x}(0)⁻¹ v = ad_x / (1 − e^{−ad_x}) v = Σ_k b_k ad_x^k v`.
    fn flow_velocity(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = x.len();
        let ad = self.alg.ad_matrix(x);
        let ad = ad.as_slice();
        let coeffs = bernoulli_coefficients();
        let mut out: Vec<f64> = v.iter().copied().collect();
        let mut power = out.clone();
        let mut next = vec![0.0; n];
        for (k, &b) in coeffs.iter().enumerate().skip(1) {
            // Column-major: ad[(r, c)] = ad[c * n + r].
            next.iter_mut().for_each(|e| *e = 0.0);
            for (c, &pc) in power.iter().enumerate() {
                if pc != 0.0 {
                    for (r, e) in next.iter_mut().enumerate() {
                        *e += ad[c * n + r] * pc;
                    }
                }
            }
            std::mem::swap(&mut power, &mut next);
            let size = power.iter().fold(0.0, |a: f64, e| a.max(e.abs()));
            if size == 0.0 {
                break;
            }
            if b != 0.0 {
                for (o, p) in out.iter_mut().zip(&power) {
                    *o += b * p;
                }
                let scale = out.iter().fold(0.0, |a: f64, e| a.max(e.abs()));
                if k > 2 && (b * size).abs() < 1e-16 * scale {
                    break;
                }
            }
        }
        DVector::from_vec(out)
    }

    /// State after one segment of duration `h` with control `u`.
    pub(crate) fn step(&self, x: &DVector<f64>, u: &[f64], h: f64) -> DVector<f64> {
        let v = self.embed(u, h);
        if let Some(order) = self.exact_order {
            return bch_series(self.alg, x, &v, order).expect("dimensions checked");
        }
        let dt = 1.0 / RK_SUBSTEPS as f64;
        let mut z = x.clone();
        for _ in 0..RK_SUBSTEPS {
            let k1 = self.flow_velocity(&z, &v);
            let k2 = self.flow_velocity(&(&z + &k1 * (0.5 * dt)), &v);
            let k3 = self.flow_velocity(&(&z + &k2 * (0.5 * dt)), &v);
            let k4 = self.flow_velocity(&(&z + &k3 * dt), &v);
            z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        z
    }

    pub(crate) fn endpoint(&self, x0: &DVector<f64>, controls: &[Vec<f64>]) -> DVector<f64> {
        let h = 1.0 / controls.len() as f64;
        controls.iter().fold(x0.clone(), |x, u| self.step(&x, u, h))
    }

    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.exact_order.is_some() || spectral_norm(&self.alg.ad_matrix(x)) < SERIES_RADIUS
    }

    /// States along the path (including the start) and the endpoint Jacobian
    /// with respect to the stacked controls.
    fn jacobian(&self, x0: &DVector<f64>, controls: &[Vec<f64>]) -> (Vec<DVector<f64>>, DMatrix<f64>) {
        if self.lie {
            self.jacobian_lie(x0, controls)
        } else {
            self.jacobian_fd(x0, controls)
        }
    }

    /// On a Lie algebra the endpoint `E = log(e^{x0} e^{v_0} ⋯ e^{v_{N−1}})`
    /// satisfies `dE = ψ(E)⁻¹ Σ_k M_k ψ(v_k) dv_k` with
    /// `ψ(z) = (1 − e^{−ad z}) / ad z` and
    /// `M_k = e^{−ad v_{N−1}} ⋯ e^{−ad v_{k+1}}`.
    fn jacobian_lie(&self, x0: &DVector<f64>, controls: &[Vec<f64>]) -> (Vec<DVector<f64>>, DMatrix<f64>) {
        let n = self.alg.dim();
        let q = self.q;
        let big_n = controls.len();
        let h = 1.0 / big_n as f64;
        let mut states = Vec::with_capacity(big_n + 1);
        states.push(x0.clone());
        for u in controls {
            let next = self.step(states.last().expect("nonempty"), u, h);
            states.push(next);
        }
        let end = states.last().expect("nonempty");
        let psi_end = linalg::phi_series(&self.alg.ad_matrix(end), -1.0);
        let Some(psi_end_inv) = psi_end.try_inverse() else {
            return self.jacobian_fd(x0, controls);
        };
        let mut jac = DMatrix::zeros(n, big_n * q);
        let mut m = psi_end_inv;
        for k in (0..big_n).rev() {
            let ad_v = self.alg.ad_matrix(&self.embed(&controls[k], h));
            let block = &m * linalg::phi_series(&ad_v, -1.0);
            jac.view_mut((0, k * q), (n, q))
                .copy_from(&(block.columns(0, q) * h));
            if k > 0 {
                m *= linalg::expm(&(-ad_v));
            }
        }
        (states, jac)
    }

    /// Endpoint Jacobian by chaining per-segment central differences.
    fn jacobian_fd(&self, x0: &DVector<f64>, controls: &[Vec<f64>]) -> (Vec<DVector<f64>>, DMatrix<f64>) {
        let n = self.alg.dim();
        let q = self.q;
        let big_n = controls.len();
        let h = 1.0 / big_n as f64;
        let mut states = Vec::with_capacity(big_n + 1);
        states.push(x0.clone());
        for u in controls {
            let next = self.step(states.last().expect("nonempty"), u, h);
            states.push(next);
        }
        let mut jac = DMatrix::zeros(n, big_n * q);
        let mut lambda = DMatrix::<f64>::identity(n, n);
        for k in (0..big_n).rev() {
            let x = &states[k];
            let u = &controls[k];
            let mut b = DMatrix::zeros(n, q);
            for j in 0..q {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[j] += FD_STEP;
                dn[j] -= FD_STEP;
                let col = (self.step(x, &up, h) - self.step(x, &dn, h)) / (2.0 * FD_STEP);
                b.set_column(j, &col);
            }
            jac.view_mut((0, k * q), (n, q)).copy_from(&(&lambda * b));
            if k > 0 {
                let mut a = DMatrix::zeros(n, n);
                for j in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += FD_STEP;
                    xm[j] -= FD_STEP;
                    let col = (self.step(&xp, u, h) - self.step(&xm, u, h)) / (2.0 * FD_STEP);
                    a.set_column(j, &col);
                }
                lambda = &lambda * a;
            }
        }
        (states, jac)
    }
}

/// Optimization problem for one distance query.
struct Problem<'a> {
    dyn_: Dynamics<'a>,
    x0: DVector<f64>,
    target: DVector<f64>,
    segments: usize,
    /// `g` on `D0 ⊕ D` plus a small ridge on `D0`.
    g_reg: DMatrix<f64>,
}

struct Attempt {
    controls: Vec<Vec<f64>>,
    residual: f64,
    in_domain: bool,
}

impl Problem<'_> {
    fn h(&self) -> f64 {
        1.0 / self.segments as f64
    }

    fn energy(&self, controls: &[Vec<f64>]) -> f64 {
        let h = self.h();
        controls
            .iter()
            .map(|u| {
                let u = DVector::from_column_slice(u);
                0.5 * h * (u.transpose() * &self.g_reg * &u)[(0, 0)]
            })
            .sum()
    }

    fn penalty_cost(&self, controls: &[Vec<f64>], mu: f64) -> f64 {
        let r = self.dyn_.endpoint(&self.x0, controls) - &self.target;
        let c = self.energy(controls) + 0.5 * mu * r.norm_squared();
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    }

    fn flatten(controls: &[Vec<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            controls.iter().map(Vec::len).sum(),
            controls.iter().flatten().copied(),
        )
    }

    fn unflatten(&self, v: &DVector<f64>) -> Vec<Vec<f64>> {
        let q = self.dyn_.q;
        (0..self.segments)
            .map(|k| v.rows(k * q, q).iter().copied().collect())
            .collect()
    }

    /// Solve `(B + μ JᵀJ) s = rhs` where `B` is block diagonal with equal
    /// blocks `block`, via the Woodbury identity.
    fn solve_structured(
        &self,
        block_inv: &DMatrix<f64>,
        jac: &DMatrix<f64>,
        mu: f64,
        rhs: &DVector<f64>,
    ) -> Option<DVector<f64>> {
        let q = self.dyn_.q;
        let n = jac.nrows();
        let apply_binv = |v: &DVector<f64>| {
            let mut out = DVector::zeros(v.len());
            for k in 0..self.segments {
                let part = block_inv * v.rows(k * q, q);
                out.rows_mut(k * q, q).copy_from(&part);
            }
            out
        };
        let mut binv_jt = DMatrix::zeros(jac.ncols(), n);
        for i in 0..n {
            binv_jt.set_column(i, &apply_binv(&jac.row(i).transpose()));
        }
        let binv_rhs = apply_binv(rhs);
        let inner = DMatrix::identity(n, n) / mu + jac * &binv_jt;
        let corr = inner.lu().solve(&(jac * &binv_rhs))?;
        Some(binv_rhs - binv_jt * corr)
    }

    fn minimize_penalty(&self, controls: &mut Vec<Vec<f64>>, mu: f64) {
        let h = self.h();
        let q = self.dyn_.q;
        let mut cost = self.penalty_cost(controls, mu);
        let mut damping = 1e-3 * h * self.g_reg.amax();
        for _ in 0..LM_ITERATIONS {
            let (states, jac) = self.dyn_.jacobian(&self.x0, controls);
            let resid = states.last().expect("nonempty") - &self.target;
            let u = Self::flatten(controls);
            let mut grad = jac.transpose() * &resid * mu;
            for k in 0..self.segments {
                let gu = &self.g_reg * u.rows(k * q, q) * h;
                let mut part = grad.rows_mut(k * q, q);
                part += gu;
            }
            let mut improved = false;
            for _ in 0..12 {
                let block = &self.g_reg * h + DMatrix::identity(q, q) * damping;
                let Some(block_inv) = block.try_inverse() else {
                    damping *= 10.0;
                    continue;
                };
                let Some(step) = self.solve_structured(&block_inv, &jac, mu, &grad) else {
                    damping *= 10.0;
                    continue;
                };
                let trial = self.unflatten(&(&u - &step));
                let trial_cost = self.penalty_cost(&trial, mu);
                if trial_cost < cost {
                    let gain = cost - trial_cost;
                    *controls = trial;
                    cost = trial_cost;
                    damping = (damping / 3.0).max(1e-15);
                    improved = gain > 1e-13 * cost.max(1e-300) && step.amax() > 1e-12;
                    break;
                }
                damping *= 4.0;
            }
            if !improved {
                break;
            }
        }
    }

    fn weight_matrix(&self) -> DMatrix<f64> {
        let q = self.dyn_.q;
        let m = self.segments * q;
        let mut w = DMatrix::zeros(m, m);
        let block = &self.g_reg * self.h();
        for k in 0..self.segments {
            w.view_mut((k * q, k * q), (q, q)).copy_from(&block);
        }
        w
    }

    /// Sequential quadratic programming on `min energy s.t. E(u) = target`
    /// with a damped BFGS model of the Lagrangian Hessian, an ℓ1 merit
    /// function and second-order corrections. Gauss–Newton on the penalty
    /// ignores the curvature of the endpoint map, which shapes the optimal
    /// loops, so it only serves as the starting phase.
    fn polish(&self, controls: &mut Vec<Vec<f64>>) {
        let n = self.x0.len();
        let w = self.weight_matrix();
        let m = w.nrows();
        let mut b = w.clone();
        let mut u = Self::flatten(controls);
        let (states, mut jac) = self.dyn_.jacobian(&self.x0, controls);
        let mut c = states.last().expect("nonempty") - &self.target;
        let mut nu: f64 = 1.0;
        let target_scale = 1.0 + self.target.amax();
        let merit = |u: &DVector<f64>, nu: f64| -> (f64, DVector<f64>) {
            let ctrl = self.unflatten(u);
            let c = self.dyn_.endpoint(&self.x0, &ctrl) - &self.target;
            let value = self.energy(&ctrl) + nu * c.lp_norm(1);
            (if value.is_finite() { value } else { f64::INFINITY }, c)
        };
        let mut stalled = 0;
        for _ in 0..SQP_ITERATIONS {
            let gf = &w * &u;
            let mut kkt = DMatrix::zeros(m + n, m + n);
            kkt.view_mut((0, 0), (m, m)).copy_from(&b);
            kkt.view_mut((0, m), (m, n)).copy_from(&jac.transpose());
            kkt.view_mut((m, 0), (n, m)).copy_from(&jac);
            let lu = kkt.lu();
            let mut rhs = DVector::zeros(m + n);
            rhs.rows_mut(0, m).copy_from(&-&gf);
            rhs.rows_mut(m, n).copy_from(&-&c);
            let Some(sol) = lu.solve(&rhs) else {
                break;
            };
            let d = sol.rows(0, m).into_owned();
            let lam = sol.rows(m, n).into_owned();
            let feasible = c.amax() < 1e-12 * target_scale;
            if (feasible && (d.amax() < 1e-9 * (1.0 + u.amax()) || stalled >= 3)) || stalled >= 8 {
                break;
            }
            nu = nu.max(1.5 * lam.amax());
            let (phi0, _) = merit(&u, nu);
            let slope = gf.dot(&d) - nu * c.lp_norm(1);
            let mut accepted: Option<DVector<f64>> = None;
            let full = &u + &d;
            let (phi_full, c_full) = merit(&full, nu);
            if phi_full <= phi0 + 1e-4 * slope {
                accepted = Some(full);
            } else {
                let mut soc_rhs = DVector::zeros(m + n);
                soc_rhs.rows_mut(m, n).copy_from(&-&c_full);
                if let Some(corr) = lu.solve(&soc_rhs) {
                    let trial = &full + corr.rows(0, m);
                    if merit(&trial, nu).0 <= phi0 + 1e-4 * slope {
                        accepted = Some(trial);
                    }
                }
                if accepted.is_none() {
                    let mut alpha = 0.5;
                    for _ in 0..30 {
                        let trial = &u + &d * alpha;
                        if merit(&trial, nu).0 <= phi0 + 1e-4 * alpha * slope {
                            accepted = Some(trial);
                            break;
                        }
                        alpha *= 0.5;
                    }
                }
            }
            let Some(u_new) = accepted else {
                break;
            };
            let ctrl_new = self.unflatten(&u_new);
            let (states_new, jac_new) = self.dyn_.jacobian(&self.x0, &ctrl_new);
            let s = &u_new - &u;
            let yv = (&w * &u_new + jac_new.transpose() * &lam) - (&gf + jac.transpose() * &lam);
            let bs = &b * &s;
            let sbs = s.dot(&bs);
            let sy = s.dot(&yv);
            if sbs > 0.0 {
                let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
                let r = &yv * theta + &bs * (1.0 - theta);
                let sr = s.dot(&r);
                if sr > 0.0 {
                    b += &r * r.transpose() / sr - &bs * bs.transpose() / sbs;
                }
            }
            let e_old = 0.5 * u.dot(&gf);
            let e_new = 0.5 * u_new.dot(&(&w * &u_new));
            let phi_new = merit(&u_new, nu).0;
            if (e_new - e_old).abs() <= 1e-12 * e_old.abs().max(1e-300)
                || phi0 - phi_new <= 1e-10 * phi0.abs().max(1e-300)
            {
                stalled += 1;
            } else {
                stalled = 0;
            }
            u = u_new;
            jac = jac_new;
            c = states_new.last().expect("nonempty") - &self.target;
            *controls = ctrl_new;
        }
    }

    /// Minimum-`W`-norm Newton corrections onto `E(u) = target`.
    fn project(&self, controls: &mut Vec<Vec<f64>>) -> f64 {
        let h = self.h();
        let q = self.dyn_.q;
        let Some(block_inv) = (&self.g_reg * h).try_inverse() else {
            return f64::INFINITY;
        };
        let mut residual = f64::INFINITY;
        for _ in 0..PROJECTION_ITERATIONS {
            let (states, jac) = self.dyn_.jacobian(&self.x0, controls);
            let r = &self.target - states.last().expect("nonempty");
            residual = r.amax();
            if !residual.is_finite() || residual < 1e-13 * (1.0 + self.target.amax()) {
                break;
            }
            let n = jac.nrows();
            let mut winv_jt = DMatrix::zeros(jac.ncols(), n);
            for i in 0..n {
                let row = jac.row(i).transpose();
                let mut col = DVector::zeros(row.len());
                for k in 0..self.segments {
                    col.rows_mut(k * q, q).copy_from(&(&block_inv * row.rows(k * q, q)));
                }
                winv_jt.set_column(i, &col);
            }
            let gram = &jac * &winv_jt;
            let Some(lam) = gram.lu().solve(&r) else {
                break;
            };
            let step = winv_jt * lam;
            let u = Self::flatten(controls) + step;
            let trial = self.unflatten(&u);
            let trial_res = (&self.target - self.dyn_.endpoint(&self.x0, &trial)).amax();
            if !(trial_res < residual) {
                break;
            }
            *controls = trial;
            residual = trial_res;
        }
        residual
    }

    fn solve(&self, init: Vec<Vec<f64>>) -> Attempt {
        let mut controls = init;
        let mut mu = PENALTY_START;
        for _ in 0..PENALTY_STAGES {
            self.minimize_penalty(&mut controls, mu);
            mu *= 10.0;
        }
        self.polish(&mut controls);
        let residual = self.project(&mut controls);
        let h = self.h();
        let mut x = self.x0.clone();
        let mut in_domain = self.dyn_.in_domain(&x);
        for u in &controls {
            x = self.dyn_.step(&x, u, h);
            in_domain &= self.dyn_.in_domain(&x);
        }
        Attempt {
            controls,
            residual,
            in_domain,
        }
    }
}

/// Length `Σ h √(g(u_k, u_k))` of a control sequence; `g` vanishes on `D0`.
pub fn path_length(alg: &GradedAlgebra, controls: &[Vec<f64>]) -> f64 {
    let g = alg.metric();
    let h = 1.0 / controls.len().max(1) as f64;
    controls
        .iter()
        .map(|u| {
            let u = DVector::from_column_slice(u);
            h * (u.transpose() * g * &u)[(0, 0)].max(0.0).sqrt()
        })
        .sum()
}

/// `g`-length of the displacement of the `D` coordinates, a lower bound
/// for the distance on stratified groups.
pub fn projection_lower_bound(alg: &GradedAlgebra, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let q = alg.v1_dim();
    let d = (y - x).rows(0, q).into_owned();
    (d.transpose() * alg.metric() * &d)[(0, 0)].max(0.0).sqrt()
}

/// Homogeneous norm `max_i |z_i|^{1/deg i}`.
pub fn homogeneous_norm(alg: &GradedAlgebra, z: &DVector<f64>) -> f64 {
    z.iter()
        .zip(alg.degrees())
        .map(|(v, &d)| v.abs().powf(1.0 / d as f64))
        .fold(0.0, f64::max)
}

/// Upper bound on the CC distance from `x` to `y` over `opts.restarts`
/// seeded multi-starts.
pub fn cc_distance(
    alg: &GradedAlgebra,
    x: &DVector<f64>,
    y: &DVector<f64>,
    opts: &CcOptions,
) -> Result<CcResult> {
    let n = alg.dim();
    for v in [x, y] {
        if v.len() != n {
            return Err(HensError::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    if opts.segments == 0 || opts.restarts == 0 {
        return Err(HensError::InvalidParameter(
            "segments and restarts must be positive".into(),
        ));
    }
    let dyn_ = Dynamics::new(alg)?;
    let q = dyn_.q;
    let lower_projection = projection_lower_bound(alg, x, y);

    // On cones the query is reduced to the origin and to unit homogeneous
    // size, using left-invariance and homogeneity of the distance.
    let cone = opts.cone_reduction && dyn_.exact_order.is_some() && alg.is_cone();
    let (x0, target, scale) = if cone {
        let z = bch_series(alg, &-x, y, dyn_.exact_order.expect("nilpotent"))?;
        let s = homogeneous_norm(alg, &z);
        if s == 0.0 {
            return Ok(CcResult {
                upper: 0.0,
                lower_projection,
                endpoint_residual: 0.0,
                status: CcStatus::Converged,
                restarts_converged: opts.restarts,
                controls: vec![vec![0.0; q]; opts.segments],
            });
        }
        (DVector::zeros(n), alg.dilate_raw(1.0 / s, &z), s)
    } else {
        (x.clone(), y.clone(), 1.0)
    };

    let mut g_reg = alg.metric().clone();
    for i in 0..alg.d0_dim() {
        g_reg[(i, i)] += D0_REGULARIZATION;
    }
    let problem = Problem {
        dyn_,
        x0,
        target,
        segments: opts.segments,
        g_reg,
    };

    let disp = &problem.target - &problem.x0;
    let base: Vec<f64> = disp.rows(0, q).iter().copied().collect();
    let size = if cone { 1.0 } else { homogeneous_norm(alg, &disp).max(1e-3) };
    let attempts: Vec<Attempt> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let init = initial_controls(&base, size, opts.segments, r, opts.seed);
            problem.solve(init)
        })
        .collect();

    let feasible = |a: &Attempt| a.residual <= ENDPOINT_TOL;
    let restarts_converged = attempts.iter().filter(|a| feasible(a) && a.in_domain).count();
    let best = attempts
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            let key = |t: &Attempt| (!feasible(t), !t.in_domain);
            key(a)
                .cmp(&key(b))
                .then_with(|| {
                    if feasible(a) {
                        path_length(alg, &a.controls).total_cmp(&path_length(alg, &b.controls))
                    } else {
                        a.residual.total_cmp(&b.residual)
                    }
                })
                .then(i.cmp(j))
        })
        .map(|(_, a)| a)
        .expect("at least one restart");

    let status = match (feasible(best), best.in_domain) {
        (true, true) => CcStatus::Converged,
        (true, false) => CcStatus::OutsideSeriesDomain,
        (false, _) => CcStatus::EndpointInfeasible,
    };
    let controls: Vec<Vec<f64>> = best
        .controls
        .iter()
        .map(|u| u.iter().map(|c| c * scale).collect())
        .collect();
    Ok(CcResult {
        upper: path_length(alg, &best.controls) * scale,
        lower_projection,
        endpoint_residual: best.residual * scale,
        status,
        restarts_converged,
        controls,
    })
}

/// Restart 0 is the constant control along the degree-one displacement;
/// the others add random low-frequency loops.
fn initial_controls(base: &[f64], size: f64, segments: usize, restart: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut controls = vec![base.to_vec(); segments];
    if restart == 0 {
        return controls;
    }
    let mut rng = rng::seeded(rng::derive_seed(seed, restart as u64));
    let q = base.len();
    let amp = 2.0 * size;
    let modes: Vec<(Vec<f64>, Vec<f64>)> = (1..=2)
        .map(|_| {
            (
                (0..q).map(|_| rng.gen_range(-amp..amp)).collect(),
                (0..q).map(|_| rng.gen_range(-amp..amp)).collect(),
            )
        })
        .collect();
    for (k, u) in controls.iter_mut().enumerate() {
        let t = (k as f64 + 0.5) / segments as f64;
        for (m, (a, b)) in modes.iter().enumerate() {
            let w = 2.0 * std::f64::consts::PI * (m + 1) as f64 * t;
            for j in 0..q {
                u[j] += a[j] * w.cos() + b[j] * w.sin();
            }
        }
    }
    controls
}
