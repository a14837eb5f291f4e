//! p-energies and the obstacle problem.
//!
//! [`solve_obstacle`] minimizes the discrete p-energy over fields equal to the
//! boundary data outside the domain and above the obstacle inside it. The
//! iteration is a projected Newton method: nodes sitting on the obstacle with
//! an outward gradient are frozen, the Hessian system on the remaining free
//! nodes is solved by Jacobi-preconditioned conjugate gradients, and the step
//! is projected back onto the constraint set under an Armijo search. When the
//! Newton direction fails to decrease the energy a scaled projected-gradient
//! step is used instead.
//!
//! Convergence is certified by the KKT residual: the sup-norm of the projected
//! gradient divided by the largest absolute nodal flux of the current field.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::math;
use crate::reduce;
use crate::space::{Region, WeightedGraphSpace};

pub const P_MIN: f64 = 1.001;
pub const P_MAX: f64 = 64.0;

const POLISH_STEPS: usize = 3;
/// Polish budget for p > 2, where Newton converges only linearly on edges
/// with vanishing differences.
const DEGENERATE_POLISH_STEPS: usize = 60;
const POLISH_FACTOR: f64 = 1e-4;
const STALL_WINDOW: usize = 5;
const MAX_SWEEPS: usize = 40;

pub fn check_exponent(p: f64) -> Result<()> {
    if (P_MIN..=P_MAX).contains(&p) {
        Ok(())
    } else {
        Err(Error::ExponentOutOfRange(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target KKT residual.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_cg_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iterations: 200, max_cg_iterations: 20_000 }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, ..Default::default() }
    }
}

/// Minimize the p-energy over `{v = boundary off domain, v >= obstacle on domain}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub domain: Region,
    pub obstacle: ScalarField,
    pub boundary: ScalarField,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub field: ScalarField,
    pub energy: f64,
    pub kkt_residual: f64,
    /// Domain nodes where the field sits on the obstacle.
    pub active_set: Region,
    pub iterations: usize,
    pub converged: bool,
}

/// `sum_e conductance_e (|Δu| / length_e)^p` over edges with an endpoint in
/// `region` (all edges when `None`).
pub fn p_energy(space: &WeightedGraphSpace, field: &ScalarField, p: f64, region: Option<&Region>) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::ExponentOutOfRange(p));
    }
    check_len(space, field, "field")?;
    let mask = region.map(|r| r.mask(space.len()));
    let u = field.values();
    let edges = space.edges();
    let counted = |k: usize| match &mask {
        Some(m) => m[edges[k].a] || m[edges[k].b],
        None => true,
    };
    for (k, e) in edges.iter().enumerate() {
        if counted(k) {
            for node in [e.a, e.b] {
                if !u[node].is_finite() {
                    return Err(Error::InfiniteEnergyInput { node });
                }
            }
        }
    }
    Ok(reduce::sum_by(edges.len(), |k| {
        if !counted(k) {
            return 0.0;
        }
        let e = &edges[k];
        let d = (u[e.a] - u[e.b]).abs();
        if d == 0.0 {
            0.0
        } else {
            e.conductance * math::powf(d / e.length, p)
        }
    }))
}

fn check_len(space: &WeightedGraphSpace, field: &ScalarField, name: &'static str) -> Result<()> {
    if field.len() != space.len() {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("has {} values for {} nodes", field.len(), space.len()),
        });
    }
    Ok(())
}

pub fn solve_obstacle(space: &WeightedGraphSpace, spec: &ObstacleSpec, opts: &SolverOptions) -> Result<SolveResult> {
    check_exponent(spec.p)?;
    check_options(opts)?;
    check_len(space, &spec.obstacle, "obstacle")?;
    check_len(space, &spec.boundary, "boundary")?;
    let n = space.len();
    if spec.domain.nodes().last().is_some_and(|&i| i >= n) {
        return Err(Error::InvalidParameter { name: "domain", reason: "node index out of range".into() });
    }
    if spec.domain.len() == n {
        return Err(Error::EmptyComplement);
    }
    let free = spec.domain.mask(n);
    let psi = spec.obstacle.values();
    let f = spec.boundary.values();
    let mut lb = vec![f64::NEG_INFINITY; n];
    let mut init = vec![0.0; n];
    for i in 0..n {
        if free[i] {
            if psi[i].is_nan() || psi[i] == f64::INFINITY {
                return Err(Error::Infeasible(format!("obstacle at node {} is {}", space.ids()[i], psi[i])));
            }
            let start = psi[i].max(f[i]);
            if !start.is_finite() {
                return Err(Error::Infeasible(format!("no finite admissible value at node {}", space.ids()[i])));
            }
            lb[i] = psi[i];
            init[i] = start;
        } else {
            if !f[i].is_finite() {
                return Err(Error::Infeasible(format!("boundary value at node {} is not finite", space.ids()[i])));
            }
            init[i] = f[i];
        }
    }
    let problem = Problem::new(space, spec.p, free, lb, None);
    let m = problem.minimize(init, opts);
    Ok(problem.result(m, opts.tol))
}

/// The p-harmonic extension of `f` into `domain`.
pub fn harmonic_solution(
    space: &WeightedGraphSpace,
    domain: &Region,
    f: &ScalarField,
    p: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let spec = ObstacleSpec {
        domain: domain.clone(),
        obstacle: ScalarField::unconstrained(space.len()),
        boundary: f.clone(),
        p,
    };
    solve_obstacle(space, &spec, opts)
}

fn check_options(opts: &SolverOptions) -> Result<()> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter { name: "tol", reason: "must be positive".into() });
    }
    Ok(())
}

pub(crate) struct Minimized {
    pub u: Vec<f64>,
    pub kkt: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Energy `sum_e w_e |Δu|^p + sum_i m_i |u_i|^p` with fixed values off `free`
/// and lower bounds `lb` on `free`.
pub(crate) struct Problem<'a> {
    space: &'a WeightedGraphSpace,
    p: f64,
    w: Vec<f64>,
    free: Vec<bool>,
    lb: Vec<f64>,
    mass: Option<Vec<f64>>,
}

impl<'a> Problem<'a> {
    pub fn new(space: &'a WeightedGraphSpace, p: f64, free: Vec<bool>, lb: Vec<f64>, mass: Option<Vec<f64>>) -> Self {
        Problem { space, p, w: space.edge_weights(p), free, lb, mass }
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let edges = self.space.edges();
        let p = self.p;
        let w = &self.w;
        let e = reduce::sum_by(edges.len(), |k| {
            let d = (u[edges[k].a] - u[edges[k].b]).abs();
            if d == 0.0 {
                0.0
            } else {
                w[k] * math::powf(d, p)
            }
        });
        e + self.mass_energy(u)
    }

    pub fn mass_energy(&self, u: &[f64]) -> f64 {
        match &self.mass {
            Some(m) => {
                reduce::sum_by(u.len(), |i| if u[i] == 0.0 { 0.0 } else { m[i] * math::powf(u[i].abs(), self.p) })
            }
            None => 0.0,
        }
    }

    fn gradient(&self, u: &[f64], g: &mut [f64]) {
        let p = self.p;
        reduce::fill(g, |i| {
            if !self.free[i] {
                return 0.0;
            }
            let mut s = 0.0;
            for &(j, e) in self.space.neighbors(i) {
                let d = u[i] - u[j];
                if d != 0.0 {
                    s += p * self.w[e] * math::powf(d.abs(), p - 1.0) * d.signum();
                }
            }
            if let Some(m) = &self.mass {
                if u[i] != 0.0 {
                    s += p * m[i] * math::powf(u[i].abs(), p - 1.0) * u[i].signum();
                }
            }
            s
        });
    }

    /// Largest total absolute flux through a free node.
    fn flux_scale(&self, u: &[f64]) -> f64 {
        let p = self.p;
        reduce::max_by(u.len(), |i| {
            if !self.free[i] {
                return 0.0;
            }
            let mut s = 0.0;
            for &(j, e) in self.space.neighbors(i) {
                let d = (u[i] - u[j]).abs();
                if d != 0.0 {
                    s += p * self.w[e] * math::powf(d, p - 1.0);
                }
            }
            if let Some(m) = &self.mass {
                if u[i] != 0.0 {
                    s += p * m[i] * math::powf(u[i].abs(), p - 1.0);
                }
            }
            s
        })
    }

    fn at_bound(&self, u: &[f64], i: usize) -> bool {
        u[i] <= self.lb[i]
    }

    /// Derivative of the energy in the coordinate `i` when `u_i` is set to `t`.
    fn partial(&self, u: &[f64], i: usize, t: f64) -> f64 {
        let p = self.p;
        let mut s = 0.0;
        for &(j, e) in self.space.neighbors(i) {
            let d = t - u[j];
            if d != 0.0 {
                s += p * self.w[e] * math::powf(d.abs(), p - 1.0) * d.signum();
            }
        }
        if let Some(m) = &self.mass {
            if t != 0.0 {
                s += p * m[i] * math::powf(t.abs(), p - 1.0) * t.signum();
            }
        }
        s
    }

    /// Change of the partial derivative at node `i` under a perturbation of
    /// `u_i` by a few units in the last place: the smallest residual that the
    /// floating-point field can certify there.
    fn rounding_floor(&self, u: &[f64], i: usize, gi: f64) -> f64 {
        let mag = self.space.neighbors(i).iter().fold(u[i].abs(), |m, &(j, _)| m.max(u[j].abs()));
        let delta = 4.0 * f64::EPSILON * mag.max(f64::MIN_POSITIVE);
        let up = (self.partial(u, i, u[i] + delta) - gi).abs();
        let down = (self.partial(u, i, u[i] - delta) - gi).abs();
        up.max(down)
    }

    /// Scaled projected-gradient norm, net of the rounding floor of each node.
    fn kkt(&self, u: &[f64], g: &[f64]) -> f64 {
        let worst = reduce::max_by(u.len(), |i| {
            let r = if !self.free[i] {
                0.0
            } else if self.at_bound(u, i) {
                (-g[i]).max(0.0)
            } else {
                g[i].abs()
            };
            if r == 0.0 || self.p >= 2.0 {
                r
            } else {
                (r - self.rounding_floor(u, i, g[i])).max(0.0)
            }
        });
        if worst == 0.0 {
            return 0.0;
        }
        let scale = self.flux_scale(u);
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }

    /// Sets every cluster of nodes joined by near-zero differences to one
    /// common value: the fixed value it touches, or else the minimizer of its
    /// external edge energy. Returns whether anything changed.
    fn fuse_clusters(&self, u: &mut [f64]) -> bool {
        let n = u.len();
        let umax = u.iter().fold(0.0_f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { m });
        let thresh = 1e-9 * umax.max(f64::MIN_POSITIVE);
        let mut label = vec![usize::MAX; n];
        let mut changed = false;
        for root in 0..n {
            if !self.free[root] || label[root] != usize::MAX {
                continue;
            }
            let mut members = vec![root];
            label[root] = root;
            let mut k = 0;
            while k < members.len() {
                let i = members[k];
                k += 1;
                if !self.free[i] {
                    continue;
                }
                for &(j, _) in self.space.neighbors(i) {
                    if label[j] == usize::MAX && (u[i] - u[j]).abs() <= thresh {
                        label[j] = root;
                        members.push(j);
                    }
                }
            }
            let floor = members.iter().map(|&i| self.lb[i]).fold(f64::NEG_INFINITY, f64::max);
            let value = match members.iter().find(|&&i| !self.free[i]) {
                Some(&fixed) => u[fixed],
                None => {
                    let p = self.p;
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    let mut external = Vec::new();
                    for &i in &members {
                        for &(j, e) in self.space.neighbors(i) {
                            if label[j] != root {
                                external.push((j, e));
                                lo = lo.min(u[j]);
                                hi = hi.max(u[j]);
                            }
                        }
                    }
                    if external.is_empty() || members.len() < 2 {
                        continue;
                    }
                    let deriv = |t: f64| -> f64 {
                        external
                            .iter()
                            .map(|&(j, e)| {
                                let d = t - u[j];
                                if d == 0.0 {
                                    0.0
                                } else {
                                    self.w[e] * math::powf(d.abs(), p - 1.0) * d.signum()
                                }
                            })
                            .sum()
                    };
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        if deriv(mid) > 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    let t = if deriv(lo).abs() <= deriv(hi).abs() { lo } else { hi };
                    t.max(floor)
                }
            };
            if value < floor {
                continue;
            }
            for &i in &members {
                if self.free[i] && u[i] != value {
                    u[i] = value;
                    changed = true;
                }
            }
        }
        changed
    }

    /// One Gauss-Seidel pass of exact coordinate minimization over free nodes.
    fn coordinate_sweep(&self, u: &mut [f64]) {
        for i in 0..u.len() {
            if !self.free[i] {
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &(j, _) in self.space.neighbors(i) {
                lo = lo.min(u[j]);
                hi = hi.max(u[j]);
            }
            if self.mass.is_some() {
                lo = lo.min(0.0);
                hi = hi.max(0.0);
            }
            if !(lo <= hi) {
                continue;
            }
            // the minimizer lies in [lo, hi] where the derivative changes sign
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.partial(u, i, mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let t = if self.partial(u, i, lo).abs() <= self.partial(u, i, hi).abs() { lo } else { hi };
            u[i] = t.max(self.lb[i]);
        }
    }

    fn project(&self, u: &mut [f64]) {
        for ((x, &free), &lb) in u.iter_mut().zip(self.free.iter()).zip(self.lb.iter()) {
            if free && *x < lb {
                *x = lb;
            }
        }
    }

    pub fn minimize(&self, mut u: Vec<f64>, opts: &SolverOptions) -> Minimized {
        let n = u.len();
        self.project(&mut u);
        if self.p != 2.0 && self.free.iter().any(|&f| f) {
            // the quadratic problem is a cheap and well-conditioned start
            let warm = Problem {
                space: self.space,
                p: 2.0,
                w: self.space.edge_weights(2.0),
                free: self.free.clone(),
                lb: self.lb.clone(),
                mass: self.mass.clone(),
            };
            let loose = SolverOptions { tol: opts.tol.max(1e-6), ..*opts };
            let m = warm.minimize(u.clone(), &loose);
            if m.u.iter().all(|v| v.is_finite()) {
                u = m.u;
            }
        }
        let mut g = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut energy = self.energy(&u);
        let mut kkt = f64::INFINITY;
        // For p < 2 the Newton step overshoots by the factor (2-p)/(p-1) on an
        // edge whose difference tends to zero. Edges caught changing sign
        // switch to the curvature of the quadratic majorizer, which is exact
        // there.
        let edges = self.space.edges();
        let mut secant = vec![false; edges.len()];
        // once below tol, a few extra steps shrink the error in the field
        // itself, which the residual bounds only up to conditioning
        let mut polish = if self.p > 2.0 { DEGENERATE_POLISH_STEPS } else { POLISH_STEPS };
        let mut last_step = f64::INFINITY;
        let mut best: Option<(Vec<f64>, f64, usize)> = None;
        let mut history = Vec::new();
        let mut sweeps = 0;
        for it in 0..opts.max_iterations {
            self.gradient(&u, &mut g);
            kkt = self.kkt(&u, &g);
            history.push(kkt);
            let stalled = it >= STALL_WINDOW && kkt > 0.5 * history[it - STALL_WINDOW];
            if kkt > opts.tol && stalled && sweeps < MAX_SWEEPS {
                // Newton stagnates on near-degenerate edges; exact coordinate
                // minimization resolves those to rounding level
                for _ in 0..4 {
                    self.coordinate_sweep(&mut u);
                    sweeps += 1;
                }
                self.gradient(&u, &mut g);
                kkt = self.kkt(&u, &g);
                // differences stuck many ulps above zero: try merging them
                trial.copy_from_slice(&u);
                if self.fuse_clusters(&mut trial) {
                    self.gradient(&trial, &mut g);
                    let fused = self.kkt(&trial, &g);
                    if fused < kkt {
                        core::mem::swap(&mut u, &mut trial);
                    }
                }
                energy = self.energy(&u);
                self.gradient(&u, &mut g);
                kkt = self.kkt(&u, &g);
                history.clear();
                history.resize(it + 1, kkt);
            }
            if kkt <= opts.tol {
                if best.as_ref().is_none_or(|b| kkt < b.1) {
                    best = Some((u.clone(), kkt, it));
                }
                let umax = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let settled = last_step <= 0.1 * opts.tol * umax.max(1.0);
                if polish == 0 || (kkt <= POLISH_FACTOR * opts.tol && settled) {
                    let (u, kkt, it) = best.unwrap();
                    return Minimized { u, kkt, iterations: it, converged: true };
                }
                polish -= 1;
            }
            let inactive: Vec<bool> = (0..n).map(|i| self.free[i] && !(self.at_bound(&u, i) && g[i] > 0.0)).collect();
            let (h, hm) = self.hessian(&u, kkt, &secant);
            let diag = self.diagonal(&h, &hm);
            let eta = if self.p == 2.0 { 1e-12 } else { (0.5 * math::sqrt(kkt)).clamp(1e-12, 0.1) };
            let step = self.pcg(&inactive, &h, &hm, &diag, &g, eta, opts.max_cg_iterations);
            let accepted = self.line_search(&u, &g, &step, energy, kkt, &mut trial, 60);
            let accepted = match accepted {
                Some(e) => Some(e),
                None => {
                    let pg: Vec<f64> =
                        (0..n).map(|i| if self.free[i] && diag[i] > 0.0 { -g[i] / diag[i] } else { 0.0 }).collect();
                    self.line_search(&u, &g, &pg, energy, kkt, &mut trial, 60)
                }
            };
            match accepted {
                Some(e) => {
                    energy = e;
                    last_step = u.iter().zip(&trial).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                    if self.p < 2.0 {
                        for (k, ed) in edges.iter().enumerate() {
                            if (u[ed.a] - u[ed.b]) * (trial[ed.a] - trial[ed.b]) < 0.0 {
                                secant[k] = true;
                            }
                        }
                    }
                    core::mem::swap(&mut u, &mut trial);
                }
                None => {
                    if let Some((u, kkt, it)) = best {
                        return Minimized { u, kkt, iterations: it, converged: true };
                    }
                    return Minimized { u, kkt, iterations: it + 1, converged: false };
                }
            }
        }
        if let Some((u, kkt, it)) = best {
            return Minimized { u, kkt, iterations: it, converged: true };
        }
        self.gradient(&u, &mut g);
        let final_kkt = self.kkt(&u, &g);
        if final_kkt <= opts.tol {
            kkt = final_kkt;
            return Minimized { u, kkt, iterations: opts.max_iterations, converged: true };
        }
        Minimized { u, kkt: final_kkt.min(kkt), iterations: opts.max_iterations, converged: false }
    }

    /// Regularized second derivatives of the edge and mass terms; edges
    /// flagged in `secant` use the curvature of the quadratic majorizer.
    fn hessian(&self, u: &[f64], kkt: f64, secant: &[bool]) -> (Vec<f64>, Vec<f64>) {
        let p = self.p;
        let edges = self.space.edges();
        let dmax = edges.iter().map(|e| (u[e.a] - u[e.b]).abs()).fold(0.0, f64::max);
        let rel = kkt.clamp(1e-8, 1e-2);
        let eps = (rel * dmax).max(f64::MIN_POSITIVE);
        let c = p * (p - 1.0);
        let tiny = (1e-12 * dmax).max(f64::MIN_POSITIVE);
        let h = reduce::map_vec(edges.len(), |k| {
            let d = u[edges[k].a] - u[edges[k].b];
            if p == 2.0 {
                c * self.w[k]
            } else if secant[k] {
                p * self.w[k] * math::powf(d * d + tiny * tiny, 0.5 * (p - 2.0))
            } else {
                c * self.w[k] * math::powf(d * d + eps * eps, 0.5 * (p - 2.0))
            }
        });
        let hm = match &self.mass {
            Some(m) => {
                let umax = u.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let em = (rel * umax).max(f64::MIN_POSITIVE);
                reduce::map_vec(u.len(), |i| {
                    if p == 2.0 {
                        c * m[i]
                    } else {
                        c * m[i] * math::powf(u[i] * u[i] + em * em, 0.5 * (p - 2.0))
                    }
                })
            }
            None => vec![0.0; u.len()],
        };
        (h, hm)
    }

    fn diagonal(&self, h: &[f64], hm: &[f64]) -> Vec<f64> {
        reduce::map_vec(self.free.len(), |i| {
            if !self.free[i] {
                return 0.0;
            }
            hm[i] + self.space.neighbors(i).iter().map(|&(_, e)| h[e]).sum::<f64>()
        })
    }

    fn hess_apply(&self, mask: &[bool], h: &[f64], hm: &[f64], v: &[f64], out: &mut [f64]) {
        reduce::fill(out, |i| {
            if !mask[i] {
                return 0.0;
            }
            let mut s = hm[i] * v[i];
            for &(j, e) in self.space.neighbors(i) {
                let vj = if mask[j] { v[j] } else { 0.0 };
                s += h[e] * (v[i] - vj);
            }
            s
        });
    }

    /// Approximately solves `H_FF x = -g_F` on the masked nodes.
    #[allow(clippy::too_many_arguments)]
    fn pcg(
        &self,
        mask: &[bool],
        h: &[f64],
        hm: &[f64],
        diag: &[f64],
        g: &[f64],
        eta: f64,
        max_iter: usize,
    ) -> Vec<f64> {
        let n = g.len();
        let mut x = vec![0.0; n];
        let mut r: Vec<f64> = (0..n).map(|i| if mask[i] { -g[i] } else { 0.0 }).collect();
        let bnorm = math::sqrt(reduce::dot(&r, &r));
        if bnorm == 0.0 {
            return x;
        }
        let precond = |r: &[f64]| -> Vec<f64> {
            reduce::map_vec(n, |i| if mask[i] && diag[i] > 0.0 { r[i] / diag[i] } else { 0.0 })
        };
        let mut z = precond(&r);
        let mut d = z.clone();
        let mut rz = reduce::dot(&r, &z);
        let mut q = vec![0.0; n];
        for _ in 0..max_iter {
            self.hess_apply(mask, h, hm, &d, &mut q);
            let dq = reduce::dot(&d, &q);
            if !(dq > 0.0) {
                break;
            }
            let alpha = rz / dq;
            for i in 0..n {
                x[i] += alpha * d[i];
                r[i] -= alpha * q[i];
            }
            if math::sqrt(reduce::dot(&r, &r)) <= eta * bnorm {
                break;
            }
            z = precond(&r);
            let rz_new = reduce::dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                d[i] = z[i] + beta * d[i];
            }
        }
        x
    }

    /// Projected backtracking search along `dir`; writes the accepted point to
    /// `out` and returns its energy.
    #[allow(clippy::too_many_arguments)]
    fn line_search(
        &self,
        u: &[f64],
        g: &[f64],
        dir: &[f64],
        energy: f64,
        kkt: f64,
        out: &mut [f64],
        attempts: usize,
    ) -> Option<f64> {
        let n = u.len();
        let mut alpha = 1.0;
        let mut gt = vec![0.0; n];
        for attempt in 0..attempts {
            for i in 0..n {
                out[i] = u[i] + alpha * dir[i];
            }
            self.project(out);
            let slope = reduce::sum_by(n, |i| g[i] * (out[i] - u[i]));
            if slope >= 0.0 && attempt == 0 {
                // not a descent direction
                if !out.iter().zip(u).any(|(a, b)| a != b) {
                    return None;
                }
            }
            let e = self.energy(out);
            if e.is_finite() && e <= energy + 1e-4 * slope && slope < 0.0 {
                return Some(e);
            }
            // decrease lost in rounding: accept if stationarity improves
            if e.is_finite() && e <= energy + 1e-13 * energy.abs().max(f64::MIN_POSITIVE) {
                self.gradient(out, &mut gt);
                if self.kkt(out, &gt) < kkt {
                    return Some(e);
                }
            }
            alpha *= 0.5;
        }
        None
    }

    pub fn result(&self, m: Minimized, tol: f64) -> SolveResult {
        let energy = self.energy(&m.u);
        let active = Region::from_indices((0..m.u.len()).filter(|&i| {
            self.free[i] && self.lb[i].is_finite() && m.u[i] <= self.lb[i] + tol * (1.0 + self.lb[i].abs())
        }));
        SolveResult {
            field: ScalarField::new(m.u),
            energy,
            kkt_residual: m.kkt,
            active_set: active,
            iterations: m.iterations,
            converged: m.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperminimizerReport {
    pub is_violated: bool,
    /// Smallest `E(u + φ) - E(u)` over the sampled perturbations.
    pub worst_margin: f64,
    pub trials: usize,
}

/// Samples nonnegative perturbations supported in `domain` and reports whether
/// any of them lowers the energy.
pub fn check_superminimizer(
    space: &WeightedGraphSpace,
    field: &ScalarField,
    domain: &Region,
    p: f64,
    trials: usize,
    rng_seed: u64,
) -> Result<SuperminimizerReport> {
    check_exponent(p)?;
    check_len(space, field, "field")?;
    if let Some(&i) = domain.nodes().iter().find(|&&i| !field.get(i).is_finite()) {
        return Err(Error::InfiniteEnergyInput { node: i });
    }
    let mut report = SuperminimizerReport { is_violated: false, worst_margin: f64::INFINITY, trials: 0 };
    if domain.is_empty() {
        report.worst_margin = 0.0;
        return Ok(report);
    }
    let u = field.values();
    let w = space.edge_weights(p);
    let amp = domain.nodes().iter().map(|&i| u[i].abs()).fold(0.0, f64::max).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = space.len();
    let nodes = domain.nodes();
    let mut phi = vec![0.0; n];
    let mut touched = vec![false; space.edges().len()];
    let mut evaluate = |phi: &[f64], support: &[usize], report: &mut SuperminimizerReport| {
        let mut edges = Vec::new();
        for &i in support {
            for &(_, e) in space.neighbors(i) {
                if !touched[e] {
                    touched[e] = true;
                    edges.push(e);
                }
            }
        }
        let (mut before, mut after, mut bump) = (0.0, 0.0, 0.0);
        for &k in &edges {
            touched[k] = false;
            let e = &space.edges()[k];
            let (ua, ub) = (u[e.a], u[e.b]);
            let (va, vb) = (ua + phi[e.a], ub + phi[e.b]);
            before += w[k] * math::powf((ua - ub).abs(), p);
            after += w[k] * math::powf((va - vb).abs(), p);
            bump += w[k] * math::powf((phi[e.a] - phi[e.b]).abs(), p);
        }
        let margin = after - before;
        report.trials += 1;
        report.worst_margin = report.worst_margin.min(margin);
        if margin < -1e-9 * (before + bump) {
            report.is_violated = true;
        }
    };
    for t in 0..trials {
        let c = nodes[rng.gen_range(0..nodes.len())];
        let scale = if t % 2 == 0 { 1e-1 } else { 1e-3 } * amp;
        // coordinate bump
        phi[c] = scale;
        evaluate(&phi, &[c], &mut report);
        phi[c] = 0.0;
        // tent bump over a few edge lengths
        let hop = space.neighbors(c).iter().map(|&(_, e)| space.edges()[e].length).fold(f64::INFINITY, f64::min);
        let rho = hop * rng.gen_range(1.5..5.0);
        let dist = space.distances_from(c);
        let support: Vec<usize> = nodes.iter().copied().filter(|&i| dist[i] < rho).collect();
        for &i in &support {
            phi[i] = scale * (1.0 - dist[i] / rho);
        }
        evaluate(&phi, &support, &mut report);
        for &i in &support {
            phi[i] = 0.0;
        }
    }
    if report.trials == 0 {
        report.worst_margin = 0.0;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, GridSpec};

    fn unit_line(h: f64) -> WeightedGraphSpace {
        build_grid(&GridSpec { dim: 1, lo: vec![0.0], hi: vec![1.0], h, ..GridSpec::cube(&[0.5], 0.5, h) }).unwrap()
    }

    fn interior(s: &WeightedGraphSpace) -> Region {
        Region::from_indices((0..s.len()).filter(|&i| {
            let x = s.position(i).unwrap()[0];
            x > 0.0 && x < 1.0
        }))
    }

    #[test]
    fn energy_of_linear_field() {
        let s = unit_line(0.25);
        let u = ScalarField::from_fn(&s, |x| x[0]);
        assert!((p_energy(&s, &u, 2.0, None).unwrap() - 1.0).abs() < 1e-12);
        assert!((p_energy(&s, &u, 3.0, None).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(p_energy(&s, &ScalarField::constant(s.len(), 2.0), 2.0, None).unwrap(), 0.0);
    }

    #[test]
    fn energy_rejects_infinite_values() {
        let s = unit_line(0.25);
        let mut u = ScalarField::zeros(s.len());
        u.values_mut()[2] = f64::NEG_INFINITY;
        assert_eq!(p_energy(&s, &u, 2.0, None), Err(Error::InfiniteEnergyInput { node: 2 }));
        // not counted when the region avoids it
        let far = Region::from_indices([4]);
        assert!(p_energy(&s, &u, 2.0, Some(&far)).is_ok());
    }

    #[test]
    fn tent_obstacle() {
        // 1/256 does not resolve 0.4, so the contact set starts at the next
        // node; 1/320 resolves it and reproduces the continuum energies
        for n in [256.0, 320.0] {
            let s = unit_line(1.0 / n);
            let g = interior(&s);
            let x_c = (0.4f64 * n - 1e-9).ceil() / n;
            for (p, continuum) in [(2.0, 1.25), (3.0, 1.5625)] {
                let psi = ScalarField::from_fn(&s, |x| {
                    if (0.4 - 1e-12..=0.6 + 1e-12).contains(&x[0]) {
                        0.5
                    } else {
                        f64::NEG_INFINITY
                    }
                });
                let spec = ObstacleSpec { domain: g.clone(), obstacle: psi, boundary: ScalarField::zeros(s.len()), p };
                let r = solve_obstacle(&s, &spec, &SolverOptions::default()).unwrap();
                assert!(r.converged, "p={p} kkt={}", r.kkt_residual);
                let discrete = 2.0 * math::powf(0.5 / x_c, p) * x_c;
                assert!((r.energy - discrete).abs() < 1e-8 * discrete, "p={p}: {}", r.energy);
                assert!((r.energy - continuum).abs() / continuum < 0.02);
                let mid = s.nearest_node(&[0.2]).unwrap();
                let x = s.position(mid).unwrap()[0];
                assert!((r.field.get(mid) - 0.5 * x / x_c).abs() < 1e-9);
                assert!(!r.active_set.is_empty());
            }
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let s = unit_line(1.0 / 16.0);
        let r =
            harmonic_solution(&s, &interior(&s), &ScalarField::zeros(s.len()), 2.5, &SolverOptions::default()).unwrap();
        assert!(r.field.values().iter().all(|&v| v == 0.0));
        assert!(r.converged);
    }

    #[test]
    fn harmonic_is_affine_in_1d() {
        let s = unit_line(1.0 / 32.0);
        for p in [1.5, 2.0, 4.0] {
            let f = ScalarField::from_fn(&s, |x| 1.0 + 2.0 * x[0]);
            let mut start = f.clone();
            for v in start.values_mut().iter_mut().skip(1).take(31) {
                *v = 0.0;
            }
            let r = harmonic_solution(&s, &interior(&s), &start_with_boundary(&s, &f), p, &SolverOptions::default())
                .unwrap();
            assert!(r.converged);
            for i in 0..s.len() {
                assert!((r.field.get(i) - f.get(i)).abs() < 1e-6, "p={p}");
            }
        }
    }

    fn start_with_boundary(s: &WeightedGraphSpace, f: &ScalarField) -> ScalarField {
        ScalarField::from_fn(s, |x| {
            if x[0] == 0.0 || x[0] == 1.0 {
                f.values()[if x[0] == 0.0 { 0 } else { s.len() - 1 }]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn harmonic_polynomial_on_square() {
        let h = 1.0 / 64.0;
        let s = build_grid(&GridSpec {
            dim: 2,
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
            h,
            ..GridSpec::cube(&[0.0, 0.0], 1.0, h)
        })
        .unwrap();
        let exact = ScalarField::from_fn(&s, |x| x[0] * x[0] - x[1] * x[1]);
        let g = Region::from_indices((0..s.len()).filter(|&i| {
            let x = s.position(i).unwrap();
            x.iter().all(|&c| c > 0.0 && c < 1.0)
        }));
        let r = harmonic_solution(&s, &g, &exact, 2.0, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        let err = g.nodes().iter().map(|&i| (r.field.get(i) - exact.get(i)).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-3, "{err}");
    }

    #[test]
    fn rejects_whole_space_and_bad_p() {
        let s = unit_line(0.25);
        let spec = ObstacleSpec {
            domain: Region::all(s.len()),
            obstacle: ScalarField::unconstrained(s.len()),
            boundary: ScalarField::zeros(s.len()),
            p: 2.0,
        };
        assert_eq!(solve_obstacle(&s, &spec, &SolverOptions::default()).unwrap_err(), Error::EmptyComplement);
        let spec = ObstacleSpec { domain: interior(&s), p: 0.5, ..spec };
        assert_eq!(solve_obstacle(&s, &spec, &SolverOptions::default()).unwrap_err(), Error::ExponentOutOfRange(0.5));
    }

    #[test]
    fn infeasible_boundary() {
        let s = unit_line(0.25);
        let spec = ObstacleSpec {
            domain: interior(&s),
            obstacle: ScalarField::unconstrained(s.len()),
            boundary: ScalarField::unconstrained(s.len()),
            p: 2.0,
        };
        assert!(matches!(solve_obstacle(&s, &spec, &SolverOptions::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn superminimizer_checks() {
        let s = unit_line(1.0 / 32.0);
        let g = interior(&s);
        let psi = ScalarField::from_fn(&s, |x| if (0.4..=0.6).contains(&x[0]) { 0.5 } else { f64::NEG_INFINITY });
        let spec = ObstacleSpec { domain: g.clone(), obstacle: psi, boundary: ScalarField::zeros(s.len()), p: 2.0 };
        let sol = solve_obstacle(&s, &spec, &SolverOptions::default()).unwrap();
        assert!(!check_superminimizer(&s, &sol.field, &g, 2.0, 50, 1).unwrap().is_violated);
        let down = ScalarField::from_fn(&s, |x| -x[0].min(1.0 - x[0]));
        let rep = check_superminimizer(&s, &down, &g, 2.0, 50, 1).unwrap();
        assert!(rep.is_violated && rep.worst_margin < 0.0);
        let flat = check_superminimizer(&s, &ScalarField::constant(s.len(), 3.0), &g, 2.0, 20, 1).unwrap();
        assert!(!flat.is_violated && flat.worst_margin >= 0.0);
    }
}
