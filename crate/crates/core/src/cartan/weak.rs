use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{radius, Local};
use crate::capacity::capacitary_potential;
use crate::descriptor::AnalyticSet;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fine::Verdict;
use crate::solver::{self, SolverOptions};
use crate::space::Region;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CartanConfig {
    pub x0: Vec<f64>,
    pub r: f64,
    pub sigma: f64,
    pub p: f64,
    /// Grid cells per `r`.
    pub resolution: usize,
    /// Level-set tolerance for `F = {u = 1}`.
    pub level_tol: f64,
    /// Validity needs `u(x0) < 1 - margin`.
    pub margin: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl CartanConfig {
    pub fn new(x0: Vec<f64>, p: f64) -> Self {
        CartanConfig {
            x0,
            r: 1.0,
            sigma: 50.0,
            p,
            resolution: 256,
            level_tol: 1e-3,
            margin: 1e-3,
            solver: SolverOptions::default(),
        }
    }
}

/// Nodes of `E` in one annulus `(½B_j \ 2B̄_{j+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub j: usize,
    pub inner: f64,
    pub outer: f64,
    /// Grid nodes in the open annulus.
    pub grid_nodes: usize,
    pub set_nodes: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartanCertificate {
    pub r: f64,
    pub r_prime: f64,
    /// Radius `r'/2` of the ball on which coverage is checked.
    pub b_radius: f64,
    pub sigma: f64,
    pub annuli: Vec<Annulus>,
    pub annuli_prime: Vec<Annulus>,
    pub u: ScalarField,
    pub u_prime: ScalarField,
    pub u_at_x0: f64,
    pub uprime_at_x0: f64,
    /// `max(u, u')`
    pub v: ScalarField,
    pub level_set: Region,
    pub level_set_prime: Region,
    pub coverage_violations: Region,
    pub valid: bool,
    /// Set when a non-thin verdict was supplied: an invalid certificate is
    /// then the expected outcome.
    pub expected_invalid: bool,
    pub converged: bool,
}

fn annuli(local: &Local, r: f64, sigma: f64) -> Vec<Annulus> {
    let min_d = local.h * 0.5;
    let mut out = Vec::new();
    let mut j = 0;
    loop {
        let outer = 0.5 * radius(r, sigma, j);
        if outer <= min_d {
            break;
        }
        let inner = 2.0 * radius(r, sigma, j + 1);
        let shell = local.shell(inner, outer);
        out.push(Annulus { j, inner, outer, grid_nodes: shell.len(), set_nodes: shell.intersection(&local.set) });
        j += 1;
    }
    out
}

/// Builds the two capacitary potentials of the weak Cartan construction and
/// checks that their unit level sets cover `E` near `x0`.
pub fn weak_cartan(
    descriptor: &AnalyticSet,
    cfg: &CartanConfig,
    expectation: Option<Verdict>,
) -> Result<CartanCertificate> {
    solver::check_exponent(cfg.p)?;
    if !(cfg.sigma > 1.0) {
        return Err(Error::InvalidParameter { name: "sigma", reason: "must exceed 1".into() });
    }
    let local = Local::new(descriptor, &cfg.x0, cfg.r, cfg.resolution)?;
    if local.x0_in_set() {
        return Err(Error::HypothesisViolated("x0 belongs to the set".into()));
    }
    let r_prime = cfg.r / 5.0;
    let a = annuli(&local, cfg.r, cfg.sigma);
    let a_prime = annuli(&local, r_prime, cfg.sigma);
    let resolvable = a.iter().chain(&a_prime).filter(|x| x.grid_nodes > 0).count();
    if resolvable < 3 {
        return Err(Error::ScaleUnderflow);
    }
    let e0 = a.iter().fold(Region::empty(), |acc, x| acc.union(&x.set_nodes));
    let e0_prime = a_prime.iter().fold(Region::empty(), |acc, x| acc.union(&x.set_nodes));
    let b0 = local.ball(cfg.r);
    let b0_prime = local.ball(r_prime);
    let u = capacitary_potential(&local.space, &e0, &b0, cfg.p, &cfg.solver)?;
    let up = capacitary_potential(&local.space, &e0_prime, &b0_prime, cfg.p, &cfg.solver)?;
    let b = local.ball(0.5 * r_prime);
    let level =
        |f: &ScalarField| Region::from_indices(b.nodes().iter().copied().filter(|&i| f.get(i) >= 1.0 - cfg.level_tol));
    let f_set = level(&u.field);
    let fp_set = level(&up.field);
    let coverage_violations = local.set.intersection(&b).difference(&f_set.union(&fp_set));
    let u_at_x0 = u.field.get(local.center);
    let uprime_at_x0 = up.field.get(local.center);
    let valid = u_at_x0 < 1.0 - cfg.margin && uprime_at_x0 < 1.0 - cfg.margin && coverage_violations.is_empty();
    Ok(CartanCertificate {
        r: cfg.r,
        r_prime,
        b_radius: 0.5 * r_prime,
        sigma: cfg.sigma,
        annuli: a,
        annuli_prime: a_prime,
        v: u.field.max_with(&up.field),
        u_at_x0,
        uprime_at_x0,
        converged: u.converged && up.converged,
        u: u.field,
        u_prime: up.field,
        level_set: f_set,
        level_set_prime: fp_set,
        coverage_violations,
        valid,
        expected_invalid: expectation.is_some_and(|v| v != Verdict::Thin),
    })
}
