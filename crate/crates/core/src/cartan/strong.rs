use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Local;
use crate::capacity::capacitary_potential;
use crate::descriptor::AnalyticSet;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fine::{capacity_shrink_profile, ShrinkPoint};
use crate::math;
use crate::solver::{self, ObstacleSpec, SolverOptions};
use crate::space::Region;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongCartanConfig {
    pub x0: Vec<f64>,
    /// Radius of `B`.
    pub r: f64,
    pub p: f64,
    /// Number of shells.
    pub levels: usize,
    pub resolution: usize,
    /// Candidate radii shrink by this factor, from `r/2` down to `2h`.
    pub radius_step: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl StrongCartanConfig {
    pub fn new(x0: Vec<f64>, p: f64) -> Self {
        StrongCartanConfig {
            x0,
            r: 1.0,
            p,
            levels: 6,
            resolution: 128,
            radius_step: 0.8,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongCartanResult {
    /// Shell radii `r_j` with `cap_p(E ∩ B(x0, r_j), B) < 2^(-jp)`.
    pub radii: Vec<f64>,
    pub shells: Vec<Region>,
    pub profile: Vec<ShrinkPoint>,
    /// `sum_j v_j`
    pub v: ScalarField,
    pub u: ScalarField,
    pub u_at_x0: f64,
    /// `(ρ, min of u on E ∩ B(x0, ρ))` over the profile radii with a nonempty piece.
    pub min_on_e_near_x0: Vec<(f64, f64)>,
    /// `u >= k - tol` on the k-th shell for every k.
    pub levels_hold: bool,
    pub valid: bool,
    pub converged: bool,
}

/// Sums capacitary potentials of shrinking pieces of `E` and lifts the sum to
/// the solution of the obstacle problem with that obstacle in `B`.
pub fn strong_cartan_positive_cap(descriptor: &AnalyticSet, cfg: &StrongCartanConfig) -> Result<StrongCartanResult> {
    solver::check_exponent(cfg.p)?;
    if cfg.levels == 0 {
        return Err(Error::InvalidParameter { name: "levels", reason: "must be at least 1".into() });
    }
    if !(cfg.radius_step > 0.0 && cfg.radius_step < 1.0) {
        return Err(Error::InvalidParameter { name: "radius_step", reason: "must lie in (0, 1)".into() });
    }
    let local = Local::new(descriptor, &cfg.x0, cfg.r, cfg.resolution)?;
    if local.x0_in_set() {
        return Err(Error::HypothesisViolated("x0 belongs to the set".into()));
    }
    let n = local.space.len();
    let b = local.ball(cfg.r);
    let e = local.set.intersection(&b);
    let mut candidates = Vec::new();
    let mut rho = 0.5 * cfg.r;
    while rho >= 2.0 * local.h {
        candidates.push(rho);
        rho *= cfg.radius_step;
    }
    let profile = capacity_shrink_profile(&local.space, &e, &cfg.x0, &b, &candidates, cfg.p, &cfg.solver)?;
    let mut radii = Vec::with_capacity(cfg.levels);
    let mut start = 0;
    for j in 1..=cfg.levels {
        let budget = math::powf(2.0, -(j as f64) * cfg.p);
        let pick = profile[start..].iter().position(|pt| pt.capacity < budget);
        match pick {
            Some(k) => {
                radii.push(profile[start + k].rho);
                start += k;
            }
            None => return Err(Error::ShrinkTooSlow { level: j }),
        }
    }
    let shells: Vec<Region> = radii.iter().map(|&r| e.intersection(&local.ball(r))).collect();
    let mut v = ScalarField::zeros(n);
    let mut converged = true;
    for shell in &shells {
        if shell.is_empty() {
            continue;
        }
        let vj = capacitary_potential(&local.space, shell, &b, cfg.p, &cfg.solver)?;
        converged &= vj.converged;
        for (acc, x) in v.values_mut().iter_mut().zip(vj.field.values()) {
            *acc += x;
        }
    }
    let spec = ObstacleSpec { domain: b.clone(), obstacle: v.clone(), boundary: ScalarField::zeros(n), p: cfg.p };
    let sol = solver::solve_obstacle(&local.space, &spec, &cfg.solver)?;
    converged &= sol.converged;
    let u = sol.field;
    let tol = 1e-6;
    let levels_hold = shells.iter().enumerate().all(|(k, s)| s.is_empty() || u.min_on(s) >= (k + 1) as f64 - tol);
    let u_at_x0 = u.get(local.center);
    let min_on_e_near_x0: Vec<(f64, f64)> = profile
        .iter()
        .map(|pt| (pt.rho, u.min_on(&e.intersection(&local.ball(pt.rho)))))
        .filter(|(_, m)| m.is_finite())
        .collect();
    let increasing = min_on_e_near_x0.windows(2).all(|w| w[1].1 >= w[0].1 - tol);
    let beyond = min_on_e_near_x0.last().is_none_or(|&(_, m)| m > u_at_x0);
    Ok(StrongCartanResult {
        radii,
        shells,
        profile,
        valid: u_at_x0.is_finite() && levels_hold && increasing && beyond,
        v,
        u_at_x0,
        u,
        min_on_e_near_x0,
        levels_hold,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg() -> StrongCartanConfig {
        StrongCartanConfig { resolution: 32, levels: 3, ..StrongCartanConfig::new(vec![0.0, 0.0], 2.0) }
    }

    #[test]
    fn empty_set_is_trivially_valid() {
        let r = strong_cartan_positive_cap(&AnalyticSet::Empty, &cfg()).unwrap();
        assert!(r.valid);
        assert!(r.u.values().iter().all(|&x| x == 0.0));
        assert_eq!(r.radii.len(), 3);
    }

    #[test]
    fn sector_does_not_shrink() {
        let e = AnalyticSet::sector(core::f64::consts::PI / 6.0);
        assert_eq!(strong_cartan_positive_cap(&e, &cfg()).unwrap_err(), Error::ShrinkTooSlow { level: 1 });
    }

    #[test]
    fn far_set_gives_stacked_levels() {
        // nothing of E near x0: every budget is met by an empty piece
        let e = AnalyticSet::DiskUnion { disks: vec![(vec![0.6, 0.0], 0.1)] };
        let r = strong_cartan_positive_cap(&e, &cfg()).unwrap();
        assert!(r.shells.iter().all(|s| s.is_empty()));
        assert_eq!(r.u_at_x0, 0.0);
    }
}
