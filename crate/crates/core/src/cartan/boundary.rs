use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Local;
use crate::capacity::{capacitary_potential, variational_capacity};
use crate::descriptor::AnalyticSet;
use crate::error::{Error, Result};
use crate::math;
use crate::solver::{self, SolverOptions};
use crate::space::Region;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    /// Center and radius of the small ball `B`.
    pub center: Vec<f64>,
    pub radius: f64,
    /// Center and radius of the enclosing ball `B0`.
    pub outer_center: Vec<f64>,
    pub outer_radius: f64,
    pub p: f64,
    /// Grid cells per `outer_radius`.
    pub resolution: usize,
    /// Required `relaxation * B ⊂ B0`; the continuum statement uses 50λ.
    pub relaxation: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl BoundaryConfig {
    pub fn new(center: Vec<f64>, radius: f64, outer_radius: f64, p: f64) -> Self {
        BoundaryConfig {
            outer_center: center.clone(),
            center,
            radius,
            outer_radius,
            p,
            resolution: 128,
            relaxation: 8.0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub sup_on_sphere: f64,
    pub inf_on_sphere: f64,
    /// `inf_B u`
    pub inf_on_ball: f64,
    /// `(cap_p(E, B0) / cap_p(B, B0))^(1/(p-1))`
    pub quotient_rhs: f64,
    pub implied_cprime: f64,
    pub implied_cdoubleprime: f64,
    pub sphere_nodes: usize,
    pub relaxation: f64,
    /// The relaxation is below the continuum factor 50.
    pub relaxed: bool,
    pub converged: bool,
}

/// Potential of `E` in `B0` sampled on the discrete sphere `∂B`, the shell of
/// nodes at distance `[radius - h, radius)` from the center of `B`.
pub fn boundary_estimate_check(descriptor: &AnalyticSet, cfg: &BoundaryConfig) -> Result<BoundaryReport> {
    solver::check_exponent(cfg.p)?;
    if !(cfg.relaxation >= 1.0) {
        return Err(Error::InvalidParameter { name: "relaxation", reason: "must be at least 1".into() });
    }
    let offset = math::dist(&cfg.center, &cfg.outer_center);
    if cfg.relaxation * cfg.radius + offset > cfg.outer_radius {
        return Err(Error::GeometryViolation(alloc::format!("{} B is not inside B0", cfg.relaxation)));
    }
    let local = Local::new(descriptor, &cfg.outer_center, cfg.outer_radius, cfg.resolution)?;
    let pos = |i: usize| local.space.position(i).unwrap_or(&[]);
    let dist_b: Vec<f64> = (0..local.space.len()).map(|i| math::dist(pos(i), &cfg.center)).collect();
    let e = &local.set;
    if e.nodes().iter().any(|&i| local.dist[i] >= 0.5 * cfg.outer_radius) {
        return Err(Error::HypothesisViolated("set is not inside ½B0".into()));
    }
    if e.nodes().iter().any(|&i| dist_b[i] >= 0.5 * cfg.radius && dist_b[i] < 2.0 * cfg.radius) {
        return Err(Error::HypothesisViolated("set meets 2B \\ ½B".into()));
    }
    let h = local.h;
    let b0 = local.ball(cfg.outer_radius);
    let b = Region::from_indices((0..dist_b.len()).filter(|&i| dist_b[i] < cfg.radius));
    let sphere =
        Region::from_indices((0..dist_b.len()).filter(|&i| dist_b[i] >= cfg.radius - h && dist_b[i] < cfg.radius));
    if sphere.is_empty() {
        return Err(Error::GeometryViolation("the sphere of B has no nodes".into()));
    }
    let relaxed = cfg.relaxation < 50.0;
    if e.is_empty() {
        return Ok(BoundaryReport {
            sup_on_sphere: 0.0,
            inf_on_sphere: 0.0,
            inf_on_ball: 0.0,
            quotient_rhs: 0.0,
            implied_cprime: 0.0,
            implied_cdoubleprime: 0.0,
            sphere_nodes: sphere.len(),
            relaxation: cfg.relaxation,
            relaxed,
            converged: true,
        });
    }
    let u = capacitary_potential(&local.space, e, &b0, cfg.p, &cfg.solver)?;
    let cap_e = variational_capacity(&local.space, e, &b0, cfg.p, &cfg.solver)?;
    let cap_b = variational_capacity(&local.space, &b, &b0, cfg.p, &cfg.solver)?;
    let q = math::powf(cap_e.value / cap_b.value, 1.0 / (cfg.p - 1.0));
    let sup = u.field.max_on(&sphere);
    let inf = u.field.min_on(&sphere);
    Ok(BoundaryReport {
        sup_on_sphere: sup,
        inf_on_sphere: inf,
        inf_on_ball: u.field.min_on(&b),
        quotient_rhs: q,
        implied_cprime: sup / q,
        implied_cdoubleprime: inf / q,
        sphere_nodes: sphere.len(),
        relaxation: cfg.relaxation,
        relaxed,
        converged: u.converged && cap_e.diagnostics.converged && cap_b.diagnostics.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg() -> BoundaryConfig {
        BoundaryConfig { resolution: 64, ..BoundaryConfig::new(vec![0.0, 0.0], 0.1, 1.0, 2.0) }
    }

    #[test]
    fn empty_set_is_all_zero() {
        let r = boundary_estimate_check(&AnalyticSet::Empty, &cfg()).unwrap();
        assert_eq!(r.sup_on_sphere, 0.0);
        assert_eq!(r.implied_cprime, 0.0);
        assert!(r.relaxed);
    }

    #[test]
    fn far_disk() {
        let e = AnalyticSet::DiskUnion { disks: vec![(vec![0.4, 0.0], 0.03)] };
        let r = boundary_estimate_check(&e, &cfg()).unwrap();
        assert!(r.inf_on_sphere <= r.sup_on_sphere);
        assert!(r.sup_on_sphere > 0.0 && r.sup_on_sphere < 1.0);
        assert!(r.implied_cprime.is_finite() && r.implied_cdoubleprime > 0.0);
        assert!(r.inf_on_ball <= r.inf_on_sphere + 1e-12);
    }

    #[test]
    fn hypotheses() {
        let inner = AnalyticSet::DiskUnion { disks: vec![(vec![0.0, 0.0], 0.1)] };
        assert!(matches!(boundary_estimate_check(&inner, &cfg()), Err(Error::HypothesisViolated(_))));
        let big = BoundaryConfig { radius: 0.2, ..cfg() };
        assert!(matches!(boundary_estimate_check(&AnalyticSet::Empty, &big), Err(Error::GeometryViolation(_))));
    }
}
