//! Sobolev and condenser capacities.
//!
//! Admissibility `u >= 1 on E` is imposed at every node of `E`; a finite graph
//! has no nontrivial null sets, so the quasi-everywhere qualifier is vacuous.

use alloc::vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::math;
use crate::solver::{self, ObstacleSpec, Problem, SolveResult, SolverOptions};
use crate::space::{metric_ball, Ball, Region, WeightedGraphSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub value: f64,
    pub minimizer: ScalarField,
    /// `sum_i mu_i |u_i|^p`; zero for condenser capacities.
    pub lp_term: f64,
    pub energy_term: f64,
    pub diagnostics: Diagnostics,
}

impl CapacityResult {
    fn zero(n: usize) -> Self {
        CapacityResult {
            value: 0.0,
            minimizer: ScalarField::zeros(n),
            lp_term: 0.0,
            energy_term: 0.0,
            diagnostics: Diagnostics { iterations: 0, kkt_residual: 0.0, converged: true },
        }
    }
}

fn check_region(space: &WeightedGraphSpace, r: &Region, name: &'static str) -> Result<()> {
    if r.nodes().last().is_some_and(|&i| i >= space.len()) {
        return Err(Error::InvalidParameter { name, reason: "node index out of range".into() });
    }
    Ok(())
}

/// `C_p(E) = inf { sum mu |u|^p + E_p(u) : u >= 1 on E }`.
pub fn sobolev_capacity(
    space: &WeightedGraphSpace,
    e: &Region,
    p: f64,
    opts: &SolverOptions,
) -> Result<CapacityResult> {
    solver::check_exponent(p)?;
    check_region(space, e, "set")?;
    let n = space.len();
    if e.is_empty() {
        return Ok(CapacityResult::zero(n));
    }
    let in_e = e.mask(n);
    let lb: alloc::vec::Vec<f64> = in_e.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let problem = Problem::new(space, p, vec![true; n], lb.clone(), Some(space.mu().to_vec()));
    let m = problem.minimize(lb, opts);
    let lp_term = problem.mass_energy(&m.u);
    let field = ScalarField::new(m.u);
    let energy_term = solver::p_energy(space, &field, p, None)?;
    Ok(CapacityResult {
        value: lp_term + energy_term,
        minimizer: field,
        lp_term,
        energy_term,
        diagnostics: Diagnostics { iterations: m.iterations, kkt_residual: m.kkt, converged: m.converged },
    })
}

/// `cap_p(E, A)`: the p-energy of the field that is 1 on `E`, 0 off `A` and
/// p-harmonic in between.
pub fn variational_capacity(
    space: &WeightedGraphSpace,
    e: &Region,
    a: &Region,
    p: f64,
    opts: &SolverOptions,
) -> Result<CapacityResult> {
    solver::check_exponent(p)?;
    check_region(space, e, "set")?;
    check_region(space, a, "domain")?;
    if !e.is_subset(a) {
        return Err(Error::EnotInA);
    }
    let n = space.len();
    if a.len() == n {
        return Err(Error::EmptyComplement);
    }
    if e.is_empty() {
        return Ok(CapacityResult::zero(n));
    }
    let in_e = e.mask(n);
    let free = a.difference(e).mask(n);
    let init: alloc::vec::Vec<f64> = in_e.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let problem = Problem::new(space, p, free, vec![f64::NEG_INFINITY; n], None);
    let m = problem.minimize(init, opts);
    let field = ScalarField::new(m.u);
    let energy_term = solver::p_energy(space, &field, p, None)?;
    Ok(CapacityResult {
        value: energy_term,
        minimizer: field,
        lp_term: 0.0,
        energy_term,
        diagnostics: Diagnostics { iterations: m.iterations, kkt_residual: m.kkt, converged: m.converged },
    })
}

/// Solution of the obstacle problem with obstacle `χ_E` and zero boundary
/// values outside `B`.
pub fn capacitary_potential(
    space: &WeightedGraphSpace,
    e: &Region,
    b: &Region,
    p: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_region(space, e, "set")?;
    if !e.is_subset(b) {
        return Err(Error::EnotInA);
    }
    let n = space.len();
    let spec =
        ObstacleSpec { domain: b.clone(), obstacle: ScalarField::indicator(n, e), boundary: ScalarField::zeros(n), p };
    solver::solve_obstacle(space, &spec, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `mu(E) / (r^p cap)`, `cap r^p / mu(B)`, `C_p(E) / ((1 + r^p) cap)`,
    /// `cap / ((1 + r^-p) C_p(E))` with `cap = cap_p(E, 2B)`.
    pub ratios: [f64; 4],
    pub bounds_hold: bool,
    /// Whether the last ratio respects its explicit bound `2^p`.
    pub explicit_bound_holds: bool,
    pub cap_2b: f64,
    pub sobolev: f64,
    pub measure_e: f64,
    pub measure_b: f64,
}

/// Measures and capacities of `E ⊂ B` side by side, as ratios whose
/// boundedness across instances is the quantity of interest.
pub fn capacity_comparison_check(
    space: &WeightedGraphSpace,
    e: &Region,
    ball: &Ball,
    p: f64,
    opts: &SolverOptions,
) -> Result<ComparisonReport> {
    let r = ball.radius;
    if !(r < space.diameter() / 6.0) {
        return Err(Error::GeometryViolation(alloc::format!("radius {r} is not below a sixth of the diameter")));
    }
    let b = metric_ball(space, ball.center, r)?;
    if !e.is_subset(&b) {
        return Err(Error::GeometryViolation("set is not inside the ball".into()));
    }
    let measure_b = space.measure(&b);
    if e.is_empty() {
        return Ok(ComparisonReport {
            ratios: [0.0; 4],
            bounds_hold: true,
            explicit_bound_holds: true,
            cap_2b: 0.0,
            sobolev: 0.0,
            measure_e: 0.0,
            measure_b,
        });
    }
    let b2 = metric_ball(space, ball.center, 2.0 * r)?;
    let cap = variational_capacity(space, e, &b2, p, opts)?.value;
    let sob = sobolev_capacity(space, e, p, opts)?.value;
    let rp = math::powf(r, p);
    let measure_e = space.measure(e);
    let ratios =
        [measure_e / (rp * cap), cap * rp / measure_b, sob / ((1.0 + rp) * cap), cap / ((1.0 + 1.0 / rp) * sob)];
    Ok(ComparisonReport {
        ratios,
        bounds_hold: ratios.iter().all(|x| x.is_finite()),
        explicit_bound_holds: ratios[3] <= math::powf(2.0, p) * (1.0 + 1e-9),
        cap_2b: cap,
        sobolev: sob,
        measure_e,
        measure_b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusReport {
    pub cap_tau: f64,
    pub cap_t: f64,
    /// `cap_tau / cap_t` (1 when both vanish).
    pub ratio: f64,
    pub monotone: bool,
}

/// Compares `cap_p(E, tB)` with `cap_p(E, τB)` for `1 < τ < t`.
#[allow(clippy::too_many_arguments)]
pub fn annulus_monotonicity_check(
    space: &WeightedGraphSpace,
    e: &Region,
    ball: &Ball,
    t: f64,
    tau: f64,
    p: f64,
    opts: &SolverOptions,
) -> Result<AnnulusReport> {
    let limit = space.diameter() / (4.0 * ball.radius);
    if !(1.0 < tau && tau < t && t < limit) {
        return Err(Error::GeometryViolation(alloc::format!("need 1 < tau < t < {limit}, got tau = {tau}, t = {t}")));
    }
    let b = metric_ball(space, ball.center, ball.radius)?;
    if !e.is_subset(&b) {
        return Err(Error::GeometryViolation("set is not inside the ball".into()));
    }
    let big = metric_ball(space, ball.center, t * ball.radius)?;
    let small = metric_ball(space, ball.center, tau * ball.radius)?;
    let cap_t = variational_capacity(space, e, &big, p, opts)?.value;
    let cap_tau = variational_capacity(space, e, &small, p, opts)?.value;
    let ratio = if cap_t > 0.0 { cap_tau / cap_t } else { 1.0 };
    Ok(AnnulusReport { cap_tau, cap_t, ratio, monotone: cap_t <= cap_tau * (1.0 + 2.0 * opts.tol) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, build_radial, GridSpec, RadialSpec};

    fn line(half: f64, h: f64) -> WeightedGraphSpace {
        build_grid(&GridSpec::cube(&[0.0], half, h)).unwrap()
    }

    fn select(s: &WeightedGraphSpace, f: impl Fn(f64) -> bool) -> Region {
        Region::from_indices((0..s.len()).filter(|&i| f(s.position(i).unwrap()[0])))
    }

    #[test]
    fn interval_condenser() {
        let s = line(1.0, 1.0 / 256.0);
        let e = select(&s, |x| x.abs() <= 0.25);
        let a = select(&s, |x| x.abs() < 1.0);
        let c = variational_capacity(&s, &e, &a, 2.0, &SolverOptions::default()).unwrap();
        assert!((c.value - 8.0 / 3.0).abs() < 1e-9, "{}", c.value);
        assert_eq!(c.lp_term, 0.0);
        assert_eq!(variational_capacity(&s, &Region::empty(), &a, 2.0, &Default::default()).unwrap().value, 0.0);
        assert_eq!(variational_capacity(&s, &s_all_but(&s), &a, 2.0, &Default::default()).unwrap_err(), Error::EnotInA);
    }

    fn s_all_but(s: &WeightedGraphSpace) -> Region {
        Region::from_indices(0..s.len() - 1)
    }

    #[test]
    fn annulus_in_the_plane() {
        let s = build_radial(&RadialSpec {
            n: 2,
            rmin: 0.0,
            rmax: 1.0,
            h: 1.0 / 1024.0,
            weight_exponent: 0.0,
            node_cap: 1 << 22,
        })
        .unwrap();
        let e = select(&s, |r| r <= 0.5);
        let a = select(&s, |r| r < 1.0);
        let c = variational_capacity(&s, &e, &a, 2.0, &SolverOptions::default()).unwrap();
        let exact = 2.0 * core::f64::consts::PI / core::f64::consts::LN_2;
        assert!((c.value - exact).abs() / exact < 0.005);
        let pot = capacitary_potential(&s, &e, &a, 2.0, &SolverOptions::default()).unwrap();
        assert!((pot.energy - c.value).abs() <= 1e-6 * c.value);
        let mut worst: f64 = 0.0;
        for i in 0..s.len() {
            let r = s.position(i).unwrap()[0];
            if r >= 0.5 {
                worst = worst.max((pot.field.get(i) - (1.0 / r).ln() / core::f64::consts::LN_2).abs());
            }
        }
        assert!(worst < 0.01, "{worst}");
    }

    #[test]
    fn tent_potential() {
        let s = line(1.0, 1.0 / 128.0);
        let e = Region::from_indices([s.nearest_node(&[0.0]).unwrap()]);
        let b = select(&s, |x| x.abs() < 1.0);
        let pot = capacitary_potential(&s, &e, &b, 2.0, &SolverOptions::default()).unwrap();
        assert!((pot.energy - 2.0).abs() < 1e-8);
        assert_eq!(pot.field.get(e.nodes()[0]), 1.0);
        assert!(pot.field.values().iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        let none = capacitary_potential(&s, &Region::empty(), &b, 2.0, &SolverOptions::default()).unwrap();
        assert!(none.field.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sobolev_trivial_cases() {
        let s = line(1.0, 0.25);
        let opts = SolverOptions::default();
        assert_eq!(sobolev_capacity(&s, &Region::empty(), 2.0, &opts).unwrap().value, 0.0);
        let all = sobolev_capacity(&s, &Region::all(s.len()), 2.0, &opts).unwrap();
        assert!((all.value - s.total_measure()).abs() < 1e-12);
        assert_eq!(all.energy_term, 0.0);
    }

    #[test]
    fn sobolev_point_against_condenser() {
        let s = line(2.0, 1.0 / 512.0);
        let opts = SolverOptions::default();
        let e = Region::from_indices([s.nearest_node(&[0.0]).unwrap()]);
        let sob = sobolev_capacity(&s, &e, 2.0, &opts).unwrap();
        assert!(sob.value > 0.0 && sob.value <= s.total_measure());
        assert!((sob.value - sob.lp_term - sob.energy_term).abs() < 1e-12);
        // free ends: the minimizer is cosh(2 - |x|) / cosh 2, with norm 2 tanh 2
        let exact = 2.0 * 2.0f64.tanh();
        assert!((sob.value - exact).abs() / exact < 1e-3, "{} vs {exact}", sob.value);
        let a = select(&s, |x| x.abs() < 1.0);
        let cap = variational_capacity(&s, &e, &a, 2.0, &opts).unwrap().value;
        assert!(sob.value <= 2.0 * cap);
    }

    #[test]
    fn comparison_and_annulus_reports() {
        let s = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 1.0 / 32.0)).unwrap();
        let opts = SolverOptions::default();
        let c = s.nearest_node(&[0.0, 0.0]).unwrap();
        let ball = Ball::open(c, 0.2);
        let e = metric_ball(&s, c, 0.1).unwrap();
        let rep = capacity_comparison_check(&s, &e, &ball, 2.0, &opts).unwrap();
        assert!(rep.bounds_hold && rep.explicit_bound_holds, "{rep:?}");
        let empty = capacity_comparison_check(&s, &Region::empty(), &ball, 2.0, &opts).unwrap();
        assert_eq!(empty.ratios, [0.0; 4]);
        let small = Ball::open(c, 0.1);
        let e_small = metric_ball(&s, c, 0.05).unwrap();
        let an = annulus_monotonicity_check(&s, &e_small, &small, 4.0, 2.0, 2.0, &opts).unwrap();
        assert!(an.monotone && an.ratio > 1.0 && an.ratio < 10.0, "{an:?}");
        assert!(matches!(
            annulus_monotonicity_check(&s, &e, &ball, 2.0, 4.0, 2.0, &opts),
            Err(Error::GeometryViolation(_))
        ));
    }
}
