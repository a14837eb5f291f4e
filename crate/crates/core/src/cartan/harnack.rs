use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::capacitary_potential;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::math;
use crate::solver::{self, harmonic_solution, SolverOptions};
use crate::space::{metric_ball, Ball, Region, WeightedGraphSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HarnackFamily {
    /// A positive constant.
    Constant { value: f64 },
    /// p-harmonic extensions of random positive trigonometric boundary data.
    Harmonic,
    /// Capacitary potentials of small balls placed at `distance` times the
    /// domain radius in random directions.
    CapacitaryPotential { disk_radius: f64, distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarnackForm {
    /// `sup_B u / (⨍_2B u_+^q)^(1/q)`
    Sub,
    /// `(⨍_2B u^q)^(1/q) / inf_B u`
    Super,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub q: f64,
    pub p: f64,
    pub form: HarnackForm,
    pub radius: f64,
    pub domain_radius: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub function_family: String,
}

fn mean_power(space: &WeightedGraphSpace, u: &ScalarField, region: &Region, q: f64) -> f64 {
    let mu = space.mu();
    let (mut m, mut s) = (0.0, 0.0);
    for &i in region.nodes() {
        m += mu[i];
        s += mu[i] * math::powf(u.get(i).max(0.0), q);
    }
    math::powf(s / m, 1.0 / q)
}

fn ratio(space: &WeightedGraphSpace, u: &ScalarField, b: &Region, b2: &Region, q: f64, form: HarnackForm) -> f64 {
    let mean = mean_power(space, u, b2, q);
    match form {
        HarnackForm::Sub => {
            let sup = u.max_on(b).max(0.0);
            if sup == 0.0 {
                1.0
            } else {
                sup / mean
            }
        }
        HarnackForm::Super => {
            if mean == 0.0 {
                return 1.0;
            }
            mean / u.min_on(b)
        }
    }
}

/// Samples the weak Harnack quotients over a family of functions that are
/// p-harmonic (or super-p-harmonic) in `domain_factor * B`.
#[allow(clippy::too_many_arguments)]
pub fn harnack_check(
    space: &WeightedGraphSpace,
    family: &HarnackFamily,
    ball: &Ball,
    q: f64,
    p: f64,
    form: HarnackForm,
    samples: usize,
    rng_seed: u64,
    domain_factor: f64,
    opts: &SolverOptions,
) -> Result<HarnackReport> {
    solver::check_exponent(p)?;
    if !(q > 0.0) {
        return Err(Error::InvalidParameter { name: "q", reason: "must be positive".into() });
    }
    if !(domain_factor >= 2.0) {
        return Err(Error::InvalidParameter { name: "domain_factor", reason: "must be at least 2".into() });
    }
    if !space.has_positions() {
        return Err(Error::NoPositions);
    }
    let r = ball.radius;
    let b = metric_ball(space, ball.center, r)?;
    let b2 = metric_ball(space, ball.center, 2.0 * r)?;
    let big_r = domain_factor * r;
    let omega = metric_ball(space, ball.center, big_r)?;
    if omega.len() == space.len() {
        return Err(Error::GeometryViolation("the domain ball covers the whole space".into()));
    }
    let c = space.position(ball.center).unwrap_or(&[]).to_vec();
    let d = c.len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut ratios = Vec::with_capacity(samples);
    let description = match family {
        HarnackFamily::Constant { value } => {
            if !(*value > 0.0) {
                return Err(Error::InvalidParameter { name: "value", reason: "must be positive".into() });
            }
            let u = ScalarField::constant(space.len(), *value);
            for _ in 0..samples {
                ratios.push(ratio(space, &u, &b, &b2, q, form));
            }
            alloc::format!("constant {value}")
        }
        HarnackFamily::Harmonic => {
            for _ in 0..samples {
                let a: Vec<(f64, f64)> =
                    (1..=3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))).collect();
                let c0 = a.iter().map(|x| x.0.abs()).sum::<f64>() + rng.gen_range(0.1..1.0);
                let f = ScalarField::from_fn(space, |x| {
                    if d >= 2 {
                        let theta = math::atan2(x[1] - c[1], x[0] - c[0]);
                        c0 + a
                            .iter()
                            .enumerate()
                            .map(|(k, (ak, ph))| ak * math::cos((k + 1) as f64 * theta + ph))
                            .sum::<f64>()
                    } else {
                        c0 + a[0].0 * (x[0] - c[0]) / big_r
                    }
                });
                let u = harmonic_solution(space, &omega, &f, p, opts)?;
                ratios.push(ratio(space, &u.field, &b, &b2, q, form));
            }
            String::from("harmonic extensions of random positive trigonometric data")
        }
        HarnackFamily::CapacitaryPotential { disk_radius, distance } => {
            for _ in 0..samples {
                let theta = rng.gen_range(0.0..2.0 * PI);
                let mut centre = c.clone();
                centre[0] += distance * big_r * math::cos(theta);
                if d >= 2 {
                    centre[1] += distance * big_r * math::sin(theta);
                }
                let e = Region::from_indices(
                    (0..space.len())
                        .filter(|&i| space.position(i).is_some_and(|x| math::dist(x, &centre) <= *disk_radius)),
                )
                .intersection(&omega);
                if e.is_empty() {
                    return Err(Error::GeometryViolation("the disk has no nodes inside the domain".into()));
                }
                if form == HarnackForm::Sub && !e.intersection(&b2).is_empty() {
                    return Err(Error::GeometryViolation("the disk meets 2B".into()));
                }
                let u = capacitary_potential(space, &e, &omega, p, opts)?;
                ratios.push(ratio(space, &u.field, &b, &b2, q, form));
            }
            alloc::format!("capacitary potentials of disks of radius {disk_radius} at {distance} R")
        }
    };
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(HarnackReport { q, p, form, radius: r, domain_radius: big_r, ratios, max_ratio, function_family: description })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, GridSpec};

    fn grid(h: f64) -> WeightedGraphSpace {
        build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, h)).unwrap()
    }

    #[test]
    fn constants_have_unit_ratio() {
        let s = grid(1.0 / 16.0);
        let ball = Ball::open(s.nearest_node(&[0.0, 0.0]).unwrap(), 0.1);
        for form in [HarnackForm::Sub, HarnackForm::Super] {
            let r = harnack_check(
                &s,
                &HarnackFamily::Constant { value: 2.0 },
                &ball,
                1.0,
                2.0,
                form,
                3,
                0,
                8.0,
                &Default::default(),
            )
            .unwrap();
            assert!(r.ratios.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn harmonic_family_is_bounded() {
        let s = grid(1.0 / 32.0);
        let ball = Ball::open(s.nearest_node(&[0.0, 0.0]).unwrap(), 0.1);
        let r = harnack_check(
            &s,
            &HarnackFamily::Harmonic,
            &ball,
            1.0,
            2.0,
            HarnackForm::Super,
            5,
            3,
            8.0,
            &Default::default(),
        )
        .unwrap();
        assert!(r.max_ratio >= 1.0 && r.max_ratio < 10.0, "{r:?}");
        let again = harnack_check(
            &s,
            &HarnackFamily::Harmonic,
            &ball,
            1.0,
            2.0,
            HarnackForm::Super,
            5,
            3,
            8.0,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn potential_family_super_form() {
        let s = grid(1.0 / 32.0);
        let ball = Ball::open(s.nearest_node(&[0.0, 0.0]).unwrap(), 0.1);
        let fam = HarnackFamily::CapacitaryPotential { disk_radius: 0.05, distance: 0.7 };
        let r = harnack_check(&s, &fam, &ball, 0.5, 2.0, HarnackForm::Super, 3, 1, 8.0, &Default::default()).unwrap();
        assert!(r.max_ratio.is_finite() && r.max_ratio >= 1.0);
    }
}
