//! Analytic descriptions of subsets of R^d.
//!
//! Node sets on a grid are always produced by evaluating one of these
//! predicates at node positions, which lets the same set be rediscovered on a
//! rescaled grid: a point `y` of a unit grid pulled back about `x0` with factor
//! `s` is tested as `x0 + s * y`.

use alloc::boxed::Box;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;

/// Width profile of a cusp as a function of the distance `s > 0` from its tip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CuspWidth {
    /// `exp(-rate / s)`
    Exponential { rate: f64 },
    /// `coef * s^exponent`
    Power { coef: f64, exponent: f64 },
}

impl CuspWidth {
    pub fn at(&self, s: f64) -> f64 {
        match *self {
            CuspWidth::Exponential { rate } => math::exp(-rate / s),
            CuspWidth::Power { coef, exponent } => coef * math::powf(s, exponent),
        }
    }
}

/// One inequality of a custom set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Constraint {
    /// `normal . x <= offset`
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// `|x - center| <= radius`
    InBall { center: Vec<f64>, radius: f64 },
    /// `|x - center| > radius`
    OutBall { center: Vec<f64>, radius: f64 },
    /// polar angle about `apex` (2-D) in `[min, max]`, apex excluded
    PolarAngle { apex: Vec<f64>, min: f64, max: f64 },
}

impl Constraint {
    fn holds(&self, x: &[f64]) -> bool {
        match self {
            Constraint::HalfSpace { normal, offset } => {
                normal.iter().zip(x).map(|(n, v)| n * v).sum::<f64>() <= *offset
            }
            Constraint::InBall { center, radius } => math::dist(x, center) <= *radius,
            Constraint::OutBall { center, radius } => math::dist(x, center) > *radius,
            Constraint::PolarAngle { apex, min, max } => in_angle(x, apex, *min, *max - *min),
        }
    }
}

fn in_angle(x: &[f64], apex: &[f64], start: f64, width: f64) -> bool {
    if x.len() < 2 || apex.len() < 2 {
        return false;
    }
    let dx = x[0] - apex[0];
    let dy = x[1] - apex[1];
    if dx == 0.0 && dy == 0.0 {
        return false;
    }
    let tau = 2.0 * core::f64::consts::PI;
    let mut theta = math::atan2(dy, dx) - start;
    theta -= tau * math::floor(theta / tau);
    // points on the closing ray land at 2*pi after reduction
    theta <= width + 1e-12 || (tau - theta) <= 1e-12
}

/// A subset of R^d described by a predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalyticSet {
    Empty,
    /// Closed planar sector: polar angle about `apex` in `[start, start + angle]`.
    /// The apex itself is excluded.
    Sector {
        apex: Vec<f64>,
        start: f64,
        angle: f64,
    },
    /// `{tip + (s, t) : 0 < s < length, |t| <= width(s)}` in the plane.
    Cusp {
        tip: Vec<f64>,
        length: f64,
        width: CuspWidth,
    },
    /// Ball `|x - center| <= radius` (closed) or `< radius` (open).
    Ball {
        center: Vec<f64>,
        radius: f64,
        closed: bool,
    },
    /// Union of closed balls given as `(center, radius)`.
    DiskUnion {
        disks: Vec<(Vec<f64>, f64)>,
    },
    /// Closed balls at distances `first * ratio^k` from `base` along
    /// `direction`, with radii `d_k * exp(-decay * 2^k)`, `k < count`.
    DiskChain {
        base: Vec<f64>,
        direction: Vec<f64>,
        first: f64,
        ratio: f64,
        decay: f64,
        count: usize,
    },
    /// `inner <= |x - center| <= outer`.
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// A single point; on a grid it selects the nearest node.
    Singleton {
        point: Vec<f64>,
    },
    /// Intersection of inequalities.
    Inequalities {
        constraints: Vec<Constraint>,
        #[serde(default = "default_true")]
        dilatable: bool,
    },
    Union {
        sets: Vec<AnalyticSet>,
    },
    /// `set ∩ B(center, radius)` with the open ball.
    Restrict {
        set: Box<AnalyticSet>,
        center: Vec<f64>,
        radius: f64,
    },
}

fn default_true() -> bool {
    true
}

impl AnalyticSet {
    /// Exponential cusp `{0 < x < 1, |y| <= exp(-1/x)}` with tip at the origin.
    pub fn exponential_cusp() -> Self {
        AnalyticSet::Cusp { tip: alloc::vec![0.0, 0.0], length: 1.0, width: CuspWidth::Exponential { rate: 1.0 } }
    }

    /// Sector of opening `angle` with apex at the origin, starting at angle 0.
    pub fn sector(angle: f64) -> Self {
        AnalyticSet::Sector { apex: alloc::vec![0.0, 0.0], start: 0.0, angle }
    }

    /// Predicate membership. Singletons are never hit here; see [`Self::atoms`].
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            AnalyticSet::Empty | AnalyticSet::Singleton { .. } => false,
            AnalyticSet::Sector { apex, start, angle } => in_angle(x, apex, *start, *angle),
            AnalyticSet::Cusp { tip, length, width } => {
                if x.len() < 2 {
                    return false;
                }
                let s = x[0] - tip[0];
                let t = x[1] - tip[1];
                s > 0.0 && s < *length && t.abs() <= width.at(s)
            }
            AnalyticSet::Ball { center, radius, closed } => {
                let d = math::dist(x, center);
                if *closed {
                    d <= *radius
                } else {
                    d < *radius
                }
            }
            AnalyticSet::DiskUnion { disks } => disks.iter().any(|(c, r)| math::dist(x, c) <= *r),
            AnalyticSet::DiskChain { .. } => self.chain_disks().iter().any(|(c, r)| math::dist(x, c) <= *r),
            AnalyticSet::Annulus { center, inner, outer } => {
                let d = math::dist(x, center);
                d >= *inner && d <= *outer
            }
            AnalyticSet::Inequalities { constraints, .. } => constraints.iter().all(|c| c.holds(x)),
            AnalyticSet::Union { sets } => sets.iter().any(|s| s.contains(x)),
            AnalyticSet::Restrict { set, center, radius } => math::dist(x, center) < *radius && set.contains(x),
        }
    }

    /// Isolated points of the set (singletons that survive restrictions).
    pub fn atoms(&self) -> Vec<Vec<f64>> {
        match self {
            AnalyticSet::Singleton { point } => alloc::vec![point.clone()],
            AnalyticSet::Union { sets } => sets.iter().flat_map(|s| s.atoms()).collect(),
            AnalyticSet::Restrict { set, center, radius } => {
                set.atoms().into_iter().filter(|p| math::dist(p, center) < *radius).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Whether the set can be re-evaluated on dilated copies of a grid.
    pub fn is_dilatable(&self) -> bool {
        match self {
            AnalyticSet::Inequalities { dilatable, .. } => *dilatable,
            AnalyticSet::Union { sets } => sets.iter().all(|s| s.is_dilatable()),
            AnalyticSet::Restrict { set, .. } => set.is_dilatable(),
            _ => true,
        }
    }

    /// Centers and radii of a [`AnalyticSet::DiskChain`]; empty otherwise.
    pub fn chain_disks(&self) -> Vec<(Vec<f64>, f64)> {
        let AnalyticSet::DiskChain { base, direction, first, ratio, decay, count } = self else {
            return Vec::new();
        };
        let norm = math::norm(direction);
        let mut out = Vec::with_capacity(*count);
        let mut d = *first;
        let mut level = 1.0;
        for _ in 0..*count {
            let c: Vec<f64> = base.iter().zip(direction).map(|(b, v)| b + d * v / norm).collect();
            out.push((c, d * math::exp(-decay * level)));
            d *= ratio;
            level *= 2.0;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn sector_membership() {
        let s = AnalyticSet::sector(core::f64::consts::PI / 6.0);
        assert!(s.contains(&[1.0, 0.0]));
        assert!(s.contains(&[1.0, 0.5]));
        assert!(!s.contains(&[1.0, 0.6]));
        assert!(!s.contains(&[1.0, -0.01]));
        assert!(!s.contains(&[0.0, 0.0]));
    }

    #[test]
    fn cusp_keeps_axis_and_excludes_tip() {
        let c = AnalyticSet::exponential_cusp();
        assert!(c.contains(&[0.01, 0.0]));
        assert!(!c.contains(&[0.0, 0.0]));
        assert!(c.contains(&[0.25, 0.0078125]));
        assert!(!c.contains(&[0.25, 0.02]));
        assert!(!c.contains(&[1.0, 0.0]));
    }

    #[test]
    fn restrict_filters_atoms() {
        let s = AnalyticSet::Restrict {
            set: Box::new(AnalyticSet::Union {
                sets: vec![
                    AnalyticSet::Singleton { point: vec![0.1, 0.0] },
                    AnalyticSet::Singleton { point: vec![0.9, 0.0] },
                ],
            }),
            center: vec![0.0, 0.0],
            radius: 0.5,
        };
        assert_eq!(s.atoms(), vec![vec![0.1, 0.0]]);
    }

    #[test]
    fn chain_radii_decay_doubly_exponentially() {
        let c = AnalyticSet::DiskChain {
            base: vec![0.0, 0.0],
            direction: vec![1.0, 0.0],
            first: 0.5,
            ratio: 0.5,
            decay: 1.0,
            count: 3,
        };
        let disks = c.chain_disks();
        assert_eq!(disks.len(), 3);
        assert!((disks[1].0[0] - 0.25).abs() < 1e-15);
        assert!((disks[2].1 - 0.125 * libm::exp(-4.0)).abs() < 1e-15);
    }
}
