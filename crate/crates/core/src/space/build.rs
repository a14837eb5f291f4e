use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::{Edge, GridLayout, Provenance, SpaceMeta, WeightedGraphSpace};
use crate::error::{Error, Result};
use crate::math;

/// Default hard cap on the number of nodes a builder may allocate.
pub const DEFAULT_NODE_CAP: usize = 1 << 22;

/// Axis-aligned grid on `[lo_k, hi_k]` with spacing `h` and density `|x|^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub h: f64,
    pub weight_exponent: f64,
    pub node_cap: usize,
}

impl GridSpec {
    /// Cube `[-half, half]^dim` around `center`.
    pub fn cube(center: &[f64], half: f64, h: f64) -> Self {
        GridSpec {
            dim: center.len(),
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
            h,
            weight_exponent: 0.0,
            node_cap: DEFAULT_NODE_CAP,
        }
    }

    pub fn with_weight(mut self, alpha: f64) -> Self {
        self.weight_exponent = alpha;
        self
    }
}

/// Radial path graph for radially symmetric problems in R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpec {
    pub n: usize,
    pub rmin: f64,
    pub rmax: f64,
    pub h: f64,
    pub weight_exponent: f64,
    pub node_cap: usize,
}

fn steps(len: f64, h: f64, name: &'static str) -> Result<usize> {
    let t = len / h;
    let r = math::round(t);
    if (t - r).abs() > 1e-6 * r.max(1.0) {
        return Err(Error::InvalidParameter { name, reason: "spacing must divide the extent".to_string() });
    }
    Ok(r as usize)
}

/// Density `|x|^alpha`, replaced by its average over a ball of volume `h^d`
/// at the origin where the pointwise value is 0 or infinite.
fn density(x: &[f64], alpha: f64, h: f64, dim: usize) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let r = math::norm(x);
    if r > 1e-12 * h {
        return math::powf(r, alpha);
    }
    let d = dim as f64;
    let rho = math::powf(math::powf(h, d) / math::ball_volume(dim), 1.0 / d);
    d / (d + alpha) * math::powf(rho, alpha)
}

/// Builds an axis-aligned grid graph.
///
/// Node measures use half cells on the boundary so the total measure matches
/// the continuum measure of the box; edge conductances carry the mean density
/// of the endpoints times the dual cell volume `h^dim` (halved per boundary
/// direction the edge runs along).
pub fn build_grid(spec: &GridSpec) -> Result<WeightedGraphSpace> {
    let dim = spec.dim;
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidParameter { name: "dim", reason: "must be 1, 2 or 3".to_string() });
    }
    if spec.lo.len() != dim || spec.hi.len() != dim {
        return Err(Error::InvalidParameter { name: "extent", reason: "one interval per axis required".to_string() });
    }
    if !(spec.h > 0.0) || !spec.h.is_finite() {
        return Err(Error::InvalidParameter { name: "h", reason: "must be positive".to_string() });
    }
    for k in 0..dim {
        if !(spec.hi[k] > spec.lo[k]) {
            return Err(Error::DegenerateExtent { axis: k });
        }
    }
    let alpha = spec.weight_exponent;
    if !(alpha > -(dim as f64)) {
        return Err(Error::WeightNotIntegrable { alpha, dim });
    }
    let h = spec.h;
    let mut counts = Vec::with_capacity(dim);
    let mut total: usize = 1;
    for k in 0..dim {
        let c = steps(spec.hi[k] - spec.lo[k], h, "h")? + 1;
        counts.push(c);
        total = total.saturating_mul(c);
    }
    if total > spec.node_cap {
        return Err(Error::NodeBudgetExceeded { nodes: total, cap: spec.node_cap });
    }
    let mut strides = vec![1usize; dim];
    for k in 1..dim {
        strides[k] = strides[k - 1] * counts[k - 1];
    }
    let cell = math::powf(h, dim as f64);
    let mut positions = vec![0.0; total * dim];
    let mut frac = vec![[1.0f64; 3]; total];
    let mut omega = vec![0.0; total];
    let mut mu = vec![0.0; total];
    for i in 0..total {
        let mut rem = i;
        for k in 0..dim {
            let m = rem % counts[k];
            rem /= counts[k];
            positions[i * dim + k] = spec.lo[k] + m as f64 * h;
            if m == 0 || m == counts[k] - 1 {
                frac[i][k] = 0.5;
            }
        }
        omega[i] = density(&positions[i * dim..(i + 1) * dim], alpha, h, dim);
        mu[i] = omega[i] * frac[i][..dim].iter().product::<f64>() * cell;
    }
    let mut edges = Vec::new();
    for i in 0..total {
        for k in 0..dim {
            let m = (i / strides[k]) % counts[k];
            if m + 1 < counts[k] {
                let j = i + strides[k];
                let mut w = 0.5 * (omega[i] + omega[j]) * cell;
                for (l, f) in frac[i][..dim].iter().enumerate() {
                    if l != k {
                        w *= f;
                    }
                }
                edges.push(Edge { a: i, b: j, length: h, conductance: w });
            }
        }
    }
    let mut params = vec![("dim".to_string(), dim as f64), ("h".to_string(), h), ("alpha".to_string(), alpha)];
    for k in 0..dim {
        params.push((alloc::format!("lo{k}"), spec.lo[k]));
        params.push((alloc::format!("hi{k}"), spec.hi[k]));
    }
    let meta = SpaceMeta {
        spacing: Some(h),
        weight_exponent: alpha,
        poincare_dilation: 1.0,
        provenance: Provenance { builder: "grid".to_string(), params },
    };
    let layout = GridLayout { lo: spec.lo.clone(), h, counts };
    WeightedGraphSpace::assemble((0..total as u64).collect(), mu, Some(positions), dim, edges, dim, meta, Some(layout))
}

/// Builds the path graph `r_i = rmin + i h` carrying the radial measure of R^n.
///
/// Node measure `ω_{n-1} r^{n-1+α} h` (half cells at the ends, exact shell
/// integral at `r = 0`); edge conductance `ω_{n-1} r̄^{n-1+α} h` at the midpoint
/// radius, so that radial p-energies match their R^n counterparts.
pub fn build_radial(spec: &RadialSpec) -> Result<WeightedGraphSpace> {
    if spec.n == 0 {
        return Err(Error::InvalidParameter { name: "n", reason: "must be at least 1".to_string() });
    }
    if !(spec.rmin >= 0.0) {
        return Err(Error::InvalidParameter { name: "rmin", reason: "must be nonnegative".to_string() });
    }
    if !(spec.rmax > spec.rmin) {
        return Err(Error::DegenerateExtent { axis: 0 });
    }
    if !(spec.h > 0.0) {
        return Err(Error::InvalidParameter { name: "h", reason: "must be positive".to_string() });
    }
    let n = spec.n as f64;
    let alpha = spec.weight_exponent;
    if !(alpha > -n) {
        return Err(Error::WeightNotIntegrable { alpha, dim: spec.n });
    }
    let intervals = steps(spec.rmax - spec.rmin, spec.h, "h")?;
    if intervals == 0 {
        return Err(Error::EmptyGrid);
    }
    let count = intervals + 1;
    if count > spec.node_cap {
        return Err(Error::NodeBudgetExceeded { nodes: count, cap: spec.node_cap });
    }
    let h = spec.h;
    let omega = math::sphere_area(spec.n);
    let power = n - 1.0 + alpha;
    let radii: Vec<f64> = (0..count).map(|i| spec.rmin + i as f64 * h).collect();
    let mu: Vec<f64> = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let half = i == 0 || i == count - 1;
            if r == 0.0 && power != 0.0 {
                omega * math::powf(h / 2.0, n + alpha) / (n + alpha)
            } else {
                omega * math::powf(r, power) * h * if half { 0.5 } else { 1.0 }
            }
        })
        .collect();
    let edges: Vec<Edge> = (0..intervals)
        .map(|i| {
            let mid = 0.5 * (radii[i] + radii[i + 1]);
            Edge { a: i, b: i + 1, length: h, conductance: omega * math::powf(mid, power) * h }
        })
        .collect();
    let meta = SpaceMeta {
        spacing: Some(h),
        weight_exponent: alpha,
        poincare_dilation: 1.0,
        provenance: Provenance {
            builder: "radial".to_string(),
            params: vec![
                ("n".to_string(), n),
                ("rmin".to_string(), spec.rmin),
                ("rmax".to_string(), spec.rmax),
                ("h".to_string(), h),
                ("alpha".to_string(), alpha),
            ],
        },
    };
    let layout = GridLayout { lo: vec![spec.rmin], h, counts: vec![count] };
    WeightedGraphSpace::assemble((0..count as u64).collect(), mu, Some(radii), 1, edges, 1, meta, Some(layout))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_grid_uses_half_cells() {
        let s = build_grid(&GridSpec::cube(&[0.0], 1.0, 0.5)).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.edges().len(), 4);
        assert_eq!(s.mu(), &[0.25, 0.5, 0.5, 0.5, 0.25]);
        assert!((s.total_measure() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn three_by_three_lattice() {
        let s = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 1.0)).unwrap();
        assert_eq!(s.len(), 9);
        assert_eq!(s.edges().len(), 12);
        assert!((s.total_measure() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn fine_grid_node_count() {
        let s = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 1.0 / 128.0)).unwrap();
        assert_eq!(s.len(), 257 * 257);
    }

    #[test]
    fn grid_errors() {
        let mut g = GridSpec::cube(&[0.0, 0.0], 1.0, 0.5);
        g.hi[1] = -1.0;
        assert_eq!(build_grid(&g).unwrap_err(), Error::DegenerateExtent { axis: 1 });
        let g = GridSpec::cube(&[0.0, 0.0], 1.0, 0.5).with_weight(-2.0);
        assert!(matches!(build_grid(&g), Err(Error::WeightNotIntegrable { .. })));
        let mut g = GridSpec::cube(&[0.0, 0.0], 1.0, 1.0 / 64.0);
        g.node_cap = 1000;
        assert!(matches!(build_grid(&g), Err(Error::NodeBudgetExceeded { nodes: 16641, .. })));
        let g = GridSpec::cube(&[0.0], 1.0, 0.3);
        assert!(matches!(build_grid(&g), Err(Error::InvalidParameter { name: "h", .. })));
    }

    #[test]
    fn weighted_grid_stays_positive_at_origin() {
        for alpha in [-1.0, 1.5] {
            let s = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 0.25).with_weight(alpha)).unwrap();
            assert!(s.mu().iter().all(|&m| m > 0.0 && m.is_finite()));
        }
    }

    #[test]
    fn radial_path_measures() {
        let s = build_radial(&RadialSpec {
            n: 1,
            rmin: 0.0,
            rmax: 1.0,
            h: 0.25,
            weight_exponent: 0.0,
            node_cap: DEFAULT_NODE_CAP,
        })
        .unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.mu(), &[0.25, 0.5, 0.5, 0.5, 0.25]);
        assert!(matches!(
            build_radial(&RadialSpec { n: 2, rmin: -0.1, rmax: 1.0, h: 0.1, weight_exponent: 0.0, node_cap: 100 }),
            Err(Error::InvalidParameter { name: "rmin", .. })
        ));
    }
}
