use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Region, WeightedGraphSpace};
use crate::descriptor::AnalyticSet;
use crate::error::{Error, Result};
use crate::math;

/// Per-center distance vectors, computed on first use.
pub struct DistanceCache<'a> {
    space: &'a WeightedGraphSpace,
    rows: BTreeMap<usize, Vec<f64>>,
}

impl<'a> DistanceCache<'a> {
    pub fn new(space: &'a WeightedGraphSpace) -> Self {
        DistanceCache { space, rows: BTreeMap::new() }
    }

    pub fn get(&mut self, center: usize) -> &[f64] {
        let space = self.space;
        self.rows.entry(center).or_insert_with(|| space.distances_from(center))
    }
}

fn ball_from_distances(dist: &[f64], r: f64, closed: bool) -> Region {
    Region::from_indices(dist.iter().enumerate().filter(|(_, &d)| if closed { d <= r } else { d < r }).map(|(i, _)| i))
}

/// Open ball `{x : d(x, center) < r}`.
pub fn metric_ball(space: &WeightedGraphSpace, center: usize, r: f64) -> Result<Region> {
    check_ball(space, center, r)?;
    Ok(ball_from_distances(&space.distances_from(center), r, false))
}

/// Closed ball `{x : d(x, center) <= r}`.
pub fn metric_ball_closed(space: &WeightedGraphSpace, center: usize, r: f64) -> Result<Region> {
    check_ball(space, center, r)?;
    Ok(ball_from_distances(&space.distances_from(center), r, true))
}

fn check_ball(space: &WeightedGraphSpace, center: usize, r: f64) -> Result<()> {
    if center >= space.len() {
        return Err(Error::UnknownNode(center as u64));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter { name: "radius", reason: "must be positive".into() });
    }
    Ok(())
}

/// Nodes whose positions satisfy the descriptor, plus the nearest node of
/// every isolated point.
pub fn region_from_descriptor(space: &WeightedGraphSpace, descriptor: &AnalyticSet) -> Result<Region> {
    let origin = alloc::vec![0.0; space.position_dim()];
    pulled_back(space, descriptor, &origin, 1.0).map(|r| r.with_descriptor(descriptor.clone()))
}

/// Evaluates `descriptor` at `x0 + scale * y` for every node position `y`.
pub(crate) fn pulled_back(
    space: &WeightedGraphSpace,
    descriptor: &AnalyticSet,
    x0: &[f64],
    scale: f64,
) -> Result<Region> {
    if !space.has_positions() {
        return Err(Error::NoPositions);
    }
    let d = space.position_dim();
    let mut x = alloc::vec![0.0; d];
    let mut nodes = Vec::new();
    for i in 0..space.len() {
        let y = space.position(i).unwrap_or(&[]);
        for k in 0..d {
            x[k] = x0.get(k).copied().unwrap_or(0.0) + scale * y[k];
        }
        if descriptor.contains(&x) {
            nodes.push(i);
        }
    }
    for atom in descriptor.atoms() {
        let y: Vec<f64> =
            (0..d).map(|k| (atom.get(k).copied().unwrap_or(0.0) - x0.get(k).copied().unwrap_or(0.0)) / scale).collect();
        let hit = match space.grid() {
            Some(g) => g.nearest(&y),
            None => Some(space.nearest_node(&y)?),
        };
        if let Some(i) = hit {
            nodes.push(i);
        }
    }
    Ok(Region::from_indices(nodes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    /// Largest sampled `μ(2B) / μ(B)`.
    pub doubling_constant_empirical: f64,
    /// Largest sampled Poincaré quotient.
    pub poincare_constant_empirical: f64,
    pub sample_count: usize,
    pub failures: Vec<String>,
}

/// Spot checks of the doubling and p-Poincaré constants on random balls.
///
/// The Poincaré quotient is `⨍_B |f - f_B| / (2r (⨍_{λB} g^p)^{1/p})` with `g`
/// the edge difference quotient; a field constant on the ball scores 0.
pub fn geometry_report(
    space: &WeightedGraphSpace,
    sample_count: usize,
    rng_seed: u64,
    p: f64,
) -> Result<GeometryReport> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter { name: "sample_count", reason: "must be at least 1".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = space.len();
    let min_len = space.edges().iter().map(|e| e.length).fold(f64::INFINITY, f64::min);
    let r_lo = 2.0 * min_len;
    let r_hi = space.diameter() / 4.0;
    let lambda = space.meta().poincare_dilation;
    let mut report = GeometryReport {
        doubling_constant_empirical: 0.0,
        poincare_constant_empirical: 0.0,
        sample_count,
        failures: Vec::new(),
    };
    if !(r_hi > r_lo) {
        report.failures.push(format!("space too small: radius range [{r_lo}, {r_hi}] is empty"));
        return Ok(report);
    }
    let mut cache = DistanceCache::new(space);
    let pos_dim = space.position_dim();
    for s in 0..sample_count {
        let c = rng.gen_range(0..n);
        let r = rng.gen_range(r_lo..r_hi);
        let dist = cache.get(c).to_vec();
        let mu_of = |rad: f64| -> f64 { dist.iter().zip(space.mu()).filter(|(&d, _)| d < rad).map(|(_, &m)| m).sum() };
        let m1 = mu_of(r);
        let m2 = mu_of(2.0 * r);
        if m1 > 0.0 {
            report.doubling_constant_empirical = report.doubling_constant_empirical.max(m2 / m1);
        } else {
            report.failures.push(format!("sample {s}: ball of zero measure"));
            continue;
        }
        // test fields on this ball
        let other = rng.gen_range(0..n);
        let bump_center = rng.gen_range(0..n);
        let bump_width = rng.gen_range(0.25..1.0) * r;
        let mut fields: Vec<Vec<f64>> = Vec::new();
        for k in 0..pos_dim {
            fields.push((0..n).map(|i| space.position(i).map_or(0.0, |x| x[k])).collect());
        }
        fields.push(cache.get(other).to_vec());
        let bump_dist = cache.get(bump_center).to_vec();
        fields.push(bump_dist.iter().map(|d| math::exp(-d * d / (2.0 * bump_width * bump_width))).collect());
        for f in &fields {
            let q = poincare_quotient(space, &dist, r, lambda, p, f);
            if q.is_finite() {
                report.poincare_constant_empirical = report.poincare_constant_empirical.max(q);
            } else {
                report.failures.push(format!("sample {s}: zero gradient with nonzero oscillation"));
            }
        }
    }
    Ok(report)
}

fn poincare_quotient(space: &WeightedGraphSpace, dist: &[f64], r: f64, lambda: f64, p: f64, f: &[f64]) -> f64 {
    let mu = space.mu();
    let (mut m, mut fm) = (0.0, 0.0);
    for i in 0..f.len() {
        if dist[i] < r {
            m += mu[i];
            fm += mu[i] * f[i];
        }
    }
    let mean = fm / m;
    let osc: f64 = (0..f.len()).filter(|&i| dist[i] < r).map(|i| mu[i] * (f[i] - mean).abs()).sum::<f64>() / m;
    if osc == 0.0 {
        return 0.0;
    }
    let big = lambda * r;
    let m_big: f64 = (0..f.len()).filter(|&i| dist[i] < big).map(|i| mu[i]).sum();
    let grad: f64 = space
        .edges()
        .iter()
        .filter(|e| dist[e.a] < big && dist[e.b] < big)
        .map(|e| e.conductance * math::powf((f[e.a] - f[e.b]).abs() / e.length, p))
        .sum();
    let rhs = 2.0 * r * math::powf(grad / m_big, 1.0 / p);
    if rhs == 0.0 {
        return f64::INFINITY;
    }
    osc / rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, GridSpec};
    use alloc::vec;

    #[test]
    fn ball_examples_on_line() {
        let s = build_grid(&GridSpec::cube(&[0.0], 1.0, 0.5)).unwrap();
        let c = s.nearest_node(&[0.0]).unwrap();
        let b = metric_ball(&s, c, 0.6).unwrap();
        let xs: Vec<f64> = b.nodes().iter().map(|&i| s.position(i).unwrap()[0]).collect();
        assert_eq!(xs, vec![-0.5, 0.0, 0.5]);
        assert_eq!(metric_ball(&s, c, 0.1).unwrap().nodes(), &[c]);
        assert_eq!(metric_ball(&s, c, 10.0).unwrap().len(), 5);
        // open vs closed at exactly one spacing
        assert_eq!(metric_ball(&s, c, 0.5).unwrap().len(), 1);
        assert_eq!(metric_ball_closed(&s, c, 0.5).unwrap().len(), 3);
    }

    #[test]
    fn singleton_selects_nearest_node() {
        let s = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 0.25)).unwrap();
        let r = region_from_descriptor(&s, &AnalyticSet::Singleton { point: vec![0.3, -0.1] }).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(s.position(r.nodes()[0]).unwrap(), &[0.25, 0.0]);
    }

    #[test]
    fn cusp_rows_at_quarter() {
        let h = 1.0 / 128.0;
        let s = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, h)).unwrap();
        let r = region_from_descriptor(&s, &AnalyticSet::exponential_cusp()).unwrap();
        let at_quarter: Vec<f64> = r
            .nodes()
            .iter()
            .map(|&i| s.position(i).unwrap())
            .filter(|x| (x[0] - 0.25).abs() < 1e-12)
            .map(|x| x[1])
            .collect();
        // exp(-4) ≈ 0.0183 admits |y| ∈ {0, h, 2h}
        let expected: Vec<f64> = (-2..=2).map(|k| k as f64 * h).collect();
        assert_eq!(at_quarter, expected);
    }

    #[test]
    fn descriptor_needs_positions() {
        let s = WeightedGraphSpace::from_parts(
            vec![0, 1],
            vec![1.0, 1.0],
            None,
            &[crate::space::EdgeSpec { a: 0, b: 1, length: 1.0, conductance: 1.0 }],
            0,
            Default::default(),
        )
        .unwrap();
        assert_eq!(region_from_descriptor(&s, &AnalyticSet::Empty).unwrap_err(), Error::NoPositions);
    }

    #[test]
    fn doubling_on_unweighted_grids() {
        let line = build_grid(&GridSpec::cube(&[0.0], 1.0, 1.0 / 256.0)).unwrap();
        let rep = geometry_report(&line, 40, 7, 2.0).unwrap();
        assert!(rep.doubling_constant_empirical <= 2.0 + 0.05, "{rep:?}");
        let sq = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 1.0 / 64.0)).unwrap();
        let rep2 = geometry_report(&sq, 30, 7, 2.0).unwrap();
        assert!(rep2.doubling_constant_empirical >= 1.0);
        assert!(rep2.doubling_constant_empirical <= 4.0 * 1.1, "{rep2:?}");
        assert!(rep2.poincare_constant_empirical >= 0.0);
    }

    #[test]
    fn geometry_report_is_deterministic() {
        let sq = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 1.0 / 16.0)).unwrap();
        assert_eq!(geometry_report(&sq, 10, 3, 2.0).unwrap(), geometry_report(&sq, 10, 3, 2.0).unwrap());
    }

    #[test]
    fn constant_field_scores_zero() {
        let sq = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 0.25)).unwrap();
        let c = sq.nearest_node(&[0.0, 0.0]).unwrap();
        let d = sq.distances_from(c);
        let f = vec![3.0; sq.len()];
        assert_eq!(poincare_quotient(&sq, &d, 0.6, 1.0, 2.0, &f), 0.0);
    }
}
