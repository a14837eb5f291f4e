use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{radius, Local};
use crate::capacity::{capacitary_potential, variational_capacity};
use crate::descriptor::AnalyticSet;
use crate::error::{Error, Result};
use crate::math;
use crate::solver::{self, SolverOptions};
use crate::space::Region;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub x0: Vec<f64>,
    /// Radius of `B = B_0`.
    pub r: f64,
    pub sigma: f64,
    pub p: f64,
    /// Number of scales `j = 0..J-1`.
    pub scales: usize,
    pub resolution: usize,
    /// Fixed `C'`; fitted on the instance when absent.
    #[serde(default)]
    pub c_prime: Option<f64>,
    /// Largest fraction of the set's nodes the gap enforcement may remove.
    pub max_removed_fraction: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl BoundsConfig {
    pub fn new(x0: Vec<f64>, p: f64) -> Self {
        BoundsConfig {
            x0,
            r: 1.0,
            sigma: 8.0,
            p,
            scales: 12,
            resolution: 256,
            c_prime: None,
            max_removed_fraction: 0.5,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// Nodes removed from the set to clear the annuli `2B_j \ ½B_j`.
    pub removed_nodes: usize,
    pub kept_nodes: usize,
    pub quotients: Vec<f64>,
    pub a: Vec<f64>,
    /// `b_k = prod_{j<k} (1 - a_j)`, `k = 1..J`.
    pub upper_products: Vec<f64>,
    /// `b'_k = prod_{j<k} (1 - c a_j)`.
    pub lower_products: Vec<f64>,
    pub u_at_x0: f64,
    pub fitted_cprime: f64,
    pub fitted_c: f64,
    pub wolff_sum: f64,
    pub wolff_holds: bool,
    pub bounds_hold: bool,
    /// `1 - b_k <= sum_{j<k} a_j` for every `k`.
    pub identity_holds: bool,
    pub converged: bool,
}

fn upper_bound(q: &[f64], cp: f64) -> f64 {
    1.0 - q.iter().map(|&x| 1.0 - (cp * x).min(1.0)).product::<f64>()
}

fn lower_bound(a: &[f64], c: f64) -> f64 {
    1.0 - a.iter().map(|&x| 1.0 - c * x).product::<f64>()
}

/// Evaluates the two-sided product bounds and the Wolff sum for the
/// capacitary potential of `E` in `B(x0, r)`.
pub fn potential_product_bounds(descriptor: &AnalyticSet, cfg: &BoundsConfig) -> Result<BoundsReport> {
    solver::check_exponent(cfg.p)?;
    if !(cfg.sigma > 4.0) {
        return Err(Error::InvalidParameter { name: "sigma", reason: "gap annuli overlap unless sigma > 4".into() });
    }
    if cfg.scales == 0 {
        return Err(Error::InvalidParameter { name: "scales", reason: "must be at least 1".into() });
    }
    let local = Local::new(descriptor, &cfg.x0, cfg.r, cfg.resolution)?;
    // E ⊂ ½B minus every closed-open annulus [½ r_j, 2 r_j)
    let in_gap = |d: f64| {
        if d == 0.0 {
            return false;
        }
        let mut j = 0;
        loop {
            let rj = radius(cfg.r, cfg.sigma, j);
            if d >= 2.0 * rj {
                return false;
            }
            if d >= 0.5 * rj {
                return true;
            }
            j += 1;
        }
    };
    let original = local.set.clone();
    let kept = Region::from_indices(
        original.nodes().iter().copied().filter(|&i| local.dist[i] < 0.5 * cfg.r && !in_gap(local.dist[i])),
    );
    let removed = original.len() - kept.len();
    if !original.is_empty() && removed as f64 > cfg.max_removed_fraction * original.len() as f64 {
        return Err(Error::HypothesisViolated(alloc::format!(
            "gap enforcement removes {removed} of {} nodes",
            original.len()
        )));
    }
    let mut quotients = Vec::with_capacity(cfg.scales);
    let mut converged = true;
    for j in 0..cfg.scales {
        let rj = radius(cfg.r, cfg.sigma, j);
        let rj1 = radius(cfg.r, cfg.sigma, j + 1);
        if rj1 < local.h {
            break;
        }
        let bj = local.ball(rj);
        let piece = kept.intersection(&local.ball(0.5 * rj));
        if piece.is_empty() {
            quotients.push(0.0);
            continue;
        }
        let num = variational_capacity(&local.space, &piece, &bj, cfg.p, &cfg.solver)?;
        let den = variational_capacity(&local.space, &local.ball(rj1), &bj, cfg.p, &cfg.solver)?;
        converged &= num.diagnostics.converged && den.diagnostics.converged;
        quotients.push(math::powf(num.value / den.value, 1.0 / (cfg.p - 1.0)));
    }
    if quotients.is_empty() {
        return Err(Error::ScaleUnderflow);
    }
    let pot = capacitary_potential(&local.space, &kept, &local.ball(cfg.r), cfg.p, &cfg.solver)?;
    converged &= pot.converged;
    let u0 = pot.field.get(local.center);
    let qmax = quotients.iter().copied().fold(0.0, f64::max);

    // smallest C' with upper_bound >= u0; the bound is nondecreasing in C'
    let cprime = match cfg.c_prime {
        Some(c) => c,
        None if u0 <= 0.0 || qmax == 0.0 => 0.0,
        None => {
            let (mut lo, mut hi) = (0.0, 1.0 / qmax);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if upper_bound(&quotients, mid) >= u0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    };
    let a: Vec<f64> = quotients.iter().map(|&q| (cprime * q).min(1.0)).collect();
    // largest c in (0, 1] with lower_bound <= u0; the bound is nondecreasing in c
    let c = if lower_bound(&a, 1.0) <= u0 {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if lower_bound(&a, mid) <= u0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let mut upper_products = Vec::with_capacity(a.len());
    let mut lower_products = Vec::with_capacity(a.len());
    let (mut b, mut bp, mut partial) = (1.0, 1.0, 0.0);
    let mut identity_holds = true;
    for &x in &a {
        b *= 1.0 - x;
        bp *= 1.0 - c * x;
        partial += x;
        upper_products.push(b);
        lower_products.push(bp);
        identity_holds &= 1.0 - b <= partial + 1e-15;
    }
    let slack = 1e-9;
    let upper = 1.0 - b;
    let lower = 1.0 - bp;
    let wolff_sum: f64 = quotients.iter().sum();
    Ok(BoundsReport {
        removed_nodes: removed,
        kept_nodes: kept.len(),
        quotients,
        a,
        upper_products,
        lower_products,
        u_at_x0: u0,
        fitted_cprime: cprime,
        fitted_c: c,
        wolff_sum,
        wolff_holds: u0 <= cprime * wolff_sum + slack,
        bounds_hold: lower <= u0 + slack && u0 <= upper + slack,
        identity_holds,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg() -> BoundsConfig {
        BoundsConfig { resolution: 64, scales: 3, ..BoundsConfig::new(vec![0.0, 0.0], 2.0) }
    }

    #[test]
    fn empty_set() {
        let r = potential_product_bounds(&AnalyticSet::Empty, &cfg()).unwrap();
        assert!(r.a.iter().all(|&x| x == 0.0));
        assert!(r.upper_products.iter().all(|&x| x == 1.0));
        assert_eq!(r.u_at_x0, 0.0);
        assert!(r.bounds_hold && r.identity_holds && r.wolff_holds);
    }

    #[test]
    fn fitted_constants_close_the_bounds() {
        let e = AnalyticSet::DiskUnion { disks: vec![(vec![0.3, 0.0], 0.08), (vec![0.0, 0.035], 0.01)] };
        let r = potential_product_bounds(&e, &cfg()).unwrap();
        assert!(r.u_at_x0 > 0.0 && r.u_at_x0 < 1.0);
        assert!(r.bounds_hold && r.wolff_holds && r.identity_holds, "{r:?}");
        assert!((upper_bound(&r.quotients, r.fitted_cprime) - r.u_at_x0).abs() < 1e-9);
        assert!(r.fitted_c > 0.0 && r.fitted_c <= 1.0);
        assert!(r.upper_products.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.lower_products.windows(2).all(|w| w[1] <= w[0]));
        // a smaller supplied C' breaks the upper bound
        let tight = BoundsConfig { c_prime: Some(0.5 * r.fitted_cprime), ..cfg() };
        assert!(!potential_product_bounds(&e, &tight).unwrap().bounds_hold);
    }

    #[test]
    fn gap_enforcement_limit() {
        // a disk straddling the gap annulus around r_1 = 1/8
        let e = AnalyticSet::DiskUnion { disks: vec![(vec![0.125, 0.0], 0.05)] };
        let strict = BoundsConfig { max_removed_fraction: 0.1, ..cfg() };
        assert!(matches!(potential_product_bounds(&e, &strict), Err(Error::HypothesisViolated(_))));
        let loose = BoundsConfig { max_removed_fraction: 1.0, ..cfg() };
        let r = potential_product_bounds(&e, &loose).unwrap();
        assert!(r.removed_nodes > 0);
    }
}
