//! Constructive estimates around the weak and strong Cartan properties.
//!
//! All operations build a grid centred at the base point `x0`, so `x0` is a
//! node and balls about it are measured in the Euclidean metric.

mod boundary;
mod bounds;
mod harnack;
mod strong;
mod weak;

pub use boundary::{boundary_estimate_check, BoundaryConfig, BoundaryReport};
pub use bounds::{potential_product_bounds, BoundsConfig, BoundsReport};
pub use harnack::{harnack_check, HarnackFamily, HarnackForm, HarnackReport};
pub use strong::{strong_cartan_positive_cap, StrongCartanConfig, StrongCartanResult};
pub use weak::{weak_cartan, CartanCertificate, CartanConfig};

use alloc::vec::Vec;

use crate::descriptor::AnalyticSet;
use crate::error::{Error, Result};
use crate::math;
use crate::space::{build_grid, region_from_descriptor, GridSpec, Region, WeightedGraphSpace};

/// A grid on the cube of half-width `radius` about `x0` with `resolution`
/// cells per `radius`, the node set of the descriptor on it, and node
/// distances from `x0`.
pub(crate) struct Local {
    pub space: WeightedGraphSpace,
    pub center: usize,
    pub dist: Vec<f64>,
    pub set: Region,
    pub h: f64,
}

impl Local {
    pub fn new(descriptor: &AnalyticSet, x0: &[f64], radius: f64, resolution: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter { name: "radius", reason: "must be positive".into() });
        }
        if resolution < 2 {
            return Err(Error::InvalidParameter { name: "resolution", reason: "must be at least 2".into() });
        }
        let h = radius / resolution as f64;
        let space = build_grid(&GridSpec::cube(x0, radius, h))?;
        let center = space.nearest_node(x0)?;
        let dist = space.distances_from(center);
        let set = region_from_descriptor(&space, descriptor)?;
        Ok(Local { space, center, dist, set, h })
    }

    /// `{d < r}`
    pub fn ball(&self, r: f64) -> Region {
        Region::from_indices((0..self.dist.len()).filter(|&i| self.dist[i] < r))
    }

    /// `{lo < d < hi}`
    pub fn shell(&self, lo: f64, hi: f64) -> Region {
        Region::from_indices((0..self.dist.len()).filter(|&i| self.dist[i] > lo && self.dist[i] < hi))
    }

    pub fn x0_in_set(&self) -> bool {
        self.set.contains(self.center)
    }
}

/// `σ^-j r`
pub(crate) fn radius(r: f64, sigma: f64, j: usize) -> f64 {
    r * math::powf(sigma, -(j as f64))
}
