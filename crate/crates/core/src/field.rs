//! Node and edge fields.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::space::{Region, WeightedGraphSpace};

/// Extended-real values indexed by node. `-inf` marks an unconstrained
/// obstacle and is the only non-finite value the solvers accept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField(values)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        ScalarField(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    /// The `-inf` obstacle.
    pub fn unconstrained(n: usize) -> Self {
        Self::constant(n, f64::NEG_INFINITY)
    }

    /// `1` on the region, `0` elsewhere.
    pub fn indicator(n: usize, region: &Region) -> Self {
        let mut v = vec![0.0; n];
        for &i in region.nodes() {
            v[i] = 1.0;
        }
        ScalarField(v)
    }

    pub fn from_fn(space: &WeightedGraphSpace, f: impl Fn(&[f64]) -> f64) -> Self {
        ScalarField((0..space.len()).map(|i| f(space.position(i).unwrap_or(&[]))).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn is_finite_on(&self, region: &Region) -> bool {
        region.nodes().iter().all(|&i| self.0[i].is_finite())
    }

    /// Smallest value on a region (`+inf` if empty).
    pub fn min_on(&self, region: &Region) -> f64 {
        region.nodes().iter().map(|&i| self.0[i]).fold(f64::INFINITY, f64::min)
    }

    /// Largest value on a region (`-inf` if empty).
    pub fn max_on(&self, region: &Region) -> f64 {
        region.nodes().iter().map(|&i| self.0[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_with(&self, other: &ScalarField) -> ScalarField {
        ScalarField(self.0.iter().zip(&other.0).map(|(a, b)| a.max(*b)).collect())
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        ScalarField(v)
    }
}

/// Per-edge difference quotients `|u(a) - u(b)| / length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradientField(Vec<f64>);

impl GradientField {
    pub fn of(space: &WeightedGraphSpace, u: &ScalarField) -> Self {
        GradientField(
            space
                .edges()
                .iter()
                .map(|e| {
                    let (a, b) = (u.get(e.a), u.get(e.b));
                    if a == b {
                        0.0
                    } else {
                        (a - b).abs() / e.length
                    }
                })
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `sum_e conductance_e * g_e^p`.
    pub fn energy(&self, space: &WeightedGraphSpace, p: f64) -> f64 {
        space.edges().iter().zip(&self.0).map(|(e, g)| e.conductance * math::powf(*g, p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, GridSpec};

    #[test]
    fn gradient_of_linear_field() {
        let s = build_grid(&GridSpec::cube(&[0.5], 0.5, 0.25)).unwrap();
        let u = ScalarField::from_fn(&s, |x| 2.0 * x[0]);
        let g = GradientField::of(&s, &u);
        assert!(g.values().iter().all(|&v| (v - 2.0).abs() < 1e-12));
        assert!((g.energy(&s, 2.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn equal_endpoints_give_zero() {
        let s = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 0.5)).unwrap();
        let g = GradientField::of(&s, &ScalarField::constant(s.len(), f64::NEG_INFINITY));
        assert!(g.values().iter().all(|&v| v == 0.0));
    }
}
