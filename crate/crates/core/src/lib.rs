//! Discrete nonlinear potential theory on weighted graphs.
//!
//! A metric measure space is replaced by a finite weighted graph: nodes carry
//! measure, edges carry a length and a conductance. On top of that the crate
//! provides p-Dirichlet energies, a certified obstacle-problem solver, Sobolev
//! and condenser capacities, Wiener sums with a thin/thick classifier, and the
//! constructive estimates around the weak and strong Cartan properties.
//!
//! The crate is `no_std` (it needs `alloc`). Enabling the `parallel` feature
//! runs the inner loops on rayon; all reductions are chunked in a fixed order,
//! so results are bit-identical with or without it and for any thread count.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod capacity;
pub mod cartan;
pub mod descriptor;
mod error;
pub mod field;
pub mod fine;
mod math;
pub mod reduce;
pub mod solver;
pub mod space;

pub use crate::capacity::CapacityResult;
pub use crate::descriptor::AnalyticSet;
pub use crate::error::{Error, Result};
pub use crate::field::{GradientField, ScalarField};
pub use crate::fine::{Classification, ClassifyPolicy, Verdict, WienerConfig, WienerMode, WienerReport};
pub use crate::solver::{ObstacleSpec, SolveResult, SolverOptions};
pub use crate::space::{Ball, Region, SpaceMeta, WeightedGraphSpace};
