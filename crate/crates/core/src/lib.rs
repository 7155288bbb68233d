//! Certified lower and upper bounds on the maximal polarization of compact
//! planar regions.
//!
//! The crate builds ε-nets of a region `A` and of its convex hull, turns them
//! into a pair of max-min integer programs whose optima bracket the best
//! achievable polarization of `N` Gaussian lamps, solves both with a bespoke
//! branch-and-bound, and checks candidate configurations against necessary
//! conditions for local optimality.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod model;
pub mod potential;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{Point, Region, SampleNet};
pub use potential::{Configuration, PotentialSpec};
