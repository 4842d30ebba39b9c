//! Cloth collision handling and untangling built on intersection contours.
//!
//! The crate detects interpenetrating triangle pairs, chains them into
//! contours, decides which cloth–cloth interactions should repel, and feeds a
//! repulsion penalty plus a contour-length loss into an implicit-Euler style
//! optimisation solver.

pub mod collision;
pub mod contours;
pub mod energy;
pub mod geometry;
pub mod graph;
pub mod icloss;
pub mod io;
pub mod mesh;
pub mod scenes;
pub mod shapes;
pub mod solver;

/// Position, displacement and gradient vectors (SI units).
pub type Vec3 = nalgebra::Vector3<f64>;
