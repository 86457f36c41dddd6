//! Plane-strain explicit finite elements for frictional contact between
//! deformable bodies in large deformation.
//!
//! Two contact backends share one constraint solver:
//!
//! - a node-on-segment (local) backend that projects each slave node onto the
//!   closest master segment, and
//! - a mortar (global) backend that couples slave and master traces through the
//!   integral operators `G1` (slave x slave) and `G21` (master x slave), with
//!   piecewise-constant (P0) or piecewise-linear (P1) multipliers.
//!
//! Time integration is central difference with lumped masses. Contact forces are
//! forward-increment Lagrange multipliers: they are chosen so that the discrete
//! contact and friction conditions hold at the end of every step.

pub mod contact;
pub mod dynamics;
pub mod fem;
pub mod geometry;
pub mod material;
pub mod mesh;
pub mod mortar;
pub mod scenario;

/// 2D vector in mm (positions, displacements) or N (forces).
pub type Vec2 = nalgebra::Vector2<f64>;

/// Plane-strain thickness in mm. Forces are per unit thickness throughout.
pub const THICKNESS: f64 = 1.0;
