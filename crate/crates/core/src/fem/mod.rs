//! Element kernel: shape functions, quadrature and element-level
//! force/stiffness/mass in plane strain.

mod element;
pub mod quadrature;
pub mod shape;

pub(crate) use element::accumulate_internal_force;
pub use element::{
    element_area, element_internal_force, element_stiffness, gradients_at, hooke_internal_force,
    lumped_mass, strain_increments, ElementKinematics,
};
pub use quadrature::QuadratureRule;
pub use shape::{shape_eval, ShapeValues};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("parametric point ({xi}, {eta}) is outside the reference square")]
    OutOfReference { xi: f64, eta: f64 },
    #[error("non-positive Jacobian {det:e} in element {element} at quadrature point {point}")]
    NonPositiveJacobian { element: usize, point: usize, det: f64 },
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
}
