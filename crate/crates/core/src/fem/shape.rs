//! Q1 (4-node) and Q2 (8-node serendipity) shape functions on the reference
//! square `[-1, 1]^2`.
//!
//! Node ordering is counterclockwise: corners 0..4 start at `(-1, -1)`, and for
//! Q2 the mid-side node `4 + i` sits between corners `i` and `(i + 1) % 4`.

use super::FemError;
use crate::mesh::ElementKind;

/// Parametric coordinates of the element nodes.
pub const Q1_NODES: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
pub const Q2_NODES: [[f64; 2]; 8] = [
    [-1.0, -1.0],
    [1.0, -1.0],
    [1.0, 1.0],
    [-1.0, 1.0],
    [0.0, -1.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [-1.0, 0.0],
];

/// Values and parametric gradients at one point. Only the first
/// `kind.nodes_per_element()` entries are meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeValues {
    pub kind: ElementKind,
    pub n: [f64; 8],
    pub dn: [[f64; 2]; 8],
}

impl ShapeValues {
    pub fn len(&self) -> usize {
        self.kind.nodes_per_element()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.n[..self.len()]
    }

    pub fn gradients(&self) -> &[[f64; 2]] {
        &self.dn[..self.len()]
    }
}

/// Evaluates the shape functions at a parametric point.
pub fn shape_eval(kind: ElementKind, xi: f64, eta: f64) -> Result<ShapeValues, FemError> {
    const SLACK: f64 = 1e-12;
    if !(xi.abs() <= 1.0 + SLACK && eta.abs() <= 1.0 + SLACK) {
        return Err(FemError::OutOfReference { xi, eta });
    }
    Ok(shape_eval_unchecked(kind, xi, eta))
}

/// Same as [`shape_eval`] without the range check; used by inverse mapping,
/// which probes points slightly outside the reference square.
pub fn shape_eval_unchecked(kind: ElementKind, xi: f64, eta: f64) -> ShapeValues {
    let mut n = [0.0; 8];
    let mut dn = [[0.0; 2]; 8];
    match kind {
        ElementKind::Q1 => {
            for (i, [xa, ya]) in Q1_NODES.iter().enumerate() {
                n[i] = 0.25 * (1.0 + xa * xi) * (1.0 + ya * eta);
                dn[i] = [0.25 * xa * (1.0 + ya * eta), 0.25 * ya * (1.0 + xa * xi)];
            }
        }
        ElementKind::Q2 => {
            for (i, [xa, ya]) in Q2_NODES.iter().enumerate() {
                if i < 4 {
                    let (a, b) = (1.0 + xa * xi, 1.0 + ya * eta);
                    let c = xa * xi + ya * eta - 1.0;
                    n[i] = 0.25 * a * b * c;
                    dn[i] = [
                        0.25 * xa * b * (c + a),
                        0.25 * ya * a * (c + b),
                    ];
                } else if *xa == 0.0 {
                    n[i] = 0.5 * (1.0 - xi * xi) * (1.0 + ya * eta);
                    dn[i] = [-xi * (1.0 + ya * eta), 0.5 * ya * (1.0 - xi * xi)];
                } else {
                    n[i] = 0.5 * (1.0 + xa * xi) * (1.0 - eta * eta);
                    dn[i] = [0.5 * xa * (1.0 - eta * eta), -eta * (1.0 + xa * xi)];
                }
            }
        }
    }
    ShapeValues { kind, n, dn }
}
