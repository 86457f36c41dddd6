//! Tensor-product Gauss rules on the reference square and 1D Gauss rules.

use crate::mesh::ElementKind;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// 1D Gauss-Legendre points and weights on `[-1, 1]`.
pub fn gauss_1d(order: usize) -> (&'static [f64], &'static [f64]) {
    const P1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const P2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    const P3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W3: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    match order {
        1 => (&P1, &W1),
        2 => (&P2, &W2),
        3 => (&P3, &W3),
        _ => panic!("unsupported Gauss order {order}"),
    }
}

impl QuadratureRule {
    pub fn tensor_gauss(order: usize) -> Self {
        let (p, w) = gauss_1d(order);
        let mut points = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for (j, eta) in p.iter().enumerate() {
            for (i, xi) in p.iter().enumerate() {
                points.push([*xi, *eta]);
                weights.push(w[i] * w[j]);
            }
        }
        Self { points, weights }
    }

    /// Full integration: 2x2 for Q1, 3x3 for Q2.
    pub fn for_kind(kind: ElementKind) -> Self {
        match kind {
            ElementKind::Q1 => Self::tensor_gauss(2),
            ElementKind::Q2 => Self::tensor_gauss(3),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_reference_area() {
        for kind in [ElementKind::Q1, ElementKind::Q2] {
            let q = QuadratureRule::for_kind(kind);
            let s: f64 = q.weights.iter().sum();
            assert!((s - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn three_point_rule_integrates_quintics() {
        let (p, w) = gauss_1d(3);
        let integral: f64 = p.iter().zip(w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((integral - 0.4).abs() < 1e-14);
    }
}
