use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::quadrature::QuadratureRule;
use super::shape::{shape_eval_unchecked, ShapeValues};
use super::FemError;
use crate::material::{Hooke, Strain, Stress};
use crate::mesh::ElementKind;
use crate::{Vec2, THICKNESS};

const MAX_GP: usize = 9;

struct ShapeTable {
    rule: QuadratureRule,
    shapes: Vec<ShapeValues>,
}

fn table(kind: ElementKind) -> &'static ShapeTable {
    static Q1: OnceLock<ShapeTable> = OnceLock::new();
    static Q2: OnceLock<ShapeTable> = OnceLock::new();
    let cell = match kind {
        ElementKind::Q1 => &Q1,
        ElementKind::Q2 => &Q2,
    };
    cell.get_or_init(|| {
        let rule = QuadratureRule::for_kind(kind);
        let shapes = rule
            .points
            .iter()
            .map(|p| shape_eval_unchecked(kind, p[0], p[1]))
            .collect();
        ShapeTable { rule, shapes }
    })
}

/// Spatial gradients and integration weights at the quadrature points of one
/// element in a given configuration. Stack allocated.
#[derive(Debug, Clone, Copy)]
pub struct ElementKinematics {
    pub kind: ElementKind,
    pub n_points: usize,
    /// `dN_a/dx` at each quadrature point.
    pub dndx: [[[f64; 2]; 8]; MAX_GP],
    /// `det J * w * thickness`.
    pub dvol: [f64; MAX_GP],
}

impl ElementKinematics {
    pub fn new(element: usize, kind: ElementKind, coords: &[Vec2]) -> Result<Self, FemError> {
        let t = table(kind);
        debug_assert_eq!(coords.len(), kind.nodes_per_element());
        let mut out = Self {
            kind,
            n_points: t.rule.len(),
            dndx: [[[0.0; 2]; 8]; MAX_GP],
            dvol: [0.0; MAX_GP],
        };
        for (q, sv) in t.shapes.iter().enumerate() {
            let (dndx, det) = gradients_at(sv, coords);
            if !(det > 0.0) {
                return Err(FemError::NonPositiveJacobian { element, point: q, det });
            }
            out.dndx[q] = dndx;
            out.dvol[q] = det * t.rule.weights[q] * THICKNESS;
        }
        Ok(out)
    }

    pub fn points(&self) -> std::ops::Range<usize> {
        0..self.n_points
    }

    pub fn volume(&self) -> f64 {
        self.dvol[..self.n_points].iter().sum()
    }

    /// Symmetric gradient of a nodal field at quadrature point `q`.
    pub fn strain(&self, q: usize, field: &[Vec2]) -> Strain {
        let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
        for (g, u) in self.dndx[q].iter().zip(field) {
            xx += g[0] * u.x;
            yy += g[1] * u.y;
            xy += 0.5 * (g[1] * u.x + g[0] * u.y);
        }
        Strain { xx, yy, xy }
    }
}

/// Spatial shape gradients and Jacobian determinant at one parametric point.
pub fn gradients_at(sv: &ShapeValues, coords: &[Vec2]) -> ([[f64; 2]; 8], f64) {
    let (mut j00, mut j01, mut j10, mut j11) = (0.0, 0.0, 0.0, 0.0);
    for (d, x) in sv.gradients().iter().zip(coords) {
        j00 += d[0] * x.x;
        j01 += d[0] * x.y;
        j10 += d[1] * x.x;
        j11 += d[1] * x.y;
    }
    let det = j00 * j11 - j01 * j10;
    let mut out = [[0.0; 2]; 8];
    if det != 0.0 {
        let inv = 1.0 / det;
        for (o, d) in out.iter_mut().zip(sv.gradients()) {
            o[0] = inv * (j11 * d[0] - j01 * d[1]);
            o[1] = inv * (-j10 * d[0] + j00 * d[1]);
        }
    }
    (out, det)
}

/// Element area (mm^2) from quadrature.
pub fn element_area(kind: ElementKind, coords: &[Vec2]) -> f64 {
    let t = table(kind);
    t.shapes
        .iter()
        .zip(&t.rule.weights)
        .map(|(sv, w)| gradients_at(sv, coords).1 * w)
        .sum()
}

/// Nodal internal force `∫ B^T σ dΩ` over the element in the configuration
/// `coords`, with one stress per quadrature point. Output is interleaved
/// `[fx0, fy0, fx1, fy1, ...]` (N per unit thickness).
pub fn element_internal_force(
    element: usize,
    kind: ElementKind,
    coords: &[Vec2],
    stresses: &[Stress],
) -> Result<Vec<f64>, FemError> {
    let kin = ElementKinematics::new(element, kind, coords)?;
    let mut f = vec![0.0; 2 * kind.nodes_per_element()];
    accumulate_internal_force(&kin, stresses, &mut f);
    Ok(f)
}

pub(crate) fn accumulate_internal_force(kin: &ElementKinematics, stresses: &[Stress], f: &mut [f64]) {
    let nen = kin.kind.nodes_per_element();
    for q in kin.points() {
        let s = &stresses[q];
        let dv = kin.dvol[q];
        for a in 0..nen {
            let g = kin.dndx[q][a];
            f[2 * a] += dv * (g[0] * s.xx + g[1] * s.xy);
            f[2 * a + 1] += dv * (g[0] * s.xy + g[1] * s.yy);
        }
    }
}

/// Strain increments at the quadrature points for a displacement increment
/// `du`, evaluated on the configuration `coords` (usually the mid-step one).
pub fn strain_increments(
    element: usize,
    kind: ElementKind,
    coords: &[Vec2],
    du: &[Vec2],
) -> Result<Vec<Strain>, FemError> {
    let kin = ElementKinematics::new(element, kind, coords)?;
    Ok(kin.points().map(|q| kin.strain(q, du)).collect())
}

/// Small-strain Hooke internal force from a stress-free reference state:
/// strains from `disp` on the reference coordinates, integrated on the
/// reference configuration. Equal to `K u`.
pub fn hooke_internal_force(
    element: usize,
    kind: ElementKind,
    ref_coords: &[Vec2],
    disp: &[Vec2],
    hooke: &Hooke,
) -> Result<Vec<f64>, FemError> {
    let kin = ElementKinematics::new(element, kind, ref_coords)?;
    let stresses: Vec<Stress> = kin.points().map(|q| hooke.stress(&kin.strain(q, disp))).collect();
    let mut f = vec![0.0; 2 * kind.nodes_per_element()];
    accumulate_internal_force(&kin, &stresses, &mut f);
    Ok(f)
}

/// Plane-strain element stiffness `∫ B^T D B dΩ` (dense, `2n x 2n`).
pub fn element_stiffness(
    element: usize,
    kind: ElementKind,
    coords: &[Vec2],
    hooke: &Hooke,
) -> Result<DMatrix<f64>, FemError> {
    let kin = ElementKinematics::new(element, kind, coords)?;
    let nen = kind.nodes_per_element();
    let (lam, mu) = (hooke.lambda(), hooke.shear_modulus());
    let c11 = lam + 2.0 * mu;
    let mut k = DMatrix::zeros(2 * nen, 2 * nen);
    for q in kin.points() {
        let dv = kin.dvol[q];
        for a in 0..nen {
            let [ax, ay] = kin.dndx[q][a];
            for b in 0..nen {
                let [bx, by] = kin.dndx[q][b];
                k[(2 * a, 2 * b)] += dv * (c11 * ax * bx + mu * ay * by);
                k[(2 * a, 2 * b + 1)] += dv * (lam * ax * by + mu * ay * bx);
                k[(2 * a + 1, 2 * b)] += dv * (lam * ay * bx + mu * ax * by);
                k[(2 * a + 1, 2 * b + 1)] += dv * (c11 * ay * by + mu * ax * bx);
            }
        }
    }
    Ok(k)
}

/// Diagonal nodal masses. Q1 uses row-sum lumping; Q2 uses HRZ (diagonal of
/// the consistent mass scaled to the element mass), which keeps corner masses
/// positive.
pub fn lumped_mass(
    element: usize,
    kind: ElementKind,
    coords: &[Vec2],
    density: f64,
) -> Result<Vec<f64>, FemError> {
    if !(density > 0.0) {
        return Err(FemError::NonPositiveDensity(density));
    }
    let t = table(kind);
    let nen = kind.nodes_per_element();
    let mut row_sum = vec![0.0; nen];
    let mut diag = vec![0.0; nen];
    let mut total = 0.0;
    for (q, sv) in t.shapes.iter().enumerate() {
        let (_, det) = gradients_at(sv, coords);
        if !(det > 0.0) {
            return Err(FemError::NonPositiveJacobian { element, point: q, det });
        }
        let dm = density * det * t.rule.weights[q] * THICKNESS;
        total += dm;
        for a in 0..nen {
            row_sum[a] += dm * sv.n[a];
            diag[a] += dm * sv.n[a] * sv.n[a];
        }
    }
    Ok(match kind {
        ElementKind::Q1 => row_sum,
        ElementKind::Q2 => {
            let s: f64 = diag.iter().sum();
            diag.iter().map(|d| d * total / s).collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> Vec<Vec2> {
        vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ]
    }

    fn unit_square_q2() -> Vec<Vec2> {
        let mut c = unit_square();
        c.extend([
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, 0.5),
            Vec2::new(0.5, 1.0),
            Vec2::new(0.0, 0.5),
        ]);
        c
    }

    #[test]
    fn unit_square_masses_are_quarters() {
        let m = lumped_mass(0, ElementKind::Q1, &unit_square(), 1.0).unwrap();
        for v in m {
            assert_relative_eq!(v, 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn stretched_rectangle_total_mass() {
        let c: Vec<Vec2> = unit_square().iter().map(|p| Vec2::new(2.0 * p.x, p.y)).collect();
        let m: f64 = lumped_mass(0, ElementKind::Q1, &c, 1.0).unwrap().iter().sum();
        assert_relative_eq!(m, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn q2_hrz_masses_positive_and_total() {
        // distorted Q2 to avoid symmetric coincidences
        let mut c = unit_square_q2();
        c[2] = Vec2::new(1.2, 1.1);
        c[5] = (c[1] + c[2]) * 0.5;
        c[6] = (c[2] + c[3]) * 0.5;
        let m = lumped_mass(0, ElementKind::Q2, &c, 2.5).unwrap();
        let area = element_area(ElementKind::Q2, &c);
        // independent area: shoelace over the straight-sided quadrilateral
        let shoelace = 0.5
            * (0..4)
                .map(|i| {
                    let (p, q) = (c[i], c[(i + 1) % 4]);
                    p.x * q.y - q.x * p.y
                })
                .sum::<f64>();
        assert_relative_eq!(area, shoelace, epsilon = 1e-12);
        assert!(m.iter().all(|v| *v > 0.0));
        assert_relative_eq!(m.iter().sum::<f64>(), 2.5 * shoelace, epsilon = 1e-12);
    }

    #[test]
    fn unit_square_q1_stiffness_closed_form() {
        // N0 = (1-x)(1-y): ∫ N0,x² = 1/3, ∫ N0,x N0,y = 1/4
        let h = Hooke { young: 210.0, poisson: 0.3, density: 1.0 };
        let (lam, mu) = (h.lambda(), h.shear_modulus());
        let k = element_stiffness(0, ElementKind::Q1, &unit_square(), &h).unwrap();
        assert_relative_eq!(k[(0, 0)], (lam + 3.0 * mu) / 3.0, max_relative = 1e-14);
        assert_relative_eq!(k[(0, 1)], (lam + mu) / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_density_rejected() {
        assert!(lumped_mass(0, ElementKind::Q1, &unit_square(), 0.0).is_err());
    }

    #[test]
    fn inverted_element_reports_id() {
        let mut c = unit_square();
        c.swap(1, 3);
        let err = element_internal_force(7, ElementKind::Q1, &c, &[Stress::default(); 4]).unwrap_err();
        assert!(matches!(err, FemError::NonPositiveJacobian { element: 7, .. }));
    }
}
