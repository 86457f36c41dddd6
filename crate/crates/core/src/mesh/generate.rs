use std::collections::BTreeMap;

use super::{Element, ElementKind, Mesh2D, MeshError};
use crate::Vec2;

/// Inner radius of generated disc sectors, as a fraction of the outer radius.
/// The sector is an annular piece so that no element collapses at the center.
pub const SECTOR_INNER_RATIO: f64 = 0.4;

/// A generated single-body mesh plus its named boundary chains. Every chain is
/// oriented with the body on its left.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedMesh {
    pub mesh: Mesh2D,
    pub edges: BTreeMap<String, Vec<usize>>,
}

impl GeneratedMesh {
    pub fn translated(mut self, offset: Vec2) -> Self {
        for p in &mut self.mesh.nodes {
            *p += offset;
        }
        self
    }

    pub fn with_body(mut self, body: usize) -> Self {
        for e in &mut self.mesh.elements {
            e.body = body;
        }
        self
    }

    pub fn edge(&self, name: &str) -> Option<&[usize]> {
        self.edges.get(name).map(Vec::as_slice)
    }
}

/// Structured grid over the unit parameter square mapped by `map`. The map
/// must have a positive Jacobian so elements come out counterclockwise.
/// Edge names are given for `v = 0`, `u = 1`, `v = 1`, `u = 0`.
fn mapped_grid(
    nu: usize,
    nv: usize,
    kind: ElementKind,
    names: [&str; 4],
    map: impl Fn(f64, f64) -> Vec2,
) -> GeneratedMesh {
    let (ni, nj) = match kind {
        ElementKind::Q1 => (nu + 1, nv + 1),
        ElementKind::Q2 => (2 * nu + 1, 2 * nv + 1),
    };
    let stride = match kind {
        ElementKind::Q1 => 1,
        ElementKind::Q2 => 2,
    };
    let mut id = vec![usize::MAX; ni * nj];
    let mut nodes = Vec::new();
    for j in 0..nj {
        for i in 0..ni {
            if kind == ElementKind::Q2 && i % 2 == 1 && j % 2 == 1 {
                continue;
            }
            id[j * ni + i] = nodes.len();
            nodes.push(map(i as f64 / (ni - 1) as f64, j as f64 / (nj - 1) as f64));
        }
    }
    let at = |i: usize, j: usize| id[j * ni + i];
    let mut elements = Vec::with_capacity(nu * nv);
    for ej in 0..nv {
        for ei in 0..nu {
            let (i, j) = (stride * ei, stride * ej);
            let s = stride;
            let mut conn = vec![at(i, j), at(i + s, j), at(i + s, j + s), at(i, j + s)];
            if kind == ElementKind::Q2 {
                conn.extend([at(i + 1, j), at(i + 2, j + 1), at(i + 1, j + 2), at(i, j + 1)]);
            }
            elements.push(Element { nodes: conn, body: 0 });
        }
    }
    let mut edges = BTreeMap::new();
    edges.insert(names[0].to_string(), (0..ni).map(|i| at(i, 0)).collect());
    edges.insert(names[1].to_string(), (0..nj).map(|j| at(ni - 1, j)).collect());
    edges.insert(names[2].to_string(), (0..ni).rev().map(|i| at(i, nj - 1)).collect());
    edges.insert(names[3].to_string(), (0..nj).rev().map(|j| at(0, j)).collect());
    GeneratedMesh { mesh: Mesh2D { kind, nodes, elements }, edges }
}

/// Rectangle `[0, width] x [0, height]` split into `nx x ny` quadrangles.
/// Edges: `bottom`, `right`, `top`, `left`.
pub fn structured_rect_mesh(
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    kind: ElementKind,
) -> Result<GeneratedMesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidInput(format!("element counts must be >= 1 (got {nx} x {ny})")));
    }
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(MeshError::InvalidInput(format!("dimensions must be positive (got {width} x {height})")));
    }
    let g = mapped_grid(nx, ny, kind, ["bottom", "right", "top", "left"], |u, v| {
        Vec2::new(u * width, v * height)
    });
    g.mesh.validate()?;
    Ok(g)
}

/// Annular sector of a disc centered at the origin, symmetric about the
/// downward vertical, spanning `span` radians. Radii run from
/// `SECTOR_INNER_RATIO * radius` to `radius` in `nr` layers; the arc is split
/// into `na` elements. Edges: `arc` (outer, candidate contact surface),
/// `inner`, `start`, `end`.
pub fn disc_sector_mesh(
    radius: f64,
    span: f64,
    nr: usize,
    na: usize,
    kind: ElementKind,
) -> Result<GeneratedMesh, MeshError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(MeshError::InvalidInput(format!("radius must be positive (got {radius})")));
    }
    if !(span > 0.0 && span < 2.0 * std::f64::consts::PI) {
        return Err(MeshError::InvalidInput(format!("angular span must be in (0, 2π) (got {span})")));
    }
    if nr == 0 || na == 0 {
        return Err(MeshError::InvalidInput(format!("element counts must be >= 1 (got {nr} x {na})")));
    }
    let r_in = SECTOR_INNER_RATIO * radius;
    let theta0 = -std::f64::consts::FRAC_PI_2 - 0.5 * span;
    let g = mapped_grid(nr, na, kind, ["start", "arc", "end", "inner"], |u, v| {
        let r = r_in + u * (radius - r_in);
        let t = theta0 + v * span;
        Vec2::new(r * t.cos(), r * t.sin())
    });
    g.mesh.validate()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::first_self_intersection;

    #[test]
    fn rect_counts() {
        let g = structured_rect_mesh(1.3, 0.3, 13, 3, ElementKind::Q1).unwrap();
        assert_eq!(g.mesh.elements.len(), 39);
        assert_eq!(g.mesh.nodes.len(), 56);
        let g = structured_rect_mesh(1.0, 1.0, 1, 1, ElementKind::Q1).unwrap();
        assert_eq!(g.mesh.nodes.len(), 4);
        let g = structured_rect_mesh(1.0, 1.0, 1, 1, ElementKind::Q2).unwrap();
        assert_eq!(g.mesh.elements.len(), 1);
        assert_eq!(g.mesh.nodes.len(), 8);
    }

    #[test]
    fn rect_rejects_zero_counts_and_sizes() {
        assert!(structured_rect_mesh(1.0, 1.0, 0, 1, ElementKind::Q1).is_err());
        assert!(structured_rect_mesh(-1.0, 1.0, 1, 1, ElementKind::Q1).is_err());
    }

    #[test]
    fn rect_edges_keep_body_on_left() {
        let g = structured_rect_mesh(2.0, 1.0, 4, 2, ElementKind::Q2).unwrap();
        let centroid = Vec2::new(1.0, 0.5);
        for chain in g.edges.values() {
            for w in chain.windows(2) {
                let (a, b) = (g.mesh.nodes[w[0]], g.mesh.nodes[w[1]]);
                let left = Vec2::new(-(b - a).y, (b - a).x);
                assert!(left.dot(&(centroid - 0.5 * (a + b))) > 0.0);
            }
        }
        assert_eq!(g.edge("bottom").unwrap().len(), 9);
    }

    #[test]
    fn half_disc_minimal() {
        let g = disc_sector_mesh(1.0, std::f64::consts::PI, 1, 2, ElementKind::Q1).unwrap();
        assert_eq!(g.mesh.elements.len(), 2);
        let arc = g.edge("arc").unwrap();
        assert_eq!(arc.len(), 3);
        for &n in arc {
            assert!((g.mesh.nodes[n].norm() - 1.0).abs() < 1e-14);
        }
        // lowest arc node is the bottom of the disc
        assert!((g.mesh.nodes[arc[1]].y + 1.0).abs() < 1e-14);
    }

    #[test]
    fn fine_half_disc_is_valid_and_simple() {
        let g = disc_sector_mesh(1.0, std::f64::consts::PI, 4, 16, ElementKind::Q1).unwrap();
        assert_eq!(g.mesh.elements.len(), 64);
        for chain in g.edges.values() {
            let pts: Vec<Vec2> = chain.iter().map(|&n| g.mesh.nodes[n]).collect();
            assert_eq!(first_self_intersection(&pts), None);
        }
    }

    #[test]
    fn degenerate_radius_rejected() {
        assert!(disc_sector_mesh(0.0, 1.0, 1, 1, ElementKind::Q1).is_err());
    }
}
