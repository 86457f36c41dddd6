//! Quadrangle meshes of one or more bodies, boundary tagging and the plain-text
//! mesh file format.

mod generate;
mod io;

pub use generate::{disc_sector_mesh, structured_rect_mesh, GeneratedMesh, SECTOR_INNER_RATIO};
pub use io::{load_mesh, parse_mesh, write_mesh};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::{shape::shape_eval_unchecked, gradients_at, QuadratureRule};
use crate::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("element {element} references unknown node {node}")]
    UnknownNode { element: usize, node: usize },
    #[error("element {element} is degenerate or clockwise (Jacobian {det:e} at point {point})")]
    BadJacobian { element: usize, point: usize, det: f64 },
    #[error("node {node} belongs to bodies {first} and {second}")]
    SharedNode { node: usize, first: usize, second: usize },
    #[error("node {node} is not used by any element")]
    OrphanNode { node: usize },
    #[error("boundary set error: {0}")]
    Boundary(String),
    #[error("invalid generator input: {0}")]
    InvalidInput(String),
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementKind {
    Q1,
    Q2,
}

impl ElementKind {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementKind::Q1 => 4,
            ElementKind::Q2 => 8,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Q1 => "Q1",
            ElementKind::Q2 => "Q2",
        })
    }
}

impl std::str::FromStr for ElementKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Q1" => Ok(ElementKind::Q1),
            "Q2" => Ok(ElementKind::Q2),
            other => Err(format!("unknown element kind `{other}` (expected Q1 or Q2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub nodes: Vec<usize>,
    pub body: usize,
}

/// Quadrangle mesh. Node coordinates are in mm, in the reference
/// configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    pub kind: ElementKind,
    pub nodes: Vec<Vec2>,
    pub elements: Vec<Element>,
}

/// Diameter-based mesh size.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSize {
    pub h_per_body: BTreeMap<usize, f64>,
    pub h_global: f64,
}

impl Mesh2D {
    pub fn element_coords(&self, e: usize) -> Vec<Vec2> {
        self.elements[e].nodes.iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn bodies(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.elements.iter().map(|e| e.body).collect();
        b.sort_unstable();
        b.dedup();
        b
    }

    /// Body of every node (validated meshes only).
    pub fn node_bodies(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.nodes.len()];
        for e in &self.elements {
            for &n in &e.nodes {
                out[n] = e.body;
            }
        }
        out
    }

    /// Checks connectivity, orientation, Jacobians and body membership.
    pub fn validate(&self) -> Result<(), MeshError> {
        let nen = self.kind.nodes_per_element();
        let mut owner: Vec<Option<usize>> = vec![None; self.nodes.len()];
        for (i, e) in self.elements.iter().enumerate() {
            if e.nodes.len() != nen {
                return Err(MeshError::Boundary(format!(
                    "element {i} has {} nodes, {} expects {nen}",
                    e.nodes.len(),
                    self.kind
                )));
            }
            for &n in &e.nodes {
                if n >= self.nodes.len() {
                    return Err(MeshError::UnknownNode { element: i, node: n });
                }
                match owner[n] {
                    Some(b) if b != e.body => {
                        return Err(MeshError::SharedNode { node: n, first: b, second: e.body })
                    }
                    _ => owner[n] = Some(e.body),
                }
            }
            self.check_jacobians(i)?;
        }
        if let Some(n) = owner.iter().position(Option::is_none) {
            return Err(MeshError::OrphanNode { node: n });
        }
        Ok(())
    }

    fn check_jacobians(&self, e: usize) -> Result<(), MeshError> {
        let coords = self.element_coords(e);
        let rule = QuadratureRule::for_kind(self.kind);
        for (q, p) in rule.points.iter().enumerate() {
            let (_, det) = gradients_at(&shape_eval_unchecked(self.kind, p[0], p[1]), &coords);
            if !(det > 0.0) {
                return Err(MeshError::BadJacobian { element: e, point: q, det });
            }
        }
        Ok(())
    }

    /// Element diameter: largest distance between two of its nodes.
    pub fn element_diameter(&self, e: usize) -> f64 {
        let c = self.element_coords(e);
        let mut d: f64 = 0.0;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                d = d.max((c[i] - c[j]).norm());
            }
        }
        d
    }

    pub fn mesh_size(&self) -> MeshSize {
        let mut h_per_body = BTreeMap::new();
        for (i, e) in self.elements.iter().enumerate() {
            let d = self.element_diameter(i);
            let h = h_per_body.entry(e.body).or_insert(0.0_f64);
            *h = h.max(d);
        }
        let h_global = h_per_body.values().fold(0.0_f64, |a, b| a.max(*b));
        MeshSize { h_per_body, h_global }
    }

    /// Appends `other`, offsetting its node ids. Returns the node offset.
    pub fn append(&mut self, other: &Mesh2D) -> Result<usize, MeshError> {
        if other.kind != self.kind {
            return Err(MeshError::InvalidInput(format!(
                "cannot merge {} mesh into {} mesh",
                other.kind, self.kind
            )));
        }
        let offset = self.nodes.len();
        self.nodes.extend_from_slice(&other.nodes);
        self.elements.extend(other.elements.iter().map(|e| Element {
            nodes: e.nodes.iter().map(|n| n + offset).collect(),
            body: e.body,
        }));
        Ok(offset)
    }
}

/// Which displacement components a Dirichlet entry prescribes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Components {
    X,
    Y,
    Both,
}

impl Components {
    pub fn x(self) -> bool {
        matches!(self, Components::X | Components::Both)
    }

    pub fn y(self) -> bool {
        matches!(self, Components::Y | Components::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletEntry {
    pub node: usize,
    pub components: Components,
    /// Index of the prescribed motion driving this node.
    pub motion: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannEntry {
    /// Boundary segment nodes, in chain order (2 for Q1, 3 for Q2 with the mid
    /// node in the middle).
    pub segment: Vec<usize>,
    /// Traction in MPa.
    pub traction: Vec2,
}

/// Ordered node chain along a contact boundary. Traversal keeps the body on
/// the left, so the outward normal is the right-hand perpendicular.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactChain {
    pub body: usize,
    pub name: String,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundarySets {
    pub dirichlet: Vec<DirichletEntry>,
    pub neumann: Vec<NeumannEntry>,
    pub contact: Vec<ContactChain>,
}

impl BoundarySets {
    /// Checks that node ids exist, chains are simple polylines, and that
    /// Neumann and contact parts do not share segments.
    pub fn validate(&self, mesh: &Mesh2D) -> Result<(), MeshError> {
        let bodies = mesh.node_bodies();
        let check = |n: usize| -> Result<(), MeshError> {
            if n >= mesh.nodes.len() {
                Err(MeshError::Boundary(format!("unknown node {n}")))
            } else {
                Ok(())
            }
        };
        for d in &self.dirichlet {
            check(d.node)?;
        }
        let mut neumann_segments = std::collections::BTreeSet::new();
        for n in &self.neumann {
            for &id in &n.segment {
                check(id)?;
            }
            let (a, b) = (n.segment[0], *n.segment.last().unwrap());
            neumann_segments.insert((a.min(b), a.max(b)));
        }
        for chain in &self.contact {
            if chain.nodes.len() < 2 {
                return Err(MeshError::Boundary(format!("contact chain `{}` has fewer than 2 nodes", chain.name)));
            }
            for &id in &chain.nodes {
                check(id)?;
                if bodies[id] != chain.body {
                    return Err(MeshError::Boundary(format!(
                        "contact chain `{}` node {id} belongs to body {}, not {}",
                        chain.name, bodies[id], chain.body
                    )));
                }
            }
            for w in chain.nodes.windows(2) {
                if neumann_segments.contains(&(w[0].min(w[1]), w[0].max(w[1]))) {
                    return Err(MeshError::Boundary(format!(
                        "segment {}-{} is both Neumann and contact",
                        w[0], w[1]
                    )));
                }
            }
            let pts: Vec<Vec2> = chain.nodes.iter().map(|&n| mesh.nodes[n]).collect();
            if let Some((i, j)) = first_self_intersection(&pts) {
                return Err(MeshError::Boundary(format!(
                    "contact chain `{}` self-intersects at segments {i} and {j}",
                    chain.name
                )));
            }
        }
        Ok(())
    }
}

/// Brute-force check for intersections between non-adjacent segments of a
/// polyline.
pub fn first_self_intersection(pts: &[Vec2]) -> Option<(usize, usize)> {
    let nseg = pts.len().saturating_sub(1);
    for i in 0..nseg {
        for j in i + 2..nseg {
            if segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                return Some((i, j));
            }
        }
    }
    None
}

fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let cross = |o: Vec2, p: Vec2, q: Vec2| (p - o).perp(&(q - o));
    let (d1, d2) = (cross(c, d, a), cross(c, d, b));
    let (d3, d4) = (cross(a, b, c), cross(a, b, d));
    let on = |o: Vec2, p: Vec2, q: Vec2| {
        q.x >= o.x.min(p.x) && q.x <= o.x.max(p.x) && q.y >= o.y.min(p.y) && q.y <= o.y.max(p.y)
    };
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on(c, d, a))
        || (d2 == 0.0 && on(c, d, b))
        || (d3 == 0.0 && on(a, b, c))
        || (d4 == 0.0 && on(a, b, d))
}
