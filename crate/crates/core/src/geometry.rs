//! Contact surface tracking: chain positions and normals on the deformed
//! configuration, node-to-segment projection and the common curvilinear
//! abscissa used by the mortar integrals.

use thiserror::Error;

use crate::mesh::{ContactChain, ElementKind};
use crate::Vec2;

/// Segments shorter than this (mm) are treated as collapsed.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("segment {segment} of surface `{surface}` collapsed (length {length:e} mm)")]
    CollapsedSegment { surface: String, segment: usize, length: f64 },
    #[error("surface `{0}` needs at least 2 nodes")]
    TooShort(String),
    #[error("quadratic surface `{0}` must have an odd node count (corner, mid, corner, ...)")]
    BadQuadraticChain(String),
    #[error("origin {origin} outside slave chain of {len} nodes")]
    BadOrigin { origin: usize, len: usize },
    #[error("non-monotone projection of master nodes onto the slave chain near master nodes {first} and {second}")]
    NonMonotone { first: usize, second: usize },
}

/// One side of a contact pair on the current configuration. Deformable
/// surfaces map chain positions to mesh nodes; rigid surfaces carry fixed
/// points and no degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactSurface {
    pub name: String,
    pub body: Option<usize>,
    /// Mesh node id per chain position (empty for rigid surfaces).
    pub nodes: Vec<usize>,
    /// Chain alternates corner and mid-side nodes (Q2 traces).
    pub quadratic: bool,
    pub positions: Vec<Vec2>,
    /// Outward unit normals per node.
    pub normals: Vec<Vec2>,
    /// Segment lengths between consecutive chain nodes.
    pub lengths: Vec<f64>,
}

impl ContactSurface {
    pub fn from_chain(chain: &ContactChain, kind: ElementKind, x: &[Vec2]) -> Result<Self, GeometryError> {
        let mut s = Self {
            name: chain.name.clone(),
            body: Some(chain.body),
            nodes: chain.nodes.clone(),
            quadratic: kind == ElementKind::Q2,
            positions: Vec::new(),
            normals: Vec::new(),
            lengths: Vec::new(),
        };
        s.update(x)?;
        Ok(s)
    }

    /// Fixed polyline (analytic rigid surface). Traversal keeps the rigid
    /// body on the left.
    pub fn rigid(name: &str, points: Vec<Vec2>) -> Result<Self, GeometryError> {
        let mut s = Self {
            name: name.to_string(),
            body: None,
            nodes: Vec::new(),
            quadratic: false,
            positions: points,
            normals: Vec::new(),
            lengths: Vec::new(),
        };
        s.refresh()?;
        Ok(s)
    }

    pub fn is_rigid(&self) -> bool {
        self.body.is_none()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn n_segments(&self) -> usize {
        self.positions.len().saturating_sub(1)
    }

    /// Re-reads positions from the global nodal positions `x` (no-op for rigid
    /// surfaces) and recomputes lengths and normals.
    pub fn update(&mut self, x: &[Vec2]) -> Result<(), GeometryError> {
        if !self.is_rigid() {
            self.positions = self.nodes.iter().map(|&n| x[n]).collect();
        }
        self.refresh()
    }

    fn refresh(&mut self) -> Result<(), GeometryError> {
        let n = self.positions.len();
        if n < 2 {
            return Err(GeometryError::TooShort(self.name.clone()));
        }
        if self.quadratic && n % 2 == 0 {
            return Err(GeometryError::BadQuadraticChain(self.name.clone()));
        }
        self.lengths.clear();
        for (k, w) in self.positions.windows(2).enumerate() {
            let length = (w[1] - w[0]).norm();
            if !(length >= MIN_SEGMENT_LENGTH) {
                return Err(GeometryError::CollapsedSegment { surface: self.name.clone(), segment: k, length });
            }
            self.lengths.push(length);
        }
        // Length-weighted average of segment normals: the unnormalized
        // right-hand perpendicular already carries the segment length.
        self.normals = vec![Vec2::zeros(); n];
        for (k, w) in self.positions.windows(2).enumerate() {
            let d = w[1] - w[0];
            let perp = Vec2::new(d.y, -d.x);
            self.normals[k] += perp;
            self.normals[k + 1] += perp;
        }
        for k in 0..n {
            let len = self.normals[k].norm();
            self.normals[k] = if len > 0.0 { self.normals[k] / len } else { self.segment_normal(k.min(n - 2)) };
        }
        Ok(())
    }

    /// Outward unit normal of segment `k`.
    pub fn segment_normal(&self, k: usize) -> Vec2 {
        let d = self.positions[k + 1] - self.positions[k];
        Vec2::new(d.y, -d.x) / d.norm()
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Smallest and largest segment length.
    pub fn length_range(&self) -> (f64, f64) {
        self.lengths
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &l| (lo.min(l), hi.max(l)))
    }
}

/// Refreshes all surfaces of a model from current positions.
pub fn update_surfaces(surfaces: &mut [ContactSurface], x: &[Vec2]) -> Result<(), GeometryError> {
    surfaces.iter_mut().try_for_each(|s| s.update(x))
}

/// Closest-point projection of a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub segment: usize,
    /// Local coordinate in `[0, 1]` along the segment.
    pub xi: f64,
    /// Signed distance along the segment's outward normal; positive means
    /// separated.
    pub gap: f64,
    pub point: Vec2,
    pub normal: Vec2,
    /// False when the closest point is a chain end reached from beyond it.
    pub projected: bool,
}

fn aabb_distance_sq(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let dx = (a.x.min(b.x) - p.x).max(p.x - a.x.max(b.x)).max(0.0);
    let dy = (a.y.min(b.y) - p.y).max(p.y - a.y.max(b.y)).max(0.0);
    dx * dx + dy * dy
}

/// Raw closest-segment search: `(segment, unclamped parameter, squared
/// distance)`. Segments whose bounding box is farther than the best distance
/// found so far are skipped. Lower segment ids win ties.
fn closest_segment(p: Vec2, pts: &[Vec2]) -> (usize, f64, f64) {
    let mut best = (0, 0.0, f64::INFINITY);
    for (k, w) in pts.windows(2).enumerate() {
        if aabb_distance_sq(p, w[0], w[1]) >= best.2 {
            continue;
        }
        let d = w[1] - w[0];
        let t = (p - w[0]).dot(&d) / d.norm_squared();
        let q = w[0] + d * t.clamp(0.0, 1.0);
        let dist = (p - q).norm_squared();
        if dist < best.2 {
            best = (k, t, dist);
        }
    }
    best
}

pub fn project_node_to_master(p: Vec2, master: &ContactSurface) -> Projection {
    let pts = &master.positions;
    let (segment, t, _) = closest_segment(p, pts);
    let last = pts.len() - 2;
    let projected = !((segment == 0 && t < 0.0) || (segment == last && t > 1.0));
    let xi = t.clamp(0.0, 1.0);
    let point = pts[segment] + (pts[segment + 1] - pts[segment]) * xi;
    let normal = master.segment_normal(segment);
    Projection { segment, xi, gap: (p - point).dot(&normal), point, normal, projected }
}

/// Common arc-length parametrization of a slave/master pair. Slave abscissas
/// are cumulative arc lengths from the origin node; master abscissas come
/// from projecting master nodes onto the slave chain along its normal field
/// (linearly extended past its ends).
#[derive(Debug, Clone, PartialEq)]
pub struct CurvilinearFrame {
    pub origin: usize,
    pub slave_s: Vec<f64>,
    pub master_s: Vec<f64>,
    /// Dual-cell breakpoints `z_0 .. z_m`: chain ends and segment midpoints.
    /// Cell `k` is `[z_k, z_{k+1}]`.
    pub breakpoints: Vec<f64>,
    /// Master abscissas decrease along the master chain (the usual case for
    /// facing surfaces).
    pub master_reversed: bool,
}

impl CurvilinearFrame {
    pub fn slave_extent(&self) -> (f64, f64) {
        (self.slave_s[0], *self.slave_s.last().unwrap())
    }

    pub fn master_extent(&self) -> (f64, f64) {
        let (a, b) = (self.master_s[0], *self.master_s.last().unwrap());
        (a.min(b), a.max(b))
    }
}

/// Abscissa of point `p` projected onto the chain `pts` with cumulative
/// abscissas `s`.
pub fn abscissa_on_chain(p: Vec2, pts: &[Vec2], s: &[f64]) -> f64 {
    let (k, t, _) = closest_segment(p, pts);
    let last = pts.len() - 2;
    let t = if (k == 0 && t < 0.0) || (k == last && t > 1.0) { t } else { t.clamp(0.0, 1.0) };
    s[k] + t * (s[k + 1] - s[k])
}

/// Abscissa of `p` projected onto `surface` along its continuous normal
/// field (nodal normals interpolated linearly over each segment). Unlike the
/// closest point, this map does not collapse the normal cone of a vertex onto
/// one abscissa, so it stays monotone near curved chains. Points that reach
/// no segment fall back to [`abscissa_on_chain`].
pub fn abscissa_on_surface(p: Vec2, surface: &ContactSurface, s: &[f64]) -> f64 {
    let cross = |a: Vec2, b: Vec2| a.x * b.y - a.y * b.x;
    let pts = &surface.positions;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..pts.len() - 1 {
        let (a, d) = (pts[k], pts[k + 1] - pts[k]);
        let (n0, dn) = (surface.normals[k], surface.normals[k + 1] - surface.normals[k]);
        let r = p - a;
        // cross(r - t d, n0 + t dn) = c0 + c1 t + c2 t²
        let (c0, c1, c2) = (cross(r, n0), cross(r, dn) - cross(d, n0), -cross(d, dn));
        let mut roots = [f64::NAN; 2];
        if c2.abs() <= 1e-12 * c1.abs() {
            roots[0] = -c0 / c1;
        } else {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc >= 0.0 {
                let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
                roots = [q / c2, c0 / q];
            }
        }
        for t in roots {
            if (-1e-12..=1.0 + 1e-12).contains(&t) {
                let dist = (r - d * t).norm_squared();
                if best.is_none_or(|b| dist < b.0) {
                    best = Some((dist, s[k] + t.clamp(0.0, 1.0) * (s[k + 1] - s[k])));
                }
            }
        }
    }
    best.map_or_else(|| abscissa_on_chain(p, pts, s), |b| b.1)
}

pub fn build_curvilinear_frame(
    slave: &ContactSurface,
    master: &ContactSurface,
    origin: usize,
) -> Result<CurvilinearFrame, GeometryError> {
    let m = slave.len();
    if origin >= m {
        return Err(GeometryError::BadOrigin { origin, len: m });
    }
    let mut slave_s = Vec::with_capacity(m);
    let mut acc = 0.0;
    slave_s.push(0.0);
    for l in &slave.lengths {
        acc += l;
        slave_s.push(acc);
    }
    let shift = slave_s[origin];
    for s in &mut slave_s {
        *s -= shift;
    }
    let mut master_s: Vec<f64> = master
        .positions
        .iter()
        .map(|&p| abscissa_on_surface(p, slave, &slave_s))
        .collect();
    let (lo, hi) = (slave_s[0], slave_s[m - 1]);
    let inside: Vec<usize> = (0..master_s.len()).filter(|&j| master_s[j] >= lo && master_s[j] <= hi).collect();
    let master_reversed = match inside.as_slice() {
        [a, .., b] => master_s[*b] < master_s[*a],
        _ => master_s[master_s.len() - 1] < master_s[0],
    };
    // Master nodes beyond the slave ends only need a monotone abscissa; where
    // the projection onto the extended end segments folds back, continue by
    // chord length instead.
    if let (Some(&first), Some(&last)) = (inside.first(), inside.last()) {
        let dir = if master_reversed { -1.0 } else { 1.0 };
        let chord = |a: usize, b: usize| (master.positions[a] - master.positions[b]).norm();
        let mut folded = false;
        for j in (last + 1)..master_s.len() {
            folded |= dir * (master_s[j] - master_s[j - 1]) <= 0.0;
            if folded {
                master_s[j] = master_s[j - 1] + dir * chord(j, j - 1);
            }
        }
        folded = false;
        for j in (0..first).rev() {
            folded |= dir * (master_s[j + 1] - master_s[j]) <= 0.0;
            if folded {
                master_s[j] = master_s[j + 1] - dir * chord(j, j + 1);
            }
        }
    }
    for (j, w) in master_s.windows(2).enumerate() {
        let ok = if master_reversed { w[1] < w[0] } else { w[1] > w[0] };
        if !ok {
            return Err(GeometryError::NonMonotone { first: j, second: j + 1 });
        }
    }
    let mut breakpoints = Vec::with_capacity(m + 1);
    breakpoints.push(slave_s[0]);
    for w in slave_s.windows(2) {
        breakpoints.push(0.5 * (w[0] + w[1]));
    }
    breakpoints.push(slave_s[m - 1]);
    Ok(CurvilinearFrame { origin, slave_s, master_s, breakpoints, master_reversed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat(name: &str, x0: f64, dx: f64, n: usize, y: f64, leftward: bool) -> ContactSurface {
        let mut pts: Vec<Vec2> = (0..n).map(|i| Vec2::new(x0 + dx * i as f64, y)).collect();
        if leftward {
            pts.reverse();
        }
        ContactSurface::rigid(name, pts).unwrap()
    }

    #[test]
    fn flat_chain_normals_follow_orientation() {
        let s = flat("a", 0.0, 0.5, 5, 0.0, false);
        for n in &s.normals {
            assert_relative_eq!(*n, Vec2::new(0.0, -1.0), epsilon = 1e-15);
        }
        let s = flat("b", 0.0, 0.5, 5, 0.0, true);
        for n in &s.normals {
            assert_relative_eq!(*n, Vec2::new(0.0, 1.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn translation_keeps_normals() {
        let chain = ContactChain { body: 0, name: "c".into(), nodes: vec![0, 1, 2] };
        let x = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.2), Vec2::new(2.0, 0.1)];
        let a = ContactSurface::from_chain(&chain, ElementKind::Q1, &x).unwrap();
        let moved: Vec<Vec2> = x.iter().map(|p| p + Vec2::new(3.0, -7.0)).collect();
        let b = ContactSurface::from_chain(&chain, ElementKind::Q1, &moved).unwrap();
        for (u, v) in a.normals.iter().zip(&b.normals) {
            assert_relative_eq!(*u, *v, epsilon = 1e-14);
        }
    }

    #[test]
    fn quarter_circle_normals() {
        // counterclockwise around the origin keeps the disc on the left
        let n = 65;
        let pts: Vec<Vec2> = (0..n)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_2 * i as f64 / (n - 1) as f64;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        let s = ContactSurface::rigid("arc", pts).unwrap();
        let mid = s.normals[n / 2];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((mid - Vec2::new(h, h)).norm() < 1e-2);
    }

    #[test]
    fn collapsed_segment_rejected() {
        let err = ContactSurface::rigid("z", vec![Vec2::zeros(), Vec2::zeros()]).unwrap_err();
        assert!(matches!(err, GeometryError::CollapsedSegment { segment: 0, .. }));
    }

    #[test]
    fn projection_examples() {
        // master (0,0)-(1,0) traversed leftward, so its outward normal is +y
        let m = flat("m", 0.0, 1.0, 2, 0.0, true);
        let p = project_node_to_master(Vec2::new(0.5, 0.1), &m);
        assert!(p.projected);
        assert_relative_eq!(p.xi, 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.gap, 0.1, epsilon = 1e-15);
        let p = project_node_to_master(Vec2::new(0.5, -0.05), &m);
        assert_relative_eq!(p.gap, -0.05, epsilon = 1e-15);
        let p = project_node_to_master(Vec2::new(1.5, 0.1), &m);
        assert!(!p.projected);
    }

    #[test]
    fn shared_vertex_tie_goes_to_lower_segment() {
        let m = flat("m", 0.0, 1.0, 3, 0.0, false);
        let p = project_node_to_master(Vec2::new(1.0, 0.0), &m);
        assert_eq!(p.segment, 0);
        assert_relative_eq!(p.xi, 1.0);
    }

    #[test]
    fn conforming_frame_coincides() {
        let slave = flat("s", 0.0, 0.25, 5, 0.0, false);
        let master = flat("m", 0.0, 0.25, 5, 0.0, true);
        let f = build_curvilinear_frame(&slave, &master, 0).unwrap();
        assert!(f.master_reversed);
        for (i, s) in f.slave_s.iter().enumerate() {
            assert_relative_eq!(*s, f.master_s[4 - i], epsilon = 1e-15);
        }
    }

    #[test]
    fn shifted_master_abscissas() {
        let l = 0.3;
        let slave = flat("s", 0.0, l, 6, 0.0, false);
        let master = flat("m", 0.5 * l, l, 4, 0.01, true);
        let f = build_curvilinear_frame(&slave, &master, 0).unwrap();
        for (k, s) in f.master_s.iter().rev().enumerate() {
            assert_relative_eq!(*s, (k as f64 + 0.5) * l, epsilon = 1e-14);
        }
        // direct summation oracle for the slave abscissas
        let mut acc = 0.0;
        for (k, s) in f.slave_s.iter().enumerate() {
            assert_relative_eq!(*s, acc, epsilon = 1e-15);
            if k < slave.lengths.len() {
                acc += slave.lengths[k];
            }
        }
    }

    #[test]
    fn origin_at_chain_end_and_middle() {
        let slave = flat("s", 0.0, 1.0, 4, 0.0, false);
        let master = flat("m", -1.0, 1.0, 6, 0.0, true);
        let f = build_curvilinear_frame(&slave, &master, 0).unwrap();
        assert!(f.slave_s.iter().all(|s| *s >= 0.0));
        // master extends past the slave ends: linear extension
        assert_relative_eq!(f.master_s[0], 4.0, epsilon = 1e-14);
        assert_relative_eq!(f.master_s[5], -1.0, epsilon = 1e-14);
        let f = build_curvilinear_frame(&slave, &master, 2).unwrap();
        assert_relative_eq!(f.slave_s[2], 0.0);
        assert_relative_eq!(f.breakpoints[2], -0.5);
    }

    #[test]
    fn folded_master_rejected() {
        let slave = flat("s", 0.0, 1.0, 4, 0.0, false);
        let master = ContactSurface::rigid(
            "m",
            vec![Vec2::new(2.5, 0.1), Vec2::new(1.5, 0.1), Vec2::new(2.0, 0.3), Vec2::new(0.5, 0.1)],
        )
        .unwrap();
        assert!(matches!(
            build_curvilinear_frame(&slave, &master, 0),
            Err(GeometryError::NonMonotone { first: 1, second: 2 })
        ));
    }
}
