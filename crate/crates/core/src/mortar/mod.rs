//! Mortar coupling operators.
//!
//! `G1[i][k] = ∫ φ_i ψ_k ds` over the slave chain and `G21[j][k] = ∫ φ_j ψ_k ds`
//! between master traces and slave multipliers, both integrated on the common
//! curvilinear abscissa over the window where the two chains overlap. The
//! normal/tangential directions are applied later, at the constraint level.
//!
//! The weak non-penetration condition `G1ᵀ x_s = G21ᵀ x_m` is turned into
//! nodal form with `D = G21 G1⁻¹` (n x m): the nodal mortar gap of slave node
//! `i` is `(x_i − Σ_j D_ji x_j)·ν_i`, and master node `j` receives `−D_ji`
//! times the force on slave node `i`.

mod band;
pub mod basis;

pub use band::{BandMatrix, Factored};

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::quadrature::gauss_1d;
use crate::geometry::{build_curvilinear_frame, ContactSurface, CurvilinearFrame, GeometryError};
use basis::{eval_multiplier, multiplier_support, ChainBasis};

/// Multiplier functions whose support overlaps the window by less than this
/// fraction are dropped for the step.
const MIN_SUPPORT_FRACTION: f64 = 1e-6;
/// Entries of `D` below this magnitude are dropped before renormalization.
const D_DROP: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MortarError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("G1 is singular on slave nodes {first}..{last}")]
    Singular { first: usize, last: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MultiplierKind {
    P0,
    P1,
}

impl fmt::Display for MultiplierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MultiplierKind::P0 => "P0",
            MultiplierKind::P1 => "P1",
        })
    }
}

impl std::str::FromStr for MultiplierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P0" => Ok(MultiplierKind::P0),
            "P1" => Ok(MultiplierKind::P1),
            other => Err(format!("unknown multiplier space `{other}` (expected P0 or P1)")),
        }
    }
}

/// One piece of a merged partition. `overlap` is set when both input ranges
/// cover it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subinterval {
    pub a: f64,
    pub b: f64,
    pub overlap: bool,
}

fn merged_points(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    let span = pts.last().unwrap_or(&0.0) - pts.first().unwrap_or(&0.0);
    let eps = 1e-12 * span.max(1e-300);
    pts.dedup_by(|b, a| (*b - *a).abs() <= eps);
    pts
}

/// Union of two sorted breakpoint lists as consecutive subintervals.
pub fn overlap_partition(a: &[f64], b: &[f64]) -> Vec<Subinterval> {
    let pts = merged_points(a.iter().chain(b).copied().collect());
    let covers = |l: &[f64], x: f64| !l.is_empty() && l[0] <= x && x <= l[l.len() - 1];
    pts.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            Subinterval { a: w[0], b: w[1], overlap: covers(a, mid) && covers(b, mid) }
        })
        .collect()
}

/// Window where the slave chain and the projected master chain overlap.
pub fn overlap_window(frame: &CurvilinearFrame) -> Option<(f64, f64)> {
    let (s0, s1) = frame.slave_extent();
    let (m0, m1) = frame.master_extent();
    let (lo, hi) = (s0.max(m0), s1.min(m1));
    (hi - lo > 1e-12 * (s1 - s0)).then_some((lo, hi))
}

/// Slave multiplier indices whose support meets the window.
pub fn included_range(kind: MultiplierKind, frame: &CurvilinearFrame, window: (f64, f64)) -> Range<usize> {
    let m = frame.slave_s.len();
    let keep = |k: usize| {
        let (a, b) = multiplier_support(kind, &frame.slave_s, &frame.breakpoints, k);
        let inter = b.min(window.1) - a.max(window.0);
        inter > MIN_SUPPORT_FRACTION * (b - a)
    };
    let first = (0..m).find(|&k| keep(k));
    match first {
        Some(f) => {
            let last = (f..m).rev().find(|&k| keep(k)).unwrap();
            f..last + 1
        }
        None => 0..0,
    }
}

fn window_partition(frame: &CurvilinearFrame, kind: MultiplierKind, window: (f64, f64), with_master: bool) -> Vec<f64> {
    let inside = |x: &f64| *x > window.0 && *x < window.1;
    let mut pts = vec![window.0, window.1];
    pts.extend(frame.slave_s.iter().filter(|x| inside(x)));
    if kind == MultiplierKind::P0 {
        pts.extend(frame.breakpoints.iter().filter(|x| inside(x)));
    }
    if with_master {
        pts.extend(frame.master_s.iter().filter(|x| inside(x)));
    }
    merged_points(pts)
}

fn band_width(quadratic: bool) -> usize {
    if quadratic {
        3
    } else {
        1
    }
}

/// `G1` over the window (m x m, banded). Rows and columns of multipliers
/// outside the window stay zero.
pub fn assemble_g1(frame: &CurvilinearFrame, window: (f64, f64), kind: MultiplierKind, quadratic: bool) -> BandMatrix {
    let m = frame.slave_s.len();
    let mut g1 = BandMatrix::zeros(m, band_width(quadratic));
    let slave = ChainBasis::new(&frame.slave_s, quadratic);
    let (gp, gw) = gauss_1d(3);
    for w in window_partition(frame, kind, window, false).windows(2) {
        let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (xi, wt) in gp.iter().zip(gw) {
            let x = c + h * xi;
            let phi = slave.eval(x);
            let psi = eval_multiplier(kind, &frame.slave_s, &frame.breakpoints, x);
            for &(i, vi) in &phi.0[..phi.1] {
                for &(k, vk) in &psi.0[..psi.1] {
                    g1.add(i, k, h * wt * vi * vk);
                }
            }
        }
    }
    g1
}

/// `G21` over the window as sparse rows `(slave multiplier k, value)` per
/// master node.
pub fn assemble_g21(
    frame: &CurvilinearFrame,
    window: (f64, f64),
    kind: MultiplierKind,
    master_quadratic: bool,
) -> Vec<Vec<(usize, f64)>> {
    let n = frame.master_s.len();
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let master = ChainBasis::new(&frame.master_s, master_quadratic);
    let (gp, gw) = gauss_1d(3);
    for w in window_partition(frame, kind, window, true).windows(2) {
        let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (xi, wt) in gp.iter().zip(gw) {
            let x = c + h * xi;
            let phi = master.eval(x);
            let psi = eval_multiplier(kind, &frame.slave_s, &frame.breakpoints, x);
            for &(j, vj) in &phi.0[..phi.1] {
                for &(k, vk) in &psi.0[..psi.1] {
                    *rows[j].entry(k).or_insert(0.0) += h * wt * vj * vk;
                }
            }
        }
    }
    rows.into_iter().map(|r| r.into_iter().filter(|(_, v)| *v != 0.0).collect()).collect()
}

/// `∫ φ_i ds` over the whole slave chain, used to turn nodal forces into
/// contact stresses.
pub fn trace_weights(s: &[f64], quadratic: bool) -> Vec<f64> {
    let basis = ChainBasis::new(s, quadratic);
    let mut out = vec![0.0; s.len()];
    let (gp, gw) = gauss_1d(3);
    for w in s.windows(2) {
        let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (xi, wt) in gp.iter().zip(gw) {
            let v = basis.eval(c + h * xi);
            for &(i, vi) in &v.0[..v.1] {
                out[i] += h.abs() * wt * vi;
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct MortarOperator {
    pub kind: MultiplierKind,
    pub slave_quadratic: bool,
    pub master_quadratic: bool,
    pub frame: CurvilinearFrame,
    pub window: Option<(f64, f64)>,
    /// Slave nodes carrying a multiplier this step.
    pub included: Range<usize>,
    pub g1: BandMatrix,
    /// Sparse rows of `G21` per master node.
    pub g21: Vec<Vec<(usize, f64)>>,
    /// `∫ φ_i ds` per slave node.
    pub weights: Vec<f64>,
    /// Per slave node: `(master chain index, D_ji)`, renormalized so the
    /// weights sum to one. Empty for excluded nodes.
    pub coupling: Vec<Vec<(usize, f64)>>,
}

impl MortarOperator {
    pub fn is_coupled(&self, i: usize) -> bool {
        !self.coupling[i].is_empty()
    }

    pub fn g1_dense(&self) -> DMatrix<f64> {
        self.g1.to_dense()
    }

    pub fn g21_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.g21.len(), self.frame.slave_s.len());
        for (j, row) in self.g21.iter().enumerate() {
            for &(k, v) in row {
                d[(j, k)] = v;
            }
        }
        d
    }

    /// `Dᵀ = G1⁻ᵀ G21ᵀ` (m x n) as used by the constraints.
    pub fn collapse_matrix(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.frame.slave_s.len(), self.frame.master_s.len());
        for (i, col) in self.coupling.iter().enumerate() {
            for &(j, v) in col {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// `matrix,row,col,value` lines for G1, G21 and D (nonzeros only).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("matrix,row,col,value\n");
        let g1 = self.g1_dense();
        for i in 0..g1.nrows() {
            for k in 0..g1.ncols() {
                if g1[(i, k)] != 0.0 {
                    writeln!(s, "G1,{i},{k},{:.17e}", g1[(i, k)]).unwrap();
                }
            }
        }
        for (j, row) in self.g21.iter().enumerate() {
            for &(k, v) in row {
                writeln!(s, "G21,{j},{k},{v:.17e}").unwrap();
            }
        }
        for (i, col) in self.coupling.iter().enumerate() {
            for &(j, v) in col {
                writeln!(s, "D,{j},{i},{v:.17e}").unwrap();
            }
        }
        s
    }
}

/// Builds the frame (origin at slave node `origin`), both matrices and the
/// nodal coupling `D` on the current positions.
pub fn assemble_mortar(
    slave: &ContactSurface,
    master: &ContactSurface,
    kind: MultiplierKind,
    origin: usize,
) -> Result<MortarOperator, MortarError> {
    let frame = build_curvilinear_frame(slave, master, origin)?;
    let m = slave.len();
    let weights = trace_weights(&frame.slave_s, slave.quadratic);
    let mut op = MortarOperator {
        kind,
        slave_quadratic: slave.quadratic,
        master_quadratic: master.quadratic,
        window: overlap_window(&frame),
        included: 0..0,
        g1: BandMatrix::zeros(m, band_width(slave.quadratic)),
        g21: vec![Vec::new(); master.len()],
        weights,
        coupling: vec![Vec::new(); m],
        frame,
    };
    let Some(window) = op.window else {
        return Ok(op);
    };
    op.included = included_range(kind, &op.frame, window);
    op.g1 = assemble_g1(&op.frame, window, kind, slave.quadratic);
    op.g21 = assemble_g21(&op.frame, window, kind, master.quadratic);
    if op.included.is_empty() {
        return Ok(op);
    }

    // Solve G1_IIᵀ w = (G21 row j)_I for every master row: w_i = D_ji.
    let r = op.included.clone();
    let p = band_width(slave.quadratic);
    let mut sub_t = BandMatrix::zeros(r.len(), p);
    for i in r.clone() {
        for k in i.saturating_sub(p)..(i + p + 1).min(r.end) {
            if k >= r.start {
                let v = op.g1.get(i, k);
                if v != 0.0 {
                    sub_t.add(k - r.start, i - r.start, v);
                }
            }
        }
    }
    let lu = sub_t.factor().ok_or(MortarError::Singular { first: r.start, last: r.end - 1 })?;
    let mut rhs = vec![0.0; r.len()];
    for (j, row) in op.g21.iter().enumerate() {
        if row.iter().all(|(k, _)| !r.contains(k)) {
            continue;
        }
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for &(k, v) in row {
            if r.contains(&k) {
                rhs[k - r.start] = v;
            }
        }
        lu.solve_in_place(&mut rhs);
        for (off, &v) in rhs.iter().enumerate() {
            if v.abs() > D_DROP {
                op.coupling[r.start + off].push((j, v));
            }
        }
    }
    for col in &mut op.coupling {
        let total: f64 = col.iter().map(|(_, v)| v).sum();
        if total.abs() < 1e-6 {
            col.clear();
        } else {
            col.iter_mut().for_each(|(_, v)| *v /= total);
        }
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec2;
    use approx::assert_relative_eq;

    fn chain(x0: f64, dx: f64, n: usize, y: f64, leftward: bool) -> ContactSurface {
        let mut pts: Vec<Vec2> = (0..n).map(|i| Vec2::new(x0 + dx * i as f64, y)).collect();
        if leftward {
            pts.reverse();
        }
        ContactSurface::rigid("c", pts).unwrap()
    }

    #[test]
    fn partition_examples() {
        let p = overlap_partition(&[0.0, 1.0, 2.0], &[0.5, 1.5]);
        let pts: Vec<f64> = p.iter().map(|s| s.a).chain([p.last().unwrap().b]).collect();
        assert_eq!(pts, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(p.iter().filter(|s| s.overlap).count(), 2);
        let same = overlap_partition(&[0.0, 1.0], &[0.0, 1.0]);
        assert_eq!(same.len(), 1);
        assert!(same[0].overlap);
        let disjoint = overlap_partition(&[0.0, 1.0], &[2.0, 3.0]);
        assert!(disjoint.iter().all(|s| !s.overlap));
    }

    #[test]
    fn no_overlap_gives_zero_coupling() {
        let slave = chain(0.0, 0.5, 3, 0.0, false);
        let master = chain(5.0, 0.5, 3, 0.1, true);
        let op = assemble_mortar(&slave, &master, MultiplierKind::P1, 0).unwrap();
        assert!(op.window.is_none());
        assert!(op.coupling.iter().all(Vec::is_empty));
    }

    #[test]
    fn conforming_collapse_to_identity() {
        for kind in [MultiplierKind::P0, MultiplierKind::P1] {
            let slave = chain(0.0, 0.25, 6, 0.0, false);
            let master = chain(0.0, 0.25, 6, 0.0, true);
            let op = assemble_mortar(&slave, &master, kind, 0).unwrap();
            let d = op.collapse_matrix();
            for i in 0..6 {
                for j in 0..6 {
                    let expect = if j == 5 - i { 1.0 } else { 0.0 };
                    assert!((d[(i, j)] - expect).abs() < 1e-12, "{kind} ({i},{j}) = {}", d[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn g1_row_sums_are_trace_integrals() {
        let slave = chain(0.0, 0.2, 7, 0.0, false);
        let master = chain(-1.0, 0.3, 12, 0.0, true);
        for kind in [MultiplierKind::P0, MultiplierKind::P1] {
            let op = assemble_mortar(&slave, &master, kind, 0).unwrap();
            let g1 = op.g1_dense();
            for i in 0..7 {
                assert_relative_eq!(g1.row(i).sum(), op.weights[i], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn columns_of_g21_transfer_unity() {
        // Σ_j G21[j][k] = ∫ ψ_k over the window = Σ_i G1[i][k]
        let slave = chain(0.0, 0.2, 9, 0.0, false);
        let master = chain(0.13, 0.37, 5, 0.05, true);
        for kind in [MultiplierKind::P0, MultiplierKind::P1] {
            let op = assemble_mortar(&slave, &master, kind, 0).unwrap();
            let (g1, g21) = (op.g1_dense(), op.g21_dense());
            for k in 0..9 {
                assert_relative_eq!(g21.column(k).sum(), g1.column(k).sum(), epsilon = 1e-14);
            }
            for col in &op.coupling {
                if !col.is_empty() {
                    assert_relative_eq!(col.iter().map(|p| p.1).sum::<f64>(), 1.0, epsilon = 1e-12);
                }
            }
        }
    }
}
