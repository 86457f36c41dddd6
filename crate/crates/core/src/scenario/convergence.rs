//! Mesh-convergence study of the Tresca slab in the energy norm.

use log::{info, warn};

use super::builtin::slab_tresca;
use super::{run_scenario, RunOutcome, ScenarioError};
use crate::fem::hooke_internal_force;
use crate::fem::shape::shape_eval_unchecked;
use crate::material::Hooke;
use crate::mesh::Mesh2D;
use crate::mortar::MultiplierKind;
use crate::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSpec {
    /// Study meshes `(nx, ny)`, coarse to fine.
    pub levels: Vec<(usize, usize)>,
    pub reference: (usize, usize),
    /// Multipliers used for the reference run.
    pub reference_multipliers: MultiplierKind,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self { levels: vec![(13, 3), (26, 6), (52, 12)], reference: (208, 48), reference_multipliers: MultiplierKind::P1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// Element diameter (mm).
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub multipliers: MultiplierKind,
    /// `a(u_ref - u_h, u_ref - u_h)^½ / a(u_ref, u_ref)^½`.
    pub error: f64,
}

/// Parametric coordinates of `p` in element `e` (reference configuration),
/// or `None` when Newton fails. Points outside come back with `|ξ| > 1`.
fn inverse_map(mesh: &Mesh2D, e: usize, p: Vec2) -> Option<(f64, f64)> {
    let coords = mesh.element_coords(e);
    let (mut xi, mut eta) = (0.0, 0.0);
    for _ in 0..30 {
        let sv = shape_eval_unchecked(mesh.kind, xi, eta);
        let mut x = Vec2::zeros();
        let mut j = [[0.0; 2]; 2];
        for (a, c) in coords.iter().enumerate() {
            x += *c * sv.values()[a];
            for d in 0..2 {
                j[0][d] += c.x * sv.gradients()[a][d];
                j[1][d] += c.y * sv.gradients()[a][d];
            }
        }
        let r = p - x;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let dxi = (j[1][1] * r.x - j[0][1] * r.y) / det;
        let deta = (-j[1][0] * r.x + j[0][0] * r.y) / det;
        xi += dxi;
        eta += deta;
        if dxi.abs().max(deta.abs()) < 1e-13 {
            return Some((xi, eta));
        }
    }
    None
}

/// Interpolates a nodal field of `mesh` at point `p` of its reference
/// configuration. Points outside the mesh are clamped to the closest element
/// boundary; the flag reports a clamp.
pub fn interpolate_field(mesh: &Mesh2D, field: &[Vec2], p: Vec2) -> (Vec2, bool) {
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for e in 0..mesh.elements.len() {
        let coords = mesh.element_coords(e);
        let (lo, hi) = coords.iter().fold((Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY)), |(lo, hi), c| {
            (lo.inf(c), hi.sup(c))
        });
        let slack = 1e-9 + 0.5 * (hi - lo).norm();
        if p.x < lo.x - slack || p.x > hi.x + slack || p.y < lo.y - slack || p.y > hi.y + slack {
            continue;
        }
        let Some((xi, eta)) = inverse_map(mesh, e, p) else { continue };
        let outside = (xi.abs() - 1.0).max(eta.abs() - 1.0).max(0.0);
        if best.is_none_or(|b| outside < b.0) {
            best = Some((outside, e, xi, eta));
        }
        if outside == 0.0 {
            break;
        }
    }
    let Some((outside, e, xi, eta)) = best else {
        return (Vec2::zeros(), true);
    };
    let clamped = outside > 1e-9;
    let sv = shape_eval_unchecked(mesh.kind, xi.clamp(-1.0, 1.0), eta.clamp(-1.0, 1.0));
    let u = mesh.elements[e].nodes.iter().zip(sv.values()).map(|(&n, &w)| field[n] * w).sum();
    (u, clamped)
}

/// Energy norm `a(u, u)^½` of a nodal field on a single-material mesh.
pub fn energy_norm(mesh: &Mesh2D, u: &[Vec2], hooke: &Hooke) -> Result<f64, ScenarioError> {
    let mut a = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        let coords = mesh.element_coords(e);
        let ue: Vec<Vec2> = el.nodes.iter().map(|&n| u[n]).collect();
        let f = hooke_internal_force(e, mesh.kind, &coords, &ue, hooke)
            .map_err(|err| ScenarioError::Output(err.to_string()))?;
        a += ue.iter().enumerate().map(|(k, v)| v.x * f[2 * k] + v.y * f[2 * k + 1]).sum::<f64>();
    }
    Ok(a.max(0.0).sqrt())
}

/// Relative energy-norm error of a coarse run against a reference run; the
/// coarse displacement is interpolated onto the reference nodes.
pub fn energy_norm_error(
    coarse_mesh: &Mesh2D,
    coarse: &RunOutcome,
    reference_mesh: &Mesh2D,
    reference: &RunOutcome,
    hooke: &Hooke,
) -> Result<f64, ScenarioError> {
    let mut clamps = 0;
    let diff: Vec<Vec2> = reference
        .reference
        .iter()
        .zip(&reference.displacement)
        .map(|(&p, &u_ref)| {
            let (u, clamped) = interpolate_field(coarse_mesh, &coarse.displacement, p);
            clamps += usize::from(clamped);
            u_ref - u
        })
        .collect();
    if clamps > 0 {
        warn!("{clamps} reference nodes lie outside the coarse mesh; values clamped");
    }
    let norm = energy_norm(reference_mesh, &reference.displacement, hooke)?;
    if norm == 0.0 {
        return Err(ScenarioError::Output("reference solution has zero energy".into()));
    }
    Ok(energy_norm(reference_mesh, &diff, hooke)? / norm)
}

/// Runs the study meshes with P0 and P1 multipliers against one reference
/// run. Only the `slab_tresca` family is available. Rows are sorted by
/// decreasing `h`, P0 first at each level.
pub fn convergence_study(family: &str, spec: &ConvergenceSpec) -> Result<Vec<ConvergenceRow>, ScenarioError> {
    if family != "slab_tresca" {
        return Err(ScenarioError::Invalid(vec![format!("no convergence family `{family}` (available: slab_tresca)")]));
    }
    let (rx, ry) = spec.reference;
    if spec.levels.is_empty() || spec.levels.iter().any(|&(nx, ny)| nx >= rx || ny >= ry) {
        return Err(ScenarioError::Invalid(vec!["reference mesh must be strictly finer than every study mesh".into()]));
    }
    let hooke = Hooke { young: super::builtin::SLAB_YOUNG, poisson: super::builtin::POISSON, density: super::builtin::DENSITY };
    let mesh_of = |sc: &super::Scenario| sc.build_mesh().map(|(m, _)| m);
    info!("convergence reference {rx}x{ry}");
    let ref_sc = slab_tresca(rx, ry, spec.reference_multipliers);
    let reference = run_scenario(&ref_sc, None)?;
    let ref_mesh = mesh_of(&ref_sc)?;
    let mut levels = spec.levels.clone();
    levels.sort_by_key(|&(nx, ny)| nx * ny);
    let mut rows = Vec::new();
    for (nx, ny) in levels {
        for multipliers in [MultiplierKind::P0, MultiplierKind::P1] {
            let sc = slab_tresca(nx, ny, multipliers);
            let out = run_scenario(&sc, None)?;
            let mesh = mesh_of(&sc)?;
            let error = energy_norm_error(&mesh, &out, &ref_mesh, &reference, &hooke)?;
            let h = (super::builtin::SLAB_WIDTH / nx as f64).hypot(super::builtin::SLAB_HEIGHT / ny as f64);
            info!("{nx}x{ny} {multipliers}: h = {h:.4}, error = {error:.4e}");
            rows.push(ConvergenceRow { h, nx, ny, multipliers, error });
        }
    }
    Ok(rows)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("h,nx,ny,multipliers,error\n");
    for r in rows {
        s.push_str(&format!("{:.16e},{},{},{},{:.16e}\n", r.h, r.nx, r.ny, r.multipliers, r.error));
    }
    s
}
