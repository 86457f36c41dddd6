//! Forward-increment contact enforcement on top of the explicit step.
//!
//! Every slave node `i` gets a normal row and (with friction) a tangential
//! row acting on the relative position `x_i − Σ_j D_ji x_j`, where `D` is the
//! mortar coupling (global backend) or the linear projection weights on the
//! closest master segment (local backend). Contact forces `z` correct the
//! predicted positions, `x = x̃ + dt² M⁻¹ Cᵀ z`, so that the conditions hold
//! at the end of the step. Geometry (`D`, normals) is frozen at the
//! start-of-step positions, so a stuck node keeps its master point: taking
//! it from the predicted positions would re-anchor the stick point by the
//! free tangential motion of the predictor every step.

mod audit;
pub mod lcp;

pub use audit::{kkt_audit, KktReport};

use std::collections::BTreeSet;
use std::fmt;

use log::{debug, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{project_node_to_master, ContactSurface, GeometryError};
use crate::mortar::{assemble_mortar, trace_weights, MortarError, MultiplierKind};
use crate::Vec2;
use lcp::{BoxProblem, LcpError, Row, RowStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mortar(#[from] MortarError),
    #[error("pair `{pair}`: {source}")]
    Solve { pair: String, source: LcpError },
    #[error("pair `{0}`: slave surface must be deformable")]
    RigidSlave(String),
    #[error("invalid friction law: {0}")]
    InvalidFriction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum FrictionLaw {
    Frictionless,
    Coulomb { mu: f64 },
    /// Slip bound in MPa.
    Tresca { s_h_mpa: f64 },
}

impl FrictionLaw {
    pub fn validate(&self) -> Result<(), ContactError> {
        match *self {
            FrictionLaw::Coulomb { mu } if !(mu >= 0.0 && mu.is_finite()) => {
                Err(ContactError::InvalidFriction(format!("mu must be >= 0, got {mu}")))
            }
            FrictionLaw::Tresca { s_h_mpa } if !(s_h_mpa >= 0.0 && s_h_mpa.is_finite()) => {
                Err(ContactError::InvalidFriction(format!("s_h must be >= 0, got {s_h_mpa}")))
            }
            _ => Ok(()),
        }
    }

    fn has_tangent(&self) -> bool {
        match *self {
            FrictionLaw::Frictionless => false,
            FrictionLaw::Coulomb { mu } => mu > 0.0,
            FrictionLaw::Tresca { .. } => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Node-on-segment.
    Local,
    /// Mortar.
    Global,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Local => "local",
            Algorithm::Global => "global",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(Algorithm::Local),
            "global" => Ok(Algorithm::Global),
            other => Err(format!("unknown algorithm `{other}` (expected local or global)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverChoice {
    pub algorithm: Algorithm,
    /// Ignored by the local algorithm.
    pub multipliers: MultiplierKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactSettings {
    /// Relative stopping tolerance of the Coulomb fixed point on slip bounds.
    pub fp_tol: f64,
    pub fp_max: usize,
    /// Budget of projected Gauss-Seidel sweeps per block.
    pub sweep_max: usize,
    /// Accepted end-of-step penetration (mm).
    pub tol_gap: f64,
    /// Slave nodes whose predicted gap is below this fraction of the mean
    /// slave segment length enter the solve.
    pub search_factor: f64,
}

impl Default for ContactSettings {
    fn default() -> Self {
        Self { fp_tol: 1e-8, fp_max: 50, sweep_max: 200, tol_gap: 1e-10, search_factor: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactPair {
    pub name: String,
    /// Indices into the model's surface list.
    pub slave: usize,
    pub master: usize,
    pub choice: SolverChoice,
    pub friction: FrictionLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Separated,
    Stick,
    Slip,
}

impl fmt::Display for NodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeStatus::Separated => "separated",
            NodeStatus::Stick => "stick",
            NodeStatus::Slip => "slip",
        })
    }
}

/// Linearized constraint of one slave node for the current step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeConstraint {
    pub pair: usize,
    pub slave_index: usize,
    pub normal: Vec2,
    pub tangent: Vec2,
    /// `∫ φ_i ds` (mm).
    pub weight: f64,
    pub abscissa: f64,
    /// `(mesh node, coefficient)`: `+1` on the slave node, `−D_ji` on master
    /// nodes.
    pub terms: Vec<(usize, f64)>,
    /// Constant part contributed by rigid master points.
    pub fixed: Vec2,
}

impl NodeConstraint {
    pub fn relative(&self, x: &[Vec2]) -> Vec2 {
        self.terms.iter().fold(self.fixed, |acc, &(n, c)| acc + x[n] * c)
    }

    pub fn relative_increment(&self, x: &[Vec2], x_prev: &[Vec2]) -> Vec2 {
        self.terms.iter().fold(Vec2::zeros(), |acc, &(n, c)| acc + (x[n] - x_prev[n]) * c)
    }

    pub fn gap(&self, x: &[Vec2]) -> f64 {
        self.relative(x).dot(&self.normal)
    }

    pub fn slip(&self, x: &[Vec2], x_prev: &[Vec2]) -> f64 {
        self.relative_increment(x, x_prev).dot(&self.tangent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeResult {
    pub slave_index: usize,
    pub node: usize,
    pub abscissa: f64,
    pub weight: f64,
    /// Nodal normal force `(G1 Λ_N)` in N per unit thickness, `>= 0`.
    pub normal_force: f64,
    pub tangential_force: f64,
    /// Slip bound used for the tangential force.
    pub bound: f64,
    /// End-of-step gap (mm), `+inf` for unconstrained nodes.
    pub gap: f64,
    /// Relative tangential increment over the step (mm).
    pub slip: f64,
    pub status: NodeStatus,
    /// Node has a constraint this step (projected / inside the mortar window).
    pub constrained: bool,
    /// Friction is enforced (false when the tangential motion is prescribed
    /// or the law is frictionless).
    pub tangent_free: bool,
}

impl NodeResult {
    /// Normal contact stress (MPa, compression negative).
    pub fn sigma_n(&self) -> f64 {
        -self.normal_force / self.weight
    }

    pub fn sigma_t(&self) -> f64 {
        self.tangential_force / self.weight
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub name: String,
    pub friction: FrictionLaw,
    pub nodes: Vec<NodeResult>,
    /// Mean slave segment length (mm), used to normalize gap residuals.
    pub length_scale: f64,
    pub slave_force_total: Vec2,
    /// Includes forces on rigid master points.
    pub master_force_total: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactStepResult {
    pub pairs: Vec<PairResult>,
    /// Contact force per mesh node.
    pub forces: Vec<Vec2>,
    /// Position correction per mesh node.
    pub correction: Vec<Vec2>,
    pub fixed_point_iterations: usize,
    pub sweeps: usize,
}

impl ContactStepResult {
    pub fn any_active(&self) -> bool {
        self.pairs.iter().any(|p| p.nodes.iter().any(|n| n.normal_force > 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Warm {
    normal: RowStatus,
    tangent: RowStatus,
    force: f64,
}

const COLD: Warm = Warm { normal: RowStatus::Inactive, tangent: RowStatus::Inactive, force: 0.0 };

/// Statuses and forces carried between steps for warm starts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContactState {
    warm: Vec<Vec<Warm>>,
}

/// Everything the solver needs from the explicit predictor.
pub struct StepInput<'a> {
    /// Surfaces updated on the start-of-step positions.
    pub surfaces: &'a [ContactSurface],
    pub x_prev: &'a [Vec2],
    pub x_pred: &'a [Vec2],
    /// `dt² / m_eff` per node and component; zero on prescribed components.
    pub compliance: &'a [Vec2],
}

fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

fn cumulative(lengths: &[f64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(lengths.len() + 1);
    s.push(0.0);
    let mut acc = 0.0;
    for l in lengths {
        acc += l;
        s.push(acc);
    }
    s
}

fn push_term(c: &mut NodeConstraint, surface: &ContactSurface, j: usize, coeff: f64) {
    if surface.is_rigid() {
        c.fixed += surface.positions[j] * coeff;
    } else {
        c.terms.push((surface.nodes[j], coeff));
    }
}

/// Constraints for every slave node of a pair (`None` for nodes without a
/// projection or outside the mortar window).
pub fn build_constraints(
    pair_index: usize,
    pair: &ContactPair,
    surfaces: &[ContactSurface],
) -> Result<Vec<Option<NodeConstraint>>, ContactError> {
    let slave = &surfaces[pair.slave];
    let master = &surfaces[pair.master];
    if slave.is_rigid() {
        return Err(ContactError::RigidSlave(pair.name.clone()));
    }
    let m = slave.len();
    match pair.choice.algorithm {
        Algorithm::Global => {
            let op = assemble_mortar(slave, master, pair.choice.multipliers, 0)?;
            Ok((0..m)
                .map(|i| {
                    if !op.is_coupled(i) {
                        return None;
                    }
                    let normal = -slave.normals[i];
                    let mut c = NodeConstraint {
                        pair: pair_index,
                        slave_index: i,
                        normal,
                        tangent: perp(normal),
                        weight: op.weights[i],
                        abscissa: op.frame.slave_s[i],
                        terms: vec![(slave.nodes[i], 1.0)],
                        fixed: Vec2::zeros(),
                    };
                    for &(j, d) in &op.coupling[i] {
                        push_term(&mut c, master, j, -d);
                    }
                    Some(c)
                })
                .collect())
        }
        Algorithm::Local => {
            let s = cumulative(&slave.lengths);
            let weights = trace_weights(&s, slave.quadratic);
            Ok((0..m)
                .map(|i| {
                    let p = project_node_to_master(slave.positions[i], master);
                    if !p.projected {
                        return None;
                    }
                    let mut c = NodeConstraint {
                        pair: pair_index,
                        slave_index: i,
                        normal: p.normal,
                        tangent: perp(p.normal),
                        weight: weights[i],
                        abscissa: s[i],
                        terms: vec![(slave.nodes[i], 1.0)],
                        fixed: Vec2::zeros(),
                    };
                    push_term(&mut c, master, p.segment, -(1.0 - p.xi));
                    push_term(&mut c, master, p.segment + 1, -p.xi);
                    Some(c)
                })
                .collect())
        }
    }
}

/// Sparse constraint row over dofs `2 * node + component`.
fn row_entries(c: &NodeConstraint, dir: Vec2) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(2 * c.terms.len());
    for &(n, k) in &c.terms {
        out.push((2 * n, k * dir.x));
        out.push((2 * n + 1, k * dir.y));
    }
    out
}

fn diag(entries: &[(usize, f64)], comp: &[f64]) -> f64 {
    entries.iter().map(|&(d, v)| comp[d] * v * v).sum()
}

struct RowInfo {
    constraint: usize,
    entries: Vec<(usize, f64)>,
    tangent: bool,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

struct Solved {
    z: Vec<f64>,
    status: Vec<RowStatus>,
    fp_iterations: usize,
    sweeps: usize,
}

/// Solves one coupled block, iterating the Coulomb fixed point on slip bounds
/// when needed.
#[allow(clippy::too_many_arguments)]
fn solve_block(
    a: &DMatrix<f64>,
    q: &[f64],
    rows_base: &[Row],
    mu: &[f64],
    warm_status: &[RowStatus],
    warm_force: &[f64],
    settings: &ContactSettings,
    pair_name: &str,
) -> Result<Solved, ContactError> {
    let n = q.len();
    let coulomb = mu.iter().any(|&m| m > 0.0);
    let tol = 1e-12 * q.iter().zip(0..n).map(|(v, r)| (v / a[(r, r)]).abs()).fold(1e-300, f64::max);
    let solve = |rows: &[Row], warm: &[RowStatus]| {
        BoxProblem { a, q, rows }
            .solve(warm, settings.sweep_max, tol)
            .map_err(|source| ContactError::Solve { pair: pair_name.to_string(), source })
    };
    if !coulomb {
        let sol = solve(rows_base, warm_status)?;
        return Ok(Solved { z: sol.z, status: sol.status, fp_iterations: 1, sweeps: sol.sweeps });
    }
    // Φ_h: s^{k+1} = μ f(s^k), with Tresca sub-problems.
    let mut bounds: Vec<f64> = (0..n)
        .map(|r| match rows_base[r] {
            Row::Tangent { normal, .. } => mu[r] * warm_force[normal],
            Row::Normal => 0.0,
        })
        .collect();
    let mut rows = rows_base.to_vec();
    let mut status = warm_status.to_vec();
    let mut sweeps = 0;
    let mut last = None;
    let mut iterations = 0;
    for it in 1..=settings.fp_max.max(1) {
        iterations = it;
        for r in 0..n {
            if let Row::Tangent { normal, .. } = rows[r] {
                rows[r] = Row::Tangent { normal, beta: bounds[r], gamma: 0.0 };
            }
        }
        let sol = solve(&rows, &status)?;
        sweeps += sol.sweeps;
        let mut change: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for r in 0..n {
            if let Row::Tangent { normal, .. } = rows[r] {
                let b = mu[r] * sol.z[normal];
                change = change.max((b - bounds[r]).abs());
                scale = scale.max(b);
                bounds[r] = b;
            }
        }
        status = sol.status.clone();
        last = Some(sol);
        if change <= settings.fp_tol * scale.max(1e-300) {
            break;
        }
        if it == settings.fp_max {
            warn!("Coulomb fixed point not converged after {it} iterations (change {change:e}, scale {scale:e})");
        }
    }
    let fp = last.unwrap();
    // Exact Coulomb solution for the converged statuses, if consistent.
    let coulomb_rows: Vec<Row> = (0..n)
        .map(|r| match rows_base[r] {
            Row::Tangent { normal, .. } => Row::Tangent { normal, beta: 0.0, gamma: mu[r] },
            Row::Normal => Row::Normal,
        })
        .collect();
    let problem = BoxProblem { a, q, rows: &coulomb_rows };
    if let Ok(exact) = problem.solve(&fp.status, 0, 0.0) {
        return Ok(Solved { z: exact.z, status: exact.status, fp_iterations: iterations, sweeps });
    }
    debug!("Coulomb polish rejected; keeping fixed-point iterate");
    Ok(Solved { z: fp.z, status: fp.status, fp_iterations: iterations, sweeps })
}

/// One forward-increment contact solve over all pairs.
pub fn solve_contact_step(
    pairs: &[ContactPair],
    input: &StepInput<'_>,
    state: &mut ContactState,
    settings: &ContactSettings,
) -> Result<ContactStepResult, ContactError> {
    let n_nodes = input.x_pred.len();
    let comp: Vec<f64> = input.compliance.iter().flat_map(|c| [c.x, c.y]).collect();
    state.warm.resize(pairs.len(), Vec::new());

    let mut constraints: Vec<NodeConstraint> = Vec::new();
    let mut per_pair: Vec<Vec<Option<usize>>> = Vec::with_capacity(pairs.len());
    for (p, pair) in pairs.iter().enumerate() {
        pair.friction.validate()?;
        let cs = build_constraints(p, pair, input.surfaces)?;
        let m = cs.len();
        if state.warm[p].len() != m {
            state.warm[p] = vec![COLD; m];
        }
        per_pair.push(
            cs.into_iter()
                .map(|c| {
                    c.map(|c| {
                        constraints.push(c);
                        constraints.len() - 1
                    })
                })
                .collect(),
        );
    }

    let warm_of = |state: &ContactState, c: &NodeConstraint| state.warm[c.pair][c.slave_index];
    let g_pred: Vec<f64> = constraints.iter().map(|c| c.gap(input.x_pred)).collect();
    let s_pred: Vec<f64> = constraints.iter().map(|c| c.slip(input.x_pred, input.x_prev)).collect();

    let mut candidates: BTreeSet<usize> = BTreeSet::new();
    for (k, c) in constraints.iter().enumerate() {
        let slave = &input.surfaces[pairs[c.pair].slave];
        let search = settings.search_factor * slave.total_length() / slave.n_segments() as f64;
        if g_pred[k] < search || warm_of(state, c).normal == RowStatus::Active {
            candidates.insert(k);
        }
    }

    let mut z_normal = vec![0.0; constraints.len()];
    let mut z_tangent = vec![0.0; constraints.len()];
    let mut st_normal = vec![RowStatus::Inactive; constraints.len()];
    let mut st_tangent = vec![RowStatus::Inactive; constraints.len()];
    let mut tangent_free = vec![false; constraints.len()];
    let mut correction = vec![Vec2::zeros(); n_nodes];
    let mut fp_iterations = 0;
    let mut sweeps = 0;

    for round in 0.. {
        // rows
        let mut rows: Vec<RowInfo> = Vec::new();
        let mut normal_row = vec![usize::MAX; constraints.len()];
        for &k in &candidates {
            let c = &constraints[k];
            let ne = row_entries(c, c.normal);
            let dn = diag(&ne, &comp);
            if !(dn > 0.0) {
                continue;
            }
            normal_row[k] = rows.len();
            rows.push(RowInfo { constraint: k, entries: ne, tangent: false });
            if pairs[c.pair].friction.has_tangent() {
                let te = row_entries(c, c.tangent);
                if diag(&te, &comp) > 1e-12 * dn {
                    tangent_free[k] = true;
                    rows.push(RowInfo { constraint: k, entries: te, tangent: true });
                }
            }
        }
        // coupled blocks through shared free dofs
        let nr = rows.len();
        let mut parent: Vec<usize> = (0..nr).collect();
        let mut dof_rows: std::collections::BTreeMap<usize, Vec<(usize, f64)>> = Default::default();
        for (r, row) in rows.iter().enumerate() {
            for &(d, v) in &row.entries {
                if comp[d] > 0.0 && v != 0.0 {
                    dof_rows.entry(d).or_default().push((r, v));
                }
            }
        }
        for list in dof_rows.values() {
            let r0 = find(&mut parent, list[0].0);
            for &(r, _) in &list[1..] {
                let ri = find(&mut parent, r);
                if ri != r0 {
                    parent[ri] = r0;
                }
            }
        }
        // a tangential row is bounded by its own normal row's force
        for (r, row) in rows.iter().enumerate() {
            if row.tangent {
                let (a, b) = (find(&mut parent, r), find(&mut parent, normal_row[row.constraint]));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for r in 0..nr {
            let root = find(&mut parent, r);
            blocks.entry(root).or_default().push(r);
        }
        let mut local = vec![0usize; nr];
        let mut z_rows = vec![0.0; nr];
        let mut st_rows = vec![RowStatus::Inactive; nr];
        for members in blocks.values() {
            for (i, &r) in members.iter().enumerate() {
                local[r] = i;
            }
            let nb = members.len();
            let mut a = DMatrix::<f64>::zeros(nb, nb);
            let in_block: BTreeSet<usize> = members.iter().copied().collect();
            for (&d, list) in &dof_rows {
                if !in_block.contains(&list[0].0) {
                    continue;
                }
                for &(r1, v1) in list {
                    for &(r2, v2) in list {
                        a[(local[r1], local[r2])] += comp[d] * v1 * v2;
                    }
                }
            }
            let mut q = vec![0.0; nb];
            let mut kinds = vec![Row::Normal; nb];
            let mut mu = vec![0.0; nb];
            let mut warm_status = vec![RowStatus::Inactive; nb];
            let mut warm_force = vec![0.0; nb];
            for (i, &r) in members.iter().enumerate() {
                let k = rows[r].constraint;
                let c = &constraints[k];
                let w = warm_of(state, c);
                if rows[r].tangent {
                    q[i] = s_pred[k];
                    let normal = local[normal_row[k]];
                    kinds[i] = match pairs[c.pair].friction {
                        FrictionLaw::Tresca { s_h_mpa } => Row::Tangent { normal, beta: s_h_mpa * c.weight, gamma: 0.0 },
                        FrictionLaw::Coulomb { mu: m } => {
                            mu[i] = m;
                            Row::Tangent { normal, beta: 0.0, gamma: 0.0 }
                        }
                        FrictionLaw::Frictionless => Row::Tangent { normal, beta: 0.0, gamma: 0.0 },
                    };
                    warm_status[i] = if w.normal == RowStatus::Active { w.tangent } else { RowStatus::Inactive };
                } else {
                    q[i] = g_pred[k];
                    warm_status[i] = w.normal;
                    warm_force[i] = w.force;
                }
            }
            // a stick/slip warm status needs an active normal row
            for i in 0..nb {
                if let Row::Tangent { normal, .. } = kinds[i] {
                    if warm_status[normal] != RowStatus::Active {
                        warm_status[i] = RowStatus::Inactive;
                    } else if warm_status[i] == RowStatus::Inactive {
                        warm_status[i] = RowStatus::Stick;
                    }
                }
            }
            let name = &pairs[constraints[rows[members[0]].constraint].pair].name;
            let solved = solve_block(&a, &q, &kinds, &mu, &warm_status, &warm_force, settings, name)?;
            fp_iterations = fp_iterations.max(solved.fp_iterations);
            sweeps += solved.sweeps;
            for (i, &r) in members.iter().enumerate() {
                z_rows[r] = solved.z[i];
                st_rows[r] = solved.status[i];
            }
        }

        // positions after correction
        correction.iter_mut().for_each(|c| *c = Vec2::zeros());
        z_normal.iter_mut().for_each(|v| *v = 0.0);
        z_tangent.iter_mut().for_each(|v| *v = 0.0);
        st_normal.iter_mut().for_each(|v| *v = RowStatus::Inactive);
        st_tangent.iter_mut().for_each(|v| *v = RowStatus::Inactive);
        for (r, row) in rows.iter().enumerate() {
            let k = row.constraint;
            if row.tangent {
                z_tangent[k] = z_rows[r];
                st_tangent[k] = st_rows[r];
            } else {
                z_normal[k] = z_rows[r];
                st_normal[k] = st_rows[r];
            }
            for &(d, v) in &row.entries {
                correction[d / 2][d % 2] += comp[d] * v * z_rows[r];
            }
        }
        let x: Vec<Vec2> = input.x_pred.iter().zip(&correction).map(|(p, c)| p + c).collect();
        let violated: Vec<usize> = (0..constraints.len())
            .filter(|k| !candidates.contains(k) && constraints[*k].gap(&x) < -settings.tol_gap)
            .collect();
        if violated.is_empty() || round >= 10 {
            if !violated.is_empty() {
                warn!("{} slave nodes still penetrate after 10 candidate rounds", violated.len());
            }
            break;
        }
        debug!("adding {} late contact candidates", violated.len());
        candidates.extend(violated);
    }

    // results
    let x: Vec<Vec2> = input.x_pred.iter().zip(&correction).map(|(p, c)| p + c).collect();
    let mut forces = vec![Vec2::zeros(); n_nodes];
    let mut pair_results = Vec::with_capacity(pairs.len());
    for (p, pair) in pairs.iter().enumerate() {
        let slave = &input.surfaces[pair.slave];
        let s_all = cumulative(&slave.lengths);
        let w_all = trace_weights(&s_all, slave.quadratic);
        let mut nodes = Vec::with_capacity(slave.len());
        let mut slave_total = Vec2::zeros();
        let mut master_total = Vec2::zeros();
        let mut warm = vec![COLD; slave.len()];
        for (i, idx) in per_pair[p].iter().enumerate() {
            let Some(k) = *idx else {
                nodes.push(NodeResult {
                    slave_index: i,
                    node: slave.nodes[i],
                    abscissa: s_all[i],
                    weight: w_all[i],
                    normal_force: 0.0,
                    tangential_force: 0.0,
                    bound: 0.0,
                    gap: f64::INFINITY,
                    slip: 0.0,
                    status: NodeStatus::Separated,
                    constrained: false,
                    tangent_free: false,
                });
                continue;
            };
            let c = &constraints[k];
            let (f, t) = (z_normal[k], z_tangent[k]);
            let force = c.normal * f + c.tangent * t;
            for &(n, coeff) in &c.terms {
                forces[n] += force * coeff;
            }
            slave_total += force;
            master_total -= force;
            let bound = match pair.friction {
                FrictionLaw::Frictionless => 0.0,
                FrictionLaw::Coulomb { mu } => mu * f,
                FrictionLaw::Tresca { s_h_mpa } => {
                    if f > 0.0 {
                        s_h_mpa * c.weight
                    } else {
                        0.0
                    }
                }
            };
            let slip = c.slip(&x, input.x_prev);
            let free = tangent_free[k] && st_normal[k] == RowStatus::Active;
            let status = if st_normal[k] != RowStatus::Active {
                NodeStatus::Separated
            } else if free {
                match st_tangent[k] {
                    RowStatus::Stick => NodeStatus::Stick,
                    _ => NodeStatus::Slip,
                }
            } else if pair.friction.has_tangent() && slip.abs() <= settings.tol_gap {
                NodeStatus::Stick
            } else {
                NodeStatus::Slip
            };
            warm[i] = Warm { normal: st_normal[k], tangent: st_tangent[k], force: f };
            nodes.push(NodeResult {
                slave_index: i,
                node: slave.nodes[i],
                abscissa: c.abscissa,
                weight: c.weight,
                normal_force: f,
                tangential_force: t,
                bound,
                gap: c.gap(&x),
                slip,
                status,
                constrained: true,
                tangent_free: free,
            });
        }
        state.warm[p] = warm;
        pair_results.push(PairResult {
            name: pair.name.clone(),
            friction: pair.friction,
            nodes,
            length_scale: slave.total_length() / slave.n_segments() as f64,
            slave_force_total: slave_total,
            master_force_total: master_total,
        });
    }
    Ok(ContactStepResult { pairs: pair_results, forces, correction, fixed_point_iterations: fp_iterations, sweeps })
}

/// Largest depth (mm) by which nodes of `intruder` sit behind `surface`,
/// measured along the outward normal of the closest segment. Nodes that do not
/// project inside the chain are ignored.
pub fn max_node_penetration(surface: &ContactSurface, intruder: &ContactSurface) -> f64 {
    intruder
        .positions
        .iter()
        .map(|&p| project_node_to_master(p, surface))
        .filter(|p| p.projected)
        .map(|p| -p.gap)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests;
