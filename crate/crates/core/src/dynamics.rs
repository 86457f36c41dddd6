//! Explicit central-difference time integration with lumped masses.
//!
//! Velocities live at half steps. Each step predicts contact-free positions,
//! lets the contact solver correct them so that the contact and friction
//! conditions hold at the end of the step, then updates stresses
//! incrementally on the mid-step configuration (updated Lagrangian, with the
//! stress rotated by the incremental spin).
//!
//! Loading runs in two phases: a ramp where prescribed motions follow
//! [`Ramp`], then an optional hold at the final values, during which an extra
//! mass-proportional damping can be switched on to settle the response.

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::{
    kkt_audit, solve_contact_step, ContactError, ContactPair, ContactSettings, ContactState, ContactStepResult,
    KktReport, StepInput,
};
use crate::fem::{accumulate_internal_force, element_area, lumped_mass, ElementKinematics, FemError};
use crate::geometry::{update_surfaces, ContactSurface, GeometryError};
use crate::material::{Material, MaterialError, Stress};
use crate::mesh::{DirichletEntry, ElementKind, Mesh2D, NeumannEntry};
use crate::Vec2;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid model: {0}")]
    InvalidInput(String),
    #[error("material of body {body}: {source}")]
    Material { body: usize, source: MaterialError },
    #[error("step {step}: {source}")]
    Element { step: usize, source: FemError },
    #[error("step {step}: element {element}: {source}")]
    StressUpdate { step: usize, element: usize, source: MaterialError },
    #[error("step {step}: {source}")]
    Contact { step: usize, source: ContactError },
    #[error("step {step}: {source}")]
    Geometry { step: usize, source: GeometryError },
    #[error("step {step}: non-finite value in node {node}")]
    NonFinite { step: usize, node: usize },
}

/// Smooth prescribed motion `d(t) = target (τ - sin(2πτ)/2π)`, `τ = t/T`,
/// held at `target` for `t >= T`. Velocity and acceleration vanish at both
/// ends. A zero duration is a step: `d(t) = target` for all `t >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ramp {
    pub target: Vec2,
    pub duration: f64,
}

pub fn quasi_static_ramp(target: Vec2, duration: f64) -> Result<Ramp, DynamicsError> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(DynamicsError::InvalidInput(format!("ramp duration must be >= 0, got {duration}")));
    }
    Ok(Ramp { target, duration })
}

impl Ramp {
    /// Unit profile `r(t)` in `[0, 1]`.
    pub fn factor(duration: f64, t: f64) -> f64 {
        if duration <= 0.0 || t >= duration {
            return 1.0;
        }
        if t <= 0.0 {
            return 0.0;
        }
        let tau = t / duration;
        let two_pi = 2.0 * std::f64::consts::PI;
        tau - (two_pi * tau).sin() / two_pi
    }

    pub fn displacement(&self, t: f64) -> Vec2 {
        self.target * Self::factor(self.duration, t)
    }

    pub fn velocity(&self, t: f64) -> Vec2 {
        if self.duration <= 0.0 || t <= 0.0 || t >= self.duration {
            return Vec2::zeros();
        }
        let tau = t / self.duration;
        self.target * ((1.0 - (2.0 * std::f64::consts::PI * tau).cos()) / self.duration)
    }
}

/// Time stepping and loading program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeControl {
    pub dt_safety: f64,
    /// Ramp duration (s) for prescribed motions and tractions.
    #[serde(rename = "ramp_time_s")]
    pub ramp_time: f64,
    /// Hold duration (s) after the ramp.
    #[serde(rename = "hold_time_s")]
    pub hold_time: f64,
    /// Mass-proportional damping coefficient (1/s) over the whole run.
    #[serde(rename = "damping_per_s")]
    pub damping: f64,
    /// Extra mass-proportional damping (1/s) during the hold.
    #[serde(rename = "hold_damping_per_s")]
    pub hold_damping: f64,
    /// Steps between history samples.
    pub output_every: usize,
}

impl Default for TimeControl {
    fn default() -> Self {
        Self { dt_safety: 0.5, ramp_time: 1e-4, hold_time: 0.0, damping: 0.0, hold_damping: 0.0, output_every: 100 }
    }
}

/// Steps between re-evaluations of the stable time step.
const DT_REFRESH: usize = 100;

/// Everything needed to run one simulation.
#[derive(Debug, Clone)]
pub struct Model {
    pub mesh: Mesh2D,
    /// Indexed by body id.
    pub materials: Vec<Material>,
    pub dirichlet: Vec<DirichletEntry>,
    /// Target displacement per motion id.
    pub motions: Vec<Vec2>,
    pub neumann: Vec<NeumannEntry>,
    /// Deformable surfaces (built from chains) and rigid ones.
    pub surfaces: Vec<ContactSurface>,
    pub pairs: Vec<ContactPair>,
    pub contact: ContactSettings,
    pub time: TimeControl,
}

impl Model {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidInput(m));
        for b in self.mesh.bodies() {
            if b >= self.materials.len() {
                return bad(format!("body {b} has no material"));
            }
        }
        for (b, m) in self.materials.iter().enumerate() {
            m.validate().map_err(|source| DynamicsError::Material { body: b, source })?;
        }
        let n = self.mesh.nodes.len();
        for d in &self.dirichlet {
            if d.node >= n {
                return bad(format!("dirichlet node {} does not exist", d.node));
            }
            if d.motion >= self.motions.len() {
                return bad(format!("dirichlet node {} uses undefined motion {}", d.node, d.motion));
            }
        }
        for s in &self.surfaces {
            if s.nodes.iter().any(|&k| k >= n) {
                return bad(format!("surface `{}` references a missing node", s.name));
            }
        }
        for p in &self.pairs {
            if p.slave >= self.surfaces.len() || p.master >= self.surfaces.len() {
                return bad(format!("pair `{}` references a missing surface", p.name));
            }
            if p.slave == p.master {
                return bad(format!("pair `{}` uses the same surface twice", p.name));
            }
            p.friction.validate().map_err(|source| DynamicsError::Contact { step: 0, source })?;
        }
        let t = &self.time;
        if !(t.dt_safety > 0.0 && t.dt_safety <= 1.0) {
            return bad(format!("dt_safety must lie in (0, 1], got {}", t.dt_safety));
        }
        if !(t.ramp_time >= 0.0 && t.hold_time >= 0.0 && t.ramp_time + t.hold_time > 0.0) {
            return bad("ramp_time and hold_time must be >= 0 with a positive sum".into());
        }
        if !(t.damping >= 0.0 && t.hold_damping >= 0.0) {
            return bad("damping coefficients must be >= 0".into());
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.time.ramp_time + self.time.hold_time
    }
}

/// Characteristic length of an element: area over longest corner diagonal,
/// halved for Q2.
pub fn characteristic_length(kind: ElementKind, coords: &[Vec2]) -> f64 {
    let d = (coords[2] - coords[0]).norm().max((coords[3] - coords[1]).norm());
    let l = element_area(kind, coords) / d;
    match kind {
        ElementKind::Q1 => l,
        ElementKind::Q2 => 0.25 * l,
    }
}

/// `safety * min_e L_c / c_d` over the elements, on positions `x`.
pub fn stable_dt(mesh: &Mesh2D, x: &[Vec2], materials: &[Material], safety: f64) -> Result<f64, DynamicsError> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(DynamicsError::InvalidInput(format!("dt safety must lie in (0, 1], got {safety}")));
    }
    let mut dt = f64::INFINITY;
    let mut coords = [Vec2::zeros(); 8];
    for (e, el) in mesh.elements.iter().enumerate() {
        let nen = el.nodes.len();
        for (c, &n) in coords.iter_mut().zip(&el.nodes) {
            *c = x[n];
        }
        let l = characteristic_length(mesh.kind, &coords[..nen]);
        if !(l > 0.0) {
            return Err(DynamicsError::Element {
                step: 0,
                source: FemError::NonPositiveJacobian { element: e, point: 0, det: l },
            });
        }
        let c = materials[el.body].elastic().wave_speed();
        dt = dt.min(l / c);
    }
    Ok(safety * dt)
}

/// Crude estimate of the lowest structural period: `4 L / c_d` with `L` the
/// largest body extent and `c_d` the slowest dilatational wave speed.
pub fn lowest_period_estimate(mesh: &Mesh2D, materials: &[Material]) -> f64 {
    let mut worst: f64 = 0.0;
    let nb = mesh.node_bodies();
    for b in mesh.bodies() {
        let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
        for (p, _) in mesh.nodes.iter().zip(&nb).filter(|(_, &body)| body == b) {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = (hi - lo).max();
        worst = worst.max(4.0 * extent / materials[b].elastic().wave_speed());
    }
    worst
}

/// Running energy totals (N mm per unit thickness) at the start of the last
/// completed step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub kinetic: f64,
    /// Stress power integrated in time (stored plus plastic).
    pub internal: f64,
    /// Work of tractions and support reactions.
    pub external_work: f64,
    /// Work of normal contact forces.
    pub contact_work: f64,
    pub friction_dissipation: f64,
    pub damping_dissipation: f64,
}

impl EnergyLedger {
    /// `W_ext + W_cn - (E_kin + E_int + D_fric + D_damp)`.
    pub fn residual(&self) -> f64 {
        self.external_work + self.contact_work
            - (self.kinetic + self.internal + self.friction_dissipation + self.damping_dissipation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub ledger: EnergyLedger,
    pub contact_force: f64,
}

/// Kinematic state at the end of the last completed step.
#[derive(Debug, Clone)]
pub struct State {
    pub step: usize,
    pub t: f64,
    pub x: Vec<Vec2>,
    /// Velocity at `t - dt/2`.
    pub v: Vec<Vec2>,
    /// Cauchy stress per element and quadrature point.
    pub stress: Vec<Stress>,
    pub plastic_strain: Vec<f64>,
    /// Support reactions of the last step (zero on free components).
    pub reaction: Vec<Vec2>,
    pub ledger: EnergyLedger,
}

/// Worst values seen over a run.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub kkt: KktReport,
    /// Largest end-of-step penetration of constrained slave nodes (mm).
    pub max_slave_penetration: f64,
    pub peak_internal: f64,
    /// Largest `|residual|` of the energy ledger (N mm).
    pub max_energy_residual: f64,
    pub max_fixed_point_iterations: usize,
    pub warnings: Vec<String>,
}

pub struct Simulation {
    pub model: Model,
    pub state: State,
    pub stats: RunStats,
    pub history: Vec<HistoryRow>,
    pub last_contact: Option<ContactStepResult>,
    x0: Vec<Vec2>,
    mass: Vec<f64>,
    /// Motion id per node and component, if prescribed.
    prescribed: Vec<[Option<usize>; 2]>,
    motions: Vec<Ramp>,
    f_int: Vec<Vec2>,
    contact_state: ContactState,
    dt: f64,
    dt_prev: f64,
    steps_left: usize,
    since_refresh: usize,
    /// Stress work up to the current positions.
    stress_work: f64,
    /// Positions and forces at the previous integer time, for the ledger.
    x_before: Vec<Vec2>,
    supports_before: Vec<Vec2>,
    contact_before: Vec<Vec2>,
    damping_before: Vec<Vec2>,
}

impl Simulation {
    pub fn new(model: Model) -> Result<Self, DynamicsError> {
        model.validate()?;
        let mesh = &model.mesh;
        let n = mesh.nodes.len();
        let kind = mesh.kind;
        let mut mass = vec![0.0; n];
        let mut coords = Vec::with_capacity(8);
        for (e, el) in mesh.elements.iter().enumerate() {
            coords.clear();
            coords.extend(el.nodes.iter().map(|&k| mesh.nodes[k]));
            let m = lumped_mass(e, kind, &coords, model.materials[el.body].density())
                .map_err(|source| DynamicsError::Element { step: 0, source })?;
            for (&k, mk) in el.nodes.iter().zip(m) {
                mass[k] += mk;
            }
        }
        let mut prescribed = vec![[None; 2]; n];
        for d in &model.dirichlet {
            if d.components.x() {
                prescribed[d.node][0] = Some(d.motion);
            }
            if d.components.y() {
                prescribed[d.node][1] = Some(d.motion);
            }
        }
        let motions = model
            .motions
            .iter()
            .map(|&t| quasi_static_ramp(t, model.time.ramp_time))
            .collect::<Result<Vec<_>, _>>()?;
        let n_gp = crate::fem::QuadratureRule::for_kind(kind).len();

        let mut stats = RunStats::default();
        let period = lowest_period_estimate(mesh, &model.materials);
        if model.time.ramp_time > 0.0 && model.time.ramp_time < 50.0 * period {
            let w = format!(
                "ramp time {:e} s is below 50x the estimated lowest period {:e} s; inertia may not be negligible",
                model.time.ramp_time, period
            );
            warn!("{w}");
            stats.warnings.push(w);
        }

        let state = State {
            step: 0,
            t: 0.0,
            x: mesh.nodes.clone(),
            v: vec![Vec2::zeros(); n],
            stress: vec![Stress::default(); mesh.elements.len() * n_gp],
            plastic_strain: vec![0.0; mesh.elements.len() * n_gp],
            reaction: vec![Vec2::zeros(); n],
            ledger: EnergyLedger::default(),
        };
        let x0 = mesh.nodes.clone();
        let mut sim = Self {
            model,
            state,
            stats,
            history: Vec::new(),
            last_contact: None,
            x0: x0.clone(),
            mass,
            prescribed,
            motions,
            f_int: vec![Vec2::zeros(); n],
            contact_state: ContactState::default(),
            dt: 0.0,
            dt_prev: 0.0,
            steps_left: 0,
            since_refresh: 0,
            stress_work: 0.0,
            x_before: x0.clone(),
            supports_before: vec![Vec2::zeros(); n],
            contact_before: vec![Vec2::zeros(); n],
            damping_before: vec![Vec2::zeros(); n],
        };
        update_surfaces(&mut sim.model.surfaces, &sim.state.x)
            .map_err(|source| DynamicsError::Geometry { step: 0, source })?;
        Ok(sim)
    }

    /// Sets the velocity at `t = 0` (before the first step). Its kinetic
    /// energy is booked as external work.
    pub fn set_initial_velocity(&mut self, v: Vec<Vec2>) {
        let e: f64 = 0.5 * v.iter().zip(&self.mass).map(|(v, m)| m * v.norm_squared()).sum::<f64>();
        self.state.v = v;
        self.state.ledger.kinetic = e;
        self.state.ledger.external_work += e;
    }

    /// Step size of the last step (s).
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn reference_positions(&self) -> &[Vec2] {
        &self.x0
    }

    pub fn displacement(&self) -> Vec<Vec2> {
        self.state.x.iter().zip(&self.x0).map(|(x, x0)| x - x0).collect()
    }

    pub fn finished(&self) -> bool {
        self.state.t >= self.model.t_end() && self.steps_left == 0
    }

    fn in_ramp(&self, t: f64) -> bool {
        t < self.model.time.ramp_time
    }

    /// Chooses `dt` so that the current phase ends exactly on a step.
    fn plan_dt(&mut self) -> Result<(), DynamicsError> {
        let tc = self.model.time;
        let phase_end = if self.in_ramp(self.state.t) { tc.ramp_time } else { tc.ramp_time + tc.hold_time };
        let remaining = phase_end - self.state.t;
        let stable = stable_dt(&self.model.mesh, &self.state.x, &self.model.materials, tc.dt_safety)
            .map_err(|e| match e {
                DynamicsError::Element { source, .. } => DynamicsError::Element { step: self.state.step, source },
                other => other,
            })?;
        let n = (remaining / stable).ceil().max(1.0);
        self.dt = remaining / n;
        self.steps_left = n as usize;
        self.since_refresh = 0;
        Ok(())
    }

    fn external_force(&self, t: f64) -> Vec<Vec2> {
        let mut f = vec![Vec2::zeros(); self.state.x.len()];
        let r = Ramp::factor(self.model.time.ramp_time, t);
        for nm in &self.model.neumann {
            let seg = &nm.segment;
            let len: f64 = seg.windows(2).map(|w| (self.x0[w[1]] - self.x0[w[0]]).norm()).sum();
            let share: &[f64] = if seg.len() == 3 { &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0] } else { &[0.5, 0.5] };
            for (&k, s) in seg.iter().zip(share) {
                f[k] += nm.traction * (r * s * len);
            }
        }
        f
    }

    /// Stress update over the increment `x -> x_new` and internal forces on
    /// `x_new`. Returns the stress work of the increment.
    fn update_stresses(&mut self, x_new: &[Vec2]) -> Result<f64, DynamicsError> {
        let mesh = &self.model.mesh;
        let kind = mesh.kind;
        let step = self.state.step;
        let n_gp = self.state.stress.len() / mesh.elements.len().max(1);
        let mut work = 0.0;
        let mut f_int = vec![Vec2::zeros(); x_new.len()];
        let mut mid = [Vec2::zeros(); 8];
        let mut du = [Vec2::zeros(); 8];
        let mut cur = [Vec2::zeros(); 8];
        let mut fe = [0.0; 16];
        for (e, el) in mesh.elements.iter().enumerate() {
            let nen = el.nodes.len();
            for (a, &k) in el.nodes.iter().enumerate() {
                let (x0, x1) = (self.state.x[k], x_new[k]);
                mid[a] = 0.5 * (x0 + x1);
                du[a] = x1 - x0;
                cur[a] = x1;
            }
            let kin = ElementKinematics::new(e, kind, &mid[..nen])
                .map_err(|source| DynamicsError::Element { step, source })?;
            let material = &self.model.materials[el.body];
            for q in kin.points() {
                let i = e * n_gp + q;
                let d_eps = kin.strain(q, &du[..nen]);
                let mut spin = 0.0;
                for (g, u) in kin.dndx[q].iter().zip(&du[..nen]) {
                    spin += 0.5 * (g[0] * u.y - g[1] * u.x);
                }
                let old = rotate(&self.state.stress[i], spin);
                let (new, eps_p) = material
                    .update(&old, self.state.plastic_strain[i], &d_eps)
                    .map_err(|source| DynamicsError::StressUpdate { step, element: e, source })?;
                let avg = Stress {
                    xx: 0.5 * (old.xx + new.xx),
                    yy: 0.5 * (old.yy + new.yy),
                    xy: 0.5 * (old.xy + new.xy),
                    zz: 0.0,
                };
                work += avg.contract(&d_eps) * kin.dvol[q];
                self.state.stress[i] = new;
                self.state.plastic_strain[i] = eps_p;
            }
            let kin = ElementKinematics::new(e, kind, &cur[..nen])
                .map_err(|source| DynamicsError::Element { step, source })?;
            fe[..2 * nen].iter_mut().for_each(|v| *v = 0.0);
            accumulate_internal_force(&kin, &self.state.stress[e * n_gp..(e + 1) * n_gp], &mut fe[..2 * nen]);
            for (a, &k) in el.nodes.iter().enumerate() {
                f_int[k] += Vec2::new(fe[2 * a], fe[2 * a + 1]);
            }
        }
        self.f_int = f_int;
        Ok(work)
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<(), DynamicsError> {
        if self.finished() {
            return Ok(());
        }
        if self.steps_left == 0 || self.since_refresh >= DT_REFRESH {
            self.plan_dt()?;
        }
        let step = self.state.step;
        let t = self.state.t;
        let dt = self.dt;
        let dt_avg = 0.5 * (self.dt_prev + dt);
        let t_new = if self.steps_left == 1 {
            let tc = self.model.time;
            if self.in_ramp(t) { tc.ramp_time } else { tc.ramp_time + tc.hold_time }
        } else {
            t + dt
        };
        let tc = self.model.time;
        let alpha = tc.damping + if self.in_ramp(t) { 0.0 } else { tc.hold_damping };
        let n = self.state.x.len();
        let f_ext = self.external_force(t);

        // predictor
        let mut v_new = vec![Vec2::zeros(); n];
        let mut x_pred = vec![Vec2::zeros(); n];
        let mut compliance = vec![Vec2::zeros(); n];
        let damp = 0.5 * alpha * dt_avg;
        for k in 0..n {
            let m = self.mass[k];
            let f = f_ext[k] - self.f_int[k];
            for c in 0..2 {
                let xk = self.state.x[k][c];
                if let Some(mo) = self.prescribed[k][c] {
                    let target = self.x0[k][c] + self.motions[mo].displacement(t_new)[c];
                    v_new[k][c] = (target - xk) / dt;
                } else if m > 0.0 {
                    v_new[k][c] = (self.state.v[k][c] * (1.0 - damp) + dt_avg * f[c] / m) / (1.0 + damp);
                    compliance[k][c] = dt * dt_avg / (m * (1.0 + damp));
                }
                x_pred[k][c] = xk + dt * v_new[k][c];
            }
        }

        // contact correction
        let mut f_contact = vec![Vec2::zeros(); n];
        let mut x_new = x_pred.clone();
        if !self.model.pairs.is_empty() {
            update_surfaces(&mut self.model.surfaces, &self.state.x)
                .map_err(|source| DynamicsError::Geometry { step, source })?;
            let input = StepInput {
                surfaces: &self.model.surfaces,
                x_prev: &self.state.x,
                x_pred: &x_pred,
                compliance: &compliance,
            };
            let res = solve_contact_step(&self.model.pairs, &input, &mut self.contact_state, &self.model.contact)
                .map_err(|source| DynamicsError::Contact { step, source })?;
            for k in 0..n {
                x_new[k] += res.correction[k];
                v_new[k] += res.correction[k] / dt;
            }
            f_contact.clone_from(&res.forces);
            let kkt = kkt_audit(&res);
            self.stats.kkt.merge(&kkt);
            self.stats.max_fixed_point_iterations = self.stats.max_fixed_point_iterations.max(res.fixed_point_iterations);
            for p in &res.pairs {
                for node in p.nodes.iter().filter(|r| r.constrained && r.gap.is_finite()) {
                    self.stats.max_slave_penetration = self.stats.max_slave_penetration.max(-node.gap);
                }
            }
            self.last_contact = Some(res);
        }
        if let Some(k) = (0..n).find(|&k| !(x_new[k].x.is_finite() && x_new[k].y.is_finite())) {
            return Err(DynamicsError::NonFinite { step, node: k });
        }

        // Reactions and energy at time t_n: forces at t_n, trapezoid work over
        // [t_{n-1}, t_n], v_n the mean of the adjacent half-step velocities.
        let first = self.dt_prev == 0.0;
        let mut ledger = self.state.ledger;
        ledger.internal = self.stress_work;
        ledger.kinetic = 0.0;
        let mut reaction = vec![Vec2::zeros(); n];
        let mut supports = vec![Vec2::zeros(); n];
        let mut damping_forces = vec![Vec2::zeros(); n];
        for k in 0..n {
            let m = self.mass[k];
            let du = self.state.x[k] - self.x_before[k];
            for c in 0..2 {
                let (vm, vp) = (self.state.v[k][c], v_new[k][c]);
                let v_n = if first { vm } else { 0.5 * (vm + vp) };
                damping_forces[k][c] = alpha * m * v_n;
                if self.prescribed[k][c].is_some() {
                    let inertia = if dt_avg > 0.0 { m * (vp - vm) / dt_avg } else { 0.0 };
                    reaction[k][c] =
                        inertia + damping_forces[k][c] - f_ext[k][c] + self.f_int[k][c] - f_contact[k][c];
                }
                supports[k][c] = f_ext[k][c] + reaction[k][c];
                ledger.external_work += 0.5 * (self.supports_before[k][c] + supports[k][c]) * du[c];
                ledger.contact_work += 0.5 * (self.contact_before[k][c] + f_contact[k][c]) * du[c];
                ledger.damping_dissipation += 0.5 * (self.damping_before[k][c] + damping_forces[k][c]) * du[c];
                ledger.kinetic += 0.5 * m * v_n * v_n;
            }
        }
        if let Some(res) = self.last_contact.as_ref().filter(|_| !self.model.pairs.is_empty()) {
            // slip over the step, booked on both sides of the normal split
            let d: f64 = res
                .pairs
                .iter()
                .flat_map(|p| &p.nodes)
                .filter(|r| r.constrained)
                .map(|r| -r.tangential_force * r.slip)
                .sum();
            ledger.friction_dissipation += d;
            ledger.contact_work += d;
        }
        self.stress_work += self.update_stresses(&x_new)?;
        self.x_before = std::mem::replace(&mut self.state.x, x_new.clone());
        self.supports_before = supports;
        self.contact_before = f_contact;
        self.damping_before = damping_forces;

        self.state.v = v_new;
        self.state.reaction = reaction;
        self.state.ledger = ledger;
        self.state.t = t_new;
        self.state.step += 1;
        self.dt_prev = dt;
        self.steps_left -= 1;
        self.since_refresh += 1;

        self.stats.peak_internal = self.stats.peak_internal.max(ledger.internal);
        self.stats.max_energy_residual = self.stats.max_energy_residual.max(ledger.residual().abs());
        let every = self.model.time.output_every.max(1);
        if self.state.step % every == 0 || self.finished() {
            let contact_force = self
                .last_contact
                .as_ref()
                .map(|r| r.pairs.iter().map(|p| p.slave_force_total.norm()).sum())
                .unwrap_or(0.0);
            self.history.push(HistoryRow { step: self.state.step, t: t_new, dt, ledger, contact_force });
            debug!("step {} t {:e} E_kin {:e} E_int {:e}", self.state.step, t_new, ledger.kinetic, ledger.internal);
        }
        Ok(())
    }

    /// Runs to the end of the loading program.
    pub fn run(&mut self) -> Result<(), DynamicsError> {
        while !self.finished() {
            self.step()?;
        }
        Ok(())
    }
}

/// Rotates the in-plane stress components by the spin increment `w`, using
/// the Cayley (Hughes-Winget) rotation: exactly orthogonal, angle
/// `2 atan(w / 2)`.
fn rotate(s: &Stress, w: f64) -> Stress {
    if w == 0.0 {
        return *s;
    }
    let h = 0.25 * w * w;
    let (sn, c) = (w / (1.0 + h), (1.0 - h) / (1.0 + h));
    let (c2, s2, cs) = (c * c, sn * sn, c * sn);
    Stress {
        xx: c2 * s.xx - 2.0 * cs * s.xy + s2 * s.yy,
        yy: s2 * s.xx + 2.0 * cs * s.xy + c2 * s.yy,
        xy: cs * (s.xx - s.yy) + (c2 - s2) * s.xy,
        zz: s.zz,
    }
}
