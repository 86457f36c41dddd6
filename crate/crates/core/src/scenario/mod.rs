//! Scenario files, model assembly, runs and result emission.
//!
//! Scenarios are TOML documents:
//!
//! ```toml
//! name = "press"
//! element = "Q1"
//!
//! [[body]]
//! origin_mm = [0.0, 0.0]
//! shape = { type = "rect", width_mm = 1.0, height_mm = 0.5, nx = 4, ny = 2 }
//! material = { law = "hooke", young_mpa = 70000.0, poisson = 0.3, density_t_per_mm3 = 7.8e-9 }
//!
//! [[dirichlet]]
//! body = 0
//! edge = "bottom"
//! components = "both"
//! target_mm = [0.0, 0.0]
//!
//! [[pair]]
//! name = "press"
//! slave = { body = 1, edge = "bottom" }
//! master = { body = 0, edge = "top" }
//! algorithm = "global"
//! multipliers = "P1"
//! friction = { law = "coulomb", mu = 0.1 }
//!
//! [time]
//! ramp_time_s = 1e-4
//! ```
//!
//! Generated bodies expose the edge names of their generator (`bottom`,
//! `right`, `top`, `left` for rectangles; `arc`, `inner`, `start`, `end` for
//! disc sectors). A `mesh_file` replaces the generated shapes; its sets are
//! then addressed as `dirichlet<k>`, `neumann<k>` and `contact<k>`. Optional
//! `x_range_mm` / `y_range_mm` keep the part of an edge inside the given
//! coordinate window.

mod builtin;
mod convergence;
mod output;

pub use builtin::{
    builtin_names, builtin_scenario, forging, indentation, slab_tresca, IndentationVariant, FORGING_PRESS,
    SLAB_DESK_MESH,
};
pub use convergence::{
    convergence_csv, convergence_study, energy_norm, energy_norm_error, interpolate_field, ConvergenceRow,
    ConvergenceSpec,
};
pub use output::{emit_profiles, profile_svg, relative_l2_difference, write_history, Profile, ProfileRecord};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::{max_node_penetration, Algorithm, ContactPair, ContactSettings, FrictionLaw, SolverChoice};
use crate::dynamics::{DynamicsError, EnergyLedger, HistoryRow, Model, RunStats, Simulation, TimeControl};
use crate::geometry::{update_surfaces, ContactSurface};
use crate::material::{Hooke, Material, PowerLawPlasticity};
use crate::mesh::{
    disc_sector_mesh, load_mesh, structured_rect_mesh, Components, ContactChain, DirichletEntry, ElementKind,
    GeneratedMesh, Mesh2D, MeshError, NeumannEntry,
};
use crate::mortar::MultiplierKind;
use crate::Vec2;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("unknown scenario `{name}`; available: {}", .available.join(", "))]
    UnknownBuiltin { name: String, available: Vec<String> },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("{0}")]
    Output(String),
}

impl ScenarioError {
    /// Validation problems (bad input) as opposed to solver failures.
    pub fn is_validation(&self) -> bool {
        match self {
            ScenarioError::Dynamics(DynamicsError::InvalidInput(_) | DynamicsError::Material { .. }) => true,
            ScenarioError::Dynamics(_) | ScenarioError::Output(_) | ScenarioError::Io { .. } => false,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub element: ElementKind,
    /// Mesh file used instead of generated shapes; relative to the scenario
    /// file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_file: Option<PathBuf>,
    #[serde(default, rename = "body")]
    pub bodies: Vec<BodyConfig>,
    #[serde(default)]
    pub dirichlet: Vec<DirichletConfig>,
    #[serde(default)]
    pub neumann: Vec<NeumannConfig>,
    #[serde(default)]
    pub rigid: Vec<RigidConfig>,
    #[serde(default, rename = "pair")]
    pub pairs: Vec<PairConfig>,
    #[serde(default)]
    pub time: TimeControl,
    #[serde(default)]
    pub contact: ContactSettings,
    /// The run is expected to diverge or to report master-node penetration.
    #[serde(default)]
    pub expected_failure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Shape>,
    #[serde(default)]
    pub origin_mm: [f64; 2],
    pub material: MaterialConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Rect { width_mm: f64, height_mm: f64, nx: usize, ny: usize },
    /// Annular disc sector centered at the body origin, symmetric about the
    /// downward vertical.
    Sector { radius_mm: f64, span_deg: f64, nr: usize, na: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialConfig {
    Hooke { young_mpa: f64, poisson: f64, density_t_per_mm3: f64 },
    /// `σ_eq = a (eps0 + ε_p)^n`.
    PowerLaw { young_mpa: f64, poisson: f64, density_t_per_mm3: f64, a_mpa: f64, eps0: f64, n: f64 },
}

impl MaterialConfig {
    pub fn to_material(&self) -> Material {
        match *self {
            MaterialConfig::Hooke { young_mpa, poisson, density_t_per_mm3 } => {
                Material::Hooke(Hooke { young: young_mpa, poisson, density: density_t_per_mm3 })
            }
            MaterialConfig::PowerLaw { young_mpa, poisson, density_t_per_mm3, a_mpa, eps0, n } => {
                Material::PowerLaw(PowerLawPlasticity {
                    elastic: Hooke { young: young_mpa, poisson, density: density_t_per_mm3 },
                    a: a_mpa,
                    eps0,
                    n,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRef {
    pub body: usize,
    pub edge: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_range_mm: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_range_mm: Option<[f64; 2]>,
}

impl EdgeRef {
    pub fn new(body: usize, edge: &str) -> Self {
        Self { body, edge: edge.to_string(), x_range_mm: None, y_range_mm: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletConfig {
    pub body: usize,
    pub edge: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_range_mm: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_range_mm: Option<[f64; 2]>,
    pub components: Components,
    /// Displacement reached at the end of the ramp.
    pub target_mm: [f64; 2],
}

impl DirichletConfig {
    fn at(&self) -> EdgeRef {
        EdgeRef {
            body: self.body,
            edge: self.edge.clone(),
            x_range_mm: self.x_range_mm,
            y_range_mm: self.y_range_mm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannConfig {
    pub body: usize,
    pub edge: String,
    pub traction_mpa: [f64; 2],
}

/// Fixed analytic polyline. Traversal keeps the rigid body on the left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidConfig {
    pub name: String,
    pub points_mm: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceRef {
    Rigid { rigid: String },
    Edge(EdgeRef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub name: String,
    pub slave: SurfaceRef,
    pub master: SurfaceRef,
    pub algorithm: Algorithm,
    #[serde(default = "default_multipliers")]
    pub multipliers: MultiplierKind,
    pub friction: FrictionLaw,
}

fn default_multipliers() -> MultiplierKind {
    MultiplierKind::P0
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let mut sc = Self::from_toml(&text)?;
        if let (Some(f), Some(dir)) = (&sc.mesh_file, path.parent()) {
            if f.is_relative() {
                sc.mesh_file = Some(dir.join(f));
            }
        }
        Ok(sc)
    }

    /// Loads a scenario file, or a built-in by name when no such file exists.
    pub fn resolve(arg: &str) -> Result<Self, ScenarioError> {
        let path = Path::new(arg);
        if path.is_file() {
            Self::load(path)
        } else {
            builtin_scenario(arg)
        }
    }

    /// Every problem found in the configuration, without building meshes.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut errs = Vec::new();
        let nb = self.bodies.len();
        if nb == 0 {
            errs.push("no bodies defined".to_string());
        }
        for (b, body) in self.bodies.iter().enumerate() {
            match (&body.shape, &self.mesh_file) {
                (None, None) => errs.push(format!("body {b}: needs a shape (or a mesh_file for all bodies)")),
                (Some(_), Some(_)) => errs.push(format!("body {b}: shape given together with mesh_file")),
                _ => {}
            }
            if let Some(Shape::Sector { span_deg, .. }) = body.shape {
                if !(span_deg > 0.0 && span_deg < 360.0) {
                    errs.push(format!("body {b}: span_deg must be in (0, 360), got {span_deg}"));
                }
            }
            if let Err(e) = body.material.to_material().validate() {
                errs.push(format!("body {b}: {e}"));
            }
        }
        let check_body = |what: String, body: usize, errs: &mut Vec<String>| {
            if body >= nb {
                errs.push(format!("{what}: body {body} does not exist"));
            }
        };
        for (i, d) in self.dirichlet.iter().enumerate() {
            check_body(format!("dirichlet {i}"), d.body, &mut errs);
            if d.target_mm.iter().any(|v| !v.is_finite()) {
                errs.push(format!("dirichlet {i}: non-finite target"));
            }
        }
        for (i, n) in self.neumann.iter().enumerate() {
            check_body(format!("neumann {i}"), n.body, &mut errs);
        }
        for r in &self.rigid {
            if r.points_mm.len() < 2 {
                errs.push(format!("rigid `{}`: needs at least 2 points", r.name));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for p in &self.pairs {
            if !names.insert(p.name.clone()) {
                errs.push(format!("pair `{}`: duplicate name", p.name));
            }
            for (side, s) in [("slave", &p.slave), ("master", &p.master)] {
                match s {
                    SurfaceRef::Edge(e) => check_body(format!("pair `{}` {side}", p.name), e.body, &mut errs),
                    SurfaceRef::Rigid { rigid } => {
                        if side == "slave" {
                            errs.push(format!("pair `{}`: a rigid surface cannot be the slave", p.name));
                        }
                        if !self.rigid.iter().any(|r| &r.name == rigid) {
                            errs.push(format!("pair `{}`: rigid surface `{rigid}` is not defined", p.name));
                        }
                    }
                }
            }
            if let Err(e) = p.friction.validate() {
                errs.push(format!("pair `{}`: {e}", p.name));
            }
        }
        let t = &self.time;
        if !(t.dt_safety > 0.0 && t.dt_safety <= 1.0) {
            errs.push(format!("time.dt_safety must lie in (0, 1], got {}", t.dt_safety));
        }
        if !(t.ramp_time >= 0.0 && t.hold_time >= 0.0 && t.ramp_time + t.hold_time > 0.0) {
            errs.push("time: ramp_time_s and hold_time_s must be >= 0 with a positive sum".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(errs))
        }
    }

    /// Builds the mesh and named node chains of all bodies.
    pub fn build_mesh(&self) -> Result<(Mesh2D, Vec<BTreeMap<String, Vec<usize>>>), ScenarioError> {
        if let Some(path) = &self.mesh_file {
            let (mesh, sets) = load_mesh(path)?;
            if mesh.kind != self.element {
                return Err(ScenarioError::Invalid(vec![format!(
                    "mesh file has {} elements, scenario says {}",
                    mesh.kind, self.element
                )]));
            }
            let mut edges = vec![BTreeMap::new(); self.bodies.len().max(mesh.bodies().last().map_or(0, |b| b + 1))];
            let bodies = mesh.node_bodies();
            let mut motion_sets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for d in &sets.dirichlet {
                motion_sets.entry(d.motion).or_default().push(d.node);
            }
            for (k, nodes) in motion_sets {
                edges[bodies[nodes[0]]].insert(format!("dirichlet{k}"), nodes);
            }
            for (k, n) in sets.neumann.iter().enumerate() {
                edges[bodies[n.segment[0]]].insert(format!("neumann{k}"), n.segment.clone());
            }
            for c in &sets.contact {
                edges[c.body].insert(c.name.clone(), c.nodes.clone());
            }
            return Ok((mesh, edges));
        }
        let mut mesh: Option<Mesh2D> = None;
        let mut edges = Vec::new();
        for (b, body) in self.bodies.iter().enumerate() {
            let g: GeneratedMesh = match body.shape.as_ref().expect("validated") {
                &Shape::Rect { width_mm, height_mm, nx, ny } => {
                    structured_rect_mesh(width_mm, height_mm, nx, ny, self.element)?
                }
                &Shape::Sector { radius_mm, span_deg, nr, na } => {
                    disc_sector_mesh(radius_mm, span_deg.to_radians(), nr, na, self.element)?
                }
            };
            let g = g.translated(Vec2::new(body.origin_mm[0], body.origin_mm[1])).with_body(b);
            let offset = match &mut mesh {
                None => {
                    mesh = Some(g.mesh.clone());
                    0
                }
                Some(m) => m.append(&g.mesh)?,
            };
            edges.push(g.edges.into_iter().map(|(k, v)| (k, v.into_iter().map(|n| n + offset).collect())).collect());
        }
        Ok((mesh.expect("at least one body"), edges))
    }

    /// Assembles the simulation model.
    pub fn build_model(&self) -> Result<Model, ScenarioError> {
        self.validate()?;
        let (mesh, edges) = self.build_mesh()?;
        let mut errs = Vec::new();
        let nodes_of = |e: &EdgeRef, errs: &mut Vec<String>| -> Vec<usize> {
            let Some(chain) = edges.get(e.body).and_then(|m| m.get(&e.edge)) else {
                let known: Vec<&String> = edges.get(e.body).map(|m| m.keys().collect()).unwrap_or_default();
                errs.push(format!("body {} has no edge `{}` (known: {known:?})", e.body, e.edge));
                return Vec::new();
            };
            let inside = |v: f64, r: Option<[f64; 2]>| r.is_none_or(|[lo, hi]| v >= lo - 1e-9 && v <= hi + 1e-9);
            let out: Vec<usize> = chain
                .iter()
                .copied()
                .filter(|&n| inside(mesh.nodes[n].x, e.x_range_mm) && inside(mesh.nodes[n].y, e.y_range_mm))
                .collect();
            if out.is_empty() {
                errs.push(format!("edge `{}` of body {} has no nodes in the requested range", e.edge, e.body));
            }
            out
        };

        let mut dirichlet = Vec::new();
        let mut motions = Vec::new();
        for (k, d) in self.dirichlet.iter().enumerate() {
            for node in nodes_of(&d.at(), &mut errs) {
                dirichlet.push(DirichletEntry { node, components: d.components, motion: k });
            }
            motions.push(Vec2::new(d.target_mm[0], d.target_mm[1]));
        }
        let mut neumann = Vec::new();
        let step = if self.element == ElementKind::Q2 { 2 } else { 1 };
        for n in &self.neumann {
            let chain = nodes_of(&EdgeRef::new(n.body, &n.edge), &mut errs);
            if chain.len() > step && (chain.len() - 1) % step == 0 {
                for s in (0..chain.len() - 1).step_by(step) {
                    neumann.push(NeumannEntry {
                        segment: chain[s..=s + step].to_vec(),
                        traction: Vec2::new(n.traction_mpa[0], n.traction_mpa[1]),
                    });
                }
            } else if !chain.is_empty() {
                errs.push(format!("neumann edge `{}` has an incomplete segment", n.edge));
            }
        }

        let mut surfaces = Vec::new();
        let mut pairs = Vec::new();
        for p in &self.pairs {
            let mut surface = |s: &SurfaceRef, side: &str, errs: &mut Vec<String>| -> Option<usize> {
                let built = match s {
                    SurfaceRef::Rigid { rigid } => {
                        let r = self.rigid.iter().find(|r| &r.name == rigid)?;
                        ContactSurface::rigid(
                            &r.name,
                            r.points_mm.iter().map(|p| Vec2::new(p[0], p[1])).collect(),
                        )
                    }
                    SurfaceRef::Edge(e) => {
                        let nodes = nodes_of(e, errs);
                        if self.element == ElementKind::Q2 && nodes.len() % 2 == 0 {
                            errs.push(format!("pair `{}` {side}: Q2 chain must end on corner nodes", p.name));
                            return None;
                        }
                        let chain = ContactChain { body: e.body, name: format!("{}_{side}", p.name), nodes };
                        ContactSurface::from_chain(&chain, self.element, &mesh.nodes)
                    }
                };
                match built {
                    Ok(s) => {
                        surfaces.push(s);
                        Some(surfaces.len() - 1)
                    }
                    Err(e) => {
                        errs.push(format!("pair `{}` {side}: {e}", p.name));
                        None
                    }
                }
            };
            let slave = surface(&p.slave, "slave", &mut errs);
            let master = surface(&p.master, "master", &mut errs);
            if let (Some(slave), Some(master)) = (slave, master) {
                pairs.push(ContactPair {
                    name: p.name.clone(),
                    slave,
                    master,
                    choice: SolverChoice { algorithm: p.algorithm, multipliers: p.multipliers },
                    friction: p.friction,
                });
            }
        }
        if !errs.is_empty() {
            return Err(ScenarioError::Invalid(errs));
        }
        let model = Model {
            mesh,
            materials: self.bodies.iter().map(|b| b.material.to_material()).collect(),
            dirichlet,
            motions,
            neumann,
            surfaces,
            pairs,
            contact: self.contact,
            time: self.time,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Result bundle of one run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub name: String,
    pub steps: usize,
    pub t_end: f64,
    pub profiles: Vec<Profile>,
    pub ledger: EnergyLedger,
    pub stats: RunStats,
    pub history: Vec<HistoryRow>,
    /// Reference node positions and final displacements.
    pub reference: Vec<Vec2>,
    pub displacement: Vec<Vec2>,
    /// Largest depth of master nodes behind slave surfaces over the run (mm),
    /// deformable masters only.
    pub max_master_penetration: f64,
}

impl RunOutcome {
    /// Energy-ledger residual relative to the peak internal energy.
    pub fn energy_residual_ratio(&self) -> f64 {
        self.stats.max_energy_residual / self.stats.peak_internal.max(f64::MIN_POSITIVE)
    }

    pub fn summary(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.name);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "t_end_s = {:.16e}", self.t_end);
        let l = &self.ledger;
        for (k, v) in [
            ("kinetic", l.kinetic),
            ("internal", l.internal),
            ("external_work", l.external_work),
            ("contact_work", l.contact_work),
            ("friction_dissipation", l.friction_dissipation),
            ("damping_dissipation", l.damping_dissipation),
            ("peak_internal", self.stats.peak_internal),
            ("max_energy_residual", self.stats.max_energy_residual),
        ] {
            let _ = writeln!(s, "{k}_nmm = {v:.16e}");
        }
        let _ = writeln!(s, "max_slave_penetration_mm = {:.16e}", self.stats.max_slave_penetration);
        let _ = writeln!(s, "max_master_penetration_mm = {:.16e}", self.max_master_penetration);
        for (k, v) in self.stats.kkt.lines() {
            let _ = writeln!(s, "kkt_{} = {v:.16e}", k.replace(' ', "_"));
        }
        for w in &self.stats.warnings {
            let _ = writeln!(s, "# warning: {w}");
        }
        s
    }

    /// Writes profiles (CSV + SVG), the history and a summary into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), ScenarioError> {
        std::fs::create_dir_all(dir).map_err(|e| ScenarioError::Output(format!("{}: {e}", dir.display())))?;
        if !self.profiles.is_empty() {
            emit_profiles(&self.profiles, dir)?;
        }
        write_history(&self.history, &dir.join("history.csv"))?;
        std::fs::write(dir.join("summary.txt"), self.summary())
            .map_err(|e| ScenarioError::Output(format!("{}: {e}", dir.display())))?;
        Ok(())
    }
}

fn master_penetration(sim: &Simulation) -> f64 {
    let mut surfaces = sim.model.surfaces.clone();
    if update_surfaces(&mut surfaces, &sim.state.x).is_err() {
        return 0.0;
    }
    sim.model
        .pairs
        .iter()
        .filter(|p| !surfaces[p.master].is_rigid())
        .map(|p| max_node_penetration(&surfaces[p.slave], &surfaces[p.master]))
        .fold(0.0, f64::max)
}

/// Runs a scenario to the end of its loading program and writes the result
/// bundle into `out` when given.
pub fn run_scenario(sc: &Scenario, out: Option<&Path>) -> Result<RunOutcome, ScenarioError> {
    let model = sc.build_model()?;
    let mut sim = Simulation::new(model)?;
    info!("running `{}`: {} nodes, {} elements", sc.name, sim.state.x.len(), sim.model.mesh.elements.len());
    let mut max_master: f64 = 0.0;
    while !sim.finished() {
        sim.step()?;
        max_master = max_master.max(master_penetration(&sim));
    }
    let profiles = sim
        .last_contact
        .as_ref()
        .map(|res| res.pairs.iter().map(|p| Profile::from_pair(p, &sim.state.x)).collect())
        .unwrap_or_default();
    let outcome = RunOutcome {
        name: sc.name.clone(),
        steps: sim.state.step,
        t_end: sim.state.t,
        profiles,
        ledger: sim.state.ledger,
        stats: sim.stats.clone(),
        history: sim.history.clone(),
        reference: sim.reference_positions().to_vec(),
        displacement: sim.displacement(),
        max_master_penetration: max_master,
    };
    if let Some(dir) = out {
        outcome.write(dir)?;
    }
    Ok(outcome)
}

/// Steps a scenario `steps` times and returns its mortar operators (as CSV,
/// one block per global pair) on the current configuration.
pub fn dump_mortar(sc: &Scenario, steps: usize) -> Result<String, ScenarioError> {
    let model = sc.build_model()?;
    let mut sim = Simulation::new(model)?;
    for _ in 0..steps {
        if sim.finished() {
            break;
        }
        sim.step()?;
    }
    let mut surfaces = sim.model.surfaces.clone();
    update_surfaces(&mut surfaces, &sim.state.x).map_err(|e| ScenarioError::Output(e.to_string()))?;
    let mut out = String::new();
    for p in sim.model.pairs.iter().filter(|p| p.choice.algorithm == Algorithm::Global) {
        let op = crate::mortar::assemble_mortar(&surfaces[p.slave], &surfaces[p.master], p.choice.multipliers, 0)
            .map_err(|e| ScenarioError::Output(format!("pair `{}`: {e}", p.name)))?;
        out.push_str(&format!("# pair {} step {}\n", p.name, sim.state.step));
        out.push_str(&op.to_csv());
    }
    Ok(out)
}
