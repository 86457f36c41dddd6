//! Built-in scenarios: disc indentation, Tresca slab and three-body forging.

use super::{
    BodyConfig, DirichletConfig, EdgeRef, MaterialConfig, PairConfig, RigidConfig, Scenario, ScenarioError, Shape,
    SurfaceRef,
};
use crate::contact::{Algorithm, ContactSettings, FrictionLaw};
use crate::dynamics::TimeControl;
use crate::material::Hooke;
use crate::mesh::{Components, ElementKind};
use crate::mortar::MultiplierKind;

/// Steel-like density; the test descriptions give none.
pub const DENSITY: f64 = 7.8e-9;
pub const POISSON: f64 = 0.3;

pub const INDENTATION_DEPTH: f64 = 0.1581;
pub const INDENTER_YOUNG: f64 = 7.0e4;
pub const FOUNDATION_YOUNG: f64 = 7.0e3;
pub const SLAB_YOUNG: f64 = 7.0e4;
pub const SLAB_WIDTH: f64 = 1.3;
pub const SLAB_HEIGHT: f64 = 0.3;
pub const SLAB_DISPLACEMENT: f64 = 2.0e-3;
pub const SLAB_TRESCA_MPA: f64 = 200.0;
/// Extent of the vertically driven part of the slab top, measured from the
/// left end. The onset of detachment sits about 0.25 mm to its right.
pub const SLAB_PUSHED_WIDTH: f64 = 0.45;
pub const FORGING_YOUNG: f64 = 2.1e5;

fn hooke(young: f64) -> MaterialConfig {
    MaterialConfig::Hooke { young_mpa: young, poisson: POISSON, density_t_per_mm3: DENSITY }
}

fn forging_material() -> MaterialConfig {
    MaterialConfig::PowerLaw {
        young_mpa: FORGING_YOUNG,
        poisson: POISSON,
        density_t_per_mm3: DENSITY,
        a_mpa: 348.0,
        eps0: 2.0e-2,
        n: 0.03,
    }
}

/// Fraction of the element transit time used as time step. The transit-time
/// estimate stays below the central-difference limit for the built-in
/// meshes, so this keeps a margin of at least 20%.
pub const DT_SAFETY: f64 = 0.8;

/// Loading program: a ramp of `ramp_periods` and a damped hold of
/// `hold_periods` structural periods `4 L / c`.
fn quasi_static_time(extent: f64, young: f64, ramp_periods: f64, hold_periods: f64) -> TimeControl {
    let c = Hooke { young, poisson: POISSON, density: DENSITY }.wave_speed();
    let period = 4.0 * extent / c;
    TimeControl {
        ramp_time: ramp_periods * period,
        hold_time: hold_periods * period,
        hold_damping: 4.0 * std::f64::consts::PI / period,
        dt_safety: DT_SAFETY,
        ..TimeControl::default()
    }
}

fn rect(width: f64, height: f64, nx: usize, ny: usize, origin: [f64; 2], material: MaterialConfig) -> BodyConfig {
    BodyConfig {
        shape: Some(Shape::Rect { width_mm: width, height_mm: height, nx, ny }),
        origin_mm: origin,
        material,
    }
}

fn fixed(body: usize, edge: &str, components: Components, target: [f64; 2]) -> DirichletConfig {
    DirichletConfig { body, edge: edge.into(), x_range_mm: None, y_range_mm: None, components, target_mm: target }
}

fn edge(body: usize, name: &str) -> SurfaceRef {
    SurfaceRef::Edge(EdgeRef::new(body, name))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndentationVariant {
    pub element: ElementKind,
    pub mu: f64,
    pub algorithm: Algorithm,
    pub multipliers: MultiplierKind,
    /// Slab top as slave instead of the disc arc.
    pub swap: bool,
}

impl IndentationVariant {
    pub fn name(&self) -> String {
        let mut n = format!(
            "indentation_{}_{}",
            self.element.to_string().to_lowercase(),
            if self.mu == 0.0 { "frictionless".to_string() } else { format!("coulomb_mu{:03}", (self.mu * 100.0).round()) }
        );
        if self.algorithm == Algorithm::Global && self.multipliers == MultiplierKind::P1 {
            n.push_str("_p1");
        }
        if self.swap {
            n.push_str("_swap");
        }
        if self.algorithm == Algorithm::Local {
            n.push_str("_local");
        }
        n
    }

    fn all() -> Vec<Self> {
        let mut out = Vec::new();
        for element in [ElementKind::Q1, ElementKind::Q2] {
            for mu in [0.0, 0.05] {
                for (algorithm, multipliers) in [
                    (Algorithm::Global, MultiplierKind::P0),
                    (Algorithm::Global, MultiplierKind::P1),
                    (Algorithm::Local, MultiplierKind::P0),
                ] {
                    for swap in [false, true] {
                        out.push(Self { element, mu, algorithm, multipliers, swap });
                    }
                }
            }
        }
        out
    }
}

/// Disc sector (body 0, R = 1 mm, driven through its inner edge) pressed
/// 0.1581 mm into a 1.8 x 0.3 mm slab (body 1) embedded along its base.
pub fn indentation(v: IndentationVariant) -> Scenario {
    let (disc_nr, disc_na, slab_nx, slab_ny) = match v.element {
        ElementKind::Q1 => (6, 42, 36, 6),
        ElementKind::Q2 => (3, 21, 18, 3),
    };
    let (disc, slab) = (edge(0, "arc"), edge(1, "top"));
    let (slave, master) = if v.swap { (slab, disc) } else { (disc, slab) };
    Scenario {
        name: v.name(),
        description: "disc sector indenting an elastic slab".into(),
        element: v.element,
        mesh_file: None,
        bodies: vec![
            BodyConfig {
                shape: Some(Shape::Sector { radius_mm: 1.0, span_deg: 120.0, nr: disc_nr, na: disc_na }),
                origin_mm: [0.9, 1.3],
                material: hooke(INDENTER_YOUNG),
            },
            rect(1.8, 0.3, slab_nx, slab_ny, [0.0, 0.0], hooke(FOUNDATION_YOUNG)),
        ],
        dirichlet: vec![
            fixed(0, "inner", Components::Both, [0.0, -INDENTATION_DEPTH]),
            fixed(1, "bottom", Components::Both, [0.0, 0.0]),
        ],
        neumann: vec![],
        rigid: vec![],
        pairs: vec![PairConfig {
            name: "interface".into(),
            slave,
            master,
            algorithm: v.algorithm,
            multipliers: v.multipliers,
            friction: if v.mu == 0.0 { FrictionLaw::Frictionless } else { FrictionLaw::Coulomb { mu: v.mu } },
        }],
        time: quasi_static_time(1.8, FOUNDATION_YOUNG, 60.0, 10.0),
        contact: ContactSettings::default(),
        expected_failure: false,
    }
}

/// Elastic slab on a rigid flat with a Tresca interface. The top face over
/// `0 <= x <= SLAB_PUSHED_WIDTH` is pushed down and the right face is pushed
/// left, both by 2e-3 mm; the right face is free vertically.
pub fn slab_tresca(nx: usize, ny: usize, multipliers: MultiplierKind) -> Scenario {
    Scenario {
        name: format!("slab_tresca{}", if multipliers == MultiplierKind::P1 { "_p1" } else { "" }),
        description: "elastic slab sheared on a rigid foundation with Tresca friction".into(),
        element: ElementKind::Q1,
        mesh_file: None,
        bodies: vec![rect(SLAB_WIDTH, SLAB_HEIGHT, nx, ny, [0.0, 0.0], hooke(SLAB_YOUNG))],
        dirichlet: vec![
            DirichletConfig {
                x_range_mm: Some([0.0, SLAB_PUSHED_WIDTH]),
                ..fixed(0, "top", Components::Both, [0.0, -SLAB_DISPLACEMENT])
            },
            fixed(0, "right", Components::X, [-SLAB_DISPLACEMENT, 0.0]),
        ],
        neumann: vec![],
        rigid: vec![RigidConfig { name: "foundation".into(), points_mm: vec![[2.0, 0.0], [-1.0, 0.0]] }],
        pairs: vec![PairConfig {
            name: "foundation".into(),
            slave: edge(0, "bottom"),
            master: SurfaceRef::Rigid { rigid: "foundation".into() },
            algorithm: Algorithm::Global,
            multipliers,
            friction: FrictionLaw::Tresca { s_h_mpa: SLAB_TRESCA_MPA },
        }],
        time: quasi_static_time(SLAB_WIDTH, SLAB_YOUNG, 60.0, 10.0),
        contact: ContactSettings::default(),
        expected_failure: false,
    }
}

/// Desk-scale slab mesh (finest level of the convergence study).
pub const SLAB_DESK_MESH: (usize, usize) = (52, 12);

/// Three stacked elastoplastic blocks on a rigid floor, the top block pressed
/// down. Every upper block's bottom is the slave of its interface; the
/// masters underneath are finer.
pub fn forging(algorithm: Algorithm, press: f64) -> Scenario {
    let local = algorithm == Algorithm::Local;
    let mut time = quasi_static_time(2.0, FORGING_YOUNG, 60.0, 10.0);
    time.hold_time = 0.0;
    let pair = |name: &str, slave: SurfaceRef, master: SurfaceRef| PairConfig {
        name: name.into(),
        slave,
        master,
        algorithm,
        multipliers: MultiplierKind::P0,
        friction: FrictionLaw::Coulomb { mu: 0.1 },
    };
    Scenario {
        name: format!("forging_three_bodies_{}", if local { "local" } else { "global" }),
        description: "three elastoplastic blocks forged on a rigid floor".into(),
        element: ElementKind::Q1,
        mesh_file: None,
        bodies: vec![
            rect(2.0, 0.5, 40, 10, [0.0, 0.0], forging_material()),
            rect(1.4, 0.5, 21, 7, [0.3, 0.5], forging_material()),
            rect(0.8, 0.4, 9, 4, [0.6, 1.0], forging_material()),
        ],
        dirichlet: vec![fixed(2, "top", Components::Both, [0.0, -press])],
        neumann: vec![],
        rigid: vec![RigidConfig { name: "floor".into(), points_mm: vec![[3.0, 0.0], [-1.0, 0.0]] }],
        pairs: vec![
            pair("floor", edge(0, "bottom"), SurfaceRef::Rigid { rigid: "floor".into() }),
            pair("lower", edge(1, "bottom"), edge(0, "top")),
            pair("upper", edge(2, "bottom"), edge(1, "top")),
        ],
        time,
        contact: ContactSettings::default(),
        expected_failure: local,
    }
}

pub const FORGING_PRESS: f64 = 0.08;

pub fn builtin_names() -> Vec<String> {
    let mut names: Vec<String> = IndentationVariant::all().iter().map(IndentationVariant::name).collect();
    names.extend(["slab_tresca", "slab_tresca_p1", "forging_three_bodies_local", "forging_three_bodies_global"].map(String::from));
    names
}

pub fn builtin_scenario(name: &str) -> Result<Scenario, ScenarioError> {
    if let Some(v) = IndentationVariant::all().into_iter().find(|v| v.name() == name) {
        return Ok(indentation(v));
    }
    let (nx, ny) = SLAB_DESK_MESH;
    match name {
        "slab_tresca" => Ok(slab_tresca(nx, ny, MultiplierKind::P0)),
        "slab_tresca_p1" => Ok(slab_tresca(nx, ny, MultiplierKind::P1)),
        "forging_three_bodies_local" => Ok(forging(Algorithm::Local, FORGING_PRESS)),
        "forging_three_bodies_global" => Ok(forging(Algorithm::Global, FORGING_PRESS)),
        _ => Err(ScenarioError::UnknownBuiltin { name: name.into(), available: builtin_names() }),
    }
}
