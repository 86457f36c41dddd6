//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails. Every built-in is run once and the
//! outcomes are shared between criteria.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;

use mortar_contact::contact::NodeStatus;
use mortar_contact::fem::{element_stiffness, hooke_internal_force};
use mortar_contact::geometry::{project_node_to_master, update_surfaces, ContactSurface, CurvilinearFrame};
use mortar_contact::material::Hooke;
use mortar_contact::mesh::ElementKind;
use mortar_contact::mortar::{assemble_g1, assemble_mortar, MultiplierKind};
use mortar_contact::scenario::{
    builtin_names, builtin_scenario, convergence_study, relative_l2_difference, run_scenario, ConvergenceSpec,
    Profile, RunOutcome, Scenario, ScenarioError,
};
use mortar_contact::Vec2;

const TOL_G1: f64 = 1e-10;
const TOL_COLLAPSE: f64 = 1e-10;
const TOL_BACKENDS: f64 = 1e-8;
const TOL_KKT: f64 = 1e-9;
const TOL_PROFILE: f64 = 0.05;
const DETACHMENT: f64 = 0.7;
const TOL_DETACHMENT: f64 = 0.1;
const CONVERGENCE_RATIO: f64 = 2.0;
const FORGING_PENETRATION: f64 = 1e-6;
const FORGING_LOCAL_FACTOR: f64 = 10.0;
const TOL_STIFFNESS: f64 = 1e-5;
const ENERGY_RESIDUAL: f64 = 0.02;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Runs = BTreeMap<String, Result<RunOutcome, ScenarioError>>;

fn flat_chain(s: &[f64], reversed: bool) -> ContactSurface {
    let mut pts: Vec<Vec2> = s.iter().map(|&x| Vec2::new(x, 0.0)).collect();
    if reversed {
        pts.reverse();
    }
    ContactSurface::rigid("chain", pts).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `G1` entries on one slave segment `[0, L]` whose contact window stops at
/// `a`, against the closed forms of the partially covered segment.
fn criterion_1() -> Verdict {
    let t = Instant::now();
    let l = 0.37;
    let frame = |kind| CurvilinearFrame {
        origin: 0,
        slave_s: vec![0.0, l],
        master_s: vec![l, 0.0],
        breakpoints: if kind == MultiplierKind::P0 { vec![0.0, 0.5 * l, l] } else { vec![0.0, l] },
        master_reversed: true,
    };
    let mut worst: f64 = 0.0;
    for a in [0.25 * l, 0.5 * l, 0.75 * l, l] {
        let g1 = assemble_g1(&frame(MultiplierKind::P1), (0.0, a), MultiplierKind::P1, false).to_dense();
        let kk = a * (a * a / (3.0 * l * l) - a / l + 1.0);
        let kn = a * (-a * a / (3.0 * l * l) + a / (2.0 * l));
        worst = worst.max(rel(g1[(0, 0)], kk)).max(rel(g1[(0, 1)], kn)).max(rel(g1[(1, 0)], kn));
    }
    let mut p0_exact = true;
    for a in [0.6 * l, 0.75 * l, l] {
        let g1 = assemble_g1(&frame(MultiplierKind::P0), (0.0, a), MultiplierKind::P0, false).to_dense();
        p0_exact &= rel(g1[(0, 0)], 3.0 * l / 8.0) <= 4.0 * f64::EPSILON;
    }
    // The same entries through the full assembly: the master chain ends at
    // a inside the right slave segment of node 1, the left one is covered.
    let a = 0.75 * l;
    let slave = flat_chain(&[-l, 0.0, l], false);
    let master = flat_chain(&[-1.5 * l, 0.2 * l, a], true);
    let op = assemble_mortar(&slave, &master, MultiplierKind::P1, 1).unwrap();
    let g1 = op.g1_dense();
    worst = worst
        .max(rel(g1[(1, 1)], l / 3.0 + a * (a * a / (3.0 * l * l) - a / l + 1.0)))
        .max(rel(g1[(1, 2)], a * (-a * a / (3.0 * l * l) + a / (2.0 * l))))
        .max(rel(g1[(1, 0)], l / 6.0));
    let secs = t.elapsed().as_secs_f64();
    Verdict::new(
        worst <= TOL_G1 && p0_exact && secs < 1.0,
        format!("P1 closed forms max rel err {worst:.1e} (tol {TOL_G1:.0e}); P0 3L/8 exact: {p0_exact}; {secs:.3} s"),
    )
}

/// Soft block pressed and sheared onto a wider stiff block. Interface nodes
/// coincide over the slave extent; the master overhangs by one element on
/// each side so no slave node leaves the master chain. With mu = 1 the
/// interface sticks throughout and the nodes stay coincident.
const PRESS: &str = r#"
name = "two_block_press"
element = "Q1"

[[body]]
origin_mm = [-0.2, 0.0]
shape = { type = "rect", width_mm = 1.4, height_mm = 0.4, nx = 7, ny = 2 }
material = { law = "hooke", young_mpa = 70000.0, poisson = 0.3, density_t_per_mm3 = 7.8e-9 }

[[body]]
origin_mm = [0.0, 0.4]
shape = { type = "rect", width_mm = 1.0, height_mm = 0.4, nx = 5, ny = 2 }
material = { law = "hooke", young_mpa = 7000.0, poisson = 0.3, density_t_per_mm3 = 7.8e-9 }

[[dirichlet]]
body = 0
edge = "bottom"
components = "both"
target_mm = [0.0, 0.0]

[[dirichlet]]
body = 1
edge = "top"
components = "both"
target_mm = [0.002, -0.004]

[[pair]]
name = "press"
slave = { body = 1, edge = "bottom" }
master = { body = 0, edge = "top" }
algorithm = "ALGORITHM"
multipliers = "P1"
friction = { law = "coulomb", mu = 1.0 }

[time]
dt_safety = 0.8
ramp_time_s = 2e-5
hold_time_s = 1e-5
hold_damping_per_s = 1e6
"#;

fn criterion_2() -> Verdict {
    let mut worst: f64 = 0.0;
    for kind in [MultiplierKind::P0, MultiplierKind::P1] {
        for s in [vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0], vec![0.0, 0.05, 0.2, 0.5, 0.65, 1.0]] {
            let op = assemble_mortar(&flat_chain(&s, false), &flat_chain(&s, true), kind, 2).unwrap();
            // D^T = G1^-T G21^T from the raw matrices
            let d = op.g1_dense().transpose().lu().solve(&op.g21_dense().transpose()).unwrap();
            let m = s.len();
            let expect = DMatrix::from_fn(m, m, |i, j| if j == m - 1 - i { 1.0 } else { 0.0 });
            worst = worst.max((d - expect).amax());
        }
    }
    let run = |alg: &str| {
        let sc = Scenario::from_toml(&PRESS.replace("ALGORITHM", alg)).unwrap();
        run_scenario(&sc, None)
    };
    let (global, local) = match (run("global"), run("local")) {
        (Ok(g), Ok(l)) => (g, l),
        (g, l) => return Verdict::new(false, format!("press runs failed: {:?} / {:?}", g.err(), l.err())),
    };
    let norm = |u: &[Vec2]| u.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
    let diff: Vec<Vec2> = global.displacement.iter().zip(&local.displacement).map(|(a, b)| a - b).collect();
    let d = norm(&diff) / norm(&global.displacement);
    Verdict::new(
        worst <= TOL_COLLAPSE && d <= TOL_BACKENDS,
        format!("collapse max err {worst:.1e} (tol {TOL_COLLAPSE:.0e}); press global vs local rel diff {d:.1e} (tol {TOL_BACKENDS:.0e})"),
    )
}

fn criterion_3(runs: &Runs) -> Verdict {
    let mut worst = (0.0, String::new());
    let mut failed = Vec::new();
    for (name, r) in runs {
        match r {
            Ok(o) if o.stats.kkt.max() > worst.0 => worst = (o.stats.kkt.max(), name.clone()),
            Ok(_) => {}
            Err(_) if builtin_scenario(name).map(|s| s.expected_failure).unwrap_or(false) => {}
            Err(e) => failed.push(format!("{name}: {e}")),
        }
    }
    Verdict::new(
        worst.0 <= TOL_KKT && failed.is_empty(),
        format!("worst KKT line {:.1e} in {} (tol {TOL_KKT:.0e}); {} builtins; failures {failed:?}", worst.0, worst.1, runs.len()),
    )
}

fn profile<'a>(runs: &'a Runs, name: &str) -> Option<&'a Profile> {
    runs.get(name)?.as_ref().ok()?.profiles.first()
}

/// Relative L2 difference of one field; two identically zero fields agree.
fn field_difference(a: &Profile, b: &Profile, tangential: bool) -> Option<f64> {
    let get: fn(&mortar_contact::scenario::ProfileRecord) -> f64 =
        if tangential { |r| r.sigma_t } else { |r| r.sigma_n };
    let zero = |p: &Profile| p.records.iter().all(|r| get(r) == 0.0);
    if zero(a) && zero(b) {
        return Some(0.0);
    }
    relative_l2_difference(a, b, get)
}

fn compare(runs: &Runs, a: &str, b: &str, tangential: bool, out: &mut Vec<String>) -> bool {
    let d = profile(runs, a).zip(profile(runs, b)).and_then(|(pa, pb)| field_difference(pa, pb, tangential));
    let field = if tangential { "sigma_t" } else { "sigma_n" };
    match d {
        Some(d) => {
            out.push(format!("{a}/{b} {field} {:.1}%", 100.0 * d));
            d <= TOL_PROFILE
        }
        None => {
            out.push(format!("{a}/{b} {field} missing"));
            false
        }
    }
}

fn criterion_4(runs: &Runs) -> Verdict {
    let mut out = Vec::new();
    let mut pass = true;
    for base in ["indentation_q1_frictionless", "indentation_q1_coulomb_mu005"] {
        pass &= compare(runs, base, &format!("{base}_swap"), false, &mut out);
    }
    // The Q2 desk mesh has 117 elements, below the desk-scale range; reported only.
    let mut info = Vec::new();
    compare(runs, "indentation_q2_frictionless", "indentation_q2_frictionless_swap", false, &mut info);
    Verdict::new(pass, format!("{} (tol 5%); info: {}", out.join(", "), info.join(", ")))
}

fn criterion_5(runs: &Runs) -> Verdict {
    let mut out = Vec::new();
    let mut pass = true;
    for element in ["q1", "q2"] {
        for friction in ["frictionless", "coulomb_mu005"] {
            let base = format!("indentation_{element}_{friction}");
            for tangential in [false, true] {
                pass &= compare(runs, &base, &format!("{base}_p1"), tangential, &mut out);
            }
        }
    }
    Verdict::new(pass, format!("{} (tol 5%)", out.join(", ")))
}

/// Abscissa where the trailing run of separated slave nodes starts.
fn detachment_onset(p: &Profile) -> Option<f64> {
    let mut onset = None;
    for r in p.records.iter().rev() {
        if r.status != NodeStatus::Separated {
            break;
        }
        onset = Some(r.s);
    }
    onset
}

fn criterion_6(runs: &Runs) -> Verdict {
    let mut out = Vec::new();
    let mut pass = true;
    for name in ["slab_tresca", "slab_tresca_p1"] {
        match profile(runs, name).and_then(detachment_onset) {
            Some(s) => {
                pass &= (s - DETACHMENT).abs() <= TOL_DETACHMENT;
                out.push(format!("{name} onset s = {s:.4} mm"));
            }
            None => {
                pass = false;
                out.push(format!("{name}: no detachment"));
            }
        }
    }
    Verdict::new(pass, format!("{} (expected {DETACHMENT} ± {TOL_DETACHMENT} mm)", out.join(", ")))
}

fn criterion_7() -> Verdict {
    let rows = match convergence_study("slab_tresca", &ConvergenceSpec::default()) {
        Ok(rows) => rows,
        Err(e) => return Verdict::new(false, format!("study failed: {e}")),
    };
    let series = |kind| rows.iter().filter(|r| r.multipliers == kind).map(|r| r.error).collect::<Vec<_>>();
    let (p0, p1) = (series(MultiplierKind::P0), series(MultiplierKind::P1));
    let monotone = |e: &[f64]| e.windows(2).all(|w| w[1] < w[0]);
    let ratio = p0.iter().zip(&p1).map(|(a, b)| (a / b).max(b / a)).fold(0.0, f64::max);
    let fmt = |e: &[f64]| e.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(" > ");
    Verdict::new(
        p0.len() >= 3 && monotone(&p0) && monotone(&p1) && ratio <= CONVERGENCE_RATIO,
        format!("P0 {}; P1 {}; max P0/P1 ratio {ratio:.2} (tol {CONVERGENCE_RATIO})", fmt(&p0), fmt(&p1)),
    )
}

/// Worst closest-point penetration of slave nodes into master surfaces and
/// of master nodes into slave surfaces on the final configuration of a
/// built-in, over deformable pairs.
fn geometric_penetration(name: &str, o: &RunOutcome) -> (f64, f64) {
    let mut model = builtin_scenario(name).and_then(|sc| sc.build_model()).unwrap();
    let x: Vec<Vec2> = model.mesh.nodes.iter().zip(&o.displacement).map(|(a, u)| a + u).collect();
    update_surfaces(&mut model.surfaces, &x).unwrap();
    let worst = |a: &ContactSurface, b: &ContactSurface| {
        a.positions
            .iter()
            .map(|&p| project_node_to_master(p, b))
            .filter(|p| p.projected)
            .fold(0.0, |w: f64, p| w.max(-p.gap))
    };
    let mut out: (f64, f64) = (0.0, 0.0);
    for p in &model.pairs {
        let (s, m) = (&model.surfaces[p.slave], &model.surfaces[p.master]);
        if !m.is_rigid() {
            out = (out.0.max(worst(s, m)), out.1.max(worst(m, s)));
        }
    }
    out
}

fn criterion_8(runs: &Runs) -> Verdict {
    let global = match &runs["forging_three_bodies_global"] {
        Ok(o) => o,
        Err(e) => return Verdict::new(false, format!("global run failed: {e}")),
    };
    let global_ok = global.stats.max_slave_penetration < FORGING_PENETRATION;
    let bound = FORGING_LOCAL_FACTOR * FORGING_PENETRATION;
    let geometric = |name: &str, o: &RunOutcome| {
        let (s, m) = geometric_penetration(name, o);
        format!("{name} slave nodes {s:.2e} mm, master nodes {m:.2e} mm")
    };
    let mut info = vec![geometric("forging_three_bodies_global", global)];
    let (local_ok, local) = match &runs["forging_three_bodies_local"] {
        Ok(o) => {
            info.push(geometric("forging_three_bodies_local", o));
            (o.max_master_penetration > bound, format!("local master-node penetration {:.2e} mm", o.max_master_penetration))
        }
        Err(e) => (!e.is_validation(), format!("local diverged: {e}")),
    };
    Verdict::new(
        global_ok && local_ok,
        format!(
            "global constraint-gap penetration {:.2e} mm (tol {FORGING_PENETRATION:.0e}); {local} (needs > {bound:.0e}); info, closest-point penetration: {}",
            global.stats.max_slave_penetration,
            info.join("; ")
        ),
    )
}

fn distorted(kind: ElementKind) -> Vec<Vec2> {
    let corners = [Vec2::new(0.0, 0.0), Vec2::new(1.1, 0.1), Vec2::new(1.3, 0.9), Vec2::new(-0.1, 0.8)];
    match kind {
        ElementKind::Q1 => corners.to_vec(),
        ElementKind::Q2 => {
            let mut c = corners.to_vec();
            for i in 0..4 {
                let mid = 0.5 * (corners[i] + corners[(i + 1) % 4]);
                c.push(mid + Vec2::new(0.02 * i as f64, -0.01));
            }
            c
        }
    }
}

fn stiffness_fd_error() -> f64 {
    let hooke = Hooke { young: 7.0e4, poisson: 0.3, density: 7.8e-9 };
    let mut worst: f64 = 0.0;
    for kind in [ElementKind::Q1, ElementKind::Q2] {
        let coords = distorted(kind);
        let n = coords.len();
        let k = element_stiffness(0, kind, &coords, &hooke).unwrap();
        let h = 1e-6;
        let mut fd = DMatrix::zeros(2 * n, 2 * n);
        for col in 0..2 * n {
            let mut up = vec![Vec2::zeros(); n];
            let mut dn = vec![Vec2::zeros(); n];
            up[col / 2][col % 2] = h;
            dn[col / 2][col % 2] = -h;
            let fu = hooke_internal_force(0, kind, &coords, &up, &hooke).unwrap();
            let fdn = hooke_internal_force(0, kind, &coords, &dn, &hooke).unwrap();
            for row in 0..2 * n {
                fd[(row, col)] = (fu[row] - fdn[row]) / (2.0 * h);
            }
        }
        worst = worst.max((&k - &fd).amax() / k.amax());
    }
    worst
}

fn criterion_9(runs: &Runs) -> Verdict {
    let fd = stiffness_fd_error();
    let mut worst = (0.0, String::new());
    for (name, r) in runs {
        if let Ok(o) = r {
            if o.energy_residual_ratio() > worst.0 {
                worst = (o.energy_residual_ratio(), name.clone());
            }
        }
    }
    let name = "forging_three_bodies_global";
    let identical = match (&runs[name], builtin_scenario(name).and_then(|sc| run_scenario(&sc, None))) {
        (Ok(a), Ok(b)) => {
            let csv = |o: &RunOutcome| o.profiles.iter().map(Profile::to_csv).collect::<String>();
            let bits = |o: &RunOutcome| o.displacement.iter().flat_map(|v| [v.x.to_bits(), v.y.to_bits()]).collect::<Vec<_>>();
            csv(a) == csv(&b) && bits(a) == bits(&b) && a.summary() == b.summary()
        }
        _ => false,
    };
    Verdict::new(
        fd < TOL_STIFFNESS && worst.0 < ENERGY_RESIDUAL && identical,
        format!(
            "stiffness vs FD rel err {fd:.1e} (tol {TOL_STIFFNESS:.0e}); worst energy residual {:.1e} of peak in {} (tol {ENERGY_RESIDUAL}); rerun of {name} bit-identical: {identical}",
            worst.0, worst.1
        ),
    )
}

fn main() -> ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).try_init();
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    verdicts.push((1, "mortar coefficient exactness", criterion_1()));
    verdicts.push((2, "conforming collapse", criterion_2()));

    let mut runs = Runs::new();
    for name in builtin_names() {
        let t = Instant::now();
        let r = builtin_scenario(&name).and_then(|sc| run_scenario(&sc, None));
        eprintln!("  ran {name} in {:.0} s", t.elapsed().as_secs_f64());
        runs.insert(name, r);
    }
    verdicts.push((3, "KKT suite", criterion_3(&runs)));
    verdicts.push((4, "swap symmetry", criterion_4(&runs)));
    verdicts.push((5, "P0/P1 agreement", criterion_5(&runs)));
    verdicts.push((6, "slab detachment", criterion_6(&runs)));
    verdicts.push((7, "convergence", criterion_7()));
    verdicts.push((8, "forging asymmetry", criterion_8(&runs)));
    verdicts.push((9, "numerical hygiene", criterion_9(&runs)));

    let mut all = true;
    for (id, name, v) in &verdicts {
        all &= v.pass;
        println!("criterion {id} [{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
