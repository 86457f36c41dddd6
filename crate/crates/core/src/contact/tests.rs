use super::*;
use crate::mesh::{ContactChain, ElementKind};
use approx::assert_relative_eq;

/// Slave chain of `slave.len()` nodes above a master chain (rigid unless
/// `master_nodes` are deformable). Node ids: slave first, then master.
struct Rig {
    surfaces: Vec<ContactSurface>,
    x_prev: Vec<Vec2>,
    x_pred: Vec<Vec2>,
    compliance: Vec<Vec2>,
}

fn rig(slave: &[Vec2], slave_prev: &[Vec2], master: &[Vec2], deformable_master: bool, c: f64) -> Rig {
    let mut x_pred: Vec<Vec2> = slave.to_vec();
    let mut x_prev: Vec<Vec2> = slave_prev.to_vec();
    let schain = ContactChain { body: 0, name: "s".into(), nodes: (0..slave.len()).collect() };
    let mut surfaces = Vec::new();
    let master_surface = if deformable_master {
        let off = x_pred.len();
        x_pred.extend_from_slice(master);
        x_prev.extend_from_slice(master);
        let mchain = ContactChain { body: 1, name: "m".into(), nodes: (off..off + master.len()).collect() };
        ContactSurface::from_chain(&mchain, ElementKind::Q1, &x_pred).unwrap()
    } else {
        ContactSurface::rigid("m", master.to_vec()).unwrap()
    };
    surfaces.push(ContactSurface::from_chain(&schain, ElementKind::Q1, &x_pred).unwrap());
    surfaces.push(master_surface);
    let compliance = vec![Vec2::new(c, c); x_pred.len()];
    Rig { surfaces, x_prev, x_pred, compliance }
}

fn pair(algorithm: Algorithm, friction: FrictionLaw) -> ContactPair {
    ContactPair {
        name: "p".into(),
        slave: 0,
        master: 1,
        choice: SolverChoice { algorithm, multipliers: MultiplierKind::P1 },
        friction,
    }
}

fn run(r: &Rig, p: &ContactPair) -> ContactStepResult {
    let input = StepInput { surfaces: &r.surfaces, x_prev: &r.x_prev, x_pred: &r.x_pred, compliance: &r.compliance };
    let mut state = ContactState::default();
    solve_contact_step(std::slice::from_ref(p), &input, &mut state, &ContactSettings::default()).unwrap()
}

fn floor() -> Vec<Vec2> {
    vec![Vec2::new(3.0, 0.0), Vec2::new(-3.0, 0.0)]
}

#[test]
fn no_penetration_no_force() {
    let s = [Vec2::new(0.0, 0.2), Vec2::new(1.0, 0.3)];
    let r = rig(&s, &s, &floor(), false, 1.0);
    for alg in [Algorithm::Local, Algorithm::Global] {
        let out = run(&r, &pair(alg, FrictionLaw::Frictionless));
        assert!(out.forces.iter().all(|f| f.norm() == 0.0));
        assert!(out.correction.iter().all(|c| c.norm() == 0.0));
    }
}

#[test]
fn single_node_penetration_removed_exactly() {
    let delta = 0.013;
    let s = [Vec2::new(0.0, -delta), Vec2::new(1.0, 0.5)];
    let c = 2.5e-3;
    let r = rig(&s, &s, &floor(), false, c);
    let out = run(&r, &pair(Algorithm::Local, FrictionLaw::Frictionless));
    assert_relative_eq!(out.correction[0].y, delta, epsilon = 1e-15);
    let node = &out.pairs[0].nodes[0];
    assert!(node.gap.abs() < 1e-12);
    // one-node closed form: c f = delta
    assert_relative_eq!(node.normal_force, delta / c, max_relative = 1e-13);
    assert_eq!(out.pairs[0].nodes[1].status, NodeStatus::Separated);
}

#[test]
fn tresca_bound_caps_tangential_force() {
    // both nodes pressed 0.01 into the floor and pushed sideways by 0.1
    let prev = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
    let s = [Vec2::new(0.1, -0.01), Vec2::new(1.1, -0.01)];
    let r = rig(&s, &prev, &floor(), false, 1.0);
    let out = run(&r, &pair(Algorithm::Local, FrictionLaw::Tresca { s_h_mpa: 0.02 }));
    for n in &out.pairs[0].nodes {
        assert_eq!(n.status, NodeStatus::Slip);
        assert_relative_eq!(n.tangential_force.abs(), 0.02 * n.weight, epsilon = 1e-15);
        assert!(n.tangential_force * n.slip < 0.0);
    }
    // large bound: stick, zero slip
    let out = run(&r, &pair(Algorithm::Local, FrictionLaw::Tresca { s_h_mpa: 10.0 }));
    for n in &out.pairs[0].nodes {
        assert_eq!(n.status, NodeStatus::Stick);
        assert!(n.slip.abs() < 1e-15);
    }
    assert!(kkt_audit(&out).max() < 1e-12);
}

/// Solves the two-node Coulomb press for one assignment of tangential
/// statuses (`0` stick, `±1` slip with t = ±μ f) by direct linear algebra.
fn enumerate_case(a: &DMatrix<f64>, q: &[f64], mu: f64, st: [i32; 2]) -> Option<Vec<f64>> {
    // unknown order: f0, t0, f1, t1; rows the same
    let n = 4;
    let mut m = DMatrix::zeros(n, n);
    let mut rhs = nalgebra::DVector::zeros(n);
    for node in 0..2 {
        let (fr, tr) = (2 * node, 2 * node + 1);
        for c in 0..n {
            m[(fr, c)] = a[(fr, c)];
        }
        rhs[fr] = -q[fr];
        if st[node] == 0 {
            for c in 0..n {
                m[(tr, c)] = a[(tr, c)];
            }
            rhs[tr] = -q[tr];
        } else {
            m[(tr, tr)] = 1.0;
            m[(tr, fr)] = -(st[node] as f64) * mu;
        }
    }
    let z = m.lu().solve(&rhs)?;
    let w = a * &z + nalgebra::DVector::from_column_slice(q);
    for node in 0..2 {
        let (f, t, s) = (z[2 * node], z[2 * node + 1], w[2 * node + 1]);
        if f <= 0.0 {
            return None;
        }
        let ok = match st[node] {
            0 => t.abs() <= mu * f,
            k => (k as f64) * s <= 0.0,
        };
        if !ok {
            return None;
        }
    }
    Some(z.iter().copied().collect())
}

#[test]
fn coulomb_fixed_point_matches_enumeration() {
    // two slave nodes on one deformable master segment: coupled through the
    // master dofs
    let prev = [Vec2::new(0.2, 0.0), Vec2::new(0.8, 0.0)];
    let s = [Vec2::new(0.15, -0.02), Vec2::new(0.83, -0.01)];
    let master = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 0.0)];
    let r = rig(&s, &prev, &master, true, 1.0);
    let mu = 0.3;
    let p = pair(Algorithm::Local, FrictionLaw::Coulomb { mu });
    let out = run(&r, &p);

    // oracle: rebuild A and q from the constraints, enumerate 9 status cases
    let cs: Vec<NodeConstraint> = build_constraints(0, &p, &r.surfaces).unwrap().into_iter().flatten().collect();
    let rows: Vec<Vec<(usize, f64)>> = cs.iter().flat_map(|c| [row_entries(c, c.normal), row_entries(c, c.tangent)]).collect();
    let a = DMatrix::from_fn(4, 4, |i, j| {
        let mut v = 0.0;
        for &(d1, v1) in &rows[i] {
            for &(d2, v2) in &rows[j] {
                if d1 == d2 {
                    v += v1 * v2;
                }
            }
        }
        v
    });
    let q: Vec<f64> = cs.iter().flat_map(|c| [c.gap(&r.x_pred), c.slip(&r.x_pred, &r.x_prev)]).collect();
    let mut feasible = Vec::new();
    for s0 in -1..=1 {
        for s1 in -1..=1 {
            if let Some(z) = enumerate_case(&a, &q, mu, [s0, s1]) {
                feasible.push(z);
            }
        }
    }
    assert_eq!(feasible.len(), 1, "oracle must single out one status combination");
    let z = &feasible[0];
    for (node, res) in out.pairs[0].nodes.iter().enumerate() {
        assert_relative_eq!(res.normal_force, z[2 * node], max_relative = 1e-10);
        assert_relative_eq!(res.tangential_force, z[2 * node + 1], max_relative = 1e-10, epsilon = 1e-14);
    }
    assert!(out.fixed_point_iterations >= 1);
    assert!(kkt_audit(&out).max() < 1e-9);
}

#[test]
fn zero_mu_is_frictionless_in_one_iteration() {
    let prev = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
    let s = [Vec2::new(0.1, -0.01), Vec2::new(1.1, -0.01)];
    let r = rig(&s, &prev, &floor(), false, 1.0);
    let out = run(&r, &pair(Algorithm::Local, FrictionLaw::Coulomb { mu: 0.0 }));
    assert_eq!(out.fixed_point_iterations, 1);
    assert!(out.pairs[0].nodes.iter().all(|n| n.tangential_force == 0.0));
}

#[test]
fn action_reaction_global_deformable_master() {
    let prev = [Vec2::new(0.1, 0.0), Vec2::new(0.5, 0.0), Vec2::new(0.9, 0.0)];
    let s = [Vec2::new(0.12, -0.01), Vec2::new(0.5, -0.02), Vec2::new(0.91, -0.005)];
    let master = [Vec2::new(1.2, 0.0), Vec2::new(0.7, 0.0), Vec2::new(0.3, 0.0), Vec2::new(-0.2, 0.0)];
    let r = rig(&s, &prev, &master, true, 1.0);
    for friction in [FrictionLaw::Frictionless, FrictionLaw::Coulomb { mu: 0.2 }] {
        let out = run(&r, &pair(Algorithm::Global, friction));
        let p = &out.pairs[0];
        let sum = p.slave_force_total + p.master_force_total;
        assert!(sum.norm() <= 1e-9 * p.slave_force_total.norm());
        let total: Vec2 = out.forces.iter().sum();
        assert!(total.norm() <= 1e-9 * p.slave_force_total.norm());
        assert!(kkt_audit(&out).max() < 1e-9);
    }
}

#[test]
fn master_penetration_metric() {
    let slave = ContactSurface::rigid("s", vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]).unwrap();
    let master = ContactSurface::rigid("m", vec![Vec2::new(0.8, 0.1), Vec2::new(0.5, 0.03), Vec2::new(0.2, 0.1)]).unwrap();
    // slave outward normal is -y, so a master node at +0.03 sits 0.03 inside
    assert_relative_eq!(max_node_penetration(&slave, &master), 0.1, epsilon = 1e-15);
}
