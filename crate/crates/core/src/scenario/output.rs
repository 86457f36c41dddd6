//! Contact stress profiles, history tables and plots.

use std::fmt::Write as _;
use std::path::Path;

use super::ScenarioError;
use crate::contact::{NodeStatus, PairResult};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRecord {
    /// Curvilinear abscissa along the slave surface (mm).
    pub s: f64,
    /// Current position of the slave node.
    pub position: Vec2,
    pub sigma_n: f64,
    pub sigma_t: f64,
    pub status: NodeStatus,
}

/// Nodal contact stresses along the slave surface of one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub pair: String,
    pub records: Vec<ProfileRecord>,
}

impl Profile {
    pub fn from_pair(pair: &PairResult, x: &[Vec2]) -> Self {
        let mut records: Vec<ProfileRecord> = pair
            .nodes
            .iter()
            .filter(|n| n.weight > 0.0)
            .map(|n| ProfileRecord {
                s: n.abscissa,
                position: x[n.node],
                // + 0.0 turns -0 into 0 for separated nodes
                sigma_n: n.sigma_n() + 0.0,
                sigma_t: n.sigma_t() + 0.0,
                status: n.status,
            })
            .collect();
        records.sort_by(|a, b| a.s.total_cmp(&b.s));
        Self { pair: pair.name.clone(), records }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("s,sigma_n,sigma_t,status\n");
        for r in &self.records {
            writeln!(s, "{:.16e},{:.16e},{:.16e},{}", r.s, r.sigma_n, r.sigma_t, r.status).unwrap();
        }
        s
    }

    /// Records in contact (nonzero normal stress).
    pub fn contact_extent(&self) -> Option<(f64, f64)> {
        let xs: Vec<f64> = self.records.iter().filter(|r| r.sigma_n < 0.0).map(|r| r.position.x).collect();
        if xs.is_empty() {
            return None;
        }
        Some((xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
    }
}

/// Writes `<pair>.csv` and `<pair>.svg` per profile.
pub fn emit_profiles(profiles: &[Profile], dir: &Path) -> Result<(), ScenarioError> {
    if profiles.is_empty() {
        return Err(ScenarioError::Output("no contact profiles to write".into()));
    }
    let io = |e: std::io::Error| ScenarioError::Output(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    for p in profiles {
        std::fs::write(dir.join(format!("{}.csv", p.pair)), p.to_csv()).map_err(io)?;
        std::fs::write(dir.join(format!("{}.svg", p.pair)), profile_svg(p)).map_err(io)?;
    }
    Ok(())
}

pub fn write_history(rows: &[crate::dynamics::HistoryRow], path: &Path) -> Result<(), ScenarioError> {
    let mut s = String::from(
        "step,t,dt,kinetic,internal,external_work,contact_work,friction_dissipation,damping_dissipation,residual,contact_force\n",
    );
    for r in rows {
        let l = &r.ledger;
        writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.step,
            r.t,
            r.dt,
            l.kinetic,
            l.internal,
            l.external_work,
            l.contact_work,
            l.friction_dissipation,
            l.damping_dissipation,
            l.residual(),
            r.contact_force
        )
        .unwrap();
    }
    std::fs::write(path, s).map_err(|e| ScenarioError::Output(format!("{}: {e}", path.display())))
}

/// Line plot of σ_n and σ_t against the abscissa.
pub fn profile_svg(p: &Profile) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let s_min = p.records.iter().map(|r| r.s).fold(f64::INFINITY, f64::min);
    let s_max = p.records.iter().map(|r| r.s).fold(f64::NEG_INFINITY, f64::max);
    let mut v_min = p.records.iter().flat_map(|r| [r.sigma_n, r.sigma_t]).fold(0.0, f64::min);
    let mut v_max = p.records.iter().flat_map(|r| [r.sigma_n, r.sigma_t]).fold(0.0, f64::max);
    if v_max - v_min < 1e-12 {
        v_min -= 1.0;
        v_max += 1.0;
    }
    let (s_min, s_max) = if s_max > s_min { (s_min, s_max) } else { (s_min - 1.0, s_min + 1.0) };
    let px = |s: f64| M + (s - s_min) / (s_max - s_min) * (W - 2.0 * M);
    let py = |v: f64| H - M - (v - v_min) / (v_max - v_min) * (H - 2.0 * M);
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r##"<line x1="{M}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="#888"/><line x1="{M}" y1="{M}" x2="{M}" y2="{y1:.2}" stroke="#888"/>"##,
        y0 = py(0.0),
        x1 = W - M,
        y1 = H - M
    )
    .unwrap();
    for (label, color, get) in [
        ("sigma_n", "#1f77b4", (|r: &ProfileRecord| r.sigma_n) as fn(&ProfileRecord) -> f64),
        ("sigma_t", "#d62728", |r: &ProfileRecord| r.sigma_t),
    ] {
        let pts: Vec<String> = p.records.iter().map(|r| format!("{:.2},{:.2}", px(r.s), py(get(r)))).collect();
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "))
            .unwrap();
        let ly = if label == "sigma_n" { 20.0 } else { 36.0 };
        writeln!(out, r#"<text x="{}" y="{ly}" font-size="12" fill="{color}">{label}</text>"#, W - 120.0).unwrap();
    }
    writeln!(
        out,
        r#"<text x="{M}" y="20" font-size="13">{} [s: {s_min:.3} .. {s_max:.3} mm, stress: {v_min:.1} .. {v_max:.1} MPa]</text>"#,
        p.pair
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

/// Linear interpolation of `(x, y)` samples sorted by `x`.
fn interpolate(samples: &[(f64, f64)], x: f64) -> f64 {
    match samples.binary_search_by(|p| p.0.total_cmp(&x)) {
        Ok(i) => samples[i].1,
        Err(0) => samples[0].1,
        Err(i) if i == samples.len() => samples[i - 1].1,
        Err(i) => {
            let (a, b) = (samples[i - 1], samples[i]);
            a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
        }
    }
}

/// Relative L2 difference of a profile field between two runs, interpolated
/// over the current x coordinate on a common grid spanning the overlap of
/// both profiles. Normalized by the L2 norm of `b`.
pub fn relative_l2_difference(a: &Profile, b: &Profile, field: fn(&ProfileRecord) -> f64) -> Option<f64> {
    let samples = |p: &Profile| {
        let mut v: Vec<(f64, f64)> = p.records.iter().map(|r| (r.position.x, field(r))).collect();
        v.sort_by(|p, q| p.0.total_cmp(&q.0));
        v.dedup_by(|p, q| p.0 == q.0);
        v
    };
    let (sa, sb) = (samples(a), samples(b));
    if sa.len() < 2 || sb.len() < 2 {
        return None;
    }
    let lo = sa[0].0.max(sb[0].0);
    let hi = sa[sa.len() - 1].0.min(sb[sb.len() - 1].0);
    if hi <= lo {
        return None;
    }
    let n = 4 * sa.len().max(sb.len());
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..=n {
        let x = lo + (hi - lo) * k as f64 / n as f64;
        let (va, vb) = (interpolate(&sa, x), interpolate(&sb, x));
        num += (va - vb).powi(2);
        den += vb * vb;
    }
    (den > 0.0).then(|| (num / den).sqrt())
}
