//! Residuals of the discrete contact and friction conditions after a step.
//!
//! Forces are normalized by the largest contact force of the pair and gaps or
//! slips by its mean slave segment length, so every line is dimensionless.

use super::{ContactStepResult, NodeStatus};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktReport {
    /// `f_i >= 0`.
    pub normal_sign: f64,
    /// `g_i >= 0`.
    pub non_penetration: f64,
    /// `f_i g_i = 0`.
    pub complementarity: f64,
    /// `|t_i| <= b_i`.
    pub cone: f64,
    /// `|t_i| < b_i` implies zero slip.
    pub stick: f64,
    /// `t_i s_i <= 0`.
    pub dissipation: f64,
    /// `|t_i| = b_i` on slipping nodes.
    pub cone_equality: f64,
}

impl KktReport {
    pub fn lines(&self) -> [(&'static str, f64); 7] {
        [
            ("normal force sign", self.normal_sign),
            ("non-penetration", self.non_penetration),
            ("normal complementarity", self.complementarity),
            ("friction cone", self.cone),
            ("stick implies no slip", self.stick),
            ("friction opposes slip", self.dissipation),
            ("cone equality on slip", self.cone_equality),
        ]
    }

    pub fn max(&self) -> f64 {
        self.lines().iter().map(|l| l.1).fold(0.0, f64::max)
    }

    pub fn merge(&mut self, o: &KktReport) {
        self.normal_sign = self.normal_sign.max(o.normal_sign);
        self.non_penetration = self.non_penetration.max(o.non_penetration);
        self.complementarity = self.complementarity.max(o.complementarity);
        self.cone = self.cone.max(o.cone);
        self.stick = self.stick.max(o.stick);
        self.dissipation = self.dissipation.max(o.dissipation);
        self.cone_equality = self.cone_equality.max(o.cone_equality);
    }
}

pub fn kkt_audit(result: &ContactStepResult) -> KktReport {
    let mut out = KktReport::default();
    for pair in &result.pairs {
        let force = pair
            .nodes
            .iter()
            .map(|n| n.normal_force.abs().max(n.tangential_force.abs()))
            .fold(0.0, f64::max);
        let fs = if force > 0.0 { force } else { 1.0 };
        let ls = pair.length_scale;
        let mut r = KktReport::default();
        for n in pair.nodes.iter().filter(|n| n.constrained) {
            let (f, t) = (n.normal_force, n.tangential_force);
            r.normal_sign = r.normal_sign.max((-f).max(0.0) / fs);
            r.non_penetration = r.non_penetration.max((-n.gap).max(0.0) / ls);
            r.complementarity = r.complementarity.max((f * n.gap).abs() / (fs * ls));
            r.cone = r.cone.max((t.abs() - n.bound).max(0.0) / fs);
            r.dissipation = r.dissipation.max((t * n.slip).max(0.0) / (fs * ls));
            if n.tangent_free {
                match n.status {
                    NodeStatus::Stick => r.stick = r.stick.max(n.slip.abs() / ls),
                    NodeStatus::Slip => r.cone_equality = r.cone_equality.max((t.abs() - n.bound).abs() / fs),
                    NodeStatus::Separated => {}
                }
            }
        }
        out.merge(&r);
    }
    out
}
