//! Box-constrained mixed LCP for one coupled block of contact rows.
//!
//! Unknowns are nodal normal forces `f >= 0` and tangential forces `t`; the
//! responses `w = A z + q` are the end-of-step normal gaps and tangential
//! slip increments. A tangential row is bounded by `|t| <= β + γ f` where `f`
//! is the force of its normal row (Tresca: `γ = 0`; Coulomb: `β = 0`), and is
//! forced to zero when the normal row is inactive.
//!
//! The solver is a primal-dual active-set iteration: statuses fix which rows
//! are equations, one dense linear solve gives the exact solution for those
//! statuses, and the statuses are updated from the complementarity functions.
//! If the statuses cycle, projected Gauss-Seidel sweeps (forward then
//! backward) pull the iterate toward the solution and the active-set
//! iteration restarts from there.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Row {
    Normal,
    /// Tangential row attached to normal row `normal`.
    Tangent { normal: usize, beta: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowStatus {
    /// Normal row with `f = 0` (separated), or tangential row of such a node.
    Inactive,
    /// Normal row with `w = 0`.
    Active,
    Stick,
    /// `t` at the upper bound, slip increment `w <= 0`.
    Upper,
    /// `t` at the lower bound, slip increment `w >= 0`.
    Lower,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LcpError {
    #[error("contact solve not converged after {sweeps} sweeps (residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub status: Vec<RowStatus>,
    pub sweeps: usize,
    pub active_set_iterations: usize,
}

pub struct BoxProblem<'a> {
    pub a: &'a DMatrix<f64>,
    pub q: &'a [f64],
    pub rows: &'a [Row],
}

const MAX_ACTIVE_SET: usize = 30;
const PGS_BURST: usize = 10;

impl BoxProblem<'_> {
    fn n(&self) -> usize {
        self.q.len()
    }

    fn bound(&self, r: usize, z: &[f64]) -> f64 {
        match self.rows[r] {
            Row::Normal => f64::INFINITY,
            Row::Tangent { normal, beta, gamma } => (beta + gamma * z[normal].max(0.0)).max(0.0),
        }
    }

    fn response(&self, z: &[f64]) -> Vec<f64> {
        let zv = DVector::from_column_slice(z);
        (self.a * zv).iter().zip(self.q).map(|(a, q)| a + q).collect()
    }

    /// Exact solution for fixed statuses, or `None` if the reduced system is
    /// singular.
    fn polish(&self, status: &[RowStatus]) -> Option<Vec<f64>> {
        let n = self.n();
        let unknown: Vec<usize> =
            (0..n).filter(|&r| matches!(status[r], RowStatus::Active | RowStatus::Stick)).collect();
        let mut col_of = vec![usize::MAX; n];
        for (c, &r) in unknown.iter().enumerate() {
            col_of[r] = c;
        }
        // z = z0 + E y
        let mut z0 = vec![0.0; n];
        let mut e = DMatrix::<f64>::zeros(n, unknown.len());
        for (c, &r) in unknown.iter().enumerate() {
            e[(r, c)] = 1.0;
        }
        for r in 0..n {
            let sign = match status[r] {
                RowStatus::Upper => 1.0,
                RowStatus::Lower => -1.0,
                _ => continue,
            };
            if let Row::Tangent { normal, beta, gamma } = self.rows[r] {
                z0[r] = sign * beta;
                if gamma != 0.0 && col_of[normal] != usize::MAX {
                    e[(r, col_of[normal])] = sign * gamma;
                }
            }
        }
        if unknown.is_empty() {
            return Some(z0);
        }
        let ae = self.a * &e;
        let r0 = self.response(&z0);
        let m = DMatrix::from_fn(unknown.len(), unknown.len(), |i, j| ae[(unknown[i], j)]);
        let rhs = DVector::from_iterator(unknown.len(), unknown.iter().map(|&r| -r0[r]));
        let y = m.lu().solve(&rhs)?;
        let z = DVector::from_column_slice(&z0) + e * y;
        Some(z.iter().copied().collect())
    }

    /// Active-set update from the complementarity functions.
    fn next_status(&self, z: &[f64], w: &[f64]) -> Vec<RowStatus> {
        let n = self.n();
        let mut st = vec![RowStatus::Inactive; n];
        for r in 0..n {
            if self.rows[r] == Row::Normal {
                let c = 1.0 / self.a[(r, r)];
                st[r] = if z[r] - c * w[r] > 0.0 { RowStatus::Active } else { RowStatus::Inactive };
            }
        }
        for r in 0..n {
            if let Row::Tangent { normal, .. } = self.rows[r] {
                if st[normal] != RowStatus::Active {
                    continue;
                }
                let b = self.bound(r, z);
                let y = z[r] - w[r] / self.a[(r, r)];
                st[r] = if y > b {
                    RowStatus::Upper
                } else if y < -b {
                    RowStatus::Lower
                } else {
                    RowStatus::Stick
                };
            }
        }
        st
    }

    fn status_of(&self, z: &[f64]) -> Vec<RowStatus> {
        (0..self.n())
            .map(|r| match self.rows[r] {
                Row::Normal => {
                    if z[r] > 0.0 {
                        RowStatus::Active
                    } else {
                        RowStatus::Inactive
                    }
                }
                Row::Tangent { normal, .. } => {
                    if z[normal] <= 0.0 {
                        RowStatus::Inactive
                    } else {
                        let b = self.bound(r, z);
                        if z[r] >= b * (1.0 - 1e-12) && b > 0.0 {
                            RowStatus::Upper
                        } else if z[r] <= -b * (1.0 - 1e-12) && b > 0.0 {
                            RowStatus::Lower
                        } else {
                            RowStatus::Stick
                        }
                    }
                }
            })
            .collect()
    }

    fn pgs_sweep(&self, z: &mut [f64], order: impl Iterator<Item = usize>) {
        let n = self.n();
        for r in order {
            let mut w = self.q[r];
            for c in 0..n {
                w += self.a[(r, c)] * z[c];
            }
            let v = z[r] - w / self.a[(r, r)];
            z[r] = match self.rows[r] {
                Row::Normal => v.max(0.0),
                Row::Tangent { normal, .. } => {
                    let b = if z[normal] > 0.0 { self.bound(r, z) } else { 0.0 };
                    v.clamp(-b, b)
                }
            };
        }
    }

    /// Largest violation of the conditions, in units of `w` (gaps/slips)
    /// scaled by the row diagonal into force units.
    pub fn residual(&self, z: &[f64], w: &[f64]) -> f64 {
        let mut res: f64 = 0.0;
        for r in 0..self.n() {
            let d = self.a[(r, r)];
            let v = match self.rows[r] {
                Row::Normal => (z[r] - (z[r] - w[r] / d).max(0.0)).abs(),
                Row::Tangent { normal, .. } => {
                    let b = if z[normal] > 0.0 { self.bound(r, z) } else { 0.0 };
                    (z[r] - (z[r] - w[r] / d).clamp(-b, b)).abs()
                }
            };
            res = res.max(v);
        }
        res
    }

    fn consistent(&self, z: &[f64], w: &[f64], status: &[RowStatus]) -> bool {
        self.next_status(z, w) == status
    }

    pub fn solve(&self, warm: &[RowStatus], sweep_max: usize, tol: f64) -> Result<Solution, LcpError> {
        let n = self.n();
        let mut status = warm.to_vec();
        let mut z = vec![0.0; n];
        let mut sweeps = 0;
        let mut iters = 0;
        let mut since_restart = 0;
        loop {
            iters += 1;
            since_restart += 1;
            let polished = self.polish(&status);
            let singular = polished.is_none();
            if let Some(zp) = polished {
                let w = self.response(&zp);
                let next = self.next_status(&zp, &w);
                if next == status {
                    return Ok(Solution { z: zp, w, status, sweeps, active_set_iterations: iters });
                }
                z = zp;
                status = next;
            }
            if singular || since_restart > MAX_ACTIVE_SET {
                if sweeps >= sweep_max {
                    let w = self.response(&z);
                    let residual = self.residual(&z, &w);
                    if residual <= tol {
                        let status = self.status_of(&z);
                        return Ok(Solution { z, w, status, sweeps, active_set_iterations: iters });
                    }
                    return Err(LcpError::NotConverged { sweeps, residual });
                }
                for r in 0..n {
                    let b = self.bound(r, &z);
                    z[r] = if self.rows[r] == Row::Normal { z[r].max(0.0) } else { z[r].clamp(-b, b) };
                }
                for _ in 0..PGS_BURST.min(sweep_max - sweeps) {
                    self.pgs_sweep(&mut z, 0..n);
                    self.pgs_sweep(&mut z, (0..n).rev());
                    sweeps += 1;
                }
                status = self.status_of(&z);
                since_restart = 0;
                let w = self.response(&z);
                if self.residual(&z, &w) <= tol && self.polish(&status).is_none() {
                    return Ok(Solution { z, w, status, sweeps, active_set_iterations: iters });
                }
            }
        }
    }

    /// Whether a candidate solution satisfies the status update rule exactly
    /// (used to accept a polished Coulomb solution).
    pub fn accepts(&self, z: &[f64], status: &[RowStatus]) -> bool {
        let w = self.response(z);
        self.consistent(z, &w, status)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn solve(a: DMatrix<f64>, q: Vec<f64>, rows: Vec<Row>) -> Solution {
        let p = BoxProblem { a: &a, q: &q, rows: &rows };
        p.solve(&vec![RowStatus::Inactive; q.len()], 200, 1e-14).unwrap()
    }

    #[test]
    fn separated_gives_zero() {
        let s = solve(DMatrix::from_row_slice(1, 1, &[2.0]), vec![0.3], vec![Row::Normal]);
        assert_eq!(s.z, vec![0.0]);
        assert_eq!(s.status, vec![RowStatus::Inactive]);
    }

    #[test]
    fn penetration_closed_exactly() {
        let s = solve(DMatrix::from_row_slice(1, 1, &[2.0]), vec![-0.3], vec![Row::Normal]);
        assert_relative_eq!(s.z[0], 0.15, epsilon = 1e-15);
        assert!(s.w[0].abs() < 1e-15);
    }

    #[test]
    fn tresca_slip_and_stick() {
        let a = DMatrix::identity(2, 2);
        let rows = vec![Row::Normal, Row::Tangent { normal: 0, beta: 0.1, gamma: 0.0 }];
        // slip: free tangential increment 1.0 exceeds what 0.1 can stop
        let s = solve(a.clone(), vec![-1.0, 1.0], rows.clone());
        assert_relative_eq!(s.z[1], -0.1, epsilon = 1e-15);
        assert_eq!(s.status[1], RowStatus::Lower);
        // stick
        let s = solve(a, vec![-1.0, 0.05], rows);
        assert_relative_eq!(s.z[1], -0.05, epsilon = 1e-15);
        assert_eq!(s.status[1], RowStatus::Stick);
    }

    #[test]
    fn coulomb_cone_exact_on_slip() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let rows = vec![Row::Normal, Row::Tangent { normal: 0, beta: 0.0, gamma: 0.2 }];
        let s = solve(a, vec![-1.0, 2.0], rows);
        assert_relative_eq!(s.z[1].abs(), 0.2 * s.z[0], epsilon = 1e-14);
        assert!(s.w[0].abs() < 1e-14);
        assert!(s.z[1] * s.w[1] <= 0.0);
    }
}
