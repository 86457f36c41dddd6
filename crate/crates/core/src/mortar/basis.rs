//! One-dimensional trace and multiplier bases on a chain parametrized by
//! monotone abscissas.

use super::MultiplierKind;

/// Up to three nonzero `(chain index, value)` pairs.
pub type Values = ([(usize, f64); 3], usize);

const EMPTY: Values = ([(0, 0.0); 3], 0);

/// Trace basis of a chain: hats (linear traces) or quadratic Lagrange
/// functions on `(corner, mid, corner)` triples.
#[derive(Debug, Clone, Copy)]
pub struct ChainBasis<'a> {
    s: &'a [f64],
    ascending: bool,
    quadratic: bool,
}

impl<'a> ChainBasis<'a> {
    pub fn new(s: &'a [f64], quadratic: bool) -> Self {
        let ascending = s[s.len() - 1] >= s[0];
        Self { s, ascending, quadratic }
    }

    pub fn extent(&self) -> (f64, f64) {
        let (a, b) = (self.s[0], self.s[self.s.len() - 1]);
        (a.min(b), a.max(b))
    }

    fn key(&self, v: f64) -> f64 {
        if self.ascending {
            v
        } else {
            -v
        }
    }

    /// Segment containing `x`, or `None` outside the chain.
    pub fn segment(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.extent();
        let eps = 1e-12 * (hi - lo).max(1e-300);
        if x < lo - eps || x > hi + eps {
            return None;
        }
        let t = self.key(x);
        let idx = self.s.partition_point(|&v| self.key(v) <= t);
        Some(idx.saturating_sub(1).min(self.s.len() - 2))
    }

    pub fn eval(&self, x: f64) -> Values {
        let Some(k) = self.segment(x) else {
            return EMPTY;
        };
        let mut out = EMPTY;
        if self.quadratic {
            let e = 2 * (k / 2);
            let (a, b, c) = (self.s[e], self.s[e + 1], self.s[e + 2]);
            out.0[0] = (e, (x - b) * (x - c) / ((a - b) * (a - c)));
            out.0[1] = (e + 1, (x - a) * (x - c) / ((b - a) * (b - c)));
            out.0[2] = (e + 2, (x - a) * (x - b) / ((c - a) * (c - b)));
            out.1 = 3;
        } else {
            let (a, b) = (self.s[k], self.s[k + 1]);
            let t = (x - a) / (b - a);
            out.0[0] = (k, 1.0 - t);
            out.0[1] = (k + 1, t);
            out.1 = 2;
        }
        out
    }
}

/// Multiplier basis on the slave chain: hats over every chain node (P1) or
/// indicators of the dual cells `[z_k, z_{k+1}]` (P0).
pub fn eval_multiplier(kind: MultiplierKind, s: &[f64], z: &[f64], x: f64) -> Values {
    match kind {
        MultiplierKind::P1 => ChainBasis::new(s, false).eval(x),
        MultiplierKind::P0 => {
            let (lo, hi) = (z[0], z[z.len() - 1]);
            let eps = 1e-12 * (hi - lo).max(1e-300);
            if x < lo - eps || x > hi + eps {
                return EMPTY;
            }
            let k = z.partition_point(|&v| v <= x).saturating_sub(1).min(z.len() - 2);
            let mut out = EMPTY;
            out.0[0] = (k, 1.0);
            out.1 = 1;
            out
        }
    }
}

/// Support of multiplier function `k`.
pub fn multiplier_support(kind: MultiplierKind, s: &[f64], z: &[f64], k: usize) -> (f64, f64) {
    match kind {
        MultiplierKind::P1 => (s[k.saturating_sub(1)], s[(k + 1).min(s.len() - 1)]),
        MultiplierKind::P0 => (z[k], z[k + 1]),
    }
}
