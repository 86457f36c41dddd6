//! Square banded matrices with an in-place LU (no pivoting) and a dense
//! partial-pivoting fallback when a pivot is too small.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    /// `n x n` zero matrix with half bandwidth `p`.
    pub fn zeros(n: usize, p: usize) -> Self {
        Self { n, p, data: vec![0.0; n * (2 * p + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize;
        (off.unsigned_abs() <= self.p).then(|| i * (2 * self.p + 1) + (off + self.p as isize) as usize)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).unwrap_or_else(|| panic!("({i}, {j}) outside band {}", self.p));
        self.data[k] += v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.p);
        for i in 0..self.n {
            for j in i.saturating_sub(self.p)..(i + self.p + 1).min(self.n) {
                let v = self.get(i, j);
                if v != 0.0 {
                    t.add(j, i, v);
                }
            }
        }
        t
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn factor(&self) -> Option<Factored> {
        if self.n == 0 {
            return None;
        }
        let mut lu = self.clone();
        let scale = self.data.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let mut stable = scale > 0.0;
        for k in 0..self.n {
            let piv = lu.get(k, k);
            if !(piv.abs() > 1e-10 * scale) {
                stable = false;
                break;
            }
            let hi = (k + self.p + 1).min(self.n);
            for i in k + 1..hi {
                let l = lu.get(i, k) / piv;
                if l == 0.0 {
                    continue;
                }
                let s = lu.slot(i, k).unwrap();
                lu.data[s] = l;
                for j in k + 1..hi {
                    let u = lu.get(k, j);
                    if u != 0.0 {
                        let s = lu.slot(i, j).unwrap();
                        lu.data[s] -= l * u;
                    }
                }
            }
        }
        if stable {
            return Some(Factored::Band(lu));
        }
        let dense = self.to_dense().lu();
        dense.is_invertible().then(|| Factored::Dense(Box::new(dense)))
    }
}

#[derive(Debug, Clone)]
pub enum Factored {
    Band(BandMatrix),
    Dense(Box<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>),
}

impl Factored {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        match self {
            Factored::Band(lu) => {
                let (n, p) = (lu.n, lu.p);
                for i in 0..n {
                    let mut acc = b[i];
                    for j in i.saturating_sub(p)..i {
                        acc -= lu.get(i, j) * b[j];
                    }
                    b[i] = acc;
                }
                for i in (0..n).rev() {
                    let mut acc = b[i];
                    for j in i + 1..(i + p + 1).min(n) {
                        acc -= lu.get(i, j) * b[j];
                    }
                    b[i] = acc / lu.get(i, i);
                }
            }
            Factored::Dense(lu) => {
                let mut v = nalgebra::DVector::from_column_slice(b);
                lu.solve_mut(&mut v);
                b.copy_from_slice(v.as_slice());
            }
        }
    }
}
