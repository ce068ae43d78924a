//! Banded symmetric storage and an equilibrated `LDLᵀ` factorization.
//!
//! Degrees of freedom are ordered by their `x₁` position, so every assembled
//! operator in this crate is banded with a bandwidth of a few node groups.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric matrix storing the lower band `j ∈ [i − bw, i]` of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(r - c <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        r * (self.bw + 1) + (r - c)
    }

    /// Adds `v` to the symmetric pair `(i, j)`, `(j, i)`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.data[r * (self.bw + 1) + (r - c)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0] * x[i];
            for d in 1..=self.bw.min(i) {
                let a = row[d];
                if a != 0.0 {
                    y[i] += a * x[i - d];
                    y[i - d] += a * x[i];
                }
            }
        }
        y
    }

    /// `|A|·|x|` entrywise, the scale of roundoff in `A·x`.
    pub fn abs_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0].abs() * x[i].abs();
            for d in 1..=self.bw.min(i) {
                let a = row[d].abs();
                y[i] += a * x[i - d].abs();
                y[i - d] += a * x[i].abs();
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Replaces constrained rows and columns by identity rows.
    pub fn pin(&mut self, constrained: &[bool]) {
        for i in 0..self.n {
            for d in 0..=self.bw.min(i) {
                let j = i - d;
                if constrained[i] || constrained[j] {
                    self.data[i * (self.bw + 1) + d] = if d == 0 { 1.0 } else { 0.0 };
                }
            }
        }
    }

    /// Factorizes `S A S = L D Lᵀ` with `S = diag(|a_ii|^{-1/2})`, no pivoting.
    pub fn ldlt(&self) -> Result<BandLdlt> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let a = self.data[i * w].abs();
                if a > 0.0 && a.is_finite() {
                    1.0 / a.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        // l[i*w + d] holds L(i, i-d); the diagonal slot holds D(i).
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for d in 0..=bw.min(i) {
                l[i * w + d] = self.data[i * w + d] * scale[i] * scale[i - d];
            }
        }
        let mut negative = 0;
        let mut work = vec![0.0; w];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            // work[k - lo] = L(i,k) * D(k) for k < i
            for j in lo..i {
                let mut s = l[i * w + (i - j)];
                let jlo = j.saturating_sub(bw).max(lo);
                for k in jlo..j {
                    s -= work[k - lo] * l[j * w + (j - k)];
                }
                work[j - lo] = s;
                l[i * w + (i - j)] = s / l[j * w];
            }
            let mut dii = l[i * w];
            for k in lo..i {
                dii -= work[k - lo] * l[i * w + (i - k)];
            }
            if !dii.is_finite() || dii.abs() < 1e-14 {
                return Err(Error::Singular(format!(
                    "pivot {i} of {n} is {dii:e} after equilibration"
                )));
            }
            if dii < 0.0 {
                negative += 1;
            }
            l[i * w] = dii;
        }
        Ok(BandLdlt {
            n,
            bw,
            l,
            scale,
            negative,
        })
    }
}

/// Factor produced by [`BandMatrix::ldlt`].
#[derive(Debug, Clone)]
pub struct BandLdlt {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    scale: Vec<f64>,
    negative: usize,
}

impl BandLdlt {
    /// Number of negative pivots, the inertia of the factored matrix.
    pub fn negative_pivots(&self) -> usize {
        self.negative
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut x: Vec<f64> = b.iter().zip(&self.scale).map(|(b, s)| b * s).collect();
        for i in 0..n {
            let mut s = x[i];
            for d in 1..=bw.min(i) {
                s -= self.l[i * w + d] * x[i - d];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.l[i * w];
        }
        for i in (0..n).rev() {
            let xi = x[i];
            for d in 1..=bw.min(i) {
                x[i - d] -= self.l[i * w + d] * xi;
            }
        }
        for (xi, s) in x.iter_mut().zip(&self.scale) {
            *xi *= s;
        }
        x
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(n: usize, bw: usize, seed: u64) -> BandMatrix {
        let mut m = BandMatrix::zeros(n, bw);
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for d in 1..=bw.min(i) {
                m.add(i, i - d, next());
            }
            m.add(i, i, 2.0 * bw as f64 + 1.0);
        }
        m
    }

    #[test]
    fn solve_matches_dense() {
        let m = random_spd(40, 5, 3);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let x = m.ldlt().unwrap().solve(&b);
        let dense = m.to_dense().lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for (a, e) in x.iter().zip(dense.iter()) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn mul_vec_matches_dense() {
        let m = random_spd(17, 3, 9);
        let x: Vec<f64> = (0..17).map(|i| 1.0 + i as f64).collect();
        let y = m.mul_vec(&x);
        let yd = m.to_dense() * nalgebra::DVector::from_vec(x);
        for (a, e) in y.iter().zip(yd.iter()) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn inertia_counts_negative_pivots() {
        let mut m = BandMatrix::zeros(3, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, -2.0);
        m.add(2, 2, 3.0);
        assert_eq!(m.ldlt().unwrap().negative_pivots(), 1);
    }

    #[test]
    fn pinned_rows_become_identity() {
        let mut m = random_spd(6, 2, 1);
        m.pin(&[true, false, false, false, false, true]);
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.get(5, 4), 0.0);
        assert!(m.get(2, 1) != 0.0);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let m = BandMatrix::zeros(2, 1);
        assert!(matches!(m.ldlt(), Err(Error::Singular(_))));
    }
}
