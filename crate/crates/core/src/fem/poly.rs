use serde::{Deserialize, Serialize};

/// Polynomial with ascending coefficients, `p(x) = Σ cₖ xᵏ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        Self(coeffs.into())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// `k`-th derivative at `x`.
    pub fn eval_deriv(&self, x: f64, k: usize) -> f64 {
        let mut p = self.clone();
        for _ in 0..k {
            p = p.derivative();
        }
        p.eval(x)
    }

    pub fn scaled(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|k| self.0.get(k).copied().unwrap_or(0.0) + other.0.get(k).copied().unwrap_or(0.0))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_derivatives() {
        let p = Poly::new([1.0, -2.0, 0.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 24.0);
        assert_eq!(p.eval_deriv(2.0, 1), -2.0 + 36.0);
        assert_eq!(p.eval_deriv(2.0, 2), 36.0);
        assert_eq!(p.eval_deriv(2.0, 4), 0.0);
        assert_eq!(Poly::zero().eval(3.0), 0.0);
    }

    #[test]
    fn product_and_sum() {
        let a = Poly::new([-0.25, 0.0, 1.0]);
        let sq = a.mul(&a);
        assert_eq!(sq.0, vec![0.0625, 0.0, -0.5, 0.0, 1.0]);
        assert_eq!(a.add(&Poly::new([1.0])).0, vec![0.75, 0.0, 1.0]);
    }
}
