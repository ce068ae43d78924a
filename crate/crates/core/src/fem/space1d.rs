use serde::{Deserialize, Serialize};

use super::mesh::Mesh1D;
use super::poly::Poly;
use crate::error::{Error, Result};

/// Element family on an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind1D {
    /// Continuous piecewise linear.
    P1,
    /// Continuous piecewise quadratic; vertex DOFs at even, midpoint DOFs at odd indices.
    P2,
    /// C¹ cubic Hermite; value at `2i`, slope at `2i + 1`.
    Hermite3,
}

/// Values of one local basis function: `[φ, φ′, φ″]` in physical units.
pub type Shape = [f64; 3];

impl Kind1D {
    pub fn name(self) -> &'static str {
        match self {
            Kind1D::P1 => "P1",
            Kind1D::P2 => "P2",
            Kind1D::Hermite3 => "Hermite3",
        }
    }

    pub fn ndof(self, elements: usize) -> usize {
        match self {
            Kind1D::P1 => elements + 1,
            Kind1D::P2 => 2 * elements + 1,
            Kind1D::Hermite3 => 2 * (elements + 1),
        }
    }

    pub fn nloc(self) -> usize {
        match self {
            Kind1D::P1 => 2,
            Kind1D::P2 => 3,
            Kind1D::Hermite3 => 4,
        }
    }

    /// Highest derivative for which the space is conforming.
    pub fn max_derivative(self) -> usize {
        match self {
            Kind1D::P1 | Kind1D::P2 => 1,
            Kind1D::Hermite3 => 2,
        }
    }

    pub fn local_dofs(self, e: usize) -> [usize; 4] {
        match self {
            Kind1D::P1 => [e, e + 1, 0, 0],
            Kind1D::P2 => [2 * e, 2 * e + 1, 2 * e + 2, 0],
            Kind1D::Hermite3 => [2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3],
        }
    }

    /// Local basis at reference coordinate `t` of an element of size `h`.
    pub fn shape(self, t: f64, h: f64) -> [Shape; 4] {
        let (ih, ih2) = (1.0 / h, 1.0 / (h * h));
        match self {
            Kind1D::P1 => [[1.0 - t, -ih, 0.0], [t, ih, 0.0], [0.0; 3], [0.0; 3]],
            Kind1D::P2 => [
                [(1.0 - t) * (1.0 - 2.0 * t), (4.0 * t - 3.0) * ih, 4.0 * ih2],
                [4.0 * t * (1.0 - t), (4.0 - 8.0 * t) * ih, -8.0 * ih2],
                [t * (2.0 * t - 1.0), (4.0 * t - 1.0) * ih, 4.0 * ih2],
                [0.0; 3],
            ],
            Kind1D::Hermite3 => {
                let (t2, t3) = (t * t, t * t * t);
                [
                    [1.0 - 3.0 * t2 + 2.0 * t3, (-6.0 * t + 6.0 * t2) * ih, (-6.0 + 12.0 * t) * ih2],
                    [h * (t - 2.0 * t2 + t3), 1.0 - 4.0 * t + 3.0 * t2, (-4.0 + 6.0 * t) * ih],
                    [3.0 * t2 - 2.0 * t3, (6.0 * t - 6.0 * t2) * ih, (6.0 - 12.0 * t) * ih2],
                    [h * (-t2 + t3), -2.0 * t + 3.0 * t2, (-2.0 + 6.0 * t) * ih],
                ]
            }
        }
    }

    /// Position of DOF `i` and whether it is a slope DOF.
    pub fn dof_info(self, mesh: &Mesh1D, i: usize) -> (f64, bool) {
        match self {
            Kind1D::P1 => (mesh.node(i), false),
            Kind1D::P2 => {
                if i % 2 == 0 {
                    (mesh.node(i / 2), false)
                } else {
                    (mesh.node(i / 2) + 0.5 * mesh.h(), false)
                }
            }
            Kind1D::Hermite3 => (mesh.node(i / 2), i % 2 == 1),
        }
    }

    /// Value DOFs at the two ends.
    pub fn end_value_dofs(self, elements: usize) -> [usize; 2] {
        match self {
            Kind1D::P1 => [0, elements],
            Kind1D::P2 => [0, 2 * elements],
            Kind1D::Hermite3 => [0, 2 * elements],
        }
    }

    /// Slope DOFs at the two ends, for C¹ families.
    pub fn end_slope_dofs(self, elements: usize) -> Option<[usize; 2]> {
        match self {
            Kind1D::Hermite3 => Some([1, 2 * elements + 1]),
            _ => None,
        }
    }
}

/// A finite-element space on a [`Mesh1D`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Space1D {
    pub mesh: Mesh1D,
    pub kind: Kind1D,
}

impl Space1D {
    pub fn new(mesh: Mesh1D, kind: Kind1D) -> Self {
        Self { mesh, kind }
    }

    pub fn ndof(&self) -> usize {
        self.kind.ndof(self.mesh.elements())
    }

    /// `[u, u′, u″]` on element `e` at reference coordinate `t`.
    pub fn eval_local(&self, coeffs: &[f64], e: usize, t: f64) -> Shape {
        let shape = self.kind.shape(t, self.mesh.h());
        let dofs = self.kind.local_dofs(e);
        let mut out = [0.0; 3];
        for a in 0..self.kind.nloc() {
            let c = coeffs[dofs[a]];
            for d in 0..3 {
                out[d] += c * shape[a][d];
            }
        }
        out
    }

    /// `[u, u′, u″]` at physical `x`.
    pub fn eval_at(&self, coeffs: &[f64], x: f64) -> Shape {
        let (e, t) = self.mesh.locate(x);
        self.eval_local(coeffs, e, t)
    }

    pub fn eval(&self, coeffs: &[f64], order: usize, points: &[f64]) -> Result<Vec<f64>> {
        if order > self.kind.max_derivative() {
            return Err(Error::DerivativeOrder {
                order,
                kind: self.kind.name(),
                max: self.kind.max_derivative(),
            });
        }
        if coeffs.len() != self.ndof() {
            return Err(Error::Mismatch(format!(
                "{} coefficients for a space of dimension {}",
                coeffs.len(),
                self.ndof()
            )));
        }
        Ok(points.iter().map(|&x| self.eval_at(coeffs, x)[order]).collect())
    }

    /// Interpolant from point values and slopes `f(x) = (u, u′)`.
    pub fn interpolate(&self, f: impl Fn(f64) -> (f64, f64)) -> Vec<f64> {
        (0..self.ndof())
            .map(|i| {
                let (x, slope) = self.kind.dof_info(&self.mesh, i);
                let (v, d) = f(x);
                if slope {
                    d
                } else {
                    v
                }
            })
            .collect()
    }

    pub fn interpolate_poly(&self, p: &Poly) -> Vec<f64> {
        let dp = p.derivative();
        self.interpolate(|x| (p.eval(x), dp.eval(x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> Mesh1D {
        Mesh1D::new(1.0, 5).unwrap()
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let s = Space1D::new(mesh(), Kind1D::Hermite3);
        let p = Poly::new([0.3, -1.0, 0.5, 2.0]);
        let c = s.interpolate_poly(&p);
        for k in 0..40 {
            let x = -0.5 + k as f64 / 39.0;
            let v = s.eval_at(&c, x);
            assert!((v[0] - p.eval(x)).abs() < 1e-13);
            assert!((v[1] - p.eval_deriv(x, 1)).abs() < 1e-12);
            assert!((v[2] - p.eval_deriv(x, 2)).abs() < 1e-10);
        }
    }

    #[test]
    fn hermite_second_derivative_of_square() {
        let s = Space1D::new(mesh(), Kind1D::Hermite3);
        let c = s.interpolate_poly(&Poly::new([0.0, 0.0, 1.0]));
        let d2 = s.eval(&c, 2, &[-0.49, -0.1, 0.0, 0.33, 0.5]).unwrap();
        assert!(d2.iter().all(|v| (v - 2.0).abs() < 1e-11));
    }

    #[test]
    fn p1_partition_of_unity() {
        let s = Space1D::new(mesh(), Kind1D::P1);
        for k in 0..17 {
            let t = k as f64 / 16.0;
            let sh = Kind1D::P1.shape(t, s.mesh.h());
            assert!((sh[0][0] + sh[1][0] - 1.0).abs() < 1e-15);
            assert!((sh[0][1] + sh[1][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn p2_reproduces_quadratics() {
        let s = Space1D::new(mesh(), Kind1D::P2);
        let p = Poly::new([1.0, 0.25, -3.0]);
        let c = s.interpolate_poly(&p);
        for x in [-0.5, -0.37, 0.01, 0.42, 0.5] {
            let v = s.eval_at(&c, x);
            assert!((v[0] - p.eval(x)).abs() < 1e-13);
            assert!((v[1] - p.eval_deriv(x, 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_order_checked() {
        let s = Space1D::new(mesh(), Kind1D::P1);
        let c = vec![0.0; s.ndof()];
        assert!(matches!(s.eval(&c, 2, &[0.0]), Err(Error::DerivativeOrder { .. })));
        assert!(s.eval(&c, 1, &[0.0]).is_ok());
    }

    #[test]
    fn hermite_is_c1_across_nodes() {
        let s = Space1D::new(mesh(), Kind1D::Hermite3);
        let c: Vec<f64> = (0..s.ndof()).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        for e in 0..4 {
            let l = s.eval_local(&c, e, 1.0);
            let r = s.eval_local(&c, e + 1, 0.0);
            assert!((l[0] - r[0]).abs() < 1e-12 && (l[1] - r[1]).abs() < 1e-12);
        }
    }
}
