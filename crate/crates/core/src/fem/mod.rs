//! Conforming finite-element spaces on the interval and the strip.

pub mod layout;
pub mod mesh;
pub mod poly;
pub mod quadrature;
pub mod space1d;
pub mod space2d;

use serde::{Deserialize, Serialize};

pub use layout::{Constraints, DofLayout};
pub use mesh::{Mesh1D, Mesh2D};
pub use poly::Poly;
pub use quadrature::GaussRule;
pub use space1d::{Kind1D, Shape, Space1D};
pub use space2d::{PlateFieldKind, Shape2, TensorSpace};

use crate::error::{invalid, Result};
use crate::linalg::BandMatrix;

/// Lateral data `û₁, û₂, v̂` as polynomials on `I`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryData {
    pub u1hat: Poly,
    pub u2hat: Poly,
    pub vhat: Poly,
}

impl BoundaryData {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.u1hat.is_zero() && self.u2hat.is_zero() && self.vhat.is_zero()
    }
}

/// Samples of the scaled operators at one point of `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledSample {
    /// `Eᵉy` as `(E₁₁, E₁₂, E₂₂)`.
    pub strain: [f64; 3],
    /// `∇_ε w`.
    pub grad: [f64; 2],
    /// `∇²_ε w` as `(·₁₁, ·₁₂, ·₂₂)`.
    pub hessian: [f64; 3],
}

/// Scaled operators `Eᵉy`, `∇_ε w`, `∇²_ε w` at the given points.
pub fn scaled_operators_2d(
    spaces: [&TensorSpace; 3],
    eps: f64,
    fields: [&[f64]; 3],
    points: &[(f64, f64)],
) -> Result<Vec<ScaledSample>> {
    if !(eps > 0.0) {
        return Err(invalid("epsilon", format!("{eps} must be positive")));
    }
    Ok(points
        .iter()
        .map(|&(x1, x2)| {
            let y1 = spaces[0].eval_at(fields[0], x1, x2);
            let y2 = spaces[1].eval_at(fields[1], x1, x2);
            let w = spaces[2].eval_at(fields[2], x1, x2);
            ScaledSample {
                strain: [y1[1], (y1[2] + y2[1]) / (2.0 * eps), y2[2] / (eps * eps)],
                grad: [w[1], w[2] / eps],
                hessian: [w[3], w[4] / eps, w[5] / (eps * eps)],
            }
        })
        .collect())
}

/// Symmetric matrix `A_ij = ∫ a(x; φ_j, φ_i)` for a symmetric bilinear density.
pub fn assemble_quadratic(
    space: &Space1D,
    density: impl Fn(f64, &Shape, &Shape) -> f64,
    rule: &GaussRule,
) -> BandMatrix {
    let kind = space.kind;
    let nloc = kind.nloc();
    let h = space.mesh.h();
    let mut m = BandMatrix::zeros(space.ndof(), nloc - 1);
    for e in 0..space.mesh.elements() {
        let dofs = kind.local_dofs(e);
        let x0 = space.mesh.node(e);
        for (t, w) in rule.points.iter().zip(&rule.weights) {
            let shape = kind.shape(*t, h);
            let x = x0 + t * h;
            for a in 0..nloc {
                for b in 0..=a {
                    let v = w * h * density(x, &shape[b], &shape[a]);
                    if a == b {
                        m.add(dofs[a], dofs[a], v);
                    } else {
                        m.add(dofs[a], dofs[b], v);
                    }
                }
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_operator_examples() {
        let mesh = Mesh2D::new(1.0, 2, 2).unwrap();
        let y1s = TensorSpace::new(mesh, PlateFieldKind::StretchP2P1);
        let y2s = TensorSpace::new(mesh, PlateFieldKind::DeflectionH3P2);
        let ws = TensorSpace::new(mesh, PlateFieldKind::Bfs);
        let y1 = y1s.interpolate(|x, _| [x, 1.0, 0.0, 0.0]);
        let y2 = vec![0.0; y2s.ndof()];
        let w = ws.interpolate(|_, y| [y * y, 0.0, 2.0 * y, 0.0]);
        let pts = [(0.1, 0.2), (-0.3, -0.45)];
        let s = scaled_operators_2d([&y1s, &y2s, &ws], 0.5, [&y1, &y2, &w], &pts).unwrap();
        for (p, smp) in pts.iter().zip(&s) {
            assert!((smp.strain[0] - 1.0).abs() < 1e-13);
            assert!(smp.strain[1].abs() < 1e-13 && smp.strain[2].abs() < 1e-13);
            assert!((smp.hessian[2] - 8.0).abs() < 1e-10);
            assert!((smp.grad[1] - 2.0 * p.1 / 0.5).abs() < 1e-12);
        }
        let w = ws.interpolate(|x, _| [x * x, 2.0 * x, 0.0, 0.0]);
        let s = scaled_operators_2d([&y1s, &y2s, &ws], 0.1, [&y1, &y2, &w], &pts).unwrap();
        assert!((s[0].grad[0] - 0.2).abs() < 1e-12 && s[0].grad[1].abs() < 1e-12);
        assert!(scaled_operators_2d([&y1s, &y2s, &ws], 0.0, [&y1, &y2, &w], &pts).is_err());
    }

    #[test]
    fn p1_stiffness_stencil() {
        let space = Space1D::new(Mesh1D::new(1.0, 2).unwrap(), Kind1D::P1);
        let k = assemble_quadratic(&space, |_, u, v| u[1] * v[1], &GaussRule::new(2));
        let h = 0.5;
        assert!((k.get(1, 1) - 2.0 / h).abs() < 1e-13);
        assert!((k.get(1, 0) + 1.0 / h).abs() < 1e-13);
        assert!((k.get(0, 0) - 1.0 / h).abs() < 1e-13);
        assert_eq!(k.get(2, 0), 0.0);
    }

    #[test]
    fn hermite_bending_matches_analytic_pairing() {
        let space = Space1D::new(Mesh1D::new(1.0, 3).unwrap(), Kind1D::Hermite3);
        let k = assemble_quadratic(&space, |_, u, v| u[2] * v[2], &GaussRule::new(5));
        // p = (x² − 1/4)², q = x(x² − 1/4): p″ = 12x² − 1, q″ = 6x, ∫ p″q″ = 0;
        // r = x² − 1/4 gives ∫ p″ r″ = ∫ 2(12x² − 1) = 0 and ∫ r″² = 4.
        let p = Poly::new([0.0625, 0.0, -0.5, 0.0, 1.0]);
        let q = Poly::new([0.0, -0.25, 0.0, 1.0]);
        let r = Poly::new([-0.25, 0.0, 1.0]);
        let (cq, cr) = (space.interpolate_poly(&q), space.interpolate_poly(&r));
        let kq = k.mul_vec(&cq);
        let kr = k.mul_vec(&cr);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&kr, &cr) - 4.0).abs() < 1e-12);
        assert!(dot(&kq, &cr).abs() < 1e-12);
        assert!((dot(&kq, &cq) - 3.0).abs() < 1e-12);
        // Dense oracle for the quartic interpolant.
        let cp = space.interpolate_poly(&p);
        let dense = k.to_dense();
        let v = nalgebra::DVector::from_vec(cp.clone());
        assert!(((dense * &v).dot(&v) - dot(&k.mul_vec(&cp), &cp)).abs() < 1e-12);
        let zero = assemble_quadratic(&space, |_, _, _| 0.0, &GaussRule::new(3));
        assert!(zero.to_dense().iter().all(|x| *x == 0.0));
    }
}
