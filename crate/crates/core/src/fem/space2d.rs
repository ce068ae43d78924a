use super::mesh::Mesh2D;
use super::space1d::{Kind1D, Space1D};

/// Values of one local basis function: `[φ, ∂₁φ, ∂₂φ, ∂₁₁φ, ∂₁₂φ, ∂₂₂φ]`.
pub type Shape2 = [f64; 6];

/// Field families used on the strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlateFieldKind {
    /// `Q1`, bilinear.
    Bilinear,
    /// Bogner–Fox–Schmit bicubic; per node value, `∂₁`, `∂₂`, `∂₁₂`.
    Bfs,
    /// Quadratic along the strip, linear across; holds `y₁`.
    StretchP2P1,
    /// Hermite along the strip, quadratic across; holds `y₂`.
    DeflectionH3P2,
}

impl PlateFieldKind {
    pub fn factors(self) -> (Kind1D, Kind1D) {
        match self {
            PlateFieldKind::Bilinear => (Kind1D::P1, Kind1D::P1),
            PlateFieldKind::Bfs => (Kind1D::Hermite3, Kind1D::Hermite3),
            PlateFieldKind::StretchP2P1 => (Kind1D::P2, Kind1D::P1),
            PlateFieldKind::DeflectionH3P2 => (Kind1D::Hermite3, Kind1D::P2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlateFieldKind::Bilinear => "Q1",
            PlateFieldKind::Bfs => "BFS",
            PlateFieldKind::StretchP2P1 => "P2xP1",
            PlateFieldKind::DeflectionH3P2 => "Hermite3xP2",
        }
    }
}

/// Tensor-product space; DOF `(i, j)` is stored at `i·ny_dof + j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorSpace {
    pub x: Space1D,
    pub y: Space1D,
    pub kind: PlateFieldKind,
}

impl TensorSpace {
    pub fn new(mesh: Mesh2D, kind: PlateFieldKind) -> Self {
        let (kx, ky) = kind.factors();
        Self {
            x: Space1D::new(mesh.x, kx),
            y: Space1D::new(mesh.y, ky),
            kind,
        }
    }

    pub fn ndof(&self) -> usize {
        self.x.ndof() * self.y.ndof()
    }

    pub fn nloc(&self) -> usize {
        self.x.kind.nloc() * self.y.kind.nloc()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.y.ndof() + j
    }

    pub fn local_dofs(&self, ex: usize, ey: usize, out: &mut Vec<usize>) {
        let dx = self.x.kind.local_dofs(ex);
        let dy = self.y.kind.local_dofs(ey);
        for a in 0..self.x.kind.nloc() {
            for b in 0..self.y.kind.nloc() {
                out.push(self.index(dx[a], dy[b]));
            }
        }
    }

    /// Local basis at reference point `(t1, t2)`, ordered like [`Self::local_dofs`].
    pub fn shape(&self, t1: f64, t2: f64, out: &mut Vec<Shape2>) {
        let sx = self.x.kind.shape(t1, self.x.mesh.h());
        let sy = self.y.kind.shape(t2, self.y.mesh.h());
        for a in sx.iter().take(self.x.kind.nloc()) {
            for b in sy.iter().take(self.y.kind.nloc()) {
                out.push([
                    a[0] * b[0],
                    a[1] * b[0],
                    a[0] * b[1],
                    a[2] * b[0],
                    a[1] * b[1],
                    a[0] * b[2],
                ]);
            }
        }
    }

    pub fn eval_at(&self, coeffs: &[f64], x1: f64, x2: f64) -> Shape2 {
        let (ex, t1) = self.x.mesh.locate(x1);
        let (ey, t2) = self.y.mesh.locate(x2);
        let mut dofs = Vec::with_capacity(16);
        let mut shape = Vec::with_capacity(16);
        self.local_dofs(ex, ey, &mut dofs);
        self.shape(t1, t2, &mut shape);
        let mut out = [0.0; 6];
        for (d, s) in dofs.iter().zip(&shape) {
            for k in 0..6 {
                out[k] += coeffs[*d] * s[k];
            }
        }
        out
    }

    /// Interpolant from `f(x1, x2) = [u, ∂₁u, ∂₂u, ∂₁₂u]`.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> [f64; 4]) -> Vec<f64> {
        let mut out = vec![0.0; self.ndof()];
        for i in 0..self.x.ndof() {
            let (x1, s1) = self.x.kind.dof_info(&self.x.mesh, i);
            for j in 0..self.y.ndof() {
                let (x2, s2) = self.y.kind.dof_info(&self.y.mesh, j);
                let v = f(x1, x2);
                out[self.index(i, j)] = match (s1, s2) {
                    (false, false) => v[0],
                    (true, false) => v[1],
                    (false, true) => v[2],
                    (true, true) => v[3],
                };
            }
        }
        out
    }

    /// `Σₖ aₖ ⊗ bₖ` from 1D coefficient vectors of the two factors.
    pub fn kron_sum(&self, terms: &[(&[f64], &[f64])]) -> Vec<f64> {
        let mut out = vec![0.0; self.ndof()];
        for (a, b) in terms {
            for i in 0..self.x.ndof() {
                for j in 0..self.y.ndof() {
                    out[self.index(i, j)] += a[i] * b[j];
                }
            }
        }
        out
    }

    /// DOFs carrying the lateral traces at `x₁ = ±l/2`: value and, for C¹
    /// factors along the strip, `∂₁` (including the mixed `∂₁₂` DOFs).
    pub fn lateral_dofs(&self) -> Vec<usize> {
        let n = self.x.mesh.elements();
        let mut xs: Vec<usize> = self.x.kind.end_value_dofs(n).to_vec();
        if let Some(s) = self.x.kind.end_slope_dofs(n) {
            xs.extend_from_slice(&s);
        }
        let mut out = Vec::new();
        for i in xs {
            for j in 0..self.y.ndof() {
                out.push(self.index(i, j));
            }
        }
        out.sort_unstable();
        out
    }

    /// Value DOFs at `x₁ = ±l/2`, one per `x₂` DOF.
    pub fn lateral_value_dofs(&self) -> Vec<usize> {
        let n = self.x.mesh.elements();
        let mut out = Vec::new();
        for i in self.x.kind.end_value_dofs(n) {
            for j in 0..self.y.ndof() {
                out.push(self.index(i, j));
            }
        }
        out.sort_unstable();
        out
    }
}
