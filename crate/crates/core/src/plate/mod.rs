//! The scaled plate on the fixed strip `S = I × (−1/2, 1/2)`: energy `φ_ε`,
//! dissipation distance `D_ε`, their gradients, the weak residual, the
//! ribbon projection and the static recovery construction.
//!
//! DOFs hold the scaled fields `y₁`, `y₂`, `w` on `S`; the width `ε` enters
//! only through the operators `Eᵉ`, `∇_ε`, `∇²_ε`, so one mesh serves a whole
//! width sweep.

mod projection;
mod recovery;
mod residual;

pub use projection::{project_pi, projection_distance, ProjectedState};
pub use recovery::{build_recovery, RecoveryInputs};
pub use residual::{weak_residual_2d, WeakResidual2d};

use serde::{Deserialize, Serialize};

use crate::channels::{self, BilinearTerm, ChannelModel, Mix, PointEval};
use crate::error::{invalid, Error, Result};
use crate::fem::{
    scaled_operators_2d, BoundaryData, Constraints, DofLayout, GaussRule, Mesh2D, PlateFieldKind,
    Poly, ScaledSample, Shape2, TensorSpace,
};
use crate::forms::{MaterialPair, QuadForm2};
use crate::linalg::{max_abs, BandMatrix};
use crate::movements::{GradientSystem, Incremental};
use crate::ribbon::RibbonForces;

pub const Y1: usize = 0;
pub const Y2: usize = 1;
pub const W: usize = 2;

const KINDS: [PlateFieldKind; 3] = [
    PlateFieldKind::StretchP2P1,
    PlateFieldKind::DeflectionH3P2,
    PlateFieldKind::Bfs,
];

/// Scaled plate loads, functions of `x₁` only.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlateForces {
    pub f: Poly,
    pub g1: Poly,
    /// `ĝ₂ = ε·g₂`; the load pairs `ĝ₂/ε` with `y₂`.
    pub g2_scaled: Poly,
}

impl PlateForces {
    /// Loads whose scaled limits are the given ribbon loads.
    pub fn from_ribbon(r: &RibbonForces, eps: f64) -> Self {
        Self {
            f: r.f.clone(),
            g1: r.g1.clone(),
            g2_scaled: r.g2.scaled(eps),
        }
    }
}

/// Field-wise view of a plate state.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateFields {
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PlateModel {
    mesh: Mesh2D,
    eps: f64,
    spaces: [TensorSpace; 3],
    layout: DofLayout,
    boundary: BoundaryData,
    forces: PlateForces,
    constraints: Constraints,
    rule: GaussRule,
    pub elastic: QuadForm2,
    /// `Q²_{R,ε}` at this width.
    pub viscous: QuadForm2,
    aw: Vec<f64>,
    ar: Vec<f64>,
    load: Vec<f64>,
    /// `tables[field][q1·n + q2]`: local basis at one tensor quadrature point.
    tables: [Vec<Vec<Shape2>>; 3],
    offsets: [usize; 4],
}

fn channel_weights(q: &QuadForm2) -> Vec<f64> {
    let m = q.matrix();
    let mut a = vec![0.0; 36];
    for i in 0..3 {
        for j in 0..3 {
            a[i * 6 + j] = m[(i, j)];
            a[(i + 3) * 6 + j + 3] = m[(i, j)] / 12.0;
        }
    }
    a
}

impl PlateModel {
    pub fn new(
        mesh: Mesh2D,
        eps: f64,
        material: &MaterialPair,
        boundary: BoundaryData,
        forces: PlateForces,
        quad_points: usize,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid("epsilon", format!("{eps} must be positive")));
        }
        let viscous = material.viscous.at(eps)?;
        let spaces = KINDS.map(|k| TensorSpace::new(mesh, k));
        let positions: Vec<Vec<f64>> = spaces
            .iter()
            .map(|s| {
                let ny = s.y.ndof();
                (0..s.ndof())
                    .map(|d| s.x.kind.dof_info(&s.x.mesh, d / ny).0)
                    .collect()
            })
            .collect();
        let rule = GaussRule::new(quad_points);
        let n = rule.len();
        let tables = spaces.map(|s| {
            let mut t = Vec::with_capacity(n * n);
            for &t1 in &rule.points {
                for &t2 in &rule.points {
                    let mut v = Vec::with_capacity(s.nloc());
                    s.shape(t1, t2, &mut v);
                    t.push(v);
                }
            }
            t
        });
        let mut offsets = [0; 4];
        for f in 0..3 {
            offsets[f + 1] = offsets[f] + spaces[f].nloc();
        }
        let mut model = Self {
            mesh,
            eps,
            spaces,
            layout: DofLayout::new(&positions),
            boundary,
            forces,
            constraints: Constraints::free(0),
            rule,
            aw: channel_weights(&material.elastic),
            ar: channel_weights(&viscous),
            elastic: material.elastic,
            viscous,
            load: Vec::new(),
            tables,
            offsets,
        };
        let mut layout = model.layout.clone();
        let mut dofs = Vec::new();
        for e in 0..mesh.elements() {
            dofs.clear();
            model.element_dofs(e, &mut dofs);
            layout.cover(&dofs);
        }
        model.layout = layout;
        model.constraints = model.build_constraints();
        model.load = model.build_load();
        Ok(model)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn space(&self, field: usize) -> &TensorSpace {
        &self.spaces[field]
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn forces(&self) -> &PlateForces {
        &self.forces
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    pub fn ndof(&self) -> usize {
        self.layout.len()
    }

    pub fn constraint_set(&self) -> &Constraints {
        &self.constraints
    }

    pub fn load_vector(&self) -> &[f64] {
        &self.load
    }

    /// Extensions of the lateral data into `S`, as `[u, ∂₁u, ∂₂u, ∂₁₂u]`.
    fn extension(&self, field: usize, x1: f64, x2: f64) -> [f64; 4] {
        let b = &self.boundary;
        let d = |p: &Poly, k: usize| p.eval_deriv(x1, k);
        match field {
            Y1 => [
                d(&b.u1hat, 0) - x2 * d(&b.u2hat, 1),
                d(&b.u1hat, 1) - x2 * d(&b.u2hat, 2),
                -d(&b.u2hat, 1),
                -d(&b.u2hat, 2),
            ],
            Y2 => [d(&b.u2hat, 0), d(&b.u2hat, 1), 0.0, 0.0],
            _ => [d(&b.vhat, 0), d(&b.vhat, 1), 0.0, 0.0],
        }
    }

    fn build_constraints(&self) -> Constraints {
        let mut c = Constraints::free(self.ndof());
        for f in 0..3 {
            let s = &self.spaces[f];
            let ext = s.interpolate(|x1, x2| self.extension(f, x1, x2));
            // y₂ carries only its trace; w also its normal slope (hence ∂₂w, ∂₁₂w).
            let dofs = if f == W { s.lateral_dofs() } else { s.lateral_value_dofs() };
            for d in dofs {
                c.fix(self.layout.global(f, d), ext[d]);
            }
        }
        c
    }

    fn build_load(&self) -> Vec<f64> {
        let mut load = vec![0.0; self.ndof()];
        let (hx, hy) = (self.mesh.x.h(), self.mesh.y.h());
        let n = self.rule.len();
        let f = &self.forces;
        let g2 = f.g2_scaled.scaled(1.0 / self.eps);
        let pairs = [(Y1, &f.g1), (Y2, &g2), (W, &f.f)];
        let mut dofs = Vec::new();
        for e in 0..self.mesh.elements() {
            let (ex, ey) = self.element_index(e);
            let x0 = self.mesh.x.node(ex);
            for (field, p) in pairs {
                if p.is_zero() {
                    continue;
                }
                dofs.clear();
                self.spaces[field].local_dofs(ex, ey, &mut dofs);
                for q1 in 0..n {
                    let density = p.eval(x0 + self.rule.points[q1] * hx);
                    for q2 in 0..n {
                        let w = self.rule.weights[q1] * self.rule.weights[q2] * hx * hy;
                        let tab = &self.tables[field][q1 * n + q2];
                        for (a, &d) in dofs.iter().enumerate() {
                            load[self.layout.global(field, d)] += w * density * tab[a][0];
                        }
                    }
                }
            }
        }
        load
    }

    /// `(ex, ey)` of element `e`; elements run across the strip first.
    pub fn element_index(&self, e: usize) -> (usize, usize) {
        let ny = self.mesh.y.elements();
        (e / ny, e % ny)
    }

    pub fn split(&self, u: &[f64]) -> PlateFields {
        PlateFields {
            y1: self.layout.gather(Y1, u),
            y2: self.layout.gather(Y2, u),
            w: self.layout.gather(W, u),
        }
    }

    pub fn join(&self, f: &PlateFields) -> Vec<f64> {
        let mut u = vec![0.0; self.ndof()];
        self.layout.scatter(Y1, &f.y1, &mut u);
        self.layout.scatter(Y2, &f.y2, &mut u);
        self.layout.scatter(W, &f.w, &mut u);
        u
    }

    /// Interpolates `[u, ∂₁u, ∂₂u, ∂₁₂u]` callbacks of the three fields.
    pub fn interpolate(
        &self,
        y1: impl Fn(f64, f64) -> [f64; 4],
        y2: impl Fn(f64, f64) -> [f64; 4],
        w: impl Fn(f64, f64) -> [f64; 4],
    ) -> Vec<f64> {
        self.join(&PlateFields {
            y1: self.spaces[Y1].interpolate(y1),
            y2: self.spaces[Y2].interpolate(y2),
            w: self.spaces[W].interpolate(w),
        })
    }

    pub fn check_admissible(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.ndof() {
            return Err(Error::Mismatch(format!(
                "{} DOFs for a plate with {}",
                u.len(),
                self.ndof()
            )));
        }
        let v = self.constraints.violation(u);
        if v > 1e-12 * (1.0 + max_abs(&self.constraints.values)) {
            return Err(Error::BoundaryViolation(format!("lateral traces off by {v:e}")));
        }
        Ok(())
    }

    /// `[u, ∂₁u, ∂₂u, ∂₁₁u, ∂₁₂u, ∂₂₂u]` of one field at `(x₁, x₂)`.
    pub fn field_at(&self, field: usize, u: &[f64], x1: f64, x2: f64) -> Shape2 {
        self.spaces[field].eval_at(&self.layout.gather(field, u), x1, x2)
    }

    /// `Eᵉy`, `∇_ε w`, `∇²_ε w` at the given points.
    pub fn scaled_at(&self, u: &[f64], points: &[(f64, f64)]) -> Result<Vec<ScaledSample>> {
        let f = self.split(u);
        scaled_operators_2d(
            [&self.spaces[Y1], &self.spaces[Y2], &self.spaces[W]],
            self.eps,
            [&f.y1, &f.y2, &f.w],
            points,
        )
    }

    /// Physical quadrature points of element `e` with their weights.
    pub fn quadrature_points(&self, e: usize) -> Vec<(f64, f64, f64)> {
        let (ex, ey) = self.element_index(e);
        let (hx, hy) = (self.mesh.x.h(), self.mesh.y.h());
        let (x0, y0) = (self.mesh.x.node(ex), self.mesh.y.node(ey));
        let r = &self.rule;
        let mut out = Vec::with_capacity(r.len() * r.len());
        for (t1, w1) in r.points.iter().zip(&r.weights) {
            for (t2, w2) in r.points.iter().zip(&r.weights) {
                out.push((x0 + t1 * hx, y0 + t2 * hy, w1 * w2 * hx * hy));
            }
        }
        out
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        channels::assemble(self, u, None, Mix { elastic: 1.0, viscous: 0.0 }, false, false).value
    }

    pub fn energy_gradient(&self, u: &[f64]) -> Vec<f64> {
        channels::assemble(self, u, None, Mix { elastic: 1.0, viscous: 0.0 }, true, false)
            .gradient
            .expect("gradient requested")
    }

    pub fn sqdist(&self, a: &[f64], b: &[f64]) -> f64 {
        let v = channels::assemble(self, b, Some(a), Mix { elastic: 0.0, viscous: 1.0 }, false, false)
            .value;
        (2.0 * v).max(0.0)
    }

    pub fn metric(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != self.ndof() || b.len() != self.ndof() {
            return Err(Error::Mismatch("state dimension differs from the model".into()));
        }
        Ok(self.sqdist(a, b).sqrt())
    }

    /// Gradient of `v ↦ ½D_ε²(anchor, v)`.
    pub fn halfsq_gradient(&self, anchor: &[f64], v: &[f64]) -> Vec<f64> {
        channels::assemble(self, v, Some(anchor), Mix { elastic: 0.0, viscous: 1.0 }, true, false)
            .gradient
            .expect("gradient requested")
    }

    /// Value, gradient and Hessian of `v ↦ (1/2τ)D_ε²(anchor, v) + φ_ε(v)`.
    pub fn incremental(
        &self,
        anchor: &[f64],
        v: &[f64],
        tau: f64,
        hessian: bool,
    ) -> (f64, Vec<f64>, Option<BandMatrix>) {
        let a = channels::assemble(
            self,
            v,
            Some(anchor),
            Mix {
                elastic: 1.0,
                viscous: 1.0 / tau,
            },
            true,
            hessian,
        );
        (a.value, a.gradient.expect("gradient requested"), a.hessian)
    }

}

impl PlateModel {
    /// All six derivative samples of every field at tensor point `q`.
    fn samples(&self, q: usize, local: &[f64]) -> [[f64; 6]; 3] {
        let mut val = [[0.0; 6]; 3];
        for f in 0..3 {
            let tab = &self.tables[f][q];
            for (c, s) in local[self.offsets[f]..self.offsets[f + 1]].iter().zip(tab) {
                for d in 0..6 {
                    val[f][d] += c * s[d];
                }
            }
        }
        val
    }
}

impl ChannelModel for PlateModel {
    fn n_channels(&self) -> usize {
        6
    }

    fn n_local(&self) -> usize {
        self.offsets[3]
    }

    fn n_dofs(&self) -> usize {
        self.layout.len()
    }

    fn bandwidth(&self) -> usize {
        self.layout.bandwidth()
    }

    fn elastic_weights(&self) -> &[f64] {
        &self.aw
    }

    fn viscous_weights(&self) -> &[f64] {
        &self.ar
    }

    fn n_elements(&self) -> usize {
        self.mesh.elements()
    }

    fn n_points(&self) -> usize {
        self.rule.len() * self.rule.len()
    }

    fn element_dofs(&self, e: usize, out: &mut Vec<usize>) {
        let (ex, ey) = self.element_index(e);
        for f in 0..3 {
            let start = out.len();
            self.spaces[f].local_dofs(ex, ey, out);
            for d in &mut out[start..] {
                *d = self.layout.global(f, *d);
            }
        }
    }

    fn eval_point(&self, _e: usize, q: usize, local: &[f64], jac: bool, out: &mut PointEval) {
        let nl = self.offsets[3];
        let o = &self.offsets;
        let eps = self.eps;
        let val = self.samples(q, local);
        let n = self.rule.len();
        let (q1, q2) = (q / n, q % n);
        out.weight = self.rule.weights[q1] * self.rule.weights[q2] * self.mesh.x.h() * self.mesh.y.h();
        let p = val[W][1];
        let qv = val[W][2] / eps;
        out.c.clear();
        out.c.extend_from_slice(&[
            val[Y1][1] + 0.5 * p * p,
            (val[Y1][2] + val[Y2][1]) / (2.0 * eps) + 0.5 * p * qv,
            val[Y2][2] / (eps * eps) + 0.5 * qv * qv,
            val[W][3],
            val[W][4] / eps,
            val[W][5] / (eps * eps),
        ]);
        if !jac {
            return;
        }
        out.jac.clear();
        out.jac.resize(6 * nl, 0.0);
        for (a, s) in self.tables[Y1][q].iter().enumerate() {
            out.jac[o[Y1] + a] = s[1];
            out.jac[nl + o[Y1] + a] = s[2] / (2.0 * eps);
        }
        for (a, s) in self.tables[Y2][q].iter().enumerate() {
            out.jac[nl + o[Y2] + a] = s[1] / (2.0 * eps);
            out.jac[2 * nl + o[Y2] + a] = s[2] / (eps * eps);
        }
        if out.bilinear.len() != 3 {
            out.bilinear = (0..3)
                .map(|k| BilinearTerm {
                    channel: k,
                    coeff: 0.5,
                    a: vec![0.0; nl],
                    b: vec![0.0; nl],
                })
                .collect();
        }
        for (a, s) in self.tables[W][q].iter().enumerate() {
            let i = o[W] + a;
            let (dp, dq) = (s[1], s[2] / eps);
            out.jac[i] = p * dp;
            out.jac[nl + i] = 0.5 * (qv * dp + p * dq);
            out.jac[2 * nl + i] = qv * dq;
            out.jac[3 * nl + i] = s[3];
            out.jac[4 * nl + i] = s[4] / eps;
            out.jac[5 * nl + i] = s[5] / (eps * eps);
            // ½p², ½pq, ½q² in channels 0, 1, 2.
            out.bilinear[0].a[i] = dp;
            out.bilinear[0].b[i] = dp;
            out.bilinear[1].a[i] = dp;
            out.bilinear[1].b[i] = dq;
            out.bilinear[2].a[i] = dq;
            out.bilinear[2].b[i] = dq;
        }
    }

    fn eval_delta(&self, q: usize, local: &[f64], anchor: &[f64], out: &mut Vec<f64>) {
        let eps = self.eps;
        let inc: Vec<f64> = local.iter().zip(anchor).map(|(a, b)| a - b).collect();
        let d = self.samples(q, &inc);
        let (now, before) = (self.samples(q, local), self.samples(q, anchor));
        let (dp, dq) = (d[W][1], d[W][2] / eps);
        let (p, qv) = (now[W][1], now[W][2] / eps);
        let (pb, qb) = (before[W][1], before[W][2] / eps);
        out.clear();
        out.extend_from_slice(&[
            d[Y1][1] + 0.5 * dp * (p + pb),
            (d[Y1][2] + d[Y2][1]) / (2.0 * eps) + 0.5 * (dp * qv + pb * dq),
            d[Y2][2] / (eps * eps) + 0.5 * dq * (qv + qb),
            d[W][3],
            d[W][4] / eps,
            d[W][5] / (eps * eps),
        ]);
    }

    fn load(&self) -> &[f64] {
        &self.load
    }

    fn constraints(&self) -> &Constraints {
        &self.constraints
    }
}

impl GradientSystem for PlateModel {
    fn ndof(&self) -> usize {
        self.layout.len()
    }

    fn constrained(&self) -> &[bool] {
        &self.constraints.mask
    }

    fn energy(&self, u: &[f64]) -> f64 {
        PlateModel::energy(self, u)
    }

    fn energy_gradient(&self, u: &[f64]) -> Vec<f64> {
        PlateModel::energy_gradient(self, u)
    }

    fn sqdist(&self, u: &[f64], v: &[f64]) -> f64 {
        PlateModel::sqdist(self, u, v)
    }

    fn halfsq_gradient(&self, anchor: &[f64], v: &[f64]) -> Vec<f64> {
        PlateModel::halfsq_gradient(self, anchor, v)
    }

    fn incremental(&self, anchor: &[f64], v: &[f64], tau: f64, hessian: bool) -> Incremental {
        let (value, gradient, hessian) = PlateModel::incremental(self, anchor, v, tau, hessian);
        Incremental {
            value,
            gradient,
            hessian,
        }
    }

    fn optimality_residual(&self, prev: &[f64], next: &[f64], tau: f64) -> Option<Vec<f64>> {
        Some(weak_residual_2d(self, prev, next, tau).pairings)
    }
}
