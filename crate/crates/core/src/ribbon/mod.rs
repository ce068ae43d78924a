//! The effective ribbon: energy `φ₀`, dissipation distance `D₀`, their
//! gradients, the fine local slope and the weak residual of the 1D system.
//!
//! A state is one flat DOF vector holding `(ξ₁, ξ₂, w, θ)` in the numbering
//! of [`RibbonModel::layout`]. The in-plane field is the Bernoulli–Navier
//! displacement `y₁ = ξ₁ − x₂ξ₂′`, `y₂ = ξ₂`; its `x₂`-dependence is
//! integrated exactly through the moments `∫x₂ = 0`, `∫x₂² = 1/12`.

mod operators;
mod residual;
mod slope;

pub use operators::{energy_via_strains, g_samples, h_samples, sqdist_via_strains, GSample};
pub use residual::{weak_residual_1d, WeakResidual};
pub use slope::{local_slope_1d, MultiplierSample, SlopeSolution};

use serde::{Deserialize, Serialize};

use crate::channels::{self, ChannelModel, Mix, PointEval};
use crate::error::{Error, Result};
use crate::fem::{
    BoundaryData, Constraints, DofLayout, GaussRule, Kind1D, Mesh1D, Poly, Shape, Space1D,
};
use crate::forms::{extended_form, ExtendedForm, MaterialPair, QuadForm1};
use crate::linalg::BandMatrix;
use crate::movements::{GradientSystem, Incremental};

pub const XI1: usize = 0;
pub const XI2: usize = 1;
pub const W: usize = 2;
pub const THETA: usize = 3;

const KINDS: [Kind1D; 4] = [Kind1D::P2, Kind1D::Hermite3, Kind1D::Hermite3, Kind1D::Hermite3];

/// Load densities per unit length, constant in time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RibbonForces {
    pub f: Poly,
    pub g1: Poly,
    pub g2: Poly,
}

/// Reduced moduli of one form as seen by the ribbon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RibbonModuli {
    /// Stretching modulus `C⁰`.
    pub c0: f64,
    /// Bending/twisting form on `(w″, θ′)`.
    pub q1: QuadForm1,
    /// `diag(C⁰, Q¹/12)` with square roots.
    pub extended: ExtendedForm,
}

impl RibbonModuli {
    fn new(q1: QuadForm1, c0: f64) -> Result<Self> {
        let q0 = crate::forms::QuadForm0 { c0, z: 0.0 };
        Ok(Self {
            c0,
            q1,
            extended: extended_form(&q0, &q1)?,
        })
    }

    /// Weights of the channels `(ξ₁′ + ½w′², ξ₂″, w″, θ′)`.
    fn channel_weights(&self) -> Vec<f64> {
        let n = self.q1.matrix();
        let mut a = vec![0.0; 16];
        a[0] = self.c0;
        a[5] = self.c0 / 12.0;
        a[10] = n[(0, 0)] / 12.0;
        a[11] = n[(0, 1)] / 12.0;
        a[14] = n[(1, 0)] / 12.0;
        a[15] = n[(1, 1)] / 12.0;
        a
    }
}

/// Field-wise view of a ribbon state.
#[derive(Debug, Clone, PartialEq)]
pub struct RibbonFields {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub w: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RibbonModel {
    mesh: Mesh1D,
    spaces: [Space1D; 4],
    layout: DofLayout,
    boundary: BoundaryData,
    forces: RibbonForces,
    constraints: Constraints,
    rule: GaussRule,
    pub elastic: RibbonModuli,
    pub viscous: RibbonModuli,
    aw: Vec<f64>,
    ar: Vec<f64>,
    load: Vec<f64>,
    /// `tables[field][q]`: local basis at quadrature point `q`.
    tables: [Vec<[Shape; 4]>; 4],
    offsets: [usize; 5],
}

impl RibbonModel {
    pub fn new(
        mesh: Mesh1D,
        material: &MaterialPair,
        boundary: BoundaryData,
        forces: RibbonForces,
        quad_points: usize,
    ) -> Result<Self> {
        let (w1, w0) = material.elastic_reduced()?;
        let (r1, r0) = material.viscous_reduced()?;
        let elastic = RibbonModuli::new(w1, w0.c0)?;
        let viscous = RibbonModuli::new(r1, r0.c0)?;
        let spaces = KINDS.map(|k| Space1D::new(mesh, k));
        let positions: Vec<Vec<f64>> = spaces
            .iter()
            .map(|s| (0..s.ndof()).map(|i| s.kind.dof_info(&mesh, i).0).collect())
            .collect();
        let mut layout = DofLayout::new(&positions);
        let rule = GaussRule::new(quad_points);
        let h = mesh.h();
        let tables = KINDS.map(|k| rule.points.iter().map(|&t| k.shape(t, h)).collect());
        let mut offsets = [0; 5];
        for f in 0..4 {
            offsets[f + 1] = offsets[f] + KINDS[f].nloc();
        }
        let mut model = Self {
            mesh,
            spaces,
            layout: layout.clone(),
            boundary,
            forces,
            constraints: Constraints::free(0),
            rule,
            aw: elastic.channel_weights(),
            ar: viscous.channel_weights(),
            elastic,
            viscous,
            load: Vec::new(),
            tables,
            offsets,
        };
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

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn space(&self, field: usize) -> &Space1D {
        &self.spaces[field]
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn forces(&self) -> &RibbonForces {
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

    /// `∫ f w + g₁ ξ₁ + g₂ ξ₂` paired with each DOF.
    pub fn load_vector(&self) -> &[f64] {
        &self.load
    }

    fn build_constraints(&self) -> Constraints {
        let n = self.mesh.elements();
        let (a, b) = (self.mesh.left(), -self.mesh.left());
        let mut c = Constraints::free(self.ndof());
        let b_ = &self.boundary;
        let ends = [a, b];
        let values: [(usize, &Poly); 3] = [(XI1, &b_.u1hat), (XI2, &b_.u2hat), (W, &b_.vhat)];
        for (field, p) in values {
            let kind = KINDS[field];
            for (k, d) in kind.end_value_dofs(n).iter().enumerate() {
                c.fix(self.layout.global(field, *d), p.eval(ends[k]));
            }
            if let Some(s) = kind.end_slope_dofs(n) {
                for (k, d) in s.iter().enumerate() {
                    c.fix(self.layout.global(field, *d), p.eval_deriv(ends[k], 1));
                }
            }
        }
        for d in KINDS[THETA].end_value_dofs(n) {
            c.fix(self.layout.global(THETA, d), 0.0);
        }
        c
    }

    fn build_load(&self) -> Vec<f64> {
        let mut load = vec![0.0; self.ndof()];
        let h = self.mesh.h();
        let pairs = [(XI1, &self.forces.g1), (XI2, &self.forces.g2), (W, &self.forces.f)];
        for e in 0..self.mesh.elements() {
            let x0 = self.mesh.node(e);
            for (q, (t, wq)) in self.rule.points.iter().zip(&self.rule.weights).enumerate() {
                let x = x0 + t * h;
                for (field, p) in pairs {
                    let density = p.eval(x);
                    if density == 0.0 {
                        continue;
                    }
                    let dofs = KINDS[field].local_dofs(e);
                    for a in 0..KINDS[field].nloc() {
                        load[self.layout.global(field, dofs[a])] +=
                            wq * h * density * self.tables[field][q][a][0];
                    }
                }
            }
        }
        load
    }

    pub fn split(&self, u: &[f64]) -> RibbonFields {
        RibbonFields {
            xi1: self.layout.gather(XI1, u),
            xi2: self.layout.gather(XI2, u),
            w: self.layout.gather(W, u),
            theta: self.layout.gather(THETA, u),
        }
    }

    pub fn join(&self, f: &RibbonFields) -> Vec<f64> {
        let mut u = vec![0.0; self.ndof()];
        self.layout.scatter(XI1, &f.xi1, &mut u);
        self.layout.scatter(XI2, &f.xi2, &mut u);
        self.layout.scatter(W, &f.w, &mut u);
        self.layout.scatter(THETA, &f.theta, &mut u);
        u
    }

    /// Interpolates polynomial fields; fails unless the result lies in `𝒦`,
    /// and returns the constrained DOFs at their exact values.
    pub fn interpolate(&self, xi1: &Poly, xi2: &Poly, w: &Poly, theta: &Poly) -> Result<Vec<f64>> {
        let fields = RibbonFields {
            xi1: self.spaces[XI1].interpolate_poly(xi1),
            xi2: self.spaces[XI2].interpolate_poly(xi2),
            w: self.spaces[W].interpolate_poly(w),
            theta: self.spaces[THETA].interpolate_poly(theta),
        };
        let mut u = self.join(&fields);
        self.check_admissible(&u)?;
        // Snap the roundoff of the polynomial evaluation at the ends.
        self.constraints.apply(&mut u);
        Ok(u)
    }

    pub fn check_admissible(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.ndof() {
            return Err(Error::Mismatch(format!(
                "{} DOFs for a ribbon with {}",
                u.len(),
                self.ndof()
            )));
        }
        let v = self.constraints.violation(u);
        let scale = 1.0 + crate::linalg::max_abs(&self.constraints.values);
        if v > 1e-12 * scale {
            return Err(Error::BoundaryViolation(format!(
                "lateral traces off by {v:e}"
            )));
        }
        Ok(())
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
        if self.constraints.violation(a) > 0.0 || self.constraints.violation(b) > 0.0 {
            self.check_admissible(a)?;
            self.check_admissible(b)?;
        }
        Ok(self.sqdist(a, b).sqrt())
    }

    /// Gradient of `v ↦ ½D₀²(anchor, v)`.
    pub fn halfsq_gradient(&self, anchor: &[f64], v: &[f64]) -> Vec<f64> {
        channels::assemble(self, v, Some(anchor), Mix { elastic: 0.0, viscous: 1.0 }, true, false)
            .gradient
            .expect("gradient requested")
    }

    /// Value, gradient and Hessian of `v ↦ (1/2τ)D₀²(anchor, v) + φ₀(v)`.
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

    /// `∇²(½D₀²(u, ·))` at `u`, pinned on constrained DOFs.
    pub fn metric_hessian(&self, u: &[f64]) -> BandMatrix {
        channels::assemble(self, u, Some(u), Mix { elastic: 0.0, viscous: 1.0 }, false, true)
            .hessian
            .expect("hessian requested")
    }

    pub(crate) fn local_field(&self, field: usize, u: &[f64], e: usize) -> [f64; 4] {
        let dofs = KINDS[field].local_dofs(e);
        let mut out = [0.0; 4];
        for a in 0..KINDS[field].nloc() {
            out[a] = u[self.layout.global(field, dofs[a])];
        }
        out
    }

    pub(crate) fn table(&self, field: usize, q: usize) -> &[Shape; 4] {
        &self.tables[field][q]
    }

    pub(crate) fn nloc(field: usize) -> usize {
        KINDS[field].nloc()
    }

    /// `[u, u′, u″]` of every field at quadrature point `q` of an element
    /// with local DOFs `local`.
    fn samples(&self, q: usize, local: &[f64]) -> [[f64; 3]; 4] {
        let mut val = [[0.0; 3]; 4];
        for f in 0..4 {
            let tab = &self.tables[f][q];
            for (c, s) in local[self.offsets[f]..self.offsets[f + 1]].iter().zip(tab) {
                for d in 0..3 {
                    val[f][d] += c * s[d];
                }
            }
        }
        val
    }

    /// `[u, u′, u″]` of one field at physical `x`.
    pub fn field_at(&self, field: usize, u: &[f64], x: f64) -> Shape {
        let (e, t) = self.mesh.locate(x);
        let c = self.local_field(field, u, e);
        let s = KINDS[field].shape(t, self.mesh.h());
        let mut out = [0.0; 3];
        for a in 0..KINDS[field].nloc() {
            for d in 0..3 {
                out[d] += c[a] * s[a][d];
            }
        }
        out
    }
}

const MAX_LOCAL: usize = 16;

impl ChannelModel for RibbonModel {
    fn n_channels(&self) -> usize {
        4
    }

    fn n_local(&self) -> usize {
        self.offsets[4]
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
        self.rule.len()
    }

    fn element_dofs(&self, e: usize, out: &mut Vec<usize>) {
        for (f, k) in KINDS.iter().enumerate() {
            let d = k.local_dofs(e);
            for a in 0..k.nloc() {
                out.push(self.layout.global(f, d[a]));
            }
        }
    }

    fn eval_point(&self, _e: usize, q: usize, local: &[f64], jac: bool, out: &mut PointEval) {
        let nl = self.offsets[4];
        let o = &self.offsets;
        let val = self.samples(q, local);
        out.weight = self.rule.weights[q] * self.mesh.h();
        let wp = val[W][1];
        out.c.clear();
        out.c.extend_from_slice(&[val[XI1][1] + 0.5 * wp * wp, val[XI2][2], val[W][2], val[THETA][1]]);
        if !jac {
            return;
        }
        out.jac.clear();
        out.jac.resize(4 * nl, 0.0);
        let mut wd1 = vec![0.0; nl];
        for a in 0..KINDS[XI1].nloc() {
            out.jac[o[XI1] + a] = self.tables[XI1][q][a][1];
        }
        for a in 0..KINDS[W].nloc() {
            let s = self.tables[W][q][a];
            wd1[o[W] + a] = s[1];
            out.jac[o[W] + a] = wp * s[1];
            out.jac[2 * nl + o[W] + a] = s[2];
        }
        for a in 0..KINDS[XI2].nloc() {
            out.jac[nl + o[XI2] + a] = self.tables[XI2][q][a][2];
        }
        for a in 0..KINDS[THETA].nloc() {
            out.jac[3 * nl + o[THETA] + a] = self.tables[THETA][q][a][1];
        }
        out.bilinear.clear();
        out.bilinear.push(channels::BilinearTerm {
            channel: 0,
            coeff: 0.5,
            a: wd1.clone(),
            b: wd1,
        });
    }

    fn eval_delta(&self, q: usize, local: &[f64], anchor: &[f64], out: &mut Vec<f64>) {
        let mut inc = [0.0; MAX_LOCAL];
        for (i, (a, b)) in local.iter().zip(anchor).enumerate() {
            inc[i] = a - b;
        }
        let d = self.samples(q, &inc[..local.len()]);
        let (now, before) = (self.samples(q, local), self.samples(q, anchor));
        out.clear();
        out.extend_from_slice(&[
            d[XI1][1] + 0.5 * d[W][1] * (now[W][1] + before[W][1]),
            d[XI2][2],
            d[W][2],
            d[THETA][1],
        ]);
    }

    fn load(&self) -> &[f64] {
        &self.load
    }

    fn constraints(&self) -> &Constraints {
        &self.constraints
    }
}

impl GradientSystem for RibbonModel {
    fn ndof(&self) -> usize {
        self.layout.len()
    }

    fn constrained(&self) -> &[bool] {
        &self.constraints.mask
    }

    fn energy(&self, u: &[f64]) -> f64 {
        RibbonModel::energy(self, u)
    }

    fn energy_gradient(&self, u: &[f64]) -> Vec<f64> {
        RibbonModel::energy_gradient(self, u)
    }

    fn sqdist(&self, u: &[f64], v: &[f64]) -> f64 {
        RibbonModel::sqdist(self, u, v)
    }

    fn halfsq_gradient(&self, anchor: &[f64], v: &[f64]) -> Vec<f64> {
        RibbonModel::halfsq_gradient(self, anchor, v)
    }

    fn incremental(&self, anchor: &[f64], v: &[f64], tau: f64, hessian: bool) -> Incremental {
        let (value, gradient, hessian) = RibbonModel::incremental(self, anchor, v, tau, hessian);
        Incremental {
            value,
            gradient,
            hessian,
        }
    }

    fn optimality_residual(&self, prev: &[f64], next: &[f64], tau: f64) -> Option<Vec<f64>> {
        Some(weak_residual_1d(self, prev, next, tau).pairings)
    }
}

/// `u_k = z_k + (u − z)`, DOF by DOF.
pub fn mutual_shift_1d(z_k: &[f64], z: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    if z_k.len() != z.len() || z.len() != u.len() {
        return Err(Error::Mismatch("states of different dimension".into()));
    }
    Ok(z_k.iter().zip(z).zip(u).map(|((a, b), c)| a + (c - b)).collect())
}
