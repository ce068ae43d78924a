use nalgebra::Vector3;

use super::{RibbonModel, THETA, W, XI1, XI2};
use crate::forms::ExtendedForm;

/// Strain triple at one quadrature point of `I`, affine in `x₂`:
/// `G(x₁, x₂) = (g₁ − x₂·moment, g₂, g₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GSample {
    pub x1: f64,
    pub weight: f64,
    pub g: [f64; 3],
    /// Coefficient of `−x₂` in the first entry (`ξ₂″`).
    pub moment: f64,
}

impl GSample {
    pub fn at(&self, x2: f64) -> Vector3<f64> {
        Vector3::new(self.g[0] - x2 * self.moment, self.g[1], self.g[2])
    }

    /// `∫_{−1/2}^{1/2} Q̄(G(·, x₂)) dx₂` from the exact moments.
    pub fn integrate(&self, form: &ExtendedForm) -> f64 {
        let g0 = Vector3::new(self.g[0], self.g[1], self.g[2]);
        form.eval(&g0) + form.matrix[(0, 0)] * self.moment * self.moment / 12.0
    }

    pub fn minus(&self, other: &GSample) -> GSample {
        GSample {
            x1: self.x1,
            weight: self.weight,
            g: [
                self.g[0] - other.g[0],
                self.g[1] - other.g[1],
                self.g[2] - other.g[2],
            ],
            moment: self.moment - other.moment,
        }
    }
}

/// `(x₁, weight)` of every quadrature point, element by element.
fn points(model: &RibbonModel) -> Vec<(f64, f64)> {
    let mesh = model.mesh();
    let h = mesh.h();
    let rule = model.rule();
    (0..mesh.elements())
        .flat_map(|e| {
            let x0 = mesh.node(e);
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(move |(t, w)| (x0 + t * h, w * h))
        })
        .collect()
}

fn field_values(model: &RibbonModel, u: &[f64]) -> Vec<[[f64; 3]; 4]> {
    let mesh = model.mesh();
    let rule = model.rule();
    let mut out = Vec::with_capacity(mesh.elements() * rule.len());
    for e in 0..mesh.elements() {
        let locals: Vec<[f64; 4]> = (0..4).map(|f| model.local_field(f, u, e)).collect();
        for q in 0..rule.len() {
            let mut v = [[0.0; 3]; 4];
            for f in 0..4 {
                let tab = model.table(f, q);
                for a in 0..RibbonModel::nloc(f) {
                    for d in 0..3 {
                        v[f][d] += locals[f][a] * tab[a][d];
                    }
                }
            }
            out.push(v);
        }
    }
    out
}

/// `G(u) = (∂₁y₁ + ½w′², w″, θ′)` at every quadrature point.
pub fn g_samples(model: &RibbonModel, u: &[f64]) -> Vec<GSample> {
    points(model)
        .into_iter()
        .zip(field_values(model, u))
        .map(|((x1, weight), v)| GSample {
            x1,
            weight,
            g: [v[XI1][1] + 0.5 * v[W][1] * v[W][1], v[W][2], v[THETA][1]],
            moment: v[XI2][2],
        })
        .collect()
}

/// Linearized strain `H(δ | w_u) = (∂₁δy₁ + w′δw′, δw″, δθ′)`.
pub fn h_samples(model: &RibbonModel, u: &[f64], dir: &[f64]) -> Vec<GSample> {
    points(model)
        .into_iter()
        .zip(field_values(model, u).into_iter().zip(field_values(model, dir)))
        .map(|((x1, weight), (b, v))| GSample {
            x1,
            weight,
            g: [v[XI1][1] + b[W][1] * v[W][1], v[W][2], v[THETA][1]],
            moment: v[XI2][2],
        })
        .collect()
}

/// `½∫_S Q̄_W(G) − ⟨load, u⟩`, the representation of `φ₀`.
pub fn energy_via_strains(model: &RibbonModel, u: &[f64]) -> f64 {
    let form = &model.elastic.extended;
    let e: f64 = g_samples(model, u)
        .iter()
        .map(|s| 0.5 * s.weight * s.integrate(form))
        .sum();
    e - crate::linalg::dot(model.load_vector(), u)
}

/// `∫_S Q̄_R(G(a) − G(b))`, the representation of `D₀²`.
pub fn sqdist_via_strains(model: &RibbonModel, a: &[f64], b: &[f64]) -> f64 {
    let form = &model.viscous.extended;
    g_samples(model, a)
        .iter()
        .zip(g_samples(model, b))
        .map(|(x, y)| x.weight * x.minus(&y).integrate(form))
        .sum()
}
