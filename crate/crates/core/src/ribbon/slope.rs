use nalgebra::Vector3;

use super::{h_samples, g_samples, RibbonModel, THETA, W, XI1, XI2};
use crate::error::Result;
use crate::linalg::dot;

/// The multiplier `ℒ = C̄_R H(δ*) − C̄_W G` at one point of `I`, affine in `x₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierSample {
    pub x1: f64,
    pub weight: f64,
    /// `ℒ(x₁, x₂) = constant + x₂·linear`.
    pub constant: Vector3<f64>,
    pub linear: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct SlopeSolution {
    /// `√(gᵀM⁻¹g)` from the direct solve.
    pub slope: f64,
    /// `‖√C̄_R⁻¹(C̄_W G + ℒ)‖_{L²(S)}`.
    pub representation: f64,
    /// Minimizer `δ*` of the auxiliary functional, as a DOF vector.
    pub minimizer: Vec<f64>,
    pub multiplier: Vec<MultiplierSample>,
    pub multiplier_norm: f64,
    /// Largest `|∫ℒ·H(φ) + F(φ)|` over the free basis functions `φ`.
    pub orthogonality: f64,
}

/// Local slope of `φ₀` with respect to `D₀` at `u`.
pub fn local_slope_1d(model: &RibbonModel, u: &[f64]) -> Result<SlopeSolution> {
    let g = model.energy_gradient(u);
    let m = model.metric_hessian(u);
    let delta = m.ldlt()?.solve(&g);
    let slope = dot(&g, &delta).max(0.0).sqrt();

    let cw = model.elastic.extended.matrix;
    let cr = model.viscous.extended.matrix;
    let inv = model.viscous.extended.inv_sqrt;
    let e1 = Vector3::new(1.0, 0.0, 0.0);
    let gs = g_samples(model, u);
    let hs = h_samples(model, u, &delta);
    let mut rep = 0.0;
    let mut lnorm = 0.0;
    let multiplier: Vec<MultiplierSample> = gs
        .iter()
        .zip(&hs)
        .map(|(gq, hq)| {
            let g0 = gq.at(0.0);
            let h0 = hq.at(0.0);
            let constant = cr * h0 - cw * g0;
            let linear = -(cr * e1) * hq.moment + (cw * e1) * gq.moment;
            let a = inv * (cw * g0 + constant);
            let b = inv * (-(cw * e1) * gq.moment + linear);
            rep += gq.weight * (a.norm_squared() + b.norm_squared() / 12.0);
            lnorm += gq.weight * (constant.norm_squared() + linear.norm_squared() / 12.0);
            MultiplierSample {
                x1: gq.x1,
                weight: gq.weight,
                constant,
                linear,
            }
        })
        .collect();

    let pairing = pair_with_basis(model, u, &multiplier);
    let load = model.load_vector();
    let mask = &model.constraint_set().mask;
    let orthogonality = pairing
        .iter()
        .zip(load)
        .zip(mask)
        .filter(|(_, m)| !**m)
        .fold(0.0_f64, |acc, ((p, f), _)| acc.max((p + f).abs()));

    Ok(SlopeSolution {
        slope,
        representation: rep.sqrt(),
        minimizer: delta,
        multiplier,
        multiplier_norm: lnorm.sqrt(),
        orthogonality,
    })
}

/// `∫_S ℒ·H(φ | w_u)` for every basis function `φ`.
fn pair_with_basis(model: &RibbonModel, u: &[f64], mult: &[MultiplierSample]) -> Vec<f64> {
    let mesh = model.mesh();
    let nq = model.rule().len();
    let layout = model.layout();
    let mut out = vec![0.0; model.ndof()];
    for e in 0..mesh.elements() {
        let wl = model.local_field(W, u, e);
        for q in 0..nq {
            let l = &mult[e * nq + q];
            let tw = model.table(W, q);
            let wp: f64 = (0..4).map(|a| wl[a] * tw[a][1]).sum();
            let add = |field: usize, a: usize, h0: Vector3<f64>, moment: f64, out: &mut Vec<f64>| {
                let d = crate::fem::Kind1D::local_dofs(kind_of(field), e)[a];
                out[layout.global(field, d)] +=
                    l.weight * (l.constant.dot(&h0) - l.linear[0] * moment / 12.0);
            };
            for a in 0..RibbonModel::nloc(XI1) {
                let s = model.table(XI1, q)[a];
                add(XI1, a, Vector3::new(s[1], 0.0, 0.0), 0.0, &mut out);
            }
            for a in 0..RibbonModel::nloc(XI2) {
                let s = model.table(XI2, q)[a];
                add(XI2, a, Vector3::zeros(), s[2], &mut out);
            }
            for a in 0..RibbonModel::nloc(W) {
                let s = tw[a];
                add(W, a, Vector3::new(wp * s[1], s[2], 0.0), 0.0, &mut out);
            }
            for a in 0..RibbonModel::nloc(THETA) {
                let s = model.table(THETA, q)[a];
                add(THETA, a, Vector3::new(0.0, 0.0, s[1]), 0.0, &mut out);
            }
        }
    }
    out
}

fn kind_of(field: usize) -> crate::fem::Kind1D {
    super::KINDS[field]
}
