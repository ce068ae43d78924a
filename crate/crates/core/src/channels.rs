//! Shared assembly for functionals of the form
//! `∫ ½ c(u)ᵀ A_W c(u) + ½ (c(u) − c(a))ᵀ A_R (c(u) − c(a)) − ⟨load, u⟩`,
//! where each channel `c_k` is affine in the local DOFs plus bilinear
//! products of derivative samples (the von Kármán membrane coupling).

use crate::fem::Constraints;
use crate::linalg::BandMatrix;

/// Bilinear part `coeff · (a·u)(b·u)` of one channel.
#[derive(Debug, Clone, Default)]
pub(crate) struct BilinearTerm {
    pub channel: usize,
    pub coeff: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Channel values and derivatives at one quadrature point.
#[derive(Debug, Clone, Default)]
pub(crate) struct PointEval {
    pub weight: f64,
    pub c: Vec<f64>,
    /// Row-major `nc × nl` Jacobian at the current local DOFs.
    pub jac: Vec<f64>,
    pub bilinear: Vec<BilinearTerm>,
}

pub(crate) trait ChannelModel {
    fn n_channels(&self) -> usize;
    fn n_local(&self) -> usize;
    fn n_dofs(&self) -> usize;
    fn bandwidth(&self) -> usize;
    fn elastic_weights(&self) -> &[f64];
    fn viscous_weights(&self) -> &[f64];
    fn n_elements(&self) -> usize;
    fn n_points(&self) -> usize;
    fn element_dofs(&self, e: usize, out: &mut Vec<usize>);
    /// Fills `out.c` always, `out.jac` and `out.bilinear` when `jac` is set.
    fn eval_point(&self, e: usize, q: usize, local: &[f64], jac: bool, out: &mut PointEval);
    /// `c(local) − c(anchor)` formed from samples of `local − anchor`, so
    /// that small increments do not cancel against large derivative samples.
    fn eval_delta(&self, q: usize, local: &[f64], anchor: &[f64], out: &mut Vec<f64>);
    fn load(&self) -> &[f64];
    fn constraints(&self) -> &Constraints;
}

/// Scalars multiplying the elastic and viscous parts.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Mix {
    pub elastic: f64,
    pub viscous: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Assembled {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub hessian: Option<BandMatrix>,
}

fn quad_form(a: &[f64], x: &[f64], nc: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..nc {
        let mut r = 0.0;
        for j in 0..nc {
            r += a[i * nc + j] * x[j];
        }
        s += x[i] * r;
    }
    s
}

/// Evaluates the mixed functional; `anchor` is required when `mix.viscous ≠ 0`.
pub(crate) fn assemble<M: ChannelModel + ?Sized>(
    m: &M,
    u: &[f64],
    anchor: Option<&[f64]>,
    mix: Mix,
    gradient: bool,
    hessian: bool,
) -> Assembled {
    let nc = m.n_channels();
    let nl = m.n_local();
    let aw = m.elastic_weights();
    let ar = m.viscous_weights();
    let need_jac = gradient || hessian;
    let viscous = mix.viscous != 0.0;
    assert!(!viscous || anchor.is_some(), "viscous part needs an anchor");

    let mut value = 0.0;
    let mut grad = if gradient { vec![0.0; m.n_dofs()] } else { Vec::new() };
    let mut hess = if hessian {
        Some(BandMatrix::zeros(m.n_dofs(), m.bandwidth()))
    } else {
        None
    };
    let combined: Vec<f64> = aw
        .iter()
        .zip(ar)
        .map(|(w, r)| mix.elastic * w + mix.viscous * r)
        .collect();

    let mut dofs = Vec::with_capacity(nl);
    let mut local = vec![0.0; nl];
    let mut local_anchor = vec![0.0; nl];
    let mut pe = PointEval::default();
    let mut increment = vec![0.0; nl];
    let mut sigma = vec![0.0; nc];
    let mut delta = vec![0.0; nc];
    let mut aj = vec![0.0; nc * nl];
    let mut lg = vec![0.0; nl];
    let mut lh = vec![0.0; nl * nl];

    for e in 0..m.n_elements() {
        dofs.clear();
        m.element_dofs(e, &mut dofs);
        for (l, &g) in local.iter_mut().zip(&dofs) {
            *l = u[g];
        }
        if let (true, Some(a)) = (viscous, anchor) {
            for (l, &g) in local_anchor.iter_mut().zip(&dofs) {
                *l = a[g];
            }
        }
        if gradient {
            lg.iter_mut().for_each(|x| *x = 0.0);
        }
        if hessian {
            lh.iter_mut().for_each(|x| *x = 0.0);
        }
        for q in 0..m.n_points() {
            m.eval_point(e, q, &local, need_jac, &mut pe);
            let w = pe.weight;
            for k in 0..nc {
                delta[k] = 0.0;
            }
            if viscous {
                m.eval_delta(q, &local, &local_anchor, &mut increment);
                delta.copy_from_slice(&increment[..nc]);
            }
            value += w
                * (0.5 * mix.elastic * quad_form(aw, &pe.c, nc)
                    + if viscous {
                        0.5 * mix.viscous * quad_form(ar, &delta, nc)
                    } else {
                        0.0
                    });
            if !need_jac {
                continue;
            }
            for i in 0..nc {
                let mut s = 0.0;
                for j in 0..nc {
                    s += mix.elastic * aw[i * nc + j] * pe.c[j] + mix.viscous * ar[i * nc + j] * delta[j];
                }
                sigma[i] = s;
            }
            if gradient {
                for k in 0..nc {
                    let s = w * sigma[k];
                    if s != 0.0 {
                        let row = &pe.jac[k * nl..(k + 1) * nl];
                        for (g, j) in lg.iter_mut().zip(row) {
                            *g += s * j;
                        }
                    }
                }
            }
            if hessian {
                for i in 0..nc {
                    for l in 0..nl {
                        let mut s = 0.0;
                        for j in 0..nc {
                            s += combined[i * nc + j] * pe.jac[j * nl + l];
                        }
                        aj[i * nl + l] = s;
                    }
                }
                for k in 0..nc {
                    let row = &pe.jac[k * nl..(k + 1) * nl];
                    let arow = &aj[k * nl..(k + 1) * nl];
                    for a in 0..nl {
                        let ja = w * row[a];
                        if ja == 0.0 {
                            continue;
                        }
                        let out = &mut lh[a * nl..a * nl + a + 1];
                        for (b, o) in out.iter_mut().enumerate() {
                            *o += ja * arow[b];
                        }
                    }
                }
                for t in &pe.bilinear {
                    let s = w * sigma[t.channel] * t.coeff;
                    if s == 0.0 {
                        continue;
                    }
                    for a in 0..nl {
                        let (ta, tb) = (t.a[a], t.b[a]);
                        if ta == 0.0 && tb == 0.0 {
                            continue;
                        }
                        for b in 0..=a {
                            lh[a * nl + b] += s * (ta * t.b[b] + tb * t.a[b]);
                        }
                    }
                }
            }
        }
        if gradient {
            for (g, v) in dofs.iter().zip(&lg) {
                grad[*g] += v;
            }
        }
        if let Some(h) = hess.as_mut() {
            for a in 0..nl {
                for b in 0..=a {
                    let v = lh[a * nl + b];
                    if v != 0.0 {
                        h.add(dofs[a], dofs[b], v);
                    }
                }
            }
        }
    }

    if mix.elastic != 0.0 {
        let load = m.load();
        value -= mix.elastic * load.iter().zip(u).map(|(f, x)| f * x).sum::<f64>();
        if gradient {
            for (g, f) in grad.iter_mut().zip(load) {
                *g -= mix.elastic * f;
            }
        }
    }
    let cons = m.constraints();
    if gradient {
        cons.zero_constrained(&mut grad);
    }
    if let Some(h) = hess.as_mut() {
        h.pin(&cons.mask);
    }
    Assembled {
        value,
        gradient: gradient.then_some(grad),
        hessian: hess,
    }
}
