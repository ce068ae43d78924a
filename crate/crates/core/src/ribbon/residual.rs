use super::{RibbonModel, THETA, W, XI1, XI2};
use crate::linalg::norm;

/// Pairings of the four ribbon equations against every basis function,
/// with time derivatives replaced by difference quotients.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidual {
    /// Zero on constrained DOFs.
    pub pairings: Vec<f64>,
    pub norm: f64,
}

/// Weak residual of the step `prev → next` of length `tau`.
///
/// Evaluated field by field from the displayed equations (stress
/// `C⁰ a + C⁰_R ȧ`, moments `∂Q¹`), independently of the channel assembly.
pub fn weak_residual_1d(model: &RibbonModel, prev: &[f64], next: &[f64], tau: f64) -> WeakResidual {
    assert!(tau > 0.0, "time step must be positive");
    let mesh = model.mesh();
    let h = mesh.h();
    let rule = model.rule();
    let (p, n) = (model.split(prev), model.split(next));
    let increment: Vec<f64> = next.iter().zip(prev).map(|(a, b)| a - b).collect();
    let d = model.split(&increment);
    let sp = |f: usize| model.space(f);
    let (cw, cr) = (model.elastic.c0, model.viscous.c0);
    let (qw, qr) = (model.elastic.q1, model.viscous.q1);
    let forces = model.forces();
    let layout = model.layout();
    let mut r = vec![0.0; model.ndof()];

    for e in 0..mesh.elements() {
        let x0 = mesh.node(e);
        for (t, wq) in rule.points.iter().zip(&rule.weights) {
            let x = x0 + t * h;
            let dx = wq * h;
            let at = |f: usize, c: &[f64]| sp(f).eval_local(c, e, *t);
            let (xi1, xi2, w, th) = (at(XI1, &n.xi1), at(XI2, &n.xi2), at(W, &n.w), at(THETA, &n.theta));
            let wpv = at(W, &p.w);
            // Rates from the DOF increment, which does not cancel.
            let (dxi1, dxi2, dw_, dth) = (at(XI1, &d.xi1), at(XI2, &d.xi2), at(W, &d.w), at(THETA, &d.theta));

            let stretch = xi1[1] + 0.5 * w[1] * w[1];
            let stretch_rate = (dxi1[1] + 0.5 * dw_[1] * (w[1] + wpv[1])) / tau;
            let axial = cw * stretch + cr * stretch_rate;
            let bend_xi2 = (cw * xi2[2] + cr * dxi2[2] / tau) / 12.0;
            let dw = qw.gradient(w[2], th[1]);
            let dr = qr.gradient(dw_[2] / tau, dth[1] / tau);
            let moment = [(dw[0] + dr[0]) / 24.0, (dw[1] + dr[1]) / 24.0];
            let (f, g1, g2) = (forces.f.eval(x), forces.g1.eval(x), forces.g2.eval(x));

            let mut pair = |field: usize, value: &dyn Fn(&[f64; 3]) -> f64| {
                let kind = sp(field).kind;
                let shape = kind.shape(*t, h);
                let dofs = kind.local_dofs(e);
                for a in 0..kind.nloc() {
                    r[layout.global(field, dofs[a])] += dx * value(&shape[a]);
                }
            };
            pair(XI1, &|s| axial * s[1] - g1 * s[0]);
            pair(XI2, &|s| bend_xi2 * s[2] - g2 * s[0]);
            pair(W, &|s| axial * w[1] * s[1] + moment[0] * s[2] - f * s[0]);
            pair(THETA, &|s| moment[1] * s[1]);
        }
    }
    model.constraint_set().zero_constrained(&mut r);
    let n = norm(&r);
    WeakResidual { pairings: r, norm: n }
}
