use nalgebra::Matrix2;

use super::{PlateModel, W, Y1, Y2};
use crate::fem::Shape2;
use crate::forms::{QuadForm2, SymVec};
use crate::linalg::norm;

/// Pairings of the plate equations against every basis function, with time
/// derivatives replaced by difference quotients.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidual2d {
    /// Zero on constrained DOFs.
    pub pairings: Vec<f64>,
    pub norm: f64,
}

/// Stress matrix `S` with `S : δE = ∂(½Q)(E)[δE]`.
fn stress(q: &QuadForm2, e: &Matrix2<f64>) -> Matrix2<f64> {
    let g = q.gradient(SymVec::new(e[(0, 0)], e[(0, 1)], e[(1, 1)]));
    Matrix2::new(0.5 * g.q11, 0.25 * g.q12, 0.25 * g.q12, 0.5 * g.q22)
}

fn sym(a: f64, b: f64, c: f64) -> Matrix2<f64> {
    Matrix2::new(a, b, b, c)
}

struct Kinematics {
    membrane: Matrix2<f64>,
    bending: Matrix2<f64>,
    grad: [f64; 2],
}

fn kinematics(eps: f64, y1: &Shape2, y2: &Shape2, w: &Shape2) -> Kinematics {
    let grad = [w[1], w[2] / eps];
    let strain = sym(y1[1], (y1[2] + y2[1]) / (2.0 * eps), y2[2] / (eps * eps));
    let outer = sym(grad[0] * grad[0], grad[0] * grad[1], grad[1] * grad[1]);
    Kinematics {
        membrane: strain + 0.5 * outer,
        bending: sym(w[3], w[4] / eps, w[5] / (eps * eps)),
        grad,
    }
}

/// Membrane strain of `now` minus that of `before`, formed from the sampled
/// increment `change` so that the difference does not cancel.
fn strain_change(eps: f64, change: &[[f64; 6]; 3], now: &Kinematics, before: &Kinematics) -> Matrix2<f64> {
    let (y1, y2) = (&change[Y1], &change[Y2]);
    let dg = [change[W][1], change[W][2] / eps];
    let (g, gb) = (now.grad, before.grad);
    sym(
        y1[1] + 0.5 * dg[0] * (g[0] + gb[0]),
        (y1[2] + y2[1]) / (2.0 * eps) + 0.5 * (dg[0] * g[1] + gb[0] * dg[1]),
        y2[2] / (eps * eps) + 0.5 * dg[1] * (g[1] + gb[1]),
    )
}

/// Weak residual of the step `prev → next` of length `tau`.
///
/// Built from membrane stress `N = ∂Q_W(M) + ∂Q_R(Ṁ)` and moment
/// `(∂Q_W(B) + ∂Q_R(Ḃ))/12` as matrices, tested against the variations
/// `Eᵉφ`, `sym(∇_ε w ⊗ ∇_ε φ)` and `∇²_ε φ`; independent of the channel assembly.
pub fn weak_residual_2d(model: &PlateModel, prev: &[f64], next: &[f64], tau: f64) -> WeakResidual2d {
    assert!(tau > 0.0, "time step must be positive");
    let eps = model.eps();
    let (qw, qr) = (&model.elastic, &model.viscous);
    let (p, n) = (model.split(prev), model.split(next));
    let increment: Vec<f64> = next.iter().zip(prev).map(|(a, b)| a - b).collect();
    let d = model.split(&increment);
    let fields = [(&n.y1, &p.y1, &d.y1), (&n.y2, &p.y2, &d.y2), (&n.w, &p.w, &d.w)];
    let layout = model.layout();
    let forces = model.forces();
    let mut r = vec![0.0; model.ndof()];
    let mut dofs: [Vec<usize>; 3] = Default::default();
    let mut shapes: [Vec<Shape2>; 3] = Default::default();
    let (hx, hy) = (model.mesh().x.h(), model.mesh().y.h());
    let rule = model.rule();

    for e in 0..model.mesh().elements() {
        let (ex, ey) = model.element_index(e);
        for f in 0..3 {
            dofs[f].clear();
            model.space(f).local_dofs(ex, ey, &mut dofs[f]);
        }
        let x0 = model.mesh().x.node(ex);
        for (t1, w1) in rule.points.iter().zip(&rule.weights) {
            for (t2, w2) in rule.points.iter().zip(&rule.weights) {
                let dx = w1 * w2 * hx * hy;
                let x1 = x0 + t1 * hx;
                let mut now = [[0.0; 6]; 3];
                let mut before = [[0.0; 6]; 3];
                let mut change = [[0.0; 6]; 3];
                for f in 0..3 {
                    shapes[f].clear();
                    model.space(f).shape(*t1, *t2, &mut shapes[f]);
                    for (d, s) in dofs[f].iter().zip(&shapes[f]) {
                        for k in 0..6 {
                            now[f][k] += fields[f].0[*d] * s[k];
                            before[f][k] += fields[f].1[*d] * s[k];
                            change[f][k] += fields[f].2[*d] * s[k];
                        }
                    }
                }
                let a = kinematics(eps, &now[Y1], &now[Y2], &now[W]);
                let b = kinematics(eps, &before[Y1], &before[Y2], &before[W]);
                let rate = strain_change(eps, &change, &a, &b) / tau;
                let normal = stress(qw, &a.membrane) + stress(qr, &rate);
                let bend_rate = sym(change[W][3], change[W][4] / eps, change[W][5] / (eps * eps)) / tau;
                let moment = (stress(qw, &a.bending) + stress(qr, &bend_rate)) / 12.0;
                let g1 = forces.g1.eval(x1);
                let g2 = forces.g2_scaled.eval(x1) / eps;
                let f = forces.f.eval(x1);
                let g = a.grad;

                for (d, s) in dofs[Y1].iter().zip(&shapes[Y1]) {
                    let de = sym(s[1], s[2] / (2.0 * eps), 0.0);
                    r[layout.global(Y1, *d)] += dx * (normal.dot(&de) - g1 * s[0]);
                }
                for (d, s) in dofs[Y2].iter().zip(&shapes[Y2]) {
                    let de = sym(0.0, s[1] / (2.0 * eps), s[2] / (eps * eps));
                    r[layout.global(Y2, *d)] += dx * (normal.dot(&de) - g2 * s[0]);
                }
                for (d, s) in dofs[W].iter().zip(&shapes[W]) {
                    let gp = [s[1], s[2] / eps];
                    let dm = sym(g[0] * gp[0], 0.5 * (g[0] * gp[1] + g[1] * gp[0]), g[1] * gp[1]);
                    let dh = sym(s[3], s[4] / eps, s[5] / (eps * eps));
                    r[layout.global(W, *d)] +=
                        dx * (normal.dot(&dm) + moment.dot(&dh) - f * s[0]);
                }
            }
        }
    }
    model.constraint_set().zero_constrained(&mut r);
    let n = norm(&r);
    WeakResidual2d { pairings: r, norm: n }
}
