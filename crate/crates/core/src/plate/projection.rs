use super::{PlateModel, W, Y1};
use crate::error::{Error, Result};
use crate::fem::{Shape, Space1D};
use crate::ribbon::{RibbonModel, THETA, W as RW, XI1, XI2};

/// `π_ε` of a plate state: `y`, `w` as they are, plus the averaged twist.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedState {
    pub eps: f64,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub w: Vec<f64>,
    /// `θ̄ = ∫ε⁻¹∂₂w dx₂`, in the Hermite space along the strip.
    pub theta_bar: Vec<f64>,
    theta_space: Space1D,
}

impl ProjectedState {
    /// `[θ̄, θ̄′, θ̄″]` at `x₁`.
    pub fn theta_at(&self, x1: f64) -> Shape {
        self.theta_space.eval_at(&self.theta_bar, x1)
    }

    /// The unaveraged twist channel `ε⁻¹∂₂w` at `(x₁, x₂)`.
    pub fn raw_twist(&self, model: &PlateModel, x1: f64, x2: f64) -> f64 {
        model.space(W).eval_at(&self.w, x1, x2)[2] / self.eps
    }
}

/// `π_ε(y, w) = (y, w, θ̄)`. The `x₂`-average of `ε⁻¹∂₂w` is
/// `ε⁻¹(w(·, ½) − w(·, −½))`, which stays in the Hermite space exactly.
pub fn project_pi(model: &PlateModel, u: &[f64]) -> ProjectedState {
    let f = model.split(u);
    let s = model.space(W);
    let top = s.y.kind.end_value_dofs(s.y.mesh.elements())[1];
    let eps = model.eps();
    let theta_bar = (0..s.x.ndof())
        .map(|i| (f.w[s.index(i, top)] - f.w[s.index(i, 0)]) / eps)
        .collect();
    ProjectedState {
        eps,
        y1: f.y1,
        y2: f.y2,
        w: f.w,
        theta_bar,
        theta_space: s.x,
    }
}

/// `D₀` between `π_ε(u)` and a ribbon state `v`, integrated over `S`:
/// `∫ C⁰_R Δ(∂₁y₁ + ½(∂₁w)²)² + (1/12) Q¹_R(Δ∂₁₁w, Δθ̄′)` with the ribbon
/// fields in Bernoulli–Navier form `y₁ = ξ₁ − x₂ξ₂′`.
pub fn projection_distance(
    plate: &PlateModel,
    u: &[f64],
    ribbon: &RibbonModel,
    v: &[f64],
) -> Result<f64> {
    if (plate.mesh().x.length() - ribbon.mesh().length()).abs() > 1e-14 {
        return Err(Error::Mismatch("plate and ribbon live on different intervals".into()));
    }
    if v.len() != ribbon.ndof() || u.len() != plate.ndof() {
        return Err(Error::Mismatch("state dimension differs from its model".into()));
    }
    let proj = project_pi(plate, u);
    let c0 = ribbon.viscous.c0;
    let q1 = ribbon.viscous.q1;
    let mut dofs = [Vec::new(), Vec::new()];
    let mut shapes = [Vec::new(), Vec::new()];
    let fields = [(Y1, &proj.y1), (W, &proj.w)];
    let mut d2 = 0.0;
    for e in 0..plate.mesh().elements() {
        let (ex, ey) = plate.element_index(e);
        for (k, (f, _)) in fields.iter().enumerate() {
            dofs[k].clear();
            plate.space(*f).local_dofs(ex, ey, &mut dofs[k]);
        }
        let pts = plate.quadrature_points(e);
        let n = plate.rule().len();
        for (q, &(x1, x2, dx)) in pts.iter().enumerate() {
            let (t1, t2) = (plate.rule().points[q / n], plate.rule().points[q % n]);
            let mut val = [[0.0; 6]; 2];
            for (k, (f, c)) in fields.iter().enumerate() {
                shapes[k].clear();
                plate.space(*f).shape(t1, t2, &mut shapes[k]);
                for (d, s) in dofs[k].iter().zip(&shapes[k]) {
                    for j in 0..6 {
                        val[k][j] += c[*d] * s[j];
                    }
                }
            }
            let theta = proj.theta_at(x1);
            let plate_stretch = val[0][1] + 0.5 * val[1][1] * val[1][1];

            let xi1 = ribbon.field_at(XI1, v, x1);
            let xi2 = ribbon.field_at(XI2, v, x1);
            let w = ribbon.field_at(RW, v, x1);
            let th = ribbon.field_at(THETA, v, x1);
            let ribbon_stretch = xi1[1] - x2 * xi2[2] + 0.5 * w[1] * w[1];

            let da = plate_stretch - ribbon_stretch;
            d2 += dx * (c0 * da * da + q1.eval(val[1][3] - w[2], theta[1] - th[1]) / 12.0);
        }
    }
    Ok(d2.max(0.0).sqrt())
}
