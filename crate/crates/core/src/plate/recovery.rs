use super::{PlateFields, PlateModel, W, Y1, Y2};
use crate::error::{invalid, Error, Result};
use crate::fem::{Kind1D, Poly, Space1D};
use crate::ribbon::{RibbonModel, THETA, W as RW, XI1, XI2};

/// Target of a static recovery sequence (zero base state).
#[derive(Debug, Clone, Copy)]
pub struct RecoveryInputs<'a> {
    pub ribbon: &'a RibbonModel,
    /// Ribbon state `(ξ̃₁, ξ̃₂, w̃, θ̃)`, which must lie in `𝒦`.
    pub target: &'a [f64],
    /// Width of the end layers where corrections are cut off, rounded to
    /// whole elements.
    pub cutoff_width: f64,
}

/// Hermite cutoff profiles on the end layers of width `δ`.
struct Cutoff {
    space: Space1D,
    width: f64,
}

impl Cutoff {
    fn new(space: Space1D, requested: f64) -> Result<Self> {
        let n = space.mesh.elements();
        let h = space.mesh.h();
        if !(requested > 0.0) {
            return Err(invalid("cutoff_width", format!("{requested} must be positive")));
        }
        let k = ((requested / h).round() as usize).max(1);
        if 2 * k > n {
            return Err(invalid(
                "cutoff_width",
                format!("{requested} leaves no interior on {n} elements"),
            ));
        }
        Ok(Self {
            space,
            width: k as f64 * h,
        })
    }

    /// `(B₀, B₁)` at one end: `B₀` has value 1 and slope 0 there,
    /// `B₁` value 0 and slope 1; both vanish with their slope at the layer's far edge.
    fn profiles(&self, right: bool) -> (Vec<f64>, Vec<f64>) {
        let mesh = self.space.mesh;
        let d = self.width;
        let (a, b) = (mesh.left(), -mesh.left());
        let value = self.space.interpolate(|x| {
            let s = if right { (b - x) / d } else { (x - a) / d };
            if s >= 1.0 {
                return (0.0, 0.0);
            }
            let ds = if right { -1.0 / d } else { 1.0 / d };
            (1.0 - 3.0 * s * s + 2.0 * s.powi(3), (-6.0 * s + 6.0 * s * s) * ds)
        });
        let slope = self.space.interpolate(|x| {
            let s = if right { (b - x) / d } else { (x - a) / d };
            if s >= 1.0 {
                return (0.0, 0.0);
            }
            let sign = if right { -1.0 } else { 1.0 };
            (sign * d * s * (1.0 - s).powi(2), (1.0 - s) * (1.0 - 3.0 * s))
        });
        (value, slope)
    }

    /// Removes end values (and end slopes when `slopes`) of a Hermite field.
    fn apply(&self, g: &[f64], slopes: bool) -> Vec<f64> {
        let n = self.space.mesh.elements();
        let mut out = g.to_vec();
        for (end, right) in [(0usize, false), (1usize, true)] {
            let (b0, b1) = self.profiles(right);
            let v = g[Kind1D::Hermite3.end_value_dofs(n)[end]];
            let s = g[Kind1D::Hermite3.end_slope_dofs(n).expect("Hermite")[end]];
            for i in 0..out.len() {
                out[i] -= v * b0[i];
                if slopes {
                    out[i] -= s * b1[i];
                }
            }
        }
        out
    }
}

/// Hermite interpolant of an elementwise smooth function given as
/// `g(e, t) = (value, slope)`, averaging the one-sided nodal data.
fn hermite_average(space: &Space1D, g: impl Fn(usize, f64) -> (f64, f64)) -> Vec<f64> {
    let n = space.mesh.elements();
    let mut out = vec![0.0; space.ndof()];
    for i in 0..=n {
        let mut sides = Vec::with_capacity(2);
        if i > 0 {
            sides.push(g(i - 1, 1.0));
        }
        if i < n {
            sides.push(g(i, 0.0));
        }
        let k = sides.len() as f64;
        out[2 * i] = sides.iter().map(|s| s.0).sum::<f64>() / k;
        out[2 * i + 1] = sides.iter().map(|s| s.1).sum::<f64>() / k;
    }
    out
}

/// Static recovery state of the target at the plate's width:
///
/// `w = w̃ + εx₂θ_ε + ε²γ̃_ε(x₂ + ½)²/2`,
/// `y₁ = ξ̃₁ − x₂(ξ̃₂′ + εw̃′θ̃)`,
/// `y₂ = ξ̃₂ − (ε²/2)x₂θ̃² + ε²∫ζ_ε dx₂`,
///
/// where `γ̃` and `ζ` are the elastic argmins of the eliminated entries and
/// the subscript `ε` marks their versions cut off near the ends.
pub fn build_recovery(inputs: &RecoveryInputs, plate: &PlateModel) -> Result<Vec<f64>> {
    let ribbon = inputs.ribbon;
    ribbon.check_admissible(inputs.target)?;
    if plate.mesh().x != *ribbon.mesh() {
        return Err(Error::Mismatch(
            "recovery needs the plate mesh along the strip to equal the ribbon mesh".into(),
        ));
    }
    if plate.boundary() != ribbon.boundary() {
        return Err(Error::Mismatch("plate and ribbon boundary data differ".into()));
    }
    let eps = plate.eps();
    let t = ribbon.split(inputs.target);
    let h = ribbon.mesh().h();
    let hermite = *ribbon.space(RW);
    let p2 = *ribbon.space(XI1);
    let at = |f: usize, c: &[f64], e: usize, s: f64| ribbon.space(f).eval_local(c, e, s);
    let third = |f: usize, c: &[f64], e: usize| (at(f, c, e, 1.0)[2] - at(f, c, e, 0.0)[2]) / h;
    let cutoff = Cutoff::new(hermite, inputs.cutoff_width)?;

    let q1 = ribbon.elastic.q1;
    let [ab, at_] = q1.alpha_coefficients();
    // z = r·(ξ̃₁′ − x₂ξ̃₂″ + ½w̃′²), the transverse argmin at vanishing shear.
    let r = q1.argmin_eliminated(1.0, 0.0);

    // In-plane, along-strip factors.
    let p2_of = |g: &dyn Fn(f64) -> f64| p2.interpolate(|x| (g(x), 0.0));
    let slope_xi2 = p2_of(&|x| ribbon.space(XI2).eval_at(&t.xi2, x)[1]);
    let coupling = p2_of(&|x| {
        ribbon.space(RW).eval_at(&t.w, x)[1] * ribbon.space(THETA).eval_at(&t.theta, x)[0]
    });
    let y1_linear: Vec<f64> = slope_xi2
        .iter()
        .zip(&coupling)
        .map(|(a, b)| -(a + eps * b))
        .collect();

    let theta_sq = hermite_average(&hermite, |e, s| {
        let th = at(THETA, &t.theta, e, s);
        (th[0] * th[0], 2.0 * th[0] * th[1])
    });
    let c0 = cutoff.apply(
        &hermite_average(&hermite, |e, s| {
            let (a, w) = (at(XI1, &t.xi1, e, s), at(RW, &t.w, e, s));
            (r * (a[1] + 0.5 * w[1] * w[1]), r * (a[2] + w[1] * w[2]))
        }),
        false,
    );
    let c1 = cutoff.apply(
        &hermite_average(&hermite, |e, s| {
            (-r * at(XI2, &t.xi2, e, s)[2], -r * third(XI2, &t.xi2, e))
        }),
        false,
    );
    let e2 = eps * eps;
    let y2_linear: Vec<f64> = theta_sq.iter().map(|v| -0.5 * e2 * v).collect();
    let c0s: Vec<f64> = c0.iter().map(|v| e2 * v).collect();
    let c1s: Vec<f64> = c1.iter().map(|v| e2 * v).collect();

    // Deflection factors.
    let theta_eps: Vec<f64> = cutoff.apply(&t.theta, true).iter().map(|v| eps * v).collect();
    let gamma = cutoff.apply(
        &hermite_average(&hermite, |e, s| {
            let (w, th) = (at(RW, &t.w, e, s), at(THETA, &t.theta, e, s));
            (
                ab * w[2] + at_ * th[1],
                ab * third(RW, &t.w, e) + at_ * th[2],
            )
        }),
        true,
    );
    let gamma_s: Vec<f64> = gamma.iter().map(|v| e2 * v).collect();

    let across = |f: usize, p: Poly| plate.space(f).y.interpolate_poly(&p);
    let one = Poly::new([1.0]);
    let x2 = Poly::new([0.0, 1.0]);
    let fields = PlateFields {
        y1: plate.space(Y1).kron_sum(&[
            (&t.xi1, &across(Y1, one.clone())),
            (&y1_linear, &across(Y1, x2.clone())),
        ]),
        y2: plate.space(Y2).kron_sum(&[
            (&t.xi2, &across(Y2, one.clone())),
            (&y2_linear, &across(Y2, x2.clone())),
            (&c0s, &across(Y2, Poly::new([0.5, 1.0]))),
            (&c1s, &across(Y2, Poly::new([-0.125, 0.0, 0.5]))),
        ]),
        w: plate.space(W).kron_sum(&[
            (&t.w, &across(W, one)),
            (&theta_eps, &across(W, x2)),
            (&gamma_s, &across(W, Poly::new([0.125, 0.5, 0.5]))),
        ]),
    };
    let u = plate.join(&fields);
    plate.check_admissible(&u)?;
    Ok(u)
}
