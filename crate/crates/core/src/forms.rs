//! Elastic and viscous quadratic forms and their dimension-reduction chain.
//!
//! A symmetric strain `[[q11, q12], [q12, q22]]` is stored as the 3-vector
//! `(q11, q12, q22)`; a form is `Q(q) = qᵀ M q`. Reductions eliminate `q22`
//! (giving the bending/twisting form) and then `q12` (giving the stretching
//! modulus) by exact Schur complements.

use std::fmt;

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Entries below this fraction of the largest coefficient count as zero.
const STRUCTURAL_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymVec {
    pub q11: f64,
    pub q12: f64,
    pub q22: f64,
}

impl SymVec {
    pub fn new(q11: f64, q12: f64, q22: f64) -> Self {
        Self { q11, q12, q22 }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.q11, self.q12, self.q22)
    }
}

/// Positive-definite form on symmetric 2×2 strains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm2 {
    m: Matrix3<f64>,
}

impl QuadForm2 {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let scale = m.abs().max();
        if !m.iter().all(|x| x.is_finite()) || scale == 0.0 {
            return Err(Error::NotPositiveDefinite("zero or non-finite matrix".into()));
        }
        if (m - m.transpose()).abs().max() > STRUCTURAL_ZERO * scale {
            return Err(Error::NotPositiveDefinite("matrix is not symmetric".into()));
        }
        if m.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite(
                "Cholesky factorization failed".into(),
            ));
        }
        Ok(Self { m })
    }

    pub fn from_row_major(c: &[f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(c))
    }

    /// `Q(q) = 2μ(q11² + 2q12² + q22²) + λ(q11 + q22)²`.
    pub fn isotropic(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(invalid("mu", format!("{mu} must be positive")));
        }
        if !(2.0 * mu + lambda > 0.0) {
            return Err(invalid(
                "lambda",
                format!("2*mu + lambda = {} must be positive", 2.0 * mu + lambda),
            ));
        }
        let d = 2.0 * mu + lambda;
        Self::new(Matrix3::new(
            d,
            0.0,
            lambda,
            0.0,
            4.0 * mu,
            0.0,
            lambda,
            0.0,
            d,
        ))
    }

    /// Block-diagonal form `Q¹(q11, q12) + c·q22²`.
    pub fn from_blocks(q1: &QuadForm1, c: f64) -> Result<Self> {
        let n = q1.matrix();
        Self::new(Matrix3::new(
            n[(0, 0)],
            n[(0, 1)],
            0.0,
            n[(1, 0)],
            n[(1, 1)],
            0.0,
            0.0,
            0.0,
            c,
        ))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn eval(&self, q: SymVec) -> f64 {
        let v = q.to_vector();
        v.dot(&(self.m * v))
    }

    pub fn gradient(&self, q: SymVec) -> SymVec {
        let g = 2.0 * self.m * q.to_vector();
        SymVec::new(g[0], g[1], g[2])
    }
}

/// Form on `(q11, q12)` with the affine argmin of the eliminated `q22`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm1 {
    m: Matrix2<f64>,
    /// `α*(a, b) = alpha[0]·a + alpha[1]·b`.
    alpha: [f64; 2],
}

impl QuadForm1 {
    pub fn new(m: Matrix2<f64>) -> Result<Self> {
        let scale = m.abs().max();
        if (m[(0, 1)] - m[(1, 0)]).abs() > STRUCTURAL_ZERO * scale {
            return Err(Error::NotPositiveDefinite("matrix is not symmetric".into()));
        }
        if m.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite(
                "Cholesky factorization failed".into(),
            ));
        }
        Ok(Self {
            m,
            alpha: [0.0, 0.0],
        })
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.m
    }

    pub fn alpha_coefficients(&self) -> [f64; 2] {
        self.alpha
    }

    pub fn argmin_eliminated(&self, a: f64, b: f64) -> f64 {
        self.alpha[0] * a + self.alpha[1] * b
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        let m = &self.m;
        m[(0, 0)] * a * a + 2.0 * m[(0, 1)] * a * b + m[(1, 1)] * b * b
    }

    /// `(∂₁Q¹, ∂₂Q¹)` at `(a, b)`.
    pub fn gradient(&self, a: f64, b: f64) -> [f64; 2] {
        let m = &self.m;
        [
            2.0 * (m[(0, 0)] * a + m[(0, 1)] * b),
            2.0 * (m[(1, 0)] * a + m[(1, 1)] * b),
        ]
    }
}

/// Stretching modulus `Q⁰(a) = C⁰ a²` with the argmin `z*(a) = z·a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm0 {
    pub c0: f64,
    pub z: f64,
}

impl QuadForm0 {
    pub fn eval(&self, a: f64) -> f64 {
        self.c0 * a * a
    }

    pub fn argmin_eliminated(&self, a: f64) -> f64 {
        self.z * a
    }
}

pub fn reduce_to_1(q: &QuadForm2) -> Result<QuadForm1> {
    let m = q.matrix();
    let m22 = m[(2, 2)];
    if !(m22 > 0.0) {
        return Err(Error::NotPositiveDefinite("q22 coefficient not positive".into()));
    }
    let schur = Matrix2::new(
        m[(0, 0)] - m[(0, 2)] * m[(2, 0)] / m22,
        m[(0, 1)] - m[(0, 2)] * m[(2, 1)] / m22,
        m[(1, 0)] - m[(1, 2)] * m[(2, 0)] / m22,
        m[(1, 1)] - m[(1, 2)] * m[(2, 1)] / m22,
    );
    let mut out = QuadForm1::new(schur)?;
    out.alpha = [-m[(2, 0)] / m22, -m[(2, 1)] / m22];
    Ok(out)
}

pub fn reduce_to_0(q: &QuadForm1) -> Result<QuadForm0> {
    let m = q.matrix();
    let m11 = m[(1, 1)];
    if !(m11 > 0.0) {
        return Err(Error::NotPositiveDefinite("q12 coefficient not positive".into()));
    }
    let c0 = m[(0, 0)] - m[(0, 1)] * m[(1, 0)] / m11;
    if !(c0 > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("C0 = {c0} not positive")));
    }
    Ok(QuadForm0 {
        c0,
        z: -m[(1, 0)] / m11,
    })
}

/// `Q̄(x) = Q⁰(x₁) + (1/12)Q¹(x₂, x₃)` with symmetric square roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedForm {
    pub matrix: Matrix3<f64>,
    pub sqrt: Matrix3<f64>,
    pub inv_sqrt: Matrix3<f64>,
}

pub fn extended_form(q0: &QuadForm0, q1: &QuadForm1) -> Result<ExtendedForm> {
    let n = q1.matrix();
    let mut matrix = Matrix3::zeros();
    matrix[(0, 0)] = q0.c0;
    for i in 0..2 {
        for j in 0..2 {
            matrix[(i + 1, j + 1)] = n[(i, j)] / 12.0;
        }
    }
    let eig = SymmetricEigen::new(matrix);
    let top = eig.eigenvalues.max();
    if !(top > 0.0) || eig.eigenvalues.min() < 1e-12 * top {
        return Err(Error::NotPositiveDefinite(format!(
            "extended form eigenvalues {:?}",
            eig.eigenvalues.as_slice()
        )));
    }
    let v = eig.eigenvectors;
    let root = Matrix3::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let inv_root = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let sym = |a: Matrix3<f64>| (a + a.transpose()) * 0.5;
    Ok(ExtendedForm {
        matrix,
        sqrt: sym(v * root * v.transpose()),
        inv_sqrt: sym(v * inv_root * v.transpose()),
    })
}

impl ExtendedForm {
    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        x.dot(&(self.matrix * x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H1,
    H2,
    None,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::H1 => "H1",
            Hypothesis::H2 => "H2",
            Hypothesis::None => "none",
        })
    }
}

/// Viscous form, either fixed or the width-indexed family
/// `Q²_{R,ε}(q) = Q¹(q11, q12) + ε·q22²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViscousForm {
    Fixed(QuadForm2),
    Family { base: QuadForm1 },
}

impl ViscousForm {
    pub fn at(&self, eps: f64) -> Result<QuadForm2> {
        match self {
            ViscousForm::Fixed(q) => Ok(*q),
            ViscousForm::Family { base } => {
                if !(eps > 0.0) {
                    return Err(invalid("epsilon", format!("{eps} must be positive")));
                }
                QuadForm2::from_blocks(base, eps)
            }
        }
    }

    /// Form on `(q11, q12)` seen by the ribbon.
    pub fn reduced(&self) -> Result<QuadForm1> {
        match self {
            ViscousForm::Fixed(q) => reduce_to_1(q),
            ViscousForm::Family { base } => Ok(*base),
        }
    }

    /// Whether `Q²_{R,ε}(q11, q12, α) → Q¹_R(q11, q12)` for every `α`.
    pub fn has_vanishing_transverse_limit(&self) -> bool {
        let Ok(limit) = self.reduced() else {
            return false;
        };
        let samples = [
            (1.0, 0.0, 1.0),
            (0.3, -0.7, 2.0),
            (-1.2, 0.4, -3.0),
            (0.0, 1.0, 0.5),
        ];
        samples.iter().all(|&(a, b, alpha)| {
            let target = limit.eval(a, b);
            let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8]
                .iter()
                .map(|&eps| match self.at(eps) {
                    Ok(q) => (q.eval(SymVec::new(a, b, alpha)) - target).abs(),
                    Err(_) => f64::INFINITY,
                })
                .collect();
            let scale = 1.0 + a * a + b * b + alpha * alpha;
            gaps.windows(2).all(|p| p[1] <= p[0] + 1e-15 * scale) && gaps[3] <= 1e-6 * scale
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPair {
    pub elastic: QuadForm2,
    pub viscous: ViscousForm,
    pub hypothesis: Hypothesis,
}

impl MaterialPair {
    pub fn new(elastic: QuadForm2, viscous: ViscousForm) -> Self {
        let hypothesis = classify_hypothesis(&elastic, &viscous);
        Self {
            elastic,
            viscous,
            hypothesis,
        }
    }

    pub fn elastic_reduced(&self) -> Result<(QuadForm1, QuadForm0)> {
        let q1 = reduce_to_1(&self.elastic)?;
        let q0 = reduce_to_0(&q1)?;
        Ok((q1, q0))
    }

    pub fn viscous_reduced(&self) -> Result<(QuadForm1, QuadForm0)> {
        let q1 = self.viscous.reduced()?;
        let q0 = reduce_to_0(&q1)?;
        Ok((q1, q0))
    }
}

fn negligible(x: f64, scale: f64) -> bool {
    x.abs() <= STRUCTURAL_ZERO * scale
}

fn argmins_vanish(q: &QuadForm2) -> bool {
    let scale = q.matrix().abs().max();
    let Ok(q1) = reduce_to_1(q) else {
        return false;
    };
    let [a0, a1] = q1.alpha_coefficients();
    let Ok(q0) = reduce_to_0(&q1) else {
        return false;
    };
    negligible(a0, 1.0) && negligible(a1, 1.0) && negligible(q0.z, 1.0) && scale > 0.0
}

fn twist_argmin_vanishes(q1: &QuadForm1) -> bool {
    reduce_to_0(q1).map(|q0| negligible(q0.z, 1.0)).unwrap_or(false)
}

pub fn classify_hypothesis(elastic: &QuadForm2, viscous: &ViscousForm) -> Hypothesis {
    let viscous_h1 = match viscous {
        ViscousForm::Fixed(q) => argmins_vanish(q),
        ViscousForm::Family { base } => twist_argmin_vanishes(base),
    };
    if argmins_vanish(elastic) && viscous_h1 {
        return Hypothesis::H1;
    }
    let w_twist = reduce_to_1(elastic)
        .map(|q| twist_argmin_vanishes(&q))
        .unwrap_or(false);
    let r_twist = viscous
        .reduced()
        .map(|q| twist_argmin_vanishes(&q))
        .unwrap_or(false);
    if w_twist && r_twist && viscous.has_vanishing_transverse_limit() {
        Hypothesis::H2
    } else {
        Hypothesis::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut a = hi - r * (hi - lo);
        let mut b = lo + r * (hi - lo);
        let (mut fa, mut fb) = (f(a), f(b));
        for _ in 0..200 {
            if fa < fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - r * (hi - lo);
                fa = f(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + r * (hi - lo);
                fb = f(b);
            }
        }
        f(0.5 * (lo + hi))
    }

    #[test]
    fn isotropic_formula_values() {
        let q = QuadForm2::isotropic(1.0, 0.0).unwrap();
        assert_eq!(q.eval(SymVec::new(1.0, 0.0, 0.0)), 2.0);
        assert_eq!(q.eval(SymVec::new(0.0, 1.0, 0.0)), 4.0);
        assert_eq!(q.eval(SymVec::new(0.0, 0.0, 1.0)), 2.0);
        let q = QuadForm2::isotropic(1.0, 1.0).unwrap();
        assert_eq!(q.eval(SymVec::new(1.0, 0.0, 1.0)), 8.0);
    }

    #[test]
    fn isotropic_rejects_indefinite() {
        assert!(QuadForm2::isotropic(1.0, -3.0).is_err());
        assert!(QuadForm2::isotropic(0.0, 1.0).is_err());
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let c = [1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert!(QuadForm2::from_row_major(&c).is_err());
    }

    #[test]
    fn reduce_to_1_isotropic() {
        let q1 = reduce_to_1(&QuadForm2::isotropic(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(q1.eval(1.0, 0.0), 2.0);
        assert_eq!(q1.eval(0.0, 1.0), 4.0);
        assert_eq!(q1.alpha_coefficients(), [0.0, 0.0]);

        let (mu, lambda) = (1.0, 1.0);
        let q2 = QuadForm2::isotropic(mu, lambda).unwrap();
        let q1 = reduce_to_1(&q2).unwrap();
        let closed = 4.0 * mu * (mu + lambda) / (2.0 * mu + lambda);
        assert!((q1.matrix()[(0, 0)] - closed).abs() < 1e-15);
        assert!((q1.matrix()[(1, 1)] - 4.0).abs() < 1e-15);
        assert!((q1.argmin_eliminated(1.0, 0.7) + lambda / (2.0 * mu + lambda)).abs() < 1e-15);
        for &(a, b) in &[(1.0, 0.0), (0.3, -1.1), (-2.0, 0.5)] {
            let oracle = golden_min(|al| q2.eval(SymVec::new(a, b, al)), -20.0, 20.0);
            assert!((q1.eval(a, b) - oracle).abs() < 1e-12 * (1.0 + oracle));
        }
    }

    #[test]
    fn reduce_identity() {
        let q2 = QuadForm2::new(Matrix3::identity()).unwrap();
        let q1 = reduce_to_1(&q2).unwrap();
        assert_eq!(*q1.matrix(), Matrix2::identity());
        assert_eq!(reduce_to_0(&q1).unwrap().c0, 1.0);
    }

    #[test]
    fn reduce_to_0_against_nested_minimization() {
        let q2 = QuadForm2::isotropic(1.0, 1.0).unwrap();
        let q0 = reduce_to_0(&reduce_to_1(&q2).unwrap()).unwrap();
        let oracle = golden_min(
            |z| golden_min(|al| q2.eval(SymVec::new(1.0, z, al)), -20.0, 20.0),
            -20.0,
            20.0,
        );
        assert!((q0.c0 - 8.0 / 3.0).abs() < 1e-14);
        assert!((q0.c0 - oracle).abs() < 1e-10);
        assert_eq!(q0.z, 0.0);
        let q0 = reduce_to_0(&reduce_to_1(&QuadForm2::isotropic(1.0, 0.0).unwrap()).unwrap())
            .unwrap();
        assert_eq!(q0.c0, 2.0);
    }

    #[test]
    fn extended_form_values() {
        let q1 = QuadForm1::new(Matrix2::identity()).unwrap();
        let e = extended_form(&QuadForm0 { c0: 1.0, z: 0.0 }, &q1).unwrap();
        assert_eq!(e.matrix, Matrix3::from_diagonal(&Vector3::new(1.0, 1.0 / 12.0, 1.0 / 12.0)));

        let q1 = reduce_to_1(&QuadForm2::isotropic(1.0, 1.0).unwrap()).unwrap();
        let q0 = reduce_to_0(&q1).unwrap();
        let e = extended_form(&q0, &q1).unwrap();
        let expect = Matrix3::from_diagonal(&Vector3::new(8.0 / 3.0, 2.0 / 9.0, 1.0 / 3.0));
        assert!((e.matrix - expect).abs().max() < 1e-15);
        assert!((e.sqrt * e.inv_sqrt - Matrix3::identity()).abs().max() < 1e-12);
        assert!((e.sqrt * e.sqrt - e.matrix).abs().max() < 1e-12 * e.matrix.abs().max());
    }

    #[test]
    fn dq1_values() {
        let id = QuadForm1::new(Matrix2::identity()).unwrap();
        assert_eq!(id.gradient(1.0, 2.0), [2.0, 4.0]);
        assert_eq!(id.gradient(0.0, 0.0), [0.0, 0.0]);
        let q1 = reduce_to_1(&QuadForm2::isotropic(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(q1.gradient(1.0, 0.0), [4.0, 0.0]);
    }

    #[test]
    fn classification_examples() {
        let w0 = QuadForm2::isotropic(1.0, 0.0).unwrap();
        let r0 = QuadForm2::isotropic(2.0, 0.0).unwrap();
        assert_eq!(classify_hypothesis(&w0, &ViscousForm::Fixed(r0)), Hypothesis::H1);

        let w = QuadForm2::isotropic(1.0, 1.0).unwrap();
        let base = reduce_to_1(&QuadForm2::isotropic(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(
            classify_hypothesis(&w, &ViscousForm::Family { base }),
            Hypothesis::H2
        );
        assert_eq!(
            classify_hypothesis(&w, &ViscousForm::Fixed(QuadForm2::isotropic(1.0, 1.0).unwrap())),
            Hypothesis::None
        );
    }

    #[test]
    fn family_form_limit() {
        let base = reduce_to_1(&QuadForm2::isotropic(1.0, 1.0).unwrap()).unwrap();
        let fam = ViscousForm::Family { base };
        assert!(fam.has_vanishing_transverse_limit());
        let fixed = ViscousForm::Fixed(QuadForm2::isotropic(1.0, 1.0).unwrap());
        assert!(!fixed.has_vanishing_transverse_limit());
        assert!(fam.at(0.0).is_err());
    }
}
