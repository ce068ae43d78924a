//! Scenario files: TOML with fixed sections, unknown keys rejected and every
//! validation error naming the offending key path.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{BoundaryData, Poly};
use crate::forms::{reduce_to_1, MaterialPair, QuadForm2, ViscousForm};
use crate::lab::{FieldPolys, Problem};
use crate::movements::SolverOptions;
use crate::ribbon::RibbonForces;

fn config(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    pub length: f64,
    /// Plate width of single plate runs.
    pub eps: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { length: 1.0, eps: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub n1d: usize,
    pub nx: usize,
    pub ny: usize,
    pub quad_points: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            n1d: 64,
            nx: 64,
            ny: 8,
            quad_points: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub tau: f64,
    pub horizon: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { tau: 0.01, horizon: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_newton: usize,
    pub armijo: f64,
    pub max_halvings: usize,
    pub gradient_fallback: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tol: d.tol,
            max_newton: d.max_newton,
            armijo: d.armijo,
            max_halvings: d.max_halvings,
            gradient_fallback: d.gradient_fallback,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    Isotropic,
    Matrix,
}

/// How the viscous form depends on the width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscousKind {
    /// The same form for every `ε`.
    #[default]
    Fixed,
    /// `Q¹_R(q11, q12) + ε·q22²` with `Q¹_R` reduced from the given form.
    H2Family,
}

/// Either the isotropic moduli or both 3×3 matrices (row major, in the basis
/// `(q11, q12, q22)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct MaterialConfig {
    pub kind: MaterialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_W: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_W: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_R: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_R: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub CW: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub CR: Option<Vec<f64>>,
    #[serde(default)]
    pub viscous: ViscousKind,
}

impl MaterialConfig {
    pub fn isotropic(mu_w: f64, lambda_w: f64, mu_r: f64, lambda_r: f64) -> Self {
        Self {
            kind: MaterialKind::Isotropic,
            mu_W: Some(mu_w),
            lambda_W: Some(lambda_w),
            mu_R: Some(mu_r),
            lambda_R: Some(lambda_r),
            CW: None,
            CR: None,
            viscous: ViscousKind::Fixed,
        }
    }

    fn isotropic_form(mu: Option<f64>, lambda: Option<f64>, side: char) -> Result<QuadForm2> {
        let mu_key = format!("material.mu_{side}");
        let lambda_key = format!("material.lambda_{side}");
        let mu = mu.ok_or_else(|| config(&mu_key, "required for an isotropic material"))?;
        let lambda = lambda.ok_or_else(|| config(&lambda_key, "required for an isotropic material"))?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(config(&mu_key, format!("{mu} must be a positive number")));
        }
        QuadForm2::isotropic(mu, lambda).map_err(|e| config(&lambda_key, e.to_string()))
    }

    fn matrix_form(c: &Option<Vec<f64>>, side: char) -> Result<QuadForm2> {
        let key = format!("material.C{side}");
        let c = c.as_ref().ok_or_else(|| config(&key, "required for a matrix material"))?;
        let entries: [f64; 9] = c
            .as_slice()
            .try_into()
            .map_err(|_| config(&key, format!("expected 9 entries, found {}", c.len())))?;
        QuadForm2::from_row_major(&entries).map_err(|e| config(&key, e.to_string()))
    }

    pub fn build(&self) -> Result<MaterialPair> {
        let stray = |present: bool, key: &str| {
            if present {
                Err(config(key, format!("not allowed for kind = {:?}", self.kind).to_lowercase()))
            } else {
                Ok(())
            }
        };
        let (elastic, viscous) = match self.kind {
            MaterialKind::Isotropic => {
                stray(self.CW.is_some(), "material.CW")?;
                stray(self.CR.is_some(), "material.CR")?;
                (
                    Self::isotropic_form(self.mu_W, self.lambda_W, 'W')?,
                    Self::isotropic_form(self.mu_R, self.lambda_R, 'R')?,
                )
            }
            MaterialKind::Matrix => {
                for (present, key) in [
                    (self.mu_W.is_some(), "material.mu_W"),
                    (self.lambda_W.is_some(), "material.lambda_W"),
                    (self.mu_R.is_some(), "material.mu_R"),
                    (self.lambda_R.is_some(), "material.lambda_R"),
                ] {
                    stray(present, key)?;
                }
                (Self::matrix_form(&self.CW, 'W')?, Self::matrix_form(&self.CR, 'R')?)
            }
        };
        let viscous = match self.viscous {
            ViscousKind::Fixed => ViscousForm::Fixed(viscous),
            ViscousKind::H2Family => ViscousForm::Family {
                base: reduce_to_1(&viscous).map_err(|e| config("material.viscous", e.to_string()))?,
            },
        };
        Ok(MaterialPair::new(elastic, viscous))
    }
}

/// Boundary data along `I` as ascending polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundaryConfig {
    pub u1hat: Poly,
    pub u2hat: Poly,
    pub vhat: Poly,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcesConfig {
    pub f: Poly,
    pub g1: Poly,
    pub g2: Poly,
}

/// Ribbon fields as polynomials, already matching the boundary data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub xi1: Poly,
    pub xi2: Poly,
    pub w: Poly,
    pub theta: Poly,
}

impl FieldConfig {
    pub fn polys(&self) -> FieldPolys {
        FieldPolys {
            xi1: self.xi1.clone(),
            xi2: self.xi2.clone(),
            w: self.w.clone(),
            theta: self.theta.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    /// Width sweep of the plate studies.
    pub eps: Vec<f64>,
    /// Halving time-step sequence of the refinement studies.
    pub taus: Vec<f64>,
    /// Width of the end layers of the recovery corrections, relative to `l`.
    pub cutoff_width: f64,
    /// Recovery targets of `gamma-check`; the initial condition when empty.
    pub targets: Vec<FieldConfig>,
    /// Sampled pairs of the geodesic calibration.
    pub pairs: usize,
    /// Coefficient bound and degree of the random bubble modulation.
    pub amplitude: f64,
    pub degree: usize,
    /// Multiplies the end bubble in the deflection perturbation of the twist check.
    pub w_perturbation: Poly,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.2, 0.1, 0.05],
            taus: vec![0.08, 0.04, 0.02, 0.01],
            cutoff_width: 0.1,
            targets: Vec::new(),
            pairs: 1000,
            amplitude: 0.5,
            degree: 0,
            w_perturbation: Poly::new([1.0]),
        }
    }
}

/// One scenario file. Only `[material]` is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub material: MaterialConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub forces: ForcesConfig,
    #[serde(default)]
    pub initial: FieldConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub study: StudyConfig,
}

/// Name of the `[table]` whose body contains byte `offset`.
fn enclosing_table(text: &str, offset: usize) -> String {
    text[..offset.min(text.len())]
        .lines()
        .filter_map(|l| {
            let l = l.trim();
            l.strip_prefix('[').and_then(|r| r.split(']').next()).map(|n| n.trim_start_matches('[').trim().to_string())
        })
        .last()
        .unwrap_or_default()
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config(key, format!("{v} must be a positive number")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(config(key, format!("{v} is below the minimum {min}")))
    }
}

impl Scenario {
    pub fn new(material: MaterialConfig) -> Self {
        Self {
            geometry: Geometry::default(),
            mesh: MeshConfig::default(),
            time: TimeConfig::default(),
            solver: SolverConfig::default(),
            material,
            boundary: BoundaryConfig::default(),
            forces: ForcesConfig::default(),
            initial: FieldConfig::default(),
            output: OutputConfig::default(),
            study: StudyConfig::default(),
        }
    }

    /// Parses and validates; the error names the key path at fault.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| {
            let section = e.span().map(|r| enclosing_table(text, r.start)).unwrap_or_default();
            let field = e.message().split('`').nth(1).unwrap_or("");
            let key = match (section.is_empty(), field.is_empty()) {
                (_, true) if section.is_empty() => "<document>".to_string(),
                (_, true) => section,
                (true, false) => field.to_string(),
                (false, false) => format!("{section}.{field}"),
            };
            config(&key, e.message().to_string())
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("geometry.length", self.geometry.length)?;
        positive("geometry.eps", self.geometry.eps)?;
        at_least("mesh.n1d", self.mesh.n1d, 1)?;
        at_least("mesh.nx", self.mesh.nx, 1)?;
        at_least("mesh.ny", self.mesh.ny, 1)?;
        at_least("mesh.quad_points", self.mesh.quad_points, 2)?;
        positive("time.tau", self.time.tau)?;
        positive("time.horizon", self.time.horizon)?;
        self.solver_options()
            .validate()
            .map_err(|e| match e {
                Error::InvalidParameter { name, reason } => config(&name, reason),
                other => other,
            })?;
        self.material.build()?;
        for (k, e) in self.study.eps.iter().enumerate() {
            positive(&format!("study.eps[{k}]"), *e)?;
        }
        for (k, t) in self.study.taus.iter().enumerate() {
            positive(&format!("study.taus[{k}]"), *t)?;
        }
        positive("study.cutoff_width", self.study.cutoff_width)?;
        if self.study.cutoff_width >= 0.5 {
            return Err(config("study.cutoff_width", "end layers must not overlap (needs < 0.5)"));
        }
        at_least("study.pairs", self.study.pairs, 1)?;
        positive("study.amplitude", self.study.amplitude)?;
        Ok(())
    }

    /// Every value as a flat `section.key` pair, in file order.
    pub fn echo(&self) -> Vec<(String, String)> {
        fn walk(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
            match v {
                toml::Value::Table(t) => {
                    for (k, v) in t {
                        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                        walk(&key, v, out);
                    }
                }
                other => out.push((prefix.to_string(), other.to_string())),
            }
        }
        let value = toml::Value::try_from(self).expect("scenario serializes");
        let mut out = Vec::new();
        walk("", &value, &mut out);
        out
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_newton: self.solver.max_newton,
            armijo: self.solver.armijo,
            max_halvings: self.solver.max_halvings,
            gradient_fallback: self.solver.gradient_fallback,
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        let mut p = Problem::new(self.material.build()?);
        p.length = self.geometry.length;
        p.boundary = BoundaryData {
            u1hat: self.boundary.u1hat.clone(),
            u2hat: self.boundary.u2hat.clone(),
            vhat: self.boundary.vhat.clone(),
        };
        p.forces = RibbonForces {
            f: self.forces.f.clone(),
            g1: self.forces.g1.clone(),
            g2: self.forces.g2.clone(),
        };
        p.initial = self.initial.polys();
        p.n1d = self.mesh.n1d;
        p.nx = self.mesh.nx;
        p.ny = self.mesh.ny;
        p.quad_points = self.mesh.quad_points;
        p.solver = self.solver_options();
        p.cutoff_width = self.study.cutoff_width;
        Ok(p)
    }

    /// Targets of the recovery check, defaulting to the initial condition.
    pub fn targets(&self) -> Vec<FieldPolys> {
        if self.study.targets.is_empty() {
            vec![self.initial.polys()]
        } else {
            self.study.targets.iter().map(FieldConfig::polys).collect()
        }
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_toml_str(&text)
}
