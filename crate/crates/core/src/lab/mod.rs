//! Refinement studies and consistency checks relating the discrete plate and
//! ribbon flows.
//!
//! Every study returns a [`StudyReport`] of raw numeric tables plus order fits
//! that can be recomputed from those tables alone.

mod checks;
mod studies;

pub use checks::{
    decoupling_checks, geodesic_convexity_check, random_ribbon_state, slope_consistency,
    ConvexityCalibration,
};
pub use studies::{commutativity_report, epsilon_study, gamma_check, tau_study};

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::fem::{BoundaryData, Mesh1D, Mesh2D, Poly};
use crate::forms::{Hypothesis, MaterialPair};
use crate::linalg::{dot, BandMatrix};
use crate::movements::{SolverOptions, Trajectory};
use crate::plate::{build_recovery, PlateForces, PlateModel, RecoveryInputs};
use crate::ribbon::{RibbonForces, RibbonModel};

/// Fractions of the horizon at which trajectories are compared.
pub const SAMPLE_FRACTIONS: [f64; 4] = [0.1, 0.25, 0.5, 1.0];

/// Number of trailing sweep points used by [`fit_order`].
pub const FIT_POINTS: usize = 3;

/// Polynomial data for the four ribbon fields `(ξ₁, ξ₂, w, θ)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldPolys {
    pub xi1: Poly,
    pub xi2: Poly,
    pub w: Poly,
    pub theta: Poly,
}

/// Everything a study needs to build matching ribbon and plate problems.
#[derive(Debug, Clone)]
pub struct Problem {
    pub length: f64,
    pub material: MaterialPair,
    pub boundary: BoundaryData,
    pub forces: RibbonForces,
    pub initial: FieldPolys,
    /// Elements of a standalone ribbon run.
    pub n1d: usize,
    /// Plate elements along and across the strip; the ribbon compared with a
    /// plate uses `nx` elements so that both share the mesh along `I`.
    pub nx: usize,
    pub ny: usize,
    pub quad_points: usize,
    pub solver: SolverOptions,
    /// Width of the end layers of the recovery corrections.
    pub cutoff_width: f64,
}

impl Problem {
    /// Defaults for everything but the material: unit length, zero data,
    /// 64 elements in 1D, a 64 × 8 plate mesh.
    pub fn new(material: MaterialPair) -> Self {
        Self {
            length: 1.0,
            material,
            boundary: BoundaryData::zero(),
            forces: RibbonForces::default(),
            initial: FieldPolys::default(),
            n1d: 64,
            nx: 64,
            ny: 8,
            quad_points: 5,
            solver: SolverOptions::default(),
            cutoff_width: 0.1,
        }
    }

    pub fn ribbon_with(&self, elements: usize) -> Result<RibbonModel> {
        RibbonModel::new(
            Mesh1D::new(self.length, elements)?,
            &self.material,
            self.boundary.clone(),
            self.forces.clone(),
            self.quad_points,
        )
    }

    /// Ribbon on `n1d` elements.
    pub fn ribbon(&self) -> Result<RibbonModel> {
        self.ribbon_with(self.n1d)
    }

    /// Ribbon on the plate's mesh along the strip.
    pub fn matched_ribbon(&self) -> Result<RibbonModel> {
        self.ribbon_with(self.nx)
    }

    pub fn plate(&self, eps: f64) -> Result<PlateModel> {
        PlateModel::new(
            Mesh2D::new(self.length, self.nx, self.ny)?,
            eps,
            &self.material,
            self.boundary.clone(),
            PlateForces::from_ribbon(&self.forces, eps),
            self.quad_points,
        )
    }

    pub fn interpolate(&self, ribbon: &RibbonModel, p: &FieldPolys) -> Result<Vec<f64>> {
        ribbon.interpolate(&p.xi1, &p.xi2, &p.w, &p.theta)
    }

    pub fn initial_ribbon(&self, ribbon: &RibbonModel) -> Result<Vec<f64>> {
        self.interpolate(ribbon, &self.initial)
    }

    /// Plate state recovering the ribbon state `target`, so that plate
    /// energies approach the ribbon energy as the width shrinks.
    pub fn recover(&self, plate: &PlateModel, ribbon: &RibbonModel, target: &[f64]) -> Result<Vec<f64>> {
        build_recovery(
            &RecoveryInputs {
                ribbon,
                target,
                cutoff_width: self.cutoff_width * self.length,
            },
            plate,
        )
    }

    /// The plate-to-ribbon evolution is only claimed under (H1) or (H2).
    pub fn require_hypothesis(&self) -> Result<()> {
        match self.material.hypothesis {
            Hypothesis::None => Err(Error::HypothesisRequired),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StudyKind {
    Tau,
    Epsilon,
    Commutativity,
    Gamma,
    GeodesicConvexity,
    Slope,
    Decoupling,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Tau => "tau_study",
            StudyKind::Epsilon => "epsilon_study",
            StudyKind::Commutativity => "commutativity",
            StudyKind::Gamma => "gamma_check",
            StudyKind::GeodesicConvexity => "geodesic_convexity",
            StudyKind::Slope => "slope_consistency",
            StudyKind::Decoupling => "decoupling",
        }
    }
}

/// Numeric table; missing entries are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column, in row order.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let k = self
            .column_index(name)
            .unwrap_or_else(|| panic!("table `{}` has no column `{name}`", self.name));
        self.rows.iter().map(|r| r[k]).collect()
    }

    /// Rows whose `key` column equals `value` exactly.
    pub fn select(&self, key: &str, value: f64) -> Table {
        let k = self
            .column_index(key)
            .unwrap_or_else(|| panic!("table `{}` has no column `{key}`", self.name));
        Table {
            name: self.name.clone(),
            columns: self.columns.clone(),
            rows: self.rows.iter().filter(|r| r[k] == value).cloned().collect(),
        }
    }

    /// Header plus rows; values print in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Least-squares slope of `log y` against `log x` over the last
/// [`FIT_POINTS`] rows of `table` where `key == key_value` (all rows without a key).
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub label: String,
    pub table: String,
    pub x: String,
    pub y: String,
    pub key: Option<(String, f64)>,
    /// `None` when fewer than two usable points remain.
    pub order: Option<f64>,
}

impl OrderFit {
    pub fn compute(label: &str, table: &Table, x: &str, y: &str, key: Option<(&str, f64)>) -> Self {
        let view = match key {
            Some((k, v)) => table.select(k, v),
            None => table.clone(),
        };
        let order = fit_order(&view.column(x), &view.column(y));
        Self {
            label: label.to_string(),
            table: table.name.clone(),
            x: x.to_string(),
            y: y.to_string(),
            key: key.map(|(k, v)| (k.to_string(), v)),
            order,
        }
    }
}

/// Slope of the log-log least-squares line through the last [`FIT_POINTS`]
/// pairs; `None` if fewer than two pairs or any value is not positive.
pub fn fit_order(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "fit data of unequal length");
    let start = x.len().saturating_sub(FIT_POINTS);
    let pts: Vec<(f64, f64)> = x[start..]
        .iter()
        .zip(&y[start..])
        .map(|(a, b)| (*a, *b))
        .collect();
    if pts.len() < 2 || pts.iter().any(|(a, b)| !(*a > 0.0 && *b > 0.0)) {
        return None;
    }
    let n = pts.len() as f64;
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub tables: Vec<Table>,
    pub fits: Vec<OrderFit>,
    /// Named scalar results.
    pub metrics: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl StudyReport {
    pub fn new(kind: StudyKind) -> Self {
        Self {
            kind,
            tables: Vec::new(),
            fits: Vec::new(),
            metrics: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> &Table {
        self.tables
            .iter()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("{} has no table `{name}`", self.kind.name()))
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn fit(&self, label: &str) -> Option<&OrderFit> {
        self.fits.iter().find(|f| f.label == label)
    }

    pub(crate) fn metric_push(&mut self, name: &str, value: f64) {
        self.metrics.push((name.to_string(), value));
    }

    /// `label,table,x,y,key,key_value,order`.
    pub fn fits_csv(&self) -> String {
        let mut s = String::from("label,table,x,y,key,key_value,order\n");
        for f in &self.fits {
            let (k, v) = match &f.key {
                Some((k, v)) => (k.as_str(), format!("{v}")),
                None => ("", String::new()),
            };
            let order = f.order.map(|o| format!("{o}")).unwrap_or_else(|| "NaN".into());
            let _ = writeln!(s, "{},{},{},{},{},{},{}", f.label, f.table, f.x, f.y, k, v, order);
        }
        s
    }

    /// `name,value`.
    pub fn metrics_csv(&self) -> String {
        let mut s = String::from("name,value\n");
        for (k, v) in &self.metrics {
            let _ = writeln!(s, "{k},{v}");
        }
        s
    }
}

/// Step statistics of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub newton_iterations: usize,
    /// Largest `φ(Uⁿ) + D²/2τ − φ(Uⁿ⁻¹)`.
    pub max_energy_gap: f64,
    /// Largest weak-residual norm relative to the step's solver tolerance.
    pub max_residual_ratio: f64,
    pub max_kkt_mismatch: f64,
}

impl RunSummary {
    pub fn of(traj: &Trajectory) -> Self {
        let mut s = Self {
            steps: traj.steps(),
            newton_iterations: 0,
            max_energy_gap: f64::NEG_INFINITY,
            max_residual_ratio: f64::NAN,
            max_kkt_mismatch: f64::NAN,
        };
        for r in &traj.reports {
            s.newton_iterations += r.iterations;
            s.max_energy_gap = s.max_energy_gap.max(r.energy_inequality_gap);
            if let Some(n) = r.residual_norm {
                s.max_residual_ratio = s.max_residual_ratio.max(n / r.tolerance);
            }
            if let Some(k) = r.kkt_mismatch {
                s.max_kkt_mismatch = s.max_kkt_mismatch.max(k);
            }
        }
        s
    }
}

/// Summaries of the compactness variables of a plate state: the fields
/// `γ = ε⁻²∂₂₂w`, `E₁₂ = (Eᵉy)₁₂`, `E₂₂ = (Eᵉy)₂₂` and their `x₂`-averages,
/// as `L²(S)` norms. Reported, never compared with a limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionDiag {
    pub gamma: f64,
    pub e12: f64,
    pub e22: f64,
    pub gamma_avg: f64,
    pub e12_avg: f64,
    pub e22_avg: f64,
}

impl ProjectionDiag {
    pub fn of(plate: &PlateModel, u: &[f64]) -> Result<Self> {
        let mesh = plate.mesh();
        let (nx, ny) = (mesh.x.elements(), mesh.y.elements());
        let rule = plate.rule();
        let nq = rule.len();
        let mut sq = [0.0; 3];
        let mut avg_sq = [0.0; 3];
        for ex in 0..nx {
            // Column sums `∫ field dx₂` at each quadrature abscissa of the column.
            let mut column = vec![[0.0; 3]; nq];
            let mut dx1 = vec![0.0; nq];
            for ey in 0..ny {
                let e = ex * ny + ey;
                let pts = plate.quadrature_points(e);
                let coords: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, p.1)).collect();
                let samples = plate.scaled_at(u, &coords)?;
                for (k, (s, p)) in samples.iter().zip(&pts).enumerate() {
                    let vals = [s.hessian[2], s.strain[1], s.strain[2]];
                    let (q1, q2) = (k / nq, k % nq);
                    let wy = rule.weights[q2] * mesh.y.h();
                    dx1[q1] = rule.weights[q1] * mesh.x.h();
                    for j in 0..3 {
                        sq[j] += p.2 * vals[j] * vals[j];
                        column[q1][j] += wy * vals[j];
                    }
                }
            }
            for q1 in 0..nq {
                for j in 0..3 {
                    avg_sq[j] += dx1[q1] * column[q1][j] * column[q1][j];
                }
            }
        }
        let r = |v: f64| v.max(0.0).sqrt();
        Ok(Self {
            gamma: r(sq[0]),
            e12: r(sq[1]),
            e22: r(sq[2]),
            gamma_avg: r(avg_sq[0]),
            e12_avg: r(avg_sq[1]),
            e22_avg: r(avg_sq[2]),
        })
    }
}

/// Extreme eigenvalue estimates of a symmetric matrix restricted to the free
/// DOFs, by power and inverse iteration from a fixed start.
pub fn extreme_eigenvalues(m: &BandMatrix, constrained: &[bool], iterations: usize) -> Result<(f64, f64)> {
    let n = m.dim();
    let start: Vec<f64> = (0..n)
        .map(|i| if constrained[i] { 0.0 } else { 1.0 + 0.5 * ((i * 7919) % 13) as f64 / 13.0 })
        .collect();
    let normalize = |v: &mut Vec<f64>| {
        for (x, c) in v.iter_mut().zip(constrained) {
            if *c {
                *x = 0.0;
            }
        }
        let s = dot(v, v).sqrt();
        if s > 0.0 {
            v.iter_mut().for_each(|x| *x /= s);
        }
    };
    let rayleigh = |apply: &dyn Fn(&[f64]) -> Vec<f64>| {
        let mut v = start.clone();
        normalize(&mut v);
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let mut next = apply(&v);
            normalize(&mut next);
            let av = apply(&next);
            lambda = (0..n).filter(|i| !constrained[*i]).map(|i| next[i] * av[i]).sum();
            v = next;
        }
        lambda
    };
    let largest = rayleigh(&|v| m.mul_vec(v));
    let f = m.ldlt()?;
    let inverse = rayleigh(&|v| f.solve(v));
    if inverse == 0.0 {
        return Err(invalid("hessian", "inverse iteration produced a zero Rayleigh quotient"));
    }
    Ok((1.0 / inverse, largest))
}

/// Sample times `0` and `fraction·T`.
pub fn sample_times(horizon: f64) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(SAMPLE_FRACTIONS.iter().map(|f| f * horizon))
        .collect()
}
