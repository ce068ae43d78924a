use rand::Rng;

use super::{FieldPolys, Problem, StudyKind, StudyReport, Table};
use crate::error::{invalid, Error, Result};
use crate::fem::{BoundaryData, Poly};
use crate::forms::Hypothesis;
use crate::movements::{run_trajectory, Trajectory};
use crate::ribbon::{local_slope_1d, RibbonForces, RibbonModel};

/// `(x² − l²/4)²`: vanishes with its slope at both ends.
fn bubble(length: f64) -> Poly {
    let b = Poly::new([-0.25 * length * length, 0.0, 1.0]);
    b.mul(&b)
}

/// Admissible ribbon state: the boundary lift plus the end bubble times a
/// random polynomial of degree `degree` per field, coefficients uniform in
/// `±amplitude`.
pub fn random_ribbon_state(
    model: &RibbonModel,
    rng: &mut impl Rng,
    amplitude: f64,
    degree: usize,
) -> Result<Vec<f64>> {
    let b = bubble(model.mesh().length());
    let mut factor = || {
        let c: Vec<f64> = (0..=degree).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect();
        b.mul(&Poly::new(c))
    };
    let bd = model.boundary();
    let (a, c, d, e) = (factor(), factor(), factor(), factor());
    model.interpolate(&bd.u1hat.add(&a), &bd.u2hat.add(&c), &bd.vhat.add(&d), &e)
}

/// Outcome of calibrating the constant of the generalized-geodesic inequalities
///
/// (i)  `D₀(u₀, u_s) ≤ s·Φ¹(D₀(u₀, u₁))`, `Φ¹(t) = √(t² + Ct³ + Ct⁴)`,
/// (ii) `φ₀(u_s) ≤ (1−s)φ₀(u₀) + sφ₀(u₁) + sΦ²_M(D₀(u₀, u₁))`,
///      `Φ²_M(t) = C√M·t² + Ct³ + Ct⁴`,
///
/// along the segments `u_s = (1−s)u₀ + su₁`.
#[derive(Debug, Clone)]
pub struct ConvexityCalibration {
    /// Smallest `C` found by bisection.
    pub constant: f64,
    /// The same constant as the maximum of the per-sample requirements.
    pub closed_form: f64,
    /// Sublevel bound: the largest energy in the `u₀` pool.
    pub level: f64,
    pub pairs: usize,
    /// Fraction of samples satisfying both inequalities with `C = 0`.
    pub pass_rate_at_zero: f64,
    pub report: StudyReport,
}

struct Sample {
    s: f64,
    d: f64,
    /// `D₀(u₀, u_s)²`.
    ds2: f64,
    /// `φ₀(u_s) − (1−s)φ₀(u₀) − sφ₀(u₁)`.
    excess: f64,
    /// Roundoff allowance of the energy comparison.
    energy_slack: f64,
}

const S_VALUES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const RELATIVE_SLACK: f64 = 1e-12;

impl Sample {
    fn metric_slack(&self) -> f64 {
        RELATIVE_SLACK * (self.ds2 + self.s * self.s * self.d * self.d)
    }

    fn holds(&self, c: f64, level: f64) -> bool {
        let (s, d) = (self.s, self.d);
        let metric = self.ds2 <= s * s * (d * d + c * (d.powi(3) + d.powi(4))) + self.metric_slack();
        let energy =
            self.excess <= s * c * (level.sqrt() * d * d + d.powi(3) + d.powi(4)) + self.energy_slack;
        metric && energy
    }

    /// Smallest `C ≥ 0` for which [`Self::holds`] is true.
    fn required(&self, level: f64) -> f64 {
        let (s, d) = (self.s, self.d);
        let need = |lhs: f64, denom: f64| {
            if lhs <= 0.0 {
                0.0
            } else if denom > 0.0 {
                lhs / denom
            } else {
                f64::INFINITY
            }
        };
        let metric = need(
            self.ds2 - s * s * d * d - self.metric_slack(),
            s * s * (d.powi(3) + d.powi(4)),
        );
        let energy = need(
            self.excess - self.energy_slack,
            s * (level.sqrt() * d * d + d.powi(3) + d.powi(4)),
        );
        metric.max(energy)
    }
}

/// Samples `pairs` pairs from the pools with the given RNG, evaluates both
/// inequalities at `s ∈ {0.1, …, 0.9}` and calibrates `C` by bisection.
pub fn geodesic_convexity_check(
    model: &RibbonModel,
    start_pool: &[Vec<f64>],
    end_pool: &[Vec<f64>],
    pairs: usize,
    rng: &mut impl Rng,
) -> Result<ConvexityCalibration> {
    if start_pool.is_empty() || end_pool.is_empty() {
        return Err(invalid("pool", "both state pools must be nonempty"));
    }
    if pairs == 0 {
        return Err(invalid("pairs", "must be at least 1"));
    }
    let start_energy: Vec<f64> = start_pool.iter().map(|u| model.energy(u)).collect();
    let end_energy: Vec<f64> = end_pool.iter().map(|u| model.energy(u)).collect();
    let level = start_energy.iter().cloned().fold(0.0, f64::max);

    let mut table = Table::new(
        "samples",
        &["pair", "s", "distance", "segment_distance", "energy_excess", "required_c"],
    );
    let mut samples = Vec::with_capacity(pairs * S_VALUES.len());
    for p in 0..pairs {
        let i = rng.gen_range(0..start_pool.len());
        let j = rng.gen_range(0..end_pool.len());
        let (u0, u1) = (&start_pool[i], &end_pool[j]);
        let d = model.sqdist(u0, u1).sqrt();
        for &s in &S_VALUES {
            let us: Vec<f64> = u0.iter().zip(u1).map(|(a, b)| a + s * (b - a)).collect();
            let es = model.energy(&us);
            let sample = Sample {
                s,
                d,
                ds2: model.sqdist(u0, &us),
                excess: es - (1.0 - s) * start_energy[i] - s * end_energy[j],
                energy_slack: RELATIVE_SLACK
                    * (es.abs() + start_energy[i].abs() + end_energy[j].abs()),
            };
            table.push(vec![
                p as f64,
                s,
                d,
                sample.ds2.sqrt(),
                sample.excess,
                sample.required(level),
            ]);
            samples.push(sample);
        }
    }

    let closed_form = samples.iter().map(|x| x.required(level)).fold(0.0, f64::max);
    if !closed_form.is_finite() {
        return Err(Error::Mismatch(
            "a sampled segment violates the inequalities at zero distance".into(),
        ));
    }
    let all = |c: f64| samples.iter().all(|x| x.holds(c, level));
    let constant = if all(0.0) {
        0.0
    } else {
        let mut hi = 1.0;
        let mut doublings = 0;
        while !all(hi) {
            hi *= 2.0;
            doublings += 1;
            if doublings > 2000 {
                return Err(Error::Mismatch("no finite constant satisfies the inequalities".into()));
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if all(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let pass_rate_at_zero =
        samples.iter().filter(|x| x.holds(0.0, level)).count() as f64 / samples.len() as f64;

    let mut report = StudyReport::new(StudyKind::GeodesicConvexity);
    report.tables.push(table);
    report.metric_push("level", level);
    report.metric_push("constant_bisection", constant);
    report.metric_push("constant_closed_form", closed_form);
    report.metric_push("pass_rate_at_zero", pass_rate_at_zero);
    Ok(ConvexityCalibration {
        constant,
        closed_form,
        level,
        pairs,
        pass_rate_at_zero,
        report,
    })
}

/// Per step: `|∂φ₀|²(Uⁿ)` by the direct solve, `(D₀(Uⁿ, Uⁿ⁻¹)/τ)²`, and the
/// squared representation value.
pub fn slope_consistency(model: &RibbonModel, traj: &Trajectory) -> Result<StudyReport> {
    let mut table = Table::new(
        "steps",
        &[
            "n",
            "t",
            "slope_sq",
            "rate_sq",
            "representation_sq",
            "ratio",
            "representation_rel_diff",
            "orthogonality",
        ],
    );
    let mut worst_ratio = 0.0_f64;
    let mut worst_rep = 0.0_f64;
    for n in 1..traj.states.len() {
        let sol = local_slope_1d(model, &traj.states[n])?;
        let rate = traj.reports[n - 1].step_dist / traj.tau;
        let (s2, r2) = (sol.slope * sol.slope, rate * rate);
        let ratio = match (s2 == 0.0, r2 == 0.0) {
            (true, true) => 0.0,
            (false, true) => f64::INFINITY,
            _ => s2 / r2,
        };
        let rep_diff = if sol.slope == 0.0 && sol.representation == 0.0 {
            0.0
        } else {
            (sol.representation - sol.slope).abs() / sol.slope.max(sol.representation)
        };
        if r2 > 0.0 {
            worst_ratio = worst_ratio.max((ratio - 1.0).abs());
        }
        worst_rep = worst_rep.max(rep_diff);
        table.push(vec![
            n as f64,
            n as f64 * traj.tau,
            s2,
            r2,
            sol.representation * sol.representation,
            ratio,
            rep_diff,
            sol.orthogonality,
        ]);
    }
    let mut report = StudyReport::new(StudyKind::Slope);
    report.tables.push(table);
    report.metric_push("max_ratio_deviation", worst_ratio);
    report.metric_push("max_representation_rel_diff", worst_rep);
    Ok(report)
}

fn max_field_gap(model: &RibbonModel, field: usize, a: &Trajectory, b: &Trajectory, n: usize) -> f64 {
    let dofs = model.layout().field(field);
    dofs.iter()
        .map(|&i| (a.states[n][i] - b.states[n][i]).abs())
        .fold(0.0, f64::max)
}

/// Decoupling of the ribbon equations, per step:
///
/// - `xi2_factor_error`: with zero data and only `ξ₂` nonzero, the deviation of
///   each `ξ₂` DOF ratio `Uⁿ/Uⁿ⁻¹` from `(1 + τC⁰_W/C⁰_R)⁻¹`;
/// - `xi2_interference`: `ξ₂` difference between the problem's run and a run
///   whose `ξ₁`, `w`, `θ` start at the boundary lift;
/// - `theta_difference` (H1 only): `θ` difference between the problem's run and
///   one whose `w⁰` is perturbed by the end bubble times `w_perturbation`.
pub fn decoupling_checks(
    problem: &Problem,
    tau: f64,
    horizon: f64,
    w_perturbation: &Poly,
) -> Result<StudyReport> {
    use crate::ribbon::{THETA, XI2};
    let bump = bubble(problem.length);
    let mut report = StudyReport::new(StudyKind::Decoupling);

    let quiet = Problem {
        boundary: BoundaryData::zero(),
        forces: RibbonForces::default(),
        initial: FieldPolys {
            xi2: bump.clone(),
            ..FieldPolys::default()
        },
        ..problem.clone()
    };
    let decay_model = quiet.ribbon()?;
    let decay = run_trajectory(
        &decay_model,
        &quiet.initial_ribbon(&decay_model)?,
        tau,
        horizon,
        &problem.solver,
    )?;
    let rate = decay_model.elastic.c0 / decay_model.viscous.c0;
    let factor = 1.0 / (1.0 + tau * rate);

    let model = problem.ribbon()?;
    let base = run_trajectory(&model, &problem.initial_ribbon(&model)?, tau, horizon, &problem.solver)?;
    let lifted = FieldPolys {
        xi1: problem.boundary.u1hat.clone(),
        xi2: problem.initial.xi2.clone(),
        w: problem.boundary.vhat.clone(),
        theta: Poly::zero(),
    };
    let bare = run_trajectory(&model, &problem.interpolate(&model, &lifted)?, tau, horizon, &problem.solver)?;
    let twisted = if problem.material.hypothesis == Hypothesis::H1 {
        let perturbed = FieldPolys {
            w: problem.initial.w.add(&bump.mul(w_perturbation)),
            ..problem.initial.clone()
        };
        Some(run_trajectory(
            &model,
            &problem.interpolate(&model, &perturbed)?,
            tau,
            horizon,
            &problem.solver,
        )?)
    } else {
        report
            .notes
            .push("theta check skipped: the twist decouples only under (H1)".into());
        None
    };

    let mut table = Table::new(
        "steps",
        &["n", "t", "xi2_factor_error", "xi2_interference", "theta_difference"],
    );
    let xi2 = decay_model.layout().field(XI2);
    let scale = xi2.iter().map(|&i| decay.states[0][i].abs()).fold(0.0, f64::max);
    let mut worst = [0.0_f64; 3];
    for n in 1..=decay.steps() {
        let factor_error = xi2
            .iter()
            .filter(|&&i| decay.states[n - 1][i].abs() > 1e-12 * scale)
            .map(|&i| (decay.states[n][i] / decay.states[n - 1][i] - factor).abs())
            .fold(0.0, f64::max);
        let interference = max_field_gap(&model, XI2, &base, &bare, n);
        let theta = twisted
            .as_ref()
            .map(|t| max_field_gap(&model, THETA, &base, t, n))
            .unwrap_or(f64::NAN);
        worst[0] = worst[0].max(factor_error);
        worst[1] = worst[1].max(interference);
        if theta.is_finite() {
            worst[2] = worst[2].max(theta);
        }
        table.push(vec![n as f64, n as f64 * tau, factor_error, interference, theta]);
    }
    let last = decay.steps();
    let exponential = (-rate * last as f64 * tau).exp();
    let final_rel = xi2
        .iter()
        .filter(|&&i| decay.states[0][i].abs() > 1e-12 * scale)
        .map(|&i| (decay.states[last][i] / (exponential * decay.states[0][i]) - 1.0).abs())
        .fold(0.0, f64::max);

    report.tables.push(table);
    report.metric_push("expected_factor", factor);
    report.metric_push("max_xi2_factor_error", worst[0]);
    report.metric_push("xi2_final_vs_exponential", final_rel);
    report.metric_push("max_xi2_interference", worst[1]);
    report.metric_push(
        "max_theta_difference",
        if twisted.is_some() { worst[2] } else { f64::NAN },
    );
    Ok(report)
}
