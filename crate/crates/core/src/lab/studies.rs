use super::{
    extreme_eigenvalues, sample_times, FieldPolys, OrderFit, Problem, ProjectionDiag, RunSummary,
    StudyKind, StudyReport, Table, SAMPLE_FRACTIONS,
};
use crate::error::{invalid, Result};
use crate::movements::{dissipation_ledger, run_trajectory, GradientSystem, SolverOptions, Trajectory};
use crate::plate::projection_distance;

fn check_positive(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(invalid(name, "list is empty"));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(invalid(name, format!("{v} is not a positive number")));
    }
    Ok(())
}

fn sup_distance<S: GradientSystem + ?Sized>(sys: &S, a: &Trajectory, b: &Trajectory, times: &[f64]) -> f64 {
    times
        .iter()
        .map(|&t| sys.sqdist(a.at(t), b.at(t)).sqrt())
        .fold(0.0, f64::max)
}

/// Runs the scheme for each `τ` of a halving sequence and compares
/// neighbouring runs at the sample times.
///
/// Tables: `runs` (one row per `τ`, with the energy-identity residual `R(τ)`
/// when a slope evaluator is given) and `comparison` (`D(Ū_τ(t), Ū_{τ/2}(t))`).
pub fn tau_study<S: GradientSystem + ?Sized>(
    sys: &S,
    u0: &[f64],
    taus: &[f64],
    horizon: f64,
    opts: &SolverOptions,
    slope: Option<&dyn Fn(&[f64]) -> Result<f64>>,
) -> Result<StudyReport> {
    check_positive("tau", taus)?;
    for p in taus.windows(2) {
        if ((p[1] - 0.5 * p[0]) / p[0]).abs() > 1e-12 {
            return Err(invalid("tau", format!("{} is not half of {}", p[1], p[0])));
        }
    }
    let times: Vec<f64> = SAMPLE_FRACTIONS.iter().map(|f| f * horizon).collect();
    let mut trajectories = Vec::with_capacity(taus.len());
    let mut runs = Table::new(
        "runs",
        &[
            "tau",
            "steps",
            "final_energy",
            "residual",
            "abs_residual",
            "sup_distance_to_half",
            "max_energy_gap",
            "max_residual_ratio",
            "newton_iterations",
        ],
    );
    let mut residuals = Vec::with_capacity(taus.len());
    for &tau in taus {
        let traj = run_trajectory(sys, u0, tau, horizon, opts)?;
        let residual = match slope {
            Some(f) => dissipation_ledger(&traj, Some(f))?.residual().unwrap_or(f64::NAN),
            None => f64::NAN,
        };
        residuals.push(residual);
        trajectories.push(traj);
    }
    let mut comparison = Table::new("comparison", &["tau", "t", "distance"]);
    for (k, traj) in trajectories.iter().enumerate() {
        let sup = match trajectories.get(k + 1) {
            Some(half) => {
                for &t in &times {
                    let d = sys.sqdist(traj.at(t), half.at(t)).sqrt();
                    comparison.push(vec![traj.tau, t, d]);
                }
                sup_distance(sys, traj, half, &times)
            }
            None => f64::NAN,
        };
        let s = RunSummary::of(traj);
        runs.push(vec![
            traj.tau,
            s.steps as f64,
            *traj.energies.last().expect("nonempty"),
            residuals[k],
            residuals[k].abs(),
            sup,
            s.max_energy_gap,
            s.max_residual_ratio,
            s.newton_iterations as f64,
        ]);
    }
    let finite = Table {
        rows: runs.rows.iter().filter(|r| r[5].is_finite()).cloned().collect(),
        ..runs.clone()
    };
    let mut report = StudyReport::new(StudyKind::Tau);
    report
        .fits
        .push(OrderFit::compute("sup_distance", &finite, "tau", "sup_distance_to_half", None));
    report.fits.push(OrderFit::compute("residual", &runs, "tau", "abs_residual", None));
    report.tables.push(runs);
    report.tables.push(comparison);
    Ok(report)
}

fn sweep_guard(problem: &Problem, eps_list: &[f64]) -> Result<()> {
    problem.require_hypothesis()?;
    check_positive("epsilon", eps_list)
}

/// Plate runs from the recovery of the ribbon initial state against the ribbon
/// run on the same mesh along `I`, compared after projection at `t = 0` and
/// the sample times.
pub fn epsilon_study(problem: &Problem, eps_list: &[f64], tau: f64, horizon: f64) -> Result<StudyReport> {
    sweep_guard(problem, eps_list)?;
    let ribbon = problem.matched_ribbon()?;
    let v0 = problem.initial_ribbon(&ribbon)?;
    let reference = run_trajectory(&ribbon, &v0, tau, horizon, &problem.solver)?;
    let times = sample_times(horizon);

    let mut distances = Table::new(
        "distances",
        &[
            "eps",
            "t",
            "distance",
            "plate_energy",
            "ribbon_energy",
            "gamma_l2",
            "e12_l2",
            "e22_l2",
            "gamma_avg_l2",
            "e12_avg_l2",
            "e22_avg_l2",
        ],
    );
    let mut runs = Table::new(
        "runs",
        &[
            "eps",
            "steps",
            "max_energy_gap",
            "max_residual_ratio",
            "max_kkt_mismatch",
            "newton_iterations",
            "hessian_min_eig",
            "hessian_max_eig",
            "hessian_condition",
        ],
    );
    let mut report = StudyReport::new(StudyKind::Epsilon);
    for &eps in eps_list {
        let plate = problem.plate(eps)?;
        let u0 = problem.recover(&plate, &ribbon, &v0)?;
        let traj = run_trajectory(&plate, &u0, tau, horizon, &problem.solver)?;
        for &t in &times {
            let (u, v) = (traj.at(t), reference.at(t));
            let d = projection_distance(&plate, u, &ribbon, v)?;
            let diag = ProjectionDiag::of(&plate, u)?;
            distances.push(vec![
                eps,
                t,
                d,
                plate.energy(u),
                ribbon.energy(v),
                diag.gamma,
                diag.e12,
                diag.e22,
                diag.gamma_avg,
                diag.e12_avg,
                diag.e22_avg,
            ]);
        }
        let hessian = plate
            .incremental(&u0, &u0, tau, true)
            .2
            .expect("hessian requested");
        let (lo, hi) = extreme_eigenvalues(&hessian, &plate.constraint_set().mask, 40)?;
        let s = RunSummary::of(&traj);
        runs.push(vec![
            eps,
            s.steps as f64,
            s.max_energy_gap,
            s.max_residual_ratio,
            s.max_kkt_mismatch,
            s.newton_iterations as f64,
            lo,
            hi,
            hi / lo,
        ]);
        report.notes.push(format!(
            "eps={eps}: incremental Hessian eigenvalues in [{lo:e}, {hi:e}]"
        ));
    }
    for &t in &times {
        report.fits.push(OrderFit::compute(
            &format!("distance_t{t}"),
            &distances,
            "eps",
            "distance",
            Some(("t", t)),
        ));
    }
    report.tables.push(distances);
    report.tables.push(runs);
    Ok(report)
}

/// Both paths of the commutative diagram on an `(ε, τ)` grid.
///
/// `discrepancy(ε, τ) = sup_t D₀(πȲ_{ε,τ}(t), Ū_τ(t))` measures the `ε → 0`
/// edge at fixed `τ`; `corner_distance(ε, τ) = sup_t D₀(πȲ_{ε,τ}(t), Ū_{τ*}(t))`
/// measures the distance to the corner reached through `τ → 0`, with `τ*`
/// the smallest step.
pub fn commutativity_report(
    problem: &Problem,
    eps_list: &[f64],
    tau_list: &[f64],
    horizon: f64,
) -> Result<StudyReport> {
    sweep_guard(problem, eps_list)?;
    check_positive("tau", tau_list)?;
    let ribbon = problem.matched_ribbon()?;
    let v0 = problem.initial_ribbon(&ribbon)?;
    let ribbon_runs: Vec<Trajectory> = tau_list
        .iter()
        .map(|&tau| run_trajectory(&ribbon, &v0, tau, horizon, &problem.solver))
        .collect::<Result<_>>()?;
    let finest = tau_list
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("nonempty");
    let times: Vec<f64> = SAMPLE_FRACTIONS.iter().map(|f| f * horizon).collect();
    let mut grid = Table::new("grid", &["eps", "tau", "discrepancy", "corner_distance"]);
    for &eps in eps_list {
        let plate = problem.plate(eps)?;
        let u0 = problem.recover(&plate, &ribbon, &v0)?;
        for (k, &tau) in tau_list.iter().enumerate() {
            let traj = run_trajectory(&plate, &u0, tau, horizon, &problem.solver)?;
            let mut edge = 0.0_f64;
            let mut corner = 0.0_f64;
            for &t in &times {
                let u = traj.at(t);
                edge = edge.max(projection_distance(&plate, u, &ribbon, ribbon_runs[k].at(t))?);
                corner = corner.max(projection_distance(
                    &plate,
                    u,
                    &ribbon,
                    ribbon_runs[finest].at(t),
                )?);
            }
            grid.push(vec![eps, tau, edge, corner]);
        }
    }
    let mut ribbon_table = Table::new("ribbon_tau", &["tau", "distance_to_finest"]);
    for (k, run) in ribbon_runs.iter().enumerate() {
        let d = sup_distance(&ribbon, run, &ribbon_runs[finest], &times);
        ribbon_table.push(vec![tau_list[k], d]);
    }
    let mut report = StudyReport::new(StudyKind::Commutativity);
    for &tau in tau_list {
        report.fits.push(OrderFit::compute(
            &format!("discrepancy_tau{tau}"),
            &grid,
            "eps",
            "discrepancy",
            Some(("tau", tau)),
        ));
    }
    report.tables.push(grid);
    report.tables.push(ribbon_table);
    Ok(report)
}

/// `|φ_ε(recovery) − φ₀(target)|` along the width sweep, per target.
pub fn gamma_check(problem: &Problem, targets: &[FieldPolys], eps_list: &[f64]) -> Result<StudyReport> {
    check_positive("epsilon", eps_list)?;
    let ribbon = problem.matched_ribbon()?;
    let states: Vec<Vec<f64>> = targets
        .iter()
        .map(|p| problem.interpolate(&ribbon, p))
        .collect::<Result<_>>()?;
    let mut errors = Table::new(
        "errors",
        &["target", "eps", "plate_energy", "ribbon_energy", "error", "projection_distance"],
    );
    for &eps in eps_list {
        let plate = problem.plate(eps)?;
        for (k, v) in states.iter().enumerate() {
            let u = problem.recover(&plate, &ribbon, v)?;
            let (e2, e1) = (plate.energy(&u), ribbon.energy(v));
            let d = projection_distance(&plate, &u, &ribbon, v)?;
            errors.push(vec![k as f64, eps, e2, e1, (e2 - e1).abs(), d]);
        }
    }
    // Rows grouped per target, in sweep order, for the fits.
    let mut ordered = errors.clone();
    ordered
        .rows
        .sort_by(|a, b| a[0].total_cmp(&b[0]).then(b[1].total_cmp(&a[1])));
    let mut report = StudyReport::new(StudyKind::Gamma);
    for k in 0..targets.len() {
        report.fits.push(OrderFit::compute(
            &format!("target{k}"),
            &ordered,
            "eps",
            "error",
            Some(("target", k as f64)),
        ));
    }
    report.tables.push(ordered);
    Ok(report)
}
