//! Minimizing movements: each step minimizes
//! `Φ(τ, u; v) = (1/2τ)·D(u, v)² + φ(v)` from the warm start `v = u`.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, BandMatrix};

/// Energy and squared distance on a constrained DOF space.
///
/// Gradients vanish on constrained entries; Hessians carry identity rows there.
pub trait GradientSystem {
    fn ndof(&self) -> usize;
    fn constrained(&self) -> &[bool];
    fn energy(&self, u: &[f64]) -> f64;
    fn energy_gradient(&self, u: &[f64]) -> Vec<f64>;
    fn sqdist(&self, u: &[f64], v: &[f64]) -> f64;
    /// Gradient of `v ↦ ½·sqdist(anchor, v)`.
    fn halfsq_gradient(&self, anchor: &[f64], v: &[f64]) -> Vec<f64>;
    /// `Φ(τ, anchor; v)` with its gradient and, on request, Hessian.
    fn incremental(&self, anchor: &[f64], v: &[f64], tau: f64, hessian: bool) -> Incremental;
    fn incremental_value(&self, anchor: &[f64], v: &[f64], tau: f64) -> f64 {
        self.energy(v) + self.sqdist(anchor, v) / (2.0 * tau)
    }
    /// Weak residual of the step, computed independently of [`Self::incremental`].
    fn optimality_residual(&self, _prev: &[f64], _next: &[f64], _tau: f64) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct Incremental {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<BandMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative gradient tolerance; the absolute one is `tol·(1 + |φ(u_prev)|)`.
    pub tol: f64,
    pub max_newton: usize,
    pub armijo: f64,
    pub max_halvings: usize,
    /// Use a diagonally scaled gradient step when Newton is not a descent direction.
    pub gradient_fallback: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_newton: 50,
            armijo: 1e-4,
            max_halvings: 60,
            gradient_fallback: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(crate::error::invalid("solver.tol", "must be positive"));
        }
        if self.max_newton == 0 {
            return Err(crate::error::invalid("solver.max_newton", "must be at least 1"));
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return Err(crate::error::invalid("solver.armijo", "must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    pub fallback_steps: usize,
    /// Stopped where Newton no longer reduces the gradient, within
    /// `max(10·tolerance, gradient_floor)`.
    pub stalled: bool,
    pub gradient_norm: f64,
    pub tolerance: f64,
    /// `ε_mach·‖|H|·|v|‖` at the final iterate: the gradient uncertainty
    /// caused by storing the state in floating point.
    pub gradient_floor: f64,
    pub energy: f64,
    pub step_dist: f64,
    /// `φ(next) + D²/2τ − φ(prev)`, nonpositive for an accepted step.
    pub energy_inequality_gap: f64,
    pub residual_norm: Option<f64>,
    /// `max |residual − ∇Φ|` over all DOFs.
    pub kkt_mismatch: Option<f64>,
}

const ROUNDOFF_BAND: f64 = 10.0;
const FLOOR_BAND: f64 = 1.0;
const ENERGY_RESOLUTION: f64 = 100.0 * f64::EPSILON;

fn failure(reason: String) -> Error {
    Error::SolverFailure { step: 0, reason }
}

fn gradient_floor(inc: &Incremental, v: &[f64]) -> f64 {
    inc.hessian
        .as_ref()
        .map_or(0.0, |h| f64::EPSILON * norm(&h.abs_mul_vec(v)))
}

/// One minimizing-movement step.
pub fn incremental_step<S: GradientSystem + ?Sized>(
    sys: &S,
    tau: f64,
    u_prev: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, StepReport)> {
    if !(tau > 0.0) {
        return Err(crate::error::invalid("tau", format!("{tau} must be positive")));
    }
    let phi_prev = sys.energy(u_prev);
    let tol = opts.tol * (1.0 + phi_prev.abs());
    let mask = sys.constrained();
    let mut v = u_prev.to_vec();
    let mut fallback_steps = 0;
    let mut inc = sys.incremental(u_prev, &v, tau, true);
    let mut iterations = 0;
    let mut previous = f64::INFINITY;
    let mut stalled = false;
    let mut floor;
    loop {
        let gn = norm(&inc.gradient);
        floor = gradient_floor(&inc, &v);
        if gn <= tol {
            break;
        }
        // Roundoff can hold the gradient above `tol`: assembly noise on fine
        // meshes, and the representation error of `v` times a stiff Hessian.
        // Stop once Newton no longer halves the gradient inside that band.
        let band = (ROUNDOFF_BAND * tol).max(FLOOR_BAND * floor);
        if gn <= band && gn > 0.5 * previous {
            stalled = true;
            break;
        }
        previous = gn;
        if iterations == opts.max_newton {
            return Err(failure(format!(
                "gradient norm {gn:e} above {tol:e} after {iterations} Newton iterations"
            )));
        }
        iterations += 1;
        let g = &inc.gradient;
        let h = inc.hessian.as_ref().expect("hessian requested");
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        let newton = h.ldlt().ok().map(|f| f.solve(&neg)).filter(|d| {
            let s = dot(g, d);
            s < 0.0 && d.iter().all(|x| x.is_finite())
        });
        // Constrained DOFs keep their prescribed values exactly.
        let dir = match newton {
            Some(mut d) => {
                for (x, &fixed) in d.iter_mut().zip(mask) {
                    if fixed {
                        *x = 0.0;
                    }
                }
                d
            }
            None if opts.gradient_fallback => {
                fallback_steps += 1;
                (0..g.len())
                    .map(|i| {
                        let hii = h.get(i, i).abs();
                        if mask[i] {
                            0.0
                        } else {
                            -g[i] / if hii > 0.0 { hii } else { 1.0 }
                        }
                    })
                    .collect()
            }
            None => return Err(failure("Newton direction is not a descent direction".into())),
        };
        let slope = dot(g, &dir);
        let mut alpha = 1.0;
        let mut accepted = None;
        // A predicted decrease below the resolution of Φ makes Armijo accept
        // arbitrary micro-steps; judge such steps by the gradient instead.
        let resolvable = -slope > ENERGY_RESOLUTION * (1.0 + inc.value.abs());
        for _ in 0..=opts.max_halvings {
            if !resolvable {
                break;
            }
            let trial: Vec<f64> = v.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            let val = sys.incremental_value(u_prev, &trial, tau);
            if val <= inc.value + opts.armijo * alpha * slope {
                accepted = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        let (trial, next) = match accepted {
            Some(t) => {
                let n = sys.incremental(u_prev, &t, tau, true);
                (t, n)
            }
            None => {
                // Roundoff floor of Φ: accept the full step if it reduces the gradient.
                let t: Vec<f64> = v.iter().zip(&dir).map(|(a, d)| a + d).collect();
                let cand = sys.incremental(u_prev, &t, tau, true);
                if norm(&cand.gradient) < gn {
                    (t, cand)
                } else if gn <= band {
                    stalled = true;
                    break;
                } else {
                    return Err(failure(format!(
                        "line search failed at gradient norm {gn:e} (tolerance {tol:e})"
                    )));
                }
            }
        };
        v = trial;
        inc = next;
    }
    let energy = sys.energy(&v);
    let d2 = sys.sqdist(u_prev, &v);
    let (residual_norm, kkt_mismatch) = match sys.optimality_residual(u_prev, &v, tau) {
        Some(r) => {
            let mismatch = r
                .iter()
                .zip(&inc.gradient)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            (Some(norm(&r)), Some(mismatch))
        }
        None => (None, None),
    };
    Ok((
        v,
        StepReport {
            iterations,
            fallback_steps,
            stalled,
            gradient_norm: norm(&inc.gradient),
            tolerance: tol,
            gradient_floor: floor,
            energy,
            step_dist: d2.sqrt(),
            energy_inequality_gap: energy + d2 / (2.0 * tau) - phi_prev,
            residual_norm,
            kkt_mismatch,
        },
    ))
}

/// Number of steps `N = ⌈T/τ⌉`, at least one.
pub fn step_count(tau: f64, horizon: f64) -> usize {
    let r = horizon / tau;
    let n = (r - 1e-9 * r.max(1.0)).ceil();
    (n.max(1.0)) as usize
}

/// States `U⁰ … Uᴺ` of the scheme with their step reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub tau: f64,
    pub horizon: f64,
    pub states: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    /// `reports[n − 1]` belongs to the step producing `Uⁿ`.
    pub reports: Vec<StepReport>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    /// Index `n` with `Ū(t) = Uⁿ`: `0` at `t = 0`, else `⌈t/τ⌉` capped at `N`.
    pub fn index_at(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let r = t / self.tau;
        let n = (r - 1e-9 * r.max(1.0)).ceil().max(1.0) as usize;
        n.min(self.steps())
    }

    /// Piecewise-constant interpolant `Ū(t)`.
    pub fn at(&self, t: f64) -> &[f64] {
        &self.states[self.index_at(t)]
    }
}

pub fn run_trajectory<S: GradientSystem + ?Sized>(
    sys: &S,
    u0: &[f64],
    tau: f64,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if !(horizon > 0.0) {
        return Err(crate::error::invalid("T", format!("{horizon} must be positive")));
    }
    opts.validate()?;
    let n = step_count(tau, horizon);
    let mut states = Vec::with_capacity(n + 1);
    let mut energies = Vec::with_capacity(n + 1);
    let mut reports = Vec::with_capacity(n);
    states.push(u0.to_vec());
    energies.push(sys.energy(u0));
    for k in 1..=n {
        let (next, report) = incremental_step(sys, tau, &states[k - 1], opts).map_err(|e| match e {
            Error::SolverFailure { reason, .. } => Error::SolverFailure { step: k, reason },
            other => other,
        })?;
        energies.push(report.energy);
        reports.push(report);
        states.push(next);
    }
    Ok(Trajectory {
        tau,
        horizon,
        states,
        energies,
        reports,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub n: usize,
    pub t: f64,
    pub energy: f64,
    pub step_dist: f64,
    pub slope: Option<f64>,
    /// Cumulative `R_n = ½Σ τ(D_k/τ)² + ½Σ τ·slope(U^k)² + φ(Uⁿ) − φ(U⁰)`.
    pub phi_residual: Option<f64>,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    pub rows: Vec<LedgerRow>,
}

impl Ledger {
    /// `R(τ)` at the final step, when slopes were evaluated.
    pub fn residual(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.phi_residual)
    }

    /// Sum of the metric-rate terms `½Σ τ(D_n/τ)²`.
    pub fn metric_action(&self, tau: f64) -> f64 {
        self.rows
            .iter()
            .skip(1)
            .map(|r| 0.5 * tau * (r.step_dist / tau).powi(2))
            .sum()
    }
}

/// Per-step De Giorgi ledger; the slope evaluator is optional (2D runs).
pub fn dissipation_ledger(
    traj: &Trajectory,
    slope: Option<&dyn Fn(&[f64]) -> Result<f64>>,
) -> Result<Ledger> {
    let tau = traj.tau;
    let e0 = traj.energies[0];
    let mut rows = Vec::with_capacity(traj.states.len());
    let mut action = 0.0;
    let mut slope_action = 0.0;
    for (n, state) in traj.states.iter().enumerate() {
        let s = match slope {
            Some(f) => Some(f(state)?),
            None => None,
        };
        let (step_dist, iters) = if n == 0 {
            (0.0, 0)
        } else {
            let r = &traj.reports[n - 1];
            (r.step_dist, r.iterations)
        };
        if n > 0 {
            action += 0.5 * tau * (step_dist / tau).powi(2);
            if let Some(s) = s {
                slope_action += 0.5 * tau * s * s;
            }
        }
        rows.push(LedgerRow {
            n,
            t: n as f64 * tau,
            energy: traj.energies[n],
            step_dist,
            slope: s,
            phi_residual: s.map(|_| action + slope_action + traj.energies[n] - e0),
            newton_iters: iters,
        });
    }
    Ok(Ledger { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `φ(u) = ½a·u²`, `D(u, v)² = b·(u − v)²` on one DOF.
    struct Scalar {
        a: f64,
        b: f64,
        mask: Vec<bool>,
    }

    impl GradientSystem for Scalar {
        fn ndof(&self) -> usize {
            1
        }
        fn constrained(&self) -> &[bool] {
            &self.mask
        }
        fn energy(&self, u: &[f64]) -> f64 {
            0.5 * self.a * u[0] * u[0]
        }
        fn energy_gradient(&self, u: &[f64]) -> Vec<f64> {
            vec![self.a * u[0]]
        }
        fn sqdist(&self, u: &[f64], v: &[f64]) -> f64 {
            self.b * (u[0] - v[0]).powi(2)
        }
        fn halfsq_gradient(&self, anchor: &[f64], v: &[f64]) -> Vec<f64> {
            vec![self.b * (v[0] - anchor[0])]
        }
        fn incremental(&self, anchor: &[f64], v: &[f64], tau: f64, hessian: bool) -> Incremental {
            let mut h = BandMatrix::zeros(1, 0);
            h.add(0, 0, self.a + self.b / tau);
            Incremental {
                value: self.incremental_value(anchor, v, tau),
                gradient: vec![self.a * v[0] + self.b * (v[0] - anchor[0]) / tau],
                hessian: hessian.then_some(h),
            }
        }
    }

    fn scalar(a: f64, b: f64) -> Scalar {
        Scalar {
            a,
            b,
            mask: vec![false],
        }
    }

    #[test]
    fn one_dof_step_halves() {
        // φ = ½u², D² = (u − v)², τ = 1: v + (v − u) = 0.
        let (v, r) = incremental_step(&scalar(1.0, 1.0), 1.0, &[3.0], &SolverOptions::default()).unwrap();
        assert!((v[0] - 1.5).abs() < 1e-14);
        assert!(r.energy_inequality_gap <= 0.0);
    }

    #[test]
    fn critical_point_is_fixed() {
        let (v, r) = incremental_step(&scalar(1.0, 1.0), 0.1, &[0.0], &SolverOptions::default()).unwrap();
        assert_eq!(v, vec![0.0]);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn step_count_and_interpolant() {
        assert_eq!(step_count(0.01, 1.0), 100);
        assert_eq!(step_count(0.3, 1.0), 4);
        assert_eq!(step_count(2.0, 1.0), 1);
        let traj = run_trajectory(&scalar(1.0, 1.0), &[1.0], 0.25, 1.0, &SolverOptions::default()).unwrap();
        assert_eq!(traj.steps(), 4);
        assert_eq!(traj.index_at(0.0), 0);
        assert_eq!(traj.index_at(0.1), 1);
        assert_eq!(traj.index_at(0.25), 1);
        assert_eq!(traj.index_at(0.26), 2);
        assert_eq!(traj.index_at(5.0), 4);
        assert!(traj.energies.windows(2).all(|e| e[1] <= e[0]));
    }

    #[test]
    fn scalar_ledger_residual_is_closed_form() {
        // x_n = x_{n−1}/(1 + aτ/b); D_n² = b(x_n − x_{n−1})²; slope = a|x|/√b.
        let (a, b, tau) = (2.0, 0.5, 0.1);
        let sys = scalar(a, b);
        let traj = run_trajectory(&sys, &[1.0], tau, 1.0, &SolverOptions::default()).unwrap();
        let slope = |u: &[f64]| -> Result<f64> { Ok(a * u[0].abs() / b.sqrt()) };
        let ledger = dissipation_ledger(&traj, Some(&slope)).unwrap();
        let rho = 1.0 / (1.0 + a * tau / b);
        let mut expect = 0.0;
        let mut x = 1.0_f64;
        for _ in 0..10 {
            let next = rho * x;
            expect -= 0.5 * a.powi(3) * tau * tau * next * next / (b * b);
            x = next;
        }
        let got = ledger.residual().unwrap();
        assert!(got < 0.0);
        assert!((got - expect).abs() < 1e-12);
    }
}
