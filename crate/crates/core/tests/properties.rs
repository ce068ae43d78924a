//! Randomized invariants of the forms, the finite element spaces, the models
//! and the incremental scheme.

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ribbonflow::fem::{Constraints, Kind1D, Mesh1D, Poly, Space1D};
use ribbonflow::forms::{
    extended_form, reduce_to_0, reduce_to_1, Hypothesis, MaterialPair, QuadForm2, SymVec, ViscousForm,
};
use ribbonflow::io::Snapshot;
use ribbonflow::lab::{random_ribbon_state, FieldPolys, Problem};
use ribbonflow::movements::{incremental_step, run_trajectory, SolverOptions, Trajectory};
use ribbonflow::ribbon::{energy_via_strains, sqdist_via_strains, RibbonForces};

/// SPD matrix `LLᵀ + δI` from the entries of a lower-triangular `L`.
fn spd(l: [f64; 6], shift: f64) -> Matrix3<f64> {
    let l = Matrix3::new(l[0], 0.0, 0.0, l[1], l[2], 0.0, l[3], l[4], l[5]);
    l * l.transpose() + Matrix3::identity() * shift
}

fn grid_min(f: impl Fn(f64) -> f64, center: f64, half_width: f64, points: usize) -> f64 {
    (0..=points)
        .map(|k| f(center - half_width + 2.0 * half_width * k as f64 / points as f64))
        .fold(f64::INFINITY, f64::min)
}

fn h1_material() -> MaterialPair {
    MaterialPair::new(
        QuadForm2::isotropic(1.0, 0.0).unwrap(),
        ViscousForm::Fixed(QuadForm2::isotropic(1.0, 0.0).unwrap()),
    )
}

fn forced_problem(n: usize) -> Problem {
    let mut p = Problem::new(h1_material());
    p.n1d = n;
    p.nx = n;
    p.ny = 2;
    p.forces = RibbonForces {
        f: Poly::new([0.5, -0.3]),
        g1: Poly::new([0.2]),
        g2: Poly::new([0.0, 0.1]),
    };
    p
}

fn entries() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-2.0..2.0_f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eliminated_coordinate_is_a_grid_minimum(l in entries(), shift in 0.05..1.0_f64, a in -1.0..1.0_f64, b in -1.0..1.0_f64) {
        let q2 = QuadForm2::new(spd(l, shift)).unwrap();
        let q1 = reduce_to_1(&q2).unwrap();
        let star = q1.argmin_eliminated(a, b);
        let at = |alpha: f64| q2.eval(SymVec::new(a, b, alpha));
        // Grid spacing h around the argmin: the minimum is within h²·Q₂₂ of the exact one.
        let (half, points) = (1.0, 2000);
        let h = 2.0 * half / points as f64;
        let exact = q1.eval(a, b);
        let grid = grid_min(at, star + 0.3 * h, half, points);
        let curvature = q2.matrix()[(2, 2)];
        prop_assert!(exact <= grid + 1e-12 * (1.0 + exact.abs()));
        prop_assert!(grid - exact <= h * h * curvature + 1e-12 * (1.0 + exact.abs()));
        prop_assert!((at(star) - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
        for alpha in [-3.0, -0.5, 0.0, 0.7, 2.0] {
            prop_assert!(exact <= at(star + alpha) + 1e-12 * (1.0 + exact.abs()));
        }

        let q0 = reduce_to_0(&q1).unwrap();
        let z_star = q0.argmin_eliminated(a);
        let along = |z: f64| q1.eval(a, z);
        let grid = grid_min(along, z_star + 0.3 * h, half, points);
        prop_assert!(q0.eval(a) <= grid + 1e-12 * (1.0 + grid.abs()));
        prop_assert!(grid - q0.eval(a) <= h * h * q1.matrix()[(1, 1)] + 1e-12 * (1.0 + grid.abs()));
    }

    #[test]
    fn extended_form_inverse_root_gives_the_dual_norm(l in entries(), shift in 0.05..1.0_f64, v in prop::array::uniform3(-3.0..3.0_f64)) {
        let q1 = reduce_to_1(&QuadForm2::new(spd(l, shift)).unwrap()).unwrap();
        let q0 = reduce_to_0(&q1).unwrap();
        let ext = extended_form(&q0, &q1).unwrap();
        let v = Vector3::from(v);
        let lhs = (ext.inv_sqrt * v).norm_squared();
        let rhs = v.dot(&(ext.matrix.try_inverse().unwrap() * v));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-300));
        prop_assert!(ext.eval(&v) > 0.0 || v.norm() == 0.0);
    }

    #[test]
    fn isotropic_without_lambda_has_vanishing_argmins(mu_w in 0.1..5.0_f64, mu_r in 0.1..5.0_f64) {
        let m = MaterialPair::new(
            QuadForm2::isotropic(mu_w, 0.0).unwrap(),
            ViscousForm::Fixed(QuadForm2::isotropic(mu_r, 0.0).unwrap()),
        );
        prop_assert_eq!(m.hypothesis, Hypothesis::H1);
        let (q1, q0) = m.elastic_reduced().unwrap();
        prop_assert_eq!(q1.alpha_coefficients(), [0.0, 0.0]);
        prop_assert_eq!(q0.z, 0.0);
        prop_assert_eq!(q0.c0, 2.0 * mu_w);
    }

    #[test]
    fn hermite_fields_are_c1_across_nodes(coeffs in prop::collection::vec(-5.0..5.0_f64, 18), length in 0.5..3.0_f64) {
        let space = Space1D::new(Mesh1D::new(length, 8).unwrap(), Kind1D::Hermite3);
        prop_assert_eq!(space.ndof(), coeffs.len());
        for e in 0..7 {
            let left = space.eval_local(&coeffs, e, 1.0);
            let right = space.eval_local(&coeffs, e + 1, 0.0);
            prop_assert!((left[0] - right[0]).abs() <= 1e-12 * (1.0 + left[0].abs()));
            prop_assert!((left[1] - right[1]).abs() <= 1e-12 * (1.0 + left[1].abs()));
        }
    }

    #[test]
    fn applying_constraints_is_idempotent(u in prop::collection::vec(-1e3..1e3_f64, 1..40), seed in any::<u64>()) {
        let n = u.len();
        let mut c = Constraints::free(n);
        for i in (0..n).filter(|i| (seed >> (i % 64)) & 1 == 1) {
            c.fix(i, i as f64 * 0.25 - 1.0);
        }
        let mut once = u.clone();
        c.apply(&mut once);
        let mut twice = once.clone();
        c.apply(&mut twice);
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(c.violation(&once), 0.0);
        for i in 0..n {
            if !c.mask[i] {
                prop_assert_eq!(once[i].to_bits(), u[i].to_bits());
            }
        }
    }

    #[test]
    fn snapshot_text_reloads_bitwise(states in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("not NaN", |x| !x.is_nan()), 5), 1..6)) {
        let traj = Trajectory {
            tau: 0.1,
            horizon: 0.1 * (states.len() - 1).max(1) as f64,
            energies: vec![0.0; states.len()],
            reports: Vec::new(),
            states,
        };
        let snap = Snapshot::of("ribbon n1d=1 fields=xi1,xi2,w,theta", &traj);
        let back = Snapshot::parse(&snap.to_text()).unwrap();
        for (a, b) in back.states.iter().zip(&traj.states) {
            prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ribbon_energy_and_distance_agree_with_strain_integrals(seed in any::<u64>(), amplitude in 0.05..1.5_f64) {
        let p = forced_problem(8);
        let m = p.ribbon().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_ribbon_state(&m, &mut rng, amplitude, 3).unwrap();
        let v = random_ribbon_state(&m, &mut rng, amplitude, 3).unwrap();
        let (e1, e2) = (m.energy(&u), energy_via_strains(&m, &u));
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1.abs().max(1.0));
        let (d1, d2) = (m.sqdist(&u, &v), sqdist_via_strains(&m, &u, &v));
        prop_assert!((d1 - d2).abs() <= 1e-12 * d1.max(1e-300));
    }

    #[test]
    fn accepted_steps_satisfy_the_energy_inequality(seed in any::<u64>(), tau in 0.01..0.5_f64, amplitude in 0.05..1.0_f64) {
        let p = forced_problem(8);
        let m = p.ribbon().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_ribbon_state(&m, &mut rng, amplitude, 2).unwrap();
        let (next, r) = incremental_step(&m, tau, &u, &SolverOptions::default()).unwrap();
        prop_assert!(r.energy_inequality_gap <= 1e-9);
        prop_assert!(r.kkt_mismatch.unwrap() <= 1e-10);
        prop_assert!(r.residual_norm.unwrap() <= 10.0 * r.tolerance);
        prop_assert_eq!(m.constraint_set().violation(&next), 0.0);
    }

    #[test]
    fn identical_runs_are_bitwise_identical(seed in any::<u64>()) {
        let p = forced_problem(6);
        let m = p.ribbon().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_ribbon_state(&m, &mut rng, 0.5, 2).unwrap();
        let a = run_trajectory(&m, &u, 0.1, 0.3, &p.solver).unwrap();
        let b = run_trajectory(&m, &u, 0.1, 0.3, &p.solver).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn recovered_plate_states_satisfy_the_lateral_data(seed in any::<u64>(), eps in 0.02..0.5_f64) {
        let mut p = forced_problem(8);
        p.boundary.u1hat = Poly::new([0.0, 0.1]);
        p.boundary.vhat = Poly::new([0.05, 0.0, 0.2]);
        let ribbon = p.matched_ribbon().unwrap();
        let plate = p.plate(eps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = random_ribbon_state(&ribbon, &mut rng, 0.5, 3).unwrap();
        let y = p.recover(&plate, &ribbon, &target).unwrap();
        prop_assert!(plate.constraint_set().violation(&y) <= 1e-12);
        prop_assert!(plate.check_admissible(&y).is_ok());
    }
}

#[test]
fn embedded_states_have_ribbon_energy_for_every_width() {
    let p = forced_problem(8);
    let ribbon = p.matched_ribbon().unwrap();
    let xi1 = Poly::new([-0.25, 0.0, 1.0]).mul(&Poly::new([0.3, 0.7]));
    let w = Poly::new([1.0 / 16.0, 0.0, -0.5, 0.0, 1.0]);
    let target = p
        .interpolate(&ribbon, &FieldPolys { xi1: xi1.clone(), w: w.clone(), ..FieldPolys::default() })
        .unwrap();
    let lift = |q: Poly| {
        let d = q.derivative();
        move |x: f64, _: f64| [q.eval(x), d.eval(x), 0.0, 0.0]
    };
    for eps in [0.4, 0.1, 0.02] {
        let plate = p.plate(eps).unwrap();
        let y = plate.interpolate(lift(xi1.clone()), |_, _| [0.0; 4], lift(w.clone()));
        let (e2, e1) = (plate.energy(&y), ribbon.energy(&target));
        assert!((e2 - e1).abs() <= 1e-10 * e1.abs(), "eps {eps}: {e2} vs {e1}");
    }
}
