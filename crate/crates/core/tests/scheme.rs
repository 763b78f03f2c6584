use std::f64::consts::PI;

use proptest::prelude::*;
use sce_core::noise::{NoiseModel, WienerPath};
use sce_core::scheme::*;
use sce_core::thermo::ThermoParams;
use sce_core::torus::{sobolev_symbol, viscosity_apply, GridSpec, SpectralField, SpectralVectorField};
use sce_core::SceError;

fn params() -> ThermoParams {
    ThermoParams::new(1.4).unwrap()
}

fn bumpy_density(g: GridSpec) -> SpectralField {
    SpectralField::from_fn(g, |x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos() + 0.1 * (2.0 * PI * (x[0] + x[1])).sin())
}

fn band_velocity(g: GridSpec, a: f64, b: f64) -> SpectralVectorField {
    SpectralVectorField::from_fn(g, |x| {
        [a * (2.0 * PI * x[0]).sin() + b * (4.0 * PI * x[1]).cos(), b * (2.0 * PI * x[0]).cos(), 0.0]
    })
    .project()
}

fn max_diff(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    a.sub(b).unwrap().max_abs()
}

#[test]
fn mass_solve_inverts_mass_operator() {
    for dim in [1, 2] {
        let g = GridSpec::new(dim, 16, 5).unwrap();
        let rho = bumpy_density(g);
        let v = band_velocity(g, 0.7, -0.4);
        let rhs = mass_operator_apply(&rho, &v).unwrap();
        let back = mass_operator_solve(&rho, &rhs, 1e-13, 500).unwrap();
        assert!(max_diff(&back, &v) < 1e-11, "dim {dim}");
    }
}

#[test]
fn mass_operator_is_symmetric() {
    let g = GridSpec::new(2, 16, 5).unwrap();
    let rho = bumpy_density(g);
    let v = band_velocity(g, 0.7, -0.4);
    let w = band_velocity(g, -0.2, 1.1);
    let a = mass_operator_apply(&rho, &v).unwrap().inner(&w).unwrap();
    let b = v.inner(&mass_operator_apply(&rho, &w).unwrap()).unwrap();
    assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
}

#[test]
fn viscous_solve_inverts_shifted_operator() {
    let g = GridSpec::new(1, 32, 10).unwrap();
    let rho = bumpy_density(g);
    let v = SpectralVectorField::from_fn(g, |x| [(2.0 * PI * x[0]).sin() + 0.3 * (14.0 * PI * x[0]).cos(), 0.0, 0.0]);
    for c in [1e-6, 1e-3, 1.0] {
        let rhs = mass_operator_apply(&rho, &v).unwrap().linear_combination(1.0, &viscosity_apply(&v), -c).unwrap();
        let back = viscous_mass_solve(&rho, c, &rhs, 1e-13, 500).unwrap();
        assert!(max_diff(&back, &v) < 1e-10, "c = {c}");
    }
}

#[test]
fn mass_solve_reports_non_convergence() {
    let g = GridSpec::new(1, 32, 10).unwrap();
    let rho = SpectralField::from_fn(g, |x| 1.0 + 0.99 * (2.0 * PI * x[0]).cos());
    let rhs = band_velocity(g, 1.0, 0.5);
    assert!(matches!(mass_operator_solve(&rho, &rhs, 1e-15, 1), Err(SceError::MassSolve { .. })));
}

#[test]
fn spectral_transport_translates_under_constant_velocity() {
    let g = GridSpec::new(1, 32, 10).unwrap();
    let profile = |x: f64| 1.0 + 0.5 * (2.0 * PI * x).cos() + 0.2 * (4.0 * PI * x).sin();
    let f = SpectralField::from_fn(g, |x| profile(x[0]));
    let c = 0.3;
    let h = 0.1;
    let v = SpectralVectorField::constant(g, [c, 0.0, 0.0]);
    let moved = transport_step(&f, &v, h, 40).unwrap();
    for i in 0..g.len() {
        let x = g.coordinate(i)[0];
        assert!((moved.physical()[i] - profile(x - c * h)).abs() < 1e-10);
    }
}

#[test]
fn upwind_transport_conserves_mass_and_ratio_bounds() {
    let g = GridSpec::new(2, 16, 5).unwrap();
    let rho = bumpy_density(g);
    let s = SpectralField::from_fn(g, |x| 0.5 + 0.4 * (2.0 * PI * x[1]).sin());
    let entropy = rho.mul(&s).unwrap();
    let v = SpectralVectorField::from_fn(g, |x| [(2.0 * PI * x[1]).sin(), 0.5 * (2.0 * PI * x[0]).cos(), 0.0]);
    let rho1 = transport_step_upwind(&rho, &v, 0.05, 1).unwrap();
    let ent1 = transport_step_upwind(&entropy, &v, 0.05, 1).unwrap();
    assert!((rho1.integral() - rho.integral()).abs() < 1e-13);
    let ratio: Vec<f64> = ent1.physical().iter().zip(rho1.physical()).map(|(e, r)| e / r).collect();
    let lo = ratio.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratio.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo >= s.min() - 1e-12 && hi <= s.max() + 1e-12);
}

#[test]
fn cutoff_factor_vanishes_for_large_velocity() {
    let g = GridSpec::new(1, 16, 5).unwrap();
    let u = SpectralVectorField::constant(g, [2.0, 0.0, 0.0]);
    assert_eq!(velocity_cutoff_factor(&u, 10.0), 1.0);
    assert_eq!(velocity_cutoff_factor(&u, 0.5), 0.0);
    assert_eq!(velocity_cutoff(&u, 0.5).max_abs(), 0.0);
}

fn stationary(g: GridSpec) -> FluidState {
    FluidState::new(SpectralField::constant(g, 1.0), SpectralVectorField::zeros(g), SpectralField::zeros(g), 0.0).unwrap()
}

#[test]
fn rest_state_is_a_fixed_point() {
    let g = GridSpec::new(2, 16, 5).unwrap();
    for eps in [0.0, 1e-3] {
        let mut cfg = SolverConfig::new(1e-3, params());
        cfg.eps_visc = eps;
        let solver = Solver::new(cfg, NoiseModel::none(g)).unwrap();
        let init = stationary(g);
        let traj = solver.run_trajectory(&init, 0.1, 0).unwrap();
        assert!(traj.is_complete());
        let last = traj.final_state();
        assert!(last.rho.sub(&init.rho).unwrap().max_abs() <= 1e-14);
        assert!(last.mom.max_abs() <= 1e-14);
        assert!(last.entropy.max_abs() <= 1e-14);
        assert!(traj.ledger.max_abs_residual() <= 1e-14);
    }
}

#[test]
fn implicit_viscosity_matches_exact_decay_factor() {
    // the L² cutoff is far below |u|, so convection and pressure switch off and
    // each step multiplies the mode by 1 / (1 + h ε (σ + 1))
    let g = GridSpec::new(1, 32, 10).unwrap();
    let amp = 10.0;
    let u = SpectralVectorField::from_fn(g, |x| [amp * (2.0 * PI * x[0]).sin(), 0.0, 0.0]);
    let init = FluidState::from_velocity(SpectralField::constant(g, 1.0), &u, SpectralField::zeros(g), 0.0).unwrap();
    let mut cfg = SolverConfig::new(1e-3, params());
    cfg.eps_visc = 1e-4;
    cfg.r_cutoff = 1e-3;
    cfg.mass_solver_tol = 1e-14;
    let h = cfg.h;
    let eps = cfg.eps_visc;
    let solver = Solver::new(cfg, NoiseModel::none(g)).unwrap();
    let steps = 50;
    let traj = solver.run_trajectory(&init, steps as f64 * h, 0).unwrap();
    let sigma = sobolev_symbol([2.0 * PI, 0.0, 0.0], 1);
    let factor = 1.0 / (1.0 + h * eps * (sigma + 1.0));
    let expected = u.scale(factor.powi(steps));
    // the cutoff must stay off for the whole run
    assert!(expected.norm_l2() > 2.0);
    let got = traj.velocities.last().unwrap();
    assert!(max_diff(got, &expected) <= 1e-10 * amp);
    assert!(traj.final_state().rho.sub(&init.rho).unwrap().max_abs() == 0.0);
}

#[test]
fn stiff_viscosity_stays_bounded() {
    // explicit stepping would blow up here: h ε σ_max ≈ 10⁴
    let g = GridSpec::new(1, 32, 10).unwrap();
    let u = SpectralVectorField::from_fn(g, |x| [0.1 * (20.0 * PI * x[0]).sin(), 0.0, 0.0]);
    let init = FluidState::from_velocity(SpectralField::constant(g, 1.0), &u, SpectralField::zeros(g), 0.0).unwrap();
    let mut cfg = SolverConfig::new(1e-2, params());
    cfg.eps_visc = 1e-3;
    let solver = Solver::new(cfg, NoiseModel::none(g)).unwrap();
    let traj = solver.run_trajectory(&init, 0.1, 0).unwrap();
    assert!(traj.is_complete());
    let sob: Vec<f64> = traj.ledger.rows().iter().map(|r| r.sobolev).collect();
    let en: Vec<f64> = traj.ledger.rows().iter().map(|r| r.energy()).collect();
    assert!(sob[1..].iter().all(|&s| s.is_finite() && s < 1e-5 * sob[0]));
    assert!(en.iter().all(|&e| e <= en[0]));
}

#[test]
fn step_cascade_is_reported() {
    let g = GridSpec::new(1, 16, 5).unwrap();
    let u = SpectralVectorField::from_fn(g, |x| [0.5 * (2.0 * PI * x[0]).sin(), 0.0, 0.0]);
    let init = FluidState::from_velocity(SpectralField::constant(g, 1.0), &u, SpectralField::zeros(g), 0.0).unwrap();
    let mut cfg = SolverConfig::new(1e-2, params());
    cfg.rho_floor = 0.999;
    cfg.h_min = 1e-2 / 8.0;
    let solver = Solver::new(cfg, NoiseModel::none(g)).unwrap();
    let traj = solver.run_trajectory(&init, 1.0, 0).unwrap();
    assert!(matches!(traj.failure, Some(SceError::StepCascade { .. })), "{:?}", traj.failure);
    assert!(traj.states.len() < 101);
}

#[test]
fn trajectories_are_reproducible_from_the_seed() {
    let g = GridSpec::new(1, 16, 5).unwrap();
    let noise = NoiseModel::cosine_family(g, 2, 0.3, 1.0).unwrap();
    let u = SpectralVectorField::from_fn(g, |x| [0.2 * (2.0 * PI * x[0]).sin(), 0.0, 0.0]);
    let init = FluidState::from_velocity(bumpy_density(g), &u, SpectralField::constant(g, 0.1), 0.0).unwrap();
    let mut cfg = SolverConfig::new(1e-3, params());
    cfg.eps_visc = 1e-4;
    let solver = Solver::new(cfg, noise).unwrap();
    let a = solver.run_trajectory(&init, 0.02, 5).unwrap();
    let b = solver.run_trajectory(&init, 0.02, 5).unwrap();
    let c = solver.run_trajectory(&init, 0.02, 6).unwrap();
    assert_eq!(a.ledger, b.ledger);
    assert_eq!(a.final_state(), b.final_state());
    assert_ne!(a.ledger, c.ledger);
    assert_eq!(a.increments.len(), 20);
}

#[test]
fn wiener_path_shape_is_checked() {
    let g = GridSpec::new(1, 16, 5).unwrap();
    let solver = Solver::new(SolverConfig::new(1e-3, params()), NoiseModel::constant(g, 0.1).unwrap()).unwrap();
    let init = stationary(g);
    assert!(solver.run_with_path(&init, 5, &WienerPath::zeros(2, 1e-3, 5)).is_err());
    assert!(solver.run_with_path(&init, 6, &WienerPath::zeros(1, 1e-3, 5)).is_err());
    assert!(solver.steps_for(0.0105).is_err());
}

#[test]
fn config_validation_rejects_bad_values() {
    let mut cfg = SolverConfig::new(1e-3, params());
    cfg.eps_visc = -1.0;
    assert!(cfg.validate().is_err());
    let mut cfg = SolverConfig::new(1e-3, params());
    cfg.h_min = 1.0;
    assert!(cfg.validate().is_err());
    assert!(SolverConfig::new(0.0, params()).validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_transport_conserves_integral(a in -1.0f64..1.0, b in -1.0f64..1.0, h in 0.001f64..0.1) {
        let g = GridSpec::new(1, 32, 10).unwrap();
        let f = SpectralField::from_fn(g, |x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos());
        let v = SpectralVectorField::from_fn(g, |x| [a * (2.0 * PI * x[0]).sin() + b, 0.0, 0.0]);
        let moved = transport_step(&f, &v, h, 1).unwrap();
        prop_assert!((moved.integral() - f.integral()).abs() < 1e-12);
    }

    #[test]
    fn upwind_keeps_positivity(a in -2.0f64..2.0, h in 0.001f64..0.2) {
        let g = GridSpec::new(1, 32, 10).unwrap();
        let f = SpectralField::from_fn(g, |x| 1.0 + 0.9 * (2.0 * PI * x[0]).cos());
        let v = SpectralVectorField::from_fn(g, |x| [a * (2.0 * PI * x[0]).sin(), 0.0, 0.0]);
        let moved = transport_step_upwind(&f, &v, h, 1).unwrap();
        prop_assert!(moved.min() > 0.0);
    }
}
