use std::f64::consts::PI;

use proptest::prelude::*;
use sce_core::dissipation::*;
use sce_core::noise::NoiseModel;
use sce_core::scheme::{FluidState, Solver, SolverConfig};
use sce_core::thermo::ThermoParams;
use sce_core::torus::{GridSpec, SpectralField, SpectralVectorField};
use sce_core::SceError;

fn params() -> ThermoParams {
    ThermoParams::new(1.4).unwrap()
}

fn wavy_state(g: GridSpec, a: f64, b: f64, c: f64) -> FluidState {
    let rho = SpectralField::from_fn(g, |x| 1.0 + a * (2.0 * PI * x[0]).cos());
    let u = SpectralVectorField::from_fn(g, |x| [b * (2.0 * PI * x[0]).sin(), 0.0, 0.0]);
    let s = SpectralField::from_fn(g, |x| c * (2.0 * PI * x[0]).sin());
    let entropy = rho.mul(&s).unwrap();
    FluidState::from_velocity(rho, &u, entropy, 0.0).unwrap()
}

#[test]
fn energies_of_uniform_states() {
    let g = GridSpec::new(1, 16, 5).unwrap();
    let rho = SpectralField::constant(g, 2.0);
    let u = SpectralVectorField::constant(g, [0.5, 0.0, 0.0]);
    let s = FluidState::from_velocity(rho, &u, SpectralField::zeros(g), 0.0).unwrap();
    assert!((kinetic_energy(&s) - 0.25).abs() < 1e-15);
    // c_v ρ^γ with c_v = 2.5
    let p = params();
    assert!((internal_energy(&s, &p).unwrap() - 2.5 * 2f64.powf(1.4)).abs() < 1e-13);
    assert_eq!(total_energy(&s, None, &p).unwrap(), kinetic_energy(&s) + internal_energy(&s, &p).unwrap());
}

#[test]
fn ito_correction_hand_value() {
    let g = GridSpec::new(1, 16, 5).unwrap();
    let rho = SpectralField::constant(g, 2.0);
    let phi = vec![SpectralVectorField::constant(g, [0.3, 0.0, 0.0])];
    assert!((ito_correction(&rho, &phi).unwrap() - 0.5 * 2.0 * 0.09).abs() < 1e-15);
    let mom = SpectralVectorField::constant(g, [1.5, 0.0, 0.0]);
    assert!((noise_increment(&mom, &phi, &[0.2]).unwrap() - 1.5 * 0.3 * 0.2).abs() < 1e-15);
}

#[test]
fn balance_residual_combines_all_terms() {
    let row = |t: f64, e: f64, sob: f64, ito: f64, noise: f64| LedgerRow {
        t,
        dt: 0.1,
        eps: 0.5,
        e_kin: e,
        e_int: 1.0,
        sobolev: sob,
        ito,
        noise_increment: noise,
        residual: 0.0,
    };
    let prev = row(0.0, 2.0, 9.0, 0.4, 0.0);
    let next = row(0.1, 1.5, 2.0, 7.0, 0.25);
    // −0.5 + 0.1·0.5·2 − 0.1·0.4 − 0.25
    let expected = -0.5 + 0.1 - 0.04 - 0.25;
    assert!((energy_balance_residual(&prev, &next) - expected).abs() < 1e-15);
}

#[test]
fn ledger_csv_has_header_and_round_trips() {
    let g = GridSpec::new(1, 16, 5).unwrap();
    let mut cfg = SolverConfig::new(1e-3, params());
    cfg.eps_visc = 1e-4;
    let solver = Solver::new(cfg, NoiseModel::cosine_family(g, 2, 0.2, 1.0).unwrap()).unwrap();
    let traj = solver.run_trajectory(&wavy_state(g, 0.2, 0.1, 0.1), 0.01, 3).unwrap();
    let csv = traj.ledger.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), LEDGER_CSV_HEADER);
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    for (parsed, row) in rows.iter().zip(traj.ledger.rows()) {
        assert_eq!(parsed, &vec![row.t, row.e_kin, row.e_int, row.sobolev, row.ito, row.noise_increment, row.residual]);
    }
    assert!((traj.ledger.cumulative_residual() - traj.ledger.residuals().iter().sum::<f64>()).abs() == 0.0);
}

#[test]
fn relative_energy_of_a_state_against_itself_is_zero() {
    let g = GridSpec::new(1, 32, 10).unwrap();
    let p = params();
    let s = wavy_state(g, 0.3, 0.4, 0.2);
    let r = ReferenceState::from_fluid(&s, &p).unwrap();
    let rep = relative_energy(&s, &r, None, &p).unwrap();
    assert!(rep.value.abs() < 1e-12, "{}", rep.value);
    assert!(rep.q_value.is_none());
}

#[test]
fn essential_box_cutoff() {
    let b = EssentialBox { rho: (1.0, 2.0), energy: (1.0, 2.0) };
    assert_eq!(b.eval(1.5, 1.5), 1.0);
    assert_eq!(b.eval(0.5, 4.0), 1.0);
    assert_eq!(b.eval(0.2, 1.5), 0.0);
    assert_eq!(b.eval(1.5, 20.0), 0.0);
    assert_eq!(b.eval(-1.0, 1.5), 0.0);
    let mid = b.eval(0.5 / 2f64.sqrt(), 1.5);
    assert!((mid - 0.5).abs() < 1e-12);
}

#[test]
fn monitor_of_identical_runs_is_flat_zero() {
    let g = GridSpec::new(1, 16, 5).unwrap();
    let mut cfg = SolverConfig::new(1e-3, params());
    cfg.eps_visc = 1e-4;
    let solver = Solver::new(cfg, NoiseModel::none(g)).unwrap();
    let a = solver.run_trajectory(&wavy_state(g, 0.2, 0.1, 0.1), 0.01, 1).unwrap();
    let rep = weak_strong_monitor(&a, None, &a, &params(), 1.0, 0.05, 1e-12).unwrap();
    assert!(rep.passed());
    assert!(rep.rows.iter().all(|r| r.e_rel.abs() < 1e-12));
    let b = solver.run_trajectory(&wavy_state(g, 0.2, 0.1, 0.1), 0.01, 2).unwrap();
    assert!(matches!(weak_strong_monitor(&a, None, &b, &params(), 1.0, 0.05, 0.0), Err(SceError::Config(_))));
}

#[test]
fn moments_and_monotonicity() {
    assert!(apriori_moment_check(&[], 2).is_err());
    let rep = |m: f64, se: f64| MomentReport { p: 2, n_paths: 10, moment: m, std_error: se, finite: true };
    assert!(moments_monotone(&[rep(1.0, 0.1), rep(1.2, 0.1), rep(1.15, 0.01)], 2.0));
    assert!(!moments_monotone(&[rep(1.0, 0.01), rep(0.5, 0.01)], 2.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relative_energy_is_nonnegative(
        a in -0.8f64..0.8, b in -2.0f64..2.0, c in -1.0f64..1.0,
        a2 in -0.8f64..0.8, b2 in -2.0f64..2.0, c2 in -1.0f64..1.0,
    ) {
        let g = GridSpec::new(1, 16, 5).unwrap();
        let p = params();
        let s = wavy_state(g, a, b, c);
        let r = ReferenceState::from_fluid(&wavy_state(g, a2, b2, c2), &p).unwrap();
        let dens = relative_energy_density(&s, &r, &p).unwrap();
        for v in dens {
            prop_assert!(v >= -1e-12, "{}", v);
        }
    }
}
