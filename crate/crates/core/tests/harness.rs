use std::f64::consts::PI;

use sce_core::harness::config::{InitialFamily, InitialSection, NoiseKind};
use sce_core::harness::*;
use sce_core::scheme::Solver;
use sce_core::thermo::ThermoParams;
use sce_core::torus::GridSpec;
use sce_core::SceError;

fn no_env() -> Vec<(String, String)> {
    Vec::new()
}

#[test]
fn emitted_config_parses_back() {
    let cfg = parse_config(
        r#"
kind = "defect"
seed = 17
[grid]
n = 48
[noise]
kind = "cosine"
modes = 3
sigma = 0.2
[initial]
family = "isentropic-wave"
amplitude = 0.01
"#,
    )
    .unwrap();
    assert_eq!(cfg.kind, ExperimentKind::Defect);
    assert_eq!(cfg.modes(), 16);
    assert_eq!(cfg.noise.kind, NoiseKind::Cosine);
    let back = parse_config(&emit_config(&cfg)).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(parse_config("").unwrap(), RunConfig::default());
}

#[test]
fn every_problem_is_reported() {
    let err = parse_config(
        r#"
colour = "red"
[grid]
n = 30
modes = 16
size = 3
[solver]
h = "fast"
"#,
    )
    .unwrap_err();
    let SceError::Config(msg) = err else { panic!("expected a configuration error") };
    assert!(msg.contains("colour"), "{msg}");
    assert!(msg.contains("[grid] size: unknown key (expected one of"), "{msg}");
    assert!(msg.contains("[grid] modes = 16: exceeds n/3 = 10"), "{msg}");
    assert!(msg.contains("[solver]"), "{msg}");
    assert!(msg.lines().count() >= 4, "{msg}");
    assert!(matches!(parse_config("[grid"), Err(SceError::Parse(_))));
}

#[test]
fn environment_overrides_the_file() {
    let vars = vec![
        ("SCE_GRID_N".to_string(), "64".to_string()),
        ("SCE_SEED".to_string(), "99".to_string()),
        ("SCE_INITIAL_FAMILY".to_string(), "density-pulse".to_string()),
        ("HOME".to_string(), "/ignored".to_string()),
    ];
    let cfg = parse_config_with_env("seed = 1\n[grid]\nn = 32\n", vars).unwrap();
    assert_eq!(cfg.grid.n, 64);
    assert_eq!(cfg.seed, 99);
    assert_eq!(cfg.initial.family, InitialFamily::DensityPulse);
    let bad = parse_config_with_env("", vec![("SCE_NOPE_X".to_string(), "1".to_string())]);
    assert!(bad.is_err());
}

#[test]
fn report_indices_are_spread_over_the_horizon() {
    assert_eq!(report_indices(20, 4), vec![5, 10, 15, 20]);
    assert_eq!(report_indices(3, 4), vec![1, 2, 3]);
}

#[test]
fn initial_families_are_positive_and_consistent() {
    let p = ThermoParams::new(1.4).unwrap();
    let g = GridSpec::new(2, 16, 5).unwrap();
    let spec = |family| InitialSection { family, amplitude: 0.3, envelope: 0.2, wavenumber: 2, ..InitialSection::default() };
    for family in [InitialFamily::Stationary, InitialFamily::DensityPulse, InitialFamily::IsentropicWave, InitialFamily::OscillationPair] {
        let s = initial_condition(&spec(family), &g, &p).unwrap();
        assert!(s.rho.min() > 0.0, "{family:?}");
    }
    let pulse = initial_condition(&spec(InitialFamily::DensityPulse), &g, &p).unwrap();
    // peak at the box centre
    assert!((pulse.rho.max() - 1.3).abs() < 0.05);
    let bad = InitialSection { rho: 0.0, ..InitialSection::default() };
    assert!(initial_condition(&bad, &g, &p).is_err());
    // oscillation pair at K = N/2 alternates exactly
    let g1 = GridSpec::new(1, 16, 5).unwrap();
    let osc = InitialSection { family: InitialFamily::OscillationPair, amplitude: 1.0, wavenumber: 8, ..InitialSection::default() };
    let s = initial_condition(&osc, &g1, &p).unwrap();
    for (j, m) in s.mom.component(0).physical().iter().enumerate() {
        assert_eq!(*m, if j % 2 == 0 { 1.0 } else { -1.0 });
    }
}

#[test]
fn acoustic_wave_travels_at_the_sound_speed() {
    // ρ̄ = 1, s̄ = 0: p = ρ^γ, so c = √γ
    let p = ThermoParams::new(1.4).unwrap();
    assert!((sound_speed(1.0, 0.0, &p) - 1.4f64.sqrt()).abs() < 1e-15);
    let a = 1e-4;
    let cfg = parse_config(&format!(
        "[grid]\nn = 32\n[solver]\nh = 1e-3\nhorizon = 0.25\n[initial]\nfamily = \"isentropic-wave\"\namplitude = {a}\n"
    ))
    .unwrap();
    let grid = cfg.grid_spec().unwrap();
    let solver = Solver::new(cfg.solver_config().unwrap(), cfg.noise_model().unwrap()).unwrap();
    let init = initial_condition(&cfg.initial, &grid, &p).unwrap();
    let traj = solver.run_trajectory(&init, 0.25, 0).unwrap();
    let c = 1.4f64.sqrt();
    let t = 0.25;
    let last = traj.final_state();
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.coordinate(i)[0];
        let expected = (2.0 * PI * (x - c * t)).cos();
        worst = worst.max(((last.rho.physical()[i] - 1.0) / a - expected).abs());
    }
    assert!(worst < 1e-2, "{worst}");
}

#[test]
fn stationary_simulation_passes_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("[solver]\nhorizon = 0.02\neps_visc = 1e-3\n").unwrap();
    let m = run(&cfg, dir.path()).unwrap();
    assert!(m.passed(), "{m:?}");
    assert!(m.checks.iter().any(|c| c.name == "energy_residual" && c.value == 0.0));
    assert!(m.verify(dir.path()).is_empty());
    for f in ["config.toml", "ledger.csv", "rho.bin", "entropy.bin", "mom_0.bin"] {
        assert!(m.files.iter().any(|e| e.path == f), "{f}");
    }
    let loaded = RunManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded, m);
    std::fs::write(dir.path().join("rho.bin"), b"tampered").unwrap();
    assert_eq!(m.verify(dir.path()), vec!["rho.bin".to_string()]);
}

#[test]
fn manifest_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        "seed = 5\n[noise]\nkind = \"cosine\"\nmodes = 2\nsigma = 0.2\n[solver]\nhorizon = 0.02\neps_visc = 1e-4\n[initial]\nfamily = \"density-pulse\"\namplitude = 0.2\n",
    )
    .unwrap();
    let first = run(&cfg, &dir.path().join("a")).unwrap();
    let again = load_config(&dir.path().join("a").join(MANIFEST_FILE), no_env()).unwrap();
    assert_eq!(again, cfg);
    let second = run(&again, &dir.path().join("b")).unwrap();
    assert_eq!(first.files, second.files);
    // the file state round-trips through the `file` initial family
    let resumed = parse_config(&format!(
        "[initial]\nfamily = \"file\"\npath = \"{}\"\n",
        dir.path().join("a").display()
    ))
    .unwrap();
    let p = resumed.thermo_params().unwrap();
    let s = initial_condition(&resumed.initial, &resumed.grid_spec().unwrap(), &p).unwrap();
    assert!(s.rho.min() > 0.0);
}

#[test]
fn small_ensembles_are_refused_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("kind = \"ensemble\"\n[ensemble]\npaths = 10\n[noise]\nkind = \"constant\"\nsigma = 0.1\n").unwrap();
    let m = run(&cfg, dir.path()).unwrap();
    assert!(!m.passed());
    assert!(m.error.as_deref().unwrap().contains("at least 30"), "{:?}", m.error);
}

#[test]
fn select_runs_report_markov_checks() {
    let dir = tempfile::tempdir().unwrap();
    let closed = run(&parse_config("kind = \"select\"\n").unwrap(), &dir.path().join("closed")).unwrap();
    assert!(closed.passed());
    let text = std::fs::read_to_string(dir.path().join("closed").join("selection.txt")).unwrap();
    assert!(text.contains("a,b,c,1e0"));
    let open = run(&parse_config("kind = \"select\"\n[select]\ntoy = \"open\"\n").unwrap(), &dir.path().join("open")).unwrap();
    assert!(!open.passed());
    assert!(open.error.as_deref().unwrap().contains("reconstruction"), "{:?}", open.error);
    let csv = std::fs::read_to_string(dir.path().join("open").join("selections.csv")).unwrap();
    assert!(csv.contains("# 1 of 4 selections are Markov"));
}
