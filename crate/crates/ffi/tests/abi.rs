use std::ffi::{CStr, CString};
use std::ptr;

use sce_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sce_last_error()) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> *mut SceConfig {
    let c = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { sce_config_parse(c.as_ptr(), &mut cfg) }, SceStatus::Ok, "{}", last_error());
    cfg
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(sce_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn thermodynamics_hand_values_and_errors() {
    let mut out = 0.0;
    // γ = 2: c_v = 1, ρ = 2, S = 0 gives p = ρ^γ = 4
    assert_eq!(unsafe { sce_pressure_conservative(2.0, 2.0, 0.0, &mut out) }, SceStatus::Ok);
    assert_eq!(out, 4.0);
    assert_eq!(unsafe { sce_temperature_conservative(2.0, 2.0, 0.0, &mut out) }, SceStatus::Ok);
    assert_eq!(out, 2.0);
    assert_eq!(unsafe { sce_energy_density_conservative(2.0, 2.0, 0.0, &mut out) }, SceStatus::Ok);
    assert_eq!(out, 4.0);
    assert_eq!(unsafe { sce_entropy(2.0, 2.0, 2.0, &mut out) }, SceStatus::Ok);
    assert!(out.abs() < 1e-15);
    assert_eq!(unsafe { sce_pressure_conservative(1.4, -1.0, 0.0, &mut out) }, SceStatus::Domain);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { sce_pressure_conservative(1.4, 1.0, 0.0, ptr::null_mut()) }, SceStatus::NullPointer);
    assert!(last_error().contains("out"));
    assert_eq!(unsafe { sce_pressure_conservative(1.0, 1.0, 0.0, &mut out) }, SceStatus::Config);
}

#[test]
fn config_errors_are_reported_with_messages() {
    let bad = CString::new("[grid]\nsize = 3\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { sce_config_parse(bad.as_ptr(), &mut cfg) }, SceStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("size"), "{}", last_error());
    assert_eq!(unsafe { sce_config_parse(ptr::null(), &mut cfg) }, SceStatus::NullPointer);
    let invalid = [0xffu8, 0];
    assert_eq!(unsafe { sce_config_parse(invalid.as_ptr().cast(), &mut cfg) }, SceStatus::InvalidUtf8);
}

#[test]
fn config_round_trips_through_emit() {
    let cfg = parse("seed = 3\n[grid]\nn = 16\n");
    unsafe {
        assert_eq!(sce_config_set_seed(cfg, 11), SceStatus::Ok);
        let text = sce_config_emit(cfg);
        let owned = CStr::from_ptr(text).to_str().unwrap().to_string();
        sce_string_free(text);
        assert!(owned.contains("seed = 11"), "{owned}");
        let again = parse(&owned);
        let text2 = sce_config_emit(again);
        assert_eq!(CStr::from_ptr(text2).to_str().unwrap(), owned);
        sce_string_free(text2);
        sce_config_free(again);
        sce_config_free(cfg);
        assert!(sce_config_emit(ptr::null()).is_null());
    }
}

#[test]
fn simulation_exposes_ledger_and_fields() {
    let cfg = parse("[grid]\nn = 16\n[solver]\nh = 1e-3\nhorizon = 5e-3\n[initial]\nfamily = \"density-pulse\"\namplitude = 0.2\n");
    let mut traj = ptr::null_mut();
    unsafe {
        assert_eq!(sce_simulate(cfg, &mut traj), SceStatus::Ok, "{}", last_error());
        let mut info = SceGridInfo::default();
        assert_eq!(sce_trajectory_grid(traj, &mut info), SceStatus::Ok);
        assert_eq!((info.dim, info.points_per_dim, info.len), (1, 16, 16));
        assert_eq!(sce_trajectory_snapshots(traj), 6);
        assert_eq!(sce_trajectory_ledger_len(traj), 6);
        let mut t = 0.0;
        assert_eq!(sce_trajectory_time(traj, 5, &mut t), SceStatus::Ok);
        assert!((t - 5e-3).abs() < 1e-15);
        let mut row = SceLedgerRow::default();
        assert_eq!(sce_trajectory_ledger_row(traj, 3, &mut row), SceStatus::Ok);
        assert!(row.e_int > 0.0 && row.residual.abs() < 1e-6);
        assert_eq!(sce_trajectory_ledger_row(traj, 99, &mut row), SceStatus::OutOfRange);

        let mut written = 0;
        assert_eq!(sce_trajectory_field(traj, 0, SceField::Density as u32, ptr::null_mut(), 0, &mut written), SceStatus::BufferTooSmall);
        assert_eq!(written, 16);
        let mut rho = vec![0.0; written];
        assert_eq!(sce_trajectory_field(traj, 0, SceField::Density as u32, rho.as_mut_ptr(), rho.len(), &mut written), SceStatus::Ok);
        // the pulse peaks at the centre of the box
        let peak = rho.iter().copied().fold(f64::MIN, f64::max);
        assert!((peak - rho[8]).abs() < 1e-12 && peak > 1.1);
        assert_eq!(sce_trajectory_field(traj, 0, SceField::Momentum1 as u32, rho.as_mut_ptr(), 16, &mut written), SceStatus::OutOfRange);
        assert_eq!(sce_trajectory_field(traj, 0, 42, rho.as_mut_ptr(), 16, &mut written), SceStatus::OutOfRange);
        sce_trajectory_free(traj);
        sce_config_free(cfg);
    }
}

#[test]
fn run_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse("[solver]\nhorizon = 2e-3\n");
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut passed = false;
    unsafe {
        assert_eq!(sce_run(cfg, out.as_ptr(), &mut passed), SceStatus::Ok, "{}", last_error());
        sce_config_free(cfg);
    }
    assert!(passed);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn path_laws_parse_shift_and_serialise() {
    let text = CString::new("a,a,b,0.25\na,b,b,0.75\n").unwrap();
    let mut law = ptr::null_mut();
    unsafe {
        assert_eq!(sce_pathlaw_parse(text.as_ptr(), &mut law), SceStatus::Ok, "{}", last_error());
        assert_eq!(sce_pathlaw_steps(law), 2);
        let path = CString::new("a,b,b").unwrap();
        let mut q = 0.0;
        assert_eq!(sce_pathlaw_prob(law, path.as_ptr(), &mut q), SceStatus::Ok);
        assert_eq!(q, 0.75);
        let mut shifted = ptr::null_mut();
        assert_eq!(sce_pathlaw_shift(law, 1, &mut shifted), SceStatus::Ok);
        assert_eq!(sce_pathlaw_steps(shifted), 1);
        let tail = CString::new("b,b").unwrap();
        assert_eq!(sce_pathlaw_prob(shifted, tail.as_ptr(), &mut q), SceStatus::Ok);
        assert_eq!(q, 0.75);
        let s = sce_pathlaw_to_text(law);
        let mut back = ptr::null_mut();
        assert_eq!(sce_pathlaw_parse(s, &mut back), SceStatus::Ok);
        assert_eq!(CStr::from_ptr(sce_pathlaw_to_text(back)).to_bytes(), CStr::from_ptr(s).to_bytes());
        sce_string_free(s);
        let mut bad = ptr::null_mut();
        assert_eq!(sce_pathlaw_shift(law, 5, &mut bad), SceStatus::PathLaw);
        sce_pathlaw_free(back);
        sce_pathlaw_free(shifted);
        sce_pathlaw_free(law);
    }
}
