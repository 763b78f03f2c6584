//! C ABI over `sce-core`.
//!
//! Every fallible function returns an [`SceStatus`]; on failure the message is kept in a
//! thread-local slot readable through [`sce_last_error`]. Objects cross the boundary as
//! opaque handles that the caller releases with the matching `*_free` function. Strings
//! returned by the library are released with [`sce_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sce_core::harness::{parse_config, run, RunConfig};
use sce_core::harness::initial_condition;
use sce_core::pathlaw::PathLaw;
use sce_core::scheme::{Solver, Trajectory};
use sce_core::thermo::{self, ThermoParams, ThermoPoint};
use sce_core::SceError;

/// Result codes. `SCE_STATUS_OK` is zero; everything else is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    OutOfRange = 3,
    BufferTooSmall = 4,
    Config = 10,
    GridMismatch = 11,
    Domain = 12,
    Numerical = 13,
    Statistics = 14,
    PathLaw = 15,
    Io = 16,
    Parse = 17,
    Panic = 99,
}

impl From<&SceError> for SceStatus {
    fn from(e: &SceError) -> Self {
        match e {
            SceError::Config(_) => SceStatus::Config,
            SceError::GridMismatch(_) => SceStatus::GridMismatch,
            SceError::Domain(_) => SceStatus::Domain,
            SceError::ExponentOverflow { .. }
            | SceError::MassSolve { .. }
            | SceError::StepRejected { .. }
            | SceError::StepCascade { .. }
            | SceError::NonFinite(_) => SceStatus::Numerical,
            SceError::Statistics(_) => SceStatus::Statistics,
            SceError::PathLaw(_) => SceStatus::PathLaw,
            SceError::Io(_) => SceStatus::Io,
            SceError::Parse(_) => SceStatus::Parse,
        }
    }
}

/// Parsed, validated run configuration.
pub struct SceConfig(RunConfig);

/// A completed single-path simulation.
pub struct SceTrajectory(Trajectory);

/// Finite path law.
pub struct ScePathLaw(PathLaw);

/// One row of the energy ledger.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SceLedgerRow {
    pub t: f64,
    pub dt: f64,
    pub eps: f64,
    pub e_kin: f64,
    pub e_int: f64,
    pub sobolev: f64,
    pub ito: f64,
    pub noise_increment: f64,
    pub residual: f64,
}

/// Shape of the collocation grid.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SceGridInfo {
    pub dim: usize,
    pub points_per_dim: usize,
    pub modes: usize,
    /// Samples per scalar field, `points_per_dim^dim`.
    pub len: usize,
}

/// Field selector for [`sce_trajectory_field`], passed as its integer value.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceField {
    Density = 0,
    Entropy = 1,
    Momentum0 = 2,
    Momentum1 = 3,
    Momentum2 = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: SceStatus, msg: impl Into<String>) -> SceStatus {
    set_error(msg);
    status
}

fn from_core(e: SceError) -> SceStatus {
    let status = SceStatus::from(&e);
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into `SceStatus::Panic`.
fn guard(f: impl FnOnce() -> SceStatus) -> SceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SceStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, SceStatus> {
    if p.is_null() {
        return Err(fail(SceStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SceStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> SceStatus {
    if out.is_null() {
        return fail(SceStatus::NullPointer, format!("{name} is null"));
    }
    out.write(value);
    SceStatus::Ok
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, SceStatus> {
    p.as_ref().ok_or_else(|| fail(SceStatus::NullPointer, format!("{name} is null")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failure on this thread; empty if none. Valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn sce_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sce_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sce_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn thermo_call(gamma: f64, out: *mut f64, f: impl FnOnce(&ThermoParams) -> sce_core::Result<f64>) -> SceStatus {
    guard(|| match ThermoParams::new(gamma).and_then(|p| f(&p)) {
        Ok(v) => write_out(out, v, "out"),
        Err(e) => from_core(e),
    })
}

/// Pressure from density and total entropy `S = ρ s`.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn sce_pressure_conservative(gamma: f64, rho: f64, s_total: f64, out: *mut f64) -> SceStatus {
    thermo_call(gamma, out, |p| thermo::pressure_conservative(rho, s_total, p))
}

/// Temperature from density and total entropy.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn sce_temperature_conservative(gamma: f64, rho: f64, s_total: f64, out: *mut f64) -> SceStatus {
    thermo_call(gamma, out, |p| thermo::temperature_conservative(rho, s_total, p))
}

/// Internal energy per unit volume from density and total entropy.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn sce_energy_density_conservative(gamma: f64, rho: f64, s_total: f64, out: *mut f64) -> SceStatus {
    thermo_call(gamma, out, |p| thermo::energy_density_conservative(rho, s_total, p))
}

/// Specific entropy `s(ρ, θ)`.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn sce_entropy(gamma: f64, rho: f64, theta: f64, out: *mut f64) -> SceStatus {
    thermo_call(gamma, out, |p| thermo::entropy(ThermoPoint::new(rho, theta)?, p))
}

/// Parses a TOML configuration. Environment overrides are not applied.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sce_config_parse(text: *const c_char, out: *mut *mut SceConfig) -> SceStatus {
    guard(|| {
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(SceStatus::NullPointer, "out is null");
        }
        match parse_config(text) {
            Ok(cfg) => write_out(out, Box::into_raw(Box::new(SceConfig(cfg))), "out"),
            Err(e) => from_core(e),
        }
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `cfg` must come from [`sce_config_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sce_config_free(cfg: *mut SceConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Resolved configuration as TOML; release with [`sce_string_free`]. Null if `cfg` is null.
///
/// # Safety
/// `cfg` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sce_config_emit(cfg: *const SceConfig) -> *mut c_char {
    match handle(cfg, "cfg") {
        Ok(c) => owned_string(sce_core::harness::emit_config(&c.0)),
        Err(_) => ptr::null_mut(),
    }
}

/// Overrides the seed of a configuration.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sce_config_set_seed(cfg: *mut SceConfig, seed: u64) -> SceStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.0.seed = seed;
            SceStatus::Ok
        }
        None => fail(SceStatus::NullPointer, "cfg is null"),
    }
}

/// Runs the configured experiment into `out_dir`, writing the manifest and outputs.
/// `passed` receives whether every check passed.
///
/// # Safety
/// `cfg` must be a live handle, `out_dir` a NUL-terminated path, `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn sce_run(cfg: *const SceConfig, out_dir: *const c_char, passed: *mut bool) -> SceStatus {
    guard(|| {
        let (cfg, dir) = match (handle(cfg, "cfg"), str_arg(out_dir, "out_dir")) {
            (Ok(c), Ok(d)) => (c, d),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if passed.is_null() {
            return fail(SceStatus::NullPointer, "passed is null");
        }
        match run(&cfg.0, Path::new(dir)) {
            Ok(m) => {
                if let Some(e) = &m.error {
                    set_error(e.clone());
                }
                write_out(passed, m.passed(), "passed")
            }
            Err(e) => from_core(e),
        }
    })
}

/// Integrates one trajectory of the configured problem with the configured seed, without
/// writing files. A step failure is reported as an error and no handle is returned.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sce_simulate(cfg: *const SceConfig, out: *mut *mut SceTrajectory) -> SceStatus {
    guard(|| {
        let cfg = match handle(cfg, "cfg") {
            Ok(c) => &c.0,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(SceStatus::NullPointer, "out is null");
        }
        let traj = (|| {
            let solver = Solver::new(cfg.solver_config()?, cfg.noise_model()?)?;
            let init = initial_condition(&cfg.initial, &cfg.grid_spec()?, &cfg.thermo_params()?)?;
            let traj = solver.run_trajectory(&init, cfg.solver.horizon, cfg.seed)?;
            match traj.failure {
                Some(e) => Err(e),
                None => Ok(traj),
            }
        })();
        match traj {
            Ok(t) => write_out(out, Box::into_raw(Box::new(SceTrajectory(t))), "out"),
            Err(e) => from_core(e),
        }
    })
}

/// Releases a trajectory. Null is ignored.
///
/// # Safety
/// `traj` must come from [`sce_simulate`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sce_trajectory_free(traj: *mut SceTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Grid shape of the trajectory's snapshots.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sce_trajectory_grid(traj: *const SceTrajectory, out: *mut SceGridInfo) -> SceStatus {
    match handle(traj, "traj") {
        Ok(t) => {
            let g = t.0.states[0].grid();
            let info = SceGridInfo { dim: g.dim(), points_per_dim: g.points_per_dim(), modes: g.modes(), len: g.len() };
            write_out(out, info, "out")
        }
        Err(s) => s,
    }
}

/// Number of stored snapshots, including the initial state; 0 for a null handle.
///
/// # Safety
/// `traj` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sce_trajectory_snapshots(traj: *const SceTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.states.len())
}

/// Time of snapshot `index`.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sce_trajectory_time(traj: *const SceTrajectory, index: usize, out: *mut f64) -> SceStatus {
    match handle(traj, "traj") {
        Ok(t) => match t.0.states.get(index) {
            Some(s) => write_out(out, s.time, "out"),
            None => fail(SceStatus::OutOfRange, format!("snapshot {index} of {}", t.0.states.len())),
        },
        Err(s) => s,
    }
}

/// Number of ledger rows (accepted steps plus the initial row); 0 for a null handle.
///
/// # Safety
/// `traj` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sce_trajectory_ledger_len(traj: *const SceTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.ledger.len())
}

/// Ledger row `index`.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sce_trajectory_ledger_row(traj: *const SceTrajectory, index: usize, out: *mut SceLedgerRow) -> SceStatus {
    match handle(traj, "traj") {
        Ok(t) => match t.0.ledger.rows().get(index) {
            Some(r) => write_out(
                out,
                SceLedgerRow {
                    t: r.t,
                    dt: r.dt,
                    eps: r.eps,
                    e_kin: r.e_kin,
                    e_int: r.e_int,
                    sobolev: r.sobolev,
                    ito: r.ito,
                    noise_increment: r.noise_increment,
                    residual: r.residual,
                },
                "out",
            ),
            None => fail(SceStatus::OutOfRange, format!("ledger row {index} of {}", t.0.ledger.len())),
        },
        Err(s) => s,
    }
}

/// Copies the physical samples of one field of snapshot `index` into `buf` (row-major,
/// `SceGridInfo::len` values). `written` receives the number of samples required; with
/// a short buffer nothing is copied and `SCE_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `traj` must be a live handle, `buf` valid for `cap` doubles (or null with `cap == 0`),
/// `written` writable.
#[no_mangle]
pub unsafe extern "C" fn sce_trajectory_field(
    traj: *const SceTrajectory,
    index: usize,
    field: u32,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> SceStatus {
    guard(|| {
        let t = match handle(traj, "traj") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let Some(state) = t.0.states.get(index) else {
            return fail(SceStatus::OutOfRange, format!("snapshot {index} of {}", t.0.states.len()));
        };
        let samples = match field {
            f if f == SceField::Density as u32 => state.rho.physical(),
            f if f == SceField::Entropy as u32 => state.entropy.physical(),
            f if (SceField::Momentum0 as u32..=SceField::Momentum2 as u32).contains(&f) => {
                let axis = (f - SceField::Momentum0 as u32) as usize;
                match state.mom.components().get(axis) {
                    Some(c) => c.physical(),
                    None => return fail(SceStatus::OutOfRange, format!("momentum component {axis} in {} dimensions", state.grid().dim())),
                }
            }
            f => return fail(SceStatus::OutOfRange, format!("unknown field selector {f}")),
        };
        let status = write_out(written, samples.len(), "written");
        if status != SceStatus::Ok {
            return status;
        }
        if cap < samples.len() {
            return fail(SceStatus::BufferTooSmall, format!("buffer holds {cap} of {} samples", samples.len()));
        }
        if buf.is_null() {
            return fail(SceStatus::NullPointer, "buf is null");
        }
        ptr::copy_nonoverlapping(samples.as_ptr(), buf, samples.len());
        SceStatus::Ok
    })
}

/// Parses a path law from its text form (one `label,...,label,probability` line per atom).
///
/// # Safety
/// `text` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sce_pathlaw_parse(text: *const c_char, out: *mut *mut ScePathLaw) -> SceStatus {
    guard(|| {
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(SceStatus::NullPointer, "out is null");
        }
        match PathLaw::from_text(text) {
            Ok(l) => write_out(out, Box::into_raw(Box::new(ScePathLaw(l))), "out"),
            Err(e) => from_core(e),
        }
    })
}

/// Releases a path law. Null is ignored.
///
/// # Safety
/// `law` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sce_pathlaw_free(law: *mut ScePathLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// Text form of a law; release with [`sce_string_free`]. Null if `law` is null.
///
/// # Safety
/// `law` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sce_pathlaw_to_text(law: *const ScePathLaw) -> *mut c_char {
    match handle(law, "law") {
        Ok(l) => owned_string(l.0.to_text()),
        Err(_) => ptr::null_mut(),
    }
}

/// Number of steps of every path in the support; 0 for a null handle.
///
/// # Safety
/// `law` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sce_pathlaw_steps(law: *const ScePathLaw) -> usize {
    law.as_ref().map_or(0, |l| l.0.steps())
}

/// Law of the path shifted by `tau` steps, as a new handle.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sce_pathlaw_shift(law: *const ScePathLaw, tau: usize, out: *mut *mut ScePathLaw) -> SceStatus {
    guard(|| {
        let l = match handle(law, "law") {
            Ok(l) => l,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(SceStatus::NullPointer, "out is null");
        }
        match l.0.shift(tau) {
            Ok(s) => write_out(out, Box::into_raw(Box::new(ScePathLaw(s))), "out"),
            Err(e) => from_core(e),
        }
    })
}

/// Probability of a path given as comma-separated labels; 0 for paths outside the support.
///
/// # Safety
/// `law` must be a live handle, `path` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sce_pathlaw_prob(law: *const ScePathLaw, path: *const c_char, out: *mut f64) -> SceStatus {
    let l = match handle(law, "law") {
        Ok(l) => l,
        Err(s) => return s,
    };
    let path = match str_arg(path, "path") {
        Ok(p) => p,
        Err(s) => return s,
    };
    let labels: Vec<String> = path.split(',').map(|s| s.trim().to_string()).collect();
    write_out(out, l.0.prob(&labels), "out")
}
