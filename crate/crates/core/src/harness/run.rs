//! Experiment pipelines behind the CLI subcommands.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::defect::{
    coarse_grain_trajectory, entropy_inequality_residual, energy_identity_residual, momentum_residual,
    write_defect_dump, DefectTerms, Renormalization,
};
use crate::dissipation::weak_strong_monitor;
use crate::ensemble::{energy_martingale_stat, martingale_stat, run_ensemble, EnsembleSpec, MIN_PATHS};
use crate::error::{Result, SceError};
use crate::pathlaw::{all_selections, closed_toy, closed_toy_preference, is_markov, krylov_select, open_toy, Functional};
use crate::scheme::{Dynamics, FluidState, Solver, Trajectory};
use crate::testfn::{ScalarTest, SpaceTimeTest, VectorTest};
use crate::torus::{write_field, SpectralField};

use super::config::{emit_config, ExperimentKind, RenormSection, RunConfig, ToyKind};
use super::initial::initial_condition;
use super::manifest::{finish_manifest, Check, RunManifest};

/// Accumulates outputs of one run.
struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
    checks: Vec<Check>,
    warnings: Vec<String>,
}

impl Outputs<'_> {
    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| SceError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn write_field(&mut self, name: &str, f: &SpectralField) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| SceError::Io(format!("{}: {e}", path.display())))?;
        write_field(BufWriter::new(file), f)?;
        self.files.push(path);
        Ok(())
    }

    /// `rho.bin`, `entropy.bin` and `mom_<i>.bin` under `prefix`.
    fn write_state(&mut self, prefix: &str, s: &FluidState) -> Result<()> {
        self.write_field(&format!("{prefix}rho.bin"), &s.rho)?;
        self.write_field(&format!("{prefix}entropy.bin"), &s.entropy)?;
        for (i, c) in s.mom.components().iter().enumerate() {
            self.write_field(&format!("{prefix}mom_{i}.bin"), c)?;
        }
        Ok(())
    }
}

/// Executes `cfg` into `out_dir` and writes the manifest. Module errors end the run but
/// are recorded in the manifest, and files written before the error are kept.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunManifest> {
    fs::create_dir_all(out_dir).map_err(|e| SceError::Io(format!("{}: {e}", out_dir.display())))?;
    let start = Instant::now();
    let config_text = emit_config(cfg);
    let mut out = Outputs { dir: out_dir, files: Vec::new(), checks: Vec::new(), warnings: Vec::new() };
    out.write("config.toml", &config_text)?;
    let result = match cfg.kind {
        ExperimentKind::Simulate => simulate(cfg, &mut out),
        ExperimentKind::Compare => compare(cfg, &mut out),
        ExperimentKind::Defect => defect(cfg, &mut out),
        ExperimentKind::Ensemble => ensemble(cfg, &mut out),
        ExperimentKind::Select => select(cfg, &mut out),
    };
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.kind.name().to_string(),
        config: config_text,
        seed: cfg.seed,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        checks: out.checks,
        warnings: out.warnings,
        error: result.err().map(|e| format!("{}: {e}", cfg.kind.name())),
        files: Vec::new(),
    };
    finish_manifest(out_dir, manifest, &out.files)
}

/// Output directory: explicit flag, else the config's `out`.
pub fn resolve_out_dir(cfg: &RunConfig, flag: Option<&Path>) -> PathBuf {
    flag.map_or_else(|| PathBuf::from(&cfg.out), Path::to_path_buf)
}

fn build_solver(cfg: &RunConfig) -> Result<(Solver, FluidState)> {
    let grid = cfg.grid_spec()?;
    let params = cfg.thermo_params()?;
    let solver = Solver::new(cfg.solver_config()?, cfg.noise_model()?)?;
    let init = initial_condition(&cfg.initial, &grid, &params)?;
    Ok((solver, init))
}

fn finished(traj: Trajectory, out: &mut Outputs<'_>) -> Result<Trajectory> {
    match &traj.failure {
        None => Ok(traj),
        Some(e) => {
            out.checks.push(Check::flag("completed", false, e.to_string()));
            Err(e.clone())
        }
    }
}

fn ledger_csv(traj: &Trajectory, interval: usize) -> String {
    let full = traj.ledger.to_csv();
    let mut lines = full.lines();
    let mut out = String::new();
    if let Some(h) = lines.next() {
        out.push_str(h);
        out.push('\n');
    }
    for (i, l) in lines.enumerate() {
        if i % interval == 0 {
            out.push_str(l);
            out.push('\n');
        }
    }
    out
}

fn simulate(cfg: &RunConfig, out: &mut Outputs<'_>) -> Result<()> {
    let (solver, init) = build_solver(cfg)?;
    let traj = solver.run_trajectory(&init, cfg.solver.horizon, cfg.seed)?;
    out.write("ledger.csv", ledger_csv(&traj, cfg.report_interval))?;
    let mut snaps = String::from("t,mass,min_rho,min_s,max_abs_u\n");
    for s in &traj.states {
        let _ = writeln!(
            snaps,
            "{:e},{:e},{:e},{:e},{:e}",
            s.time,
            s.mass(),
            s.rho.min(),
            s.specific_entropy().min(),
            s.velocity().max_abs()
        );
    }
    out.write("snapshots.csv", snaps)?;
    out.write_state("", traj.final_state())?;
    let traj = finished(traj, out)?;
    out.checks.push(Check::flag("completed", true, format!("{} snapshots", traj.states.len())));
    out.checks.push(Check::at_most("energy_residual", traj.ledger.max_abs_residual(), cfg.solver.residual_tol));
    if cfg.solver.dynamics == Dynamics::TransportOnly {
        let s0 = traj.states[0].specific_entropy().min();
        let worst = traj.states.iter().map(|s| s.specific_entropy().min()).fold(f64::INFINITY, f64::min);
        out.checks.push(Check::at_most("min_entropy_decrease", s0 - worst, 1e-8));
    }
    if traj.states.iter().any(|s| !s.rho.is_finite() || !s.mom.is_finite()) {
        out.warnings.push("non-finite values in a snapshot".into());
    }
    Ok(())
}

fn perturbed(init: &FluidState, delta: f64, mode: usize) -> Result<FluidState> {
    let g = *init.grid();
    let l = g.length(0);
    let factor = SpectralField::from_fn(g, |x| 1.0 + delta * (2.0 * std::f64::consts::PI * mode as f64 * x[0] / l).cos());
    let rho = init.rho.mul(&factor)?;
    let entropy = init.entropy.mul(&factor)?;
    FluidState::from_velocity(rho, &init.velocity(), entropy, init.time)
}

fn compare(cfg: &RunConfig, out: &mut Outputs<'_>) -> Result<()> {
    let (solver, init) = build_solver(cfg)?;
    let params = cfg.thermo_params()?;
    let c = &cfg.compare;
    let weak_init = perturbed(&init, c.delta, c.perturb_mode)?;
    let strong = finished(solver.run_trajectory(&init, cfg.solver.horizon, cfg.seed)?, out)?;
    let weak = finished(solver.run_trajectory(&weak_init, cfg.solver.horizon, cfg.seed)?, out)?;
    let report = weak_strong_monitor(&weak, None, &strong, &params, c.kappa, c.rel_tol, c.abs_tol)?;
    let mut csv = String::from("t,e_rel,bound,violated\n");
    for r in &report.rows {
        let _ = writeln!(csv, "{:e},{:e},{:e},{}", r.t, r.e_rel, r.bound, u8::from(r.violated));
    }
    out.write("compare.csv", csv)?;
    let worst = report.rows.iter().map(|r| r.e_rel - r.bound * (1.0 + c.rel_tol)).fold(f64::NEG_INFINITY, f64::max);
    out.checks.push(Check::at_most("relative_energy_envelope", worst, c.abs_tol));
    Ok(())
}

fn defect(cfg: &RunConfig, out: &mut Outputs<'_>) -> Result<()> {
    let (solver, init) = build_solver(cfg)?;
    let params = cfg.thermo_params()?;
    let d = &cfg.defect;
    let traj = finished(solver.run_trajectory(&init, cfg.solver.horizon, cfg.seed)?, out)?;
    let ctraj =
        coarse_grain_trajectory(&traj, solver.noise.phi(), solver.cfg.eps_visc, d.factor, &params, solver.cfg.rho_floor)?;
    let coarse = *ctraj.grid();
    // sine profile: its gradient pairs with cosine envelopes such as the oscillation pair's
    let profile = ScalarTest::mode([d.test_mode as i64, 0, 0], 1.0, -std::f64::consts::FRAC_PI_2).with_lengths(&coarse);
    let phi = VectorTest::new([1.0, 0.0, 0.0], profile);
    let with = momentum_residual(&ctraj, Some(&ctraj.defects), DefectTerms::Include, &phi, &params)?;
    let without = momentum_residual(&ctraj, None, DefectTerms::Exclude, &phi, &params)?;
    let renorm = match d.renormalization {
        RenormSection::Total => Renormalization::Total,
        RenormSection::Specific => Renormalization::Specific,
    };
    let weight = SpaceTimeTest { a: 1.0, b: 0.0, space: profile.with_constant(2.0).with_lengths(&coarse) };
    let entropy = entropy_inequality_residual(&ctraj, d.clamp, renorm, &weight)?;
    let energy = energy_identity_residual(&ctraj, DefectTerms::Include, &params)?;
    let mut csv = String::from("t,momentum_with_defects,momentum_without_defects,entropy_slack,energy_identity\n");
    for (n, s) in ctraj.states.iter().enumerate() {
        let e = if n == 0 { 0.0 } else { energy[n - 1] };
        let _ = writeln!(csv, "{:e},{:e},{:e},{:e},{:e}", s.time, with[n], without[n], entropy[n], e);
    }
    out.write("defect_residuals.csv", csv)?;
    let last = ctraj.defects.last().expect("trajectory has snapshots");
    out.files.extend(write_defect_dump(out.dir, last)?);
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let min_eig = ctraj.defects.iter().map(|e| e.min_conv_eigenvalue()).fold(f64::INFINITY, f64::min);
    let min_press = ctraj.defects.iter().map(|e| e.min_press()).fold(f64::INFINITY, f64::min);
    out.checks.push(Check::at_least("r_conv_psd", min_eig, -1e-12));
    out.checks.push(Check::at_least("r_press_nonnegative", min_press, -1e-12));
    out.checks.push(Check::at_most("entropy_slack", entropy.iter().copied().fold(f64::NEG_INFINITY, f64::max), d.entropy_tol));
    let ratio = max_abs(&without) / max_abs(&with).max(f64::MIN_POSITIVE);
    if d.min_ablation_ratio > 0.0 {
        out.checks.push(Check::at_least("momentum_ablation_ratio", ratio, d.min_ablation_ratio));
    }
    Ok(())
}

/// `reports` equally spaced step indices in `1..=steps`.
pub fn report_indices(steps: usize, reports: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (1..=reports).map(|r| (r * steps).div_ceil(reports).max(1)).collect();
    idx.dedup();
    idx
}

fn ensemble(cfg: &RunConfig, out: &mut Outputs<'_>) -> Result<()> {
    if cfg.ensemble.paths < MIN_PATHS {
        return Err(SceError::Statistics(format!(
            "[ensemble] paths = {}: martingale statistics need at least {MIN_PATHS} paths",
            cfg.ensemble.paths
        )));
    }
    let (solver, init) = build_solver(cfg)?;
    let steps = solver.steps_for(cfg.solver.horizon)?;
    let grid = *init.grid();
    let spec = EnsembleSpec { n_paths: cfg.ensemble.paths, base_seed: cfg.seed, solver, initial: init, horizon: cfg.solver.horizon };
    let ens = run_ensemble(&spec)?;
    if ens.failures() > 0 {
        out.warnings.push(format!("{} of {} paths failed and were excluded", ens.failures(), ens.paths.len()));
    }
    let profile = if cfg.ensemble.test_mode == 0 {
        ScalarTest::constant(1.0)
    } else {
        ScalarTest::mode([cfg.ensemble.test_mode as i64, 0, 0], 1.0, 0.0).with_lengths(&grid)
    };
    let phi = VectorTest::new([1.0, 0.0, 0.0], profile);
    let idx = report_indices(steps, cfg.ensemble.reports);
    let m = martingale_stat(&ens, &spec.solver, &phi, &idx)?;
    out.write("martingale.csv", m.to_csv())?;
    let e = energy_martingale_stat(&ens, &spec.solver, &idx)?;
    out.write("energy_martingale.csv", e.to_csv())?;
    out.checks.push(Check::flag("momentum_martingale", m.passed(), format!("{} paths, {} report times", m.n_paths, idx.len())));
    out.checks.push(Check::flag("energy_martingale", e.passed(), format!("{} paths, {} report times", e.n_paths, idx.len())));
    Ok(())
}

fn select(cfg: &RunConfig, out: &mut Outputs<'_>) -> Result<()> {
    let candidates = match cfg.select.toy {
        ToyKind::Closed => closed_toy(),
        ToyKind::Open => open_toy(),
    };
    let functionals = [Functional::new(cfg.select.discount, closed_toy_preference)];
    let mut csv = String::from("selection,markov\n");
    let all = all_selections(&candidates);
    let mut markov = 0;
    for sel in &all {
        let name: Vec<String> = sel.values().map(|l| l.support().keys().next().map(|p| p.concat()).unwrap_or_default()).collect();
        let ok = is_markov(sel);
        markov += usize::from(ok);
        let _ = writeln!(csv, "{},{}", name.join(" "), u8::from(ok));
    }
    let _ = writeln!(csv, "# {markov} of {} selections are Markov", all.len());
    out.write("selections.csv", csv)?;
    let chosen = krylov_select(&candidates, &functionals)?;
    let mut text = String::new();
    for (y, law) in &chosen {
        let _ = writeln!(text, "# {y}");
        text.push_str(&law.to_text());
    }
    out.write("selection.txt", text)?;
    out.checks.push(Check::flag("markov", is_markov(&chosen), "selected family passes the finite-space Markov check"));
    Ok(())
}
