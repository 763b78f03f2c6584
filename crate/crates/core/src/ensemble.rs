//! Monte-Carlo ensembles and martingale statistics.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, SceError};
use crate::noise::{self, path_seed};
use crate::scheme::{velocity_cutoff_factor, FluidState, Solver, Trajectory};
use crate::testfn::VectorTest;
use crate::thermo;
use crate::torus::SpectralVectorField;

/// Minimum number of completed paths before any statistic is reported.
pub const MIN_PATHS: usize = 30;

#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub n_paths: usize,
    pub base_seed: u64,
    pub solver: Solver,
    pub initial: FluidState,
    pub horizon: f64,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub paths: Vec<Trajectory>,
}

impl Ensemble {
    pub fn completed(&self) -> impl Iterator<Item = &Trajectory> {
        self.paths.iter().filter(|p| p.is_complete())
    }

    pub fn failures(&self) -> usize {
        self.paths.iter().filter(|p| !p.is_complete()).count()
    }
}

/// Runs `n_paths` independent trajectories with seeds `path_seed(base_seed, i)`.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<Ensemble> {
    if spec.n_paths == 0 {
        return Err(SceError::Config("ensemble needs at least one path".into()));
    }
    let paths = (0..spec.n_paths as u64)
        .into_par_iter()
        .map(|i| spec.solver.run_trajectory(&spec.initial, spec.horizon, path_seed(spec.base_seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let ens = Ensemble { paths };
    if ens.completed().count() == 0 {
        let first = ens.paths[0].failure.clone().expect("failed path carries its error");
        return Err(SceError::Statistics(format!("all {} paths failed; first failure: {first}", spec.n_paths)));
    }
    Ok(ens)
}

/// Per-step processes of one path for one test function.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingalePath {
    pub times: Vec<f64>,
    /// `M_n(φ)`.
    pub m: Vec<f64>,
    /// `Σ dt Σ_k (∫ ρ φ_{ε,k}·φ)²`.
    pub qv: Vec<f64>,
    /// `β_k(t_n)` per mode.
    pub beta: Vec<Vec<f64>>,
    /// `Σ dt ∫ ρ φ_{ε,k}·φ` per mode.
    pub cross: Vec<Vec<f64>>,
}

fn require_stepwise(traj: &Trajectory) -> Result<()> {
    if traj.states.len() != traj.increments.len() + 1 {
        return Err(SceError::Config(
            "martingale statistics need one snapshot per accepted step (snapshot_every = 1)".into(),
        ));
    }
    Ok(())
}

/// `M_t(φ) = ∫ m_t·φ − ∫ m_0·φ − Σ dt [χ_R ∫ (m⊗m/ρ):∇φ + χ_R ∫ p div φ + ε ∫ u·Lφ]`.
pub fn martingale_path(traj: &Trajectory, solver: &Solver, phi: &VectorTest) -> Result<MartingalePath> {
    require_stepwise(traj)?;
    let grid = *traj.states[0].grid();
    let d = grid.dim();
    let cfg = &solver.cfg;
    let dv = grid.cell_volume();
    let xs: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.coordinate(i)).collect();
    let phi_v: Vec<[f64; 3]> = xs.iter().map(|&x| phi.value(x)).collect();
    let jac: Vec<[[f64; 3]; 3]> = xs.iter().map(|&x| phi.jacobian(x)).collect();
    let divs: Vec<f64> = xs.iter().map(|&x| phi.divergence(x)).collect();
    let lphi: Vec<[f64; 3]> = xs.iter().map(|&x| phi.viscosity(x, d)).collect();
    let pair = |v: &SpectralVectorField, w: &[[f64; 3]]| -> f64 {
        (0..grid.len()).map(|i| {
            let a = v.at(i);
            (0..d).map(|c| a[c] * w[i][c]).sum::<f64>()
        }).sum::<f64>() * dv
    };
    let k_modes = solver.noise.modes();
    let m0 = pair(&traj.states[0].mom, &phi_v);
    let mut out = MartingalePath {
        times: vec![traj.states[0].time],
        m: vec![0.0],
        qv: vec![0.0],
        beta: vec![vec![0.0; k_modes]],
        cross: vec![vec![0.0; k_modes]],
    };
    let mut drift = 0.0;
    for n in 0..traj.increments.len() {
        let s = &traj.states[n];
        let u = &traj.velocities[n];
        let dt = traj.states[n + 1].time - s.time;
        let c_r = velocity_cutoff_factor(u, cfg.r_cutoff);
        let mut conv = 0.0;
        let mut press = 0.0;
        let mut visc = 0.0;
        for i in 0..grid.len() {
            let r = s.rho.physical()[i];
            let m = s.mom.at(i);
            for a in 0..d {
                for b in 0..d {
                    conv += m[a] * m[b] / r * jac[i][a][b];
                }
            }
            press += thermo::pressure_conservative(r, s.entropy.physical()[i], &cfg.thermo)? * divs[i];
            if cfg.eps_visc > 0.0 {
                // implicit viscosity: right endpoint
                let uv = traj.velocities[n + 1].at(i);
                visc += (0..d).map(|a| uv[a] * lphi[i][a]).sum::<f64>();
            }
        }
        drift += dt * dv * (c_r * conv + c_r * press + cfg.eps_visc * visc);
        let phi_eps = if k_modes > 0 { noise::cutoff_phi(&solver.noise, u, cfg.eps_noise)? } else { Vec::new() };
        let mut q = *out.qv.last().expect("seeded");
        let mut beta = out.beta.last().expect("seeded").clone();
        let mut cross = out.cross.last().expect("seeded").clone();
        for (k, f) in phi_eps.iter().enumerate() {
            let rf = f.mul_scalar(&s.rho)?;
            let g = pair(&rf, &phi_v);
            q += dt * g * g;
            cross[k] += dt * g;
            beta[k] += traj.increments[n][k];
        }
        out.times.push(traj.states[n + 1].time);
        out.m.push(pair(&traj.states[n + 1].mom, &phi_v) - m0 - drift);
        out.qv.push(q);
        out.beta.push(beta);
        out.cross.push(cross);
    }
    Ok(out)
}

/// Energy process `X_n = 𝔈_n − 𝔈_0 − Σ dt · ito + Σ dt ε ((u,u))` and its discrete
/// quadratic variation `Σ dt (Σ_k a_k²) + ½ dt² Σ_{k,l} G_{kl}²`, with
/// `a_k = ∫ m·φ_{ε,k}` and `G_{kl} = ∫ ρ φ_{ε,k}·φ_{ε,l}`.
pub fn energy_martingale_path(traj: &Trajectory, solver: &Solver) -> Result<MartingalePath> {
    require_stepwise(traj)?;
    let rows = traj.ledger.rows();
    if rows.len() != traj.states.len() {
        return Err(SceError::Config("ledger and snapshots disagree (step halving occurred)".into()));
    }
    let k_modes = solver.noise.modes();
    let mut out = MartingalePath {
        times: vec![rows[0].t],
        m: vec![0.0],
        qv: vec![0.0],
        beta: vec![vec![0.0; k_modes]],
        cross: vec![vec![0.0; k_modes]],
    };
    let e0 = rows[0].energy();
    let mut comp = 0.0;
    let mut q = 0.0;
    for n in 0..traj.increments.len() {
        let dt = rows[n + 1].t - rows[n].t;
        comp += dt * rows[n].ito - dt * rows[n + 1].eps * rows[n + 1].sobolev;
        let s = &traj.states[n];
        let u = &traj.velocities[n];
        let phi_eps = if k_modes > 0 { noise::cutoff_phi(&solver.noise, u, solver.cfg.eps_noise)? } else { Vec::new() };
        let a2: f64 = phi_eps.iter().map(|f| s.mom.inner(f).map(|a| a * a)).sum::<Result<f64>>()?;
        let mut g2 = 0.0;
        for f in &phi_eps {
            for g in &phi_eps {
                let v = f.dot(g)?.inner(&s.rho)?;
                g2 += v * v;
            }
        }
        q += dt * a2 + 0.5 * dt * dt * g2;
        let mut beta = out.beta.last().expect("seeded").clone();
        for (k, b) in beta.iter_mut().enumerate() {
            *b += traj.increments[n][k];
        }
        out.times.push(rows[n + 1].t);
        out.m.push(rows[n + 1].energy() - e0 - comp);
        out.qv.push(q);
        out.beta.push(beta);
        out.cross.push(out.cross.last().expect("seeded").clone());
    }
    Ok(out)
}

/// Two-sided normal quantile for a family-wise `kσ` level split over `m` comparisons.
pub fn bonferroni_z(sigma_level: f64, comparisons: usize) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let alpha = 2.0 * (1.0 - normal.cdf(sigma_level));
    normal.inverse_cdf(1.0 - alpha / (2.0 * comparisons.max(1) as f64))
}

/// Mean, standard error, variance and standard error of the variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub var: f64,
    pub var_se: f64,
}

pub fn sample_stats(xs: &[f64]) -> SampleStats {
    let n = xs.len() as f64;
    let mean = kahan_sum(xs.iter().copied()) / n;
    let m2 = kahan_sum(xs.iter().map(|x| (x - mean).powi(2))) / n;
    let m4 = kahan_sum(xs.iter().map(|x| (x - mean).powi(4))) / n;
    let var = m2 * n / (n - 1.0).max(1.0);
    SampleStats { n: xs.len(), mean, se: (var / n).sqrt(), var, var_se: ((m4 - m2 * m2).max(0.0) / n).sqrt() }
}

pub fn kahan_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let y = x - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

/// Half-width `z · SE` of the confidence interval for the mean.
pub fn ci_half_width(xs: &[f64], z: f64) -> f64 {
    z * sample_stats(xs).se
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleRow {
    pub t: f64,
    pub m: SampleStats,
    /// Statistics of `M_t² − Q_t`.
    pub qv_gap: SampleStats,
    pub mean_qv: f64,
    /// Statistics of `M_t β_k(t) − C_{k,t}` per mode.
    pub cross_gap: Vec<SampleStats>,
    pub mean_cross: Vec<f64>,
    pub z: f64,
    pub mean_ok: bool,
    pub qv_ok: bool,
    pub cross_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub n_paths: usize,
    pub rows: Vec<MartingaleRow>,
}

impl MartingaleReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.mean_ok && r.qv_ok && r.cross_ok)
    }

    /// One CSV line per report time.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mean_M,se_M,var_M,mean_M2_minus_Q,se_M2_minus_Q,mean_Q,z,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}\n",
                r.t,
                r.m.mean,
                r.m.se,
                r.m.var,
                r.qv_gap.mean,
                r.qv_gap.se,
                r.mean_qv,
                r.z,
                r.mean_ok && r.qv_ok && r.cross_ok
            ));
        }
        out
    }
}

fn check_count(n: usize) -> Result<()> {
    if n < MIN_PATHS {
        return Err(SceError::Statistics(format!(
            "{n} completed paths; at least {MIN_PATHS} are required for 3-sigma statistics"
        )));
    }
    Ok(())
}

fn report_from_paths(paths: &[MartingalePath], report_idx: &[usize], sigma_level: f64) -> Result<MartingaleReport> {
    check_count(paths.len())?;
    let z = bonferroni_z(sigma_level, report_idx.len());
    let k_modes = paths[0].beta[0].len();
    let mut rows = Vec::with_capacity(report_idx.len());
    for &n in report_idx {
        if n >= paths[0].m.len() {
            return Err(SceError::Config(format!("report index {n} beyond the horizon")));
        }
        let m: Vec<f64> = paths.iter().map(|p| p.m[n]).collect();
        let gap: Vec<f64> = paths.iter().map(|p| p.m[n] * p.m[n] - p.qv[n]).collect();
        let ms = sample_stats(&m);
        let gs = sample_stats(&gap);
        let mut cross_gap = Vec::with_capacity(k_modes);
        let mut mean_cross = Vec::with_capacity(k_modes);
        for k in 0..k_modes {
            let c: Vec<f64> = paths.iter().map(|p| p.m[n] * p.beta[n][k] - p.cross[n][k]).collect();
            cross_gap.push(sample_stats(&c));
            mean_cross.push(paths.iter().map(|p| p.cross[n][k]).sum::<f64>() / paths.len() as f64);
        }
        let within = |s: &SampleStats| s.mean.abs() <= z * s.se + 1e-14;
        rows.push(MartingaleRow {
            t: paths[0].times[n],
            mean_ok: within(&ms),
            qv_ok: within(&gs),
            cross_ok: cross_gap.iter().all(within),
            m: ms,
            qv_gap: gs,
            mean_qv: paths.iter().map(|p| p.qv[n]).sum::<f64>() / paths.len() as f64,
            cross_gap,
            mean_cross,
            z,
        });
    }
    Ok(MartingaleReport { n_paths: paths.len(), rows })
}

pub fn martingale_paths(ens: &Ensemble, solver: &Solver, phi: &VectorTest) -> Result<Vec<MartingalePath>> {
    let done: Vec<&Trajectory> = ens.completed().collect();
    check_count(done.len())?;
    done.par_iter().map(|t| martingale_path(t, solver, phi)).collect()
}

/// Mean-zero, Itô-isometry and cross-variation statistics of `M(φ)` at the given step indices.
pub fn martingale_stat(ens: &Ensemble, solver: &Solver, phi: &VectorTest, report_idx: &[usize]) -> Result<MartingaleReport> {
    report_from_paths(&martingale_paths(ens, solver, phi)?, report_idx, 3.0)
}

pub fn energy_martingale_paths(ens: &Ensemble, solver: &Solver) -> Result<Vec<MartingalePath>> {
    let done: Vec<&Trajectory> = ens.completed().collect();
    check_count(done.len())?;
    done.par_iter().map(|t| energy_martingale_path(t, solver)).collect()
}

pub fn energy_martingale_stat(ens: &Ensemble, solver: &Solver, report_idx: &[usize]) -> Result<MartingaleReport> {
    report_from_paths(&energy_martingale_paths(ens, solver)?, report_idx, 3.0)
}

/// Sample correlation and its null standard error `1/√n`.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(SceError::Statistics("correlation needs paired samples".into()));
    }
    check_count(xs.len())?;
    let sx = sample_stats(xs);
    let sy = sample_stats(ys);
    let n = xs.len() as f64;
    let cov = kahan_sum(xs.iter().zip(ys).map(|(x, y)| (x - sx.mean) * (y - sy.mean))) / (n - 1.0);
    Ok((cov / (sx.var * sy.var).sqrt(), 1.0 / n.sqrt()))
}

/// Fixed dictionary of bounded past functionals `h(M_s)`.
pub fn orthogonality_dictionary() -> Vec<(&'static str, fn(f64) -> f64)> {
    vec![("one", |_| 1.0), ("tanh", f64::tanh), ("cos", f64::cos), ("indicator_pos", |x| if x > 0.0 { 1.0 } else { 0.0 })]
}

/// `E[(M_t − M_s) h(M_s)]` for each dictionary entry, with its standard error.
pub fn orthogonality_test(paths: &[MartingalePath], s: usize, t: usize) -> Result<Vec<(&'static str, SampleStats)>> {
    check_count(paths.len())?;
    if s > t || t >= paths[0].m.len() {
        return Err(SceError::Config(format!("orthogonality test needs s <= t within the horizon, got s = {s}, t = {t}")));
    }
    Ok(orthogonality_dictionary()
        .into_iter()
        .map(|(name, h)| {
            let xs: Vec<f64> = paths.iter().map(|p| (p.m[t] - p.m[s]) * h(p.m[s])).collect();
            (name, sample_stats(&xs))
        })
        .collect())
}
