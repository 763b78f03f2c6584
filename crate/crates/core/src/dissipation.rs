//! Energy bookkeeping, moment bounds and the relative energy.

use std::fmt::Write as _;

use serde::Serialize;

use crate::defect::DefectEstimate;
use crate::error::{Result, SceError};
use crate::noise::chi;
use crate::scheme::{FluidState, Trajectory};
use crate::thermo::{self, ThermoParams, ThermoPoint};
use crate::torus::{grad, SpectralField, SpectralVectorField};

/// One ledger row. Row `n` carries the energies at `t_n`, the Sobolev norm and
/// Itô correction evaluated there, and the noise increment and balance residual
/// of the step that ended at `t_n` (zero on the first row).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub dt: f64,
    pub eps: f64,
    pub e_kin: f64,
    pub e_int: f64,
    /// `((u, u))_3`, without the `ε` factor.
    pub sobolev: f64,
    /// `½ Σ_k ∫ ρ |Π_m φ_{ε,k}|²`.
    pub ito: f64,
    pub noise_increment: f64,
    pub residual: f64,
}

impl LedgerRow {
    pub fn energy(&self) -> f64 {
        self.e_kin + self.e_int
    }
}

pub const LEDGER_CSV_HEADER: &str = "t,E_kin,E_int,((u,u)),ito_correction,noise_increment,residual";

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EnergyLedger {
    rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn new(rows: Vec<LedgerRow>) -> Self {
        EnergyLedger { rows }
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Per-step residuals (one per step, excluding the initial row).
    pub fn residuals(&self) -> Vec<f64> {
        self.rows.iter().skip(1).map(|r| r.residual).collect()
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals().into_iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// `Σ_n residual_n`.
    pub fn cumulative_residual(&self) -> f64 {
        self.residuals().iter().sum()
    }

    /// CSV with full round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LEDGER_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.t, r.e_kin, r.e_int, r.sobolev, r.ito, r.noise_increment, r.residual
            );
        }
        out
    }
}

/// `∫ ½ |m|² / ρ`.
pub fn kinetic_energy(state: &FluidState) -> f64 {
    let grid = state.grid();
    let mut s = 0.0;
    for i in 0..grid.len() {
        let m = state.mom.at(i);
        s += 0.5 * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) / state.rho.physical()[i];
    }
    s * grid.cell_volume()
}

/// `∫ c_v ρ^γ exp(S/(c_v ρ))`.
pub fn internal_energy(state: &FluidState, params: &ThermoParams) -> Result<f64> {
    let mut s = 0.0;
    for (&r, &st) in state.rho.physical().iter().zip(state.entropy.physical()) {
        s += thermo::energy_density_conservative(r, st, params)?;
    }
    Ok(s * state.grid().cell_volume())
}

/// Kinetic plus internal energy plus `½ ∫ tr R_conv + c_v ∫ R_press` when defects are supplied.
pub fn total_energy(state: &FluidState, defects: Option<&DefectEstimate>, params: &ThermoParams) -> Result<f64> {
    let base = kinetic_energy(state) + internal_energy(state, params)?;
    Ok(base + defects.map_or(0.0, |d| defect_energy(d, params)))
}

pub fn defect_energy(d: &DefectEstimate, params: &ThermoParams) -> f64 {
    0.5 * d.trace_conv_integral() + params.c_v() * d.press_integral()
}

/// `½ Σ_k ∫ ρ |Π_m φ_{ε,k}|²`.
pub fn ito_correction(rho: &SpectralField, phi_eps: &[SpectralVectorField]) -> Result<f64> {
    let mut s = 0.0;
    for phi in phi_eps {
        let p = phi.project();
        s += p.dot(&p)?.inner(rho)?;
    }
    Ok(0.5 * s)
}

/// `Σ_k (∫ m · φ_{ε,k}) ΔW_k`.
pub fn noise_increment(mom: &SpectralVectorField, phi_eps: &[SpectralVectorField], dw: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for (phi, &w) in phi_eps.iter().zip(dw) {
        s += mom.inner(phi)? * w;
    }
    Ok(s)
}

/// `𝔈_{n+1} − 𝔈_n + dt ε ((u_{n+1}, u_{n+1})) − dt · ito_n − noise_{n→n+1}`.
pub fn energy_balance_residual(prev: &LedgerRow, next: &LedgerRow) -> f64 {
    let dt = next.t - prev.t;
    let dt = if next.dt > 0.0 { next.dt } else { dt };
    (next.energy() - prev.energy()) + dt * next.eps * next.sobolev - dt * prev.ito - next.noise_increment
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub p: u32,
    pub n_paths: usize,
    pub moment: f64,
    /// Standard error of the moment estimator.
    pub std_error: f64,
    pub finite: bool,
}

/// Per-path `sup_t (E_kin + E_int) + ε Σ dt ((u,u))`.
pub fn sup_energy(traj: &Trajectory) -> f64 {
    let rows = traj.ledger.rows();
    let sup = rows.iter().map(LedgerRow::energy).fold(f64::NEG_INFINITY, f64::max);
    let diss: f64 = rows.windows(2).map(|w| w[1].dt * w[1].eps * w[1].sobolev).sum();
    sup + diss
}

/// Empirical `E[(sup-energy)^p]` over an ensemble.
pub fn apriori_moment_check(ensemble: &[Trajectory], p: u32) -> Result<MomentReport> {
    if ensemble.is_empty() {
        return Err(SceError::Statistics("moment check needs a nonempty ensemble".into()));
    }
    let vals: Vec<f64> = ensemble.iter().map(|t| sup_energy(t).powi(p as i32)).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = if vals.len() > 1 {
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(MomentReport { p, n_paths: vals.len(), moment: mean, std_error: (var / n).sqrt(), finite: mean.is_finite() })
}

/// True when the moments are non-decreasing in noise amplitude up to `z` standard errors.
pub fn moments_monotone(reports: &[MomentReport], z: f64) -> bool {
    reports.windows(2).all(|w| {
        let slack = z * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        w[1].moment + slack >= w[0].moment
    })
}

/// Smooth reference triple `(r, Θ, U)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub r: SpectralField,
    pub theta: SpectralField,
    pub u: SpectralVectorField,
}

impl ReferenceState {
    /// `r = ρ`, `U = m/ρ`, `Θ = θ(ρ, S)` of a solver state.
    pub fn from_fluid(state: &FluidState, params: &ThermoParams) -> Result<Self> {
        let theta = state
            .rho
            .physical()
            .iter()
            .zip(state.entropy.physical())
            .map(|(&r, &s)| thermo::temperature_conservative(r, s, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReferenceState {
            r: state.rho.clone(),
            theta: SpectralField::from_physical(*state.grid(), theta)?,
            u: state.velocity(),
        })
    }

    /// `sup_x max_{ij} |∂_j U_i|`.
    pub fn velocity_gradient_sup(&self) -> f64 {
        self.u.components().iter().map(|c| grad(c).components().iter().map(|g| g.max_abs()).fold(0.0, f64::max)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelEntropyReport {
    pub t: f64,
    pub value: f64,
    pub ess_part: f64,
    pub res_part: f64,
    pub defect_trace_contrib: f64,
    /// The Q-functional is not assembled term by term.
    pub q_value: Option<f64>,
}

/// Pointwise integrand of the relative energy, without defects.
pub fn relative_energy_density(state: &FluidState, reference: &ReferenceState, params: &ThermoParams) -> Result<Vec<f64>> {
    let grid = state.grid();
    grid.check_same(reference.r.grid())?;
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let rho = state.rho.physical()[i];
        let s_tot = state.entropy.physical()[i];
        let r = reference.r.physical()[i];
        let big_theta = reference.theta.physical()[i];
        if !(rho > 0.0 && r > 0.0 && big_theta > 0.0) {
            return Err(SceError::Domain(format!("relative energy needs positive density and temperature at sample {i}")));
        }
        let m = state.mom.at(i);
        let uu = reference.u.at(i);
        let kin: f64 = (0..grid.dim()).map(|a| (m[a] / rho - uu[a]).powi(2)).sum::<f64>() * 0.5 * rho;
        let e = thermo::energy_density_conservative(rho, s_tot, params)?;
        let s = thermo::entropy_from_energy(rho, e, params)?;
        let h_ref = thermo::ballistic_free_energy(ThermoPoint::new(r, big_theta)?, big_theta, params)?;
        let dh = thermo::ballistic_density_derivative(r, big_theta, params)?;
        out.push(kin + e - big_theta * rho * s - dh * (rho - r) - h_ref);
    }
    Ok(out)
}

/// Smooth cut-off `Φ(ρ, E)`: 1 on `[lo/2, 2 hi]` in each variable, 0 beyond a further factor 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialBox {
    pub rho: (f64, f64),
    pub energy: (f64, f64),
}

impl EssentialBox {
    /// Box built from the range of the reference.
    pub fn from_reference(reference: &ReferenceState, params: &ThermoParams) -> Self {
        let e: Vec<f64> = reference
            .r
            .physical()
            .iter()
            .zip(reference.theta.physical())
            .map(|(r, t)| params.c_v() * r * t)
            .collect();
        let range = |v: &[f64]| (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        EssentialBox { rho: range(reference.r.physical()), energy: range(&e) }
    }

    pub fn eval(&self, rho: f64, energy: f64) -> f64 {
        let axis = |v: f64, (lo, hi): (f64, f64)| {
            if v <= 0.0 {
                return 0.0;
            }
            let below = (0.5 * lo).ln() - v.ln();
            let above = v.ln() - (2.0 * hi).ln();
            chi(below.max(above).max(0.0) / std::f64::consts::LN_2)
        };
        axis(rho, self.rho) * axis(energy, self.energy)
    }
}

/// `(∫ Φ G, ∫ (1 − Φ) G)` for a sampled integrand `G`.
pub fn ess_res_split(
    state: &FluidState,
    cutoff: impl Fn(f64, f64) -> f64,
    integrand: &[f64],
    params: &ThermoParams,
) -> Result<(f64, f64)> {
    let grid = state.grid();
    if integrand.len() != grid.len() {
        return Err(SceError::GridMismatch("integrand length differs from the grid".into()));
    }
    let (mut ess, mut res) = (0.0, 0.0);
    for (i, &g) in integrand.iter().enumerate() {
        let rho = state.rho.physical()[i];
        let e = thermo::energy_density_conservative(rho, state.entropy.physical()[i], params)?;
        let phi = cutoff(rho, e);
        ess += phi * g;
        res += (1.0 - phi) * g;
    }
    let dv = grid.cell_volume();
    Ok((ess * dv, res * dv))
}

pub fn relative_energy(
    state: &FluidState,
    reference: &ReferenceState,
    defects: Option<&DefectEstimate>,
    params: &ThermoParams,
) -> Result<RelEntropyReport> {
    let density = relative_energy_density(state, reference, params)?;
    let bump = EssentialBox::from_reference(reference, params);
    let (ess, res) = ess_res_split(state, |r, e| bump.eval(r, e), &density, params)?;
    let defect = defects.map_or(0.0, |d| defect_energy(d, params));
    Ok(RelEntropyReport {
        t: state.time,
        value: ess + res + defect,
        ess_part: ess,
        res_part: res,
        defect_trace_contrib: defect,
        q_value: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorRow {
    pub t: f64,
    pub e_rel: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub rows: Vec<MonitorRow>,
    /// Growth rate `c = κ (1 + sup_t ‖∇U‖_∞)`.
    pub rate: f64,
    pub kappa: f64,
}

impl MonitorReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| !r.violated)
    }
}

/// Relative energy of `weak` against `strong` along their shared snapshot times,
/// with the Gronwall envelope `E_rel(0) e^{c t} (1 + rel_tol) + abs_tol`.
pub fn weak_strong_monitor(
    weak: &Trajectory,
    defects: Option<&[DefectEstimate]>,
    strong: &Trajectory,
    params: &ThermoParams,
    kappa: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<MonitorReport> {
    if weak.seed != strong.seed {
        return Err(SceError::Config(format!("trajectories use different seeds ({} vs {})", weak.seed, strong.seed)));
    }
    if weak.states.len() != strong.states.len() {
        return Err(SceError::GridMismatch(format!(
            "trajectories hold {} and {} snapshots",
            weak.states.len(),
            strong.states.len()
        )));
    }
    if let Some(d) = defects {
        if d.len() != weak.states.len() {
            return Err(SceError::GridMismatch("one defect estimate per snapshot is required".into()));
        }
    }
    let mut refs = Vec::with_capacity(strong.states.len());
    for (w, s) in weak.states.iter().zip(&strong.states) {
        if (w.time - s.time).abs() > 1e-9 * (1.0 + s.time.abs()) {
            return Err(SceError::GridMismatch(format!("snapshot times differ: {} vs {}", w.time, s.time)));
        }
        w.grid().check_same(s.grid())?;
        refs.push(ReferenceState::from_fluid(s, params)?);
    }
    let sup_grad = refs.iter().map(ReferenceState::velocity_gradient_sup).fold(0.0, f64::max);
    let rate = kappa * (1.0 + sup_grad);
    let mut rows = Vec::with_capacity(refs.len());
    let mut e0 = 0.0;
    for (n, (w, r)) in weak.states.iter().zip(&refs).enumerate() {
        let d = defects.map(|d| &d[n]);
        let e = relative_energy(w, r, d, params)?.value;
        if n == 0 {
            e0 = e;
        }
        let t = w.time - weak.states[0].time;
        let bound = e0 * (rate * t).exp();
        rows.push(MonitorRow { t: w.time, e_rel: e, bound, violated: e > bound * (1.0 + rel_tol) + abs_tol });
    }
    Ok(MonitorReport { rows, rate, kappa })
}
