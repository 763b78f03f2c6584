//! Frozen-velocity splitting scheme.
//!
//! One macro step `[nh, (n+1)h)`:
//!
//! 1. `v = [u_n]_R`;
//! 2. transport `ρ` and `S` by `∂_t f + div(f v) = 0` (RK4 on the dealiased
//!    pseudo-spectral right-hand side, or donor-cell upwind);
//! 3. `Π_m(ρ' u') − h ε L u' = Π_m(ρ u) + h Π_m[−div(ρ v ⊗ u) − χ_R ∇p(ρ, S)]
//!    + Σ_k Π_m[ρ φ_{ε,k}] ΔW_k`, explicit coefficients at `nh`;
//! 4. solve for `u' ∈ H_m` by preconditioned conjugate gradients; the viscous
//!    term is implicit, so the step is stable for every `ε h`.
//!
//! If transport drives `ρ` below the floor the step is rejected and retried as
//! two half steps, splitting the Wiener increment with a Brownian bridge.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dissipation::{self, EnergyLedger, LedgerRow};
use crate::error::{Result, SceError};
use crate::noise::{self, chi, NoiseModel, WienerPath};
use crate::thermo::{self, ThermoParams};
use num_complex::Complex64;

use crate::torus::{
    grad, sobolev_inner_3, sobolev_symbol, tensor_div, viscosity_apply, GridSpec, SpectralField,
    SpectralVectorField,
};

/// Conservative state `(ρ, m = ρu, S = ρs)` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub rho: SpectralField,
    pub mom: SpectralVectorField,
    pub entropy: SpectralField,
    pub time: f64,
}

impl FluidState {
    pub fn new(rho: SpectralField, mom: SpectralVectorField, entropy: SpectralField, time: f64) -> Result<Self> {
        rho.grid().check_same(mom.grid())?;
        rho.grid().check_same(entropy.grid())?;
        if rho.min() <= 0.0 {
            return Err(SceError::Domain(format!("density must be positive, min = {}", rho.min())));
        }
        Ok(FluidState { rho, mom, entropy, time })
    }

    pub fn from_velocity(
        rho: SpectralField,
        velocity: &SpectralVectorField,
        entropy: SpectralField,
        time: f64,
    ) -> Result<Self> {
        let mom = velocity.mul_scalar(&rho)?;
        Self::new(rho, mom, entropy, time)
    }

    pub fn grid(&self) -> &GridSpec {
        self.rho.grid()
    }

    /// Pointwise `m/ρ`.
    pub fn velocity(&self) -> SpectralVectorField {
        let inv = self.rho.map(|r| 1.0 / r);
        self.mom.mul_scalar(&inv).expect("same grid")
    }

    /// Pointwise specific entropy `S/ρ`.
    pub fn specific_entropy(&self) -> SpectralField {
        self.entropy.zip_map(&self.rho, |s, r| s / r).expect("same grid")
    }

    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }

    pub fn pressure(&self, params: &ThermoParams) -> Result<SpectralField> {
        pressure_field(&self.rho, &self.entropy, params)
    }
}

pub fn pressure_field(rho: &SpectralField, s: &SpectralField, params: &ThermoParams) -> Result<SpectralField> {
    let samples = rho
        .physical()
        .iter()
        .zip(s.physical())
        .map(|(&r, &st)| thermo::pressure_conservative(r, st, params))
        .collect::<Result<Vec<_>>>()?;
    SpectralField::from_physical(*rho.grid(), samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportScheme {
    Spectral,
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    /// Transport plus momentum update.
    Full,
    /// Velocity held at its initial value; only `ρ` and `S` move.
    TransportOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub h: f64,
    pub substeps: usize,
    pub eps_visc: f64,
    pub r_cutoff: f64,
    pub eps_noise: f64,
    pub thermo: ThermoParams,
    pub mass_solver_tol: f64,
    pub mass_solver_max_iter: usize,
    pub rho_floor: f64,
    pub h_min: f64,
    pub transport: TransportScheme,
    pub dynamics: Dynamics,
    /// Snapshot stride in accepted macro steps.
    pub snapshot_every: usize,
}

impl SolverConfig {
    pub fn new(h: f64, thermo: ThermoParams) -> Self {
        SolverConfig {
            h,
            substeps: 1,
            eps_visc: 0.0,
            r_cutoff: 1e6,
            eps_noise: 1e-6,
            thermo,
            mass_solver_tol: 1e-10,
            mass_solver_max_iter: 1000,
            rho_floor: 1e-8,
            h_min: h * 2f64.powi(-10),
            transport: TransportScheme::Spectral,
            dynamics: Dynamics::Full,
            snapshot_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("h", self.h),
            ("r_cutoff", self.r_cutoff),
            ("eps_noise", self.eps_noise),
            ("mass_solver_tol", self.mass_solver_tol),
            ("rho_floor", self.rho_floor),
            ("h_min", self.h_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SceError::Config(format!("solver.{name} must be positive, got {v}")));
            }
        }
        if !(self.eps_visc >= 0.0) {
            return Err(SceError::Config(format!("solver.eps_visc must be >= 0, got {}", self.eps_visc)));
        }
        if self.substeps == 0 || self.snapshot_every == 0 || self.mass_solver_max_iter == 0 {
            return Err(SceError::Config(
                "solver.substeps, snapshot_every and mass_solver_max_iter must be positive".into(),
            ));
        }
        if self.h_min > self.h {
            return Err(SceError::Config("solver.h_min exceeds solver.h".into()));
        }
        Ok(())
    }
}

/// `[u]_R = χ(‖u‖_{L²} − R) u`, returned with its scalar factor.
pub fn velocity_cutoff_factor(u: &SpectralVectorField, r: f64) -> f64 {
    chi(u.norm_l2() - r)
}

pub fn velocity_cutoff(u: &SpectralVectorField, r: f64) -> SpectralVectorField {
    let c = velocity_cutoff_factor(u, r);
    if c == 1.0 {
        u.clone()
    } else {
        u.scale(c)
    }
}

fn transport_rhs(f: &SpectralField, v: &SpectralVectorField) -> SpectralField {
    let flux = v.mul_scalar(f).expect("same grid").dealias();
    crate::torus::div(&flux).scale(-1.0)
}

fn max_angular_wavenumber(grid: &GridSpec) -> f64 {
    (0..grid.dim())
        .map(|a| 2.0 * std::f64::consts::PI * (grid.points_per_dim() / 2 - 1) as f64 / grid.length(a))
        .fold(0.0, f64::max)
}

/// Number of RK4 stages needed so that `h_sub · |v|_∞ · κ_max <= 1`.
fn spectral_substeps(grid: &GridSpec, v: &SpectralVectorField, h: f64, min_substeps: usize) -> usize {
    let speed: f64 = v.components().iter().map(|c| c.max_abs()).sum();
    let need = (h * speed * max_angular_wavenumber(grid)).ceil() as usize;
    need.max(min_substeps).max(1)
}

/// Advances `∂_t f + div(f v) = 0` over `h` with RK4 on the dealiased spectral flux.
pub fn transport_step(f: &SpectralField, v: &SpectralVectorField, h: f64, substeps: usize) -> Result<SpectralField> {
    f.grid().check_same(v.grid())?;
    if v.components().iter().all(|c| c.max_abs() == 0.0) {
        return Ok(f.clone());
    }
    let n = spectral_substeps(f.grid(), v, h, substeps);
    let dt = h / n as f64;
    let mut y = f.clone();
    for _ in 0..n {
        let k1 = transport_rhs(&y, v);
        let k2 = transport_rhs(&y.linear_combination(1.0, &k1, 0.5 * dt)?, v);
        let k3 = transport_rhs(&y.linear_combination(1.0, &k2, 0.5 * dt)?, v);
        let k4 = transport_rhs(&y.linear_combination(1.0, &k3, dt)?, v);
        let incr = k1
            .linear_combination(1.0, &k2, 2.0)?
            .linear_combination(1.0, &k3, 2.0)?
            .add(&k4)?;
        y = y.linear_combination(1.0, &incr, dt / 6.0)?;
    }
    Ok(y)
}

/// Donor-cell upwind transport. The update is a nonnegative combination of
/// neighbouring values with identical weights for every transported field,
/// so ratios such as `S/ρ` obey a discrete minimum principle.
pub fn transport_step_upwind(f: &SpectralField, v: &SpectralVectorField, h: f64, substeps: usize) -> Result<SpectralField> {
    f.grid().check_same(v.grid())?;
    let grid = *f.grid();
    let d = grid.dim();
    let n = grid.points_per_dim();
    let mut courant = 0.0f64;
    for a in 0..d {
        let dx = grid.length(a) / n as f64;
        courant = courant.max(v.component(a).max_abs() / dx);
    }
    let steps = ((2.0 * d as f64 * h * courant).ceil() as usize).max(substeps).max(1);
    let dt = h / steps as f64;
    let mut y = f.physical().to_vec();
    let stride = |a: usize| n.pow((d - 1 - a) as u32);
    for _ in 0..steps {
        let mut next = y.clone();
        for a in 0..d {
            let dx = grid.length(a) / n as f64;
            let lam = dt / dx;
            let s = stride(a);
            let va = v.component(a).physical();
            for i in 0..grid.len() {
                let idx = grid.multi_index(i);
                let ip = if idx[a] + 1 == n { i + s - n * s } else { i + s };
                let vf = 0.5 * (va[i] + va[ip]);
                let flux = if vf >= 0.0 { vf * y[i] } else { vf * y[ip] };
                next[i] -= lam * flux;
                next[ip] += lam * flux;
            }
        }
        y = next;
    }
    SpectralField::from_physical(grid, y)
}

/// Solves `Π_m(ρ v) = rhs` for `v ∈ H_m` by conjugate gradients.
pub fn mass_operator_solve(
    rho: &SpectralField,
    rhs: &SpectralVectorField,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralVectorField> {
    viscous_mass_solve(rho, 0.0, rhs, tol, max_iter)
}

/// Solves `Π_m(ρ v) − c L v = rhs` for `v ∈ H_m`, `c >= 0`, by conjugate gradients
/// preconditioned with the Fourier multiplier `ρ̄ + c (σ + 1)`.
pub fn viscous_mass_solve(
    rho: &SpectralField,
    c: f64,
    rhs: &SpectralVectorField,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralVectorField> {
    rho.grid().check_same(rhs.grid())?;
    let d = rhs.dim();
    let rho_bar = rho.mean();
    let apply = |x: &SpectralVectorField| -> SpectralVectorField {
        let m = x.mul_scalar(rho).expect("same grid").project();
        if c == 0.0 {
            m
        } else {
            m.linear_combination(1.0, &viscosity_apply(x), -c).expect("same grid")
        }
    };
    let precondition = |r: &SpectralVectorField| -> SpectralVectorField {
        let comps = r
            .components()
            .iter()
            .map(|f| {
                f.apply_symbol(|_, kappa| {
                    Complex64::new(1.0 / (rho_bar + c * (sobolev_symbol(kappa, d) + 1.0)), 0.0)
                })
            })
            .collect();
        SpectralVectorField::new(comps).expect("same grid")
    };
    let b = rhs.project();
    let b_norm = b.norm_l2();
    if b_norm == 0.0 {
        return Ok(SpectralVectorField::zeros(*rhs.grid()));
    }
    let mut x = precondition(&b);
    let mut r = b.sub(&apply(&x))?;
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = r.inner(&z)?;
    let mut res = r.norm_l2();
    for _ in 0..max_iter {
        if res <= tol * b_norm {
            return Ok(x);
        }
        let ap = apply(&p);
        let pap = p.inner(&ap)?;
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        x = x.linear_combination(1.0, &p, alpha)?;
        r = r.linear_combination(1.0, &ap, -alpha)?;
        res = r.norm_l2();
        z = precondition(&r);
        let rz_new = r.inner(&z)?;
        p = z.linear_combination(1.0, &p, rz_new / rz)?;
        rz = rz_new;
    }
    if res <= tol * b_norm {
        return Ok(x);
    }
    Err(SceError::MassSolve { iterations: max_iter, residual: res / b_norm })
}

/// `Π_m(ρ v)`.
pub fn mass_operator_apply(rho: &SpectralField, v: &SpectralVectorField) -> Result<SpectralVectorField> {
    Ok(v.mul_scalar(rho)?.project())
}

/// Discrete solver state: conservative fields plus the Galerkin velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub rho: SpectralField,
    pub entropy: SpectralField,
    pub velocity: SpectralVectorField,
    pub time: f64,
}

impl SchemeState {
    /// Lifts a fluid state: `u = M[ρ]^{-1} Π_m m`.
    pub fn from_fluid(state: &FluidState, cfg: &SolverConfig) -> Result<Self> {
        let velocity = mass_operator_solve(&state.rho, &state.mom, cfg.mass_solver_tol, cfg.mass_solver_max_iter)?;
        Ok(SchemeState { rho: state.rho.clone(), entropy: state.entropy.clone(), velocity, time: state.time })
    }

    pub fn fluid(&self) -> FluidState {
        FluidState {
            rho: self.rho.clone(),
            mom: self.velocity.mul_scalar(&self.rho).expect("same grid"),
            entropy: self.entropy.clone(),
            time: self.time,
        }
    }
}

/// Explicit momentum right-hand side at the left endpoint: convection and pressure.
fn momentum_drift(state: &SchemeState, cfg: &SolverConfig, c_r: f64) -> Result<SpectralVectorField> {
    let grid = *state.rho.grid();
    let d = grid.dim();
    let u = &state.velocity;
    let mut drift = SpectralVectorField::zeros(grid);
    if c_r > 0.0 {
        let rho_u = u.mul_scalar(&state.rho)?;
        let tensor: Vec<Vec<SpectralField>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| rho_u.component(i).mul(u.component(j)).map(|f| f.scale(c_r)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let conv = tensor_div(&tensor)?;
        let p = pressure_field(&state.rho, &state.entropy, &cfg.thermo)?;
        let gp = grad(&p).scale(c_r);
        drift = drift.sub(&conv)?.sub(&gp)?;
    }
    Ok(drift.project())
}

/// Advances `Π_m(ρu)` and returns the new Galerkin velocity at the updated density.
pub fn momentum_step(
    state: &SchemeState,
    rho_new: &SpectralField,
    cfg: &SolverConfig,
    phi_eps: &[SpectralVectorField],
    dw: &[f64],
    h: f64,
) -> Result<SpectralVectorField> {
    let c_r = velocity_cutoff_factor(&state.velocity, cfg.r_cutoff);
    let mut mhat = mass_operator_apply(&state.rho, &state.velocity)?;
    mhat = mhat.linear_combination(1.0, &momentum_drift(state, cfg, c_r)?, h)?;
    for (phi, &w) in phi_eps.iter().zip(dw) {
        if w != 0.0 {
            mhat = mhat.linear_combination(1.0, &mass_operator_apply(&state.rho, phi)?, w)?;
        }
    }
    if !mhat.is_finite() {
        return Err(SceError::NonFinite(format!("momentum update at t = {}", state.time)));
    }
    viscous_mass_solve(rho_new, h * cfg.eps_visc, &mhat, cfg.mass_solver_tol, cfg.mass_solver_max_iter)
}

/// Snapshots every `snapshot_every` accepted macro steps plus per-step ledger and increments.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub seed: u64,
    pub states: Vec<FluidState>,
    pub velocities: Vec<SpectralVectorField>,
    pub ledger: EnergyLedger,
    /// Wiener increments actually applied on each accepted step.
    pub increments: Vec<Vec<f64>>,
    pub failure: Option<SceError>,
}

impl Trajectory {
    pub fn final_state(&self) -> &FluidState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Solver bound to a grid, configuration and noise model.
#[derive(Debug, Clone)]
pub struct Solver {
    pub cfg: SolverConfig,
    pub noise: NoiseModel,
}

impl Solver {
    pub fn new(cfg: SolverConfig, noise: NoiseModel) -> Result<Self> {
        cfg.validate()?;
        Ok(Solver { cfg, noise })
    }

    fn transport(&self, f: &SpectralField, v: &SpectralVectorField, h: f64) -> Result<SpectralField> {
        match self.cfg.transport {
            TransportScheme::Spectral => transport_step(f, v, h, self.cfg.substeps),
            TransportScheme::Upwind => transport_step_upwind(f, v, h, self.cfg.substeps),
        }
    }

    /// One attempted step of length `h`; `Ok(None)` signals a positivity rejection.
    fn try_step(&self, state: &SchemeState, h: f64, dw: &[f64]) -> Result<Option<(SchemeState, Vec<SpectralVectorField>)>> {
        let c_r = velocity_cutoff_factor(&state.velocity, self.cfg.r_cutoff);
        let v = if c_r == 1.0 { state.velocity.clone() } else { state.velocity.scale(c_r) };
        let rho_new = self.transport(&state.rho, &v, h)?;
        if !rho_new.is_finite() {
            return Err(SceError::NonFinite(format!("density transport at t = {}", state.time)));
        }
        if rho_new.min() < self.cfg.rho_floor {
            return Ok(None);
        }
        let s_new = self.transport(&state.entropy, &v, h)?;
        if !s_new.is_finite() {
            return Err(SceError::NonFinite(format!("entropy transport at t = {}", state.time)));
        }
        let phi_eps = if self.noise.modes() > 0 {
            noise::cutoff_phi(&self.noise, &state.velocity, self.cfg.eps_noise)?
        } else {
            Vec::new()
        };
        let velocity = match self.cfg.dynamics {
            Dynamics::TransportOnly => state.velocity.clone(),
            Dynamics::Full => momentum_step(state, &rho_new, &self.cfg, &phi_eps, dw, h)?,
        };
        Ok(Some((SchemeState { rho: rho_new, entropy: s_new, velocity, time: state.time + h }, phi_eps)))
    }

    fn ledger_row(&self, state: &SchemeState, phi_eps: &[SpectralVectorField], dt: f64) -> Result<LedgerRow> {
        let fluid = state.fluid();
        let ito = if self.cfg.dynamics == Dynamics::Full {
            dissipation::ito_correction(&state.rho, phi_eps)?
        } else {
            0.0
        };
        Ok(LedgerRow {
            t: state.time,
            dt,
            eps: if self.cfg.dynamics == Dynamics::Full { self.cfg.eps_visc } else { 0.0 },
            e_kin: dissipation::kinetic_energy(&fluid),
            e_int: dissipation::internal_energy(&fluid, &self.cfg.thermo)?,
            sobolev: sobolev_inner_3(&state.velocity, &state.velocity)?,
            ito,
            noise_increment: 0.0,
            residual: 0.0,
        })
    }

    fn phi_eps_at(&self, state: &SchemeState) -> Result<Vec<SpectralVectorField>> {
        if self.noise.modes() > 0 {
            noise::cutoff_phi(&self.noise, &state.velocity, self.cfg.eps_noise)
        } else {
            Ok(Vec::new())
        }
    }

    /// Advances over `h` with increments `dw`, halving on rejection.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        state: SchemeState,
        h: f64,
        dw: Vec<f64>,
        bridge_seed: u64,
        depth: u32,
        rows: &mut Vec<LedgerRow>,
        increments: &mut Vec<Vec<f64>>,
    ) -> Result<SchemeState> {
        if h < self.cfg.h_min {
            return Err(SceError::StepCascade { h_min: self.cfg.h_min, t: state.time });
        }
        match self.try_step(&state, h, &dw)? {
            Some((next, phi_eps)) => {
                let stoch = if self.cfg.dynamics == Dynamics::Full {
                    dissipation::noise_increment(&state.fluid().mom, &phi_eps, &dw)?
                } else {
                    0.0
                };
                let prev = rows.last().expect("ledger seeded with initial row").clone();
                let next_phi = self.phi_eps_at(&next)?;
                let mut row = self.ledger_row(&next, &next_phi, h)?;
                row.noise_increment = stoch;
                row.residual = dissipation::energy_balance_residual(&prev, &row);
                rows.push(row);
                increments.push(dw);
                Ok(next)
            }
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(noise::splitmix64(bridge_seed ^ ((depth as u64) << 56)));
                let half = 0.5 * h;
                let (first, second): (Vec<f64>, Vec<f64>) = dw
                    .iter()
                    .map(|&w| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        let a = 0.5 * w + 0.5 * h.sqrt() * z;
                        (a, w - a)
                    })
                    .unzip();
                let mid = self.advance(state, half, first, noise::splitmix64(bridge_seed ^ 1), depth + 1, rows, increments)?;
                self.advance(mid, half, second, noise::splitmix64(bridge_seed ^ 2), depth + 1, rows, increments)
            }
        }
    }

    /// Runs `steps` macro steps driven by `wiener` (which must hold at least `steps` increments).
    pub fn run_with_path(&self, initial: &FluidState, steps: usize, wiener: &WienerPath) -> Result<Trajectory> {
        if wiener.modes() != self.noise.modes() {
            return Err(SceError::Config(format!(
                "Wiener path has {} modes, noise model has {}",
                wiener.modes(),
                self.noise.modes()
            )));
        }
        if wiener.steps() < steps {
            return Err(SceError::Config("Wiener path shorter than the run".into()));
        }
        if steps % self.cfg.snapshot_every != 0 {
            return Err(SceError::Config(format!(
                "horizon ({steps} steps) is not a multiple of the snapshot stride {}",
                self.cfg.snapshot_every
            )));
        }
        initial.grid().check_same(self.noise.grid())?;
        let mut state = SchemeState::from_fluid(initial, &self.cfg)?;
        let phi0 = self.phi_eps_at(&state)?;
        let mut rows = vec![self.ledger_row(&state, &phi0, 0.0)?];
        let mut increments = Vec::new();
        let mut states = vec![state.fluid()];
        let mut velocities = vec![state.velocity.clone()];
        let mut failure = None;
        for n in 0..steps {
            let bridge_seed = noise::splitmix64(wiener.seed() ^ noise::splitmix64(n as u64));
            match self.advance(state.clone(), self.cfg.h, wiener.increment(n).to_vec(), bridge_seed, 0, &mut rows, &mut increments) {
                Ok(next) => state = next,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
            // pin the macro grid so halving does not accumulate rounding in t
            state.time = (n + 1) as f64 * self.cfg.h + initial.time;
            rows.last_mut().expect("step recorded").t = state.time;
            if (n + 1) % self.cfg.snapshot_every == 0 {
                states.push(state.fluid());
                velocities.push(state.velocity.clone());
            }
        }
        Ok(Trajectory {
            seed: wiener.seed(),
            states,
            velocities,
            ledger: EnergyLedger::new(rows),
            increments,
            failure,
        })
    }

    pub fn steps_for(&self, horizon: f64) -> Result<usize> {
        let steps = (horizon / self.cfg.h).round();
        if !(horizon >= 0.0) || (steps * self.cfg.h - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(SceError::Config(format!(
                "horizon {horizon} is not a multiple of the time step {}",
                self.cfg.h
            )));
        }
        Ok(steps as usize)
    }

    /// Samples the Wiener path from `seed` and runs to `horizon`.
    pub fn run_trajectory(&self, initial: &FluidState, horizon: f64, seed: u64) -> Result<Trajectory> {
        let steps = self.steps_for(horizon)?;
        let wiener = noise::sample_increments(&self.noise, self.cfg.h, steps, seed)?;
        self.run_with_path(initial, steps, &wiener)
    }
}
