//! Block coarse-graining, defect densities and Young measures, and the weak
//! residuals of the measure-valued formulation evaluated on coarse data.
//!
//! Coarse cell `c` along an axis averages fine cells `c f .. c f + f − 1`; its
//! centre sits at offset `((f − 1)/2 + o) / f` coarse cells, where `o` is the fine
//! offset. Test functions are evaluated at coarse cell centres.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::dissipation;
use crate::error::{Result, SceError};
use crate::noise::WienerPath;
use crate::scheme::{FluidState, Trajectory};
use crate::testfn::{ScalarTest, SpaceTimeTest, VectorTest};
use crate::thermo::{self, ThermoParams};
use crate::torus::{sobolev_inner_3, GridSpec, SpectralField, SpectralVectorField};

/// One fine-cell state `(ρ', m', S')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungSample {
    pub rho: f64,
    pub mom: [f64; 3],
    pub entropy: f64,
}

/// Empirical measure on phase space for one coarse cell.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungCell {
    pub samples: Vec<YoungSample>,
    pub weights: Vec<f64>,
}

impl YoungCell {
    /// `⟨V; g⟩`.
    pub fn pair(&self, g: impl Fn(&YoungSample) -> f64) -> f64 {
        self.samples.iter().zip(&self.weights).map(|(s, w)| w * g(s)).sum()
    }

    pub fn is_atom(&self, tol: f64) -> bool {
        let first = self.samples[0];
        self.samples.iter().all(|s| {
            (s.rho - first.rho).abs() <= tol
                && (s.entropy - first.entropy).abs() <= tol
                && (0..3).all(|a| (s.mom[a] - first.mom[a]).abs() <= tol)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectEstimate {
    pub coarse: GridSpec,
    pub factor: usize,
    /// Symmetric `d × d` block per cell (unused entries zero).
    pub r_conv: Vec<[[f64; 3]; 3]>,
    pub r_press: Vec<f64>,
    pub young: Vec<YoungCell>,
}

impl DefectEstimate {
    pub fn zero(coarse: GridSpec) -> Self {
        DefectEstimate {
            coarse,
            factor: 1,
            r_conv: vec![[[0.0; 3]; 3]; coarse.len()],
            r_press: vec![0.0; coarse.len()],
            young: Vec::new(),
        }
    }

    pub fn trace_conv_integral(&self) -> f64 {
        let d = self.coarse.dim();
        self.r_conv.iter().map(|r| (0..d).map(|a| r[a][a]).sum::<f64>()).sum::<f64>() * self.coarse.cell_volume()
    }

    pub fn press_integral(&self) -> f64 {
        self.r_press.iter().sum::<f64>() * self.coarse.cell_volume()
    }

    /// Smallest eigenvalue of `R_conv` over all cells.
    pub fn min_conv_eigenvalue(&self) -> f64 {
        let d = self.coarse.dim();
        self.r_conv.iter().map(|r| min_eigenvalue_sym(r, d)).fold(f64::INFINITY, f64::min)
    }

    pub fn min_press(&self) -> f64 {
        self.r_press.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ_cells ∇φ : R_conv + div φ R_press` times the coarse cell volume.
    pub fn pair_momentum(&self, phi: &VectorTest) -> f64 {
        let d = self.coarse.dim();
        let mut s = 0.0;
        for c in 0..self.coarse.len() {
            let x = self.coarse.coordinate(c);
            let jac = phi.jacobian(x);
            for i in 0..d {
                for j in 0..d {
                    s += jac[i][j] * self.r_conv[c][i][j];
                }
            }
            s += phi.divergence(x) * self.r_press[c];
        }
        s * self.coarse.cell_volume()
    }
}

/// Smallest eigenvalue of the leading `d × d` block of a symmetric matrix.
pub fn min_eigenvalue_sym(m: &[[f64; 3]; 3], d: usize) -> f64 {
    match d {
        1 => m[0][0],
        2 => {
            let tr = m[0][0] + m[1][1];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
            0.5 * tr - disc
        }
        _ => {
            // trigonometric solution of the characteristic cubic
            let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
            let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
            if p1 == 0.0 {
                return m[0][0].min(m[1][1]).min(m[2][2]);
            }
            let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let mut b = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
                }
            }
            let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
                - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
            let r = (det_b / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
        }
    }
}

/// Coarse grid of a block average by `factor`.
pub fn coarse_grid(fine: &GridSpec, factor: usize) -> Result<GridSpec> {
    let n = fine.points_per_dim();
    if factor == 0 || n % factor != 0 {
        return Err(SceError::Config(format!("coarse-graining factor {factor} does not divide N = {n}")));
    }
    if factor == 1 {
        return Ok(*fine);
    }
    let nc = n / factor;
    if nc % 2 != 0 || nc < 3 {
        return Err(SceError::Config(format!("coarse grid with {nc} points per axis is not admissible")));
    }
    let modes = fine.modes().min(nc / 3).max(1);
    let offset = ((factor as f64 - 1.0) / 2.0 + fine.offset()) / factor as f64;
    Ok(GridSpec::new(fine.dim(), nc, modes)?.with_lengths(fine.lengths())?.with_offset(offset))
}

/// Fine indices of each coarse cell, in row-major fine order.
fn blocks(fine: &GridSpec, coarse: &GridSpec, factor: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(factor.pow(fine.dim() as u32)); coarse.len()];
    for i in 0..fine.len() {
        let idx = fine.multi_index(i);
        let mut cidx = [0usize; 3];
        for a in 0..fine.dim() {
            cidx[a] = idx[a] / factor;
        }
        out[coarse.flat_index(cidx)].push(i);
    }
    out
}

pub fn coarse_grain_field(f: &SpectralField, factor: usize) -> Result<SpectralField> {
    let coarse = coarse_grid(f.grid(), factor)?;
    if factor == 1 {
        return Ok(f.clone());
    }
    let vals = blocks(f.grid(), &coarse, factor)
        .iter()
        .map(|b| b.iter().map(|&i| f.physical()[i]).sum::<f64>() / b.len() as f64)
        .collect();
    SpectralField::from_physical(coarse, vals)
}

pub fn coarse_grain_vector(v: &SpectralVectorField, factor: usize) -> Result<SpectralVectorField> {
    SpectralVectorField::new(v.components().iter().map(|c| coarse_grain_field(c, factor)).collect::<Result<Vec<_>>>()?)
}

/// Cell averages of `(ρ, m, S)` with the convective and pressure defects and Young measures.
pub fn coarse_grain(fine: &FluidState, factor: usize, params: &ThermoParams, rho_floor: f64) -> Result<(FluidState, DefectEstimate)> {
    let fg = *fine.grid();
    let coarse = coarse_grid(&fg, factor)?;
    let d = fg.dim();
    let cells = blocks(&fg, &coarse, factor);
    let mut rho_c = Vec::with_capacity(coarse.len());
    let mut s_c = Vec::with_capacity(coarse.len());
    let mut m_c = vec![Vec::with_capacity(coarse.len()); d];
    let mut r_conv = Vec::with_capacity(coarse.len());
    let mut r_press = Vec::with_capacity(coarse.len());
    let mut young = Vec::with_capacity(coarse.len());
    for block in &cells {
        let w = 1.0 / block.len() as f64;
        let mut rho = 0.0;
        let mut s = 0.0;
        let mut m = [0.0; 3];
        let mut flux = [[0.0; 3]; 3];
        let mut p_avg = 0.0;
        let mut samples = Vec::with_capacity(block.len());
        for &i in block {
            let r = fine.rho.physical()[i];
            let st = fine.entropy.physical()[i];
            let mi = fine.mom.at(i);
            rho += w * r;
            s += w * st;
            for a in 0..d {
                m[a] += w * mi[a];
                for b in 0..d {
                    flux[a][b] += w * mi[a] * mi[b] / r;
                }
            }
            p_avg += w * thermo::pressure_conservative(r, st, params)?;
            samples.push(YoungSample { rho: r, mom: mi, entropy: st });
        }
        if rho < rho_floor {
            return Err(SceError::Domain(format!("cell-averaged density {rho:.3e} below floor {rho_floor:.3e}")));
        }
        let mut rc = [[0.0; 3]; 3];
        for a in 0..d {
            for b in 0..d {
                rc[a][b] = if factor == 1 { 0.0 } else { flux[a][b] - m[a] * m[b] / rho };
            }
        }
        let rp = if factor == 1 { 0.0 } else { p_avg - thermo::pressure_conservative(rho, s, params)? };
        rho_c.push(rho);
        s_c.push(s);
        for a in 0..d {
            m_c[a].push(m[a]);
        }
        r_conv.push(rc);
        r_press.push(rp);
        let n = samples.len();
        young.push(YoungCell { samples, weights: vec![1.0 / n as f64; n] });
    }
    let mom = SpectralVectorField::new(m_c.into_iter().map(|c| SpectralField::from_physical(coarse, c)).collect::<Result<Vec<_>>>()?)?;
    let state = FluidState::new(
        SpectralField::from_physical(coarse, rho_c)?,
        mom,
        SpectralField::from_physical(coarse, s_c)?,
        fine.time,
    )?;
    Ok((state, DefectEstimate { coarse, factor, r_conv, r_press, young }))
}

/// Coarse-grained trajectory with per-step noise data.
#[derive(Debug, Clone)]
pub struct CoarseTrajectory {
    pub states: Vec<FluidState>,
    pub defects: Vec<DefectEstimate>,
    /// Increments of each interval `[t_n, t_{n+1}]`.
    pub increments: Vec<Vec<f64>>,
    /// Coarse-averaged noise directions.
    pub phi: Vec<SpectralVectorField>,
    pub eps_visc: f64,
    pub seed: u64,
}

impl CoarseTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn grid(&self) -> &GridSpec {
        self.states[0].grid()
    }
}

/// Coarse-grains every snapshot; the trajectory must carry one snapshot per accepted step.
pub fn coarse_grain_trajectory(
    traj: &Trajectory,
    phi: &[SpectralVectorField],
    eps_visc: f64,
    factor: usize,
    params: &ThermoParams,
    rho_floor: f64,
) -> Result<CoarseTrajectory> {
    if traj.states.len() != traj.increments.len() + 1 {
        return Err(SceError::Config(
            "defect residuals need one snapshot per step (snapshot_every = 1, no step halving)".into(),
        ));
    }
    let mut states = Vec::with_capacity(traj.states.len());
    let mut defects = Vec::with_capacity(traj.states.len());
    for s in &traj.states {
        let (c, d) = coarse_grain(s, factor, params, rho_floor)?;
        states.push(c);
        defects.push(d);
    }
    Ok(CoarseTrajectory {
        states,
        defects,
        increments: traj.increments.clone(),
        phi: phi.iter().map(|p| coarse_grain_vector(p, factor)).collect::<Result<Vec<_>>>()?,
        eps_visc,
        seed: traj.seed,
    })
}

/// Attaches a Wiener path whose increments must match the stored ones.
pub fn check_path(traj: &CoarseTrajectory, wiener: &WienerPath) -> Result<()> {
    if wiener.seed() != traj.seed || wiener.steps() < traj.increments.len() {
        return Err(SceError::Config("Wiener path does not belong to this trajectory".into()));
    }
    for (n, row) in traj.increments.iter().enumerate() {
        if row.as_slice() != wiener.increment(n) {
            return Err(SceError::Config(format!("Wiener increment mismatch at step {n}")));
        }
    }
    Ok(())
}

fn cell_sum(grid: &GridSpec, f: impl Fn(usize, [f64; 3]) -> f64) -> f64 {
    (0..grid.len()).map(|i| f(i, grid.coordinate(i))).sum::<f64>() * grid.cell_volume()
}

/// `[∫ ρ ψ]_0^{t_n} − ∫_0^{t_n} ∫ m·∇ψ` with trapezoid in time, one value per snapshot.
pub fn continuity_residual(traj: &CoarseTrajectory, psi: &ScalarTest) -> Vec<f64> {
    let grid = *traj.grid();
    let mass = |s: &FluidState| cell_sum(&grid, |i, x| s.rho.physical()[i] * psi.value(x));
    let flux = |s: &FluidState| {
        cell_sum(&grid, |i, x| {
            let m = s.mom.at(i);
            let g = psi.gradient(x);
            (0..grid.dim()).map(|a| m[a] * g[a]).sum()
        })
    };
    let m0 = mass(&traj.states[0]);
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for w in traj.states.windows(2) {
        acc += 0.5 * (w[1].time - w[0].time) * (flux(&w[0]) + flux(&w[1]));
        out.push(mass(&w[1]) - m0 - acc);
    }
    out
}

/// Momentum drift `∫ (m⊗m/ρ):∇φ + ∫ p div φ` at `s` (plus defect pairing) and `ε ∫ u·Lφ`
/// at the right endpoint `next`, matching the implicit viscous step.
fn momentum_drift(
    s: &FluidState,
    next: &FluidState,
    d: Option<&DefectEstimate>,
    phi: &VectorTest,
    eps: f64,
    params: &ThermoParams,
) -> Result<f64> {
    let grid = *s.grid();
    let dim = grid.dim();
    let mut total = 0.0;
    for i in 0..grid.len() {
        let x = grid.coordinate(i);
        let r = s.rho.physical()[i];
        let m = s.mom.at(i);
        let jac = phi.jacobian(x);
        for a in 0..dim {
            for b in 0..dim {
                total += m[a] * m[b] / r * jac[a][b];
            }
        }
        total += thermo::pressure_conservative(r, s.entropy.physical()[i], params)? * phi.divergence(x);
        if eps > 0.0 {
            let lphi = phi.viscosity(x, dim);
            let (rn, mn) = (next.rho.physical()[i], next.mom.at(i));
            total += eps * (0..dim).map(|a| mn[a] / rn * lphi[a]).sum::<f64>();
        }
    }
    total *= grid.cell_volume();
    if let Some(d) = d {
        total += d.pair_momentum(phi);
    }
    Ok(total)
}

/// Whether the defect integrals enter the momentum identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectTerms {
    Include,
    Exclude,
}

/// Residual of the weak momentum identity at each snapshot: `[∫ m·φ]_0^{t_n}` minus
/// the left-point drift sum minus `Σ_k Σ_j (∫ ρ_j φ_k·φ) ΔW_{j,k}`.
pub fn momentum_residual(
    traj: &CoarseTrajectory,
    defects: Option<&[DefectEstimate]>,
    terms: DefectTerms,
    phi: &VectorTest,
    params: &ThermoParams,
) -> Result<Vec<f64>> {
    let defects = match (terms, defects) {
        (DefectTerms::Include, None) => {
            return Err(SceError::Config("momentum residual with defect terms needs a defect estimate per snapshot".into()))
        }
        (DefectTerms::Include, Some(d)) => {
            if d.len() != traj.states.len() {
                return Err(SceError::GridMismatch("one defect estimate per snapshot is required".into()));
            }
            Some(d)
        }
        (DefectTerms::Exclude, _) => None,
    };
    if traj.increments.len() + 1 != traj.states.len() {
        return Err(SceError::Config("increments do not match the snapshot count".into()));
    }
    let grid = *traj.grid();
    let phi_grid: Vec<[f64; 3]> = (0..grid.len()).map(|i| phi.value(grid.coordinate(i))).collect();
    let m_phi = |s: &FluidState| {
        (0..grid.len()).map(|i| {
            let m = s.mom.at(i);
            (0..grid.dim()).map(|a| m[a] * phi_grid[i][a]).sum::<f64>()
        }).sum::<f64>() * grid.cell_volume()
    };
    let noise_weights: Vec<Vec<f64>> = traj
        .phi
        .iter()
        .map(|f| (0..grid.len()).map(|i| {
            let v = f.at(i);
            (0..grid.dim()).map(|a| v[a] * phi_grid[i][a]).sum()
        }).collect())
        .collect();
    let m0 = m_phi(&traj.states[0]);
    let mut drift = 0.0;
    let mut stoch = 0.0;
    let mut out = vec![0.0];
    for (n, w) in traj.states.windows(2).enumerate() {
        let dt = w[1].time - w[0].time;
        drift += dt * momentum_drift(&w[0], &w[1], defects.map(|d| &d[n]), phi, traj.eps_visc, params)?;
        for (k, weights) in noise_weights.iter().enumerate() {
            let coupling: f64 = weights.iter().zip(w[0].rho.physical()).map(|(a, r)| a * r).sum::<f64>() * grid.cell_volume();
            stoch += coupling * traj.increments[n][k];
        }
        out.push(m_phi(&w[1]) - m0 - drift - stoch);
    }
    Ok(out)
}

/// Renormalisation used in the entropy inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Renormalization {
    /// `Z(S')`, applied to the total entropy.
    Total,
    /// `ρ' Z(S'/ρ')`, the renormalised total entropy.
    Specific,
}

/// Clamp `Z_c(s) = max(−c, min(s, c))`.
pub fn clamp_z(c: f64) -> impl Fn(f64) -> f64 {
    move |s: f64| s.min(c).max(-c)
}

/// `lhs − rhs` of the entropy inequality at each snapshot (must be `<= tol`):
/// `lhs = ∫_0^{t_n} ∫ ⟨V; η⟩ ∂_t φ + ⟨V; η m'/ρ'⟩·∇φ`, `rhs = [∫ ⟨V; η⟩ φ]_0^{t_n}`,
/// with `η = Z(S')` or `ρ' Z(S'/ρ')`. Trapezoid in time.
pub fn entropy_inequality_residual(
    traj: &CoarseTrajectory,
    clamp: f64,
    renorm: Renormalization,
    phi: &SpaceTimeTest,
) -> Result<Vec<f64>> {
    let grid = *traj.grid();
    let z = clamp_z(clamp);
    let eta = |y: &YoungSample| match renorm {
        Renormalization::Total => z(y.entropy),
        Renormalization::Specific => y.rho * z(y.entropy / y.rho),
    };
    let integrals = |d: &DefectEstimate, t: f64| -> Result<(f64, f64)> {
        if d.young.len() != grid.len() {
            return Err(SceError::GridMismatch("Young measure missing on the coarse grid".into()));
        }
        let mut value = 0.0;
        let mut rate = 0.0;
        for (i, cell) in d.young.iter().enumerate() {
            let x = grid.coordinate(i);
            let e = cell.pair(|y| eta(y));
            let g = phi.gradient(t, x);
            let flux: f64 = (0..grid.dim()).map(|a| cell.pair(|y| eta(y) * y.mom[a] / y.rho) * g[a]).sum();
            value += e * phi.value(t, x);
            rate += e * phi.time_derivative(x) + flux;
        }
        let dv = grid.cell_volume();
        Ok((value * dv, rate * dv))
    };
    let t0 = traj.states[0].time;
    let (v0, mut r_prev) = integrals(&traj.defects[0], t0)?;
    let mut lhs = 0.0;
    let mut out = vec![0.0];
    for n in 1..traj.states.len() {
        let t = traj.states[n].time;
        let (v, r) = integrals(&traj.defects[n], t)?;
        lhs += 0.5 * (t - traj.states[n - 1].time) * (r_prev + r);
        r_prev = r;
        out.push(lhs - (v - v0));
    }
    Ok(out)
}

/// Energy `∫ ½|m|²/ρ + c_v p` plus defect traces when requested.
fn coarse_energy(s: &FluidState, d: Option<&DefectEstimate>, params: &ThermoParams) -> Result<f64> {
    dissipation::total_energy(s, d, params)
}

/// Per-step residual `𝐄_{n+1} − 𝐄_n + dt ε ((u_{n+1}, u_{n+1})) − dt ½ Σ ∫ ρ_n |Π φ_k|² − Σ_k (∫ m_n·φ_k) ΔW_k`.
pub fn energy_identity_residual(
    traj: &CoarseTrajectory,
    terms: DefectTerms,
    params: &ThermoParams,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.states.len().saturating_sub(1));
    for (n, w) in traj.states.windows(2).enumerate() {
        let (d0, d1) = match terms {
            DefectTerms::Include => (Some(&traj.defects[n]), Some(&traj.defects[n + 1])),
            DefectTerms::Exclude => (None, None),
        };
        let dt = w[1].time - w[0].time;
        let e0 = coarse_energy(&w[0], d0, params)?;
        let e1 = coarse_energy(&w[1], d1, params)?;
        let ito = dissipation::ito_correction(&w[0].rho, &traj.phi)?;
        let stoch = dissipation::noise_increment(&w[0].mom, &traj.phi, &traj.increments[n])?;
        let sob = if traj.eps_visc > 0.0 {
            let u = w[1].velocity();
            sobolev_inner_3(&u, &u)?
        } else {
            0.0
        };
        out.push(e1 - e0 + dt * traj.eps_visc * sob - dt * ito - stoch);
    }
    Ok(out)
}

/// Trapezoid time integrals of `S`, `R_conv` and `R_press` per coarse cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeIntegrals {
    pub entropy: Vec<f64>,
    pub r_conv: Vec<[[f64; 3]; 3]>,
    pub r_press: Vec<f64>,
}

pub fn time_integrals(traj: &CoarseTrajectory) -> TimeIntegrals {
    let n = traj.grid().len();
    let mut out = TimeIntegrals { entropy: vec![0.0; n], r_conv: vec![[[0.0; 3]; 3]; n], r_press: vec![0.0; n] };
    for (k, w) in traj.states.windows(2).enumerate() {
        let h = 0.5 * (w[1].time - w[0].time);
        let (d0, d1) = (&traj.defects[k], &traj.defects[k + 1]);
        for c in 0..n {
            out.entropy[c] += h * (w[0].entropy.physical()[c] + w[1].entropy.physical()[c]);
            out.r_press[c] += h * (d0.r_press[c] + d1.r_press[c]);
            for a in 0..3 {
                for b in 0..3 {
                    out.r_conv[c][a][b] += h * (d0.r_conv[c][a][b] + d1.r_conv[c][a][b]);
                }
            }
        }
    }
    out
}

/// `(factor, ∫ tr R_conv, ∫ R_press)` for each refinement factor.
pub fn refinement_sweep(fine: &FluidState, factors: &[usize], params: &ThermoParams) -> Result<Vec<(usize, f64, f64)>> {
    factors
        .iter()
        .map(|&f| {
            let (_, d) = coarse_grain(fine, f, params, 0.0)?;
            Ok((f, d.trace_conv_integral(), d.press_integral()))
        })
        .collect()
}

pub const DEFECT_MAGIC: [u8; 8] = *b"SCEDEF01";

/// Writes `defects.bin` and its text manifest `defects.txt` into `dir`.
///
/// Binary layout: `DEFECT_MAGIC | dim | N_coarse | factor | cells` (u64 LE), then per
/// cell `d·d` f64 for `R_conv` (row-major), one f64 for `R_press`, a u64 sample count
/// and `(ρ', m'_1..m'_d, S')` f64 tuples. Weights are uniform and not stored.
pub fn write_defect_dump(dir: &Path, est: &DefectEstimate) -> Result<Vec<std::path::PathBuf>> {
    let d = est.coarse.dim();
    let mut buf = Vec::new();
    buf.extend_from_slice(&DEFECT_MAGIC);
    for v in [d, est.coarse.points_per_dim(), est.factor, est.coarse.len()] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    let mut samples_total = 0usize;
    for c in 0..est.coarse.len() {
        for a in 0..d {
            for b in 0..d {
                buf.extend_from_slice(&est.r_conv[c][a][b].to_le_bytes());
            }
        }
        buf.extend_from_slice(&est.r_press[c].to_le_bytes());
        let samples = est.young.get(c).map_or(&[][..], |y| &y.samples[..]);
        buf.extend_from_slice(&(samples.len() as u64).to_le_bytes());
        samples_total += samples.len();
        for s in samples {
            buf.extend_from_slice(&s.rho.to_le_bytes());
            for a in 0..d {
                buf.extend_from_slice(&s.mom[a].to_le_bytes());
            }
            buf.extend_from_slice(&s.entropy.to_le_bytes());
        }
    }
    let bin = dir.join("defects.bin");
    std::fs::File::create(&bin)?.write_all(&buf)?;
    let mut txt = String::new();
    let _ = writeln!(txt, "format = defects.bin");
    let _ = writeln!(txt, "dim = {d}");
    let _ = writeln!(txt, "coarse_points_per_dim = {}", est.coarse.points_per_dim());
    let _ = writeln!(txt, "factor = {}", est.factor);
    let _ = writeln!(txt, "cells = {}", est.coarse.len());
    let _ = writeln!(txt, "young_samples = {samples_total}");
    let _ = writeln!(txt, "trace_conv_integral = {:e}", est.trace_conv_integral());
    let _ = writeln!(txt, "press_integral = {:e}", est.press_integral());
    let _ = writeln!(txt, "min_conv_eigenvalue = {:e}", est.min_conv_eigenvalue());
    let _ = writeln!(txt, "min_press = {:e}", est.min_press());
    let man = dir.join("defects.txt");
    std::fs::write(&man, txt)?;
    Ok(vec![bin, man])
}
