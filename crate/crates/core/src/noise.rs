//! Truncated cylindrical Wiener forcing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SceError};
use crate::torus::{GridSpec, SpectralField, SpectralVectorField};

/// Smooth transition: 1 for `z <= 0`, 0 for `z >= 1`, strictly decreasing between.
pub fn chi(z: f64) -> f64 {
    fn g(z: f64) -> f64 {
        if z > 0.0 {
            (-1.0 / z).exp()
        } else {
            0.0
        }
    }
    if z <= 0.0 {
        return 1.0;
    }
    if z >= 1.0 {
        return 0.0;
    }
    let a = g(1.0 - z);
    a / (a + g(z))
}

/// Auxiliary-space norm `sqrt(Σ_k α_k² / k²)`, `k` counted from 1.
pub fn u0_norm(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = (i + 1) as f64;
            a * a / (k * k)
        })
        .sum::<f64>()
        .sqrt()
}

/// SplitMix64 finaliser, used to derive independent per-path seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of path `index`; the base is hashed first so ensembles with nearby base
/// seeds do not share paths.
pub fn path_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed).wrapping_add(index))
}

/// Forcing directions `φ_k = φ(e_k)` with their Hilbert–Schmidt budget.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    grid: GridSpec,
    phi: Vec<SpectralVectorField>,
    hs_budget: f64,
}

impl NoiseModel {
    pub fn none(grid: GridSpec) -> Self {
        NoiseModel { grid, phi: Vec::new(), hs_budget: 0.0 }
    }

    /// `φ_k = σ k^{−a} e_1 cos(2π k x_1 / L_1)` for `k = 1..=K`.
    pub fn cosine_family(grid: GridSpec, modes: usize, sigma: f64, decay_a: f64) -> Result<Self> {
        if decay_a <= 0.5 {
            return Err(SceError::Config(format!(
                "noise decay_a must exceed 1/2 for a summable budget, got {decay_a}"
            )));
        }
        if modes > grid.modes() {
            return Err(SceError::Config(format!(
                "noise K = {modes} exceeds the Galerkin band m = {}",
                grid.modes()
            )));
        }
        let l = grid.length(0);
        let phi = (1..=modes)
            .map(|k| {
                let amp = sigma * (k as f64).powf(-decay_a);
                SpectralVectorField::from_fn(grid, |x| {
                    [amp * (2.0 * std::f64::consts::PI * k as f64 * x[0] / l).cos(), 0.0, 0.0]
                })
            })
            .collect();
        Self::from_fields(grid, phi)
    }

    /// Single spatially constant direction `φ_1 = σ e_1`.
    pub fn constant(grid: GridSpec, sigma: f64) -> Result<Self> {
        Self::from_fields(grid, vec![SpectralVectorField::constant(grid, [sigma, 0.0, 0.0])])
    }

    pub fn from_fields(grid: GridSpec, phi: Vec<SpectralVectorField>) -> Result<Self> {
        for (k, f) in phi.iter().enumerate() {
            grid.check_same(f.grid())?;
            let tol = 1e-12 * (1.0 + f.max_abs());
            if !f.components().iter().all(|c| c.is_band_limited(grid.modes(), tol)) {
                return Err(SceError::Config(format!(
                    "noise direction {} is not supported on the Galerkin band",
                    k + 1
                )));
            }
        }
        let hs_budget = phi.iter().map(|f| f.max_abs().powi(2)).sum();
        Ok(NoiseModel { grid, phi, hs_budget })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn modes(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[SpectralVectorField] {
        &self.phi
    }

    /// `Σ_k ‖φ_k‖²_{L∞}` on the collocation grid.
    pub fn hs_budget(&self) -> f64 {
        self.hs_budget
    }

    pub fn check_budget(&self, bound: f64) -> Result<()> {
        if !(self.hs_budget < bound) {
            return Err(SceError::Config(format!(
                "noise Hilbert-Schmidt budget {} is not below the bound {bound}",
                self.hs_budget
            )));
        }
        Ok(())
    }

    /// `Σ_k ∫ ρ |φ_k|² dx`, bounded by `hs_budget · ‖ρ‖_{L¹}`.
    pub fn weighted_hs_norm(&self, rho: &SpectralField) -> Result<f64> {
        let mut s = 0.0;
        for f in &self.phi {
            s += f.dot(f)?.inner(rho)?;
        }
        Ok(s)
    }
}

/// `φ_{ε,k}(x) = χ(|u(x)| − 1/ε) φ_k(x)`.
pub fn cutoff_phi(model: &NoiseModel, u: &SpectralVectorField, eps: f64) -> Result<Vec<SpectralVectorField>> {
    if !(eps > 0.0) {
        return Err(SceError::Config(format!("noise cut-off eps must be positive, got {eps}")));
    }
    model.grid.check_same(u.grid())?;
    let weights: Vec<f64> = u.magnitude().into_iter().map(|m| chi(m - 1.0 / eps)).collect();
    if weights.iter().all(|&w| w == 1.0) {
        return Ok(model.phi.clone());
    }
    let w = SpectralField::from_physical(model.grid, weights)?;
    model.phi.iter().map(|f| f.mul_scalar(&w)).collect()
}

/// Gaussian increments `ΔW_k` for each step, variance `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    seed: u64,
    dt: f64,
    modes: usize,
    increments: Vec<Vec<f64>>,
}

impl WienerPath {
    pub fn zeros(modes: usize, dt: f64, steps: usize) -> Self {
        WienerPath { seed: 0, dt, modes, increments: vec![vec![0.0; modes]; steps] }
    }

    pub fn from_increments(seed: u64, dt: f64, modes: usize, increments: Vec<Vec<f64>>) -> Result<Self> {
        if increments.iter().any(|row| row.len() != modes) {
            return Err(SceError::Config("Wiener increments have inconsistent mode counts".into()));
        }
        Ok(WienerPath { seed, dt, modes, increments })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|n| n as f64 * self.dt).collect()
    }

    /// Increments of step `n`, one per mode.
    pub fn increment(&self, n: usize) -> &[f64] {
        &self.increments[n]
    }

    pub fn increments(&self) -> &[Vec<f64>] {
        &self.increments
    }

    /// `β_k(n dt)` for every mode.
    pub fn value_at(&self, n: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.modes];
        for row in &self.increments[..n] {
            for (acc, d) in w.iter_mut().zip(row) {
                *acc += d;
            }
        }
        w
    }
}

pub fn sample_increments(model: &NoiseModel, dt: f64, steps: usize, seed: u64) -> Result<WienerPath> {
    sample_gaussian_increments(model.modes(), dt, steps, seed)
}

pub fn sample_gaussian_increments(modes: usize, dt: f64, steps: usize, seed: u64) -> Result<WienerPath> {
    if !(dt > 0.0) {
        return Err(SceError::Config(format!("dt must be positive, got {dt}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = dt.sqrt();
    let increments = (0..steps)
        .map(|_| {
            (0..modes)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * sd
                })
                .collect()
        })
        .collect();
    Ok(WienerPath { seed, dt, modes, increments })
}
