//! Named families of smooth positive initial data.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::error::{Result, SceError};
use crate::scheme::FluidState;
use crate::thermo::ThermoParams;
use crate::torus::{read_field, GridSpec, SpectralField, SpectralVectorField};

use super::config::{InitialFamily, InitialSection};

/// Sound speed `c = √(γ p̄ / ρ̄)` of the constant state `(ρ̄, s̄)`.
pub fn sound_speed(rho: f64, specific_entropy: f64, params: &ThermoParams) -> f64 {
    let p = rho.powf(params.gamma()) * (specific_entropy / params.c_v()).exp();
    (params.gamma() * p / rho).sqrt()
}

pub fn initial_condition(spec: &InitialSection, grid: &GridSpec, params: &ThermoParams) -> Result<FluidState> {
    let g = *grid;
    let (rho0, s0) = (spec.rho, spec.entropy);
    if !(rho0 > 0.0) {
        return Err(SceError::Config(format!("[initial] rho = {rho0}: must be positive")));
    }
    let l = g.length(0);
    let state = match spec.family {
        InitialFamily::Stationary => FluidState::new(
            SpectralField::constant(g, rho0),
            SpectralVectorField::zeros(g),
            SpectralField::constant(g, rho0 * s0),
            0.0,
        )?,
        InitialFamily::DensityPulse => {
            // periodic bump centred in the box: exp((cos θ − 1)/w²) per axis
            let w2 = (2.0 * PI * spec.width).powi(2);
            let a = spec.amplitude;
            let rho = SpectralField::from_fn(g, |x| {
                let bump: f64 =
                    (0..g.dim()).map(|i| (((2.0 * PI * (x[i] / g.length(i) - 0.5)).cos() - 1.0) / w2).exp()).product();
                rho0 * (1.0 + a * bump)
            });
            let entropy = rho.map(|r| r * s0);
            FluidState::new(rho, SpectralVectorField::zeros(g), entropy, 0.0)?
        }
        InitialFamily::IsentropicWave => {
            // right-going linear acoustic wave along x₁
            let c = sound_speed(rho0, s0, params);
            let k = 2.0 * PI * spec.wavenumber as f64 / l;
            let a = spec.amplitude;
            let rho = SpectralField::from_fn(g, |x| rho0 * (1.0 + a * (k * x[0]).cos()));
            let u = SpectralVectorField::from_fn(g, |x| [c * a * (k * x[0]).cos(), 0.0, 0.0]);
            let entropy = rho.map(|r| r * s0);
            FluidState::from_velocity(rho, &u, entropy, 0.0)?
        }
        InitialFamily::OscillationPair => {
            // m₁ = a (1 + b cos(2π x₁/L)) cos(2π K x₁/L); K = N/2 alternates sign per cell
            let k = 2.0 * PI * spec.wavenumber as f64 / l;
            let (a, b) = (spec.amplitude, spec.envelope);
            let mom = SpectralVectorField::from_fn(g, |x| {
                let env = 1.0 + b * (2.0 * PI * x[0] / l).cos();
                let osc = if 2 * spec.wavenumber == g.points_per_dim() {
                    // exact ±1 on the grid, free of rounding in cos(π j)
                    let j = ((x[0] / l) * g.points_per_dim() as f64 - g.offset()).round() as i64;
                    if j % 2 == 0 { 1.0 } else { -1.0 }
                } else {
                    (k * x[0]).cos()
                };
                [a * env * osc, 0.0, 0.0]
            });
            FluidState::new(SpectralField::constant(g, rho0), mom, SpectralField::constant(g, rho0 * s0), 0.0)?
        }
        InitialFamily::File => load_state(Path::new(&spec.path), grid)?,
    };
    Ok(state)
}

/// Reads `rho.bin`, `entropy.bin` and `mom_<i>.bin` written by [`super::run`].
pub fn load_state(dir: &Path, grid: &GridSpec) -> Result<FluidState> {
    let read = |name: &str| -> Result<SpectralField> {
        let path = dir.join(name);
        let f = File::open(&path).map_err(|e| SceError::Io(format!("{}: {e}", path.display())))?;
        let field = read_field(BufReader::new(f))?;
        let fg = field.grid();
        if fg.dim() != grid.dim() || fg.points_per_dim() != grid.points_per_dim() {
            return Err(SceError::GridMismatch(format!(
                "{}: dump is {}-d with N = {}, config expects {}-d with N = {}",
                path.display(),
                fg.dim(),
                fg.points_per_dim(),
                grid.dim(),
                grid.points_per_dim()
            )));
        }
        SpectralField::from_physical(*grid, field.physical().to_vec())
    };
    let rho = read("rho.bin")?;
    let entropy = read("entropy.bin")?;
    let mom = (0..grid.dim()).map(|i| read(&format!("mom_{i}.bin"))).collect::<Result<Vec<_>>>()?;
    FluidState::new(rho, SpectralVectorField::new(mom)?, entropy, 0.0)
}
