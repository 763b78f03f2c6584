//! Ideal-gas closure: `e = c_v θ`, `p = ρθ`, `s = c_v ln θ − ln ρ`.
//!
//! In conservative variables `(ρ, S = ρs)` the pressure is `p = ρ^γ exp(S/(c_v ρ))`
//! and the internal energy density is `E = ρe = c_v p`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SceError};

/// Largest admissible argument of `exp(S/(c_v ρ))`.
pub const EXPONENT_CAP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoParams {
    gamma: f64,
    c_v: f64,
}

impl ThermoParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(SceError::Config(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(ThermoParams { gamma, c_v: 1.0 / (gamma - 1.0) })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c_v(&self) -> f64 {
        self.c_v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoPoint {
    pub rho: f64,
    pub theta: f64,
}

impl ThermoPoint {
    pub fn new(rho: f64, theta: f64) -> Result<Self> {
        let pt = ThermoPoint { rho, theta };
        pt.check()?;
        Ok(pt)
    }

    fn check(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.theta > 0.0) || !self.rho.is_finite() || !self.theta.is_finite()
        {
            return Err(SceError::Domain(format!(
                "density and temperature must be positive, got rho = {}, theta = {}",
                self.rho, self.theta
            )));
        }
        Ok(())
    }
}

pub fn pressure_rt(pt: ThermoPoint) -> Result<f64> {
    pt.check()?;
    Ok(pt.rho * pt.theta)
}

/// Specific internal energy `e = c_v θ`.
pub fn internal_energy(pt: ThermoPoint, params: &ThermoParams) -> Result<f64> {
    pt.check()?;
    Ok(params.c_v * pt.theta)
}

/// Specific entropy `s = c_v ln θ − ln ρ`.
pub fn entropy(pt: ThermoPoint, params: &ThermoParams) -> Result<f64> {
    pt.check()?;
    Ok(params.c_v * pt.theta.ln() - pt.rho.ln())
}

fn conservative_exponent(rho: f64, s_total: f64, params: &ThermoParams) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(SceError::Domain(format!("density must be positive, got {rho}")));
    }
    if !s_total.is_finite() {
        return Err(SceError::Domain(format!("total entropy must be finite, got {s_total}")));
    }
    let exponent = s_total / (params.c_v * rho);
    if exponent > EXPONENT_CAP {
        return Err(SceError::ExponentOverflow { exponent, cap: EXPONENT_CAP });
    }
    Ok(exponent)
}

/// `p(ρ, S) = ρ^γ exp(S/(c_v ρ))`.
pub fn pressure_conservative(rho: f64, s_total: f64, params: &ThermoParams) -> Result<f64> {
    let exponent = conservative_exponent(rho, s_total, params)?;
    Ok(rho.powf(params.gamma) * exponent.exp())
}

/// `θ(ρ, S) = ρ^{γ−1} exp(S/(c_v ρ))`.
pub fn temperature_conservative(rho: f64, s_total: f64, params: &ThermoParams) -> Result<f64> {
    let exponent = conservative_exponent(rho, s_total, params)?;
    Ok(rho.powf(params.gamma - 1.0) * exponent.exp())
}

/// Internal energy density `E = ρe = c_v p(ρ, S)`.
pub fn energy_density_conservative(rho: f64, s_total: f64, params: &ThermoParams) -> Result<f64> {
    Ok(params.c_v * pressure_conservative(rho, s_total, params)?)
}

/// Specific entropy as a function of `(ρ, E)`.
pub fn entropy_from_energy(rho: f64, energy: f64, params: &ThermoParams) -> Result<f64> {
    if !(rho > 0.0 && energy > 0.0) {
        return Err(SceError::Domain(format!(
            "entropy needs positive density and energy, got rho = {rho}, E = {energy}"
        )));
    }
    Ok(params.c_v * (energy / (params.c_v * rho)).ln() - rho.ln())
}

/// Ballistic free energy `H_Θ(ρ, θ) = ρ c_v θ − Θ ρ s(ρ, θ)`.
pub fn ballistic_free_energy(pt: ThermoPoint, big_theta: f64, params: &ThermoParams) -> Result<f64> {
    if !(big_theta > 0.0) {
        return Err(SceError::Domain(format!("reference temperature must be positive, got {big_theta}")));
    }
    let s = entropy(pt, params)?;
    Ok(pt.rho * params.c_v * pt.theta - big_theta * pt.rho * s)
}

/// `∂_ρ H_Θ(ρ, θ)` at `θ = Θ`, equal to `c_v Θ − Θ s(ρ, Θ) + Θ`.
pub fn ballistic_density_derivative(rho: f64, big_theta: f64, params: &ThermoParams) -> Result<f64> {
    let s = entropy(ThermoPoint::new(rho, big_theta)?, params)?;
    Ok(params.c_v * big_theta - big_theta * s + big_theta)
}

/// Finite-difference residuals of Gibbs' relation `θ Ds = De + p D(1/ρ)`, one per
/// direction (`ρ`, then `θ`), with the default step `1e-6 · max(1, |v|)`.
pub fn gibbs_residual(pt: ThermoPoint, params: &ThermoParams) -> Result<(f64, f64)> {
    gibbs_residual_with_step(pt, params, 1e-6)
}

/// As [`gibbs_residual`] with step `rel_step · max(1, |v|)`.
pub fn gibbs_residual_with_step(
    pt: ThermoPoint,
    params: &ThermoParams,
    rel_step: f64,
) -> Result<(f64, f64)> {
    pt.check()?;
    let hr = rel_step * pt.rho.abs().max(1.0);
    let ht = rel_step * pt.theta.abs().max(1.0);
    if pt.rho - hr <= 0.0 || pt.theta - ht <= 0.0 {
        return Err(SceError::Domain("finite-difference stencil leaves the positive cone".into()));
    }
    // ln a − ln b without cancellation
    let log_diff = |a: f64, b: f64| ((a - b) / b).ln_1p();
    let ds = |r1: f64, t1: f64, r2: f64, t2: f64| params.c_v * log_diff(t1, t2) - log_diff(r1, r2);
    let de = |t1: f64, t2: f64| params.c_v * (t1 - t2);
    let dtau = |r1: f64, r2: f64| (r2 - r1) / (r1 * r2);
    let p = pt.rho * pt.theta;
    let (r, t) = (pt.rho, pt.theta);

    let r_rho = (t * ds(r + hr, t, r - hr, t) - (de(t, t) + p * dtau(r + hr, r - hr))) / (2.0 * hr);
    let r_theta = (t * ds(r, t + ht, r, t - ht) - de(t + ht, t - ht)) / (2.0 * ht);

    Ok((r_rho, r_theta))
}

/// Ratio `p / (1 + ρ + ρe + θ|s|)` scanned by the growth diagnostic.
pub fn pressure_hypothesis_check(pt: ThermoPoint, params: &ThermoParams) -> Result<f64> {
    let p = pressure_rt(pt)?;
    let e = internal_energy(pt, params)?;
    let s = entropy(pt, params)?;
    Ok(p / (1.0 + pt.rho + pt.rho * e + pt.theta * s.abs()))
}
