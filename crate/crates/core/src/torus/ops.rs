use num_complex::Complex64;

use super::{GridSpec, SpectralField, SpectralVectorField};
use crate::error::{Result, SceError};

pub fn grad(f: &SpectralField) -> SpectralVectorField {
    let d = f.grid().dim();
    SpectralVectorField::new((0..d).map(|a| f.derivative(a)).collect()).expect("same grid")
}

pub fn div(v: &SpectralVectorField) -> SpectralField {
    let grid = *v.grid();
    let mut spectral = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (axis, comp) in v.components().iter().enumerate() {
        for (i, (acc, c)) in spectral.iter_mut().zip(comp.spectral()).enumerate() {
            *acc += c * Complex64::new(0.0, grid.angular_wavevector(i)[axis]);
        }
    }
    SpectralField::from_spectral(grid, spectral).expect("same grid")
}

/// Row-wise divergence `(div T)_i = Σ_j ∂_j T_ij`.
pub fn tensor_div(t: &[Vec<SpectralField>]) -> Result<SpectralVectorField> {
    let rows = t
        .iter()
        .map(|row| SpectralVectorField::new(row.clone()).map(|r| div(&r)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = rows.first() {
        if rows.len() != first.grid().dim() {
            return Err(SceError::GridMismatch(format!(
                "tensor has {} rows on a {}-d grid",
                rows.len(),
                first.grid().dim()
            )));
        }
    }
    SpectralVectorField::new(rows)
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    f.apply_symbol(|_, kappa| Complex64::new(-kappa.iter().map(|k| k * k).sum::<f64>(), 0.0))
}

/// Top-order Sobolev symbol `Σ_{|α|=3} Π_i κ_i^{2 α_i}`.
pub fn sobolev_symbol(kappa: [f64; 3], dim: usize) -> f64 {
    let q: Vec<f64> = kappa[..dim].iter().map(|k| k * k).collect();
    match dim {
        1 => q[0].powi(3),
        2 => {
            let (a, b) = (q[0], q[1]);
            a * a * a + a * a * b + a * b * b + b * b * b
        }
        _ => {
            // complete homogeneous symmetric polynomial of degree 3 in q
            let mut s = 0.0;
            for i in 0..3 {
                for j in i..3 {
                    for k in j..3 {
                        s += q[i] * q[j] * q[k];
                    }
                }
            }
            s
        }
    }
}

/// Symbol of the viscosity operator `L`, equal to `-(σ_3 + 1)`.
pub fn viscosity_symbol(kappa: [f64; 3], dim: usize) -> f64 {
    -(sobolev_symbol(kappa, dim) + 1.0)
}

/// `L v` componentwise; `⟨L v, w⟩ = -((v; w))_3`.
pub fn viscosity_apply(v: &SpectralVectorField) -> SpectralVectorField {
    let d = v.dim();
    let comps = v
        .components()
        .iter()
        .map(|c| c.apply_symbol(|_, kappa| Complex64::new(viscosity_symbol(kappa, d), 0.0)))
        .collect();
    SpectralVectorField::new(comps).expect("same grid")
}

/// `((u; v))_3 = Σ_{|α|=3} ∫ ∂^α u · ∂^α v + ∫ u · v`, evaluated by Parseval.
pub fn sobolev_inner_3(u: &SpectralVectorField, v: &SpectralVectorField) -> Result<f64> {
    u.grid().check_same(v.grid())?;
    let grid: GridSpec = *u.grid();
    let d = grid.dim();
    let mut s = 0.0;
    for (a, b) in u.components().iter().zip(v.components()) {
        for (i, (x, y)) in a.spectral().iter().zip(b.spectral()).enumerate() {
            let w = sobolev_symbol(grid.angular_wavevector(i), d) + 1.0;
            s += w * (x * y.conj()).re;
        }
    }
    Ok(s * grid.volume())
}
