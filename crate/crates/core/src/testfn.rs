//! Analytic trigonometric test functions with exact derivatives.

use std::f64::consts::PI;

use crate::torus::{sobolev_symbol, GridSpec, SpectralField, SpectralVectorField};

/// `ψ(x) = c + a cos(2π k·x / L + θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarTest {
    pub constant: f64,
    pub amplitude: f64,
    pub k: [i64; 3],
    pub phase: f64,
    pub lengths: [f64; 3],
}

impl ScalarTest {
    pub fn constant(c: f64) -> Self {
        ScalarTest { constant: c, amplitude: 0.0, k: [0; 3], phase: 0.0, lengths: [1.0; 3] }
    }

    pub fn mode(k: [i64; 3], amplitude: f64, phase: f64) -> Self {
        ScalarTest { constant: 0.0, amplitude, k, phase, lengths: [1.0; 3] }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }

    pub fn with_lengths(mut self, grid: &GridSpec) -> Self {
        for a in 0..grid.dim() {
            self.lengths[a] = grid.length(a);
        }
        self
    }

    fn kappa(&self) -> [f64; 3] {
        let mut kappa = [0.0; 3];
        for a in 0..3 {
            kappa[a] = 2.0 * PI * self.k[a] as f64 / self.lengths[a];
        }
        kappa
    }

    fn arg(&self, x: [f64; 3]) -> f64 {
        let kappa = self.kappa();
        (0..3).map(|a| kappa[a] * x[a]).sum::<f64>() + self.phase
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        self.constant + self.amplitude * self.arg(x).cos()
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let s = -self.amplitude * self.arg(x).sin();
        let kappa = self.kappa();
        [s * kappa[0], s * kappa[1], s * kappa[2]]
    }

    /// `(Δ³ − I) ψ` in `d` dimensions, with the multi-index Sobolev symbol.
    pub fn viscosity(&self, x: [f64; 3], dim: usize) -> f64 {
        let sigma = sobolev_symbol(self.kappa(), dim);
        -self.constant - (sigma + 1.0) * self.amplitude * self.arg(x).cos()
    }

    /// Largest `|k_i|`.
    pub fn band(&self) -> usize {
        self.k.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn sample(&self, grid: &GridSpec) -> SpectralField {
        SpectralField::from_fn(*grid, |x| self.value(x))
    }
}

/// `φ(x) = e ψ(x)` for a fixed direction `e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorTest {
    pub direction: [f64; 3],
    pub profile: ScalarTest,
}

impl VectorTest {
    pub fn new(direction: [f64; 3], profile: ScalarTest) -> Self {
        VectorTest { direction, profile }
    }

    pub fn value(&self, x: [f64; 3]) -> [f64; 3] {
        let p = self.profile.value(x);
        [self.direction[0] * p, self.direction[1] * p, self.direction[2] * p]
    }

    /// `∂_j φ_i`, row `i`, column `j`.
    pub fn jacobian(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let g = self.profile.gradient(x);
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.direction[i] * g[j];
            }
        }
        out
    }

    pub fn divergence(&self, x: [f64; 3]) -> f64 {
        let g = self.profile.gradient(x);
        (0..3).map(|a| self.direction[a] * g[a]).sum()
    }

    pub fn viscosity(&self, x: [f64; 3], dim: usize) -> [f64; 3] {
        let v = self.profile.viscosity(x, dim);
        [self.direction[0] * v, self.direction[1] * v, self.direction[2] * v]
    }

    pub fn sample(&self, grid: &GridSpec) -> SpectralVectorField {
        SpectralVectorField::from_fn(*grid, |x| self.value(x))
    }
}

/// Space-time test `φ(t, x) = (a + b t) ψ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeTest {
    pub a: f64,
    pub b: f64,
    pub space: ScalarTest,
}

impl SpaceTimeTest {
    pub fn value(&self, t: f64, x: [f64; 3]) -> f64 {
        (self.a + self.b * t) * self.space.value(x)
    }

    pub fn time_derivative(&self, x: [f64; 3]) -> f64 {
        self.b * self.space.value(x)
    }

    pub fn gradient(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let g = self.space.gradient(x);
        let s = self.a + self.b * t;
        [s * g[0], s * g[1], s * g[2]]
    }
}
