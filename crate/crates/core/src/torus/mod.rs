//! Periodic scalar and vector fields on the flat torus `T^d`, `d ∈ {1,2,3}`.
//!
//! # Coefficient layout
//!
//! Every field carries two views of the same data:
//!
//! * `physical`: `N^d` real samples on the collocation grid, row-major with the
//!   last axis fastest. Sample `(i_0, .., i_{d-1})` sits at
//!   `x_a = (i_a + offset) * L_a / N`.
//! * `spectral`: `N^d` complex Fourier-series amplitudes in the same row-major
//!   order, each axis in standard FFT order: bin `j < N/2` is wavenumber `j`,
//!   bin `j > N/2` is `j - N`, and bin `N/2` is the Nyquist mode. The field is
//!   `f(x) = Σ_k c_k exp(2πi k·x / L)`, so `c_0` is the mean. Real fields are
//!   Hermitian, `c_{-k} = conj(c_k)`; the full complex array is stored rather
//!   than a half spectrum.
//!
//! Spectral derivatives treat the Nyquist wavenumber as zero.

mod dump;
mod fft;
mod ops;

pub use dump::{read_field, write_field, FIELD_HEADER_BYTES, FIELD_MAGIC};
pub use ops::{
    div, grad, laplacian, sobolev_inner_3, sobolev_symbol, tensor_div, viscosity_apply,
    viscosity_symbol,
};

use num_complex::Complex64;

use crate::error::{Result, SceError};

/// Grid and Galerkin band description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    modes: usize,
    lengths: [f64; 3],
    offset: f64,
}

impl GridSpec {
    /// Unit torus grid with `n` points per axis and Galerkin band `|k_i| <= modes`.
    pub fn new(dim: usize, n: usize, modes: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(SceError::Config(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if n == 0 || n % 2 != 0 {
            return Err(SceError::Config(format!(
                "points_per_dim must be a positive even integer, got {n}"
            )));
        }
        if modes == 0 {
            return Err(SceError::Config("galerkin_modes must be positive".into()));
        }
        if 3 * modes > n {
            return Err(SceError::Config(format!(
                "galerkin_modes = {modes} violates the 2/3 dealiasing rule (m <= N/3 = {})",
                n / 3
            )));
        }
        Ok(GridSpec { dim, n, modes, lengths: [1.0; 3], offset: 0.0 })
    }

    pub fn with_length(mut self, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(SceError::Config(format!("domain length must be positive, got {length}")));
        }
        self.lengths = [length; 3];
        Ok(self)
    }

    pub fn with_lengths(mut self, lengths: &[f64]) -> Result<Self> {
        if lengths.len() != self.dim {
            return Err(SceError::Config(format!(
                "expected {} domain lengths, got {}",
                self.dim,
                lengths.len()
            )));
        }
        for (slot, &l) in self.lengths.iter_mut().zip(lengths) {
            if !(l > 0.0 && l.is_finite()) {
                return Err(SceError::Config(format!("domain length must be positive, got {l}")));
            }
            *slot = l;
        }
        Ok(self)
    }

    /// Shift of the sample positions, in units of one cell.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_modes(self, modes: usize) -> Result<Self> {
        let mut g = GridSpec::new(self.dim, self.n, modes)?;
        g.lengths = self.lengths;
        g.offset = self.offset;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    /// Largest band the grid can represent without aliasing quadratic products.
    pub fn dealias_bound(&self) -> usize {
        self.n / 3
    }

    /// Number of collocation points, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        (0..self.dim).fold(0, |acc, axis| acc * self.n + idx[axis])
    }

    pub fn coordinate(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = (idx[axis] as f64 + self.offset) * self.lengths[axis] / self.n as f64;
        }
        x
    }

    /// Signed wavenumber of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }

    pub fn wavevector(&self, flat: usize) -> [i64; 3] {
        let idx = self.multi_index(flat);
        let mut k = [0i64; 3];
        for axis in 0..self.dim {
            k[axis] = self.wavenumber(idx[axis]);
        }
        k
    }

    /// Angular wavevector used for differentiation (Nyquist components zeroed).
    pub fn angular_wavevector(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut kappa = [0.0; 3];
        for axis in 0..self.dim {
            if !self.is_nyquist(idx[axis]) {
                kappa[axis] = 2.0 * std::f64::consts::PI * self.wavenumber(idx[axis]) as f64
                    / self.lengths[axis];
            }
        }
        kappa
    }

    /// `max_i |k_i|` of bin `flat`, counting Nyquist as `N/2`.
    pub fn max_abs_wavenumber(&self, flat: usize) -> usize {
        self.wavevector(flat).iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(SceError::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Periodic real field with paired physical samples and Fourier amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    physical: Vec<f64>,
    spectral: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        let mut spectral = vec![Complex64::new(0.0, 0.0); grid.len()];
        spectral[0] = Complex64::new(value, 0.0);
        SpectralField { grid, physical: vec![value; grid.len()], spectral }
    }

    pub fn from_physical(grid: GridSpec, physical: Vec<f64>) -> Result<Self> {
        if physical.len() != grid.len() {
            return Err(SceError::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                physical.len()
            )));
        }
        let mut spectral: Vec<Complex64> =
            physical.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::fft_nd(&mut spectral, grid.n, grid.dim, false);
        Ok(SpectralField { grid, physical, spectral })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let physical = (0..grid.len()).map(|i| f(grid.coordinate(i))).collect();
        Self::from_physical(grid, physical).expect("length matches by construction")
    }

    /// Builds a field from (Hermitian) amplitudes; the physical view keeps the real part.
    pub fn from_spectral(grid: GridSpec, spectral: Vec<Complex64>) -> Result<Self> {
        if spectral.len() != grid.len() {
            return Err(SceError::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                spectral.len()
            )));
        }
        let mut buf = spectral.clone();
        fft::fft_nd(&mut buf, grid.n, grid.dim, true);
        let physical = buf.iter().map(|c| c.re).collect();
        Ok(SpectralField { grid, physical, spectral })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn physical(&self) -> &[f64] {
        &self.physical
    }

    pub fn spectral(&self) -> &[Complex64] {
        &self.spectral
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let physical = self.physical.iter().map(|&v| f(v)).collect();
        Self::from_physical(self.grid, physical).expect("same grid")
    }

    pub fn zip_map(&self, other: &SpectralField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let physical =
            self.physical.iter().zip(&other.physical).map(|(&a, &b)| f(a, b)).collect();
        Self::from_physical(self.grid, physical)
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.linear_combination(1.0, other, -1.0)
    }

    /// `a * self + b * other`, computed in both views without a transform.
    pub fn linear_combination(&self, a: f64, other: &SpectralField, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(SpectralField {
            grid: self.grid,
            physical: self.physical.iter().zip(&other.physical).map(|(x, y)| a * x + b * y).collect(),
            spectral: self.spectral.iter().zip(&other.spectral).map(|(x, y)| x * a + y * b).collect(),
        })
    }

    pub fn scale(&self, a: f64) -> Self {
        SpectralField {
            grid: self.grid,
            physical: self.physical.iter().map(|x| a * x).collect(),
            spectral: self.spectral.iter().map(|x| x * a).collect(),
        }
    }

    /// Pointwise product on the collocation grid.
    pub fn mul(&self, other: &SpectralField) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn mean(&self) -> f64 {
        self.physical.iter().sum::<f64>() / self.physical.len() as f64
    }

    /// Grid quadrature of `∫ f dx`.
    pub fn integral(&self) -> f64 {
        self.mean() * self.grid.volume()
    }

    /// Discrete `L²` inner product `∫ f g dx`.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self.physical.iter().zip(&other.physical).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).expect("same grid").sqrt()
    }

    pub fn min(&self) -> f64 {
        self.physical.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.physical.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.physical.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.physical.iter().all(|v| v.is_finite())
    }

    /// Multiplies every amplitude by `symbol(k, κ)`.
    pub fn apply_symbol(&self, symbol: impl Fn([i64; 3], [f64; 3]) -> Complex64) -> Self {
        let spectral = self
            .spectral
            .iter()
            .enumerate()
            .map(|(i, c)| c * symbol(self.grid.wavevector(i), self.grid.angular_wavevector(i)))
            .collect();
        Self::from_spectral(self.grid, spectral).expect("same grid")
    }

    /// Galerkin projection onto `|k|_∞ <= m`.
    pub fn project_galerkin(&self, m: usize) -> Result<Self> {
        if 3 * m > self.grid.n {
            return Err(SceError::Config(format!(
                "projection band m = {m} exceeds the dealiasing bound N/3 = {}",
                self.grid.n / 3
            )));
        }
        Ok(self.truncate(m))
    }

    /// Projection onto the grid's own Galerkin band.
    pub fn project(&self) -> Self {
        self.truncate(self.grid.modes)
    }

    /// 2/3-rule truncation.
    pub fn dealias(&self) -> Self {
        self.truncate(self.grid.dealias_bound())
    }

    fn truncate(&self, m: usize) -> Self {
        let spectral = self
            .spectral
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if self.grid.max_abs_wavenumber(i) <= m {
                    c
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::from_spectral(self.grid, spectral).expect("same grid")
    }

    /// True when every amplitude outside `|k|_∞ <= m` vanishes to `tol` (absolute).
    pub fn is_band_limited(&self, m: usize, tol: f64) -> bool {
        self.spectral
            .iter()
            .enumerate()
            .all(|(i, c)| self.grid.max_abs_wavenumber(i) <= m || c.norm() <= tol)
    }

    pub fn derivative(&self, axis: usize) -> Self {
        self.apply_symbol(|_, kappa| Complex64::new(0.0, kappa[axis]))
    }

    /// Trigonometric interpolation at an arbitrary point.
    ///
    /// Nyquist bins contribute `cos(π N x / L)` along their axis so the interpolant stays real.
    pub fn eval_at(&self, x: [f64; 3]) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.spectral.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let idx = self.grid.multi_index(i);
            let mut factor = Complex64::new(1.0, 0.0);
            for axis in 0..self.grid.dim {
                let l = self.grid.lengths[axis];
                if self.grid.is_nyquist(idx[axis]) {
                    factor *= (0.5 * tau * self.grid.n as f64 * x[axis] / l).cos();
                } else {
                    let k = self.grid.wavenumber(idx[axis]) as f64;
                    factor *= Complex64::from_polar(1.0, tau * k * x[axis] / l);
                }
            }
            acc += c * factor;
        }
        acc.re
    }
}

/// `d`-component vector field sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    components: Vec<SpectralField>,
}

impl SpectralVectorField {
    pub fn new(components: Vec<SpectralField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| SceError::GridMismatch("vector field needs components".into()))?;
        let grid = *first.grid();
        if components.len() != grid.dim {
            return Err(SceError::GridMismatch(format!(
                "vector field on a {}-d grid needs {} components, got {}",
                grid.dim,
                grid.dim,
                components.len()
            )));
        }
        for c in &components {
            grid.check_same(c.grid())?;
        }
        Ok(SpectralVectorField { components })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        SpectralVectorField { components: vec![SpectralField::zeros(grid); grid.dim] }
    }

    pub fn constant(grid: GridSpec, value: [f64; 3]) -> Self {
        SpectralVectorField {
            components: (0..grid.dim).map(|a| SpectralField::constant(grid, value[a])).collect(),
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let samples: Vec<[f64; 3]> = (0..grid.len()).map(|i| f(grid.coordinate(i))).collect();
        let components = (0..grid.dim)
            .map(|a| {
                SpectralField::from_physical(grid, samples.iter().map(|v| v[a]).collect())
                    .expect("same grid")
            })
            .collect();
        SpectralVectorField { components }
    }

    pub fn grid(&self) -> &GridSpec {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, axis: usize) -> &SpectralField {
        &self.components[axis]
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<SpectralField> {
        self.components
    }

    /// Sample of the vector at grid point `i`.
    pub fn at(&self, i: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (a, c) in self.components.iter().enumerate() {
            v[a] = c.physical()[i];
        }
        v
    }

    fn map_components(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        SpectralVectorField { components: self.components.iter().map(f).collect() }
    }

    fn zip_components(
        &self,
        other: &SpectralVectorField,
        f: impl Fn(&SpectralField, &SpectralField) -> Result<SpectralField>,
    ) -> Result<Self> {
        self.grid().check_same(other.grid())?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectralVectorField { components })
    }

    pub fn add(&self, other: &SpectralVectorField) -> Result<Self> {
        self.zip_components(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &SpectralVectorField) -> Result<Self> {
        self.zip_components(other, |a, b| a.sub(b))
    }

    pub fn linear_combination(&self, a: f64, other: &SpectralVectorField, b: f64) -> Result<Self> {
        self.zip_components(other, |x, y| x.linear_combination(a, y, b))
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_components(|c| c.scale(a))
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, f: &SpectralField) -> Result<Self> {
        self.grid().check_same(f.grid())?;
        let components =
            self.components.iter().map(|c| c.mul(f)).collect::<Result<Vec<_>>>()?;
        Ok(SpectralVectorField { components })
    }

    pub fn project_galerkin(&self, m: usize) -> Result<Self> {
        let components =
            self.components.iter().map(|c| c.project_galerkin(m)).collect::<Result<Vec<_>>>()?;
        Ok(SpectralVectorField { components })
    }

    pub fn project(&self) -> Self {
        self.map_components(SpectralField::project)
    }

    pub fn dealias(&self) -> Self {
        self.map_components(SpectralField::dealias)
    }

    /// Pointwise `u·v`.
    pub fn dot(&self, other: &SpectralVectorField) -> Result<SpectralField> {
        self.grid().check_same(other.grid())?;
        let grid = *self.grid();
        let physical = (0..grid.len())
            .map(|i| self.components.iter().zip(&other.components).map(|(a, b)| a.physical()[i] * b.physical()[i]).sum())
            .collect();
        SpectralField::from_physical(grid, physical)
    }

    /// Pointwise Euclidean magnitude samples.
    pub fn magnitude(&self) -> Vec<f64> {
        let grid = self.grid();
        (0..grid.len())
            .map(|i| self.components.iter().map(|c| c.physical()[i].powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    /// `∫ u·v dx`.
    pub fn inner(&self, other: &SpectralVectorField) -> Result<f64> {
        self.grid().check_same(other.grid())?;
        let mut s = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            s += a.inner(b)?;
        }
        Ok(s)
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).expect("same grid").sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().into_iter().fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(SpectralField::is_finite)
    }

    pub fn integral(&self) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (a, c) in self.components.iter().enumerate() {
            v[a] = c.integral();
        }
        v
    }
}
