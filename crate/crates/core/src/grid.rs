//! Uniform periodic grids and the real-valued fields that live on them.
//!
//! Values are stored flat in row-major order: the last axis varies fastest.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// A periodic box `[0, L)^dim` sampled with `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "axis length must be positive, got {length}"
            )));
        }
        Ok(Self { dim, n, length })
    }

    /// Two-dimensional grid on `[0, 2π)²`.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(2, n, 2.0 * PI)
    }

    /// Three-dimensional grid on `[0, 2π)³`.
    pub fn cube(n: usize) -> Result<Self> {
        Self::new(3, n, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn length_per_axis(&self) -> f64 {
        self.length
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Measure of the periodic box, `L^dim`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Distance in the flat layout between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.n
    }

    /// Physical coordinates of grid point `flat`.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let h = self.spacing();
        let mut x = [0.0; 3];
        for (axis, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.axis_index(flat, axis) as f64 * h;
        }
        x
    }
}

/// Real scalar field sampled on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wraps raw grid values; rejects wrong lengths and non-finite entries.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x)` at every grid point; unused trailing coordinates are zero.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Integral over the box by the uniform-grid rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `L²` inner product.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Root-mean-square value, `‖f‖ / |Ω|^{1/2}`.
    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Fallible pointwise map, used for the logarithmic potential.
    pub fn try_map(&self, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect::<Result<_>>()?;
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    /// Pointwise product.
    pub fn mul_pointwise(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    /// In-place `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &ScalarField) {
        debug_assert_eq!(self.grid, x.grid);
        for (s, xv) in self.values.iter_mut().zip(&x.values) {
            *s += a * xv;
        }
    }

    /// Same field with the mean removed.
    pub fn mean_free(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Periodic shift by whole grid cells, `g(x) = f(x - shift·h)`.
    pub fn translated(&self, shift: &[usize]) -> Self {
        let n = self.grid.n;
        let dim = self.grid.dim;
        let mut out = vec![0.0; self.values.len()];
        for (flat, &v) in self.values.iter().enumerate() {
            let mut target = 0;
            for axis in 0..dim {
                let s = shift.get(axis).copied().unwrap_or(0);
                let idx = (self.grid.axis_index(flat, axis) + s) % n;
                target += idx * self.grid.stride(axis);
            }
            out[target] = v;
        }
        Self {
            grid: self.grid,
            values: out,
        }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|a| a * rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|a| -a)
    }
}

/// Vector field with one [`ScalarField`] per spatial axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidGrid("vector field needs components".into()));
        };
        let grid = *first.grid();
        if components.len() != grid.dim() {
            return Err(Error::InvalidGrid(format!(
                "{} components on a {}-dimensional grid",
                components.len(),
                grid.dim()
            )));
        }
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { components })
    }

    pub(crate) fn from_components_unchecked(components: Vec<ScalarField>) -> Self {
        Self { components }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    /// Samples `f(x, i)` for component `i`.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3], usize) -> f64) -> Self {
        Self {
            components: (0..grid.dim())
                .map(|i| ScalarField::from_fn(grid, |x| f(x, i)))
                .collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut ScalarField {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    pub fn means(&self) -> Vec<f64> {
        self.components.iter().map(ScalarField::mean).collect()
    }

    pub fn dot(&self, other: &VectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_magnitude(&self) -> f64 {
        let len = self.grid().len();
        (0..len)
            .map(|p| {
                self.components
                    .iter()
                    .map(|c| c.values()[p].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn zip_components(
        &self,
        other: &VectorField,
        f: impl Fn(&ScalarField, &ScalarField) -> ScalarField,
    ) -> Self {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map_components(|f| f * c)
    }

    /// Each component multiplied pointwise by `s`.
    pub fn scaled_by_field(&self, s: &ScalarField) -> Self {
        self.map_components(|f| f.mul_pointwise(s))
    }

    pub fn axpy(&mut self, a: f64, x: &VectorField) {
        for (c, xc) in self.components.iter_mut().zip(&x.components) {
            c.axpy(a, xc);
        }
    }

    pub fn translated(&self, shift: &[usize]) -> Self {
        self.map_components(|f| f.translated(shift))
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.zip_components(rhs, |a, b| a + b)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.zip_components(rhs, |a, b| a - b)
    }
}

impl Neg for &VectorField {
    type Output = VectorField;
    fn neg(self) -> VectorField {
        self.map_components(|f| -f)
    }
}

/// Square `dim × dim` array of scalar fields, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    dim: usize,
    entries: Vec<ScalarField>,
}

impl TensorField {
    pub(crate) fn from_entries(dim: usize, entries: Vec<ScalarField>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i * self.dim + j]
    }

    /// `∫ A:A`, the squared Frobenius `L²` norm.
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.dot(e)).sum()
    }

    /// `∫ w A:A` for a pointwise weight `w`.
    pub fn weighted_norm_sq(&self, weight: &ScalarField) -> f64 {
        self.entries
            .iter()
            .map(|e| e.mul_pointwise(weight).dot(e))
            .sum()
    }

    /// Largest `|A_ij - A_ji|` over the grid.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..i {
                let d = (self.get(i, j) - self.get(j, i)).max_abs();
                worst = worst.max(d);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1, 16, 1.0).is_err());
        assert!(GridSpec::new(2, 7, 1.0).is_err());
        assert!(GridSpec::new(2, 6, 1.0).is_err());
        assert!(GridSpec::new(3, 8, -1.0).is_err());
        let g = GridSpec::new(3, 8, 2.0).unwrap();
        assert_eq!(g.len(), 512);
        assert_eq!(g.stride(0), 64);
        assert_eq!(g.axis_index(64 + 8 * 3 + 5, 1), 3);
        assert_eq!(g.point(64 + 8 * 3 + 5), [0.25, 0.75, 1.25]);
    }

    #[test]
    fn field_rejects_bad_input() {
        let g = GridSpec::square(8).unwrap();
        assert!(matches!(
            ScalarField::new(g, vec![0.0; 10]),
            Err(Error::LengthMismatch { .. })
        ));
        let mut v = vec![0.0; 64];
        v[3] = f64::NAN;
        assert_eq!(ScalarField::new(g, v), Err(Error::NonFinite { index: 3 }));
    }

    #[test]
    fn translation_is_periodic() {
        let g = GridSpec::square(8).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0] + 10.0 * x[1]);
        let t = f.translated(&[8, 16]);
        assert_eq!(t, f);
        let s = f.translated(&[1, 0]);
        assert_eq!(s.values()[g.stride(0)], f.values()[0]);
    }
}
