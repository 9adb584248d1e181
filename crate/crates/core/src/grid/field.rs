use super::Grid;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

/// Scalar sample type a field can hold: `f64` or `Complex64`.
pub trait Sample:
    Copy
    + Send
    + Sync
    + Debug
    + Default
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    fn magnitude(self) -> f64;

    fn is_finite_sample(self) -> bool;

    /// Shifts `self` by whole periods to lie within half a period of
    /// `reference`. Only meaningful for real phase samples.
    fn unwrap_near(self, reference: Self, period: f64) -> Self;
}

impl Sample for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }

    fn is_finite_sample(self) -> bool {
        self.is_finite()
    }

    fn unwrap_near(self, reference: f64, period: f64) -> f64 {
        let d = self - reference;
        reference + d - period * (d / period).round()
    }
}

impl Sample for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }

    fn is_finite_sample(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn unwrap_near(self, _reference: Complex64, _period: f64) -> Complex64 {
        self
    }
}

/// One value per grid node. Masked nodes hold NaN.
#[derive(Debug, Clone)]
pub struct ScalarField<T = f64> {
    grid: Arc<Grid>,
    values: Vec<T>,
    units: String,
}

impl<T: Sample> ScalarField<T> {
    pub fn new(grid: Arc<Grid>, values: Vec<T>, units: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            units: units.into(),
        })
    }

    /// Samples `f` at every node, in parallel.
    pub fn from_fn<F>(grid: Arc<Grid>, units: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> T + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.point(i)))
            .collect();
        Self {
            grid,
            values,
            units: units.into(),
        }
    }

    pub fn constant(grid: Arc<Grid>, value: T, units: impl Into<String>) -> Self {
        let values = vec![value; grid.len()];
        Self {
            grid,
            values,
            units: units.into(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = units.into();
        self
    }

    pub fn map<U: Sample>(&self, units: impl Into<String>, f: impl Fn(T) -> U + Sync) -> ScalarField<U> {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.par_iter().map(|&v| f(v)).collect(),
            units: units.into(),
        }
    }

    pub fn zip_with<U: Sample, V: Sample>(
        &self,
        other: &ScalarField<U>,
        units: impl Into<String>,
        f: impl Fn(T, U) -> V + Sync,
    ) -> Result<ScalarField<V>> {
        self.same_grid(&other.grid)?;
        Ok(ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
            units: units.into(),
        })
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &ScalarField<T>, b: f64) -> Result<ScalarField<T>> {
        self.zip_with(other, self.units.clone(), |x, y| x * a + y * b)
    }

    pub(crate) fn same_grid(&self, other: &Arc<Grid>) -> Result<()> {
        same_grid(&self.grid, other)
    }
}

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GridMismatch("fields live on different grids".into()))
    }
}

impl ScalarField<f64> {
    /// Largest finite magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `ncomp` values per node stored point-major.
#[derive(Debug, Clone)]
pub struct VectorField<T = f64> {
    grid: Arc<Grid>,
    ncomp: usize,
    values: Vec<T>,
    units: String,
}

impl<T: Sample> VectorField<T> {
    pub fn new(grid: Arc<Grid>, ncomp: usize, values: Vec<T>, units: impl Into<String>) -> Result<Self> {
        if ncomp == 0 || values.len() != grid.len() * ncomp {
            return Err(Error::GridMismatch(format!(
                "{} values for {} points x {} components",
                values.len(),
                grid.len(),
                ncomp
            )));
        }
        Ok(Self {
            grid,
            ncomp,
            values,
            units: units.into(),
        })
    }

    pub fn from_fn<F>(grid: Arc<Grid>, ncomp: usize, units: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<T> + Sync,
    {
        let values: Vec<T> = (0..grid.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                let v = f(&grid.point(i));
                debug_assert_eq!(v.len(), ncomp);
                v
            })
            .collect();
        Self {
            grid,
            ncomp,
            values,
            units: units.into(),
        }
    }

    /// Stacks scalar components into one vector field.
    pub fn from_components(components: &[ScalarField<T>], units: impl Into<String>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::GridMismatch("no components".into()))?;
        for c in components {
            first.same_grid(c.grid())?;
        }
        let n = first.len();
        let ncomp = components.len();
        let mut values = Vec::with_capacity(n * ncomp);
        for i in 0..n {
            for c in components {
                values.push(c.values()[i]);
            }
        }
        Self::new(first.grid().clone(), ncomp, values, units)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = units.into();
        self
    }

    pub fn at(&self, idx: usize) -> &[T] {
        &self.values[idx * self.ncomp..(idx + 1) * self.ncomp]
    }

    pub fn component(&self, c: usize) -> ScalarField<T> {
        assert!(c < self.ncomp, "component {c} out of range");
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().skip(c).step_by(self.ncomp).copied().collect(),
            units: self.units.clone(),
        }
    }

    pub fn map_points<U: Sample>(
        &self,
        ncomp: usize,
        units: impl Into<String>,
        f: impl Fn(usize, &[T]) -> Vec<U> + Sync,
    ) -> VectorField<U> {
        let values = (0..self.grid.len())
            .into_par_iter()
            .flat_map_iter(|i| f(i, self.at(i)))
            .collect();
        VectorField {
            grid: self.grid.clone(),
            ncomp,
            values,
            units: units.into(),
        }
    }
}

impl VectorField<f64> {
    /// Pointwise Euclidean norm.
    pub fn norm(&self) -> ScalarField<f64> {
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.at(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
            units: self.units.clone(),
        }
    }

    /// Pointwise squared norm.
    pub fn norm_sqr(&self, units: impl Into<String>) -> ScalarField<f64> {
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.at(i).iter().map(|v| v * v).sum::<f64>())
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
            units: units.into(),
        }
    }

    pub fn scale(&self, k: f64) -> VectorField<f64> {
        VectorField {
            grid: self.grid.clone(),
            ncomp: self.ncomp,
            values: self.values.iter().map(|v| v * k).collect(),
            units: self.units.clone(),
        }
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField<f64>, units: impl Into<String>) -> Result<VectorField<f64>> {
        s.same_grid(&self.grid)?;
        let nc = self.ncomp;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v * s.values()[k / nc])
            .collect();
        Ok(VectorField {
            grid: self.grid.clone(),
            ncomp: nc,
            values,
            units: units.into(),
        })
    }

    pub fn add(&self, other: &VectorField<f64>) -> Result<VectorField<f64>> {
        if self.ncomp != other.ncomp {
            return Err(Error::GridMismatch("component counts differ".into()));
        }
        same_grid(&self.grid, &other.grid)?;
        Ok(VectorField {
            grid: self.grid.clone(),
            ncomp: self.ncomp,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            units: self.units.clone(),
        })
    }
}
