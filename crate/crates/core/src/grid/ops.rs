//! Second-order finite differences on cartesian grids.
//!
//! Interior and periodic nodes use central stencils; bounded edges use
//! one-sided second-order stencils. The `phase_*` variants unwrap samples
//! locally (by whole periods) before differencing, so an unwrapped phase
//! with a seam still differentiates cleanly.

use super::field::same_grid;
use super::{Axis, Grid, Sample, ScalarField, VectorField};
use crate::error::{Error, Result};
use rayon::prelude::*;

#[derive(Clone, Copy)]
enum Order {
    First,
    Second,
}

/// Stencil offsets and weights for node `i` of `axis`, scaled by `1/h^k`.
fn stencil(axis: &Axis, i: usize, order: Order) -> (&'static [isize], &'static [f64], f64) {
    let h = axis.spacing;
    let n = axis.n;
    let periodic = axis.is_periodic();
    match order {
        Order::First => {
            let scale = 1.0 / (2.0 * h);
            if periodic || (i > 0 && i + 1 < n) {
                (&[-1, 1], &[-1.0, 1.0], scale)
            } else if i == 0 {
                (&[0, 1, 2], &[-3.0, 4.0, -1.0], scale)
            } else {
                (&[0, -1, -2], &[3.0, -4.0, 1.0], scale)
            }
        }
        Order::Second => {
            let scale = 1.0 / (h * h);
            if periodic || (i > 0 && i + 1 < n) {
                (&[-1, 0, 1], &[1.0, -2.0, 1.0], scale)
            } else if i == 0 {
                (&[0, 1, 2, 3], &[2.0, -5.0, 4.0, -1.0], scale)
            } else {
                (&[0, -1, -2, -3], &[2.0, -5.0, 4.0, -1.0], scale)
            }
        }
    }
}

fn axis_derivative<T: Sample>(
    values: &[T],
    axis: &Axis,
    stride: usize,
    idx: usize,
    i: usize,
    order: Order,
    period: Option<f64>,
) -> T {
    let (offsets, weights, scale) = stencil(axis, i, order);
    let base = idx - i * stride;
    let fetch = |o: isize| -> T {
        let j = if axis.is_periodic() {
            (i as isize + o).rem_euclid(axis.n as isize) as usize
        } else {
            (i as isize + o) as usize
        };
        values[base + j * stride]
    };
    let sample = |o: isize| -> T {
        match period {
            None => fetch(o),
            Some(p) => {
                // unwrap outward from the centre node, one step at a time
                let mut u = fetch(0);
                let step = o.signum();
                let mut k = 0;
                while k != o {
                    k += step;
                    u = fetch(k).unwrap_near(u, p);
                }
                u
            }
        }
    };
    let mut acc = T::default();
    for (&o, &w) in offsets.iter().zip(weights) {
        acc = acc + sample(o) * w;
    }
    acc * scale
}

fn body_axes(grid: &Grid, body: usize) -> Result<std::ops::Range<usize>> {
    grid.cartesian_axes()?;
    grid.check_body(body)?;
    let d = grid.dim_per_body();
    Ok(body * d..(body + 1) * d)
}

fn gradient_impl<T: Sample>(
    f: &ScalarField<T>,
    axes_range: std::ops::Range<usize>,
    period: Option<f64>,
) -> Result<VectorField<T>> {
    let grid = f.grid();
    let axes = grid.cartesian_axes()?;
    let strides = grid.strides();
    let values = f.values();
    let ncomp = axes_range.len();
    let out: Vec<T> = (0..grid.len())
        .into_par_iter()
        .flat_map_iter(|idx| {
            let mi = grid.multi_index(idx);
            let strides = &strides;
            axes_range.clone().map(move |a| {
                axis_derivative(values, &axes[a], strides[a], idx, mi[a], Order::First, period)
            })
        })
        .collect();
    VectorField::new(grid.clone(), ncomp, out, format!("{}/length", f.units()))
}

fn laplacian_impl<T: Sample>(
    f: &ScalarField<T>,
    axes_range: std::ops::Range<usize>,
    period: Option<f64>,
) -> Result<ScalarField<T>> {
    let grid = f.grid();
    let axes = grid.cartesian_axes()?;
    let strides = grid.strides();
    let values = f.values();
    let out: Vec<T> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let mi = grid.multi_index(idx);
            axes_range.clone().fold(T::default(), |acc, a| {
                acc + axis_derivative(values, &axes[a], strides[a], idx, mi[a], Order::Second, period)
            })
        })
        .collect();
    ScalarField::new(grid.clone(), out, format!("{}/length^2", f.units()))
}

/// Gradient with respect to the coordinates of `body`.
pub fn gradient<T: Sample>(f: &ScalarField<T>, body: usize) -> Result<VectorField<T>> {
    let range = body_axes(f.grid(), body)?;
    gradient_impl(f, range, None)
}

/// Gradient with respect to every configuration coordinate.
pub fn gradient_all<T: Sample>(f: &ScalarField<T>) -> Result<VectorField<T>> {
    let n = f.grid().cartesian_axes()?.len();
    gradient_impl(f, 0..n, None)
}

/// First derivative along configuration axis `axis`.
pub fn derivative<T: Sample>(f: &ScalarField<T>, axis: usize) -> Result<ScalarField<T>> {
    single_axis(f, axis)?;
    Ok(gradient_impl(f, axis..axis + 1, None)?.component(0))
}

/// Second derivative along configuration axis `axis`.
pub fn second_derivative<T: Sample>(f: &ScalarField<T>, axis: usize) -> Result<ScalarField<T>> {
    single_axis(f, axis)?;
    laplacian_impl(f, axis..axis + 1, None)
}

fn single_axis<T: Sample>(f: &ScalarField<T>, axis: usize) -> Result<()> {
    let n = f.grid().cartesian_axes()?.len();
    if axis >= n {
        return Err(Error::InvalidGrid(format!("axis {axis} out of range for {n} axes")));
    }
    Ok(())
}

/// Laplacian with respect to the coordinates of `body`.
pub fn laplacian<T: Sample>(f: &ScalarField<T>, body: usize) -> Result<ScalarField<T>> {
    let range = body_axes(f.grid(), body)?;
    laplacian_impl(f, range, None)
}

/// Divergence over the coordinates of `body`. Accepts either a body-local
/// field (`dim_per_body` components) or a full configuration-space field.
pub fn divergence<T: Sample>(field: &VectorField<T>, body: usize) -> Result<ScalarField<T>> {
    let grid = field.grid();
    let range = body_axes(grid, body)?;
    let axes = grid.cartesian_axes()?;
    let first_comp = if field.ncomp() == range.len() {
        0
    } else if field.ncomp() == axes.len() {
        range.start
    } else {
        return Err(Error::GridMismatch(format!(
            "vector field with {} components does not match body dimension {} or configuration dimension {}",
            field.ncomp(),
            range.len(),
            axes.len()
        )));
    };
    let mut total: Option<ScalarField<T>> = None;
    for (k, a) in range.enumerate() {
        let comp = field.component(first_comp + k);
        let d = gradient_impl(&comp, a..a + 1, None)?.component(0);
        total = Some(match total {
            None => d,
            Some(t) => {
                same_grid(t.grid(), d.grid())?;
                t.zip_with(&d, "", |x, y| x + y)?
            }
        });
    }
    Ok(total
        .expect("body has at least one axis")
        .with_units(format!("{}/length", field.units())))
}

/// Gradient of a phase field, insensitive to jumps by multiples of `period`.
pub fn phase_gradient(s: &ScalarField<f64>, body: usize, period: f64) -> Result<VectorField<f64>> {
    let range = body_axes(s.grid(), body)?;
    gradient_impl(s, range, Some(period))
}

/// Laplacian of a phase field, insensitive to jumps by multiples of `period`.
pub fn phase_laplacian(s: &ScalarField<f64>, body: usize, period: f64) -> Result<ScalarField<f64>> {
    let range = body_axes(s.grid(), body)?;
    laplacian_impl(s, range, Some(period))
}
