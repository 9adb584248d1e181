//! Structured grids, sampled fields, finite-difference operators and
//! quadrature.
//!
//! Cartesian grids cover the configuration space of `n_bodies` particles of
//! `dim_per_body` dimensions each, one axis per coordinate, flattened in
//! row-major order (last axis fastest). Radial-log grids sample a single
//! 3D body along a ray and carry quadrature weights with the spherical
//! measure folded in.

mod field;
pub mod io;
mod ops;
mod quadrature;

pub use field::{Sample, ScalarField, VectorField};
pub use ops::{
    derivative, divergence, gradient, gradient_all, laplacian, phase_gradient, phase_laplacian,
    second_derivative,
};
pub use quadrature::{integrate, Integral};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Upper bound on grid points for any single grid.
pub const MAX_POINTS: usize = 1 << 27;

/// Minimum axis length: the widest stencil needs four points plus a centre.
pub const MIN_AXIS_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// One-sided stencils at the two ends.
    Bounded,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Nodes at both ends of the interval; trapezoid weights.
    Vertex,
    /// Nodes at cell midpoints; midpoint-rule weights.
    Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub n: usize,
    pub origin: f64,
    pub spacing: f64,
    pub boundary: Boundary,
    pub centering: Centering,
}

impl Axis {
    /// `n` nodes from `lower` to `upper` inclusive.
    pub fn vertex(lower: f64, upper: f64, n: usize) -> Self {
        Self {
            n,
            origin: lower,
            spacing: (upper - lower) / (n.max(2) - 1) as f64,
            boundary: Boundary::Bounded,
            centering: Centering::Vertex,
        }
    }

    /// `n` cells over `[lower, upper]`, sampled at cell midpoints.
    pub fn cell_centered(lower: f64, upper: f64, n: usize) -> Self {
        let h = (upper - lower) / n.max(1) as f64;
        Self {
            n,
            origin: lower + 0.5 * h,
            spacing: h,
            boundary: Boundary::Bounded,
            centering: Centering::Cell,
        }
    }

    /// `n` nodes on a ring of circumference `length` starting at `lower`.
    pub fn periodic(lower: f64, length: f64, n: usize) -> Self {
        Self {
            n,
            origin: lower,
            spacing: length / n.max(1) as f64,
            boundary: Boundary::Periodic,
            centering: Centering::Vertex,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// 1D quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match (self.boundary, self.centering) {
            (Boundary::Bounded, Centering::Vertex) if i == 0 || i + 1 == self.n => {
                0.5 * self.spacing
            }
            _ => self.spacing,
        }
    }

    pub fn lower(&self) -> f64 {
        match self.centering {
            Centering::Cell => self.origin - 0.5 * self.spacing,
            Centering::Vertex => self.origin,
        }
    }

    pub fn upper(&self) -> f64 {
        match (self.boundary, self.centering) {
            (Boundary::Periodic, _) => self.origin + self.n as f64 * self.spacing,
            (_, Centering::Cell) => self.lower() + self.n as f64 * self.spacing,
            (_, Centering::Vertex) => self.coord(self.n - 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Cartesian {
        axes: Vec<Axis>,
    },
    /// Nodes `r_i * direction` with `r_i` log-spaced; weights hold `4πr² dr`.
    RadialLog {
        radii: Vec<f64>,
        weights: Vec<f64>,
        direction: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    topology: Topology,
    dim_per_body: usize,
}

impl Grid {
    pub fn cartesian(axes: Vec<Axis>, dim_per_body: usize) -> Result<Self> {
        if axes.is_empty() || dim_per_body == 0 || !axes.len().is_multiple_of(dim_per_body) {
            return Err(Error::InvalidGrid(format!(
                "{} axes cannot be split into bodies of dimension {dim_per_body}",
                axes.len()
            )));
        }
        for (a, axis) in axes.iter().enumerate() {
            if axis.n < MIN_AXIS_POINTS {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} points, at least {MIN_AXIS_POINTS} required",
                    axis.n
                )));
            }
            if !(axis.spacing > 0.0) || !axis.spacing.is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} spacing {} is not positive",
                    axis.spacing
                )));
            }
        }
        let points = axes
            .iter()
            .try_fold(1usize, |acc, ax| acc.checked_mul(ax.n))
            .unwrap_or(usize::MAX);
        if points > MAX_POINTS {
            return Err(Error::BudgetExceeded {
                points,
                limit: MAX_POINTS,
            });
        }
        Ok(Self {
            topology: Topology::Cartesian { axes },
            dim_per_body,
        })
    }

    /// Single-body cartesian box with one axis per dimension.
    pub fn cartesian_box(lower: &[f64], upper: &[f64], n: &[usize], centering: Centering) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != n.len() {
            return Err(Error::InvalidGrid("box extents and sizes differ in length".into()));
        }
        let axes = lower
            .iter()
            .zip(upper)
            .zip(n)
            .map(|((&lo, &hi), &n)| match centering {
                Centering::Vertex => Axis::vertex(lo, hi, n),
                Centering::Cell => Axis::cell_centered(lo, hi, n),
            })
            .collect();
        Self::cartesian(axes, lower.len())
    }

    /// Log-spaced radial grid for one 3D body; nodes lie along +x.
    pub fn radial_log(n: usize, r_min: f64, r_max: f64) -> Result<Self> {
        if n < MIN_AXIS_POINTS {
            return Err(Error::InvalidGrid(format!(
                "radial grid needs at least {MIN_AXIS_POINTS} nodes"
            )));
        }
        if !(r_min > 0.0) || !(r_max > r_min) {
            return Err(Error::InvalidGrid(format!(
                "radial range [{r_min}, {r_max}] must satisfy 0 < r_min < r_max"
            )));
        }
        if n > MAX_POINTS {
            return Err(Error::BudgetExceeded {
                points: n,
                limit: MAX_POINTS,
            });
        }
        let step = (r_max / r_min).ln() / (n - 1) as f64;
        let radii: Vec<f64> = (0..n).map(|i| r_min * (step * i as f64).exp()).collect();
        // trapezoid in ln r: dr = r d(ln r)
        let weights = radii
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let end = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
                4.0 * PI * r * r * r * step * end
            })
            .collect();
        Ok(Self {
            topology: Topology::RadialLog {
                radii,
                weights,
                direction: [1.0, 0.0, 0.0],
            },
            dim_per_body: 3,
        })
    }

    /// Replaces the ray direction of a radial grid (normalised).
    pub fn with_direction(mut self, dir: [f64; 3]) -> Result<Self> {
        let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        match &mut self.topology {
            Topology::RadialLog { direction, .. } if norm > 0.0 => {
                *direction = [dir[0] / norm, dir[1] / norm, dir[2] / norm];
                Ok(self)
            }
            Topology::RadialLog { .. } => Err(Error::InvalidGrid("zero ray direction".into())),
            Topology::Cartesian { .. } => Err(Error::InvalidGrid(
                "ray direction only applies to radial grids".into(),
            )),
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn is_cartesian(&self) -> bool {
        matches!(self.topology, Topology::Cartesian { .. })
    }

    pub fn axes(&self) -> Option<&[Axis]> {
        match &self.topology {
            Topology::Cartesian { axes } => Some(axes),
            Topology::RadialLog { .. } => None,
        }
    }

    pub fn cartesian_axes(&self) -> Result<&[Axis]> {
        self.axes().ok_or(Error::NotCartesian)
    }

    pub fn dim_per_body(&self) -> usize {
        self.dim_per_body
    }

    pub fn config_dim(&self) -> usize {
        match &self.topology {
            Topology::Cartesian { axes } => axes.len(),
            Topology::RadialLog { .. } => 3,
        }
    }

    pub fn n_bodies(&self) -> usize {
        self.config_dim() / self.dim_per_body
    }

    pub fn len(&self) -> usize {
        match &self.topology {
            Topology::Cartesian { axes } => axes.iter().map(|a| a.n).product(),
            Topology::RadialLog { radii, .. } => radii.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major strides, last axis fastest.
    pub fn strides(&self) -> Vec<usize> {
        match &self.topology {
            Topology::Cartesian { axes } => {
                let mut strides = vec![1; axes.len()];
                for a in (0..axes.len().saturating_sub(1)).rev() {
                    strides[a] = strides[a + 1] * axes[a + 1].n;
                }
                strides
            }
            Topology::RadialLog { .. } => vec![1],
        }
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        match &self.topology {
            Topology::Cartesian { axes } => {
                let mut rem = idx;
                let mut out = vec![0; axes.len()];
                for a in (0..axes.len()).rev() {
                    out[a] = rem % axes[a].n;
                    rem /= axes[a].n;
                }
                out
            }
            Topology::RadialLog { .. } => vec![idx],
        }
    }

    /// Configuration-space coordinates of node `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        match &self.topology {
            Topology::Cartesian { axes } => self
                .multi_index(idx)
                .iter()
                .zip(axes)
                .map(|(&i, ax)| ax.coord(i))
                .collect(),
            Topology::RadialLog {
                radii, direction, ..
            } => direction.iter().map(|d| d * radii[idx]).collect(),
        }
    }

    /// Quadrature weight of node `idx`.
    pub fn weight(&self, idx: usize) -> f64 {
        match &self.topology {
            Topology::Cartesian { axes } => self
                .multi_index(idx)
                .iter()
                .zip(axes)
                .map(|(&i, ax)| ax.weight(i))
                .product(),
            Topology::RadialLog { weights, .. } => weights[idx],
        }
    }

    /// Largest step: axis spacing, or the largest radial gap.
    pub fn max_spacing(&self) -> f64 {
        match &self.topology {
            Topology::Cartesian { axes } => axes.iter().map(|a| a.spacing).fold(0.0, f64::max),
            Topology::RadialLog { radii, .. } => radii
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0, f64::max),
        }
    }

    /// True when node `idx` is at least `margin` nodes away from every
    /// bounded edge. Radial grids have no stencil edges and always qualify.
    pub fn is_interior(&self, idx: usize, margin: usize) -> bool {
        match &self.topology {
            Topology::Cartesian { axes } => self
                .multi_index(idx)
                .iter()
                .zip(axes)
                .all(|(&i, ax)| ax.is_periodic() || (i >= margin && i + margin < ax.n)),
            Topology::RadialLog { .. } => true,
        }
    }

    /// True when node `idx` lies on a bounded face of the grid.
    pub fn on_bounded_face(&self, idx: usize) -> bool {
        match &self.topology {
            Topology::Cartesian { axes } => self
                .multi_index(idx)
                .iter()
                .zip(axes)
                .any(|(&i, ax)| !ax.is_periodic() && (i == 0 || i + 1 == ax.n)),
            Topology::RadialLog { radii, .. } => idx + 1 == radii.len(),
        }
    }

    pub(crate) fn check_body(&self, body: usize) -> Result<()> {
        if body >= self.n_bodies() {
            return Err(Error::BodyOutOfRange {
                body,
                n_bodies: self.n_bodies(),
            });
        }
        Ok(())
    }

    pub fn meta(&self) -> GridMeta {
        match &self.topology {
            Topology::Cartesian { axes } => GridMeta {
                kind: "cartesian".into(),
                dims: axes.iter().map(|a| a.n).collect(),
                spacing: axes.iter().map(|a| a.spacing).collect(),
                lower: axes.iter().map(|a| a.lower()).collect(),
                upper: axes.iter().map(|a| a.upper()).collect(),
                periodic: axes.iter().map(|a| a.is_periodic()).collect(),
                centering: axes.iter().map(|a| a.centering).collect(),
                dim_per_body: self.dim_per_body,
                points: self.len(),
                direction: None,
            },
            Topology::RadialLog {
                radii, direction, ..
            } => GridMeta {
                kind: "radial_log".into(),
                dims: vec![radii.len()],
                spacing: vec![(radii[1] / radii[0]).ln()],
                lower: vec![radii[0]],
                upper: vec![*radii.last().unwrap()],
                periodic: vec![false],
                centering: vec![Centering::Vertex],
                dim_per_body: 3,
                points: radii.len(),
                direction: Some(*direction),
            },
        }
    }
}

/// Serializable summary of a grid. For radial grids `spacing` holds the
/// logarithmic step and `lower`/`upper` the radial range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub kind: String,
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: Vec<bool>,
    pub centering: Vec<Centering>,
    pub dim_per_body: usize,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
}
