//! Closed-form quantum states and polar decomposition of sampled wavefunctions.
//!
//! Every [`AnalyticState`] evaluates Ψ as a [`Jet`] in the variables
//! `(x_0, .., x_{D-1}, t)`, so any partial derivative in space or time is
//! available exactly. Atomic units throughout (ħ = m = 1).

mod catalog;
mod label;
mod polar;

pub use catalog::{
    catalog_box_1d, catalog_hydrogen_ns, corrupt, gaussian_packet, harmonic, hydrogen_2p,
    plane_gaussian, product, ring, smooth_random, superpose,
};
pub use label::parse_real;
pub use polar::{polar_decompose, PolarPair, DEFAULT_NODE_EPS};

use crate::error::{Error, Result};
use crate::jet::{self, Jet, JetSpace};
use catalog::Form;
use num_complex::Complex64;
use std::sync::Arc;

/// External potential acting on the bodies of a state.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Free,
    /// `-charge / r` about the origin of each body.
    Coulomb { charge: f64 },
    /// `ω²|x|²/2` per body.
    Harmonic { omega: f64 },
    /// One potential per body, no interaction terms.
    Separable(Vec<Potential>),
}

impl Potential {
    /// `U` as a jet of the body coordinates `xs` (all bodies, body-major).
    pub fn jet<'s>(&self, space: &'s JetSpace, xs: &[Jet<'s>], dim_per_body: usize) -> Jet<'s> {
        match self {
            Potential::Free => space.constant(0.0),
            Potential::Coulomb { charge } => {
                let mut total = space.constant(0.0);
                for body in xs.chunks(dim_per_body) {
                    let r2 = jet::sum(body.iter().map(|x| x * x)).expect("non-empty body");
                    total = total + r2.sqrt().recip().scale(-charge);
                }
                total
            }
            Potential::Harmonic { omega } => {
                let r2 = jet::sum(xs.iter().map(|x| x * x)).expect("non-empty configuration");
                r2.scale(0.5 * omega * omega)
            }
            Potential::Separable(parts) => {
                let per = xs.len() / parts.len();
                let mut total = space.constant(0.0);
                for (p, chunk) in parts.iter().zip(xs.chunks(per)) {
                    total = total + p.jet(space, chunk, dim_per_body);
                }
                total
            }
        }
    }
}

/// Axis-aligned configuration domain; infinite bounds mean all of ℝ.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl Domain {
    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
            periodic: vec![false; dim],
        }
    }

    pub fn interval(lower: f64, upper: f64, periodic: bool) -> Self {
        Self {
            lower: vec![lower],
            upper: vec![upper],
            periodic: vec![periodic],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn join(&self, other: &Domain) -> Domain {
        let cat = |a: &[f64], b: &[f64]| a.iter().chain(b).copied().collect::<Vec<_>>();
        Domain {
            lower: cat(&self.lower, &other.lower),
            upper: cat(&self.upper, &other.upper),
            periodic: self.periodic.iter().chain(&other.periodic).copied().collect(),
        }
    }

    /// Periodic coordinates always count as inside.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(a, &v)| {
            self.periodic[a] || (v >= self.lower[a] && v <= self.upper[a])
        })
    }

    /// Maps periodic coordinates back into their fundamental interval.
    pub fn wrap(&self, x: &mut [f64]) {
        for (a, v) in x.iter_mut().enumerate() {
            if self.periodic[a] {
                let len = self.upper[a] - self.lower[a];
                *v = self.lower[a] + (*v - self.lower[a]).rem_euclid(len);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalyticState {
    label: String,
    form: Arc<Form>,
    n_bodies: usize,
    dim_per_body: usize,
    potential: Potential,
    domain: Domain,
    energy: Option<f64>,
    exact_solution: bool,
    density_scale: f64,
}

impl AnalyticState {
    /// Builds a state from a catalog label such as `hydrogen_1s`,
    /// `box:k=2,L=pi` or `superpose:[1/sqrt(2)*box:k=1,L=pi; 1/sqrt(2)*box:k=2,L=pi]`.
    pub fn from_label(label: &str) -> Result<Self> {
        label::parse_state(label)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_bodies(&self) -> usize {
        self.n_bodies
    }

    pub fn dim_per_body(&self) -> usize {
        self.dim_per_body
    }

    pub fn config_dim(&self) -> usize {
        self.n_bodies * self.dim_per_body
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Ē for eigenstates.
    pub fn energy_if_eigen(&self) -> Option<f64> {
        self.energy
    }

    /// True when Ψ solves the time-dependent Schrödinger equation with
    /// [`Self::potential`].
    pub fn is_exact_solution(&self) -> bool {
        self.exact_solution
    }

    /// Upper estimate of max ρ, used to scale nodal thresholds.
    pub fn density_scale(&self) -> f64 {
        self.density_scale
    }

    /// Real (up to a global phase) at every time: stationary with real φ.
    pub fn is_real_eigenstate(&self) -> bool {
        self.energy.is_some() && self.form.is_real()
    }

    /// `(coefficient, component)` pairs when this state is a superposition.
    pub fn components(&self) -> Option<&[(Complex64, AnalyticState)]> {
        match self.form.as_ref() {
            Form::Superpose(terms) => Some(terms),
            _ => None,
        }
    }

    /// The two factors when this state is a product of independent bodies.
    pub fn factors(&self) -> Option<(&AnalyticState, &AnalyticState)> {
        match self.form.as_ref() {
            Form::Product(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub(crate) fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Ψ as a jet in `(x, t)`. `space` must have `config_dim + 1` variables.
    pub fn jet<'s>(&self, space: &'s JetSpace, x: &[f64], t: f64) -> Jet<'s> {
        let d = self.config_dim();
        assert_eq!(space.nvars(), d + 1, "jet space must cover configuration and time");
        assert_eq!(x.len(), d, "point dimension differs from configuration dimension");
        let xs: Vec<Jet<'s>> = x.iter().enumerate().map(|(a, &v)| space.variable(a, v)).collect();
        let tj = space.variable(d, t);
        self.form.psi(&xs, &tj)
    }

    /// `U` as a jet in `(x, t)` (constant in t).
    pub fn potential_jet<'s>(&self, space: &'s JetSpace, x: &[f64]) -> Jet<'s> {
        let xs: Vec<Jet<'s>> = x.iter().enumerate().map(|(a, &v)| space.variable(a, v)).collect();
        self.potential.jet(space, &xs, self.dim_per_body)
    }

    /// Jet space of the given order matching this state's variables.
    pub fn jet_space(&self, order: usize) -> &'static JetSpace {
        jet::space(self.config_dim() + 1, order)
    }

    pub fn eval_psi(&self, x: &[f64], t: f64) -> Complex64 {
        self.jet(self.jet_space(0), x, t).value()
    }

    /// ∇Ψ over all configuration coordinates, body-major.
    pub fn eval_grad_psi(&self, x: &[f64], t: f64) -> Vec<Complex64> {
        let j = self.jet(self.jet_space(1), x, t);
        (0..self.config_dim()).map(|a| j.d_value(a)).collect()
    }

    /// ∇²_iΨ for each body i.
    pub fn eval_lap_psi(&self, x: &[f64], t: f64) -> Vec<Complex64> {
        let j = self.jet(self.jet_space(2), x, t);
        let d = self.dim_per_body;
        let mut alpha = vec![0u8; self.config_dim() + 1];
        (0..self.n_bodies)
            .map(|b| {
                (b * d..(b + 1) * d)
                    .map(|a| {
                        alpha[a] = 2;
                        let v = j.partial(&alpha);
                        alpha[a] = 0;
                        v
                    })
                    .sum()
            })
            .collect()
    }

    pub fn eval_dpsi_dt(&self, x: &[f64], t: f64) -> Complex64 {
        let j = self.jet(self.jet_space(1), x, t);
        j.d_value(self.config_dim())
    }

    /// Ψ and ∂Ψ/∂t together, cheaper than two separate calls.
    pub fn eval_psi_dt(&self, x: &[f64], t: f64) -> (Complex64, Complex64) {
        let space = jet::space(self.config_dim() + 1, 1);
        let j = self.jet(space, x, t);
        (j.value(), j.d_value(self.config_dim()))
    }

    pub fn potential_u(&self, x: &[f64]) -> f64 {
        self.potential_jet(self.jet_space(0), x).re_value()
    }

    /// Rejects points outside the configuration space of this state.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config_dim() {
            return Err(Error::GridMismatch(format!(
                "point has {} coordinates, state `{}` needs {}",
                x.len(),
                self.label,
                self.config_dim()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
