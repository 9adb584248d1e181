//! Exact local field expansions at one configuration point.

use crate::jet::{self, Jet, JetSpace};
use crate::states::AnalyticState;
use std::ops::Range;

/// Velocity branch for u± = ±½∇ρ/ρ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Taylor expansions of Ψ, ρ and U about `(x, t)`, from which every derived
/// field and its derivatives follow exactly. Variables are the
/// configuration coordinates followed by time.
pub struct PointJets<'s> {
    pub space: &'s JetSpace,
    pub n_bodies: usize,
    pub dim_per_body: usize,
    pub psi: Jet<'s>,
    /// Re Ψ and Im Ψ.
    pub a: Jet<'s>,
    pub b: Jet<'s>,
    pub rho: Jet<'s>,
    pub potential: Jet<'s>,
}

impl<'s> PointJets<'s> {
    pub fn new(state: &AnalyticState, x: &[f64], t: f64, order: usize) -> PointJets<'static> {
        let space = state.jet_space(order);
        let psi = state.jet(space, x, t);
        let a = psi.re();
        let b = psi.im();
        let rho = &a * &a + &b * &b;
        let potential = state.potential_jet(space, x);
        PointJets {
            space,
            n_bodies: state.n_bodies(),
            dim_per_body: state.dim_per_body(),
            psi,
            a,
            b,
            rho,
            potential,
        }
    }

    pub fn config_dim(&self) -> usize {
        self.n_bodies * self.dim_per_body
    }

    /// Index of the time variable.
    pub fn t(&self) -> usize {
        self.config_dim()
    }

    pub fn axes(&self, body: usize) -> Range<usize> {
        body * self.dim_per_body..(body + 1) * self.dim_per_body
    }

    pub fn zero(&self) -> Jet<'s> {
        self.space.constant(0.0)
    }

    pub fn lap(&self, f: &Jet<'s>, body: usize) -> Jet<'s> {
        jet::sum(self.axes(body).map(|a| f.d(a).d(a))).expect("body has axes")
    }

    /// ∇_body · F for body-local components `f`.
    pub fn div(&self, f: &[Jet<'s>], body: usize) -> Jet<'s> {
        jet::sum(self.axes(body).zip(f).map(|(a, fa)| fa.d(a))).expect("body has axes")
    }

    pub fn rho_value(&self) -> f64 {
        self.rho.re_value()
    }

    /// u± along coordinate `axis`: ±½∂ρ/ρ.
    pub fn u(&self, axis: usize, sign: Sign) -> Jet<'s> {
        self.rho.d(axis).div(&self.rho).scale(0.5 * sign.factor())
    }

    /// Phase gradient v = ∇S along `axis`, via (a∂b − b∂a)/ρ.
    pub fn v(&self, axis: usize) -> Jet<'s> {
        (&self.a * &self.b.d(axis) - &self.b * &self.a.d(axis)).div(&self.rho)
    }

    pub fn u_body(&self, body: usize, sign: Sign) -> Vec<Jet<'s>> {
        self.axes(body).map(|a| self.u(a, sign)).collect()
    }

    pub fn v_body(&self, body: usize) -> Vec<Jet<'s>> {
        self.axes(body).map(|a| self.v(a)).collect()
    }

    pub fn drho_dt(&self) -> Jet<'s> {
        self.rho.d(self.t())
    }

    pub fn ds_dt(&self) -> Jet<'s> {
        let t = self.t();
        (&self.a * &self.b.d(t) - &self.b * &self.a.d(t)).div(&self.rho)
    }

    /// P_u,i = −¼∇²_iρ.
    pub fn p_u(&self, body: usize) -> Jet<'s> {
        self.lap(&self.rho, body).scale(-0.25)
    }

    /// P_v = ½∂ρ/∂t (all bodies).
    pub fn p_v(&self) -> Jet<'s> {
        self.drho_dt().scale(0.5)
    }

    /// P_v,j = −½∇_j·(ρv_j), whose sum over j equals P_v for solutions.
    pub fn p_v_div(&self, body: usize) -> Jet<'s> {
        let flux: Vec<Jet<'s>> = self.v_body(body).iter().map(|v| &self.rho * v).collect();
        self.div(&flux, body).scale(-0.5)
    }

    pub fn k_u(&self, body: usize, sign: Sign) -> Jet<'s> {
        jet::sum(self.u_body(body, sign).iter().map(|u| u * u))
            .expect("body has axes")
            .scale(0.5)
    }

    pub fn k_v(&self, body: usize) -> Jet<'s> {
        jet::sum(self.v_body(body).iter().map(|v| v * v))
            .expect("body has axes")
            .scale(0.5)
    }

    /// Q = −½Σ∇²R/R with R = √ρ.
    pub fn q(&self) -> Jet<'s> {
        let r = self.rho.sqrt();
        let lap = jet::sum((0..self.n_bodies).map(|b| self.lap(&r, b))).expect("bodies");
        lap.div(&r).scale(-0.5)
    }

    /// Ē_S = −∂S/∂t.
    pub fn e_s(&self) -> Jet<'s> {
        -self.ds_dt()
    }

    /// Ē_θ = ½∂(ln ρ)/∂t.
    pub fn e_theta(&self) -> Jet<'s> {
        self.drho_dt().div(&self.rho).scale(0.5)
    }

    /// θ = −½ ln ρ (so ∇θ = u₋).
    pub fn theta(&self) -> Jet<'s> {
        self.rho.ln().scale(-0.5)
    }
}
