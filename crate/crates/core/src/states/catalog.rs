use super::{AnalyticState, Domain, Potential};
use crate::error::{Error, Result};
use crate::jet::{self, Jet};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance on Σ|C_i|² = 1 for superpositions.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug)]
pub(crate) enum Form {
    HydrogenS { n: u32 },
    Hydrogen2p { m: i32 },
    Box { k: u32, length: f64 },
    Harmonic { n: u32, omega: f64 },
    Ring { k: f64, length: f64 },
    PlaneGaussian { k: f64, sigma: f64, x0: f64 },
    Packet { k: f64, sigma: f64, x0: f64 },
    Smooth(SmoothParams),
    Product(AnalyticState, AnalyticState),
    Superpose(Vec<(Complex64, AnalyticState)>),
    Corrupt {
        delta: f64,
        sigma: f64,
        center: Vec<f64>,
        inner: AnalyticState,
    },
}

#[derive(Debug)]
pub(crate) struct SmoothParams {
    center: Vec<f64>,
    width: f64,
    modes: Vec<(f64, Vec<f64>, f64)>,
    wave: Vec<f64>,
    quad: Vec<Vec<f64>>,
    complex: bool,
}

fn stationary<'s>(phi: Jet<'s>, t: &Jet<'s>, energy: f64) -> Jet<'s> {
    phi * t.scale(-I * energy).exp()
}

fn radius<'s>(xs: &[Jet<'s>]) -> Jet<'s> {
    jet::sum(xs.iter().map(|x| x * x)).expect("non-empty").sqrt()
}

impl Form {
    pub(crate) fn is_real(&self) -> bool {
        match self {
            Form::HydrogenS { .. } | Form::Box { .. } | Form::Harmonic { .. } => true,
            Form::Hydrogen2p { m } => *m == 0,
            Form::Product(a, b) => a.form.is_real() && b.form.is_real(),
            Form::Corrupt { inner, .. } => inner.form.is_real(),
            _ => false,
        }
    }

    pub(crate) fn psi<'s>(&self, xs: &[Jet<'s>], t: &Jet<'s>) -> Jet<'s> {
        let space = t.space();
        match self {
            Form::HydrogenS { n } => {
                let r = radius(xs);
                let (poly, norm) = match n {
                    1 => (space.constant(1.0), 1.0 / PI.sqrt()),
                    2 => ((-&r).add_const(2.0), 1.0 / (4.0 * (2.0 * PI).sqrt())),
                    _ => (
                        (&r * &r).scale(2.0) - r.scale(18.0).add_const(-27.0),
                        1.0 / (81.0 * (3.0 * PI).sqrt()),
                    ),
                };
                let nf = *n as f64;
                let phi = poly * r.scale(-1.0 / nf).exp();
                stationary(phi.scale(norm), t, -0.5 / (nf * nf))
            }
            Form::Hydrogen2p { m } => {
                let r = radius(xs);
                let (ang, norm) = match m {
                    0 => (xs[2].clone(), 1.0 / (4.0 * (2.0 * PI).sqrt())),
                    m => (&xs[0] + &xs[1].scale(I * m.signum() as f64), 1.0 / (8.0 * PI.sqrt())),
                };
                let phi = ang * r.scale(-0.5).exp();
                stationary(phi.scale(norm), t, -0.125)
            }
            Form::Box { k, length } => {
                let kk = *k as f64 * PI / length;
                let phi = xs[0].scale(kk).sin().scale((2.0 / length).sqrt());
                stationary(phi, t, 0.5 * kk * kk)
            }
            Form::Harmonic { n, omega } => {
                let xi = xs[0].scale(omega.sqrt());
                let mut h_prev = space.constant(1.0);
                let mut h = xi.scale(2.0);
                if *n == 0 {
                    h = h_prev.clone();
                }
                for m in 1..*n {
                    let next = &(&xi * &h).scale(2.0) - &h_prev.scale(2.0 * m as f64);
                    h_prev = h;
                    h = next;
                }
                let nf = *n as f64;
                let fact: f64 = (1..=*n).map(|k| k as f64).product();
                let norm = (omega / PI).powf(0.25) / (2f64.powf(nf) * fact).sqrt();
                let phi = h * (&xi * &xi).scale(-0.5).exp();
                stationary(phi.scale(norm), t, omega * (nf + 0.5))
            }
            Form::Ring { k, length } => {
                let phi = xs[0].scale(I * *k).exp().scale(1.0 / length.sqrt());
                stationary(phi, t, 0.5 * k * k)
            }
            Form::PlaneGaussian { k, sigma, x0 } => {
                let dx = xs[0].add_const(-x0);
                let arg = (&dx * &dx).scale(-0.5 / (sigma * sigma)) + xs[0].scale(I * *k);
                arg.exp().scale((PI * sigma * sigma).powf(-0.25))
            }
            Form::Packet { k, sigma, x0 } => {
                let s2 = sigma * sigma;
                let a = t.scale(I / s2).add_const(1.0);
                let dx = xs[0].add_const(-x0);
                let num = (&dx * &dx).scale(-0.5 / s2) + dx.scale(I * *k) - t.scale(0.5 * I * k * k);
                let env = (num * a.recip()).exp() * a.powf(-0.5);
                env.scale((PI * s2).powf(-0.25) * (I * k * x0).exp())
            }
            Form::Smooth(p) => p.psi(xs),
            Form::Product(a, b) => {
                let da = a.config_dim();
                a.form.psi(&xs[..da], t) * b.form.psi(&xs[da..], t)
            }
            Form::Superpose(terms) => jet::sum(
                terms
                    .iter()
                    .map(|(c, s)| s.form.psi(xs, t).scale(*c)),
            )
            .expect("superposition has terms"),
            Form::Corrupt {
                delta,
                sigma,
                center,
                inner,
            } => {
                let r2 = jet::sum(xs.iter().zip(center).map(|(x, c)| {
                    let d = x.add_const(-c);
                    &d * &d
                }))
                .expect("non-empty");
                let bump = r2.scale(-0.5 / (sigma * sigma)).exp().scale(*delta).add_const(1.0);
                inner.form.psi(xs, t) * bump.sqrt()
            }
        }
    }
}

impl SmoothParams {
    fn psi<'s>(&self, xs: &[Jet<'s>]) -> Jet<'s> {
        let space = xs[0].space();
        let mut amp = space.constant(1.2);
        for (a, b, c) in &self.modes {
            let arg = jet::sum(xs.iter().zip(b).map(|(x, bi)| x.scale(*bi)))
                .expect("non-empty")
                .add_const(*c);
            amp = amp + arg.sin().scale(*a);
        }
        let r2 = jet::sum(xs.iter().zip(&self.center).map(|(x, c)| {
            let d = x.add_const(-c);
            &d * &d
        }))
        .expect("non-empty");
        let mut psi = amp * r2.scale(-0.5 / (self.width * self.width)).exp();
        if self.complex {
            let mut phase = jet::sum(xs.iter().zip(&self.wave).map(|(x, k)| x.scale(*k))).expect("non-empty");
            for (i, row) in self.quad.iter().enumerate() {
                for (j, q) in row.iter().enumerate() {
                    phase = phase + (&xs[i] * &xs[j]).scale(0.5 * q);
                }
            }
            psi = psi * phase.scale(I).exp();
        }
        psi
    }
}

#[allow(clippy::too_many_arguments)]
fn make(
    label: String,
    form: Form,
    n_bodies: usize,
    dim_per_body: usize,
    potential: Potential,
    domain: Domain,
    energy: Option<f64>,
    exact_solution: bool,
    density_scale: f64,
) -> AnalyticState {
    AnalyticState {
        label,
        form: Arc::new(form),
        n_bodies,
        dim_per_body,
        potential,
        domain,
        energy,
        exact_solution,
        density_scale,
    }
}

fn bad(label: &str, reason: impl Into<String>) -> Error {
    Error::UnsupportedState(format!("{label}: {}", reason.into()))
}

/// Hydrogen ns eigenstate, n ∈ {1, 2, 3}.
pub fn catalog_hydrogen_ns(n: u32) -> Result<AnalyticState> {
    if !(1..=3).contains(&n) {
        return Err(bad("hydrogen_ns", format!("n = {n} not in {{1, 2, 3}}")));
    }
    let nf = n as f64;
    Ok(make(
        format!("hydrogen_{n}s"),
        Form::HydrogenS { n },
        1,
        3,
        Potential::Coulomb { charge: 1.0 },
        Domain::unbounded(3),
        Some(-0.5 / (nf * nf)),
        true,
        1.0 / (PI * nf * nf * nf),
    ))
}

/// Hydrogen 2p eigenstate with magnetic quantum number `m` (complex for m = ±1).
pub fn hydrogen_2p(m: i32) -> Result<AnalyticState> {
    if !(-1..=1).contains(&m) {
        return Err(bad("hydrogen_2p", format!("m = {m} not in {{-1, 0, 1}}")));
    }
    let peak = 4.0 * (-2.0f64).exp();
    let scale = if m == 0 { peak / (32.0 * PI) } else { peak / (64.0 * PI) };
    Ok(make(
        format!("hydrogen_2p:m={m}"),
        Form::Hydrogen2p { m },
        1,
        3,
        Potential::Coulomb { charge: 1.0 },
        Domain::unbounded(3),
        Some(-0.125),
        true,
        scale,
    ))
}

/// Particle in a box `[0, L]`: √(2/L)·sin(kπx/L), ε_k = k²π²/(2L²).
pub fn catalog_box_1d(k: u32, length: f64) -> Result<AnalyticState> {
    if k == 0 {
        return Err(bad("box", "mode index k must be at least 1"));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(bad("box", format!("length L = {length} must be positive")));
    }
    let kk = k as f64 * PI / length;
    Ok(make(
        format!("box:k={k},L={length}"),
        Form::Box { k, length },
        1,
        1,
        Potential::Free,
        Domain::interval(0.0, length, false),
        Some(0.5 * kk * kk),
        true,
        2.0 / length,
    ))
}

/// Harmonic oscillator eigenstate n with frequency ω.
pub fn harmonic(n: u32, omega: f64) -> Result<AnalyticState> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(bad("harmonic", format!("omega = {omega} must be positive")));
    }
    if n > 30 {
        return Err(bad("harmonic", format!("n = {n} above the supported maximum of 30")));
    }
    Ok(make(
        format!("harmonic:n={n},omega={omega}"),
        Form::Harmonic { n, omega },
        1,
        1,
        Potential::Harmonic { omega },
        Domain::unbounded(1),
        Some(omega * (n as f64 + 0.5)),
        true,
        (omega / PI).sqrt(),
    ))
}

/// Plane wave e^{ikx}/√L on a ring of circumference L, k = 2πj/L.
pub fn ring(j: i64, length: f64) -> Result<AnalyticState> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(bad("ring", format!("length L = {length} must be positive")));
    }
    let k = 2.0 * PI * j as f64 / length;
    Ok(make(
        format!("ring:j={j},L={length}"),
        Form::Ring { k, length },
        1,
        1,
        Potential::Free,
        Domain::interval(0.0, length, true),
        Some(0.5 * k * k),
        true,
        1.0 / length,
    ))
}

/// Static e^{ikx}·g(x) with g ∝ e^{-(x-x0)²/(2σ²)}. Not a Schrödinger solution.
pub fn plane_gaussian(k: f64, sigma: f64, x0: f64) -> Result<AnalyticState> {
    if !(sigma > 0.0) || !sigma.is_finite() || !k.is_finite() || !x0.is_finite() {
        return Err(bad("plane_gaussian", "need finite k, x0 and sigma > 0"));
    }
    Ok(make(
        format!("plane_gaussian:k={k},sigma={sigma},x0={x0}"),
        Form::PlaneGaussian { k, sigma, x0 },
        1,
        1,
        Potential::Free,
        Domain::unbounded(1),
        None,
        false,
        1.0 / (sigma * PI.sqrt()),
    ))
}

/// Freely spreading gaussian packet; equals `plane_gaussian` at t = 0.
pub fn gaussian_packet(k: f64, sigma: f64, x0: f64) -> Result<AnalyticState> {
    if !(sigma > 0.0) || !sigma.is_finite() || !k.is_finite() || !x0.is_finite() {
        return Err(bad("packet", "need finite k, x0 and sigma > 0"));
    }
    Ok(make(
        format!("packet:k={k},sigma={sigma},x0={x0}"),
        Form::Packet { k, sigma, x0 },
        1,
        1,
        Potential::Free,
        Domain::unbounded(1),
        None,
        true,
        1.0 / (sigma * PI.sqrt()),
    ))
}

/// Seeded smooth, nowhere-vanishing test function (amplitude times optional
/// phase). Unnormalized and not a Schrödinger solution.
pub fn smooth_random(seed: u64, dim: usize, complex: bool) -> Result<AnalyticState> {
    if !(1..=3).contains(&dim) {
        return Err(bad("smooth", format!("dim = {dim} not in 1..=3")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vec = |lo: f64, hi: f64| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(lo..hi)).collect() };
    let center = vec(-0.3, 0.3);
    let wave = vec(-1.0, 1.0);
    let mut quad = vec![vec![0.0; dim]; dim];
    let mut modes = Vec::new();
    let width = rng.gen_range(0.8..1.2);
    for _ in 0..3 {
        let a = rng.gen_range(-0.3..0.3);
        let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = rng.gen_range(0.0..2.0 * PI);
        modes.push((a, b, c));
    }
    #[allow(clippy::needless_range_loop)]
    for i in 0..dim {
        for j in i..dim {
            let q = rng.gen_range(-0.3..0.3);
            quad[i][j] = q;
            quad[j][i] = q;
        }
    }
    Ok(make(
        format!("smooth:seed={seed},dim={dim},complex={complex}"),
        Form::Smooth(SmoothParams {
            center,
            width,
            modes,
            wave,
            quad,
            complex,
        }),
        1,
        dim,
        Potential::Free,
        Domain::unbounded(dim),
        None,
        false,
        2.1 * 2.1,
    ))
}

/// Two-body product Ψ_a(x₁)Ψ_b(x₂) with separable potential.
pub fn product(a: AnalyticState, b: AnalyticState) -> Result<AnalyticState> {
    if a.dim_per_body != b.dim_per_body {
        return Err(bad(
            "product",
            format!("bodies of dimension {} and {}", a.dim_per_body, b.dim_per_body),
        ));
    }
    if a.n_bodies + b.n_bodies > 2 {
        return Err(bad("product", "at most two bodies are supported"));
    }
    let potential = Potential::Separable(vec![a.potential.clone(), b.potential.clone()]);
    let energy = a.energy.zip(b.energy).map(|(x, y)| x + y);
    Ok(make(
        format!("product:[{}; {}]", a.label, b.label),
        Form::Product(a.clone(), b.clone()),
        2,
        a.dim_per_body,
        potential,
        a.domain.join(&b.domain),
        energy,
        a.exact_solution && b.exact_solution,
        a.density_scale * b.density_scale,
    ))
}

/// Ψ = Σ C_i φ_i e^{-iε_i t} over eigen-components sharing one Hamiltonian.
pub fn superpose(states: Vec<AnalyticState>, coeffs: Vec<Complex64>) -> Result<AnalyticState> {
    if states.is_empty() || states.len() != coeffs.len() {
        return Err(Error::Superposition(format!(
            "{} states with {} coefficients",
            states.len(),
            coeffs.len()
        )));
    }
    let first = &states[0];
    for s in &states {
        if s.energy.is_none() {
            return Err(Error::Superposition(format!("component `{}` is not an eigenstate", s.label)));
        }
        if s.n_bodies != first.n_bodies
            || s.dim_per_body != first.dim_per_body
            || s.domain != first.domain
            || s.potential != first.potential
        {
            return Err(Error::Superposition(format!(
                "components `{}` and `{}` do not share domain, body count and potential",
                first.label, s.label
            )));
        }
    }
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Superposition(format!("Σ|C_i|² = {norm}, expected 1")));
    }
    let e0 = first.energy.unwrap();
    let energy = states
        .iter()
        .all(|s| (s.energy.unwrap() - e0).abs() <= 1e-14 * e0.abs().max(1.0))
        .then_some(e0);
    let scale: f64 = coeffs
        .iter()
        .zip(&states)
        .map(|(c, s)| c.norm() * s.density_scale.sqrt())
        .sum();
    let label = format!(
        "superpose:[{}]",
        coeffs
            .iter()
            .zip(&states)
            .map(|(c, s)| format!("({},{})*{}", c.re, c.im, s.label))
            .collect::<Vec<_>>()
            .join("; ")
    );
    Ok(make(
        label,
        Form::Superpose(coeffs.into_iter().zip(states.iter().cloned()).collect()),
        first.n_bodies,
        first.dim_per_body,
        first.potential.clone(),
        first.domain.clone(),
        energy,
        states.iter().all(|s| s.exact_solution),
        scale * scale,
    ))
}

/// Ψ·√(1 + δ·e^{-|x-c|²/(2σ²)}): multiplies ρ by a gaussian bump of relative
/// height δ. Keeps the catalog Ē of the inner state so eigen-based checks
/// can be run against it.
pub fn corrupt(inner: AnalyticState, delta: f64, sigma: f64, center: Vec<f64>) -> Result<AnalyticState> {
    if !(delta > -1.0) || !delta.is_finite() || !(sigma > 0.0) {
        return Err(bad("corrupt", "need delta > -1 and sigma > 0"));
    }
    if center.len() != inner.config_dim() {
        return Err(bad(
            "corrupt",
            format!("centre has {} coordinates, state has {}", center.len(), inner.config_dim()),
        ));
    }
    let label = format!(
        "corrupt:[delta={delta},sigma={sigma},at=({}); {}]",
        center.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
        inner.label
    );
    Ok(make(
        label,
        Form::Corrupt {
            delta,
            sigma,
            center,
            inner: inner.clone(),
        },
        inner.n_bodies,
        inner.dim_per_body,
        inner.potential.clone(),
        inner.domain.clone(),
        inner.energy,
        false,
        inner.density_scale * (1.0 + delta.max(0.0)),
    ))
}
