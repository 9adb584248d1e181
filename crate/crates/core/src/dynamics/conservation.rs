use crate::error::{Error, Result};
use crate::fields::sample_psi;
use crate::grid::{integrate, Grid, ScalarField};
use crate::states::{superpose, AnalyticState};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

/// Largest allowed |G − I| entry of the component Gram matrix.
pub const GRAM_TOL: f64 = 1e-8;

/// Space-integrated energies of a superposition over time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationSeries {
    pub times: Vec<f64>,
    #[serde(rename = "E_S_avg")]
    pub e_s_avg: Vec<f64>,
    #[serde(rename = "E_theta_avg")]
    pub e_theta_avg: Vec<f64>,
    pub norm: Vec<f64>,
    /// Σ|C_k|²ε_k.
    pub expected_e_s: f64,
    pub gram_deviation: f64,
    pub warnings: Vec<String>,
}

impl ConservationSeries {
    /// Population standard deviation of Ē_S(avg) over the samples.
    pub fn e_s_std(&self) -> f64 {
        std_dev(&self.e_s_avg)
    }

    pub fn e_theta_std(&self) -> f64 {
        std_dev(&self.e_theta_avg)
    }

    pub fn max_abs_e_theta(&self) -> f64 {
        self.e_theta_avg.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_norm_error(&self) -> f64 {
        self.norm.iter().fold(0.0, |m, v| m.max((v - 1.0).abs()))
    }

    /// Columns `t`, `E_S_avg`, `E_theta_avg`, `norm`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t [time]", "E_S_avg [hartree]", "E_theta_avg [hartree]", "norm"])?;
        for k in 0..self.times.len() {
            w.write_record([self.times[k], self.e_s_avg[k], self.e_theta_avg[k], self.norm[k]].map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn std_dev(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// G_ij = ∫φ_i*φ_j at t = 0 by quadrature on `grid`.
pub fn gram_matrix(components: &[AnalyticState], grid: &Arc<Grid>) -> Result<Vec<Vec<Complex64>>> {
    let samples: Vec<ScalarField<Complex64>> = components
        .iter()
        .map(|s| sample_psi(s, grid, 0.0).map(|(psi, _)| psi))
        .collect::<Result<_>>()?;
    let n = samples.len();
    let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in i..n {
            let prod = samples[i].zip_with(&samples[j], "", |a, b| a.conj() * b)?;
            let v = integrate(&prod).value;
            g[i][j] = v;
            g[j][i] = v.conj();
        }
    }
    Ok(g)
}

/// Ψ*ĤΨ = ρĒ_S + iρĒ_θ from the eigen-expansion Ψ = Σ C_kφ_k.
pub fn closed_form_energy_density(components: &[AnalyticState], coeffs: &[Complex64], x: &[f64], t: f64) -> Result<Complex64> {
    let mut psi = Complex64::new(0.0, 0.0);
    let mut h_psi = Complex64::new(0.0, 0.0);
    for (c, s) in coeffs.iter().zip(components) {
        let e = s
            .energy_if_eigen()
            .ok_or_else(|| Error::Superposition(format!("component `{}` is not an eigenstate", s.label())))?;
        s.check_point(x)?;
        let phi = c * s.eval_psi(x, t);
        psi += phi;
        h_psi += phi * e;
    }
    Ok(psi.conj() * h_psi)
}

/// Builds Ψ = Σ C_kφ_k and, for every time, integrates ρĒ_S, ρĒ_θ and ρ over
/// `grid`. The energy densities come from iΨ*∂Ψ/∂t, so no division by ρ is
/// needed at nodes.
pub fn conservation_experiment(
    components: &[AnalyticState],
    coeffs: &[Complex64],
    grid: &Arc<Grid>,
    times: &[f64],
) -> Result<ConservationSeries> {
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::Precondition(format!("non-finite time {t}")));
    }
    let state = superpose(components.to_vec(), coeffs.to_vec())?;
    let gram = gram_matrix(components, grid)?;
    let mut dev = 0.0f64;
    for (i, row) in gram.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g - want).norm());
        }
    }
    if dev > GRAM_TOL {
        return Err(Error::Superposition(format!(
            "components are not orthonormal on this grid (max |G − I| = {dev:e})"
        )));
    }
    let expected_e_s = coeffs
        .iter()
        .zip(components)
        .map(|(c, s)| c.norm_sqr() * s.energy_if_eigen().unwrap_or(f64::NAN))
        .sum();

    let rows: Vec<(f64, f64, f64, Vec<String>)> = times
        .par_iter()
        .map(|&t| {
            let (psi, dpsi) = sample_psi(&state, grid, t)?;
            let z = psi.zip_with(&dpsi, "hartree/bohr^d", |p, d| Complex64::i() * p.conj() * d)?;
            let rho = psi.map("1/bohr^d", |p| p.norm_sqr());
            let e = integrate(&z);
            let n = integrate(&rho);
            let mut warnings = e.warnings;
            warnings.extend(n.warnings);
            Ok((e.value.re, e.value.im, n.value, warnings))
        })
        .collect::<Result<_>>()?;

    let mut warnings: Vec<String> = Vec::new();
    for (_, _, _, w) in &rows {
        for msg in w {
            if !warnings.contains(msg) {
                warnings.push(msg.clone());
            }
        }
    }
    Ok(ConservationSeries {
        times: times.to_vec(),
        e_s_avg: rows.iter().map(|r| r.0).collect(),
        e_theta_avg: rows.iter().map(|r| r.1).collect(),
        norm: rows.iter().map(|r| r.2).collect(),
        expected_e_s,
        gram_deviation: dev,
        warnings,
    })
}
