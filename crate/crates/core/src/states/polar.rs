use crate::error::{Error, Result};
use crate::grid::{Grid, Sample, ScalarField, Topology};
use num_complex::Complex64;
use std::collections::VecDeque;
use std::f64::consts::PI;

/// Default nodal threshold relative to max ρ.
pub const DEFAULT_NODE_EPS: f64 = 1e-12;

/// Amplitude–phase form Ψ = R·e^{iS} of a sampled wavefunction.
#[derive(Debug, Clone)]
pub struct PolarPair {
    pub rho: ScalarField<f64>,
    /// Unwrapped phase; NaN on the nodal mask.
    pub s: ScalarField<f64>,
    pub r: ScalarField<f64>,
    /// `true` where ρ < ε_node·max ρ.
    pub mask: Vec<bool>,
    /// Number of connected unmasked regions; each is unwrapped from its own
    /// densest node, so phases of different regions are unrelated.
    pub regions: usize,
    pub warnings: Vec<String>,
}

impl PolarPair {
    pub fn reconstruct(&self) -> ScalarField<Complex64> {
        self.r
            .zip_with(&self.s, "", |r, s| {
                if s.is_nan() {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(r, s)
                }
            })
            .expect("fields share a grid")
    }
}

fn neighbours(grid: &Grid, idx: usize, out: &mut Vec<usize>) {
    out.clear();
    match grid.topology() {
        Topology::RadialLog { radii, .. } => {
            if idx > 0 {
                out.push(idx - 1);
            }
            if idx + 1 < radii.len() {
                out.push(idx + 1);
            }
        }
        Topology::Cartesian { axes } => {
            let strides = grid.strides();
            let mi = grid.multi_index(idx);
            for (a, ax) in axes.iter().enumerate() {
                let i = mi[a];
                let base = idx - i * strides[a];
                if i > 0 {
                    out.push(idx - strides[a]);
                } else if ax.is_periodic() {
                    out.push(base + (ax.n - 1) * strides[a]);
                }
                if i + 1 < ax.n {
                    out.push(idx + strides[a]);
                } else if ax.is_periodic() {
                    out.push(base);
                }
            }
        }
    }
}

/// Splits samples into ρ, R and a flood-fill unwrapped phase S.
pub fn polar_decompose(samples: &ScalarField<Complex64>, eps_node: f64) -> Result<PolarPair> {
    let grid = samples.grid().clone();
    let psi = samples.values();
    let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    let max_rho = rho.iter().cloned().fold(0.0, f64::max);
    if !(max_rho > 0.0) {
        return Err(Error::AllZero);
    }
    let threshold = eps_node * max_rho;
    let mask: Vec<bool> = rho.iter().map(|&r| !(r >= threshold)).collect();

    let mut s = vec![f64::NAN; psi.len()];
    let mut visited = mask.clone();
    let mut order: Vec<usize> = (0..psi.len()).filter(|&i| !mask[i]).collect();
    // densest first; ties broken by index for determinism
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));

    let mut regions = 0;
    let mut queue = VecDeque::new();
    let mut nb = Vec::new();
    for &seed in &order {
        if visited[seed] {
            continue;
        }
        regions += 1;
        visited[seed] = true;
        s[seed] = psi[seed].arg();
        queue.push_back(seed);
        while let Some(cur) = queue.pop_front() {
            neighbours(&grid, cur, &mut nb);
            for &n in &nb {
                if !visited[n] {
                    visited[n] = true;
                    s[n] = psi[n].arg().unwrap_near(s[cur], 2.0 * PI);
                    queue.push_back(n);
                }
            }
        }
    }

    let mut warnings = Vec::new();
    if regions > 1 {
        warnings.push(format!(
            "{regions} disconnected unmasked regions; phase fixed independently in each"
        ));
    }
    let r: Vec<f64> = rho.iter().map(|x| x.sqrt()).collect();
    Ok(PolarPair {
        rho: ScalarField::new(grid.clone(), rho, "1/bohr^d")?,
        s: ScalarField::new(grid.clone(), s, "hbar")?,
        r: ScalarField::new(grid, r, "1/bohr^(d/2)")?,
        mask,
        regions,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Centering};
    use std::sync::Arc;

    fn line(lo: f64, hi: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::cartesian(vec![Axis::vertex(lo, hi, n)], 1).unwrap())
    }

    #[test]
    fn positive_real_samples_have_zero_phase() {
        let g = line(-3.0, 3.0, 61);
        let f = ScalarField::from_fn(g, "", |p| Complex64::new((-p[0] * p[0]).exp(), 0.0));
        let pp = polar_decompose(&f, DEFAULT_NODE_EPS).unwrap();
        assert!(pp.s.values().iter().all(|&s| s == 0.0));
        assert_eq!(pp.regions, 1);
    }

    #[test]
    fn uniform_phase_of_stationary_state() {
        let g = line(-3.0, 3.0, 61);
        let (e, t) = (-0.5, 2.3);
        let f = ScalarField::from_fn(g, "", |p| Complex64::from_polar((-p[0] * p[0]).exp(), -e * t));
        let pp = polar_decompose(&f, DEFAULT_NODE_EPS).unwrap();
        let s0 = pp.s.values()[0];
        assert!(pp.s.values().iter().all(|&s| (s - s0).abs() < 1e-14));
        assert!((s0 - (-e * t)).abs() < 1e-14);
    }

    #[test]
    fn plane_phase_is_unwrapped() {
        let g = line(-4.0, 4.0, 401);
        let k = 7.0;
        let f = ScalarField::from_fn(g.clone(), "", |p| {
            Complex64::from_polar((-p[0] * p[0] / 2.0).exp(), k * p[0])
        });
        let pp = polar_decompose(&f, DEFAULT_NODE_EPS).unwrap();
        // max density at x = 0 anchors S there
        for i in 0..g.len() {
            let x = g.point(i)[0];
            assert!((pp.s.values()[i] - k * x).abs() < 1e-10);
        }
        let back = pp.reconstruct();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn nodes_are_masked_and_split_regions() {
        let g = line(0.0, 2.0 * PI, 201);
        let f = ScalarField::from_fn(g, "", |p| Complex64::new(p[0].sin(), 0.0));
        let pp = polar_decompose(&f, DEFAULT_NODE_EPS).unwrap();
        assert!(pp.mask[0] && pp.mask[100] && pp.mask[200]);
        assert!(pp.s.values()[0].is_nan());
        assert_eq!(pp.regions, 2);
        assert_eq!(pp.warnings.len(), 1);
        // negative lobe keeps its own phase π
        assert!((pp.s.values()[150].abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn all_zero_rejected() {
        let g = Arc::new(Grid::cartesian_box(&[0.0; 2], &[1.0; 2], &[5; 2], Centering::Vertex).unwrap());
        let f = ScalarField::constant(g, Complex64::new(0.0, 0.0), "");
        assert!(matches!(polar_decompose(&f, DEFAULT_NODE_EPS), Err(Error::AllZero)));
    }
}
