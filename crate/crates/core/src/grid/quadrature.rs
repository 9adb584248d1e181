use super::{Sample, ScalarField, Topology};
use serde::Serialize;

/// Relative edge magnitude above which a bounded-domain integral is flagged.
pub const TRUNCATION_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct Integral<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

/// Product trapezoid / midpoint rule on cartesian grids, weighted sum on
/// radial grids. The sum runs in node order so results are reproducible.
/// Non-finite (masked) samples are skipped and reported.
pub fn integrate<T: Sample>(f: &ScalarField<T>) -> Integral<T> {
    let grid = f.grid();
    let mut value = T::default();
    let mut skipped = 0usize;
    let mut max_all = 0.0f64;
    let mut max_edge = 0.0f64;
    for (idx, &v) in f.values().iter().enumerate() {
        if !v.is_finite_sample() {
            skipped += 1;
            continue;
        }
        value = value + v * grid.weight(idx);
        let m = v.magnitude();
        max_all = max_all.max(m);
        if grid.on_bounded_face(idx) {
            max_edge = max_edge.max(m);
        }
    }
    let mut warnings = Vec::new();
    if max_all > 0.0 && max_edge > TRUNCATION_THRESHOLD * max_all {
        let what = match grid.topology() {
            Topology::Cartesian { .. } => "bounded faces",
            Topology::RadialLog { .. } => "outer radius",
        };
        warnings.push(format!(
            "integrand at {what} is {:.3e} of its maximum; domain may be truncated",
            max_edge / max_all
        ));
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} non-finite samples excluded"));
    }
    Integral { value, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Centering, Grid};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn hydrogen_1s_density_normalizes_on_radial_grid() {
        let g = Arc::new(Grid::radial_log(200, 1e-4, 30.0).unwrap());
        let rho = ScalarField::from_fn(g, "1/a0^3", |p| {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            (-2.0 * r).exp() / PI
        });
        let i = integrate(&rho);
        assert!((i.value - 1.0).abs() < 1e-8, "{}", i.value);
    }

    #[test]
    fn unit_cube_volume() {
        let g = Arc::new(Grid::cartesian_box(&[0.0; 3], &[1.0; 3], &[7; 3], Centering::Vertex).unwrap());
        let one = ScalarField::constant(g.clone(), 1.0, "1");
        assert!((integrate(&one).value - 1.0).abs() < 1e-14);
        let gc = Arc::new(Grid::cartesian_box(&[0.0; 3], &[1.0; 3], &[6; 3], Centering::Cell).unwrap());
        let one = ScalarField::constant(gc, 1.0, "1");
        assert!((integrate(&one).value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn odd_integrand_vanishes_on_symmetric_grid() {
        let g = Arc::new(Grid::cartesian(vec![Axis::vertex(-6.0, 6.0, 241)], 1).unwrap());
        let f = ScalarField::from_fn(g, "1", |p| p[0] * (-p[0] * p[0]).exp());
        let i = integrate(&f);
        assert!(i.value.abs() < 1e-12);
        assert!(i.warnings.is_empty());
    }

    #[test]
    fn multilinear_integrand_is_exact() {
        let g = Arc::new(Grid::cartesian_box(&[0.0, -1.0], &[2.0, 3.0], &[5, 9], Centering::Vertex).unwrap());
        let f = ScalarField::from_fn(g, "1", |p| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1]);
        // ∫0^2∫-1^3 (1 + 2x - y + xy/2) dy dx = 8 + 16 - 8 + 4
        assert!((integrate(&f).value - 20.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_and_masked_samples_are_reported() {
        let g = Arc::new(Grid::cartesian(vec![Axis::vertex(0.0, 1.0, 11)], 1).unwrap());
        let mut vals = vec![1.0; 11];
        vals[4] = f64::NAN;
        let f = ScalarField::new(g, vals, "1").unwrap();
        let i = integrate(&f);
        assert_eq!(i.warnings.len(), 2);
    }
}
