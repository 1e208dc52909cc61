//! Projective points, affine charts and the Fubini–Study potential.
//!
//! Chart conventions: homogeneous coordinates are `(x_0, …, x_n)`. Chart 0 is
//! the finite part `ℂⁿ = {x_n ≠ 0}` whose hyperplane at infinity is
//! `{x_n = 0}`; chart `k ≥ 1` is `{x_{k-1} ≠ 0}`. A chart point lists the
//! remaining coordinates, in order, divided by the chart's denominator. On
//! ℂℙ¹ this gives `z = x_0 / x_1` in chart 0 and `w = x_1 / x_0 = 1/z` in
//! chart 1.

mod grid;
mod set;

pub use grid::{build_grid, ChartGrid, NodeSet, ProjectiveGrid};
pub use set::{NodeMask, RadialSet, SetSpec};

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::{Error, Result, C64};

/// A point of ℂℙⁿ stored through its canonical representative: the
/// coordinate of largest modulus has modulus exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    coords: Vec<C64>,
}

impl ProjectivePoint {
    pub fn new(coords: &[C64]) -> Result<Self> {
        normalize_point(coords)
    }

    /// Point `[x0 : x1]` of ℂℙ¹.
    pub fn pair(x0: C64, x1: C64) -> Result<Self> {
        normalize_point(&[x0, x1])
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Homogeneous representative on the unit sphere of ℂⁿ⁺¹.
    pub fn unit_representative(&self) -> Vec<C64> {
        let norm = norm(&self.coords);
        self.coords.iter().map(|c| c / norm).collect()
    }

    /// Coordinates of this point in the given chart.
    pub fn chart_coords(&self, chart: usize) -> Result<Vec<C64>> {
        let n = self.dim();
        let den = denominator(chart, n)?;
        let d = self.coords[den];
        if d.norm_sqr() == 0.0 {
            return Err(Error::AtInfinity { chart });
        }
        Ok(self
            .coords
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != den)
            .map(|(_, c)| c / d)
            .collect())
    }

    /// Rebuilds a point from chart coordinates.
    pub fn from_chart(chart: usize, z: &[C64]) -> Result<Self> {
        let n = z.len();
        let den = denominator(chart, n)?;
        let mut coords = Vec::with_capacity(n + 1);
        let mut it = z.iter();
        for k in 0..=n {
            if k == den {
                coords.push(C64::new(1.0, 0.0));
            } else {
                coords.push(*it.next().expect("length checked"));
            }
        }
        normalize_point(&coords)
    }

    /// True when both points are the same line of ℂⁿ⁺¹, up to `tol` in the
    /// canonical representative.
    pub fn projectively_eq(&self, other: &Self, tol: f64) -> bool {
        if self.coords.len() != other.coords.len() {
            return false;
        }
        // ‖x ∧ y‖ / (‖x‖‖y‖) vanishes exactly for equal lines.
        wedge_ratio(&self.coords, &other.coords) <= tol
    }
}

/// Index of the homogeneous coordinate used as denominator by `chart`.
pub fn denominator(chart: usize, n: usize) -> Result<usize> {
    if chart > n {
        return Err(Error::BadChart { chart, dim: n });
    }
    Ok(if chart == 0 { n } else { chart - 1 })
}

/// Rescales `coords` so that the largest modulus equals 1.
pub fn normalize_point(coords: &[C64]) -> Result<ProjectivePoint> {
    if coords.len() < 2 {
        return Err(Error::InvalidArgument("need at least two homogeneous coordinates"));
    }
    let m = coords.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return Err(Error::AllZero);
    }
    // Divide by the modulus only, so real inputs stay real.
    Ok(ProjectivePoint {
        coords: coords.iter().map(|c| c / m).collect(),
    })
}

/// Standard affine transition between charts.
pub fn chart_transition(z: &[C64], from: usize, to: usize) -> Result<Vec<C64>> {
    ProjectivePoint::from_chart(from, z)?.chart_coords(to)
}

/// `½ log(1 + |z|²)`, the Fubini–Study potential in any affine chart.
pub fn fs_chart_potential(z: &[C64]) -> f64 {
    0.5 * z.iter().map(|c| c.norm_sqr()).sum::<f64>().ln_1p()
}

/// Fubini–Study potential for a single chart coordinate.
#[inline]
pub fn fs_potential(z: C64) -> f64 {
    0.5 * z.norm_sqr().ln_1p()
}

/// Density of ω_FS on ℂℙ¹ with respect to Lebesgue measure of a chart.
#[inline]
pub fn fs_density(z: C64) -> f64 {
    let q = 1.0 + z.norm_sqr();
    1.0 / (core::f64::consts::PI * q * q)
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖x ∧ y‖ / (‖x‖ ‖y‖)`: the sine of the Fubini–Study angle between lines.
pub fn wedge_ratio(x: &[C64], y: &[C64]) -> f64 {
    let nx = x.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let ny = y.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let mut w = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            w += (x[i] * y[j] - x[j] * y[i]).norm_sqr();
        }
    }
    (w / (nx * ny)).max(0.0).sqrt()
}

/// Converts the chart coordinate of a ℂℙ¹ point between charts 0 and 1.
#[inline]
pub fn swap_chart(z: C64) -> C64 {
    C64::new(1.0, 0.0) / z
}

/// Homogeneous coordinates of a chart point of ℂℙ¹.
#[inline]
pub fn pair_of(chart: usize, z: C64) -> (C64, C64) {
    let one = C64::new(1.0, 0.0);
    if chart == 0 {
        (z, one)
    } else {
        (one, z)
    }
}

/// Chart coordinate of `[x0 : x1]` in `chart`, or `None` at that chart's infinity.
#[inline]
pub fn chart_of_pair(chart: usize, x0: C64, x1: C64) -> Option<C64> {
    let (num, den) = if chart == 0 { (x0, x1) } else { (x1, x0) };
    if den.norm_sqr() == 0.0 {
        None
    } else {
        Some(num / den)
    }
}

/// The chart where `[x0 : x1]` has coordinate of modulus at most 1, with
/// that coordinate; used for sampling.
#[inline]
pub fn owner_of_pair(x0: C64, x1: C64) -> (usize, C64) {
    if x0.norm_sqr() <= x1.norm_sqr() {
        (0, x0 / x1)
    } else {
        (1, x1 / x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn normalize_examples() {
        let p = normalize_point(&[c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(p.coords(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let p = normalize_point(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(p.coords(), &[c(1.0, 0.0), c(1.0, 0.0)]);
        let p = normalize_point(&[c(3.0, 4.0), c(5.0, 0.0)]).unwrap();
        assert_relative_eq!(p.coords()[0].re, 0.6);
        assert_relative_eq!(p.coords()[0].im, 0.8);
        assert_relative_eq!(p.coords()[1].re, 1.0);
        assert_eq!(
            normalize_point(&[c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::AllZero)
        );
    }

    #[test]
    fn transitions() {
        // [2:1] has chart-0 coordinate 2 and chart-1 coordinate 1/2.
        let p = ProjectivePoint::pair(c(2.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_relative_eq!(p.chart_coords(1).unwrap()[0].re, 0.5);
        assert_relative_eq!(
            chart_transition(&[c(0.5, 0.0)], 1, 0).unwrap()[0].re,
            2.0
        );
        let inf = ProjectivePoint::pair(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(inf.chart_coords(0), Err(Error::AtInfinity { chart: 0 }));
        let one = chart_transition(&[c(1.0, 0.0)], 0, 1).unwrap();
        assert_relative_eq!(one[0].re, 1.0);
    }

    #[test]
    fn transitions_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.gen_range(1..4);
            let z: Vec<C64> = (0..n)
                .map(|_| c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)))
                .collect();
            let to = rng.gen_range(1..=n);
            let w = chart_transition(&z, 0, to).unwrap();
            let back = chart_transition(&w, to, 0).unwrap();
            for (a, b) in z.iter().zip(&back) {
                assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn fs_potential_values() {
        assert_eq!(fs_chart_potential(&[c(0.0, 0.0)]), 0.0);
        assert_relative_eq!(fs_chart_potential(&[c(1.0, 0.0)]), 0.5 * 2f64.ln());
        let r = (1f64.exp().powi(2) - 1.0).sqrt();
        assert_relative_eq!(fs_chart_potential(&[c(0.0, r)]), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn fs_potential_cocycle() {
        // ½log(1+|z|²) − ½log(1+|1/z|²) = log|z|
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let z = c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let lhs = fs_potential(z) - fs_potential(swap_chart(z));
            assert!((lhs - z.norm().ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn wedge_ratio_vanishes_on_equal_lines() {
        let x = [c(1.0, 2.0), c(-0.5, 0.1)];
        let y: Vec<C64> = x.iter().map(|v| v * c(0.3, -1.2)).collect();
        assert!(wedge_ratio(&x, &y) < 1e-15);
        assert_relative_eq!(wedge_ratio(&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(1.0, 0.0)]), 1.0);
    }
}
