//! Discrete Monge–Ampère measures on ℂℙ¹ and the operations built on them.
//!
//! In dimension one `ω_φ = ω + dd^c φ` and with `d^c = (i/2π)(∂̄ − ∂)` its
//! density against Lebesgue measure of a chart is `Δψ / 2π` for the lifted
//! `ψ = φ + ½log(1 + |z|²)`. The node weight is the five-point Laplacian of
//! `ψ` times the cell area over `2π`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::field::{fs_volume, DiscreteMeasure, QpshField};
use crate::geometry::{swap_chart, ProjectiveGrid, SetSpec};
use crate::solver::solve_dirichlet;
use crate::tol::{CLN_SLACK, DIRICHLET_MAX_SWEEPS, DIRICHLET_REL_TOL, MASS_TOL};
use crate::{Error, Result};

/// `ω_φ` as node weights, with what clipping removed.
#[derive(Debug, Clone, PartialEq)]
pub struct MAMeasure {
    pub measure: DiscreteMeasure,
    /// Operator order `n`; always 1 on grids.
    pub order: u32,
    /// Total negative weight set to zero.
    pub clipped_mass: f64,
    /// Most negative raw node weight.
    pub min_raw_weight: f64,
}

impl MAMeasure {
    pub fn total(&self) -> f64 {
        self.measure.total()
    }

    pub fn weights(&self, chart: usize) -> &[f64] {
        &self.measure.weights[chart]
    }
}

/// Five-point weight `(Σ neighbours − 4ψ) / 2π` of an owned node.
#[inline]
fn node_weight(psi: &[f64], k: usize, m: usize) -> f64 {
    (psi[k - 1] + psi[k + 1] + psi[k - m] + psi[k + m] - 4.0 * psi[k]) / (2.0 * PI)
}

/// Monge–Ampère measure of a certified bounded field.
pub fn ma_measure(f: &QpshField) -> Result<MAMeasure> {
    if f.has_sentinel() {
        return Err(Error::SentinelPresent);
    }
    if !f.claimed() {
        return Err(Error::NotCertified(f.defect().worst_margin));
    }
    Ok(raw_measure(f))
}

/// Same as [`ma_measure`] without the certification gate.
pub(crate) fn raw_measure(f: &QpshField) -> MAMeasure {
    let grid = *f.grid();
    let mut out = DiscreteMeasure::zero(grid);
    let mut clipped = 0.0;
    let mut min_raw = f64::INFINITY;
    for c in 0..2 {
        let g = grid.chart(c);
        let psi = f.lifted(c);
        for k in 0..g.node_count() {
            if !ProjectiveGrid::owns(c, g.point(k)) {
                continue;
            }
            let w = node_weight(&psi, k, g.resolution);
            min_raw = min_raw.min(w);
            if w < 0.0 {
                clipped -= w;
            } else {
                out.weights[c][k] = w;
            }
        }
    }
    MAMeasure {
        measure: out,
        order: 1,
        clipped_mass: clipped,
        min_raw_weight: min_raw,
    }
}

/// `∫|ψ| ω_φ` together with the Chern–Levine–Nirenberg bound
/// `∫|ψ| ω + n(1 + 2|sup ψ|) + slack` for `0 ≤ φ ≤ 1`.
///
/// `-∞` nodes of `ψ` are left out of both integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClnReport {
    pub value: f64,
    pub bound: f64,
}

impl ClnReport {
    pub fn holds(&self) -> bool {
        self.value <= self.bound
    }
}

pub fn cln_pairing(psi: &QpshField, phi: &QpshField) -> Result<ClnReport> {
    if psi.grid() != phi.grid() {
        return Err(Error::GridMismatch);
    }
    let out = (phi.inf().min(0.0) * -1.0).max(phi.sup() - 1.0);
    if out > 1e-9 {
        return Err(Error::RangeViolation(out));
    }
    let mu = ma_measure(phi)?;
    let abs = |c: usize, k: usize| {
        let v = psi.values(c)[k];
        if v.is_finite() {
            v.abs()
        } else {
            0.0
        }
    };
    let value = mu.measure.integrate_fn(abs);
    let vol = fs_volume(psi.grid()).integrate_fn(abs);
    Ok(ClnReport {
        value,
        bound: vol + (1.0 + 2.0 * psi.sup().abs()) + CLN_SLACK,
    })
}

/// Masses of `{φ < ψ}` under `ω_ψ` and `ω_φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub mass_psi: f64,
    pub mass_phi: f64,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.mass_psi <= self.mass_phi + MASS_TOL
    }
}

pub fn comparison_check(phi: &QpshField, psi: &QpshField) -> Result<ComparisonReport> {
    if phi.grid() != psi.grid() {
        return Err(Error::GridMismatch);
    }
    let mu_phi = ma_measure(phi)?;
    let mu_psi = ma_measure(psi)?;
    let below = |c: usize, k: usize| phi.values(c)[k] < psi.values(c)[k];
    Ok(ComparisonReport {
        mass_psi: mu_psi.measure.mass_where(below),
        mass_phi: mu_phi.measure.mass_where(below),
    })
}

/// Replaces `φ` inside a chart ball by the solution of the discrete
/// Dirichlet problem for `ψ` with the field's own boundary values.
pub fn harmonic_replacement(f: &QpshField, ball: &SetSpec) -> Result<QpshField> {
    let SetSpec::Ball { chart, center, radius } = ball else {
        return Err(Error::InvalidArgument("harmonic replacement needs a ball"));
    };
    let chart = *chart;
    if chart > 1 {
        return Err(Error::BadChart { chart, dim: 1 });
    }
    if f.has_sentinel() {
        return Err(Error::SentinelPresent);
    }
    let grid = *f.grid();
    let g = grid.chart(chart);
    let reach = center.re.abs().max(center.im.abs()) + radius;
    if reach >= grid.box_radius - g.spacing {
        return Err(Error::BallTouchesBoundary);
    }
    let inside = |z: crate::C64| (z - center).norm() < *radius;
    let free: Vec<bool> = (0..g.node_count()).map(|k| inside(g.point(k))).collect();
    let mut psi = f.lifted(chart);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..g.node_count() {
        if free[k] {
            for j in [k - 1, k + 1, k - g.resolution, k + g.resolution] {
                if !free[j] {
                    lo = lo.min(psi[j]);
                    hi = hi.max(psi[j]);
                }
            }
        }
    }
    if free.iter().any(|b| *b) {
        let tol = DIRICHLET_REL_TOL * ((hi - lo) + 1.0);
        solve_dirichlet(&mut psi, &free, g.resolution, tol, DIRICHLET_MAX_SWEEPS)?;
    }
    let mut values = [f.values(0).to_vec(), f.values(1).to_vec()];
    for k in 0..g.node_count() {
        if free[k] {
            values[chart][k] = psi[k] - crate::geometry::fs_potential(g.point(k));
        }
    }
    // Overlap copies in the other chart follow by interpolation.
    let other = grid.chart(1 - chart);
    for k in 0..other.node_count() {
        let w = other.point(k);
        if w.norm_sqr() == 0.0 {
            continue;
        }
        let z = swap_chart(w);
        if !inside(z) {
            continue;
        }
        if let Some(st) = g.bilinear(z) {
            values[1 - chart][k] = st.iter().map(|&(j, wt)| wt * values[chart][j]).sum();
        }
    }
    Ok(QpshField::from_charts(grid, values, false)?.certify())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{kernel_potential, random_certified_field, AtomicMeasure};
    use crate::C64;
    use approx::assert_relative_eq;

    fn grid(m: usize) -> ProjectiveGrid {
        ProjectiveGrid::new(2.0, m).unwrap()
    }

    #[test]
    fn zero_field_gives_fs_volume() {
        let g = grid(129);
        let mu = ma_measure(&QpshField::zero(g).with_claim(true)).unwrap();
        assert_eq!(mu.clipped_mass, 0.0);
        assert!((mu.total() - 1.0).abs() < MASS_TOL);
    }

    #[test]
    fn gates() {
        let g = grid(65);
        let f = QpshField::zero(g).with_claim(false);
        assert!(matches!(ma_measure(&f), Err(Error::NotCertified(_))));
        let k = kernel_potential(&g, &AtomicMeasure::dirac(C64::new(0.0, 0.0), C64::new(1.0, 0.0)).unwrap());
        assert_eq!(ma_measure(&k), Err(Error::SentinelPresent));
    }

    #[test]
    fn truncated_potential_charges_the_sublevel_boundary() {
        // φ = log|z|-type potential with pole at 0, truncated at −1.
        let g = grid(257);
        let f = QpshField::from_fn(g, |x0, x1| {
            let v = x0.norm().ln() - 0.5 * (x0.norm_sqr() + x1.norm_sqr()).ln();
            v.max(-1.0)
        })
        .with_claim(true);
        let mu = ma_measure(&f).unwrap();
        assert!((mu.total() - 1.0).abs() < MASS_TOL);
        // Everything sits in the closure of {φ < −1} = {|z| ≤ 1/√(e²−1)}.
        let r = 1.0 / (1f64.exp().powi(2) - 1.0).sqrt();
        let h = g.spacing();
        let inside = mu.measure.mass_where(|c, k| {
            let z = g.chart(c).point(k);
            c == 0 && z.norm() <= r + 2.0 * h
        });
        assert!((inside - 1.0).abs() < MASS_TOL, "{inside}");
    }

    #[test]
    fn cln_examples() {
        let g = grid(129);
        let zero = QpshField::zero(g).with_claim(true);
        let minus_one = QpshField::constant(g, -1.0).with_claim(true);
        let r = cln_pairing(&minus_one, &zero).unwrap();
        let vol = fs_volume(&g).total();
        assert_relative_eq!(r.value, vol, epsilon = 1e-12);
        assert!(r.holds());
        assert_eq!(cln_pairing(&zero, &zero).unwrap().value, 0.0);
        let over = QpshField::constant(g, 1.5).with_claim(true);
        assert!(matches!(cln_pairing(&zero, &over), Err(Error::RangeViolation(_))));
    }

    #[test]
    fn cln_against_direct_quadrature() {
        // ∫ |log(|z|/√(1+|z|²))| ω_FS = ½ in closed form.
        let g = grid(257);
        let psi = kernel_potential(&g, &AtomicMeasure::dirac(C64::new(0.0, 0.0), C64::new(1.0, 0.0)).unwrap());
        let phi = QpshField::zero(g).with_claim(true);
        let r = cln_pairing(&psi, &phi).unwrap();
        // Radial quadrature: ∫₀^∞ ½log(1+1/r²) · 2r/(1+r²)² dr.
        let n = 200_000;
        let mut q = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            // r = t/(1−t), dr = dt/(1−t)²
            let r = t / (1.0 - t);
            q += 0.5 * (1.0 + 1.0 / (r * r)).ln() * 2.0 * r / (1.0 + r * r).powi(2) / (1.0 - t).powi(2) / n as f64;
        }
        assert_relative_eq!(q, 0.5, epsilon = 1e-4);
        assert!((r.value - q).abs() < 1e-3, "{} vs {q}", r.value);
        assert!(r.holds());
    }

    #[test]
    fn comparison_examples() {
        let g = grid(129);
        let a = random_certified_field(&g, 3);
        let r = comparison_check(&a, &a).unwrap();
        assert_eq!((r.mass_psi, r.mass_phi), (0.0, 0.0));
        let zero = QpshField::zero(g).with_claim(true);
        let bump = QpshField::from_fn(g, |x0, x1| {
            let z2 = x0.norm_sqr() / (x0.norm_sqr() + x1.norm_sqr());
            -0.1 + 0.05 * z2
        })
        .certify();
        assert!(bump.claimed());
        assert!(comparison_check(&zero, &bump).unwrap().passed());
    }

    #[test]
    fn random_pairs_satisfy_comparison() {
        // The chart seam costs O(h) of mass; 257 nodes keep it below tolerance.
        let g = grid(257);
        for s in 0..10 {
            let a = random_certified_field(&g, 2 * s);
            let b = random_certified_field(&g, 2 * s + 1);
            let r = comparison_check(&a, &b).unwrap();
            assert!(r.passed(), "seed {s}: {r:?}");
        }
    }

    fn ball(chart: usize, re: f64, im: f64, r: f64) -> SetSpec {
        SetSpec::Ball {
            chart,
            center: C64::new(re, im),
            radius: r,
        }
    }

    #[test]
    fn replacement_of_zero_is_nonnegative_and_shrinks() {
        let g = grid(129);
        let zero = QpshField::zero(g).with_claim(true);
        // Δψ ≤ 2 for ψ = ½log(1+|z|²), so the harmonic majorant gains at
        // most r²/2 on a disc of radius r; the discrete disc reaches one cell
        // further.
        let mut last = f64::INFINITY;
        for r in [0.8, 0.4, 0.2, 0.1] {
            let out = harmonic_replacement(&zero, &ball(0, 0.1, 0.2, r)).unwrap();
            assert!(out.inf() >= -1e-9);
            assert!(out.claimed());
            assert!(out.sup() < last);
            let reach = r + g.spacing();
            assert!(out.sup() <= 0.5 * reach * reach + 1e-9);
            last = out.sup();
        }
    }

    #[test]
    fn replacement_is_idempotent_monotone_and_harmonic() {
        let g = grid(129);
        let b = ball(0, 0.0, 0.3, 0.5);
        let f1 = random_certified_field(&g, 7);
        let f2 = lattice_max(&f1, &random_certified_field(&g, 8));
        let r1 = harmonic_replacement(&f1, &b).unwrap();
        let r2 = harmonic_replacement(&f2, &b).unwrap();
        let rr = harmonic_replacement(&r1, &b).unwrap();
        assert!(r1.max_abs_diff(&rr).unwrap() < 1e-8);
        for c in 0..2 {
            for (k, (a, x)) in r1.values(c).iter().zip(f1.values(c)).enumerate() {
                assert!(a - x >= -1e-9);
                assert!(a <= &(r2.values(c)[k] + 1e-9));
            }
        }
        let mu = ma_measure(&r1).unwrap();
        let g0 = g.chart(0);
        let interior = mu.measure.mass_where(|c, k| c == 0 && (g0.point(k) - C64::new(0.0, 0.3)).norm() < 0.5 - 2.0 * g.spacing());
        assert!(interior < MASS_TOL);
        assert_eq!(
            harmonic_replacement(&f1, &ball(0, 1.5, 0.0, 0.6)),
            Err(Error::BallTouchesBoundary)
        );
    }

    fn lattice_max(a: &QpshField, b: &QpshField) -> QpshField {
        crate::field::lattice_combine(a, b, crate::field::Combine::Max).unwrap()
    }

    #[test]
    fn replacement_removes_spike_and_keeps_boundary() {
        let g = grid(129);
        let g0 = g.chart(0);
        let center = g0.nearest(C64::new(0.0, 0.0));
        let f = QpshField::zero(g);
        let mut v = [f.values(0).to_vec(), f.values(1).to_vec()];
        v[0][center] = -3.0;
        let spiked = QpshField::from_charts(g, v, true).unwrap();
        let out = harmonic_replacement(&spiked, &ball(0, 0.0, 0.0, 0.3)).unwrap();
        assert!(out.values(0)[center] > -0.1);
        for k in 0..g0.node_count() {
            if g0.point(k).norm() >= 0.3 {
                assert_eq!(out.values(0)[k], spiked.values(0)[k]);
            }
        }
    }
}

