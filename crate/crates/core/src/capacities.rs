//! Monge–Ampère capacity `Cap_ω`, Alexander capacity `T_ω` and the
//! inequalities between them.
//!
//! `Cap_ω(E) = ∫ (−h*_E) ω_{h*_E}` is read off the relative envelope;
//! `T_ω(K) = exp(−sup V*_K)` off the global one. The supremum that defines
//! `Cap_ω` directly is only sampled, as a lower bound.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::envelopes::{global_extremal_with, relative_extremal_with, EnvelopeKind, EnvelopeOptions, EnvelopeResult};
use crate::field::{fs_volume, kernel_potential, lattice_combine, AtomicMeasure, Combine, QpshField};
use crate::geometry::{pair_of, wedge_ratio, ProjectiveGrid, SetSpec};
use crate::monge_ampere::raw_measure;
use crate::toric::{ball_extremal, toric_envelope};
use crate::{Error, Result, C64};

/// `∫ (−h*) ω_{h*}` for a relative envelope.
///
/// `h* = −1` on the closure of `E`, so mass on the discrete closure (the set
/// grown by one cell) counts fully; elsewhere the nodal value is used.
pub fn capacity_of_envelope(r: &EnvelopeResult) -> f64 {
    let grid = *r.field.grid();
    let closure = r.set.rasterize_projective(&grid).dilate();
    let mu = raw_measure(&r.field);
    mu.measure.integrate_fn(|c, k| {
        if closure.bits[c][k] {
            1.0
        } else {
            -r.field.values(c)[k]
        }
    })
}

/// `1/(1 + log(1/h))`: below this `Cap` forces `T ≤ h` through
/// `T ≤ e·exp(−1/Cap)`, the grid scale at which sets count as polar.
/// Discrete capacities of single nodes sit a little above it, so the global
/// envelope is consulted up to twice this level.
fn polar_capacity_level(grid: &ProjectiveGrid) -> f64 {
    1.0 / (1.0 + (1.0 / grid.spacing()).ln())
}

/// `Cap_ω(E)` on the grid.
pub fn ma_capacity(set: &SetSpec, grid: &ProjectiveGrid) -> Result<f64> {
    ma_capacity_with(set, grid, &EnvelopeOptions::default())
}

pub fn ma_capacity_with(set: &SetSpec, grid: &ProjectiveGrid, opts: &EnvelopeOptions) -> Result<f64> {
    let r = relative_extremal_with(set, grid, opts)?;
    let cap = capacity_of_envelope(&r);
    if cap <= 2.0 * polar_capacity_level(grid) && global_extremal_with(set, grid, opts)?.polar_flag {
        return Err(Error::PolarSet);
    }
    Ok(cap)
}

/// `T_ω(K) = exp(−sup V*_K)`, 0 for a polar set.
pub fn alexander_capacity(set: &SetSpec, grid: &ProjectiveGrid) -> Result<f64> {
    Ok(global_extremal_with(set, grid, &EnvelopeOptions::default())?.alexander())
}

/// `V` of the FS geodesic disc `{x : tan d(x, p) ≤ ρ}` around `p`.
fn geodesic_disc_extremal(grid: &ProjectiveGrid, p: (C64, C64), rho: f64) -> QpshField {
    let norm = (p.0.norm_sqr() + p.1.norm_sqr()).sqrt();
    let (p0, p1) = (p.0 / norm, p.1 / norm);
    QpshField::from_fn(*grid, move |x0, x1| {
        let q = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
        let inner = (x0 * p0.conj() + x1 * p1.conj()).norm() / q;
        let sin = wedge_ratio(&[x0, x1], &[p0, p1]);
        let t = if inner == 0.0 { f64::INFINITY } else { sin / inner };
        ball_extremal(t, rho)
    })
    .with_claim(true)
}

/// Candidate `0 ≤ φ ≤ 1` ω-psh fields built around node `(c, k)`.
fn candidates(grid: &ProjectiveGrid, rng: &mut ChaCha8Rng, c: usize, k: usize) -> QpshField {
    let z = grid.chart(c).point(k);
    let p = pair_of(c, z);
    match rng.gen_range(0..3) {
        // Scaled extremal function of a small disc: `V / max(M, 1)`.
        0 => {
            let rho = rng.gen_range(0.02..0.8);
            let v = geodesic_disc_extremal(grid, p, rho);
            let m = v.sup().max(1.0);
            v.scaled(1.0 / m).with_claim(true)
        }
        // `(max(φ_δ, −s) + s)/s` for the potential of a Dirac mass.
        1 => {
            let s: f64 = rng.gen_range(1.0..4.0);
            let g = kernel_potential(grid, &AtomicMeasure::dirac(p.0, p.1).expect("nonzero point"));
            g.map(|v| (v.max(-s) + s) / s).with_claim(true)
        }
        _ => {
            let s: f64 = rng.gen_range(1.0..3.0);
            let rho = rng.gen_range(0.05..0.6);
            let a = geodesic_disc_extremal(grid, p, rho);
            let a = a.scaled(1.0 / a.sup().max(1.0));
            let g = kernel_potential(grid, &AtomicMeasure::dirac(p.0, p.1).expect("nonzero point"));
            let b = g.map(|v| (v.max(-s) + s) / s);
            lattice_combine(&a.with_claim(true), &b.with_claim(true), Combine::Max)
                .expect("same grid")
                .with_claim(true)
        }
    }
}

/// Sampled lower bound `sup_φ ∫_E ω_φ` over `family_size` test fields with
/// `0 ≤ φ ≤ 1`, centred at random nodes of `E`.
pub fn ma_capacity_bruteforce(set: &SetSpec, grid: &ProjectiveGrid, family_size: usize, seed: u64) -> f64 {
    let nodes = set.rasterize_projective(grid);
    let owned: Vec<(usize, usize)> = (0..2)
        .flat_map(|c| {
            let g = grid.chart(c);
            (0..g.node_count())
                .filter(move |&k| ProjectiveGrid::owns(c, g.point(k)))
                .map(move |k| (c, k))
        })
        .filter(|&(c, k)| nodes.bits[c][k])
        .collect();
    if owned.is_empty() {
        return 0.0;
    }
    let in_set = |c: usize, k: usize| nodes.bits[c][k];
    // φ ≡ 0 gives the volume.
    let vol = fs_volume(grid);
    let mut best = vol.mass_where(in_set) / vol.total();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..family_size {
        let (c, k) = owned[rng.gen_range(0..owned.len())];
        let f = candidates(grid, &mut rng, c, k);
        let mu = raw_measure(&f);
        // The exact total mass is 1; dividing out the discretization error
        // keeps pole-carrying candidates from overshooting.
        let total = mu.measure.total();
        if total > 0.0 {
            best = best.max(mu.measure.mass_where(in_set) / total);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub cap_ma: f64,
    pub cap_bruteforce_lower: f64,
    pub t_alex: f64,
    pub sup_v: f64,
    pub polar: bool,
    pub relative_residual: f64,
    pub global_residual: f64,
    pub relative_iterations: usize,
    pub global_iterations: usize,
    /// Mass of `ω_{V*}` off the closure of the set.
    pub off_support_mass: f64,
}

/// Both capacities of one set, plus the sampled lower bound.
pub fn capacity_report(
    set: &SetSpec,
    grid: &ProjectiveGrid,
    opts: &EnvelopeOptions,
    family_size: usize,
    seed: u64,
) -> Result<CapacityReport> {
    let v = global_extremal_with(set, grid, opts)?;
    let h = relative_extremal_with(set, grid, opts)?;
    let support = crate::envelopes::support_and_mass_check(&v);
    Ok(CapacityReport {
        cap_ma: if v.polar_flag { 0.0 } else { capacity_of_envelope(&h) },
        cap_bruteforce_lower: ma_capacity_bruteforce(set, grid, family_size, seed),
        t_alex: v.alexander(),
        sup_v: v.sup_value,
        polar: v.polar_flag,
        relative_residual: h.residual,
        global_residual: v.residual,
        relative_iterations: h.iterations,
        global_iterations: v.iterations,
        off_support_mass: support.off_support_mass,
    })
}

/// `Cap_ω` and `T_ω` of a circled set on ℂℙⁿ from the radial reduction.
pub fn toric_capacities(set: &SetSpec, n: u32) -> Result<(f64, f64)> {
    let rel = toric_envelope(set, EnvelopeKind::Relative)?;
    let t = match toric_envelope(set, EnvelopeKind::Global) {
        Ok(g) => g.alexander(),
        Err(Error::PolarSet) => 0.0,
        Err(e) => return Err(e),
    };
    Ok((rel.capacity(n), t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub t: f64,
    pub t_alex: f64,
    /// `exp(−sup φ)·exp(−t)`.
    pub t_bound: f64,
    pub cap: f64,
    /// `(∫(−φ) ω + n)/t`.
    pub cap_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub sup_phi: f64,
    pub mean_neg: f64,
}

impl DecayReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.rows
            .iter()
            .all(|r| r.t_alex <= r.t_bound + tol && r.cap <= r.cap_bound + tol)
    }
}

/// Capacities of the sublevel sets `{φ < −t}` against their bounds.
pub fn sublevel_capacity_decay(phi: &QpshField, ts: &[f64]) -> Result<DecayReport> {
    let grid = *phi.grid();
    let sup_phi = phi.sup();
    let mean_neg = fs_volume(&grid).integrate_fn(|c, k| {
        let v = phi.values(c)[k];
        if v.is_finite() {
            -v
        } else {
            0.0
        }
    });
    let field = Arc::new(phi.clone());
    let opts = EnvelopeOptions::default();
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let set = SetSpec::Sublevel {
            field: field.clone(),
            level: -t,
        };
        let (t_alex, cap) = if set.rasterize_projective(&grid).is_empty() {
            (0.0, 0.0)
        } else {
            let v = global_extremal_with(&set, &grid, &opts)?;
            let cap = if v.polar_flag {
                0.0
            } else {
                capacity_of_envelope(&relative_extremal_with(&set, &grid, &opts)?)
            };
            (v.alexander(), cap)
        };
        rows.push(DecayRow {
            t,
            t_alex,
            t_bound: (-sup_phi).exp() * (-t).exp(),
            cap,
            cap_bound: (mean_neg + 1.0) / t,
        });
    }
    Ok(DecayReport {
        rows,
        sup_phi,
        mean_neg,
    })
}

/// One set's contribution to the comparison between `Cap_ω` and `T_ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub cap: f64,
    pub t_alex: f64,
    /// `e·exp(−Cap^{−1/n})`.
    pub upper_bound: f64,
    /// `upper_bound − T`.
    pub slack: f64,
    /// Smallest `A` with `exp(−A/Cap) ≤ T`.
    pub a_needed: f64,
}

pub fn comparison_row(cap: f64, t_alex: f64, n: u32) -> ComparisonRow {
    let upper_bound = E * (-cap.powf(-1.0 / n as f64)).exp();
    ComparisonRow {
        cap,
        t_alex,
        upper_bound,
        slack: upper_bound - t_alex,
        a_needed: (-cap * t_alex.ln()).max(0.0),
    }
}

/// Evaluates both capacities of a non-polar set on ℂℙ¹.
pub fn capacity_comparison(set: &SetSpec, grid: &ProjectiveGrid) -> Result<ComparisonRow> {
    let opts = EnvelopeOptions::default();
    let v = global_extremal_with(set, grid, &opts)?;
    if v.polar_flag {
        return Err(Error::PolarSet);
    }
    let h = relative_extremal_with(set, grid, &opts)?;
    Ok(comparison_row(capacity_of_envelope(&h), v.alexander(), 1))
}

/// Smallest constant making the lower bound hold over a family.
pub fn fit_lower_constant(rows: &[ComparisonRow]) -> f64 {
    rows.iter().map(|r| r.a_needed).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JosefsonResult {
    pub field: QpshField,
    /// Levels `t_k` whose sublevel sets were used.
    pub levels: Vec<f64>,
    /// Quadrature weight of `t ≥ t_max`, left out of the sum.
    pub tail_weight: f64,
}

/// Deepest level tried; `2^60` is far below any grid value.
const JOSEFSON_MAX_LEVEL: u32 = 60;

/// `φ_ε = Σ_k w_k (V_{t_k} − sup V_{t_k})` with `V_t` the global extremal
/// function of `{v < −t}`, `t_k = 2^k` and `w_k = ε∫_{t_k}^{t_{k+1}} t^{−1−ε} dt`.
///
/// The weights sum to at most 1, so the result is ω-psh. Nodes where `v` is
/// `-∞` get `-∞`.
pub fn josefson_potential(v: &QpshField, eps: f64) -> Result<JosefsonResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument("eps must lie in (0, 1/n)"));
    }
    let grid = *v.grid();
    let field = Arc::new(v.clone());
    let opts = EnvelopeOptions::default();
    let weight = |k: u32| 2f64.powf(-(k as f64) * eps) - 2f64.powf(-((k + 1) as f64) * eps);
    let mut acc = [alloc::vec![0.0; grid.nodes_per_chart()], alloc::vec![0.0; grid.nodes_per_chart()]];
    let mut levels = Vec::new();
    let mut previous: Option<(crate::geometry::NodeSet, EnvelopeResult)> = None;
    let mut tail_weight = 0.0;
    let mut k = 0;
    loop {
        let t = 2f64.powi(k as i32);
        let set = SetSpec::Sublevel {
            field: field.clone(),
            level: -t,
        };
        let nodes = set.rasterize_projective(&grid);
        if nodes.is_empty() {
            tail_weight = 2f64.powf(-(k as f64) * eps);
            break;
        }
        let only_poles = (0..2).all(|c| {
            nodes.bits[c]
                .iter()
                .zip(v.values(c))
                .all(|(b, x)| !*b || x.is_infinite())
        });
        let reuse = previous.as_ref().is_some_and(|(n, _)| *n == nodes);
        let env = match (&previous, reuse) {
            (Some((_, e)), true) => e.clone(),
            _ => global_extremal_with(&set, &grid, &opts)?,
        };
        levels.push(t);
        // A stagnant set of poles stays the same for every deeper level.
        let w = if only_poles && reuse {
            2f64.powf(-(k as f64) * eps)
        } else {
            weight(k)
        };
        for c in 0..2 {
            for (a, x) in acc[c].iter_mut().zip(env.field.values(c)) {
                *a += w * (x - env.sup_value);
            }
        }
        if only_poles && reuse {
            break;
        }
        previous = Some((nodes, env));
        k += 1;
        if k > JOSEFSON_MAX_LEVEL {
            tail_weight = 2f64.powf(-(k as f64) * eps);
            break;
        }
    }
    let has_poles = v.has_sentinel();
    if levels.len() < 4 && !has_poles {
        return Err(Error::QuadratureUnderresolved(levels.len()));
    }
    for c in 0..2 {
        for (a, x) in acc[c].iter_mut().zip(v.values(c)) {
            if x.is_infinite() {
                *a = f64::NEG_INFINITY;
            }
        }
    }
    Ok(JosefsonResult {
        field: QpshField::from_charts(grid, acc, false)?.certify(),
        levels,
        tail_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_certified_field;

    fn grid(b: f64, m: usize) -> ProjectiveGrid {
        ProjectiveGrid::new(b, m).unwrap()
    }

    #[test]
    fn whole_space_and_empty() {
        let g = grid(2.0, 65);
        let cap = ma_capacity(&SetSpec::All, &g).unwrap();
        assert!((cap - 1.0).abs() < 5e-3, "{cap}");
        assert!((alexander_capacity(&SetSpec::All, &g).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(ma_capacity_bruteforce(&SetSpec::Empty, &g, 8, 1), 0.0);
        let all = ma_capacity_bruteforce(&SetSpec::All, &g, 8, 1);
        assert!((all - 1.0).abs() < 5e-3, "{all}");
    }

    #[test]
    fn exterior_of_threshold_disc() {
        let r = (E * E - 1.0).sqrt();
        let set = SetSpec::ball(r).complement();
        let cap = ma_capacity(&set, &grid(4.0, 257)).unwrap();
        assert!((cap - 1.0).abs() < 1e-2, "{cap}");
    }

    #[test]
    fn ball_against_toric_and_bruteforce() {
        let g = grid(4.0, 129);
        for radius in [0.25, 1.0] {
            let set = SetSpec::ball(radius);
            let cap = ma_capacity(&set, &g).unwrap();
            let (oracle, t) = toric_capacities(&set, 1).unwrap();
            assert!((cap / oracle - 1.0).abs() < 0.05, "R={radius}: {cap} vs {oracle}");
            assert!((t - radius / (1.0 + radius * radius).sqrt()).abs() < 1e-6);
            let lower = ma_capacity_bruteforce(&set, &g, 32, 7);
            assert!(lower <= cap + 5e-3, "{lower} > {cap}");
            assert!(lower >= 0.9 * cap || radius < 0.5, "{lower} vs {cap}");
        }
    }

    #[test]
    fn single_node_is_polar() {
        let g = grid(4.0, 257);
        let p = SetSpec::Point {
            chart: 0,
            at: C64::new(0.0, 0.0),
        };
        assert_eq!(ma_capacity(&p, &g), Err(Error::PolarSet));
        assert_eq!(alexander_capacity(&p, &g).unwrap(), 0.0);
    }

    #[test]
    fn zero_field_decay_is_vacuous() {
        let g = grid(2.0, 65);
        let rep = sublevel_capacity_decay(&QpshField::zero(g), &[1.0, 2.0]).unwrap();
        assert!(rep.rows.iter().all(|r| r.cap == 0.0 && r.t_alex == 0.0));
        assert!(rep.passed(0.0));
    }

    #[test]
    fn dirac_potential_decays_like_exp() {
        let g = grid(2.0, 257);
        let phi = kernel_potential(&g, &AtomicMeasure::dirac(C64::new(0.0, 0.0), C64::new(1.0, 0.0)).unwrap());
        let rep = sublevel_capacity_decay(&phi, &[1.0, 2.0, 3.0]).unwrap();
        assert!(rep.passed(5e-2), "{rep:?}");
        for w in rep.rows.windows(2) {
            let ratio = w[1].t_alex / w[0].t_alex;
            assert!((ratio - (-1f64).exp()).abs() < 0.05, "{ratio}");
        }
    }

    #[test]
    fn comparison_rows() {
        let r = comparison_row(1.0, 1.0, 1);
        assert!((r.upper_bound - 1.0).abs() < 1e-12);
        assert_eq!(r.a_needed, 0.0);
        let g = grid(4.0, 129);
        let row = capacity_comparison(&SetSpec::ball(0.25), &g).unwrap();
        assert!(row.slack >= -5e-2, "{row:?}");
        assert!(row.a_needed > 0.0);
    }

    #[test]
    fn subadditivity_on_random_balls() {
        let g = grid(4.0, 129);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4 {
            let mk = |rng: &mut ChaCha8Rng| SetSpec::Ball {
                chart: 0,
                center: C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                radius: rng.gen_range(0.05..0.3),
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let ca = ma_capacity(&a, &g).unwrap();
            let cb = ma_capacity(&b, &g).unwrap();
            let cu = ma_capacity(&SetSpec::Union(alloc::vec![a.clone(), b.clone()]), &g).unwrap();
            assert!(cu <= ca + cb + 5e-3, "{cu} > {ca} + {cb}");
            assert!(cu >= ca.max(cb) - 5e-3);
        }
    }

    #[test]
    fn josefson_examples() {
        let g = grid(2.0, 65);
        assert_eq!(
            josefson_potential(&QpshField::constant(g, -1.0), 0.25).map(|r| r.levels.len()),
            Err(Error::QuadratureUnderresolved(0))
        );
        // Two logarithmic poles at nodes.
        let poles = [C64::new(0.5, 0.0), C64::new(-0.5, 0.25)];
        let v = QpshField::from_fn(g, |x0, x1| {
            let z = x0 / x1;
            if x1.norm() == 0.0 {
                return 0.0;
            }
            poles.iter().map(|p| (z - p).norm().ln()).sum::<f64>().min(0.0)
        });
        let r = josefson_potential(&v, 0.25).unwrap();
        assert!(r.field.claimed(), "{:?}", r.field.defect());
        let g0 = g.chart(0);
        for p in poles {
            let k = g0.nearest(p);
            assert_eq!(r.field.values(0)[k], f64::NEG_INFINITY);
            let m = g.resolution;
            let nb = [k - 1, k + 1, k - m, k + m];
            let near: f64 = nb.iter().map(|&j| r.field.values(0)[j]).fold(f64::INFINITY, f64::min);
            // The neighbours of a pole sit well below the field's typical values.
            let finite: Vec<f64> = r.field.values(0).iter().copied().filter(|x| x.is_finite()).collect();
            let mean = finite.iter().sum::<f64>() / finite.len() as f64;
            assert!(near < mean - 0.1, "{near} vs {mean}");
        }
        let _ = random_certified_field(&g, 0);
    }
}
