//! Relative and global extremal functions as discrete obstacle problems.
//!
//! Both envelopes are the largest subharmonic lifted `ψ` below an obstacle:
//!
//! * relative, `h*_E`: `ψ ≤ H` everywhere and `ψ ≤ H − 1` on `E`;
//! * global, `V*_K`: `ψ ≤ H` on `K`, free elsewhere;
//!
//! with `H = ½log(1 + |z|²)`. Solves run coarse to fine, each level starting
//! from the prolonged solution of the one below.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::field::QpshField;
use crate::geometry::{fs_potential, swap_chart, NodeSet, ProjectiveGrid, SetSpec};
use crate::monge_ampere::raw_measure;
use crate::solver::{prolong, solve_obstacle, Cuts, Options};
use crate::tol::{ENV_MAX_SWEEPS, ENV_TOL, MASS_TOL, POLAR_THRESHOLD, SUPPORT_TOL};
use crate::{Error, Result};

pub use crate::toric::{toric_envelope, EnvelopeKind, ToricEnvelope};

/// Levels coarser than this are not used by the cascade.
const COARSEST: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeOptions {
    /// Residual target on the lifted potential.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            tol: ENV_TOL,
            max_sweeps: ENV_MAX_SWEEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub field: QpshField,
    pub kind: EnvelopeKind,
    pub set: SetSpec,
    /// Sweeps on the finest level.
    pub iterations: usize,
    pub residual: f64,
    pub polar_flag: bool,
    pub sup_value: f64,
    /// Largest gap between a chart's overlap nodes and the other chart's
    /// interpolated values; a discretization diagnostic.
    pub chart_disagreement: f64,
}

impl EnvelopeResult {
    /// `exp(−sup V)`, or 0 for a polar set.
    pub fn alexander(&self) -> f64 {
        if self.polar_flag {
            0.0
        } else {
            (-self.sup_value).exp()
        }
    }
}

fn obstacle(grid: &ProjectiveGrid, set: &NodeSet, kind: EnvelopeKind) -> [Vec<f64>; 2] {
    [0, 1].map(|c| -> Vec<f64> {
        let g = grid.chart(c);
        (0..g.node_count())
            .map(|k| {
                let h = fs_potential(g.point(k));
                match (kind, set.bits[c][k]) {
                    (EnvelopeKind::Relative, true) => h - 1.0,
                    (EnvelopeKind::Relative, false) => h,
                    (EnvelopeKind::Global, true) => h,
                    (EnvelopeKind::Global, false) => f64::INFINITY,
                }
            })
            .collect()
    })
}

/// Lifted starting guess: `φ ≡ −1` (relative) or `φ ≡ 0` (global).
fn start(grid: &ProjectiveGrid, kind: EnvelopeKind) -> [Vec<f64>; 2] {
    let shift = if kind == EnvelopeKind::Relative { -1.0 } else { 0.0 };
    [0, 1].map(|c| -> Vec<f64> {
        let g = grid.chart(c);
        (0..g.node_count()).map(|k| fs_potential(g.point(k)) + shift).collect()
    })
}

/// False when membership between nodes is not geometric (masks).
fn has_geometric_boundary(set: &SetSpec) -> bool {
    match set {
        SetSpec::Mask(_) => false,
        SetSpec::Complement(s) => has_geometric_boundary(s),
        SetSpec::Union(v) | SetSpec::Intersection(v) => v.iter().all(has_geometric_boundary),
        _ => true,
    }
}

/// Shortley–Weller stencils for free nodes with a neighbour in the set.
///
/// Along each grid line into the set the boundary is located by bisection
/// and the obstacle value there replaces the neighbour, so the discrete
/// set acts with its true extent rather than its node extent.
fn boundary_cuts(grid: &ProjectiveGrid, chart: usize, set: &SetSpec, nodes: &NodeSet, kind: EnvelopeKind) -> Cuts {
    let g = grid.chart(chart);
    let m = g.resolution;
    let bits = &nodes.bits[chart];
    let mut cuts = Cuts::none(g.node_count());
    let geometric = has_geometric_boundary(set);
    let shift = if kind == EnvelopeKind::Relative { 1.0 } else { 0.0 };
    for k in 0..g.node_count() {
        if bits[k] || g.is_edge(k) {
            continue;
        }
        let nb = [k - 1, k + 1, k - m, k + m];
        if !nb.iter().any(|&j| bits[j]) {
            continue;
        }
        let z = g.point(k);
        // Fractions θ_d of a cell to the neighbour or the boundary.
        let mut theta = [1.0f64; 4];
        let mut value = [0.0f64; 4];
        for d in 0..4 {
            let j = nb[d];
            if !bits[j] {
                continue;
            }
            let zj = g.point(j);
            let t = if geometric && set.contains(chart, zj) {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if set.contains(chart, z + (zj - z) * mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi.max(1e-6)
            } else {
                1.0
            };
            theta[d] = t;
            value[d] = fs_potential(z + (zj - z) * t) - shift;
        }
        // Pairs (W, E) and (S, N).
        let mut a = [0.0f64; 4];
        for (p, q) in [(0, 1), (2, 3)] {
            let s = theta[p] + theta[q];
            a[p] = 2.0 / (theta[p] * s);
            a[q] = 2.0 / (theta[q] * s);
        }
        let total: f64 = a.iter().sum();
        let mut w = [0.0f64; 4];
        let mut c = 0.0;
        for d in 0..4 {
            if bits[nb[d]] {
                c += a[d] / total * value[d];
            } else {
                w[d] = a[d] / total;
            }
        }
        cuts.push(k, w, c);
    }
    cuts
}

fn solve_level(
    grid: &ProjectiveGrid,
    set: &SetSpec,
    kind: EnvelopeKind,
    guess: Option<(&ProjectiveGrid, &[Vec<f64>; 2])>,
    opts: &Options,
) -> Result<([Vec<f64>; 2], crate::solver::SolveStats)> {
    let nodes = set.rasterize_projective(grid);
    if nodes.is_empty() {
        return Err(Error::EmptySet);
    }
    let upper = obstacle(grid, &nodes, kind);
    let mut psi = match guess {
        None => start(grid, kind),
        Some((coarse, phi)) => {
            let mut p = prolong(coarse, phi, grid);
            for c in 0..2 {
                let g = grid.chart(c);
                for k in 0..g.node_count() {
                    p[c][k] = (p[c][k] + fs_potential(g.point(k))).min(upper[c][k]);
                }
            }
            p
        }
    };
    let cuts = [0, 1].map(|c| boundary_cuts(grid, c, set, &nodes, kind));
    let stats = solve_obstacle(grid, &upper, &cuts, &mut psi, opts)?;
    // Back to φ.
    for c in 0..2 {
        let g = grid.chart(c);
        for k in 0..g.node_count() {
            psi[c][k] -= fs_potential(g.point(k));
        }
    }
    Ok((psi, stats))
}

fn cascade(set: &SetSpec, grid: &ProjectiveGrid, kind: EnvelopeKind, opts: &EnvelopeOptions) -> Result<EnvelopeResult> {
    let mut levels = alloc::vec![*grid];
    while let Some(c) = levels.last().and_then(|g| if g.resolution > COARSEST { g.coarsen() } else { None }) {
        levels.push(c);
    }
    levels.reverse();
    let polar_threshold = (kind == EnvelopeKind::Global).then_some(POLAR_THRESHOLD);
    let mut prev: Option<(ProjectiveGrid, [Vec<f64>; 2])> = None;
    let last = levels.len() - 1;
    for (i, g) in levels.iter().enumerate() {
        let level_opts = Options {
            // Coarse levels only supply a starting guess.
            tol: if i == last { opts.tol } else { opts.tol.max(1e-7) },
            max_sweeps: opts.max_sweeps,
            polar_threshold,
        };
        let guess = prev.as_ref().map(|(pg, phi)| (pg, phi));
        let (phi, stats) = solve_level(g, set, kind, guess, &level_opts)?;
        if stats.polar || i == last {
            return finish(set, g, kind, phi, stats, i == last);
        }
        prev = Some((*g, phi));
    }
    unreachable!("the finest level returns")
}

fn finish(
    set: &SetSpec,
    grid: &ProjectiveGrid,
    kind: EnvelopeKind,
    phi: [Vec<f64>; 2],
    stats: crate::solver::SolveStats,
    finest: bool,
) -> Result<EnvelopeResult> {
    let chart_disagreement = disagreement(grid, &phi);
    let field = QpshField::from_charts(*grid, phi, true)?;
    let sup_value = field.sup();
    // A set of grid size is polar when V climbs to the scale of a single
    // node's Green function, about log(1/h).
    let polar_flag = stats.polar
        || !finest
        || (kind == EnvelopeKind::Global && sup_value >= (1.0 / grid.spacing()).ln());
    Ok(EnvelopeResult {
        field,
        kind,
        set: set.clone(),
        iterations: stats.sweeps,
        residual: stats.residual,
        polar_flag,
        sup_value,
        chart_disagreement,
    })
}

fn disagreement(grid: &ProjectiveGrid, phi: &[Vec<f64>; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for c in 0..2 {
        let g = grid.chart(c);
        let other = grid.chart(1 - c);
        for k in 0..g.node_count() {
            let z = g.point(k);
            if ProjectiveGrid::owns(c, z) || g.is_edge(k) {
                continue;
            }
            if let Some(st) = other.bilinear(swap_chart(z)) {
                let v: f64 = st.iter().map(|&(j, w)| w * phi[1 - c][j]).sum();
                worst = worst.max((v - phi[c][k]).abs());
            }
        }
    }
    worst
}

/// `h*_{E,ω}` on the grid.
pub fn relative_extremal(set: &SetSpec, grid: &ProjectiveGrid) -> Result<EnvelopeResult> {
    relative_extremal_with(set, grid, &EnvelopeOptions::default())
}

pub fn relative_extremal_with(set: &SetSpec, grid: &ProjectiveGrid, opts: &EnvelopeOptions) -> Result<EnvelopeResult> {
    cascade(set, grid, EnvelopeKind::Relative, opts)
}

/// `V*_{K,ω}` on the grid.
pub fn global_extremal(set: &SetSpec, grid: &ProjectiveGrid) -> Result<EnvelopeResult> {
    global_extremal_with(set, grid, &EnvelopeOptions::default())
}

pub fn global_extremal_with(set: &SetSpec, grid: &ProjectiveGrid, opts: &EnvelopeOptions) -> Result<EnvelopeResult> {
    cascade(set, grid, EnvelopeKind::Global, opts)
}

/// Where the Monge–Ampère measure of an envelope sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportReport {
    /// Mass off the closure of the set (global) or in `{h* < 0}` off the
    /// closure of the set (relative).
    pub off_support_mass: f64,
    /// Mass on the closure of the set; only meaningful for global envelopes.
    pub mass_on_set: f64,
    pub total_mass: f64,
    pub clipped_mass: f64,
}

impl SupportReport {
    pub fn passed(&self, kind: EnvelopeKind) -> bool {
        let off = self.off_support_mass <= SUPPORT_TOL;
        match kind {
            EnvelopeKind::Relative => off,
            EnvelopeKind::Global => off && (self.mass_on_set - 1.0).abs() <= 2.0 * MASS_TOL,
        }
    }
}

/// The discrete closure of a set is its rasterization grown by one cell.
pub fn support_and_mass_check(r: &EnvelopeResult) -> SupportReport {
    let grid = *r.field.grid();
    let closure = r.set.rasterize_projective(&grid).dilate();
    let mu = raw_measure(&r.field);
    let on = |c: usize, k: usize| closure.bits[c][k];
    let off_support_mass = match r.kind {
        EnvelopeKind::Global => mu.measure.mass_where(|c, k| !on(c, k)),
        EnvelopeKind::Relative => mu
            .measure
            .mass_where(|c, k| !on(c, k) && r.field.values(c)[k] < -ENV_TOL.sqrt()),
    };
    SupportReport {
        off_support_mass,
        mass_on_set: mu.measure.mass_where(on),
        total_mass: mu.total(),
        clipped_mass: mu.clipped_mass,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    /// Largest nodewise amount by which a larger set's envelope exceeds a
    /// smaller set's.
    pub max_violation: f64,
    /// Capacity along the family: `Cap_ω` for relative, `T_ω` for global.
    pub capacities: Vec<f64>,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.max_violation <= 1e-6
    }
}

/// Envelopes along a family monotone under inclusion, in either direction.
pub fn monotone_limit_check(family: &[SetSpec], kind: EnvelopeKind, grid: &ProjectiveGrid) -> Result<MonotoneReport> {
    let rasters: Vec<NodeSet> = family.iter().map(|s| s.rasterize_projective(grid)).collect();
    let increasing = rasters.windows(2).all(|w| w[0].is_subset(&w[1]));
    let decreasing = rasters.windows(2).all(|w| w[1].is_subset(&w[0]));
    if !(increasing || decreasing) {
        return Err(Error::NotMonotoneFamily);
    }
    let mut fields = Vec::with_capacity(family.len());
    let mut capacities = Vec::with_capacity(family.len());
    for s in family {
        let r = cascade(s, grid, kind, &EnvelopeOptions::default())?;
        capacities.push(match kind {
            EnvelopeKind::Relative => crate::capacities::capacity_of_envelope(&r),
            EnvelopeKind::Global => r.alexander(),
        });
        fields.push(r.field);
    }
    let mut max_violation: f64 = 0.0;
    for w in fields.windows(2) {
        let (small, large) = if increasing { (&w[0], &w[1]) } else { (&w[1], &w[0]) };
        for c in 0..2 {
            for (a, b) in large.values(c).iter().zip(small.values(c)) {
                max_violation = max_violation.max(a - b);
            }
        }
    }
    Ok(MonotoneReport {
        max_violation,
        capacities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::ball_extremal;
    use crate::C64;

    fn grid(b: f64, m: usize) -> ProjectiveGrid {
        ProjectiveGrid::new(b, m).unwrap()
    }

    /// Sup-norm distance over owned nodes to a radial function of `r = |z|`.
    fn radial_error(f: &QpshField, exact: impl Fn(f64) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        f.for_each_owned(|c, _, z, v| {
            let r = if c == 0 { z.norm() } else { 1.0 / z.norm() };
            worst = worst.max((v - exact(r)).abs());
        });
        worst
    }

    #[test]
    fn whole_space() {
        let g = grid(2.0, 65);
        let r = relative_extremal(&SetSpec::All, &g).unwrap();
        assert!(r.field.max_abs_diff(&QpshField::constant(g, -1.0)).unwrap() < 1e-12);
        let v = global_extremal(&SetSpec::All, &g).unwrap();
        assert!(v.field.max_abs_diff(&QpshField::zero(g)).unwrap() < 1e-12);
        assert!(!v.polar_flag);
        assert_eq!(relative_extremal(&SetSpec::Empty, &g), Err(Error::EmptySet));
    }

    #[test]
    fn global_ball_matches_closed_form() {
        let g = grid(4.0, 257);
        for radius in [0.5, 1.0, 2.0] {
            let r = global_extremal(&SetSpec::ball(radius), &g).unwrap();
            let err = radial_error(&r.field, |x| ball_extremal(x, radius));
            assert!(err < 2e-2, "R={radius}: {err}");
            assert!(!r.polar_flag);
            assert!(r.field.defect().certified());
            let target = radius / (1.0 + radius * radius).sqrt();
            assert!((r.alexander() / target - 1.0).abs() < 2e-2);
        }
    }

    #[test]
    fn relative_ball_matches_toric_profile() {
        let g = grid(4.0, 257);
        let set = SetSpec::ball(1.0);
        let r = relative_extremal(&set, &g).unwrap();
        let prof = toric_envelope(&set, EnvelopeKind::Relative).unwrap();
        let err = radial_error(&r.field, |x| prof.phi_at_radius(x));
        assert!(err < 2e-2, "{err}");
        // −1 on E, within [−1, 0] everywhere.
        let e = set.rasterize_projective(&g);
        for c in 0..2 {
            for (k, v) in r.field.values(c).iter().enumerate() {
                assert!((-1.0 - 1e-12..=1e-12).contains(v));
                if e.bits[c][k] {
                    assert!((v + 1.0).abs() < 1e-9);
                }
            }
        }
        assert!(r.field.defect().certified());
    }

    #[test]
    fn single_node_is_polar() {
        let g = grid(4.0, 257);
        let p = SetSpec::Point {
            chart: 0,
            at: C64::new(0.3, -0.2),
        };
        let r = global_extremal(&p, &g).unwrap();
        assert!(r.polar_flag, "sup {}", r.sup_value);
        assert_eq!(r.alexander(), 0.0);
    }

    #[test]
    fn single_node_relative_envelope_vanishes() {
        let p = SetSpec::Point {
            chart: 0,
            at: C64::new(0.0, 0.0),
        };
        let mut last = f64::INFINITY;
        for m in [65, 129, 257] {
            let r = relative_extremal(&p, &grid(2.0, m)).unwrap();
            let l1 = crate::field::l1_fs_distance(&r.field, &QpshField::zero(*r.field.grid())).unwrap();
            assert!(l1 < last);
            last = l1;
        }
        assert!(last < 0.05, "{last}");
    }

    #[test]
    fn support_checks() {
        let g = grid(4.0, 257);
        let set = SetSpec::ball(1.0);
        let v = global_extremal(&set, &g).unwrap();
        let rep = support_and_mass_check(&v);
        assert!(rep.passed(EnvelopeKind::Global), "{rep:?}");
        let h = relative_extremal(&set, &g).unwrap();
        let rep = support_and_mass_check(&h);
        assert!(rep.passed(EnvelopeKind::Relative), "{rep:?}");
        let all = relative_extremal(&SetSpec::All, &grid(2.0, 65)).unwrap();
        let rep = support_and_mass_check(&all);
        assert_eq!(rep.off_support_mass, 0.0);
        assert!((rep.total_mass - 1.0).abs() < 2.0 * MASS_TOL);
    }

    #[test]
    fn monotone_families() {
        let g = grid(4.0, 129);
        let balls = [SetSpec::ball(0.5), SetSpec::ball(1.0), SetSpec::ball(2.0)];
        let rep = monotone_limit_check(&balls, EnvelopeKind::Global, &g).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.capacities.windows(2).all(|w| w[0] <= w[1]));
        // Balls with T < 1/e, where Cap < 1 and the capacities separate.
        let shrinking = [SetSpec::ball(0.35), SetSpec::ball(0.25), SetSpec::ball(0.15)];
        let rep = monotone_limit_check(&shrinking, EnvelopeKind::Relative, &grid(2.0, 129)).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.capacities.windows(2).all(|w| w[0] > w[1]), "{rep:?}");
        let mixed = [SetSpec::ball(0.5), SetSpec::annulus(1.0, 2.0)];
        assert_eq!(
            monotone_limit_check(&mixed, EnvelopeKind::Global, &g),
            Err(Error::NotMonotoneFamily)
        );
    }

    #[test]
    fn shrinking_annuli_capacities_settle() {
        let g = grid(4.0, 129);
        let family: Vec<SetSpec> = [0.5, 0.25, 0.125, 0.0625]
            .iter()
            .map(|w| SetSpec::annulus(1.0 - w, 1.0 + w))
            .collect();
        let rep = monotone_limit_check(&family, EnvelopeKind::Relative, &g).unwrap();
        assert!(rep.passed());
        let d: Vec<f64> = rep.capacities.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
        assert!(d.windows(2).all(|x| x[1] < x[0]), "{:?}", rep.capacities);
    }

    #[test]
    fn extremality_of_the_discrete_envelope() {
        // Raising a free node breaks discrete subharmonicity; raising a
        // contact node breaks the obstacle.
        let g = grid(4.0, 129);
        let set = SetSpec::ball(1.0);
        let r = global_extremal(&set, &g).unwrap();
        let e = set.rasterize_projective(&g);
        let g0 = g.chart(0);
        let m = g.resolution;
        let mut psi = r.field.lifted(0);
        let bump = ENV_TOL * 10.0;
        for k in (3 * m..g0.node_count() - 3 * m).step_by(197) {
            let (i, _) = g0.ij(k);
            if i < 3 || i > m - 4 {
                continue;
            }
            let old = psi[k];
            psi[k] += bump;
            let avg = 0.25 * (psi[k - 1] + psi[k + 1] + psi[k - m] + psi[k + m]);
            let z = g0.point(k);
            let breaks_obstacle = e.bits[0][k] && psi[k] > fs_potential(z);
            assert!(breaks_obstacle || psi[k] > avg, "node {k}");
            psi[k] = old;
        }
    }

    #[test]
    fn rotation_leaves_sup_unchanged() {
        let g = grid(4.0, 129);
        let set = SetSpec::Ball {
            chart: 0,
            center: C64::new(0.4, 0.1),
            radius: 0.6,
        };
        let a = global_extremal(&set, &g).unwrap().sup_value;
        let b = global_extremal(&set.rotated(core::f64::consts::FRAC_PI_2).unwrap(), &g)
            .unwrap()
            .sup_value;
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }
}
