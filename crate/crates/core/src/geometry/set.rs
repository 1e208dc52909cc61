use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::grid::{ChartGrid, NodeSet, ProjectiveGrid};
use super::{chart_of_pair, pair_of};
#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::field::QpshField;
use crate::{Error, Result, C64};

/// Relative slack on closed radius tests so nodes exactly on a circle are kept.
const EDGE_SLACK: f64 = 1e-12;

/// Constructive description of a subset of ℂℙ¹.
///
/// Primitives live in one chart; points at that chart's infinity are outside
/// every bounded primitive.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    All,
    Empty,
    /// Closed disc `|z − center| ≤ radius`.
    Ball { chart: usize, center: C64, radius: f64 },
    /// Closed annulus `inner ≤ |z − center| ≤ outer`.
    Annulus { chart: usize, center: C64, inner: f64, outer: f64 },
    /// Closed half-plane `Re(z · conj(normal)) ≥ offset`.
    HalfPlane { chart: usize, normal: C64, offset: f64 },
    /// The closed real projective line `{Im(x0 · conj(x1)) = 0}`.
    RealLine,
    /// A single point; rasterizes to the nearest node of its chart.
    Point { chart: usize, at: C64 },
    /// Circled set `{|z| ∈ ⋃ intervals}`; an upper end may be `+∞`.
    RadialProfile { chart: usize, intervals: Vec<(f64, f64)> },
    Mask(NodeMask),
    /// Open sublevel set `{φ < level}`; between nodes `φ` is interpolated.
    Sublevel { field: Arc<QpshField>, level: f64 },
    Complement(Box<SetSpec>),
    Union(Vec<SetSpec>),
    Intersection(Vec<SetSpec>),
}

/// Node bitmap on a chart grid; membership is decided by the nearest node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMask {
    pub chart: usize,
    pub box_radius: f64,
    pub resolution: usize,
    pub bits: Vec<bool>,
}

impl NodeMask {
    pub fn new(chart: usize, box_radius: f64, resolution: usize, bits: Vec<bool>) -> Result<Self> {
        let g = ChartGrid::new(chart, box_radius, resolution)?;
        if bits.len() != g.node_count() {
            return Err(Error::InvalidArgument("mask size does not match its grid"));
        }
        Ok(Self {
            chart,
            box_radius,
            resolution,
            bits,
        })
    }

    fn grid(&self) -> ChartGrid {
        ChartGrid::new(self.chart, self.box_radius, self.resolution).expect("validated on construction")
    }

    fn contains(&self, z: C64) -> bool {
        let g = self.grid();
        let half = 0.5 * g.spacing;
        if z.re.abs() > self.box_radius + half || z.im.abs() > self.box_radius + half {
            return false;
        }
        self.bits[g.nearest(z)]
    }
}

impl SetSpec {
    pub fn ball(radius: f64) -> Self {
        SetSpec::Ball {
            chart: 0,
            center: C64::new(0.0, 0.0),
            radius,
        }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        SetSpec::Annulus {
            chart: 0,
            center: C64::new(0.0, 0.0),
            inner,
            outer,
        }
    }

    pub fn complement(self) -> Self {
        SetSpec::Complement(Box::new(self))
    }

    /// Membership of the point `[x0 : x1]`.
    pub fn contains_pair(&self, x0: C64, x1: C64) -> bool {
        match self {
            SetSpec::All => true,
            SetSpec::Empty => false,
            SetSpec::Ball { chart, center, radius } => chart_of_pair(*chart, x0, x1)
                .is_some_and(|z| (z - center).norm_sqr() <= radius * radius * (1.0 + EDGE_SLACK)),
            SetSpec::Annulus {
                chart,
                center,
                inner,
                outer,
            } => chart_of_pair(*chart, x0, x1).is_some_and(|z| {
                let d = (z - center).norm_sqr();
                d >= inner * inner * (1.0 - EDGE_SLACK) && d <= outer * outer * (1.0 + EDGE_SLACK)
            }),
            SetSpec::HalfPlane {
                chart,
                normal,
                offset,
            } => chart_of_pair(*chart, x0, x1)
                .is_some_and(|z| (z * normal.conj()).re >= *offset - EDGE_SLACK * (1.0 + offset.abs())),
            SetSpec::RealLine => {
                let q = x0.norm_sqr() + x1.norm_sqr();
                (x0 * x1.conj()).im.abs() <= EDGE_SLACK * q
            }
            SetSpec::Point { chart, at } => {
                let (a0, a1) = pair_of(*chart, *at);
                super::wedge_ratio(&[x0, x1], &[a0, a1]) <= EDGE_SLACK
            }
            SetSpec::RadialProfile { chart, intervals } => {
                let r = match chart_of_pair(*chart, x0, x1) {
                    Some(z) => z.norm(),
                    None => f64::INFINITY,
                };
                intervals.iter().any(|&(a, b)| in_closed(r, a, b))
            }
            SetSpec::Mask(m) => chart_of_pair(m.chart, x0, x1).is_some_and(|z| m.contains(z)),
            SetSpec::Sublevel { field, level } => field.sample_pair(x0, x1) < *level,
            SetSpec::Complement(s) => !s.contains_pair(x0, x1),
            SetSpec::Union(v) => v.iter().any(|s| s.contains_pair(x0, x1)),
            SetSpec::Intersection(v) => v.iter().all(|s| s.contains_pair(x0, x1)),
        }
    }

    /// Membership of a chart point.
    pub fn contains(&self, chart: usize, z: C64) -> bool {
        let (x0, x1) = pair_of(chart, z);
        self.contains_pair(x0, x1)
    }

    /// Node-center rasterization on a single chart grid.
    pub fn rasterize(&self, g: &ChartGrid) -> Vec<bool> {
        match self {
            SetSpec::Point { chart, at } => {
                let mut bits = vec![false; g.node_count()];
                if *chart == g.chart {
                    let half = 0.5 * g.spacing;
                    if at.re.abs() <= g.box_radius + half && at.im.abs() <= g.box_radius + half {
                        bits[g.nearest(*at)] = true;
                    }
                }
                bits
            }
            SetSpec::Sublevel { field, level } if field.grid().chart(g.chart) == *g => {
                field.values(g.chart).iter().map(|v| v < level).collect()
            }
            SetSpec::Complement(s) => s.rasterize(g).into_iter().map(|b| !b).collect(),
            SetSpec::Union(v) => {
                let mut bits = vec![false; g.node_count()];
                for s in v {
                    for (a, b) in bits.iter_mut().zip(s.rasterize(g)) {
                        *a |= b;
                    }
                }
                bits
            }
            SetSpec::Intersection(v) => {
                let mut bits = vec![true; g.node_count()];
                for s in v {
                    for (a, b) in bits.iter_mut().zip(s.rasterize(g)) {
                        *a &= b;
                    }
                }
                bits
            }
            _ => (0..g.node_count())
                .map(|k| self.contains(g.chart, g.point(k)))
                .collect(),
        }
    }

    /// Rasterization over both charts of the atlas.
    pub fn rasterize_projective(&self, grid: &ProjectiveGrid) -> NodeSet {
        NodeSet {
            grid: *grid,
            bits: [self.rasterize(&grid.chart(0)), self.rasterize(&grid.chart(1))],
        }
    }

    /// True for sets invariant under `[x0 : x1] ↦ [e^{iθ}x0 : x1]`.
    pub fn is_circled(&self) -> bool {
        let origin = |c: &C64| c.norm_sqr() == 0.0;
        match self {
            SetSpec::All | SetSpec::Empty | SetSpec::RadialProfile { .. } => true,
            SetSpec::Ball { center, .. } | SetSpec::Annulus { center, .. } => origin(center),
            SetSpec::Point { at, .. } => origin(at),
            SetSpec::HalfPlane { .. } | SetSpec::RealLine | SetSpec::Mask(_) | SetSpec::Sublevel { .. } => false,
            SetSpec::Complement(s) => s.is_circled(),
            SetSpec::Union(v) | SetSpec::Intersection(v) => v.iter().all(SetSpec::is_circled),
        }
    }

    /// Radius set in chart-0 coordinates `r = |z| ∈ [0, ∞]` of a circled set.
    /// Complements are closed up, so the result describes the closure.
    pub fn radial_set(&self) -> Result<RadialSet> {
        let to_r0 = |chart: usize, a: f64, b: f64| -> RadialSet {
            if chart == 0 {
                RadialSet::interval(a, b)
            } else {
                let inv = |t: f64| if t == 0.0 { f64::INFINITY } else if t.is_infinite() { 0.0 } else { 1.0 / t };
                RadialSet::interval(inv(b), inv(a))
            }
        };
        let origin = |c: &C64| c.norm_sqr() == 0.0;
        match self {
            SetSpec::All => Ok(RadialSet::interval(0.0, f64::INFINITY)),
            SetSpec::Empty => Ok(RadialSet::empty()),
            SetSpec::Ball { chart, center, radius } if origin(center) => Ok(to_r0(*chart, 0.0, *radius)),
            SetSpec::Annulus {
                chart,
                center,
                inner,
                outer,
            } if origin(center) => Ok(to_r0(*chart, *inner, *outer)),
            SetSpec::Point { chart, at } if origin(at) => Ok(to_r0(*chart, 0.0, 0.0)),
            SetSpec::RadialProfile { chart, intervals } => {
                let mut out = RadialSet::empty();
                for &(a, b) in intervals {
                    out = out.union(&to_r0(*chart, a, b));
                }
                Ok(out)
            }
            SetSpec::Complement(s) => Ok(s.radial_set()?.complement_closure()),
            SetSpec::Union(v) => v
                .iter()
                .try_fold(RadialSet::empty(), |acc, s| Ok(acc.union(&s.radial_set()?))),
            SetSpec::Intersection(v) => v.iter().try_fold(
                RadialSet::interval(0.0, f64::INFINITY),
                |acc, s| Ok(acc.intersect(&s.radial_set()?)),
            ),
            _ => Err(Error::NotCircled),
        }
    }

    /// Image under the FS isometry `z ↦ e^{iθ} z` of chart 0 (equivalently
    /// `w ↦ e^{−iθ} w` in chart 1). Masks cannot be rotated exactly.
    pub fn rotated(&self, theta: f64) -> Result<SetSpec> {
        let u = C64::from_polar(1.0, theta);
        let rot = |chart: usize, c: C64| if chart == 0 { c * u } else { c * u.conj() };
        Ok(match self {
            SetSpec::Ball { chart, center, radius } => SetSpec::Ball {
                chart: *chart,
                center: rot(*chart, *center),
                radius: *radius,
            },
            SetSpec::Annulus {
                chart,
                center,
                inner,
                outer,
            } => SetSpec::Annulus {
                chart: *chart,
                center: rot(*chart, *center),
                inner: *inner,
                outer: *outer,
            },
            SetSpec::HalfPlane {
                chart,
                normal,
                offset,
            } => SetSpec::HalfPlane {
                chart: *chart,
                normal: rot(*chart, *normal),
                offset: *offset,
            },
            SetSpec::RealLine => {
                return Err(Error::InvalidArgument("real line rotation is not a primitive"))
            }
            SetSpec::Point { chart, at } => SetSpec::Point {
                chart: *chart,
                at: rot(*chart, *at),
            },
            SetSpec::Mask(_) | SetSpec::Sublevel { .. } => {
                return Err(Error::InvalidArgument("grid-defined sets cannot be rotated"))
            }
            SetSpec::Complement(s) => SetSpec::Complement(Box::new(s.rotated(theta)?)),
            SetSpec::Union(v) => SetSpec::Union(v.iter().map(|s| s.rotated(theta)).collect::<Result<_>>()?),
            SetSpec::Intersection(v) => {
                SetSpec::Intersection(v.iter().map(|s| s.rotated(theta)).collect::<Result<_>>()?)
            }
            other => other.clone(),
        })
    }
}

fn in_closed(r: f64, a: f64, b: f64) -> bool {
    let lo = a * (1.0 - EDGE_SLACK);
    let hi = if b.is_infinite() { f64::INFINITY } else { b * (1.0 + EDGE_SLACK) };
    r >= lo && r <= hi
}

/// Finite union of disjoint closed intervals of `[0, ∞]`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSet {
    intervals: Vec<(f64, f64)>,
}

impl RadialSet {
    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        let a = a.max(0.0);
        if b < a {
            return Self::empty();
        }
        Self {
            intervals: vec![(a, b)],
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, r: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| in_closed(r, a, b))
    }

    pub fn contains_infinity(&self) -> bool {
        self.intervals.last().is_some_and(|&(_, b)| b.is_infinite())
    }

    /// True when the set is a single point of `[0, ∞]` or empty, i.e. polar.
    pub fn is_polar(&self) -> bool {
        self.intervals.iter().all(|&(a, b)| a == b)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all: Vec<(f64, f64)> = self.intervals.iter().chain(&other.intervals).copied().collect();
        all.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("radii are not NaN"));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(all.len());
        for (a, b) in all {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { intervals: out }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a, b) in &self.intervals {
            for &(c, d) in &other.intervals {
                let lo = a.max(c);
                let hi = b.min(d);
                if lo <= hi {
                    out.push((lo, hi));
                }
            }
        }
        Self::empty().union(&Self { intervals: out })
    }

    /// Closure of the complement in `[0, ∞]`.
    pub fn complement_closure(&self) -> Self {
        let mut out = Vec::new();
        let mut start = 0.0;
        for &(a, b) in &self.intervals {
            if a > start {
                out.push((start, a));
            }
            start = b;
        }
        if !start.is_infinite() {
            out.push((start, f64::INFINITY));
        }
        Self { intervals: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn unit_disc_node_count_matches_area() {
        let g = ChartGrid::new(0, 4.0, 257).unwrap();
        let bits = SetSpec::ball(1.0).rasterize(&g);
        let count = bits.iter().filter(|b| **b).count() as f64;
        let exact = core::f64::consts::PI / (g.spacing * g.spacing);
        // Lattice-point error is bounded by the perimeter in cells.
        let perimeter_cells = 2.0 * core::f64::consts::PI / g.spacing;
        assert!((count - exact).abs() <= 2.0 * perimeter_cells, "{count} vs {exact}");
        let frac = count / g.node_count() as f64;
        assert!((frac - core::f64::consts::PI / 64.0).abs() < 2e-3);
    }

    #[test]
    fn empty_and_complement() {
        let g = ChartGrid::new(0, 4.0, 33).unwrap();
        assert!(SetSpec::Empty.rasterize(&g).iter().all(|b| !b));
        let b = SetSpec::ball(1.0).rasterize(&g);
        let cb = SetSpec::ball(1.0).complement().rasterize(&g);
        assert!(b.iter().zip(&cb).all(|(x, y)| x != y));
    }

    #[test]
    fn chart_one_ball_is_exterior_disc() {
        let k = SetSpec::Ball {
            chart: 1,
            center: c(0.0, 0.0),
            radius: 0.5,
        };
        assert!(k.contains(0, c(3.0, 0.0)));
        assert!(!k.contains(0, c(1.0, 0.0)));
        assert!(k.contains_pair(c(1.0, 0.0), c(0.0, 0.0)));
        assert_eq!(
            k.radial_set().unwrap(),
            RadialSet::interval(2.0, f64::INFINITY)
        );
    }

    #[test]
    fn real_line_contains_infinity() {
        assert!(SetSpec::RealLine.contains_pair(c(1.0, 0.0), c(0.0, 0.0)));
        assert!(SetSpec::RealLine.contains(0, c(-3.5, 0.0)));
        assert!(!SetSpec::RealLine.contains(0, c(0.0, 0.1)));
        assert!(SetSpec::RealLine.contains(1, c(0.25, 0.0)));
    }

    #[test]
    fn radial_set_algebra() {
        let ann = SetSpec::annulus(0.5, 1.0).radial_set().unwrap();
        assert_eq!(ann.intervals(), &[(0.5, 1.0)]);
        let comp = ann.complement_closure();
        assert_eq!(comp.intervals(), &[(0.0, 0.5), (1.0, f64::INFINITY)]);
        let ball = RadialSet::interval(0.0, 2.0);
        assert_eq!(ball.complement_closure().intervals(), &[(2.0, f64::INFINITY)]);
        let u = ball.union(&RadialSet::interval(3.0, 4.0));
        assert_eq!(u.intervals().len(), 2);
        assert_eq!(u.intersect(&RadialSet::interval(1.0, 3.5)).intervals(), &[(1.0, 2.0), (3.0, 3.5)]);
        assert!(SetSpec::HalfPlane {
            chart: 0,
            normal: c(1.0, 0.0),
            offset: 0.0
        }
        .radial_set()
        .is_err());
    }

    fn ball_strategy() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        (-2.0..2.0f64, -2.0..2.0f64, 0.05..2.0f64, 0.0..1.5f64)
    }

    proptest! {
        #[test]
        fn rasterize_is_monotone((x, y, r, extra) in ball_strategy(), chart in 0usize..2) {
            let g = ChartGrid::new(chart, 3.0, 41).unwrap();
            let small = SetSpec::Ball { chart: 0, center: c(x, y), radius: r };
            let big = SetSpec::Ball { chart: 0, center: c(x, y), radius: r + extra };
            let a = small.rasterize(&g);
            let b = big.rasterize(&g);
            prop_assert!(a.iter().zip(&b).all(|(s, t)| !*s || *t));
            let u = SetSpec::Union(vec![small.clone(), SetSpec::annulus(0.3, 0.9)]).rasterize(&g);
            prop_assert!(a.iter().zip(&u).all(|(s, t)| !*s || *t));
            let i = SetSpec::Intersection(vec![small, SetSpec::annulus(0.3, 0.9)]).rasterize(&g);
            prop_assert!(i.iter().zip(&a).all(|(s, t)| !*s || *t));
        }

        #[test]
        fn rasterize_matches_predicate(r in 0.1..3.0f64, inner in 0.0..0.1f64) {
            let g = ChartGrid::new(0, 3.0, 31).unwrap();
            let s = SetSpec::annulus(inner, r);
            let bits = s.rasterize(&g);
            for k in 0..g.node_count() {
                prop_assert_eq!(bits[k], s.contains(0, g.point(k)));
            }
        }
    }
}
