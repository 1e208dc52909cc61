//! Grid-sampled ω-psh candidates on ℂℙ¹ and their basic algebra.
//!
//! A [`QpshField`] stores `φ` on both chart grids of a [`ProjectiveGrid`];
//! `-∞` is kept as `f64::NEG_INFINITY`. The lifted function
//! `ψ = φ + ½log(1 + |z|²)` of a chart is subharmonic exactly when `φ` is
//! ω-psh, which is what the discrete checks below test.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::geometry::{fs_potential, owner_of_pair, pair_of, swap_chart, wedge_ratio, NodeSet, ProjectiveGrid};
use crate::tol::POLAR_NODE_FRACTION;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct QpshField {
    grid: ProjectiveGrid,
    values: [Vec<f64>; 2],
    claimed: bool,
    sup: f64,
}

fn max_finite(v: &[f64]) -> f64 {
    v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max)
}

impl QpshField {
    pub fn from_charts(grid: ProjectiveGrid, values: [Vec<f64>; 2], claimed: bool) -> Result<Self> {
        let n = grid.nodes_per_chart();
        if values[0].len() != n || values[1].len() != n {
            return Err(Error::GridMismatch);
        }
        if values.iter().flatten().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::InvalidArgument("field values must be finite or -inf"));
        }
        let sup = max_finite(&values[0]).max(max_finite(&values[1]));
        Ok(Self {
            grid,
            values,
            claimed,
            sup,
        })
    }

    /// Samples `f([x0 : x1])` at every node of both charts.
    pub fn from_fn(grid: ProjectiveGrid, f: impl Fn(C64, C64) -> f64) -> Self {
        let values = [0, 1].map(|c| -> Vec<f64> {
            let g = grid.chart(c);
            (0..g.node_count())
                .map(|k| {
                    let (x0, x1) = pair_of(c, g.point(k));
                    let v = f(x0, x1);
                    if v.is_nan() {
                        f64::NEG_INFINITY
                    } else {
                        v
                    }
                })
                .collect()
        });
        let sup = max_finite(&values[0]).max(max_finite(&values[1]));
        Self {
            grid,
            values,
            claimed: false,
            sup,
        }
    }

    pub fn constant(grid: ProjectiveGrid, c: f64) -> Self {
        let n = grid.nodes_per_chart();
        Self {
            grid,
            values: [vec![c; n], vec![c; n]],
            claimed: true,
            sup: c,
        }
    }

    pub fn zero(grid: ProjectiveGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn with_claim(mut self, claimed: bool) -> Self {
        self.claimed = claimed;
        self
    }

    pub fn grid(&self) -> &ProjectiveGrid {
        &self.grid
    }

    pub fn values(&self, chart: usize) -> &[f64] {
        &self.values[chart]
    }

    pub fn into_values(self) -> [Vec<f64>; 2] {
        self.values
    }

    /// Whether the producer claims the field is ω-psh.
    pub fn claimed(&self) -> bool {
        self.claimed
    }

    /// Maximum over finite nodes of both charts; `-∞` if there are none.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// Minimum over owned nodes.
    pub fn inf(&self) -> f64 {
        let mut m = f64::INFINITY;
        self.for_each_owned(|_, _, _, v| m = m.min(v));
        m
    }

    pub fn has_sentinel(&self) -> bool {
        self.values.iter().flatten().any(|x| x.is_infinite())
    }

    pub fn sentinel_fraction(&self) -> f64 {
        let total = 2 * self.grid.nodes_per_chart();
        let bad = self.values.iter().flatten().filter(|x| x.is_infinite()).count();
        bad as f64 / total as f64
    }

    pub fn is_polar_flagged(&self) -> bool {
        self.sentinel_fraction() > POLAR_NODE_FRACTION
    }

    /// `ψ = φ + ½log(1 + |z|²)` on one chart.
    pub fn lifted(&self, chart: usize) -> Vec<f64> {
        let g = self.grid.chart(chart);
        self.values[chart]
            .iter()
            .enumerate()
            .map(|(k, v)| v + fs_potential(g.point(k)))
            .collect()
    }

    /// Visits every owned node as `(chart, index, chart point, value)`.
    pub fn for_each_owned(&self, mut f: impl FnMut(usize, usize, C64, f64)) {
        for c in 0..2 {
            let g = self.grid.chart(c);
            for k in 0..g.node_count() {
                let z = g.point(k);
                if ProjectiveGrid::owns(c, z) {
                    f(c, k, z, self.values[c][k]);
                }
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = [0, 1].map(|c| self.values[c].iter().map(|v| f(*v)).collect::<Vec<_>>());
        let sup = max_finite(&values[0]).max(max_finite(&values[1]));
        Self {
            grid: self.grid,
            values,
            claimed: false,
            sup,
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.map(|v| v + c);
        out.claimed = self.claimed;
        out
    }

    /// `t·φ`, ω-psh for `t ∈ [0, 1]` when `φ` is.
    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.map(|v| if v.is_infinite() && t == 0.0 { 0.0 } else { t * v });
        out.claimed = self.claimed && (0.0..=1.0).contains(&t);
        out
    }

    /// Value at `[x0 : x1]` by bilinear interpolation in the owning chart.
    /// Any `-∞` node in the stencil with positive weight gives `-∞`.
    pub fn sample_pair(&self, x0: C64, x1: C64) -> f64 {
        let (c, z) = owner_of_pair(x0, x1);
        let g = self.grid.chart(c);
        let st = g.bilinear(z).expect("owned points lie inside the box");
        let mut acc = 0.0;
        for (k, w) in st {
            if w > 0.0 {
                acc += w * self.values[c][k];
            }
        }
        acc
    }

    /// Largest nodewise `|a − b|` over owned nodes where both are finite.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        let mut m: f64 = 0.0;
        self.for_each_owned(|c, k, _, a| {
            let b = other.values[c][k];
            if a.is_finite() && b.is_finite() {
                m = m.max((a - b).abs());
            }
        });
        Ok(m)
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Discrete test of `dd^c φ ≥ −ω` at every owned node.
    pub fn defect(&self) -> DefectReport {
        let mut rep = DefectReport {
            min_density: f64::INFINITY,
            worst_margin: f64::INFINITY,
            max_tol: 0.0,
            checked: 0,
            skipped: 0,
        };
        let h = self.grid.spacing();
        for c in 0..2 {
            let psi = self.lifted(c);
            let g = self.grid.chart(c);
            let m = g.resolution;
            for k in 0..g.node_count() {
                if !ProjectiveGrid::owns(c, g.point(k)) {
                    continue;
                }
                match stencil_density(&psi, k, m, h) {
                    Some((d, trunc)) => {
                        let tol = 4.0 * h + 4.0 * trunc;
                        rep.checked += 1;
                        rep.min_density = rep.min_density.min(d);
                        rep.worst_margin = rep.worst_margin.min(d + tol);
                        rep.max_tol = rep.max_tol.max(tol);
                    }
                    None => rep.skipped += 1,
                }
            }
        }
        rep
    }

    /// Sets the claim flag from the discrete defect test.
    pub fn certify(mut self) -> Self {
        self.claimed = self.defect().certified();
        self
    }

    /// Mean of `φ` against the discrete FS volume; `-∞` if a weighted node is.
    pub fn fs_mean(&self) -> f64 {
        fs_volume(&self.grid).integrate(self)
    }
}

/// Outcome of the discrete ω-psh test.
///
/// The density at a node is `Δ_h ψ / 2π`, the discrete density of
/// `ω + dd^c φ` against Lebesgue measure of the chart. Its tolerance is
/// `4h + 4·τ` where `τ` is the local truncation estimate from fourth
/// differences, so exact ω-psh functions pass at every resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectReport {
    /// Most negative density found (positive when everything is positive).
    pub min_density: f64,
    /// Smallest `density + tolerance`; negative means a violation.
    pub worst_margin: f64,
    pub max_tol: f64,
    pub checked: usize,
    /// Nodes whose stencil touches a `-∞` value.
    pub skipped: usize,
}

impl DefectReport {
    pub fn certified(&self) -> bool {
        self.worst_margin >= 0.0
    }
}

/// Density `Δ_h ψ / 2π` and truncation estimate at node `k`, or `None` if a
/// stencil value is not finite.
pub(crate) fn stencil_density(psi: &[f64], k: usize, m: usize, h: f64) -> Option<(f64, f64)> {
    let v = [
        psi[k],
        psi[k - 1],
        psi[k + 1],
        psi[k - m],
        psi[k + m],
        psi[k - 2],
        psi[k + 2],
        psi[k - 2 * m],
        psi[k + 2 * m],
    ];
    if v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let h2 = h * h;
    let lap = v[1] + v[2] + v[3] + v[4] - 4.0 * v[0];
    let d4x = v[5] - 4.0 * v[1] + 6.0 * v[0] - 4.0 * v[2] + v[6];
    let d4y = v[7] - 4.0 * v[3] + 6.0 * v[0] - 4.0 * v[4] + v[8];
    Some((lap / (2.0 * PI * h2), (d4x.abs() + d4y.abs()) / (24.0 * PI * h2)))
}

/// Nonnegative node weights on the owned nodes of a [`ProjectiveGrid`].
/// Weights are masses, not densities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub grid: ProjectiveGrid,
    pub weights: [Vec<f64>; 2],
}

impl DiscreteMeasure {
    pub fn zero(grid: ProjectiveGrid) -> Self {
        let n = grid.nodes_per_chart();
        Self {
            grid,
            weights: [vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }

    pub fn mass_on(&self, set: &NodeSet) -> f64 {
        let mut m = 0.0;
        for c in 0..2 {
            for (w, b) in self.weights[c].iter().zip(&set.bits[c]) {
                if *b {
                    m += w;
                }
            }
        }
        m
    }

    pub fn mass_where(&self, mut pred: impl FnMut(usize, usize) -> bool) -> f64 {
        let mut m = 0.0;
        for c in 0..2 {
            for (k, w) in self.weights[c].iter().enumerate() {
                if *w != 0.0 && pred(c, k) {
                    m += w;
                }
            }
        }
        m
    }

    /// `∫ f dμ`; nodes with zero weight are ignored.
    pub fn integrate(&self, f: &QpshField) -> f64 {
        let mut acc = 0.0;
        for c in 0..2 {
            for (w, v) in self.weights[c].iter().zip(f.values(c)) {
                if *w != 0.0 {
                    acc += w * v;
                }
            }
        }
        acc
    }

    pub fn integrate_fn(&self, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for c in 0..2 {
            for (k, w) in self.weights[c].iter().enumerate() {
                if *w != 0.0 {
                    acc += w * f(c, k);
                }
            }
        }
        acc
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.total();
        if !(t > 0.0) {
            return Err(Error::NotProbability(t));
        }
        let mut out = self.clone();
        for w in out.weights.iter_mut().flatten() {
            *w /= t;
        }
        Ok(out)
    }
}

/// The discrete Fubini–Study volume: the Monge–Ampère measure of `φ ≡ 0`.
pub fn fs_volume(grid: &ProjectiveGrid) -> DiscreteMeasure {
    let mut out = DiscreteMeasure::zero(*grid);
    let h = grid.spacing();
    for c in 0..2 {
        let g = grid.chart(c);
        let psi: Vec<f64> = (0..g.node_count()).map(|k| fs_potential(g.point(k))).collect();
        for k in 0..g.node_count() {
            if ProjectiveGrid::owns(c, g.point(k)) {
                let (d, _) = stencil_density(&psi, k, g.resolution, h).expect("finite potential");
                out.weights[c][k] = d * h * h;
            }
        }
    }
    out
}

/// Finitely many weighted points of ℂℙ¹.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<(C64, C64, f64)>,
}

impl AtomicMeasure {
    /// Validates a probability measure (mass 1 within 1e−9, weights ≥ 0).
    pub fn new(atoms: Vec<(C64, C64, f64)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.2).sum();
        if (total - 1.0).abs() > 1e-9 || atoms.iter().any(|a| a.2 < 0.0) {
            return Err(Error::NotProbability(total));
        }
        if atoms.iter().any(|a| a.0.norm_sqr() + a.1.norm_sqr() == 0.0) {
            return Err(Error::AllZero);
        }
        Ok(Self { atoms })
    }

    pub fn dirac(x0: C64, x1: C64) -> Result<Self> {
        Self::new(vec![(x0, x1, 1.0)])
    }

    /// Atoms at the nodes carrying positive weight.
    pub fn from_discrete(m: &DiscreteMeasure) -> Result<Self> {
        let mut atoms = Vec::new();
        for c in 0..2 {
            let g = m.grid.chart(c);
            for (k, w) in m.weights[c].iter().enumerate() {
                if *w > 0.0 {
                    let (x0, x1) = pair_of(c, g.point(k));
                    atoms.push((x0, x1, *w));
                }
            }
        }
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[(C64, C64, f64)] {
        &self.atoms
    }
}

/// `ψ` on chart 0: `φ + ½log(1 + |z|²)`.
pub fn lift_to_lelong(f: &QpshField) -> Vec<f64> {
    f.lifted(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Max,
    Mean,
    Softmax,
}

/// Nodewise `max`, `½(a + b)` or `log(e^a + e^b)`.
pub fn lattice_combine(a: &QpshField, b: &QpshField, mode: Combine) -> Result<QpshField> {
    a.check_grid(b)?;
    let op = |x: f64, y: f64| match mode {
        Combine::Max => x.max(y),
        Combine::Mean => 0.5 * (x + y),
        Combine::Softmax => {
            let m = x.max(y);
            if m == f64::NEG_INFINITY {
                m
            } else {
                m + ((x - m).exp() + (y - m).exp()).ln()
            }
        }
    };
    let values = [0, 1].map(|c| {
        a.values[c]
            .iter()
            .zip(&b.values[c])
            .map(|(x, y)| op(*x, *y))
            .collect::<Vec<_>>()
    });
    QpshField::from_charts(a.grid, values, a.claimed && b.claimed)
}

/// `φ − sup φ`.
pub fn normalize_sup(f: &QpshField) -> Result<QpshField> {
    if f.sup == f64::NEG_INFINITY {
        return Err(Error::AllSentinel);
    }
    let mut out = f.shifted(-f.sup);
    out.sup = 0.0;
    Ok(out)
}

/// `φ_μ(x) = Σ w_y log(‖x ∧ y‖ / ‖x‖‖y‖)`, the potential of an atomic
/// probability measure; `-∞` exactly at the atoms.
pub fn kernel_potential(grid: &ProjectiveGrid, mu: &AtomicMeasure) -> QpshField {
    QpshField::from_fn(*grid, |x0, x1| {
        let mut acc = 0.0;
        for &(y0, y1, w) in &mu.atoms {
            if w == 0.0 {
                continue;
            }
            let r = wedge_ratio(&[x0, x1], &[y0, y1]);
            if r == 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += w * r.ln();
        }
        acc.min(0.0)
    })
    .with_claim(true)
}

/// Glues a psh function `u` given near the closed unit ball of chart 0 into a
/// bounded ω-psh field.
///
/// With `ℓ(z) = A·log⁺|z| − S − 1`, `S = sup_B |u|` over finite values, the
/// glued function is `u` on `B`, `max(u, ℓ)` on `(1+ε)B ∖ B` and `ℓ` outside;
/// the field is `(U + S + 1)/A − ½log(1 + |z|²)`, which for `A = 1` is the
/// plain `U − ½log(1+|z|²) + C` with `C = S + 1`. `u` is indexed like the
/// chart-0 grid; only nodes with `|z| ≤ 1 + ε` are read.
pub fn extend_local_psh(grid: &ProjectiveGrid, u: &[f64], a: f64, eps: f64) -> Result<QpshField> {
    let g0 = grid.chart(0);
    if u.len() != g0.node_count() {
        return Err(Error::GridMismatch);
    }
    if !(eps > 0.0) || 1.0 + eps >= grid.box_radius - g0.spacing {
        return Err(Error::InvalidArgument("collar must fit inside the chart box"));
    }
    let outer = 1.0 + eps;
    let h = g0.spacing;
    let mut s: f64 = 0.0;
    for (k, v) in u.iter().enumerate() {
        if v.is_finite() && g0.point(k).norm() <= 1.0 {
            s = s.max(v.abs());
        }
    }
    let ell = |r: f64| a * r.ln().max(0.0) - s - 1.0;
    // The max must hand the collar over to ℓ at |z| = 1 + ε.
    let mut excess: f64 = f64::NEG_INFINITY;
    for (k, v) in u.iter().enumerate() {
        let r = g0.point(k).norm();
        if r > outer - h && r <= outer && v.is_finite() {
            excess = excess.max(v - ell(r));
        }
    }
    let slack = 2.0 * h * a.max(1.0);
    if excess > slack {
        return Err(Error::CollarMismatch(excess));
    }
    if a < 1.0 {
        return Err(Error::BadGrowth(a));
    }
    let glue = |z: C64, uz: f64| -> f64 {
        let r = z.norm();
        let big_u = if r < 1.0 {
            uz
        } else if r <= outer {
            uz.max(ell(r))
        } else {
            ell(r)
        };
        (big_u + s + 1.0) / a - fs_potential(z)
    };
    let mut values = [vec![0.0; g0.node_count()], vec![0.0; g0.node_count()]];
    for k in 0..g0.node_count() {
        let z = g0.point(k);
        values[0][k] = if z.norm() <= outer { glue(z, u[k]) } else { glue(z, 0.0) };
    }
    let g1 = grid.chart(1);
    for k in 0..g1.node_count() {
        let w = g1.point(k);
        if w.norm() * outer < 1.0 {
            // log|z| − ½log(1+|z|²) = −½log(1+|w|²)
            values[1][k] = -fs_potential(w);
        } else {
            let z = swap_chart(w);
            let st = g0.bilinear(z).expect("collar lies inside the box");
            let mut uz = 0.0;
            for (j, wt) in st {
                if wt > 0.0 {
                    uz += wt * u[j];
                }
            }
            values[1][k] = glue(z, uz);
        }
    }
    Ok(QpshField::from_charts(*grid, values, false)?.certify())
}

/// A random smooth ω-psh field
/// `φ = t · (1/2N) log(Σ_k |P_k(x)|² / ‖x‖^{2N})`, possibly maxed with a
/// second one, where the `P_k` are random degree-`N` forms that include
/// `x0^N` and `x1^N` so the field is bounded.
pub fn random_certified_field(grid: &ProjectiveGrid, seed: u64) -> QpshField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = random_log_sum(grid, &mut rng);
    let f = if rng.gen_bool(0.5) {
        let two = random_log_sum(grid, &mut rng).shifted(rng.gen_range(-0.3..0.3));
        lattice_combine(&one, &two, Combine::Max).expect("same grid")
    } else {
        one
    };
    let t = rng.gen_range(0.2..1.0);
    f.scaled(t).with_claim(true)
}

fn random_log_sum(grid: &ProjectiveGrid, rng: &mut ChaCha8Rng) -> QpshField {
    let n: usize = rng.gen_range(1..=4);
    let count: usize = rng.gen_range(1..=3);
    let mut polys: Vec<Vec<C64>> = Vec::new();
    for _ in 0..count {
        polys.push(
            (0..=n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        );
    }
    let floor = rng.gen_range(0.05..0.5);
    let nn = n as i32;
    QpshField::from_fn(*grid, move |x0, x1| {
        let q = x0.norm_sqr() + x1.norm_sqr();
        let mut acc = floor * (x0.norm_sqr().powi(nn) + x1.norm_sqr().powi(nn));
        for p in &polys {
            // Σ_a c_a x0^a x1^(n−a)
            let mut v = C64::new(0.0, 0.0);
            for (a, c) in p.iter().enumerate() {
                v += c * x0.powi(a as i32) * x1.powi(nn - a as i32);
            }
            acc += v.norm_sqr();
        }
        (acc / q.powi(nn)).ln() / (2.0 * n as f64)
    })
}

/// `1 → 0` smooth step on `[−L, L]` with `s(x) + s(−x) = 1`.
fn smooth_step(x: f64, l: f64) -> f64 {
    if x <= -l {
        return 1.0;
    }
    if x >= l {
        return 0.0;
    }
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let (a, b) = (f((l - x) / l), f((x + l) / l));
    a / (a + b)
}

/// Node weights of the FS volume for smooth integrands.
///
/// Each chart's weight is `h²·ρ(z)·χ(log |z|)` with a smooth partition of
/// unity `χ` across the annulus `1/(0.9b) < |z| < 0.9b`, `b` the box
/// radius, so the rectangle rule sees a compactly supported smooth
/// integrand and converges faster than any power of `h`. Unlike [`fs_volume`] it puts weight on nodes of
/// both charts in the overlap.
pub fn fs_smooth_quadrature(grid: &ProjectiveGrid) -> [Vec<f64>; 2] {
    let h = grid.spacing();
    let l = (0.9 * grid.box_radius).ln();
    [0, 1].map(|c| {
        let g = grid.chart(c);
        (0..g.node_count())
            .map(|k| {
                let z = g.point(k);
                let r = z.norm();
                let chi = if r == 0.0 { 1.0 } else { smooth_step(r.ln(), l) };
                if chi == 0.0 {
                    0.0
                } else {
                    h * h * crate::geometry::fs_density(z) * chi
                }
            })
            .collect()
    })
}

/// `∫ |a − b| dV_FS` over nodes where both are finite.
pub fn l1_fs_distance(a: &QpshField, b: &QpshField) -> Result<f64> {
    a.check_grid(b)?;
    let vol = fs_volume(a.grid());
    Ok(vol.integrate_fn(|c, k| {
        let (x, y) = (a.values[c][k], b.values[c][k]);
        if x.is_finite() && y.is_finite() {
            (x - y).abs()
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> ProjectiveGrid {
        ProjectiveGrid::new(2.0, 129).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn smooth_quadrature_is_spectrally_accurate() {
        let g = ProjectiveGrid::new(2.0, 129).unwrap();
        let w = fs_smooth_quadrature(&g);
        let total: f64 = w.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        // ∫ |x0|^{2a}|x1|^{2(N−a)}/‖x‖^{2N} dV = 1/((N+1) C(N,a)).
        let (n, a) = (6, 2);
        let mut acc = 0.0;
        for c in 0..2 {
            let gc = g.chart(c);
            for k in 0..gc.node_count() {
                let (x0, x1) = pair_of(c, gc.point(k));
                let q = x0.norm_sqr() + x1.norm_sqr();
                acc += w[c][k] * x0.norm_sqr().powi(a) * x1.norm_sqr().powi(n - a) / q.powi(n);
            }
        }
        assert!((acc - 1.0 / (7.0 * 15.0)).abs() < 1e-7, "{acc}");
    }

    #[test]
    fn lift_examples() {
        let g = grid();
        let zero = QpshField::zero(g);
        let psi = lift_to_lelong(&zero);
        let g0 = g.chart(0);
        for k in (0..g0.node_count()).step_by(97) {
            assert_eq!(psi[k], fs_potential(g0.point(k)));
        }
        let minus_h = QpshField::from_fn(g, |x0, x1| -fs_potential(x0 / x1));
        assert!(lift_to_lelong(&minus_h).iter().all(|v| v.abs() < 1e-15));
        // log|t| − ½log(|z|²+|t|²) lifts to 0 where t = 1.
        let ex = QpshField::from_fn(g, |x0, x1| x1.norm().ln() - 0.5 * (x0.norm_sqr() + x1.norm_sqr()).ln());
        assert!(lift_to_lelong(&ex).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn defect_examples() {
        let g = grid();
        assert!(QpshField::zero(g).defect().certified());
        assert!(QpshField::zero(g).defect().min_density > 0.0);
        let convex = QpshField::from_fn(g, |x0, x1| {
            if x0.norm_sqr() <= x1.norm_sqr() {
                (x0 / x1).re.powi(2)
            } else {
                0.0
            }
        });
        // Only test the chart where the added term is convex.
        let psi = convex.lifted(0);
        let g0 = g.chart(0);
        let k = g0.index(64, 64);
        assert!(stencil_density(&psi, k, g0.resolution, g0.spacing).unwrap().0 > 0.0);
        // φ = −2h: ψ = −h, density = −1/(π(1+|z|²)²).
        let neg = QpshField::from_fn(g, |x0, x1| -2.0 * fs_potential(x0 / x1));
        assert!(!neg.defect().certified());
        let psi = neg.lifted(0);
        let (d, _) = stencil_density(&psi, g0.index(64, 64), g0.resolution, g0.spacing).unwrap();
        assert!((d + 1.0 / PI).abs() < 1e-3, "{d}");
    }

    #[test]
    fn lattice_examples() {
        let g = grid();
        let f = random_certified_field(&g, 3);
        assert_eq!(lattice_combine(&f, &f, Combine::Max).unwrap(), f.clone().with_claim(true));
        let s = lattice_combine(&f, &f, Combine::Softmax).unwrap();
        assert!(s.max_abs_diff(&f.shifted(2f64.ln())).unwrap() < 1e-14);
        let cone = |a: C64| {
            QpshField::from_fn(g, move |x0, x1| {
                let (b0, b1) = (a, c(1.0, 0.0));
                wedge_ratio(&[x0, x1], &[b0, b1]).ln()
            })
        };
        let m = lattice_combine(&cone(c(0.3, 0.0)), &cone(c(-0.4, 0.2)), Combine::Max).unwrap();
        let rep = m.defect();
        assert!(rep.certified(), "{rep:?}");
        let other = QpshField::zero(ProjectiveGrid::new(2.0, 65).unwrap());
        assert_eq!(lattice_combine(&f, &other, Combine::Mean), Err(Error::GridMismatch));
    }

    #[test]
    fn normalize_examples() {
        let g = grid();
        let three = QpshField::constant(g, 3.0);
        assert_eq!(normalize_sup(&three).unwrap().sup(), 0.0);
        assert!(normalize_sup(&three).unwrap().values(0).iter().all(|v| *v == 0.0));
        for seed in 0..5 {
            let f = random_certified_field(&g, seed);
            let n = normalize_sup(&f).unwrap();
            assert_eq!(n.sup(), 0.0);
            assert_eq!(max_finite(n.values(0)).max(max_finite(n.values(1))), 0.0);
        }
        let bad = QpshField::constant(g, f64::NEG_INFINITY);
        assert_eq!(normalize_sup(&bad), Err(Error::AllSentinel));
    }

    #[test]
    fn kernel_potential_examples() {
        let g = grid();
        let mu = AtomicMeasure::dirac(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let phi = kernel_potential(&g, &mu);
        let g0 = g.chart(0);
        for k in 0..g0.node_count() {
            let z = g0.point(k);
            let v = phi.values(0)[k];
            if z.norm_sqr() == 0.0 {
                assert_eq!(v, f64::NEG_INFINITY);
            } else {
                assert!((v - (z.norm().ln() - fs_potential(z))).abs() < 1e-12);
            }
        }
        assert!(phi.sup() <= 0.0);
        assert!(phi.defect().certified());
        let a = AtomicMeasure::dirac(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let b = AtomicMeasure::dirac(c(-1.0, 0.0), c(1.0, 0.0)).unwrap();
        let both = AtomicMeasure::new(vec![(c(1.0, 0.0), c(1.0, 0.0), 0.5), (c(-1.0, 0.0), c(1.0, 0.0), 0.5)]).unwrap();
        let avg = lattice_combine(&kernel_potential(&g, &a), &kernel_potential(&g, &b), Combine::Mean).unwrap();
        assert!(kernel_potential(&g, &both).max_abs_diff(&avg).unwrap() < 1e-12);
        assert!(matches!(AtomicMeasure::dirac(c(0.0, 0.0), c(0.0, 0.0)), Err(Error::AllZero)));
        assert!(matches!(
            AtomicMeasure::new(vec![(c(1.0, 0.0), c(1.0, 0.0), 0.5)]),
            Err(Error::NotProbability(_))
        ));
    }

    #[test]
    fn extend_local_examples() {
        let g = ProjectiveGrid::new(4.0, 129).unwrap();
        let g0 = g.chart(0);
        let zero = vec![0.0; g0.node_count()];
        let e = core::f64::consts::E;
        let f = extend_local_psh(&g, &zero, 1.0, e - 1.0).unwrap();
        let closed = QpshField::from_fn(g, |x0, x1| {
            let r = (x0 / x1).norm();
            if r.is_finite() {
                r.ln().max(1.0) - fs_potential(x0 / x1)
            } else {
                0.0
            }
        });
        assert!(f.max_abs_diff(&closed).unwrap() < 1e-9);
        assert!(f.claimed());
        assert!(matches!(extend_local_psh(&g, &zero, 0.0, e - 1.0), Err(Error::CollarMismatch(_))));
        assert!(matches!(extend_local_psh(&g, &zero, 1.0, 0.5), Err(Error::CollarMismatch(_))));

        let half = c(0.5, 0.0);
        let pole: Vec<f64> = (0..g0.node_count()).map(|k| (g0.point(k) - half).norm().ln()).collect();
        // The pole forces a larger growth constant for the hand-off.
        assert!(matches!(extend_local_psh(&g, &pole, 1.0, 2.0), Err(Error::CollarMismatch(_))));
        let f = extend_local_psh(&g, &pole, 5.0, 2.0).unwrap();
        let k = g0.nearest(half);
        assert_eq!(f.values(0)[k], f64::NEG_INFINITY);
        assert_eq!(f.values(0).iter().filter(|v| v.is_infinite()).count(), 1);
        assert!(f.defect().certified());
    }

    #[test]
    fn random_fields_certify_and_are_bounded() {
        let g = grid();
        for seed in 0..20 {
            let f = random_certified_field(&g, seed);
            let rep = f.defect();
            assert!(rep.certified(), "seed {seed}: {rep:?}");
            assert!(!f.has_sentinel());
        }
    }

    #[test]
    fn fs_volume_has_unit_mass() {
        for m in [129, 257, 513] {
            let v = fs_volume(&ProjectiveGrid::new(2.0, m).unwrap());
            assert_relative_eq!(v.total(), 1.0, epsilon = 5e-3);
            assert!(v.weights.iter().flatten().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn sample_pair_interpolates_smooth_fields() {
        let g = grid();
        let f = QpshField::from_fn(g, |x0, x1| x0.norm_sqr() / (x0.norm_sqr() + x1.norm_sqr()));
        for &(a, b) in &[(0.3, 0.1), (1.7, -0.4), (-0.05, 3.0)] {
            let z = c(a, b);
            let exact = z.norm_sqr() / (1.0 + z.norm_sqr());
            assert!((f.sample_pair(z, c(1.0, 0.0)) - exact).abs() < 1e-3);
        }
    }
}
