//! Holomorphic endomorphisms of ℂℙ¹, their Green functions and the
//! capacity and volume estimates along forward orbits.
//!
//! A map is given by a lift `F = (P0, P1)` of binary forms of degree
//! `λ ≥ 2`. All evaluations go through unit representatives, so
//! `‖F(x̂)‖` is the pointwise norm of `F` and orbits never overflow.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::envelopes::{global_extremal_with, EnvelopeOptions};
use crate::field::{fs_volume, QpshField};
use crate::geometry::{chart_of_pair, pair_of, NodeMask, NodeSet, ProjectiveGrid, SetSpec};
use crate::linalg::determinant;
use crate::sections::{sphere_cloud, HomPoly};
use crate::tol::{LIFT_FLOOR, POLAR_THRESHOLD};
use crate::{Error, Result, C64};

/// `|Res(P0, P1)| / (‖P0‖‖P1‖)^λ` below this counts as a common zero.
const RESULTANT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Endomorphism {
    /// Dense coefficients of `x0^a x1^{λ−a}` for each component.
    coeffs: [Vec<C64>; 2],
    lambda: u32,
}

fn unit(x: [C64; 2]) -> ([C64; 2], f64) {
    let q = (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
    ([x[0] / q, x[1] / q], q)
}

fn eval_dense(c: &[C64], x: [C64; 2]) -> C64 {
    // Horner in x0 with x1 powers carried along.
    let d = c.len() - 1;
    let mut acc = C64::new(0.0, 0.0);
    let mut p1 = C64::new(1.0, 0.0);
    for a in (0..=d).rev() {
        acc = acc * x[0] + c[a] * p1;
        p1 *= x[1];
    }
    acc
}

/// Builds a validated endomorphism from `n + 1 = 2` forms of equal degree.
pub fn build_endomorphism(polys: &[HomPoly]) -> Result<Endomorphism> {
    if polys.len() != 2 || polys.iter().any(|p| p.dim() != 1) {
        return Err(Error::InvalidArgument("a lift on ℂℙ¹ has two binary components"));
    }
    let lambda = polys[0].degree();
    if polys[1].degree() != lambda {
        return Err(Error::DegreeMismatch);
    }
    if lambda < 2 {
        return Err(Error::InvalidArgument("degree must be at least 2"));
    }
    let coeffs = [polys[0].binary_coeffs()?, polys[1].binary_coeffs()?];
    let f = Endomorphism { coeffs, lambda };
    if f.normalized_resultant() < RESULTANT_FLOOR {
        return Err(Error::DegenerateLift);
    }
    let floor = sphere_cloud(257, 64)
        .into_iter()
        .map(|x| {
            let y = f.lift(x);
            y[0].norm().max(y[1].norm())
        })
        .fold(f64::INFINITY, f64::min);
    if floor < LIFT_FLOOR {
        return Err(Error::DegenerateLift);
    }
    Ok(f)
}

/// Parses `"P0, P1"` in the variables `z`, `w`, e.g. `"z^2, w^2"`.
pub fn parse_map(src: &str) -> Result<Endomorphism> {
    let mut parts = Vec::new();
    let mut offset = 0;
    for piece in src.split(',') {
        let p = HomPoly::parse(piece).map_err(|e| match e {
            Error::Parse { pos, msg } => Error::Parse { pos: pos + offset, msg },
            e => e,
        })?;
        parts.push(p);
        offset += piece.len() + 1;
    }
    if parts.len() != 2 {
        return Err(Error::Parse {
            pos: src.len(),
            msg: "expected two comma-separated components",
        });
    }
    build_endomorphism(&parts)
}

impl Endomorphism {
    pub fn degree(&self) -> u32 {
        self.lambda
    }

    pub fn coeffs(&self) -> &[Vec<C64>; 2] {
        &self.coeffs
    }

    /// `F(x)` for any representative.
    pub fn lift(&self, x: [C64; 2]) -> [C64; 2] {
        [eval_dense(&self.coeffs[0], x), eval_dense(&self.coeffs[1], x)]
    }

    /// Sylvester resultant of the two components over the product of
    /// coefficient norms to the power `λ`.
    fn normalized_resultant(&self) -> f64 {
        let d = self.lambda as usize;
        let n = 2 * d;
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        for (block, c) in self.coeffs.iter().enumerate() {
            for r in 0..d {
                let row = block * d + r;
                // Coefficients from x0^d down to x1^d.
                for k in 0..=d {
                    m[row * n + r + k] = c[d - k];
                }
            }
        }
        let norm = |c: &Vec<C64>| c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        determinant(&m, n).norm() / (norm(&self.coeffs[0]) * norm(&self.coeffs[1])).powi(d as i32)
    }

    /// `(f(x̂), ‖F(x̂)‖)` for a unit `x̂`, with `f(x̂)` again unit.
    pub fn step(&self, x: [C64; 2]) -> ([C64; 2], f64) {
        unit(self.lift(x))
    }

    /// `f^j([x0 : x1])` as a unit representative.
    pub fn iterate(&self, x0: C64, x1: C64, j: u32) -> [C64; 2] {
        let mut x = unit([x0, x1]).0;
        for _ in 0..j {
            x = self.step(x).0;
        }
        x
    }

    /// FS spherical derivative `|det(F, DF·v)| / ‖F‖²` at a unit `x̂`, with
    /// `v = (−x̄1, x̄0)` the unit tangent.
    pub fn spherical_derivative(&self, x: [C64; 2]) -> f64 {
        let d = self.lambda as usize;
        let v = [-x[1].conj(), x[0].conj()];
        let mut fx = [C64::new(0.0, 0.0); 2];
        let mut dfv = [C64::new(0.0, 0.0); 2];
        for (i, c) in self.coeffs.iter().enumerate() {
            for (a, ca) in c.iter().enumerate() {
                let b = d - a;
                fx[i] += ca * x[0].powu(a as u32) * x[1].powu(b as u32);
                if a > 0 {
                    dfv[i] += ca * (a as f64) * x[0].powu(a as u32 - 1) * x[1].powu(b as u32) * v[0];
                }
                if b > 0 {
                    dfv[i] += ca * (b as f64) * x[0].powu(a as u32) * x[1].powu(b as u32 - 1) * v[1];
                }
            }
        }
        let q = fx[0].norm_sqr() + fx[1].norm_sqr();
        (fx[0] * dfv[1] - fx[1] * dfv[0]).norm() / q
    }
}

/// `φ = (1/λ) log ‖F(x̂)‖` on unit representatives, which solves
/// `λ^{−1} f*ω = ω + dd^c φ`.
pub fn green_step_potential(f: &Endomorphism, grid: &ProjectiveGrid) -> QpshField {
    let l = f.lambda as f64;
    QpshField::from_fn(*grid, |x0, x1| f.step(unit([x0, x1]).0).1.ln() / l).certify()
}

/// `g_j(x) = Σ_{l<j} λ^{−l} φ(f^l x)` along the exact orbit of `x`.
pub fn green_series(f: &Endomorphism, x0: C64, x1: C64, j: u32) -> f64 {
    let l = f.lambda as f64;
    let mut x = unit([x0, x1]).0;
    let mut acc = 0.0;
    let mut w = 1.0;
    for _ in 0..j {
        let (y, norm) = f.step(x);
        acc += w * norm.ln() / l;
        w /= l;
        x = y;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenResult {
    pub field: QpshField,
    pub j: u32,
    /// `sup|φ| λ^{−j} / (1 − 1/λ)`: bound on `|g_f − g_j|`.
    pub error_bound: f64,
    pub sup_abs_phi: f64,
}

/// `sup |φ|` of the step potential over a fine sphere cloud.
pub fn step_potential_sup(f: &Endomorphism) -> f64 {
    let l = f.lambda as f64;
    sphere_cloud(1025, 256)
        .into_iter()
        .map(|x| (f.step(x).1.ln() / l).abs())
        .fold(0.0, f64::max)
}

/// `g_j` on the grid.
pub fn green_iterate(f: &Endomorphism, grid: &ProjectiveGrid, j: u32) -> QpshField {
    QpshField::from_fn(*grid, |x0, x1| green_series(f, x0, x1, j))
}

/// Iterates until the geometric tail `sup|φ|·λ^{−j}/(1 − 1/λ)` is at most
/// `tol`. The pullback `g_j ∘ f` is evaluated along exact orbits, so no
/// interpolation error enters.
pub fn green_function(f: &Endomorphism, grid: &ProjectiveGrid, tol: f64) -> Result<GreenResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive"));
    }
    let sup_abs_phi = step_potential_sup(f);
    let l = f.lambda as f64;
    let tail = |j: u32| sup_abs_phi * l.powi(-(j as i32)) / (1.0 - 1.0 / l);
    let mut j = 0;
    while tail(j) > tol {
        j += 1;
    }
    Ok(GreenResult {
        field: green_iterate(f, grid, j).certify(),
        j,
        error_bound: tail(j),
        sup_abs_phi,
    })
}

/// `max |g(x) − φ(x) − λ^{−1} g(f(x))|` over the grid nodes, every term
/// evaluated on exact orbits.
pub fn functional_residual(f: &Endomorphism, g: &GreenResult) -> f64 {
    let grid = *g.field.grid();
    let l = f.lambda as f64;
    let mut worst: f64 = 0.0;
    for c in 0..2 {
        let gc = grid.chart(c);
        for k in 0..gc.node_count() {
            let (x0, x1) = pair_of(c, gc.point(k));
            let x = unit([x0, x1]).0;
            let (y, norm) = f.step(x);
            let lhs = g.field.values(c)[k];
            let rhs = norm.ln() / l + green_series(f, y[0], y[1], g.j) / l;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// Node-set of `f^j(K)`: images of a supersampled cloud of `K`, marked at
/// the nearest node of each chart that holds them, optionally grown by one
/// cell.
pub fn forward_image(f: &Endomorphism, k: &SetSpec, j: u32, grid: &ProjectiveGrid, dilate: bool) -> NodeSet {
    let raster = k.rasterize_projective(grid);
    let mut out = NodeSet::empty(*grid);
    // Chart-coordinate expansion of f^j reaches about 2λ^j; keep image
    // spacing below h.
    let s = (2 * (f.lambda as usize).pow(j)).clamp(1, 32);
    let h = grid.spacing();
    for c in 0..2 {
        let g = grid.chart(c);
        for idx in 0..g.node_count() {
            let z = g.point(idx);
            if !raster.bits[c][idx] || !ProjectiveGrid::owns(c, z) {
                continue;
            }
            for a in 0..s {
                for b in 0..s {
                    let dz = C64::new(((a as f64 + 0.5) / s as f64 - 0.5) * h, ((b as f64 + 0.5) / s as f64 - 0.5) * h);
                    let p = if s == 1 { z } else { z + dz };
                    if s > 1 && !k.contains(c, p) {
                        continue;
                    }
                    let (x0, x1) = pair_of(c, p);
                    let y = f.iterate(x0, x1, j);
                    mark(&mut out, grid, y);
                }
            }
            // The node itself, so small sets keep an image.
            let (x0, x1) = pair_of(c, z);
            mark(&mut out, grid, f.iterate(x0, x1, j));
        }
    }
    if dilate {
        out.dilate()
    } else {
        out
    }
}

fn mark(out: &mut NodeSet, grid: &ProjectiveGrid, y: [C64; 2]) {
    let b = grid.box_radius;
    for c in 0..2 {
        if let Some(w) = chart_of_pair(c, y[0], y[1]) {
            if w.re.abs() <= b && w.im.abs() <= b {
                let g = grid.chart(c);
                out.bits[c][g.nearest(w)] = true;
            }
        }
    }
}

/// A [`SetSpec`] whose rasterization on the node set's grid is the node set.
pub fn nodeset_spec(ns: &NodeSet) -> Result<SetSpec> {
    let g = ns.grid;
    Ok(SetSpec::Union(vec![
        SetSpec::Mask(NodeMask::new(0, g.box_radius, g.resolution, ns.bits[0].clone())?),
        SetSpec::Mask(NodeMask::new(1, g.box_radius, g.resolution, ns.bits[1].clone())?),
    ]))
}

/// `exp(−sup V*)` without the grid polar cut-off, 0 past the solver's
/// divergence threshold.
fn alexander_raw(set: &SetSpec, grid: &ProjectiveGrid) -> Result<f64> {
    let v = global_extremal_with(set, grid, &EnvelopeOptions::default())?;
    Ok(if v.sup_value.is_finite() && v.sup_value < POLAR_THRESHOLD {
        (-v.sup_value).exp()
    } else {
        0.0
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynCapacityRow {
    pub j: u32,
    pub t_k: f64,
    pub t_image: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynCapacityReport {
    pub rows: Vec<DynCapacityRow>,
    /// Largest `α < 1` with `[α T(K)]^{λ^j} ≤ T(f^j K)` on every row.
    pub alpha_fit: f64,
    /// `exp(−max_j osc g_j)`.
    pub alpha_theory: f64,
    pub lambda: u32,
}

impl DynCapacityReport {
    pub fn holds_with(&self, alpha: f64) -> bool {
        let l = self.lambda as f64;
        self.rows
            .iter()
            .all(|r| (alpha * r.t_k).powf(l.powi(r.j as i32)) <= r.t_image * (1.0 + 1e-12))
    }

    fn fit(rows: &[DynCapacityRow], lambda: u32) -> f64 {
        let l = lambda as f64;
        let a = rows
            .iter()
            .filter(|r| r.j > 0)
            .map(|r| r.t_image.powf(l.powi(-(r.j as i32))) / r.t_k)
            .fold(f64::INFINITY, f64::min);
        a.min(1.0 - 1e-12)
    }
}

/// `T(f^j K)` for `j = 0..=j_max` on the dilated forward images, checked
/// against `[α T(K)]^{λ^j}`.
pub fn dyn_capacity_check(f: &Endomorphism, sets: &[SetSpec], j_max: u32, grid: &ProjectiveGrid) -> Result<DynCapacityReport> {
    let mut rows = Vec::new();
    for k in sets {
        let t_k = alexander_raw(k, grid)?;
        if t_k == 0.0 {
            return Err(Error::PolarSet);
        }
        rows.push(DynCapacityRow { j: 0, t_k, t_image: t_k });
        for j in 1..=j_max {
            let img = nodeset_spec(&forward_image(f, k, j, grid, true))?;
            rows.push(DynCapacityRow {
                j,
                t_k,
                t_image: alexander_raw(&img, grid)?,
            });
        }
    }
    let mut osc: f64 = 0.0;
    for j in 1..=j_max.max(1) {
        let g = green_iterate(f, grid, j);
        osc = osc.max(g.sup() - g.inf());
    }
    let lambda = f.lambda;
    Ok(DynCapacityReport {
        alpha_fit: DynCapacityReport::fit(&rows, lambda),
        alpha_theory: (-osc).exp(),
        rows,
        lambda,
    })
}

/// `∫_K (f^j)*ω` from the spherical derivative along orbits; counts
/// preimages with multiplicity.
pub fn jacobian_volume(f: &Endomorphism, k: Option<&SetSpec>, j: u32, grid: &ProjectiveGrid) -> f64 {
    let vol = fs_volume(grid);
    let raster = k.map(|s| s.rasterize_projective(grid));
    vol.integrate_fn(|c, idx| {
        if raster.as_ref().is_some_and(|r| !r.bits[c][idx]) {
            return 0.0;
        }
        let (x0, x1) = pair_of(c, grid.chart(c).point(idx));
        let mut x = unit([x0, x1]).0;
        let mut d = 1.0;
        for _ in 0..j {
            d *= f.spherical_derivative(x);
            x = f.step(x).0;
        }
        d * d
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeRow {
    pub j: u32,
    /// FS volume of the forward-image node set.
    pub vol_image: f64,
    /// `∫_K (f^j)*ω`.
    pub vol_jacobian: f64,
    /// `log Vol(f^j K) + C λ^j / Vol(K)` at the fitted `C`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeReport {
    pub vol_k: f64,
    pub c_fit: f64,
    pub rows: Vec<VolumeRow>,
}

/// Fits the smallest `C ≥ 0` with `Vol(f^j K) ≥ exp(−C λ^j / Vol(K))`.
pub fn volume_decay_check(f: &Endomorphism, k: &SetSpec, j_max: u32, grid: &ProjectiveGrid) -> Result<VolumeReport> {
    let vol = fs_volume(grid);
    let vol_k = vol.mass_on(&k.rasterize_projective(grid));
    if !(vol_k > 0.0) {
        return Err(Error::ZeroVolume);
    }
    let l = f.lambda as f64;
    let mut rows = Vec::new();
    let mut c_fit: f64 = 0.0;
    for j in 1..=j_max {
        let v = vol.mass_on(&forward_image(f, k, j, grid, false));
        if !(v > 0.0) {
            return Err(Error::ZeroVolume);
        }
        c_fit = c_fit.max(-vol_k * v.ln() / l.powi(j as i32));
        rows.push(VolumeRow {
            j,
            vol_image: v,
            vol_jacobian: jacobian_volume(f, Some(k), j, grid),
            margin: 0.0,
        });
    }
    for r in &mut rows {
        r.margin = r.vol_image.ln() + c_fit * l.powi(r.j as i32) / vol_k;
    }
    Ok(VolumeReport { vol_k, c_fit, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackRow {
    pub j: u32,
    pub sup: f64,
    /// `∫ |φ_j| dV_FS` over finite nodes.
    pub l1: f64,
    /// Fraction of nodes where `φ_j = −∞`.
    pub sentinel_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackReport {
    pub rows: Vec<PullbackRow>,
    /// Sups stay below `sup φ⁺` and L¹ norms stay within ten times the
    /// first one plus one.
    pub bounded: bool,
}

/// `φ_j = λ^{−j} φ ∘ f^j`, sampling `φ` at orbit points.
pub fn pullback_family_check(phi: &QpshField, f: &Endomorphism, j_max: u32) -> Result<PullbackReport> {
    if !phi.claimed() {
        return Err(Error::NotCertified(phi.defect().worst_margin));
    }
    let grid = *phi.grid();
    let vol = fs_volume(&grid);
    let l = f.lambda as f64;
    let mut rows = Vec::new();
    for j in 0..=j_max {
        let s = l.powi(-(j as i32));
        let pj = QpshField::from_fn(grid, |x0, x1| {
            let y = f.iterate(x0, x1, j);
            s * phi.sample_pair(y[0], y[1])
        });
        let mut bad = 0.0;
        let l1 = vol.integrate_fn(|c, k| {
            let v = pj.values(c)[k];
            if v.is_finite() {
                v.abs()
            } else {
                bad += 1.0;
                0.0
            }
        });
        let owned: usize = (0..2).map(|c| grid.owned(c).iter().filter(|b| **b).count()).sum();
        rows.push(PullbackRow {
            j,
            sup: pj.sup(),
            l1,
            sentinel_fraction: bad / owned as f64,
        });
    }
    let cap = phi.sup().max(0.0) + 1e-9;
    let l1_cap = 10.0 * rows[0].l1 + 1.0;
    let bounded = rows.iter().all(|r| r.sup <= cap && r.l1.is_finite() && r.l1 <= l1_cap);
    Ok(PullbackReport { rows, bounded })
}

/// `∫_X f*ω`, which equals `λ` for a degree-`λ` map.
pub fn first_degree_numeric(f: &Endomorphism, grid: &ProjectiveGrid) -> f64 {
    jacobian_volume(f, None, 1, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{kernel_potential, AtomicMeasure};
    use crate::monge_ampere::raw_measure;

    fn grid(b: f64, m: usize) -> ProjectiveGrid {
        ProjectiveGrid::new(b, m).unwrap()
    }

    fn squaring() -> Endomorphism {
        parse_map("z^2, w^2").unwrap()
    }

    /// `log max(1, |z|) − ½ log(1 + |z|²)` in chart 0.
    fn squaring_green(x0: C64, x1: C64) -> f64 {
        let q = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
        x0.norm().max(x1.norm()).ln() - q.ln()
    }

    #[test]
    fn build_examples() {
        assert_eq!(squaring().degree(), 2);
        assert_eq!(parse_map("z^2, z*w"), Err(Error::DegenerateLift));
        assert_eq!(parse_map("z^2 + w^2, z w").map(|f| f.degree()), Ok(2));
        assert_eq!(parse_map("z^2 - w^2, z w - w^2"), Err(Error::DegenerateLift));
        assert_eq!(parse_map("z^2, w^3"), Err(Error::DegreeMismatch));
        assert!(matches!(parse_map("z^2"), Err(Error::Parse { .. })));
        assert!(matches!(parse_map("z^2, w^2 +"), Err(Error::Parse { pos: 10, .. })));
        assert!(matches!(parse_map("z, w"), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn step_potential_examples() {
        let g = grid(2.0, 65);
        let f = squaring();
        let phi = green_step_potential(&f, &g);
        assert!(phi.claimed());
        let g0 = g.chart(0);
        for k in (0..g0.node_count()).step_by(37) {
            let z = g0.point(k);
            let r2 = z.norm_sqr();
            let want = 0.5 * ((r2 * r2 + 1.0) / ((r2 + 1.0) * (r2 + 1.0))).ln() * 0.5;
            assert!((phi.values(0)[k] - want).abs() < 1e-12);
        }
        // Unitary post-composition keeps the norms.
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let rot = parse_map(&alloc::format!("{s}z^2 + {s}w^2, {s}z^2 - {s}w^2")).unwrap();
        assert!((step_potential_sup(&rot) - step_potential_sup(&f)).abs() < 1e-12);
        // λ^{−1} f*ω has unit mass.
        let m = raw_measure(&phi).measure.total();
        assert!((m - 1.0).abs() < 5e-3, "{m}");
        let lam = first_degree_numeric(&f, &grid(2.0, 257));
        assert!((lam - 2.0).abs() < 1e-2, "{lam}");
    }

    #[test]
    fn green_of_squaring() {
        let g = grid(2.0, 65);
        let f = squaring();
        assert!(green_iterate(&f, &g, 0).values(0).iter().all(|v| *v == 0.0));
        let res = green_function(&f, &g, 1e-8).unwrap();
        assert!(res.error_bound <= 1e-8);
        assert!(functional_residual(&f, &res) <= 2e-8);
        let sup = res.sup_abs_phi;
        for j in [1, 5, 30] {
            let gj = green_iterate(&f, &g, j);
            let bound = sup * 2f64.powi(-(j as i32)) / 0.5;
            for c in 0..2 {
                let gc = g.chart(c);
                for k in 0..gc.node_count() {
                    let (x0, x1) = pair_of(c, gc.point(k));
                    let err = (gj.values(c)[k] - squaring_green(x0, x1)).abs();
                    assert!(err <= bound + 1e-15, "j={j}: {err} > {bound}");
                    if j == 30 {
                        assert!(err <= 1e-6);
                    }
                }
            }
        }
        let mass = raw_measure(&res.field).measure.total();
        assert!((mass - 1.0).abs() < 5e-3, "{mass}");
    }

    #[test]
    fn capacity_along_orbits() {
        let g = grid(2.0, 257);
        let f = squaring();
        let rep = dyn_capacity_check(&f, &[SetSpec::ball(0.5)], 1, &g).unwrap();
        let t0 = 0.5 / 1.25f64.sqrt();
        let t1 = 0.25 / 1.0625f64.sqrt();
        assert!((rep.rows[0].t_image / t0 - 1.0).abs() < 2e-2);
        // Dilation biases the image upward.
        assert!(rep.rows[1].t_image >= t1 * 0.98 && rep.rows[1].t_image < t1 * 1.3, "{:?}", rep.rows);
        assert!(rep.alpha_fit > 0.0 && rep.alpha_fit < 1.0);
        assert!(rep.holds_with(rep.alpha_fit));
        assert!(rep.holds_with(rep.alpha_theory), "{rep:?}");
        let whole = dyn_capacity_check(&f, &[SetSpec::All], 2, &grid(2.0, 33)).unwrap();
        assert!(whole.rows.iter().all(|r| (r.t_image - 1.0).abs() < 1e-9));
    }

    #[test]
    fn image_volume_two_ways() {
        let g = grid(4.0, 257);
        let f = squaring();
        let k = SetSpec::annulus(1.0, 2.0);
        let rep = volume_decay_check(&f, &k, 2, &g).unwrap();
        for r in &rep.rows {
            // z ↦ z^{2^j} covers the image annulus 2^j times.
            let ratio = r.vol_jacobian / (r.vol_image * 2f64.powi(r.j as i32));
            assert!((ratio - 1.0).abs() < 0.05, "j={}: {ratio}", r.j);
            assert!(r.margin >= -1e-12);
        }
        assert!(volume_decay_check(&f, &SetSpec::All, 2, &grid(2.0, 33)).unwrap().rows.iter().all(|r| r.vol_image > 0.99));
        let dot = SetSpec::Empty;
        assert_eq!(volume_decay_check(&f, &dot, 1, &g), Err(Error::ZeroVolume));
    }

    #[test]
    fn pullback_families() {
        let g = grid(2.0, 65);
        let f = squaring();
        let zero = pullback_family_check(&QpshField::zero(g), &f, 4).unwrap();
        assert!(zero.rows.iter().all(|r| r.sup == 0.0 && r.l1 == 0.0));
        let phi = green_step_potential(&f, &g);
        let rep = pullback_family_check(&phi, &f, 6).unwrap();
        assert!(rep.bounded);
        for w in rep.rows.windows(2) {
            assert!(w[1].l1 <= w[0].l1 + 1e-3);
        }
        let g = grid(2.0, 257);
        let pole = kernel_potential(&g, &AtomicMeasure::dirac(C64::new(0.3, 0.1), C64::new(1.0, 0.0)).unwrap())
            .with_claim(true);
        let rep = pullback_family_check(&pole, &f, 8).unwrap();
        assert!(rep.bounded, "{rep:?}");
    }
}
