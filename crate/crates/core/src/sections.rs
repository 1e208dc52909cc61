//! Sections of `O(N)` as homogeneous polynomials: Chebyshev constants,
//! polynomial hulls, the `μ`-normalized family and Bergman regularization.
//!
//! The pointwise norm of a section `s` for the FS metric is `|s(x̂)|` at a
//! unit representative `x̂`, so every sup below is a sup of `|P|` over
//! points of the unit sphere.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::field::{fs_smooth_quadrature, DiscreteMeasure, QpshField};
use crate::geometry::{pair_of, ProjectiveGrid, RadialSet, SetSpec};
use crate::linalg::hermitian_eigen;
use crate::tol::GRAM_EIG_THRESHOLD;
use crate::{Error, Result, C64};

/// Homogeneous polynomial in `n + 1` variables with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HomPoly {
    dim: usize,
    degree: u32,
    terms: BTreeMap<Vec<u32>, C64>,
}

impl HomPoly {
    /// `dim` is `n`, so exponent vectors have length `n + 1`. Zero
    /// coefficients are dropped; like exponents are summed.
    pub fn new(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, C64)>) -> Result<Self> {
        let mut map: BTreeMap<Vec<u32>, C64> = BTreeMap::new();
        let mut degree = None;
        for (e, c) in terms {
            if e.len() != dim + 1 {
                return Err(Error::InvalidArgument("exponent length must be n + 1"));
            }
            let d: u32 = e.iter().sum();
            match degree {
                None => degree = Some(d),
                Some(d0) if d0 != d => return Err(Error::DegreeMismatch),
                _ => {}
            }
            *map.entry(e).or_insert(C64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| c.norm_sqr() > 0.0);
        if map.is_empty() {
            return Err(Error::AllZero);
        }
        Ok(Self {
            dim,
            degree: degree.unwrap_or(0),
            terms: map,
        })
    }

    pub fn monomial(exps: Vec<u32>) -> Result<Self> {
        let dim = exps.len().saturating_sub(1);
        Self::new(dim, [(exps, C64::new(1.0, 0.0))])
    }

    /// Binary form `Σ_a c_a x0^a x1^{N−a}` with `N = coeffs.len() − 1`.
    pub fn binary(coeffs: &[C64]) -> Result<Self> {
        let n = coeffs.len().saturating_sub(1) as u32;
        Self::new(
            1,
            coeffs
                .iter()
                .enumerate()
                .map(|(a, c)| (vec![a as u32, n - a as u32], *c)),
        )
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], C64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    /// Dense coefficients `c_a` of `x0^a x1^{N−a}`.
    pub fn binary_coeffs(&self) -> Result<Vec<C64>> {
        if self.dim != 1 {
            return Err(Error::InvalidArgument("not a binary form"));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.degree as usize + 1];
        for (e, c) in &self.terms {
            out[e[0] as usize] = *c;
        }
        Ok(out)
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(*c, |acc, (&p, &xi)| acc * xi.powu(p))
            })
            .sum()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidArgument("dimension mismatch"));
        }
        let mut terms = Vec::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                terms.push((e1.iter().zip(e2).map(|(a, b)| a + b).collect(), c1 * c2));
            }
        }
        Self::new(self.dim, terms)
    }

    /// Parses a binary form in the variables `z` (= `x0`) and `w` (= `x1`),
    /// e.g. `"z^2 + 0.5*z*w - 3w^2"`. Juxtaposition multiplies.
    pub fn parse(src: &str) -> Result<Self> {
        Parser { s: src.as_bytes(), pos: 0 }.poly()
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn err(&self, msg: &'static str) -> Error {
        Error::Parse { pos: self.pos, msg }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.s.len() && matches!(self.s[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.s.len() && matches!(self.s[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        let text = core::str::from_utf8(&self.s[start..self.pos]).map_err(|_| self.err("invalid utf-8"))?;
        text.parse::<f64>().map_err(|_| Error::Parse {
            pos: start,
            msg: "malformed number",
        })
    }

    fn exponent(&mut self) -> Result<u32> {
        if self.peek() != Some(b'^') {
            return Ok(1);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer exponent"));
        }
        core::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or(Error::Parse {
                pos: start,
                msg: "exponent out of range",
            })
    }

    /// `[coef] factor*` with optional `*` between factors.
    fn term(&mut self) -> Result<(Vec<u32>, f64)> {
        let mut coef = 1.0;
        let mut e = vec![0u32, 0];
        let mut any = false;
        loop {
            match self.peek() {
                Some(b'0'..=b'9') | Some(b'.') => {
                    let v = self.number()?;
                    coef *= v.powi(self.exponent()? as i32);
                }
                Some(b'z') => {
                    self.pos += 1;
                    e[0] += self.exponent()?;
                }
                Some(b'w') => {
                    self.pos += 1;
                    e[1] += self.exponent()?;
                }
                _ => break,
            }
            any = true;
            if self.peek() == Some(b'*') {
                self.pos += 1;
                if !matches!(self.peek(), Some(b'0'..=b'9' | b'.' | b'z' | b'w')) {
                    return Err(self.err("expected a factor after '*'"));
                }
            }
        }
        if !any {
            return Err(self.err("expected a term"));
        }
        Ok((e, coef))
    }

    fn poly(&mut self) -> Result<HomPoly> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if let Some(b @ (b'+' | b'-')) = self.peek() {
            sign = if b == b'-' { -1.0 } else { 1.0 };
            self.pos += 1;
        }
        loop {
            self.skip_ws();
            let at = self.pos;
            let (e, c) = self.term()?;
            let d = e[0] + e[1];
            if let Some((e0, _)) = terms.first() {
                let e0: &Vec<u32> = e0;
                if e0[0] + e0[1] != d {
                    return Err(Error::Parse {
                        pos: at,
                        msg: "terms of different degrees",
                    });
                }
            }
            terms.push((e, C64::new(sign * c, 0.0)));
            match self.peek() {
                None => break,
                Some(b'+') => sign = 1.0,
                Some(b'-') => sign = -1.0,
                Some(_) => return Err(self.err("unexpected character")),
            }
            self.pos += 1;
        }
        HomPoly::new(1, terms).map_err(|e| match e {
            Error::AllZero => Error::Parse {
                pos: 0,
                msg: "polynomial is zero",
            },
            e => e,
        })
    }
}

/// Unit representative of `[x0 : x1]`.
fn unit(x0: C64, x1: C64) -> [C64; 2] {
    let q = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
    [x0 / q, x1 / q]
}

/// Unit representatives of the owned grid nodes of `region` (all owned
/// nodes for `None`).
pub fn region_cloud(region: Option<&SetSpec>, grid: &ProjectiveGrid) -> Vec<[C64; 2]> {
    let nodes = region.map(|s| s.rasterize_projective(grid));
    let mut out = Vec::new();
    for c in 0..2 {
        let g = grid.chart(c);
        for k in 0..g.node_count() {
            let z = g.point(k);
            if ProjectiveGrid::owns(c, z) && nodes.as_ref().map_or(true, |n| n.bits[c][k]) {
                let (x0, x1) = pair_of(c, z);
                out.push(unit(x0, x1));
            }
        }
    }
    out
}

/// `(cos θ, e^{iφ} sin θ)` for `n_theta` angles in `[0, π/2]` and `n_phi`
/// phases; these cover every line of ℂ² up to a unimodular factor.
pub fn sphere_cloud(n_theta: usize, n_phi: usize) -> Vec<[C64; 2]> {
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let th = core::f64::consts::FRAC_PI_2 * i as f64 / (n_theta - 1).max(1) as f64;
        let phases = if i == 0 || i + 1 == n_theta { 1 } else { n_phi };
        for j in 0..phases {
            let ph = core::f64::consts::TAU * j as f64 / n_phi as f64;
            out.push([C64::new(th.cos(), 0.0), C64::from_polar(th.sin(), ph)]);
        }
    }
    out
}

/// `sup |s|` over the FS unit-sphere norm on the owned nodes of `region`.
pub fn section_supnorm(s: &HomPoly, region: Option<&SetSpec>, grid: &ProjectiveGrid) -> Result<f64> {
    if s.dim() != 1 {
        return Err(Error::InvalidArgument("sections are evaluated on ℂℙ¹"));
    }
    let cloud = region_cloud(region, grid);
    if cloud.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(cloud.iter().map(|x| s.eval(x).norm()).fold(0.0, f64::max))
}

/// `log(r^a (1+r²)^{−N/2})`, the log-norm of `x0^a x1^{N−a}` at `|z| = r`.
fn monomial_log_norm(a: u32, n: u32, r: f64) -> f64 {
    let (a, n) = (a as f64, n as f64);
    if r == 0.0 {
        return if a == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if r.is_infinite() {
        return if a == n { 0.0 } else { f64::NEG_INFINITY };
    }
    a * r.ln() - 0.5 * n * r.mul_add(r, 1.0).ln()
}

/// Exact `log sup` of `x0^a x1^{N−a}` over a circled set.
fn monomial_log_sup_radial(a: u32, n: u32, set: &RadialSet) -> f64 {
    let peak = if a == n {
        f64::INFINITY
    } else {
        (a as f64 / (n - a) as f64).sqrt()
    };
    set.intervals()
        .iter()
        .map(|&(lo, hi)| monomial_log_norm(a, n, peak.clamp(lo, hi)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `log sup_X` of `x0^a x1^{N−a}`.
fn monomial_log_sup_x(a: u32, n: u32) -> f64 {
    let t = |k: u32| if k == 0 { 0.0 } else { 0.5 * k as f64 * (k as f64 / n as f64).ln() };
    t(a) + t(n - a)
}

/// `log sup` of `x0^a x1^{N−a}` over a cloud.
fn monomial_log_sup_cloud(a: u32, n: u32, logs: &[(f64, f64)]) -> f64 {
    let (fa, fb) = (a as f64, (n - a) as f64);
    logs.iter()
        .map(|&(l0, l1)| {
            let u = if a == 0 { 0.0 } else { fa * l0 };
            let v = if a == n { 0.0 } else { fb * l1 };
            u + v
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn cloud_logs(cloud: &[[C64; 2]]) -> Vec<(f64, f64)> {
    cloud.iter().map(|x| (x[0].norm().ln(), x[1].norm().ln())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Monomials for circled sets, subgradient search otherwise.
    Auto,
    Monomial,
    Subgradient { starts: usize, steps: usize },
}

pub const DEFAULT_STARTS: usize = 32;
pub const DEFAULT_STEPS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct TchebResult {
    /// `M_N(K)`: best `sup_K |s| / sup_X |s|` found.
    pub value: f64,
    pub optimizer: HomPoly,
}

/// Monomial values `x0^a x1^{N−a}` at each cloud point, row-major by point.
fn monomial_table(cloud: &[[C64; 2]], n: u32) -> Vec<C64> {
    let mut out = Vec::with_capacity(cloud.len() * (n as usize + 1));
    for x in cloud {
        let p0: Vec<C64> = (0..=n).map(|a| x[0].powu(a)).collect();
        let p1: Vec<C64> = (0..=n).map(|b| x[1].powu(b)).collect();
        for a in 0..=n as usize {
            out.push(p0[a] * p1[n as usize - a]);
        }
    }
    out
}

/// `log sup` of `|Σ c_a m_a|` over a table and the gradient of `log |s|`
/// at the maximizer, with respect to the conjugate coefficients.
fn log_sup_with_grad(table: &[C64], c: &[C64]) -> (f64, Vec<C64>) {
    let d = c.len();
    let mut best = (f64::NEG_INFINITY, 0, C64::new(0.0, 0.0));
    for (p, row) in table.chunks_exact(d).enumerate() {
        let s: C64 = row.iter().zip(c).map(|(m, a)| m * a).sum();
        let v = s.norm_sqr();
        if v > best.0 {
            best = (v, p, s);
        }
    }
    let (v, p, s) = best;
    let row = &table[p * d..(p + 1) * d];
    let grad = row.iter().map(|m| m.conj() * s / v).collect();
    (0.5 * v.ln(), grad)
}

/// Projected subgradient descent of `objective` on the unit sphere of
/// coefficient space, from `init` and `starts − 1` random points.
fn minimize_on_sphere(
    dim: usize,
    init: &[C64],
    starts: usize,
    steps: usize,
    seed: u64,
    objective: impl Fn(&[C64]) -> (f64, Vec<C64>),
) -> (f64, Vec<C64>) {
    let normalize = |c: &mut [C64]| {
        let n = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 {
            c.iter_mut().for_each(|x| *x /= n);
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::INFINITY, init.to_vec());
    for start in 0..starts.max(1) {
        let mut c: Vec<C64> = if start == 0 {
            init.to_vec()
        } else {
            (0..dim)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        };
        normalize(&mut c);
        for k in 1..=steps {
            let (v, g) = objective(&c);
            if v < best.0 {
                best = (v, c.clone());
            }
            let gn = g.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if !(gn > 0.0) || !v.is_finite() {
                break;
            }
            let eta = 0.5 / (k as f64).sqrt();
            for (x, gx) in c.iter_mut().zip(&g) {
                *x -= gx * (eta / gn);
            }
            normalize(&mut c);
        }
        let (v, _) = objective(&c);
        if v < best.0 {
            best = (v, c);
        }
    }
    best
}

fn monomial_poly(a: u32, n: u32) -> HomPoly {
    HomPoly::monomial(vec![a, n - a]).expect("nonzero monomial")
}

/// Log-sup of each monomial over `K`: exact for circled sets, else from the
/// grid cloud.
fn monomial_log_sups(k: &SetSpec, n: u32, grid: &ProjectiveGrid) -> Result<Vec<f64>> {
    if k.is_circled() {
        let r = k.radial_set()?;
        if r.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok((0..=n).map(|a| monomial_log_sup_radial(a, n, &r)).collect())
    } else {
        let cloud = region_cloud(Some(k), grid);
        if cloud.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let logs = cloud_logs(&cloud);
        Ok((0..=n).map(|a| monomial_log_sup_cloud(a, n, &logs)).collect())
    }
}

/// Sphere cloud used to estimate `sup_X` in searches over general forms.
fn search_sphere() -> Vec<[C64; 2]> {
    sphere_cloud(97, 64)
}

/// `M_N(K) = inf { sup_K |s| : sup_X |s| = 1 }` over forms of degree `n`.
///
/// Circled sets default to monomials, which are optimal there. General sets
/// run the subgradient search on grid and sphere clouds, started from the
/// best monomial, and return the best value found.
pub fn tcheb_constant(k: &SetSpec, n: u32, strategy: Strategy, grid: &ProjectiveGrid) -> Result<TchebResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("degree must be positive"));
    }
    let sups = monomial_log_sups(k, n, grid)?;
    let (a_best, log_best) = (0..=n)
        .map(|a| (a, sups[a as usize] - monomial_log_sup_x(a, n)))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let monomial = TchebResult {
        value: log_best.exp(),
        optimizer: monomial_poly(a_best, n),
    };
    let (starts, steps) = match strategy {
        Strategy::Monomial => return Ok(monomial),
        Strategy::Auto if k.is_circled() => return Ok(monomial),
        Strategy::Auto => (DEFAULT_STARTS, DEFAULT_STEPS),
        Strategy::Subgradient { starts, steps } => (starts, steps),
    };
    let region = monomial_table(&region_cloud(Some(k), grid), n);
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let sphere = monomial_table(&search_sphere(), n);
    let mut init = vec![C64::new(0.0, 0.0); n as usize + 1];
    init[a_best as usize] = C64::new(1.0, 0.0);
    let (v, c) = minimize_on_sphere(n as usize + 1, &init, starts, steps, 0x5eed ^ n as u64, |c| {
        let (a, ga) = log_sup_with_grad(&region, c);
        let (b, gb) = log_sup_with_grad(&sphere, c);
        (a - b, ga.iter().zip(&gb).map(|(x, y)| x - y).collect())
    });
    // On a non-circled set the monomial sups above come from the same grid
    // cloud; the searched value also uses a sampled `sup_X`, so keep the
    // smaller of the two only when the search produced a real improvement.
    if v.exp() < monomial.value {
        Ok(TchebResult {
            value: v.exp(),
            optimizer: HomPoly::binary(&c)?,
        })
    } else {
        Ok(monomial)
    }
}

/// `(N, M_N, M_N^{1/N})` for `N = 1, 2, 4, …, n_max`.
pub fn chebyshev_table(k: &SetSpec, n_max: u32, strategy: Strategy, grid: &ProjectiveGrid) -> Result<Vec<(u32, f64, f64)>> {
    let mut out = Vec::new();
    let mut n = 1;
    while n <= n_max.max(1) {
        let m = tcheb_constant(k, n, strategy, grid)?.value;
        out.push((n, m, m.powf(1.0 / n as f64)));
        n *= 2;
    }
    Ok(out)
}

/// `T′(K) = min_N M_N^{1/N}` over `N = 1, 2, 4, …, n_max`; 0 for empty sets.
pub fn alexander_from_sections(k: &SetSpec, n_max: u32, grid: &ProjectiveGrid) -> Result<f64> {
    match chebyshev_table(k, n_max, Strategy::Auto, grid) {
        Ok(rows) => Ok(rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min)),
        Err(Error::EmptyRegion) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Sphere resolution for hull radii of circled sets, where phases do not
/// matter.
const HULL_THETA: usize = 4097;

/// Largest `r` with `r·𝔹² ⊂ K̂₀`, computed as `inf_P (sup_{K₀}|P| / sup_{∂𝔹}|P|)^{1/deg P}`
/// on sample clouds of the unit sphere.
///
/// `K₀` is the set of unit vectors over `K`. Circled sets use monomials of
/// every degree up to `n_max`; other sets search general forms of degrees
/// `1, 2, 4, …, n_max`.
pub fn hull_radius(k: &SetSpec, n_max: u32) -> Result<f64> {
    let circled = k.is_circled();
    let sphere = if circled {
        sphere_cloud(HULL_THETA, 1)
    } else {
        sphere_cloud(129, 96)
    };
    let k0: Vec<[C64; 2]> = sphere.iter().copied().filter(|x| k.contains_pair(x[0], x[1])).collect();
    if k0.is_empty() {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    if circled {
        let lk = cloud_logs(&k0);
        let ls = cloud_logs(&sphere);
        for n in 1..=n_max.max(1) {
            for a in 0..=n {
                let r = (monomial_log_sup_cloud(a, n, &lk) - monomial_log_sup_cloud(a, n, &ls)) / n as f64;
                best = best.min(r.exp());
            }
        }
        return Ok(best);
    }
    let mut n = 1;
    while n <= n_max.max(1) {
        let kt = monomial_table(&k0, n);
        let st = monomial_table(&sphere, n);
        let lk = cloud_logs(&k0);
        let ls = cloud_logs(&sphere);
        let (a0, v0) = (0..=n)
            .map(|a| (a, monomial_log_sup_cloud(a, n, &lk) - monomial_log_sup_cloud(a, n, &ls)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let mut init = vec![C64::new(0.0, 0.0); n as usize + 1];
        init[a0 as usize] = C64::new(1.0, 0.0);
        let (v, _) = minimize_on_sphere(n as usize + 1, &init, DEFAULT_STARTS, DEFAULT_STEPS, 0x4011 ^ n as u64, |c| {
            let (a, ga) = log_sup_with_grad(&kt, c);
            let (b, gb) = log_sup_with_grad(&st, c);
            (a - b, ga.iter().zip(&gb).map(|(x, y)| x - y).collect())
        });
        best = best.min((v.min(v0) / n as f64).exp());
        n *= 2;
    }
    Ok(best)
}

/// `∫ log |s| dμ` on the unit sphere, from the nodes `μ` charges.
///
/// A node whose neighbours are also charged stands for its cell; if `s`
/// vanishes there, the cell mean of `log |s|` from four interior points is
/// used instead of `-∞`. Isolated atoms are point masses.
fn mu_log_mean(mu: &DiscreteMeasure, s: impl Fn(&[C64; 2]) -> C64) -> f64 {
    let total = mu.total();
    let h = mu.grid.spacing();
    let m = mu.grid.resolution;
    let mut acc = 0.0;
    for c in 0..2 {
        let g = mu.grid.chart(c);
        let w = &mu.weights[c];
        for (k, wk) in w.iter().enumerate() {
            if *wk == 0.0 {
                continue;
            }
            let z = g.point(k);
            let (x0, x1) = pair_of(c, z);
            let mut v = s(&unit(x0, x1)).norm().ln();
            let diffuse = !g.is_edge(k) && [k - 1, k + 1, k - m, k + m].iter().any(|&j| w[j] != 0.0);
            if v == f64::NEG_INFINITY && diffuse {
                let q = 0.25 * h;
                v = [C64::new(q, q), C64::new(-q, q), C64::new(q, -q), C64::new(-q, -q)]
                    .iter()
                    .map(|d| {
                        let (y0, y1) = pair_of(c, z + d);
                        s(&unit(y0, y1)).norm().ln()
                    })
                    .sum::<f64>()
                    / 4.0;
            }
            acc += wk * v;
        }
    }
    acc / total
}

/// `M^{μ,A}_N(K) = inf { sup_K |s| : (1/N)∫ log |s| dμ = A }`.
///
/// With the per-degree mean, products of normalized sections are normalized
/// at the summed degree.
pub fn mu_a_tcheb(k: &SetSpec, n: u32, mu: &DiscreteMeasure, a_level: f64, grid: &ProjectiveGrid) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("degree must be positive"));
    }
    if !(mu.total() > 0.0) {
        return Err(Error::NotProbability(mu.total()));
    }
    let sups = monomial_log_sups(k, n, grid)?;
    let nn = n as f64;
    let mut best = f64::INFINITY;
    for a in 0..=n {
        let mean = mu_log_mean(mu, |x| x[0].powu(a) * x[1].powu(n - a));
        if mean.is_finite() {
            best = best.min(sups[a as usize] + nn * a_level - mean);
        }
    }
    if !k.is_circled() {
        // μ-weighted nodes as a cloud, with weights for the mean.
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        let total = mu.total();
        for c in 0..2 {
            let g = mu.grid.chart(c);
            for (kk, w) in mu.weights[c].iter().enumerate() {
                if *w != 0.0 {
                    let (x0, x1) = pair_of(c, g.point(kk));
                    pts.push(unit(x0, x1));
                    wts.push(w / total);
                }
            }
        }
        let region = monomial_table(&region_cloud(Some(k), grid), n);
        let mt = monomial_table(&pts, n);
        let d = n as usize + 1;
        let init: Vec<C64> = (0..d).map(|_| C64::new(1.0, 0.0)).collect();
        let (v, _) = minimize_on_sphere(d, &init, DEFAULT_STARTS / 4, DEFAULT_STEPS, 0x3a ^ n as u64, |c| {
            let (a, mut g) = log_sup_with_grad(&region, c);
            let mut mean = 0.0;
            for (row, w) in mt.chunks_exact(d).zip(&wts) {
                let s: C64 = row.iter().zip(c).map(|(m, x)| m * x).sum();
                let q = s.norm_sqr();
                mean += w * 0.5 * q.ln();
                for (gx, m) in g.iter_mut().zip(row) {
                    *gx -= m.conj() * s * (w / q);
                }
            }
            (a + nn * a_level - mean, g)
        });
        if v.is_finite() {
            best = best.min(v);
        }
    }
    if best.is_finite() {
        Ok(best.exp())
    } else {
        Err(Error::NormalizationInfeasible)
    }
}

/// `(1/N) log |s|` for a degree-`N` form: ω-psh, `-∞` on the zeros of `s`.
pub fn section_potential(s: &HomPoly, grid: &ProjectiveGrid) -> QpshField {
    let n = s.degree() as f64;
    QpshField::from_fn(*grid, |x0, x1| {
        let v = s.eval(&unit(x0, x1)).norm();
        v.ln() / n
    })
    .certify()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BergmanResult {
    pub field: QpshField,
    pub kept: usize,
    pub dropped: usize,
    /// Depth at which the input was clipped.
    pub clip_depth: f64,
}

/// The input is clipped at `max(−30, −BERGMAN_EXP_RANGE / (2(j − j0)))` so
/// the weight `exp(−2(j − j0)φ)` stays inside `f64`.
const BERGMAN_EXP_RANGE: f64 = 600.0;

/// `φ_{j,j0} = (1/2j) log( Σ_l |σ_l|² / dim ) − h` for an orthonormal basis
/// `σ_l` of degree-`j` sections under `∫ |s|² exp(−2[(j − j0)φ]) dV_FS`.
///
/// Dividing by `dim = j + 1` makes `φ ≡ 0` map to 0. The Gram matrix is
/// assembled with the smooth FS quadrature and diagonally equilibrated
/// before the eigen-decomposition.
pub fn bergman_regularize(phi: &QpshField, j: u32, j0: u32) -> Result<BergmanResult> {
    if j <= j0 {
        return Err(Error::InvalidArgument("j must exceed j0"));
    }
    if !phi.claimed() {
        return Err(Error::NotCertified(phi.defect().worst_margin));
    }
    let sup = phi.sup();
    if sup > 1e-9 {
        return Err(Error::PositiveSup(sup));
    }
    let grid = *phi.grid();
    let jj = (j - j0) as f64;
    let depth = (-30.0f64).max(-BERGMAN_EXP_RANGE / (2.0 * jj));
    let d = j as usize + 1;
    // Basis orthonormal for φ ≡ 0: √((j+1) C(j,a)) x0^a x1^{j−a}.
    let mut binom = vec![1.0f64; d];
    for a in 1..d {
        binom[a] = binom[a - 1] * (j as f64 - (a - 1) as f64) / a as f64;
    }
    let scale: Vec<f64> = binom.iter().map(|b| (d as f64 * b).sqrt()).collect();
    let quad = fs_smooth_quadrature(&grid);
    let basis = |x: [C64; 2]| -> Vec<C64> {
        let p0: Vec<C64> = (0..d).map(|a| x[0].powu(a as u32)).collect();
        let p1: Vec<C64> = (0..d).map(|b| x[1].powu(b as u32)).collect();
        (0..d).map(|a| p0[a] * p1[d - 1 - a] * scale[a]).collect()
    };
    let mut gram = vec![C64::new(0.0, 0.0); d * d];
    for c in 0..2 {
        let g = grid.chart(c);
        let vals = phi.values(c);
        for k in 0..g.node_count() {
            let q = quad[c][k];
            if q == 0.0 {
                continue;
            }
            let (x0, x1) = pair_of(c, g.point(k));
            let e = basis(unit(x0, x1));
            let w = q * (-2.0 * jj * vals[k].max(depth)).exp();
            for a in 0..d {
                let ea = e[a] * w;
                for b in a..d {
                    gram[a * d + b] += ea * e[b].conj();
                }
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            gram[a * d + b] = gram[b * d + a].conj();
        }
    }
    let diag: Vec<f64> = (0..d).map(|a| gram[a * d + a].re).collect();
    if diag.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::GramSingular);
    }
    let inv_sqrt: Vec<f64> = diag.iter().map(|x| 1.0 / x.sqrt()).collect();
    for a in 0..d {
        for b in 0..d {
            gram[a * d + b] *= inv_sqrt[a] * inv_sqrt[b];
        }
    }
    let eig = hermitian_eigen(&gram, d, GRAM_EIG_THRESHOLD);
    if eig.pairs.is_empty() {
        return Err(Error::GramSingular);
    }
    let mut values = [vec![0.0; grid.nodes_per_chart()], vec![0.0; grid.nodes_per_chart()]];
    for (c, out) in values.iter_mut().enumerate() {
        let g = grid.chart(c);
        for (k, o) in out.iter_mut().enumerate() {
            let (x0, x1) = pair_of(c, g.point(k));
            let mut e = basis(unit(x0, x1));
            for (x, s) in e.iter_mut().zip(&inv_sqrt) {
                *x *= *s;
            }
            // `e` holds `σ(x)` for the basis, so `v = conj(e)` pairs with `u*`.
            let v: Vec<C64> = e.iter().map(|x| x.conj()).collect();
            *o = (eig.inverse_form(&v) / d as f64).ln() / (2.0 * j as f64);
        }
    }
    Ok(BergmanResult {
        field: QpshField::from_charts(grid, values, false)?.certify(),
        kept: eig.pairs.len(),
        dropped: eig.dropped,
        clip_depth: depth,
    })
}

/// Fitted constants of the two-sided Bergman estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BergmanSandwich {
    /// `log C₄` in `φ_j ≥ (1 − j0/j)φ − log C₄ / 2j`.
    pub log_c4: f64,
    /// `C₃` in `φ_j ≤ (1 − j0/j) sup_{B(x,r)} φ + (C₃ − log r)/j`.
    pub c3: f64,
    pub r: f64,
}

/// Smallest constants making both estimates hold at every owned node, with
/// `φ` clipped as in [`bergman_regularize`] and the local sup taken over
/// the chart square of half-width `r`.
pub fn bergman_sandwich(phi: &QpshField, out: &BergmanResult, j: u32, j0: u32, r: f64) -> Result<BergmanSandwich> {
    let grid = *phi.grid();
    if *out.field.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let t = 1.0 - j0 as f64 / j as f64;
    let jf = j as f64;
    let m = grid.resolution;
    let w = (r / grid.spacing()).ceil() as usize;
    let mut log_c4 = f64::NEG_INFINITY;
    let mut c3 = f64::NEG_INFINITY;
    for c in 0..2 {
        let vals: Vec<f64> = phi.values(c).iter().map(|v| v.max(out.clip_depth)).collect();
        // Separable max filter.
        let mut rows = vec![f64::NEG_INFINITY; m * m];
        for y in 0..m {
            for x in 0..m {
                let (lo, hi) = (x.saturating_sub(w), (x + w).min(m - 1));
                rows[y * m + x] = (lo..=hi).map(|i| vals[y * m + i]).fold(f64::NEG_INFINITY, f64::max);
            }
        }
        let g = grid.chart(c);
        for k in 0..g.node_count() {
            if !ProjectiveGrid::owns(c, g.point(k)) {
                continue;
            }
            let (x, y) = (k % m, k / m);
            let (lo, hi) = (y.saturating_sub(w), (y + w).min(m - 1));
            let local = (lo..=hi).map(|i| rows[i * m + x]).fold(f64::NEG_INFINITY, f64::max);
            let o = out.field.values(c)[k];
            log_c4 = log_c4.max(2.0 * jf * (t * vals[k] - o));
            c3 = c3.max(jf * (o - t * local) + r.ln());
        }
    }
    Ok(BergmanSandwich { log_c4, c3, r })
}
