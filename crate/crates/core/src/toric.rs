//! Radial reduction for circled sets.
//!
//! A circled ω-psh function is `φ(z) = u(s) − g(s)` with `s = log |z|`,
//! `g(s) = ½log(1 + e^{2s})` and `u` convex with slopes in `[0, 1]`. The
//! largest such `u` below an obstacle `G` is the Legendre biconjugate
//! restricted to slopes in `[0, 1]`:
//!
//! ```text
//! c(a) = sup_t (a·t − G(t)),    u(s) = sup_{0 ≤ a ≤ 1} (a·s − c(a)).
//! ```
//!
//! For `G = g` on finitely many intervals `c` has a closed form, so the
//! profile is exact up to a one-dimensional concave maximization. The
//! Monge–Ampère measure of a circled function in dimension `n` is
//! `d(u'ⁿ)` on the `s` line, whatever `n` is.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::geometry::{RadialSet, SetSpec};
use crate::{Error, Result};

/// `g(t) = ½log(1 + e^{2t})`, stable for large `|t|`.
#[inline]
pub fn g_of_s(t: f64) -> f64 {
    if t > 0.0 {
        t + 0.5 * (-2.0 * t).exp().ln_1p()
    } else {
        0.5 * (2.0 * t).exp().ln_1p()
    }
}

/// Sup over `t ∈ [t1, t2]` of `a·t − g(t)`, with the limits at `±∞`.
fn conj_on(a: f64, t1: f64, t2: f64) -> f64 {
    let t_star = if a <= 0.0 {
        f64::NEG_INFINITY
    } else if a >= 1.0 {
        f64::INFINITY
    } else {
        0.5 * (a / (1.0 - a)).ln()
    };
    let t = t_star.clamp(t1, t2);
    if t == f64::NEG_INFINITY {
        if a <= 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else if t == f64::INFINITY {
        if a >= 1.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        a * t - g_of_s(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    Relative,
    Global,
}

/// The radial profile of an extremal function of a circled set.
#[derive(Debug, Clone, PartialEq)]
pub struct ToricEnvelope {
    kind: EnvelopeKind,
    /// Constraint intervals in `s = log r`.
    pieces: Vec<(f64, f64)>,
}

/// Limits of the `s` range used for integrals; beyond it `u'` is within
/// `e^{-50}` of its limits.
const S_RANGE: f64 = 25.0;

impl ToricEnvelope {
    pub fn new(set: &RadialSet, kind: EnvelopeKind) -> Result<Self> {
        let pieces: Vec<(f64, f64)> = set.intervals().iter().map(|&(a, b)| (a.ln(), b.ln())).collect();
        let env = Self { kind, pieces };
        if kind == EnvelopeKind::Global && env.conj(0.5) == f64::NEG_INFINITY {
            return Err(Error::PolarSet);
        }
        Ok(env)
    }

    pub fn kind(&self) -> EnvelopeKind {
        self.kind
    }

    fn conj_set(&self, a: f64) -> f64 {
        self.pieces
            .iter()
            .map(|&(t1, t2)| conj_on(a, t1, t2))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `c(a)`.
    fn conj(&self, a: f64) -> f64 {
        match self.kind {
            EnvelopeKind::Global => self.conj_set(a),
            EnvelopeKind::Relative => {
                let free = conj_on(a, f64::NEG_INFINITY, f64::INFINITY);
                free.max(self.conj_set(a) + 1.0)
            }
        }
    }

    /// `(u(s), u'(s))` for finite `s`.
    pub fn profile(&self, s: f64) -> (f64, f64) {
        let f = |a: f64| a * s - self.conj(a);
        // Golden-section search of the concave function a ↦ a·s − c(a).
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..90 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = f(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = f(x1);
            }
        }
        let mut best = (f1, x1);
        for a in [0.0, 1.0, 0.5 * (lo + hi)] {
            let v = f(a);
            if v > best.0 {
                best = (v, a);
            }
        }
        best
    }

    /// `φ` at `s = log |z|`, including the limits at `s = ±∞`.
    pub fn phi_at_s(&self, s: f64) -> f64 {
        if s == f64::NEG_INFINITY {
            return -self.conj(0.0);
        }
        if s == f64::INFINITY {
            return -self.conj(1.0);
        }
        self.profile(s).0 - g_of_s(s)
    }

    /// `φ` at a chart-0 point of modulus `r`.
    pub fn phi_at_radius(&self, r: f64) -> f64 {
        self.phi_at_s(r.ln())
    }

    /// Samples `s` on `[−S, S]` with `count` points.
    fn s_grid(count: usize) -> impl Iterator<Item = f64> {
        (0..count).map(move |k| -S_RANGE + 2.0 * S_RANGE * k as f64 / (count - 1) as f64)
    }

    /// `sup φ` over `[0, ∞]`, from `10⁵` samples plus both ends.
    pub fn sup(&self) -> f64 {
        Self::s_grid(100_001)
            .map(|s| self.phi_at_s(s))
            .chain([self.phi_at_s(f64::NEG_INFINITY), self.phi_at_s(f64::INFINITY)])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `exp(−sup φ)` of a global envelope.
    pub fn alexander(&self) -> f64 {
        (-self.sup()).exp()
    }

    /// `∫ (−φ) d(u'ⁿ)`: for a relative envelope, the Monge–Ampère capacity.
    ///
    /// Integrated by parts as `−φ(∞) + ∫ u'ⁿ dφ`, since `u'` runs from 0 to
    /// 1 and may jump while `φ` is Lipschitz in `s`.
    pub fn capacity(&self, n: u32) -> f64 {
        let count = 100_001;
        let nodes: Vec<f64> = Self::s_grid(count).collect();
        let phi: Vec<f64> = nodes.iter().map(|&s| self.phi_at_s(s)).collect();
        let m = |s: f64| self.profile(s).1.clamp(0.0, 1.0).powi(n as i32);
        let mut acc = -self.phi_at_s(f64::INFINITY);
        acc += m(nodes[0]) * (phi[0] - self.phi_at_s(f64::NEG_INFINITY));
        acc += m(nodes[count - 1]) * (self.phi_at_s(f64::INFINITY) - phi[count - 1]);
        for k in 0..count - 1 {
            acc += m(0.5 * (nodes[k] + nodes[k + 1])) * (phi[k + 1] - phi[k]);
        }
        acc
    }

    /// Mass of `d(u'ⁿ)` on the `s` set where `pred(s)` holds.
    /// Masses at `s = ±∞` are attributed to the end points.
    pub fn ma_mass_where(&self, n: u32, pred: impl Fn(f64) -> bool) -> f64 {
        let count = 100_001;
        let m: Vec<(f64, f64)> = Self::s_grid(count)
            .map(|s| (s, self.profile(s).1.clamp(0.0, 1.0).powi(n as i32)))
            .collect();
        let mut acc = 0.0;
        if pred(f64::NEG_INFINITY) {
            acc += m[0].1;
        }
        if pred(f64::INFINITY) {
            acc += 1.0 - m[count - 1].1;
        }
        for w in m.windows(2) {
            if pred(0.5 * (w[0].0 + w[1].0)) {
                acc += w[1].1 - w[0].1;
            }
        }
        acc
    }
}

/// Radial profile of the relative or global extremal function of a circled set.
pub fn toric_envelope(set: &SetSpec, kind: EnvelopeKind) -> Result<ToricEnvelope> {
    if !set.is_circled() {
        return Err(Error::NotCircled);
    }
    ToricEnvelope::new(&set.radial_set()?, kind)
}

/// `max(log(r/R) + ½log(1+R²) − ½log(1+r²), 0)`: the global extremal
/// function of the disc `|z| ≤ R`.
pub fn ball_extremal(r: f64, radius: f64) -> f64 {
    if r <= radius {
        return 0.0;
    }
    if r.is_infinite() {
        return (0.5 * (1.0 + radius * radius).ln() - radius.ln()).max(0.0);
    }
    ((r / radius).ln() + 0.5 * (1.0 + radius * radius).ln() - 0.5 * (1.0 + r * r).ln()).max(0.0)
}
