//! The acceptance suite: fourteen numerical criteria, each with its own
//! tolerance, run by `verify --suite paper` and by the `acceptance` test.

use std::f64::consts::E;
use std::fmt::Write;
use std::time::Instant;

use kahlercap_core::capacities::{
    alexander_capacity, capacity_comparison, fit_lower_constant, ma_capacity, ma_capacity_bruteforce,
    sublevel_capacity_decay, toric_capacities,
};
use kahlercap_core::dynamics::{
    dyn_capacity_check, functional_residual, green_function, green_iterate, parse_map, step_potential_sup,
};
use kahlercap_core::envelopes::global_extremal;
use kahlercap_core::field::{kernel_potential, l1_fs_distance, random_certified_field, AtomicMeasure, QpshField};
use kahlercap_core::geometry::{pair_of, ProjectiveGrid, SetSpec};
use kahlercap_core::monge_ampere::{comparison_check, ma_measure};
use kahlercap_core::sections::{
    alexander_from_sections, bergman_regularize, bergman_sandwich, chebyshev_table, hull_radius, Strategy,
};
use kahlercap_core::toric::ball_extremal;
use kahlercap_core::{Result, C64};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    /// One line per criterion, stable apart from the timing.
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {}: {} [{:.1} s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

pub const CRITERIA: [(u8, &str, Check); 14] = [
    (1, "ball extremal function closed form", ball_extremal_closed_form),
    (2, "Alexander capacity of balls", alexander_of_balls),
    (3, "exterior disc has capacity one", exterior_disc_capacity),
    (4, "mass conservation", mass_conservation),
    (5, "capacity against brute force and toric oracle", capacity_oracles),
    (6, "comparison principle", comparison_principle),
    (7, "Chebyshev constants recover T", chebyshev_identity),
    (8, "hull radius equals T", hull_radius_of_balls),
    (9, "capacity comparison bounds", capacity_comparison_bounds),
    (10, "sublevel decay", sublevel_decay),
    (11, "Green function of the squaring map", green_of_squaring),
    (12, "capacity along orbits", dynamical_capacity),
    (13, "Bergman regularization", bergman_convergence),
    (14, "real projective line bracket", real_line_bracket),
];

/// Runs the selected criteria (all when `only` is empty), concurrently on
/// the current rayon pool; results come back in criterion order.
pub fn run_suite(only: &[u8]) -> Vec<Outcome> {
    CRITERIA
        .par_iter()
        .filter(|(id, _, _)| only.is_empty() || only.contains(id))
        .map(|&(id, name, check)| {
            let t = Instant::now();
            let (passed, detail) = match check() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            Outcome {
                id,
                name,
                passed,
                detail,
                seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn grid(b: f64, m: usize) -> ProjectiveGrid {
    ProjectiveGrid::new(b, m).expect("fixed valid grid")
}

fn ball_t(r: f64) -> f64 {
    r / (1.0 + r * r).sqrt()
}

/// `|z|` of a node, `+∞` at the point at infinity.
fn modulus(c: usize, z: C64) -> f64 {
    let (x0, x1) = pair_of(c, z);
    if x1.norm() == 0.0 {
        f64::INFINITY
    } else {
        (x0 / x1).norm()
    }
}

fn ball_extremal_closed_form() -> Result<(bool, String)> {
    let g = grid(8.0, 513);
    let mut ok = true;
    let mut d = String::new();
    for r in [0.5, 1.0, 2.0] {
        let t = Instant::now();
        let v = global_extremal(&SetSpec::ball(r), &g)?;
        let secs = t.elapsed().as_secs_f64();
        let mut err: f64 = 0.0;
        for c in 0..2 {
            let gc = g.chart(c);
            for k in 0..gc.node_count() {
                let want = ball_extremal(modulus(c, gc.point(k)), r);
                err = err.max((v.field.values(c)[k] - want).abs());
            }
        }
        ok &= err <= 2e-2 && secs <= 60.0;
        let _ = write!(d, "R={r}: sup err {err:.2e} in {secs:.1} s; ");
    }
    Ok((ok, d.trim_end_matches("; ").into()))
}

fn alexander_of_balls() -> Result<(bool, String)> {
    let g = grid(4.0, 257);
    let mut worst: f64 = 0.0;
    for r in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let t = alexander_capacity(&SetSpec::ball(r), &g)?;
        worst = worst.max((t / ball_t(r) - 1.0).abs());
    }
    Ok((worst <= 2e-2, format!("worst relative error {worst:.2e} (tol 2e-2)")))
}

fn exterior_disc_capacity() -> Result<(bool, String)> {
    let g = grid(4.0, 257);
    let set = SetSpec::ball((E * E - 1.0).sqrt()).complement();
    let cap = ma_capacity(&set, &g)?;
    Ok(((cap - 1.0).abs() <= 1e-2, format!("cap {cap:.5} (want 1 ± 1e-2)")))
}

fn mass_conservation() -> Result<(bool, String)> {
    let g = grid(2.0, 257);
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let f = random_certified_field(&g, 1000 + seed);
        worst = worst.max((ma_measure(&f)?.total() - 1.0).abs());
    }
    Ok((worst <= 5e-3, format!("worst |mass − 1| {worst:.2e} over 50 fields (tol 5e-3)")))
}

fn capacity_oracles() -> Result<(bool, String)> {
    let g = grid(4.0, 257);
    let mut ok = true;
    let mut d = String::new();
    for r in [0.5, 1.0, 2.0] {
        let set = SetSpec::ball(r);
        let cap = ma_capacity(&set, &g)?;
        let (toric, _) = toric_capacities(&set, 1)?;
        let lower = ma_capacity_bruteforce(&set, &g, 32, 7);
        let rel = (cap / toric - 1.0).abs();
        ok &= lower <= cap + 5e-3 && rel <= 5e-2;
        let _ = write!(d, "R={r}: cap {cap:.4}, toric {toric:.4}, brute {lower:.4}; ");
    }
    Ok((ok, d.trim_end_matches("; ").into()))
}

fn comparison_principle() -> Result<(bool, String)> {
    let g = grid(2.0, 257);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for s in 0..100 {
        let a = random_certified_field(&g, 5000 + 2 * s);
        let b = random_certified_field(&g, 5001 + 2 * s);
        let r = comparison_check(&a, &b)?;
        worst = worst.max(r.mass_psi - r.mass_phi);
        if !r.passed() {
            violations += 1;
        }
    }
    Ok((
        violations == 0,
        format!("{violations} violations over 100 pairs, worst excess {worst:.2e}"),
    ))
}

fn chebyshev_identity() -> Result<(bool, String)> {
    let g = grid(4.0, 257);
    let mut ok = true;
    let mut d = String::new();
    for r in [0.5, 1.0, 2.0] {
        let k = SetSpec::ball(r);
        let t = alexander_capacity(&k, &g)?;
        let a = alexander_from_sections(&k, 64, &g)?;
        let table = chebyshev_table(&k, 64, Strategy::Auto, &g)?;
        let rise = table.windows(2).map(|w| w[1].2 - w[0].2).fold(f64::NEG_INFINITY, f64::max);
        let rel = (a / t - 1.0).abs();
        ok &= rel <= 5e-2 && rise <= 1e-9;
        let _ = write!(d, "R={r}: rel {rel:.2e}, max rise {rise:.1e}; ");
    }
    Ok((ok, d.trim_end_matches("; ").into()))
}

fn hull_radius_of_balls() -> Result<(bool, String)> {
    let g = grid(4.0, 257);
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0] {
        let k = SetSpec::ball(r);
        let t = alexander_capacity(&k, &g)?;
        worst = worst.max((hull_radius(&k, 64)? / t - 1.0).abs());
    }
    Ok((worst <= 5e-2, format!("worst relative gap {worst:.2e} (tol 5e-2)")))
}

/// Radii of the ball sweep used for the capacity comparison.
pub const BALL_SWEEP: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn capacity_comparison_bounds() -> Result<(bool, String)> {
    let mut fits = Vec::new();
    let mut worst_slack = f64::INFINITY;
    for m in [129, 513] {
        let g = grid(4.0, m);
        let rows = BALL_SWEEP
            .iter()
            .map(|r| capacity_comparison(&SetSpec::ball(*r), &g))
            .collect::<Result<Vec<_>>>()?;
        worst_slack = worst_slack.min(rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min));
        fits.push(fit_lower_constant(&rows));
    }
    let drift = (fits[1] / fits[0] - 1.0).abs();
    let ok = worst_slack >= -5e-2 && fits.iter().all(|a| a.is_finite()) && drift <= 0.1;
    Ok((
        ok,
        format!(
            "min slack {worst_slack:.3e}; A = {:.4} (129), {:.4} (513), drift {drift:.2e}",
            fits[0], fits[1]
        ),
    ))
}

fn sublevel_decay() -> Result<(bool, String)> {
    let g = grid(2.0, 257);
    let fs_pole = QpshField::from_fn(g, |x0, x1| x1.norm().ln() - 0.5 * (x0.norm_sqr() + x1.norm_sqr()).ln());
    let dirac = kernel_potential(&g, &AtomicMeasure::dirac(C64::new(0.0, 0.0), C64::new(1.0, 0.0))?);
    let mut ok = true;
    let mut d = String::new();
    for (name, phi) in [("log|x1| − ½log‖x‖²", fs_pole), ("Dirac kernel", dirac)] {
        let rep = sublevel_capacity_decay(&phi.with_claim(true), &[1.0, 2.0, 3.0])?;
        let t_slack = rep.rows.iter().map(|r| r.t_bound - r.t_alex).fold(f64::INFINITY, f64::min);
        let c_slack = rep.rows.iter().map(|r| r.cap_bound - r.cap).fold(f64::INFINITY, f64::min);
        ok &= rep.passed(5e-2);
        let _ = write!(d, "{name}: T slack {t_slack:.3}, Cap slack {c_slack:.3}; ");
    }
    Ok((ok, d.trim_end_matches("; ").into()))
}

fn green_of_squaring() -> Result<(bool, String)> {
    let g = grid(2.0, 129);
    let f = parse_map("z^2, w^2")?;
    let closed = |x0: C64, x1: C64| x0.norm().max(x1.norm()).ln() - 0.5 * (x0.norm_sqr() + x1.norm_sqr()).ln();
    let sup_phi = step_potential_sup(&f);
    let mut tail_violations = 0;
    let mut err30: f64 = 0.0;
    for j in 0..=30u32 {
        let gj = green_iterate(&f, &g, j);
        let bound = sup_phi * 2f64.powi(-(j as i32)) / 0.5;
        for c in 0..2 {
            let gc = g.chart(c);
            for k in 0..gc.node_count() {
                let (x0, x1) = pair_of(c, gc.point(k));
                let e = (gj.values(c)[k] - closed(x0, x1)).abs();
                if e > bound {
                    tail_violations += 1;
                }
                if j == 30 {
                    err30 = err30.max(e);
                }
            }
        }
    }
    let res = green_function(&f, &g, 1e-8)?;
    let resid = functional_residual(&f, &res);
    Ok((
        err30 <= 1e-6 && resid <= 2e-8 && tail_violations == 0,
        format!("sup err at j=30 {err30:.2e}, residual {resid:.2e} (j={}), {tail_violations} tail-bound violations", res.j),
    ))
}

fn dynamical_capacity() -> Result<(bool, String)> {
    let g = grid(2.0, 257);
    let f = parse_map("z^2, w^2")?;
    let sets = [SetSpec::ball(0.5), SetSpec::ball(1.0), SetSpec::annulus(1.0, 2.0)];
    let rep = dyn_capacity_check(&f, &sets, 3, &g)?;
    let fit_ok = rep.alpha_fit > 0.0 && rep.alpha_fit < 1.0 && rep.holds_with(rep.alpha_fit);
    let theory_ok = rep.alpha_theory > 0.0 && rep.alpha_theory < 1.0 && rep.holds_with(rep.alpha_theory);
    Ok((
        fit_ok && theory_ok,
        format!(
            "fitted α {:.4} holds: {fit_ok}; theoretical α {:.4} holds: {theory_ok}",
            rep.alpha_fit, rep.alpha_theory
        ),
    ))
}

fn bergman_convergence() -> Result<(bool, String)> {
    let g = grid(2.0, 129);
    let phi = QpshField::from_fn(g, |x0, x1| -0.4 * x1.norm_sqr() / (x0.norm_sqr() + x1.norm_sqr())).certify();
    let mut dist = Vec::new();
    let (mut log_c4, mut c3) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for j in [4u32, 8, 16, 32] {
        let out = bergman_regularize(&phi, j, 2)?;
        dist.push(l1_fs_distance(&out.field, &phi)?);
        let s = bergman_sandwich(&phi, &out, j, 2, 0.25)?;
        log_c4 = log_c4.max(s.log_c4);
        c3 = c3.max(s.c3);
    }
    let monotone = dist.windows(2).all(|w| w[1] < w[0]);
    let ok = monotone && log_c4.is_finite() && c3.is_finite();
    Ok((
        ok,
        format!(
            "L1 distances {}; fitted log C4 {log_c4:.3}, C3 {c3:.3}",
            dist.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn real_line_bracket() -> Result<(bool, String)> {
    let g = grid(4.0, 257);
    let t = alexander_capacity(&SetSpec::RealLine, &g)?;
    let lo = 1.0 / (2.0 * (1.0 + 2f64.sqrt())) - 5e-2;
    Ok((t >= lo && t <= 1.0, format!("T = {t:.4} in [{lo:.4}, 1]")))
}
