//! Projected successive over-relaxation on the two-chart atlas.
//!
//! Unknowns are the lifted potentials `ψ_c = φ + ½log(1 + |z|²)` on the
//! interior nodes of both chart boxes. Box-edge nodes of one chart are
//! Dirichlet data interpolated from the other chart after every sweep
//! (alternating Schwarz with a wide overlap). The fixed point is the largest
//! discrete subharmonic function below the obstacle.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::geometry::{fs_potential, swap_chart, ProjectiveGrid};
use crate::{Error, Result};

/// Dirichlet data for the edge of one chart, read from the other chart.
struct EdgeCoupling {
    /// `(edge node, other-chart stencil, constant offset)`.
    rows: Vec<(usize, [(usize, f64); 4], f64)>,
}

impl EdgeCoupling {
    fn new(grid: &ProjectiveGrid, chart: usize) -> Self {
        let g = grid.chart(chart);
        let other = grid.chart(1 - chart);
        let mut rows = Vec::new();
        for k in 0..g.node_count() {
            if !g.is_edge(k) {
                continue;
            }
            let z = g.point(k);
            let w = swap_chart(z);
            let st = other.bilinear(w).expect("box edge maps inside the other box");
            // ψ_c(z) = φ(w) + h(z) with φ(w) ≈ Σ ω_j (ψ_o,j − h(w_j)).
            let off = fs_potential(z) - st.iter().map(|&(j, wt)| wt * fs_potential(other.point(j))).sum::<f64>();
            rows.push((k, st, off));
        }
        Self { rows }
    }

    fn apply(&self, target: &mut [f64], source: &[f64], upper: &[f64]) {
        for (k, st, off) in &self.rows {
            let v = st.iter().map(|&(j, w)| w * source[j]).sum::<f64>() + off;
            target[*k] = v.min(upper[*k]);
        }
    }
}

/// Non-uniform stencils at free nodes next to an obstacle boundary that
/// falls between grid nodes.
pub(crate) struct Cuts {
    slot: Vec<u32>,
    /// Weights on the `[k−1, k+1, k−M, k+M]` neighbours and a constant
    /// standing for the boundary values.
    rows: Vec<([f64; 4], f64)>,
}

impl Cuts {
    pub fn none(nodes: usize) -> Self {
        Self {
            slot: alloc::vec![u32::MAX; nodes],
            rows: Vec::new(),
        }
    }

    /// Adds node `k` whose update is `Σ w_d ψ_d + c`.
    pub fn push(&mut self, k: usize, weights: [f64; 4], c: f64) {
        self.slot[k] = self.rows.len() as u32;
        self.rows.push((weights, c));
    }

    #[inline]
    fn average(&self, psi: &[f64], k: usize, m: usize) -> f64 {
        let s = self.slot[k];
        if s == u32::MAX {
            0.25 * (psi[k - 1] + psi[k + 1] + psi[k - m] + psi[k + m])
        } else {
            let (w, c) = &self.rows[s as usize];
            w[0] * psi[k - 1] + w[1] * psi[k + 1] + w[2] * psi[k - m] + w[3] * psi[k + m] + c
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SolveStats {
    pub sweeps: usize,
    pub residual: f64,
    pub polar: bool,
}

pub(crate) struct Options {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Stop with `polar = true` once `sup φ` exceeds this.
    pub polar_threshold: Option<f64>,
}

pub(crate) fn optimal_omega(resolution: usize) -> f64 {
    2.0 / (1.0 + (core::f64::consts::PI / (resolution - 1) as f64).sin())
}

/// One projected SOR sweep over the interior of a chart; returns the
/// largest `|min(avg, U) − ψ|` seen.
fn sweep(psi: &mut [f64], upper: &[f64], cuts: &Cuts, m: usize, omega: f64) -> f64 {
    let mut res: f64 = 0.0;
    for j in 1..m - 1 {
        let row = j * m;
        for k in row + 1..row + m - 1 {
            let avg = cuts.average(psi, k, m);
            let u = upper[k];
            let old = psi[k];
            res = res.max((avg.min(u) - old).abs());
            psi[k] = (old + omega * (avg - old)).min(u);
        }
    }
    res
}

fn sup_phi(grid: &ProjectiveGrid, psi: &[Vec<f64>; 2]) -> f64 {
    let mut s = f64::NEG_INFINITY;
    for (c, p) in psi.iter().enumerate() {
        let g = grid.chart(c);
        for (k, v) in p.iter().enumerate() {
            let z = g.point(k);
            if ProjectiveGrid::owns(c, z) {
                s = s.max(v - fs_potential(z));
            }
        }
    }
    s
}

/// Solves the two-chart obstacle problem `ψ ≤ upper`, starting from `psi`.
pub(crate) fn solve_obstacle(
    grid: &ProjectiveGrid,
    upper: &[Vec<f64>; 2],
    cuts: &[Cuts; 2],
    psi: &mut [Vec<f64>; 2],
    opts: &Options,
) -> Result<SolveStats> {
    let m = grid.resolution;
    let couple = [EdgeCoupling::new(grid, 0), EdgeCoupling::new(grid, 1)];
    let omega = optimal_omega(m);
    let mut residual = f64::INFINITY;
    for s in 1..=opts.max_sweeps {
        let [p0, p1] = psi;
        let r0 = sweep(p0, &upper[0], &cuts[0], m, omega);
        couple[1].apply(p1, p0, &upper[1]);
        let r1 = sweep(p1, &upper[1], &cuts[1], m, omega);
        couple[0].apply(p0, p1, &upper[0]);
        residual = r0.max(r1);
        if residual <= opts.tol {
            return Ok(SolveStats {
                sweeps: s,
                residual,
                polar: false,
            });
        }
        if let Some(t) = opts.polar_threshold {
            if s % 64 == 0 && sup_phi(grid, psi) > t {
                return Ok(SolveStats {
                    sweeps: s,
                    residual,
                    polar: true,
                });
            }
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(Error::ConvergenceFailure {
        what: "projected relaxation",
        iterations: opts.max_sweeps,
        residual,
    })
}

/// SOR for the discrete Laplace equation on the `free` nodes of one chart;
/// all other nodes are held fixed.
pub(crate) fn solve_dirichlet(psi: &mut [f64], free: &[bool], m: usize, tol: f64, max_sweeps: usize) -> Result<usize> {
    let nodes: Vec<usize> = (0..psi.len()).filter(|&k| free[k]).collect();
    // The replaced region is small; size the relaxation by its extent.
    let extent = {
        let (mut lo, mut hi) = (m, 0);
        for &k in &nodes {
            lo = lo.min(k % m);
            hi = hi.max(k % m);
        }
        hi.saturating_sub(lo) + 3
    };
    let omega = optimal_omega(extent.max(3));
    let mut residual = f64::INFINITY;
    for s in 1..=max_sweeps {
        residual = 0.0;
        for &k in &nodes {
            let avg = 0.25 * (psi[k - 1] + psi[k + 1] + psi[k - m] + psi[k + m]);
            let old = psi[k];
            residual = residual.max((avg - old).abs());
            psi[k] = old + omega * (avg - old);
        }
        if residual <= tol {
            return Ok(s);
        }
    }
    Err(Error::ConvergenceFailure {
        what: "Dirichlet relaxation",
        iterations: max_sweeps,
        residual,
    })
}

/// Prolongs a coarse two-chart `φ` to the grid with `2M − 1` nodes per axis.
pub(crate) fn prolong(coarse: &ProjectiveGrid, phi: &[Vec<f64>; 2], fine: &ProjectiveGrid) -> [Vec<f64>; 2] {
    let mc = coarse.resolution;
    let mf = fine.resolution;
    debug_assert_eq!(mf, 2 * mc - 1);
    [0, 1].map(|c| {
        let src = &phi[c];
        let mut out = alloc::vec![0.0; mf * mf];
        for j in 0..mf {
            for i in 0..mf {
                let (i0, j0) = (i / 2, j / 2);
                let (i1, j1) = ((i + 1) / 2, (j + 1) / 2);
                out[j * mf + i] = 0.25
                    * (src[j0 * mc + i0] + src[j0 * mc + i1] + src[j1 * mc + i0] + src[j1 * mc + i1]);
            }
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_obstacle_free_problem_keeps_fs_potential() {
        // With ψ ≤ h everywhere the largest subharmonic minorant is h itself.
        let grid = ProjectiveGrid::new(2.0, 33).unwrap();
        let upper = [0, 1].map(|c| {
            let g = grid.chart(c);
            (0..g.node_count()).map(|k| fs_potential(g.point(k))).collect::<Vec<_>>()
        });
        let mut psi = [0, 1].map(|c| upper[c].iter().map(|v| v - 1.0).collect::<Vec<_>>());
        let n = grid.nodes_per_chart();
        let stats = solve_obstacle(
            &grid,
            &upper,
            &[Cuts::none(n), Cuts::none(n)],
            &mut psi,
            &Options {
                tol: 1e-10,
                max_sweeps: 100_000,
                polar_threshold: None,
            },
        )
        .unwrap();
        assert!(!stats.polar);
        for c in 0..2 {
            for (a, b) in psi[c].iter().zip(&upper[c]) {
                assert!((a - b).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn dirichlet_reproduces_harmonic_data() {
        let m = 33;
        let f = |i: usize, j: usize| (i as f64) * 0.1 - (j as f64) * 0.05 + ((i * j) as f64) * 0.01;
        let mut psi = vec![0.0; m * m];
        let mut free = vec![false; m * m];
        for j in 0..m {
            for i in 0..m {
                psi[j * m + i] = f(i, j);
                if (5..20).contains(&i) && (7..25).contains(&j) {
                    free[j * m + i] = true;
                    psi[j * m + i] = 0.0;
                }
            }
        }
        solve_dirichlet(&mut psi, &free, m, 1e-13, 100_000).unwrap();
        for j in 0..m {
            for i in 0..m {
                assert!((psi[j * m + i] - f(i, j)).abs() < 1e-10);
            }
        }
    }
}
