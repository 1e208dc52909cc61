use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked, e.g. by dev-dependencies
use num_traits::Float;

use crate::{Error, Result, C64};

/// Uniform square grid on `[-b, b]²` in one affine chart of ℂℙ¹.
///
/// Node `(i, j)` sits at `x = -b + i·h`, `y = -b + j·h` and has flat index
/// `j·M + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartGrid {
    pub chart: usize,
    pub box_radius: f64,
    pub resolution: usize,
    pub spacing: f64,
}

impl ChartGrid {
    pub fn new(chart: usize, box_radius: f64, resolution: usize) -> Result<Self> {
        if resolution < 3 {
            return Err(Error::ResolutionTooSmall(resolution));
        }
        if !(box_radius > 0.0) || !box_radius.is_finite() {
            return Err(Error::InvalidGrid("box radius must be positive"));
        }
        if chart > 1 {
            return Err(Error::BadChart { chart, dim: 1 });
        }
        Ok(Self {
            chart,
            box_radius,
            resolution,
            spacing: 2.0 * box_radius / (resolution - 1) as f64,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.resolution * self.resolution
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.resolution + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.resolution, idx / self.resolution)
    }

    #[inline]
    pub fn axis(&self, i: usize) -> f64 {
        // Symmetric evaluation keeps the grid exactly symmetric about 0.
        let m = (self.resolution - 1) as f64;
        self.box_radius * (2.0 * i as f64 - m) / m
    }

    #[inline]
    pub fn coord(&self, i: usize, j: usize) -> C64 {
        C64::new(self.axis(i), self.axis(j))
    }

    #[inline]
    pub fn point(&self, idx: usize) -> C64 {
        let (i, j) = self.ij(idx);
        self.coord(i, j)
    }

    #[inline]
    pub fn is_edge(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        let m = self.resolution - 1;
        i == 0 || j == 0 || i == m || j == m
    }

    /// Lebesgue area of one cell.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// Bilinear stencil for a chart point: four node indices and weights, or
    /// `None` when the point lies outside the box.
    pub fn bilinear(&self, z: C64) -> Option<[(usize, f64); 4]> {
        let b = self.box_radius;
        let h = self.spacing;
        let fx = (z.re + b) / h;
        let fy = (z.im + b) / h;
        let m = (self.resolution - 1) as f64;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= m && fy <= m) {
            return None;
        }
        let i = (fx.floor() as usize).min(self.resolution - 2);
        let j = (fy.floor() as usize).min(self.resolution - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        Some([
            (self.index(i, j), (1.0 - tx) * (1.0 - ty)),
            (self.index(i + 1, j), tx * (1.0 - ty)),
            (self.index(i, j + 1), (1.0 - tx) * ty),
            (self.index(i + 1, j + 1), tx * ty),
        ])
    }

    /// Index of the node nearest to `z`, clamped into the box.
    pub fn nearest(&self, z: C64) -> usize {
        let m = self.resolution - 1;
        let snap = |t: f64| -> usize {
            let f = ((t + self.box_radius) / self.spacing).round();
            if f <= 0.0 {
                0
            } else {
                (f as usize).min(m)
            }
        };
        self.index(snap(z.re), snap(z.im))
    }
}

/// `build_grid(chart, box_radius, resolution)`.
pub fn build_grid(chart: usize, box_radius: f64, resolution: usize) -> Result<ChartGrid> {
    ChartGrid::new(chart, box_radius, resolution)
}

/// The two-chart atlas of ℂℙ¹ discretized with identical grids.
///
/// Chart 0 owns the nodes with `|z| ≤ ρ`, chart 1 the nodes with `|w| < 1/ρ`,
/// where `ρ` is [`ProjectiveGrid::SEAM`]. Owned nodes partition the sphere's
/// sample set; every other node is an overlap copy used only by the solvers.
///
/// The seam sits off the unit circle: a set boundary lying exactly on the
/// seam would have its Monge–Ampère mass split inconsistently between the
/// two discretizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveGrid {
    pub box_radius: f64,
    pub resolution: usize,
}

impl ProjectiveGrid {
    /// Radius in chart 0 of the circle separating owned nodes.
    pub const SEAM: f64 = 1.5;

    /// Smallest box radius accepted.
    pub const MIN_BOX: f64 = 1.75;

    pub fn new(box_radius: f64, resolution: usize) -> Result<Self> {
        let g = ChartGrid::new(0, box_radius, resolution)?;
        if box_radius < Self::MIN_BOX {
            return Err(Error::InvalidGrid("box radius must be at least 1.75"));
        }
        // Owned nodes need a two-cell stencil inside the box, and the image
        // of the box edge, |w| ≤ 1/b, needs a full interior stencil.
        if Self::SEAM + 2.0 * g.spacing > box_radius || 1.0 / box_radius > box_radius - 2.0 * g.spacing {
            return Err(Error::InvalidGrid("grid too coarse for chart overlap"));
        }
        Ok(Self {
            box_radius,
            resolution,
        })
    }

    #[inline]
    pub fn chart(&self, chart: usize) -> ChartGrid {
        ChartGrid {
            chart,
            box_radius: self.box_radius,
            resolution: self.resolution,
            spacing: self.spacing(),
        }
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.box_radius / (self.resolution - 1) as f64
    }

    #[inline]
    pub fn nodes_per_chart(&self) -> usize {
        self.resolution * self.resolution
    }

    #[inline]
    pub fn owns(chart: usize, z: C64) -> bool {
        let r2 = z.norm_sqr();
        if chart == 0 {
            r2 <= Self::SEAM * Self::SEAM
        } else {
            r2 * (Self::SEAM * Self::SEAM) < 1.0
        }
    }

    /// Ownership bitmap of a chart.
    pub fn owned(&self, chart: usize) -> Vec<bool> {
        let g = self.chart(chart);
        (0..g.node_count())
            .map(|k| Self::owns(chart, g.point(k)))
            .collect()
    }

    /// Coarser grid with `(M + 1)/2` nodes per axis over the same box.
    pub fn coarsen(&self) -> Option<Self> {
        if self.resolution % 2 == 0 {
            return None;
        }
        Self::new(self.box_radius, (self.resolution + 1) / 2).ok()
    }
}

/// Node bitmap over both charts of a [`ProjectiveGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub grid: ProjectiveGrid,
    pub bits: [Vec<bool>; 2],
}

impl NodeSet {
    pub fn empty(grid: ProjectiveGrid) -> Self {
        let n = grid.nodes_per_chart();
        Self {
            grid,
            bits: [vec![false; n], vec![false; n]],
        }
    }

    pub fn full(grid: ProjectiveGrid) -> Self {
        let n = grid.nodes_per_chart();
        Self {
            grid,
            bits: [vec![true; n], vec![true; n]],
        }
    }

    #[inline]
    pub fn contains(&self, chart: usize, idx: usize) -> bool {
        self.bits[chart][idx]
    }

    /// Number of marked owned nodes.
    pub fn owned_count(&self) -> usize {
        (0..2)
            .map(|c| {
                let g = self.grid.chart(c);
                (0..g.node_count())
                    .filter(|&k| self.bits[c][k] && ProjectiveGrid::owns(c, g.point(k)))
                    .count()
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| b.iter().any(|x| *x))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        (0..2).all(|c| {
            self.bits[c]
                .iter()
                .zip(&other.bits[c])
                .all(|(a, b)| !*a || *b)
        })
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for c in 0..2 {
            for (a, b) in out.bits[c].iter_mut().zip(&other.bits[c]) {
                *a |= *b;
            }
        }
        out
    }

    /// Marks every node within one cell (8-neighborhood) of a marked node.
    pub fn dilate(&self) -> Self {
        let mut out = self.clone();
        let m = self.grid.resolution;
        for c in 0..2 {
            for j in 0..m {
                for i in 0..m {
                    if !self.bits[c][j * m + i] {
                        continue;
                    }
                    for dj in -1i64..=1 {
                        for di in -1i64..=1 {
                            let (ii, jj) = (i as i64 + di, j as i64 + dj);
                            if ii >= 0 && jj >= 0 && (ii as usize) < m && (jj as usize) < m {
                                out.bits[c][jj as usize * m + ii as usize] = true;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}
