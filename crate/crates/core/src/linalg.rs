//! Small dense Hermitian helpers on top of `nalgebra`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::C64;

/// Eigen-decomposition of a Hermitian matrix with eigenvalues below
/// `threshold · max |λ|` dropped.
#[derive(Debug, Clone)]
pub struct TruncatedEigen {
    /// Kept eigenvalues and their unit eigenvectors.
    pub pairs: Vec<(f64, Vec<C64>)>,
    pub dropped: usize,
    pub largest: f64,
}

impl TruncatedEigen {
    /// `v* G⁺ v` over the kept spectrum.
    pub fn inverse_form(&self, v: &[C64]) -> f64 {
        self.pairs
            .iter()
            .map(|(lam, u)| {
                let dot: C64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                dot.norm_sqr() / lam
            })
            .sum()
    }
}

/// `g` is row-major `dim × dim` and assumed Hermitian.
pub fn hermitian_eigen(g: &[C64], dim: usize, threshold: f64) -> TruncatedEigen {
    let m = DMatrix::from_row_slice(dim, dim, g);
    let eig = m.symmetric_eigen();
    let largest = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let mut pairs = Vec::new();
    let mut dropped = 0;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > threshold * largest && lam > 0.0 {
            pairs.push((lam, eig.eigenvectors.column(i).iter().copied().collect()));
        } else {
            dropped += 1;
        }
    }
    TruncatedEigen { pairs, dropped, largest }
}

/// Determinant of a square row-major complex matrix.
pub fn determinant(a: &[C64], dim: usize) -> C64 {
    DMatrix::from_row_slice(dim, dim, a).determinant()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_form_of_diagonal_and_rank_one() {
        let g = [C64::new(2.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(4.0, 0.0)];
        let e = hermitian_eigen(&g, 2, 1e-12);
        let v = [C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        assert!((e.inverse_form(&v) - (0.5 + 1.0)).abs() < 1e-12);
        // Rank one: u u* with u = (1, i)/√2.
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let u = [C64::new(s, 0.0), C64::new(0.0, s)];
        let g: Vec<C64> = (0..4).map(|k| u[k / 2] * u[k % 2].conj()).collect();
        let e = hermitian_eigen(&g, 2, 1e-12);
        assert_eq!(e.dropped, 1);
        assert!((e.inverse_form(&u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn determinant_of_triangular() {
        let a = [C64::new(2.0, 0.0), C64::new(5.0, 1.0), C64::new(0.0, 0.0), C64::new(0.0, 3.0)];
        assert!((determinant(&a, 2) - C64::new(0.0, 6.0)).norm() < 1e-12);
    }
}
