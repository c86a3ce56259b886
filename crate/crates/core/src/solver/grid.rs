use serde::Serialize;

use crate::error::{Error, Result};
use crate::turing::SpatialDim;

/// Cell-centred uniform grid on `[0, L]` or `[0, L]²`, row-major in 2D.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub dim: SpatialDim,
    pub length: f64,
    /// Cells per side.
    pub n: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(dim: SpatialDim, length: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Usage(format!("grid needs at least 3 cells per side, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Usage(format!("domain length must be > 0, got {length}")));
        }
        Ok(Self { dim, length, n, dx: length / n as f64 })
    }

    pub fn one_d(length: f64, n: usize) -> Result<Self> {
        Self::new(SpatialDim::One, length, n)
    }

    pub fn two_d(length: f64, n: usize) -> Result<Self> {
        Self::new(SpatialDim::Two, length, n)
    }

    pub fn len(&self) -> usize {
        match self.dim {
            SpatialDim::One => self.n,
            SpatialDim::Two => self.n * self.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `dx^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.dim.as_usize() as i32)
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// Rows of length `n`; one row in 1D.
    pub fn rows(&self) -> usize {
        match self.dim {
            SpatialDim::One => 1,
            SpatialDim::Two => self.n,
        }
    }

    /// Largest explicit-Euler time step for diffusivity `d_max`, with a 0.4
    /// safety factor on `dx² / (2 dim d_max)`.
    pub fn max_stable_dt(&self, d_max: f64) -> f64 {
        0.4 * self.dx * self.dx / (2.0 * self.dim.as_usize() as f64 * d_max)
    }

    /// `Δf` with reflecting ghost cells, written into `out`.
    pub(crate) fn laplacian_into(&self, f: &[f64], out: &mut [f64], parallel: bool) {
        let n = self.n;
        let inv = 1.0 / (self.dx * self.dx);
        match self.dim {
            SpatialDim::One => row_second_difference(f, out, inv),
            SpatialDim::Two => {
                let kernel = |i: usize, row: &mut [f64]| {
                    let cur = &f[i * n..(i + 1) * n];
                    let up = &f[i.saturating_sub(1) * n..][..n];
                    let down = &f[(i + 1).min(n - 1) * n..][..n];
                    row_second_difference(cur, row, inv);
                    for j in 0..n {
                        row[j] += (up[j] + down[j] - 2.0 * cur[j]) * inv;
                    }
                };
                if parallel {
                    use rayon::prelude::*;
                    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| kernel(i, row));
                } else {
                    out.chunks_mut(n).enumerate().for_each(|(i, row)| kernel(i, row));
                }
            }
        }
    }
}

fn row_second_difference(f: &[f64], out: &mut [f64], inv: f64) {
    let n = f.len();
    out[0] = (f[1] - f[0]) * inv;
    for j in 1..n - 1 {
        out[j] = (f[j - 1] - 2.0 * f[j] + f[j + 1]) * inv;
    }
    out[n - 1] = (f[n - 2] - f[n - 1]) * inv;
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid::one_d(8.0, 2).is_err());
        assert!(Grid::one_d(-1.0, 10).is_err());
        let g = Grid::one_d(8.0, 400).unwrap();
        assert!((g.dx - 0.02).abs() < 1e-15);
        assert!(g.max_stable_dt(3.33) > 1e-5);
        assert!(Grid::two_d(8.0, 80).unwrap().max_stable_dt(3.33) > 1e-5);
    }

    #[test]
    fn laplacian_is_conservative_and_exact_on_cosines() {
        for grid in [Grid::one_d(8.0, 50).unwrap(), Grid::two_d(8.0, 20).unwrap()] {
            let f: Vec<f64> = (0..grid.len()).map(|i| ((i * 7919) % 13) as f64 * 0.3).collect();
            let mut out = vec![0.0; grid.len()];
            grid.laplacian_into(&f, &mut out, false);
            let total: f64 = out.iter().sum();
            assert!(total.abs() < 1e-9, "{total}");
            let mut par = vec![0.0; grid.len()];
            grid.laplacian_into(&f, &mut par, true);
            assert_eq!(out, par);
        }
        // discrete Neumann eigenvector
        let g = Grid::one_d(8.0, 64).unwrap();
        let k = 5.0;
        let f: Vec<f64> = (0..64).map(|i| (k * PI * (i as f64 + 0.5) / 64.0).cos()).collect();
        let mut out = vec![0.0; 64];
        g.laplacian_into(&f, &mut out, false);
        let lam = 4.0 / (g.dx * g.dx) * (k * PI / 128.0).sin().powi(2);
        for (o, v) in out.iter().zip(&f) {
            assert!((o + lam * v).abs() < 1e-10);
        }
    }
}
