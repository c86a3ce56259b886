//! Closed-form 2x2 algebra.

use num_complex::Complex64;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn sub_scaled(&self, other: &Mat2, scale: f64) -> Mat2 {
        Mat2::new(
            self.a11 - scale * other.a11,
            self.a12 - scale * other.a12,
            self.a21 - scale * other.a21,
            self.a22 - scale * other.a22,
        )
    }

    /// Eigenvalues ordered by decreasing real part (then imaginary part).
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = 0.5 * self.trace();
        // discriminant of the characteristic polynomial, written to avoid
        // cancellation in tr^2/4 - det
        let half_diff = 0.5 * (self.a11 - self.a22);
        let disc = half_diff * half_diff + self.a12 * self.a21;
        if disc >= 0.0 {
            let root = disc.sqrt();
            // stable pair: larger magnitude first, the other via det / big
            let big = if half_tr >= 0.0 { half_tr + root } else { half_tr - root };
            let small = if big != 0.0 { self.det() / big } else { 0.0 };
            let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
            [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
        } else {
            let im = (-disc).sqrt();
            [Complex64::new(half_tr, im), Complex64::new(half_tr, -im)]
        }
    }

    /// Unit eigenvector for a real eigenvalue.
    pub fn real_eigenvector(&self, lambda: f64) -> [f64; 2] {
        // rows of (A - lambda I); pick the better-conditioned one
        let r1 = [self.a11 - lambda, self.a12];
        let r2 = [self.a21, self.a22 - lambda];
        let n1 = r1[0].hypot(r1[1]);
        let n2 = r2[0].hypot(r2[1]);
        let v = if n1 >= n2 { [-r1[1], r1[0]] } else { [-r2[1], r2[0]] };
        let n = v[0].hypot(v[1]);
        if n == 0.0 {
            [1.0, 0.0]
        } else {
            [v[0] / n, v[1] / n]
        }
    }
}
