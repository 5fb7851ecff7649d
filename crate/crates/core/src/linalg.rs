//! Just enough 3×3 linear algebra for Jacobians and singular values.

use std::ops::Mul;

use crate::geometry::Point3;

/// A row-major 3×3 real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn zeros() -> Self {
        Mat3([[0.0; 3]; 3])
    }

    pub fn from_columns(c: [Point3; 3]) -> Self {
        let mut m = Mat3::zeros();
        for (j, col) in c.iter().enumerate() {
            for i in 0..3 {
                m.0[i][j] = col.get(i);
            }
        }
        m
    }

    pub fn scaled(self, s: f64) -> Self {
        let mut m = self;
        m.0.iter_mut().flatten().for_each(|v| *v *= s);
        m
    }

    pub fn transpose(self) -> Self {
        let a = self.0;
        Mat3([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    pub fn det(self) -> f64 {
        let a = self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    /// Frobenius norm.
    pub fn norm(self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(self, o: Mat3) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(o.0.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn apply(self, p: Point3) -> Point3 {
        let a = self.0;
        Point3::new(
            a[0][0] * p.x1 + a[0][1] * p.x2 + a[0][2] * p.x3,
            a[1][0] * p.x1 + a[1][1] * p.x2 + a[1][2] * p.x3,
            a[2][0] * p.x1 + a[2][1] * p.x2 + a[2][2] * p.x3,
        )
    }

    /// Eigenvalues of a symmetric matrix, descending, by cyclic Jacobi sweeps.
    pub fn symmetric_eigenvalues(self) -> [f64; 3] {
        let mut a = self.0;
        let scale = self.norm();
        if scale == 0.0 {
            return [0.0; 3];
        }
        for _ in 0..64 {
            let off = (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]).sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..3 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
        let mut ev = [a[0][0], a[1][1], a[2][2]];
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    /// Singular values `(σ_max, σ_mid, σ_min)` from the Gram matrix `AᵀA`.
    ///
    /// `σ_min` is recovered as `|det| / (σ_max σ_mid)`, which stays accurate
    /// when the Gram eigenvalue would be lost to cancellation.
    pub fn singular_values(self) -> [f64; 3] {
        let ev = (self.transpose() * self).symmetric_eigenvalues();
        let s_max = ev[0].max(0.0).sqrt();
        let s_mid = ev[1].max(0.0).sqrt();
        let det = self.det().abs();
        let s_min = if s_max * s_mid > 0.0 {
            (det / (s_max * s_mid)).min(s_mid)
        } else {
            ev[2].max(0.0).sqrt()
        };
        [s_max, s_mid, s_min]
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut m = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        m
    }
}
