//! Small dense linear algebra for the three-parameter logistic model.

use serde::{Deserialize, Serialize};

use crate::math::{ln, sqrt};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add_scaled(a: &Vec3, s: f64, b: &Vec3) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// Lower Cholesky factor of a symmetric positive definite 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cholesky3 {
    l: Mat3,
}

impl Cholesky3 {
    /// `None` unless `m` is symmetric (to 1e-10 relative) and positive definite.
    pub fn new(m: &Mat3) -> Option<Self> {
        for i in 0..3 {
            for j in 0..i {
                let scale = m[i][j].abs().max(m[j][i].abs()).max(1e-300);
                if (m[i][j] - m[j][i]).abs() > 1e-10 * scale {
                    return None;
                }
            }
        }
        let mut l = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let mut s = m[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i][i] = sqrt(s);
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        Some(Self { l })
    }

    pub fn factor(&self) -> &Mat3 {
        &self.l
    }

    /// `ln det m`.
    pub fn log_det(&self) -> f64 {
        2.0 * (ln(self.l[0][0]) + ln(self.l[1][1]) + ln(self.l[2][2]))
    }

    /// Solves `m x = b`.
    pub fn solve(&self, b: &Vec3) -> Vec3 {
        let l = &self.l;
        let mut y = [0.0; 3];
        for i in 0..3 {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i][k] * y[k];
            }
            y[i] = s / l[i][i];
        }
        let mut x = [0.0; 3];
        for i in (0..3).rev() {
            let mut s = y[i];
            for k in i + 1..3 {
                s -= l[k][i] * x[k];
            }
            x[i] = s / l[i][i];
        }
        x
    }

    /// Solves `L^T x = z`. For `m = L L^T` and `z` standard normal, `x` has
    /// covariance `m^{-1}`.
    pub fn solve_upper(&self, z: &Vec3) -> Vec3 {
        let l = &self.l;
        let mut x = [0.0; 3];
        for i in (0..3).rev() {
            let mut s = z[i];
            for k in i + 1..3 {
                s -= l[k][i] * x[k];
            }
            x[i] = s / l[i][i];
        }
        x
    }

    pub fn inverse(&self) -> Mat3 {
        let c0 = self.solve(&[1.0, 0.0, 0.0]);
        let c1 = self.solve(&[0.0, 1.0, 0.0]);
        let c2 = self.solve(&[0.0, 0.0, 1.0]);
        let mut inv = [[0.0; 3]; 3];
        for i in 0..3 {
            inv[i] = [c0[i], c1[i], c2[i]];
        }
        inv
    }

    /// `L z`: maps a standard normal draw to covariance `m`.
    pub fn lower_mul(&self, z: &Vec3) -> Vec3 {
        let l = &self.l;
        [l[0][0] * z[0], l[1][0] * z[0] + l[1][1] * z[1], l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2]]
    }

    /// `x^T m^{-1} x`.
    pub fn inverse_quadratic_form(&self, x: &Vec3) -> f64 {
        dot(x, &self.solve(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_inverts() {
        let m = [[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let c = Cholesky3::new(&m).unwrap();
        let x = c.solve(&[1.0, 2.0, 3.0]);
        let back = mat_vec(&m, &x);
        for i in 0..3 {
            assert!((back[i] - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
        let inv = c.inverse();
        for i in 0..3 {
            let row = mat_vec(&m, &[inv[0][i], inv[1][i], inv[2][i]]);
            for j in 0..3 {
                assert!((row[j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let det: f64 = 4.0 * (5.0 * 3.0 - 1.0) - 2.0 * (2.0 * 3.0 - 0.6) + 0.6 * (2.0 - 3.0);
        assert!((c.log_det() - det.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        assert!(Cholesky3::new(&[[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_none());
        assert!(Cholesky3::new(&[[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_none());
    }
}
