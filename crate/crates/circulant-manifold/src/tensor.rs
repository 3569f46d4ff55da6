//! Dense 4×4 and 4×4×4 real containers.
//!
//! Public accessors are 1-based to match the tensor index convention; the
//! backing arrays are 0-based and never exposed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DIM: usize = 4;

/// Relative deviation scaled against the magnitude of the operands,
/// `|a - b| / (1 + max(|a|, |b|))`. All closed-form-versus-oracle
/// comparisons in the crate use this measure.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matrix4 {
    m: [[f64; DIM]; DIM],
}

impl Matrix4 {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Builds a matrix from a function of 1-based indices (row, column).
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = [[0.0; DIM]; DIM];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(i + 1, j + 1);
            }
        }
        Matrix4 { m }
    }

    pub fn from_rows(rows: [[f64; DIM]; DIM]) -> Self {
        Matrix4 { m: rows }
    }

    /// Entry (i, j), 1-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i - 1][j - 1]
    }

    pub fn rows(&self) -> [[f64; DIM]; DIM] {
        self.m
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.get(j, i))
    }

    pub fn trace(&self) -> f64 {
        (1..=DIM).map(|i| self.get(i, i)).sum()
    }

    pub fn mul(&self, other: &Matrix4) -> Matrix4 {
        Self::from_fn(|i, j| (1..=DIM).map(|a| self.get(i, a) * other.get(a, j)).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest entrywise scaled deviation from `other`.
    pub fn max_rel_dev(&self, other: &Matrix4) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..=DIM {
            for j in 1..=DIM {
                worst = worst.max(rel_dev(self.get(i, j), other.get(i, j)));
            }
        }
        worst
    }

    /// Leading principal minor of order `k` (determinant of the top-left
    /// k×k block), used for positive-definiteness checks.
    #[allow(clippy::needless_range_loop)]
    pub fn leading_minor(&self, k: usize) -> f64 {
        let mut a = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                a[i][j] = self.m[i][j];
            }
        }
        // Gaussian elimination with partial pivoting; determinant is the
        // signed product of pivots.
        let mut det = 1.0;
        for col in 0..k {
            let pivot = (col..k)
                .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
                .unwrap();
            if a[pivot][col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            det *= a[col][col];
            for row in col + 1..k {
                let factor = a[row][col] / a[col][col];
                for c in col..k {
                    a[row][c] -= factor * a[col][c];
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting. This is
    /// the generic numeric route, independent of any closed-form inverse.
    #[allow(clippy::needless_range_loop)]
    pub fn inverse_numeric(&self) -> Result<Matrix4> {
        let mut a = self.m;
        let mut inv = Matrix4::identity().m;
        for col in 0..DIM {
            let pivot = (col..DIM)
                .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
                .unwrap();
            if a[pivot][col] == 0.0 {
                return Err(Error::Singular("zero pivot in elimination".into()));
            }
            a.swap(pivot, col);
            inv.swap(pivot, col);
            let scale = 1.0 / a[col][col];
            for c in 0..DIM {
                a[col][c] *= scale;
                inv[col][c] *= scale;
            }
            for row in 0..DIM {
                if row != col {
                    let factor = a[row][col];
                    if factor != 0.0 {
                        for c in 0..DIM {
                            a[row][c] -= factor * a[col][c];
                            inv[row][c] -= factor * inv[col][c];
                        }
                    }
                }
            }
        }
        Ok(Matrix4 { m: inv })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tensor3 {
    t: [[[f64; DIM]; DIM]; DIM],
}

impl Default for Tensor3 {
    fn default() -> Self {
        Tensor3 {
            t: [[[0.0; DIM]; DIM]; DIM],
        }
    }
}

impl Tensor3 {
    pub fn zeros() -> Self {
        Self::default()
    }

    /// Builds a tensor from a function of 1-based indices.
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = [[[0.0; DIM]; DIM]; DIM];
        for (i, plane) in t.iter_mut().enumerate() {
            for (j, row) in plane.iter_mut().enumerate() {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = f(i + 1, j + 1, k + 1);
                }
            }
        }
        Tensor3 { t }
    }

    /// Entry (i, j, k), 1-based. The meaning of each slot is documented at
    /// every construction site (e.g. `∂_i g_jk`, `Γ^k_ij`, `F_ijk`).
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.t[i - 1][j - 1][k - 1]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.t[i - 1][j - 1][k - 1] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.t
            .iter()
            .flatten()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn max_rel_dev(&self, other: &Tensor3) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..=DIM {
            for j in 1..=DIM {
                for k in 1..=DIM {
                    worst = worst.max(rel_dev(self.get(i, j, k), other.get(i, j, k)));
                }
            }
        }
        worst
    }
}
