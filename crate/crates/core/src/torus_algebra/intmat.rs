use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::linalg::Mat;
use crate::scalar::Real;

use super::poly::IntPoly;

/// Square integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct IntMatrix {
    dim: usize,
    entries: Vec<i64>,
}

impl TryFrom<Vec<Vec<i64>>> for IntMatrix {
    type Error = KamError;
    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<IntMatrix> for Vec<Vec<i64>> {
    fn from(m: IntMatrix) -> Self {
        m.to_rows()
    }
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(KamError::Dimension("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(KamError::Dimension(format!(
                    "row {i} has {} entries, expected {dim} (matrix must be square)",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.dim).map(<[i64]>::to_vec).collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut entries = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                entries[j * d + i] = self.get(i, j);
            }
        }
        Self { dim: d, entries }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim;
        assert_eq!(d, other.dim);
        let mut entries = vec![0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..d {
                    entries[i * d + j] += a * other.get(k, j);
                }
            }
        }
        Self { dim: d, entries }
    }

    pub fn apply(&self, n: &[i64]) -> Vec<i64> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j) * n[j]).sum()).collect()
    }

    /// `M x` for a real vector `x`.
    pub fn apply_real<T: Real>(&self, x: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim).fold(T::zero(), |acc, j| acc + T::from_int(self.get(i, j)) * x[j])
            })
            .collect()
    }

    pub fn to_real<T: Real>(&self) -> Mat<T> {
        Mat::from_rows(
            &self.to_rows().iter().map(|r| r.iter().map(|&x| T::from_int(x)).collect()).collect::<Vec<_>>(),
        )
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> i128 {
        let d = self.dim;
        let mut a: Vec<Vec<i128>> =
            self.to_rows().into_iter().map(|r| r.into_iter().map(i128::from).collect()).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..d {
            if a[k][k] == 0 {
                match (k + 1..d).find(|&i| a[i][k] != 0) {
                    Some(p) => {
                        a.swap(k, p);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..d {
                for j in k + 1..d {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        sign * a[d - 1][d - 1]
    }

    /// Characteristic polynomial `det(tI - M)` (Faddeev–LeVerrier, exact).
    pub fn char_poly(&self) -> IntPoly {
        let d = self.dim;
        let a: Vec<i128> = self.entries.iter().map(|&x| i128::from(x)).collect();
        let mul = |x: &[i128], y: &[i128]| {
            let mut out = vec![0i128; d * d];
            for i in 0..d {
                for k in 0..d {
                    for j in 0..d {
                        out[i * d + j] += x[i * d + k] * y[k * d + j];
                    }
                }
            }
            out
        };
        let mut coeffs = vec![0i128; d + 1];
        coeffs[d] = 1;
        let mut m = vec![0i128; d * d];
        for k in 1..=d {
            let mut next = mul(&a, &m);
            for i in 0..d {
                next[i * d + i] += coeffs[d + 1 - k];
            }
            let am = mul(&a, &next);
            let trace: i128 = (0..d).map(|i| am[i * d + i]).sum();
            coeffs[d - k] = -trace / k as i128;
            m = next;
        }
        IntPoly::new(coeffs)
    }

    /// Exact inverse of a unimodular matrix via Cayley–Hamilton.
    pub fn inverse_unimodular(&self) -> Result<Self> {
        let det = self.determinant();
        if det.abs() != 1 {
            return Err(KamError::NotUnimodular(det));
        }
        let d = self.dim;
        let p = self.char_poly();
        let c = p.coeffs();
        // A^{-1} = -(A^{d-1} + c_{d-1} A^{d-2} + ... + c_1 I) / c_0
        let mut acc = vec![0i128; d * d];
        let a: Vec<i128> = self.entries.iter().map(|&x| i128::from(x)).collect();
        for j in (1..=d).rev() {
            let mut next = vec![0i128; d * d];
            for i in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        next[i * d + l] += acc[i * d + k] * a[k * d + l];
                    }
                }
                next[i * d + i] += c[j];
            }
            acc = next;
        }
        let c0 = c[0];
        let entries = acc
            .into_iter()
            .map(|x| i64::try_from(-x / c0).map_err(|_| KamError::Input("inverse overflows i64".into())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: d, entries })
    }
}
