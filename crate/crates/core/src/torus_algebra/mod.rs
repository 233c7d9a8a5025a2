//! Integer matrix algebra for toral automorphisms: irreducibility,
//! eigendata with the `V ⊕ V^⊥` splitting, and Diophantine certificates.

mod diophantine;
mod eigen;
mod intmat;
mod poly;

pub use diophantine::{estimate_diophantine, DiophantineCertificate, DEFAULT_DIOPHANTINE_FLOOR};
pub use eigen::{EigenData, EigenSelector};
pub use intmat::IntMatrix;
pub use poly::IntPoly;

use crate::error::{KamError, Result};
use crate::scalar::Real;

/// True iff the characteristic polynomial of `m` is irreducible over `Q`.
pub fn check_irreducible(m: &IntMatrix) -> Result<bool> {
    Ok(m.char_poly().find_factor()?.is_none())
}

/// Same as [`check_irreducible`] for raw rows; rejects non-square input.
pub fn check_irreducible_rows(rows: &[Vec<i64>]) -> Result<bool> {
    check_irreducible(&IntMatrix::from_rows(rows)?)
}

/// Integer matrix with determinant ±1 and irreducible characteristic
/// polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToralAutomorphism {
    matrix: IntMatrix,
    transpose: IntMatrix,
    inv_transpose: IntMatrix,
    determinant: i128,
}

impl ToralAutomorphism {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        Self::from_matrix(IntMatrix::from_rows(&rows)?)
    }

    pub fn from_matrix(matrix: IntMatrix) -> Result<Self> {
        let determinant = matrix.determinant();
        if determinant.abs() != 1 {
            return Err(KamError::NotUnimodular(determinant));
        }
        if !check_irreducible(&matrix)? {
            return Err(KamError::Reducible);
        }
        let transpose = matrix.transpose();
        let inv_transpose = transpose.inverse_unimodular()?;
        Ok(Self { matrix, transpose, inv_transpose, determinant })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn determinant(&self) -> i128 {
        self.determinant
    }

    /// `Aᵀ`, the action on frequencies of `g ↦ g∘A`.
    pub fn transpose(&self) -> &IntMatrix {
        &self.transpose
    }

    /// `(Aᵀ)⁻¹`, exact.
    pub fn inv_transpose(&self) -> &IntMatrix {
        &self.inv_transpose
    }

    /// `‖(A − Id)⁻¹‖₂`; errors when 1 is an eigenvalue.
    pub fn shift_inverse_norm<T: Real>(&self) -> Result<T> {
        let d = self.dim();
        let m = self.matrix.to_real::<T>().sub(&crate::linalg::Mat::identity(d));
        let inv = m.inverse().map_err(|_| KamError::Ergodicity)?;
        Ok(inv.op_norm())
    }

    /// `max(‖A‖₂, ‖A⁻¹‖₂)`; the dilation bound for both `Aᵀ` and `(Aᵀ)⁻¹`.
    pub fn dilation<T: Real>(&self) -> T {
        let a = self.matrix.to_real::<T>().op_norm();
        let ai = self.inv_transpose.to_real::<T>().op_norm();
        a.max(ai)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irreducibility_examples() {
        assert!(check_irreducible_rows(&[vec![2, 1], vec![1, 1]]).unwrap());
        assert!(!check_irreducible_rows(&[vec![1, 0], vec![0, 1]]).unwrap());
        assert!(!check_irreducible_rows(&[vec![2, 0], vec![0, 3]]).unwrap());
        assert!(matches!(
            check_irreducible_rows(&[vec![1, 2, 3], vec![4, 5, 6]]),
            Err(KamError::Dimension(_))
        ));
    }

    #[test]
    fn automorphism_validation() {
        assert!(ToralAutomorphism::new(vec![vec![2, 1], vec![1, 1]]).is_ok());
        assert!(matches!(
            ToralAutomorphism::new(vec![vec![2, 0], vec![0, 3]]),
            Err(KamError::NotUnimodular(6))
        ));
        assert!(matches!(
            ToralAutomorphism::new(vec![vec![1, 1], vec![0, 1]]),
            Err(KamError::Reducible)
        ));
    }
}
