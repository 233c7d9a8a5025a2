use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::linalg::Mat;
use crate::scalar::{dot, norm2, Real};

use super::ToralAutomorphism;

/// Which real eigenvalue to follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EigenSelector {
    /// Largest real eigenvalue.
    #[default]
    Largest,
    /// Smallest real eigenvalue.
    Smallest,
    /// Real eigenvalue of largest modulus.
    LargestAbs,
    /// The i-th real eigenvalue in ascending order.
    Index(usize),
}

/// Eigenvalue, unit eigenvector and the splitting `R^d = V ⊕ V^⊥`, where
/// `V^⊥` is the sum of the other eigenspaces (not the orthogonal complement).
#[derive(Clone, Debug)]
pub struct EigenData<T> {
    pub lambda: T,
    pub v_unit: Vec<T>,
    /// Left eigenvector `u` with `Aᵀu = λu`, normalized so `⟨u, v_unit⟩ = 1`.
    /// `V^⊥ = ker uᵀ`.
    pub left: Vec<T>,
    /// Orthonormal basis of `V^⊥` (d − 1 vectors).
    pub vperp_basis: Vec<Vec<T>>,
    pub p_v: Mat<T>,
    pub p_vperp: Mat<T>,
    /// `A` as a real matrix.
    pub a: Mat<T>,
}

/// Sign convention: first component with magnitude above `tol` is positive.
fn fix_sign<T: Real>(v: &mut [T]) {
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let tol = scale * T::lit(1e-6);
    if let Some(&first) = v.iter().find(|x| x.abs() > tol) {
        if first < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Null vector of a (numerically) rank-deficient square matrix via full
/// pivoting elimination; the last pivot is treated as zero.
fn null_vector<T: Real>(m: &Mat<T>) -> Vec<T> {
    let n = m.rows();
    let mut a = m.clone();
    let mut col_perm: Vec<usize> = (0..n).collect();
    for k in 0..n.saturating_sub(1) {
        let (mut pi, mut pj, mut best) = (k, k, T::zero());
        for i in k..n {
            for j in k..n {
                if a[(i, j)].abs() > best {
                    best = a[(i, j)].abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        if best == T::zero() {
            break;
        }
        for j in 0..n {
            let t = a[(k, j)];
            a[(k, j)] = a[(pi, j)];
            a[(pi, j)] = t;
        }
        for i in 0..n {
            let t = a[(i, k)];
            a[(i, k)] = a[(i, pj)];
            a[(i, pj)] = t;
        }
        col_perm.swap(k, pj);
        for i in k + 1..n {
            let f = a[(i, k)] / a[(k, k)];
            for j in k..n {
                a[(i, j)] = a[(i, j)] - f * a[(k, j)];
            }
        }
    }
    // Upper triangular with a[(n-1, n-1)] ≈ 0: set the last unknown to 1.
    let mut y = vec![T::zero(); n];
    y[n - 1] = T::one();
    for i in (0..n - 1).rev() {
        let mut s = T::zero();
        for j in i + 1..n {
            s = s + a[(i, j)] * y[j];
        }
        y[i] = -s / a[(i, i)];
    }
    let mut x = vec![T::zero(); n];
    for (k, &c) in col_perm.iter().enumerate() {
        x[c] = y[k];
    }
    let nrm = norm2(&x);
    x.iter_mut().for_each(|v| *v = *v / nrm);
    x
}

fn polish_root<T: Real>(coeffs: &[i128], mut x: T) -> T {
    for _ in 0..3 {
        let (mut p, mut dp) = (T::zero(), T::zero());
        for &c in coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + T::lit(c as f64);
        }
        if dp == T::zero() {
            break;
        }
        x = x - p / dp;
    }
    x
}

impl<T: Real> EigenData<T> {
    pub fn new(aut: &ToralAutomorphism, which: EigenSelector) -> Result<Self> {
        let d = aut.dim();
        let poly = aut.matrix().char_poly();
        let roots = poly.roots();
        let imag_tol = 1e-7;
        let mut real: Vec<f64> = roots
            .iter()
            .filter(|(re, im)| im.abs() <= imag_tol * (1.0 + re.abs()))
            .map(|&(re, _)| re)
            .collect();
        real.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let chosen = match which {
            EigenSelector::Largest => real.last().copied(),
            EigenSelector::Smallest => real.first().copied(),
            EigenSelector::LargestAbs => {
                real.iter().copied().max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
            }
            EigenSelector::Index(i) => real.get(i).copied(),
        }
        .ok_or_else(|| {
            KamError::UnsupportedSpectrum(format!("no real eigenvalue matches {which:?}"))
        })?;
        let lambda = polish_root(poly.coeffs(), T::lit(chosen));
        let lf = lambda.to_f64_lossy();
        let sep = roots
            .iter()
            .filter(|(re, im)| (re - lf).hypot(*im) > 1e-12 * (1.0 + lf.abs()))
            .map(|(re, im)| (re - lf).hypot(*im))
            .fold(f64::INFINITY, f64::min);
        let others = roots.iter().filter(|(re, im)| (re - lf).hypot(*im) <= 1e-6 * (1.0 + lf.abs())).count();
        if others > 1 || (d > 1 && sep < 1e-6 * (1.0 + lf.abs())) {
            return Err(KamError::UnsupportedSpectrum(format!("eigenvalue {lf} is repeated")));
        }

        let a: Mat<T> = aut.matrix().to_real();
        let shifted = a.sub(&Mat::identity(d).scale(lambda));
        let mut v_unit = null_vector(&shifted);
        fix_sign(&mut v_unit);
        let mut left = null_vector(&shifted.transpose());
        let uv = dot(&left, &v_unit);
        if uv.abs() < T::lit(1e-12) {
            return Err(KamError::UnsupportedSpectrum("left and right eigenvectors orthogonal".into()));
        }
        left.iter_mut().for_each(|x| *x = *x / uv);

        let p_v = Mat::from_columns(&[v_unit.clone()], d).matmul(&Mat::from_rows(&[left.clone()]));
        let p_vperp = Mat::identity(d).sub(&p_v);

        // Orthonormal basis of ker uᵀ: Gram–Schmidt starting from û.
        let un = norm2(&left);
        let mut basis: Vec<Vec<T>> = vec![left.iter().map(|&x| x / un).collect()];
        for e in 0..d {
            if basis.len() == d {
                break;
            }
            let mut cand = vec![T::zero(); d];
            cand[e] = T::one();
            for b in &basis {
                let c = dot(&cand, b);
                cand.iter_mut().zip(b).for_each(|(x, &y)| *x = *x - c * y);
            }
            let n = norm2(&cand);
            if n > T::lit(1e-6) {
                basis.push(cand.iter().map(|&x| x / n).collect());
            }
        }
        let vperp_basis = basis.split_off(1);

        let eig = Self { lambda, v_unit, left, vperp_basis, p_v, p_vperp, a };
        let residual = eig.residual();
        let tol = T::epsilon().sqrt() * T::lit(1e-2) * (T::one() + lambda.abs());
        if residual > tol {
            return Err(KamError::UnsupportedSpectrum(format!(
                "eigenvector residual {residual:e} above tolerance"
            )));
        }
        Ok(eig)
    }

    pub fn dim(&self) -> usize {
        self.v_unit.len()
    }

    /// `|A v − λ v|`.
    pub fn residual(&self) -> T {
        let av = self.a.matvec(&self.v_unit);
        let r: Vec<T> = av.iter().zip(&self.v_unit).map(|(&x, &y)| x - self.lambda * y).collect();
        norm2(&r)
    }

    /// Coordinates of `x ∈ V^⊥` in `vperp_basis`.
    pub fn vperp_coords(&self, x: &[T]) -> Vec<T> {
        self.vperp_basis.iter().map(|b| dot(b, x)).collect()
    }

    /// `(A − λ Id)` restricted to `V^⊥`, in `vperp_basis` coordinates.
    pub fn restricted_shift(&self) -> Mat<T> {
        let d = self.dim();
        let b = Mat::from_columns(&self.vperp_basis, d);
        let shifted = self.a.sub(&Mat::identity(d).scale(self.lambda));
        b.transpose().matmul(&shifted).matmul(&b)
    }

    /// Smallest singular value of `(A − λ Id)|_{V^⊥}`.
    pub fn restricted_shift_min_singular(&self) -> T {
        self.restricted_shift().singular_values().last().copied().unwrap_or(T::infinity())
    }

    /// Solves `(A − λ Id) x = P_{V^⊥} b` for `x ∈ V^⊥`.
    pub fn solve_restricted(&self, b: &[T]) -> Result<Vec<T>> {
        let d = self.dim();
        if d == 1 {
            return Ok(vec![T::zero()]);
        }
        let rhs = self.vperp_coords(&self.p_vperp.matvec(b));
        let y = self.restricted_shift().solve(&rhs)?;
        let mut x = vec![T::zero(); d];
        for (c, bvec) in y.iter().zip(&self.vperp_basis) {
            x.iter_mut().zip(bvec).for_each(|(xi, &bi)| *xi = *xi + *c * bi);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fib() -> ToralAutomorphism {
        ToralAutomorphism::new(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn golden_eigendata() {
        let e = EigenData::<f64>::new(&fib(), EigenSelector::Largest).unwrap();
        assert!((e.lambda - 2.618_033_988_749_895).abs() < 1e-12);
        assert!((e.v_unit[0] - 0.850_650_808_352_039_9).abs() < 1e-12);
        assert!((e.v_unit[1] - 0.525_731_112_119_133_6).abs() < 1e-12);
        assert!(e.residual() < 1e-12);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let other = e.p_v.matvec(&[1.0, -phi]);
        assert!(other.iter().all(|x| x.abs() < 1e-12));
        let sum = e.p_v.add(&e.p_vperp).sub(&Mat::identity(2)).max_abs();
        assert!(sum < 1e-15);
        let idem = e.p_v.matmul(&e.p_v).sub(&e.p_v).max_abs();
        assert!(idem < 1e-14);
    }

    #[test]
    fn restricted_solve_d3() {
        let a = ToralAutomorphism::new(vec![vec![0, 0, 1], vec![1, 0, -1], vec![0, 1, 3]]).unwrap();
        let e = EigenData::<f64>::new(&a, EigenSelector::Largest).unwrap();
        assert!(e.residual() < 1e-12);
        let b = [0.3, -0.2, 0.7];
        let x = e.solve_restricted(&b).unwrap();
        // x ∈ V^⊥ and (A − λ)x = P_{V⊥} b
        assert!(dot(&e.left, &x).abs() < 1e-12);
        let ax = e.a.matvec(&x);
        let lhs: Vec<f64> = ax.iter().zip(&x).map(|(p, q)| p - e.lambda * q).collect();
        let rhs = e.p_vperp.matvec(&b);
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).abs() < 1e-12);
        }
        assert!(e.restricted_shift_min_singular() > 0.1);
    }

    #[test]
    fn complex_only_spectrum_rejected() {
        // [[0,-1],[1,1]] has char poly t^2 - t + 1: complex roots.
        let a = ToralAutomorphism::new(vec![vec![0, -1], vec![1, 1]]).unwrap();
        assert!(matches!(
            EigenData::<f64>::new(&a, EigenSelector::Largest),
            Err(KamError::UnsupportedSpectrum(_))
        ));
    }
}
