use std::collections::BTreeMap;

use rustfft::num_complex::Complex;

use crate::error::{KamError, Result};
use crate::lattice::{for_each_in_ball, is_canonical, norm_sq};
use crate::linalg::Mat;
use crate::scalar::Real;
use crate::torus_algebra::IntMatrix;

/// Real trigonometric polynomial `T^d → R^m`,
/// `f(x) = Σ f̂(n) exp(2πi n·x)` over the ball `|n| ≤ cutoff`.
///
/// Only one of each pair `{n, -n}` is stored (first nonzero coordinate
/// positive); `f̂(-n) = conj f̂(n)` holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T> {
    dim: usize,
    range: usize,
    cutoff: u32,
    mean: Vec<T>,
    modes: BTreeMap<Vec<i64>, Vec<Complex<T>>>,
}

pub(crate) fn cnorm<T: Real>(c: &[Complex<T>]) -> T {
    c.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(dim: usize, range: usize, cutoff: u32) -> Self {
        Self { dim, range, cutoff, mean: vec![T::zero(); range], modes: BTreeMap::new() }
    }

    /// Vector field `T^d → R^d` that is identically zero.
    pub fn zero_vector_field(dim: usize, cutoff: u32) -> Self {
        Self::zeros(dim, dim, cutoff)
    }

    pub fn constant(dim: usize, cutoff: u32, value: &[T]) -> Self {
        let mut f = Self::zeros(dim, value.len(), cutoff);
        f.mean = value.to_vec();
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// `f̂(0)`.
    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn set_mean(&mut self, value: &[T]) {
        self.mean = value.to_vec();
    }

    /// Stored modes (canonical half, `n ≠ 0`).
    pub fn modes(&self) -> impl Iterator<Item = (&Vec<i64>, &Vec<Complex<T>>)> {
        self.modes.iter()
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    fn check_freq(&self, n: &[i64]) -> Result<()> {
        if n.len() != self.dim {
            return Err(KamError::Dimension(format!(
                "frequency {n:?} in a field over T^{}",
                self.dim
            )));
        }
        Ok(())
    }

    /// `f̂(n)` for any `n`; zero outside the stored set.
    pub fn coeff(&self, n: &[i64]) -> Vec<Complex<T>> {
        if n.iter().all(|&x| x == 0) {
            return self.mean.iter().map(|&m| Complex::new(m, T::zero())).collect();
        }
        if is_canonical(n) {
            self.modes.get(n).cloned().unwrap_or_else(|| vec![Complex::default(); self.range])
        } else {
            let neg: Vec<i64> = n.iter().map(|x| -x).collect();
            self.modes
                .get(&neg)
                .map(|c| c.iter().map(|z| z.conj()).collect())
                .unwrap_or_else(|| vec![Complex::default(); self.range])
        }
    }

    /// Sets `f̂(n) = c` and `f̂(-n) = conj c`. The zero mode must be real.
    pub fn set_coeff(&mut self, n: &[i64], c: Vec<Complex<T>>) -> Result<()> {
        self.check_freq(n)?;
        if c.len() != self.range {
            return Err(KamError::Dimension(format!(
                "coefficient of length {} for a field with {} components",
                c.len(),
                self.range
            )));
        }
        if norm_sq(n) > i64::from(self.cutoff).pow(2) {
            return Err(KamError::Input(format!("frequency {n:?} outside cutoff {}", self.cutoff)));
        }
        if n.iter().all(|&x| x == 0) {
            let scale = cnorm(&c).max(T::one());
            if c.iter().any(|z| z.im.abs() > T::epsilon() * T::lit(64.0) * scale) {
                return Err(KamError::Input("zero mode of a real field must be real".into()));
            }
            self.mean = c.iter().map(|z| z.re).collect();
            return Ok(());
        }
        if is_canonical(n) {
            self.insert(n.to_vec(), c);
        } else {
            let neg: Vec<i64> = n.iter().map(|x| -x).collect();
            self.insert(neg, c.into_iter().map(|z| z.conj()).collect());
        }
        Ok(())
    }

    fn insert(&mut self, n: Vec<i64>, c: Vec<Complex<T>>) {
        if c.iter().all(|z| z.re == T::zero() && z.im == T::zero()) {
            self.modes.remove(&n);
        } else {
            self.modes.insert(n, c);
        }
    }

    /// Adds `c` to `f̂(n)` (and its conjugate to `f̂(-n)`); out-of-cutoff
    /// frequencies are ignored and their magnitude returned.
    pub(crate) fn accumulate(&mut self, n: &[i64], c: &[Complex<T>]) -> T {
        if norm_sq(n) > i64::from(self.cutoff).pow(2) {
            return cnorm(c);
        }
        if n.iter().all(|&x| x == 0) {
            for (m, z) in self.mean.iter_mut().zip(c) {
                *m = *m + z.re;
            }
            return T::zero();
        }
        let (key, conj) = if is_canonical(n) {
            (n.to_vec(), false)
        } else {
            (n.iter().map(|x| -x).collect(), true)
        };
        let entry = self.modes.entry(key).or_insert_with(|| vec![Complex::default(); c.len()]);
        for (e, z) in entry.iter_mut().zip(c) {
            *e = *e + if conj { z.conj() } else { *z };
        }
        T::zero()
    }

    /// Largest `|n|` among stored nonzero modes, rounded up.
    pub fn effective_cutoff(&self) -> u32 {
        self.modes
            .keys()
            .map(|n| (norm_sq(n) as f64).sqrt().ceil() as u32)
            .max()
            .unwrap_or(0)
            .min(self.cutoff)
    }

    /// `Σ_n |f̂(n)|` over all frequencies (both signs); bounds `sup |f|`.
    pub fn abs_sum(&self) -> T {
        let m = self.mean.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
        self.modes.values().fold(m, |acc, c| acc + T::lit(2.0) * cnorm(c))
    }

    pub fn max_coeff(&self) -> T {
        let m = self.mean.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
        self.modes.values().fold(m, |acc, c| acc.max(cnorm(c)))
    }

    /// Largest coefficient difference over all frequencies.
    pub fn max_coeff_diff(&self, other: &Self) -> T {
        self.sub(other).max_coeff()
    }

    /// Same coefficients at a different cutoff (modes outside are dropped).
    pub fn with_cutoff(&self, cutoff: u32) -> Self {
        let r2 = i64::from(cutoff).pow(2);
        Self {
            dim: self.dim,
            range: self.range,
            cutoff,
            mean: self.mean.clone(),
            modes: self
                .modes
                .iter()
                .filter(|(n, _)| norm_sq(n) <= r2)
                .map(|(n, c)| (n.clone(), c.clone()))
                .collect(),
        }
    }

    /// Keeps the coefficients whose frequency satisfies `keep`; the zero
    /// mode is kept iff `keep_mean`.
    pub fn filter(&self, keep_mean: bool, mut keep: impl FnMut(&[i64]) -> bool) -> Self {
        Self {
            dim: self.dim,
            range: self.range,
            cutoff: self.cutoff,
            mean: if keep_mean { self.mean.clone() } else { vec![T::zero(); self.range] },
            modes: self
                .modes
                .iter()
                .filter(|(n, _)| keep(n))
                .map(|(n, c)| (n.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        out.mean = vec![T::zero(); self.range];
        out
    }

    fn zip_with(&self, other: &Self, op: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.dim, self.range), (other.dim, other.range), "field shape mismatch");
        let cutoff = self.cutoff.max(other.cutoff);
        let mean = self.mean.iter().zip(&other.mean).map(|(&a, &b)| op(a, b)).collect();
        let zero = vec![Complex::default(); self.range];
        let mut modes = BTreeMap::new();
        for key in self.modes.keys().chain(other.modes.keys()) {
            if modes.contains_key(key) {
                continue;
            }
            let a = self.modes.get(key).unwrap_or(&zero);
            let b = other.modes.get(key).unwrap_or(&zero);
            let c: Vec<Complex<T>> = a
                .iter()
                .zip(b)
                .map(|(x, y)| Complex::new(op(x.re, y.re), op(x.im, y.im)))
                .collect();
            modes.insert(key.clone(), c);
        }
        modes.retain(|_, c: &mut Vec<Complex<T>>| c.iter().any(|z| z.re != T::zero() || z.im != T::zero()));
        Self { dim: self.dim, range: self.range, cutoff, mean, modes }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        out.mean.iter_mut().for_each(|x| *x = *x * s);
        for c in out.modes.values_mut() {
            c.iter_mut().for_each(|z| *z = *z * s);
        }
        out
    }

    pub fn add_constant(&self, c: &[T]) -> Self {
        let mut out = self.clone();
        out.mean.iter_mut().zip(c).for_each(|(m, &x)| *m = *m + x);
        out
    }

    /// Pointwise `M·f(x)` for a real `range'×range` matrix.
    pub fn apply_matrix(&self, m: &Mat<T>) -> Self {
        assert_eq!(m.cols(), self.range);
        let mean = m.matvec(&self.mean);
        let modes = self
            .modes
            .iter()
            .map(|(n, c)| {
                let re: Vec<T> = c.iter().map(|z| z.re).collect();
                let im: Vec<T> = c.iter().map(|z| z.im).collect();
                let (r, i) = (m.matvec(&re), m.matvec(&im));
                (n.clone(), r.into_iter().zip(i).map(|(a, b)| Complex::new(a, b)).collect())
            })
            .collect();
        Self { dim: self.dim, range: m.rows(), cutoff: self.cutoff, mean, modes }
    }

    pub fn apply_int_matrix(&self, m: &IntMatrix) -> Self {
        self.apply_matrix(&m.to_real())
    }

    /// `f∘L` for an integer matrix `L`: the coefficient at `Lᵀn` is `f̂(n)`.
    /// Exact relabeling; returns the field at `cutoff` and the largest
    /// coefficient pushed outside it.
    pub fn compose_linear(&self, l: &IntMatrix, cutoff: u32) -> (Self, T) {
        let lt = l.transpose();
        let mut out = Self::zeros(self.dim, self.range, cutoff);
        out.mean = self.mean.clone();
        let mut tail = T::zero();
        for (n, c) in &self.modes {
            let m = lt.apply(n);
            tail = tail.max(out.accumulate(&m, c));
        }
        (out, tail)
    }

    /// `∂^α f`.
    pub fn derivative(&self, alpha: &[usize]) -> Self {
        assert_eq!(alpha.len(), self.dim);
        let two_pi = T::two_pi();
        let mut out = Self::zeros(self.dim, self.range, self.cutoff);
        if alpha.iter().all(|&a| a == 0) {
            return self.clone();
        }
        for (n, c) in &self.modes {
            let mut factor = Complex::new(T::one(), T::zero());
            for (&nj, &aj) in n.iter().zip(alpha) {
                let w = Complex::new(T::zero(), two_pi * T::from_int(nj));
                for _ in 0..aj {
                    factor = factor * w;
                }
            }
            out.insert(n.clone(), c.iter().map(|z| *z * factor).collect());
        }
        out
    }

    /// `∂f/∂x_j`.
    pub fn partial(&self, j: usize) -> Self {
        let mut alpha = vec![0; self.dim];
        alpha[j] = 1;
        self.derivative(&alpha)
    }

    /// `Df·u` for a constant vector `u`: coefficientwise `f̂(n)·2πi n·u`.
    pub fn directional_derivative(&self, u: &[T]) -> Self {
        assert_eq!(u.len(), self.dim);
        let two_pi = T::two_pi();
        let mut out = Self::zeros(self.dim, self.range, self.cutoff);
        for (n, c) in &self.modes {
            let nu = n.iter().zip(u).fold(T::zero(), |a, (&k, &x)| a + T::from_int(k) * x);
            let w = Complex::new(T::zero(), two_pi * nu);
            out.insert(n.clone(), c.iter().map(|z| *z * w).collect());
        }
        out
    }

    /// `x ↦ f(x + c)`: coefficientwise `f̂(n)·exp(2πi n·c)`.
    pub fn translate(&self, c: &[T]) -> Self {
        assert_eq!(c.len(), self.dim);
        let two_pi = T::two_pi();
        let mut out = self.clone();
        for (n, coef) in out.modes.iter_mut() {
            let phase = two_pi * n.iter().zip(c).fold(T::zero(), |a, (&k, &x)| a + T::from_int(k) * x);
            let e = Complex::new(phase.cos(), phase.sin());
            coef.iter_mut().for_each(|z| *z = *z * e);
        }
        out
    }

    /// Builds a field from a generator called for every frequency in the
    /// canonical half of the ball `0 < |n| ≤ cutoff`.
    pub fn from_fn(
        dim: usize,
        range: usize,
        cutoff: u32,
        mean: &[T],
        mut coeff: impl FnMut(&[i64]) -> Option<Vec<Complex<T>>>,
    ) -> Self {
        let mut out = Self::zeros(dim, range, cutoff);
        out.mean = mean.to_vec();
        for_each_in_ball(dim, i64::from(cutoff).pow(2), true, |n| {
            if let Some(c) = coeff(n) {
                out.insert(n.to_vec(), c);
            }
        });
        out
    }

    /// Coordinate-free component extraction.
    pub fn component(&self, i: usize) -> Self {
        let mut out = Self::zeros(self.dim, 1, self.cutoff);
        out.mean = vec![self.mean[i]];
        for (n, c) in &self.modes {
            out.insert(n.clone(), vec![c[i]]);
        }
        out
    }
}
