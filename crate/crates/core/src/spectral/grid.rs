use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{KamError, Result};
use crate::lattice::{is_canonical, norm_sq};
use crate::scalar::Real;
use crate::torus_algebra::IntMatrix;

use super::field::{cnorm, SpectralField};

/// Oversampling used for compositions.
pub const COMPOSE_OVERSAMPLE: f64 = 2.0;
/// Oversampling used for grid sup norms.
pub const NORM_OVERSAMPLE: f64 = 4.0;

/// Smallest power of two that is at least `rho·(2·cutoff + 1)`.
pub fn standard_grid_size(cutoff: u32, rho: f64) -> usize {
    let need = (rho * f64::from(2 * cutoff + 1)).ceil() as usize;
    need.max(4).next_power_of_two()
}

/// Values of a field on the uniform grid `{j/size}^d`, one vector per
/// component, row-major with axis 0 slowest.
#[derive(Clone, Debug)]
pub struct GridSample<T> {
    dim: usize,
    size: usize,
    cutoff: u32,
    values: Vec<Vec<T>>,
}

pub(crate) struct FftNd<T: Real> {
    size: usize,
    dim: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> FftNd<T> {
    pub(crate) fn new(size: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { size, dim, fwd: planner.plan_fft_forward(size), inv: planner.plan_fft_inverse(size) }
    }

    /// Unnormalized transform along every axis.
    pub(crate) fn run(&self, data: &mut [Complex<T>], inverse: bool) {
        let s = self.size;
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![Complex::default(); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex::default(); s];
        for axis in 0..self.dim {
            let stride = s.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * s;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, l) in line.iter_mut().enumerate() {
                        *l = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, l) in line.iter().enumerate() {
                        data[base + j * stride] = *l;
                    }
                }
            }
        }
    }
}

/// Flat grid index of a frequency / integer point, reduced mod `size`.
pub(crate) fn flat_index(n: &[i64], size: usize) -> usize {
    let s = size as i64;
    n.iter().fold(0usize, |acc, &k| acc * size + k.rem_euclid(s) as usize)
}

/// Centered frequency of a flat index.
pub(crate) fn centered_freq(mut idx: usize, size: usize, dim: usize, out: &mut [i64]) {
    for k in (0..dim).rev() {
        let j = (idx % size) as i64;
        idx /= size;
        out[k] = if j > (size as i64) / 2 { j - size as i64 } else { j };
    }
}

/// Index permutation `j ↦ L·j mod size` on grid points (exact for integer `L`).
pub fn linear_index_map(l: &IntMatrix, size: usize) -> Vec<usize> {
    let d = l.dim();
    let total = size.pow(d as u32);
    let mut j = vec![0i64; d];
    (0..total)
        .map(|idx| {
            let mut rest = idx;
            for k in (0..d).rev() {
                j[k] = (rest % size) as i64;
                rest /= size;
            }
            flat_index(&l.apply(&j), size)
        })
        .collect()
}

impl<T: Real> GridSample<T> {
    pub fn from_values(dim: usize, size: usize, cutoff: u32, values: Vec<Vec<T>>) -> Result<Self> {
        let total = size.pow(dim as u32);
        if values.iter().any(|v| v.len() != total) {
            return Err(KamError::Dimension("grid values have the wrong length".into()));
        }
        Ok(Self { dim, size, cutoff, values })
    }

    /// Exact synthesis of `f` at the grid points.
    pub fn synthesize(f: &SpectralField<T>, size: usize) -> Result<Self> {
        let fft = FftNd::new(size, f.dim());
        Self::synthesize_with(f, size, &fft)
    }

    pub(crate) fn synthesize_with(f: &SpectralField<T>, size: usize, fft: &FftNd<T>) -> Result<Self> {
        let cut = f.effective_cutoff();
        if size < 2 * cut as usize + 1 {
            return Err(KamError::Aliasing { size, cutoff: cut });
        }
        let d = f.dim();
        let total = size.pow(d as u32);
        let mut values = Vec::with_capacity(f.range());
        let mut buf = vec![Complex::<T>::default(); total];
        let mut neg = vec![0i64; d];
        for a in (0..f.range()).step_by(2) {
            let b = (a + 1 < f.range()).then_some(a + 1);
            buf.iter_mut().for_each(|z| *z = Complex::default());
            let mb = b.map_or(T::zero(), |b| f.mean()[b]);
            buf[0] = Complex::new(f.mean()[a], mb);
            for (n, c) in f.modes() {
                let ca = c[a];
                let cb = b.map_or(Complex::default(), |b| c[b]);
                let i = Complex::new(T::zero(), T::one());
                buf[flat_index(n, size)] = buf[flat_index(n, size)] + ca + i * cb;
                for (x, &y) in neg.iter_mut().zip(n.iter()) {
                    *x = -y;
                }
                let ni = flat_index(&neg, size);
                buf[ni] = buf[ni] + ca.conj() + i * cb.conj();
            }
            fft.run(&mut buf, true);
            values.push(buf.iter().map(|z| z.re).collect());
            if b.is_some() {
                values.push(buf.iter().map(|z| z.im).collect());
            }
        }
        Ok(Self { dim: d, size, cutoff: f.cutoff(), values })
    }

    /// Discrete Fourier analysis, truncated to the ball `|n| ≤ cutoff`.
    /// Also returns the largest discarded coefficient norm.
    pub fn analyze(&self, cutoff: u32) -> Result<(SpectralField<T>, T)> {
        let fft = FftNd::new(self.size, self.dim);
        self.analyze_with(cutoff, &fft)
    }

    pub(crate) fn analyze_with(&self, cutoff: u32, fft: &FftNd<T>) -> Result<(SpectralField<T>, T)> {
        let s = self.size;
        if s < 2 * cutoff as usize + 1 {
            return Err(KamError::Aliasing { size: s, cutoff });
        }
        let d = self.dim;
        let total = self.point_count();
        let range = self.values.len();
        let norm = T::one() / T::from_usize(total).unwrap();
        let half = T::lit(0.5);
        let r2 = i64::from(cutoff).pow(2);

        // One forward transform per pair of real components.
        let mut spectra: Vec<Vec<Complex<T>>> = Vec::new();
        for a in (0..range).step_by(2) {
            let mut buf: Vec<Complex<T>> = if a + 1 < range {
                self.values[a].iter().zip(&self.values[a + 1]).map(|(&x, &y)| Complex::new(x, y)).collect()
            } else {
                self.values[a].iter().map(|&x| Complex::new(x, T::zero())).collect()
            };
            fft.run(&mut buf, false);
            buf.iter_mut().for_each(|z| *z = *z * norm);
            spectra.push(buf);
        }

        let mut out = SpectralField::zeros(d, range, cutoff);
        let mut tail = T::zero();
        let mut n = vec![0i64; d];
        let mut negn = vec![0i64; d];
        let mut coef = vec![Complex::<T>::default(); range];
        let i_unit = Complex::new(T::zero(), T::one());
        for idx in 0..total {
            centered_freq(idx, s, d, &mut n);
            let is_zero = n.iter().all(|&x| x == 0);
            if !is_zero && !is_canonical(&n) {
                continue;
            }
            for (x, &y) in negn.iter_mut().zip(n.iter()) {
                *x = -y;
            }
            let nidx = flat_index(&negn, s);
            for (p, spec) in spectra.iter().enumerate() {
                let fp = spec[idx];
                let fm = spec[nidx].conj();
                coef[2 * p] = (fp + fm) * half;
                if 2 * p + 1 < range {
                    coef[2 * p + 1] = (fp - fm) * half / i_unit;
                }
            }
            if is_zero {
                let mean: Vec<T> = coef.iter().map(|z| z.re).collect();
                out.set_mean(&mean);
            } else if norm_sq(&n) <= r2 {
                out.accumulate(&n, &coef);
            } else {
                tail = tail.max(cnorm(&coef));
            }
        }
        Ok((out, tail))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// Achieved oversampling `size / (2·cutoff + 1)`.
    pub fn oversample(&self) -> f64 {
        self.size as f64 / f64::from(2 * self.cutoff + 1)
    }

    pub fn point_count(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vec<T>> {
        self.values
    }

    /// Coordinates of grid point `idx` in `[0, 1)^d`.
    pub fn coords(&self, idx: usize) -> Vec<T> {
        grid_coords(idx, self.size, self.dim)
    }

    /// `max_x |f(x)|₂` over the grid.
    pub fn sup_norm(&self) -> T {
        pointwise_sup(&self.values)
    }
}

pub(crate) fn grid_coords<T: Real>(mut idx: usize, size: usize, dim: usize) -> Vec<T> {
    let mut x = vec![T::zero(); dim];
    let inv = T::one() / T::from_usize(size).unwrap();
    for k in (0..dim).rev() {
        x[k] = T::from_usize(idx % size).unwrap() * inv;
        idx /= size;
    }
    x
}

/// `max_x |v(x)|₂` for component-major grid values.
pub fn pointwise_sup<T: Real>(values: &[Vec<T>]) -> T {
    let n = values.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| values.iter().fold(T::zero(), |a, c| a + c[i] * c[i]).sqrt())
        .fold(T::zero(), T::max)
}
