use std::collections::HashMap;

use rustfft::num_complex::Complex;

use crate::error::{KamError, Result};
use crate::scalar::Real;

use super::field::{cnorm, SpectralField};
use super::grid::{grid_coords, FftNd, GridSample};
use super::norms::multi_indices;

/// Direct evaluation of `f` at each point (point-major output).
pub fn eval_at<T: Real>(f: &SpectralField<T>, points: &[Vec<T>]) -> Vec<Vec<T>> {
    let kmax = f.effective_cutoff() as usize;
    let d = f.dim();
    let two_pi = T::two_pi();
    let modes: Vec<(&Vec<i64>, &Vec<Complex<T>>)> = f.modes().collect();
    let mut table = vec![Complex::default(); d * (kmax + 1)];
    points
        .iter()
        .map(|x| {
            for k in 0..d {
                for m in 0..=kmax {
                    let ang = two_pi * T::from_usize(m).unwrap() * x[k];
                    table[k * (kmax + 1) + m] = Complex::new(ang.cos(), ang.sin());
                }
            }
            let mut out = f.mean().to_vec();
            for (n, c) in &modes {
                let mut e = Complex::new(T::one(), T::zero());
                for (k, &nk) in n.iter().enumerate() {
                    let z = table[k * (kmax + 1) + nk.unsigned_abs() as usize];
                    e = e * if nk < 0 { z.conj() } else { z };
                }
                let two = T::lit(2.0);
                for (o, ci) in out.iter_mut().zip(c.iter()) {
                    *o = *o + two * (ci.re * e.re - ci.im * e.im);
                }
            }
            out
        })
        .collect()
}

pub fn eval_point<T: Real>(f: &SpectralField<T>, x: &[T]) -> Vec<T> {
    eval_at(f, &[x.to_vec()]).pop().unwrap()
}

/// Evaluates `f(b(x_j) + δ_j)` at all points `x_j` of a uniform grid, where
/// `b` is a grid index permutation (or the identity) and `δ` is small.
///
/// Uses a Taylor expansion around grid points with derivative grids from
/// FFT synthesis. The order is the smallest `p` for which the rigorous
/// remainder bound `Σ_n 2|f̂(n)|·tail_p(2π|n|·max|δ|)` is below
/// `rel_tol·Σ|f̂|`; above [`ShiftEvaluator::max_order`] it falls back to
/// direct summation.
pub struct ShiftEvaluator<T: Real> {
    field: SpectralField<T>,
    size: usize,
    fft: FftNd<T>,
    cache: HashMap<Vec<usize>, Vec<Vec<T>>>,
    cache_bytes: usize,
    budget_bytes: usize,
    rel_tol: f64,
    max_order: usize,
    weights: Vec<(f64, f64)>,
    abs_sum: f64,
}

const DEFAULT_BUDGET: usize = 512 << 20;

impl<T: Real> ShiftEvaluator<T> {
    pub fn new(field: &SpectralField<T>, size: usize) -> Result<Self> {
        let cut = field.effective_cutoff();
        if size < 2 * cut as usize + 1 {
            return Err(KamError::Aliasing { size, cutoff: cut });
        }
        let weights = field
            .modes()
            .map(|(n, c)| {
                let len = n.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
                (std::f64::consts::TAU * len, 2.0 * cnorm(c).to_f64_lossy())
            })
            .collect::<Vec<_>>();
        let abs_sum = field.abs_sum().to_f64_lossy();
        Ok(Self {
            field: field.clone(),
            size,
            fft: FftNd::new(size, field.dim()),
            cache: HashMap::new(),
            cache_bytes: 0,
            budget_bytes: DEFAULT_BUDGET,
            rel_tol: 4.0 * T::epsilon().to_f64_lossy(),
            max_order: 16,
            weights,
            abs_sum,
        })
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_budget(mut self, bytes: usize) -> Self {
        self.budget_bytes = bytes;
        self
    }

    pub fn with_max_order(mut self, p: usize) -> Self {
        self.max_order = p;
        self
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn field(&self) -> &SpectralField<T> {
        &self.field
    }

    /// Smallest Taylor order meeting the tolerance for displacements up
    /// to `delta` in Euclidean norm, or `None` beyond the maximum order.
    pub fn order_for(&self, delta: f64) -> Option<usize> {
        if self.abs_sum == 0.0 || delta == 0.0 {
            return Some(0);
        }
        let target = self.rel_tol * self.abs_sum;
        for p in 0..=self.max_order {
            let q = (p + 1) as f64;
            let mut bound = 0.0;
            for &(freq, w) in &self.weights {
                let x = freq * delta;
                let ratio = x / (q + 1.0);
                if ratio >= 1.0 {
                    bound = f64::INFINITY;
                    break;
                }
                // x^q/q! computed in log space to avoid overflow.
                let lead = (q * x.ln() - ln_factorial(p + 1)).exp();
                bound += w * lead / (1.0 - ratio);
            }
            if bound <= target {
                return Some(p);
            }
        }
        None
    }

    fn derivative_grid(&self, alpha: &[usize]) -> Result<Vec<Vec<T>>> {
        let g = if alpha.iter().all(|&a| a == 0) {
            self.field.clone()
        } else {
            self.field.derivative(alpha)
        };
        Ok(GridSample::synthesize_with(&g, self.size, &self.fft)?.into_values())
    }

    /// Plain grid values of the field.
    pub fn grid_values(&mut self) -> Result<Vec<Vec<T>>> {
        let zero = vec![0; self.field.dim()];
        if let Some(g) = self.cache.get(&zero) {
            return Ok(g.clone());
        }
        self.derivative_grid(&zero)
    }

    /// `f(b(x_j) + δ_j)`, component-major. `disp` holds one vector per
    /// coordinate; `base` maps grid index `j` to the index of `b(x_j)`.
    pub fn eval_shifted(&mut self, base: Option<&[usize]>, disp: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        let d = self.field.dim();
        let npts = self.size.pow(d as u32);
        if disp.len() != d || disp.iter().any(|v| v.len() != npts) {
            return Err(KamError::Dimension("displacement grid has the wrong shape".into()));
        }
        let delta = (0..npts)
            .map(|i| disp.iter().fold(T::zero(), |a, c| a + c[i] * c[i]).sqrt())
            .fold(T::zero(), T::max)
            .to_f64_lossy();
        let Some(p) = self.order_for(delta) else {
            return Ok(self.eval_direct(base, disp));
        };
        let mut pw: Vec<Vec<Vec<T>>> = Vec::with_capacity(d);
        for comp in disp {
            let mut rows = vec![vec![T::one(); npts]];
            for q in 1..=p {
                let inv_q = T::one() / T::from_usize(q).unwrap();
                let next: Vec<T> = rows[q - 1].iter().zip(comp).map(|(&a, &x)| a * x * inv_q).collect();
                rows.push(next);
            }
            pw.push(rows);
        }
        let mut out = vec![vec![T::zero(); npts]; self.field.range()];
        let mut fac = vec![T::zero(); npts];
        for order in 0..=p {
            for alpha in multi_indices(d, order) {
                let owned = if self.cache.contains_key(&alpha) {
                    None
                } else {
                    let g = self.derivative_grid(&alpha)?;
                    let bytes = g.len() * npts * std::mem::size_of::<T>();
                    if self.cache_bytes + bytes <= self.budget_bytes {
                        self.cache_bytes += bytes;
                        self.cache.insert(alpha.clone(), g);
                        None
                    } else {
                        Some(g)
                    }
                };
                let grid = owned.as_ref().unwrap_or_else(|| &self.cache[&alpha]);
                fac.iter_mut().for_each(|f| *f = T::one());
                for (k, &a) in alpha.iter().enumerate() {
                    if a > 0 {
                        for (f, &x) in fac.iter_mut().zip(&pw[k][a]) {
                            *f = *f * x;
                        }
                    }
                }
                for (o, g) in out.iter_mut().zip(grid) {
                    match base {
                        Some(b) => {
                            for i in 0..npts {
                                o[i] = o[i] + g[b[i]] * fac[i];
                            }
                        }
                        None => {
                            for i in 0..npts {
                                o[i] = o[i] + g[i] * fac[i];
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn eval_direct(&self, base: Option<&[usize]>, disp: &[Vec<T>]) -> Vec<Vec<T>> {
        let d = self.field.dim();
        let npts = self.size.pow(d as u32);
        let points: Vec<Vec<T>> = (0..npts)
            .map(|i| {
                let b = base.map_or(i, |m| m[i]);
                let mut x: Vec<T> = grid_coords(b, self.size, d);
                for (xk, c) in x.iter_mut().zip(disp) {
                    *xk = *xk + c[i];
                }
                x
            })
            .collect();
        let vals = eval_at(&self.field, &points);
        (0..self.field.range()).map(|c| vals.iter().map(|v| v[c]).collect()).collect()
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::linear_index_map;
    use crate::torus_algebra::IntMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(seed: u64, cutoff: u32) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralField::from_fn(2, 2, cutoff, &[0.1, -0.2], |n| {
            let s = (-0.3 * ((n[0] * n[0] + n[1] * n[1]) as f64).sqrt()).exp();
            Some((0..2).map(|_| Complex::new(rng.gen_range(-s..s), rng.gen_range(-s..s))).collect())
        })
    }

    #[test]
    fn direct_eval_matches_grid() {
        let f = random_field(1, 6);
        let g = GridSample::synthesize(&f, 16).unwrap();
        for idx in [0, 5, 77, 200] {
            let v = eval_point(&f, &g.coords(idx));
            for c in 0..2 {
                assert!((v[c] - g.values()[c][idx]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn taylor_shift_matches_direct() {
        let f = random_field(2, 8);
        let size = 32;
        let a = IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap();
        let base = linear_index_map(&a, size);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let npts = size * size;
        let disp: Vec<Vec<f64>> = (0..2).map(|_| (0..npts).map(|_| rng.gen_range(-0.01..0.01)).collect()).collect();
        let mut ev = ShiftEvaluator::new(&f, size).unwrap();
        let fast = ev.eval_shifted(Some(&base), &disp).unwrap();
        let slow = ev.eval_direct(Some(&base), &disp);
        let err = (0..npts).map(|i| (fast[0][i] - slow[0][i]).abs().max((fast[1][i] - slow[1][i]).abs())).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn large_shift_falls_back() {
        let f = random_field(4, 8);
        let ev = ShiftEvaluator::new(&f, 32).unwrap();
        assert!(ev.order_for(1e-3).is_some());
        assert!(ev.order_for(0.5).is_none());
    }
}
