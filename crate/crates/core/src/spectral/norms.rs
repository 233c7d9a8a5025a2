use crate::scalar::Real;

use super::field::{cnorm, SpectralField};
use super::grid::{pointwise_sup, standard_grid_size, FftNd, GridSample, NORM_OVERSAMPLE};
use crate::lattice::norm_sq;

/// `|f|_r = sup_{n≠0} |f̂(n)|·|n|^r`. The zero mode is excluded.
pub fn seminorm<T: Real>(f: &SpectralField<T>, r: f64) -> T {
    let half = T::lit(r / 2.0);
    f.modes()
        .map(|(n, c)| cnorm(c) * T::from_int(norm_sq(n)).powf(half))
        .fold(T::zero(), T::max)
}

/// All multi-indices `α ∈ N^d` with `|α| = order`.
pub fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(axis: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if axis + 1 == cur.len() {
            cur[axis] = left;
            out.push(cur.clone());
            return;
        }
        for a in (0..=left).rev() {
            cur[axis] = a;
            rec(axis + 1, left - a, cur, out);
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    rec(0, order, &mut vec![0; dim], &mut out);
    out
}

/// `sup_x max_{|α| = l} |∂^α f(x)|₂` for `l = 0..=max_order`, on a grid
/// oversampled by [`NORM_OVERSAMPLE`].
pub fn order_sups<T: Real>(f: &SpectralField<T>, max_order: usize) -> Vec<T> {
    let size = standard_grid_size(f.effective_cutoff(), NORM_OVERSAMPLE);
    let fft = FftNd::new(size, f.dim());
    (0..=max_order)
        .map(|order| {
            let mut best = T::zero();
            for alpha in multi_indices(f.dim(), order) {
                let g = if order == 0 { f.clone() } else { f.derivative(&alpha) };
                if order > 0 && g.mode_count() == 0 {
                    continue;
                }
                let grid = GridSample::synthesize_with(&g, size, &fft).expect("grid sized for field");
                best = best.max(pointwise_sup(grid.values()));
            }
            best
        })
        .collect()
}

/// Running maximum of [`order_sups`]: `‖f‖_l` for `l = 0..=max_order`.
pub fn norms_from_sups<T: Real>(sups: &[T]) -> Vec<T> {
    sups.iter()
        .scan(T::zero(), |m, &x| {
            *m = m.max(x);
            Some(*m)
        })
        .collect()
}

/// `‖f‖_l` for `l = 0..=max_order`: the max over `|α| ≤ l` of the grid sup
/// of `|∂^α f|₂`.
pub fn cr_norms<T: Real>(f: &SpectralField<T>, max_order: usize) -> Vec<T> {
    norms_from_sups(&order_sups(f, max_order))
}

pub fn cr_norm<T: Real>(f: &SpectralField<T>, r: usize) -> T {
    cr_norms(f, r)[r]
}
