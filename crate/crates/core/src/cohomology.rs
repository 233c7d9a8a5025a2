//! Linearized solvers: the flow coboundary `Dh·v = -S_N w`, the zero-mode
//! solves, and the error fields `E`, `E*`.

use rustfft::num_complex::Complex;

use crate::diffeo::eval_on_grid;
use crate::error::{KamError, Result};
use crate::lattice::norm_sq;
use crate::linalg::Mat;
use crate::scalar::{norm2, Real};
use crate::spectral::{
    cnorm, linear_index_map, pointwise_sup, smooth_project, standard_grid_size, GridSample, OperatorKind,
    OperatorSpec, SpectralField, COMPOSE_OVERSAMPLE, NORM_OVERSAMPLE,
};
use crate::torus_algebra::{EigenData, ToralAutomorphism};

/// Smallest `|2π n·v|` the solvers divide by.
pub const DIVISOR_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CoboundarySolution<T> {
    pub h: SpectralField<T>,
    pub h_zero: Vec<T>,
    pub min_divisor: T,
    pub amplification: T,
}

fn divisor<T: Real>(n: &[i64], v: &[T]) -> T {
    T::two_pi() * n.iter().zip(v).fold(T::zero(), |a, (&k, &x)| a + T::from_int(k) * x)
}

/// Divides every kept nonzero mode of `w` by `2πi n·v`, with sign `s`.
fn divide_modes<T: Real>(
    w: &SpectralField<T>,
    v: &[T],
    sign: T,
    mut keep: impl FnMut(&[i64]) -> bool,
) -> Result<CoboundarySolution<T>> {
    let mut h = SpectralField::zeros(w.dim(), w.range(), w.cutoff());
    let mut min_divisor = T::infinity();
    let mut amplification = T::zero();
    let floor = T::lit(DIVISOR_FLOOR);
    for (n, c) in w.modes() {
        if !keep(n) {
            continue;
        }
        let dv = divisor(n, v);
        if dv.abs() < floor {
            return Err(KamError::Resonance { freq: n.clone(), divisor: dv.abs().to_f64_lossy() });
        }
        min_divisor = min_divisor.min(dv.abs());
        amplification = amplification.max(T::one() / dv.abs());
        // ĥ = s·ŵ/(2πi n·v) = -i·s·ŵ/(2π n·v)
        let q = Complex::new(T::zero(), -sign / dv);
        h.set_coeff(n, c.iter().map(|z| *z * q).collect())?;
    }
    Ok(CoboundarySolution { h, h_zero: vec![T::zero(); w.range()], min_divisor, amplification })
}

/// `ĥ(n) = -ŵ(n)/(2πi n·v)` on `Λ(S_N)`; all other modes of `h` vanish.
pub fn solve_flow_coboundary<T: Real>(
    w: &SpectralField<T>,
    v: &[T],
    op: &OperatorSpec,
) -> Result<CoboundarySolution<T>> {
    if op.kind != OperatorKind::S {
        return Err(KamError::Parameter("the flow coboundary is truncated by S_N".into()));
    }
    if v.len() != w.dim() {
        return Err(KamError::Dimension("drift vector and field dimension differ".into()));
    }
    divide_modes(w, v, -T::one(), |n| op.in_lambda(n))
}

/// `ĥ(0) = (A - Id)⁻¹ f̂(0)`.
pub fn solve_zero_mode<T: Real>(f_zero: &[T], aut: &ToralAutomorphism) -> Result<Vec<T>> {
    let d = aut.dim();
    let m = aut.matrix().to_real::<T>().sub(&Mat::identity(d));
    if f_zero.iter().all(|&x| x == T::zero()) {
        return Ok(vec![T::zero(); d]);
    }
    m.solve(f_zero).map_err(|_| KamError::Ergodicity)
}

/// `A·ĥ(0) - f̂(0) - ĥ(0)`, which vanishes for the zero-mode solution.
pub fn zero_mode_defect<T: Real>(h_zero: &[T], f_zero: &[T], aut: &ToralAutomorphism) -> T {
    let ah = aut.matrix().apply_real(h_zero);
    let r: Vec<T> = ah.iter().zip(f_zero).zip(h_zero).map(|((&a, &f), &h)| a - f - h).collect();
    norm2(&r)
}

/// Full linearized conjugacy `h`: coboundary part on `Λ(S_N)` plus the
/// zero mode from `f̂(0)`.
pub fn solve_conjugacy<T: Real>(
    f: &SpectralField<T>,
    w: &SpectralField<T>,
    v: &[T],
    aut: &ToralAutomorphism,
    n: u32,
) -> Result<CoboundarySolution<T>> {
    let mut sol = solve_flow_coboundary(w, v, &OperatorSpec::s(n))?;
    sol.h_zero = solve_zero_mode(f.mean(), aut)?;
    sol.h.set_mean(&sol.h_zero);
    Ok(sol)
}

#[derive(Clone, Debug)]
pub struct ErrorFields<T> {
    pub e: SpectralField<T>,
    pub e_star: SpectralField<T>,
    pub e_zero: Vec<T>,
    /// `ŵ(0) ∈ V^⊥` with `(A - λ)ŵ(0) = P_{V^⊥} Ê(0)`.
    pub w_zero_correction: Vec<T>,
    /// `|P_V Ê(0)|`.
    pub relation_defect: T,
    pub relation_violation: bool,
    /// Largest coefficient of `E` dropped at the cutoff.
    pub tail: T,
}

/// `E* = Σ_{n≠0} Ê(n)/(2πi n·v) e_n`.
pub fn small_divisor_quotient<T: Real>(e: &SpectralField<T>, v: &[T]) -> Result<SpectralField<T>> {
    Ok(divide_modes(e, v, T::one(), |_| true)?.h)
}

/// `E = λ w∘(A+f) - λ w∘A - Df·w` on a composition grid, projected to
/// `cutoff`. `w∘A` is read off the grid through the exact index map.
pub fn error_field<T: Real>(
    f: &SpectralField<T>,
    w: &SpectralField<T>,
    aut: &ToralAutomorphism,
    lambda: T,
    cutoff: u32,
) -> Result<(SpectralField<T>, T)> {
    let d = aut.dim();
    let c = cutoff.max(f.effective_cutoff()).max(w.effective_cutoff());
    let size = standard_grid_size(c, COMPOSE_OVERSAMPLE);
    let a = aut.matrix();
    let fg = GridSample::synthesize(f, size)?.into_values();
    let wg = GridSample::synthesize(w, size)?.into_values();
    let w_af = eval_on_grid(w, Some(a), &fg, size)?;
    let base = linear_index_map(a, size);
    let mut vals: Vec<Vec<T>> = w_af
        .iter()
        .zip(&wg)
        .map(|(x, wc)| x.iter().zip(&base).map(|(&p, &b)| lambda * (p - wc[b])).collect())
        .collect();
    for j in 0..d {
        let dfj = GridSample::synthesize(&f.partial(j), size)?.into_values();
        for (vi, di) in vals.iter_mut().zip(&dfj) {
            for ((x, &p), &q) in vi.iter_mut().zip(di).zip(&wg[j]) {
                *x = *x - p * q;
            }
        }
    }
    GridSample::from_values(d, size, cutoff, vals)?.analyze(cutoff)
}

/// Error fields for the state `(f, w)` with drift `v`. A relation defect
/// above `relation_budget` sets `relation_violation`.
pub fn compute_error_fields<T: Real>(
    f: &SpectralField<T>,
    w: &SpectralField<T>,
    aut: &ToralAutomorphism,
    eig: &EigenData<T>,
    v: &[T],
    cutoff: u32,
    relation_budget: T,
) -> Result<ErrorFields<T>> {
    let (e, tail) = error_field(f, w, aut, eig.lambda, cutoff)?;
    let e_star = small_divisor_quotient(&e, v)?;
    let e_zero = e.mean().to_vec();
    let w_zero_correction = eig.solve_restricted(&e_zero)?;
    let relation_defect = norm2(&eig.p_v.matvec(&e_zero));
    Ok(ErrorFields {
        e,
        e_star,
        e_zero,
        w_zero_correction,
        relation_violation: relation_defect > relation_budget,
        relation_defect,
        tail,
    })
}

/// C⁰ grid norm of `-A·T_N h + T_N f + (T#_N h)∘A - T_N E*`; vanishes up
/// to composition error when `h` solves the linearized equations.
pub fn truncated_conjugacy_residual<T: Real>(
    h: &SpectralField<T>,
    f: &SpectralField<T>,
    aut: &ToralAutomorphism,
    e_star: &SpectralField<T>,
    n: u32,
) -> T {
    let t = OperatorSpec::new(OperatorKind::T, n, Some(aut));
    let ts = OperatorSpec::new(OperatorKind::TSharp, n, Some(aut));
    let a = aut.matrix();
    let th = smooth_project(&h.with_cutoff(n), &t);
    let (tsh_a, _) = smooth_project(&h.with_cutoff(n), &ts).compose_linear(a, n);
    let r = th
        .apply_int_matrix(a)
        .scale(-T::one())
        .add(&smooth_project(&f.with_cutoff(n), &t))
        .add(&tsh_a)
        .sub(&smooth_project(&e_star.with_cutoff(n), &t));
    let size = standard_grid_size(r.effective_cutoff(), NORM_OVERSAMPLE);
    pointwise_sup(GridSample::synthesize(&r, size).expect("grid sized for field").values())
}

/// Largest violation of `|ĥ(n)| ≤ |ŵ(n)|·|n|^τ/(2πC)` over retained modes,
/// as a ratio (≤ 1 when the bound holds).
pub fn coboundary_bound_ratio<T: Real>(h: &SpectralField<T>, w: &SpectralField<T>, c: f64, tau: f64) -> f64 {
    h.modes()
        .map(|(n, hc)| {
            let bound = cnorm(&w.coeff(n)).to_f64_lossy() * (norm_sq(n) as f64).powf(tau / 2.0)
                / (std::f64::consts::TAU * c);
            cnorm(hc).to_f64_lossy() / bound
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{cr_norm, eval_point};
    use crate::torus_algebra::{estimate_diophantine, EigenSelector};

    fn fib() -> ToralAutomorphism {
        ToralAutomorphism::new(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn zero_mode_examples() {
        let a = fib();
        let h: Vec<f64> = solve_zero_mode(&[1.0, 0.0], &a).unwrap();
        assert!((h[0] - 0.0).abs() < 1e-15 && (h[1] - 1.0).abs() < 1e-15);
        let h: Vec<f64> = solve_zero_mode(&[0.0, 1.0], &a).unwrap();
        assert!((h[0] - 1.0).abs() < 1e-15 && (h[1] + 1.0).abs() < 1e-15);
        assert!(zero_mode_defect(&h, &[0.0, 1.0], &a) < 1e-15);
        assert_eq!(solve_zero_mode(&[0.0, 0.0], &a).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_mode_closed_form() {
        let eig = EigenData::<f64>::new(&fib(), EigenSelector::Largest).unwrap();
        let v = eig.v_unit.clone();
        let eps = 1e-3;
        let mut w = SpectralField::zero_vector_field(2, 8);
        // ε cos(2π x₁)·u with u = (0.6, 0.8)
        w.set_coeff(&[1, 0], vec![Complex::new(0.3 * eps, 0.0), Complex::new(0.4 * eps, 0.0)]).unwrap();
        let sol = solve_flow_coboundary(&w, &v, &OperatorSpec::s(8)).unwrap();
        let nv = 0.8506508083520399;
        let amp = eps / (std::f64::consts::TAU * nv);
        for x in [[0.1, 0.2], [0.77, 0.4]] {
            let got = eval_point(&sol.h, &x);
            let s = (std::f64::consts::TAU * x[0]).sin();
            assert!((got[0] + amp * 0.6 * s).abs() < 1e-15);
            assert!((got[1] + amp * 0.8 * s).abs() < 1e-15);
        }
        let dhv = sol.h.directional_derivative(&v);
        assert!(dhv.add(&w).max_coeff() < 1e-18);
        assert!((sol.min_divisor - std::f64::consts::TAU * nv).abs() < 1e-12);
    }

    #[test]
    fn resonance_detected() {
        let mut w = SpectralField::<f64>::zero_vector_field(2, 4);
        w.set_coeff(&[0, 1], vec![Complex::new(1.0, 0.0); 2]).unwrap();
        let err = solve_flow_coboundary(&w, &[1.0, 0.0], &OperatorSpec::s(4)).unwrap_err();
        assert!(matches!(err, KamError::Resonance { ref freq, .. } if freq == &vec![0, 1]));
    }

    #[test]
    fn coboundary_bound_holds() {
        let eig = EigenData::<f64>::new(&fib(), EigenSelector::Largest).unwrap();
        let cert = estimate_diophantine(&eig.v_unit, 1.0, 12, 1e-8).unwrap();
        let w = SpectralField::from_fn(2, 2, 12, &[0.0, 0.0], |n| {
            Some(vec![Complex::new(1.0 / (1 + n[0].abs() + n[1].abs()) as f64, 0.2); 2])
        });
        let sol = solve_flow_coboundary(&w, &eig.v_unit, &OperatorSpec::s(12)).unwrap();
        assert!(coboundary_bound_ratio(&sol.h, &w, cert.c, 1.0) <= 1.0 + 1e-12);
    }

    #[test]
    fn error_field_vanishes_for_trivial_inputs() {
        let a = fib();
        let small = SpectralField::from_fn(2, 2, 4, &[0.0, 0.0], |n| {
            Some(vec![Complex::new(1e-3 / (n[0] * n[0] + n[1] * n[1]) as f64, 0.0); 2])
        });
        let zero = SpectralField::zero_vector_field(2, 4);
        let (e, _) = error_field(&zero, &small, &a, 2.6, 8).unwrap();
        assert!(e.max_coeff() < 1e-18);
        let (e, _) = error_field(&small, &zero, &a, 2.6, 8).unwrap();
        assert!(e.max_coeff() < 1e-18);
    }

    #[test]
    fn error_field_bound() {
        let a = fib();
        let lambda = 2.618033988749895;
        let f = SpectralField::from_fn(2, 2, 3, &[0.0, 0.0], |n| Some(vec![Complex::new(1e-3, 1e-3 * n[1] as f64); 2]));
        let w = SpectralField::from_fn(2, 2, 3, &[1e-4, 0.0], |n| Some(vec![Complex::new(2e-3 / n[0].abs().max(1) as f64, 0.0); 2]));
        let (e, _) = error_field(&f, &w, &a, lambda, 24).unwrap();
        let bound = lambda * cr_norm(&w, 1) * cr_norm(&f, 0) + cr_norm(&f, 1) * cr_norm(&w, 0);
        assert!(cr_norm(&e, 0) <= bound);
    }
}
