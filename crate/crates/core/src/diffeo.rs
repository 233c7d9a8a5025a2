//! Composition, inversion and conjugation of torus maps `x ↦ Lx + g(x)`.

use std::fmt::Write as _;

use crate::error::{KamError, Result};
use crate::scalar::Real;
use crate::spectral::{
    pointwise_sup, read_field, standard_grid_size, write_field, GridSample, LineReader, ShiftEvaluator,
    SpectralField, COMPOSE_OVERSAMPLE,
};
use crate::spectral::{eval_point, linear_index_map};
use crate::torus_algebra::IntMatrix;

pub const DEFAULT_ALIAS_TOL: f64 = 1e-9;

/// The map `x ↦ Lx + g(x) mod 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusMap<T> {
    pub linear: IntMatrix,
    pub periodic: SpectralField<T>,
}

impl<T: Real> TorusMap<T> {
    pub fn new(linear: IntMatrix, periodic: SpectralField<T>) -> Result<Self> {
        let d = linear.dim();
        if periodic.dim() != d || periodic.range() != d {
            return Err(KamError::Dimension(format!(
                "periodic part maps T^{} to R^{}, linear part is {d}x{d}",
                periodic.dim(),
                periodic.range()
            )));
        }
        Ok(Self { linear, periodic })
    }

    pub fn identity(dim: usize, cutoff: u32) -> Self {
        Self { linear: IntMatrix::identity(dim), periodic: SpectralField::zero_vector_field(dim, cutoff) }
    }

    /// `Id + h`.
    pub fn near_identity(h: SpectralField<T>) -> Result<Self> {
        Self::new(IntMatrix::identity(h.dim()), h)
    }

    pub fn linear_map(linear: IntMatrix, cutoff: u32) -> Self {
        let d = linear.dim();
        Self { linear, periodic: SpectralField::zero_vector_field(d, cutoff) }
    }

    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    pub fn cutoff(&self) -> u32 {
        self.periodic.cutoff()
    }

    /// Image of a point, reduced to `[0, 1)^d`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let g = eval_point(&self.periodic, x);
        self.linear.apply_real(x).into_iter().zip(g).map(|(a, b)| (a + b) - (a + b).floor()).collect()
    }

    /// `sup_x ‖Dg(x)‖_F` on a grid oversampled for composition.
    pub fn jacobian_sup(&self) -> T {
        let size = standard_grid_size(self.periodic.effective_cutoff(), COMPOSE_OVERSAMPLE);
        jacobian_sup_on(&self.periodic, size)
    }

    pub fn write(&self, out: &mut String) {
        let _ = writeln!(out, "torus-map dim={}", self.dim());
        for row in self.linear.to_rows() {
            let _ = writeln!(out, "{}", row.iter().map(i64::to_string).collect::<Vec<_>>().join(" "));
        }
        write_field(&self.periodic, out);
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s
    }

    pub(crate) fn read(r: &mut LineReader<'_>) -> Result<Self> {
        let h = r.header("torus-map")?;
        let dim: usize = r.key(&h, "dim")?;
        let mut rows = Vec::with_capacity(dim);
        for _ in 0..dim {
            let row = r.next_row()?;
            rows.push(row.iter().map(|s| r.parse::<i64>(s)).collect::<Result<Vec<_>>>()?);
        }
        let linear = IntMatrix::from_rows(&rows).map_err(|e| r.err(e.to_string()))?;
        let periodic = read_field(r)?;
        Self::new(linear, periodic).map_err(|e| r.err(e.to_string()))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = LineReader::new(text);
        let m = Self::read(&mut r)?;
        r.finish()?;
        Ok(m)
    }
}

fn jacobian_sup_on<T: Real>(h: &SpectralField<T>, size: usize) -> T {
    if h.mode_count() == 0 {
        return T::zero();
    }
    let mut cols = Vec::new();
    for j in 0..h.dim() {
        let g = GridSample::synthesize(&h.partial(j), size).expect("grid sized for field");
        cols.extend(g.into_values());
    }
    pointwise_sup(&cols)
}

fn grid_size_for(cutoff: u32, fields: &[&SpectralField<impl Real>]) -> usize {
    let c = fields.iter().map(|f| f.effective_cutoff()).fold(cutoff, u32::max);
    standard_grid_size(c, COMPOSE_OVERSAMPLE)
}

fn grid_values<T: Real>(f: &SpectralField<T>, size: usize) -> Result<Vec<Vec<T>>> {
    Ok(GridSample::synthesize(f, size)?.into_values())
}

/// Splits the mean `c` off a displacement grid, so that
/// `f(b(x) + δ) = f_c(b(x) + (δ - c))` with `f_c = f(· + c)` keeps the
/// Taylor shift small.
fn centered<T: Real>(f: &SpectralField<T>, disp: &[Vec<T>]) -> (SpectralField<T>, Vec<Vec<T>>) {
    let c: Vec<T> = disp
        .iter()
        .map(|v| v.iter().fold(T::zero(), |a, &x| a + x) / T::from_usize(v.len().max(1)).unwrap())
        .collect();
    let shifted = disp.iter().zip(&c).map(|(v, &m)| v.iter().map(|&x| x - m).collect()).collect();
    (f.translate(&c), shifted)
}

/// `f(L x_j + δ_j)` on the grid of the given size.
pub(crate) fn eval_on_grid<T: Real>(
    f: &SpectralField<T>,
    linear: Option<&IntMatrix>,
    disp: &[Vec<T>],
    size: usize,
) -> Result<Vec<Vec<T>>> {
    let (fc, rest) = centered(f, disp);
    let base = linear.filter(|l| !l.is_identity()).map(|l| linear_index_map(l, size));
    ShiftEvaluator::new(&fc, size)?.eval_shifted(base.as_deref(), &rest)
}

fn matvec_grid<T: Real>(l: &IntMatrix, v: &[Vec<T>]) -> Vec<Vec<T>> {
    let d = l.dim();
    (0..d)
        .map(|i| {
            let mut out = vec![T::zero(); v[0].len()];
            for j in 0..d {
                let a = l.get(i, j);
                if a != 0 {
                    let a = T::from_int(a);
                    out.iter_mut().zip(&v[j]).for_each(|(o, &x)| *o = *o + a * x);
                }
            }
            out
        })
        .collect()
}

fn add_grids<T: Real>(a: &mut [Vec<T>], b: &[Vec<T>]) {
    for (x, y) in a.iter_mut().zip(b) {
        x.iter_mut().zip(y).for_each(|(p, &q)| *p = *p + q);
    }
}

#[derive(Clone, Debug)]
pub struct Composition<T> {
    pub map: TorusMap<T>,
    /// Largest coefficient discarded by re-projection to the cutoff.
    pub tail: T,
    /// Set when `tail` exceeds the relative aliasing tolerance.
    pub aliasing: bool,
}

/// `F∘G`, re-projected to `cutoff`.
pub fn compose<T: Real>(f: &TorusMap<T>, g: &TorusMap<T>, cutoff: u32) -> Result<Composition<T>> {
    compose_with_tol(f, g, cutoff, DEFAULT_ALIAS_TOL)
}

pub fn compose_with_tol<T: Real>(
    f: &TorusMap<T>,
    g: &TorusMap<T>,
    cutoff: u32,
    alias_tol: f64,
) -> Result<Composition<T>> {
    if f.dim() != g.dim() {
        return Err(KamError::Dimension("composing maps on tori of different dimension".into()));
    }
    let linear = f.linear.mul(&g.linear);
    let lf_gg = g.periodic.apply_int_matrix(&f.linear);
    let scale = f.periodic.abs_sum() + lf_gg.abs_sum();

    let (periodic, tail) = if f.periodic.mode_count() == 0 {
        // F is affine: g = c_F + L_F g_G exactly.
        let p = lf_gg.add_constant(f.periodic.mean());
        let kept = p.with_cutoff(cutoff);
        let tail = p.sub(&kept.with_cutoff(p.cutoff())).max_coeff();
        (kept, tail)
    } else if g.periodic.mode_count() == 0 {
        // G is affine: g_F(L_G x + c) is a relabeling of translated coefficients.
        let (p, tail) = f.periodic.translate(g.periodic.mean()).compose_linear(&g.linear, cutoff);
        (p.add(&lf_gg.with_cutoff(cutoff)), tail)
    } else {
        let size = grid_size_for(cutoff, &[&f.periodic, &g.periodic]);
        let gg = grid_values(&g.periodic, size)?;
        let mut vals = eval_on_grid(&f.periodic, Some(&g.linear), &gg, size)?;
        add_grids(&mut vals, &matvec_grid(&f.linear, &gg));
        GridSample::from_values(f.dim(), size, cutoff, vals)?.analyze(cutoff)?
    };
    let aliasing = tail.to_f64_lossy() > alias_tol * scale.to_f64_lossy().max(f64::MIN_POSITIVE);
    Ok(Composition { map: TorusMap { linear, periodic }, tail, aliasing })
}

#[derive(Clone, Copy, Debug)]
pub struct InverseOptions {
    /// Required bound on `sup ‖Dh‖_F`.
    pub kappa: f64,
    pub max_iters: usize,
    /// Bound on `sup |H(H⁻¹(y)) - y|` after re-projection.
    pub residual_tol: f64,
}

impl InverseOptions {
    pub fn for_scalar<T: Real>() -> Self {
        Self {
            kappa: 0.5,
            max_iters: 100,
            residual_tol: 1e-11f64.max(1e3 * T::epsilon().to_f64_lossy()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Inversion<T> {
    pub map: TorusMap<T>,
    pub iterations: usize,
    pub residual: T,
    pub dh_sup: T,
    pub tail: T,
}

/// Inverse of `H = Id + h` by the grid-pointwise contraction
/// `x ← y - h(x)`, re-projected to `cutoff` and verified.
pub fn invert<T: Real>(h: &TorusMap<T>, cutoff: u32) -> Result<Inversion<T>> {
    invert_with(h, cutoff, &InverseOptions::for_scalar::<T>())
}

pub fn invert_with<T: Real>(h: &TorusMap<T>, cutoff: u32, opts: &InverseOptions) -> Result<Inversion<T>> {
    if !h.linear.is_identity() {
        return Err(KamError::Input("invert expects a near-identity map".into()));
    }
    let d = h.dim();
    let c: Vec<T> = h.periodic.mean().to_vec();
    let neg_c: Vec<T> = c.iter().map(|&x| -x).collect();
    if h.periodic.mode_count() == 0 {
        let periodic = SpectralField::constant(d, cutoff, &neg_c);
        let zero = T::zero();
        return Ok(Inversion { map: TorusMap::near_identity(periodic)?, iterations: 0, residual: zero, dh_sup: zero, tail: zero });
    }
    let size = grid_size_for(cutoff, &[&h.periodic]);
    let dh_sup = jacobian_sup_on(&h.periodic, size);
    if dh_sup.to_f64_lossy() >= opts.kappa {
        return Err(KamError::NonInvertible { norm: dh_sup.to_f64_lossy(), bound: opts.kappa });
    }
    // h = c + h̃; with x = y - c + u the fixed point reads u = -h̃(y - c + u).
    let g = h.periodic.without_mean().translate(&neg_c);
    let mut ev = ShiftEvaluator::new(&g, size)?;
    let neg = |v: Vec<Vec<T>>| -> Vec<Vec<T>> { v.into_iter().map(|c| c.into_iter().map(|x| -x).collect()).collect() };
    let mut u = neg(ev.grid_values()?);
    let tol = T::lit(8.0) * T::epsilon();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let next = neg(ev.eval_shifted(None, &u)?);
        let mut change = T::zero();
        let mut scale = T::one();
        for (a, b) in next.iter().zip(&u) {
            for (&x, &y) in a.iter().zip(b) {
                change = change.max((x - y).abs());
                scale = scale.max(x.abs());
            }
        }
        u = next;
        if change <= tol * scale {
            break;
        }
        if iterations >= opts.max_iters {
            return Err(KamError::NoConvergence { iters: iterations, change: change.to_f64_lossy() });
        }
    }
    for (comp, &ci) in u.iter_mut().zip(&c) {
        comp.iter_mut().for_each(|x| *x = *x - ci);
    }
    let (periodic, tail) = GridSample::from_values(d, size, cutoff, u)?.analyze(cutoff)?;

    // Verify H(H⁻¹(y)) - y = u_p + h̃(y - c + u_p) with u_p = h_inv + c.
    let mut up = grid_values(&periodic, size)?;
    for (comp, &ci) in up.iter_mut().zip(&c) {
        comp.iter_mut().for_each(|x| *x = *x + ci);
    }
    let mut res = ev.eval_shifted(None, &up)?;
    add_grids(&mut res, &up);
    let residual = pointwise_sup(&res);
    if residual.to_f64_lossy() >= opts.residual_tol {
        return Err(KamError::NoConvergence { iters: iterations, change: residual.to_f64_lossy() });
    }
    Ok(Inversion { map: TorusMap::near_identity(periodic)?, iterations, residual, dh_sup, tail })
}

#[derive(Clone, Debug)]
pub struct Conjugated<T> {
    pub atil: TorusMap<T>,
    pub vtil: SpectralField<T>,
    pub inverse: Inversion<T>,
    pub tail: T,
}

/// `(H∘Ã∘H⁻¹, (DH·ṽ)∘H⁻¹)`, re-projected to `cutoff`.
pub fn conjugate_action<T: Real>(
    h: &TorusMap<T>,
    atil: &TorusMap<T>,
    vtil: &SpectralField<T>,
    cutoff: u32,
) -> Result<Conjugated<T>> {
    let d = h.dim();
    if atil.dim() != d || vtil.dim() != d || vtil.range() != d {
        return Err(KamError::Dimension("action and conjugacy dimensions differ".into()));
    }
    let inverse = invert(h, cutoff)?;
    let size = grid_size_for(cutoff, &[&h.periodic, &atil.periodic, vtil, &inverse.map.periodic]);
    let a = &atil.linear;
    let hinv = grid_values(&inverse.map.periodic, size)?;

    // Ã(H⁻¹ y) = A y + z,  z = A h_inv + f(y + h_inv);  then H(Ay + z) = Ay + z + h(Ay + z).
    let mut z = eval_on_grid(&atil.periodic, None, &hinv, size)?;
    add_grids(&mut z, &matvec_grid(a, &hinv));
    let mut fvals = eval_on_grid(&h.periodic, Some(a), &z, size)?;
    add_grids(&mut fvals, &z);
    let (f_new, tail_f) = GridSample::from_values(d, size, cutoff, fvals)?.analyze(cutoff)?;

    // q = ṽ + Dh·ṽ is band-limited and exactly representable on this grid.
    let vg = grid_values(vtil, size)?;
    let mut q = vg.clone();
    for j in 0..d {
        let dj = grid_values(&h.periodic.partial(j), size)?;
        for (qi, di) in q.iter_mut().zip(&dj) {
            for ((x, &p), &v) in qi.iter_mut().zip(di).zip(&vg[j]) {
                *x = *x + p * v;
            }
        }
    }
    let (q_field, tail_q) = GridSample::from_values(d, size, cutoff, q)?.analyze(cutoff)?;
    let vvals = eval_on_grid(&q_field, None, &hinv, size)?;
    let (v_new, tail_v) = GridSample::from_values(d, size, cutoff, vvals)?.analyze(cutoff)?;

    let tail = tail_f.max(tail_q).max(tail_v).max(inverse.tail);
    Ok(Conjugated { atil: TorusMap::new(a.clone(), f_new)?, vtil: v_new, inverse, tail })
}

/// `‖F∘G‖_r / (1 + ‖F‖_r + ‖G‖_r)` on periodic parts; a logged diagnostic.
pub fn composition_ratio<T: Real>(f: &TorusMap<T>, g: &TorusMap<T>, fg: &TorusMap<T>, r: usize) -> T {
    use crate::spectral::cr_norm;
    cr_norm(&fg.periodic, r) / (T::one() + cr_norm(&f.periodic, r) + cr_norm(&g.periodic, r))
}
