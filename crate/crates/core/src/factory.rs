//! Construction and validation of input actions.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::diffeo::{conjugate_action, eval_on_grid, TorusMap};
use crate::error::{KamError, Result};
use crate::kam::ActionState;
use crate::lattice::{for_each_in_ball, norm_sq};
use crate::scalar::{dot, norm2, wrap_unit, Real};
use crate::spectral::{
    eval_at, grid_coords, pointwise_sup, read_field, standard_grid_size, write_field, GridSample, LineReader,
    SpectralField, COMPOSE_OVERSAMPLE,
};
use crate::torus_algebra::{EigenData, ToralAutomorphism};

/// The generators `(Ã, ṽ)` of a `Z ⋉_λ R` action.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionPair<T> {
    pub atil: TorusMap<T>,
    pub vtil: SpectralField<T>,
    pub lambda: T,
}

impl<T: Real> ActionPair<T> {
    pub fn dim(&self) -> usize {
        self.atil.dim()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "action-pair dim={} lambda={:e}", self.dim(), self.lambda);
        self.atil.write(&mut s);
        write_field(&self.vtil, &mut s);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = LineReader::new(text);
        let h = r.header("action-pair")?;
        let dim: usize = r.key(&h, "dim")?;
        let lambda: T = r.key(&h, "lambda")?;
        let atil = TorusMap::read(&mut r)?;
        let vtil = read_field(&mut r)?;
        r.finish()?;
        if atil.dim() != dim || vtil.dim() != dim || vtil.range() != dim {
            return Err(KamError::Dimension("action pair components disagree on dimension".into()));
        }
        Ok(Self { atil, vtil, lambda })
    }
}

/// The affine action `x ↦ Ax`, `x ↦ x + tv`; `v` must be an eigenvector.
pub fn make_affine<T: Real>(aut: &ToralAutomorphism, v: &[T], cutoff: u32) -> Result<ActionPair<T>> {
    let d = aut.dim();
    if v.len() != d {
        return Err(KamError::Dimension("vector length differs from the torus dimension".into()));
    }
    let vn = norm2(v);
    if vn == T::zero() {
        return Err(KamError::Input("the flow vector must be nonzero".into()));
    }
    let av = aut.matrix().apply_real(v);
    let lambda = dot(v, &av) / (vn * vn);
    let res: Vec<T> = av.iter().zip(v).map(|(&a, &x)| a - lambda * x).collect();
    let tol = T::lit(1e-10).max(T::epsilon().sqrt() * T::lit(1e-2));
    if norm2(&res) > tol * vn * (T::one() + lambda.abs()) {
        return Err(KamError::Input(format!("v is not an eigenvector of A (residual {:e})", norm2(&res))));
    }
    Ok(ActionPair {
        atil: TorusMap::linear_map(aut.matrix().clone(), cutoff),
        vtil: SpectralField::constant(d, cutoff, v),
        lambda,
    })
}

/// Pseudo-random perturbation `g` of the conjugacy `G = Id + g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub max_mode: u32,
    pub amplitude: f64,
    pub decay: f64,
    /// Multiplies the flow vector before conjugation (a linear time change).
    #[serde(default = "one")]
    pub time_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(KamError::Parameter("amplitude must be finite and nonnegative".into()));
        }
        if !(self.decay >= 0.0 && self.decay.is_finite()) {
            return Err(KamError::Parameter("decay must be finite and nonnegative".into()));
        }
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            return Err(KamError::Parameter("time_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Vector field on `T^d` with coefficients `amplitude·e^{-decay|n|}·u`,
/// `u` uniform in the unit square per real/imaginary part, for
/// `|n| ≤ max_mode` (canonical half, in lattice order). The mean is drawn
/// first when `with_mean` is set.
pub fn random_decaying_field<T: Real, R: Rng>(
    rng: &mut R,
    dim: usize,
    max_mode: u32,
    amplitude: f64,
    decay: f64,
    with_mean: bool,
) -> SpectralField<T> {
    let mean: Vec<T> = if with_mean {
        (0..dim).map(|_| T::lit(amplitude * rng.gen_range(-1.0..1.0))).collect()
    } else {
        vec![T::zero(); dim]
    };
    let mut f = SpectralField::constant(dim, max_mode, &mean);
    for_each_in_ball(dim, i64::from(max_mode).pow(2), true, |n| {
        let s = amplitude * (-decay * (norm_sq(n) as f64).sqrt()).exp();
        let c: Vec<Complex<T>> = (0..dim)
            .map(|_| {
                let re = rng.gen_range(-1.0..1.0);
                let im = rng.gen_range(-1.0..1.0);
                Complex::new(T::lit(s * re), T::lit(s * im))
            })
            .collect();
        f.set_coeff(n, c).expect("frequency inside the ball");
    });
    f
}

/// Generator field for a spec, from a ChaCha8 stream seeded by `seed`.
pub fn generator_field<T: Real>(spec: &GeneratorSpec, dim: usize) -> SpectralField<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    random_decaying_field(&mut rng, dim, spec.max_mode, spec.amplitude, spec.decay, true)
}

#[derive(Clone, Debug)]
pub struct Perturbation<T> {
    pub pair: ActionPair<T>,
    /// The exact conjugacy: `Ã = G∘A∘G⁻¹`.
    pub g: TorusMap<T>,
    pub relation_residual: T,
    pub tail: T,
}

/// Conjugates the affine action `(A, s·v)` by `G = Id + g`:
/// `Ã = G∘A∘G⁻¹`, `ṽ = (DG·sv)∘G⁻¹`.
pub fn make_conjugated_perturbation<T: Real>(
    aut: &ToralAutomorphism,
    v: &[T],
    spec: &GeneratorSpec,
    cutoff: u32,
) -> Result<Perturbation<T>> {
    spec.validate()?;
    let d = aut.dim();
    let scaled: Vec<T> = v.iter().map(|&x| x * T::lit(spec.time_scale)).collect();
    let affine = make_affine(aut, &scaled, cutoff)?;
    let g = TorusMap::near_identity(generator_field::<T>(spec, d).with_cutoff(cutoff.max(spec.max_mode)))?;
    let conj = conjugate_action(&g, &affine.atil, &affine.vtil, cutoff)?;
    let pair = ActionPair { atil: conj.atil, vtil: conj.vtil, lambda: affine.lambda };
    let relation_residual = group_relation_residual(&pair);
    Ok(Perturbation { pair, g, relation_residual, tail: conj.tail })
}

/// Grid values of `(A + Df)·ṽ - λ ṽ∘(A + f)`.
fn relation_grid<T: Real>(pair: &ActionPair<T>, size: usize) -> Result<Vec<Vec<T>>> {
    let d = pair.dim();
    let a = &pair.atil.linear;
    let f = &pair.atil.periodic;
    let fg = GridSample::synthesize(f, size)?.into_values();
    let vg = GridSample::synthesize(&pair.vtil, size)?.into_values();
    let v_at = eval_on_grid(&pair.vtil, Some(a), &fg, size)?;
    let mut out: Vec<Vec<T>> = (0..d)
        .map(|i| {
            let mut row: Vec<T> = v_at[i].iter().map(|&x| -pair.lambda * x).collect();
            for j in 0..d {
                let aij = a.get(i, j);
                if aij != 0 {
                    let aij = T::from_int(aij);
                    row.iter_mut().zip(&vg[j]).for_each(|(o, &x)| *o = *o + aij * x);
                }
            }
            row
        })
        .collect();
    for j in 0..d {
        let dfj = GridSample::synthesize(&f.partial(j), size)?.into_values();
        for (o, di) in out.iter_mut().zip(&dfj) {
            for ((x, &p), &q) in o.iter_mut().zip(di).zip(&vg[j]) {
                *x = *x + p * q;
            }
        }
    }
    Ok(out)
}

fn relation_size<T: Real>(pair: &ActionPair<T>) -> usize {
    let c = pair.atil.periodic.effective_cutoff().max(pair.vtil.effective_cutoff());
    standard_grid_size(c, COMPOSE_OVERSAMPLE)
}

/// Grid sup of `(A + Df)·ṽ - λ ṽ∘(A + f)`, the differentiated group relation.
pub fn group_relation_residual<T: Real>(pair: &ActionPair<T>) -> T {
    let size = relation_size(pair);
    relation_grid(pair, size).map(|g| pointwise_sup(&g)).unwrap_or(T::infinity())
}

/// The relation defect as a field, projected to `cutoff`.
pub fn relation_residual_field<T: Real>(pair: &ActionPair<T>, cutoff: u32) -> Result<SpectralField<T>> {
    let size = relation_size(pair).max(standard_grid_size(cutoff, COMPOSE_OVERSAMPLE));
    let g = relation_grid(pair, size)?;
    Ok(GridSample::from_values(pair.dim(), size, cutoff, g)?.analyze(cutoff)?.0)
}

/// Normalized starting state and the time scale `s` applied to `ṽ`.
pub struct Normalized<T> {
    pub state: ActionState<T>,
    pub scale: T,
}

/// Rescales time by `s = 1/|P_V ṽ̂(0)|` and splits `s·ṽ = v₀ + w₀` with
/// `v₀ = P_V(s·ṽ̂(0))` (unit length, in `V`) and `ŵ₀(0) ∈ V^⊥`.
/// Physical drift vectors are recovered by dividing by `s`.
pub fn normalize_input<T: Real>(
    pair: &ActionPair<T>,
    aut: &ToralAutomorphism,
    eig: &EigenData<T>,
    r: usize,
) -> Result<Normalized<T>> {
    if pair.atil.linear != *aut.matrix() {
        return Err(KamError::Input("the perturbed map is not homotopic to A".into()));
    }
    let lam_err = (pair.lambda - eig.lambda).abs();
    if lam_err > T::lit(1e-9) * (T::one() + eig.lambda.abs()) {
        return Err(KamError::Input(format!(
            "pair eigenvalue {} differs from the selected eigenvalue {}",
            pair.lambda, eig.lambda
        )));
    }
    let m = pair.vtil.mean();
    let pv = norm2(&eig.p_v.matvec(m));
    if pv == T::zero() || !pv.is_finite() {
        return Err(KamError::InputTooFar("the mean flow has no component along V".into()));
    }
    let scale = T::one() / pv;
    let scaled = pair.vtil.scale(scale);
    let v0 = eig.p_v.matvec(scaled.mean());
    let w0 = scaled.add_constant(&v0.iter().map(|&x| -x).collect::<Vec<_>>());
    let vn = norm2(&v0).to_f64_lossy();
    if !(0.5..=2.0).contains(&vn) {
        return Err(KamError::InputTooFar(format!("|v0| = {vn} outside [1/2, 2]")));
    }
    let state = ActionState::new(aut.clone(), pair.atil.periodic.clone(), v0, w0, r)?;
    if state.norms.eta0 >= 0.5 {
        return Err(KamError::InputTooFar(format!(
            "normalized flow perturbation has sup norm {:e}",
            state.norms.eta0
        )));
    }
    Ok(Normalized { state, scale })
}

/// Classical fourth-order Runge–Kutta for `ẋ = ṽ(x)` on `T^d`; the result
/// is reduced to `[0, 1)^d`.
pub fn flow_integrate<T: Real>(vtil: &SpectralField<T>, x0: &[T], t: T, dt: T) -> Result<Vec<T>> {
    if !(dt > T::zero() && dt <= T::lit(1e-2)) {
        return Err(KamError::Parameter("integration step must lie in (0, 1e-2]".into()));
    }
    let mut x = x0.to_vec();
    if t == T::zero() {
        return Ok(x.iter().map(|&c| c - c.floor()).collect());
    }
    let steps = (t.abs() / dt).ceil().to_usize().unwrap_or(1).max(1);
    let h = t / T::from_usize(steps).unwrap();
    let eval = |p: &[T]| eval_at(vtil, &[p.to_vec()]).pop().unwrap();
    let axpy = |a: &[T], s: T, b: &[T]| -> Vec<T> { a.iter().zip(b).map(|(&p, &q)| p + s * q).collect() };
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    for _ in 0..steps {
        let k1 = eval(&x);
        let k2 = eval(&axpy(&x, half * h, &k1));
        let k3 = eval(&axpy(&x, half * h, &k2));
        let k4 = eval(&axpy(&x, h, &k3));
        for i in 0..x.len() {
            x[i] = x[i] + h * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
    }
    Ok(x.iter().map(|&c| c - c.floor()).collect())
}

/// Sup over a verification grid of `|H(Ã x) - A·H(x)| mod 1` and
/// `|DH(x)·ṽ(x) - v*|`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConjugacyResiduals {
    pub map: f64,
    pub flow: f64,
}

pub fn conjugacy_residuals<T: Real>(
    h: &TorusMap<T>,
    atil: &TorusMap<T>,
    vtil: &SpectralField<T>,
    v_star: &[T],
    grid: usize,
) -> ConjugacyResiduals {
    let d = h.dim();
    let pts: Vec<Vec<T>> = (0..grid.pow(d as u32)).map(|i| grid_coords(i, grid, d)).collect();
    let a = &atil.linear;
    let mut map_res = 0.0f64;
    let ax: Vec<Vec<T>> = pts.iter().map(|x| atil.apply(x)).collect();
    let h_ax = eval_at(&h.periodic, &ax);
    let h_x = eval_at(&h.periodic, &pts);
    for i in 0..pts.len() {
        // H(Ãx) - A H(x) = Ãx + h(Ãx) - A x - A h(x)   (mod 1)
        let lhs: Vec<T> = ax[i].iter().zip(&h_ax[i]).map(|(&p, &q)| p + q).collect();
        let hx: Vec<T> = pts[i].iter().zip(&h_x[i]).map(|(&p, &q)| p + q).collect();
        let rhs = a.apply_real(&hx);
        let diff: Vec<T> = lhs.iter().zip(&rhs).map(|(&p, &q)| wrap_unit(p - q)).collect();
        map_res = map_res.max(norm2(&diff).to_f64_lossy());
    }
    let vt = eval_at(vtil, &pts);
    let partials: Vec<Vec<Vec<T>>> = (0..d).map(|j| eval_at(&h.periodic.partial(j), &pts)).collect();
    let mut flow_res = 0.0f64;
    for i in 0..pts.len() {
        let diff: Vec<T> = (0..d)
            .map(|r| {
                let dh = (0..d).fold(T::zero(), |acc, j| acc + partials[j][i][r] * vt[i][j]);
                vt[i][r] + dh - v_star[r]
            })
            .collect();
        flow_res = flow_res.max(norm2(&diff).to_f64_lossy());
    }
    ConjugacyResiduals { map: map_res, flow: flow_res }
}
