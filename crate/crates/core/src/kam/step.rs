use std::time::Instant;

use serde::Serialize;

use crate::cohomology::{compute_error_fields, solve_conjugacy, truncated_conjugacy_residual};
use crate::diffeo::{conjugate_action, TorusMap};
use crate::error::{KamError, Result};
use crate::scalar::{norm2, Real};
use crate::spectral::{order_sups, smooth_project, OperatorKind, OperatorSpec, SpectralField};
use crate::torus_algebra::EigenData;

use super::params::{invert_exponent, KamSchedule};
use super::state::{ActionState, StateNorms};

/// Relation defect `|P_V Ê(0)|` above which a step is flagged.
pub const RELATION_BUDGET: f64 = 1e-8;

/// Sup norms of the terms in the decomposition of `H∘Ã∘H⁻¹ - A`.
#[derive(Clone, Debug, Serialize)]
pub struct OmegaReport {
    /// `‖Ṫ_N f‖₀`
    pub omega1: f64,
    /// `‖A·Ṫ_N h‖₀`
    pub omega2: f64,
    /// `‖Ṫ#_N h‖₀`
    pub omega3: f64,
    /// Bound `‖Dh‖₀‖f‖₀` for `‖h∘Ã - h∘A‖₀`.
    pub omega4_bound: f64,
    /// `‖T_N E*‖₀`
    pub omega5: f64,
    /// `‖T_N f - A·T_N h + (T#_N h)∘A - T_N E*‖₀`
    pub truncated_residual: f64,
    /// `|P_V Ê(0)|`
    pub relation_defect: f64,
    pub error_norm0: f64,
    pub error_tail: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    pub n: u32,
    pub cutoff: u32,
    pub before: StateNorms,
    pub after: StateNorms,
    pub h_c1: f64,
    pub min_divisor: f64,
    pub amplification: f64,
    pub alias_tail: f64,
    pub inverse_iterations: usize,
    pub inverse_residual: f64,
    /// `|v' - v|`
    pub drift_change: f64,
    /// `|ŵ'(0)|` before renormalization.
    pub w_mean_before: f64,
    /// `|P_V ŵ(0)|` after renormalization.
    pub mean_defect: f64,
    pub omega: Option<OmegaReport>,
    /// Measured norm over bound expression for the four estimates of the
    /// inductive step: `‖Ã'-A‖₀`, `‖Ã'-A‖_r`, `‖ṽ'-v‖₀`, `‖ṽ'-v‖_r`.
    pub bound_ratios: Option<[f64; 4]>,
    pub flags: Vec<String>,
    pub wall_ms: f64,
}

pub struct StepOutcome<T> {
    pub state: ActionState<T>,
    pub h: TorusMap<T>,
    pub report: StepReport,
}

fn sup0<T: Real>(f: &SpectralField<T>) -> f64 {
    order_sups(f, 0)[0].to_f64_lossy()
}

fn ratio(measured: f64, bound: f64) -> f64 {
    if measured == 0.0 {
        0.0
    } else {
        measured / bound
    }
}

fn bound_ratios(n: f64, d: f64, b: &StateNorms, f_new: &StateNorms, w_pre: &StateNorms) -> [f64; 4] {
    let r = b.r as f64;
    let tau = d - 1.0;
    let (e0, er, h0, hr) = (b.eps0, b.eps_r, b.eta0, b.eta_r);
    let s = 1.0 / r;
    let b1 = n.powf(-r + d + 1.0) * er
        + n.powf(-r + 3.0 * d + 3.0 + tau) * hr
        + n.powf(2.0 * d + 2.0 + tau) * h0.powf(1.0 - s) * hr.powf(s) * e0
        + n.powf(d + 1.0 + tau) * h0 * e0.powf(1.0 - s) * er.powf(s);
    let b2 = 1.0 + er + n.powf(2.0 * d + 2.0 + tau) * hr;
    let b3 = n.powf(-r + d + 1.0) * hr
        + n.powf(2.0 * d + 2.0 + tau) * h0.powf(2.0 - s) * hr.powf(s)
        + h0.powf(1.0 - s) * hr.powf(s) * e0
        + h0 * e0.powf(1.0 - s) * er.powf(s);
    let b4 = 1.0 + n.powf(2.0 * d + 3.0 + tau) * hr;
    [
        ratio(f_new.eps0, b1),
        ratio(f_new.eps_r, b2),
        ratio(w_pre.eta0, b3),
        ratio(w_pre.eta_r, b4),
    ]
}

/// One step of the scheme at truncation `N`: solve the linearized
/// equations, conjugate by `H = Id + h`, and move the `V`-part of the new
/// mean drift into `v`.
pub fn inductive_step<T: Real>(
    state: &ActionState<T>,
    eig: &EigenData<T>,
    n: u32,
    sched: &KamSchedule,
    delta: f64,
) -> Result<StepOutcome<T>> {
    let start = Instant::now();
    let d = state.dim();
    let cutoff = state.cutoff();
    let aut = &state.aut;
    let b = state.norms;
    let mut flags = Vec::new();

    if b.eps1 >= 1.0 {
        return Err(KamError::Safeguard(format!("eps1 = {:e} must be below 1", b.eps1)));
    }
    let smallness = b.eps0 + f64::from(n).powf(invert_exponent(d)) * b.eta1;
    if smallness >= delta {
        return Err(KamError::Safeguard(format!(
            "eps0 + N^{} eta1 = {smallness:e} must be below delta = {delta:e} (N = {n})",
            invert_exponent(d)
        )));
    }

    let sol = solve_conjugacy(&state.f, &state.w, &state.v, aut, n)?;
    let h_sups = order_sups(&sol.h, 1);
    let h_c1 = h_sups[0].max(h_sups[1]).to_f64_lossy();
    if h_c1 >= 0.5 {
        return Err(KamError::Safeguard(format!("|h|_1 = {h_c1:e} must be below 1/2")));
    }

    let omega = if sched.diagnostics {
        let ef = compute_error_fields(&state.f, &state.w, aut, eig, &state.v, cutoff, T::lit(RELATION_BUDGET))?;
        if ef.relation_violation {
            flags.push("relation".to_string());
        }
        let td = OperatorSpec::new(OperatorKind::TDot, n, Some(aut));
        let tsd = OperatorSpec::new(OperatorKind::TSharpDot, n, Some(aut));
        let t = OperatorSpec::new(OperatorKind::T, n, Some(aut));
        Some(OmegaReport {
            omega1: sup0(&smooth_project(&state.f, &td)),
            omega2: sup0(&smooth_project(&sol.h, &td).apply_int_matrix(aut.matrix())),
            omega3: sup0(&smooth_project(&sol.h, &tsd)),
            omega4_bound: h_sups[1].to_f64_lossy() * b.eps0,
            omega5: sup0(&smooth_project(&ef.e_star.with_cutoff(n), &t)),
            truncated_residual: truncated_conjugacy_residual(&sol.h, &state.f, aut, &ef.e_star, n).to_f64_lossy(),
            relation_defect: ef.relation_defect.to_f64_lossy(),
            error_norm0: sup0(&ef.e),
            error_tail: ef.tail.to_f64_lossy(),
        })
    } else {
        None
    };

    let hmap = TorusMap::near_identity(sol.h.with_cutoff(cutoff))?;
    let atil = TorusMap::new(aut.matrix().clone(), state.f.clone())?;
    let conj = conjugate_action(&hmap, &atil, &state.vtil(), cutoff)?;
    let alias_tail = conj.tail.to_f64_lossy();
    let scale = state.f.abs_sum() + state.vtil().abs_sum();
    if alias_tail > sched.alias_tol * scale.to_f64_lossy() {
        flags.push("aliasing".to_string());
    }

    let f_new = conj.atil.periodic;
    let neg_v: Vec<T> = state.v.iter().map(|&x| -x).collect();
    let w_pre = conj.vtil.add_constant(&neg_v);
    let w_mean = w_pre.mean().to_vec();
    let p = eig.p_v.matvec(&w_mean);
    let v_new: Vec<T> = state.v.iter().zip(&p).map(|(&a, &b)| a + b).collect();
    let mut w_new = w_pre.clone();
    w_new.set_mean(&w_mean.iter().zip(&p).map(|(&a, &b)| a - b).collect::<Vec<_>>());

    let f_sups = order_sups(&f_new, b.r);
    let w_pre_sups = order_sups(&w_pre, b.r);
    let mut w_sups = w_pre_sups.clone();
    w_sups[0] = order_sups(&w_new, 0)[0];
    let new_state = ActionState::from_parts(aut.clone(), f_new, v_new, w_new, &f_sups, &w_sups, b.r);
    let after = new_state.norms;
    let pre_norms = StateNorms::from_sups(b.r, &f_sups, &w_pre_sups);
    let mean_defect = new_state.mean_defect(eig).to_f64_lossy();
    if mean_defect > 1e-11 {
        flags.push("mean_defect".to_string());
    }

    let report = StepReport {
        n,
        cutoff,
        before: b,
        after,
        h_c1,
        min_divisor: sol.min_divisor.to_f64_lossy(),
        amplification: sol.amplification.to_f64_lossy(),
        alias_tail,
        inverse_iterations: conj.inverse.iterations,
        inverse_residual: conj.inverse.residual.to_f64_lossy(),
        drift_change: norm2(&p).to_f64_lossy(),
        w_mean_before: norm2(&w_mean).to_f64_lossy(),
        mean_defect,
        bound_ratios: sched.diagnostics.then(|| bound_ratios(f64::from(n), d as f64, &b, &after, &pre_norms)),
        omega,
        flags,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(StepOutcome { state: new_state, h: hmap, report })
}
