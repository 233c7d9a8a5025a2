use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diffeo::{compose_with_tol, TorusMap};
use crate::error::{KamError, Result};
use crate::scalar::{norm2, Real};
use crate::torus_algebra::EigenData;

use super::params::{calibrate_delta, KamSchedule};
use super::state::{ActionState, StateNorms};
use super::step::{inductive_step, StepReport};

/// One JSON-lines trace record per completed step. Norms are those of the
/// state after the step; `N` is the truncation used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    #[serde(rename = "N")]
    pub n: u32,
    pub eps0: f64,
    #[serde(rename = "epsR")]
    pub eps_r: f64,
    pub eta0: f64,
    pub eta1: f64,
    #[serde(rename = "etaR")]
    pub eta_r: f64,
    pub vnorm: f64,
    pub min_divisor: Option<f64>,
    pub h_c1: f64,
    pub alias_tail: f64,
    pub wall_ms: f64,
    pub flags: Vec<String>,
}

impl TraceRecord {
    fn from_report(step: usize, rep: &StepReport, vnorm: f64) -> Self {
        let a = rep.after;
        Self {
            step,
            n: rep.n,
            eps0: a.eps0,
            eps_r: a.eps_r,
            eta0: a.eta0,
            eta1: a.eta1,
            eta_r: a.eta_r,
            vnorm,
            min_divisor: rep.min_divisor.is_finite().then_some(rep.min_divisor),
            h_c1: rep.h_c1,
            alias_tail: rep.alias_tail,
            wall_ms: rep.wall_ms,
            flags: rep.flags.clone(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace record serializes")
    }
}

/// Receives trace records as steps complete.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord) -> Result<()>;
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        self.push(rec.clone());
        Ok(())
    }
}

/// Writes each record as one JSON line and flushes.
pub struct JsonlSink<W: Write>(pub W);

impl<W: Write> TraceSink for JsonlSink<W> {
    fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        writeln!(self.0, "{}", rec.to_json_line())?;
        self.0.flush()?;
        Ok(())
    }
}

pub struct RunOutcome<T> {
    /// `H_n∘…∘H_0`.
    pub h_total: TorusMap<T>,
    pub v_star: Vec<T>,
    pub converged: bool,
    pub steps: usize,
    pub initial: StateNorms,
    pub state: ActionState<T>,
    pub reports: Vec<StepReport>,
    pub trace: Vec<TraceRecord>,
    /// `None` when no step was needed.
    pub delta: Option<f64>,
}

/// Seed for the `δ` calibration probes.
pub const CALIBRATION_SEED: u64 = 0x6b616d;
pub const CALIBRATION_PROBES: usize = 8;

/// Iterates the inductive step until `ε₀ + η₀ < target_tol` or
/// `max_steps`. Non-convergence within the step budget is reported through
/// `converged`; divergence and safeguard violations are errors.
pub fn run<T: Real>(
    state0: ActionState<T>,
    eig: &EigenData<T>,
    sched: &KamSchedule,
    sink: &mut dyn TraceSink,
) -> Result<RunOutcome<T>> {
    sched.validate()?;
    let d = state0.dim();
    let cap = sched.cutoff_cap;
    let mut state = if state0.cutoff() == cap && state0.f.cutoff() == state0.w.cutoff() {
        state0
    } else {
        ActionState::new(state0.aut.clone(), state0.f.with_cutoff(cap), state0.v.clone(), state0.w.with_cutoff(cap), sched.r)?
    };
    let mut delta = sched.delta;
    let initial = state.norms;
    let mut h_total = TorusMap::identity(d, cap);
    let mut reports = Vec::new();
    let mut trace = Vec::new();
    let mut growth = 0;
    let mut last = initial.c0_total();
    let mut converged = last < sched.target_tol;
    let mut steps = 0;
    while !converged && steps < sched.max_steps {
        let n = sched.n_at(steps);
        let dl = match delta {
            Some(x) => x,
            None => *delta.insert(calibrate_delta(&state.aut, eig, cap, CALIBRATION_PROBES, CALIBRATION_SEED)?),
        };
        let out = inductive_step(&state, eig, n, sched, dl)?;
        h_total = compose_with_tol(&out.h, &h_total, cap, sched.alias_tol)?.map;
        state = out.state;
        let rec = TraceRecord::from_report(steps, &out.report, state.vnorm().to_f64_lossy());
        sink.record(&rec)?;
        trace.push(rec);
        reports.push(out.report);
        steps += 1;
        let now = state.norms.c0_total();
        growth = if now > last { growth + 1 } else { 0 };
        if growth >= 3 {
            return Err(KamError::Divergence { step: steps });
        }
        last = now;
        converged = now < sched.target_tol;
    }
    let v_star = state.v.clone();
    let vn = norm2(&v_star).to_f64_lossy();
    if !(0.5..=2.0).contains(&vn) {
        return Err(KamError::Safeguard(format!("|v*| = {vn} left [1/2, 2]")));
    }
    let perp = state.drift_defect(eig).to_f64_lossy();
    if perp >= 1e-9 {
        return Err(KamError::Safeguard(format!("|P_Vperp v*| = {perp:e} is not below 1e-9")));
    }
    Ok(RunOutcome { h_total, v_star, converged, steps, initial, state, reports, trace, delta })
}

/// Empirical decay against the truncation schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub steps: usize,
    /// `-slope` of `log(ε₀+η₀)` against `log N_n` (nominal `N_n`).
    pub c0_exponent: Option<f64>,
    /// `C` with `ε_{n,r} ≤ C N_n^k`, fitted from the first step.
    pub cr_constant: Option<f64>,
    pub cr_growth_ok: bool,
    pub conforming: bool,
    pub note: String,
}

/// Fits the C⁰ decay exponent and checks the C^r growth bound.
pub fn verify_decay(trace: &[TraceRecord], sched: &KamSchedule) -> DecayReport {
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|r| r.eps0 + r.eta0 > 0.0)
        .map(|r| (sched.nominal_n(r.step).ln(), (r.eps0 + r.eta0).ln()))
        .collect();
    let all_zero = trace.iter().all(|r| r.eps0 + r.eta0 == 0.0 && r.eps_r == 0.0 && r.eta_r == 0.0);
    if all_zero {
        return DecayReport {
            steps: trace.len(),
            c0_exponent: None,
            cr_constant: None,
            cr_growth_ok: true,
            conforming: true,
            note: "all norms vanish".into(),
        };
    }
    let k = sched.k as f64;
    let first = &trace[0];
    let c = first.eps_r.max(first.eta_r) / sched.nominal_n(first.step).powf(k);
    let cr_growth_ok = trace
        .iter()
        .all(|r| r.eps_r.max(r.eta_r) <= c * sched.nominal_n(r.step).powf(k) * (1.0 + 1e-9));
    if pts.len() < 2 {
        return DecayReport {
            steps: trace.len(),
            c0_exponent: None,
            cr_constant: Some(c),
            cr_growth_ok,
            conforming: false,
            note: "fewer than two steps with nonzero norms".into(),
        };
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = -sxy / sxx;
    let conforming = exponent >= sched.y && cr_growth_ok;
    DecayReport {
        steps: trace.len(),
        c0_exponent: Some(exponent),
        cr_constant: Some(c),
        cr_growth_ok,
        conforming,
        note: format!("required exponent {}", sched.y),
    }
}
