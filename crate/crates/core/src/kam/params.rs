use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cohomology::solve_conjugacy;
use crate::error::{KamError, Result};
use crate::scalar::Real;
use crate::spectral::{cr_norm, cr_norms, SpectralField};
use crate::torus_algebra::{EigenData, ToralAutomorphism};

use crate::factory::random_decaying_field;

/// Parameter choices that make the convergence proof go through.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoreticalParameters {
    pub dim: usize,
    pub sigma: f64,
    pub tau: f64,
    pub r: usize,
    pub k: usize,
    pub y_window: (f64, f64),
}

/// `τ = d-1`, `r = 42(d+1)`, `k = 6d+6` and the admissible window for `y`.
pub fn theoretical_parameters(dim: usize, sigma: f64) -> Result<TheoreticalParameters> {
    theoretical_parameters_with(dim, sigma, 42 * (dim + 1), 6 * dim + 6)
}

/// As [`theoretical_parameters`] with explicit `r` and `k`.
pub fn theoretical_parameters_with(dim: usize, sigma: f64, r: usize, k: usize) -> Result<TheoreticalParameters> {
    if dim < 2 {
        return Err(KamError::Parameter(format!("dimension must be at least 2, got {dim}")));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(KamError::Parameter(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    let d = dim as f64;
    let tau = d - 1.0;
    let (rf, kf) = (r as f64, k as f64);
    let k_min = (2.0 * d + 3.0 + tau) / sigma;
    if kf <= k_min {
        return Err(KamError::Parameter(format!("k = {k} must exceed (2d+3+tau)/sigma = {k_min}")));
    }
    let r_min = (2.0 / (1.0 - sigma))
        .max((1.0 + sigma) * (3.0 * d + 3.0 + tau + 2.0 * kf + 2.0 * (2.0 * d + 2.0 + tau) / (1.0 - sigma)));
    if rf <= r_min {
        return Err(KamError::Parameter(format!("r = {r} must exceed {r_min}")));
    }
    let lo = (2.0 * d + 2.0 + tau + kf / rf) / (1.0 - sigma - 1.0 / rf);
    let hi = (rf - 3.0 * d - 3.0 - tau - kf) / (1.0 + sigma);
    if !(lo > 0.0 && lo <= hi) {
        return Err(KamError::Parameter(format!("empty window for y: [{lo}, {hi}]")));
    }
    Ok(TheoreticalParameters { dim, sigma, tau, r, k, y_window: (lo, hi) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Theoretical,
    #[default]
    Practical,
}

/// Truncation schedule, safeguards and stopping rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KamSchedule {
    pub n0: u32,
    pub sigma: f64,
    pub r: usize,
    pub k: usize,
    pub y: f64,
    /// Smallness threshold for `ε₀ + N^{2d+2+τ} η₁`; calibrated when absent.
    pub delta: Option<f64>,
    pub max_steps: usize,
    pub target_tol: f64,
    pub cutoff_cap: u32,
    pub alias_tol: f64,
    /// Compute error fields and bound ratios each step.
    pub diagnostics: bool,
}

impl KamSchedule {
    pub fn practical(dim: usize) -> Self {
        Self {
            n0: 8,
            sigma: 0.5,
            r: 4,
            k: 6 * dim + 6,
            y: 1.0,
            delta: None,
            max_steps: 6,
            target_tol: 1e-9,
            cutoff_cap: 64,
            alias_tol: crate::diffeo::DEFAULT_ALIAS_TOL,
            diagnostics: true,
        }
    }

    /// The proof's parameters; only meaningful for parameter checks.
    pub fn theoretical(dim: usize) -> Result<Self> {
        let p = theoretical_parameters(dim, 0.5)?;
        Ok(Self { r: p.r, k: p.k, y: p.y_window.0, ..Self::practical(dim) })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(KamError::Parameter(m));
        if self.n0 < 1 {
            return bad("n0 must be at least 1".into());
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad(format!("sigma must lie in (0, 1), got {}", self.sigma));
        }
        if self.r < 1 {
            return bad("r must be at least 1".into());
        }
        if self.cutoff_cap < self.n0 {
            return bad(format!("cutoff_cap {} is below n0 {}", self.cutoff_cap, self.n0));
        }
        if !(self.target_tol > 0.0) {
            return bad("target_tol must be positive".into());
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return bad("delta must be positive".into());
            }
        }
        if !(self.alias_tol > 0.0) {
            return bad("alias_tol must be positive".into());
        }
        Ok(())
    }

    /// Nominal (uncapped) `N_n`: `N_{n+1} = ceil(N_n^{1+σ})`.
    pub fn nominal_n(&self, step: usize) -> f64 {
        let mut n = f64::from(self.n0);
        for _ in 0..step {
            n = n.powf(1.0 + self.sigma).ceil();
        }
        n
    }

    /// `N_n` actually used: the nominal value capped at `cutoff_cap`.
    pub fn n_at(&self, step: usize) -> u32 {
        let n = self.nominal_n(step);
        if n >= f64::from(self.cutoff_cap) {
            self.cutoff_cap
        } else {
            n as u32
        }
    }
}

/// `2d + 2 + τ` with `τ = d - 1`.
pub fn invert_exponent(dim: usize) -> f64 {
    3.0 * dim as f64 + 1.0
}

/// Calibrates `δ` so that `ε₀ + N^{2d+2+τ} η₁ < δ` keeps `‖h‖₁ < 1/2`:
/// `δ = 1/2 / max ‖h‖₁ / (ε₀ + N^{2d+2+τ} η₁)` over seeded probe fields
/// `(f, w)` with exponentially decaying spectra at truncation `n`.
///
/// The ratio falls with `n`, so a threshold valid at `n` is lenient at
/// smaller truncations; the engine therefore also checks `‖h‖₁ < 1/2`
/// directly after every solve.
pub fn calibrate_delta<T: Real>(
    aut: &ToralAutomorphism,
    eig: &EigenData<T>,
    n: u32,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    let d = aut.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = invert_exponent(d);
    let mut worst = 0.0f64;
    for i in 0..probes {
        let decay = 0.5 + (i % 4) as f64 * 0.5;
        let f: SpectralField<T> = random_decaying_field(&mut rng, d, n, 1e-3, decay, true);
        let mut w: SpectralField<T> = random_decaying_field(&mut rng, d, n, 1e-3, decay, true);
        let c = eig.p_vperp.matvec(w.mean());
        w.set_mean(&c);
        let sol = solve_conjugacy(&f, &w, &eig.v_unit, aut, n)?;
        let h1 = cr_norm(&sol.h, 1).to_f64_lossy();
        let eps0 = cr_norm(&f, 0).to_f64_lossy();
        let eta1 = cr_norms(&w, 1)[1].to_f64_lossy();
        let denom = eps0 + f64::from(n).powf(p) * eta1;
        if denom > 0.0 {
            worst = worst.max(h1 / denom);
        }
    }
    if worst == 0.0 {
        return Err(KamError::Parameter("delta calibration saw only zero probes".into()));
    }
    Ok(0.5 / worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d2_parameters() {
        let p = theoretical_parameters(2, 0.5).unwrap();
        assert_eq!((p.tau, p.r, p.k), (1.0, 126, 18));
        assert!((p.y_window.0 - 14.516).abs() < 1e-3, "{:?}", p.y_window);
        assert!((p.y_window.1 - 65.333).abs() < 1e-3);
        for d in 3..=4 {
            let p = theoretical_parameters(d, 0.5).unwrap();
            assert!(p.y_window.0 <= p.y_window.1);
        }
    }

    #[test]
    fn bad_overrides_rejected() {
        assert!(theoretical_parameters_with(2, 0.5, 40, 18).is_err());
        assert!(theoretical_parameters_with(2, 0.5, 126, 16).is_err());
        assert!(theoretical_parameters(1, 0.5).is_err());
        assert!(theoretical_parameters(2, 1.0).is_err());
    }

    #[test]
    fn schedule() {
        let s = KamSchedule::practical(2);
        assert_eq!(s.n_at(0), 8);
        assert_eq!(s.n_at(1), 23);
        assert_eq!(s.nominal_n(2), 111.0);
        assert_eq!(s.n_at(2), 64);
        assert!(s.validate().is_ok());
    }
}
