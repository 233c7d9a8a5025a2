use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::lattice::for_each_in_ball;

/// Default floor below which a certificate is treated as resonant.
pub const DEFAULT_DIOPHANTINE_FLOOR: f64 = 1e-8;

/// Empirical Diophantine constant of a vector, exhaustive up to a cutoff.
///
/// `c = min |⟨k, v⟩|·|k|^τ` over `0 < |k| ≤ cutoff`. This is an upper bound on
/// the true constant (a finite search can only certify so far), and it is
/// what bounds every small divisor the engine actually divides by.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineCertificate {
    pub c: f64,
    pub tau: f64,
    pub cutoff: i64,
    pub argmin: Vec<i64>,
}

impl DiophantineCertificate {
    /// Lower bound on `|⟨n, v⟩|` implied for `|n| ≤ cutoff`.
    pub fn divisor_floor(&self, n_norm: f64) -> f64 {
        self.c / n_norm.powf(self.tau)
    }
}

/// Exhaustive scan; `k` and `-k` give the same value so only half the ball
/// is visited.
pub fn estimate_diophantine(v: &[f64], tau: f64, cutoff: i64, floor: f64) -> Result<DiophantineCertificate> {
    if !(tau >= 0.0) {
        return Err(KamError::Parameter(format!("diophantine exponent must be nonnegative, got {tau}")));
    }
    if cutoff < 1 {
        return Err(KamError::Input("diophantine cutoff must be at least 1".into()));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(KamError::Input("zero vector has no diophantine type".into()));
    }
    let half_tau = tau / 2.0;
    let sqrt_case = (half_tau - 0.5).abs() < f64::EPSILON;
    let mut best = f64::INFINITY;
    let mut argmin = Vec::new();
    for_each_in_ball(v.len(), cutoff * cutoff, true, |k| {
        let kv: f64 = k.iter().zip(v).map(|(&a, &b)| a as f64 * b).sum::<f64>().abs();
        if kv >= best {
            // |k|^τ ≥ 1, so the product cannot beat `best`.
            return;
        }
        let n2 = k.iter().map(|x| x * x).sum::<i64>() as f64;
        let weight = if sqrt_case { n2.sqrt() } else { n2.powf(half_tau) };
        let val = kv * weight;
        if val < best {
            best = val;
            argmin = k.to_vec();
        }
    });
    if best < floor {
        return Err(KamError::DegenerateDivisor { k: argmin, value: best, floor });
    }
    Ok(DiophantineCertificate { c: best, tau, cutoff, argmin })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: [f64; 2] = [0.850_650_808_352_039_9, 0.525_731_112_119_133_6];

    #[test]
    fn golden_vector_constant() {
        let c100 = estimate_diophantine(&GOLDEN, 1.0, 100, DEFAULT_DIOPHANTINE_FLOOR).unwrap();
        assert!((c100.c - 0.447).abs() < 1e-3, "{}", c100.c);
        let c1000 = estimate_diophantine(&GOLDEN, 1.0, 1000, DEFAULT_DIOPHANTINE_FLOOR).unwrap();
        assert!(c1000.c <= c100.c);
    }

    #[test]
    fn resonant_vector_flagged() {
        match estimate_diophantine(&[1.0, 0.0], 1.0, 10, DEFAULT_DIOPHANTINE_FLOOR) {
            Err(KamError::DegenerateDivisor { k, value, .. }) => {
                assert_eq!(k, vec![0, 1]);
                assert_eq!(value, 0.0);
            }
            other => panic!("expected degenerate divisor, got {other:?}"),
        }
    }

    #[test]
    fn sign_and_permutation_invariance() {
        let v = [0.3, 0.8, (1.0f64 - 0.73).sqrt()];
        let base = estimate_diophantine(&v, 2.0, 12, 0.0).unwrap().c;
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert_eq!(estimate_diophantine(&neg, 2.0, 12, 0.0).unwrap().c, base);
        let perm = [v[2], v[0], v[1]];
        let pc = estimate_diophantine(&perm, 2.0, 12, 0.0).unwrap().c;
        assert!((pc - base).abs() <= 1e-15 * base);
    }
}
