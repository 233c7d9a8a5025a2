use serde::{Deserialize, Serialize};

use crate::lattice::{for_each_in_ball, norm_sq};
use crate::scalar::Real;
use crate::torus_algebra::ToralAutomorphism;

use super::field::SpectralField;

/// The six truncation operators built from three frequency sets:
/// `S_N`: `0 < |n| ≤ N`;
/// `T#_N`: additionally `0 < |Aᵀn| ≤ N`;
/// `T_N`: additionally `0 < |(Aᵀ)⁻¹n| ≤ N`.
/// Dotted kinds keep the complement minus the zero mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    S,
    SDot,
    T,
    TDot,
    TSharp,
    TSharpDot,
}

impl OperatorKind {
    pub fn is_dotted(self) -> bool {
        matches!(self, Self::SDot | Self::TDot | Self::TSharpDot)
    }

    pub fn needs_automorphism(self) -> bool {
        !matches!(self, Self::S | Self::SDot)
    }
}

#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub n: u32,
    pub aut: Option<ToralAutomorphism>,
}

impl OperatorSpec {
    pub fn s(n: u32) -> Self {
        Self { kind: OperatorKind::S, n, aut: None }
    }

    pub fn new(kind: OperatorKind, n: u32, aut: Option<&ToralAutomorphism>) -> Self {
        assert!(
            !kind.needs_automorphism() || aut.is_some(),
            "operator {kind:?} needs the automorphism"
        );
        Self { kind, n, aut: aut.cloned() }
    }

    /// Membership in `Λ(kind, N)`, in exact integer arithmetic.
    pub fn in_lambda(&self, k: &[i64]) -> bool {
        let n2 = i64::from(self.n).pow(2);
        let k2 = norm_sq(k);
        if k2 == 0 || k2 > n2 {
            return false;
        }
        let image = match self.kind {
            OperatorKind::S | OperatorKind::SDot => return true,
            OperatorKind::TSharp | OperatorKind::TSharpDot => {
                self.aut.as_ref().unwrap().transpose().apply(k)
            }
            OperatorKind::T | OperatorKind::TDot => self.aut.as_ref().unwrap().inv_transpose().apply(k),
        };
        let m2 = norm_sq(&image);
        m2 > 0 && m2 <= n2
    }

    /// True when the operator keeps the coefficient at `k`.
    pub fn keeps(&self, k: &[i64]) -> bool {
        if k.iter().all(|&x| x == 0) {
            return false;
        }
        self.in_lambda(k) != self.kind.is_dotted()
    }

    /// Inner radius `M` with `{0 < |n| ≤ M} ⊆ Λ`.
    pub fn inner_radius<T: Real>(&self) -> T {
        let n = T::from_u32(self.n).unwrap();
        match &self.aut {
            Some(a) if self.kind.needs_automorphism() => n / a.dilation::<T>(),
            _ => n,
        }
    }

    /// All of `Λ` (both signs), for tests and diagnostics.
    pub fn lambda_set(&self, dim: usize) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        for_each_in_ball(dim, i64::from(self.n).pow(2), false, |k| {
            if self.in_lambda(k) {
                out.push(k.to_vec());
            }
        });
        out
    }
}

/// Applies a truncation operator; the zero mode is always dropped.
pub fn smooth_project<T: Real>(f: &SpectralField<T>, op: &OperatorSpec) -> SpectralField<T> {
    f.filter(false, |k| op.keeps(k))
}
