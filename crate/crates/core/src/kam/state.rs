use serde::Serialize;

use crate::error::{KamError, Result};
use crate::scalar::{norm2, Real};
use crate::spectral::{norms_from_sups, order_sups, SpectralField};
use crate::torus_algebra::{EigenData, ToralAutomorphism};

/// `ε_l = ‖f‖_l` and `η_l = ‖w‖_l` for `l ∈ {0, 1, r}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateNorms {
    pub r: usize,
    pub eps0: f64,
    pub eps1: f64,
    pub eps_r: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub eta_r: f64,
}

impl StateNorms {
    pub fn from_sups<T: Real>(r: usize, f_sups: &[T], w_sups: &[T]) -> Self {
        let f = norms_from_sups(f_sups);
        let w = norms_from_sups(w_sups);
        let at = |v: &[T], l: usize| v[l.min(v.len() - 1)].to_f64_lossy();
        Self { r, eps0: at(&f, 0), eps1: at(&f, 1), eps_r: at(&f, r), eta0: at(&w, 0), eta1: at(&w, 1), eta_r: at(&w, r) }
    }

    /// `ε₀ + η₀`, the stopping quantity.
    pub fn c0_total(&self) -> f64 {
        self.eps0 + self.eta0
    }
}

/// One iterate: `Ã = A + f`, `ṽ = v + w`.
#[derive(Clone, Debug)]
pub struct ActionState<T> {
    pub aut: ToralAutomorphism,
    pub f: SpectralField<T>,
    pub v: Vec<T>,
    pub w: SpectralField<T>,
    pub norms: StateNorms,
}

impl<T: Real> ActionState<T> {
    pub fn new(aut: ToralAutomorphism, f: SpectralField<T>, v: Vec<T>, w: SpectralField<T>, r: usize) -> Result<Self> {
        let d = aut.dim();
        for (name, g) in [("f", &f), ("w", &w)] {
            if g.dim() != d || g.range() != d {
                return Err(KamError::Dimension(format!("{name} must be a vector field on T^{d}")));
            }
        }
        if v.len() != d {
            return Err(KamError::Dimension("drift vector has the wrong length".into()));
        }
        let f_sups = order_sups(&f, r);
        let w_sups = order_sups(&w, r);
        let norms = StateNorms::from_sups(r, &f_sups, &w_sups);
        Ok(Self { aut, f, v, w, norms })
    }

    pub(crate) fn from_parts(
        aut: ToralAutomorphism,
        f: SpectralField<T>,
        v: Vec<T>,
        w: SpectralField<T>,
        f_sups: &[T],
        w_sups: &[T],
        r: usize,
    ) -> Self {
        let norms = StateNorms::from_sups(r, f_sups, w_sups);
        Self { aut, f, v, w, norms }
    }

    pub fn dim(&self) -> usize {
        self.aut.dim()
    }

    pub fn cutoff(&self) -> u32 {
        self.f.cutoff().max(self.w.cutoff())
    }

    /// `ṽ = v + w` as a field.
    pub fn vtil(&self) -> SpectralField<T> {
        self.w.add_constant(&self.v)
    }

    pub fn vnorm(&self) -> T {
        norm2(&self.v)
    }

    /// `|P_V ŵ(0)|`: zero when the state is normalized.
    pub fn mean_defect(&self, eig: &EigenData<T>) -> T {
        norm2(&eig.p_v.matvec(self.w.mean()))
    }

    /// `|P_{V^⊥} v|`.
    pub fn drift_defect(&self, eig: &EigenData<T>) -> T {
        norm2(&eig.p_vperp.matvec(&self.v))
    }
}
