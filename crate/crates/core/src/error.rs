use thiserror::Error;

#[derive(Debug, Error)]
pub enum KamError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not unimodular (determinant {0})")]
    NotUnimodular(i128),

    #[error("characteristic polynomial is reducible over the rationals")]
    Reducible,

    #[error("unsupported spectrum: {0}")]
    UnsupportedSpectrum(String),

    #[error("degenerate divisor: |<k,v>||k|^tau = {value:e} at k = {k:?} is below the floor {floor:e}")]
    DegenerateDivisor { k: Vec<i64>, value: f64, floor: f64 },

    #[error("resonance at frequency {freq:?}: |2 pi n.v| = {divisor:e}")]
    Resonance { freq: Vec<i64>, divisor: f64 },

    #[error("grid of size {size} cannot represent cutoff {cutoff} without aliasing")]
    Aliasing { size: usize, cutoff: u32 },

    #[error("map is not invertible: sup |Dh| = {norm:e} >= {bound:e}")]
    NonInvertible { norm: f64, bound: f64 },

    #[error("fixed point iteration did not converge after {iters} iterations (last change {change:e})")]
    NoConvergence { iters: usize, change: f64 },

    #[error("A - Id is singular: 1 is an eigenvalue, the automorphism is not ergodic")]
    Ergodicity,

    #[error("safeguard violated: {0}")]
    Safeguard(String),

    #[error("iteration diverged at step {step}: norms grew for three consecutive steps")]
    Divergence { step: usize },

    #[error("input too far from the affine model: {0}")]
    InputTooFar(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameters: {0}")]
    Parameter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = KamError> = std::result::Result<T, E>;
