//! Numerical KAM scheme for perturbations of affine `Z ⋉_λ R` actions on
//! tori: given an irreducible toral automorphism `A` with real eigenvector
//! `v` and a perturbed pair `(Ã, ṽ)`, iteratively builds a conjugacy `H`
//! and a drift `v*` proportional to `v` with `H∘Ã∘H⁻¹ ≈ A` and
//! `(DH·ṽ)∘H⁻¹ ≈ v*`.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod cohomology;
pub mod diffeo;
pub mod error;
pub mod factory;
pub mod kam;
pub mod lattice;
pub mod linalg;
pub mod runner;
pub mod scalar;
pub mod spectral;
pub mod torus_algebra;

pub use error::{KamError, Result};

pub type Field = spectral::SpectralField<f64>;
pub type Map = diffeo::TorusMap<f64>;
pub type Pair = factory::ActionPair<f64>;
pub type State = kam::ActionState<f64>;
pub type Eigen = torus_algebra::EigenData<f64>;
