//! Numerical laboratory for the stochastic porous medium equation with
//! Lévy noise
//!
//! ```text
//! dX = L Psi(X) dt + ∫_Z f(X(t-), z) Ñ(dt, dz)
//! ```
//!
//! solved in the dual space `F*_{1,2}` through the doubly regularized
//! approximation `(eps - L)(Psi + lambda I)`, with the double limit
//! `lambda -> 0`, `eps -> 0` studied by Monte Carlo.

pub mod app;
pub mod cascade;
pub mod error;
pub mod estimates;
pub mod noise;
pub mod psi;
pub mod scenario;
pub mod spaces;
pub mod spectral;
pub mod stats;
pub mod stepper;

pub use error::{Error, Result};
pub use noise::{ContractionMap, JumpCoefficient, NoiseModel, NoisePath};
pub use psi::{Nonlinearity, PsiKind};
pub use spaces::NormKind;
pub use spectral::{Field, OperatorFunction, OperatorSpectrum};
pub use stepper::{StepConfig, Trajectory};
