//! Equilibria and stability of synchronous machine systems.
//!
//! Two configurations are covered:
//!
//! - **Single machine** ([`single`]): a synchronous generator feeding a series
//!   R-L impedance load. Equilibria are the positive roots of a cubic in the
//!   rotor speed; stability is classified by a quadratic Lyapunov test, the
//!   Routh–Hurwitz criterion and the eigenvalues of the 3×3 linearization.
//! - **Two machines** ([`two`]): two identical machines with co-located
//!   resistive loads joined by an inductive tie line. Equilibria come from a
//!   degree-18 polynomial in the common speed, filtered by angle-recovery
//!   validity checks and cross-validated against multi-start Newton on the
//!   full algebraic system; stability comes from the 9×9 Jacobian spectrum.
//!
//! [`frames`] holds the rotating-frame transform shared by both models,
//! [`numerics`] the in-repo numerical kernels, and [`sim`] time-domain
//! experiments (frame consistency, basin probes).

pub mod error;
pub mod frames;
pub mod numerics;
pub mod sim;
pub mod single;
pub mod two;

pub use error::{Error, Result};
