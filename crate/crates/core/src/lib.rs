//! Numerical harmonic analysis on SL(3,R).
//!
//! Spherical functions via the Harish-Chandra integral over SO(3), the phase
//! function `k -> B(H, Ad(k) H')` and its critical structure, uniform decay
//! bounds with the `Omega` weight, a van der Corput model integral and the
//! Duistermaat substitution map.
//!
//! Quadrature-heavy loops run on rayon when the `parallel` feature (on by
//! default) is enabled; results are bit-identical either way.

pub mod duistermaat;
pub mod error;
pub mod exec;
pub mod group;
pub mod lie;
pub mod phase;
pub mod plot;
pub mod quadrature;
pub mod spherical;
pub mod vdc;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
pub use group::{GroupElement, Rotation};
pub use lie::{CartanVector, Root, SpectralParam, TracelessMatrix, WeylElement};
pub use quadrature::{QuadratureRule, RuleSize};
