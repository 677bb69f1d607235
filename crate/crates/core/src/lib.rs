//! Interaction model and ro-vibrational structure of the Er2 and Tm2 dimers.
//!
//! Energies are in cm^-1 and distances in bohr unless stated otherwise;
//! dispersion coefficients are in atomic units (`E_h a0^n`).

pub mod constants;
pub mod curves;
pub mod dispersion;
pub mod linalg;
pub mod lines;
pub mod rovib;
pub mod spintensor;
pub mod tensor;
pub mod wigner;

pub use constants::{Constants, Species};
pub use tensor::{Strengths, TensorOp};
pub use wigner::AngMom;
