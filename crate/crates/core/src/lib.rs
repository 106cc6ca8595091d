//! Exact static solutions of Born–Infeld type nonlinear electrodynamics.
//!
//! Point (and continuously distributed) electric, magnetic and dyonic sources
//! prescribe the displacement field `D` and the magnetic field `B` in closed
//! form. Everything else follows from inverting the nonlinear constitutive
//! relations pointwise: the electric field `E`, the magnetic intensity `H`,
//! the induced current densities that make `E` and `H` non-conservative, the
//! free charges seen through flux integrals and the Hamiltonian energy.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and parallel sweeps live in the `nled` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod constitutive;
pub mod continuous;
pub mod currents;
mod error;
pub mod fd;
mod math;
pub mod models;
pub mod observables;
pub mod quadrature;
pub mod sources;
pub mod specfn;
mod vector;

pub use constitutive::{
    dyonic_eh, dyonic_eh_generic, dyonic_eh_with_cross, electrostatic_e, magnetostatic_h,
    medium_matrix, AuxScalars, FieldState, MediumMatrix,
};
pub use error::{Error, Result};
pub use math::CompensatedSum;
pub use models::{Lagrangian, ModelKind, ModelParams};
pub use sources::{Charge, ChargeConfig, FieldKind, Potential};
pub use vector::{Point3, Vec3};

/// `4π`, the normalization used by every Coulomb sum in this crate.
pub const FOUR_PI: f64 = 4.0 * core::f64::consts::PI;
