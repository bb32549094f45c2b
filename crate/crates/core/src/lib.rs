//! Self-trapped maximum-entropy wave functions of a relativistic, mass-less
//! Madelung fluid.
//!
//! The crate integrates the separated nonlinear quantum-potential equations
//! (a spherically symmetric spatial part and a temporal part), locates the
//! finite support where the potential diverges, reconstructs the Gibbs-form
//! densities, and checks them against the closed-form `T -> 0` states
//! (a sinc ball and a cosine time window). On top of the limit states it
//! computes the emergent mass and verifies the Klein-Gordon residual,
//! the energy-momentum-mass identity and the time uncertainty.
//!
//! Module map:
//!
//! - [`numerics`]: adaptive Runge-Kutta with blow-up detection, quadrature,
//!   finite-difference stencils.
//! - [`profile`]: potential/density profiles and Gibbs density reconstruction.
//! - [`spatial`], [`temporal`]: the two ODE solvers.
//! - [`limits`]: closed-form limit states and convergence distances.
//! - [`mass`]: emergent mass, energy-momentum relation, time uncertainty.
//! - [`kg`]: product state, Klein-Gordon residual, potential round trip.
//! - [`cli`]: configuration, sweeps and file export for the `madelung` binary.

pub mod cli;
pub mod constants;
pub mod error;
pub mod kg;
pub mod limits;
pub mod mass;
pub mod numerics;
pub mod profile;
pub mod spatial;
pub mod temporal;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
