//! Numerical engine shared by the solvers: adaptive Runge-Kutta with dense
//! output and blow-up detection, composite quadrature and centered
//! finite-difference stencils.

mod blowup;
mod grid;
mod ivp;
mod quadrature;
mod stencil;

pub use blowup::{refine_blowup, BlowupModel};
pub use grid::GridFunction;
pub use ivp::{integrate_ivp, step_doubling_defect, Direction, IvpProblem, IvpResult, Termination};
pub use quadrature::{quadrature, Weight};
pub use stencil::{second_derivative, Stencil};
