//! Emergent mass, the energy-momentum relation and the time uncertainty of
//! a sinc x cosine state.
//!
//! With the potential flat at `U_tot = U_s0 + U_t0 < 0` on the support,
//! `m = sqrt(-2 U_tot)/c` and `hbar^2 w0^2 / c^2 = hbar^2 k0^2 + m^2 c^2`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::limits::{AnalyticLimitState, LimitKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassReport {
    pub u_s0: f64,
    pub u_t0: f64,
    pub u_tot: f64,
    pub m: f64,
    pub k0: f64,
    pub omega0: f64,
    /// `c sqrt(hbar^2 k0^2 + m^2 c^2)`.
    pub energy: f64,
    /// `pi / w0`.
    pub delta_t: f64,
    /// Half-width `t0` of the temporal support.
    pub t0: f64,
    /// `|hbar^2 w0^2 / c^2 - hbar^2 k0^2 - m^2 c^2|`.
    pub identity_residual: f64,
}

/// Classical energy and squared momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeBroglieState {
    pub energy: f64,
    pub p_sq: f64,
}

impl DeBroglieState {
    /// `E = hbar w0`, `p^2 = hbar^2 k0^2`.
    pub fn from_report(report: &MassReport, constants: &PhysicalConstants) -> Self {
        let h = constants.hbar;
        Self { energy: h * report.omega0, p_sq: h * h * report.k0 * report.k0 }
    }
}

pub fn compute_mass(
    spatial: &AnalyticLimitState,
    temporal: &AnalyticLimitState,
    constants: &PhysicalConstants,
) -> Result<MassReport> {
    if spatial.kind != LimitKind::SpatialSinc || temporal.kind != LimitKind::TemporalCos {
        return Err(Error::KindMismatch);
    }
    let (h, c) = (constants.hbar, constants.c);
    let u_tot = spatial.level + temporal.level;
    if !(u_tot < 0.0) {
        return Err(Error::NonNegativeUtot { u_tot });
    }
    let m = (-2.0 * u_tot).sqrt() / c;
    let (k0, w0) = (spatial.wavenumber, temporal.wavenumber);
    let identity_residual = (h * h * w0 * w0 / (c * c) - h * h * k0 * k0 - m * m * c * c).abs();
    let energy = c * (h * h * k0 * k0 + m * m * c * c).sqrt();
    Ok(MassReport {
        u_s0: spatial.level,
        u_t0: temporal.level,
        u_tot,
        m,
        k0,
        omega0: w0,
        energy,
        delta_t: PI / w0,
        t0: temporal.boundary,
        identity_residual,
    })
}

/// `|E^2/c^2 - p^2 - m^2 c^2|`.
pub fn energy_momentum_check(report: &MassReport, dbe: &DeBroglieState, constants: &PhysicalConstants) -> f64 {
    let c = constants.c;
    (dbe.energy * dbe.energy / (c * c) - dbe.p_sq - report.m * report.m * c * c).abs()
}

/// `Delta t = pi / w0`, which equals `pi hbar / E` and `2 t0`.
pub fn time_uncertainty(report: &MassReport, _constants: &PhysicalConstants) -> f64 {
    PI / report.omega0
}
