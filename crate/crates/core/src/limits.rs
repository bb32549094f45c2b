//! Closed-form `T = 0` states and distances of the numerical densities to them.
//!
//! Spatial: `I = A sinc(k0 r)` on the ball `r <= r0 = pi/k0`, `k0 = sqrt(2 U_s0)/hbar`.
//! Temporal: `I = A cos(w0 t)` on `|t| <= t0 = pi/(2 w0)`, `w0 = c sqrt(-2 U_t0)/hbar`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{quadrature, second_derivative, GridFunction, Stencil, Weight};
use crate::spatial::SpatialSolution;
use crate::temporal::TemporalSolution;

/// Nodes of the comparison grid used by the limit distances.
const COMPARISON_NODES: usize = 4097;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitKind {
    SpatialSinc,
    TemporalCos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticLimitState {
    pub kind: LimitKind,
    /// `k0` or `w0`.
    pub wavenumber: f64,
    /// `r0` or `t0`.
    pub boundary: f64,
    pub amplitude: f64,
    /// `U_s0` or `U_t0`.
    pub level: f64,
}

/// `sin(x)/x` with the removable point filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // Taylor to x^4, exact to rounding here
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

pub fn sinc_limit(u_s0: f64, hbar: f64) -> Result<AnalyticLimitState> {
    if !(u_s0 > 0.0 && u_s0.is_finite()) {
        return Err(Error::InvalidInput(format!("U_s0 must be positive, got {u_s0}")));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
    }
    let k0 = (2.0 * u_s0).sqrt() / hbar;
    Ok(AnalyticLimitState {
        kind: LimitKind::SpatialSinc,
        wavenumber: k0,
        boundary: PI / k0,
        // int_0^r0 sinc^2(k0 r) 4 pi r^2 dr = 2 pi^2 / k0^3
        amplitude: (k0.powi(3) / (2.0 * PI * PI)).sqrt(),
        level: u_s0,
    })
}

pub fn cos_limit(u_t0: f64, c: f64, hbar: f64) -> Result<AnalyticLimitState> {
    if !(u_t0 < 0.0 && u_t0.is_finite()) {
        return Err(Error::WrongSign { u_t0 });
    }
    if !(c > 0.0 && c.is_finite() && hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::InvalidInput(format!("c and hbar must be positive, got c = {c}, hbar = {hbar}")));
    }
    let w0 = c * (-2.0 * u_t0).sqrt() / hbar;
    let t0 = FRAC_PI_2 / w0;
    Ok(AnalyticLimitState {
        kind: LimitKind::TemporalCos,
        wavenumber: w0,
        boundary: t0,
        amplitude: (1.0 / t0).sqrt(),
        level: u_t0,
    })
}

impl AnalyticLimitState {
    /// Amplitude at `r` (spatial) or `t` (temporal); exactly zero on the
    /// support boundary and outside it.
    pub fn amplitude_at(&self, x: f64) -> f64 {
        if x.abs() >= self.boundary {
            return 0.0;
        }
        match self.kind {
            LimitKind::SpatialSinc => self.amplitude * sinc(self.wavenumber * x),
            LimitKind::TemporalCos => self.amplitude * (self.wavenumber * x).cos(),
        }
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.amplitude_at(x).powi(2)
    }

    pub fn weight(&self) -> Weight {
        match self.kind {
            LimitKind::SpatialSinc => Weight::RadialBall,
            LimitKind::TemporalCos => Weight::Unit,
        }
    }

    /// Amplitude on `nodes` uniform nodes spanning the support: `[0, r0]` or
    /// `[-t0, t0]`.
    pub fn sample_amplitude(&self, nodes: usize) -> Result<GridFunction> {
        let lo = match self.kind {
            LimitKind::SpatialSinc => 0.0,
            LimitKind::TemporalCos => -self.boundary,
        };
        GridFunction::uniform(lo, self.boundary, nodes, |x| self.amplitude_at(x))
    }
}

/// Max-norm defect of `lap I + k0^2 I = 0` (sinc) or `I'' + w0^2 I = 0`
/// (cosine) under the finite-difference stencils at spacing close to `h`.
/// End nodes on the support boundary are excluded.
pub fn eigen_residual(state: &AnalyticLimitState, grid_spacing: f64) -> Result<f64> {
    let span = match state.kind {
        LimitKind::SpatialSinc => state.boundary,
        LimitKind::TemporalCos => 2.0 * state.boundary,
    };
    if !(grid_spacing > 0.0) {
        return Err(Error::InvalidGrid(format!("spacing must be positive, got {grid_spacing}")));
    }
    let intervals = (span / grid_spacing).round();
    if !(intervals >= 65.0 && intervals < 1e8) {
        return Err(Error::InvalidGrid(format!("spacing {grid_spacing} gives {intervals} intervals, need 65..1e8")));
    }
    let n = intervals as usize + 1;
    let amp = state.sample_amplitude(n)?;
    let (stencil, first) = match state.kind {
        LimitKind::SpatialSinc => (Stencil::RadialLaplacian3D, 0),
        LimitKind::TemporalCos => (Stencil::Cartesian1D, 1),
    };
    let d2 = second_derivative(&amp, stencil)?;
    let k2 = state.wavenumber * state.wavenumber;
    Ok((first..n - 1)
        .map(|i| (d2.values()[i] + k2 * amp.values()[i]).abs())
        .fold(0.0, f64::max))
}

/// Max-norm distance between two densities on `[lo, hi]`, each renormalized
/// over that interval with `weight`, relative to the peak of `reference`.
fn renormalized_distance(
    numeric: impl Fn(f64) -> f64,
    reference: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    weight: Weight,
) -> Result<f64> {
    let a = GridFunction::uniform(lo, hi, COMPARISON_NODES, numeric)?;
    let b = GridFunction::uniform(lo, hi, COMPARISON_NODES, reference)?;
    let (za, zb) = (quadrature(&a, weight), quadrature(&b, weight));
    if !(za > 0.0 && zb > 0.0) {
        return Err(Error::InvalidInput("density has no mass on the common support".into()));
    }
    let peak = b.max_abs() / zb;
    let dist = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x / za - y / zb).abs())
        .fold(0.0, f64::max);
    Ok(dist / peak)
}

/// Distance of the numerical `rho_s` to the sinc-limit density on the common
/// support `[0, min(r_m, r0)]`, as a fraction of the limit peak.
pub fn spatial_limit_distance(solution: &SpatialSolution, limit: &AnalyticLimitState) -> Result<f64> {
    if limit.kind != LimitKind::SpatialSinc {
        return Err(Error::KindMismatch);
    }
    let hi = solution.r_m.min(limit.boundary);
    renormalized_distance(|r| solution.density_at(r), |r| limit.density_at(r), 0.0, hi, Weight::RadialBall)
}

/// Distance of the numerical `rho_t` to the cosine-limit density on the
/// common support `[-min(t_a, t0), min(t_a, t0)]`, as a fraction of the
/// limit peak. Both densities are even, so the half range is used.
pub fn temporal_limit_distance(solution: &TemporalSolution, limit: &AnalyticLimitState) -> Result<f64> {
    if limit.kind != LimitKind::TemporalCos {
        return Err(Error::KindMismatch);
    }
    let hi = solution.t_a.min(limit.boundary);
    renormalized_distance(|t| solution.density_at(t), |t| limit.density_at(t), 0.0, hi, Weight::Unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PhysicalConstants;
    use crate::spatial::{solve_spatial, SpatialSolveInput};
    use crate::temporal::{solve_temporal, TemporalSolveInput};
    use proptest::prelude::*;

    fn ulps(a: f64, b: f64) -> u64 {
        (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
    }

    #[test]
    fn sinc_state_for_unit_level() {
        let s = sinc_limit(1.0, 1.0).unwrap();
        assert_eq!(s.kind, LimitKind::SpatialSinc);
        assert!((s.wavenumber - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.boundary - 2.221_441_469_079_183).abs() < 1e-12);
        assert_eq!(s.amplitude_at(s.boundary), 0.0);
        assert!(s.amplitude_at(s.boundary * (1.0 - 1e-15)).abs() < 1e-12);
    }

    #[test]
    fn sinc_amplitude_normalizes_by_independent_quadrature() {
        let s = sinc_limit(1.0, 1.0).unwrap();
        // midpoint rule, independent of the Simpson implementation
        let m = 200_000;
        let h = s.boundary / m as f64;
        let total: f64 = (0..m)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                4.0 * PI * r * r * s.density_at(r) * h
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
        assert!((s.amplitude.powi(2) - s.wavenumber.powi(3) / (2.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn cosine_state_for_unit_level() {
        let s = cos_limit(-1.0, 1.0, 1.0).unwrap();
        assert!((s.wavenumber - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.boundary - 1.110_720_734_539_591_5).abs() < 1e-12);
        assert!((s.amplitude.powi(2) - 2.0 * s.wavenumber / PI).abs() < 1e-15);
        assert_eq!(s.amplitude_at(s.boundary), 0.0);
        assert_eq!(s.amplitude_at(-s.boundary), 0.0);
        assert_eq!(s.amplitude_at(1.2), 0.0);
    }

    #[test]
    fn cosine_amplitude_normalizes_by_independent_quadrature() {
        let s = cos_limit(-1.0, 1.0, 1.0).unwrap();
        let m = 200_000;
        let h = 2.0 * s.boundary / m as f64;
        let total: f64 = (0..m).map(|i| s.density_at(-s.boundary + (i as f64 + 0.5) * h) * h).sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn wrong_levels_rejected() {
        assert!(sinc_limit(0.0, 1.0).is_err());
        assert!(sinc_limit(-1.0, 1.0).is_err());
        assert_eq!(cos_limit(0.5, 1.0, 1.0).unwrap_err(), Error::WrongSign { u_t0: 0.5 });
    }

    #[test]
    fn sinc_residual_is_second_order() {
        let s = sinc_limit(1.0, 1.0).unwrap();
        let h = s.boundary / 128.0;
        let ratio = eigen_residual(&s, h).unwrap() / eigen_residual(&s, h / 2.0).unwrap();
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn cosine_residual_small_at_fine_spacing() {
        let s = cos_limit(-1.0, 1.0, 1.0).unwrap();
        let r = eigen_residual(&s, s.boundary / 512.0).unwrap();
        // Taylor remainder h^2/12 w0^4 A
        let h = s.boundary / 512.0;
        assert!(r < 1e-3);
        assert!(r <= 1.01 * h * h / 12.0 * s.wavenumber.powi(4) * s.amplitude);
        let ratio = eigen_residual(&s, h).unwrap() / eigen_residual(&s, h / 2.0).unwrap();
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn zero_amplitude_has_zero_residual() {
        for mut s in [sinc_limit(1.0, 1.0).unwrap(), cos_limit(-1.0, 1.0, 1.0).unwrap()] {
            s.amplitude = 0.0;
            assert_eq!(eigen_residual(&s, s.boundary / 200.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn coarse_spacing_rejected() {
        let s = sinc_limit(1.0, 1.0).unwrap();
        assert!(eigen_residual(&s, s.boundary / 10.0).is_err());
    }

    #[test]
    fn sinc_at_small_arguments() {
        assert_eq!(sinc(0.0), 1.0);
        for x in [1e-5, 5e-5, 1.2e-4] {
            assert!((sinc(x) - x.sin() / x).abs() < 1e-15);
        }
    }

    #[test]
    fn limit_distance_shrinks_as_temperature_drops() {
        let hot = solve_spatial(&SpatialSolveInput::new(PhysicalConstants::natural(0.1), 1.0)).unwrap();
        let cold = solve_spatial(&SpatialSolveInput::new(PhysicalConstants::natural(1e-3), 1.0)).unwrap();
        let lim = sinc_limit(1.0, 1.0).unwrap();
        let (dh, dc) = (spatial_limit_distance(&hot, &lim).unwrap(), spatial_limit_distance(&cold, &lim).unwrap());
        assert!(dc < dh, "{dc} vs {dh}");

        let hot = solve_temporal(&TemporalSolveInput::new(PhysicalConstants::natural(0.1), -1.0)).unwrap();
        let cold = solve_temporal(&TemporalSolveInput::new(PhysicalConstants::natural(1e-3), -1.0)).unwrap();
        let lim = cos_limit(-1.0, 1.0, 1.0).unwrap();
        let (dh, dc) = (temporal_limit_distance(&hot, &lim).unwrap(), temporal_limit_distance(&cold, &lim).unwrap());
        assert!(dc < dh, "{dc} vs {dh}");
        assert!(matches!(spatial_limit_distance(&solve_spatial(&SpatialSolveInput::new(PhysicalConstants::natural(0.1), 1.0)).unwrap(), &lim), Err(Error::KindMismatch)));
    }

    proptest! {
        #[test]
        fn quantization_holds_to_one_ulp(u in 1e-3f64..1e3, c in 0.1f64..10.0, hbar in 0.1f64..10.0) {
            let s = sinc_limit(u, hbar).unwrap();
            prop_assert!(ulps(s.wavenumber * s.boundary, PI) <= 1);
            let t = cos_limit(-u, c, hbar).unwrap();
            prop_assert!(ulps(t.wavenumber * t.boundary, FRAC_PI_2) <= 1);
            prop_assert!(s.amplitude > 0.0 && t.amplitude > 0.0);
        }
    }
}
