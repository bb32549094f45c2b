//! Temporal quantum potential
//!
//! ```text
//! U'' - U'^2 / (2T) + (4T c^2/hbar^2) U = 0,   U(0) = U_t0 < 0, U'(0) = 0
//! ```
//!
//! i.e. `U = +(hbar^2 / 2c^2) I''/I` with `I = exp(-U/(2T))`. With `c = 1` this
//! is `(1/c^2) U'' - U'^2/(2T) + (4T/hbar^2) U = 0`; for other `c` only the
//! form above keeps the Gibbs amplitude, the cosine limit and the round trip
//! consistent. In `s = c t` the equation is free of `c`. The solution is even
//! in `t` and diverges as `U ~ -2T ln(t_a - t)` at the half-width `t_a` of
//! the support. Only `t >= 0` is integrated; the negative half is
//! the mirror image.

use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::numerics::{
    integrate_ivp, refine_blowup, step_doubling_defect, BlowupModel, Direction, IvpProblem, IvpResult, Termination,
};
use crate::profile::{DensityProfile, PotentialProfile, Sampler, SolverSettings, Support};

pub use crate::profile::symmetrize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemporalSolveInput {
    pub constants: PhysicalConstants,
    pub u_t0: f64,
    pub settings: SolverSettings,
}

impl TemporalSolveInput {
    pub fn new(constants: PhysicalConstants, u_t0: f64) -> Self {
        Self { constants, u_t0, settings: SolverSettings::default() }
    }

    pub fn with_settings(self, settings: SolverSettings) -> Self {
        Self { settings, ..self }
    }
}

#[derive(Debug, Clone)]
pub struct TemporalSolution {
    /// `U_t` on the symmetric grid `[-t_last, t_last]`.
    pub potential: PotentialProfile,
    /// Support half-width from the log-divergence fit.
    pub t_a: f64,
    /// `rho_t` on the symmetric grid.
    pub density: DensityProfile,
    /// Forward integration on `t >= 0`.
    pub trajectory: IvpResult,
    pub input: TemporalSolveInput,
}

/// Right-hand side `U''(t, U, U')` of the temporal equation.
pub fn temporal_rhs(constants: PhysicalConstants) -> impl Fn(f64, f64, f64) -> f64 + Copy {
    let t = constants.temperature;
    let c2 = constants.c * constants.c;
    let hbar2 = constants.hbar * constants.hbar;
    move |_, u, du| du * du / (2.0 * t) - 4.0 * t * c2 * u / hbar2
}

/// Half-width of the `T = 0` cosine window, `pi hbar / (2 c sqrt(2 |U_t0|))`.
pub fn limit_half_width(u_t0: f64, constants: &PhysicalConstants) -> f64 {
    PI * constants.hbar / (2.0 * constants.c * (2.0 * u_t0.abs()).sqrt())
}

pub fn temporal_problem(input: &TemporalSolveInput) -> IvpProblem<impl Fn(f64, f64, f64) -> f64 + Copy> {
    IvpProblem {
        rhs: temporal_rhs(input.constants),
        initial_point: 0.0,
        initial_state: (input.u_t0, 0.0),
        direction: Direction::Forward,
        abs_tol: input.settings.abs_tol,
        rel_tol: input.settings.rel_tol,
        blowup_threshold: input.settings.blowup_factor * input.u_t0.abs().max(1.0),
        // |U'| = 2T/d at distance d from the divergence
        derivative_threshold: input.settings.blowup_factor * 2.0 * input.constants.temperature
            / limit_half_width(input.u_t0, &input.constants),
    }
}

pub fn solve_temporal(input: &TemporalSolveInput) -> Result<TemporalSolution> {
    let k = input.constants;
    k.validate()?;
    input.settings.validate()?;
    let t = k.temperature;
    if t <= 0.0 {
        return Err(Error::InvalidInput("the temporal ODE needs T > 0; use the cosine limit at T = 0".into()));
    }
    let u0 = input.u_t0;
    if !u0.is_finite() {
        return Err(Error::InvalidInput(format!("U_t0 must be finite, got {u0}")));
    }
    if u0 >= 0.0 {
        return Err(Error::WrongSign { u_t0: u0 });
    }

    let settings = input.settings;
    let horizon = settings.horizon_factor * limit_half_width(u0, &k);
    let trajectory = integrate_ivp(&temporal_problem(input), horizon)?;
    match trajectory.terminated_by {
        Termination::BlowupDetected => {}
        Termination::ReachedEnd => return Err(Error::NoBlowup { horizon }),
        Termination::StepUnderflow => return Err(Error::Stalled { at: trajectory.last_point() }),
    }
    let t_a = refine_blowup(&trajectory, BlowupModel::LogDivergence { strength: 2.0 * t })?;

    // U'(0) = 0 and the equation is regular at t = 0: no series start needed
    let sampler = Sampler { trajectory: &trajectory, start: 0.0, u0, curvature: 0.0 };
    let (potential, density) = sampler.build(t_a, settings.grid_nodes, t, Support::Symmetric)?;
    Ok(TemporalSolution { potential, t_a, density, trajectory, input: *input })
}

impl TemporalSolution {
    /// `U_t(t)`, even in `t`; `None` beyond the integrated range.
    pub fn potential_at(&self, t: f64) -> Option<f64> {
        self.trajectory.sample(t.abs()).map(|(u, _)| u)
    }

    /// Normalized `rho_t(t)`; zero beyond the density-floor edge.
    pub fn density_at(&self, t: f64) -> f64 {
        if t.abs() > self.density.grid.last_node() {
            return 0.0;
        }
        match self.potential_at(t) {
            Some(u) => (-u / self.input.constants.temperature - self.density.ln_z).exp(),
            None => 0.0,
        }
    }

    /// Step-doubling defect of the stored trajectory in tolerance units.
    pub fn ode_defect(&self) -> f64 {
        step_doubling_defect(&temporal_problem(&self.input), &self.trajectory)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(t: f64, u0: f64) -> Result<TemporalSolution> {
        solve_temporal(&TemporalSolveInput::new(PhysicalConstants::natural(t), u0))
    }

    #[test]
    fn small_temperature_approaches_cosine_half_width() {
        let s = solve(1e-4, -1.0).unwrap();
        let t0 = PI / (2.0 * 2f64.sqrt());
        assert!(((s.t_a - t0) / t0).abs() < 0.01, "t_a = {}", s.t_a);
    }

    #[test]
    fn wrong_sign_rejected() {
        assert_eq!(solve(0.05, 1.0).unwrap_err(), Error::WrongSign { u_t0: 1.0 });
        assert!(matches!(solve(0.05, 0.0), Err(Error::WrongSign { .. })));
    }

    #[test]
    fn half_width_grows_with_temperature() {
        // measured direction: the support widens as T grows
        let narrow = solve(0.05, -1.0).unwrap().t_a;
        let wide = solve(0.2, -1.0).unwrap().t_a;
        assert!(wide > narrow, "t_a(0.05) = {narrow}, t_a(0.2) = {wide}");
    }

    #[test]
    fn density_is_exactly_even_and_normalized() {
        let s = solve(0.05, -1.0).unwrap();
        let rho = s.density.grid.values();
        let n = rho.len();
        assert_eq!(n, 2 * 4096 - 1);
        for i in 0..n {
            assert_eq!(rho[i], rho[n - 1 - i]);
            assert_eq!(s.density.grid.nodes()[i], -s.density.grid.nodes()[n - 1 - i]);
        }
        assert!((s.density.total() - 1.0).abs() < 1e-9);
        assert!(rho[0] < 1e-3 * rho[n / 2]);
    }

    #[test]
    fn trapping_for_several_negative_centers() {
        let k = PhysicalConstants::natural(0.05);
        for u0 in [-0.5, -1.0, -2.0] {
            let s = solve(0.05, u0).unwrap();
            assert!(s.t_a > limit_half_width(u0, &k));
            assert!(s.t_a.is_finite());
        }
    }

    #[test]
    fn log_fit_agrees_with_threshold_crossing() {
        let s = solve(0.05, -1.0).unwrap();
        assert!(s.t_a > s.trajectory.last_point());
        assert!((s.t_a - s.trajectory.threshold_crossing.unwrap()).abs() < 1e-3);
    }

    #[test]
    fn trajectory_passes_step_doubling_check() {
        for t in [1e-4, 0.05, 0.2] {
            let d = solve(t, -1.0).unwrap().ode_defect();
            assert!(d < 10.0, "T = {t}: defect {d}");
        }
    }

    #[test]
    fn non_natural_units() {
        let k = PhysicalConstants::new(0.5, 3.0, 1e-3).unwrap();
        let s = solve_temporal(&TemporalSolveInput::new(k, -1.5)).unwrap();
        let t0 = limit_half_width(-1.5, &k);
        assert!(((s.t_a - t0) / t0).abs() < 0.01, "{} vs {t0}", s.t_a);
    }

    #[test]
    fn light_speed_only_rescales_time() {
        let base = solve(0.05, -1.0).unwrap().t_a;
        let k = PhysicalConstants::new(1.0, 2.5, 0.05).unwrap();
        let scaled = solve_temporal(&TemporalSolveInput::new(k, -1.0)).unwrap().t_a;
        assert!((scaled * 2.5 - base).abs() < 1e-8, "{scaled} vs {base}");
    }

    #[test]
    fn no_trapping_above_the_center_magnitude() {
        // J = exp(-U/2T) obeys J'' = -4T J ln J, whose orbit reaches J = 0
        // only when T <= |U_t0|
        assert!(solve(0.8, -1.0).is_ok());
        assert!(matches!(solve(1.2, -1.0), Err(Error::NoBlowup { .. })));
        assert!(matches!(solve(3.0, -2.0), Err(Error::NoBlowup { .. })));
        assert!(solve(1.6, -2.0).is_ok());
    }

    #[test]
    fn very_small_temperature_still_resolved() {
        let s = solve(1e-7, -1.0).unwrap();
        let t0 = PI / (2.0 * 2f64.sqrt());
        assert!(((s.t_a - t0) / t0).abs() < 1e-6, "{}", s.t_a);
    }
}
