//! Spherically symmetric spatial quantum potential
//!
//! ```text
//! U'' + (2/r) U' - U'^2 / (2T) - (4T/hbar^2) U = 0,   U(0) = U_s0, U'(0) = 0
//! ```
//!
//! This is `U = -(hbar^2/2) lap(I)/I` with `I = exp(-U/(2T))`. For `U_s0 > 0`
//! the solution diverges logarithmically at a finite radius `r_m`,
//! `U ~ -2T ln(r_m - r)`, which bounds the support of `rho_s`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::numerics::{
    integrate_ivp, refine_blowup, step_doubling_defect, BlowupModel, Direction, IvpProblem, IvpResult, Termination,
};
use crate::profile::{DensityProfile, PotentialProfile, Sampler, SolverSettings, Support};

/// Integration starts at this fraction of the `T = 0` radius.
const START_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialSolveInput {
    pub constants: PhysicalConstants,
    pub u_s0: f64,
    pub settings: SolverSettings,
}

impl SpatialSolveInput {
    pub fn new(constants: PhysicalConstants, u_s0: f64) -> Self {
        Self { constants, u_s0, settings: SolverSettings::default() }
    }

    pub fn with_settings(self, settings: SolverSettings) -> Self {
        Self { settings, ..self }
    }
}

#[derive(Debug, Clone)]
pub struct SpatialSolution {
    pub potential: PotentialProfile,
    /// Support radius from the log-divergence fit.
    pub r_m: f64,
    pub density: DensityProfile,
    pub trajectory: IvpResult,
    pub input: SpatialSolveInput,
    /// Start radius of the integration and the origin series coefficient.
    pub start: f64,
    pub series_coefficient: f64,
}

/// Coefficient `a` of `U(r) = U(0) + a r^2 + O(r^4)` at the regular origin.
pub fn origin_series_coefficient(u_s0: f64, constants: &PhysicalConstants) -> f64 {
    2.0 * constants.temperature * u_s0 / (3.0 * constants.hbar * constants.hbar)
}

/// Right-hand side `U''(r, U, U')` of the radial equation.
pub fn radial_rhs(constants: PhysicalConstants) -> impl Fn(f64, f64, f64) -> f64 + Copy {
    let t = constants.temperature;
    let hbar2 = constants.hbar * constants.hbar;
    move |r, u, du| -2.0 * du / r + du * du / (2.0 * t) + 4.0 * t * u / hbar2
}

/// Support radius of the `T = 0` sinc ball, `pi hbar / sqrt(2 U_s0)`.
pub fn limit_radius(u_s0: f64, hbar: f64) -> f64 {
    PI * hbar / (2.0 * u_s0).sqrt()
}

/// Initial value problem started at `r = h0` from the origin series.
pub fn radial_problem(input: &SpatialSolveInput) -> IvpProblem<impl Fn(f64, f64, f64) -> f64 + Copy> {
    let k = input.constants;
    let u0 = input.u_s0;
    let start = START_FRACTION * limit_radius(u0, k.hbar);
    let a = origin_series_coefficient(u0, &k);
    IvpProblem {
        rhs: radial_rhs(k),
        initial_point: start,
        initial_state: (u0 + a * start * start, 2.0 * a * start),
        direction: Direction::Forward,
        abs_tol: input.settings.abs_tol,
        rel_tol: input.settings.rel_tol,
        blowup_threshold: input.settings.blowup_factor * u0.abs().max(1.0),
        // |U'| = 2T/d at distance d from the divergence
        derivative_threshold: input.settings.blowup_factor * 2.0 * k.temperature / limit_radius(u0, k.hbar),
    }
}

pub fn solve_spatial(input: &SpatialSolveInput) -> Result<SpatialSolution> {
    let k = input.constants;
    k.validate()?;
    input.settings.validate()?;
    let t = k.temperature;
    if t <= 0.0 {
        return Err(Error::InvalidInput("the spatial ODE needs T > 0; use the sinc limit at T = 0".into()));
    }
    let u0 = input.u_s0;
    if u0 == 0.0 {
        return Err(Error::DegenerateFlat);
    }
    if !(u0 > 0.0 && u0.is_finite()) {
        return Err(Error::InvalidInput(format!("U_s0 must be positive for a trapped solution, got {u0}")));
    }

    let settings = input.settings;
    let scale = limit_radius(u0, k.hbar);
    let problem = radial_problem(input);
    let (start, a) = (problem.initial_point, origin_series_coefficient(u0, &k));
    let horizon = settings.horizon_factor * scale;
    let trajectory = integrate_ivp(&problem, horizon)?;
    match trajectory.terminated_by {
        Termination::BlowupDetected => {}
        Termination::ReachedEnd => return Err(Error::NoBlowup { horizon }),
        Termination::StepUnderflow => return Err(Error::Stalled { at: trajectory.last_point() }),
    }
    let r_m = refine_blowup(&trajectory, BlowupModel::LogDivergence { strength: 2.0 * t })?;

    let sampler = Sampler { trajectory: &trajectory, start, u0, curvature: a };
    let (potential, density) = sampler.build(r_m, settings.grid_nodes, t, Support::Ball)?;
    Ok(SpatialSolution {
        potential,
        r_m,
        density,
        trajectory,
        input: *input,
        start,
        series_coefficient: a,
    })
}

impl SpatialSolution {
    fn sampler(&self) -> Sampler<'_> {
        Sampler {
            trajectory: &self.trajectory,
            start: self.start,
            u0: self.input.u_s0,
            curvature: self.series_coefficient,
        }
    }

    /// `U_s(r)` from the dense output, `None` beyond the integrated range.
    pub fn potential_at(&self, r: f64) -> Option<f64> {
        self.sampler().potential(r)
    }

    /// Normalized `rho_s(r)`; zero beyond the density-floor edge.
    pub fn density_at(&self, r: f64) -> f64 {
        let last = self.density.grid.last_node();
        if r > last {
            return 0.0;
        }
        match self.potential_at(r) {
            Some(u) => (-u / self.input.constants.temperature - self.density.ln_z).exp(),
            None => 0.0,
        }
    }

    /// Step-doubling defect of the stored trajectory in tolerance units.
    pub fn ode_defect(&self) -> f64 {
        step_doubling_defect(&radial_problem(&self.input), &self.trajectory)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(t: f64, u0: f64) -> Result<SpatialSolution> {
        solve_spatial(&SpatialSolveInput::new(PhysicalConstants::natural(t), u0))
    }

    #[test]
    fn series_coefficient_from_power_series_substitution() {
        // Substitute U = U0 + a r^2 + b r^4 into the ODE: the O(1) balance fixes a.
        let k = PhysicalConstants::new(1.3, 1.0, 0.07).unwrap();
        let u0 = 0.8;
        let a = origin_series_coefficient(u0, &k);
        let rhs = radial_rhs(k);
        let residual = |a: f64, r: f64| {
            let (u, du, d2u) = (u0 + a * r * r, 2.0 * a * r, 2.0 * a);
            d2u - rhs(r, u, du)
        };
        let r = 1e-4;
        assert!(residual(a, r).abs() < 1e-8);
        assert!(residual(1.01 * a, r).abs() > 1e-4 * a);
        // brute-force scan over candidate coefficients picks the same value
        let best = (0..20001)
            .map(|i| 0.5 * a + a * i as f64 / 20000.0)
            .min_by(|x, y| residual(*x, r).abs().total_cmp(&residual(*y, r).abs()))
            .unwrap();
        assert!((best - a).abs() < 1e-4 * a);
    }

    #[test]
    fn small_temperature_approaches_sinc_radius() {
        let s = solve(1e-4, 1.0).unwrap();
        let r0 = PI / 2f64.sqrt();
        assert!(((s.r_m - r0) / r0).abs() < 0.01, "r_m = {}", s.r_m);
    }

    #[test]
    fn zero_center_is_degenerate() {
        assert_eq!(solve(0.1, 0.0).unwrap_err(), Error::DegenerateFlat);
    }

    #[test]
    fn negative_center_and_zero_temperature_rejected() {
        assert!(matches!(solve(0.1, -1.0), Err(Error::InvalidInput(_))));
        assert!(matches!(solve(0.0, 1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn short_horizon_reports_no_blowup() {
        let mut input = SpatialSolveInput::new(PhysicalConstants::natural(0.05), 1.0);
        input.settings.horizon_factor = 0.5;
        assert!(matches!(solve_spatial(&input), Err(Error::NoBlowup { .. })));
    }

    #[test]
    fn support_shrinks_with_temperature() {
        assert!(solve(0.05, 1.0).unwrap().r_m > solve(0.2, 1.0).unwrap().r_m);
    }

    #[test]
    fn density_is_normalized_and_vanishes_at_edge() {
        let s = solve(0.05, 1.0).unwrap();
        assert!((s.density.total() - 1.0).abs() < 1e-9);
        let rho = s.density.grid.values();
        assert!(rho.iter().all(|&p| p >= 0.0));
        assert!(*rho.last().unwrap() < 1e-3 * rho[0]);
        assert!(s.density.grid.last_node() < s.r_m);
        assert_eq!(s.density.grid.len(), 4096);
    }

    #[test]
    fn log_fit_agrees_with_threshold_crossing() {
        let s = solve(0.05, 1.0).unwrap();
        let crossing = s.trajectory.threshold_crossing.unwrap();
        assert!(s.r_m > s.trajectory.last_point());
        assert!((s.r_m - crossing).abs() < 1e-3);
        assert!((s.r_m - s.trajectory.blowup_estimate.unwrap()).abs() < 1e-3);
    }

    #[test]
    fn normalization_matches_fine_trapezoid_oracle() {
        let s = solve(0.05, 1.0).unwrap();
        let t = 0.05;
        let last = s.density.grid.last_node();
        let m = 1 << 17;
        let h = last / m as f64;
        let u0 = s.input.u_s0;
        // trapezoid on the shifted integrand exp(-(U - U0)/T) 4 pi r^2
        let f = |r: f64| (-(s.potential_at(r).unwrap() - u0) / t).exp() * 4.0 * PI * r * r;
        let mut acc = 0.5 * (f(0.0) + f(last));
        for i in 1..m {
            acc += f(i as f64 * h);
        }
        let ln_z_oracle = (acc * h).ln() - u0 / t;
        let rel = ((ln_z_oracle.exp() - s.density.z()) / s.density.z()).abs();
        assert!(rel < 1e-6, "relative Z mismatch {rel}");
    }

    #[test]
    fn trapping_for_several_center_values() {
        for u0 in [0.5, 1.0, 2.0] {
            let s = solve(0.05, u0).unwrap();
            assert!(s.r_m.is_finite() && s.r_m > 0.0);
            assert!(s.r_m < limit_radius(u0, 1.0));
        }
    }

    #[test]
    fn potential_increases_towards_the_edge() {
        let s = solve(0.1, 1.0).unwrap();
        let u = s.potential.grid.values();
        let n = u.len();
        assert!(u[n - 10..].windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn trajectory_passes_step_doubling_check() {
        for t in [1e-4, 0.05, 0.2] {
            let defect = solve(t, 1.0).unwrap().ode_defect();
            assert!(defect < 10.0, "T = {t}: defect {defect}");
        }
    }
}
