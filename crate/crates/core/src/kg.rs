//! Klein-Gordon checks on the separable `T = 0` state, the quantum-potential
//! round trip on numerical solutions, and the flatness average.
//!
//! Residuals are taken on the inner 80% of each support dimension:
//! `r <= 0.8 r0` (the origin node uses the regular radial stencil) and
//! `|t| <= 0.8 t0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::limits::{AnalyticLimitState, LimitKind};
use crate::mass::compute_mass;
use crate::numerics::{quadrature, second_derivative, GridFunction, Stencil, Weight};
use crate::spatial::SpatialSolution;
use crate::temporal::TemporalSolution;

/// Fraction of each support dimension the residuals are evaluated on.
pub const INTERIOR_FRACTION: f64 = 0.8;

/// `I(r, t) = I_s(r) I_t(t)` sampled on local grids `[0, r0] x [-t0, t0]`,
/// placed in spacetime at `origin = (c t, x, y, z)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductState {
    pub spatial_amplitude: GridFunction,
    pub temporal_amplitude: GridFunction,
    pub mass: f64,
    pub constants: PhysicalConstants,
    pub origin: [f64; 4],
    /// `int I^2 4 pi r^2 dr dt` by tensor Simpson.
    pub normalization: f64,
}

pub fn build_product_state(
    spatial: &AnalyticLimitState,
    temporal: &AnalyticLimitState,
    grid: (usize, usize),
    constants: &PhysicalConstants,
) -> Result<ProductState> {
    let report = compute_mass(spatial, temporal, constants)?;
    let (n_r, n_t) = grid;
    if n_r < 65 || n_t < 65 {
        return Err(Error::InvalidGrid(format!("product grid needs at least 65 x 65 nodes, got {n_r} x {n_t}")));
    }
    let spatial_amplitude = spatial.sample_amplitude(n_r)?;
    let temporal_amplitude = temporal.sample_amplitude(n_t)?;
    // the tensor rule of a separable integrand factorizes
    let squared = |g: &GridFunction| g.map(|_, v| v * v);
    let normalization = quadrature(&squared(&spatial_amplitude)?, Weight::RadialBall)
        * quadrature(&squared(&temporal_amplitude)?, Weight::Unit);
    Ok(ProductState {
        spatial_amplitude,
        temporal_amplitude,
        mass: report.m,
        constants: *constants,
        origin: [0.0; 4],
        normalization,
    })
}

impl ProductState {
    pub fn amplitude(&self, i_r: usize, i_t: usize) -> f64 {
        self.spatial_amplitude.values()[i_r] * self.temporal_amplitude.values()[i_t]
    }

    pub fn with_mass(&self, mass: f64) -> Self {
        Self { mass, ..self.clone() }
    }

    /// Time interval covered by the support in the global frame.
    pub fn time_range(&self) -> (f64, f64) {
        let t = self.origin[0] / self.constants.c;
        (t + self.temporal_amplitude.first_node(), t + self.temporal_amplitude.last_node())
    }

    /// Spatial center of the support in the global frame.
    pub fn center(&self) -> [f64; 3] {
        [self.origin[1], self.origin[2], self.origin[3]]
    }
}

fn interior(g: &GridFunction, limit: f64) -> Vec<usize> {
    (1..g.len() - 1).chain(std::iter::once(0)).filter(|&i| g.nodes()[i].abs() <= limit).collect()
}

/// Max over interior nodes of `|box I + (m^2 c^2/hbar^2) I|` with
/// `box = (1/c^2) d_t^2 - lap`, evaluated on the full 2-D grid.
pub fn kg_residual(state: &ProductState) -> Result<f64> {
    let k = state.constants;
    let (rs, ts) = (&state.spatial_amplitude, &state.temporal_amplitude);
    let ht = ts.spacing()?;
    rs.spacing()?;
    let rows_r = interior(rs, INTERIOR_FRACTION * rs.last_node());
    let rows_t: Vec<usize> = interior(ts, INTERIOR_FRACTION * ts.last_node()).into_iter().filter(|&j| j > 0).collect();
    let mass_term = (state.mass * k.c / k.hbar).powi(2);
    let inv_c2 = 1.0 / (k.c * k.c);
    let n_r = rs.len();

    let field_row = |j: usize| -> Vec<f64> { (0..n_r).map(|i| state.amplitude(i, j)).collect() };
    let row_max = |j: usize| -> Result<f64> {
        let here = GridFunction::new(rs.nodes().to_vec(), field_row(j))?;
        let lap = second_derivative(&here, Stencil::RadialLaplacian3D)?;
        let (before, after) = (field_row(j - 1), field_row(j + 1));
        Ok(rows_r
            .iter()
            .map(|&i| {
                let v = here.values()[i];
                let d_tt = (before[i] - 2.0 * v + after[i]) / (ht * ht);
                (inv_c2 * d_tt - lap.values()[i] + mass_term * v).abs()
            })
            .fold(0.0, f64::max))
    };
    rows_t.par_iter().map(|&j| row_max(j)).try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Shift the support by a four-vector `(c dt, dx, dy, dz)`. Grids are local,
/// so amplitudes and every residual are unchanged bit for bit.
pub fn translate_state(state: &ProductState, shift: [f64; 4]) -> ProductState {
    let mut out = state.clone();
    for (o, s) in out.origin.iter_mut().zip(shift) {
        *o += s;
    }
    out
}

/// Which quantum-potential convention to reconstruct with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coordinate {
    /// `-(hbar^2/2) lap(I)/I` on a radial grid.
    Radial,
    /// `+(hbar^2/2c^2) I''/I` on a time grid.
    Time,
}

/// Quantum potential generated by `rho` via `I = sqrt(rho)`.
pub fn quantum_potential(rho: &GridFunction, coordinate: Coordinate, constants: &PhysicalConstants) -> Result<GridFunction> {
    let amp = rho.map(|_, v| v.max(0.0).sqrt())?;
    let h2 = constants.hbar * constants.hbar;
    let (stencil, prefactor) = match coordinate {
        Coordinate::Radial => (Stencil::RadialLaplacian3D, -0.5 * h2),
        Coordinate::Time => (Stencil::Cartesian1D, 0.5 * h2 / (constants.c * constants.c)),
    };
    let d2 = second_derivative(&amp, stencil)?;
    let values = d2.values().iter().zip(amp.values()).map(|(d, a)| prefactor * d / a).collect();
    GridFunction::new(rho.nodes().to_vec(), values)
}

#[derive(Debug, Clone, Copy)]
pub enum Solution<'a> {
    Spatial(&'a SpatialSolution),
    Temporal(&'a TemporalSolution),
}

/// Max relative error between the solver potential and the one rebuilt from
/// the solver density by finite differences, over `|x| <= 0.8` of the
/// support. Errors are relative to `max |U|` on that region, since `U_t`
/// passes through zero.
pub fn potential_roundtrip(solution: Solution<'_>, constants: &PhysicalConstants) -> Result<f64> {
    let (density, potential, support, coordinate) = match solution {
        Solution::Spatial(s) => (&s.density, &s.potential, s.r_m, Coordinate::Radial),
        Solution::Temporal(s) => (&s.density, &s.potential, s.t_a, Coordinate::Time),
    };
    let limit = INTERIOR_FRACTION * support;
    let last = density.grid.last_node();
    if limit > last {
        return Err(Error::DensityFloorReached { requested: limit, last });
    }
    let rebuilt = quantum_potential(&density.grid, coordinate, constants)?;
    let nodes = interior(&density.grid, limit);
    let u = potential.grid.values();
    let scale = nodes.iter().map(|&i| u[i].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::InvalidInput("potential vanishes on the evaluation region".into()));
    }
    Ok(nodes.iter().map(|&i| (rebuilt.values()[i] - u[i]).abs()).fold(0.0, f64::max) / scale)
}

/// `int (U_s + U_t) rho_s rho_t 4 pi r^2 dr dt` over the numerical product
/// density, as a tensor rule factorized into 1-D quadratures.
pub fn average_potential(spatial: &SpatialSolution, temporal: &TemporalSolution) -> Result<f64> {
    let weighted = |rho: &GridFunction, u: &GridFunction| -> Result<GridFunction> {
        GridFunction::new(rho.nodes().to_vec(), rho.values().iter().zip(u.values()).map(|(p, v)| p * v).collect())
    };
    let (rs, rt) = (&spatial.density.grid, &temporal.density.grid);
    let us = quadrature(&weighted(rs, &spatial.potential.grid)?, Weight::RadialBall);
    let ut = quadrature(&weighted(rt, &temporal.potential.grid)?, Weight::Unit);
    let (zs, zt) = (quadrature(rs, Weight::RadialBall), quadrature(rt, Weight::Unit));
    Ok(us * zt + zs * ut)
}

/// Kind check shared by callers that accept a pair of limit states.
pub fn check_kinds(spatial: &AnalyticLimitState, temporal: &AnalyticLimitState) -> Result<()> {
    if spatial.kind == LimitKind::SpatialSinc && temporal.kind == LimitKind::TemporalCos {
        Ok(())
    } else {
        Err(Error::KindMismatch)
    }
}
