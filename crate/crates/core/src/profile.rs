//! Potential and density profiles on uniform grids, and the Gibbs-form
//! density `rho = exp(-U/T) / Z` reconstructed from a potential.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{quadrature, GridFunction, IvpResult, Weight};

/// Densities below this value are treated as the edge of the support.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Numerical knobs shared by the spatial and temporal solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SolverSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Nodes of the uniform resampling grid on `[0, x_last]`.
    pub grid_nodes: usize,
    /// Integration horizon in units of the `T = 0` support size.
    pub horizon_factor: f64,
    /// Blow-up threshold on `|U|` in units of `max(1, |U(0)|)`. The
    /// derivative threshold puts the detection at `1/blowup_factor` of the
    /// `T = 0` support size from the divergence.
    pub blowup_factor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-12, grid_nodes: 4096, horizon_factor: 100.0, blowup_factor: 1e8 }
    }
}

impl SolverSettings {
    pub fn with_grid(self, grid_nodes: usize) -> Self {
        Self { grid_nodes, ..self }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.grid_nodes < 65 {
            return Err(Error::InvalidInput(format!("grid needs at least 65 nodes, got {}", self.grid_nodes)));
        }
        if !(self.horizon_factor > 0.0 && self.blowup_factor > 1.0) {
            return Err(Error::InvalidInput("horizon must be positive and blow-up factor above 1".into()));
        }
        Ok(())
    }
}

/// Quantum potential sampled on a grid, with the detected divergence point.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialProfile {
    pub grid: GridFunction,
    /// Refined (log-fit) coordinate of the divergence.
    pub blowup: f64,
    /// Coordinate where the integrator's threshold was crossed.
    pub threshold_crossing: Option<f64>,
}

/// Normalized density with its normalization and Shannon entropy.
///
/// `Z` itself over- or underflows for small `T`, so only `ln Z` is kept.
#[derive(Debug, Clone, Serialize)]
pub struct DensityProfile {
    pub grid: GridFunction,
    pub weight: Weight,
    pub ln_z: f64,
    pub entropy: f64,
}

impl DensityProfile {
    pub fn z(&self) -> f64 {
        self.ln_z.exp()
    }

    pub fn peak(&self) -> f64 {
        self.grid.max_abs()
    }

    /// `integral rho * weight`, 1 up to quadrature error.
    pub fn total(&self) -> f64 {
        quadrature(&self.grid, self.weight)
    }
}

/// Gibbs density of `potential` at Lagrange parameter `temperature`.
///
/// The exponent is shifted by `min U` before exponentiation; `ln Z` is
/// restored afterwards.
pub fn density_from_potential(
    potential: &PotentialProfile,
    temperature: f64,
    weight: Weight,
) -> Result<DensityProfile> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidInput(format!("T must be positive, got {temperature}")));
    }
    let u = potential.grid.values();
    let u_min = u.iter().copied().fold(f64::INFINITY, f64::min);
    let exponents: Vec<f64> = u.iter().map(|&v| -(v - u_min) / temperature).collect();
    if let Some(&bad) = exponents.iter().find(|e| !e.is_finite() || **e > 0.0) {
        return Err(Error::OverflowGuard { exponent: bad });
    }
    let nodes = potential.grid.nodes().to_vec();
    let unnormalized = GridFunction::new(nodes.clone(), exponents.iter().map(|e| e.exp()).collect())?;
    let z_shifted = quadrature(&unnormalized, weight);
    if !(z_shifted > 0.0 && z_shifted.is_finite()) {
        return Err(Error::InvalidInput(format!("normalization integral is {z_shifted}")));
    }
    let ln_z_shifted = z_shifted.ln();
    let rho: Vec<f64> = unnormalized.values().iter().map(|w| w / z_shifted).collect();
    let rho_ln_rho: Vec<f64> = rho
        .iter()
        .zip(&exponents)
        .map(|(&p, &e)| if p > 0.0 { p * (e - ln_z_shifted) } else { 0.0 })
        .collect();
    let entropy = -quadrature(&GridFunction::new(nodes.clone(), rho_ln_rho)?, weight);
    Ok(DensityProfile {
        grid: GridFunction::new(nodes, rho)?,
        weight,
        ln_z: ln_z_shifted - u_min / temperature,
        entropy,
    })
}

/// Even reflection of a function given on `[0, x_last]` about the origin.
/// The node at 0 is not duplicated.
pub fn symmetrize(half: &GridFunction) -> Result<GridFunction> {
    let x = half.nodes();
    let v = half.values();
    if x[0] != 0.0 {
        return Err(Error::InvalidGrid(format!("half grid must start at 0, starts at {}", x[0])));
    }
    let n = x.len();
    let mut nodes = Vec::with_capacity(2 * n - 1);
    let mut values = Vec::with_capacity(2 * n - 1);
    for i in (1..n).rev() {
        nodes.push(-x[i]);
        values.push(v[i]);
    }
    nodes.extend_from_slice(x);
    values.extend_from_slice(v);
    GridFunction::new(nodes, values)
}

/// Shape of the support a trapped profile lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Support {
    /// `[0, r]` with the ball measure.
    Ball,
    /// `[-t, t]`, even in `t`, with the plain measure.
    Symmetric,
}

impl Support {
    pub(crate) fn weight(self) -> Weight {
        match self {
            Support::Ball => Weight::RadialBall,
            Support::Symmetric => Weight::Unit,
        }
    }
}

/// Potential sampled as `U(|x|)` from a series near the origin and the dense
/// output of the integration beyond it.
pub(crate) struct Sampler<'a> {
    pub trajectory: &'a IvpResult,
    /// Start of the integration; below it `U = u0 + curvature * x^2`.
    pub start: f64,
    pub u0: f64,
    pub curvature: f64,
}

impl Sampler<'_> {
    pub(crate) fn potential(&self, x: f64) -> Option<f64> {
        let x = x.abs();
        if x < self.start {
            return Some(self.u0 + self.curvature * x * x);
        }
        self.trajectory.sample(x).map(|(u, _)| u)
    }

    fn profile_on(&self, end: f64, nodes: usize, support: Support) -> Result<GridFunction> {
        let half = GridFunction::uniform(0.0, end, nodes, |x| self.potential(x).unwrap_or(f64::NAN))?;
        match support {
            Support::Ball => Ok(half),
            Support::Symmetric => symmetrize(&half),
        }
    }

    /// Resample onto `nodes` uniform nodes up to where the density reaches
    /// [`DENSITY_FLOOR`], and form the potential and density profiles.
    pub(crate) fn build(
        &self,
        blowup: f64,
        nodes: usize,
        temperature: f64,
        support: Support,
    ) -> Result<(PotentialProfile, DensityProfile)> {
        let crossing = self.trajectory.last_point();
        let weight = support.weight();
        let wrap = |grid| PotentialProfile {
            grid,
            blowup,
            threshold_crossing: self.trajectory.threshold_crossing,
        };

        // first pass: normalization over the whole integrated range
        let rough = wrap(self.profile_on(crossing, nodes, support)?);
        let ln_z = density_from_potential(&rough, temperature, weight)?.ln_z;
        let u_floor = -temperature * (DENSITY_FLOOR.ln() + ln_z);

        let end = if self.trajectory.last_value() <= u_floor {
            crossing
        } else {
            // U increases monotonically towards the divergence
            let (mut lo, mut hi) = (0.0, crossing);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                match self.potential(mid) {
                    Some(u) if u < u_floor => lo = mid,
                    _ => hi = mid,
                }
            }
            lo
        };

        let potential = wrap(self.profile_on(end, nodes, support)?);
        let density = density_from_potential(&potential, temperature, weight)?;
        Ok((potential, density))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn flat(n: usize) -> PotentialProfile {
        PotentialProfile {
            grid: GridFunction::uniform(0.0, 1.0, n, |_| 0.7).unwrap(),
            blowup: 1.0,
            threshold_crossing: None,
        }
    }

    #[test]
    fn flat_potential_gives_uniform_ball_density() {
        let d = density_from_potential(&flat(101), 0.3, Weight::RadialBall).unwrap();
        let expected = 3.0 / (4.0 * PI);
        assert!(d.grid.values().iter().all(|p| (p - expected).abs() < 1e-12));
        assert!((d.entropy - (4.0 * PI / 3.0).ln()).abs() < 1e-12);
        assert!((d.total() - 1.0).abs() < 1e-12);
        // ln Z = -U/T + ln(volume)
        assert!((d.ln_z - (-0.7 / 0.3 + (4.0 * PI / 3.0).ln())).abs() < 1e-12);
    }

    #[test]
    fn large_potentials_do_not_overflow() {
        let p = PotentialProfile {
            grid: GridFunction::uniform(0.0, 1.0, 51, |x| -2.0 + x * x).unwrap(),
            blowup: 1.0,
            threshold_crossing: None,
        };
        let d = density_from_potential(&p, 1e-4, Weight::Unit).unwrap();
        assert!(d.ln_z > 1e4);
        assert!(d.z().is_infinite());
        assert!((d.total() - 1.0).abs() < 1e-6);
        assert!(d.grid.values().iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn non_positive_temperature_rejected() {
        assert!(density_from_potential(&flat(11), 0.0, Weight::Unit).is_err());
    }

    #[test]
    fn symmetrize_reflects_evenly() {
        let half = GridFunction::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.25]).unwrap();
        let full = symmetrize(&half).unwrap();
        assert_eq!(full.nodes(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(full.values(), &[0.25, 0.5, 1.0, 0.5, 0.25]);
    }

    #[test]
    fn symmetrize_matches_full_range_cosine() {
        let w = 2f64.sqrt();
        let t0 = PI / (2.0 * w);
        let half = GridFunction::uniform(0.0, t0, 65, |t| (w * t).cos()).unwrap();
        let full = symmetrize(&half).unwrap();
        assert_eq!(full.len(), 129);
        for (t, v) in full.nodes().iter().zip(full.values()) {
            assert!((v - (w * t).cos()).abs() < 1e-15);
        }
        assert!(full.is_uniform());
    }

    #[test]
    fn symmetrize_requires_origin() {
        let half = GridFunction::uniform(0.5, 1.0, 5, |x| x).unwrap();
        assert!(symmetrize(&half).is_err());
    }
}
