use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::profile::SolverSettings;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Everything a subcommand needs. Loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub hbar: f64,
    pub c: f64,
    pub u_s0: f64,
    /// Unset means the per-command default: -1 for solves and sweeps, -2 for
    /// `verify` (which needs `U_s0 + U_t0 < 0`).
    pub u_t0: Option<f64>,
    pub t_list: Vec<f64>,
    /// Nodes of the resampled profiles.
    pub grid: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub out: PathBuf,
    pub format: Format,
    /// `T` of the round-trip checks in `verify`.
    pub roundtrip_t: f64,
    /// `T` of the flatness cross-check in `verify`.
    pub flatness_t: f64,
    /// Nodes per dimension of the finest Klein-Gordon grid in `verify`.
    pub product_grid: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            hbar: 1.0,
            c: 1.0,
            u_s0: 1.0,
            u_t0: None,
            t_list: vec![0.2, 0.1, 0.05, 0.02],
            grid: s.grid_nodes,
            abs_tol: s.abs_tol,
            rel_tol: s.rel_tol,
            out: PathBuf::from("out"),
            format: Format::Csv,
            roundtrip_t: 0.05,
            flatness_t: 1e-3,
            product_grid: 513,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Checks the invariants and puts `t_list` in descending order.
    pub fn validate(mut self) -> Result<Self, CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.t_list.is_empty() {
            return bad("t_list is empty".into());
        }
        if let Some(t) = self.t_list.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return bad(format!("t_list entries must be positive and finite, got {t}"));
        }
        self.t_list.sort_by(|a, b| b.total_cmp(a));
        if self.t_list.windows(2).any(|w| w[0] == w[1]) {
            return bad("t_list has duplicate entries".into());
        }
        for (name, v) in [("hbar", self.hbar), ("c", self.c), ("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("roundtrip_t", self.roundtrip_t), ("flatness_t", self.flatness_t)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.u_s0.is_finite() || self.u_t0.is_some_and(|u| !u.is_finite()) {
            return bad("potential levels must be finite".into());
        }
        if self.grid < 65 {
            return bad(format!("grid must be at least 65, got {}", self.grid));
        }
        if self.product_grid < 129 {
            return bad(format!("product_grid must be at least 129, got {}", self.product_grid));
        }
        Ok(self)
    }

    pub fn constants(&self, temperature: f64) -> PhysicalConstants {
        PhysicalConstants { hbar: self.hbar, c: self.c, temperature }
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings { abs_tol: self.abs_tol, rel_tol: self.rel_tol, grid_nodes: self.grid, ..Default::default() }
    }

    pub fn u_t0_or(&self, default: f64) -> f64 {
        self.u_t0.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig { u_t0: Some(-2.0), ..Default::default() };
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg: RunConfig = toml::from_str("t_list = [0.01, 0.1]\nformat = \"json\"").unwrap();
        assert_eq!(cfg.format, Format::Json);
        assert_eq!(cfg.u_s0, 1.0);
        assert_eq!(cfg.validate().unwrap().t_list, vec![0.1, 0.01]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("temperature = 3").is_err());
    }

    #[test]
    fn invalid_lists_rejected() {
        for list in [vec![], vec![0.1, -0.2], vec![0.1, 0.1], vec![f64::NAN]] {
            let cfg = RunConfig { t_list: list, ..Default::default() };
            assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        }
    }
}
