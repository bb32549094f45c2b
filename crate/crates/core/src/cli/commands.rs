use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::Error;
use crate::kg::{self, Solution};
use crate::limits::{self, AnalyticLimitState};
use crate::mass::{self, DeBroglieState};
use crate::spatial::{self, SpatialSolveInput, SpatialSolution};
use crate::temporal::{self, TemporalSolveInput, TemporalSolution};

use super::config::{Format, RunConfig};
use super::output::{t_label, write_file, Cell, Table};
use super::CliError;

/// `U_t0` used when none is configured, per command.
pub const DEFAULT_U_T0_SOLVE: f64 = -1.0;
pub const DEFAULT_U_T0_VERIFY: f64 = -2.0;

const IDENTITY_TOLERANCE: f64 = 1e-10;

fn domain(context: impl Into<String>) -> impl FnOnce(Error) -> CliError {
    let context = context.into();
    move |source| CliError::Domain { context, source }
}

fn shifted(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().map(|v| v - min).collect()
}

fn profile_table(coordinate: &'static str, nodes: &[f64], u: &[f64], rho: &[f64]) -> Table {
    let mut table = Table::new(&[coordinate, "U", "U_shifted", "rho"]);
    for (((x, u), s), p) in nodes.iter().zip(u).zip(shifted(u)).zip(rho) {
        table.push(vec![(*x).into(), (*u).into(), s.into(), (*p).into()]);
    }
    table
}

fn profiles_script(files: &[(f64, PathBuf)], coordinate: &str, what: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set xlabel '{coordinate}'");
    let _ = writeln!(s, "set multiplot layout 2,1");
    for (col, label) in [(4, format!("rho_{what}")), (3, format!("U_{what} - min U_{what}"))] {
        let _ = writeln!(s, "set ylabel '{label}'");
        let plots: Vec<String> = files
            .iter()
            .map(|(t, p)| {
                let name = p.file_name().unwrap_or_default().to_string_lossy();
                format!("'{name}' using 1:{col} with lines title 'T = {}'", t_label(*t))
            })
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    let _ = writeln!(s, "unset multiplot");
    s
}

/// Solve for every `T`, keeping the list order. The first failure aborts.
fn solve_all<S: Send>(
    cfg: &RunConfig,
    solve: impl Fn(f64) -> Result<S, Error> + Sync,
) -> Result<Vec<(f64, S)>, CliError> {
    let results: Vec<(f64, Result<S, Error>)> = cfg.t_list.par_iter().map(|&t| (t, solve(t))).collect();
    results.into_iter().map(|(t, r)| r.map(|s| (t, s)).map_err(domain(format!("T = {}", t_label(t))))).collect()
}

pub fn solve_spatial(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let solutions = solve_all(cfg, |t| {
        spatial::solve_spatial(&SpatialSolveInput::new(cfg.constants(t), cfg.u_s0).with_settings(cfg.settings()))
    })?;
    let mut written = Vec::new();
    let mut summary = Table::new(&["T", "r_m", "r_threshold", "r_last", "ln_Z", "H"]);
    for (t, s) in &solutions {
        let grid = &s.potential.grid;
        let table = profile_table("r", grid.nodes(), grid.values(), s.density.grid.values());
        written.push(table.write(out, &format!("spatial_T{}", t_label(*t)), cfg.format)?);
        summary.push(vec![
            (*t).into(),
            s.r_m.into(),
            s.potential.threshold_crossing.unwrap_or(f64::NAN).into(),
            grid.last_node().into(),
            s.density.ln_z.into(),
            s.density.entropy.into(),
        ]);
    }
    let files: Vec<(f64, PathBuf)> = cfg.t_list.iter().copied().zip(written.iter().cloned()).collect();
    written.push(summary.write(out, "spatial_summary", cfg.format)?);
    if cfg.format == Format::Csv {
        let path = out.join("spatial_profiles.gp");
        write_file(&path, profiles_script(&files, "r", "s").as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

pub fn solve_temporal(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let u_t0 = cfg.u_t0_or(DEFAULT_U_T0_SOLVE);
    let solutions = solve_all(cfg, |t| {
        temporal::solve_temporal(&TemporalSolveInput::new(cfg.constants(t), u_t0).with_settings(cfg.settings()))
    })?;
    let mut written = Vec::new();
    let mut summary = Table::new(&["T", "t_a", "t_threshold", "t_last", "ln_Z", "H"]);
    for (t, s) in &solutions {
        let grid = &s.potential.grid;
        let table = profile_table("t", grid.nodes(), grid.values(), s.density.grid.values());
        written.push(table.write(out, &format!("temporal_T{}", t_label(*t)), cfg.format)?);
        summary.push(vec![
            (*t).into(),
            s.t_a.into(),
            s.potential.threshold_crossing.unwrap_or(f64::NAN).into(),
            grid.last_node().into(),
            s.density.ln_z.into(),
            s.density.entropy.into(),
        ]);
    }
    let files: Vec<(f64, PathBuf)> = cfg.t_list.iter().copied().zip(written.iter().cloned()).collect();
    written.push(summary.write(out, "temporal_summary", cfg.format)?);
    if cfg.format == Format::Csv {
        let path = out.join("temporal_profiles.gp");
        write_file(&path, profiles_script(&files, "t", "t").as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// One row of the `T` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub t: f64,
    pub r_m: f64,
    pub t_a: f64,
    /// Max-norm distances to the limit densities, as fractions of the limit peak.
    pub dist_spatial: f64,
    pub dist_temporal: f64,
    pub ln_z_s: f64,
    pub ln_z_t: f64,
    pub h_s: f64,
    pub h_t: f64,
}

fn sweep_entry(
    cfg: &RunConfig,
    t: f64,
    u_t0: f64,
    sinc: &AnalyticLimitState,
    cos: &AnalyticLimitState,
) -> Result<SweepRecord, Error> {
    let k = cfg.constants(t);
    let s = spatial::solve_spatial(&SpatialSolveInput::new(k, cfg.u_s0).with_settings(cfg.settings()))?;
    let tt = temporal::solve_temporal(&TemporalSolveInput::new(k, u_t0).with_settings(cfg.settings()))?;
    Ok(SweepRecord {
        t,
        r_m: s.r_m,
        t_a: tt.t_a,
        dist_spatial: limits::spatial_limit_distance(&s, sinc)?,
        dist_temporal: limits::temporal_limit_distance(&tt, cos)?,
        ln_z_s: s.density.ln_z,
        ln_z_t: tt.density.ln_z,
        h_s: s.density.entropy,
        h_t: tt.density.entropy,
    })
}

/// Direction of `values` as `T` decreases along the list.
fn trend(values: &[f64]) -> &'static str {
    if values.windows(2).all(|w| w[1] > w[0]) {
        "increases as T decreases"
    } else if values.windows(2).all(|w| w[1] < w[0]) {
        "decreases as T decreases"
    } else {
        "not monotone"
    }
}

fn sweep_script(records: &[SweepRecord]) -> String {
    let mut s = String::from("$rm << EOD\n");
    for r in records {
        let _ = writeln!(s, "{:.16e} {:.16e}", r.t, r.r_m);
    }
    s.push_str("EOD\n");
    s.push_str("set logscale xy\nset xlabel 'T'\nset ylabel 'r_m'\nset key top right\n");
    s.push_str("plot $rm using 1:2 with linespoints title 'r_m(T)'\n");
    s
}

/// Sweep over `T`; returns the written files and the number of failed entries.
pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<(Vec<PathBuf>, usize), CliError> {
    let u_t0 = cfg.u_t0_or(DEFAULT_U_T0_SOLVE);
    let sinc = limits::sinc_limit(cfg.u_s0, cfg.hbar).map_err(domain("sinc limit"))?;
    let cos = limits::cos_limit(u_t0, cfg.c, cfg.hbar).map_err(domain("cosine limit"))?;
    let results: Vec<(f64, Result<SweepRecord, Error>)> =
        cfg.t_list.par_iter().map(|&t| (t, sweep_entry(cfg, t, u_t0, &sinc, &cos))).collect();

    let mut table =
        Table::new(&["T", "r_m", "t_a", "dist_spatial", "dist_temporal", "ln_Z_s", "ln_Z_t", "H_s", "H_t", "status"]);
    let mut ok = Vec::new();
    for (t, r) in &results {
        match r {
            Ok(r) => {
                table.push(vec![
                    r.t.into(),
                    r.r_m.into(),
                    r.t_a.into(),
                    r.dist_spatial.into(),
                    r.dist_temporal.into(),
                    r.ln_z_s.into(),
                    r.ln_z_t.into(),
                    r.h_s.into(),
                    r.h_t.into(),
                    "ok".into(),
                ]);
                ok.push(r.clone());
            }
            Err(e) => {
                let mut row = vec![Cell::Num(*t)];
                row.extend(std::iter::repeat(Cell::Num(f64::NAN)).take(8));
                row.push(e.code().into());
                table.push(row);
            }
        }
    }
    let failed = results.len() - ok.len();
    let mut written = vec![table.write(out, "sweep", cfg.format)?];

    let mut verdicts = Table::new(&["check", "pass", "detail"]);
    let col = |f: fn(&SweepRecord) -> f64| ok.iter().map(f).collect::<Vec<f64>>();
    let r_trend = trend(&col(|r| r.r_m));
    verdicts.push(vec!["r_m_strictly_decreasing_in_T".into(), (r_trend == "increases as T decreases").into(), r_trend.into()]);
    let t_trend = trend(&col(|r| r.t_a));
    verdicts.push(vec!["t_a_monotone_in_T".into(), (t_trend != "not monotone").into(), t_trend.into()]);
    for (name, values) in [("dist_spatial_shrinks_as_T_decreases", col(|r| r.dist_spatial)), ("dist_temporal_shrinks_as_T_decreases", col(|r| r.dist_temporal))] {
        let tr = trend(&values);
        verdicts.push(vec![name.into(), (tr == "decreases as T decreases").into(), tr.into()]);
    }
    if let Some(last) = ok.last() {
        let rel_r = (last.r_m - sinc.boundary).abs() / sinc.boundary;
        let rel_t = (last.t_a - cos.boundary).abs() / cos.boundary;
        verdicts.push(vec![
            "r_m_at_smallest_T_within_1pct_of_limit".into(),
            (rel_r < 0.01).into(),
            format!("T = {}, relative deviation {:.3e}", t_label(last.t), rel_r).into(),
        ]);
        verdicts.push(vec![
            "t_a_at_smallest_T_within_1pct_of_limit".into(),
            (rel_t < 0.01).into(),
            format!("T = {}, relative deviation {:.3e}", t_label(last.t), rel_t).into(),
        ]);
    }
    written.push(verdicts.write(out, "sweep_verdicts", cfg.format)?);
    let script = out.join("sweep_rm.gp");
    write_file(&script, sweep_script(&ok).as_bytes())?;
    written.push(script);
    Ok((written, failed))
}

/// `check, value, lower, upper, pass` rows.
struct Report(Table);

impl Report {
    fn new() -> Self {
        Self(Table::new(&["check", "value", "lower", "upper", "pass"]))
    }

    fn check(&mut self, name: &str, value: f64, lower: f64, upper: f64) {
        let pass = value >= lower && value <= upper;
        self.0.push(vec![name.into(), value.into(), lower.into(), upper.into(), pass.into()]);
    }

    fn info(&mut self, name: &str, value: f64) {
        self.check(name, value, f64::NEG_INFINITY, f64::INFINITY);
    }

    fn failures(&self) -> usize {
        self.0.rows.iter().filter(|r| r[4] == Cell::Bool(false)).count()
    }
}

fn roundtrip_pair(cfg: &RunConfig, u_t0: f64) -> Result<(SpatialSolution, TemporalSolution), Error> {
    let k = cfg.constants(cfg.roundtrip_t);
    let (s, t) = rayon::join(
        || spatial::solve_spatial(&SpatialSolveInput::new(k, cfg.u_s0).with_settings(cfg.settings())),
        || temporal::solve_temporal(&TemporalSolveInput::new(k, u_t0).with_settings(cfg.settings())),
    );
    Ok((s?, t?))
}

/// Full verification pipeline; returns the written files and the number of
/// failed checks.
pub fn verify(cfg: &RunConfig, out: &Path) -> Result<(Vec<PathBuf>, usize), CliError> {
    let u_t0 = cfg.u_t0_or(DEFAULT_U_T0_VERIFY);
    let k = cfg.constants(0.0);
    let sinc = limits::sinc_limit(cfg.u_s0, cfg.hbar).map_err(domain("sinc limit"))?;
    let cos = limits::cos_limit(u_t0, cfg.c, cfg.hbar).map_err(domain("cosine limit"))?;
    let mut report = Report::new();

    let m = match mass::compute_mass(&sinc, &cos, &k) {
        Ok(m) => m,
        Err(e) => {
            report.check(e.code(), cfg.u_s0 + u_t0, f64::NEG_INFINITY, 0.0);
            let path = report.0.write(out, "verify_report", cfg.format)?;
            return Err(CliError::Domain { context: format!("verify report written to {}", path.display()), source: e });
        }
    };
    report.info("U_tot", m.u_tot);
    report.info("mass", m.m);
    report.info("k0", m.k0);
    report.info("omega0", m.omega0);
    report.info("energy", m.energy);
    report.check("identity_residual", m.identity_residual, 0.0, IDENTITY_TOLERANCE);
    let dbe = DeBroglieState::from_report(&m, &k);
    report.check("energy_momentum_residual", mass::energy_momentum_check(&m, &dbe, &k), 0.0, IDENTITY_TOLERANCE);
    let dt = mass::time_uncertainty(&m, &k);
    report.info("delta_t", dt);
    report.check("delta_t_energy_over_pi_hbar", dt * m.energy / (std::f64::consts::PI * k.hbar), 1.0 - IDENTITY_TOLERANCE, 1.0 + IDENTITY_TOLERANCE);
    report.check("delta_t_over_2t0", dt / (2.0 * m.t0), 1.0 - IDENTITY_TOLERANCE, 1.0 + IDENTITY_TOLERANCE);

    let fine_n = cfg.product_grid;
    let coarse_n = fine_n.div_ceil(2);
    let fine = kg::build_product_state(&sinc, &cos, (fine_n, fine_n), &k).map_err(domain("product state"))?;
    let coarse = kg::build_product_state(&sinc, &cos, (coarse_n, coarse_n), &k).map_err(domain("product state"))?;
    report.check("product_normalization", fine.normalization, 1.0 - 1e-6, 1.0 + 1e-6);
    let r_fine = kg::kg_residual(&fine).map_err(domain("kg residual"))?;
    let r_coarse = kg::kg_residual(&coarse).map_err(domain("kg residual"))?;
    let r_wrong = kg::kg_residual(&fine.with_mass(2.0 * fine.mass)).map_err(domain("kg residual"))?;
    report.check("kg_residual", r_fine, 0.0, 1e-3);
    report.check("kg_residual_order_ratio", r_coarse / r_fine, 3.5, 4.5);
    report.check("kg_wrong_mass_over_true_mass", r_wrong / r_fine, 100.0, f64::INFINITY);
    let moved = kg::translate_state(&fine, [k.c, 0.3, 0.0, 0.0]);
    let r_moved = kg::kg_residual(&moved).map_err(domain("kg residual"))?;
    report.check("kg_residual_translation_change", (r_moved - r_fine).abs(), 0.0, 0.0);

    let (s, t) = roundtrip_pair(cfg, u_t0).map_err(domain(format!("round trip at T = {}", t_label(cfg.roundtrip_t))))?;
    let rs = kg::potential_roundtrip(Solution::Spatial(&s), &s.input.constants).map_err(domain("spatial round trip"))?;
    let rt = kg::potential_roundtrip(Solution::Temporal(&t), &t.input.constants).map_err(domain("temporal round trip"))?;
    report.check("roundtrip_spatial", rs, 0.0, 1e-3);
    report.check("roundtrip_temporal", rt, 0.0, 1e-3);

    let kf = cfg.constants(cfg.flatness_t);
    let (fs, ft) = rayon::join(
        || spatial::solve_spatial(&SpatialSolveInput::new(kf, cfg.u_s0).with_settings(cfg.settings())),
        || temporal::solve_temporal(&TemporalSolveInput::new(kf, u_t0).with_settings(cfg.settings())),
    );
    let flat_ctx = format!("flatness at T = {}", t_label(cfg.flatness_t));
    let fs = fs.map_err(domain(flat_ctx.clone()))?;
    let ft = ft.map_err(domain(flat_ctx.clone()))?;
    let avg = kg::average_potential(&fs, &ft).map_err(domain(flat_ctx))?;
    report.info("average_potential", avg);
    report.check("average_potential_relative_deviation", ((avg - m.u_tot) / m.u_tot).abs(), 0.0, 0.02);

    let failed = report.failures();
    let path = report.0.write(out, "verify_report", cfg.format)?;
    Ok((vec![path], failed))
}

pub fn limits(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let u_t0 = cfg.u_t0_or(DEFAULT_U_T0_SOLVE);
    let sinc = limits::sinc_limit(cfg.u_s0, cfg.hbar).map_err(domain("sinc limit"))?;
    let cos = limits::cos_limit(u_t0, cfg.c, cfg.hbar).map_err(domain("cosine limit"))?;
    let mut table = Table::new(&["kind", "wavenumber", "boundary", "amplitude", "level"]);
    for s in [&sinc, &cos] {
        let kind = match s.kind {
            limits::LimitKind::SpatialSinc => "SpatialSinc",
            limits::LimitKind::TemporalCos => "TemporalCos",
        };
        table.push(vec![kind.into(), s.wavenumber.into(), s.boundary.into(), s.amplitude.into(), s.level.into()]);
    }
    let mut written = vec![table.write(out, "limits", cfg.format)?];
    // the mass only exists for U_s0 + U_t0 < 0
    if let Ok(m) = mass::compute_mass(&sinc, &cos, &cfg.constants(0.0)) {
        let mut t = Table::new(&["U_s0", "U_t0", "U_tot", "m", "k0", "omega0", "energy", "delta_t", "t0", "identity_residual"]);
        t.push(vec![
            m.u_s0.into(),
            m.u_t0.into(),
            m.u_tot.into(),
            m.m.into(),
            m.k0.into(),
            m.omega0.into(),
            m.energy.into(),
            m.delta_t.into(),
            m.t0.into(),
            m.identity_residual.into(),
        ]);
        written.push(t.write(out, "mass", cfg.format)?);
    }
    Ok(written)
}
