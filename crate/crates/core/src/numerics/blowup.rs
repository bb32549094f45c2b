use crate::error::{Error, Result};
use crate::numerics::{IvpResult, Termination};

/// Minimum number of tail nodes the fit accepts.
const MIN_TAIL: usize = 8;
/// Number of trailing trajectory nodes used by the fit.
const TAIL: usize = 24;
const SCAN_POINTS: usize = 400;

/// Asymptotic model of the divergence at the end of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlowupModel {
    /// `y ~ -strength * ln|x* - x| + C`.
    LogDivergence { strength: f64 },
}

/// Locate the singular point `x*` of a blown-up trajectory by least squares
/// on its tail under `model`. The result lies beyond the last node.
pub fn refine_blowup(result: &IvpResult, model: BlowupModel) -> Result<f64> {
    if result.terminated_by != Termination::BlowupDetected {
        return Err(Error::FitFailed(format!(
            "trajectory terminated by {:?}, not a blow-up",
            result.terminated_by
        )));
    }
    let BlowupModel::LogDivergence { strength } = model;
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(Error::FitFailed(format!("strength must be positive, got {strength}")));
    }
    let n = result.len();
    if n < MIN_TAIL {
        return Err(Error::FitFailed(format!("tail has {n} nodes, need {MIN_TAIL}")));
    }
    let start = n.saturating_sub(TAIL);
    let xs = &result.points[start..];
    let ys = &result.values[start..];
    if ys.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::FitFailed("tail is not monotonically increasing".into()));
    }

    let dir = result.direction.sign();
    let x_last = *xs.last().unwrap();
    // distances from each node to the last one, measured along the integration
    let back: Vec<f64> = xs.iter().map(|&x| dir * (x_last - x)).collect();
    let misfit = |gap: f64| -> f64 {
        let m = xs.len() as f64;
        let shifted: Vec<f64> =
            ys.iter().zip(&back).map(|(&y, &b)| y + strength * (b + gap).ln()).collect();
        let c = shifted.iter().sum::<f64>() / m;
        shifted.iter().map(|v| (v - c).powi(2)).sum()
    };

    let span = back[0];
    let lo = (8.0 * f64::EPSILON * x_last.abs().max(1.0)).ln();
    let hi = (10.0 * span.max(f64::MIN_POSITIVE)).ln().max(lo + 1.0);
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let scan: Vec<f64> = (0..SCAN_POINTS).map(|i| misfit((lo + i as f64 * step).exp())).collect();
    let best = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if best == SCAN_POINTS - 1 {
        return Err(Error::FitFailed("misfit has no interior minimum".into()));
    }

    // golden-section refinement in log(gap)
    let mut a = lo + best.saturating_sub(1) as f64 * step;
    let mut b = lo + (best + 1) as f64 * step;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = misfit(c.exp());
    let mut fd = misfit(d.exp());
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = misfit(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = misfit(d.exp());
        }
    }
    let gap = (0.5 * (a + b)).exp();
    let x_star = x_last + dir * gap;
    if !x_star.is_finite() {
        return Err(Error::FitFailed("non-finite singular point".into()));
    }
    Ok(x_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Direction;

    fn synthetic(xs: Vec<f64>, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> IvpResult {
        let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let derivatives: Vec<f64> = xs.iter().map(|&x| df(x)).collect();
        let n = xs.len();
        IvpResult {
            curvatures: vec![0.0; n],
            points: xs,
            values,
            derivatives,
            terminated_by: Termination::BlowupDetected,
            blowup_estimate: Some(1.0),
            threshold_crossing: None,
            direction: Direction::Forward,
            steps: n,
        }
    }

    #[test]
    fn recovers_planted_singularity() {
        let t = 0.05;
        let s = 2.0 * t;
        let xs: Vec<f64> = (0..=60).map(|i| 0.9 + (0.999 - 0.9) * i as f64 / 60.0).collect();
        let r = synthetic(xs, |x| -s * (1.0 - x).ln() + 5.0, |x| s / (1.0 - x));
        let x_star = refine_blowup(&r, BlowupModel::LogDivergence { strength: s }).unwrap();
        assert!((x_star - 1.0).abs() < 1e-6, "{x_star}");
    }

    #[test]
    fn recovers_backward_singularity() {
        let s = 0.3;
        let xs: Vec<f64> = (0..40).map(|i| -0.5 - 0.45 * (1.0 - 0.9f64.powi(i))).collect();
        let mut r = synthetic(xs, |x| -s * (x + 1.0).ln(), |x| -s / (x + 1.0));
        r.direction = Direction::Backward;
        let x_star = refine_blowup(&r, BlowupModel::LogDivergence { strength: s }).unwrap();
        assert!((x_star + 1.0).abs() < 1e-8, "{x_star}");
    }

    #[test]
    fn constant_tail_fails() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.01).collect();
        let r = synthetic(xs, |_| 3.0, |_| 0.0);
        assert!(matches!(
            refine_blowup(&r, BlowupModel::LogDivergence { strength: 0.1 }),
            Err(Error::FitFailed(_))
        ));
    }

    #[test]
    fn short_tail_fails() {
        let xs: Vec<f64> = (0..5).map(|i| 0.5 + i as f64 * 0.1).collect();
        let r = synthetic(xs, |x| -(1.0 - x).ln(), |x| 1.0 / (1.0 - x));
        assert!(matches!(
            refine_blowup(&r, BlowupModel::LogDivergence { strength: 1.0 }),
            Err(Error::FitFailed(_))
        ));
    }

    #[test]
    fn requires_blowup_termination() {
        let xs: Vec<f64> = (0..30).map(|i| 0.5 + i as f64 * 0.01).collect();
        let mut r = synthetic(xs, |x| -(1.0 - x).ln(), |x| 1.0 / (1.0 - x));
        r.terminated_by = Termination::ReachedEnd;
        assert!(refine_blowup(&r, BlowupModel::LogDivergence { strength: 1.0 }).is_err());
    }
}
