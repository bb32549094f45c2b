//! Dormand-Prince 4(5) integration of second-order scalar ODEs
//! `y'' = g(x, y, y')` with PI step control, a blow-up event on `|y|` or
//! `|y'|` and a C2 quintic-Hermite dense output.

use crate::error::{Error, Result};
use crate::numerics::GridFunction;

const MAX_STEPS: usize = 1_000_000;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

// Dormand-Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedEnd,
    BlowupDetected,
    StepUnderflow,
}

/// Initial value problem for `y'' = rhs(x, y, y')`, carried as the first
/// order system `(y, y')' = (y', rhs)`.
#[derive(Clone)]
pub struct IvpProblem<F> {
    pub rhs: F,
    pub initial_point: f64,
    /// `(value, derivative)` at `initial_point`.
    pub initial_state: (f64, f64),
    pub direction: Direction,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Blow-up is declared once `|y|` reaches this value...
    pub blowup_threshold: f64,
    /// ...or once `|y'|` reaches this one. A logarithmic divergence only
    /// shows up in the derivative.
    pub derivative_threshold: f64,
}

impl<F> IvpProblem<F>
where
    F: Fn(f64, f64, f64) -> f64,
{
    fn validate(&self, end: f64) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        let (y0, _) = self.initial_state;
        if !(self.blowup_threshold > y0.abs().max(1.0)) {
            return Err(Error::InvalidInput(format!(
                "blow-up threshold {} must exceed max(|y0|, 1)",
                self.blowup_threshold
            )));
        }
        let dy0 = self.initial_state.1;
        if !(self.derivative_threshold > dy0.abs() && self.derivative_threshold > 0.0) {
            return Err(Error::InvalidInput(format!(
                "derivative threshold {} must exceed |y0'|",
                self.derivative_threshold
            )));
        }
        if !self.initial_point.is_finite() || !end.is_finite() {
            return Err(Error::InvalidInput("integration bounds must be finite".into()));
        }
        if (end - self.initial_point) * self.direction.sign() <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "end {end} is not on the {:?} side of {}",
                self.direction, self.initial_point
            )));
        }
        Ok(())
    }

    fn eval(&self, x: f64, y: f64, dy: f64) -> [f64; 2] {
        [dy, (self.rhs)(x, y, dy)]
    }
}

/// Accepted nodes of an integration together with the dense output.
#[derive(Debug, Clone)]
pub struct IvpResult {
    /// Nodes in integration order.
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    /// `rhs` evaluated at each node, used by the dense output.
    pub curvatures: Vec<f64>,
    pub terminated_by: Termination,
    /// Pole extrapolation `x_c + |y'/y''|` from the threshold crossing.
    pub blowup_estimate: Option<f64>,
    /// Coordinate where `|y|` or `|y'|` first reached its threshold.
    pub threshold_crossing: Option<f64>,
    pub direction: Direction,
    pub steps: usize,
}

impl IvpResult {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last_point(&self) -> f64 {
        *self.points.last().expect("trajectory has at least the initial node")
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().expect("trajectory has at least the initial node")
    }

    /// Value and derivative trajectories on ascending nodes.
    pub fn trajectory(&self) -> Result<(GridFunction, GridFunction)> {
        let mut nodes = self.points.clone();
        let mut values = self.values.clone();
        let mut derivs = self.derivatives.clone();
        if self.direction == Direction::Backward {
            nodes.reverse();
            values.reverse();
            derivs.reverse();
        }
        Ok((GridFunction::new(nodes.clone(), values)?, GridFunction::new(nodes, derivs)?))
    }

    /// Dense output `(y, y')` at `x`, `None` outside the integrated range.
    pub fn sample(&self, x: f64) -> Option<(f64, f64)> {
        self.segment(x).map(|(i, j)| {
            hermite5(
                self.points[i],
                self.points[j],
                [self.values[i], self.derivatives[i], self.curvatures[i]],
                [self.values[j], self.derivatives[j], self.curvatures[j]],
                x,
            )
        })
    }

    /// `y''` of the dense output at `x`.
    pub fn sample_curvature(&self, x: f64) -> Option<f64> {
        self.segment(x).map(|(i, j)| {
            hermite5_curvature(
                self.points[i],
                self.points[j],
                [self.values[i], self.derivatives[i], self.curvatures[i]],
                [self.values[j], self.derivatives[j], self.curvatures[j]],
                x,
            )
        })
    }

    /// Indices of the accepted step containing `x`.
    fn segment(&self, x: f64) -> Option<(usize, usize)> {
        let n = self.points.len();
        if n == 0 || !x.is_finite() {
            return None;
        }
        let s = self.direction.sign();
        // Work in the coordinate s*x, which increases along the trajectory.
        let key = s * x;
        let first = s * self.points[0];
        let last = s * self.points[n - 1];
        if key < first || key > last {
            return None;
        }
        if n == 1 {
            return None;
        }
        let j = self.points.partition_point(|&p| s * p <= key).clamp(1, n - 1);
        Some((j - 1, j))
    }
}

/// Second derivative of the quintic Hermite interpolant.
fn hermite5_curvature(x0: f64, x1: f64, a: [f64; 3], b: [f64; 3], x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let c0 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
    let c1 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let c2 = 1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3;
    let c3 = 3.0 * s - 12.0 * s2 + 10.0 * s3;
    let c4 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let c5 = -c0;
    (a[0] * c0 + b[0] * c5) / (h * h) + (a[1] * c1 + b[1] * c4) / h + a[2] * c2 + b[2] * c3
}

/// Quintic Hermite interpolant through `(y, y', y'')` at both ends, and its
/// derivative.
fn hermite5(x0: f64, x1: f64, a: [f64; 3], b: [f64; 3], x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;

    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h3 = 0.5 * s3 - s4 + 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;

    let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let d3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;

    let value = a[0] * h0 + h * a[1] * h1 + h * h * a[2] * h2 + h * h * b[2] * h3 + h * b[1] * h4 + b[0] * h5;
    let deriv =
        (a[0] * d0 + b[0] * d5) / h + a[1] * d1 + h * a[2] * d2 + h * b[2] * d3 + b[1] * d4;
    (value, deriv)
}

fn error_norm(err: [f64; 2], y: [f64; 2], y_new: [f64; 2], atol: f64, rtol: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..2 {
        let sk = atol + rtol * y[k].abs().max(y_new[k].abs());
        acc += (err[k] / sk).powi(2);
    }
    (acc / 2.0).sqrt()
}

fn finite2(v: [f64; 2]) -> bool {
    v[0].is_finite() && v[1].is_finite()
}


/// Starting step in the manner of Hairer-Norsett-Wanner.
fn initial_step<F>(p: &IvpProblem<F>, y0: [f64; 2], f0: [f64; 2], span: f64) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    let scale = |k: usize| p.abs_tol + p.rel_tol * y0[k].abs();
    let norm = |v: [f64; 2]| ((v[0] / scale(0)).powi(2) / 2.0 + (v[1] / scale(1)).powi(2) / 2.0).sqrt();
    let d0 = norm(y0);
    let d1 = norm(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let s = p.direction.sign();
    let y1 = [y0[0] + s * h0 * f0[0], y0[1] + s * h0 * f0[1]];
    let f1 = p.eval(p.initial_point + s * h0, y1[0], y1[1]);
    if !finite2(f1) {
        return h0 * 1e-3;
    }
    let d2 = norm([f1[0] - f0[0], f1[1] - f0[1]]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

struct Step {
    y_new: [f64; 2],
    k7: [f64; 2],
    /// Difference between the embedded 4th and 5th order solutions.
    err: [f64; 2],
}

fn comb(w: &[(f64, [f64; 2])]) -> [f64; 2] {
    let mut acc = [0.0; 2];
    for (a, k) in w {
        acc[0] += a * k[0];
        acc[1] += a * k[1];
    }
    acc
}

/// One Dormand-Prince step of signed size `hs`; `None` if any stage is not
/// finite.
fn dopri_step<F>(p: &IvpProblem<F>, x: f64, y: [f64; 2], k1: [f64; 2], hs: f64, x_new: f64) -> Option<Step>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let stage = |c: f64, dy: [f64; 2]| p.eval(x + c * hs, y[0] + hs * dy[0], y[1] + hs * dy[1]);
    let k2 = stage(C2, comb(&[(A21, k1)]));
    let k3 = stage(C3, comb(&[(A31, k1), (A32, k2)]));
    let k4 = stage(C4, comb(&[(A41, k1), (A42, k2), (A43, k3)]));
    let k5 = stage(C5, comb(&[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
    let k6 = stage(1.0, comb(&[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
    let incr = comb(&[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
    let y_new = [y[0] + hs * incr[0], y[1] + hs * incr[1]];
    let k7 = p.eval(x_new, y_new[0], y_new[1]);
    if ![k2, k3, k4, k5, k6, k7, y_new].iter().all(|v| finite2(*v)) {
        return None;
    }
    let e = comb(&[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)]);
    Some(Step { y_new, k7, err: [hs * e[0], hs * e[1]] })
}

/// Step-doubling check of a finished integration: every accepted step is
/// redone as two half steps from the stored start state, and the largest
/// discrepancy is returned in units of the mixed tolerance
/// `abs_tol + rel_tol * |y|`. Values of order one or below mean the stored
/// trajectory satisfies the ODE to within the requested tolerances.
pub fn step_doubling_defect<F>(problem: &IvpProblem<F>, result: &IvpResult) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    let mut worst: f64 = 0.0;
    // the final node is an interpolated threshold crossing, not a full step
    let accepted = match result.terminated_by {
        Termination::BlowupDetected => result.len().saturating_sub(1),
        _ => result.len(),
    };
    for i in 1..accepted {
        let (x0, x1) = (result.points[i - 1], result.points[i]);
        let y0 = [result.values[i - 1], result.derivatives[i - 1]];
        let k0 = problem.eval(x0, y0[0], y0[1]);
        let xm = 0.5 * (x0 + x1);
        let Some(a) = dopri_step(problem, x0, y0, k0, xm - x0, xm) else {
            return f64::INFINITY;
        };
        let Some(b) = dopri_step(problem, xm, a.y_new, a.k7, x1 - xm, x1) else {
            return f64::INFINITY;
        };
        let y1 = [result.values[i], result.derivatives[i]];
        for k in 0..2 {
            let scale = problem.abs_tol + problem.rel_tol * y1[k].abs().max(b.y_new[k].abs());
            worst = worst.max((b.y_new[k] - y1[k]).abs() / scale);
        }
    }
    worst
}

/// Integrate `problem` from its initial point towards `end`.
///
/// Stops at `end`, when `|y|` or `|y'|` reaches its blow-up threshold (the
/// crossing is located on the dense output and becomes the final node), or
/// when the step size underflows the coordinate resolution.
pub fn integrate_ivp<F>(problem: &IvpProblem<F>, end: f64) -> Result<IvpResult>
where
    F: Fn(f64, f64, f64) -> f64,
{
    problem.validate(end)?;
    let s = problem.direction.sign();
    let (atol, rtol) = (problem.abs_tol, problem.rel_tol);
    let (theta, theta_d) = (problem.blowup_threshold, problem.derivative_threshold);
    let over = |v: f64, d: f64| (v.abs() / theta).max(d.abs() / theta_d) - 1.0;

    let mut x = problem.initial_point;
    let mut y = [problem.initial_state.0, problem.initial_state.1];
    let mut k1 = problem.eval(x, y[0], y[1]);
    if !finite2(k1) || !finite2(y) {
        return Err(Error::NonFiniteRhs { at: x });
    }

    let mut out = IvpResult {
        points: vec![x],
        values: vec![y[0]],
        derivatives: vec![y[1]],
        curvatures: vec![k1[1]],
        terminated_by: Termination::ReachedEnd,
        blowup_estimate: None,
        threshold_crossing: None,
        direction: problem.direction,
        steps: 0,
    };

    let span = (end - x).abs();
    let mut h = initial_step(problem, y, k1, span);
    let mut err_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut nonfinite_streak = 0usize;

    loop {
        if out.steps >= MAX_STEPS {
            return Err(Error::StepBudgetExhausted { at: x, steps: out.steps });
        }
        let remaining = (end - x).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h <= 16.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            if nonfinite_streak > 0 {
                return Err(Error::NonFiniteRhs { at: x });
            }
            out.terminated_by = Termination::StepUnderflow;
            return Ok(out);
        }

        let x_new = if last { end } else { x + s * h };
        // step by the representable distance so nodes and stages agree
        let hs = x_new - x;
        let Some(step) = dopri_step(problem, x, y, k1, hs, x_new) else {
            nonfinite_streak += 1;
            h *= 0.25;
            rejected_last = true;
            continue;
        };
        nonfinite_streak = 0;
        let (y_new, k7) = (step.y_new, step.k7);

        let err = error_norm(step.err, y, y_new, atol, rtol);

        if err <= 1.0 {
            let x_old = x;
            let y_old = y;
            let k_old = k1;
            out.steps += 1;

            if over(y_new[0], y_new[1]) >= 0.0 {
                let a = [y_old[0], y_old[1], k_old[1]];
                let b = [y_new[0], y_new[1], k7[1]];
                let excess = |t: f64| {
                    let (v, d) = hermite5(x_old, x_new, a, b, t);
                    over(v, d)
                };
                // Bisection on the dense output; the old end is below threshold.
                let (mut lo, mut hi) = (x_old, x_new);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    if excess(mid) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let xc = hi;
                let (vc, dc) = hermite5(x_old, x_new, a, b, xc);
                let gc = (problem.rhs)(xc, vc, dc);
                let gc = if gc.is_finite() { gc } else { k7[1] };
                out.points.push(xc);
                out.values.push(vc);
                out.derivatives.push(dc);
                out.curvatures.push(gc);
                let dist = if gc != 0.0 { (dc / gc).abs() } else { 0.0 };
                let dist = dist.max(4.0 * f64::EPSILON * xc.abs().max(1.0));
                out.threshold_crossing = Some(xc);
                out.blowup_estimate = Some(xc + s * dist);
                out.terminated_by = Termination::BlowupDetected;
                return Ok(out);
            }

            x = x_new;
            y = y_new;
            k1 = k7;
            out.points.push(x);
            out.values.push(y[0]);
            out.derivatives.push(y[1]);
            out.curvatures.push(k1[1]);

            if last {
                out.terminated_by = Termination::ReachedEnd;
                return Ok(out);
            }

            let err_c = err.max(1e-10);
            let mut fac = SAFETY * err_c.powf(-ALPHA) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if rejected_last {
                fac = fac.min(1.0);
            }
            h *= fac;
            err_old = err_c.max(1e-4);
            rejected_last = false;
        } else {
            let fac = (SAFETY * err.powf(-ALPHA)).max(FAC_MIN);
            h *= fac;
            rejected_last = true;
        }
    }
}
