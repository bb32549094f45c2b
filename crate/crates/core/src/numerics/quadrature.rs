use std::f64::consts::PI;

use crate::numerics::GridFunction;

/// Measure attached to a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Weight {
    /// Plain `dx`.
    Unit,
    /// `4 pi r^2 dr`, integrating a radial function over a ball.
    RadialBall,
}

impl Weight {
    pub fn at(self, x: f64) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::RadialBall => 4.0 * PI * x * x,
        }
    }
}

/// Integral of `f * weight` over the grid of `f`.
///
/// Uniform grids use composite Simpson, closing an odd interval count with
/// the 3/8 rule on the last three intervals, so cubics integrate exactly.
/// Non-uniform grids use the pairwise variable-step Simpson rule.
pub fn quadrature(f: &GridFunction, weight: Weight) -> f64 {
    let x = f.nodes();
    let y: Vec<f64> = x.iter().zip(f.values()).map(|(&x, &v)| v * weight.at(x)).collect();
    match f.spacing() {
        Ok(h) => uniform_simpson(&y, h),
        Err(_) => nonuniform_simpson(x, &y),
    }
}

fn uniform_simpson(y: &[f64], h: f64) -> f64 {
    let intervals = y.len() - 1;
    let (simpson_end, tail) = if intervals % 2 == 0 { (intervals, 0.0) } else if intervals >= 3 {
        let k = intervals - 3;
        (k, 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]))
    } else {
        (0, 0.5 * h * (y[0] + y[1]))
    };
    let mut acc = 0.0;
    let mut i = 0;
    while i < simpson_end {
        acc += y[i] + 4.0 * y[i + 1] + y[i + 2];
        i += 2;
    }
    acc * h / 3.0 + tail
}

fn nonuniform_simpson(x: &[f64], y: &[f64]) -> f64 {
    let intervals = x.len() - 1;
    let pairs = intervals / 2;
    let mut acc = 0.0;
    for p in 0..pairs {
        let i = 2 * p;
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        acc += (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * y[i] + (h0 + h1).powi(2) / (h0 * h1) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
    }
    if intervals % 2 == 1 {
        // last interval from the quadratic through the final three nodes
        let n = x.len();
        let h0 = x[n - 2] - x[n - 3];
        let h1 = x[n - 1] - x[n - 2];
        let (f0, f1, f2) = (y[n - 3], y[n - 2], y[n - 1]);
        let a = ((f2 - f1) / h1 + (f0 - f1) / h0) / (h0 + h1);
        let b = (f2 - f1) / h1 - a * h1;
        acc += f1 * h1 + b * h1 * h1 / 2.0 + a * h1.powi(3) / 3.0;
    }
    acc
}
