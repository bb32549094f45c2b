use crate::error::{Error, Result};
use crate::numerics::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `d^2 f / dx^2`.
    Cartesian1D,
    /// `f'' + (2/r) f'` for a spherically symmetric `f(r)`, `r >= 0`.
    RadialLaplacian3D,
}

/// Centered second-order finite differences on a uniform grid.
///
/// End nodes use one-sided second-order stencils, except a radial node at
/// `r = 0`, which uses the regularity limit `3 f''(0)` with `f` extended
/// evenly through the origin.
pub fn second_derivative(f: &GridFunction, kind: Stencil) -> Result<GridFunction> {
    if f.len() < 5 {
        return Err(Error::InvalidGrid(format!("stencil needs at least 5 nodes, got {}", f.len())));
    }
    let h = f.spacing()?;
    let x = f.nodes();
    let v = f.values();
    let n = v.len();
    let h2 = h * h;

    let d2 = |i: usize| -> f64 {
        if i == 0 {
            (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
        } else if i == n - 1 {
            (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2
        } else {
            (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2
        }
    };
    let d1 = |i: usize| -> f64 {
        if i == 0 {
            (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
        } else {
            (v[i + 1] - v[i - 1]) / (2.0 * h)
        }
    };

    let out: Vec<f64> = match kind {
        Stencil::Cartesian1D => (0..n).map(d2).collect(),
        Stencil::RadialLaplacian3D => {
            if x[0] < 0.0 {
                return Err(Error::InvalidGrid("radial grid has negative nodes".into()));
            }
            (0..n)
                .map(|i| {
                    if i == 0 && x[0] == 0.0 {
                        6.0 * (v[1] - v[0]) / h2
                    } else {
                        d2(i) + 2.0 / x[i] * d1(i)
                    }
                })
                .collect()
        }
    };
    GridFunction::new(x.to_vec(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_err(g: &GridFunction, exact: impl Fn(f64) -> f64, lo: usize, hi: usize) -> f64 {
        (lo..hi).map(|i| (g.values()[i] - exact(g.nodes()[i])).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn radial_laplacian_of_r_squared() {
        let f = GridFunction::uniform(0.0, 2.0, 41, |r| r * r).unwrap();
        let lap = second_derivative(&f, Stencil::RadialLaplacian3D).unwrap();
        assert!(lap.values().iter().all(|v| (v - 6.0).abs() < 1e-10));
    }

    #[test]
    fn cosine_second_order() {
        let w = 1.7;
        let err = |n: usize| {
            let f = GridFunction::uniform(-1.0, 1.0, n, |t| (w * t).cos()).unwrap();
            let d = second_derivative(&f, Stencil::Cartesian1D).unwrap();
            max_err(&d, |t| -w * w * (w * t).cos(), 1, n - 1)
        };
        let (e1, e2) = (err(101), err(201));
        // Taylor remainder bound h^2/12 * w^4
        let h: f64 = 2.0 / 100.0;
        assert!(e1 <= h * h / 12.0 * w.powi(4) * 1.001);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn sinc_helmholtz_second_order() {
        let k = 2f64.sqrt();
        let sinc = |r: f64| if r == 0.0 { 1.0 } else { (k * r).sin() / (k * r) };
        let err = |n: usize| {
            let f = GridFunction::uniform(0.0, std::f64::consts::PI / k, n, sinc).unwrap();
            let d = second_derivative(&f, Stencil::RadialLaplacian3D).unwrap();
            max_err(&d, |r| -k * k * sinc(r), 0, n - 1)
        };
        let ratio = err(129) / err(257);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rejects_non_uniform_and_short() {
        let g = GridFunction::new(vec![0.0, 0.1, 0.2, 0.35, 0.4], vec![0.0; 5]).unwrap();
        assert!(matches!(second_derivative(&g, Stencil::Cartesian1D), Err(Error::NonUniformGrid { .. })));
        let g = GridFunction::uniform(0.0, 1.0, 4, |x| x).unwrap();
        assert!(second_derivative(&g, Stencil::Cartesian1D).is_err());
    }

    #[test]
    fn convergence_order_two() {
        let f = |x: f64| (2.0 * x).sin() * x.exp();
        let d2 = |x: f64| x.exp() * (-3.0 * (2.0 * x).sin() + 4.0 * (2.0 * x).cos());
        let err = |n: usize| {
            let g = GridFunction::uniform(0.0, 1.5, n, f).unwrap();
            let d = second_derivative(&g, Stencil::Cartesian1D).unwrap();
            max_err(&d, d2, 1, n - 1)
        };
        let ratio = err(201) / err(401);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn exact_on_quadratics(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, n in 5usize..60) {
            let g = GridFunction::uniform(-1.0, 2.0, n, |x| a + b * x + c * x * x).unwrap();
            let d = second_derivative(&g, Stencil::Cartesian1D).unwrap();
            for v in d.values() {
                prop_assert!((v - 2.0 * c).abs() < 1e-7 * (1.0 + c.abs()) * (n * n) as f64 / 25.0);
            }
        }
    }
}
