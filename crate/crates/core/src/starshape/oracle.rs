use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

use super::RadialGraph;

/// Cubic spline on uniform nodes with prescribed zero end slopes.
#[derive(Debug, Clone)]
pub struct ClampedSpline {
    h: f64,
    y: Vec<f64>,
    // second derivatives at the nodes
    m: Vec<f64>,
}

impl ClampedSpline {
    /// Spline through `(i h, y_i)` with `S'(0) = S'((N-1) h) = 0`.
    pub fn new(h: f64, y: &[f64]) -> Self {
        let n = y.len();
        assert!(n >= 2);
        // Thomas algorithm on the symmetric tridiagonal system for M.
        let mut diag = vec![4.0 * h; n];
        diag[0] = 2.0 * h;
        diag[n - 1] = 2.0 * h;
        let mut rhs = vec![0.0; n];
        rhs[0] = 6.0 * (y[1] - y[0]) / h;
        rhs[n - 1] = -6.0 * (y[n - 1] - y[n - 2]) / h;
        for i in 1..n - 1 {
            rhs[i] = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h;
        }
        for i in 1..n {
            let f = h / diag[i - 1];
            diag[i] -= f * h;
            rhs[i] -= f * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - h * m[i + 1]) / diag[i];
        }
        Self { h, y: y.to_vec(), m }
    }

    fn interval(&self, x: f64) -> usize {
        ((x / self.h).floor().max(0.0) as usize).min(self.y.len() - 2)
    }

    /// `(S(x), S'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let i = self.interval(x);
        let h = self.h;
        let (a, b) = ((i + 1) as f64 * h - x, x - i as f64 * h);
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let ci = self.y[i] / h - mi * h / 6.0;
        let cj = self.y[i + 1] / h - mj * h / 6.0;
        let value = mi * a.powi(3) / (6.0 * h) + mj * b.powi(3) / (6.0 * h) + ci * a + cj * b;
        let slope = -mi * a * a / (2.0 * h) + mj * b * b / (2.0 * h) - ci + cj;
        (value, slope)
    }
}

// Half-width of the normal bump, in grid spacings.
const BUMP_CELLS: usize = 4;
const BUMP_AMPLITUDE: f64 = 1e-5;
const POINTS_PER_CELL: usize = 10;

/// Mean curvature at `node` from the first variation of area.
///
/// The graph is interpolated by a [`ClampedSpline`] and displaced radially by
/// `±δ η`, where `η = (1 - x²)³` is a bump of half-width four cells centered
/// at the node (clipped at the poles). The normal speed of that variation is
/// `η / W`, so `H ≈ (A(δ) - A(-δ)) / (2 δ ∫ η / W dσ)`, a bump-weighted
/// average of `H` near the node. Independent of the closed-form curvature.
pub fn mean_curvature_oracle(g: &RadialGraph, node: usize) -> Result<f64> {
    let grid = g.grid();
    if node >= grid.len() {
        return Err(Error::InvalidInput(format!("node {node} out of range")));
    }
    let spline = ClampedSpline::new(grid.h(), g.r());
    let n = g.n() as i32;
    let h = grid.h();
    let half = BUMP_CELLS as f64 * h;
    let center = grid.psi(node);
    let first = node.saturating_sub(BUMP_CELLS);
    let last = (node + BUMP_CELLS).min(grid.len() - 1);
    let (gx, gw) = gauss_legendre(POINTS_PER_CELL);

    let bump = |psi: f64| {
        let x = (psi - center) / half;
        if x.abs() >= 1.0 {
            (0.0, 0.0)
        } else {
            let q = 1.0 - x * x;
            (q.powi(3), -6.0 * x * q * q / half)
        }
    };
    let integrate = |f: &dyn Fn(f64) -> f64| {
        let mut total = 0.0;
        for k in first..last {
            let (a, b) = (grid.psi(k), grid.psi(k + 1));
            let (mid, hw) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in gx.iter().zip(&gw) {
                total += w * hw * f(mid + hw * x);
            }
        }
        total
    };
    let area = |delta: f64| {
        integrate(&|psi: f64| {
            let (r, dr) = spline.eval(psi);
            let (e, de) = bump(psi);
            let (r, dr) = (r + delta * e, dr + delta * de);
            let s = r.sinh();
            (s * psi.sin()).powi(n - 2) * (s * s + dr * dr).sqrt()
        })
    };
    let normal_speed = integrate(&|psi: f64| {
        let (r, _) = spline.eval(psi);
        let s = r.sinh();
        bump(psi).0 * (s * psi.sin()).powi(n - 2) * s
    });
    let delta = BUMP_AMPLITUDE;
    Ok((area(delta) - area(-delta)) / (2.0 * delta * normal_speed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::starshape::PolarGrid;
    use approx::assert_relative_eq;

    #[test]
    fn spline_reproduces_even_cosine() {
        let n = 129;
        let h = std::f64::consts::PI / (n - 1) as f64;
        let y: Vec<f64> = (0..n).map(|i| (2.0 * i as f64 * h).cos()).collect();
        let s = ClampedSpline::new(h, &y);
        for x in [0.0, 0.1, 1.0, 2.5, 3.1] {
            let (v, d) = s.eval(x);
            assert_relative_eq!(v, (2.0 * x).cos(), epsilon = 1e-6);
            assert_relative_eq!(d, -2.0 * (2.0 * x).sin(), epsilon = 1e-4);
        }
    }

    #[test]
    fn oracle_on_spheres() {
        for (r, expected) in [(1.0, 2.6260706), (2.0, 2.0746620)] {
            let g = RadialGraph::sphere(PolarGrid::new(3, 512).unwrap(), r).unwrap();
            for node in [0, 1, 7, 255, 510, 511] {
                let h = mean_curvature_oracle(&g, node).unwrap();
                assert!((h - expected).abs() < 1e-3, "r={r} node={node} h={h}");
            }
        }
    }
}
