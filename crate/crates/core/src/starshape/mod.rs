//! Axisymmetric star-shaped hypersurfaces `r = g(ψ)` in hyperbolic space.
//!
//! A graph is sampled on a uniform grid of the polar angle `ψ ∈ [0, π]` of
//! `S^{n-1}`; rotation about the axis `ψ = 0` is implicit. With `s = sinh g`,
//! `c = cosh g` and the slant factor `W = sqrt(s² + g'²) / s`:
//!
//! * area element `(s sin ψ)^{n-2} sqrt(s² + g'²) dψ · w_{n-2}`;
//! * outward unit normal `ν = (∂_r - g' s⁻² ∂_ψ) / W`;
//! * support function `φ = ⟨∇ cosh r, ν⟩ = s / W`;
//! * mean curvature
//!   `H = (n-1) c / (s W) + c g'² / (s³ W³) - (n-2) cot ψ g' / (s² W) - g'' / (s² W³)`,
//!   with `cot ψ · g' → g''` at the poles.
//!
//! Derivatives use central differences with mirrored ghost nodes, which
//! enforces `g' = 0` at both poles. Integrals use [`crate::quadrature::product_weights`].

mod geometry;
mod io;
mod oracle;

pub use geometry::{
    area, bulk_potential, geometry, gradient_bound, gradient_bound_check, support_integral,
    weighted_total_curvature, SurfaceGeometry,
};
pub use io::{graph_from_text, graph_to_text};
pub use oracle::{mean_curvature_oracle, ClampedSpline};

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{product_weights, unit_sphere_area};

/// Smallest supported ambient dimension.
pub const MIN_DIM: usize = 3;
/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 7;
/// Smallest supported node count.
pub const MIN_NODES: usize = 16;

/// Uniform grid `ψ_i = i h`, `h = π / (N - 1)`, with cached quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    n: usize,
    num_nodes: usize,
    // product weights for sin^{n-2}, already multiplied by w_{n-2}
    weights: Arc<Vec<f64>>,
}

impl PolarGrid {
    pub fn new(n: usize, num_nodes: usize) -> Result<Self> {
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(Error::InvalidInput(format!(
                "dimension must satisfy {MIN_DIM} <= n <= {MAX_DIM}, got {n}"
            )));
        }
        if num_nodes < MIN_NODES {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_NODES} nodes, got {num_nodes}"
            )));
        }
        let w = unit_sphere_area(n - 2);
        let weights = product_weights(num_nodes, n - 2)
            .into_iter()
            .map(|q| q * w)
            .collect();
        Ok(Self {
            n,
            num_nodes,
            weights: Arc::new(weights),
        })
    }

    /// Ambient dimension of hyperbolic space.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.num_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.num_nodes == 0
    }

    pub fn h(&self) -> f64 {
        PI / (self.num_nodes - 1) as f64
    }

    pub fn psi(&self, i: usize) -> f64 {
        if i == self.num_nodes - 1 {
            PI
        } else {
            i as f64 * self.h()
        }
    }

    pub fn psis(&self) -> Vec<f64> {
        (0..self.num_nodes).map(|i| self.psi(i)).collect()
    }

    /// Quadrature weights for `∫_{S^{n-1}} F dΩ` with `F` axisymmetric.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_i weights_i · values_i`, summed in node order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.num_nodes);
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// `w_{n-1}`, area of the unit sphere `S^{n-1}`.
    pub fn sphere_area(&self) -> f64 {
        unit_sphere_area(self.n - 1)
    }
}

/// A star-shaped axisymmetric hypersurface sampled on a [`PolarGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGraph {
    grid: PolarGrid,
    r: Vec<f64>,
    pub label: String,
}

impl RadialGraph {
    pub fn new(grid: PolarGrid, r: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if r.len() != grid.len() {
            return Err(Error::InvalidGraph(format!(
                "{} radii for {} nodes",
                r.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = r.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidGraph(format!("r[{i}] = {v} is not positive")));
        }
        Ok(Self {
            grid,
            r,
            label: label.into(),
        })
    }

    /// Samples `f(ψ)` at the grid nodes.
    pub fn from_fn(grid: PolarGrid, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let r = grid.psis().into_iter().map(f).collect();
        Self::new(grid, r, label)
    }

    /// The geodesic sphere `r ≡ r0` about the origin.
    pub fn sphere(grid: PolarGrid, r0: f64) -> Result<Self> {
        Self::from_fn(grid, format!("sphere r0={r0}"), |_| r0)
    }

    /// `r = r0 + a cos(kψ)`; `k` should be even for a smooth surface at `ψ = π`.
    pub fn perturbed(grid: PolarGrid, r0: f64, a: f64, k: u32) -> Result<Self> {
        Self::from_fn(grid, format!("perturbed r0={r0} a={a} k={k}"), |psi| {
            r0 + a * (k as f64 * psi).cos()
        })
    }

    /// The geodesic sphere of radius `a` about the point at distance `c` on
    /// the axis `ψ = 0`. Requires `0 ≤ c < a`.
    pub fn offset_sphere(grid: PolarGrid, c: f64, a: f64) -> Result<Self> {
        if !(c >= 0.0 && a > c) {
            return Err(Error::InvalidInput(format!(
                "offset sphere needs 0 <= c < a, got c = {c}, a = {a}"
            )));
        }
        Self::from_fn(grid, format!("offset sphere c={c} a={a}"), |psi| {
            offset_sphere_radius(c, a, psi)
        })
    }

    /// Two bulbs joined by a neck: `r = r_neck + (r_bulb - r_neck) (cos² ψ)^k`.
    pub fn dumbbell(grid: PolarGrid, r_neck: f64, r_bulb: f64, k: u32) -> Result<Self> {
        if !(r_neck > 0.0 && r_bulb > r_neck) {
            return Err(Error::InvalidInput(format!(
                "dumbbell needs 0 < r_neck < r_bulb, got {r_neck}, {r_bulb}"
            )));
        }
        Self::from_fn(
            grid,
            format!("dumbbell neck={r_neck} bulb={r_bulb} k={k}"),
            |psi| r_neck + (r_bulb - r_neck) * psi.cos().powi(2).powi(k as i32),
        )
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn min_r(&self) -> f64 {
        self.r.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_r(&self) -> f64 {
        self.r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Same grid, new radii.
    pub fn with_r(&self, r: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), r, self.label.clone())
    }

    /// `(g', g'')` at every node by central differences with mirrored ghosts.
    pub fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.r.len();
        let h = self.grid.h();
        let r = &self.r;
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        for i in 0..n {
            let left = if i == 0 { r[1] } else { r[i - 1] };
            let right = if i == n - 1 { r[n - 2] } else { r[i + 1] };
            d1[i] = if i == 0 || i == n - 1 {
                0.0
            } else {
                (right - left) / (2.0 * h)
            };
            d2[i] = (right - 2.0 * r[i] + left) / (h * h);
        }
        (d1, d2)
    }

    /// Ball-model points `(ρ sin ψ, ρ cos ψ)` in the meridian half-plane,
    /// axis first.
    pub fn meridian_ball_points(&self) -> Vec<[f64; 2]> {
        self.r
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let rho = crate::hypgeo::ball_radius(r);
                let psi = self.grid.psi(i);
                [rho * psi.cos(), rho * psi.sin()]
            })
            .collect()
    }
}

/// Radius along the ray at angle `ψ` of the geodesic sphere of radius `a`
/// centered at distance `c` on the axis.
///
/// Solves `cosh c cosh r - sinh c cos ψ sinh r = cosh a` for the outer root.
pub fn offset_sphere_radius(c: f64, a: f64, psi: f64) -> f64 {
    let big_a = c.cosh();
    let big_b = c.sinh() * psi.cos();
    let norm = ((big_a - big_b) * (big_a + big_b)).sqrt();
    (big_b / big_a).atanh() + (a.cosh() / norm).acosh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_validation() {
        assert!(PolarGrid::new(2, 64).is_err());
        assert!(PolarGrid::new(8, 64).is_err());
        assert!(PolarGrid::new(3, 15).is_err());
        let g = PolarGrid::new(3, 17).unwrap();
        assert_eq!(g.psi(0), 0.0);
        assert_eq!(g.psi(16), PI);
        assert_relative_eq!(g.h(), PI / 16.0);
    }

    #[test]
    fn offset_sphere_extremes() {
        let (c, a) = (0.5, 1.5);
        assert_relative_eq!(offset_sphere_radius(c, a, 0.0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(offset_sphere_radius(c, a, PI), 1.0, epsilon = 1e-12);
        assert_relative_eq!(offset_sphere_radius(0.0, a, 1.0), a, epsilon = 1e-14);
    }

    #[test]
    fn rejects_nonpositive_radius() {
        let grid = PolarGrid::new(3, 16).unwrap();
        assert!(RadialGraph::from_fn(grid, "bad", |p| p - 1.0).is_err());
    }

    #[test]
    fn derivatives_vanish_at_poles() {
        let grid = PolarGrid::new(3, 65).unwrap();
        let g = RadialGraph::perturbed(grid, 1.0, 0.1, 2).unwrap();
        let (d1, d2) = g.derivatives();
        assert_eq!(d1[0], 0.0);
        assert_eq!(d1[64], 0.0);
        assert_relative_eq!(d2[0], -0.4, epsilon = 1e-3);
        assert_relative_eq!(d1[16], -0.2, epsilon = 1e-3);
    }
}
