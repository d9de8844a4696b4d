use crate::error::{Error, Result};
use crate::quadrature::{integrate, sin_pow};
use crate::starshape::RadialGraph;

/// Smallest admissible number of radial node rows.
pub const MIN_XI_NODES: usize = 5;

/// Boundary-fitted annulus between `Σ_0` and the geodesic sphere `r = R_L`.
///
/// Node `(i, j)` sits at `ψ_j` of the inner grid and
/// `r = g(ψ_j) + φ(ξ_i) (R_L - g(ψ_j))`, `ξ_i = i / (N_ξ - 1)`, so the inner
/// boundary is the row `i = 0` and the outer boundary the row `i = N_ξ - 1`.
/// The stretching `φ(ξ) = (e^{βξ} - 1)/(e^β - 1)` clusters rows toward `Σ_0`
/// for grading `β > 0`; `β = 0` gives `φ(ξ) = ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusMesh {
    inner: RadialGraph,
    r_outer: f64,
    n_xi: usize,
    grading: f64,
    level_max: f64,
    pub(crate) dg: Vec<f64>,
    // ∫ sin^{n-2} over the angular extent of each control cell
    pub(crate) omega: Vec<f64>,
    // sin^{n-2} at the angular cell faces ψ_{j+1/2}
    pub(crate) sin_half: Vec<f64>,
}

impl AnnulusMesh {
    pub fn new(inner: RadialGraph, r_outer: f64, n_xi: usize) -> Result<Self> {
        if n_xi < MIN_XI_NODES {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_XI_NODES} radial nodes, got {n_xi}"
            )));
        }
        if !(r_outer > inner.max_r()) || !r_outer.is_finite() {
            return Err(Error::InvalidInput(format!(
                "outer radius {r_outer} must exceed sup r = {} over the initial surface",
                inner.max_r()
            )));
        }
        let n = inner.n();
        let level_max = (n as f64 - 1.0) * (r_outer.sinh() / inner.max_r().sinh()).ln();
        let (dg, _) = inner.derivatives();
        let grid = inner.grid();
        let (np, h) = (grid.len(), grid.h());
        let p = n - 2;
        let omega = (0..np)
            .map(|j| {
                let lo = (grid.psi(j) - 0.5 * h).max(0.0);
                let hi = (grid.psi(j) + 0.5 * h).min(std::f64::consts::PI);
                integrate(|x| sin_pow(x, p), lo, hi, 16)
            })
            .collect();
        let sin_half = (0..np - 1).map(|j| sin_pow((j as f64 + 0.5) * h, p)).collect();
        Ok(Self {
            inner,
            r_outer,
            n_xi,
            grading: 0.0,
            level_max,
            dg,
            omega,
            sin_half,
        })
    }

    /// Mesh whose expanding-sphere level `L` exceeds `t_max` by `margin`.
    pub fn for_levels(inner: RadialGraph, t_max: f64, margin: f64, n_xi: usize) -> Result<Self> {
        let n = inner.n() as f64;
        let target = t_max + margin;
        let r_outer = (inner.max_r().sinh() * (target / (n - 1.0)).exp()).asinh();
        let r_outer = r_outer.max(inner.max_r() * (1.0 + 1e-9) + 1e-9);
        Self::new(inner, r_outer, n_xi)
    }

    /// Same mesh with rows clustered toward `Σ_0` by the grading `β ≥ 0`.
    pub fn with_grading(mut self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput(format!("grading must be finite and >= 0, got {beta}")));
        }
        self.grading = beta;
        Ok(self)
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// `φ(ξ)`, the fraction of `R_L - g` covered at computational coordinate `ξ`.
    pub fn stretch(&self, xi: f64) -> f64 {
        let b = self.grading;
        if b == 0.0 {
            xi
        } else {
            (b * xi).exp_m1() / b.exp_m1()
        }
    }

    /// `φ'(ξ)`.
    pub fn stretch_rate(&self, xi: f64) -> f64 {
        let b = self.grading;
        if b == 0.0 {
            1.0
        } else {
            b * (b * xi).exp() / b.exp_m1()
        }
    }

    /// `φ⁻¹`.
    pub fn unstretch(&self, s: f64) -> f64 {
        let b = self.grading;
        if b == 0.0 {
            s
        } else {
            (s * b.exp_m1()).ln_1p() / b
        }
    }

    /// Computational coordinate of radius `r` on ray `j`.
    pub fn xi_of(&self, r: f64, j: usize) -> f64 {
        let g = self.inner.r()[j];
        self.unstretch((r - g) / (self.r_outer - g))
    }

    pub fn inner(&self) -> &RadialGraph {
        &self.inner
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    /// `L = (n-1) log(sinh R_L / sinh r_+)`: the expanding sphere from the
    /// out-ball lies below the weak solution, so `L` never exceeds it on the
    /// outer sphere.
    pub fn level_max(&self) -> f64 {
        self.level_max
    }

    pub fn n_xi(&self) -> usize {
        self.n_xi
    }

    pub fn n_psi(&self) -> usize {
        self.inner.grid().len()
    }

    pub fn len(&self) -> usize {
        self.n_xi * self.n_psi()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn d_xi(&self) -> f64 {
        1.0 / (self.n_xi - 1) as f64
    }

    pub fn h(&self) -> f64 {
        self.inner.grid().h()
    }

    pub fn xi(&self, i: usize) -> f64 {
        if i == self.n_xi - 1 {
            1.0
        } else {
            i as f64 * self.d_xi()
        }
    }

    pub fn psi(&self, j: usize) -> f64 {
        self.inner.grid().psi(j)
    }

    /// Flat index of node `(i, j)`; rows of constant `ξ` are contiguous.
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.n_psi() + j
    }

    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.r_at(self.xi(i), j)
    }

    /// Volume of `F_L \ Ω_0`.
    pub fn annulus_volume(&self) -> f64 {
        let grid = self.inner.grid();
        let k = self.n() as i32 - 1;
        let radial: Vec<f64> = self
            .inner
            .r()
            .iter()
            .map(|&g| integrate(|r| r.sinh().powi(k), g, self.r_outer, 64))
            .collect();
        grid.integrate(&radial)
    }

    /// `(|Σ_0| + |∂F_L|) / vol(F_L \ Ω_0)`. Integrating the equation over
    /// the annulus bounds `ε vol` by the boundary flux, and `|∇u|/W < 1`
    /// bounds the flux by the boundary area, so no solution exists for
    /// `ε` at or above this value.
    pub fn epsilon_bound(&self) -> f64 {
        let n = self.n() as i32;
        let outer = self.inner.grid().sphere_area() * self.r_outer.sinh().powi(n - 1);
        let inner = crate::starshape::area(&self.inner).unwrap_or(f64::INFINITY);
        (inner + outer) / self.annulus_volume()
    }

    /// Radial coordinate of the ray at node column `j` for a fractional `ξ`.
    pub fn r_at(&self, xi: f64, j: usize) -> f64 {
        let g = self.inner.r()[j];
        if xi >= 1.0 {
            return self.r_outer;
        }
        g + self.stretch(xi) * (self.r_outer - g)
    }
}
