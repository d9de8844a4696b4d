use crate::certificate::{Certificate, CertificateKind, Verdict, Witness};
use crate::error::{Error, Result};

use super::RadialGraph;

/// Per-node geometry of a [`RadialGraph`].
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGeometry {
    /// `g'(ψ_i)`.
    pub dr: Vec<f64>,
    /// `g''(ψ_i)`.
    pub d2r: Vec<f64>,
    /// Slant factor `W = sqrt(s² + g'²) / s ≥ 1`.
    pub slant: Vec<f64>,
    /// `(s sin ψ)^{n-2} sqrt(s² + g'²)`, per unit `S^{n-2}` measure.
    pub area_element: Vec<f64>,
    /// `s^{n-2} sqrt(s² + g'²)`: the area element without the `sin^{n-2} ψ`
    /// factor carried by the quadrature weights.
    pub area_density: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    /// Support function `φ = s / W`.
    pub support: Vec<f64>,
    /// Orthonormal components `(ν^r, ν^ψ)` of the outward normal.
    pub normal: Vec<[f64; 2]>,
    /// `|Dr|` on the round sphere, `= |g'|`.
    pub grad_r: Vec<f64>,
    /// Potential `cosh g`.
    pub potential: Vec<f64>,
    sinh_r: Vec<f64>,
    weights: Vec<f64>,
    n: usize,
}

/// Evaluates [`SurfaceGeometry`] at every node.
pub fn geometry(g: &RadialGraph) -> Result<SurfaceGeometry> {
    let n = g.n();
    let nf = n as f64;
    let grid = g.grid();
    let len = grid.len();
    let (dr, d2r) = g.derivatives();
    let mut out = SurfaceGeometry {
        slant: Vec::with_capacity(len),
        area_element: Vec::with_capacity(len),
        area_density: Vec::with_capacity(len),
        mean_curvature: Vec::with_capacity(len),
        support: Vec::with_capacity(len),
        normal: Vec::with_capacity(len),
        grad_r: dr.iter().map(|d| d.abs()).collect(),
        potential: Vec::with_capacity(len),
        sinh_r: Vec::with_capacity(len),
        weights: grid.weights().to_vec(),
        n,
        dr,
        d2r,
    };
    for i in 0..len {
        let r = g.r()[i];
        if !(r > 0.0) {
            return Err(Error::InvalidGraph(format!("r[{i}] = {r}")));
        }
        let psi = grid.psi(i);
        let (s, c) = (r.sinh(), r.cosh());
        let (d1, d2) = (out.dr[i], out.d2r[i]);
        let root = (s * s + d1 * d1).sqrt();
        let w = root / s;
        let cot_term = if i == 0 || i == len - 1 {
            d2
        } else {
            d1 * psi.cos() / psi.sin()
        };
        let h = (nf - 1.0) * c / (s * w) + c * d1 * d1 / (s.powi(3) * w.powi(3))
            - (nf - 2.0) * cot_term / (s * s * w)
            - d2 / (s * s * w.powi(3));
        let density = s.powi(n as i32 - 2) * root;
        out.slant.push(w);
        out.area_density.push(density);
        out.area_element.push(density * psi.sin().powi(n as i32 - 2));
        out.mean_curvature.push(h);
        out.support.push(s / w);
        out.normal.push([1.0 / w, -d1 / (s * w)]);
        out.potential.push(c);
        out.sinh_r.push(s);
    }
    Ok(out)
}

impl SurfaceGeometry {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `∫_Σ F dσ` for nodal values `F`.
    pub fn surface_integral(&self, values: impl Fn(usize) -> f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, q)| q * self.area_density[i] * values(i))
            .sum()
    }

    pub fn area(&self) -> f64 {
        self.surface_integral(|_| 1.0)
    }

    /// `∫_Ω cosh r = ∫_{S^{n-1}} sinh^n(g) / n`.
    pub fn bulk_potential(&self) -> f64 {
        let n = self.n as i32;
        self.weights
            .iter()
            .zip(&self.sinh_r)
            .map(|(q, s)| q * s.powi(n) / n as f64)
            .sum()
    }

    /// `∫ f H dσ`.
    pub fn weighted_total_curvature(&self) -> f64 {
        self.surface_integral(|i| self.potential[i] * self.mean_curvature[i])
    }

    /// `∫ φ dσ`; equals `n ∫_Ω f` node by node.
    pub fn support_integral(&self) -> f64 {
        self.surface_integral(|i| self.support[i])
    }

    /// `∫ f dσ`.
    pub fn potential_integral(&self) -> f64 {
        self.surface_integral(|i| self.potential[i])
    }

    /// `∫ H φ dσ`.
    pub fn curvature_support_integral(&self) -> f64 {
        self.surface_integral(|i| self.mean_curvature[i] * self.support[i])
    }

    pub fn min_mean_curvature(&self) -> f64 {
        self.mean_curvature.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_grad_r(&self) -> f64 {
        self.grad_r.iter().copied().fold(0.0, f64::max)
    }
}

pub fn area(g: &RadialGraph) -> Result<f64> {
    Ok(geometry(g)?.area())
}

pub fn bulk_potential(g: &RadialGraph) -> Result<f64> {
    Ok(geometry(g)?.bulk_potential())
}

pub fn weighted_total_curvature(g: &RadialGraph) -> Result<f64> {
    Ok(geometry(g)?.weighted_total_curvature())
}

pub fn support_integral(g: &RadialGraph) -> Result<f64> {
    Ok(geometry(g)?.support_integral())
}

/// `sinh r₊ sinh r / sqrt(sinh² r - sinh² r₊)`, the admissible `|Dr|` at
/// radius `r > r₊`.
pub fn gradient_bound(r_plus: f64, r: f64) -> f64 {
    let (sp, s) = (r_plus.sinh(), r.sinh());
    sp * s / ((s - sp) * (s + sp)).sqrt()
}

/// Checks `|Dr| ≤ gradient_bound(r₊, r)` at every node; the margin is the
/// smallest `bound - |Dr|`.
pub fn gradient_bound_check(g: &RadialGraph, r_plus: f64) -> Result<Certificate> {
    let (min_i, min_r) = g
        .r()
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, r)| if r < acc.1 { (i, r) } else { acc });
    if min_r <= r_plus {
        return Ok(Certificate::inconclusive(
            CertificateKind::GradientBound,
            Verdict::PreconditionViolated,
            Some(Witness::Node(min_i)),
        )
        .with_note("r_plus", r_plus)
        .with_note("min_r", min_r));
    }
    let (dr, _) = g.derivatives();
    let mut worst = (0, f64::INFINITY);
    for (i, (&r, d)) in g.r().iter().zip(&dr).enumerate() {
        let m = gradient_bound(r_plus, r) - d.abs();
        if m < worst.1 {
            worst = (i, m);
        }
    }
    Ok(
        Certificate::new(CertificateKind::GradientBound, worst.1, Some(Witness::Node(worst.0)), g.r().len())
            .with_note("r_plus", r_plus),
    )
}
