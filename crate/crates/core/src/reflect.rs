//! Reflection certificates: star-shapedness of sampled level sets, the
//! companion gradient bound, the comparison principle under inversions and
//! the waiting time after which round-enough flows become star-shaped.

use nalgebra::DVector;

use crate::certificate::{Certificate, CertificateKind, Verdict, Witness};
use crate::error::{Error, Result};
use crate::hypgeo::{ball_radius, geodesic_radius, BallPoint, SphereInversion};
use crate::starshape::{gradient_bound, RadialGraph};

pub use crate::starshape::gradient_bound_check;

/// Ball-model samples of one level set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<BallPoint>,
    /// Level value `t` the samples belong to.
    pub t: f64,
    pub label: String,
}

impl PointCloud {
    pub fn new(points: Vec<BallPoint>, t: f64, label: impl Into<String>) -> Self {
        Self {
            points,
            t,
            label: label.into(),
        }
    }

    /// Ball image of the meridian circle of `g`: both half-planes of the
    /// plane spanned by the axis and `e_2`, poles counted once.
    ///
    /// For an axisymmetric surface every pair of points can be rotated into
    /// this plane without changing `ρ` and with `|θ2 - θ1|` not increased, so
    /// these are the hardest pairs.
    pub fn from_graph(g: &RadialGraph, t: f64) -> Self {
        let n = g.n();
        let len = g.r().len();
        let mut points = Vec::with_capacity(2 * len);
        for side in [1.0, -1.0] {
            for (i, &r) in g.r().iter().enumerate() {
                if side < 0.0 && (i == 0 || i == len - 1) {
                    continue;
                }
                let psi = g.grid().psi(i);
                let rho = ball_radius(r);
                let mut x = DVector::zeros(n);
                x[0] = rho * psi.cos();
                x[1] = side * rho * psi.sin();
                points.push(BallPoint::new(x).expect("tanh(r/2) < 1"));
            }
        }
        Self::new(points, t, g.label.clone())
    }

    /// Ball-model points from meridian-plane polar pairs `(r, ψ)`, with
    /// `ψ ∈ (-π, π]` measured from the axis.
    pub fn from_meridian(n: usize, samples: &[(f64, f64)], t: f64, label: impl Into<String>) -> Self {
        let points = samples
            .iter()
            .map(|&(r, psi)| {
                let rho = ball_radius(r);
                let mut x = DVector::zeros(n);
                x[0] = rho * psi.cos();
                x[1] = rho * psi.sin();
                BallPoint::new(x).expect("tanh(r/2) < 1")
            })
            .collect();
        Self::new(points, t, label)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

// Angular separations below this count as a common ray.
const COLLINEAR_TOL: f64 = 1e-14;

/// Right-hand side of the pair test,
/// `sqrt(ρ1 ρ2 / ((ρ+⁻¹ - ρ+)² - (ρ1⁻¹ - ρ1)²)) · (ρ1⁻¹ - ρ1)`.
pub fn pair_bound(rho_plus: f64, rho1: f64, rho2: f64) -> f64 {
    let dp = (rho_plus.recip() - rho_plus).powi(2);
    let d1 = rho1.recip() - rho1;
    (rho1 * rho2 / (dp - d1 * d1)).sqrt() * d1
}

/// Discrete Lipschitz-graph test over all pairs of the cloud.
///
/// For each pair with `ρ1 ≤ ρ2` and distinct directions, checks
/// `(ρ2 - ρ1) / |θ2 - θ1| ≤ pair_bound(ρ+, ρ1, ρ2)`. Pairs on a common ray
/// are consistent with a graph and skipped. The margin is the smallest
/// `bound - lhs`; ties keep the lexicographically first pair.
pub fn certify_star_shaped(cloud: &PointCloud, rho_plus: f64) -> Result<Certificate> {
    if !(rho_plus > 0.0 && rho_plus < 1.0) {
        return Err(Error::Domain(format!("rho_plus must lie in (0,1), got {rho_plus}")));
    }
    let polar: Vec<(f64, Option<DVector<f64>>)> = cloud
        .points
        .iter()
        .map(|p| (p.rho(), p.direction()))
        .collect();
    if let Some(i) = polar.iter().position(|(rho, _)| *rho <= rho_plus) {
        return Ok(Certificate::inconclusive(
            CertificateKind::StarShaped,
            Verdict::PreconditionViolated,
            Some(Witness::Node(i)),
        )
        .with_note("rho_plus", rho_plus)
        .with_note("t", cloud.t));
    }
    let mut worst = (None, f64::INFINITY);
    let mut pairs = 0usize;
    for i in 0..polar.len() {
        for j in i + 1..polar.len() {
            let (lo, hi) = if polar[i].0 <= polar[j].0 { (i, j) } else { (j, i) };
            let (rho1, t1) = (&polar[lo].0, polar[lo].1.as_ref().expect("rho > rho_plus > 0"));
            let (rho2, t2) = (&polar[hi].0, polar[hi].1.as_ref().expect("rho > rho_plus > 0"));
            let sep = (t2 - t1).norm();
            pairs += 1;
            if sep < COLLINEAR_TOL {
                continue;
            }
            let margin = pair_bound(rho_plus, *rho1, *rho2) - (rho2 - rho1) / sep;
            if margin < worst.1 {
                worst = (Some(Witness::Pair(i, j)), margin);
            }
        }
    }
    let margin = if worst.0.is_none() { 0.0 } else { worst.1 };
    Ok(Certificate::new(CertificateKind::StarShaped, margin, worst.0, pairs)
        .with_note("rho_plus", rho_plus)
        .with_note("t", cloud.t)
        .with_note("points", cloud.len()))
}

/// `T = (n - 1) log(sinh r₊ / sinh r₋)`.
pub fn waiting_time(r_minus: f64, r_plus: f64, n: usize) -> Result<f64> {
    if !(r_minus > 0.0 && r_minus <= r_plus) {
        return Err(Error::Domain(format!(
            "need 0 < r_minus <= r_plus, got {r_minus}, {r_plus}"
        )));
    }
    Ok((n as f64 - 1.0) * (r_plus.sinh() / r_minus.sinh()).ln())
}

/// An axisymmetric scalar field sampled in geodesic-polar coordinates.
pub trait MeridianField {
    /// Interpolated value at `(r, ψ)`, `ψ ∈ [0, π]`; `None` outside the
    /// sampled region.
    fn value_at(&self, r: f64, psi: f64) -> Option<f64>;
    /// The sample nodes as `(r, ψ, u)`.
    fn samples(&self) -> Vec<(f64, f64, f64)>;
}

/// Geodesic radius of `g` along the ray at angle `ψ`, linear between nodes.
pub fn graph_radius_at(g: &RadialGraph, psi: f64) -> f64 {
    let h = g.grid().h();
    let last = g.r().len() - 1;
    let x = (psi / h).clamp(0.0, last as f64);
    let i = (x.floor() as usize).min(last - 1);
    let f = x - i as f64;
    g.r()[i] * (1.0 - f) + g.r()[i + 1] * f
}

fn to_meridian(x: &DVector<f64>) -> (f64, f64) {
    let rho = x.norm();
    if rho == 0.0 {
        return (0.0, 0.0);
    }
    let psi = (x[0] / rho).clamp(-1.0, 1.0).acos();
    (geodesic_radius(rho), psi)
}

fn embed(n: usize, r: f64, psi: f64, azimuth: f64) -> DVector<f64> {
    let rho = ball_radius(r);
    let mut x = DVector::zeros(n);
    x[0] = rho * psi.cos();
    x[1] = rho * psi.sin() * azimuth.cos();
    x[2] = rho * psi.sin() * azimuth.sin();
    x
}

// Azimuths at which meridian samples are rotated about the axis.
const AZIMUTHS: usize = 8;
// Radial fractions used to sample the interior of the initial domain.
const INTERIOR_FRACTIONS: [f64; 6] = [0.02, 0.2, 0.4, 0.6, 0.8, 0.98];
// Relative slack for the inside-test of inverted interior samples.
const MEMBERSHIP_TOL: f64 = 1e-9;

/// Comparison of `u` with its inversion `u ∘ F` on `H \ Ω₀`.
///
/// First tests the hypothesis `F(Ω₀) \ H̄ ⊂ Ω₀` on interior samples of `Ω₀`
/// rotated about the axis; if it fails the certificate is
/// [`Verdict::HypothesisNotMet`] and the field is not inspected. Otherwise
/// every sample `x` of the field lying in `H \ Ω₀` (again at several
/// azimuths) is checked for `u(F(x)) ≤ u(x) + tol`. Images outside the
/// sampled region are skipped and counted.
pub fn comparison_check(
    field: &dyn MeridianField,
    inv: &SphereInversion,
    omega0: &RadialGraph,
    tol: f64,
) -> Result<Certificate> {
    let n = omega0.n();
    if inv.dim() != n {
        return Err(Error::Domain("inversion and domain dimensions differ".into()));
    }
    let azimuths: Vec<f64> = (0..AZIMUTHS)
        .map(|k| k as f64 * std::f64::consts::TAU / AZIMUTHS as f64)
        .collect();
    let inside = |r: f64, psi: f64| r <= graph_radius_at(omega0, psi) * (1.0 + MEMBERSHIP_TOL);
    for (i, &g) in omega0.r().iter().enumerate() {
        let psi = omega0.grid().psi(i);
        for frac in INTERIOR_FRACTIONS {
            for &az in &azimuths {
                let x = embed(n, frac * g, psi, az);
                let y = inv.apply(&x)?;
                if inv.sphere_level(&y) > 0.0 {
                    let (ry, py) = to_meridian(&y);
                    if !inside(ry, py) {
                        return Ok(Certificate::inconclusive(
                            CertificateKind::Comparison,
                            Verdict::HypothesisNotMet,
                            Some(Witness::Node(i)),
                        )
                        .with_note("lambda", inv.lambda()));
                    }
                }
            }
        }
    }
    let mut worst = (None, f64::INFINITY);
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for (k, (r, psi, u)) in field.samples().into_iter().enumerate() {
        if r < graph_radius_at(omega0, psi) {
            continue;
        }
        for &az in &azimuths {
            let x = embed(n, r, psi, az);
            if inv.sphere_level(&x) >= 0.0 {
                continue;
            }
            let (ry, py) = to_meridian(&inv.apply(&x)?);
            match field.value_at(ry, py) {
                Some(uy) => {
                    checked += 1;
                    let margin = u + tol - uy;
                    if margin < worst.1 {
                        worst = (Some(Witness::Node(k)), margin);
                    }
                }
                None => skipped += 1,
            }
        }
    }
    let margin = if worst.0.is_none() { 0.0 } else { worst.1 };
    Ok(Certificate::new(CertificateKind::Comparison, margin, worst.0, checked)
        .with_note("lambda", inv.lambda())
        .with_note("tol", tol)
        .with_note("skipped", skipped))
}

/// One row of a [`rigidity_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct RigidityRow {
    pub r_plus: f64,
    /// Smallest admissible `|Dr|` over the nodes.
    pub min_bound: f64,
    pub max_dr: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidityReport {
    pub rows: Vec<RigidityRow>,
    /// Largest `r₊` at which some node violates the bound; zero for spheres.
    pub threshold: f64,
    /// True when every row is consistent, which as `r₊ → 0` forces `|Dr| ≡ 0`.
    pub consistent_for_all: bool,
}

/// Evaluates the gradient bound along a decreasing sequence of `r₊`.
///
/// The bound at a node with `|Dr| = D` and `s = sinh r` fails exactly when
/// `sinh² r₊ < D² s² / (s² + D²)`, which gives the threshold in closed form.
pub fn rigidity_probe(r_plus_sequence: &[f64], g: &RadialGraph) -> Result<RigidityReport> {
    let (dr, _) = g.derivatives();
    let max_dr = dr.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut threshold_sq: f64 = 0.0;
    for (&r, d) in g.r().iter().zip(&dr) {
        let (s, d2) = (r.sinh(), d * d);
        threshold_sq = threshold_sq.max(d2 * s * s / (s * s + d2));
    }
    let mut rows = Vec::with_capacity(r_plus_sequence.len());
    for &rp in r_plus_sequence {
        if !(rp > 0.0 && rp < g.min_r()) {
            return Err(Error::Domain(format!(
                "r_plus = {rp} must lie in (0, min r = {})",
                g.min_r()
            )));
        }
        let mut min_bound = f64::INFINITY;
        let mut consistent = true;
        for (&r, d) in g.r().iter().zip(&dr) {
            let b = gradient_bound(rp, r);
            min_bound = min_bound.min(b);
            consistent &= d.abs() <= b;
        }
        rows.push(RigidityRow {
            r_plus: rp,
            min_bound,
            max_dr,
            consistent,
        });
    }
    let consistent_for_all = rows.iter().all(|r| r.consistent);
    Ok(RigidityReport {
        rows,
        threshold: threshold_sq.sqrt().asinh(),
        consistent_for_all,
    })
}
