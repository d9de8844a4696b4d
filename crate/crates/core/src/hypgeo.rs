//! Coordinates, distances and isometries of hyperbolic space.
//!
//! Two models are used side by side. The geodesic-polar model writes a point
//! as `(θ, r)` with `θ ∈ S^{n-1}` and `r` the distance to the origin, under the
//! metric `dr² + sinh²(r) dΩ²`. The Poincaré ball model is the open unit ball
//! with metric `4 |dx|² / (1 - |x|²)²`. The two are related radially by
//! `r = log((1 + ρ) / (1 - ρ))`, i.e. `ρ = tanh(r / 2)`.
//!
//! Inversions about spheres orthogonal to the unit sphere are isometries of the
//! ball; they play the role that hyperplane reflections play in Euclidean space.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Tolerance for pure-arithmetic geometric identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// A point of the Poincaré ball, `|x| < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    x: DVector<f64>,
}

impl BallPoint {
    pub fn new(x: DVector<f64>) -> Result<Self> {
        let norm = x.norm();
        if !norm.is_finite() || norm >= 1.0 {
            return Err(Error::Domain(format!(
                "ball point must satisfy |x| < 1, got |x| = {norm}"
            )));
        }
        Ok(Self { x })
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(x))
    }

    /// `ρ θ` for a unit vector `θ`; `θ` is normalized here.
    pub fn from_polar(theta: &DVector<f64>, rho: f64) -> Result<Self> {
        let t = theta.norm();
        if t == 0.0 {
            return Err(Error::Domain("zero direction vector".into()));
        }
        Self::new(theta * (rho / t))
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            x: DVector::zeros(dim),
        }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Euclidean radius `ρ = |x|`.
    pub fn rho(&self) -> f64 {
        self.x.norm()
    }

    /// Direction `x / |x|`, or `None` at the origin.
    pub fn direction(&self) -> Option<DVector<f64>> {
        let rho = self.rho();
        (rho > 0.0).then(|| &self.x / rho)
    }
}

/// A point in geodesic-polar coordinates.
///
/// The origin carries no direction and is represented separately.
#[derive(Debug, Clone, PartialEq)]
pub enum GeodesicPoint {
    Origin { dim: usize },
    Polar { theta: DVector<f64>, r: f64 },
}

impl GeodesicPoint {
    pub fn polar(theta: DVector<f64>, r: f64) -> Result<Self> {
        let norm = theta.norm();
        if (norm - 1.0).abs() > IDENTITY_TOL {
            return Err(Error::Domain(format!("|theta| = {norm}, expected 1")));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("geodesic radius must be positive, got {r}")));
        }
        Ok(Self::Polar { theta, r })
    }

    /// Geodesic distance to the origin.
    pub fn r(&self) -> f64 {
        match self {
            Self::Origin { .. } => 0.0,
            Self::Polar { r, .. } => *r,
        }
    }

    pub fn potential(&self) -> f64 {
        potential(self.r())
    }
}

/// `r(ρ) = log((1 + ρ) / (1 - ρ))`.
pub fn geodesic_radius(rho: f64) -> f64 {
    2.0 * rho.atanh()
}

/// Inverse of [`geodesic_radius`]: `ρ(r) = (e^r - 1) / (e^r + 1)`.
pub fn ball_radius(r: f64) -> f64 {
    (0.5 * r).tanh()
}

/// `sinh(r) = 2 / (ρ⁻¹ - ρ)` expressed through the ball radius.
pub fn sinh_from_ball(rho: f64) -> f64 {
    2.0 / (rho.recip() - rho)
}

pub fn to_geodesic(p: &BallPoint) -> GeodesicPoint {
    match p.direction() {
        None => GeodesicPoint::Origin { dim: p.dim() },
        Some(theta) => GeodesicPoint::Polar {
            theta,
            r: geodesic_radius(p.rho()),
        },
    }
}

pub fn to_ball(p: &GeodesicPoint) -> BallPoint {
    match p {
        GeodesicPoint::Origin { dim } => BallPoint::origin(*dim),
        GeodesicPoint::Polar { theta, r } => BallPoint {
            x: theta * ball_radius(*r),
        },
    }
}

/// The potential `f = cosh(r)`.
pub fn potential(r: f64) -> f64 {
    r.cosh()
}

/// Hyperbolic distance in the ball model,
/// `arccosh(1 + 2|p-q|² / ((1-|p|²)(1-|q|²)))`.
///
/// Evaluated as `2 asinh(|p-q| / sqrt((1-|p|²)(1-|q|²)))`, which is the same
/// quantity without the cancellation of `arccosh` near 1.
pub fn hyp_distance(p: &BallPoint, q: &BallPoint) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::Domain("points live in different dimensions".into()));
    }
    let (pp, qq) = (p.x.norm_squared(), q.x.norm_squared());
    if pp >= 1.0 || qq >= 1.0 {
        return Err(Error::Domain("points must lie in the open unit ball".into()));
    }
    let chord = (&p.x - &q.x).norm();
    Ok(2.0 * (chord / ((1.0 - pp) * (1.0 - qq)).sqrt()).asinh())
}

/// Inversion about a sphere `∂B_R(c)` orthogonal to the unit sphere.
///
/// Parametrized by `λ ∈ (0,1)`, the Euclidean distance from the origin to the
/// inversion sphere, and a unit direction `θ`. Then `R = (λ⁻¹ - λ)/2` and
/// `c = ((λ⁻¹ + λ)/2) θ`, so that `|c|² - R² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereInversion {
    lambda: f64,
    theta: DVector<f64>,
    radius: f64,
    center: DVector<f64>,
    // low-order parts: the sphere is `center + center_lo`, `radius + radius_lo`
    radius_lo: f64,
    center_lo: DVector<f64>,
}

impl SphereInversion {
    pub fn new(lambda: f64, theta: &DVector<f64>) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Domain(format!("lambda must lie in (0,1), got {lambda}")));
        }
        let t = theta.norm();
        if t == 0.0 {
            return Err(Error::Domain("zero direction vector".into()));
        }
        let theta = theta / t;
        let inv = Dd::from(1.0).div(Dd::from(lambda));
        let radius = inv.sub(Dd::from(lambda)).scale(0.5);
        let c = inv.add(Dd::from(lambda)).scale(0.5);
        let center: Vec<Dd> = theta.iter().map(|&v| c.mul(Dd::from(v))).collect();
        Ok(Self::from_parts(lambda, theta, radius, &center))
    }

    /// Builds the inversion from an explicit center and radius, keeping both
    /// exactly as given. `λ` is recovered as `√(R² + 1) - R`.
    pub fn from_sphere(center: DVector<f64>, radius: f64) -> Result<Self> {
        let c = center.norm();
        if !(radius > 0.0) || c <= 1.0 {
            return Err(Error::Domain(format!(
                "inversion sphere needs R > 0 and |c| > 1 (R = {radius}, |c| = {c})"
            )));
        }
        let gap = (c * c - radius * radius - 1.0).abs();
        if gap > 1e-9 * c * c {
            return Err(Error::Domain(format!(
                "sphere is not orthogonal to the unit sphere (|c|²-R²-1 = {gap:e})"
            )));
        }
        let lambda = (radius * radius + 1.0).sqrt() - radius;
        let theta = &center / c;
        let center_lo = DVector::zeros(center.len());
        Ok(Self {
            lambda,
            theta,
            radius,
            center,
            radius_lo: 0.0,
            center_lo,
        })
    }

    fn from_parts(lambda: f64, theta: DVector<f64>, radius: Dd, center: &[Dd]) -> Self {
        Self {
            lambda,
            theta,
            radius: radius.hi,
            center: DVector::from_iterator(center.len(), center.iter().map(|c| c.hi)),
            radius_lo: radius.lo,
            center_lo: DVector::from_iterator(center.len(), center.iter().map(|c| c.lo)),
        }
    }

    fn center_dd(&self, i: usize) -> Dd {
        Dd {
            hi: self.center[i],
            lo: self.center_lo[i],
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Center rounded to `f64`. The map itself carries a second-order part,
    /// which matters once `|c|` is large.
    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `|c|² - R² - 1`, zero for a sphere orthogonal to `∂B_1(0)`.
    ///
    /// Evaluated in double-double arithmetic on the double-double sphere.
    pub fn orthogonality_defect(&self) -> f64 {
        let r = Dd {
            hi: self.radius,
            lo: self.radius_lo,
        };
        let c2 = (0..self.dim()).fold(Dd::from(0.0), |acc, i| {
            let c = self.center_dd(i);
            acc.add(c.mul(c))
        });
        c2.sub(r.mul(r)).sub(Dd::from(1.0)).value()
    }

    /// `F(x) = R²/|x-c|² (x - c) + c` on all of `R^n \ {c}`.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        // `c + (F(x) - c)` cancels when |c| is large, hence double-double
        let d: Vec<Dd> = (0..self.dim()).map(|i| Dd::from(x[i]).sub(self.center_dd(i))).collect();
        let d2 = d.iter().fold(Dd::from(0.0), |acc, v| acc.add(v.mul(*v)));
        if d2.hi == 0.0 {
            return Err(Error::InversionSingularity);
        }
        let r = Dd {
            hi: self.radius,
            lo: self.radius_lo,
        };
        let k = r.mul(r).div(d2);
        Ok(DVector::from_iterator(
            d.len(),
            d.iter().enumerate().map(|(i, v)| self.center_dd(i).add(k.mul(*v)).value()),
        ))
    }

    /// Signed distance-like test: negative strictly inside `B_R(c)`.
    pub fn sphere_level(&self, x: &DVector<f64>) -> f64 {
        (x - &self.center).norm() - self.radius
    }

    pub fn half_space(&self) -> HalfSpace {
        HalfSpace {
            inversion: self.clone(),
        }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

// requires |a| >= |b|
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`, about 106 bits.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }
}

impl Dd {
    fn value(self) -> f64 {
        self.hi + self.lo
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        quick_two_sum(s, e + self.lo + o.lo)
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn scale(self, k: f64) -> Dd {
        self.mul(Dd::from(k))
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.scale(q1));
        quick_two_sum(q1, r.hi / o.hi)
    }

    fn sqrt(self) -> Dd {
        let r0 = self.hi.sqrt();
        let d = self.sub(Dd::from(r0).scale(r0));
        quick_two_sum(r0, d.hi / (2.0 * r0))
    }
}

/// Applies the inversion to a ball point; the image stays in the ball.
pub fn invert(inv: &SphereInversion, p: &BallPoint) -> Result<BallPoint> {
    if inv.dim() != p.dim() {
        return Err(Error::Domain("dimension mismatch".into()));
    }
    let y = inv.apply(&p.x)?;
    // Orthogonality keeps the image inside, up to rounding near the boundary.
    BallPoint::new(y)
}

/// The region `B_1(0) ∩ B_R(c)` cut off by an inversion sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub inversion: SphereInversion,
}

impl HalfSpace {
    pub fn contains(&self, p: &BallPoint) -> bool {
        self.inversion.sphere_level(&p.x) < 0.0
    }

    /// Closure of the half-space within the ball.
    pub fn contains_closed(&self, p: &BallPoint) -> bool {
        self.inversion.sphere_level(&p.x) <= 0.0
    }
}

/// The inversion exchanging two ball points `x1`, `x2` with `|x1| < |x2|`.
///
/// Its center is `x0 = (1 - s0) x1 + s0 x2` with
/// `s0 = (1 - ρ1²)/(ρ2² - ρ1²)` and its radius is
/// `R = |x0 - x1|^{1/2} |x0 - x2|^{1/2}`. The resulting sphere is orthogonal
/// to the unit sphere and maps `x2` to `x1`.
pub fn bisecting_inversion(x1: &BallPoint, x2: &BallPoint) -> Result<SphereInversion> {
    if x1.dim() != x2.dim() {
        return Err(Error::Domain("dimension mismatch".into()));
    }
    let (r1, r2) = (x1.rho(), x2.rho());
    if r1 == 0.0 || r2 == 0.0 {
        return Err(Error::Degenerate("bisected points must be nonzero".into()));
    }
    if r2 >= 1.0 {
        return Err(Error::Domain("x2 must lie in the open ball".into()));
    }
    if !(r1 < r2) {
        return Err(Error::Degenerate(format!(
            "need |x1| < |x2|, got {r1} and {r2}"
        )));
    }
    // |x0| grows like 1/(ρ2 - ρ1), so the sphere is built in double-double;
    // R = √(|x0|² - 1) equals √(|x0 - x1| |x0 - x2|)
    let norm_sq = |x: &DVector<f64>| x.iter().fold(Dd::from(0.0), |acc, &v| acc.add(Dd::from(v).scale(v)));
    let (q1, q2) = (norm_sq(&x1.x), norm_sq(&x2.x));
    let gap = q2.sub(q1);
    if !(gap.hi > 0.0) {
        return Err(Error::Degenerate("need |x1| < |x2|".into()));
    }
    let s0 = Dd::from(1.0).sub(q1).div(gap);
    let x0: Vec<Dd> = x1
        .x
        .iter()
        .zip(x2.x.iter())
        .map(|(&a, &b)| Dd::from(a).add(s0.mul(Dd::from(b).sub(Dd::from(a)))))
        .collect();
    let n0 = x0.iter().fold(Dd::from(0.0), |acc, v| acc.add(v.mul(*v)));
    let radius = n0.sub(Dd::from(1.0)).sqrt();
    let center = DVector::from_iterator(x0.len(), x0.iter().map(|v| v.hi));
    let c = center.norm();
    let lambda = (radius.hi * radius.hi + 1.0).sqrt() - radius.hi;
    Ok(SphereInversion::from_parts(lambda, &center / c, radius, &x0))
}

/// Coefficient `k` such that `u(x2) ≥ u(x1)` whenever `ρ2 - ρ1 ≥ k |θ2 - θ1|`:
///
/// `k = sqrt( ρ1 ρ2 (ρ1⁻¹ - ρ1)² / ((ρ+⁻¹ - ρ+)² - (ρ1⁻¹ - ρ1)²) )`.
pub fn reflection_threshold(rho_plus: f64, rho1: f64, rho2: f64) -> Result<f64> {
    if !(rho_plus > 0.0 && rho_plus < rho1 && rho1 <= rho2 && rho2 < 1.0) {
        return Err(Error::Domain(format!(
            "need 0 < rho+ < rho1 <= rho2 < 1, got {rho_plus}, {rho1}, {rho2}"
        )));
    }
    let dp = (rho_plus.recip() - rho_plus).powi(2);
    let d1 = (rho1.recip() - rho1).powi(2);
    let denom = dp - d1;
    if !(denom > 0.0) {
        return Err(Error::Domain("rho1 must exceed rho+".into()));
    }
    Ok((rho1 * rho2 * d1 / denom).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e1(dim: usize) -> DVector<f64> {
        let mut v = DVector::zeros(dim);
        v[0] = 1.0;
        v
    }

    #[test]
    fn to_geodesic_half() {
        let p = BallPoint::from_polar(&e1(3), 0.5).unwrap();
        assert_relative_eq!(to_geodesic(&p).r(), 3f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(to_geodesic(&p).r(), 1.0986123, epsilon = 1e-7);
    }

    #[test]
    fn sinh_relation_at_point_eight() {
        let s = sinh_from_ball(0.8);
        assert_relative_eq!(s, 2.0 / (1.25 - 0.8), epsilon = 1e-15);
        assert_relative_eq!(s, 4.4444444, epsilon = 1e-7);
        assert_relative_eq!(s.asinh(), 9f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(geodesic_radius(0.8), 9f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn origin_is_tagged() {
        let p = BallPoint::origin(4);
        assert_eq!(to_geodesic(&p), GeodesicPoint::Origin { dim: 4 });
        assert_eq!(to_ball(&GeodesicPoint::Origin { dim: 4 }).rho(), 0.0);
        assert!(geodesic_radius(1e-300) < 1e-299);
    }

    #[test]
    fn to_ball_inverts() {
        let g = GeodesicPoint::polar(e1(3), 3f64.ln()).unwrap();
        assert_relative_eq!(to_ball(&g).rho(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn distance_examples() {
        let o = BallPoint::origin(3);
        let a = BallPoint::from_polar(&e1(3), 0.5).unwrap();
        let b = BallPoint::from_polar(&e1(3), 0.8).unwrap();
        assert_relative_eq!(hyp_distance(&o, &a).unwrap(), 3f64.ln(), epsilon = 1e-14);
        assert_eq!(hyp_distance(&a, &a).unwrap(), 0.0);
        // arccosh(1 + 0.18/0.27) = arccosh(5/3) = ln 3
        assert_relative_eq!(hyp_distance(&b, &a).unwrap(), 3f64.ln(), epsilon = 1e-14);
        assert_relative_eq!((5.0f64 / 3.0).acosh(), 3f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn distance_rejects_outside() {
        assert!(BallPoint::from_slice(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn potential_values() {
        assert_eq!(potential(0.0), 1.0);
        assert_relative_eq!(potential(1.0), 1.5430806, epsilon = 1e-7);
        assert_relative_eq!(potential(2.0), 3.7621957, epsilon = 1e-7);
    }

    #[test]
    fn inversion_examples() {
        let inv = SphereInversion::new(0.5, &e1(3)).unwrap();
        assert_relative_eq!(inv.radius(), 0.75, epsilon = 1e-15);
        assert_relative_eq!(inv.center()[0], 1.25, epsilon = 1e-15);
        assert!(inv.orthogonality_defect().abs() < IDENTITY_TOL);

        let half = BallPoint::from_polar(&e1(3), 0.5).unwrap();
        let fixed = invert(&inv, &half).unwrap();
        assert_relative_eq!(fixed.coords()[0], 0.5, epsilon = 1e-15);

        let image = invert(&inv, &BallPoint::origin(3)).unwrap();
        assert_relative_eq!(image.coords()[0], 0.8, epsilon = 1e-15);
        assert_relative_eq!(
            hyp_distance(&image, &fixed).unwrap(),
            3f64.ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn inversion_center_is_singular() {
        let inv = SphereInversion::new(0.5, &e1(2)).unwrap();
        assert_eq!(
            inv.apply(&inv.center().clone()),
            Err(Error::InversionSingularity)
        );
    }

    #[test]
    fn bisecting_on_a_ray() {
        let x1 = BallPoint::from_polar(&e1(3), 0.5).unwrap();
        let x2 = BallPoint::from_polar(&e1(3), 0.8).unwrap();
        let inv = bisecting_inversion(&x1, &x2).unwrap();
        let s0 = 0.75 / 0.39;
        assert_relative_eq!(s0, 1.9230769, epsilon = 1e-7);
        assert_relative_eq!(inv.center()[0], 1.0769231, epsilon = 1e-7);
        assert!(inv.center()[1].abs() < 1e-15);
        assert_relative_eq!(inv.radius().powi(2), 0.1597633, epsilon = 1e-7);
        assert!(inv.orthogonality_defect().abs() < 1e-12);
        // R² = (s0-1) s0 (ρ2-ρ1)² on a common ray
        assert_relative_eq!(
            inv.radius().powi(2),
            (s0 - 1.0) * s0 * 0.09,
            epsilon = 1e-12
        );
        let y = invert(&inv, &x2).unwrap();
        assert!((y.coords() - x1.coords()).norm() < 1e-12);
        assert_relative_eq!(inv.lambda(), inv.center().norm() - inv.radius(), epsilon = 1e-12);
    }

    #[test]
    fn bisecting_degenerate() {
        let x1 = BallPoint::from_slice(&[0.5, 0.0]).unwrap();
        let x2 = BallPoint::from_slice(&[0.0, 0.5]).unwrap();
        assert!(matches!(
            bisecting_inversion(&x1, &x2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn threshold_example() {
        let k = reflection_threshold(0.3, 0.5, 0.6).unwrap();
        let dp = (1.0f64 / 0.3 - 0.3).powi(2);
        assert_relative_eq!(dp, 9.2011111, epsilon = 1e-6);
        assert_relative_eq!(k, (0.675 / (dp - 2.25)).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(k, 0.311620, epsilon = 1e-6);
    }

    #[test]
    fn threshold_blows_up_near_rho_plus() {
        let near = reflection_threshold(0.3, 0.3 + 1e-9, 0.6).unwrap();
        assert!(near > 1e3);
        assert!(reflection_threshold(0.3, 0.3, 0.6).is_err());
    }
}
