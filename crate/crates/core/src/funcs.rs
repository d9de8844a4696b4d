//! Heintze-Karcher deficit, the functionals `Q` and `P`, Minkowski-type
//! inequalities and monotonicity checks along flow traces.
//!
//! With `A = |Σ|`, `V = ∫_Ω f`, `F = ∫_Σ f H` and `w = w_{n-1}`:
//!
//! * `Q = A^{(2-n)/(n-1)} (F - n(n-1) V)`,
//! * `P = A^{(2-n)/(n-1)} (F - (n-1) w^{-1/(n-1)} A^{n/(n-1)})`.
//!
//! Both equal `(n-1) w^{1/(n-1)}` on geodesic spheres about the origin, and
//! `P ≥ Q` exactly when `(n/w) V ≥ (A/w)^{n/(n-1)}`.

use std::fmt;

use crate::error::{Error, Result};
use crate::starshape::{geometry, RadialGraph, SurfaceGeometry};

/// Below this, `1/H` is treated as infinite.
pub const SMALL_CURVATURE: f64 = 1e-8;

/// `(n-1) w_{n-1}^{1/(n-1)}`, the value of `Q` and `P` on centered spheres.
pub fn sharp_constant(n: usize) -> f64 {
    let w = crate::quadrature::unit_sphere_area(n - 1);
    (n as f64 - 1.0) * w.powf(1.0 / (n as f64 - 1.0))
}

fn area_power(n: usize, area: f64) -> f64 {
    area.powf((2.0 - n as f64) / (n as f64 - 1.0))
}

/// `Q` from its ingredients.
pub fn q_functional(n: usize, area: f64, bulk: f64, f_h: f64) -> f64 {
    let nf = n as f64;
    area_power(n, area) * (f_h - nf * (nf - 1.0) * bulk)
}

/// `P` from its ingredients.
pub fn p_functional(n: usize, area: f64, f_h: f64) -> f64 {
    area_power(n, area) * p_small(n, area, f_h)
}

/// `p = F - (n-1) w^{-1/(n-1)} A^{n/(n-1)}`.
fn p_small(n: usize, area: f64, f_h: f64) -> f64 {
    let nf = n as f64;
    let w = crate::quadrature::unit_sphere_area(n - 1);
    f_h - (nf - 1.0) * w.powf(-1.0 / (nf - 1.0)) * area.powf(nf / (nf - 1.0))
}

/// `(n-1) ∫ f/H - n ∫_Ω f` from a computed geometry.
///
/// `+∞` when some `H < SMALL_CURVATURE`; an error when some `H < 0`.
pub fn hk_deficit_of(geo: &SurfaceGeometry) -> Result<f64> {
    if let Some((node, &value)) = geo
        .mean_curvature
        .iter()
        .enumerate()
        .find(|(_, h)| **h < 0.0)
    {
        return Err(Error::MeanConvexityLost { node, value });
    }
    if geo.mean_curvature.iter().any(|h| *h < SMALL_CURVATURE) {
        return Ok(f64::INFINITY);
    }
    let nf = geo.n() as f64;
    let f_over_h = geo.surface_integral(|i| geo.potential[i] / geo.mean_curvature[i]);
    Ok((nf - 1.0) * f_over_h - nf * geo.bulk_potential())
}

pub fn hk_deficit(g: &RadialGraph) -> Result<f64> {
    hk_deficit_of(&geometry(g)?)
}

pub fn evaluate_q(g: &RadialGraph) -> Result<f64> {
    let geo = geometry(g)?;
    Ok(q_functional(
        g.n(),
        geo.area(),
        geo.bulk_potential(),
        geo.weighted_total_curvature(),
    ))
}

pub fn evaluate_p(g: &RadialGraph) -> Result<f64> {
    let geo = geometry(g)?;
    Ok(p_functional(g.n(), geo.area(), geo.weighted_total_curvature()))
}

/// One inequality `lhs ≥ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub passed: bool,
    /// Set when the margin is within `tol` on a centered sphere.
    pub equality_case: bool,
}

impl InequalityReport {
    fn new(name: &str, lhs: f64, rhs: f64, tol: f64, sphere: bool) -> Self {
        let margin = lhs - rhs;
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            tol,
            passed: margin >= -tol,
            equality_case: sphere && margin.abs() < tol,
        }
    }
}

impl fmt::Display for InequalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inequality: {}", self.name)?;
        writeln!(f, "lhs: {:e}", self.lhs)?;
        writeln!(f, "rhs: {:e}", self.rhs)?;
        writeln!(f, "margin: {:e}", self.margin)?;
        writeln!(f, "tol: {:e}", self.tol)?;
        writeln!(f, "passed: {}", self.passed)?;
        writeln!(f, "equality_case: {}", self.equality_case)
    }
}

/// Volumetric and pure-area Minkowski inequalities, in that order.
///
/// Both share `lhs = ∫ f H / ((n-1) w)`; the right-hand sides are
/// `(A/w)^{(n-2)/(n-1)} + (n/w) V` and `(A/w)^{(n-2)/(n-1)} + (A/w)^{n/(n-1)}`.
/// `rel_tol` is relative to `lhs`.
pub fn minkowski_checks(g: &RadialGraph, rel_tol: f64) -> Result<[InequalityReport; 2]> {
    let geo = geometry(g)?;
    let n = g.n();
    let nf = n as f64;
    let w = crate::quadrature::unit_sphere_area(n - 1);
    let ratio = geo.area() / w;
    let lhs = geo.weighted_total_curvature() / ((nf - 1.0) * w);
    let common = ratio.powf((nf - 2.0) / (nf - 1.0));
    let volumetric = common + nf / w * geo.bulk_potential();
    let pure_area = common + ratio.powf(nf / (nf - 1.0));
    let sphere = g.max_r() - g.min_r() <= 1e-12 * g.max_r();
    let tol = rel_tol * lhs.abs();
    Ok([
        InequalityReport::new("minkowski_volumetric", lhs, volumetric, tol, sphere),
        InequalityReport::new("minkowski_area", lhs, pure_area, tol, sphere),
    ])
}

/// One sample of a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub area: f64,
    /// `∫_Ω f`.
    pub bulk: f64,
    /// `∫ f H dσ`.
    pub f_h: f64,
    /// `∫ f / H dσ`, `+∞` if some `H` is below [`SMALL_CURVATURE`].
    pub f_over_h: f64,
    pub q_val: f64,
    pub p_val: f64,
    /// `NaN` when the surface is not mean-convex.
    pub hk_deficit: f64,
    pub max_dr: f64,
    /// `∫ φ dσ`.
    pub phi: f64,
    /// `F - n(n-1) V`.
    pub q: f64,
    /// `F - (n-1) w^{-1/(n-1)} A^{n/(n-1)}`.
    pub p: f64,
}

impl TraceRow {
    pub fn from_geometry(t: f64, geo: &SurfaceGeometry) -> Self {
        let n = geo.n();
        let nf = n as f64;
        let area = geo.area();
        let bulk = geo.bulk_potential();
        let f_h = geo.weighted_total_curvature();
        let hk = hk_deficit_of(geo).unwrap_or(f64::NAN);
        let f_over_h = if hk.is_nan() || hk.is_infinite() {
            hk.abs()
        } else {
            (hk + nf * bulk) / (nf - 1.0)
        };
        Self {
            t,
            area,
            bulk,
            f_h,
            f_over_h,
            q_val: q_functional(n, area, bulk, f_h),
            p_val: p_functional(n, area, f_h),
            hk_deficit: hk,
            max_dr: geo.max_grad_r(),
            phi: geo.support_integral(),
            q: f_h - nf * (nf - 1.0) * bulk,
            p: p_small(n, area, f_h),
        }
    }

    pub fn from_graph(t: f64, g: &RadialGraph) -> Result<Self> {
        Ok(Self::from_geometry(t, &geometry(g)?))
    }
}

/// Time series of functionals along one flow, in increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalTrace {
    pub n: usize,
    pub rows: Vec<TraceRow>,
}

pub const TRACE_HEADER: &str = "t,area,bulk,fH,Q,P,hk_deficit,maxDr,fOverH,phi,q,p";

impl FunctionalTrace {
    pub fn new(n: usize) -> Self {
        Self { n, rows: Vec::new() }
    }

    pub fn push(&mut self, row: TraceRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(Error::InvalidInput(format!(
                    "trace rows must increase in t ({} after {})",
                    row.t, last.t
                )));
            }
        }
        if !(row.area > 0.0) {
            return Err(Error::InvalidInput(format!("nonpositive area {}", row.area)));
        }
        self.rows.push(row);
        Ok(())
    }

    /// CSV with a header row; floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let fields = [
                r.t, r.area, r.bulk, r.f_h, r.q_val, r.p_val, r.hk_deficit, r.max_dr, r.f_over_h,
                r.phi, r.q, r.p,
            ];
            let line: Vec<String> = fields.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Outcome of one family of row-pair checks.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Smallest relative margin; negative values are violations.
    pub worst_margin: f64,
    /// Row pair attaining the worst margin.
    pub witness: Option<(usize, usize)>,
    pub pairs: usize,
}

impl MonotonicityCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: true,
            worst_margin: f64::INFINITY,
            witness: None,
            pairs: 0,
        }
    }

    fn record(&mut self, i: usize, margin: f64, tol: f64) {
        self.pairs += 1;
        if margin < self.worst_margin {
            self.worst_margin = margin;
            self.witness = Some((i, i + 1));
        }
        self.passed &= margin >= -tol;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub tol: f64,
    /// `Q` nonincreasing, bulk growth, `∫ fH` growth bound, `P`
    /// nonincreasing, and the row-wise sign relation between `P - Q` and the
    /// volume condition.
    pub checks: Vec<MonotonicityCheck>,
    /// First row at which `(n/w) V < (A/w)^{n/(n-1)}` fails; `P` is not
    /// checked from there on.
    pub p_window_end: Option<usize>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&MonotonicityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for MonotonicityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tol: {:e}", self.tol)?;
        for c in &self.checks {
            let witness = c
                .witness
                .map(|(i, j)| format!("{i},{j}"))
                .unwrap_or_else(|| "none".into());
            writeln!(
                f,
                "{}: passed={} worst_margin={:e} witness={} pairs={}",
                c.name, c.passed, c.worst_margin, witness, c.pairs
            )?;
        }
        match self.p_window_end {
            Some(i) => writeln!(f, "p_window_end: {i}"),
            None => writeln!(f, "p_window_end: none"),
        }
    }
}

/// Row-pair checks along a trace, all with margins relative to the size of
/// the quantity involved and accepted down to `-tol`.
pub fn monotonicity_report(trace: &FunctionalTrace, tol: f64) -> Result<MonotonicityReport> {
    if trace.rows.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 rows for a verdict, got {}",
            trace.rows.len()
        )));
    }
    let n = trace.n;
    let nf = n as f64;
    let w = crate::quadrature::unit_sphere_area(n - 1);
    let volume_gap = |r: &TraceRow| {
        let rhs = (r.area / w).powf(nf / (nf - 1.0));
        (nf / w * r.bulk - rhs) / rhs
    };
    let mut q_check = MonotonicityCheck::new("q_nonincreasing");
    let mut bulk_check = MonotonicityCheck::new("bulk_growth");
    let mut fh_check = MonotonicityCheck::new("fh_growth");
    let mut p_check = MonotonicityCheck::new("p_nonincreasing");
    let mut pq_check = MonotonicityCheck::new("p_vs_q_sign");
    let mut p_window_end = None;
    for (i, pair) in trace.rows.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.t - a.t;
        q_check.record(i, (a.q_val - b.q_val) / a.q_val.abs(), tol);
        let grown = (nf * dt / (nf - 1.0)).exp() * a.bulk;
        bulk_check.record(i, (b.bulk - grown) / b.bulk, tol);
        let rate = |r: &TraceRow| 2.0 * r.phi + (nf - 2.0) / (nf - 1.0) * r.f_h;
        let allowed = 0.5 * dt * (rate(a) + rate(b));
        fh_check.record(i, (allowed - (b.f_h - a.f_h)) / b.f_h, tol);
        if p_window_end.is_none() {
            if volume_gap(a) < tol {
                p_check.record(i, (a.p_val - b.p_val) / a.p_val.abs(), tol);
            } else {
                p_window_end = Some(i);
            }
        }
    }
    for (i, r) in trace.rows.iter().enumerate() {
        // P - Q has the sign of the volume gap; compare signs with slack.
        let pq = (r.p_val - r.q_val) / r.q_val.abs();
        let gap = volume_gap(r);
        let margin = if gap.abs() <= tol || pq.abs() <= tol {
            0.0
        } else {
            (gap.signum() * pq.signum()).min(0.0) * pq.abs().min(gap.abs())
        };
        pq_check.pairs += 1;
        if margin < pq_check.worst_margin {
            pq_check.worst_margin = margin;
            pq_check.witness = Some((i, i));
        }
        pq_check.passed &= margin >= -tol;
    }
    Ok(MonotonicityReport {
        tol,
        checks: vec![q_check, bulk_check, fh_check, p_check, pq_check],
        p_window_end,
    })
}

/// Largest relative step-to-step change of `Q` along a trace, used to
/// calibrate tolerances from runs where `Q` is constant.
pub fn q_noise(trace: &FunctionalTrace) -> f64 {
    trace
        .rows
        .windows(2)
        .map(|p| ((p[1].q_val - p[0].q_val) / p[0].q_val).abs())
        .fold(0.0, f64::max)
}
