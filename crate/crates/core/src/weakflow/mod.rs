//! Elliptic-regularized weak inverse mean curvature flow on an axisymmetric
//! annulus `F_L \ Ω_0`.
//!
//! [`solve_regularized`] solves `div(∇u/W) = W`, `W = √(|∇u|² + ε²)`, with
//! `u = 0` on `Σ_0` and `u = L` on the outer sphere; [`weak_limit`] walks a
//! decreasing `ε` schedule. Level sets, plateaus and the variational audit
//! live in the submodules.

mod audit;
pub mod banded;
mod levelset;
mod mesh;
mod radial;
mod solver;

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::reflect::MeridianField;

pub use audit::{
    ball_union_competitor, bump_competitor, detect_jumps, gradient_integral, gradient_noise_floor, j_functional,
    minimization_audit, AuditEntry, AuditReport, JumpEvent, MIN_PLATEAU_NODES, OUTER_MARGIN,
};
pub use levelset::{extract_levelset, segment_area, LevelSet};
pub use mesh::{AnnulusMesh, MIN_XI_NODES};
pub use radial::{radial_oracle, radial_oracle_with_level, RadialProfile};
pub use solver::{gradient_norms, initial_guess, IterationLog, SolverOptions};

/// Default schedule: geometric halving from 0.2.
pub const DEFAULT_SCHEDULE: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Solution of the regularized problem at one `ε`.
#[derive(Debug, Clone)]
pub struct RegularizedField {
    mesh: Arc<AnnulusMesh>,
    /// Nodal values, indexed by [`AnnulusMesh::node`].
    pub u: Vec<f64>,
    pub epsilon: f64,
    /// Normalized residual ∞-norm at exit.
    pub residual_norm: f64,
    pub log: Vec<IterationLog>,
    /// Outcome of the discrete maximum-principle check `0 ≤ u ≤ L`.
    pub max_principle: MaxPrinciple,
}

/// Extremes of a field against the Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPrinciple {
    pub min: f64,
    pub max: f64,
    pub level: f64,
    pub slack: f64,
}

impl MaxPrinciple {
    fn of(u: &[f64], level: f64, slack: f64) -> Self {
        let (min, max) = u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Self { min, max, level, slack }
    }

    pub fn holds(&self) -> bool {
        self.min >= -self.slack && self.max <= self.level + self.slack
    }
}

impl RegularizedField {
    pub fn mesh(&self) -> &AnnulusMesh {
        &self.mesh
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.u[self.mesh.node(i, j)]
    }

    /// `|∇u|_g` at every node.
    pub fn gradient_norms(&self) -> Vec<f64> {
        gradient_norms(&self.mesh, &self.u)
    }

    /// Smallest and largest nodal value.
    pub fn range(&self) -> (f64, f64) {
        self.u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Solver log as text, one line per iteration.
    pub fn log_text(&self) -> String {
        let mut s = String::new();
        for l in &self.log {
            let _ = writeln!(
                s,
                "eps={} iter={} residual={:.6e} step={} picard={}",
                self.epsilon, l.iter, l.residual, l.step, l.picard
            );
        }
        s
    }

    /// CSV snapshot with rows `r,psi,u` in node order.
    pub fn to_csv(&self) -> String {
        let m = &self.mesh;
        let mut s = String::from("r,psi,u\n");
        for i in 0..m.n_xi() {
            for j in 0..m.n_psi() {
                let _ = writeln!(s, "{},{},{}", m.r(i, j), m.psi(j), self.value(i, j));
            }
        }
        s
    }

    // linear interpolation in r along column j
    fn column_at(&self, j: usize, r: f64) -> Option<f64> {
        let m = &self.mesh;
        if r <= m.inner().r()[j] {
            return Some(0.0);
        }
        if r > m.r_outer() * (1.0 + 1e-12) {
            return None;
        }
        let x = m.xi_of(r.min(m.r_outer()), j).min(1.0) * (m.n_xi() - 1) as f64;
        let i = (x.floor() as usize).min(m.n_xi() - 2);
        let f = ((r - m.r(i, j)) / (m.r(i + 1, j) - m.r(i, j))).clamp(0.0, 1.0);
        Some((1.0 - f) * self.value(i, j) + f * self.value(i + 1, j))
    }
}

impl MeridianField for RegularizedField {
    /// Linear in `ψ` between the two neighboring rays and linear in `ξ`
    /// along each; `0` inside `Ω_0`, `None` beyond the outer sphere.
    fn value_at(&self, r: f64, psi: f64) -> Option<f64> {
        let m = &self.mesh;
        let last = m.n_psi() - 1;
        let x = (psi / m.h()).clamp(0.0, last as f64);
        let j = (x.floor() as usize).min(last - 1);
        let f = x - j as f64;
        let a = self.column_at(j, r)?;
        let b = self.column_at(j + 1, r)?;
        Some((1.0 - f) * a + f * b)
    }

    fn samples(&self) -> Vec<(f64, f64, f64)> {
        let m = &self.mesh;
        let mut out = Vec::with_capacity(m.len());
        for i in 0..m.n_xi() {
            for j in 0..m.n_psi() {
                out.push((m.r(i, j), m.psi(j), self.value(i, j)));
            }
        }
        out
    }
}

/// `ε` at which [`solve_regularized`] starts its continuation when the
/// direct solve fails.
pub const CONTINUATION_START: f64 = 0.2;
// smallest ratio between successive continuation steps
const MIN_CONTINUATION_RATIO: f64 = 1.01;

/// Solves the regularized problem at `epsilon`, starting from the solution
/// on a mesh with half the rows (or the expanding-sphere guess on small
/// meshes) and falling back to continuation from [`CONTINUATION_START`].
pub fn solve_regularized(mesh: &AnnulusMesh, epsilon: f64) -> Result<RegularizedField> {
    solve_regularized_with(mesh, epsilon, &SolverOptions::default())
}

pub fn solve_regularized_with(mesh: &AnnulusMesh, epsilon: f64, opts: &SolverOptions) -> Result<RegularizedField> {
    let mesh = Arc::new(mesh.clone());
    let u0 = match coarse_guess(&mesh, epsilon, opts) {
        Some(u) => u,
        None => initial_guess(&mesh),
    };
    match solve_from(mesh.clone(), epsilon, u0.clone(), opts) {
        Err(Error::NoConvergence(_)) if epsilon != CONTINUATION_START => {
            let start = solve_from(mesh, CONTINUATION_START, u0, opts)?;
            continue_to(&start, epsilon, opts)
        }
        other => other,
    }
}

// meshes with fewer rows than this are solved directly
const SEQUENCING_MIN_ROWS: usize = 33;

/// Solution on the mesh with every other row removed, prolonged linearly in
/// `ξ`. `None` when the mesh is too small to halve or the coarse solve fails.
fn coarse_guess(mesh: &AnnulusMesh, epsilon: f64, opts: &SolverOptions) -> Option<Vec<f64>> {
    let nx = mesh.n_xi();
    if (nx - 1) % 2 != 0 || (nx - 1) / 2 + 1 < SEQUENCING_MIN_ROWS {
        return None;
    }
    let coarse = AnnulusMesh::new(mesh.inner().clone(), mesh.r_outer(), (nx - 1) / 2 + 1)
        .and_then(|c| c.with_grading(mesh.grading()))
        .ok()?;
    let f = solve_regularized_with(&coarse, epsilon, opts).ok()?;
    let mut u = vec![0.0; mesh.len()];
    for i in 0..nx {
        for j in 0..mesh.n_psi() {
            u[mesh.node(i, j)] = if i % 2 == 0 {
                f.value(i / 2, j)
            } else {
                0.5 * (f.value(i / 2, j) + f.value(i / 2 + 1, j))
            };
        }
    }
    Some(u)
}

/// Walks `ε` geometrically from a converged field to `target`, shrinking
/// the ratio on failure.
pub fn continue_to(from: &RegularizedField, target: f64, opts: &SolverOptions) -> Result<RegularizedField> {
    let mut cur = from.clone();
    let mut ratio: f64 = 2.0;
    let mut log = from.log.clone();
    while cur.epsilon != target {
        let up = target > cur.epsilon;
        let next = if up {
            (cur.epsilon * ratio).min(target)
        } else {
            (cur.epsilon / ratio).max(target)
        };
        match solve_from(cur.mesh.clone(), next, cur.u.clone(), opts) {
            Ok(f) => {
                log.extend(f.log.iter().copied());
                cur = f;
                ratio = (ratio * ratio).min(2.0);
            }
            Err(Error::NoConvergence(msg)) => {
                ratio = ratio.sqrt();
                if ratio < MIN_CONTINUATION_RATIO {
                    return Err(Error::NoConvergence(format!(
                        "continuation stalled at eps = {}: {msg}",
                        cur.epsilon
                    )));
                }
            }
            Err(e) => return Err(e),
        }
    }
    cur.log = log;
    Ok(cur)
}

/// Solves the regularized problem at `epsilon` starting from `u0`.
pub fn solve_from(mesh: Arc<AnnulusMesh>, epsilon: f64, mut u: Vec<f64>, opts: &SolverOptions) -> Result<RegularizedField> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if u.len() != mesh.len() {
        return Err(Error::InvalidInput("initial field does not match the mesh".into()));
    }
    let bound = mesh.epsilon_bound();
    if epsilon >= bound {
        return Err(Error::Domain(format!(
            "no solution for eps = {epsilon}: the boundary flux cannot balance eps * volume for eps >= {bound:.6}"
        )));
    }
    for j in 0..mesh.n_psi() {
        u[mesh.node(0, j)] = 0.0;
        u[mesh.node(mesh.n_xi() - 1, j)] = mesh.level_max();
    }
    let (residual_norm, log) = solver::newton(&mesh, epsilon, &mut u, opts)?;
    let max_principle = MaxPrinciple::of(&u, mesh.level_max(), opts.max_principle_slack);
    Ok(RegularizedField {
        mesh,
        u,
        epsilon,
        residual_norm,
        log,
        max_principle,
    })
}

/// Output of [`weak_limit`].
#[derive(Debug, Clone)]
pub struct WeakFlowResult {
    /// One field per schedule entry, in schedule order.
    pub fields: Vec<RegularizedField>,
    /// `max |u_k - u_{k-1}|` between successive schedule entries.
    pub cauchy: Vec<f64>,
    /// False when some Cauchy difference fails to decrease.
    pub cauchy_ok: bool,
}

impl WeakFlowResult {
    /// The field at the smallest `ε`.
    pub fn field(&self) -> &RegularizedField {
        self.fields.last().expect("schedule is nonempty")
    }

    pub fn mesh(&self) -> &AnnulusMesh {
        self.field().mesh()
    }

    /// `H ≈ |∇u|_g` at every node of the final field.
    pub fn mean_curvature_estimate(&self) -> Vec<f64> {
        self.field().gradient_norms()
    }

    /// Level sets of the final field, in the order of `ts`.
    pub fn level_sets(&self, ts: &[f64]) -> Result<Vec<LevelSet>> {
        ts.iter().map(|&t| extract_levelset(self.field(), t)).collect()
    }

    /// Plateaus of the final field at threshold `delta`, see [`detect_jumps`].
    pub fn jump_report(&self, delta: f64) -> Result<Vec<JumpEvent>> {
        detect_jumps(self.field(), delta)
    }

    /// Largest difference quotient `|u_a - u_b| / d(a, b)` over neighboring
    /// nodes, a discrete Lipschitz constant.
    pub fn lipschitz_bound(&self) -> f64 {
        let f = self.field();
        let m = f.mesh();
        let mut worst: f64 = 0.0;
        for i in 0..m.n_xi() {
            for j in 0..m.n_psi() {
                let (r, psi) = (m.r(i, j), m.psi(j));
                let mut probe = |i2: usize, j2: usize| {
                    let (r2, psi2) = (m.r(i2, j2), m.psi(j2));
                    let d = polar_distance(m.n(), r, psi, r2, psi2);
                    if d > 0.0 {
                        worst = worst.max((f.value(i, j) - f.value(i2, j2)).abs() / d);
                    }
                };
                if i + 1 < m.n_xi() {
                    probe(i + 1, j);
                }
                if j + 1 < m.n_psi() {
                    probe(i, j + 1);
                }
            }
        }
        worst
    }
}

fn polar_distance(_n: usize, r1: f64, p1: f64, r2: f64, p2: f64) -> f64 {
    let c = r1.cosh() * r2.cosh() - r1.sinh() * r2.sinh() * (p1 - p2).cos();
    c.max(1.0).acosh()
}

/// Solves along a strictly decreasing schedule, warm-starting each `ε` from
/// the previous field.
pub fn weak_limit(mesh: &AnnulusMesh, schedule: &[f64]) -> Result<WeakFlowResult> {
    weak_limit_with(mesh, schedule, &SolverOptions::default())
}

pub fn weak_limit_with(mesh: &AnnulusMesh, schedule: &[f64], opts: &SolverOptions) -> Result<WeakFlowResult> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("empty epsilon schedule".into()));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("epsilon schedule must be strictly decreasing".into()));
    }
    let mesh = Arc::new(mesh.clone());
    let mut fields: Vec<RegularizedField> = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let field = match fields.last() {
            Some(prev) => match solve_from(mesh.clone(), eps, prev.u.clone(), opts) {
                Err(Error::NoConvergence(_)) => continue_to(prev, eps, opts)?,
                other => other?,
            },
            None => solve_regularized_with(&mesh, eps, opts)?,
        };
        fields.push(field);
    }
    let cauchy: Vec<f64> = fields
        .windows(2)
        .map(|w| w[0].u.iter().zip(&w[1].u).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs())))
        .collect();
    let cauchy_ok = cauchy.windows(2).all(|w| w[1] < w[0]);
    Ok(WeakFlowResult {
        fields,
        cauchy,
        cauchy_ok,
    })
}

/// Largest error of [`MeridianField::value_at`] against `exact`, sampled at
/// the cell centers of the mesh and at the midpoints of its edges.
pub fn interpolation_error(mesh: &AnnulusMesh, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let mesh = Arc::new(mesh.clone());
    let u = (0..mesh.n_xi())
        .flat_map(|i| (0..mesh.n_psi()).map(move |j| (i, j)))
        .map(|(i, j)| exact(mesh.r(i, j), mesh.psi(j)))
        .collect();
    let field = RegularizedField {
        mesh: mesh.clone(),
        u,
        epsilon: f64::NAN,
        residual_norm: 0.0,
        log: Vec::new(),
        max_principle: MaxPrinciple::of(&[], 0.0, 0.0),
    };
    let mut worst: f64 = 0.0;
    let (dx, h) = (mesh.d_xi(), mesh.h());
    for i in 0..mesh.n_xi() - 1 {
        for j in 0..mesh.n_psi() - 1 {
            for (fx, fy) in [(0.5, 0.5), (0.5, 0.0), (0.0, 0.5)] {
                let psi = (j as f64 + fy) * h;
                let xi = (i as f64 + fx) * dx;
                let g = mesh.inner().r()[j] * (1.0 - fy) + mesh.inner().r()[j + 1] * fy;
                let r = g + mesh.stretch(xi) * (mesh.r_outer() - g);
                if let Some(v) = field.value_at(r, psi) {
                    worst = worst.max((v - exact(r, psi)).abs());
                }
            }
        }
    }
    worst
}
