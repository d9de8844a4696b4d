//! The variational audit `J_u(F) = |∂F| - ∫_{F \ Ω_0} |∇u|` and plateau
//! (jump) detection.

use std::collections::VecDeque;
use std::fmt;

use super::levelset::extract_levelset;
use super::RegularizedField;
use crate::error::{Error, Result};
use crate::quadrature::unit_sphere_area;
use crate::starshape::{self, RadialGraph};

/// One competitor in a [`minimization_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub label: String,
    pub j: f64,
    /// `J_u(F) - J_u(Ω_t)`.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub t: f64,
    /// `J_u(Ω_t)`.
    pub j_level: f64,
    pub tol: f64,
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    /// Smallest margin over the competitors; `+∞` when there are none.
    pub fn worst_margin(&self) -> f64 {
        self.entries.iter().map(|e| e.margin).fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "audit t={} J(level)={} tol={}", self.t, self.j_level, self.tol)?;
        for e in &self.entries {
            writeln!(f, "  {}: J={} margin={} passed={}", e.label, e.j, e.margin, e.passed)?;
        }
        Ok(())
    }
}

/// `∫_{F \ Ω_0} |∇u|` for a radial graph `F` on the mesh's angular grid:
/// trapezoid in `r` along each ray, product weights in `ψ`.
pub fn gradient_integral(field: &RegularizedField, grad: &[f64], f: &RadialGraph) -> Result<f64> {
    let m = field.mesh();
    let k = m.n() as i32 - 1;
    let mut per_ray = Vec::with_capacity(m.n_psi());
    for (j, &rf) in f.r().iter().enumerate() {
        let xi_f = m.xi_of(rf, j);
        let integrand = |i: usize| grad[m.node(i, j)] * m.r(i, j).sinh().powi(k);
        let mut acc = 0.0;
        let x = xi_f * (m.n_xi() - 1) as f64;
        let full = (x.floor() as usize).min(m.n_xi() - 1);
        for i in 0..full {
            acc += 0.5 * (integrand(i) + integrand(i + 1)) * (m.r(i + 1, j) - m.r(i, j));
        }
        let frac = x - full as f64;
        if frac > 0.0 && full + 1 < m.n_xi() {
            let a = integrand(full);
            let b = integrand(full + 1);
            // linear in r across the partial cell
            let frac = (rf - m.r(full, j)) / (m.r(full + 1, j) - m.r(full, j));
            let end = a + frac * (b - a);
            acc += 0.5 * (a + end) * (rf - m.r(full, j));
        }
        per_ray.push(acc);
    }
    Ok(m.inner().grid().integrate(&per_ray))
}

fn check_competitor(field: &RegularizedField, f: &RadialGraph) -> Result<()> {
    let m = field.mesh();
    if f.n() != m.n() || f.r().len() != m.n_psi() {
        return Err(Error::InvalidInput(format!(
            "competitor '{}' is not sampled on the mesh's angular grid",
            f.label
        )));
    }
    for (j, (&rf, &g)) in f.r().iter().zip(m.inner().r()).enumerate() {
        if rf < g - 1e-12 {
            return Err(Error::InvalidInput(format!(
                "competitor '{}' does not contain the initial domain (ray {j}: {rf} < {g})",
                f.label
            )));
        }
        if rf > m.r_outer() {
            return Err(Error::InvalidInput(format!(
                "competitor '{}' leaves the mesh (ray {j}: {rf} > R_L = {})",
                f.label,
                m.r_outer()
            )));
        }
    }
    Ok(())
}

/// `J_u(F)` for a radial graph containing `Ω_0`.
pub fn j_functional(field: &RegularizedField, grad: &[f64], f: &RadialGraph) -> Result<f64> {
    check_competitor(field, f)?;
    Ok(starshape::area(f)? - gradient_integral(field, grad, f)?)
}

/// Compares `J_u(Ω_t)` with `J_u(F)` for each competitor; an entry passes
/// when `J_u(F) ≥ J_u(Ω_t) - tol`. The level must extract as a graph.
pub fn minimization_audit(
    field: &RegularizedField,
    t: f64,
    competitors: &[RadialGraph],
    tol: f64,
) -> Result<AuditReport> {
    let level = extract_levelset(field, t)?;
    let graph = level
        .graph
        .ok_or_else(|| Error::Degenerate(format!("level t={t} is not a radial graph")))?;
    let grad = field.gradient_norms();
    let j_level = j_functional(field, &grad, &graph)?;
    let mut entries = Vec::with_capacity(competitors.len());
    for f in competitors {
        let j = j_functional(field, &grad, f)?;
        let margin = j - j_level;
        entries.push(AuditEntry {
            label: f.label.clone(),
            j,
            margin,
            passed: margin >= -tol,
        });
    }
    Ok(AuditReport {
        t,
        j_level,
        tol,
        entries,
    })
}

/// `F` enlarged by the smooth outward bump `height (1 - x²)³`,
/// `x = (ψ - ψ0)/width`.
pub fn bump_competitor(f: &RadialGraph, psi0: f64, width: f64, height: f64) -> Result<RadialGraph> {
    let r = f
        .r()
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let x = (f.grid().psi(j) - psi0) / width;
            if x.abs() < 1.0 {
                r + height * (1.0 - x * x).powi(3)
            } else {
                r
            }
        })
        .collect();
    let mut g = f.with_r(r)?;
    g.label = format!("{} + bump(psi0={psi0}, width={width}, height={height})", f.label);
    Ok(g)
}

/// Star hull of `F ∪ B`, `B` the geodesic ball of radius `a` centered on the
/// axis at signed distance `c`.
pub fn ball_union_competitor(f: &RadialGraph, c: f64, a: f64) -> Result<RadialGraph> {
    let r = f
        .r()
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let rb = starshape::offset_sphere_radius(c, a, f.grid().psi(j));
            if rb.is_finite() {
                r.max(rb)
            } else {
                r
            }
        })
        .collect();
    let mut g = f.with_r(r)?;
    g.label = format!("{} + ball(c={c}, a={a})", f.label);
    Ok(g)
}

/// A connected region where `|∇u|_g < δ`, read as a jump of the weak flow.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    /// Median of `u` over the plateau.
    pub t: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub nodes: usize,
    /// Hyperbolic volume of the plateau's control cells.
    pub volume: f64,
    /// `|Σ_t|`, area of the level `u = u_min` (`Σ_0` when `u_min ≤ 0`).
    pub area_before: f64,
    /// `|Σ_t^+|`, area of the level `u = u_max`.
    pub area_after: f64,
}

/// Smallest plateau, in nodes, reported as a jump.
pub const MIN_PLATEAU_NODES: usize = 9;

/// Largest deviation of the discrete `|∇u|_g` from `(n-1) coth r` on a
/// field over a centered sphere, over the nodes [`detect_jumps`] inspects.
pub fn gradient_noise_floor(sphere_field: &RegularizedField) -> f64 {
    let m = sphere_field.mesh();
    let grad = sphere_field.gradient_norms();
    let n1 = m.n() as f64 - 1.0;
    let top = m.level_max() - OUTER_MARGIN;
    let mut worst: f64 = 0.0;
    for i in 1..m.n_xi().saturating_sub(2) {
        for j in 0..m.n_psi() {
            if sphere_field.value(i, j) >= top {
                continue;
            }
            let exact = n1 / m.r(i, j).tanh();
            worst = worst.max((grad[m.node(i, j)] - exact).abs());
        }
    }
    worst
}

/// Levels within this distance of `L` feel the outer boundary and are not
/// read as flow surfaces.
pub const OUTER_MARGIN: f64 = 1.0;

/// Plateaus `{|∇u|_g < δ}` among the interior nodes below `L - OUTER_MARGIN`,
/// as 4-connected components of at least [`MIN_PLATEAU_NODES`] nodes.
pub fn detect_jumps(field: &RegularizedField, delta: f64) -> Result<Vec<JumpEvent>> {
    let m = field.mesh();
    let (nx, np) = (m.n_xi(), m.n_psi());
    let grad = field.gradient_norms();
    let top = m.level_max() - OUTER_MARGIN;
    let flat = |i: usize, j: usize| {
        let k = m.node(i, j);
        i >= 1 && i + 2 < nx && grad[k] < delta && field.u[k] < top
    };
    let mut seen = vec![false; m.len()];
    let w = unit_sphere_area(m.n() - 2);
    let k = m.n() as i32 - 1;
    let mut events = Vec::new();
    for i0 in 0..nx {
        for j0 in 0..np {
            if seen[m.node(i0, j0)] || !flat(i0, j0) {
                continue;
            }
            let mut queue = VecDeque::from([(i0, j0)]);
            seen[m.node(i0, j0)] = true;
            let mut members = Vec::new();
            while let Some((i, j)) = queue.pop_front() {
                members.push((i, j));
                let mut nb = Vec::with_capacity(4);
                if i > 0 {
                    nb.push((i - 1, j));
                }
                if i + 1 < nx {
                    nb.push((i + 1, j));
                }
                if j > 0 {
                    nb.push((i, j - 1));
                }
                if j + 1 < np {
                    nb.push((i, j + 1));
                }
                for (a, b) in nb {
                    if !seen[m.node(a, b)] && flat(a, b) {
                        seen[m.node(a, b)] = true;
                        queue.push_back((a, b));
                    }
                }
            }
            if members.len() < MIN_PLATEAU_NODES {
                continue;
            }
            let mut us: Vec<f64> = members.iter().map(|&(i, j)| field.value(i, j)).collect();
            us.sort_by(f64::total_cmp);
            let volume = members
                .iter()
                .map(|&(i, j)| {
                    let lam = (m.r_outer() - m.inner().r()[j]) * m.stretch_rate(m.xi(i));
                    w * m.omega[j] * m.d_xi() * lam * m.r(i, j).sinh().powi(k)
                })
                .sum();
            let (u_min, u_max) = (us[0], us[us.len() - 1]);
            let level_area = |t: f64| -> Result<f64> {
                Ok(extract_levelset(field, t.max(0.0))?.area)
            };
            events.push(JumpEvent {
                t: us[us.len() / 2],
                u_min,
                u_max,
                nodes: members.len(),
                volume,
                area_before: level_area(u_min)?,
                area_after: level_area(u_max)?,
            });
        }
    }
    Ok(events)
}
