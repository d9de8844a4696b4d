//! Finite-volume discretization of `div(∇u/W) = W`, `W = √(|∇u|² + ε²)`,
//! on the boundary-fitted coordinates `(ξ, ψ)`, and its Newton solve.
//!
//! With `r = g + φ(ξ) Λ`, `Λ = R_L - g`, `ℓ = φ'(ξ) Λ`, `m = g'(1 - φ)` the
//! meridian metric is `ℓ² dξ² + 2ℓm dξ dψ + (m² + s²) dψ²`, `s = sinh r`,
//! with determinant `ℓ² s²`. Fluxes through `ξ`-faces carry the cell-integrated angular
//! weight, fluxes through `ψ`-faces the face value of `sin^{n-2}`; the pole
//! faces carry no flux.

use super::banded::BandMatrix;
use super::mesh::AnnulusMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Convergence threshold on the normalized residual ∞-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// A residual below this level that no line search can reduce is taken
    /// as converged to rounding; the reached residual is still reported.
    pub stagnation_tol: f64,
    /// Allowed undershoot below 0 or overshoot above `L` before the
    /// maximum-principle check fails.
    pub max_principle_slack: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 80,
            stagnation_tol: 1e-8,
            max_principle_slack: 1e-8,
        }
    }
}

/// One line of the solver log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog {
    pub iter: usize,
    pub residual: f64,
    pub step: f64,
    pub picard: bool,
}

#[derive(Debug, Clone, Copy)]
struct Metric {
    a: f64,
    b: f64,
    c: f64,
    vol: f64,
}

impl Metric {
    fn at(mesh: &AnnulusMesh, xi: f64, g: f64, dg: f64) -> Self {
        let span = mesh.r_outer() - g;
        let phi = if xi >= 1.0 { 1.0 } else { mesh.stretch(xi) };
        let lam = mesh.stretch_rate(xi) * span;
        let r = g + phi * span;
        let m = dg * (1.0 - phi);
        let s = r.sinh();
        let s2 = s * s;
        Self {
            a: (m * m + s2) / (lam * lam * s2),
            b: -m / (lam * s2),
            c: 1.0 / s2,
            vol: lam * s.powi(mesh.n() as i32 - 1),
        }
    }
}

// A linear stencil: `u_ξ = Σ α_k u_k`, `u_ψ = Σ β_k u_k`.
type Stencil = [(usize, f64, f64)];

struct Flux {
    value: f64,
    // (node, ∂value/∂u_node)
    deriv: Vec<(usize, f64)>,
}

fn gradients(st: &Stencil, u: &[f64]) -> (f64, f64) {
    st.iter()
        .fold((0.0, 0.0), |(x, y), &(k, a, b)| (x + a * u[k], y + b * u[k]))
}

/// `scale · (G ∇u)_dir / W` where `dir = (dx, dy)` picks the face normal.
fn face_flux(m: &Metric, scale: f64, dir: (f64, f64), st: &Stencil, u: &[f64], eps: f64, jac: Option<bool>) -> Flux {
    let (ux, uy) = gradients(st, u);
    let gx = m.a * ux + m.b * uy;
    let gy = m.b * ux + m.c * uy;
    let w = (gx * ux + gy * uy + eps * eps).sqrt();
    let proj = dir.0 * gx + dir.1 * gy;
    let k = scale * m.vol;
    let value = k * proj / w;
    let mut deriv = Vec::new();
    if let Some(frozen) = jac {
        for &(node, al, be) in st {
            let dproj = dir.0 * (m.a * al + m.b * be) + dir.1 * (m.b * al + m.c * be);
            let mut d = dproj / w;
            if !frozen {
                let dw = (gx * al + gy * be) / w;
                d -= proj * dw / (w * w);
            }
            deriv.push((node, k * d));
        }
    }
    Flux { value, deriv }
}

fn source(m: &Metric, scale: f64, st: &Stencil, u: &[f64], eps: f64, jac: Option<bool>) -> Flux {
    let (ux, uy) = gradients(st, u);
    let gx = m.a * ux + m.b * uy;
    let gy = m.b * ux + m.c * uy;
    let w = (gx * ux + gy * uy + eps * eps).sqrt();
    let k = scale * m.vol;
    let mut deriv = Vec::new();
    if jac == Some(false) {
        for &(node, al, be) in st {
            deriv.push((node, k * (gx * al + gy * be) / w));
        }
    }
    Flux { value: k * w, deriv }
}

/// Evaluates `|∇u|_g` at every node with central differences (one-sided at
/// the boundary rows).
pub fn gradient_norms(mesh: &AnnulusMesh, u: &[f64]) -> Vec<f64> {
    let (nx, np) = (mesh.n_xi(), mesh.n_psi());
    let (dx, h) = (mesh.d_xi(), mesh.h());
    let g = mesh.inner().r();
    let mut out = vec![0.0; nx * np];
    for i in 0..nx {
        for j in 0..np {
            let ux = if i == 0 {
                (u[mesh.node(1, j)] - u[mesh.node(0, j)]) / dx
            } else if i == nx - 1 {
                (u[mesh.node(i, j)] - u[mesh.node(i - 1, j)]) / dx
            } else {
                (u[mesh.node(i + 1, j)] - u[mesh.node(i - 1, j)]) / (2.0 * dx)
            };
            let uy = if j == 0 || j == np - 1 {
                0.0
            } else {
                (u[mesh.node(i, j + 1)] - u[mesh.node(i, j - 1)]) / (2.0 * h)
            };
            let m = Metric::at(mesh, mesh.xi(i), g[j], mesh.dg[j]);
            out[mesh.node(i, j)] = (m.a * ux * ux + 2.0 * m.b * ux * uy + m.c * uy * uy).max(0.0).sqrt();
        }
    }
    out
}

pub(crate) struct Discretization<'a> {
    mesh: &'a AnnulusMesh,
    eps: f64,
    psi_fastest: bool,
}

impl<'a> Discretization<'a> {
    pub(crate) fn new(mesh: &'a AnnulusMesh, eps: f64) -> Self {
        let interior = mesh.n_xi() - 2;
        Self {
            mesh,
            eps,
            psi_fastest: mesh.n_psi() <= interior,
        }
    }

    fn unknowns(&self) -> usize {
        (self.mesh.n_xi() - 2) * self.mesh.n_psi()
    }

    fn bandwidth(&self) -> usize {
        let m = self.mesh;
        if self.psi_fastest {
            m.n_psi() + 1
        } else {
            m.n_xi() - 1
        }
    }

    fn unknown(&self, node: usize) -> Option<usize> {
        let np = self.mesh.n_psi();
        let (i, j) = (node / np, node % np);
        if i == 0 || i == self.mesh.n_xi() - 1 {
            return None;
        }
        Some(if self.psi_fastest {
            (i - 1) * np + j
        } else {
            j * (self.mesh.n_xi() - 2) + (i - 1)
        })
    }

    /// Normalized residual at every unknown, optionally with the Jacobian.
    /// `jac = Some(true)` freezes `W` (Picard linearization).
    pub(crate) fn assemble(&self, u: &[f64], jac: Option<bool>) -> (Vec<f64>, Option<BandMatrix>) {
        let mesh = self.mesh;
        let (nx, np) = (mesh.n_xi(), mesh.n_psi());
        let (dx, h) = (mesh.d_xi(), mesh.h());
        let g = mesh.inner().r();
        let dg = &mesh.dg;
        let eps = self.eps;
        let jm = |j: usize| if j == 0 { 1 } else { j - 1 };
        let jp = |j: usize| if j == np - 1 { np - 2 } else { j + 1 };
        let nd = |i: usize, j: usize| i * np + j;
        let mut res = vec![0.0; self.unknowns()];
        let bw = self.bandwidth();
        let mut mat = jac.map(|_| BandMatrix::zeros(self.unknowns(), bw, bw));
        let xi_face = |i: usize, j: usize| -> Flux {
            // face between rows i and i+1 at column j
            let q = 1.0 / (4.0 * h);
            let st = [
                (nd(i + 1, j), 1.0 / dx, 0.0),
                (nd(i, j), -1.0 / dx, 0.0),
                (nd(i, jp(j)), 0.0, q),
                (nd(i, jm(j)), 0.0, -q),
                (nd(i + 1, jp(j)), 0.0, q),
                (nd(i + 1, jm(j)), 0.0, -q),
            ];
            let xi = (i as f64 + 0.5) * dx;
            let m = Metric::at(mesh, xi, g[j], dg[j]);
            face_flux(&m, mesh.omega[j], (1.0, 0.0), &st, u, eps, jac)
        };
        let psi_face = |i: usize, j: usize| -> Flux {
            // face between columns j and j+1 at row i
            let q = 1.0 / (4.0 * dx);
            let st = [
                (nd(i, j + 1), 0.0, 1.0 / h),
                (nd(i, j), 0.0, -1.0 / h),
                (nd(i + 1, j), q, 0.0),
                (nd(i - 1, j), -q, 0.0),
                (nd(i + 1, j + 1), q, 0.0),
                (nd(i - 1, j + 1), -q, 0.0),
            ];
            let gh = 0.5 * (g[j] + g[j + 1]);
            let dgh = (g[j + 1] - g[j]) / h;
            let m = Metric::at(mesh, mesh.xi(i), gh, dgh);
            face_flux(&m, dx * mesh.sin_half[j], (0.0, 1.0), &st, u, eps, jac)
        };
        for i in 1..nx - 1 {
            for j in 0..np {
                let row = self.unknown(nd(i, j)).expect("interior node");
                let m = Metric::at(mesh, mesh.xi(i), g[j], dg[j]);
                let norm = dx * mesh.omega[j] * m.vol;
                let st = [
                    (nd(i + 1, j), 0.5 / dx, 0.0),
                    (nd(i - 1, j), -0.5 / dx, 0.0),
                    (nd(i, jp(j)), 0.0, 0.5 / h),
                    (nd(i, jm(j)), 0.0, -0.5 / h),
                ];
                let mut parts: Vec<(f64, Flux)> = vec![
                    (1.0, xi_face(i, j)),
                    (-1.0, xi_face(i - 1, j)),
                    (-1.0, source(&m, dx * mesh.omega[j], &st, u, eps, jac)),
                ];
                if j + 1 < np {
                    parts.push((1.0, psi_face(i, j)));
                }
                if j > 0 {
                    parts.push((-1.0, psi_face(i, j - 1)));
                }
                let mut r = 0.0;
                for (sign, f) in &parts {
                    r += sign * f.value;
                }
                res[row] = r / norm;
                if let Some(a) = mat.as_mut() {
                    for (sign, f) in &parts {
                        for &(node, d) in &f.deriv {
                            if let Some(col) = self.unknown(node) {
                                a.add(row, col, sign * d / norm);
                            }
                        }
                    }
                }
            }
        }
        (res, mat)
    }

    fn scatter(&self, u: &mut [f64], delta: &[f64], alpha: f64) {
        let np = self.mesh.n_psi();
        for i in 1..self.mesh.n_xi() - 1 {
            for j in 0..np {
                let node = i * np + j;
                let k = self.unknown(node).expect("interior node");
                u[node] += alpha * delta[k];
            }
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Initial guess: the expanding-sphere profile along each ray, rescaled to
/// reach `L` at the outer boundary.
pub fn initial_guess(mesh: &AnnulusMesh) -> Vec<f64> {
    let mut u = vec![0.0; mesh.len()];
    let ro = mesh.r_outer();
    let l = mesh.level_max();
    for j in 0..mesh.n_psi() {
        let g = mesh.inner().r()[j];
        let span = (ro.sinh() / g.sinh()).ln();
        for i in 0..mesh.n_xi() {
            let r = mesh.r(i, j);
            u[mesh.node(i, j)] = if i == mesh.n_xi() - 1 {
                l
            } else {
                l * (r.sinh() / g.sinh()).ln() / span
            };
        }
    }
    u
}

// Pseudo-transient continuation limits: initial pseudo time step, the step
// at which Newton resumes, and the number of steps per phase.
const PTC_TAU0: f64 = 1e-4;
const PTC_TAU_MAX: f64 = 1e6;
const PTC_STEPS: usize = 400;
const PTC_MIN_GROWTH: f64 = 1.1;

/// Damped Newton with a Picard fallback; when both line searches fail,
/// pseudo-transient continuation `(J + I/τ) δ = -R` with switched evolution
/// relaxation of `τ` runs until `τ` is large, then Newton resumes. Returns
/// the final normalized residual ∞-norm and the iteration log.
pub(crate) fn newton(
    mesh: &AnnulusMesh,
    eps: f64,
    u: &mut [f64],
    opts: &SolverOptions,
) -> Result<(f64, Vec<IterationLog>)> {
    let disc = Discretization::new(mesh, eps);
    let mut log = Vec::new();
    let (mut res, _) = disc.assemble(u, None);
    let mut rinf = inf_norm(&res);
    let mut rtwo = two_norm(&res);
    log.push(IterationLog {
        iter: 0,
        residual: rinf,
        step: 0.0,
        picard: false,
    });
    let mut trial = u.to_vec();
    let mut ptc_phases = 0;
    let mut iter = 0;
    while iter < opts.max_iter {
        iter += 1;
        if rinf < opts.tol {
            return Ok((rinf, log));
        }
        let mut accepted = None;
        for frozen in [false, true] {
            let (_, mat) = disc.assemble(u, Some(frozen));
            // a singular linearization defers to the next fallback
            let Ok(lu) = mat.expect("jacobian requested").factor() else {
                continue;
            };
            let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
            lu.solve(&mut delta);
            let mut alpha = 1.0;
            while alpha >= 1.0 / 1024.0 {
                trial.copy_from_slice(u);
                disc.scatter(&mut trial, &delta, alpha);
                let (r_try, _) = disc.assemble(&trial, None);
                let t2 = two_norm(&r_try);
                if t2.is_finite() && t2 < (1.0 - 1e-4 * alpha) * rtwo {
                    accepted = Some((r_try, t2, alpha, frozen));
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        match accepted {
            Some((r_new, t2, alpha, frozen)) => {
                u.copy_from_slice(&trial);
                res = r_new;
                rtwo = t2;
                rinf = inf_norm(&res);
                log.push(IterationLog {
                    iter,
                    residual: rinf,
                    step: alpha,
                    picard: frozen,
                });
            }
            None if rinf < opts.stagnation_tol => return Ok((rinf, log)),
            None if ptc_phases < 3 => {
                ptc_phases += 1;
                let (r_new, t2) = pseudo_transient(&disc, u, res, rtwo, &mut log, iter)?;
                res = r_new;
                rtwo = t2;
                rinf = inf_norm(&res);
            }
            None => {
                return Err(Error::NoConvergence(format!(
                    "eps = {eps}: line search failed at iteration {iter} with residual {rinf:.3e}"
                )))
            }
        }
    }
    if rinf < opts.tol {
        return Ok((rinf, log));
    }
    Err(Error::NoConvergence(format!(
        "eps = {eps}: residual {rinf:.3e} after {} iterations",
        opts.max_iter
    )))
}

fn pseudo_transient(
    disc: &Discretization,
    u: &mut [f64],
    mut res: Vec<f64>,
    mut rtwo: f64,
    log: &mut Vec<IterationLog>,
    iter: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut tau = PTC_TAU0;
    let mut trial = u.to_vec();
    let mut best = (u.to_vec(), res.clone(), rtwo);
    for _ in 0..PTC_STEPS {
        let (_, mat) = disc.assemble(u, Some(false));
        let mut a = mat.expect("jacobian requested");
        for k in 0..a.dim() {
            a.add(k, k, -1.0 / tau);
        }
        let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
        let Ok(lu) = a.factor() else {
            tau *= 0.25;
            if tau < 1e-14 {
                break;
            }
            continue;
        };
        lu.solve(&mut delta);
        trial.copy_from_slice(u);
        disc.scatter(&mut trial, &delta, 1.0);
        let (r_try, _) = disc.assemble(&trial, None);
        let t2 = two_norm(&r_try);
        if !t2.is_finite() || t2 > 10.0 * rtwo {
            tau *= 0.25;
            if tau < 1e-14 {
                break;
            }
            continue;
        }
        // switched evolution relaxation, pushed along when the residual stalls
        let ratio = rtwo / t2;
        let growth = if ratio < 1.0 { ratio } else { ratio.max(PTC_MIN_GROWTH) };
        tau = (tau * growth).min(PTC_TAU_MAX);
        u.copy_from_slice(&trial);
        res = r_try;
        rtwo = t2;
        if rtwo < best.2 {
            best = (u.to_vec(), res.clone(), rtwo);
        }
        log.push(IterationLog {
            iter,
            residual: inf_norm(&res),
            step: tau,
            picard: false,
        });
        if tau >= PTC_TAU_MAX {
            break;
        }
    }
    // the pseudo-time march may wander; resume from its best state
    u.copy_from_slice(&best.0);
    Ok((best.1, best.2))
}
