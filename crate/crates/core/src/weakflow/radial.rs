//! Spherically symmetric reduction of the regularized problem.
//!
//! With `p = u'/W = tanh η` the equation becomes
//! `η' = ε cosh³η - (n-1) coth(r) sinh η cosh η` and `u' = ε sinh η`; the
//! `η` equation does not involve `u`. Integrated outward it is violently
//! unstable for small `ε` (rate of order `H³/ε²` on the branch `u' ≈ H`),
//! so the shooting parameter is `η(R_L)` and `η` is integrated inward,
//! where that mode decays. Then `u(r) = ∫_{r0}^r u'`.
//!
//! The rise of `u` that a boundary layer at `R_L` can supply is bounded, so
//! for some data no `p(R_L) < 1` reaches `u(R_L) = L`. The profile then has
//! vertical contact, `η(R_L) = ∞`, and attains the boundary value only in
//! the generalized sense; `boundary_gap = L - u(R_L)` records the shortfall.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub n: usize,
    pub epsilon: f64,
    pub level: f64,
    /// Nodes in increasing `r`, from `r0` to `R_L`.
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// `u'` at the nodes.
    pub du: Vec<f64>,
    /// `L - u(R_L)`; zero unless the profile has vertical contact.
    pub boundary_gap: f64,
}

impl RadialProfile {
    /// Cubic Hermite interpolation of the nodal values and slopes.
    pub fn value_at(&self, r: f64) -> Option<f64> {
        let (lo, hi) = (self.r[0], *self.r.last().expect("nonempty"));
        if !(lo..=hi).contains(&r) {
            return None;
        }
        let k = self.r.partition_point(|&x| x <= r).clamp(1, self.r.len() - 1) - 1;
        let (r0, r1) = (self.r[k], self.r[k + 1]);
        let dr = r1 - r0;
        if dr <= 0.0 {
            return Some(self.u[k + 1]);
        }
        let t = (r - r0) / dr;
        let (u0, u1) = (self.u[k], self.u[k + 1]);
        let (m0, m1) = (self.du[k] * dr, self.du[k + 1] * dr);
        let t2 = t * t;
        let t3 = t2 * t;
        Some(
            (2.0 * t3 - 3.0 * t2 + 1.0) * u0
                + (t3 - 2.0 * t2 + t) * m0
                + (-2.0 * t3 + 3.0 * t2) * u1
                + (t3 - t2) * m1,
        )
    }
}

// d/dr of (u, η); None on overflow
fn rhs(n: usize, eps: f64, r: f64, y: [f64; 2]) -> Option<[f64; 2]> {
    let (sh, ch) = (y[1].sinh(), y[1].cosh());
    let d = [eps * sh, ch * (eps * ch * ch - (n as f64 - 1.0) / r.tanh() * sh)];
    (d[0].is_finite() && d[1].is_finite()).then_some(d)
}

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const TOL: f64 = 1e-12;
const MAX_STEPS: usize = 5_000_000;

// Accepted states (r, u, η), r decreasing from r_outer to r0, with u
// measured from its value at r_outer.
type Path = Vec<(f64, f64, f64)>;

fn integrate_inward(n: usize, eps: f64, r0: f64, r_outer: f64, eta_end: f64) -> Option<Path> {
    let mut r = r_outer;
    let mut y = [0.0, eta_end];
    let mut path = vec![(r, 0.0, eta_end)];
    let mut h = -1e-8 * (r_outer - r0);
    let hmax = (r_outer - r0) / 50.0;
    for _ in 0..MAX_STEPS {
        if r <= r0 {
            return Some(path);
        }
        if r + h < r0 {
            h = r0 - r;
        }
        let mut k = [[0.0; 2]; 7];
        let mut ok = true;
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            match rhs(n, eps, r + C[s] * h, ys) {
                Some(d) => k[s] = d,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let mut err = f64::INFINITY;
        let mut y5 = y;
        if ok {
            let mut e = [0.0; 2];
            for s in 0..7 {
                for c in 0..2 {
                    y5[c] += h * B5[s] * k[s][c];
                    e[c] += h * (B5[s] - B4[s]) * k[s][c];
                }
            }
            let su = TOL * (1.0 + y5[0].abs());
            let se = TOL * (1.0 + y5[1].abs());
            err = (e[0].abs() / su).max(e[1].abs() / se);
            if !err.is_finite() {
                err = f64::INFINITY;
            }
        }
        if err <= 1.0 {
            r += h;
            y = y5;
            path.push((r, y[0], y[1]));
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * grow).max(-hmax);
        } else {
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.25 };
            h *= shrink;
            if h.abs() < 1e-300 {
                return None;
            }
        }
    }
    None
}

// rise of u over [r0, R_L] for a given η(R_L)
fn rise(n: usize, eps: f64, r0: f64, r_outer: f64, eta_end: f64) -> Option<f64> {
    integrate_inward(n, eps, r0, r_outer, eta_end).map(|path| -path.last().expect("nonempty").1)
}

/// Solves the radial problem with `u(r0) = 0`, `u(R_L) = L`, where `L` is
/// the expanding-sphere value `(n-1) log(sinh R_L / sinh r0)`.
pub fn radial_oracle(r0: f64, r_outer: f64, epsilon: f64, n: usize) -> Result<RadialProfile> {
    let level = (n as f64 - 1.0) * (r_outer.sinh() / r0.sinh()).ln();
    radial_oracle_with_level(r0, r_outer, level, epsilon, n)
}

// η standing in for vertical contact; the rise of u beyond it is below e^{-2 ETA_CONTACT}
const ETA_CONTACT: f64 = 30.0;

/// [`radial_oracle`] with an arbitrary outer value.
pub fn radial_oracle_with_level(r0: f64, r_outer: f64, level: f64, epsilon: f64, n: usize) -> Result<RadialProfile> {
    if !(r0 > 0.0 && r_outer > r0 && epsilon > 0.0 && level > 0.0) {
        return Err(Error::Domain(format!(
            "radial oracle needs 0 < r0 < R_L, eps > 0, L > 0 (r0 = {r0}, R_L = {r_outer}, eps = {epsilon}, L = {level})"
        )));
    }
    let lost = || Error::NoConvergence("radial shooting lost the trajectory".into());
    // rise is increasing in η_end
    let top = rise(n, epsilon, r0, r_outer, ETA_CONTACT).ok_or_else(lost)?;
    let eta_end = if top <= level {
        ETA_CONTACT
    } else {
        // inward blow-up to η = -∞ means an unbounded drop
        let below = |eta: f64| match rise(n, epsilon, r0, r_outer, eta) {
            Some(v) => Ok(v < level),
            None if eta < 0.0 => Ok(true),
            None => Err(lost()),
        };
        let (mut lo, mut hi) = (-ETA_CONTACT, ETA_CONTACT);
        if !below(lo)? {
            return Err(Error::NoConvergence("radial shooting bracket does not contain the boundary value".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if below(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let path = integrate_inward(n, epsilon, r0, r_outer, eta_end).ok_or_else(lost)?;
    let total = -path.last().expect("nonempty").1;
    let mut r = Vec::with_capacity(path.len());
    let mut u = Vec::with_capacity(path.len());
    let mut du = Vec::with_capacity(path.len());
    for &(rk, uk, ek) in path.iter().rev() {
        r.push(rk);
        u.push(uk + total);
        du.push(epsilon * ek.sinh());
    }
    r[0] = r0;
    u[0] = 0.0;
    Ok(RadialProfile {
        n,
        epsilon,
        level,
        r,
        u,
        du,
        boundary_gap: (level - total).max(0.0),
    })
}
