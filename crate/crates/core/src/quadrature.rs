//! Gauss-Legendre rules and product-integration weights on the polar grid.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Roots are found by Newton iteration on the three-term recurrence, starting
/// from the Chebyshev-like guess `cos(π (i + 3/4) / (m + 1/2))`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "need at least one node");
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

/// `∫_a^b f` by an `m`-point Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let (x, w) = gauss_legendre(m);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| wi * f(mid + half * xi))
        .sum::<f64>()
        * half
}

/// Area `w_k` of the unit sphere `S^k`.
pub fn unit_sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * unit_sphere_area(k - 2),
    }
}

/// `sin^p(ψ)` with `sin^0 ≡ 1`.
pub fn sin_pow(psi: f64, p: usize) -> f64 {
    psi.sin().powi(p as i32)
}

// Points per panel; the weight is entire, so this is exact to roundoff.
const PANEL_POINTS: usize = 16;

/// Weights `q_i` with `Σ q_i F(ψ_i) ≈ ∫_0^π F(ψ) sin^p(ψ) dψ` on `num_nodes`
/// equispaced nodes.
///
/// Quadratic interpolation of `F` on consecutive node pairs (Simpson panels),
/// integrated exactly against the weight. An odd interval count is closed
/// with one cubic panel on the last three intervals. Constant `F` is
/// integrated to roundoff.
pub fn product_weights(num_nodes: usize, p: usize) -> Vec<f64> {
    assert!(num_nodes >= 4, "need at least four nodes");
    let intervals = num_nodes - 1;
    let h = PI / intervals as f64;
    let mut q = vec![0.0; num_nodes];
    let simpson_intervals = if intervals % 2 == 0 {
        intervals
    } else {
        intervals - 3
    };
    let (gx, gw) = gauss_legendre(PANEL_POINTS);
    let mut panel = |start: usize, order: usize| {
        let a = start as f64 * h;
        let len = order as f64 * h;
        for (xi, wi) in gx.iter().zip(&gw) {
            let t = 0.5 * (xi + 1.0) * order as f64;
            let weight = 0.5 * len * wi * sin_pow(a + t * h, p);
            for k in 0..=order {
                let mut l = 1.0;
                for m in 0..=order {
                    if m != k {
                        l *= (t - m as f64) / (k as f64 - m as f64);
                    }
                }
                q[start + k] += weight * l;
            }
        }
    };
    for start in (0..simpson_intervals).step_by(2) {
        panel(start, 2);
    }
    if simpson_intervals < intervals {
        panel(simpson_intervals, 3);
    }
    q
}
