//! Parametric flows of radial graphs.
//!
//! Normal speed `V` moves a radial graph by `∂_t g = W V`, with `W` the slant
//! factor. Inverse mean curvature flow uses `V = 1/H`, mean curvature flow
//! `V = -H`. Both are integrated with classical RK4.
//!
//! Step limits come from linearizing about a sphere: the leading part of
//! `W/H` is `g''/(s² H²)` (diffusion `1/(s² H²)`), and of `-W H` it is
//! `g''/s²`. The pole rows carry an extra factor `n - 1`. RK4 is stable for
//! `dt · D · 4/h² ≤ 2.78`; [`IMCF_CFL`] and [`MCF_CFL`] keep a margin.

use crate::error::{Error, Result};
use crate::funcs::{FunctionalTrace, TraceRow};
use crate::starshape::{geometry, RadialGraph};

/// Fraction of the linear RK4 stability limit used for IMCF.
pub const IMCF_CFL: f64 = 0.5;
/// Fraction of the linear RK4 stability limit used for MCF.
pub const MCF_CFL: f64 = 0.5;
/// `|g'|` beyond this aborts a flow.
pub const MAX_SLOPE: f64 = 1e3;
/// Default MCF horizon.
pub const DEFAULT_EPSILON_MAX: f64 = 0.05;

// Linear RK4 stability bound on the negative real axis, divided by 4.
const RK4_DIFFUSION: f64 = 2.785 / 4.0;

/// `r(t) = asinh(e^{t/(n-1)} sinh r0)`.
pub fn expanding_sphere(r0: f64, n: usize, t: f64) -> f64 {
    ((t / (n as f64 - 1.0)).exp() * r0.sinh()).asinh()
}

/// The weak solution `u(r) = (n-1) log(sinh r / sinh r0)` of the expanding
/// sphere; its level `t` is the sphere of radius [`expanding_sphere`]`(r0, n, t)`.
pub fn expanding_sphere_u(r: f64, r0: f64, n: usize) -> f64 {
    (n as f64 - 1.0) * (r.sinh() / r0.sinh()).ln()
}

/// `W / H` at each node; fails when some `H ≤ 0`.
pub fn imcf_velocity(g: &RadialGraph) -> Result<Vec<f64>> {
    let geo = geometry(g)?;
    let mut v = Vec::with_capacity(geo.slant.len());
    for (i, (w, h)) in geo.slant.iter().zip(&geo.mean_curvature).enumerate() {
        if !(*h > 0.0) {
            return Err(Error::MeanConvexityLost { node: i, value: *h });
        }
        v.push(w / h);
    }
    Ok(v)
}

/// `-W H` at each node.
pub fn mcf_velocity(g: &RadialGraph) -> Result<Vec<f64>> {
    let geo = geometry(g)?;
    Ok(geo
        .slant
        .iter()
        .zip(&geo.mean_curvature)
        .map(|(w, h)| -w * h)
        .collect())
}

/// Largest stable IMCF step, `c h² min(H² s² W²) / (n - 1)`.
pub fn imcf_stable_dt(g: &RadialGraph) -> Result<f64> {
    let geo = geometry(g)?;
    let h = g.grid().h();
    let mut m = f64::INFINITY;
    for i in 0..g.r().len() {
        let hs = geo.mean_curvature[i] * g.r()[i].sinh() * geo.slant[i];
        m = m.min(hs * hs);
    }
    Ok(IMCF_CFL * RK4_DIFFUSION * h * h * m / (g.n() as f64 - 1.0))
}

/// Largest stable MCF step, `c h² min(s²) / (n - 1)`.
pub fn mcf_stable_dt(g: &RadialGraph) -> f64 {
    let h = g.grid().h();
    let s = g.min_r().sinh();
    MCF_CFL * RK4_DIFFUSION * h * h * s * s / (g.n() as f64 - 1.0)
}

fn check_state(g: &RadialGraph) -> Result<()> {
    let (d1, _) = g.derivatives();
    let worst = d1.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if !(worst <= MAX_SLOPE) {
        return Err(Error::Unstable(format!("|dr/dpsi| reached {worst:e}")));
    }
    Ok(())
}

fn rk4<F>(g: &RadialGraph, dt: f64, velocity: F) -> Result<RadialGraph>
where
    F: Fn(&RadialGraph) -> Result<Vec<f64>>,
{
    let r0 = g.r();
    let shifted = |k: &[f64], a: f64| -> Result<RadialGraph> {
        let r: Vec<f64> = r0.iter().zip(k).map(|(r, k)| r + a * k).collect();
        g.with_r(r)
            .map_err(|e| Error::Unstable(format!("radius left the domain: {e}")))
    };
    let k1 = velocity(g)?;
    let k2 = velocity(&shifted(&k1, 0.5 * dt)?)?;
    let k3 = velocity(&shifted(&k2, 0.5 * dt)?)?;
    let k4 = velocity(&shifted(&k3, dt)?)?;
    let r: Vec<f64> = (0..r0.len())
        .map(|i| r0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let next = g
        .with_r(r)
        .map_err(|e| Error::Unstable(format!("radius left the domain: {e}")))?;
    check_state(&next)?;
    Ok(next)
}

/// State of a parametric IMCF run.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub graph: RadialGraph,
    pub t: f64,
    /// Requested step; each step uses `min(dt, stable step)`.
    pub dt: f64,
    pub history: FunctionalTrace,
}

impl FlowState {
    pub fn new(graph: RadialGraph, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        let mut history = FunctionalTrace::new(graph.n());
        history.push(TraceRow::from_graph(0.0, &graph)?)?;
        Ok(Self {
            graph,
            t: 0.0,
            dt,
            history,
        })
    }
}

/// One RK4 step of IMCF of length `min(state.dt, stable step)`.
pub fn imcf_step(state: &FlowState) -> Result<FlowState> {
    let dt = state.dt.min(imcf_stable_dt(&state.graph)?);
    advance(state, dt)
}

fn advance(state: &FlowState, dt: f64) -> Result<FlowState> {
    let graph = rk4(&state.graph, dt, imcf_velocity)?;
    Ok(FlowState {
        graph,
        t: state.t + dt,
        dt: state.dt,
        history: state.history.clone(),
    })
}

/// IMCF from `graph` up to `t_max`, recording a trace row every
/// `sample_every` (and at `t_max`). Steps are shortened to land on sample
/// times exactly.
pub fn imcf_run(graph: RadialGraph, t_max: f64, dt: f64, sample_every: f64) -> Result<FlowState> {
    if !(sample_every > 0.0 && t_max >= 0.0) {
        return Err(Error::InvalidInput("need sample_every > 0 and t_max >= 0".into()));
    }
    let mut state = FlowState::new(graph, dt)?;
    let samples = (t_max / sample_every).ceil() as usize;
    for k in 1..=samples {
        let target = (k as f64 * sample_every).min(t_max);
        while state.t < target {
            let stable = imcf_stable_dt(&state.graph)?;
            let remaining = target - state.t;
            let mut step = state.dt.min(stable);
            // avoid a sliver step at the end of an interval
            if remaining <= step * (1.0 + 1e-9) {
                step = remaining;
            }
            let mut next = advance(&state, step)?;
            if step == remaining {
                next.t = target;
            }
            state = next;
        }
        let row = TraceRow::from_graph(state.t, &state.graph)?;
        state.history.push(row)?;
    }
    Ok(state)
}

/// The quantity `∫_Σ 1 / (e^{(n-1)ε} H + 1/k) dσ` at one MCF time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingMonitor {
    pub k: u32,
    pub epsilon: f64,
    pub value: f64,
}

/// Evaluates the monitor for `k` at MCF time `epsilon`.
pub fn smoothing_monitor(g: &RadialGraph, k: u32, epsilon: f64) -> Result<SmoothingMonitor> {
    let geo = geometry(g)?;
    let scale = ((g.n() as f64 - 1.0) * epsilon).exp();
    let kinv = 1.0 / k as f64;
    let value = geo.surface_integral(|i| 1.0 / (scale * geo.mean_curvature[i] + kinv));
    Ok(SmoothingMonitor { k, epsilon, value })
}

/// Samples of an MCF run, one entry per accepted step (including `ε = 0`).
#[derive(Debug, Clone)]
pub struct McfRun {
    pub epsilons: Vec<f64>,
    /// `monitors[step][j]` belongs to `k_list[j]`.
    pub monitors: Vec<Vec<SmoothingMonitor>>,
    pub min_h: Vec<f64>,
    /// `∫ 1/H dσ`, `+∞` if some `H ≤ 0`.
    pub inverse_h: Vec<f64>,
    pub final_graph: RadialGraph,
}

impl McfRun {
    /// The monitor values for `k_list[j]` in step order.
    pub fn series(&self, j: usize) -> Vec<f64> {
        self.monitors.iter().map(|m| m[j].value).collect()
    }
}

/// Mean curvature flow `∂_ε g = -W H` on `(0, epsilon_max]`.
///
/// Records each monitor of `k_list` after every step and fails if `min H`
/// is not positive for `ε > 0`.
pub fn mcf_run(graph: &RadialGraph, epsilon_max: f64, k_list: &[u32]) -> Result<McfRun> {
    if !(epsilon_max > 0.0) || k_list.iter().any(|k| *k == 0) {
        return Err(Error::InvalidInput("need epsilon_max > 0 and k >= 1".into()));
    }
    let mut g = graph.clone();
    let mut eps = 0.0;
    let mut run = McfRun {
        epsilons: Vec::new(),
        monitors: Vec::new(),
        min_h: Vec::new(),
        inverse_h: Vec::new(),
        final_graph: graph.clone(),
    };
    let record = |g: &RadialGraph, eps: f64, run: &mut McfRun| -> Result<()> {
        let geo = geometry(g)?;
        let min_h = geo.min_mean_curvature();
        if eps > 0.0 && !(min_h > 0.0) {
            return Err(Error::MeanConvexityLost {
                node: geo
                    .mean_curvature
                    .iter()
                    .position(|h| *h == min_h)
                    .unwrap_or(0),
                value: min_h,
            });
        }
        let inv = if min_h > 0.0 {
            geo.surface_integral(|i| 1.0 / geo.mean_curvature[i])
        } else {
            f64::INFINITY
        };
        run.epsilons.push(eps);
        run.min_h.push(min_h);
        run.inverse_h.push(inv);
        run.monitors.push(
            k_list
                .iter()
                .map(|&k| smoothing_monitor(g, k, eps))
                .collect::<Result<Vec<_>>>()?,
        );
        Ok(())
    };
    record(&g, eps, &mut run)?;
    while eps < epsilon_max {
        let remaining = epsilon_max - eps;
        let mut step = mcf_stable_dt(&g);
        if remaining <= step * (1.0 + 1e-9) {
            step = remaining;
        }
        g = rk4(&g, step, mcf_velocity)?;
        eps = if step == remaining { epsilon_max } else { eps + step };
        record(&g, eps, &mut run)?;
    }
    run.final_graph = g;
    Ok(run)
}

/// `cosh r(ε) = cosh r0 · e^{-(n-1) ε}`, the radius of a shrinking sphere.
pub fn shrinking_sphere(r0: f64, n: usize, epsilon: f64) -> f64 {
    (r0.cosh() * (-(n as f64 - 1.0) * epsilon).exp()).acosh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::starshape::PolarGrid;
    use approx::assert_relative_eq;

    #[test]
    fn expanding_sphere_values() {
        assert_eq!(expanding_sphere(1.0, 3, 0.0), 1.0);
        assert_relative_eq!(expanding_sphere(1.0, 3, 1.0), 1.4153664, epsilon = 1e-7);
        assert!((expanding_sphere(1.0, 3, 1.0) - 1.4153674).abs() < 1e-5);
        assert_relative_eq!(expanding_sphere(1.0, 3, 1.0).sinh(), 1.9375792, epsilon = 1e-7);
        assert_relative_eq!(expanding_sphere_u(2.0, 1.0, 3), 2.2538560, epsilon = 1e-7);
    }

    #[test]
    fn sphere_monitor_closed_forms() {
        let g = RadialGraph::sphere(PolarGrid::new(3, 64).unwrap(), 1.0).unwrap();
        let area = 4.0 * std::f64::consts::PI * 1f64.sinh().powi(2);
        let h = 2.0 / 1f64.tanh();
        let m = smoothing_monitor(&g, 10, 0.0).unwrap();
        assert_relative_eq!(m.value, area / (h + 0.1), max_relative = 1e-12);
        assert_relative_eq!(m.value, 6.3664483, max_relative = 1e-7);
        let big = smoothing_monitor(&g, u32::MAX, 0.0).unwrap();
        assert_relative_eq!(big.value, area / h, max_relative = 1e-8);
        assert_relative_eq!(big.value, 6.6088808, max_relative = 1e-7);
    }

    #[test]
    fn shrinking_sphere_matches_its_ode() {
        // d/dε cosh r = sinh r · (-(n-1) coth r)
        let (r0, eps, d) = (1.0, 0.03, 1e-6);
        let slope = (shrinking_sphere(r0, 3, eps + d) - shrinking_sphere(r0, 3, eps - d)) / (2.0 * d);
        let r = shrinking_sphere(r0, 3, eps);
        assert_relative_eq!(slope, -2.0 / r.tanh(), max_relative = 1e-8);
    }

    #[test]
    fn imcf_aborts_without_mean_convexity() {
        let g = RadialGraph::dumbbell(PolarGrid::new(3, 128).unwrap(), 0.2, 1.5, 4).unwrap();
        assert!(matches!(
            imcf_velocity(&g),
            Err(Error::MeanConvexityLost { .. })
        ));
    }
}
