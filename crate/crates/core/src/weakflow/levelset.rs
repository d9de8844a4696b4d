use std::fmt::Write as _;

use super::RegularizedField;
use crate::error::{Error, Result};
use crate::quadrature::unit_sphere_area;
use crate::reflect::PointCloud;
use crate::starshape::{self, RadialGraph};

/// One extracted level set `{u = t}`.
#[derive(Debug, Clone)]
pub struct LevelSet {
    pub t: f64,
    /// Contour segments in the meridian half-plane as `(r, ψ)` pairs.
    pub segments: Vec<[(f64, f64); 2]>,
    /// Present when every ray of the mesh crosses the level exactly once.
    pub graph: Option<RadialGraph>,
    pub cloud: PointCloud,
    /// Area of the hypersurface: from the graph when graphical, otherwise
    /// from the contour segments.
    pub area: f64,
}

impl LevelSet {
    /// CSV with rows `r,psi` (graph nodes when graphical, segment endpoints
    /// otherwise).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,psi\n");
        match &self.graph {
            Some(g) => {
                for (j, r) in g.r().iter().enumerate() {
                    let _ = writeln!(s, "{},{}", r, g.grid().psi(j));
                }
            }
            None => {
                for seg in &self.segments {
                    for (r, psi) in seg {
                        let _ = writeln!(s, "{r},{psi}");
                    }
                }
            }
        }
        s
    }
}

/// Area of the hypersurface swept by rotating meridian segments.
pub fn segment_area(n: usize, segments: &[[(f64, f64); 2]]) -> f64 {
    let w = unit_sphere_area(n - 2);
    segments
        .iter()
        .map(|[(r0, p0), (r1, p1)]| {
            let (rm, pm) = (0.5 * (r0 + r1), 0.5 * (p0 + p1));
            let s = rm.sinh();
            let ds = ((r1 - r0).powi(2) + (s * (p1 - p0)).powi(2)).sqrt();
            w * (s * pm.sin()).powi(n as i32 - 2) * ds
        })
        .sum()
}

/// Marching-squares contour of `u = t`, with resampling to a radial graph
/// when each ray crosses the level once.
///
/// `t = 0` returns `Σ_0`. Fails with [`Error::Escaped`] when the contour
/// reaches the last cell row before the outer sphere.
pub fn extract_levelset(field: &RegularizedField, t: f64) -> Result<LevelSet> {
    let m = field.mesh();
    let (nx, np) = (m.n_xi(), m.n_psi());
    if !(0.0..m.level_max()).contains(&t) {
        return Err(Error::Domain(format!(
            "level {t} outside [0, L) with L = {}",
            m.level_max()
        )));
    }
    let label = format!("level t={t}");
    if t == 0.0 {
        let mut g = m.inner().clone();
        g.label = label;
        return Ok(finish(m.n(), t, Vec::new(), Some(g)));
    }
    let v = |i: usize, j: usize| field.value(i, j) - t;
    let pos = |i: usize, j: usize| (m.r(i, j), m.psi(j));
    let cross = |a: (usize, usize), b: (usize, usize)| {
        let (va, vb) = (v(a.0, a.1), v(b.0, b.1));
        let f = va / (va - vb);
        let (pa, pb) = (pos(a.0, a.1), pos(b.0, b.1));
        (pa.0 + f * (pb.0 - pa.0), pa.1 + f * (pb.1 - pa.1))
    };
    let escaped = || {
        Error::Escaped(format!(
            "level set t={t} reaches the outer boundary R_L = {}; increase R_L",
            m.r_outer()
        ))
    };
    // u = L > t on the outer row, so a crossing in the last cell means the
    // level has not separated from the outer sphere
    for j in 0..np {
        if v(nx - 2, j) < 0.0 {
            return Err(escaped());
        }
    }
    let mut segments = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..np - 1 {
            // corners counterclockwise in (ξ, ψ): 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1)
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let above: Vec<bool> = c.iter().map(|&(a, b)| v(a, b) >= 0.0).collect();
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if above[e] != above[(e + 1) % 4] {
                    pts.push((e, cross(a, b)));
                }
            }
            match pts.len() {
                2 => segments.push([pts[0].1, pts[1].1]),
                4 => {
                    // saddle: the cell average decides which corners connect
                    let mean = c.iter().map(|&(a, b)| v(a, b)).sum::<f64>() / 4.0;
                    if (mean >= 0.0) == above[0] {
                        segments.push([pts[0].1, pts[1].1]);
                        segments.push([pts[2].1, pts[3].1]);
                    } else {
                        segments.push([pts[1].1, pts[2].1]);
                        segments.push([pts[3].1, pts[0].1]);
                    }
                }
                _ => {}
            }
        }
    }
    let mut radii = Vec::with_capacity(np);
    for j in 0..np {
        let mut hits = (0..nx - 1).filter(|&i| (v(i, j) >= 0.0) != (v(i + 1, j) >= 0.0));
        match (hits.next(), hits.next()) {
            (Some(i), None) => radii.push(cross((i, j), (i + 1, j)).0),
            _ => break,
        }
    }
    let graph = if radii.len() == np {
        Some(RadialGraph::new(m.inner().grid().clone(), radii, label)?)
    } else {
        None
    };
    Ok(finish(m.n(), t, segments, graph))
}

fn finish(n: usize, t: f64, segments: Vec<[(f64, f64); 2]>, graph: Option<RadialGraph>) -> LevelSet {
    match graph {
        Some(g) => {
            let area = starshape::area(&g).unwrap_or_else(|_| segment_area(n, &segments));
            let cloud = PointCloud::from_graph(&g, t);
            LevelSet {
                t,
                segments,
                graph: Some(g),
                cloud,
                area,
            }
        }
        None => {
            // both meridian half-planes, as for graphs
            let pts: Vec<(f64, f64)> = segments
                .iter()
                .flat_map(|s| s.iter().copied())
                .flat_map(|(r, psi)| [(r, psi), (r, -psi)])
                .collect();
            let cloud = PointCloud::from_meridian(n, &pts, t, format!("level t={t}"));
            let area = segment_area(n, &segments);
            LevelSet {
                t,
                segments,
                graph: None,
                cloud,
                area,
            }
        }
    }
}
