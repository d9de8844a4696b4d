//! Plain-text graph format.
//!
//! ```text
//! n=3,nodes=4
//! 0,1
//! 1.0471975511965976,1.05
//! ...
//! ```
//!
//! One `psi,r` row per node in grid order. Floats use the shortest
//! representation that parses back to the same value.

use crate::error::{Error, Result};

use super::{PolarGrid, RadialGraph};

pub fn graph_to_text(g: &RadialGraph) -> String {
    let grid = g.grid();
    let mut out = format!("n={},nodes={}\n", grid.n(), grid.len());
    for (i, r) in g.r().iter().enumerate() {
        out.push_str(&format!("{},{}\n", grid.psi(i), r));
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn graph_from_text(text: &str) -> Result<RadialGraph> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let mut n = None;
    let mut nodes = None;
    for field in header.trim().split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("bad header field `{field}`")))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| parse_err(1, format!("bad integer `{value}`")))?;
        match key.trim() {
            "n" => n = Some(value),
            "nodes" => nodes = Some(value),
            other => return Err(parse_err(1, format!("unknown header key `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(1, "missing n"))?;
    let nodes = nodes.ok_or_else(|| parse_err(1, "missing nodes"))?;
    let grid = PolarGrid::new(n, nodes)?;
    let mut r = Vec::with_capacity(nodes);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let (psi, value) = line
            .trim()
            .split_once(',')
            .ok_or_else(|| parse_err(lineno, "expected `psi,r`"))?;
        let psi: f64 = psi
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad psi `{psi}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad r `{value}`")))?;
        let i = r.len();
        if i >= nodes {
            return Err(parse_err(lineno, "more rows than nodes"));
        }
        if (psi - grid.psi(i)).abs() > 1e-12 {
            return Err(parse_err(lineno, format!("psi {psi} off the grid node {}", grid.psi(i))));
        }
        r.push(value);
    }
    if r.len() != nodes {
        return Err(parse_err(0, format!("expected {nodes} rows, found {}", r.len())));
    }
    RadialGraph::new(grid, r, "")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let grid = PolarGrid::new(4, 33).unwrap();
        let g = RadialGraph::perturbed(grid, 1.0, 0.137, 2).unwrap();
        let back = graph_from_text(&graph_to_text(&g)).unwrap();
        assert_eq!(back.r(), g.r());
        assert_eq!(back.n(), 4);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(graph_from_text("n=3"), Err(Error::Parse { .. })));
        assert!(matches!(graph_from_text("n=3,nodes=16\n0,1\n"), Err(Error::Parse { .. })));
        assert!(graph_from_text("n=9,nodes=16").is_err());
    }
}
