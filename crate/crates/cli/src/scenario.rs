//! Scenario files: sectioned `key = value` text (TOML syntax).
//!
//! ```text
//! name = "waiting-time"
//! n = 3
//! pipeline = "certify"
//! resolution = 97
//! t_max = 3.5
//!
//! [surface]
//! kind = "offset_sphere"
//! c = 0.5
//! a = 1.5
//!
//! [weak]
//! radial_nodes = 193
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use hypimcf::starshape::{PolarGrid, RadialGraph};
use hypimcf::weakflow::{AnnulusMesh, DEFAULT_SCHEDULE, OUTER_MARGIN};
use serde::Deserialize;

pub const MIN_DIM: usize = 3;
pub const MAX_DIM: usize = 7;
pub const MIN_RESOLUTION: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Flow,
    Weak,
    Certify,
    Inequalities,
    All,
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Flow => "flow",
            Self::Weak => "weak",
            Self::Certify => "certify",
            Self::Inequalities => "inequalities",
            Self::All => "all",
        }
    }

    pub fn runs_flow(self) -> bool {
        matches!(self, Self::Flow | Self::All)
    }

    pub fn runs_weak(self) -> bool {
        matches!(self, Self::Weak | Self::Certify | Self::All)
    }

    pub fn runs_certify(self) -> bool {
        matches!(self, Self::Certify | Self::All)
    }

    pub fn runs_inequalities(self) -> bool {
        matches!(self, Self::Inequalities | Self::All)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Surface {
    Sphere { r0: f64 },
    Perturbed { r0: f64, a: f64, k: u32 },
    OffsetSphere { c: f64, a: f64 },
    Dumbbell { r_neck: f64, r_bulb: f64, k: u32 },
}

impl Surface {
    pub fn graph(&self, n: usize, nodes: usize) -> hypimcf::Result<RadialGraph> {
        let grid = PolarGrid::new(n, nodes)?;
        match *self {
            Self::Sphere { r0 } => RadialGraph::sphere(grid, r0),
            Self::Perturbed { r0, a, k } => RadialGraph::perturbed(grid, r0, a, k),
            Self::OffsetSphere { c, a } => RadialGraph::offset_sphere(grid, c, a),
            Self::Dumbbell { r_neck, r_bulb, k } => RadialGraph::dumbbell(grid, r_neck, r_bulb, k),
        }
    }

    pub fn sphere_radius(&self) -> Option<f64> {
        match *self {
            Self::Sphere { r0 } => Some(r0),
            _ => None,
        }
    }

    pub fn is_dumbbell(&self) -> bool {
        matches!(self, Self::Dumbbell { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub dt: f64,
    pub sample_every: f64,
    pub mcf_epsilon: f64,
    pub mcf_k: Vec<u32>,
    /// Randomized MCF runs besides the scenario surface.
    pub mcf_suite: usize,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            sample_every: 0.1,
            mcf_epsilon: hypimcf::flows::DEFAULT_EPSILON_MAX,
            mcf_k: vec![1, 10, 100],
            mcf_suite: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakSection {
    pub epsilon_schedule: Vec<f64>,
    /// Rows of the annulus mesh; `2 resolution - 1` when absent.
    pub radial_nodes: Option<usize>,
    pub grading: f64,
    /// Outer radius; chosen so that `L = t_max + 1` when absent.
    pub r_outer: Option<f64>,
    pub level_step: f64,
    /// Radius of the centered sphere that calibrates the plateau threshold.
    pub noise_sphere_radius: f64,
}

impl Default for WeakSection {
    fn default() -> Self {
        Self {
            epsilon_schedule: DEFAULT_SCHEDULE.to_vec(),
            radial_nodes: None,
            grading: 0.0,
            r_outer: None,
            level_step: 0.5,
            noise_sphere_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksSection {
    pub inversion_pairs: usize,
    pub hk_family: usize,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            inversion_pairs: 1000,
            hk_family: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    pub pipeline: Pipeline,
    pub resolution: usize,
    pub t_max: f64,
    /// Relative paths resolve against the scenario file's directory.
    pub output_dir: Option<PathBuf>,
    pub surface: Surface,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub weak: WeakSection,
    #[serde(default)]
    pub checks: ChecksSection,
}

/// A rejected scenario, with the line of the offending key when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.field, self.msg),
            None => write!(f, "{}: {}", self.field, self.msg),
        }
    }
}

impl std::error::Error for ConfigError {}

// 1-based line of `key = ...`, searched within `[section]` when given
fn key_line(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(s) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = Some(s.trim().to_string());
            continue;
        }
        let Some((k, _)) = l.split_once('=') else { continue };
        if k.trim() == key && current.as_deref() == section {
            return Some(i + 1);
        }
    }
    None
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().trim().to_string();
            // serde reports unknown keys at the enclosing table; point at the key
            let unknown = msg
                .strip_prefix("unknown field `")
                .and_then(|r| r.split_once('`'))
                .map(|(k, _)| k.to_string());
            let key_at = unknown.as_deref().and_then(|k| {
                text.lines()
                    .position(|l| l.split_once('=').is_some_and(|(lhs, _)| lhs.trim() == k))
                    .map(|i| i + 1)
            });
            let line = key_at.or_else(|| e.span().map(|s| text[..s.start].matches('\n').count() + 1));
            ConfigError {
                line,
                field: unknown.unwrap_or_else(|| "syntax".into()),
                msg,
            }
        })
    }

    /// Parses and validates `text`; `resolution` overrides the file's value.
    pub fn from_text(text: &str, resolution: Option<usize>) -> Result<Self, ConfigError> {
        let mut s = Self::parse(text)?;
        if let Some(r) = resolution {
            s.resolution = r;
        }
        s.validate(text)?;
        Ok(s)
    }

    pub fn load(path: &Path, resolution: Option<usize>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            field: "file".into(),
            msg: format!("{}: {e}", path.display()),
        })?;
        Self::from_text(&text, resolution)
    }

    fn validate(&self, text: &str) -> Result<(), ConfigError> {
        let err = |section: Option<&str>, key: &str, msg: String| ConfigError {
            line: key_line(text, section, key),
            field: match section {
                Some(s) => format!("{s}.{key}"),
                None => key.to_string(),
            },
            msg,
        };
        if !(MIN_DIM..=MAX_DIM).contains(&self.n) {
            return Err(err(
                None,
                "n",
                format!(
                    "dimension {} unsupported: smoothing of the weak flow needs {MIN_DIM} <= n <= {MAX_DIM}",
                    self.n
                ),
            ));
        }
        if self.resolution < MIN_RESOLUTION {
            return Err(err(
                None,
                "resolution",
                format!("need resolution >= {MIN_RESOLUTION}, got {}", self.resolution),
            ));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(err(None, "t_max", format!("must be positive, got {}", self.t_max)));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(err(None, "name", "must be a nonempty plain name".into()));
        }
        let g = self
            .surface
            .graph(self.n, self.resolution)
            .map_err(|e| err(Some("surface"), "kind", e.to_string()))?;
        let f = &self.flow;
        if !(f.dt > 0.0 && f.sample_every > 0.0 && f.mcf_epsilon > 0.0) {
            return Err(err(Some("flow"), "dt", "dt, sample_every and mcf_epsilon must be positive".into()));
        }
        if f.mcf_k.is_empty() || f.mcf_k.contains(&0) {
            return Err(err(Some("flow"), "mcf_k", "need a nonempty list of k >= 1".into()));
        }
        let w = &self.weak;
        let sched = &w.epsilon_schedule;
        if sched.is_empty() || sched.iter().any(|e| !(*e > 0.0)) || sched.windows(2).any(|p| !(p[1] < p[0])) {
            return Err(err(
                Some("weak"),
                "epsilon_schedule",
                "need a nonempty, positive, strictly decreasing list".into(),
            ));
        }
        if !(w.level_step > 0.0) {
            return Err(err(Some("weak"), "level_step", "must be positive".into()));
        }
        if !(w.grading >= 0.0) {
            return Err(err(Some("weak"), "grading", "must be >= 0".into()));
        }
        if w.radial_nodes.is_some_and(|m| m < hypimcf::weakflow::MIN_XI_NODES) {
            return Err(err(Some("weak"), "radial_nodes", "too few rows".into()));
        }
        if self.pipeline.runs_weak() {
            let mesh = self
                .mesh_for(g)
                .map_err(|e| err(Some("weak"), "r_outer", e.to_string()))?;
            let limit = mesh.level_max() - OUTER_MARGIN;
            if self.t_max > limit + 1e-12 {
                return Err(err(
                    None,
                    "t_max",
                    format!(
                        "t_max = {} exceeds L - {OUTER_MARGIN} = {limit} for R_L = {}",
                        self.t_max,
                        mesh.r_outer()
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn radial_nodes(&self) -> usize {
        self.weak.radial_nodes.unwrap_or(2 * self.resolution - 1)
    }

    /// Annulus mesh over `inner` following the `[weak]` section.
    pub fn mesh_for(&self, inner: RadialGraph) -> hypimcf::Result<AnnulusMesh> {
        let rows = self.radial_nodes();
        let mesh = match self.weak.r_outer {
            Some(r) => AnnulusMesh::new(inner, r, rows)?,
            None => AnnulusMesh::for_levels(inner, self.t_max, OUTER_MARGIN, rows)?,
        };
        mesh.with_grading(self.weak.grading)
    }

    /// Output directory, resolved against `base` when relative.
    pub fn output_dir(&self, base: &Path) -> PathBuf {
        let dir = self
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(&self.name));
        if dir.is_absolute() {
            dir
        } else {
            base.join(dir)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPHERE: &str = r#"
name = "sphere-exact"
n = 3
pipeline = "flow"
resolution = 64
t_max = 1.0

[surface]
kind = "sphere"
r0 = 1.0
"#;

    #[test]
    fn parses_defaults() {
        let s = Scenario::from_text(SPHERE, None).unwrap();
        assert_eq!(s.pipeline, Pipeline::Flow);
        assert_eq!(s.surface, Surface::Sphere { r0: 1.0 });
        assert_eq!(s.weak.epsilon_schedule, DEFAULT_SCHEDULE.to_vec());
        assert_eq!(s.checks.inversion_pairs, 1000);
        assert_eq!(s.radial_nodes(), 127);
    }

    #[test]
    fn dimension_eight_cites_the_range() {
        let text = SPHERE.replace("n = 3", "n = 8");
        let e = Scenario::from_text(&text, None).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert_eq!(e.field, "n");
        assert!(e.to_string().contains("3 <= n <= 7"), "{e}");
    }

    #[test]
    fn resolution_floor_applies_to_overrides() {
        let e = Scenario::from_text(SPHERE, Some(32)).unwrap_err();
        assert_eq!(e.field, "resolution");
        assert!(Scenario::from_text(SPHERE, Some(96)).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let text = SPHERE.replace("r0 = 1.0", "r0 = 1.0\nradius = 2.0");
        let e = Scenario::from_text(&text, None).unwrap_err();
        assert_eq!(e.line, Some(11));
        assert!(e.msg.contains("radius"), "{e}");
    }

    #[test]
    fn levels_must_stay_below_the_outer_data() {
        let text = SPHERE
            .replace("\"flow\"", "\"weak\"")
            .replace("r0 = 1.0", "r0 = 1.0\n\n[weak]\nr_outer = 1.5");
        let e = Scenario::from_text(&text, None).unwrap_err();
        assert_eq!(e.field, "t_max");
        // without r_outer the mesh is sized from t_max
        let text = SPHERE.replace("\"flow\"", "\"weak\"");
        assert!(Scenario::from_text(&text, None).is_ok());
    }

    #[test]
    fn schedule_must_decrease() {
        let text = format!("{SPHERE}\n[weak]\nepsilon_schedule = [0.1, 0.2]\n");
        let e = Scenario::from_text(&text, None).unwrap_err();
        assert_eq!(e.field, "weak.epsilon_schedule");
        assert_eq!(e.line, Some(13));
    }
}
