//! The `summary.json` schema.
//!
//! Field order is fixed by the struct definitions and maps use `BTreeMap`,
//! so identical runs serialize to identical bytes. Non-finite floats
//! serialize as `null`. Each entry of [`Criteria`] is `null` when the
//! pipeline does not cover it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub scenario: String,
    pub pipeline: String,
    pub n: usize,
    pub resolution: usize,
    pub seed: u64,
    /// True iff every entry of `checks` passed.
    pub passed: bool,
    pub checks: Vec<Check>,
    pub criteria: Criteria,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Signed slack; negative on failure when the check has a numeric margin.
    pub margin: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub exact_sphere: Option<ExactSphere>,
    pub expanding_sphere: Option<ExpandingSphere>,
    pub inversion_suite: Option<InversionSuite>,
    pub waiting_time: Option<WaitingTime>,
    pub heintze_karcher: Option<HeintzeKarcher>,
    pub monotonicity: Option<Monotonicity>,
    pub weak_oracle: Option<WeakOracle>,
    pub jump_detection: Option<JumpDetection>,
    pub mcf_monitor: Option<McfMonitor>,
    pub determinism: Determinism,
}

/// Closed forms against quadrature on a centered sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSphere {
    pub area: f64,
    pub bulk: f64,
    pub f_h: f64,
    pub mean_curvature: f64,
    pub support: f64,
    /// Largest relative error over the five quantities.
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandingSphere {
    pub t: f64,
    pub r_final: f64,
    pub r_exact: f64,
    /// `max |A e^{-t} / A_0 - 1|` over the trace.
    pub area_drift: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionSuite {
    pub pairs: usize,
    pub max_distance_defect: f64,
    pub max_involution_defect: f64,
    pub max_orthogonality_defect: f64,
    pub max_exchange_defect: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCertificate {
    pub t: f64,
    pub area: f64,
    pub graphical: bool,
    pub star_shaped: String,
    pub star_margin: Option<f64>,
    pub gradient_bound: String,
    pub gradient_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingTime {
    pub r_minus: f64,
    pub r_plus: f64,
    pub waiting_time: f64,
    pub levels: Vec<LevelCertificate>,
    /// Smallest extracted level above the waiting time that passes both certificates.
    pub first_star_shaped_t: Option<f64>,
    /// At least one level below the waiting time was recorded.
    pub contrast_recorded: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeintzeKarcher {
    /// `None` when the surface is not mean-convex.
    pub deficit: Option<f64>,
    pub family_size: usize,
    pub family_min_deficit: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monotonicity {
    pub tol: f64,
    pub q_initial: f64,
    pub q_final: f64,
    pub sharp_constant: f64,
    pub checks: BTreeMap<String, bool>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakOracle {
    /// Largest `|u_ε - oracle_ε|` for the first schedule entry, last row excluded.
    pub oracle_deviation: f64,
    /// Largest `|u - (n-1) log(sinh r / sinh r0)|` on levels below `L - 1`.
    pub limit_deviation: f64,
    pub max_principle: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub nodes: usize,
    pub volume: f64,
    pub area_before: f64,
    pub area_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpDetection {
    pub noise_floor: f64,
    pub delta: f64,
    pub jumps: Vec<Jump>,
    pub waiting_time: f64,
    /// Levels above the waiting time passing the star-shapedness certificate.
    pub post_jump_levels: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McfMonitor {
    pub runs: usize,
    /// Largest step-to-step increase of any monitor.
    pub max_increase: f64,
    /// Final-radius error against the shrinking-sphere ODE (sphere surfaces).
    pub sphere_error: Option<f64>,
    pub passed: bool,
}

/// SHA-256 of every other artifact, keyed by relative path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Determinism {
    pub artifacts: BTreeMap<String, String>,
}

impl Summary {
    /// One line per check, then one per criterion the run covered.
    pub fn report(&self) -> String {
        let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut out = format!(
            "scenario {} ({}, n={}, resolution={}, seed={})\n",
            self.scenario, self.pipeline, self.n, self.resolution, self.seed
        );
        for c in &self.checks {
            out.push_str(&format!("{} {}", mark(c.passed), c.name));
            if let Some(m) = c.margin {
                out.push_str(&format!(" margin={m:e}"));
            }
            if let Some(t) = c.tol {
                out.push_str(&format!(" tol={t:e}"));
            }
            out.push('\n');
        }
        let c = &self.criteria;
        let covered = [
            ("exact_sphere", c.exact_sphere.as_ref().map(|x| x.passed)),
            ("expanding_sphere", c.expanding_sphere.as_ref().map(|x| x.passed)),
            ("inversion_suite", c.inversion_suite.as_ref().map(|x| x.passed)),
            ("waiting_time", c.waiting_time.as_ref().map(|x| x.passed)),
            ("heintze_karcher", c.heintze_karcher.as_ref().map(|x| x.passed)),
            ("monotonicity", c.monotonicity.as_ref().map(|x| x.passed)),
            ("weak_oracle", c.weak_oracle.as_ref().map(|x| x.passed)),
            ("jump_detection", c.jump_detection.as_ref().map(|x| x.passed)),
            ("mcf_monitor", c.mcf_monitor.as_ref().map(|x| x.passed)),
        ];
        for (name, ok) in covered {
            if let Some(ok) = ok {
                out.push_str(&format!("criterion {name}: {}\n", mark(ok)));
            }
        }
        out.push_str(&format!("overall: {}\n", mark(self.passed)));
        out
    }
}
