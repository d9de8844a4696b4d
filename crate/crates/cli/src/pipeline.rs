//! Runs a validated [`Scenario`] and collects its artifacts in memory.
//!
//! Nothing here reads the clock or iterates a hash map, so a scenario and a
//! seed determine every byte of the output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hypimcf::certificate::Certificate;
use hypimcf::flows::{expanding_sphere, imcf_run, mcf_run, shrinking_sphere};
use hypimcf::funcs::{self, hk_deficit_of, minkowski_checks, monotonicity_report, q_noise, sharp_constant};
use hypimcf::hypgeo::{ball_radius, bisecting_inversion, hyp_distance, invert, BallPoint, SphereInversion};
use hypimcf::quadrature::unit_sphere_area;
use hypimcf::reflect::{certify_star_shaped, gradient_bound_check, waiting_time};
use hypimcf::starshape::{geometry, RadialGraph};
use hypimcf::weakflow::{
    detect_jumps, gradient_noise_floor, radial_oracle, weak_limit, LevelSet, WeakFlowResult,
    OUTER_MARGIN,
};
use hypimcf::{Error, Result};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::scenario::{Scenario, Surface};
use crate::summary::*;

pub const TRACE_FILE: &str = "trace.csv";
pub const CERTIFICATES_FILE: &str = "certificates.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const LEVELSET_DIR: &str = "levelsets";

/// Files keyed by path relative to the output directory, plus the summary.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
    pub summary: Summary,
}

impl Artifacts {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }
}

struct Run<'a> {
    s: &'a Scenario,
    rng: ChaCha8Rng,
    checks: Vec<Check>,
    criteria: Criteria,
    files: BTreeMap<String, String>,
    certificates: String,
    progress: &'a mut dyn FnMut(&str),
}

impl Run<'_> {
    fn check(&mut self, name: &str, passed: bool, margin: Option<f64>, tol: Option<f64>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            margin: margin.filter(|m| m.is_finite()),
            tol,
        });
    }

    fn certificate(&mut self, heading: &str, body: &dyn std::fmt::Display) {
        let _ = writeln!(self.certificates, "[{heading}]\n{body}");
    }
}

/// Runs every stage the scenario's pipeline enables. `progress` receives
/// one line per stage.
pub fn run(s: &Scenario, seed: u64, progress: &mut dyn FnMut(&str)) -> Result<Artifacts> {
    let g = s.surface.graph(s.n, s.resolution)?;
    let mut run = Run {
        s,
        rng: ChaCha8Rng::seed_from_u64(seed),
        checks: Vec::new(),
        criteria: Criteria::default(),
        files: BTreeMap::new(),
        certificates: String::new(),
        progress,
    };
    if s.pipeline.runs_inequalities() {
        (run.progress)("inequalities");
        inequalities(&mut run, &g)?;
    }
    if s.pipeline.runs_flow() {
        let mean_convex = geometry(&g)?.min_mean_curvature() > 0.0;
        // `all` skips the parametric flow for surfaces it cannot start from
        if mean_convex || s.pipeline == crate::scenario::Pipeline::Flow {
            (run.progress)("parametric flow");
            flow(&mut run, &g)?;
        }
    }
    if s.pipeline.runs_weak() {
        (run.progress)("weak solve");
        let mesh = s.mesh_for(g.clone())?;
        let res = weak_limit(&mesh, &s.weak.epsilon_schedule)?;
        let levels = weak_outputs(&mut run, &res)?;
        if s.pipeline != crate::scenario::Pipeline::Certify {
            (run.progress)("jump detection");
            jumps(&mut run, &res, &levels)?;
        }
        if s.pipeline.runs_certify() {
            (run.progress)("certificates");
            certify(&mut run, &g, &levels)?;
            inversion_suite(&mut run)?;
        }
    }
    let Run {
        checks,
        mut criteria,
        mut files,
        certificates,
        ..
    } = run;
    files.insert(CERTIFICATES_FILE.to_string(), certificates);
    criteria.determinism.artifacts = files
        .iter()
        .map(|(k, v)| (k.clone(), format!("{:x}", Sha256::digest(v.as_bytes()))))
        .collect();
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        scenario: s.name.clone(),
        pipeline: s.pipeline.as_str().to_string(),
        n: s.n,
        resolution: s.resolution,
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
        criteria,
    };
    Ok(Artifacts { files, summary })
}

fn rel_err(value: f64, exact: f64) -> f64 {
    ((value - exact) / exact).abs()
}

fn inequalities(run: &mut Run, g: &RadialGraph) -> Result<()> {
    let s = run.s;
    let n = s.n;
    let nf = n as f64;
    let geo = geometry(g)?;
    if let Some(r0) = s.surface.sphere_radius() {
        let w = unit_sphere_area(n - 1);
        let (sh, ch) = (r0.sinh(), r0.cosh());
        let area = w * sh.powi(n as i32 - 1);
        let h = (nf - 1.0) * ch / sh;
        let exact = [area, w * sh.powi(n as i32) / nf, ch * h * area];
        let values = [geo.area(), geo.bulk_potential(), geo.weighted_total_curvature()];
        let mut worst = exact.iter().zip(&values).map(|(e, v)| rel_err(*v, *e)).fold(0.0, f64::max);
        for (hv, phi) in geo.mean_curvature.iter().zip(&geo.support) {
            worst = worst.max(rel_err(*hv, h)).max(rel_err(*phi, sh));
        }
        let mean_h = geo.mean_curvature.iter().sum::<f64>() / geo.mean_curvature.len() as f64;
        let mean_phi = geo.support.iter().sum::<f64>() / geo.support.len() as f64;
        let tol = 1e-6;
        run.check("exact_sphere", worst < tol, Some(tol - worst), Some(tol));
        run.criteria.exact_sphere = Some(ExactSphere {
            area: values[0],
            bulk: values[1],
            f_h: values[2],
            mean_curvature: mean_h,
            support: mean_phi,
            max_rel_error: worst,
            passed: worst < tol,
        });
    }

    // calibrated on the centered sphere of mean radius at the same resolution
    let mean_r = g.r().iter().sum::<f64>() / g.r().len() as f64;
    let sphere = RadialGraph::sphere(g.grid().clone(), mean_r)?;
    let tol_of = |geo: &hypimcf::starshape::SurfaceGeometry| -> Result<f64> {
        Ok(10.0 * funcs::hk_deficit(&sphere)?.abs() + 1e-9 * geo.bulk_potential())
    };
    let deficit = match hk_deficit_of(&geo) {
        Ok(d) => Some(d),
        Err(Error::MeanConvexityLost { .. }) => None,
        Err(e) => return Err(e),
    };
    let tol = tol_of(&geo)?;
    let mut hk_ok = true;
    if let Some(d) = deficit {
        let mut ok = d >= -tol;
        if s.surface.sphere_radius().is_some() {
            ok &= d.abs() < 1e-6;
        }
        hk_ok &= ok;
        run.check("heintze_karcher", ok, Some(d + tol), Some(tol));
    }
    let mut family_min = f64::INFINITY;
    let mut family_ok = true;
    let mut found = 0;
    let mut attempts = 0;
    while found < s.checks.hk_family && attempts < 50 * s.checks.hk_family.max(1) {
        attempts += 1;
        let r0 = run.rng.gen_range(0.5..2.0);
        let a = run.rng.gen_range(-0.15..0.15) * r0;
        let b = run.rng.gen_range(-0.1..0.1) * r0;
        let k = run.rng.gen_range(1..4) as f64;
        let h = RadialGraph::from_fn(g.grid().clone(), "family", |psi| r0 + a * (2.0 * psi).cos() + b * (k * psi).cos())?;
        let hgeo = geometry(&h)?;
        if !(hgeo.min_mean_curvature() > 0.0) {
            continue;
        }
        found += 1;
        let d = hk_deficit_of(&hgeo)?;
        let calib = RadialGraph::sphere(g.grid().clone(), r0)?;
        let t = 10.0 * funcs::hk_deficit(&calib)?.abs() + 1e-9 * hgeo.bulk_potential();
        family_min = family_min.min(d + t);
        family_ok &= d >= -t;
    }
    if s.checks.hk_family > 0 {
        run.check("heintze_karcher_family", family_ok, Some(family_min), None);
    }
    hk_ok &= family_ok;
    run.criteria.heintze_karcher = Some(HeintzeKarcher {
        deficit,
        family_size: found,
        family_min_deficit: family_min,
        tol,
        passed: hk_ok,
    });

    if deficit.is_some() {
        for rep in minkowski_checks(g, 1e-6)? {
            run.check(&rep.name, rep.passed, Some(rep.margin + rep.tol), Some(rep.tol));
            run.certificate(&rep.name.clone(), &rep);
        }
    }
    let q = funcs::evaluate_q(g)?;
    let p = funcs::evaluate_p(g)?;
    let _ = writeln!(
        run.certificates,
        "[functionals]\nQ: {q:e}\nP: {p:e}\nsharp_constant: {:e}\n",
        sharp_constant(n)
    );
    Ok(())
}

fn flow(run: &mut Run, g: &RadialGraph) -> Result<()> {
    let s = run.s;
    let f = &s.flow;
    let state = imcf_run(g.clone(), s.t_max, f.dt, f.sample_every)?;
    let trace = &state.history;
    run.files.insert(TRACE_FILE.to_string(), trace.to_csv());

    let sphere = RadialGraph::sphere(g.grid().clone(), 1.0)?;
    let calib = imcf_run(sphere, s.t_max, f.dt, f.sample_every)?;
    let tol = (10.0 * q_noise(&calib.history)).max(1e-12);
    let report = monotonicity_report(trace, tol)?;
    let mut checks = BTreeMap::new();
    for c in &report.checks {
        run.check(&format!("monotonicity.{}", c.name), c.passed, Some(c.worst_margin + tol), Some(tol));
        checks.insert(c.name.to_string(), c.passed);
    }
    run.certificate("monotonicity", &report);
    let sharp = sharp_constant(s.n);
    let (first, last) = (trace.rows.first().expect("rows"), trace.rows.last().expect("rows"));
    let above = last.q_val >= sharp - tol * sharp;
    run.check("q_above_sharp_constant", above, Some(last.q_val - sharp + tol * sharp), Some(tol * sharp));
    run.criteria.monotonicity = Some(Monotonicity {
        tol,
        q_initial: first.q_val,
        q_final: last.q_val,
        sharp_constant: sharp,
        checks,
        passed: report.passed() && above,
    });

    let a0 = first.area;
    let drift = trace
        .rows
        .iter()
        .map(|r| (r.area * (-r.t).exp() / a0 - 1.0).abs())
        .fold(0.0, f64::max);
    let drift_tol = 1e-4 * s.t_max.ceil().max(1.0);
    run.check("area_growth", drift < drift_tol, Some(drift_tol - drift), Some(drift_tol));
    if let Some(r0) = s.surface.sphere_radius() {
        let exact = expanding_sphere(r0, s.n, state.t);
        let r_final = state.graph.r()[0];
        let err = state.graph.r().iter().map(|r| (r - exact).abs()).fold(0.0, f64::max);
        let ok = err < 1e-5;
        run.check("expanding_sphere", ok, Some(1e-5 - err), Some(1e-5));
        run.criteria.expanding_sphere = Some(ExpandingSphere {
            t: state.t,
            r_final,
            r_exact: exact,
            area_drift: drift,
            passed: ok && drift < drift_tol,
        });
    }

    // MCF smoothing monitors on the surface and a randomized suite
    let mut graphs = vec![g.clone()];
    let mut attempts = 0;
    while graphs.len() < 1 + f.mcf_suite && attempts < 50 * (f.mcf_suite + 1) {
        attempts += 1;
        let r0 = run.rng.gen_range(0.8..1.6);
        let a = run.rng.gen_range(-0.2..0.2);
        let k = run.rng.gen_range(1..4);
        let h = RadialGraph::perturbed(g.grid().clone(), r0, a, k)?;
        if geometry(&h)?.min_mean_curvature() > 0.1 {
            graphs.push(h);
        }
    }
    let mut max_increase = f64::NEG_INFINITY;
    let mut inverse_ok = true;
    let mut sphere_error = None;
    for (idx, h) in graphs.iter().enumerate() {
        let mrun = mcf_run(h, f.mcf_epsilon, &f.mcf_k)?;
        for j in 0..f.mcf_k.len() {
            for w in mrun.series(j).windows(2) {
                max_increase = max_increase.max(w[1] - w[0]);
            }
        }
        let inv0 = mrun.inverse_h[0];
        for (eps, inv) in mrun.epsilons.iter().zip(&mrun.inverse_h) {
            inverse_ok &= *inv <= ((s.n as f64 - 1.0) * eps).exp() * inv0 * (1.0 + 1e-6);
        }
        if idx == 0 {
            if let Some(r0) = s.surface.sphere_radius() {
                let exact = shrinking_sphere(r0, s.n, f.mcf_epsilon);
                sphere_error = Some(mrun.final_graph.r().iter().map(|r| (r - exact).abs()).fold(0.0, f64::max));
            }
        }
    }
    let slack = 1e-8;
    let mono = max_increase <= slack;
    run.check("mcf_monitor_nonincreasing", mono, Some(slack - max_increase), Some(slack));
    run.check("mcf_inverse_curvature_bound", inverse_ok, None, None);
    let sphere_ok = sphere_error.is_none_or(|e| e < 1e-5);
    if let Some(e) = sphere_error {
        run.check("mcf_sphere_oracle", sphere_ok, Some(1e-5 - e), Some(1e-5));
    }
    run.criteria.mcf_monitor = Some(McfMonitor {
        runs: graphs.len(),
        max_increase,
        sphere_error,
        passed: mono && inverse_ok && sphere_ok,
    });
    Ok(())
}

fn level_times(s: &Scenario) -> Vec<f64> {
    let step = s.weak.level_step;
    let count = (s.t_max / step + 1e-9).floor() as usize;
    (0..=count).map(|k| k as f64 * step).collect()
}

fn weak_outputs(run: &mut Run, res: &WeakFlowResult) -> Result<Vec<LevelSet>> {
    let s = run.s;
    let mp = res.fields.iter().all(|f| f.max_principle.holds());
    run.check("max_principle", mp, None, None);
    let field = res.field();
    run.files.insert("field.csv".to_string(), field.to_csv());
    let log: String = res.fields.iter().map(|f| f.log_text()).collect();
    run.files.insert("solver.log".to_string(), log);
    let levels = res.level_sets(&level_times(s))?;
    for ls in &levels {
        run.files.insert(format!("{LEVELSET_DIR}/t={}.csv", ls.t), ls.to_csv());
    }
    let nondecreasing = levels.windows(2).all(|w| w[1].area >= w[0].area);
    run.check("level_areas_nondecreasing", nondecreasing, None, None);
    let _ = writeln!(
        run.certificates,
        "[weak_limit]\nL: {}\nR_L: {}\ncauchy: {:?}\ncauchy_decreasing: {}\nlipschitz_bound: {:e}\n",
        res.mesh().level_max(),
        res.mesh().r_outer(),
        res.cauchy,
        res.cauchy_ok,
        res.lipschitz_bound()
    );

    if let Some(r0) = s.surface.sphere_radius() {
        let m = res.mesh();
        let first = &res.fields[0];
        let oracle = radial_oracle(r0, m.r_outer(), first.epsilon, s.n)?;
        let mut oracle_dev: f64 = 0.0;
        // the last interior row sits in the outer boundary layer
        for i in 0..m.n_xi() - 2 {
            for j in 0..m.n_psi() {
                if let Some(v) = oracle.value_at(m.r(i, j)) {
                    oracle_dev = oracle_dev.max((first.value(i, j) - v).abs());
                }
            }
        }
        let top = m.level_max() - OUTER_MARGIN;
        let nf1 = s.n as f64 - 1.0;
        let mut limit_dev: f64 = 0.0;
        for i in 0..m.n_xi() {
            for j in 0..m.n_psi() {
                let exact = nf1 * (m.r(i, j).sinh() / r0.sinh()).ln();
                if exact <= top {
                    limit_dev = limit_dev.max((field.value(i, j) - exact).abs());
                }
            }
        }
        run.check("weak_oracle", oracle_dev < 1e-4, Some(1e-4 - oracle_dev), Some(1e-4));
        run.check("weak_limit_closed_form", limit_dev < 2e-3, Some(2e-3 - limit_dev), Some(2e-3));
        run.criteria.weak_oracle = Some(WeakOracle {
            oracle_deviation: oracle_dev,
            limit_deviation: limit_dev,
            max_principle: mp,
            passed: oracle_dev < 1e-4 && limit_dev < 2e-3 && mp,
        });
    }
    Ok(levels)
}

fn star_certificates(g0: &RadialGraph, ls: &LevelSet) -> Result<(Certificate, Option<Certificate>)> {
    let r_plus = g0.max_r();
    let star = certify_star_shaped(&ls.cloud, ball_radius(r_plus))?;
    let grad = match &ls.graph {
        Some(gr) => Some(gradient_bound_check(gr, r_plus)?),
        None => None,
    };
    Ok((star, grad))
}

fn jumps(run: &mut Run, res: &WeakFlowResult, levels: &[LevelSet]) -> Result<()> {
    let s = run.s;
    let m = res.mesh();
    let g0 = m.inner();
    let sphere = RadialGraph::sphere(g0.grid().clone(), s.weak.noise_sphere_radius)?;
    let sphere_mesh = hypimcf::weakflow::AnnulusMesh::new(sphere, m.r_outer(), m.n_xi())?.with_grading(m.grading())?;
    let calib = weak_limit(&sphere_mesh, &s.weak.epsilon_schedule)?;
    let floor = gradient_noise_floor(calib.field());
    let delta = 10.0 * floor;
    let events = detect_jumps(res.field(), delta)?;
    let t_wait = waiting_time(g0.min_r(), g0.max_r(), s.n)?;
    let mut post = Vec::new();
    let mut post_ok = true;
    for ls in levels.iter().filter(|l| l.t > t_wait) {
        let (star, _) = star_certificates(g0, ls)?;
        if star.passed() {
            post.push(ls.t);
        } else {
            post_ok = false;
        }
    }
    let found = !events.is_empty();
    let passed = post_ok && (!s.surface.is_dumbbell() || (found && !post.is_empty()));
    if s.surface.is_dumbbell() {
        run.check("jump_detected", found, None, Some(delta));
    }
    run.check("post_jump_star_shaped", post_ok, None, None);
    run.criteria.jump_detection = Some(JumpDetection {
        noise_floor: floor,
        delta,
        jumps: events
            .iter()
            .map(|e| Jump {
                t: e.t,
                nodes: e.nodes,
                volume: e.volume,
                area_before: e.area_before,
                area_after: e.area_after,
            })
            .collect(),
        waiting_time: t_wait,
        post_jump_levels: post,
        passed,
    });
    Ok(())
}

fn certify(run: &mut Run, g0: &RadialGraph, levels: &[LevelSet]) -> Result<()> {
    let s = run.s;
    let (r_minus, r_plus) = (g0.min_r(), g0.max_r());
    let t_wait = waiting_time(r_minus, r_plus, s.n)?;
    let mut out = Vec::new();
    let mut star_margin = f64::INFINITY;
    let mut grad_margin = f64::INFINITY;
    let mut passed = true;
    let mut first = None;
    for ls in levels.iter().filter(|l| l.t > 0.0) {
        let (star, grad) = star_certificates(g0, ls)?;
        let after = ls.t > t_wait;
        let ok = star.passed() && grad.as_ref().is_some_and(|c| c.passed());
        if after {
            passed &= ok;
            star_margin = star_margin.min(star.margin);
            grad_margin = grad_margin.min(grad.as_ref().map_or(f64::NEG_INFINITY, |c| c.margin));
            if ok && first.is_none() {
                first = Some(ls.t);
            }
        }
        run.certificate(&format!("t={} star_shaped", ls.t), &star);
        if let Some(c) = &grad {
            run.certificate(&format!("t={} gradient_bound", ls.t), c);
        }
        out.push(LevelCertificate {
            t: ls.t,
            area: ls.area,
            graphical: ls.graph.is_some(),
            star_shaped: star.verdict.as_str().to_string(),
            star_margin: Some(star.margin).filter(|m| m.is_finite()),
            gradient_bound: grad.as_ref().map_or("not_graphical", |c| c.verdict.as_str()).to_string(),
            gradient_margin: grad.as_ref().map(|c| c.margin).filter(|m| m.is_finite()),
        });
    }
    run.check("star_shaped_after_waiting_time", passed, Some(star_margin), None);
    run.check("gradient_bound_after_waiting_time", passed, Some(grad_margin), None);
    run.criteria.waiting_time = Some(WaitingTime {
        r_minus,
        r_plus,
        waiting_time: t_wait,
        contrast_recorded: out.iter().any(|l| l.t < t_wait),
        levels: out,
        first_star_shaped_t: first,
        passed,
    });
    Ok(())
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 1e-3 && norm <= 1.0 {
            return v / norm;
        }
    }
}

// uniform in the Euclidean ball of radius 0.95
fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Result<BallPoint> {
    let rho = 0.95 * rng.gen_range(0.0f64..1.0).powf(1.0 / dim as f64);
    BallPoint::new(random_direction(rng, dim) * rho)
}

fn inversion_suite(run: &mut Run) -> Result<()> {
    let dim = run.s.n;
    let pairs = run.s.checks.inversion_pairs;
    let (mut dist, mut invol, mut orth, mut exch) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let rng = &mut run.rng;
    for _ in 0..pairs {
        let theta = random_direction(rng, dim);
        let inv = SphereInversion::new(rng.gen_range(0.05..0.95), &theta)?;
        let (p, q) = (random_point(rng, dim)?, random_point(rng, dim)?);
        let (fp, fq) = (invert(&inv, &p)?, invert(&inv, &q)?);
        dist = dist.max((hyp_distance(&p, &q)? - hyp_distance(&fp, &fq)?).abs());
        invol = invol.max((invert(&inv, &fp)?.coords() - p.coords()).norm());

        let (a, b) = (random_point(rng, dim)?, random_point(rng, dim)?);
        let (x1, x2) = if a.rho() < b.rho() { (a, b) } else { (b, a) };
        let b = bisecting_inversion(&x1, &x2)?;
        orth = orth.max(b.orthogonality_defect().abs());
        exch = exch.max((invert(&b, &x2)?.coords() - x1.coords()).norm());
    }
    let passed = dist < 1e-10 && invol < 1e-10 && orth < 1e-12 && exch < 1e-12;
    run.check("inversion_suite", passed, None, None);
    run.criteria.inversion_suite = Some(InversionSuite {
        pairs,
        max_distance_defect: dist,
        max_involution_defect: invol,
        max_orthogonality_defect: orth,
        max_exchange_defect: exch,
        passed,
    });
    Ok(())
}

/// Surface label used in progress lines.
pub fn describe(surface: &Surface) -> String {
    match surface {
        Surface::Sphere { r0 } => format!("sphere r0={r0}"),
        Surface::Perturbed { r0, a, k } => format!("perturbed r0={r0} a={a} k={k}"),
        Surface::OffsetSphere { c, a } => format!("offset sphere c={c} a={a}"),
        Surface::Dumbbell { r_neck, r_bulb, k } => format!("dumbbell neck={r_neck} bulb={r_bulb} k={k}"),
    }
}
