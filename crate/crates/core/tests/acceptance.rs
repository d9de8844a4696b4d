//! Acceptance run: every criterion at its stated tolerance, one line each.
//!
//! Built with `harness = false` so the verdict lines always reach the test
//! output. Exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hypimcf::flows::{expanding_sphere, imcf_run, mcf_run, shrinking_sphere, DEFAULT_EPSILON_MAX};
use hypimcf::funcs::{hk_deficit, hk_deficit_of, monotonicity_report, q_noise, sharp_constant};
use hypimcf::hypgeo::{bisecting_inversion, hyp_distance, invert, ball_radius, BallPoint, SphereInversion};
use hypimcf::reflect::{certify_star_shaped, gradient_bound_check, waiting_time};
use hypimcf::starshape::{geometry, PolarGrid, RadialGraph};
use hypimcf::weakflow::*;
use hypimcf::Result;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn grid(nodes: usize) -> PolarGrid {
    PolarGrid::new(3, nodes).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn exact_sphere() -> Result<Outcome> {
    let g = RadialGraph::sphere(grid(512), 1.0)?;
    let geo = geometry(&g)?;
    let (s, c) = (1f64.sinh(), 1f64.cosh());
    let area = 4.0 * PI * s * s;
    // ∫_Ω cosh r dV = 4π ∫_0^1 sinh² r cosh r dr
    let bulk = 4.0 * PI * s.powi(3) / 3.0;
    let h = 2.0 * c / s;
    let fh = c * h * area;
    let mut worst = [
        rel(geo.area(), area),
        rel(geo.bulk_potential(), bulk),
        rel(geo.weighted_total_curvature(), fh),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    for (hv, phi) in geo.mean_curvature.iter().zip(&geo.support) {
        worst = worst.max(rel(*hv, h)).max(rel(*phi, s));
    }
    // the rounded decimals quoted alongside the criterion, reported only:
    // they differ from the closed forms by up to 1.4e-6 relative
    let quoted = [rel(area, 17.355393), rel(bulk, 6.798700), rel(fh, 70.32816), rel(h, 2.6260706)]
        .into_iter()
        .fold(0.0, f64::max);
    outcome(
        worst < 1e-6,
        format!("max relative error {worst:.2e}; quoted decimals off the closed forms by {quoted:.1e}"),
    )
}

fn expanding_sphere_run() -> Result<Outcome> {
    let state = imcf_run(RadialGraph::sphere(grid(64), 1.0)?, 1.0, 1e-3, 0.01)?;
    let exact = expanding_sphere(1.0, 3, 1.0);
    let r_err = state.graph.r().iter().map(|r| (r - 1.4153674).abs()).fold(0.0, f64::max);
    let a0 = state.history.rows[0].area;
    let drift = state
        .history
        .rows
        .iter()
        .map(|row| (row.area * (-row.t).exp() / a0 - 1.0).abs())
        .fold(0.0, f64::max);
    let closed = state.graph.r().iter().map(|r| (r - exact).abs()).fold(0.0, f64::max);
    outcome(
        r_err < 1e-5 && closed < 1e-5 && drift < 1e-4,
        format!("|r(1) - 1.4153674| = {r_err:.2e}, closed form {exact:.7} off by {closed:.1e}, area drift {drift:.1e}"),
    )
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    let dir = loop {
        let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        if v.norm() > 1e-3 && v.norm() <= 1.0 {
            break v.normalize();
        }
    };
    dir * (0.95 * rng.gen_range(0.0f64..1.0).cbrt())
}

fn inversion_suite() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut dist, mut invol, mut orth, mut exch) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let theta = random_point(&mut rng, 3);
        let inv = SphereInversion::new(rng.gen_range(0.02..0.98), &theta)?;
        let p = BallPoint::new(random_point(&mut rng, 3))?;
        let q = BallPoint::new(random_point(&mut rng, 3))?;
        let (fp, fq) = (invert(&inv, &p)?, invert(&inv, &q)?);
        dist = dist.max((hyp_distance(&p, &q)? - hyp_distance(&fp, &fq)?).abs());
        invol = invol.max((invert(&inv, &fp)?.coords() - p.coords()).norm());
    }
    for _ in 0..1000 {
        let a = BallPoint::new(random_point(&mut rng, 3))?;
        let b = BallPoint::new(random_point(&mut rng, 3))?;
        let (x1, x2) = if a.rho() < b.rho() { (a, b) } else { (b, a) };
        let inv = bisecting_inversion(&x1, &x2)?;
        orth = orth.max(inv.orthogonality_defect().abs());
        exch = exch.max((invert(&inv, &x2)?.coords() - x1.coords()).norm());
    }
    outcome(
        dist < 1e-10 && invol < 1e-10 && orth < 1e-12 && exch < 1e-12,
        format!("distance {dist:.1e}, involution {invol:.1e}, orthogonality {orth:.1e}, exchange {exch:.1e}"),
    )
}

fn waiting_time_offset() -> Result<Outcome> {
    let g = RadialGraph::offset_sphere(grid(97), 0.5, 1.5)?;
    let (r_minus, r_plus) = (g.min_r(), g.max_r());
    let t_wait = waiting_time(r_minus, r_plus, 3)?;
    let res = weak_limit(&AnnulusMesh::new(g, 4.5, 193)?, &DEFAULT_SCHEDULE)?;
    let ts: Vec<f64> = (1..=7).map(|k| 0.5 * k as f64).collect();
    let mut after = Vec::new();
    let mut ok = (t_wait - 2.2538564).abs() < 1e-6 && (r_plus - 2.0).abs() < 1e-12;
    let mut contrast = 0;
    for ls in res.level_sets(&ts)? {
        if ls.t < t_wait {
            contrast += 1;
            continue;
        }
        let star = certify_star_shaped(&ls.cloud, ball_radius(2.0))?;
        let grad = match &ls.graph {
            Some(gr) => gradient_bound_check(gr, 2.0)?.passed(),
            None => false,
        };
        ok &= star.passed() && grad;
        after.push(format!("{}:{}", ls.t, if star.passed() && grad { "ok" } else { "fail" }));
    }
    outcome(
        ok && contrast > 0 && !after.is_empty(),
        format!("T = {t_wait:.7}, levels past T [{}], {contrast} contrast levels", after.join(" ")),
    )
}

fn heintze_karcher() -> Result<Outcome> {
    let sphere_deficit = hk_deficit(&RadialGraph::sphere(grid(256), 1.0)?)?;
    let bumped = hk_deficit(&RadialGraph::perturbed(grid(256), 1.0, 0.1, 2)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut count, mut worst) = (0, f64::INFINITY);
    while count < 20 {
        let r0 = rng.gen_range(0.5..2.0);
        let a = rng.gen_range(-0.15..0.15) * r0;
        let b = rng.gen_range(-0.1..0.1) * r0;
        let k = rng.gen_range(1..4) as f64;
        let g = RadialGraph::from_fn(grid(256), "family", |psi| r0 + a * (2.0 * psi).cos() + b * (k * psi).cos())?;
        let geo = geometry(&g)?;
        if !(geo.min_mean_curvature() > 0.0) {
            continue;
        }
        count += 1;
        let calib = hk_deficit(&RadialGraph::sphere(grid(256), r0)?)?;
        let tol = 10.0 * calib.abs() + 1e-9 * geo.bulk_potential();
        worst = worst.min(hk_deficit_of(&geo)? + tol);
    }
    outcome(
        sphere_deficit.abs() < 1e-6 && bumped > 0.0 && worst >= 0.0,
        format!("sphere {sphere_deficit:.1e}, perturbed {bumped:.3e}, family min slack {worst:.2e}"),
    )
}

fn monotonicity() -> Result<Outcome> {
    let sphere = imcf_run(RadialGraph::sphere(grid(128), 1.0)?, 3.0, 1e-2, 0.1)?;
    let tol = (10.0 * q_noise(&sphere.history)).max(1e-12);
    let trace = imcf_run(RadialGraph::perturbed(grid(128), 1.0, 0.2, 2)?, 3.0, 1e-2, 0.1)?.history;
    let report = monotonicity_report(&trace, tol)?;
    let sharp = 4.0 * PI.sqrt();
    let (q0, q3) = (trace.rows[0].q_val, trace.rows.last().unwrap().q_val);
    let ok = report.passed() && q3 >= sharp * (1.0 - tol) && q0 > sharp && (sharp_constant(3) - sharp).abs() < 1e-12;
    let window = report.p_window_end.map_or("whole trace".to_string(), |i| format!("rows < {i}"));
    outcome(ok, format!("Q {q0:.6} -> {q3:.6} (4√π = {sharp:.6}), tol {tol:.1e}, P window {window}"))
}

fn weak_oracle() -> Result<Outcome> {
    let (r0, eps) = (1.0, 0.1);
    let mesh = AnnulusMesh::new(RadialGraph::sphere(grid(17), r0)?, 3.0, 257)?;
    let field = solve_regularized(&mesh, eps)?;
    let oracle = radial_oracle(r0, 3.0, eps, 3)?;
    let (mut interior, mut all) = (0.0f64, 0.0f64);
    for i in 0..mesh.n_xi() - 1 {
        for j in 0..mesh.n_psi() {
            let d = (field.value(i, j) - oracle.value_at(mesh.r(i, j)).unwrap()).abs();
            all = all.max(d);
            // the last interior row lies in the layer where the profile meets R vertically
            if i < mesh.n_xi() - 2 {
                interior = interior.max(d);
            }
        }
    }
    let res = weak_limit(&AnnulusMesh::new(RadialGraph::sphere(grid(17), r0)?, 3.5, 257)?, &DEFAULT_SCHEDULE)?;
    let f = res.field();
    let m = f.mesh();
    let mut limit = 0.0f64;
    for i in 0..m.n_xi() {
        for j in 0..m.n_psi() {
            let exact = 2.0 * (m.r(i, j).sinh() / r0.sinh()).ln();
            if exact <= m.level_max() - OUTER_MARGIN {
                limit = limit.max((f.value(i, j) - exact).abs());
            }
        }
    }
    let mp = field.max_principle.holds() && res.fields.iter().all(|f| f.max_principle.holds());
    outcome(
        interior < 1e-4 && limit < 2e-3 && mp,
        format!(
            "oracle {interior:.1e} (last interior row {all:.1e}, profile gap {:.1e}), limit {limit:.1e}, max principle {mp}",
            oracle.boundary_gap
        ),
    )
}

fn jump_detection() -> Result<Outcome> {
    let (np, nx, r_outer, beta) = (49, 97, 6.0, 1.5);
    let g = RadialGraph::dumbbell(grid(np), 0.2, 2.0, 1)?;
    let t_wait = waiting_time(g.min_r(), g.max_r(), 3)?;
    let rho_plus = ball_radius(g.max_r());
    let res = weak_limit(&AnnulusMesh::new(g, r_outer, nx)?.with_grading(beta)?, &DEFAULT_SCHEDULE)?;
    let sphere = AnnulusMesh::new(RadialGraph::sphere(grid(np), 1.0)?, r_outer, nx)?.with_grading(beta)?;
    let floor = gradient_noise_floor(weak_limit(&sphere, &DEFAULT_SCHEDULE)?.field());
    let jumps = res.jump_report(10.0 * floor)?;
    let mut ok = !jumps.is_empty() && jumps.iter().all(|j| j.nodes >= MIN_PLATEAU_NODES);
    let mut post = Vec::new();
    for ls in res.level_sets(&[6.0, 6.5, 7.0])? {
        let star = certify_star_shaped(&ls.cloud, rho_plus)?;
        ok &= ls.t > t_wait && star.passed();
        post.push(format!("{}:{:.3}", ls.t, star.margin));
    }
    let first = jumps.first().map_or("none".to_string(), |j| {
        format!("t={:.1e} over {} nodes", j.t, j.nodes)
    });
    outcome(
        ok,
        format!("{} jump(s), first {first}; T = {t_wait:.3}, star margins [{}]", jumps.len(), post.join(" ")),
    )
}

fn mcf_monitor() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut runs = 0;
    let mut max_increase = f64::NEG_INFINITY;
    let k_list = [1, 10, 100];
    while runs < 10 {
        let g = RadialGraph::perturbed(grid(64), rng.gen_range(0.8..1.6), rng.gen_range(-0.2..0.2), rng.gen_range(1..4))?;
        if !(geometry(&g)?.min_mean_curvature() > 0.1) {
            continue;
        }
        runs += 1;
        let run = mcf_run(&g, DEFAULT_EPSILON_MAX, &k_list)?;
        for j in 0..k_list.len() {
            for w in run.series(j).windows(2) {
                max_increase = max_increase.max(w[1] - w[0]);
            }
        }
    }
    let sphere = mcf_run(&RadialGraph::sphere(grid(64), 1.0)?, DEFAULT_EPSILON_MAX, &k_list)?;
    // cosh r(ε) = cosh r0 e^{-2ε} for n = 3, independent of the ODE integrator
    let exact = (1f64.cosh() * (-2.0 * DEFAULT_EPSILON_MAX).exp()).acosh();
    let err = sphere.final_graph.r().iter().map(|r| (r - exact).abs()).fold(0.0, f64::max);
    let ode = (shrinking_sphere(1.0, 3, DEFAULT_EPSILON_MAX) - exact).abs();
    outcome(
        max_increase <= 1e-8 && err < 1e-5 && ode < 1e-9,
        format!("{runs} runs, largest step increase {max_increase:.1e}, sphere error {err:.1e}"),
    )
}

fn determinism() -> Result<Outcome> {
    let artifacts = || -> Result<Vec<String>> {
        let g = RadialGraph::perturbed(grid(64), 1.0, 0.2, 2)?;
        let trace = imcf_run(g.clone(), 1.0, 1e-2, 0.1)?.history.to_csv();
        let res = weak_limit(&AnnulusMesh::for_levels(g, 1.0, OUTER_MARGIN, 65)?, &DEFAULT_SCHEDULE)?;
        let mut out = vec![trace, res.field().to_csv()];
        for ls in res.level_sets(&[0.5, 1.0])? {
            out.push(ls.to_csv());
        }
        Ok(out)
    };
    let (a, b) = (artifacts()?, artifacts()?);
    let bytes: usize = a.iter().map(String::len).sum();
    outcome(a == b, format!("{} artifacts, {bytes} bytes compared", a.len()))
}

type Criterion = (u32, &'static str, Duration, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let minute = Duration::from_secs(60);
    let criteria: [Criterion; 10] = [
        (1, "exact sphere", Duration::from_secs(1), exact_sphere),
        (2, "expanding sphere", Duration::from_secs(10), expanding_sphere_run),
        (3, "inversion suite", Duration::from_secs(1), inversion_suite),
        (4, "waiting time", 5 * minute, waiting_time_offset),
        (5, "heintze-karcher", Duration::from_secs(30), heintze_karcher),
        (6, "q/p monotonicity", 2 * minute, monotonicity),
        (7, "weak solver oracle", 2 * minute, weak_oracle),
        (8, "jump detection", 5 * minute, jump_detection),
        (9, "mcf monitor", Duration::from_secs(30), mcf_monitor),
        (10, "determinism", 5 * minute, determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (passed, detail) = match result {
            Ok(o) => (o.passed && elapsed <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!passed);
        println!(
            "criterion {id:>2} {name}: {} ({detail}; {:.2} s of {} s)",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 10 criteria fail");
        ExitCode::FAILURE
    }
}
