use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hypimcf_cli::summary::Summary;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypimcf"))
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .args(extra)
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("case.scenario");
    fs::write(&p, text).unwrap();
    p
}

const SMALL_ALL: &str = r#"
name = "small"
n = 3
pipeline = "all"
resolution = 64
t_max = 1.0

[surface]
kind = "perturbed"
r0 = 1.0
a = 0.15
k = 2

[flow]
mcf_suite = 3

[weak]
radial_nodes = 65

[checks]
inversion_pairs = 200
hk_family = 4
"#;

#[test]
fn sphere_exact_reports_the_closed_form_radius() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&scenario_path("sphere-exact.scenario"), tmp.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(tmp.path());
    let e = s.criteria.expanding_sphere.expect("sphere scenario covers the closed form");
    assert!((e.r_final - 1.4153674).abs() < 1e-5, "{}", e.r_final);
    // Q is constant along the sphere flow, equal to 4√π for n = 3
    let m = s.criteria.monotonicity.unwrap();
    let sharp = 4.0 * std::f64::consts::PI.sqrt();
    assert!((m.q_initial - sharp).abs() < 1e-6 * sharp);
    assert!((m.q_final - sharp).abs() < 1e-6 * sharp);
    let trace = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), hypimcf::funcs::TRACE_HEADER);
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_scenario(tmp.path(), SMALL_ALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&file, dir, &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    assert!(ta.contains_key(Path::new("levelsets/t=0.5.csv")));
    assert!(ta.contains_key(Path::new("certificates.txt")));
    assert_eq!(ta, tb);
    // the summary carries a digest of every other artifact
    assert_eq!(summary(&a).criteria.determinism.artifacts.len(), ta.len() - 1);
}

#[test]
fn seed_only_moves_the_randomized_suites() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL_ALL.replace("pipeline = \"all\"", "pipeline = \"inequalities\"");
    let file = write_scenario(tmp.path(), &text);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&file, &a, &["--seed", "1"]).status.success());
    assert!(run(&file, &b, &["--seed", "2"]).status.success());
    let (sa, sb) = (summary(&a), summary(&b));
    assert_eq!(sa.seed, 1);
    let (ha, hb) = (sa.criteria.heintze_karcher.unwrap(), sb.criteria.heintze_karcher.unwrap());
    assert_eq!(ha.deficit, hb.deficit);
    assert_ne!(ha.family_min_deficit, hb.family_min_deficit);
}

#[test]
fn dimension_eight_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario_path("sphere-exact.scenario")).unwrap().replace("n = 3", "n = 8");
    let file = write_scenario(tmp.path(), &text);
    for verb in ["run", "validate"] {
        let out = bin().arg(verb).arg(&file).output().unwrap();
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("3 <= n <= 7"), "{err}");
        assert!(err.contains("line 3: n:"), "{err}");
    }
}

#[test]
fn unknown_keys_name_their_line() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_scenario(tmp.path(), &SMALL_ALL.replace("k = 2", "k = 2\nwidth = 3"));
    let out = bin().arg("validate").arg(&file).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 13: width:"), "{err}");
}

#[test]
fn validate_accepts_the_shipped_scenarios() {
    for name in ["sphere-exact", "waiting-time", "dumbbell", "perturbed"] {
        let out = bin()
            .arg("validate")
            .arg(scenario_path(&format!("{name}.scenario")))
            .output()
            .unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).starts_with(&format!("ok: {name}")));
    }
}

#[test]
fn solver_aborts_exit_nonzero_with_the_module_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
name = "neck"
n = 3
pipeline = "flow"
resolution = 64
t_max = 1.0

[surface]
kind = "dumbbell"
r_neck = 0.2
r_bulb = 2.0
k = 1
"#;
    let file = write_scenario(tmp.path(), text);
    let out = run(&file, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mean-convexity lost"));
}

#[test]
fn report_reads_a_finished_run() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run(&scenario_path("sphere-exact.scenario"), tmp.path(), &[]).status.success());
    let out = bin().arg("report").arg(tmp.path()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS expanding_sphere"));
    assert!(text.contains("overall: PASS"));

    let missing = bin().arg("report").arg(tmp.path().join("nowhere")).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn waiting_time_scenario_certifies_the_first_level_past_the_waiting_time() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&scenario_path("waiting-time.scenario"), tmp.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let w = summary(tmp.path()).criteria.waiting_time.unwrap();
    assert!((w.waiting_time - 2.2538564).abs() < 1e-6);
    let first = w.levels.iter().find(|l| l.t > w.waiting_time).unwrap();
    assert_eq!(first.star_shaped, "passed");
    assert_eq!(w.first_star_shaped_t, Some(first.t));
    assert!(w.contrast_recorded);
    let certs = fs::read_to_string(tmp.path().join("certificates.txt")).unwrap();
    assert!(certs.contains(&format!("[t={} star_shaped]", first.t)));
}
