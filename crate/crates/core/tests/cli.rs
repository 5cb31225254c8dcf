mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hystk_core::scenario::{generate_signal, Scenario, SignalDef};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn hystk(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hystk"));
    cmd.args(args).env_remove("HYSTK_SEED");
    if let Some(s) = seed {
        cmd.env("HYSTK_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn run_into(file: &Path, out: &Path) -> Output {
    hystk(&["run", file.to_str().unwrap(), "--out", out.to_str().unwrap()], None)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn preisach_trace_matches_threshold_logic() {
    let dir = tempfile::tempdir().unwrap();
    let file = scenario("classic_preisach.toml");
    let out = run_into(&file, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("classic_preisach.csv"));
    assert_eq!(header, ["time", "H_output"]);

    let sc = Scenario::load(&file).unwrap();
    let sig = generate_signal(&sc.signals["wave"]).unwrap();
    let path = common::Path {
        times: sig.times().to_vec(),
        points: sig.points().iter().map(|p| vec![p[0]]).collect(),
    };
    // the same grid the scenario asks for: cell centres above the diagonal
    let (lo, hi, n) = (-1.0, 1.0, 10);
    let h = (hi - lo) / n as f64;
    let mut th = Vec::new();
    for i in 0..n {
        for j in 0..i {
            th.push((lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h, h * h));
        }
    }
    let mut steps = 0;
    for w in rows.windows(2) {
        let (t, v) = (w[0][0], w[0][1]);
        // times carry 12 significant digits, so look just past the printed switch time
        assert!(
            (v - common::preisach_output(&th, &path, t + 1e-9)).abs() < 1e-9,
            "t = {t}"
        );
        // constant until the next row
        let mid = 0.5 * (t + w[1][0]);
        assert!((v - common::preisach_output(&th, &path, mid)).abs() < 1e-9, "t = {mid}");
        if w[1][1] != v {
            steps += 1;
        }
    }
    assert!(steps > 10);
    let last = rows.last().unwrap();
    assert!((last[1] - common::preisach_output(&th, &path, last[0])).abs() < 1e-9);
}

#[test]
fn markov_final_row_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(&scenario("markov_two_state.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("markov_two_state.csv"));
    assert_eq!(header[..2], ["time", "pi_1_1"]);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 3.0);
    let exact = (1.0 + (-2.0f64 * 3.0).exp()) / 2.0;
    assert!((last[1] - exact).abs() < 1e-6);
    for r in &rows {
        assert!((r[1] + r[2] - 1.0).abs() < 1e-8 && (r[3] + r[4] - 1.0).abs() < 1e-8);
    }
}

#[test]
fn inverted_thresholds_exit_one_and_cite_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(&scenario("bad_preisach.toml"), dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report = std::fs::read_to_string(dir.path().join("bad_preisach.report.txt")).unwrap();
    assert!(report.contains("do not cover"), "{report}");
    assert!(!dir.path().join("bad_preisach.csv").exists());

    let v = hystk(&["validate", scenario("bad_preisach.toml").to_str().unwrap()], None);
    assert_eq!(v.status.code(), Some(1));
}

#[test]
fn triangle_relay_switches_where_the_ray_meets_the_facet() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(&scenario("triangle_relay.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("triangle_relay.csv"));
    assert_eq!(header, ["time", "state", "output_1", "output_2"]);
    // (0.1, 0.1) + λ (0.35, 0.4) meets u1 + 0.2 u2 = 0.5 at λ = 0.38 / 0.43
    assert!((rows[1][0] - 0.38 / 0.43).abs() < 1e-11);
    assert_eq!(&rows[1][1..], &[0.0, 1.0, 1.0]);
}

#[test]
fn every_bundled_scenario_validates_except_the_bad_one() {
    for entry in std::fs::read_dir(scenario("")).unwrap() {
        let p = entry.unwrap().path();
        let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
        let out = hystk(&["validate", p.to_str().unwrap()], None);
        let want = if stem.starts_with("bad_") { 1 } else { 0 };
        assert_eq!(
            out.status.code(),
            Some(want),
            "{stem}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn game_solve_refines_the_grid() {
    let file = scenario("game_toy.toml");
    let coarse = hystk(&["game-solve", file.to_str().unwrap()], None);
    let fine = hystk(&["game-solve", file.to_str().unwrap(), "--refine", "2"], None);
    assert_eq!(coarse.status.code(), Some(0));
    assert_eq!(fine.status.code(), Some(0));
    let text = String::from_utf8(fine.stdout).unwrap();
    assert!(text.contains("81 grid nodes"), "{text}");
    assert!(text.contains("V_0 at x0"));
}

#[test]
fn xcheck_rejects_other_kinds() {
    let out = hystk(&["xcheck", scenario("game_toy.toml").to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.toml");
    std::fs::write(
        &bad,
        "kind = \"relay\"\nseed = 1\n[run]\nrelay = \"r\"\nsignl = \"s\"\n",
    )
    .unwrap();
    let out = hystk(&["validate", bad.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 5") && err.contains("signl"), "{err}");
}

#[test]
fn unknown_names_are_scenario_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("dangling.toml");
    std::fs::write(
        &bad,
        "kind = \"hysteresis\"\nseed = 1\n[run]\nfamily = \"nope\"\nsignal = \"s\"\n",
    )
    .unwrap();
    let out = run_into(&bad, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown family 'nope'"));
}

#[test]
fn failed_invariant_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("loose.toml");
    // no truncation within the term cap reaches a tolerance of 1e-300
    std::fs::write(
        &file,
        r#"
kind = "fundamental-matrix"
seed = 1
[systems.s]
type = "constant"
a = [[-1.0, 1.0], [1.0, -1.0]]
start = 0.0
end = 2.0
[run]
system = "s"
tol = 1e-300
"#,
    )
    .unwrap();
    let out = hystk(&["xcheck", file.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn seed_override_reaches_the_report() {
    let file = scenario("markov_two_state.toml");
    let a = tempfile::tempdir().unwrap();
    let out = hystk(
        &["run", file.to_str().unwrap(), "--out", a.path().to_str().unwrap()],
        Some("77"),
    );
    assert_eq!(out.status.code(), Some(0));
    let report = std::fs::read_to_string(a.path().join("markov_two_state.report.txt")).unwrap();
    assert!(report.contains("(seed 77)"), "{report}");
    let bad = hystk(&["run", file.to_str().unwrap()], Some("-3"));
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn generators_follow_their_definitions() {
    let tri: SignalDef =
        toml::from_str("generator = \"triangle-wave\"\namplitude = 1.0\nperiod = 2.0\nhalf_periods = 3").unwrap();
    assert_eq!(generate_signal(&tri).unwrap().times().len(), 4);
    let ramp: SignalDef =
        toml::from_str("generator = \"ramp\"\nfrom = [0.0, 1.0]\nto = [2.0, 3.0]\nt0 = 0.0\nt1 = 1.0\nsamples = 3")
            .unwrap();
    let s = generate_signal(&ramp).unwrap();
    assert_eq!(s.dim(), 2);
    assert_eq!(s.points()[1].as_slice(), &[1.0, 2.0]);
}
