use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use orbitope_mpc::conic::read_program;
use orbitope_mpc::export::{read_trajectory_csv, Summary, SUMMARY_FILE, TRAJECTORY_FILE};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orbitope-mpc"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("binary runs");
    (
        status.code().expect("exited normally"),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn read_matrix(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .take_while(|l| !l.starts_with("distance"))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn plan_writes_a_verifiable_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dubins");
    let (code, stdout, stderr) = run(bin().arg("plan").arg(scenario("dubins.toml")).arg("--out").arg(&out).arg("--round"));
    assert_eq!(code, 0, "{stdout}{stderr}");
    assert!(stdout.contains("status optimal"), "{stdout}");

    let summary = Summary::parse(&fs::read_to_string(out.join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary.rows, 21);
    assert_eq!(summary.status, "optimal");
    let csv = fs::read_to_string(out.join(TRAJECTORY_FILE)).unwrap();
    let traj = read_trajectory_csv(&csv, 1.0, &[1.0, 0.0]).unwrap();
    assert_eq!(traj.steps.len(), 21);
    let end = &traj.steps[20].position;
    assert!((end[0] - 5.0).abs() < 1e-5 && (end[1] - 10.0).abs() < 1e-5, "{end:?}");
    assert!(out.join("trajectory_rounded.csv").exists());

    let (code, stdout, _) = run(bin().arg("verify").arg(&out));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.trim_end().ends_with("ok"), "{stdout}");
}

#[test]
fn runs_without_timings_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let (code, _, stderr) = run(bin()
            .arg("plan")
            .arg(scenario("spacecraft.toml"))
            .arg("--out")
            .arg(&out)
            .arg("--no-timings")
            .args(["--seed", "7"]));
        assert_eq!(code, 0, "{stderr}");
        files.push((fs::read(out.join(TRAJECTORY_FILE)).unwrap(), fs::read(out.join(SUMMARY_FILE)).unwrap()));
    }
    assert_eq!(files[0], files[1]);
    let summary = Summary::parse(std::str::from_utf8(&files[0].1).unwrap()).unwrap();
    assert_eq!(summary.seed, Some(7));
    assert_eq!(summary.wall_time, 0.0);
}

#[test]
fn invalid_inputs_exit_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(scenario("dubins.toml")).unwrap();

    let zero = dir.path().join("zero.toml");
    fs::write(&zero, base.replace("horizon = 20", "horizon = 0")).unwrap();
    let (code, _, stderr) = run(bin().arg("plan").arg(&zero).arg("--out").arg(dir.path().join("z")));
    assert_eq!(code, 4, "{stderr}");
    assert!(stderr.contains("horizon"), "{stderr}");

    let typo = dir.path().join("typo.toml");
    fs::write(&typo, base.replace("[goal]", "[goal]\nposition_tol = 1.0")).unwrap();
    let (code, _, stderr) = run(bin().arg("plan").arg(&typo));
    assert_eq!(code, 4);
    assert!(stderr.contains("goal"), "{stderr}");

    let (code, _, _) = run(bin().arg("plan").arg(scenario("dubins.toml")).args(["--tol", "-1"]));
    assert_eq!(code, 4);
    let (code, _, _) = run(bin().arg("plan"));
    assert_eq!(code, 4);
    let (code, _, _) = run(bin().args(["project", "1,2;3"]));
    assert_eq!(code, 4);
    let (code, _, _) = run(bin().arg("plan").arg(dir.path().join("missing.toml")));
    assert_eq!(code, 1);
}

#[test]
fn rhc_needs_its_section_and_reports_the_step_limit() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(bin().arg("rhc").arg(scenario("dubins.toml")).arg("--out").arg(dir.path()));
    assert_eq!(code, 4, "{stderr}");
    assert!(stderr.contains("rhc"), "{stderr}");

    let out = dir.path().join("limit");
    let (code, stdout, _) = run(bin()
        .arg("rhc")
        .arg(scenario("dubins_rhc_static.toml"))
        .arg("--out")
        .arg(&out)
        .args(["--max-steps", "0"]));
    assert_eq!(code, 3, "{stdout}");
    assert!(stdout.contains("stop step_limit"), "{stdout}");
    let csv = fs::read_to_string(out.join(TRAJECTORY_FILE)).unwrap();
    let traj = read_trajectory_csv(&csv, 1.0, &[1.0, 0.0]).unwrap();
    assert_eq!(traj.steps.len(), 1, "only the start state");
}

#[test]
fn rhc_captures_a_static_goal() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = run(bin().arg("rhc").arg(scenario("dubins_rhc_static.toml")).arg("--out").arg(dir.path()));
    assert_eq!(code, 0, "{stdout}{stderr}");
    let summary = Summary::parse(&fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary.stop.as_deref(), Some("captured"));
    let step = summary.capture_step.unwrap();
    assert_eq!(summary.rows, step + 1);
    assert!(summary.goal_distance.unwrap() <= 0.1);
}

#[test]
fn dumped_program_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("program.txt");
    let (code, _, stderr) = run(bin()
        .arg("plan")
        .arg(scenario("dubins.toml"))
        .arg("--out")
        .arg(dir.path().join("o"))
        .arg("--dump-program")
        .arg(&dump));
    assert_eq!(code, 0, "{stderr}");
    let prog = read_program(&fs::read_to_string(&dump).unwrap()).unwrap();
    assert!(prog.num_vars() > 0);
    assert!(!prog.blocks().is_empty());
}

#[test]
fn project_prints_the_nearest_rotation() {
    let (code, stdout, _) = run(bin().args(["project", "1,0;0,1"]));
    assert_eq!(code, 0);
    assert_eq!(read_matrix(&stdout), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert!(stdout.contains("distance 0\n"), "{stdout}");

    let (code, stdout, _) = run(bin().args(["project", "0.5,0,0;0,0.5,0;0,0,0.5"]));
    assert_eq!(code, 0);
    assert!(stdout.starts_with("1 0 0\n0 1 0\n0 0 1\n"), "{stdout}");
    // ‖0.5·I − I‖_F = 0.5·√3
    let d: f64 = stdout.lines().find_map(|l| l.strip_prefix("distance ")).unwrap().parse().unwrap();
    assert!((d - 0.5 * 3f64.sqrt()).abs() < 1e-12);

    // a reflection has no unique nearest rotation
    let (_, stdout, _) = run(bin().args(["project", "1,0;0,-1"]));
    assert!(stdout.contains("unique false"), "{stdout}");
}

#[test]
fn project_matches_reference_fixtures() {
    for n in [2, 3] {
        let (code, stdout, stderr) = run(bin().arg("project").arg("--file").arg(fixture(&format!("hull_sample_{n}.txt"))));
        assert_eq!(code, 0, "{stderr}");
        let expected_text = fs::read_to_string(fixture(&format!("hull_sample_{n}.expected.txt"))).unwrap();
        let expected = read_matrix(&expected_text);
        let got = read_matrix(&stdout);
        assert_eq!(got.len(), n);
        for (g, e) in got.iter().flatten().zip(expected.iter().flatten()) {
            assert!((g - e).abs() < 1e-9, "{g} vs {e}");
        }
        let want: f64 = expected_text.lines().next().unwrap().rsplit(' ').next().unwrap().parse().unwrap();
        let d: f64 = stdout.lines().find_map(|l| l.strip_prefix("distance ")).unwrap().parse().unwrap();
        assert!((d - want).abs() < 1e-9, "{d} vs {want}");
    }
}
