use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stokes_hdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokes-hdg")).args(args).env_remove("STOKES_HDG_THREADS").output().unwrap()
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mesh_info_single_cell() {
    let out = stokes_hdg(&["mesh-info", "--n", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("elements=2 "), "{text}");
    assert!(text.contains("faces=5 "), "{text}");
    assert!(text.contains("boundary_faces=4 "), "{text}");
}

#[test]
fn xi_for_square_corner() {
    let out = stokes_hdg(&["xi", "--omega", "1.5707963"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("xi=2.7395"), "{text}");
    assert!(text.contains("admissible=true"), "{text}");

    let wide = stdout(&stokes_hdg(&["xi", "--omega", "2.82743"]));
    assert!(wide.contains("admissible=false"), "{wide}");
}

#[test]
fn bad_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "k = 1\ncolour = blue\n").unwrap();
    let out = stokes_hdg(&["--config", path(&cfg), "solve"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("colour"));

    assert_eq!(stokes_hdg(&["solve", "--dt", "-4"]).status.code(), Some(2));
    assert_eq!(stokes_hdg(&["solve", "--k", "one"]).status.code(), Some(2));
    assert_eq!(stokes_hdg(&["xi", "--omega", "9"]).status.code(), Some(2));
    assert_eq!(stokes_hdg(&["convergence", "--n", "4,12"]).status.code(), Some(2));

    let threads = Command::new(env!("CARGO_BIN_EXE_stokes-hdg"))
        .args(["mesh-info", "--n", "1"])
        .env("STOKES_HDG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn non_convergence_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = stokes_hdg(&["solve", "--n", "4", "--max-iter", "1", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("iterations.csv").exists());
}

#[test]
fn solve_writes_identical_outputs_for_identical_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "problem = example1\nn = 4\nk = 1\ndt = 64\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for target in [&a, &b] {
        let out = stokes_hdg(&["--config", path(&cfg), "solve", "--out", path(target)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("converged=true"));
    }
    let names = [
        "state_flux",
        "adjoint_flux",
        "state_velocity",
        "adjoint_velocity",
        "state_pressure",
        "adjoint_pressure",
        "state_trace",
        "adjoint_trace",
        "control",
        "iterations",
    ];
    for name in names {
        let file = format!("{name}.csv");
        let (x, y) = (fs::read(a.join(&file)).unwrap(), fs::read(b.join(&file)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between runs");
    }
    let control = fs::read_to_string(a.join("control.csv")).unwrap();
    assert!(control.starts_with("face_id,mode_index,component,coefficient\n"));
    // 16 boundary faces with two modes each.
    assert_eq!(control.lines().count(), 1 + 16 * 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n = 64\nk = 2\n").unwrap();
    let out = stokes_hdg(&["--config", path(&cfg), "solve", "--n", "2", "--k", "0", "--out", path(dir.path())]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("n=2 elements=8 "));
    let pressure = fs::read_to_string(dir.path().join("state_pressure.csv")).unwrap();
    assert_eq!(pressure.lines().count(), 1 + 8);
}

#[test]
fn convergence_table_written() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        stokes_hdg(&["convergence", "--problem", "example1", "--k", "0", "--n", "2,4", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv, stdout(&out));
    assert!(csv.starts_with("n,h_over_sqrt2,err_L,ord_L,"));
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("convergence_projected.csv").exists());
}

#[test]
fn custom_constant_problem() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("flow.problem");
    fs::write(&problem, "side = 0.5\nforce = 1, 0\ntarget = 0, 2\n").unwrap();
    let out = stokes_hdg(&["solve", "--problem", path(&problem), "--n", "4", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("n=4 elements=8 "));

    fs::write(&problem, "side = 0.5\nviscosity = 2\n").unwrap();
    assert_eq!(stokes_hdg(&["solve", "--problem", path(&problem)]).status.code(), Some(2));
    let conv = stokes_hdg(&["convergence", "--problem", path(&problem), "--n", "2,4"]);
    assert_eq!(conv.status.code(), Some(2));
}
