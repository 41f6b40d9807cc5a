use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lshape-ocp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn mesh_info_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["mesh-info", "--n", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("vertices: 21"), "{text}");
    assert!(text.contains("triangles: 24"));
    assert!(text.contains("interior dof: 5"));
    assert!(text.contains("h: "));
}

#[test]
fn mesh_info_writes_a_parsable_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["mesh-info", "--n", "6", "--out", "m.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("m.txt")).unwrap();
    let parsed = lshape_ocp::mesh::Mesh::parse(&text).unwrap();
    assert_eq!(parsed.mesh.num_triangles(), 54);
    assert!(parsed.warnings.is_empty());
}

#[test]
fn study_writes_report_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["study", "--levels", "4,8,16", "--out", "report.csv"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "level,h,dof,N,err_y,err_z,err_u,rate_y,rate_z,rate_u"
    );
    assert_eq!(lines.len(), 4);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first.len(), 10);
    assert!(first[7..].iter().all(|c| c.is_empty()));
    for row in &lines[2..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert!(cells[7..].iter().all(|c| c.parse::<f64>().is_ok()), "{row}");
    }
    assert!(!csv.contains('\r'));
    let svg = fs::read_to_string(dir.path().join("report.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(dir.path().join("report_final.csv").exists());
}

#[test]
fn repeated_studies_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        run(&["study", "--levels", "4,8", "--out", "a.csv"], dir.path())
            .status
            .success()
    );
    assert!(
        run(&["study", "--levels", "4,8", "--out", "b.csv"], dir.path())
            .status
            .success()
    );
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn gradcheck_passes_on_coarse_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gradcheck", "--n", "4", "--steps", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max relative error: "))
        .expect("error line")
        .trim()
        .parse()
        .unwrap();
    assert!(value <= 1e-5);
}

#[test]
fn solve_writes_three_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["solve", "--n", "4", "--steps", "8", "--out", "run.csv"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let state = fs::read_to_string(dir.path().join("run_state.csv")).unwrap();
    assert!(state.starts_with("level,vertex_index,x,y,value\n"));
    assert_eq!(state.lines().count(), 1 + 9 * 21);
    let control = fs::read_to_string(dir.path().join("run_control.csv")).unwrap();
    assert!(control.starts_with("interval,triangle,centroid_x,centroid_y,value\n"));
    assert_eq!(control.lines().count(), 1 + 8 * 24);
    assert!(dir.path().join("run_costate.csv").exists());
    assert!(stdout(&out).contains("converged: true"));
}

#[test]
fn config_file_is_applied_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.txt"),
        "# test\nn = 4\nsteps = 4\nmax_iter = 1\n",
    )
    .unwrap();
    let out = run(&["solve", "--config", "cfg.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("iterations: 1"), "{text}");
    assert!(text.contains("converged: false"));
    let out = run(
        &["solve", "--config", "cfg.txt", "--max-iter", "50"],
        dir.path(),
    );
    assert!(stdout(&out).contains("converged: true"));
}

#[test]
fn invalid_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = run(&["study", "--frobnicate"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));

    fs::write(dir.path().join("bad.txt"), "u_a=0.2\n").unwrap();
    assert_eq!(
        run(&["solve", "--config", "bad.txt"], dir.path())
            .status
            .code(),
        Some(1)
    );
    fs::write(dir.path().join("typo.txt"), "alpah=1\n").unwrap();
    assert_eq!(
        run(&["solve", "--config", "typo.txt"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["study", "--levels", "8,8"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["solve", "--alpha", "-1"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(1));
}
