use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sphamoeba::kuratowski::ConvergenceReport;
use sphamoeba::slog::AmoebaCloud;
use sphamoeba::spaces::FamilyId;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphamoeba"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn curves_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../curves")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn pointed_amoeba_rows_lie_in_the_cone() {
    let out = run(&["amoeba", "--family", "pointed3", "--t", "0.1", "--samples", "1000", "--seed", "7"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let cloud = AmoebaCloud::read_csv(text.as_bytes(), FamilyId::PointedPairs(3), 0.1).unwrap();
    assert_eq!(cloud.points.len(), 1000);
    assert!(cloud.points.iter().all(|q| q[0] + q[1] <= 1e-9));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = ["amoeba", "--family", "triangles", "--t", "0.2", "--samples", "700", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let conv = ["converge", "--family", "affineU3", "--t", "0.5,0.1", "--samples", "500", "--stratified"];
    assert_eq!(run(&conv).stdout, run(&conv).stdout);
}

#[test]
fn csv_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let out = run(&[
        "amoeba", "--family", "group3", "--t", "0.3", "--samples", "300", "--seed", "1",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let file = std::fs::File::open(&path).unwrap();
    let cloud = AmoebaCloud::read_csv(file, FamilyId::Group(3), 0.3).unwrap();
    let direct = sphamoeba::slog::amoeba(
        FamilyId::Group(3),
        0.3,
        &sphamoeba::slog::AmoebaConfig::new(300, 1),
    )
    .unwrap();
    assert_eq!(cloud.points, direct.points);
}

#[test]
fn group3_svg_has_both_boundary_curves() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("g.svg");
    let out = run(&[
        "amoeba", "--family", "group3", "--t", "0.1", "--samples", "500", "--window", "5",
        "--svg", svg.to_str().unwrap(), "--out", dir.path().join("g.csv").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc = std::fs::read_to_string(svg).unwrap();
    assert!(doc.starts_with("<svg"));
    assert!(doc.contains(r#"class="boundary-1""#) && doc.contains(r#"class="boundary-2""#));
    assert_eq!(doc.matches("<circle").count(), 500);
}

#[test]
fn boundary_csv() {
    let out = run(&["boundary", "--t", "0.1", "--points", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "curve,x,q1,q2");
    assert_eq!(lines.len(), 11);
    let out = run(&["boundary", "--family", "triangles", "--t", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn triangle_cone_rays() {
    let out = run(&["cone", "--family", "triangles"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rays: Vec<Vec<f64>> = serde_json::from_value(v["rays"].clone()).unwrap();
    assert_eq!(
        rays,
        vec![vec![-1.0, -1.0, 0.0], vec![-1.0, 0.0, -1.0], vec![0.0, -1.0, -1.0]]
    );
}

#[test]
fn tropicalize_plane_curve() {
    let curve = curves_dir().join("sl2plane_t2_plus_t3__t5.json");
    let out = run(&["tropicalize", "--family", "sl2plane", "--curve", curve.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["strop"][0], "2");
    assert_eq!(v["valuations"][0]["value"], 2.0);
    let out = run(&["tropicalize", "--family", "group3", "--curve", curve.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shipped_curves_tropicalize_into_the_cone() {
    for entry in std::fs::read_dir(curves_dir()).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["tropicalize", "--curve", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", path.display());
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(v["in_valuation_cone"], true, "{}", path.display());
    }
}

#[test]
fn converge_pointed_is_exact() {
    let out = run(&["converge", "--family", "pointed3", "--t", "0.5,0.1", "--samples", "2000"]);
    assert!(out.status.success());
    let rep: ConvergenceReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rep.rows.len(), 2);
    assert!(rep.rows.iter().all(|r| r.discrepancy <= 1e-9));
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["amoeba", "--family", "nope", "--t", "0.1"]).status.code(), Some(1));
    assert_eq!(run(&["amoeba", "--family", "group3", "--t", "1.5"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no/such/dir/out.csv");
    let out = run(&["amoeba", "--family", "group3", "--t", "0.1", "--samples", "10", "--out", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["tropicalize", "--curve", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_curve_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        "{\"family\": \"sl2plane\",\n \"coords\": [{\"ramification\": 1, \"terms\": [[2, 1.0]]}]}",
    );
    let out = run(&["tropicalize", "--curve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn truncated_away_curve_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "c.json",
        r#"{"family": "sl2plane", "coords": [
            {"ramification": 1, "truncation": 4, "terms": []},
            {"ramification": 1, "truncation": 4, "terms": []}]}"#,
    );
    let out = run(&["tropicalize", "--curve", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("inconclusive"), "{err}");
}
