mod common;

use std::path::Path;
use std::process::Command;

use pegtrace::report::{ComponentDump, EXIT_INPUT, EXIT_OK};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pegtrace"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let o = bin().args(args).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8(o.stdout).unwrap(), String::from_utf8(o.stderr).unwrap())
}

const OBTUSE: &str = r#"{"vertices": [[0, 0], [4, 0], [1, 1]]}"#;

#[test]
fn diameters_of_the_obtuse_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "tri.json", OBTUSE);
    let out = dir.path().join("out");
    let (code, stdout, _) = run(&["diameters", "--input", &f, "--out", out.to_str().unwrap(), "--svg"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["delta_plus"], 2);
    assert_eq!(v["config"]["command"], "diameters");
    let svg = std::fs::read_to_string(out.join("diameters.svg")).unwrap();
    assert!(svg.contains("viewBox=\"0 0 1000 1000\""));
}

#[test]
fn square_gets_a_degeneracy_warning() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sq.json", r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]]}"#);
    let (code, stdout, _) = run(&["diameters", "--input", &f]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("degenerate")));
}

#[test]
fn malformed_input_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.json", "{\"vertices\": [[0, 0],\n  [1, ");
    let (code, _, stderr) = run(&["diameters", "--input", &f]);
    assert_eq!(code, EXIT_INPUT);
    assert!(stderr.contains("line 2"), "{stderr}");
    let (code, _, _) = run(&["diameters"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _, _) = run(&["bogus"]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn tricky_polygon_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "right.json", r#"{"vertices": [[0,0],[4,0],[0,3]]}"#);
    for cmd in ["trace", "verify", "coincidences"] {
        let (code, _, stderr) = run(&[cmd, "--input", &f]);
        assert_eq!(code, EXIT_INPUT);
        assert!(stderr.contains("tricky"), "{stderr}");
    }
}

#[test]
fn trace_dump_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "tri.json", OBTUSE);
    let out = dir.path().join("out");
    let (code, stdout, _) = run(&["trace", "--input", &f, "--out", out.to_str().unwrap(), "--dump", "--svg"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["arcs"], 4);
    let dump: Vec<ComponentDump> =
        serde_json::from_str(&std::fs::read_to_string(out.join("trace_dump.json")).unwrap()).unwrap();
    assert_eq!(dump.len(), 4);
    for c in &dump {
        assert_eq!(c.inscribing.len(), 1);
        assert_eq!(c.endpoints.len(), 2);
        for s in c.samples.iter().step_by(37) {
            let r = pegtrace::geom::LabeledRectangle::new([
                pegtrace::geom::Point::new(s[0], s[1]),
                pegtrace::geom::Point::new(s[2], s[3]),
                pegtrace::geom::Point::new(s[4], s[5]),
                pegtrace::geom::Point::new(s[6], s[7]),
            ]);
            assert!(common::distance_to_family(&r) <= 1e-8);
            assert!((r.x - s[8]).abs() < 1e-12 && (r.y - s[9]).abs() < 1e-12);
        }
    }
    assert!(out.join("shapes.svg").exists());
}

#[test]
fn generated_pentagon_seed_7_has_two_arcs_per_positive_diameter() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let (code, _, _) = run(&["generate", "--vertices", "5", "--count", "1", "--seed", "7", "--out", gen.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let f = gen.join("polygon_0000.json");
    let (code, stdout, _) = run(&["trace", "--input", f.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["arcs"].as_u64().unwrap(), 2 * v["delta_plus"].as_u64().unwrap());
    assert_eq!(v["structure_pass"], true);
}

#[test]
fn verify_and_coincidences_on_the_obtuse_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "tri.json", OBTUSE);
    let (code, stdout, _) = run(&["verify", "--input", &f]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    for c in v["components"].as_array().unwrap() {
        assert_eq!(c["class"], "Hyperbolic");
        assert!((c["shape_area"].as_f64().unwrap().abs() - 2.0).abs() < 1e-6);
        assert_eq!(c["pass"], true);
    }
    assert_eq!(v["differential"].as_array().unwrap().len(), 4);

    let (code, stdout, _) = run(&["coincidences", "--input", &f]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["M"], 0);
    assert_eq!(v["bound_generic"], 0);
    assert_eq!(v["pass_generic"], true);
    assert_eq!(v["clusters"].as_array().unwrap().len(), 0);
}

#[test]
fn oracle_cross_check_via_grid() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "tri.json", OBTUSE);
    let (code, stdout, _) = run(&["trace", "--input", &f, "--grid", "20"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["oracle"]["pass"], true);
}

#[test]
fn generation_is_deterministic_and_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let (code, _, _) = run(&["generate", "--vertices", "5", "--count", "100", "--seed", "1", "--out", d.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
    }
    for k in 0..100 {
        let name = format!("polygon_{k:04}.json");
        let (x, y) = (std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
        assert_eq!(x, y);
        let p = pegtrace::report::read_polygon(&a.join(&name)).unwrap();
        let e = p.edges();
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                assert!(e[i].dir.cross(e[j].dir).abs() > 1e-6f64.sin());
            }
        }
    }
    let f = a.join("polygon_0003.json");
    let once = run(&["coincidences", "--input", f.to_str().unwrap()]).1;
    let twice = run(&["coincidences", "--input", f.to_str().unwrap()]).1;
    assert_eq!(once, twice);
}
