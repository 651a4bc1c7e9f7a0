use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bubble_cluster::cluster::shapes;
use bubble_cluster::io::write_cluster;
use tempfile::TempDir;

fn bubbles(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bubbles")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let o = bubbles(dir, args);
    assert_eq!(code(&o), 0, "{args:?}\n{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn solved_double_bubble(dir: &Path) {
    ok(dir, &["shape", "double-bubble", "--out", "init.json"]);
    ok(dir, &["solve", "--areas", "pi,pi", "--init", "init.json", "--out", "db.json", "--log", "db_log.csv"]);
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&bubbles(t.path(), &["frobnicate"])), 2);
    assert_eq!(code(&bubbles(t.path(), &["check", "missing.json"])), 2);
    fs::write(t.path().join("garbage.json"), "{not json").unwrap();
    assert_eq!(code(&bubbles(t.path(), &["check", "garbage.json"])), 2);
    ok(t.path(), &["shape", "disk", "--out", "disk.json"]);
    assert_eq!(code(&bubbles(t.path(), &["solve", "--areas", "pi,banana", "--init", "disk.json"])), 2);
}

#[test]
fn solve_is_reproducible_byte_for_byte() {
    let t = TempDir::new().unwrap();
    solved_double_bubble(t.path());
    let first = (fs::read(t.path().join("db.json")).unwrap(), fs::read(t.path().join("db_log.csv")).unwrap());
    solved_double_bubble(t.path());
    let second = (fs::read(t.path().join("db.json")).unwrap(), fs::read(t.path().join("db_log.csv")).unwrap());
    assert_eq!(first, second);
    assert!(String::from_utf8(first.1).unwrap().starts_with("iter,outer,energy"));
}

#[test]
fn check_accepts_minimizers_and_rejects_bad_angles() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["shape", "y2", "--out", "y2.json"]);
    ok(t.path(), &["check", "y2.json"]);
    solved_double_bubble(t.path());
    ok(t.path(), &["check", "db.json"]);

    // stretching keeps the legs straight but opens one angle
    let skew = shapes::steiner_y2(1.0, 32, 0.0).map_points(|p| bubble_cluster::Point::new(1.5 * p.x, p.y)).unwrap();
    write_cluster(&t.path().join("skew.json"), &skew).unwrap();
    let o = bubbles(t.path(), &["check", "skew.json"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
}

fn tsv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    let col = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    lines.map(|l| l.split('\t').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn diffeo_between_identical_clusters_is_trivial() {
    let t = TempDir::new().unwrap();
    solved_double_bubble(t.path());
    ok(t.path(), &["diffeo", "--source", "db.json", "--target", "db.json", "--out", "same.tsv"]);
    let text = fs::read_to_string(t.path().join("same.tsv")).unwrap();
    for col in ["psi", "tangential"] {
        assert!(tsv_column(&text, col).iter().all(|v| v.abs() <= 1e-12), "{col}: {text}");
    }
    for (s, i) in [("source_x", "image_x"), ("source_y", "image_y")] {
        let (a, b) = (tsv_column(&text, s), tsv_column(&text, i));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12));
    }
}

#[test]
fn diffeo_to_a_distant_cluster_fails() {
    let t = TempDir::new().unwrap();
    solved_double_bubble(t.path());
    let db = bubble_cluster::io::read_cluster(&t.path().join("db.json")).unwrap();
    write_cluster(&t.path().join("far.json"), &db.translated(bubble_cluster::Point::new(0.0, 0.5))).unwrap();
    let o = bubbles(t.path(), &["diffeo", "--source", "db.json", "--target", "far.json"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn converge_flags_a_mismatched_member_and_is_reproducible() {
    let t = TempDir::new().unwrap();
    solved_double_bubble(t.path());
    ok(t.path(), &["shape", "disk", "--out", "disk.json"]);
    let args = ["converge", "--limit", "db.json", "db.json", "disk.json", "--out", "report.csv"];
    ok(t.path(), &args);
    let first = fs::read_to_string(t.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0,ok,"));
    assert!(lines[2].starts_with("1,failed,"));
    ok(t.path(), &args);
    assert_eq!(first, fs::read_to_string(t.path().join("report.csv")).unwrap());
}

#[test]
fn render_writes_svg() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["shape", "double-bubble", "--r2", "0.7", "--out", "db.json"]);
    ok(t.path(), &["render", "db.json", "--out", "db.svg"]);
    let svg = fs::read_to_string(t.path().join("db.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}
