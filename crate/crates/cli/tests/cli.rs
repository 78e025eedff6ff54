use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hammersley"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hammersley-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn sort_prints_the_root_count() {
    let dir = scratch("sort");
    let f = write(&dir, "worked.txt", "# label,lives\n0.1,2\n0.8,3\n0.4,1\n\n0.2,2\n0.5,2\n0.15,3\n");
    let o = run(&["sort", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "3");

    let empty = write(&dir, "empty.txt", "");
    let o = run(&["sort", empty.to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), "0");

    let forest = dir.join("forest.json");
    let o = run(&["--out", forest.to_str().unwrap(), "sort", f.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(forest).unwrap()).unwrap();
    assert!(v.is_object() || v.is_array());
}

#[test]
fn sort_rejects_bad_input() {
    let dir = scratch("bad");
    let dup = write(&dir, "dup.txt", "0.5,1\n0.5,2\n");
    assert_ne!(run(&["sort", dup.to_str().unwrap()]).status.code(), Some(0));
    let zero = write(&dir, "zero.txt", "0.5,0\n");
    let o = run(&["sort", zero.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
    let bare = write(&dir, "bare.txt", "0.5\n");
    assert_eq!(run(&["sort", bare.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["sort", "--n", "5"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn random_lives_are_seeded() {
    let dir = scratch("seeded");
    let f = write(&dir, "labels.txt", "0.3\n0.6\n0.1\n0.8\n0.5\n0.2\n0.9\n0.05\n");
    let a = run(&["--seed", "7", "sort", f.to_str().unwrap(), "--dist", "geom:0.5"]);
    let b = run(&["--seed", "7", "sort", f.to_str().unwrap(), "--dist", "geom:0.5"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let c = run(&["sort", "--n", "50", "--dist", "dirac:2"]);
    assert!(stderr(&c).contains("seed: "), "{}", stderr(&c));
}

#[test]
fn simulate_and_render() {
    let dir = scratch("sim");
    let rec = dir.join("rec.json");
    let o = run(&["--seed", "3", "--out", rec.to_str().unwrap(), "simulate", "--alpha", "0.5", "--lambda", "1", "--t", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = dir.join("rec.svg");
    let o = run(&["--out", svg.to_str().unwrap(), "render", rec.to_str().unwrap(), "--color-trees"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let body = std::fs::read_to_string(&svg).unwrap();
    assert!(body.starts_with("<svg") || body.starts_with("<?xml"));
    assert!(body.trim_end().ends_with("</svg>"));

    let csv = dir.join("rec.csv");
    let o = run(&["--seed", "3", "--format", "csv", "--out", csv.to_str().unwrap(), "simulate", "--alpha", "0.5"]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("vertex,label"));

    let o = run(&["--seed", "3", "--out", dir.join("roots.json").to_str().unwrap(), "roots", "--dist", "dirac:2", "--t", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn manifests_are_validated() {
    let dir = scratch("manifest");
    let m = write(&dir, "zero.toml", "experiment = \"heapable_probability\"\nreplicas = 0\n");
    let o = run(&["experiment", "--manifest", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let m = write(
        &dir,
        "unknown.toml",
        "experiment = \"heapable_probability\"\ncolour = 1\n[params]\nflavour = 2\n",
    );
    let o = run(&["experiment", "--manifest", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("colour") && err.contains("flavour"), "{err}");
}

#[test]
fn identical_manifests_give_identical_reports() {
    let dir = scratch("repro");
    let body = "experiment = \"heapable_probability\"\nseed = 11\nreplicas = 20000\n[params]\nn = 5\n[outputs]\nreport = \"r.json\"\n";
    let m = write(&dir, "m.toml", body);
    let o = run(&["experiment", "--manifest", m.to_str().unwrap()]);
    assert!(o.status.code().is_some_and(|c| c == 0 || c == 2), "{}", stderr(&o));
    let first = std::fs::read(dir.join("r.json")).unwrap();
    assert!(dir.join("r.json.run.json").exists());
    run(&["experiment", "--manifest", m.to_str().unwrap()]);
    assert_eq!(first, std::fs::read(dir.join("r.json")).unwrap());
}

#[test]
fn stationarity_manifest_passes() {
    let dir = scratch("stat");
    let m = write(
        &dir,
        "s.toml",
        "experiment = \"stationarity_suite\"\nseed = 2\nreplicas = 10000\n[params]\nlambda = 1.0\nalpha = 0.5\n[outputs]\nreport = \"s.json\"\nchecks_csv = \"s.csv\"\n",
    );
    let o = run(&["experiment", "--manifest", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("stationarity_suite: PASS"));
    assert!(std::fs::read_to_string(dir.join("s.csv")).unwrap().lines().count() > 1);
}

#[test]
fn defaults_are_printed() {
    let o = run(&["experiment", "tagged_particle", "--defaults"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.get("sample_times").is_some());
}
