use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use attractor_lab::manifest::{read_manifest, sha256_hex, MANIFEST_NAME, TIMESTAMP_PREFIX};

const SIMULATE: &str = r#"
[basis]
modes = 8

[damping]
kind = "linear"
k = 0.0

[nonlinearity]
kind = "zero"

[solver]
dt = 0.01

[experiment]
kind = "simulate"
horizon = 2.0
initial = { u = [1.0, 0.5] }
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_attractor-lab"));
    c.env_remove("ATTRACTOR_LAB_OUT");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    bin().args(args).arg(cfg).arg("--out").arg(out).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn smallest_run_writes_three_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SIMULATE);
    let out = dir.path().join("out");
    let o = run(&["run"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));

    let manifest = fs::read_to_string(out.join(MANIFEST_NAME)).unwrap();
    assert!(manifest.starts_with(TIMESTAMP_PREFIX));
    let entries = read_manifest(&manifest);
    let names: Vec<&str> = entries.iter().map(|(_, n)| n.as_str()).collect();
    assert_eq!(names, ["config.toml", "trajectory.csv", "energy.csv"]);
    for (hash, name) in &entries {
        assert_eq!(*hash, sha256_hex(&fs::read(out.join(name)).unwrap()));
    }

    let csv = fs::read_to_string(out.join("energy.csv")).unwrap();
    assert!(csv.contains(&format!("# config_sha256: {}", sha256_hex(SIMULATE.as_bytes()))));
    assert!(csv.contains("# seed: none"));
    assert!(csv.contains("# modules: attractor-core 0.1.0; attractor-lab 0.1.0"));
}

#[test]
fn missing_dt_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &SIMULATE.replace("dt = 0.01", ""));
    let o = run(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'solver.dt'"), "{}", stderr(&o));
}

#[test]
fn unknown_field_and_bad_type_are_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &SIMULATE.replace("modes = 8", "modes = -3"));
    let o = run(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'basis.modes'"), "{}", stderr(&o));
}

#[test]
fn blow_up_is_a_numerical_abort() {
    // RK4 far outside its stability region on the top modes
    let text = SIMULATE
        .replace("modes = 8", "modes = 32")
        .replace("dt = 0.01", "dt = 0.5")
        .replace("horizon = 2.0", "horizon = 100.0")
        .replace("u = [1.0, 0.5]", &format!("u = [{}1.0]", "0.0, ".repeat(31)));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &text);
    let o = run(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let msg = stderr(&o);
    assert!(msg.contains("numerical abort") && msg.contains("config_sha256="), "{msg}");
}

#[test]
fn audit_of_anti_damping_reports_failure_and_exits_zero() {
    let text = SIMULATE.replace("k = 0.0", "k = -1.0");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &text);
    let out = dir.path().join("out");
    let o = run(&["audit"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("monotone: FAILED"), "{stdout}");
    let csv = fs::read_to_string(out.join("audit.csv")).unwrap();
    assert!(csv.contains("linear(k=-1),check,monotone,FAILED"));
    assert!(csv.contains("energy_lower_c0"));
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SIMULATE);
    let target = dir.path().join("from-env");
    let o = bin().env("ATTRACTOR_LAB_OUT", &target).arg("run").arg(&cfg).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join(MANIFEST_NAME).exists());
}

#[test]
fn plot_of_conserved_energy_is_flat_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SIMULATE);
    let out = dir.path().join("out");
    assert!(run(&["run"], &cfg, &out).status.success());
    let csv = out.join("energy.csv");
    let mut svgs = Vec::new();
    for name in ["a.svg", "b.svg"] {
        let target = dir.path().join(name);
        let o = bin().args(["plot", "--kind", "energy"]).arg(&csv).arg("-o").arg(&target).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        svgs.push(fs::read_to_string(&target).unwrap());
    }
    assert_eq!(svgs[0], svgs[1]);
    // the annotated spread is at round-off level
    let note = svgs[0].split("max E0 - min E0 = ").nth(1).unwrap();
    let spread: f64 = note.split('<').next().unwrap().parse().unwrap();
    assert!(spread < 1e-10, "{spread}");
}

#[test]
fn plot_of_decaying_energy_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &SIMULATE.replace("k = 0.0", "k = 1.0"));
    let out = dir.path().join("out");
    assert!(run(&["run"], &cfg, &out).status.success());
    let o = bin().args(["plot", "--kind", "energy"]).arg(out.join("energy.csv")).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(out.join("energy.svg")).unwrap();
    let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    // SVG y grows downwards, so a decaying curve has non-decreasing y
    let ys: Vec<f64> = points.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(ys.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn plot_rejects_unknown_schema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "x.csv", "# seed: 1\na,b\n1,2\n");
    let o = bin().args(["plot", "--kind", "energy"]).arg(&csv).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn point_attractor_cloud_stays_in_the_small_box() {
    let text = r#"
seed = 3
plots = true

[basis]
modes = 8

[damping]
kind = "linear"

[nonlinearity]
kind = "linear"

[solver]
dt = 0.02
record_stride = 10

[experiment]
kind = "attractor"
radius = 2.0
count = 4
sample_times = [30.0, 40.0, 50.0, 60.0]
checkpoints = [5.0, 10.0, 20.0]
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", text);
    let out = dir.path().join("out");
    let o = run(&["--workers", "2", "run"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(out.join("cloud.svg")).unwrap();
    assert!(svg.contains("<circle"));
    let csv = fs::read_to_string(out.join("cloud.csv")).unwrap();
    let (_, rows) = attractor_core::report::read_table(&csv).unwrap();
    let u1 = rows[0].iter().position(|c| c == "u1").unwrap();
    for r in &rows[1..] {
        assert!(r[u1].parse::<f64>().unwrap().abs() < 1e-3);
        assert!(r[u1 + 1].parse::<f64>().unwrap().abs() < 1e-3);
    }
}

#[test]
fn randomized_run_requires_seed() {
    let text = SIMULATE.replace(
        "kind = \"simulate\"\nhorizon = 2.0\ninitial = { u = [1.0, 0.5] }",
        "kind = \"absorbing\"\nradius = 1.0\ncount = 2\nhorizon = 1.0",
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &text);
    let o = run(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'seed'"));
}
