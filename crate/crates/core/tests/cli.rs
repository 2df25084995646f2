use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use expflow::cli::{load_config, parse_config, RunConfig};

fn expflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sphere_ode_writes_series_and_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let o = expflow(tmp.path(), &["sphere-ode", "-o", "ode", "--set", "sphere_ode.t1=0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("ode/sphere_ode.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,r"));
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 0.5);
    assert!((last[1] - 0.5f64.exp()).abs() < 1e-9);
    let schema = fs::read_to_string(tmp.path().join("ode/sphere_ode.schema.json")).unwrap();
    assert!(schema.contains("\"schema_version\": 1"));
    assert!(!tmp.path().join("ode/.lock").exists());
}

#[test]
fn config_file_and_resolved_echo() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "command = \"simulate\"\nseed = 7\n[speed]\nname = \"k\"\n[geometry]\nshape = \"ellipse\"\naxes = [1.5, 1.0, 1.0]\nvertices = 64\n[flow]\nt_end = 0.1\n",
    )
    .unwrap();
    let o = expflow(tmp.path(), &["--config", "run.toml", "-o", "sim"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("simulate: 11 frames"), "{}", stdout(&o));
    let out = tmp.path().join("sim");
    let resolved = fs::read_to_string(out.join("resolved_config.toml")).unwrap();
    let echoed = parse_config(&resolved, &[]).unwrap();
    let original = load_config(Some(&cfg), &["output_dir=\"sim\"".into()]).unwrap();
    assert_eq!(echoed, original);
    assert_eq!(fs::read_dir(out.join("frames")).unwrap().count(), 12);
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("frames/index.json")).unwrap()).unwrap();
    assert_eq!(index["frames"].as_array().unwrap().len(), 11);
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("t,vertices,volume,rho_minus,rho_plus,min_curvature,max_curvature\n"));
    let log = fs::read_to_string(out.join("run.log")).unwrap();
    assert!(log.ends_with("exit 0\n"));
}

#[test]
fn invalid_configuration_exits_1_with_field() {
    let tmp = tempfile::tempdir().unwrap();
    let o = expflow(tmp.path(), &["simulate", "--set", "speed.name=\"H^alpha\"", "--set", "speed.alpha=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("speed.alpha"), "{}", stderr(&o));

    let o = expflow(tmp.path(), &["simulate", "--set", "geometry.shape=\"mesh\"", "--set", "geometry.path=\"nope.txt\""]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.txt"), "{}", stderr(&o));

    let o = expflow(tmp.path(), &["simulate", "--set", "flow.bogus=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));

    let o = expflow(tmp.path(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = expflow(tmp.path(), &["simulate", "-o", "sq", "--set", "geometry.shape=\"square\""]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("cone"), "{}", stderr(&o));
    let log = fs::read_to_string(tmp.path().join("sq/run.log")).unwrap();
    assert!(log.ends_with("exit 3\n"), "{log}");
}

#[test]
fn locked_output_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir(tmp.path().join("busy")).unwrap();
    fs::write(tmp.path().join("busy/.lock"), "").unwrap();
    let o = expflow(tmp.path(), &["sphere-ode", "-o", "busy"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("locked"), "{}", stderr(&o));
}

#[test]
fn classification_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str, seed: &str| {
        let o = expflow(
            tmp.path(),
            &["classify-speed", "-o", dir, "--set", "speed.name=\"H+K\"", "--set", "speed.dim=2", "--set", "geometry.shape=\"icosphere\"", "--set", seed],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read_to_string(tmp.path().join(dir).join("classification.json")).unwrap()
    };
    let a = run("a", "seed=3");
    let b = run("b", "seed=3");
    let c = run("c", "seed=4");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.contains("\"verdict\": \"Ancient\""), "{a}");
    assert!(a.contains("sampled pass"));
}

#[test]
fn reflect_audit_reports_per_plane() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("reflect.toml");
    fs::write(
        &cfg,
        "command = \"reflect-audit\"\n[geometry]\nshape = \"ellipse\"\nvertices = 128\n[flow]\nt_end = 0.2\n\n[[audit.planes]]\nnormal = [1.0, 0.0, 0.0]\noffset = 0.3\n\n[[audit.planes]]\nnormal = [1.0, 0.0, 0.0]\noffset = -0.3\n",
    )
    .unwrap();
    let o = expflow(tmp.path(), &["-c", "reflect.toml", "-o", "out"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("PASS"));
    assert!(lines[1].starts_with("FAIL"));
    let report = fs::read_to_string(tmp.path().join("out/reflect_report.json")).unwrap();
    assert!(report.contains("schema_version"));
}

#[test]
fn rigidity_audit_on_sphere_family_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = expflow(
        tmp.path(),
        &["rigidity-audit", "-o", "rig", "--set", "geometry.shape=\"sphere-family\"", "--set", "geometry.family_frames=301"],
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("rig/rigidity_report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["schema_version"], 1);
}

#[test]
fn defaults_validate() {
    RunConfig::default().validate().unwrap();
}
