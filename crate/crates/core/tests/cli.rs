use std::path::Path;

use opsys::cli::{run_with, EXIT_LINEALITY, EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION_FAILED};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("opsys").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = run(args);
    let v = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out} {err}"));
    (code, v)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gram_sic3_entries_and_rank() {
    let (code, v) = run_json(&["gram", "--kind", "sic", "-d", "3"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "gram");
    assert!(v["version"].is_string());
    assert!(v["wall_time"].is_number());
    assert_eq!(v["config"]["gram"]["space"]["d"], 3);
    let r = &v["result"];
    assert_eq!(r["rank"], 9);
    let m = r["matrix"].as_array().unwrap();
    assert!((m[0][0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((m[0][1].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-12);
}

#[test]
fn gram_csv_export() {
    let (code, out, _) = run(&["gram", "-d", "2", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "p1,p2,p3,p4");
    let first: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    assert!((first - 0.5).abs() < 1e-15);
}

#[test]
fn thresholds_d2() {
    let (code, v) = run_json(&["thresholds", "-d", "2"]);
    assert_eq!(code, EXIT_OK);
    assert!((v["result"]["t_star"].as_f64().unwrap() - 8.0622).abs() < 1e-3);
}

#[test]
fn usage_errors_exit_4() {
    assert_eq!(run(&["nonsense"]).0, EXIT_USAGE);
    assert_eq!(run(&["gram", "--kind", "qubit"]).0, EXIT_USAGE);
    assert_eq!(run(&["thresholds", "--format", "csv"]).0, EXIT_USAGE);
    assert_eq!(run(&["mub-gen", "-d", "6"]).0, EXIT_USAGE);
    assert_eq!(run(&["verify", "--instance", "/nonexistent/instance.json"]).0, EXIT_USAGE);
    assert_eq!(run(&["member", "--coeffs", "1,0"]).0, EXIT_USAGE);
}

#[test]
fn help_exits_0() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("iterate"));
}

#[test]
fn config_file_precedence_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gram.cfg");
    std::fs::write(&cfg, "# gram config\nkind=sic\nd=3\n").unwrap();
    let (code, v) = run_json(&["gram", "--config", path_str(&cfg)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["result"]["d"], 3);
    let (_, v) = run_json(&["gram", "--config", path_str(&cfg), "-d", "2"]);
    assert_eq!(v["result"]["d"], 2);

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "colour=blue\n").unwrap();
    assert_eq!(run(&["gram", "--config", path_str(&bad)]).0, EXIT_USAGE);
}

#[test]
fn member_and_cnp_validate() {
    let (code, v) = run_json(&["member", "--coeffs", "1,0,0,0", "--level", "2"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["result"]["result"]["verdict"], "Inside");
    assert_eq!(v["result"]["validated"], true);
    let (code, v) = run_json(&["cnp", "--coeffs", "0,0,0,-1", "--p", "1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["result"]["result"]["verdict"], "Outside");
    assert_eq!(v["result"]["validated"], true);
}

#[test]
fn relation_holds_in_initial_cone() {
    let (code, v) = run_json(&["relation", "-d", "2", "--p", "1", "--x", "2"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["result"]["holds"], "Yes");
}

#[test]
fn planted_probe_exits_3() {
    let (code, v) = run_json(&["probe", "--directions", "10", "--plant", "1,-1,0,0", "--seed", "1"]);
    assert_eq!(code, EXIT_LINEALITY);
    assert_eq!(v["result"]["result"], "LinealityFound");
    assert_eq!(v["seed"], 1);
}

#[test]
fn instance_pipeline_and_verification_failure() {
    let dir = tempfile::tempdir().unwrap();
    let sic = dir.path().join("sic2.json");
    assert_eq!(run(&["sic-search", "-d", "2", "--seed", "3", "--out", path_str(&sic)]).0, EXIT_OK);
    let (code, v) = run_json(&["verify", "--instance", path_str(&sic)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["result"]["passed"], true);
    assert_eq!(run(&["pi-check", "--instance", path_str(&sic)]).0, EXIT_OK);
    assert_eq!(
        run(&["pi-check", "--instance", path_str(&sic), "--t0", "0.01", "--slope", "0.01"]).0,
        EXIT_VERIFICATION_FAILED
    );

    let mut raw: Value = serde_json::from_str(&std::fs::read_to_string(&sic).unwrap()).unwrap();
    let inst = &mut raw["result"]["instance"];
    inst["vectors"][0][0][0] = Value::from(inst["vectors"][0][0][0].as_f64().unwrap() + 0.05);
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, inst.to_string()).unwrap();
    assert_eq!(run(&["verify", "--instance", path_str(&broken)]).0, EXIT_VERIFICATION_FAILED);

    let mub = dir.path().join("mub3.json");
    assert_eq!(run(&["mub-gen", "-d", "3", "--out", path_str(&mub)]).0, EXIT_OK);
    let (code, v) = run_json(&["verify", "--instance", path_str(&mub), "--tol", "1e-10"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["result"]["kind"], "mub");
}

#[test]
fn short_iteration_replays_and_is_sound() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("iter.json");
    let args = ["iterate", "--nmax", "3", "--stages", "2", "--directions", "6", "--seed", "4"];
    let mut first = args.to_vec();
    first.extend(["--out", path_str(&rep)]);
    assert_eq!(run(&first).0, EXIT_OK);
    let a: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(a["stage_wall_time"].as_array().unwrap().len(), 3);
    let (_, b) = run_json(&args);
    assert_eq!(a["result"].to_string(), b["result"].to_string());
    assert_eq!(a["config"], b["config"]);

    let sic = dir.path().join("sic2.json");
    assert_eq!(run(&["sic-search", "-d", "2", "--out", path_str(&sic)]).0, EXIT_OK);
    let (code, v) = run_json(&["soundness", "--report", path_str(&rep), "--instance", path_str(&sic)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["result"]["violations"], 0);
    assert!(v["result"]["checked"].as_u64().unwrap() > 0);
}

#[test]
fn seed_defaults_to_env_then_zero() {
    let (_, v) = run_json(&["probe", "--directions", "2", "--ascent-steps", "0", "--nmax", "1"]);
    let expected = std::env::var("OPSYS_SEED").ok().and_then(|s| s.parse::<u64>().ok()).unwrap_or(0);
    assert_eq!(v["seed"], expected);
    assert_eq!(v["config"]["probe"]["seed"], expected);
    let (_, v) = run_json(&["thresholds"]);
    assert!(v["seed"].is_null());
}

#[test]
fn dmin_refute_with_concrete_model() {
    let dir = tempfile::tempdir().unwrap();
    let sic = dir.path().join("sic2.json");
    assert_eq!(run(&["sic-search", "-d", "2", "--out", path_str(&sic)]).0, EXIT_OK);
    let (code, v) = run_json(&["dmin-refute", "--coeffs=-1,0,0,0", "--level", "3", "--instance", path_str(&sic)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["result"]["outcome"]["result"], "Refutation");
    let (_, v) = run_json(&["dmin-refute", "--coeffs", "1,1,1,1", "--level", "3", "--instance", path_str(&sic), "--restarts", "2"]);
    assert_eq!(v["result"]["outcome"]["result"], "NoneFound");
}
