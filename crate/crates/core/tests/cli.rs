use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use serde_json::Value;
use xxz_sov::operators::{transfer_antiperiodic, OperatorDump};
use xxz_sov::params::ModelParams;

const BIN: &str = env!("CARGO_BIN_EXE_xxz-sov");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(BIN).args(args).env(key, value).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().expect("object").keys().cloned().collect()
}

fn golden() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/schemas.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn strings(v: &Value) -> BTreeSet<String> {
    v.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const CASES: [(&str, &str); 5] = [
    ("spectrum", "n2_generic"),
    ("scalar-product", "n2_generic"),
    ("form-factor", "n2_sigma_z"),
    ("hamiltonian", "n2_homogeneous"),
    ("verify", "n2_generic"),
];

#[test]
fn json_and_csv_schemas_match_golden() {
    let g = golden();
    let dir = tempfile::tempdir().unwrap();
    for (command, cfg) in CASES {
        let cfg = config(cfg);
        let o = run(&[command, "--config", cfg.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{command}: {}", String::from_utf8_lossy(&o.stderr));
        let v = json(&o);
        let schema = &g[command];
        assert_eq!(keys(&v), strings(&schema["json"]), "{command}");
        let records = v[schema["record_key"].as_str().unwrap()].as_array().unwrap();
        assert!(!records.is_empty());
        for r in records {
            assert_eq!(keys(r), strings(&schema["record"]), "{command}");
        }
        assert_eq!(v["command"], command);

        let out = dir.path().join(format!("{command}.csv"));
        let o = run(&[command, "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
        match schema["csv"].as_str() {
            Some(header) => {
                assert_eq!(code(&o), 0);
                let text = std::fs::read_to_string(&out).unwrap();
                assert_eq!(text.lines().next().unwrap(), header, "{command}");
                assert_eq!(text.lines().count(), records.len() * if command == "spectrum" { 2 } else { 1 } + 1);
            }
            None => assert_eq!(code(&o), 2, "{command} has no CSV form"),
        }
    }
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    for (command, cfg) in CASES {
        let cfg = config(cfg);
        let args = [command, "--config", cfg.to_str().unwrap(), "--seed", "17"];
        let a = run_env(&args, "XXZ_SOV_THREADS", "1");
        let b = run_env(&args, "XXZ_SOV_THREADS", "4");
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{command}");
    }
}

#[test]
fn output_file_equals_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("n3_massless");
    let out = dir.path().join("spectrum.json");
    let a = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    let b = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--seed", "3", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&b), 0);
    assert!(b.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
}

#[test]
fn verify_examples_pass() {
    let o = run(&["verify", "--config", config("n3_massless").to_str().unwrap(), "--seed", "7"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["pass"], true);
    let names: BTreeSet<String> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_string()).collect();
    for required in ["form_factor_sigma_minus", "form_factor_sigma_z", "scalar_products", "eigenstates", "normality"] {
        assert!(names.contains(required), "{required}");
    }

    let o = run(&["verify", "--config", config("n2_homogeneous").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["checks"].as_array().unwrap().iter().any(|c| c["name"] == "hamiltonian"));

    let o = run(&["verify", "--config", config("n2_root_of_unity").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["checks"].as_array().unwrap().iter().any(|c| c["name"] == "root_of_unity"));
}

#[test]
fn overall_pass_is_the_conjunction_of_checks() {
    for cfg in ["n1_generic", "n3_massive", "n4_massless"] {
        let o = run(&["verify", "--config", config(cfg).to_str().unwrap()]);
        let v = json(&o);
        let all = v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true);
        assert_eq!(v["pass"], all);
        assert_eq!(code(&o), if all { 0 } else { 4 });
    }
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = write_config(dir.path(), "bad.json", "{ not json");
    let unknown = write_config(
        dir.path(),
        "unknown.json",
        r#"{"n_sites":1,"q":{"re":1.2,"im":0.3},"inhomogeneities":[{"re":1,"im":0}],"regime":"generic","extra":1}"#,
    );
    let massless_complex = write_config(
        dir.path(),
        "massless.json",
        r#"{"n_sites":1,"q":{"re":0.6,"im":0.8},"inhomogeneities":[{"re":1,"im":0.5}],"regime":"massless"}"#,
    );
    let nine: Vec<String> = (0..9).map(|k| format!(r#"{{"re":{},"im":0}}"#, 0.6 * 1.25f64.powi(k))).collect();
    let large = write_config(
        dir.path(),
        "large.json",
        &format!(r#"{{"n_sites":9,"q":{{"re":0.8,"im":0.6}},"inhomogeneities":[{}],"regime":"massless"}}"#, nine.join(",")),
    );
    let missing = dir.path().join("missing.json");
    let generic = config("n2_generic");
    let g = generic.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["spectrum", "--config", bad_json.to_str().unwrap()],
        vec!["spectrum", "--config", unknown.to_str().unwrap()],
        vec!["spectrum", "--config", massless_complex.to_str().unwrap()],
        vec!["spectrum", "--config", large.to_str().unwrap()],
        vec!["spectrum", "--config", missing.to_str().unwrap()],
        vec!["no-such-command", "--config", g],
        vec!["form-factor", "--config", g],
        vec!["form-factor", "--config", g, "--operator", "sigma_x"],
        vec!["form-factor", "--config", g, "--operator", "sigma_minus", "--sites", "3"],
        vec!["hamiltonian", "--config", g],
        vec!["spectrum", "--config", g, "--tol", "-1"],
        vec!["spectrum", "--config", g, "--output", "out.txt"],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    let o = run_env(&["spectrum", "--config", g], "XXZ_SOV_THREADS", "zero");
    assert_eq!(code(&o), 2);
}

#[test]
fn sov_violation_exits_3_and_names_the_pair() {
    let cfg = config("sov_violation");
    for command in ["spectrum", "scalar-product", "verify"] {
        let o = run(&[command, "--config", cfg.to_str().unwrap()]);
        if command == "verify" {
            // Operator-level checks still run; SOV-dependent ones and the
            // reconstructions (poles at η_2/q = η_1) are skipped.
            assert_eq!(code(&o), 0);
            let skipped = strings(&json(&o)["skipped"]);
            for name in ["sov_bases", "form_factors", "reconstruction_periodic_1", "sigma_x_string"] {
                assert!(skipped.contains(name), "{name}");
            }
            continue;
        }
        assert_eq!(code(&o), 3, "{command}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("eta_2 = q^1 eta_1"), "{err}");
    }
}

#[test]
fn failed_comparison_exits_4() {
    let cfg = config("n2_sigma_z");
    let o = run(&["form-factor", "--config", cfg.to_str().unwrap(), "--tol", "1e-300"]);
    assert_eq!(code(&o), 4);
    let v = json(&o);
    assert_eq!(v["pass"], false);
}

#[test]
fn operator_and_basis_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("n2_generic");
    let o = run(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--dump-operator",
        "0.7,-0.2",
        "--dump-sov-basis",
        "--dump-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(dir.path().join("transfer_operator.json")).unwrap();
    let dump: OperatorDump = serde_json::from_str(&text).unwrap();
    let params: ModelParams = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    let exact = transfer_antiperiodic(&params, Complex64::new(0.7, -0.2)).unwrap();
    assert!(dump.to_matrix().max_abs_diff(&exact) < 1e-15 * exact.max_abs().max(1.0));

    let basis: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sov_basis.json")).unwrap()).unwrap();
    for side in ["left", "right"] {
        assert!(basis[side].is_object(), "{side}");
    }
}
