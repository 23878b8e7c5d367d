use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn molscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_molscale"))
        .args(args)
        .env_remove("MOLSCALE_SEED")
        .output()
        .unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_molscale"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn fit_then_frontier_without_transformation() {
    let dir = tempfile::tempdir().unwrap();
    let runs = fixture("synthetic_runs.jsonl");
    let o = molscale(&["fit", "--runs", s(&runs), "--repr", "SMILES", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = dir.path().join("fit_SMILES.json");
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&fit).unwrap()).unwrap();
    for key in [
        "representation",
        "alpha",
        "beta",
        "mae",
        "rmse",
        "n",
        "L_inf",
        "k_P",
        "k_D",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let o = molscale(&[
        "frontier",
        "--fit",
        s(&fit),
        "--verify",
        "--levels",
        "12",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("frontier_SMILES.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert!(dir.path().join("frontier_SMILES.svg").exists());
    assert!(dir.path().join("frontier_SMILES_verify.csv").exists());
}

#[test]
fn flops_multiplier_scales_compute_column() {
    let dir = tempfile::tempdir().unwrap();
    let fit = dir.path().join("fit.json");
    std::fs::write(
        &fit,
        r#"{"representation":"SAFE","alpha":0.1,"beta":0.3,"mae":0,"rmse":0,"n":32,"L_inf":0.5,"k_P":2,"k_D":20,"converged":true,"restarts_used":1}"#,
    )
    .unwrap();
    let o = molscale(&[
        "frontier",
        "--fit",
        s(&fit),
        "--levels",
        "2",
        "--flops-per-token",
        "6",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("frontier_SAFE.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("600000000000000,"), "{csv}");
}

#[test]
fn usage_errors_exit_2() {
    let o = molscale(&["fit", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(molscale(&["nonsense"]).status.code(), Some(2));
    assert_eq!(molscale(&["encode", "--repr", "XYZ"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_molscale"))
        .args(["report", "--runs", "x", "--out", "y"])
        .env("MOLSCALE_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn data_errors_exit_1_with_json_and_no_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"schema\":2}\nnot json\n").unwrap();
    let out = dir.path().join("o");
    let o = molscale(&["fit", "--runs", s(&bad), "--repr", "SMILES", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "run_log");
    assert_eq!(err["details"].as_array().unwrap().len(), 2);
    assert_eq!(err["details"][1]["line"], 2);
    assert!(!out.exists());

    let o = molscale(&[
        "report",
        "--runs",
        s(&dir.path().join("missing.jsonl")),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "io");
}

#[test]
fn infeasible_isoloss_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let fit = dir.path().join("fit.json");
    std::fs::write(
        &fit,
        r#"{"representation":"SMILES","alpha":0.1,"beta":0.3,"mae":0,"rmse":0,"n":32,"L_inf":0.5,"k_P":2,"k_D":20,"converged":true,"restarts_used":1}"#,
    )
    .unwrap();
    let o = molscale(&["isoloss", "--fit", s(&fit), "--target", "0.5", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let o = molscale(&[
        "isoloss",
        "--fit",
        s(&fit),
        "--target",
        "1.0",
        "--sizes",
        "1e3,1e7,1e9",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("isoloss_SMILES.json")).unwrap()).unwrap();
    assert_eq!(v["omitted"].as_array().unwrap().len(), 1);
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
}

#[test]
fn encode_decode_line_protocol() {
    let input = "CCO\nnot a molecule\nc1ccccc1C(=O)O\n";
    for repr in ["SMILES", "DeepSMILES", "SAFE", "FragSeq", "FragLink"] {
        let enc = with_stdin(&["encode", "--repr", repr], input);
        assert_eq!(enc.status.code(), Some(1), "{repr}");
        let text = String::from_utf8(enc.stdout).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "");
        let err: serde_json::Value =
            serde_json::from_str(String::from_utf8_lossy(&enc.stderr).lines().next().unwrap()).unwrap();
        assert_eq!(err["line"], 2);
        let dec = with_stdin(&["decode", "--repr", repr], &format!("{}\n{}\n", lines[0], lines[2]));
        assert!(dec.status.success(), "{repr}: {}", String::from_utf8_lossy(&dec.stderr));
        assert_eq!(
            String::from_utf8(dec.stdout).unwrap(),
            "CCO\nO=C(O)c1ccccc1\n",
            "{repr}"
        );
    }
}

#[test]
fn count_tokens_and_budget() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.smi");
    std::fs::write(&corpus, "CCO\nC\nc1ccccc1\n").unwrap();
    let o = molscale(&["count-tokens", "--repr", "SMILES", "--input", s(&corpus)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // CCO + eos, C + eos, six ring tokens plus two labels + eos
    assert_eq!(v["tokens"], 4 + 2 + 9);
    assert_eq!(v["molecules"], 3);

    let o = molscale(&[
        "build-budget",
        "--repr",
        "SMILES",
        "--target",
        "5",
        "--input",
        s(&corpus),
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("budget_SMILES.json")).unwrap()).unwrap();
    assert_eq!(m["molecule_count"], 2);
    assert_eq!(m["actual_tokens"], 6);
    let o = molscale(&[
        "build-budget",
        "--repr",
        "SMILES",
        "--target",
        "500",
        "--input",
        s(&corpus),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn metrics_csv_columns_and_grouping() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen.jsonl");
    std::fs::write(
        &gen,
        concat!(
            "{\"line\":\"CCO\",\"temperature\":0.7,\"top_k\":50}\n",
            "{\"line\":\"CCN\",\"temperature\":0.7,\"top_k\":50}\n",
            "{\"line\":\"C1CC\",\"temperature\":1.0,\"top_k\":50}\n",
            "{\"line\":\"CCCC\",\"temperature\":1.0,\"top_k\":50}\n",
        ),
    )
    .unwrap();
    let reference = dir.path().join("ref.smi");
    std::fs::write(&reference, "OCC\n").unwrap();
    let o = molscale(&[
        "metrics",
        "--input",
        s(&gen),
        "--repr",
        "SMILES",
        "--reference",
        s(&reference),
        "--group-by",
        "sampling",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "sampling,Validity,Uniqueness,Diversity,Novelty,total,valid,unique,notes"
    );
    assert!(lines[1].starts_with("T=0.7;k=50,1.0000,1.0000,"), "{csv}");
    assert!(lines[1].contains(",0.5000,2,2,2,"), "{csv}");
    assert!(lines[2].starts_with("T=1;k=50,0.5000,1.0000,,1.0000,2,1,1,"), "{csv}");
}

#[test]
fn seed_env_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let runs = fixture("synthetic_runs.jsonl");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"restarts": 8, "seed": 1}"#).unwrap();
    let run = |seed: Option<&str>, out: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_molscale"));
        c.args([
            "fit",
            "--runs",
            s(&runs),
            "--repr",
            "SAFE",
            "--config",
            s(&cfg),
            "--out",
            s(&dir.path().join(out)),
        ]);
        match seed {
            Some(v) => c.env("MOLSCALE_SEED", v),
            None => c.env_remove("MOLSCALE_SEED"),
        };
        assert!(c.output().unwrap().status.success());
        std::fs::read(dir.path().join(out).join("fit_SAFE.json")).unwrap()
    };
    let a = run(None, "a");
    let b = run(Some("1"), "b");
    assert_eq!(a, b);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"restart": 8}"#).unwrap();
    let o = molscale(&[
        "fit",
        "--runs",
        s(&runs),
        "--repr",
        "SAFE",
        "--config",
        s(&bad),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "config");
}

#[test]
fn envelope_and_rho_fit_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let runs = fixture("synthetic_runs.jsonl");
    let o = molscale(&[
        "envelope",
        "--runs",
        s(&runs),
        "--repr",
        "FragSeq",
        "--monotone",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("envelope_FragSeq.csv")).unwrap();
    let losses: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(losses.windows(2).all(|w| w[1] <= w[0]));

    let fit = dir.path().join("fit.json");
    std::fs::write(
        &fit,
        r#"{"representation":"DeepSMILES","alpha":0.0588,"beta":0.3624,"mae":0,"rmse":0,"n":32,"L_inf":0.3,"k_P":1,"k_D":1,"converged":true,"restarts_used":1}"#,
    )
    .unwrap();
    let o = molscale(&["rho-fit", "--fit", s(&fit), "--out", s(dir.path())]);
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("rho_DeepSMILES.json")).unwrap()).unwrap();
    assert!((v["fit"]["s"].as_f64().unwrap() + 0.7208).abs() < 1e-4);
}
