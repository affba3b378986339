use std::fs;
use std::process::Command;

fn sssnet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sssnet"))
}

#[test]
fn generate_then_run_on_files() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let status = sssnet()
        .args(["generate", "--n", "120", "--K", "2", "--p", "0.2", "--seed", "3", "--out"])
        .arg(&gen)
        .status()
        .unwrap();
    assert!(status.success());
    let edges = fs::read_to_string(gen.join("graph.tsv")).unwrap();
    assert!(edges.lines().all(|l| l.split('\t').count() == 3));
    assert_eq!(fs::read_to_string(gen.join("labels.tsv")).unwrap().lines().count(), 120);

    let out = dir.path().join("run");
    let output = sssnet()
        .args(["run", "--quiet", "--method", "SPONGE,BNC", "--runs", "2", "--edges"])
        .arg(gen.join("graph.tsv"))
        .arg("--labels")
        .arg(gen.join("labels.tsv"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    for f in ["results.csv", "summary.csv", "series.json", "config.json", "timings.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("SPONGE: test ARI"), "{stdout}");
}

#[test]
fn polarized_generator_reports_cluster_count() {
    let dir = tempfile::tempdir().unwrap();
    let output = sssnet()
        .args(["generate", "--model", "polarized", "--n", "300", "--r", "2", "--N", "60", "--p", "0.2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("5 clusters"));
}

#[test]
fn exit_code_reflects_failed_runs() {
    let dir = tempfile::tempdir().unwrap();
    let common = [
        "--quiet", "--n", "120", "--K", "2", "--p", "0.2", "--rho", "1", "--runs", "1", "--epochs", "3", "--method", "SSSNET,SPONGE", "--out",
    ];
    let ok = sssnet().arg("sweep").args(common).arg(dir.path().join("a")).args(["--axis", "hop", "--values", "1,2"]).status().unwrap();
    assert!(ok.success());
    let bad = sssnet().arg("sweep").args(common).arg(dir.path().join("b")).args(["--axis", "lr", "--values", "0.01,1e300"]).status().unwrap();
    assert_eq!(bad.code(), Some(1));
    // the failing point still produced complete tables
    let results = fs::read_to_string(dir.path().join("b/results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 2);
}

#[test]
fn flag_values_reach_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let status = sssnet()
        .args([
            "run", "--quiet", "--n", "100", "--K", "2", "--p", "0.2", "--rho", "1", "--eta", "0.05", "--hop", "2", "--hidden", "8", "--tau", "0.3",
            "--gamma-s", "20", "--gamma-t", "0.2", "--alpha", "0.5", "--lr", "0.02", "--seed-ratio", "0.2", "--epochs", "4", "--patience", "2",
            "--runs", "1", "--seed", "9", "--triplet-literal", "--balance-variant", "--method", "SSSNET", "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["data"]["kind"], "ssbm");
    assert_eq!(cfg["data"]["eta"], 0.05);
    assert_eq!(cfg["model"]["hidden"], 8);
    assert_eq!(cfg["model"]["balance"], true);
    assert_eq!(cfg["train"]["tau_pos"], 0.3);
    assert_eq!(cfg["train"]["gamma_s"], 20.0);
    assert_eq!(cfg["train"]["alpha"], 0.5);
    assert_eq!(cfg["train"]["triplet_literal"], true);
    assert_eq!(cfg["train"]["max_epochs"], 4);
    assert_eq!(cfg["seed_ratio"], 0.2);
    assert_eq!(cfg["seed"], 9);
}

#[test]
fn bad_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "0\t1\t1\n1\tx\t1\n").unwrap();
    let output = sssnet().args(["run", "--quiet", "--K", "2", "--edges"]).arg(&bad).arg("--out").arg(dir.path().join("out")).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("bad.tsv:2:"));
    assert!(!dir.path().join("out").exists());

    let output = sssnet().args(["run", "--method", "nope"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn resume_flag_reuses_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--quiet", "--n", "100", "--K", "2", "--p", "0.2", "--rho", "1", "--runs", "2", "--method", "SPONGE", "--out"];
    assert!(sssnet().args(args).arg(dir.path()).status().unwrap().success());
    let first = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let output = sssnet().args(args).arg(dir.path()).arg("--resume").args(["--workers", "2"]).output().unwrap();
    assert!(output.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("results.csv")).unwrap(), first);
    let output = sssnet().args(args).arg(dir.path()).arg("--resume").args(["--seed", "4"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("config"));
}
