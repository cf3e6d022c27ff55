//! Black-box tests of the command-line interface: exit codes, output
//! formats, determinism, config-file merging.

use std::io::Write;
use std::process::Command;

fn fairppv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairppv"))
}

#[test]
fn oracle_json_reproduces_reference_rows() {
    let out = fairppv()
        .args(["oracle", "--format", "json"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let fair_acc: Vec<f64> = rows
        .iter()
        .map(|r| r["fair_accuracy"].as_f64().unwrap())
        .collect();
    let expected = [0.814, 0.794, 0.781, 0.775, 0.778];
    for (got, want) in fair_acc.iter().zip(expected) {
        assert!((got - want).abs() < 0.002, "{got} vs {want}");
    }
}

#[test]
fn synthetic_json_output_is_deterministic() {
    let run = || {
        let out = fairppv()
            .args([
                "synthetic",
                "--p-y1",
                "0.5",
                "--n-train",
                "2000",
                "--n-test",
                "800",
                "--replications",
                "2",
                "--seed",
                "11",
                "--format",
                "json",
            ])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn condition_failure_exits_with_code_two() {
    let out = fairppv()
        .args([
            "synthetic",
            "--p-y1",
            "0.75",
            "--n-train",
            "1000",
            "--n-test",
            "500",
            "--replications",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fairness"), "stderr: {err}");
}

#[test]
fn bad_flag_exits_with_code_one() {
    let out = fairppv().args(["oracle", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let help = fairppv().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.toml");
    std::fs::write(
        &cfg_path,
        "p_y1 = 0.5\nn_train = 1500\nn_test = 600\nreplications = 2\nseed = 4\nformat = \"json\"\n",
    )
    .unwrap();
    let from_file = fairppv()
        .args(["synthetic", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(from_file.status.success());
    let v: serde_json::Value = serde_json::from_slice(&from_file.stdout).unwrap();
    assert_eq!(v["seed"].as_u64(), Some(4));

    // explicit flag beats the file value
    let overridden = fairppv()
        .args([
            "synthetic",
            "--config",
            cfg_path.to_str().unwrap(),
            "--seed",
            "9",
        ])
        .output()
        .unwrap();
    assert!(overridden.status.success());
    let text = String::from_utf8_lossy(&overridden.stdout);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["seed"].as_u64(), Some(9));
}

#[test]
fn out_flag_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = fairppv()
        .args([
            "sweep",
            "--parameter",
            "cost",
            "--values",
            "0.5",
            "--p-y1",
            "0.4",
            "--n-train",
            "1200",
            "--n-test",
            "500",
            "--replications",
            "2",
            "--format",
            "csv",
            "--out",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("label,kind,"));
    assert_eq!(text.lines().count(), 1 + 2 * 2);
}

#[test]
fn tabular_runs_on_a_small_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("toy.csv");
    let mut f = std::fs::File::create(&csv_path).unwrap();
    writeln!(f, "x,g,y").unwrap();
    // deterministic interleaved rows; score rises with x in both groups
    for i in 0..400 {
        let x = (i % 100) as f64 / 10.0;
        let g = if i % 2 == 0 { "a" } else { "b" };
        let y = ((x + (i % 7) as f64) > 7.0) as u8;
        writeln!(f, "{x},{g},{y}").unwrap();
    }
    drop(f);
    let out = fairppv()
        .args([
            "tabular",
            "--csv",
            csv_path.to_str().unwrap(),
            "--group-column",
            "g",
            "--label-column",
            "y",
            "--numeric-features",
            "x",
            "--replications",
            "3",
            "--epochs",
            "60",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"].as_str(), Some("tabular"));
    assert_eq!(
        v["settings"][0]["replications"].as_array().unwrap().len(),
        3
    );
}
