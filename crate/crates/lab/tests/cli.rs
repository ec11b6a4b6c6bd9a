use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_esprit-lab"))
}

fn workdir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("esprit-lab-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn generate_then_estimate() {
    let dir = workdir("estimate");
    let s = scenario(&dir, r#"{"freqs":[0.1,0.5,0.8],"n_sensors":10,"snapshots":100,"noise_sigma":0.0,"seed":4}"#);
    let data = dir.join("data.txt");
    run(bin().arg("generate").arg(&s).arg("--out").arg(&data));
    let (cfg, y) = esprit_lab::format::load_data(&data).unwrap();
    assert_eq!(y.shape(), (10, 100));
    assert_eq!(cfg.seed, 4);

    for args in [vec!["--method", "esprit"], vec!["--method", "music", "--smoothing", "fbss", "--subarray", "6"]] {
        let out: serde_json::Value = serde_json::from_str(&run(bin().arg("estimate").arg(&data).args(&args))).unwrap();
        let md = out["md"].as_f64().unwrap();
        assert!(md <= 1e-6, "{args:?}: {md}");
        assert_eq!(out["freqs"].as_array().unwrap().len(), 3);
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bound_reports_every_family() {
    let dir = workdir("bound");
    let s = scenario(
        &dir,
        r#"{"freqs":[0.1,0.2,0.5,0.6,0.7,0.9],"groups":[3,2,1],"n_sensors":10,"subarray_m":7,"smoothing_p":4,
            "snapshots":1000,"noise_sigma":0.1,"seed":1}"#,
    );
    let out: serde_json::Value = serde_json::from_str(&run(bin().arg("bound").arg(&s).args(["--smoothing", "fbss"]))).unwrap();
    for key in ["subspace", "md", "md_scaling"] {
        assert!(out[key]["value"].is_number(), "{key}: {}", out[key]);
    }
    assert!(out["hadamard"]["prop1"].is_number());
    assert!(out["resolution"]["snapshot_threshold"].is_number());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn experiment_and_slope() {
    let dir = workdir("experiment");
    let csv = dir.join("exp2.csv");
    run(bin()
        .args(["experiment", "exp2", "--trials", "10", "--seed", "3", "--values", "100,1000,10000", "--out"])
        .arg(&csv));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with(
        "sweep_name,sweep_value,method,smoothing,mean_md,median_md,failures,bound_value,bound_applicable,probability_floor,trials,seed\n"
    ));
    assert_eq!(text.lines().count(), 4);
    assert!(dir.join("exp2.trials.csv").exists() && dir.join("exp2.summary.json").exists());
    let fit: serde_json::Value = serde_json::from_str(&run(bin().arg("slope").arg(&csv))).unwrap();
    let slope = fit["fit"]["slope"].as_f64().unwrap();
    assert!((-0.7..=-0.3).contains(&slope), "{slope}");

    let out = bin().arg("slope").arg(&csv).args(["--y", "nope"]).output().unwrap();
    assert!(!out.status.success());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn unknown_preset_fails() {
    let out = bin().args(["experiment", "exp7", "--trials", "1"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exp7"));
}
