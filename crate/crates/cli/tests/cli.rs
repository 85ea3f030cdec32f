use std::path::Path;
use std::process::{Command, Output};

fn cmcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmcs")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const GROUND: &str = r#"
[model]
kind = "tim"
length = 6
preset = "afm"
[region]
length = 2
[experiment]
observables = ["sz:3", "szsz:3,4"]
mcmc_samples = [200]
cmcs_samples = [30]
replicates = 2
"#;

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().next().expect("an error line");
    serde_json::from_str(line).expect("error line is JSON")
}

#[test]
fn ground_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GROUND);
    let out_path = dir.path().join("out.csv");
    let out = cmcs(&["ground", "--config", &cfg, "--seed", "4", "--out", out_path.to_str().unwrap(), "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("point,param,param_value,observable,sites,method,n_s,replicate,seed,"));
    // 2 observables x 2 methods x 1 sample size x (2 replicates + mean)
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3);
}

#[test]
fn seed_flag_controls_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GROUND);
    let run = |seed: &str, name: &str| {
        let p = dir.path().join(name);
        let out = cmcs(&["ground", "--config", &cfg, "--seed", seed, "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("7", "a.csv"), run("7", "b.csv"));
    assert_ne!(run("7", "a.csv"), run("8", "c.csv"));
}

#[test]
fn thermal_and_sweep_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
        [model]
        kind = "blbq"
        length = 4
        preset = "aklt"
        [mode]
        betas = [0.5]
        [region]
        length = 2
        [experiment]
        observables = ["connected:2,3"]
        mcmc_samples = [100]
        cmcs_samples = [20]
        replicates = 1
        [sweep]
        axis = "beta"
        values = [0.0, 1.0, 2.0]
        "#,
    );
    let out_path = dir.path().join("t.csv");
    let out = cmcs(&["thermal", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&out_path).unwrap().lines().count(), 1 + 2 * 2);

    let out = cmcs(&["sweep", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&out_path).unwrap().lines().count(), 1 + 3 * 2 * 2);
}

#[test]
fn failures_emit_json_and_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = cmcs(&["ground", "--config", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert_eq!(error_line(&out)["error"], "io");

    let cfg = write_config(dir.path(), &GROUND.replace("length = 6", "length = 20"));
    let cfg_body = std::fs::read_to_string(&cfg).unwrap() + "[exact]\ndense_cap = 1000\n";
    std::fs::write(&cfg, cfg_body).unwrap();
    let out = cmcs(&["thermal", "--config", &cfg]);
    assert!(!out.status.success());
    // thermal mode without betas is rejected before any diagonalization
    assert_eq!(error_line(&out)["error"], "config");

    let body = std::fs::read_to_string(&cfg).unwrap().replace("[region]", "[mode]\nbetas = [1.0]\n[region]");
    std::fs::write(&cfg, body).unwrap();
    let out = cmcs(&["thermal", "--config", &cfg]);
    let err = error_line(&out);
    assert_eq!(err["error"], "capacity");
    assert!(err["message"].as_str().unwrap().contains("L = 9"));

    let out = cmcs(&["sweep", "--config", &cfg]);
    assert_eq!(error_line(&out)["error"], "config");

    let out = cmcs(&["ground", "--config", &cfg, "--workers", "lots"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");
}
