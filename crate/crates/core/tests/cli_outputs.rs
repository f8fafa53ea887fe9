use std::fs;
use std::path::Path;
use std::process::Command as Process;

use spde_euler::cli::{run, Command};
use spde_euler::config::RunConfig;

fn quick_config(cmd: Command) -> RunConfig {
    let text = match cmd {
        Command::Simulate => "J = 31\ntau = 2^-5\nT = 0.25\nthin = 2\n",
        Command::WeakOrder | Command::StrongOrder => {
            "J = 16\nT = 0.25\ntaus = 2^-3, 2^-4, 2^-5\ntau_ref = 2^-7\nM = 40\n"
        }
        Command::Invariant => "J = 8\nN = 2000\nbatch_len = 100\nJ_list = 4, 8\n",
        Command::Regularity => "J = 256\n",
        Command::GaussianDiag => "J = 16\nJ_list = 4, 8, 16\n",
        Command::Ap => "J = 8\nM = 50\nN = 2\ntaus = 0.25, 0.125, 0.0625\nT = 0.25\nrefinement = 2\n",
        Command::Mcmc => "J = 8\nmcmc_steps = 2000\nburn_in = 100\nbatch_len = 100\nthin = 50\nsde_steps = 2000\n",
    };
    RunConfig::parse_str(text).unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_command_writes_reproducible_outputs() {
    let root = tempfile::tempdir().unwrap();
    for cmd in Command::ALL {
        let cfg = quick_config(cmd);
        let a = root.path().join(format!("{}-a", cmd.name()));
        let b = root.path().join(format!("{}-b", cmd.name()));
        let report = run(cmd, &cfg, &a).unwrap_or_else(|e| panic!("{}: {e}", cmd.name()));
        run(cmd, &cfg, &b).unwrap();
        assert!(
            report.files.len() >= 2,
            "{} wrote {:?}",
            cmd.name(),
            report.files
        );
        assert_eq!(
            read_dir_sorted(&a),
            read_dir_sorted(&b),
            "{} is not reproducible",
            cmd.name()
        );
        assert_eq!(report.summary["command"], cmd.name());

        for (name, bytes) in read_dir_sorted(&a) {
            let text = String::from_utf8(bytes).unwrap();
            if name.ends_with(".csv") {
                let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
                let header = lines.next().unwrap();
                let width = header.split(',').count();
                assert!(lines.clone().count() > 0, "{name} has no rows");
                assert!(
                    lines.all(|l| l.split(',').count() == width),
                    "{name} is ragged"
                );
                assert!(
                    text.starts_with("# spde-euler"),
                    "{name} lacks the version line"
                );
            } else {
                let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert!(v.is_object());
            }
        }
    }
}

#[test]
fn seeds_change_stochastic_outputs() {
    let root = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(Command::Simulate);
    let a = run(Command::Simulate, &cfg, &root.path().join("a")).unwrap();
    cfg.set("seed", "1").unwrap();
    let b = run(Command::Simulate, &cfg, &root.path().join("b")).unwrap();
    assert_ne!(a.summary["qv_modified"], b.summary["qv_modified"]);
}

#[test]
fn floats_are_written_with_seventeen_significant_digits() {
    let root = tempfile::tempdir().unwrap();
    run(
        Command::Regularity,
        &quick_config(Command::Regularity),
        root.path(),
    )
    .unwrap();
    let text = fs::read_to_string(root.path().join("regularity.csv")).unwrap();
    let row = text.lines().find(|l| l.starts_with("exact_ou")).unwrap();
    let value = row.split(',').nth(2).unwrap();
    let mantissa = value.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{value}");
}

#[test]
fn inconsistent_or_unknown_settings_are_rejected() {
    let root = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse_str("tau = 0.1\nN = 3\nT = 1\n").unwrap();
    assert!(run(Command::Simulate, &cfg, root.path()).is_err());
    assert!(RunConfig::parse_str("wibble = 3\n").is_err());
    let cfg = RunConfig::parse_str("operator = fd\n").unwrap();
    assert!(run(Command::WeakOrder, &cfg, root.path()).is_err());
}

#[test]
fn binary_runs_a_subcommand() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("out");
    let status = Process::new(env!("CARGO_BIN_EXE_spde-euler"))
        .args([
            "gaussian-diag",
            "--seed",
            "3",
            "--threads",
            "1",
            "--set",
            "J_list=4,8",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let summary = fs::read_to_string(out.join("gaussian_diag_summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["seed"], 3);
    assert_eq!(v["hellinger_standard_monotone"], true);

    let bad = Process::new(env!("CARGO_BIN_EXE_spde-euler"))
        .args(["simulate", "--set", "no_such_key=1", "--out"])
        .arg(root.path().join("bad"))
        .output()
        .unwrap();
    assert!(!bad.status.success());
}
