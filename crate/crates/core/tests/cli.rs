//! End-to-end checks of the `cce` command line.

use std::fs;
use std::path::Path;
use std::process::Command;

use cce_core::cli::cli_main;

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn cce(args: &[&str]) -> i32 {
    let argv: Vec<String> = std::iter::once("cce")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    cli_main(argv)
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn invalid_config_exits_2_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "r_alpha_c = 1.0\n");
    let out = tmp.path().join("out");
    let out_s = out.display().to_string();
    for sub in ["validate", "run", "experiment", "field", "trajectory"] {
        assert_eq!(cce(&[sub, "--config", &cfg, "--out", &out_s]), 2, "{sub}");
    }
    assert!(!out.exists());
}

#[test]
fn parse_errors_and_missing_files_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "syntax.toml", "n = [\n");
    assert_eq!(cce(&["validate", "--config", &cfg]), 2);
    let missing = tmp.path().join("nope.toml").display().to_string();
    assert_eq!(cce(&["validate", "--config", &missing]), 2);
    assert_eq!(cce(&["frobnicate"]), 2);
}

#[test]
fn valid_config_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ok.toml", "experiment = \"fig7c\"\n");
    let out = tmp.path().join("out");
    assert_eq!(
        cce(&[
            "validate",
            "--config",
            &cfg,
            "--out",
            &out.display().to_string()
        ]),
        0
    );
    assert!(!out.exists());
}

#[test]
fn repeated_runs_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "fig4_complement.toml",
        "experiment = \"fig4\"\nn = 200\nsteps = 60\n",
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        assert_eq!(
            cce(&[
                "run",
                "--config",
                &cfg,
                "--seed",
                "42",
                "--out",
                &out.display().to_string()
            ]),
            0
        );
    }
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    assert_eq!(fa, fb);
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["manifest.json", "step_records.csv"]);

    let manifest: serde_json::Value = serde_json::from_slice(&fa[0].1).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["config"]["n"], 200);
    assert_eq!(manifest["files"][0]["rows"], 61);
    assert_eq!(manifest["schemas"]["step_records"], 1);
    let csv = String::from_utf8(fa[1].1.clone()).unwrap();
    assert_eq!(csv.lines().count(), 62);
}

#[test]
fn seed_flag_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "experiment = \"fig4\"\nn = 100\nsteps = 20\n",
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        cce(&[
            "run",
            "--config",
            &cfg,
            "--seed",
            "1",
            "--out",
            &a.display().to_string()
        ]),
        0
    );
    assert_eq!(
        cce(&[
            "run",
            "--config",
            &cfg,
            "--seed",
            "2",
            "--out",
            &b.display().to_string()
        ]),
        0
    );
    assert_ne!(
        fs::read(a.join("step_records.csv")).unwrap(),
        fs::read(b.join("step_records.csv")).unwrap()
    );
}

#[test]
fn field_has_binomial_row_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "fig5.toml",
        "experiment = \"fig5\"\nn = 100\n[replicator]\ngrid = 6\nreplicates = 8\n",
    );
    let out = tmp.path().join("f");
    assert_eq!(
        cce(&[
            "field",
            "--config",
            &cfg,
            "--out",
            &out.display().to_string()
        ]),
        0
    );
    let text = fs::read_to_string(out.join("field_samples.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 8 * 7 / 2);
    assert!(text.starts_with("x0,xc,xs,dx0,dxc,dxs,speed,confidence_flag\n"));
}

#[test]
fn figure6_run_writes_one_strip_per_group() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "fig6.toml",
        "experiment = \"fig6\"\nn = 150\nsteps = 30\n",
    );
    let out = tmp.path().join("s");
    assert_eq!(
        cce(&["run", "--config", &cfg, "--out", &out.display().to_string()]),
        0
    );
    for g in 0..3 {
        let text = fs::read_to_string(out.join(format!("strips_group_{g}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 32);
    }
    let records = fs::read_to_string(out.join("step_records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 31 * 4);
}

#[test]
fn thread_count_never_changes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfgs = [
        (
            "experiment",
            "experiment = \"fig7c\"\nn = 90\nsteps = 25\nrepetitions = 3\n",
        ),
        ("experiment", "experiment = \"fig7a\"\nn = 80\nsteps = 10\n"),
        (
            "field",
            "experiment = \"fig5\"\nn = 60\n[replicator]\ngrid = 4\nreplicates = 6\n",
        ),
        (
            "trajectory",
            "experiment = \"fig5\"\nn = 60\n[replicator]\ngrid = 4\nreplicates = 6\nt_max = 1.0\n",
        ),
    ];
    for (i, (sub, body)) in cfgs.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("c{i}.toml"), body);
        let outs: Vec<_> = ["1", "4", "0"]
            .iter()
            .map(|t| {
                let out = tmp.path().join(format!("o{i}_{t}"));
                assert_eq!(
                    cce(&[
                        sub,
                        "--config",
                        &cfg,
                        "--threads",
                        t,
                        "--out",
                        &out.display().to_string()
                    ]),
                    0
                );
                read_dir_sorted(&out)
            })
            .collect();
        assert_eq!(outs[0], outs[1], "{sub}");
        assert_eq!(outs[0], outs[2], "{sub}");
    }
}

#[test]
fn budget_flag_is_enforced() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "b.toml",
        "experiment = \"fig4\"\nn = 50\nsteps = 5\nrepetitions = 4\n",
    );
    let out = tmp.path().join("o").display().to_string();
    assert_eq!(
        cce(&[
            "experiment",
            "--config",
            &cfg,
            "--budget",
            "8",
            "--out",
            &out
        ]),
        2
    );
    assert_eq!(
        cce(&[
            "experiment",
            "--config",
            &cfg,
            "--budget",
            "9",
            "--out",
            &out
        ]),
        0
    );
}

#[test]
fn binary_reports_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", "n = 1\n");
    let status = Command::new(env!("CARGO_BIN_EXE_cce"))
        .args(["validate", "--config", &bad])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(status.stdout.is_empty());
    assert!(String::from_utf8_lossy(&status.stderr).contains("`n`"));
}

#[test]
fn sample_uniform_flag_draws_heatmap_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "h.toml",
        "alpha = 0.2\np = 0.0\nn = 50\nsteps = 5\n",
    );
    let out = tmp.path().join("h");
    assert_eq!(
        cce(&[
            "experiment",
            "--config",
            &cfg,
            "--sample-uniform",
            "7",
            "--out",
            &out.display().to_string()
        ]),
        0
    );
    let text = fs::read_to_string(out.join("heatmap.csv")).unwrap();
    assert_eq!(text.lines().count(), 8);
    for line in text.lines().skip(1) {
        let d: Vec<f64> = line
            .split(',')
            .take(2)
            .map(|v| v.parse().unwrap())
            .collect();
        assert!(d.iter().all(|v| (0.0..1.0).contains(v)));
    }
}
