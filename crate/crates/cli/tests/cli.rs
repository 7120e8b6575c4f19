use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cqreduce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqreduce"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn metrics(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["metrics"].clone()
}

#[test]
fn validate_empty_file_prints_defaults_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    let first = cqreduce(&["validate", empty.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0));
    let canonical = stdout(&first);
    assert!(canonical.contains("family.truncation = 64\n"));

    let echoed = dir.path().join("echo.toml");
    fs::write(&echoed, &canonical).unwrap();
    let second = cqreduce(&["validate", "--config", echoed.to_str().unwrap()]);
    assert_eq!(stdout(&second), canonical);
}

#[test]
fn unknown_field_is_a_config_error_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = 1\n[grid]\nx_stpes = 3\n").unwrap();
    let out = cqreduce(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grid.x_stpes"), "{err}");
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn exit_codes_separate_usage_tolerance_and_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(cqreduce(&["no-such-experiment"]).status.code(), Some(2));
    assert_eq!(
        cqreduce(&["ccr", "--out", out, "--override", "family.truncation=-3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(cqreduce(&["ccr", "--out", out]).status.code(), Some(0));
    // An impossible tolerance is a failed check, not a crash.
    let strict = cqreduce(&["ccr", "--out", out, "--override", "tolerance.ccr=1e-30"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stdout(&strict).contains("ccr: FAIL"));
}

#[test]
fn config_for_another_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "experiment = \"ccr\"\n").unwrap();
    let out = cqreduce(&["touchard-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_reproduce_metrics_and_tables_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    for experiment in ["invariance", "remark-demo", "touchard-table"] {
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        for d in [&a, &b] {
            let o = cqreduce(&[
                experiment,
                "--out",
                d.to_str().unwrap(),
                "--override",
                "grid.jitter=0.3",
            ]);
            assert_eq!(o.status.code(), Some(0), "{experiment}");
        }
        let (a, b) = (a.join(experiment), b.join(experiment));
        assert_eq!(metrics(&a), metrics(&b));
        for entry in fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            if name.to_str().unwrap().ends_with(".csv") {
                assert_eq!(
                    fs::read(a.join(&name)).unwrap(),
                    fs::read(b.join(&name)).unwrap()
                );
            }
        }
    }
}

#[test]
fn seed_moves_jittered_grid() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, sub: &str| {
        let d = dir.path().join(sub);
        let o = cqreduce(&[
            "invariance",
            "--out",
            d.to_str().unwrap(),
            "--override",
            "grid.jitter=0.3",
            "--override",
            &format!("seed={seed}"),
        ]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(d.join("invariance/invariance.csv")).unwrap()
    };
    assert_ne!(run("1", "s1"), run("2", "s2"));
}

#[test]
fn touchard_table_first_order_column_is_x() {
    let dir = tempfile::tempdir().unwrap();
    let o = cqreduce(&["touchard-table", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("touchard-table/touchard.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    let x = headers.iter().position(|h| h == "x").unwrap();
    let t1 = headers.iter().position(|h| h == "T_1").unwrap();
    let mut count = 0;
    for r in rows.records() {
        let r = r.unwrap();
        assert_eq!(r[x], r[t1]);
        count += 1;
    }
    assert_eq!(count, 41);
    assert!(!text.contains('\r'));
}

#[test]
fn remark_difference_is_nonzero_away_from_origin() {
    let dir = tempfile::tempdir().unwrap();
    let o = cqreduce(&["remark-demo", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("remark-demo/remark.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    let col = |n: &str| headers.iter().position(|h| h == n).unwrap();
    let (x, p, d) = (col("x"), col("p"), col("difference"));
    assert!(headers.iter().any(|h| h == "f_lie") && headers.iter().any(|h| h == "lambda_bracket"));
    let mut off_origin = 0;
    for r in rows.records() {
        let r = r.unwrap();
        let rho = r[x].parse::<f64>().unwrap().powi(2) + r[p].parse::<f64>().unwrap().powi(2);
        // the closed forms agree only where e^{-rho}(1-rho) = e^{-2rho}(1-2rho)
        if rho > 0.0 {
            off_origin += 1;
            assert!(r[d].parse::<f64>().unwrap() != 0.0);
        }
    }
    assert!(off_origin > 0);
}
