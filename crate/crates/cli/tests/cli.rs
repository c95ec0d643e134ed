use std::path::PathBuf;
use std::process::{Command, Output};

fn hkpath() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hkpath"));
    c.env_remove("HKPATH_CONFIG");
    c
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hkpath-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(line: &str, k: usize) -> f64 {
    line.split(',').nth(k).unwrap().parse().unwrap()
}

#[test]
fn fresnel_unit_phase() {
    let o = hkpath().args(["fresnel", "--c", "i"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "# format_version=1");
    assert_eq!(lines[1], "c_re,c_im,re,im,ref_re,ref_im,abs_diff");
    assert!((field(lines[2], 2) - 1.7724539).abs() < 1e-6);
    assert!((field(lines[2], 3) - 1.7724539).abs() < 1e-6);
    assert!(field(lines[2], 6) < 1e-6);
}

#[test]
fn fresnel_table_compares_closed_form_and_quadrature() {
    let o = hkpath()
        .args(["fresnel", "--table", "--u-min", "-4", "--u-max", "4", "--steps", "8"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<_> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| field(r, 5) < 1e-9));
}

#[test]
fn free_kernel_query() {
    let dir = scratch("kernel");
    let q = dir.join("free.json");
    std::fs::write(&q, r#"{"start": {"xi": 0.3, "tau": 0.0}, "end": {"xi": 0.3, "tau": 1.0}}"#).unwrap();
    let o = hkpath().args(["kernel", "--query"]).arg(&q).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["format_version"], 1);
    assert!((v["sliced"]["re"].as_f64().unwrap() - 0.2821).abs() < 1e-4);
    assert!((v["sliced"]["im"].as_f64().unwrap() + 0.2821).abs() < 1e-4);
    assert_eq!(v["closed"]["re"].as_f64(), Some(0.282094791774));

    let o = hkpath()
        .args(["kernel", "--xi-min", "-1", "--xi-max", "1", "--steps", "4", "--query"])
        .arg(&q)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1), Some("xi,re_sliced,im_sliced,re_closed,im_closed"));
    assert_eq!(text.lines().count(), 7);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn perturbation_table() {
    let dir = scratch("perturb");
    let q = dir.join("c.json");
    std::fs::write(
        &q,
        r#"{"start": {"xi": 0.0, "tau": 0.0}, "end": {"xi": 0.4, "tau": 1.0}, "slices": 3, "potential": "const:0.5"}"#,
    )
    .unwrap();
    let o = hkpath().args(["perturb", "--mmax", "4", "--query"]).arg(&q).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 7);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn exchange_reports_and_is_reproducible() {
    let dir = scratch("exchange");
    let run = || {
        hkpath()
            .args(["exchange", "--V", "const:1", "--tau", "1", "--mmax", "12", "--out-dir"])
            .arg(&dir)
            .output()
            .unwrap()
    };
    let a = run();
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let verdict_a = std::fs::read(dir.join("verdict.json")).unwrap();
    let growth_a = std::fs::read(dir.join("growth_table.csv")).unwrap();
    let b = run();
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(verdict_a, std::fs::read(dir.join("verdict.json")).unwrap());
    assert_eq!(growth_a, std::fs::read(dir.join("growth_table.csv")).unwrap());

    let text = stdout(&a);
    let diffs: Vec<f64> = text.lines().skip(2).map(|l| field(l, 5)).collect();
    assert_eq!(diffs.len(), 13);
    assert!(diffs.windows(2).skip(2).all(|w| w[1] <= w[0]));
    assert!(diffs[12] < 1e-8);
    let v: serde_json::Value = serde_json::from_slice(&verdict_a).unwrap();
    assert_eq!(v["beta_probe"], "UNBOUNDED");
    assert!(v["m_found"].as_u64().is_some());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn division_build_then_validate() {
    let dir = scratch("division");
    let file = dir.join("d.json");
    let o = hkpath()
        .args(["division", "build", "--delta", "0.3", "--slope", "0.1", "--tail", "0.5", "--out"])
        .arg(&file)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = hkpath()
        .args(["division", "validate", "--fine", "--delta", "0.3", "--slope", "0.1", "--tail", "0.5"])
        .arg(&file)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["valid"], true);

    // A coarser gauge rejects the same division.
    let o = hkpath()
        .args(["division", "validate", "--fine", "--delta", "0.01", "--tail", "0.5"])
        .arg(&file)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(
        &file,
        r#"{"format_version": 1, "items": [{"tag": "-inf", "kind": "neg_tail", "bounds": [0.0]}, {"tag": "+inf", "kind": "pos_tail", "bounds": [1.0]}]}"#,
    )
    .unwrap();
    let o = hkpath().args(["division", "validate"]).arg(&file).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["violations"][0]["kind"], "gap");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [vec!["nonsense"], vec!["fresnel", "--c", "zz"], vec!["exchange", "--V", "quartic:1"], vec![]] {
        let o = hkpath().args(&args).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn config_file_from_environment_and_flags() {
    let dir = scratch("config");
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, r#"{"lab": {"seed": 7, "samples": 3}}"#).unwrap();
    let o = hkpath().arg("config").env("HKPATH_CONFIG", &cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["lab"]["seed"], 7);
    assert_eq!(v["lab"]["samples"], 3);

    let o = hkpath().args(["--seed", "11", "config"]).env("HKPATH_CONFIG", &cfg).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["lab"]["seed"], 11);

    std::fs::write(&cfg, r#"{"lab": {"eps": -1}}"#).unwrap();
    let o = hkpath().arg("--config").arg(&cfg).arg("config").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn selftest_subset() {
    let o = hkpath().args(["selftest", "--only", "2,6"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.contains(" PASS: ")));
    let o = hkpath().args(["selftest", "--only", "9"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
