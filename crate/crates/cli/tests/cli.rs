use std::path::Path;
use std::process::{Command, Output};

fn orthomean(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthomean"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("ORTHOMEAN_MAX_L")
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn moments_default_run_writes_nine_files_with_shrinking_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let o = orthomean(&["moments", "--family", "ultraspherical", "--lambda", "0.5", "--method", "cesaro", "--alpha", "1", "--n", "50,100,200", "--L", "8"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 9);
    for kind in ["mu_bar", "lambda", "nu"] {
        let tables: Vec<_> = [50, 100, 200]
            .iter()
            .map(|n| read_csv(&dir.path().join(format!("moments_{kind}_{n}.csv"))))
            .collect();
        for l in 0..=8 {
            let gaps: Vec<f64> = tables.iter().map(|t| num(&t[l][3])).collect();
            assert!(gaps[1] <= gaps[0] + 1e-12 && gaps[2] <= gaps[1] + 1e-12, "{kind} l={l}: {gaps:?}");
        }
        assert!((num(&tables[0][0][1]) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn moments_with_l_zero_are_single_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = orthomean(&["moments", "--n", "5", "--L", "0"], dir.path());
    assert!(o.status.success());
    for kind in ["mu_bar", "lambda", "nu"] {
        let rows = read_csv(&dir.path().join(format!("moments_{kind}_5.csv")));
        assert_eq!(rows.len(), 1);
        assert!((num(&rows[0][1]) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn identity_on_constant_legendre_gives_single_polynomial_moments() {
    let dir = tempfile::tempdir().unwrap();
    let o = orthomean(&["moments", "--family", "legendre", "--method", "identity", "--n", "3", "--L", "2"], dir.path());
    assert!(o.status.success());
    let rows = read_csv(&dir.path().join("moments_mu_bar_3.csv"));
    // ∫ x² p_3² dμ = b_3² + b_4² for Legendre
    let b = |j: f64| j / (4.0 * j * j - 1.0).sqrt();
    assert!((num(&rows[2][1]) - (b(3.0).powi(2) + b(4.0).powi(2))).abs() < 1e-14);
    assert_eq!(num(&rows[1][1]), 0.0);
}

#[test]
fn roots_hist_masses_and_single_bin() {
    let dir = tempfile::tempdir().unwrap();
    let o = orthomean(&["roots-hist", "--n", "30,60", "--bins", "1"], dir.path());
    assert!(o.status.success());
    let rows = read_csv(&dir.path().join("hist_30.csv"));
    assert_eq!(rows.len(), 1);
    assert!((num(&rows[0][2]) - 1.0).abs() < 1e-12);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.starts_with("n=30 ks="));

    let o = orthomean(&["roots-hist", "--n", "40"], dir.path());
    assert!(o.status.success());
    let rows = read_csv(&dir.path().join("hist_40.csv"));
    assert_eq!(rows.len(), 50);
    let total: f64 = rows.iter().map(|r| num(&r[2])).sum();
    assert!((total - 1.0).abs() < 1e-10);
    assert_eq!(num(&rows[0][0]), -1.0);
    let curve = std::fs::read_to_string(dir.path().join("equilibrium.csv")).unwrap();
    assert!(curve.starts_with("x,density\n"));
    assert_eq!(curve.lines().count(), 1002);
}

#[test]
fn sigma_table_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = orthomean(&["sigma-table", "--n", "200,2000", "--L", "4"], dir.path());
    assert!(o.status.success());
    let rows = read_csv(&dir.path().join("sigma.csv"));
    let row = |n: &str, la: &str, lb: &str| rows.iter().find(|r| r[0] == n && r[1] == la && r[2] == lb).unwrap().clone();
    let r = row("2000", "0", "2");
    assert!((num(&r[4]) - 1.0 / 6.0).abs() < 1e-15);
    assert!(num(&r[5]) < 1e-2);
    let r = row("200", "0", "0");
    assert!((num(&r[3]) - 1.0).abs() < 1e-12 && num(&r[4]) == 1.0);
    for r in rows.iter().filter(|r| r[1] != "0") {
        assert_eq!(num(&r[3]), 0.0);
        assert_eq!(num(&r[4]), 0.0);
    }
}

#[test]
fn check_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = orthomean(&["check"], dir.path());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("0 failed"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn check_negative_custom_sigma_fails_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = String::from("k,sigma\n");
    for k in 0..=60 {
        rows.push_str(&format!("{k},{}\n", if k == 4 { -1.0 } else { 1.0 }));
    }
    let sigma = dir.path().join("sigma_in.csv");
    std::fs::write(&sigma, rows).unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"family": {{"kind": "ultraspherical", "params": {{"lambda": 0.5}}}},
                "method": {{"method": "custom", "sigma_file": {:?}}},
                "n_list": [20, 40], "L": 6, "output": "unused"}}"#,
            sigma
        ),
    )
    .unwrap();
    let o = orthomean(&["check", "--config", config.to_str().unwrap()], &dir.path().join("out"));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(o.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("(n, k) = (4, 0)"), "{stdout}");
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = orthomean(&["check", "--lambda", "-0.6"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("λ > −1/2"));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());

    let o = orthomean(&["moments", "--method", "cesaro", "--alpha", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = orthomean(&["moments", "--L", "13"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = orthomean(&["moments", "--n", "20,10"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn max_l_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let run = |cap: &str| {
        Command::new(env!("CARGO_BIN_EXE_orthomean"))
            .args(["moments", "--n", "4", "--L", "14", "--out"])
            .arg(dir.path())
            .env("ORTHOMEAN_MAX_L", cap)
            .output()
            .unwrap()
    };
    assert!(run("14").status.success());
    assert!(run("off").status.success());
    assert_eq!(run("10").status.code(), Some(2));
    assert_eq!(run("many").status.code(), Some(2));
}

#[test]
fn show_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = orthomean(&["show-config", "--family", "jacobi_shift", "--lambda1", "0.3", "--lambda2", "-0.4", "--method", "gegenbauer", "--nu", "1"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, &text).unwrap();
    let again = orthomean(&["show-config", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    assert!(text.contains("\"jacobi_shift\""));
}
