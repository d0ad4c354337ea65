use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn esmap(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esmap"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("ESMAP_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn moments_example_writes_one_row_per_modulus() {
    let dir = tempfile::tempdir().unwrap();
    let o = esmap(&["moments", "--form", "delta", "--spec", "a0=1,b0=1", "--c", "251,503,1009,2003"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = lines(&dir.path().join("moments_calibrated.csv"));
    assert_eq!(rows[0], "alpha,beta,c,emp_re,emp_im,main_re,main_im,abs_err,norm_err");
    assert_eq!(rows.len(), 5);
    let cs: Vec<&str> = rows[1..].iter().map(|r| r.split(',').nth(2).unwrap()).collect();
    assert_eq!(cs, ["251", "503", "1009", "2003"]);
    let m = manifest(&dir.path().join("moments.manifest.json"));
    assert_eq!(m["config"]["command"], "moments");
    assert_eq!(m["form"]["weight"], 12);
    assert_eq!(m["conventions"][0]["name"], "calibrated");
    assert_eq!(m["outputs"][0]["rows"], 4);
}

#[test]
fn both_conventions_differ_by_two_pi() {
    let dir = tempfile::tempdir().unwrap();
    let o = esmap(&["moments", "--coeffs", "3000", "--spec", "a0=1", "--c", "101", "--convention", "both"], dir.path());
    assert_eq!(code(&o), 0);
    let field = |name: &str| -> f64 {
        let rows = lines(&dir.path().join(name));
        rows[1].split(',').nth(3).unwrap().parse().unwrap()
    };
    let ratio = field("moments_calibrated.csv") / field("moments_reduced.csv");
    assert!((ratio - 2.0 * std::f64::consts::PI).abs() < 1e-9, "{ratio}");
}

#[test]
fn weil_table_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = esmap(&["kloosterman", "--weil", "--cmax", "300", "--mmax", "10", "--nmax", "10"], dir.path());
    assert_eq!(code(&o), 0);
    let rows = lines(&dir.path().join("weil.csv"));
    assert_eq!(rows[0], "m,n,c,S,weil_bound,slack");
    assert_eq!(rows.len(), 1 + 300 * 100);
    let m = manifest(&dir.path().join("kloosterman.manifest.json"));
    assert_eq!(m["checks"][0]["pass"], true);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    let args = ["dist", "--coeffs", "3000", "--c", "101,211", "--grid-y", "500", "--grid-z", "2"];
    for (dir, threads) in [(&one, "1"), (&many, "4")] {
        let mut a = args.to_vec();
        a.extend(["--threads", threads]);
        assert_eq!(code(&esmap(&a, dir.path())), 0);
    }
    for name in ["limit_law_calibrated.csv", "distribution_calibrated.csv", "histogram_calibrated.csv", "ks_calibrated.csv"] {
        let a = fs::read(one.path().join(name)).unwrap();
        let b = fs::read(many.path().join(name)).unwrap();
        assert!(a == b, "{name} differs between thread counts");
    }
    let rows = lines(&one.path().join("limit_law_calibrated.csv"));
    assert_eq!(rows[0], "y,z,j,re_F,im_F");
    assert_eq!(rows.len(), 1 + 500 * 2 * 11);
}

#[test]
fn floats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&esmap(&["ltwist", "--coeffs", "2000", "--cusp", "3/7"], dir.path())), 0);
    let rows = lines(&dir.path().join("ltwist.csv"));
    assert_eq!(rows.len(), 12);
    for field in rows[1].split(',').skip(3) {
        let x: f64 = field.parse().unwrap();
        assert_eq!(format!("{x:.16e}"), field);
    }
}

#[test]
fn zeros_csv_has_ten_roots_per_cusp() {
    let dir = tempfile::tempdir().unwrap();
    let o = esmap(&["zeros", "--coeffs", "4000", "--c", "101", "--count", "4"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rows = lines(&dir.path().join("zeros.csv"));
    assert_eq!(rows[0], "a,c,root_re,root_im,deviation,normalized_ratio,residual");
    assert_eq!(rows.len(), 1 + 4 * 10);
}

#[test]
fn exported_form_feeds_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("delta.txt");
    let o = esmap(&["form", "--coeffs", "1500", "--export", file.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(lines(&dir.path().join("coefficients.csv"))[2], format!("2,-24,{:.16e}", 24.0 / (2.0 * 2f64.powf(5.5))));
    let o = esmap(&["periods", "--form", file.to_str().unwrap(), "--cusp", "2/9", "--normalized", "--oracle"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(lines(&dir.path().join("periods.csv")).len(), 12);
    assert_eq!(lines(&dir.path().join("period_polynomial.csv")).len(), 12);
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = esmap(&["moments", "--coeffs", "3000", "--spec", "a0=1,b0=1", "--c", "101", "--max-err", "1e-12"], dir.path());
    assert_eq!(code(&o), 1);
    let m = manifest(&dir.path().join("moments.manifest.json"));
    assert_eq!(m["all_passed"], false);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 6] = [
        &["nosuch"],
        &["moments", "--spec", "a99=1", "--c", "101"],
        &["moments", "--spec", "a0=1", "--c", "101", "--coeffs", "0"],
        &["moments", "--coeffs", "500", "--spec", "a0=1,b0=1", "--c", "1009"],
        &["ltwist", "--cusp", "2/4"],
        &["kloosterman"],
    ];
    for args in cases {
        let o = esmap(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_esmap"))
        .args(["kloosterman", "--c", "7,12", "--m", "2", "--n", "3"])
        .env("ESMAP_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let rows = lines(&dir.path().join("kloosterman.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("2,3,7,"));
}

#[test]
fn quick_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = esmap(&["verify", "--quick", "--coeffs", "8000"], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.contains("checks passed"));
    let rows = lines(&dir.path().join("verify.csv"));
    assert_eq!(rows[0], "check,value,threshold,pass");
    assert!(rows[1..].iter().all(|r| r.ends_with(",true")));
}
