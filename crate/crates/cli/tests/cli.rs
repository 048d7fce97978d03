use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quantile-atlas"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn locstat_row_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mc");
    let o = run(&["run", "locstat-mc", "--seed", "1", "--runs", "5", "--n", "600", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fits = fs::read_to_string(out.join("fits.csv")).unwrap();
    assert_eq!(fits.lines().count() - 1, 5 * 3 * 100);
    let curves = fs::read_to_string(out.join("mse_curves.csv")).unwrap();
    let ks: std::collections::BTreeSet<&str> = curves.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ks.len(), 3);
    assert!(!fits.contains('\r'));
}

#[test]
fn same_command_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |d: &str| {
        vec![
            "run".to_string(),
            "ot-contour".into(),
            "--seed".into(),
            "3".into(),
            "--out".into(),
            tmp.path().join(d).to_string_lossy().into_owned(),
            "--set".into(),
            "n=200".into(),
            "--set".into(),
            "B=20".into(),
            "--set".into(),
            "N_S=20".into(),
            "--set".into(),
            "k_nn=30".into(),
            "--set".into(),
            "b_n=0.3".into(),
        ]
    };
    for d in ["a", "b"] {
        let o = bin().args(args(d)).output().unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = data_files(&tmp.path().join("a"));
    assert_eq!(a.len(), 2);
    assert_eq!(a, data_files(&tmp.path().join("b")));
    let manifest = fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap();
    assert!(manifest.contains("\"forest_train\"") && manifest.contains("\"query_forest\""));
}

#[test]
fn json_format() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let o = run(&["run", "motivating", "--format", "json", "--set", "n=300", "--set", "b_n=0.3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(s.contains("\"columns\""));
    assert!(out.join("scatter.json").exists());
}

#[test]
fn validation_failures_exit_2_and_leave_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o_str = out.to_str().unwrap();
    for args in [
        vec!["run", "nope", "--out", o_str],
        vec!["run", "locstat-mc", "--set", "bogus=1", "--out", o_str],
        vec!["run", "ot-tube", "--set", "tau=0.25", "--out", o_str],
        vec!["run", "ot-tables", "--set", "k_nn=0", "--out", o_str],
        vec!["run", "motivating", "--format", "xml", "--out", o_str],
        vec!["run", "motivating", "--n", "-4", "--out", o_str],
    ] {
        let o = run(&args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    }
    assert!(!out.exists());
}

#[test]
fn runtime_failure_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = run(&["run", "motivating", "--set", "n=300", "--set", "b_n=0.3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn validate_config_files() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good.cfg");
    fs::write(&good, "experiment = ot-tables\nseed = 5\nn = 500,1000\nm = 2\n").unwrap();
    let o = run(&["validate", good.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("m=2"));
    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, "experiment = ot-tables\nN_R = 5\n").unwrap();
    assert_eq!(code(&run(&["validate", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["validate", tmp.path().join("missing").to_str().unwrap()])), 2);
}

#[test]
fn forest_fit_then_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let (x, y, model) = (tmp.path().join("x.csv"), tmp.path().join("y.csv"), tmp.path().join("model.json"));
    let mut xs = String::from("x1\n");
    let mut ys = String::from("y1,y2\n");
    for i in 0..40 {
        let v = i as f64 / 40.0;
        xs += &format!("{v}\n");
        ys += &format!("{},{}\n", v * 2.0, -v);
    }
    fs::write(&x, xs).unwrap();
    fs::write(&y, ys).unwrap();
    let o = run(&[
        "forest", "fit", "--x", x.to_str().unwrap(), "--y", y.to_str().unwrap(), "--out", model.to_str().unwrap(),
        "--trees", "10", "--seed", "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let q = tmp.path().join("q.csv");
    fs::write(&q, "0.1\n0.9\n").unwrap();
    let o = run(&["forest", "weights", "--model", model.to_str().unwrap(), "--x", q.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("query,index,weight\n"));
    for query in ["0", "1"] {
        let total: f64 = text
            .lines()
            .skip(1)
            .filter(|l| l.starts_with(&format!("{query},")))
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    let bad = tmp.path().join("q2.csv");
    fs::write(&bad, "0.1,0.2\n").unwrap();
    let o = run(&["forest", "weights", "--model", model.to_str().unwrap(), "--x", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
