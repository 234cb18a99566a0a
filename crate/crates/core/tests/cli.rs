use std::path::Path;
use std::process::Command;

fn infspec(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_infspec")).args(args).current_dir(dir).output().unwrap()
}

fn make(dir: &Path, name: &str, extra: &[&str], file: &str) {
    let mut args = vec!["domain", "make", name, "--out", file];
    args.extend_from_slice(extra);
    let out = infspec(&args, dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn builtin_domains_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (name, extra, n) in [
        ("unit-square", vec![], 4usize),
        ("rectangle", vec!["--a", "2", "--b", "1"], 4),
        ("stadium", vec!["--r", "1", "--d", "6", "--arc-n", "64"], 130),
        ("lshape", vec![], 6),
    ] {
        let file = format!("{name}.json");
        make(dir.path(), name, &extra, &file);
        let d = infspec::domain::load_domain(&dir.path().join(&file)).unwrap();
        assert_eq!(d.polygon.n_vertices(), n, "{name}");
    }
    let out = infspec(&["geom", "inradius", "--domain", "rectangle.json"], dir.path());
    let line = String::from_utf8(out.stdout).unwrap();
    assert!(line.starts_with("inradius = 0.500000000"), "{line}");
}

#[test]
fn lambda2_summary_and_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    make(dir.path(), "unit-square", &[], "sq.json");
    let out = infspec(&["infty", "lambda2", "--domain", "sq.json", "--beta", "2"], dir.path());
    assert!(out.status.success());
    let line = String::from_utf8(out.stdout).unwrap();
    assert!(line.starts_with("lambda2 = 1.7071068 ±"), "{line}");

    let out = infspec(&["infty", "lambda2", "--domain", "sq.json", "--beta-sweep", "0.5:3:6", "--out", "a.csv"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "beta,s,lambda2,x1x,x1y,x2x,x2y,active_constraints");
    let betas: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(betas, vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    make(dir.path(), "lshape", &[], "l.json");
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = Command::new(env!("CARGO_BIN_EXE_infspec"))
            .args(["infty", "regime", "--domain", "l.json", "--beta-sweep", "0.2:4:5", "--out", &format!("r{i}.csv")])
            .env("INFSPEC_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("r0.csv")).unwrap();
    let b = std::fs::read(dir.path().join("r1.csv")).unwrap();
    assert_eq!(a, b);

    for name in ["v0.csv", "v1.csv"] {
        let out = infspec(&["infty", "viscosity", "--domain", "l.json", "--beta", "1", "--seed", "11", "--out", name], dir.path());
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(dir.path().join("v0.csv")).unwrap(), std::fs::read(dir.path().join("v1.csv")).unwrap());
}

#[test]
fn plap_rows_echo_configuration() {
    let dir = tempfile::tempdir().unwrap();
    make(dir.path(), "unit-square", &[], "sq.json");
    let out = infspec(
        &["plap", "study", "--domain", "sq.json", "--beta", "2", "--p-list", "2,4", "--h", "0.1", "--out", "s.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    for col in ["p", "h", "beta", "lambda", "lambda_root", "target_infty", "gap", "iterations", "residual"] {
        assert!(header.iter().any(|c| c == col), "missing {col}");
    }
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(&r[2], "0.1");
        assert_eq!(&r[3], "2");
        assert_eq!(&r[11], "ok");
    }

    let out = infspec(&["plap", "mesh", "--domain", "sq.json", "--h", "0.1", "--out", "m.txt"], dir.path());
    assert!(out.status.success());
    let dump = std::fs::read_to_string(dir.path().join("m.txt")).unwrap();
    assert!(dump.starts_with("# infspec mesh v1 h=0.1\nnodes "));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    make(dir.path(), "unit-square", &[], "sq.json");
    std::fs::write(dir.path().join("bad.json"), r#"{"vertices": [[0,0],[1,1],[1,0],[0,1]]}"#).unwrap();
    let code = |args: &[&str]| infspec(args, dir.path()).status.code().unwrap();
    assert_eq!(code(&["infty", "lambda1", "--domain", "sq.json", "--beta", "1"]), 0);
    assert_eq!(code(&["infty", "lambda1", "--domain", "sq.json"]), 2);
    assert_eq!(code(&["infty", "lambda1", "--domain", "sq.json", "--beta=-1"]), 2);
    assert_eq!(code(&["infty", "lambda1", "--domain", "missing.json", "--beta", "1"]), 3);
    assert_eq!(code(&["infty", "lambda1", "--domain", "bad.json", "--beta", "1"]), 3);
    // a mesh size above the shortest edge cannot be met
    assert_eq!(code(&["plap", "first", "--domain", "sq.json", "--beta", "1", "--h", "2", "--out", "f.csv"]), 4);
    assert!(dir.path().join("f.csv.diagnostic.txt").exists());
    let out = Command::new(env!("CARGO_BIN_EXE_infspec"))
        .args(["infty", "r2", "--domain", "sq.json"])
        .env("INFSPEC_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
