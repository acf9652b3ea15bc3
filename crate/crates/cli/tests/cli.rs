use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_excite-id"));
    c.env_remove("EXCITE_ID_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in\n{out}"))
        .parse()
        .unwrap()
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn design_then_analyze_reproduces_sigma() {
    let cases: [&[&str]; 5] = [
        &["--strategy", "simplex", "--m", "2", "--d", "2", "--alpha", "6.2832"],
        &["--strategy", "orthogonal", "--m", "3", "--d", "7", "--alpha", "1.3"],
        &["--strategy", "simplex", "--m", "5", "--d", "9", "--alpha", "0.7"],
        &["--strategy", "random", "--m", "2", "--d", "6", "--seed", "4"],
        &["--strategy", "angle", "--m", "2", "--d", "2", "--seed", "9"],
    ];
    for args in cases {
        let dir = tempfile::tempdir().unwrap();
        let out_dir = dir.path().to_str().unwrap();
        let mut full = vec!["design", "--output-dir", out_dir];
        full.extend_from_slice(args);
        let d = run(&full);
        assert!(d.status.success(), "{}", stderr(&d));
        let inputs = dir.path().join("inputs.csv");
        let a = run(&["analyze", "--input", inputs.to_str().unwrap()]);
        assert!(a.status.success(), "{}", stderr(&a));
        let (s1, s2) = (field(&stdout(&d), "sigma_min"), field(&stdout(&a), "sigma_min"));
        assert!((s1 - s2).abs() <= 1e-12, "{args:?}: {s1} vs {s2}");
    }
}

#[test]
fn simplex_example_prints_root_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "design",
        "--strategy",
        "simplex",
        "--m",
        "2",
        "--d",
        "2",
        "--alpha",
        "6.2832",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!((field(&stdout(&o), "sigma_min") - 3f64.sqrt()).abs() < 1e-12);
    let csv = std::fs::read_to_string(dir.path().join("inputs.csv")).unwrap();
    assert!(csv.starts_with("u0,u1\n"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 4);
}

fn robot_run(threads: &str, dir: &Path, config: &Path) -> Output {
    run(&[
        "robot",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "3",
        "--threads",
        threads,
        "--output-dir",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn robot_outputs_do_not_depend_on_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("robot.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1, "robot": {"d": 40, "rollout_steps": 120, "ecdf_neighbors": [3, 5]}}"#,
    )
    .unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = robot_run("1", &a, &cfg);
    let ob = robot_run("8", &b, &cfg);
    assert!(oa.status.success(), "{}", stderr(&oa));
    assert!(ob.status.success(), "{}", stderr(&ob));
    let (fa, fb) = (dir_bytes(&a), dir_bytes(&b));
    assert_eq!(fa.len(), 10);
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        assert!(bytes == &fb[name], "{name} differs between thread counts");
    }
    let strip = |o: &Output, d: &Path| stdout(o).replace(d.to_str().unwrap(), "<out>");
    assert_eq!(strip(&oa, &a), strip(&ob, &b));
}

#[test]
fn montecarlo_deterministic_and_seed_from_env() {
    let tmp = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for (threads, sub) in [("1", "a"), ("8", "b")] {
        let dir = tmp.path().join(sub);
        let o = run(&[
            "montecarlo",
            "--m",
            "4",
            "--d",
            "5,10,25",
            "--trials",
            "300",
            "--seed",
            "7",
            "--threads",
            threads,
            "--output-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        tables.push(std::fs::read(dir.join("montecarlo.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    let header = String::from_utf8(tables[0].clone()).unwrap();
    assert!(header.starts_with("d,q0,q25,q50,q75,q100,mean\n"));

    let dir = tmp.path().join("env");
    let o = bin()
        .env("EXCITE_ID_SEED", "7")
        .args(["montecarlo", "--m", "4", "--d", "5,10,25", "--trials", "300", "--output-dir"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(dir.join("montecarlo.csv")).unwrap(), tables[0]);
}

#[test]
fn validation_errors_exit_one_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, "{\"schema_version\": 1,\n \"robot\": {\"dd\": 3}}").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "robot"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bad.json") && err.contains("line 2"), "{err}");

    let data = tmp.path().join("data.csv");
    std::fs::write(&data, "cluster_id,x0,u0,y0\n0,0,1,1\n0,0,x,1\n").unwrap();
    let o = run(&["fit", "--dataset", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("data.csv") && err.contains("line 3"), "{err}");

    let o = run(&["fit", "--dataset", tmp.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.csv"));

    assert_eq!(run(&["design", "--m", "2", "--d", "1"]).status.code(), Some(1));
    assert_eq!(run(&["design", "--m", "2", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_two() {
    // every cluster center has x1 = 0, so the x1 observable is not excited
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("flat.csv");
    let mut text = String::from("cluster_id,x0,x1,u0,y0,y1\n");
    for c in 0..4 {
        for u in [-1.0, 1.0] {
            text.push_str(&format!("{c},{c},0,{u},{},0\n", c as f64 + u));
        }
    }
    std::fs::write(&data, text).unwrap();
    let o = run(&["fit", "--dataset", data.to_str().unwrap(), "--output-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("x1"));
}

#[test]
fn fit_and_kedmd_write_surrogates() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("lin.csv");
    let mut text = String::from("cluster_id,x0,x1,u0,y0,y1\n");
    let centers = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.7, 0.4), (-0.5, 0.3)];
    for (c, (x0, x1)) in centers.iter().enumerate() {
        for u in [-1.0, 0.5, 1.0] {
            text.push_str(&format!("{c},{x0},{x1},{u},{},{}\n", 0.9 * x0 + u, 0.8 * x1 - 0.1 * x0));
        }
    }
    std::fs::write(&data, text).unwrap();
    let out = tmp.path().join("out");
    let o = run(&["fit", "--dataset", data.to_str().unwrap(), "--r-eps", "0", "--output-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "clusters_fit"), 5.0);
    assert!(std::fs::read_to_string(out.join("surrogate.txt")).unwrap().starts_with("excite-id-surrogate 1\n"));

    let o = run(&[
        "kedmd",
        "--dataset",
        data.to_str().unwrap(),
        "--rho",
        "3",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(field(&s, "m"), 1.0);
    assert!(s.contains("c_exact: true"));
    assert!(out.join("kedmd_report.csv").exists());
}

#[test]
fn outputs_match_fixtures() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = run(&["design", "--strategy", "simplex", "--m", "2", "--d", "2", "--alpha", "6.2832", "--output-dir", out]);
    assert!(o.status.success());
    let o2 = run(&["montecarlo", "--m", "4", "--d", "5,10", "--trials", "50", "--seed", "7", "--output-dir", out]);
    assert!(o2.status.success());
    for (produced, fixture) in [("inputs.csv", "simplex_m2_d2.csv"), ("montecarlo.csv", "montecarlo_m4_seed7.csv")] {
        assert_eq!(
            std::fs::read(tmp.path().join(produced)).unwrap(),
            std::fs::read(fixtures.join(fixture)).unwrap(),
            "{produced} differs from {fixture}"
        );
    }
}
