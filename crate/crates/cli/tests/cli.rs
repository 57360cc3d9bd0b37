use std::path::Path;
use std::process::{Command, Output};

fn nifrde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nifrde"))
        .args(args)
        .env_remove("NIFRDE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn rows(out: &Output, delim: char) -> Vec<Vec<String>> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| l.split(delim).map(str::to_owned).collect())
        .collect()
}

fn column(table: &[Vec<String>], name: &str) -> Vec<f64> {
    let idx = table[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    table[1..].iter().map(|r| r[idx].parse().unwrap()).collect()
}

#[test]
fn ml_values() {
    let out = nifrde(&["ml", "--q", "0.5", "--z", "0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(column(&rows(&out, ','), "value"), vec![1.0]);

    let out = nifrde(&["ml", "--alpha", "1", "--beta", "1", "--z", "1"]);
    assert!((column(&rows(&out, ','), "value")[0] - std::f64::consts::E).abs() < 1e-10);

    let out = nifrde(&["ml", "--q", "1", "--z-from", "-1", "--z-to", "1", "--z-step", "0.5"]);
    let t = rows(&out, ',');
    let z = column(&t, "z");
    let v = column(&t, "value");
    assert_eq!(z.len(), 5);
    for (z, v) in z.iter().zip(&v) {
        assert!((v - z.exp()).abs() < 1e-10 * z.exp());
    }
}

#[test]
fn exit_codes() {
    assert_eq!(code(&nifrde(&["ml", "--q", "0.5", "--z", "60"])), 2);
    assert_eq!(code(&nifrde(&["bogus"])), 1);
    assert_eq!(code(&nifrde(&["solve", "--builtin", "nope"])), 1);
    assert_eq!(code(&nifrde(&["solve", "--builtin", "example7", "--A", "1"])), 1);
    assert_eq!(code(&nifrde(&["solve", "--builtin", "example1-linear", "--A", "500"])), 3);
    assert_eq!(code(&nifrde(&["lyap", "--builtin", "example8", "--t", "5.5", "--x", "1"])), 4);
    assert_eq!(code(&nifrde(&["check", "--builtin", "example1-linear", "--A", "1"])), 5);
    assert_eq!(code(&nifrde(&["--help"])), 0);
}

#[test]
fn relaxation_solution_tracks_closed_form() {
    let out = nifrde(&["solve", "--builtin", "figure1-relaxation"]);
    assert_eq!(code(&out), 0);
    let err = column(&rows(&out, ','), "abs_err");
    assert!(err.iter().all(|e| *e <= 5e-3), "max {:?}", err.iter().cloned().fold(0.0, f64::max));
}

#[test]
fn linear_with_zero_rate_is_exact() {
    let out = nifrde(&["solve", "--builtin", "example1-linear", "--A", "0", "--steps", "256"]);
    assert_eq!(code(&out), 0);
    let t = rows(&out, ',');
    assert_eq!(&t[0][..4], ["t", "segment_kind", "k", "x_1"]);
    assert!(column(&t, "abs_err").iter().all(|e| *e < 1e-10));
}

#[test]
fn zero_problem_stays_at_rest() {
    let out = nifrde(&["solve", "--builtin", "zero", "--steps", "100"]);
    assert_eq!(code(&out), 0);
    assert!(column(&rows(&out, ','), "x_1").iter().all(|x| *x == 0.0));
}

#[test]
fn lyapunov_evaluations() {
    let out = nifrde(&["lyap", "--builtin", "example8", "--t", "2", "--x", "0.5,1"]);
    assert_eq!(code(&out), 0);
    let t = rows(&out, ',');
    assert!(column(&t, "closed_form_value").iter().all(|v| *v <= 0.0));

    let out = nifrde(&["lyap", "--builtin", "example8", "--x0", "0", "--t", "2", "--x", "0"]);
    let t = rows(&out, ',');
    for name in ["dini_value", "caputo_dini_value", "closed_form_value"] {
        assert_eq!(column(&t, name), vec![0.0]);
    }

    let out = nifrde(&["lyap", "--builtin", "example5", "--t", "1", "--x", "1"]);
    assert_eq!(code(&out), 0);
    assert!((column(&rows(&out, ','), "dini_value")[0] + 2.0).abs() < 1e-6);

    let out = nifrde(&["lyap", "--figure2", "--t-from", "1", "--t-to", "2", "--t-step", "0.5"]);
    assert_eq!(column(&rows(&out, ','), "t"), vec![1.0, 1.5, 2.0]);
}

#[test]
fn checks_hold_on_stable_examples() {
    for b in ["example6", "example8"] {
        let out = nifrde(&["check", "--builtin", b]);
        assert_eq!(code(&out), 0, "{b}");
        let t = rows(&out, ',');
        assert!(t[1..].iter().all(|r| r[1] == "holds"), "{b}: {t:?}");
    }
}

#[test]
fn probe_finds_no_delta_for_growth() {
    let out = nifrde(&["probe", "--builtin", "example1-linear", "--A", "1", "--epsilon", "0.5"]);
    assert_eq!(code(&out), 5);
    let t = rows(&out, ',');
    assert_eq!(t.last().unwrap()[0], "probe(no delta)");
}

#[test]
fn output_is_deterministic() {
    let args = ["solve", "--builtin", "example6", "--steps", "600"];
    assert_eq!(nifrde(&args).stdout, nifrde(&args).stdout);
}

#[test]
fn tsv_format() {
    let out = nifrde(&["--format", "tsv", "ml", "--q", "0.5", "--z", "0"]);
    let t = rows(&out, '\t');
    assert_eq!(t[0], ["z", "value"]);
    assert_eq!(t.len(), 2);
}

#[test]
fn output_dir_and_explicit_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nifrde"))
        .args(["ml", "--q", "0.5", "--z", "0"])
        .env("NIFRDE_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("ml.csv")).unwrap();
    assert!(text.starts_with("z,value\n"));

    let path = dir.path().join("nested/out.tsv");
    let out = nifrde(&["--format", "tsv", "--output", path.to_str().unwrap(), "ml", "--q", "0.5", "--z", "0"]);
    assert_eq!(code(&out), 0);
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("z\tvalue\n"));
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn config_file_supplies_problem_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(
        &cfg,
        r#"
        [problem]
        builtin = "example1-linear"
        A = 0.0
        [problem.schedule]
        s = [0.0, 1.5]
        t = [1.0]
        horizon = 2.5
        [solver]
        steps = 100
        "#,
    );
    let out = nifrde(&["--config", cfg.to_str().unwrap(), "solve"]);
    assert_eq!(code(&out), 0);
    let t = rows(&out, ',');
    assert!(column(&t, "abs_err").iter().all(|e| *e < 1e-10));
    assert!((column(&t, "t").last().unwrap() - 2.5).abs() < 1e-12);

    let out = nifrde(&["--config", cfg.to_str().unwrap(), "solve", "--A", "-1"]);
    assert_eq!(code(&out), 0);
    assert!(column(&rows(&out, ','), "abs_err").iter().any(|e| *e > 0.0));

    write(&cfg, "[problem]\nbogus = 1\n");
    assert_eq!(code(&nifrde(&["--config", cfg.to_str().unwrap(), "solve"])), 1);
}
