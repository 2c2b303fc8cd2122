use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const STABLE: &str = "coupling = { kind = \"polynomial\", coeffs = [1.0, 1.0] }\nC = 1.0\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_solwave"));
    c.env_remove("SOLWAVE_OUT_DIR").env_remove("RUST_LOG");
    c
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&o.stdout), stderr(o))
    })
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn spectrum_of_case_two_has_roots_at_six_i() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "coupling = { kind = \"polynomial\", coeffs = [1, 1] }\nC = 2\n");
    let o = run(&cfg, &dir.path().join("out"), &["spectrum"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = stdout_json(&o);
    assert_eq!(j["case"], "II");
    let roots = j["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 2);
    let mut ims: Vec<f64> = roots.iter().map(|r| r["im"].as_f64().unwrap()).collect();
    ims.sort_by(f64::total_cmp);
    assert!((ims[0] + 6.0).abs() < 1e-8 && (ims[1] - 6.0).abs() < 1e-8, "{ims:?}");
    assert!(roots.iter().all(|r| r["re"].as_f64().unwrap().abs() < 1e-12));
    let file: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/spectrum.json")).unwrap()).unwrap();
    assert_eq!(file, j);
}

#[test]
fn even_grid_size_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{STABLE}[grid]\nL = 20\nn = 800\n"));
    let o = run(&cfg, &dir.path().join("out"), &["spectrum"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid.n"), "{}", stderr(&o));
}

#[test]
fn negative_dt_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{STABLE}[time]\ndt = -1e-3\n"));
    let o = run(&cfg, &dir.path().join("out"), &["validate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("time.dt"), "{}", stderr(&o));
}

#[test]
fn all_problems_are_reported_together() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "coupling = { kind = \"polynomial\", coeffs = [1, 1] }\nC = 1\nbetta = 2\n\
         [grid]\nL = 20\nn = 400\n[perturbation]\nd = -0.1\n",
    );
    let o = run(&cfg, &dir.path().join("out"), &["validate"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    for field in ["betta", "grid.n", "perturbation.d"] {
        assert!(e.contains(field), "{field} missing from:\n{e}");
    }
}

#[test]
fn syntax_errors_carry_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "C = 1\ncoupling = {\n");
    let o = run(&cfg, &dir.path().join("out"), &["validate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn small_beta_is_accepted_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{STABLE}beta = 1.5\n"));
    let o = run(&cfg, &dir.path().join("out"), &["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("Theorem 3.2 assumes β ≥ 2"), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("beta = 1.5"));
}

#[test]
fn minimal_config_is_fully_defaulted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), STABLE);
    let o = run(&cfg, &dir.path().join("out"), &["validate"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let t: toml::Table = text.parse().unwrap();
    assert_eq!(t["beta"].as_float(), Some(2.0));
    assert_eq!(t["grid"]["L"].as_float(), Some(50.0));
    assert_eq!(t["grid"]["n"].as_integer(), Some(4001));
    assert_eq!(t["time"]["dt"].as_float(), Some(1e-3));
    assert_eq!(t["perturbation"]["kind"].as_str(), Some("gaussian"));
}

#[test]
fn resolvent_check_converges() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["resolvent-verify", "--lambda", "2,3", "--y", "0.7", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = stdout_json(&o);
    assert!(j["order"].as_f64().unwrap() >= 1.8, "{j}");
    assert!(j["jump_xy"].as_f64().unwrap() <= 1e-10);
    assert!(j["jump_x0"].as_f64().unwrap() <= 1e-10);
    assert!(j["interior_residual"].as_f64().is_some());
}

const SHORT_RUN: &str = "coupling = { kind = \"polynomial\", coeffs = [1.0, 1.0] }\nC = 1.0\n\
                         [grid]\nL = 20.0\nn = 401\n[time]\nt_end = 2.0\ndt = 1e-2\nsnapshots = [1.0]\n\
                         [perturbation]\nkind = \"odd-bump\"\nd = 0.02\nphase = \"random\"\n";

#[test]
fn evolve_writes_traces_snapshots_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &["evolve", "--scheme", "volterra"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let boundary = std::fs::read_to_string(out.join("boundary.csv")).unwrap();
    let mut lines = boundary.lines();
    assert_eq!(lines.next(), Some("t,re,im"));
    assert_eq!(lines.count(), 201);
    let j = stdout_json(&o);
    let snaps = j["snapshots"].as_array().unwrap();
    let times: Vec<f64> = snaps.iter().map(|s| s["t"].as_f64().unwrap()).collect();
    assert_eq!(times, vec![0.0, 1.0, 2.0]);
    for s in snaps {
        let f = std::fs::read_to_string(out.join(s["file"].as_str().unwrap())).unwrap();
        assert!(f.starts_with("x,re,im\n"));
        assert_eq!(f.lines().count(), 402);
    }
    assert!(j["charge_drift_rel"].as_f64().unwrap() < 1e-2);
    assert!(out.join("config.toml").exists());
}

#[test]
fn crank_nicolson_is_selectable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    let o = run(&cfg, &dir.path().join("out"), &["evolve", "--scheme", "cn", "--t-end", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout_json(&o)["scheme"], "crank-nicolson");
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a, &["evolve"]).status.success());
    assert!(run(&cfg, &b, &["evolve", "--threads", "1"]).status.success());
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), 6);
    assert!(fa == fb, "outputs differ between runs");
}

#[test]
fn output_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{STABLE}output_dir = \"{}\"\n", dir.path().join("cfg").display()));
    let env_dir = dir.path().join("env");
    let o = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("solitary")
        .env("SOLWAVE_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(env_dir.join("solitary.json").exists());
    assert!(!dir.path().join("cfg").exists());
}

#[test]
fn check_mode_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let pass = write_config(dir.path(), &format!("{SHORT_RUN}[check.evolve]\ncharge_drift_rel = [0.0, 1e-2]\n"));
    assert_eq!(run(&pass, &out, &["evolve", "--check"]).status.code(), Some(0));

    let fail = write_config(dir.path(), &format!("{SHORT_RUN}[check.evolve]\ncharge_drift_rel = [1.0, 2.0]\n"));
    let o = run(&fail, &out, &["evolve", "--check"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("charge_drift_rel"));
    // without --check the thresholds are ignored
    assert_eq!(run(&fail, &out, &["evolve"]).status.code(), Some(0));

    let unknown = write_config(dir.path(), &format!("{SHORT_RUN}[check.evolve]\nnot_a_metric = [0.0, 1.0]\n"));
    assert_eq!(run(&unknown, &out, &["evolve", "--check"]).status.code(), Some(1));
}

#[test]
fn linear_decay_emits_curve_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{STABLE}fit_window = [2.0, 10.0]\n[grid]\nL = 20.0\nn = 401\n[time]\nt_end = 10.0\n"),
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &["linear-decay", "--dt", "1e-3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = stdout_json(&o);
    assert!(j["fit_exponent"].as_f64().unwrap() < 0.0, "{j}");
    assert_eq!(j["window"][1].as_f64(), Some(10.0));
    let csv = std::fs::read_to_string(out.join("linear_decay.csv")).unwrap();
    assert!(csv.starts_with("t,norm_Linf_negbeta,b0,b1\n"));
    // the projected datum stays in the continuous subspace
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[2].abs() < 1e-4 && v[3].abs() < 1e-4, "{line}");
    }
}

/// The full pipeline on the shipped stable configuration (several minutes).
#[test]
fn stability_check_passes_on_the_stable_config() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/stable.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &["stability", "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = stdout_json(&o);
    let p = j["fit_exponent_chi"].as_f64().unwrap();
    assert!((-1.8..=-1.2).contains(&p), "{p}");
    for f in ["modulation.csv", "majorant.csv", "remainder.csv", "asymptotics.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let header = std::fs::read_to_string(out.join("modulation.csv")).unwrap();
    assert!(header.starts_with("t,omega,theta,gamma,norm_chi,dot_omega,dot_gamma\n"));
}
