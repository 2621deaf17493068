use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dispersia_cli::commands::{fit, read_trace, simulate, spectrum};
use dispersia_cli::RunConfig;
use dispersia_core::{DecayKind, EnergyTrace};
use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn golden(name: &str) -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn dispersia(args: &[&str]) -> Output {
    dispersia_env(args, &[])
}

fn dispersia_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dispersia"));
    cmd.args(args).env_remove("DISPERSIA_LOG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Structural JSON equality with floats compared to a relative tolerance.
fn assert_close(a: &Value, b: &Value, path: &str) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()) + 1e-15, "{path}: {x} vs {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}: length");
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                assert_close(u, v, &format!("{path}[{i}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            let kx: Vec<_> = x.keys().collect();
            let ky: Vec<_> = y.keys().collect();
            assert_eq!(kx, ky, "{path}: keys");
            for (k, u) in x {
                assert_close(u, &y[k], &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

#[test]
fn analyze_reports_match_snapshots() {
    let dir = TempDir::new().unwrap();
    for (config, snapshot, exit, m) in [
        ("debye.toml", "analyze_debye.json", 0, Some(0)),
        ("lorentz.toml", "analyze_lorentz.json", 0, Some(2)),
        ("drude.toml", "analyze_drude.json", 0, Some(2)),
        ("negative_debye.json", "analyze_negative_debye.json", 3, None),
    ] {
        let out = dir.path().join(snapshot);
        let run = dispersia(&["analyze", "--config", s(&configs().join(config)), "--out", s(&out)]);
        assert_eq!(code(&run), exit, "{config}: {}", stderr(&run));
        let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_close(&report, &golden(snapshot), config);
        assert_eq!(report["passive"], Value::Bool(exit == 0), "{config}");
        if let Some(m) = m {
            assert_eq!(report["m"], Value::from(m), "{config}");
        }
    }
}

#[test]
fn debye_sigma_and_omega0_are_exact() {
    let run = dispersia(&["analyze", "--config", s(&configs().join("debye.toml"))]);
    assert_eq!(code(&run), 0);
    let r: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert!((r["sigma_E"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
    assert!((r["omega0"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn non_passive_medium_reports_a_witness() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let run = dispersia(&["analyze", "--config", s(&configs().join("negative_debye.json")), "--out", s(&out)]);
    assert_eq!(code(&run), 3);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let w = r["witnesses"].as_array().unwrap();
    assert!(!w.is_empty());
    // Re(iω ν̂(iω)) = -ω²/(1+ω²) < 0 at every ω > 0
    for x in w {
        assert!(x.as_f64().unwrap() > 0.0);
    }
}

#[test]
fn simulate_is_identical_across_thread_counts_and_log_levels() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("lorentz.toml");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    assert_eq!(code(&dispersia(&["simulate", "--config", s(&cfg), "--out", s(&a), "--threads", "1"])), 0);
    assert_eq!(code(&dispersia(&["simulate", "--config", s(&cfg), "--out", s(&b), "--threads", "4"])), 0);
    let logged = dispersia_env(&["simulate", "--config", s(&cfg), "--out", s(&c)], &[("DISPERSIA_LOG", "debug")]);
    assert_eq!(code(&logged), 0);
    let (a, b, c) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), std::fs::read(c).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn simulate_then_fit_round_trips_exactly() {
    let dir = TempDir::new().unwrap();
    let cfg_path = configs().join("debye.toml");
    let csv = dir.path().join("trace.csv");
    let report = dir.path().join("fit.json");
    assert_eq!(code(&dispersia(&["simulate", "--config", s(&cfg_path), "--out", s(&csv)])), 0);
    let run = dispersia(&["fit", s(&csv), "--window", "5,50", "--out", s(&report)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));

    let cfg = RunConfig::load(&cfg_path).unwrap();
    let trace = simulate(&cfg, None).unwrap();
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), trace.to_csv());
    let parsed = read_trace(&csv).unwrap();
    assert_eq!(parsed.times, trace.times);
    assert_eq!(parsed.energy, trace.energy);

    let (expected, _) = fit(&trace, Some((5.0, 50.0))).unwrap();
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(written, serde_json::to_value(&expected).unwrap());
    assert_eq!(expected.kind, DecayKind::Exponential);
}

#[test]
fn fit_reads_trace_and_window_from_config() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("trace.csv");
    assert_eq!(code(&dispersia(&["simulate", "--config", s(&configs().join("debye.toml")), "--out", s(&csv)])), 0);
    let cfg = write(&dir, "fit.toml", "[fit]\ntrace = \"trace.csv\"\nwindow = [5.0, 50.0]\nout = \"fit.json\"\n");
    let run = dispersia(&["fit", "--config", s(&cfg)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let via_config: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    let direct = dispersia(&["fit", s(&csv), "--window", "5,50"]);
    let direct: Value = serde_json::from_slice(&direct.stdout).unwrap();
    assert_eq!(via_config, direct);
}

#[test]
fn zero_amplitude_gives_zero_energy() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "zero.toml",
        "[medium]\nnu_e = { type = \"exp_poly\", terms = [{ poly_re = [1.0], z_re = -1.0 }] }\n\
         [simulate]\ndt = 0.01\nT = 5.0\nhistory_norm = true\nmodes = [{ k = 1.0, amplitude = 0.0 }, { k = 3.0, amplitude = 0.0 }]\n",
    );
    let run = dispersia(&["simulate", "--config", s(&cfg)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let trace = EnergyTrace::from_csv(&String::from_utf8(run.stdout).unwrap()).unwrap();
    assert_eq!(trace.len(), 501);
    assert!(trace.energy.iter().all(|&e| e == 0.0));
    assert!(trace.history_norm.unwrap().iter().all(|&h| h == 0.0));
}

#[test]
fn lossless_energy_is_conserved() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "vacuum.toml", "[medium]\neps = 2.0\nmu = 0.5\n[simulate]\ndt = 0.01\nT = 20.0\nmodes = [{ k = 2.0, amplitude = 1.0 }]\n");
    let run = dispersia(&["simulate", "--config", s(&cfg)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let trace = EnergyTrace::from_csv(&String::from_utf8(run.stdout).unwrap()).unwrap();
    let e0 = trace.energy[0];
    assert!(e0 > 0.0);
    assert!(trace.energy.iter().all(|&e| (e - e0).abs() <= 1e-12 * e0));
}

#[test]
fn spectrum_matches_in_process_computation() {
    let dir = TempDir::new().unwrap();
    let cfg_path = configs().join("debye.toml");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(code(&dispersia(&["spectrum", "--config", s(&cfg_path), "--out", s(&a), "--threads", "1"])), 0);
    assert_eq!(code(&dispersia(&["spectrum", "--config", s(&cfg_path), "--out", s(&b), "--threads", "4"])), 0);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let rows = spectrum(&RunConfig::load(&cfg_path).unwrap(), Some(1)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,abscissa,n_eigs"));
    assert_eq!(rows.len(), 100);
    for (line, row) in lines.zip(&rows) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0].parse::<f64>().unwrap(), row.k);
        assert_eq!(cols[1].parse::<f64>().unwrap(), row.abscissa);
        assert_eq!(cols[2].parse::<usize>().unwrap(), row.n_eigs);
        assert!(row.abscissa < 0.0, "k = {}: {}", row.k, row.abscissa);
    }
}

#[test]
fn lossless_spectrum_sits_on_the_axis() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "vacuum.toml", "[medium]\neps = 1.0\n[spectrum]\nk = [0.5, 1.0, 10.0, 100.0]\n");
    let run = dispersia(&["spectrum", "--config", s(&cfg)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let text = String::from_utf8(run.stdout).unwrap();
    for line in text.lines().skip(1) {
        let a: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(a.abs() <= 1e-12, "{line}");
    }
}

#[test]
fn invalid_fields_are_named_and_nothing_is_written() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.csv");
    for (name, text, field) in [
        ("dt.toml", "[medium]\n[simulate]\ndt = -0.01\nT = 1.0\nmodes = [{ k = 1.0, amplitude = 1.0 }]\n", "simulate.dt"),
        ("t.toml", "[medium]\n[simulate]\ndt = 0.01\nT = 0.0\nmodes = [{ k = 1.0, amplitude = 1.0 }]\n", "simulate.T"),
        ("eps.toml", "[medium]\neps = -1.0\n[simulate]\ndt = 0.01\nT = 1.0\nmodes = [{ k = 1.0, amplitude = 1.0 }]\n", "medium.eps"),
        ("typo.toml", "[medium]\n[simulate]\ndt = 0.01\nT = 1.0\nstrde = 2\nmodes = [{ k = 1.0, amplitude = 1.0 }]\n", "strde"),
        ("type.toml", "[medium]\n[simulate]\ndt = \"fast\"\nT = 1.0\n", "simulate.dt"),
        (
            "mode.json",
            r#"{"medium": {}, "simulate": {"dt": 0.01, "T": 1.0, "modes": [{"k": 1.0, "amplitude": 1.0, "phase": 0.0}]}}"#,
            "phase",
        ),
    ] {
        let cfg = write(&dir, name, text);
        let run = dispersia(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(code(&run), 1, "{name}: {}", stderr(&run));
        assert!(stderr(&run).contains(field), "{name}: {}", stderr(&run));
        assert!(!out.exists(), "{name}: partial output");
    }
}

#[test]
fn parse_errors_carry_file_and_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "lines.toml", "[medium]\neps = 1.0\n\n[simulate]\ndt = 0.01\nT = true\n");
    let run = dispersia(&["simulate", "--config", s(&cfg)]);
    assert_eq!(code(&run), 1);
    let err = stderr(&run);
    assert!(err.contains("lines.toml:6:"), "{err}");
    assert!(err.contains("simulate.T"), "{err}");
}

#[test]
fn missing_kernel_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "missing.toml", "[medium]\nnu_e = \"nowhere.json\"\n");
    let run = dispersia(&["analyze", "--config", s(&cfg)]);
    assert_eq!(code(&run), 1);
    assert!(stderr(&run).contains("nowhere.json"), "{}", stderr(&run));
}

#[test]
fn sampled_kernels_cannot_be_simulated() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("g.csv");
    let cfg = configs().join("gaussian.toml");
    let run = dispersia(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&run), 4, "{}", stderr(&run));
    assert!(!out.exists());
    let spec = dir.path().join("g_spec.csv");
    let run = dispersia(&["spectrum", "--config", s(&write(&dir, "g.toml", "[medium]\nnu_e = { type = \"sampled_builtin\", name = \"gaussian\", C = 3.5, delta = 1.0 }\n[spectrum]\nk = [1.0]\n")), "--out", s(&spec)]);
    assert_eq!(code(&run), 4, "{}", stderr(&run));
    assert!(!spec.exists());
    // analysis works on samples alone
    let run = dispersia(&["analyze", "--config", s(&cfg)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let r: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(r["method"], "numerically_checked");
}

#[test]
fn failed_certificates_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let grid = "[analyze]\ngrid = { omega_min = 0.01, omega_max = 100.0, points = 500 }\n";
    for (name, kernel) in [
        // |ν″(t)|e^{t} peaks near 3.34, so C = 1.2 is violated
        ("weak.toml", "{ type = \"sampled_builtin\", name = \"gaussian\", C = 1.2, delta = 1.0 }"),
        ("growing.toml", "{ type = \"exp_poly\", terms = [{ poly_re = [1.0], z_re = 0.1 }] }"),
    ] {
        let cfg = write(&dir, name, &format!("[medium]\nnu_e = {kernel}\n{grid}"));
        let out = dir.path().join("report.json");
        let run = dispersia(&["analyze", "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(code(&run), 2, "{name}: {}", stderr(&run));
        assert!(stderr(&run).contains("medium.nu_e"), "{name}: {}", stderr(&run));
        assert!(!out.exists());
    }
}

#[test]
fn inconclusive_fit_still_writes_its_report() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("t,energy,history_norm\n");
    for i in 0..=500 {
        let t = 0.1 * i as f64;
        csv.push_str(&format!("{:.16e},{:.16e},\n", t, 1.0 + 0.9 * (t).sin()));
    }
    let trace = write(&dir, "wobble.csv", &csv);
    let out = dir.path().join("fit.json");
    let run = dispersia(&["fit", s(&trace), "--out", s(&out)]);
    assert_eq!(code(&run), 5, "{}", stderr(&run));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["kind"], "inconclusive");
}

#[test]
fn bad_fit_inputs_are_rejected() {
    let dir = TempDir::new().unwrap();
    let trace = write(&dir, "bad.csv", "time,energy\n0,1\n");
    let run = dispersia(&["fit", s(&trace)]);
    assert_eq!(code(&run), 1);
    assert!(stderr(&run).contains("bad.csv"), "{}", stderr(&run));
    let good = write(&dir, "good.csv", "t,energy,history_norm\n0,1,\n1,0.5,\n2,0.25,\n");
    let run = dispersia(&["fit", s(&good), "--window", "3,1"]);
    assert_eq!(code(&run), 1, "{}", stderr(&run));
    let run = dispersia(&["fit"]);
    assert_eq!(code(&run), 1);
    assert!(stderr(&run).contains("fit.trace"), "{}", stderr(&run));
}
