use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use neqdeco::units::{HBAR, K_B};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn neqdeco(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neqdeco"))
        .args(args)
        .arg("--out")
        .arg(out)
        .current_dir(root())
        .output()
        .unwrap()
}

fn ok(args: &[&str], out: &Path) {
    let o = neqdeco(args, out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    rows.iter().map(|r| r[k]).collect()
}

fn report(path: &Path) -> toml::Table {
    fs::read_to_string(path).unwrap().parse().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn equilibrium_contrast_is_gaussian_in_time() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["contrast", "--config", "scenarios/equilibrium.toml"], tmp.path());
    let csv = tmp.path().join("contrast.csv");
    let t = column(&csv, "t");
    let (eta, temp, d, tu) = (1.5e-26, 300.0, 20e-9, 1e-6);
    let rate = eta * K_B * temp * d * d / (HBAR * HBAR) * tu;
    for method in ["closed_form", "quadrature"] {
        for (t, c) in t.iter().zip(column(&csv, &format!("contrast_{method}"))) {
            let want = (-rate * t).exp();
            assert!((c - want).abs() <= 1e-12 * want, "{method} t={t}: {c} vs {want}");
        }
    }
    let tc = report(&tmp.path().join("contrast.toml"))["coherence_time"].as_float().unwrap();
    assert!((tc * rate - 1.0).abs() < 1e-12);
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(root().join("scenarios/equilibrium.toml")).unwrap();
    let cases = [
        (base.replace("width = \"1 nm\"", "width = \"1\""), "cat.width"),
        (base.replace("width = \"1 nm\"", "width = \"1 kg\""), "cat.width"),
        (base.replace("steps = 200", "steps = 200\ncolour = 1"), "colour"),
        (base.replace("\"quadrature\"", "\"fourier\""), "run.methods[1]"),
        (base.replace("temperature = \"300 K\"", "temperature = \"-3 K\""), "environment[0]"),
    ];
    for (i, (text, path)) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("bad{i}.toml"), text);
        let o = neqdeco(&["contrast", "--config", cfg.to_str().unwrap()], &tmp.path().join("out"));
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{err}");
        assert!(err.contains("ConfigInvalid") && err.contains(path), "case {i}: {err}");
    }
    let o = neqdeco(&["efftemp", "--config", "no/such.toml"], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let o = neqdeco(&["invert", "--config", "scenarios/equilibrium.toml"], &tmp.path().join("out"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trap"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3_with_the_error_name() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["heating", "--config", "scenarios/roundtrip.toml"], tmp.path());
    let (header, rows) = read_csv(&tmp.path().join("heating.csv"));
    assert_eq!(header, ["omega_rad_s", "ndot_quanta_s", "rel_uncertainty"]);
    assert_eq!(rows.len(), 25);
    // a field-driven dataset is not flat enough to calibrate the ambient friction
    let data = tmp.path().join("heating.csv");
    let o = neqdeco(
        &["invert", "--config", "scenarios/roundtrip.toml", "--ambient", data.to_str().unwrap(), "--data", data.to_str().unwrap()],
        &tmp.path().join("inv"),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("InconsistentFlatness"));
}

#[test]
fn invert_from_files_matches_synthesized_run() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&["heating", "--config", "scenarios/roundtrip.toml", "--seed", "3"], &data);
    ok(&["invert", "--config", "scenarios/roundtrip.toml", "--seed", "3"], &tmp.path().join("a"));
    let (amb, full) = (data.join("ambient.csv"), data.join("heating.csv"));
    ok(
        &["invert", "--config", "scenarios/roundtrip.toml", "--ambient", amb.to_str().unwrap(), "--data", full.to_str().unwrap()],
        &tmp.path().join("b"),
    );
    for f in ["fit_report.toml", "teff.csv", "spectrum.csv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap(), "{f}");
    }
    let fit = report(&tmp.path().join("a/fit_report.toml"));
    let tau = fit["components"][0]["corr_time_s"].as_float().unwrap();
    assert!((tau / 16e-9 - 1.0).abs() < 0.1);
    assert_eq!(fit["covariance_order"].as_array().unwrap().len(), 3);
}

#[test]
fn reduced_twin_reproduces_si_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    // 1 μs, 1 nm reduced scales for mass, temperature and friction
    let m = HBAR * 1e-6 / 1e-18;
    let temp = HBAR / (K_B * 1e-6);
    let fric = HBAR / 1e-18;
    let si = r#"
[system]
mass = "40 amu"
frequency = "1 MHz"
[[environment]]
kind = "delta"
coupling = "1e-27 kg/s"
temperature = "300 K"
[[environment]]
kind = "exponential"
coupling = "4e-27 kg/s"
corr_time = "300 ns"
temperature = "20 K"
[cat]
separation = "20 nm"
width = "1 nm"
[run]
t_max = "3 us"
steps = 60
methods = ["closed_form", "exact"]
"#;
    let reduced = format!(
        r#"
[system]
mass = "{} reduced"
frequency = "{} reduced"
[[environment]]
kind = "delta"
coupling = "{} reduced"
temperature = "{} reduced"
[[environment]]
kind = "exponential"
coupling = "{} reduced"
corr_time = "0.3 reduced"
temperature = "{} reduced"
[cat]
separation = "20 reduced"
width = "1 reduced"
[run]
t_max = "3 reduced"
steps = 60
methods = ["closed_form", "exact"]
"#,
        40.0 * neqdeco::units::AMU / m,
        2.0 * std::f64::consts::PI,
        1e-27 / fric,
        300.0 / temp,
        4e-27 / fric,
        20.0 / temp,
    );
    let a = write(tmp.path(), "si.toml", si);
    let b = write(tmp.path(), "reduced.toml", &reduced);
    for (cfg, out) in [(&a, "a"), (&b, "b")] {
        ok(&["contrast", "--config", cfg.to_str().unwrap()], &tmp.path().join(out));
        ok(&["efftemp", "--config", cfg.to_str().unwrap()], &tmp.path().join(out));
    }
    for f in ["contrast.csv", "teff.csv"] {
        let (ha, ra) = read_csv(&tmp.path().join("a").join(f));
        let (hb, rb) = read_csv(&tmp.path().join("b").join(f));
        assert_eq!(ha, hb);
        for (x, y) in ra.iter().flatten().zip(rb.iter().flatten()) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1e-300), "{f}: {x} vs {y}");
        }
    }
}

#[test]
fn compare_without_noise_reports_zero_deviation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "quiet.toml",
        r#"
[system]
mass = "1 reduced"
frequency = "1 reduced"
[[environment]]
kind = "exponential"
coupling = "0.5 reduced"
corr_time = "1 reduced"
temperature = "0 K"
[cat]
separation = "2 reduced"
width = "0.2 reduced"
[run]
t_max = "5 reduced"
steps = 20
methods = ["closed_form", "quadrature", "exact"]
"#,
    );
    ok(&["compare", "--config", cfg.to_str().unwrap()], &tmp.path().join("out"));
    let csv = tmp.path().join("out/contrast.csv");
    for m in ["closed_form", "quadrature", "exact"] {
        assert!(column(&csv, &format!("contrast_{m}")).iter().all(|c| *c == 1.0), "{m}");
    }
    let rep = report(&tmp.path().join("out/compare.toml"));
    let pairs = rep["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 3);
    for p in pairs {
        assert_eq!(p["max_abs_log_deviation"].as_float(), Some(0.0));
        assert_eq!(p["max_rel_contrast_deviation"].as_float(), Some(0.0));
    }
    let tc = report(&tmp.path().join("out/contrast.toml"));
    assert!(!tc.contains_key("coherence_time"));
}

#[test]
fn compare_at_strong_coupling_records_deviation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "strong.toml",
        r#"
[system]
mass = "1 reduced"
frequency = "1 reduced"
[[environment]]
kind = "delta"
coupling = "1 reduced"
temperature = "2 reduced"
[cat]
separation = "2 reduced"
width = "0.2 reduced"
[run]
t_max = "1 reduced"
steps = 50
methods = ["closed_form", "exact"]
"#,
    );
    ok(&["compare", "--config", cfg.to_str().unwrap()], &tmp.path().join("out"));
    let rep = report(&tmp.path().join("out/compare.toml"));
    let dev = rep["pairs"][0]["max_rel_contrast_deviation"].as_float().unwrap();
    assert!(dev.is_finite() && dev > 0.0);
}

#[test]
fn fig2_orders_the_variants() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["fig2"], tmp.path());
    let rep = report(&tmp.path().join("fig2.toml"));
    let v = rep["variants"].as_array().unwrap();
    let get = |i: usize, k: &str| v[i][k].as_float().unwrap();
    let names: Vec<_> = v.iter().map(|x| x["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["fast_hot", "fast_cold", "equal"]);
    // same total noise, so the same long-time temperature
    for i in 1..3 {
        assert!((get(i, "t_eff_asymptote") / get(0, "t_eff_asymptote") - 1.0).abs() < 1e-12);
    }
    assert!(get(0, "t_eff_initial") > get(2, "t_eff_initial") && get(2, "t_eff_initial") > get(1, "t_eff_initial"));
    assert!(get(0, "coherence_time") < get(2, "coherence_time") && get(2, "coherence_time") < get(1, "coherence_time"));

    let csv = tmp.path().join("contrast.csv");
    let (hot, cold, equal) =
        (column(&csv, "contrast_exact_fast_hot"), column(&csv, "contrast_exact_fast_cold"), column(&csv, "contrast_exact_equal"));
    for i in 1..hot.len() {
        assert!(hot[i] <= equal[i] && equal[i] <= cold[i], "row {i}");
    }
    let (h, rows) = read_csv(&tmp.path().join("teff.csv"));
    assert_eq!(h.len(), 4);
    assert_eq!(rows.len(), 401);
}

#[test]
fn wigner_dumps_a_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "small.toml",
        r#"
[system]
mass = "1 reduced"
frequency = "0 reduced"
[[environment]]
kind = "delta"
coupling = "0.1 reduced"
temperature = "1 reduced"
[cat]
separation = "2 reduced"
width = "0.2 reduced"
[run]
t_max = "1 reduced"
steps = 10
methods = ["closed_form", "grid"]
"#,
    );
    ok(&["wigner", "--config", cfg.to_str().unwrap()], &tmp.path().join("w"));
    ok(&["contrast", "--config", cfg.to_str().unwrap()], &tmp.path().join("c"));
    let grid = column(&tmp.path().join("w/contrast.csv"), "a_int_grid");
    assert_eq!(grid, column(&tmp.path().join("c/contrast.csv"), "a_int_grid"));
    let closed = column(&tmp.path().join("c/contrast.csv"), "a_int_closed_form");
    assert!((grid[10] - closed[10]).abs() < 0.05 * closed[10]);
    let (header, rows) = read_csv(&tmp.path().join("w/wigner.csv"));
    assert_eq!(header.len(), 5);
    assert!(rows.len() > 100);
}
