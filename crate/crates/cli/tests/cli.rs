use std::path::Path;
use std::process::{Command, Output};

fn subcell(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subcell"))
        .args(args)
        .env("SUBCELL_OUTPUT_DIR", out_dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV written by the binary, after checking its header.
fn read_csv(path: &Path, kind: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("# subcell-csv v1 {kind}"));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

const SMALL_RUN: &str = r#"
[law]
name = "advection"
alpha = 2.0

[mesh]
n_u = 3
n_v = 3
degree = 3

[integrate]
t_final = 0.25
tol = 1e-9
samples = 5

[checks]
max_conservation_drift = 1e-12
max_energy_rate = 1e-12
"#;

#[test]
fn verify_single_degree_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = subcell(&["verify", "--degree", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("check golden lobatto d=1: PASS"));
    assert!(text.contains("check golden radau d=1: PASS"));
    assert_eq!(text.matches("check operator d=2").count(), 6);
    let (header, rows) = read_csv(&dir.path().join("verify.csv"), "verify");
    assert_eq!(
        header,
        ["degree", "family", "split", "check", "value", "tolerance", "passed"]
    );
    assert!(rows.iter().all(|r| r[0] == "2" && r[6] == "true"));
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[mesh]\nn_u = 2\nn_v = 2\ndegree = 2\nsmoothness = 3\n");
    let o = subcell(&["run", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("smoothness"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--frobnicate"][..],
        &["spectrum", "--flux", "nonsense"],
        &["spectrum", "--elements", "3,x"],
        &["verify", "--preset", "no-such-preset"],
        &["run", "--config", "a.toml", "--preset", "spectra-fig5"],
    ] {
        let o = subcell(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn run_writes_diagnostics_and_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_RUN);
    let o = subcell(&["run", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("diagnostics.csv"), "diagnostics");
    assert_eq!(header[..3], ["time", "integral_w", "energy"]);
    assert_eq!(rows.len(), 6);
    for r in &rows {
        // 17 significant digits.
        let mantissa = r[0].split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 18, "{}", r[0]);
        let rate: f64 = r[3].parse().unwrap();
        assert!(rate <= 1e-12);
    }
    let (header, rows) = read_csv(&dir.path().join("solution.csv"), "solution");
    assert_eq!(header, ["x", "element", "mesh", "w", "exact_w"]);
    // Three u elements (one split) and three v elements (one split).
    assert_eq!(rows.len(), 2 * (2 * 4 + 8));
    assert!(rows.iter().any(|r| r[2] == "u") && rows.iter().any(|r| r[2] == "v"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["completed"], true);
}

#[test]
fn output_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), SMALL_RUN);
    for dir in [a.path(), b.path()] {
        assert!(subcell(&["run", "--config", &cfg], dir).status.success());
        assert!(subcell(&["verify", "--degree", "3"], dir).status.success());
    }
    for name in ["diagnostics.csv", "solution.csv", "verify.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL_RUN.replace("max_energy_rate = 1e-12", "max_energy_rate = -1.0"),
    );
    let o = subcell(&["run", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("check energy rate: FAIL"));
}

#[test]
fn aborted_run_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL_RUN.replace("samples = 5", "samples = 5\nstop_growth = 0.5"),
    );
    let o = subcell(&["run", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("check integration: FAIL"));
    let (_, rows) = read_csv(&dir.path().join("diagnostics.csv"), "diagnostics");
    assert_eq!(rows.len(), 1);
}

#[test]
fn spectrum_preset_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let o = subcell(
        &[
            "spectrum",
            "--preset",
            "spectra-fig5",
            "--degree",
            "2",
            "--elements",
            "4,5",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stdout(&o));
    let (header, rows) = read_csv(&dir.path().join("spectrum.csv"), "spectrum");
    assert_eq!(header, ["re", "im"]);
    // 4 u elements, one split: 3 * 3 + 6 nodes; 5 v elements: 15 nodes.
    assert_eq!(rows.len(), 9 + 6 + 15);
    let max_re = rows
        .iter()
        .map(|r| r[0].parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(max_re <= 1e-10);
    assert!(dir.path().join("spectrum_baseline.csv").exists());
}

#[test]
fn spectrum_trace_matches_on_smallest_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[mesh]\nn_u = 1\nn_v = 1\ndegree = 1\n");
    let o = subcell(&["spectrum", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("check trace identity: PASS"));
}

#[test]
fn convergence_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[mesh]\nn_u = 2\nn_v = 2\ndegree = 3\n[integrate]\nt_final = 0.1\ntol = 1e-12\n[convergence]\nelements = [4, 8]\neoc_tolerance = 1.0\n",
    );
    let o = subcell(&["convergence", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let (header, rows) = read_csv(&dir.path().join("convergence_d3.csv"), "convergence");
    assert_eq!(header, ["N", "var", "error", "eoc"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][3], "");
    let eoc: f64 = rows[1][3].parse().unwrap();
    assert!(eoc > 3.0, "{eoc}");
}

#[test]
fn convergence_needs_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[law]\nname = \"euler\"\n[problem]\nkind = \"euler-manufactured\"\nsource = false\n[convergence]\nelements = [2]\n",
    );
    let o = subcell(&["convergence", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("exact"), "{}", stderr(&o));
}
