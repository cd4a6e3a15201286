use std::fs;
use std::path::Path;
use std::process::Command;

use semistiff::config::Config;
use semistiff::io::{read_field, write_field};
use semistiff_core::energy::evaluate_energy;
use semistiff_core::grid::{AnnulusSpec, ComplexField, PolarGrid, Spacing};
use semistiff_core::radial::Coupling;
use semistiff_core::Complex64;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(out: &Path, args: &[&str]) -> Outcome {
    let mut argv = vec!["semistiff", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = semistiff::run(argv, &mut o, &mut e);
    Outcome {
        code,
        stdout: String::from_utf8(o).unwrap(),
        stderr: String::from_utf8(e).unwrap(),
    }
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn significant_digits(field: &str) -> usize {
    let mantissa = field.split(['e', 'E']).next().unwrap();
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    digits.trim_start_matches('0').len()
}

#[test]
fn radial_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        &["radial", "--R", "0.5", "--p", "2", "--eps", "inf"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("closed form"));
    let csv = read(&dir.path().join("profile.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,rho"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            assert!(significant_digits(a) >= 15 || a.parse::<f64>().unwrap() == 1.0);
            assert!(significant_digits(b) >= 15 || b.parse::<f64>().unwrap() == 1.0);
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 256);
    for (r, rho) in rows {
        let expect = (r * r + 0.25 / (r * r)) / 1.25;
        assert!((rho - expect).abs() < 1e-15);
    }
}

#[test]
fn radial_boundary_value_solve() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        &["radial", "--R", "0.5", "--p", "2", "--eps", "10"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("boundary residual = 0e0"));
    assert!(dir.path().join("profile.csv").exists());
}

#[test]
fn radial_rejects_radius_outside_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["radial", "--R", "1.5", "--p", "2"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("R must lie in (0,1)"), "{}", r.stderr);
    assert_eq!(r.stderr.lines().count(), 1);
    assert!(!dir.path().join("profile.csv").exists());
}

#[test]
fn radial_rejects_nonpositive_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        &["radial", "--R", "0.5", "--p", "2", "--eps", "0"],
    );
    assert_eq!(r.code, 1);
}

#[test]
fn thresholds_p_max_two() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["thresholds", "--p-max", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = read(&dir.path().join("thresholds.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "p,q_root,beta_p,capacity_at_q_root");
    assert_eq!(lines.len(), 3);
    let fields: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(fields[0], "2");
    let root: f64 = fields[1].parse().unwrap();
    assert!((root - 0.414214).abs() < 1e-6);
    let svg = read(&dir.path().join("thresholds.svg"));
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<!-- data Q_2:"));
    assert!(svg.contains("<!-- data 2 pi:"));
}

#[test]
fn thresholds_p_one_is_unconditional() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["thresholds", "--p-max", "1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("unconditional"));
    let csv = read(&dir.path().join("thresholds.csv"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[1], "");
    assert_eq!(row[3], "");
}

#[test]
fn thresholds_p_max_zero_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["thresholds", "--p-max", "0"]).code, 1);
}

#[test]
fn spectral_table() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        &[
            "spectral", "--R", "0.99", "--q", "2", "--k-min", "-6", "--k-max", "20",
        ],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("K_R = 288"), "{}", r.stdout);
    let csv = read(&dir.path().join("spectral.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,branch,m_tilde,oracle,delta"));
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 27);
    let zero = rows.iter().find(|r| r[0] == "0").unwrap();
    assert_eq!(zero[1], "II");
    assert_eq!(zero[2].parse::<f64>().unwrap(), 0.0);
    for row in &rows {
        let k: i64 = row[0].parse().unwrap();
        let branch = match k {
            k if k < -4 => "I",
            k if k <= 0 => "II",
            _ => "III",
        };
        assert_eq!(row[1], branch);
        assert!(row[4].parse::<f64>().unwrap() < 1e-3, "k = {k}");
    }
}

#[test]
fn spectral_singularity_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        &[
            "spectral", "--R", "0.01", "--q", "1", "--k-min", "-1", "--k-max", "1",
        ],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("singularity"), "{}", r.stderr);
}

#[test]
fn flow_from_radial_solution_keeps_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        &[
            "flow", "--R", "0.99", "--p", "2", "--q", "2", "--eps", "100",
        ],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("final: degrees (2, 2)"), "{}", r.stdout);
    assert!(!r.stdout.contains("ESCAPE"));
    let trace = read(&dir.path().join("trace.csv"));
    assert_eq!(
        trace.lines().next(),
        Some(
            "iter,dirichlet,potential,total,deg_out,deg_in,res_out,res_in,min_mod,min_r,min_theta"
        )
    );
    let field = read_field(&dir.path().join("field.csv")).unwrap();
    assert_eq!(field.grid().n_radial(), 64);
    assert_eq!(field.grid().n_angular(), 256);
}

#[test]
fn flow_escape_is_reported_not_failed() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        &[
            "flow", "--R", "0.99", "--p", "3", "--q", "2", "--eps", "100",
        ],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("initial (blend): degrees (3, 2)"));
    assert!(r.stdout.contains("ESCAPE at iteration"), "{}", r.stdout);
    assert!(r.stdout.contains("final: degrees (2, 2)"), "{}", r.stdout);
}

#[test]
fn flow_with_zero_degrees_stays_constant() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        &[
            "flow",
            "--R",
            "0.5",
            "--p",
            "0",
            "--q",
            "0",
            "--n-radial",
            "16",
            "--n-angular",
            "32",
        ],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r
        .stdout
        .contains("final: degrees (0, 0), energy 0.0000000000000000e0"));
}

#[test]
fn flow_rejects_unstable_step() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        &[
            "flow", "--R", "0.5", "--p", "1", "--q", "1", "--eps", "0.1", "--step", "1",
        ],
    );
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("stability"), "{}", r.stderr);
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "--seed",
        "7",
        "flow",
        "--R",
        "0.6",
        "--p",
        "1",
        "--q",
        "1",
        "--n-radial",
        "17",
        "--n-angular",
        "32",
        "--perturbation",
        "0.05",
        "--max-iter",
        "40",
        "--eps",
        "2",
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path(), &args).code, 0);
    assert_eq!(run(b.path(), &args).code, 0);
    for name in ["trace.csv", "field.csv", "field.grid", "flow.cfg"] {
        assert_eq!(
            read(&a.path().join(name)),
            read(&b.path().join(name)),
            "{name}"
        );
    }
    let c = tempfile::tempdir().unwrap();
    let mut other = args;
    other[1] = "8";
    assert_eq!(run(c.path(), &other).code, 0);
    assert_ne!(
        read(&a.path().join("trace.csv")),
        read(&c.path().join("trace.csv"))
    );
}

#[test]
fn config_file_feeds_parameters_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# thresholds\np_max = 3\ngamma = 4\n").unwrap();
    let cfg_arg = cfg.to_str().unwrap();
    let r = run(dir.path(), &["--config", cfg_arg, "thresholds"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(read(&dir.path().join("thresholds.csv")).lines().count(), 4);
    let r = run(
        dir.path(),
        &["--config", cfg_arg, "thresholds", "--p-max", "1"],
    );
    assert_eq!(r.code, 0);
    assert_eq!(read(&dir.path().join("thresholds.csv")).lines().count(), 2);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let args = [
        "--seed",
        "3",
        "flow",
        "--R",
        "0.6",
        "--p",
        "2",
        "--q",
        "2",
        "--n-radial",
        "17",
        "--n-angular",
        "32",
        "--perturbation",
        "0.01",
        "--max-iter",
        "20",
    ];
    assert_eq!(run(first.path(), &args).code, 0);
    let echoed = first.path().join("flow.cfg");
    let second = tempfile::tempdir().unwrap();
    let r = run(
        second.path(),
        &["--config", echoed.to_str().unwrap(), "flow"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    for name in ["flow.cfg", "trace.csv", "field.csv"] {
        assert_eq!(
            read(&first.path().join(name)),
            read(&second.path().join(name)),
            "{name}"
        );
    }
}

#[test]
fn missing_parameter_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["spectral", "--R", "0.9", "--q", "1"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("missing parameter k_min"), "{}", r.stderr);
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "p_max 3\n").unwrap();
    let r = run(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "thresholds"],
    );
    assert_eq!(r.code, 1);
}

#[test]
fn zero_threads_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            dir.path(),
            &["--threads", "0", "thresholds", "--p-max", "1"]
        )
        .code,
        1
    );
}

#[test]
fn field_csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let grid = PolarGrid::new(
        AnnulusSpec::new(0.3).unwrap(),
        9,
        16,
        Spacing::CosineClustered,
    )
    .unwrap();
    let field = ComplexField::from_fn(grid, |r, t| Complex64::from_polar(r.sqrt(), 3.0 * t + r));
    let path = dir.path().join("f.csv");
    write_field(&path, &field).unwrap();
    assert_eq!(read_field(&path).unwrap(), field);
    fs::remove_file(dir.path().join("f.grid")).unwrap();
    assert_eq!(read_field(&path).unwrap(), field);
}

#[test]
fn energy_of_stored_field_matches_direct_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let grid = PolarGrid::new(AnnulusSpec::new(0.4).unwrap(), 33, 64, Spacing::Uniform).unwrap();
    let field = ComplexField::from_fn(grid, |r, t| Complex64::from_polar(1.0 - 0.1 * r, t));
    let path = dir.path().join("in.csv");
    write_field(&path, &field).unwrap();
    let r = run(
        dir.path(),
        &["energy", "--input", path.to_str().unwrap(), "--eps", "0.5"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("degrees (1, 1)"));
    let csv = read(&dir.path().join("energy.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epsilon,dirichlet,potential,total"));
    let values: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let direct = evaluate_energy(&field, Coupling::new(0.5).unwrap());
    assert_eq!(
        values,
        vec![0.5, direct.dirichlet, direct.potential, direct.total]
    );
}

#[test]
fn ledger_of_pure_mode() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        &["ledger", "--R", "0.99", "--p", "3", "--q", "2"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = read(&dir.path().join("ledger.csv"));
    assert_eq!(
        csv.lines().next(),
        Some("k,branch,a_k_abs,m_tilde,k_contribution")
    );
    assert_eq!(csv.lines().count(), 1 + 2 * 288 + 1);
    let summary = read(&dir.path().join("ledger_summary.csv"));
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("s_low,s_mid,s_high,total,d_pi,margin,k_r")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let d_pi: f64 = row[4].parse().unwrap();
    assert!((d_pi - std::f64::consts::PI).abs() < 1e-15);
    assert_eq!(row[6], "288");
}

#[test]
fn ledger_rejects_nonincreasing_degrees() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            dir.path(),
            &["ledger", "--R", "0.9", "--p", "2", "--q", "2"]
        )
        .code,
        1
    );
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_semistiff");
    let dir = tempfile::tempdir().unwrap();
    let status = |args: &[&str]| {
        Command::new(bin)
            .args(["--out", dir.path().to_str().unwrap()])
            .args(args)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(status(&["--help"]), Some(0));
    assert_eq!(status(&["nonsense"]), Some(1));
    assert_eq!(status(&["radial", "--R", "0.5", "--p", "1"]), Some(0));
    assert_eq!(status(&["radial", "--R", "-1", "--p", "1"]), Some(1));
    assert_eq!(
        status(&["spectral", "--R", "0.01", "--q", "1", "--k-min", "-1", "--k-max", "-1"]),
        Some(2)
    );
}

#[test]
fn config_serialization_is_sorted_and_stable() {
    let c = Config::parse("b = 2\na = 1\n").unwrap();
    assert_eq!(c.to_string(), "a = 1\nb = 2\n");
}
