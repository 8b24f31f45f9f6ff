use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::Parser;
use dncc_cli::{run, Cli, CliError, Outcome};

fn dncc(out: &Path, args: &[&str]) -> Result<Outcome, CliError> {
    let mut argv = vec!["dncc", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    run(&Cli::try_parse_from(argv).expect("arguments parse"))
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares with the stored file; `DNCC_UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("DNCC_UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from golden copy");
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = "n = 1\nm = 1\nrho = [0, 10]\ntrials = 2000\nseed = 7\n";

#[test]
fn simulate_csv_and_manifest_match_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    dncc(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]).unwrap();
    check_golden("simulate.csv", &fs::read_to_string(dir.path().join("results.csv")).unwrap());
    check_golden("simulate.manifest", &fs::read_to_string(dir.path().join("results.manifest")).unwrap());
}

#[test]
fn analytic_csv_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    dncc(dir.path(), &["analytic", "--n", "2", "--relays", "1,2,3", "--set", "rho=[0, 20, 40]"]).unwrap();
    check_golden("analytic.csv", &fs::read_to_string(dir.path().join("analytic.csv")).unwrap());
}

#[test]
fn dmt_csv_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    dncc(dir.path(), &["dmt", "--n", "2", "--m", "3", "--samples", "5"]).unwrap();
    check_golden("dmt.csv", &fs::read_to_string(dir.path().join("dmt.csv")).unwrap());
}

#[test]
fn csv_headers_are_frozen() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    dncc(dir.path(), &["compare", "--config", cfg]).unwrap();
    dncc(dir.path(), &["analytic", "--config", cfg]).unwrap();
    dncc(dir.path(), &["dmt", "--config", cfg]).unwrap();
    let header = |file: &str| {
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        text.lines().find(|l| !l.starts_with('#')).unwrap().to_string()
    };
    assert_eq!(header("compare.csv"), "scheme,traffic,assume_A,N,M,L,beta,R,rho_db,trials,dest_index,outage_count,p_hat,stderr");
    assert_eq!(header("analytic.csv"), "scheme,N,M,beta,R,rho_db,p_exact,p_asymptotic,p_system");
    assert_eq!(header("dmt.csv"), "scheme,N,M,r,d");
}

#[test]
fn outputs_are_reproducible_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), "n = 2\nm = 2\nrho = [5, 15]\ntrials = 30000\nseed = 3\nassume_a = false\n");
    let cfg = cfg.to_str().unwrap();
    dncc(a.path(), &["--workers", "1", "compare", "--config", cfg, "--plot"]).unwrap();
    dncc(b.path(), &["--workers", "3", "compare", "--config", cfg, "--plot"]).unwrap();
    for f in ["compare.csv", "compare.manifest", "compare.svg"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn single_trial_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--n", "2", "--m", "1", "--set", "trials=1", "--set", "seed=99"];
    let first = dncc(dir.path(), &args).unwrap();
    let again = dncc(dir.path(), &args).unwrap();
    assert_eq!(first.files, again.files);
    let csv = String::from_utf8(first.files.get("results.csv").unwrap().to_vec()).unwrap();
    // Two destinations plus average and system, seven SNR points.
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 7 * 4);
}

#[test]
fn zero_rate_gives_all_zero_curve() {
    let dir = tempfile::tempdir().unwrap();
    dncc(dir.path(), &["analytic", "--n", "2", "--m", "2", "--set", "per_packet_rate=0", "--plot"]).unwrap();
    let csv = fs::read_to_string(dir.path().join("analytic.csv")).unwrap();
    for row in csv.lines().filter(|l| l.starts_with("dncc")) {
        let fields: Vec<&str> = row.split(',').collect();
        for p in &fields[6..] {
            assert_eq!(p.parse::<f64>().unwrap(), 0.0, "{row}");
        }
    }
    assert!(dir.path().join("analytic.svg").exists());
}

#[test]
fn analytic_slopes_follow_relay_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dncc(dir.path(), &["analytic", "--n", "2", "--relays", "1,2,3", "--set", "rho=[60, 70]"]).unwrap();
    for (m, line) in (1..=3).zip(out.report.lines()) {
        let slope: f64 = line.split("slope ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
        assert!((slope + (m as f64 + 1.0)).abs() < 0.01, "{line}");
    }
}

#[test]
fn simulate_plot_and_warnings() {
    let dir = tempfile::tempdir().unwrap();
    dncc(dir.path(), &["simulate", "--n", "1", "--m", "1", "--set", "trials=500", "--set", "rho=[0, 30]", "--plot"]).unwrap();
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.contains("# warning: dncc rho_db=30"));
    let svg = fs::read_to_string(dir.path().join("results.svg")).unwrap();
    assert!(svg.contains("closed form"));
    let manifest = fs::read_to_string(dir.path().join("results.manifest")).unwrap();
    assert!(manifest.contains("files = results.csv,results.svg"));
}

#[test]
fn validate_matrix_reports() {
    let dir = tempfile::tempdir().unwrap();
    let pass = dncc(dir.path(), &["validate-matrix", "--n", "2", "--m", "2", "--degree", "4"]).unwrap();
    assert_eq!(pass.exit_code, 0);
    assert!(pass.report.contains("kruskal rank: 2") && pass.report.contains("PASS"), "{}", pass.report);
    assert!(!pass.report.contains("dependent rows"));

    let file = dir.path().join("bad.txt");
    fs::write(&file, "2 1 2 7\n1 0\n0 1\n0 0\n").unwrap();
    let fail = dncc(dir.path(), &["validate-matrix", "--matrix", file.to_str().unwrap()]).unwrap();
    assert_eq!(fail.exit_code, 2);
    assert!(fail.report.contains("kruskal rank: 0"));
    assert!(fail.report.contains("dependent rows: 2"));
    assert!(fail.report.contains("FAIL"));

    match dncc(dir.path(), &["validate-matrix", "--n", "9", "--m", "9", "--degree", "4"]) {
        Err(e @ CliError::Infeasible(_)) => {
            assert_eq!(e.exit_code(), 2);
            assert!(e.to_string().contains("L >= 5"), "{e}");
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn bad_inputs_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("nope.toml");
    let e = dncc(&out, &["simulate", "--config", missing.to_str().unwrap()]).unwrap_err();
    assert!(matches!(e, CliError::Read { .. }) && e.exit_code() == 1);

    let cfg = write_config(dir.path(), "n = 2\nm = 1\nbogus = 3\n");
    let e = dncc(&out, &["simulate", "--config", cfg.to_str().unwrap()]).unwrap_err();
    assert_eq!(e.exit_code(), 1);
    assert!(e.to_string().contains("bogus"), "{e}");

    let e = dncc(&out, &["analytic", "--n", "2", "--m", "1", "--set", "scheme=ncc"]).unwrap_err();
    assert_eq!(e.exit_code(), 1);

    let e = dncc(&out, &["simulate", "--n", "9", "--m", "9", "--set", "field_degree=4"]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_dncc");
    let status = |args: &[&str]| Process::new(bin).args(args).env("DNCC_OUT_DIR", dir.path()).output().unwrap();

    let ok = status(&["dmt", "--n", "2", "--m", "3"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("cross at r"));
    assert!(dir.path().join("dmt.csv").exists());

    assert_eq!(status(&["simulate", "--config", "/definitely/missing.toml"]).status.code(), Some(1));
    assert_eq!(status(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(status(&["--help"]).status.code(), Some(0));
    assert_eq!(status(&["validate-matrix", "--n", "20", "--m", "20", "--degree", "5"]).status.code(), Some(2));
}
