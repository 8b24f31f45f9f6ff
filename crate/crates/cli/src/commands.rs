use std::fmt::Write as _;
use std::fs;

use dncc_core::analytic::{analytic_curve, dmt_csv, dmt_curve, log_log_slope, max_diversity, multiplexing_limit};
use dncc_core::channel_model::linear_to_db;
use dncc_core::code_design::{build_mds_matrix, kruskal_report};
use dncc_core::config::{header_lines, parse_config};
use dncc_core::simulator::{results_csv, run_baseline, run_monte_carlo, scenario_matrix, OutageMetric};
use dncc_core::{CodingMatrix, GfContext, OutageEstimate, ScenarioConfig, Scheme, Traffic};
use sha2::{Digest, Sha256};

use crate::output::OutputSet;
use crate::plot::{dmt_svg, outage_svg, Series, SeriesKind};
use crate::{CliError, Command, MatrixArgs, ScenarioArgs};

/// Files to write, text for stdout and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub files: OutputSet,
    pub report: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(files: OutputSet, report: String) -> Self {
        Self { files, report, exit_code: 0 }
    }
}

const VERSION: &str = env!("CARGO_PKG_VERSION");

const NCC_NOTE: &str = "# note: ncc baseline; the lowest-index relay that decoded every source sends their XOR";
const CC_NOTE: &str = "# note: cc baseline; a packet arrives if its direct link or its relay path is up";

pub fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Analytic(args) => cmd_analytic(args),
        Command::Simulate(args) => {
            let scenarios = load_scenarios(args)?;
            let schemes = [scenarios[0].scheme];
            cmd_monte_carlo("simulate", "results", args, &scenarios, &schemes)
        }
        Command::Compare { scenario, schemes } => {
            if schemes.is_empty() {
                return Err(CliError::Usage("--schemes is empty".into()));
            }
            let scenarios = load_scenarios(scenario)?;
            cmd_monte_carlo("compare", "compare", scenario, &scenarios, schemes)
        }
        Command::Dmt { scenario, samples } => cmd_dmt(scenario, *samples),
        Command::ValidateMatrix(args) => cmd_validate_matrix(args),
    }
}

/// Reads the config, applies the overrides and validates; one scenario per
/// `--relays` entry.
pub fn load_scenarios(args: &ScenarioArgs) -> Result<Vec<ScenarioConfig>, CliError> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?,
        None => String::new(),
    };
    let mut overrides = Vec::new();
    if let Some(n) = args.n {
        overrides.push(format!("n={n}"));
    }
    if let Some(m) = args.m {
        overrides.push(format!("m={m}"));
    }
    overrides.extend(args.overrides.iter().cloned());
    if args.relays.is_empty() {
        return Ok(vec![parse_config(&text, &overrides)?]);
    }
    args.relays
        .iter()
        .map(|m| {
            let mut ov = overrides.clone();
            ov.push(format!("m={m}"));
            Ok(parse_config(&text, &ov)?)
        })
        .collect()
}

fn file_header(command: &str, args: &ScenarioArgs, scenarios: &[ScenarioConfig]) -> String {
    let mut out = format!("# dncc {VERSION} {command}\n");
    out += &header_lines(&scenarios[0]);
    if !args.relays.is_empty() {
        let list: Vec<String> = args.relays.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "# relays = [{}]", list.join(", "));
    }
    out
}

/// Joins CSV documents sharing a header, moving `#` lines to the end.
fn merge_csv(parts: &[String]) -> String {
    let mut header = None;
    let mut rows = String::new();
    let mut comments = String::new();
    for part in parts {
        let mut lines = part.lines();
        let first = lines.next().unwrap_or_default();
        header.get_or_insert(first);
        for line in lines {
            let target = if line.starts_with('#') { &mut comments } else { &mut rows };
            target.push_str(line);
            target.push('\n');
        }
    }
    format!("{}\n{rows}{comments}", header.unwrap_or_default())
}

fn db(rho: f64) -> f64 {
    dncc_core::config::round_db(linear_to_db(rho))
}

fn cmd_analytic(args: &ScenarioArgs) -> Result<Outcome, CliError> {
    let scenarios = load_scenarios(args)?;
    let mut csv_parts = Vec::new();
    let mut series = Vec::new();
    let mut report = String::new();
    for cfg in &scenarios {
        if cfg.scheme != Scheme::Dncc {
            return Err(CliError::Usage(format!("analytic needs scheme = dncc, got {}", cfg.scheme)));
        }
        let curve = analytic_curve(cfg)?;
        csv_parts.push(curve.to_csv());
        let exact: Vec<(f64, f64)> = curve.points.iter().map(|p| (db(p.rho), p.exact)).collect();
        let asym: Vec<(f64, f64)> = curve.points.iter().map(|p| (db(p.rho), p.asymptotic.min(1.0))).collect();
        let tail: Vec<(f64, f64)> = curve.points.iter().rev().take(2).map(|p| (p.rho, p.exact)).collect();
        match log_log_slope(&tail) {
            Some(s) => {
                let _ = writeln!(report, "N={} M={}: high-SNR slope {s:.3} (full diversity {})", cfg.n, cfg.m, cfg.m + 1);
            }
            None => {
                let _ = writeln!(report, "N={} M={}: slope undefined (fewer than two nonzero points)", cfg.n, cfg.m);
            }
        }
        series.push(Series { label: format!("exact, M={}", cfg.m), points: exact, kind: SeriesKind::Line });
        series.push(Series { label: format!("asymptotic, M={}", cfg.m), points: asym, kind: SeriesKind::Line });
    }
    let mut csv = file_header("analytic", args, &scenarios);
    if scenarios[0].traffic == Traffic::Unicast {
        csv += "# model: rank-N decoding with full-decode relays; exact for multicast, an upper bound for unicast\n";
    }
    csv += &merge_csv(&csv_parts);
    let mut files = OutputSet::new();
    files.add("analytic.csv", csv);
    if args.plot {
        let title = format!("DNCC outage, N={}", scenarios[0].n);
        files.add("analytic.svg", outage_svg(&title, &series)?);
    }
    report += "wrote analytic.csv\n";
    Ok(Outcome::ok(files, report))
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

struct Run {
    cfg: ScenarioConfig,
    estimates: Vec<OutageEstimate>,
    matrix: Option<CodingMatrix>,
}

fn simulate_one(cfg: &ScenarioConfig) -> Result<Run, CliError> {
    eprintln!("{} N={} M={}: {} SNR points x {} trials", cfg.scheme, cfg.n, cfg.m, cfg.rho.len(), cfg.trials);
    let (estimates, matrix) = if cfg.scheme == Scheme::Dncc {
        let matrix = scenario_matrix(cfg)?;
        (run_monte_carlo(cfg, &matrix)?, Some(matrix))
    } else {
        (run_baseline(cfg)?, None)
    };
    Ok(Run { cfg: cfg.clone(), estimates, matrix })
}

fn cmd_monte_carlo(
    command: &str,
    stem: &str,
    args: &ScenarioArgs,
    scenarios: &[ScenarioConfig],
    schemes: &[Scheme],
) -> Result<Outcome, CliError> {
    let mut runs = Vec::new();
    for cfg in scenarios {
        for &scheme in schemes {
            runs.push(simulate_one(&cfg.with_scheme(scheme))?);
        }
    }

    let mut csv = file_header(command, args, scenarios);
    if schemes.contains(&Scheme::Ncc) {
        csv += NCC_NOTE;
        csv.push('\n');
    }
    if schemes.contains(&Scheme::Cc) {
        csv += CC_NOTE;
        csv.push('\n');
    }
    let parts: Vec<String> = runs.iter().map(|r| results_csv(&r.cfg, &r.estimates)).collect();
    csv += &merge_csv(&parts);

    let csv_name = format!("{stem}.csv");
    let svg_name = format!("{stem}.svg");
    let mut files = OutputSet::new();
    files.add(csv_name.clone(), csv);

    let mut manifest = format!("dncc-cli {VERSION}\ncommand = {command}\nseed = {}\n", scenarios[0].seed);
    let names: Vec<&str> = schemes.iter().map(|s| s.name()).collect();
    let _ = writeln!(manifest, "schemes = {}", names.join(","));
    for r in &runs {
        if let Some(matrix) = &r.matrix {
            let _ = writeln!(manifest, "matrix_sha256[N={},M={}] = {}", r.cfg.n, r.cfg.m, sha256_hex(&matrix.to_text()));
        }
    }
    let mut written = vec![csv_name.clone()];
    if args.plot {
        written.push(svg_name.clone());
    }
    let _ = writeln!(manifest, "files = {}", written.join(","));
    manifest += "config:\n";
    manifest += &header_lines(&scenarios[0]);
    files.add(format!("{stem}.manifest"), manifest);

    if args.plot {
        let metric = OutageMetric::Average;
        let mut series = Vec::new();
        for r in &runs {
            let points = r.estimates.iter().map(|e| (db(e.rho), e.p_hat(metric))).collect();
            let bars = r
                .estimates
                .iter()
                .map(|e| {
                    let (p, se) = (e.p_hat(metric), e.stderr(metric));
                    (p - 2.0 * se, p + 2.0 * se)
                })
                .collect();
            let label = format!("{} M={} (simulated)", r.cfg.scheme.name().to_uppercase(), r.cfg.m);
            series.push(Series { label, points, kind: SeriesKind::Markers { bars } });
            if r.cfg.scheme == Scheme::Dncc && r.cfg.assume_a {
                let curve = analytic_curve(&r.cfg)?;
                let points = curve.points.iter().map(|p| (db(p.rho), p.exact)).collect();
                let label = format!("DNCC M={} (closed form, rank N)", r.cfg.m);
                series.push(Series { label, points, kind: SeriesKind::Line });
            }
        }
        let title = format!("Outage, N={}, {}", scenarios[0].n, scenarios[0].traffic);
        files.add(svg_name, outage_svg(&title, &series)?);
    }

    let mut report = String::new();
    for r in &runs {
        let _ = write!(report, "{} N={} M={}:", r.cfg.scheme, r.cfg.n, r.cfg.m);
        for e in &r.estimates {
            let _ = write!(report, " {}dB={:.3e}", db(e.rho), e.p_hat(OutageMetric::Average));
        }
        report.push('\n');
    }
    let _ = writeln!(report, "wrote {csv_name} and {stem}.manifest");
    Ok(Outcome::ok(files, report))
}

/// Where two DMT lines cross strictly inside both supports.
pub fn dmt_crossing(a: Scheme, b: Scheme, n: usize, m: usize) -> Option<f64> {
    let (da, la) = (max_diversity(a, m), multiplexing_limit(a, n, m));
    let (db, lb) = (max_diversity(b, m), multiplexing_limit(b, n, m));
    let denom = da / la - db / lb;
    if denom == 0.0 {
        return None;
    }
    let r = (da - db) / denom;
    (r > 0.0 && r < la.min(lb)).then_some(r)
}

fn cmd_dmt(args: &ScenarioArgs, samples: usize) -> Result<Outcome, CliError> {
    let scenarios = load_scenarios(args)?;
    let mut curves = Vec::new();
    let mut report = String::new();
    for cfg in &scenarios {
        let (n, m) = (cfg.n, cfg.m);
        for scheme in Scheme::ALL {
            let _ = writeln!(
                report,
                "{scheme} N={n} M={m}: d(0) = {}, d = 0 at r = {}",
                max_diversity(scheme, m),
                multiplexing_limit(scheme, n, m)
            );
            curves.push(dmt_curve(scheme, n, m, samples));
        }
        for (a, b) in [(Scheme::Dncc, Scheme::Ncc), (Scheme::Dncc, Scheme::Cc), (Scheme::Ncc, Scheme::Cc)] {
            if let Some(r) = dmt_crossing(a, b, n, m) {
                let _ = writeln!(report, "{a} and {b} cross at r = {r}");
            }
        }
    }
    let mut files = OutputSet::new();
    files.add("dmt.csv", file_header("dmt", args, &scenarios) + &dmt_csv(&curves));
    if args.plot {
        files.add("dmt.svg", dmt_svg("Diversity-multiplexing tradeoff", &curves)?);
    }
    report += "wrote dmt.csv\n";
    Ok(Outcome::ok(files, report))
}

fn cmd_validate_matrix(args: &MatrixArgs) -> Result<Outcome, CliError> {
    let matrix = match (&args.matrix, args.n, args.m) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
            CodingMatrix::from_text(&text)?
        }
        (None, Some(n), Some(m)) => {
            let ctx = match args.polynomial {
                Some(p) => GfContext::with_polynomial(args.degree, p)?,
                None => GfContext::new(args.degree)?,
            };
            build_mds_matrix(n, m, &ctx)?
        }
        _ => return Err(CliError::Usage("give --matrix or both --n and --m".into())),
    };
    let ctx = matrix.context();
    let (n, m) = (matrix.sources(), matrix.relays());
    let rows: Vec<_> = matrix.rows().collect();
    let kr = kruskal_report(ctx, n, &rows);
    let pass = kr.rank == n;
    let mut report = String::new();
    let _ = writeln!(report, "field: GF(2^{}) order {} polynomial {:#x}", ctx.degree(), ctx.order(), ctx.polynomial());
    let _ = writeln!(report, "matrix: {} x {} (N={n}, M={m})", n + m, n);
    let _ = writeln!(report, "kruskal rank: {}", kr.rank);
    let _ = writeln!(report, "target: {n}");
    if let (false, Some(culprit)) = (pass, &kr.dependent_rows) {
        let list: Vec<String> = culprit.iter().map(usize::to_string).collect();
        let _ = writeln!(report, "dependent rows: {}", list.join(" "));
    }
    let _ = writeln!(report, "result: {}", if pass { "PASS" } else { "FAIL" });
    Ok(Outcome { files: OutputSet::new(), report, exit_code: if pass { 0 } else { 2 } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_keeps_one_header_and_trails_comments() {
        let a = "h\n1\n# w1\n".to_string();
        let b = "h\n2\n".to_string();
        assert_eq!(merge_csv(&[a, b]), "h\n1\n2\n# w1\n");
    }

    #[test]
    fn crossings() {
        // N=2, M=3: 4 - 10r = 2 - 3r at r = 2/7.
        let r = dmt_crossing(Scheme::Dncc, Scheme::Ncc, 2, 3).unwrap();
        assert!((r - 2.0 / 7.0).abs() < 1e-12);
        // N = M: DNCC and CC coincide.
        assert_eq!(dmt_crossing(Scheme::Dncc, Scheme::Cc, 2, 2), None);
        // Same d(0): lines meet only at r = 0.
        assert_eq!(dmt_crossing(Scheme::Dncc, Scheme::Cc, 3, 2), None);
    }

    #[test]
    fn sha_hex() {
        assert_eq!(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
