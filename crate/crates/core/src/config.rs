//! Scenario files: flat TOML key/value documents mirroring [`ScenarioConfig`].
//!
//! ```toml
//! n = 2
//! m = 3
//! beta = 1.0
//! per_packet_rate = 1.0     # or system_rate, never both
//! rho = [0, 5, 10, 15, 20]
//! rho_unit = "db"           # or "linear"
//! scheme = "dncc"
//! traffic = "unicast"
//! assume_a = true
//! trials = 100000
//! seed = 1
//! ```
//!
//! Overrides (`key=value`) are applied to the parsed table before
//! validation. Unknown keys are rejected.

use std::fmt::Write as _;

use serde::Deserialize;
use toml::{Table, Value};

use crate::channel_model::{db_to_linear, linear_to_db, ConfigError, LinkSampling, Rate, ScenarioConfig, Scheme, Traffic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RhoUnit {
    Db,
    Linear,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: usize,
    m: usize,
    beta: Option<f64>,
    system_rate: Option<f64>,
    per_packet_rate: Option<f64>,
    rho: Option<Vec<f64>>,
    rho_unit: Option<RhoUnit>,
    scheme: Option<Scheme>,
    traffic: Option<Traffic>,
    assume_a: Option<bool>,
    trials: Option<u64>,
    seed: Option<u64>,
    field_degree: Option<u32>,
    field_polynomial: Option<u32>,
    link_sampling: Option<LinkSampling>,
}

/// Parses `text`, applies `overrides` in order, and validates.
pub fn parse_config<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<ScenarioConfig, ConfigError> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Invalid(e.message().to_string()))?;
    for ov in overrides {
        apply_override(&mut table, ov.as_ref())?;
    }
    let raw: RawConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Invalid(e.message().to_string()))?;
    let rate = match (raw.system_rate, raw.per_packet_rate) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid("give exactly one of system_rate and per_packet_rate".into()));
        }
        (Some(r), None) => Rate::System(r),
        (None, Some(ri)) => Rate::PerPacket(ri),
        (None, None) => Rate::PerPacket(1.0),
    };
    let defaults = ScenarioConfig::new(raw.n, raw.m);
    let rho = match (raw.rho, raw.rho_unit.unwrap_or(RhoUnit::Db)) {
        (None, _) => defaults.rho.clone(),
        (Some(grid), RhoUnit::Db) => grid.into_iter().map(db_to_linear).collect(),
        (Some(grid), RhoUnit::Linear) => grid,
    };
    let cfg = ScenarioConfig {
        n: raw.n,
        m: raw.m,
        beta: raw.beta.unwrap_or(defaults.beta),
        rate,
        rho,
        scheme: raw.scheme.unwrap_or(defaults.scheme),
        traffic: raw.traffic.unwrap_or(defaults.traffic),
        assume_a: raw.assume_a.unwrap_or(defaults.assume_a),
        trials: raw.trials.unwrap_or(defaults.trials),
        seed: raw.seed.unwrap_or(defaults.seed),
        field_degree: raw.field_degree.unwrap_or(defaults.field_degree),
        field_polynomial: raw.field_polynomial,
        link_sampling: raw.link_sampling.unwrap_or(defaults.link_sampling),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(table: &mut Table, ov: &str) -> Result<(), ConfigError> {
    let (key, value) = ov.split_once('=').ok_or_else(|| ConfigError::Invalid(format!("override `{ov}` is not key=value")))?;
    let key = key.trim();
    let value = value.trim();
    // Parse as a TOML value when possible so numbers and lists keep their
    // types; fall back to a bare string (`scheme=ncc`).
    let parsed =
        format!("v = {value}").parse::<Table>().ok().and_then(|mut t| t.remove("v")).unwrap_or_else(|| Value::String(value.to_string()));
    // A rate override replaces the other rate key rather than conflicting.
    match key {
        "system_rate" => {
            table.remove("per_packet_rate");
        }
        "per_packet_rate" => {
            table.remove("system_rate");
        }
        _ => {}
    }
    table.insert(key.to_string(), parsed);
    Ok(())
}

/// Every field as `# key = value` lines, for output file headers.
pub fn header_lines(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let rate = match cfg.rate {
        Rate::System(r) => format!("system_rate = {r}"),
        Rate::PerPacket(r) => format!("per_packet_rate = {r}"),
    };
    let rho: Vec<String> = cfg.rho.iter().map(|&r| format!("{}", round_db(linear_to_db(r)))).collect();
    let poly = cfg.field_polynomial.map_or_else(|| "default".to_string(), |p| p.to_string());
    for line in [
        format!("n = {}", cfg.n),
        format!("m = {}", cfg.m),
        format!("beta = {}", cfg.beta),
        rate,
        format!("rho_db = [{}]", rho.join(", ")),
        format!("scheme = {}", cfg.scheme),
        format!("traffic = {}", cfg.traffic),
        format!("assume_a = {}", cfg.assume_a),
        format!("trials = {}", cfg.trials),
        format!("seed = {}", cfg.seed),
        format!("field_degree = {}", cfg.field_degree),
        format!("field_polynomial = {poly}"),
        format!("link_sampling = {:?}", cfg.link_sampling).to_lowercase(),
    ] {
        let _ = writeln!(out, "# {line}");
    }
    out
}

/// dB value rounded to 1e-9 so `10^(x/10)` round trips print cleanly.
pub fn round_db(db: f64) -> f64 {
    (db * 1e9).round() / 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config::<&str>("n = 2\nm = 1\n", &[]).unwrap();
        assert_eq!(cfg.beta, 1.0);
        assert_eq!(cfg.rate, Rate::PerPacket(1.0));
        assert_eq!(cfg.scheme, Scheme::Dncc);
        assert_eq!(cfg.traffic, Traffic::Unicast);
        assert!(cfg.assume_a);
    }

    #[test]
    fn full_config_and_units() {
        let text = r#"
            n = 3
            m = 2
            beta = 0.5
            system_rate = 1
            rho = [0, 10, 20]
            scheme = "ncc"
            traffic = "multicast"
            assume_a = false
            trials = 10
            seed = 42
            field_degree = 4
            field_polynomial = 19
            link_sampling = "gain"
        "#;
        let cfg = parse_config::<&str>(text, &[]).unwrap();
        assert_eq!(cfg.rate, Rate::System(1.0));
        assert!((cfg.rho[1] - 10.0).abs() < 1e-12 && (cfg.rho[2] - 100.0).abs() < 1e-9);
        assert_eq!(cfg.scheme, Scheme::Ncc);
        assert_eq!(cfg.field_polynomial, Some(19));
        assert_eq!(cfg.link_sampling, LinkSampling::Gain);

        let lin = parse_config::<&str>("n=1\nm=1\nrho=[2.0]\nrho_unit=\"linear\"", &[]).unwrap();
        assert_eq!(lin.rho, vec![2.0]);
    }

    #[test]
    fn overrides_apply_before_validation() {
        let cfg = parse_config("n = 2\nm = 1\nsystem_rate = 1\n", &["m=3", "scheme=cc", "per_packet_rate=2", "rho=[30]"]).unwrap();
        assert_eq!(cfg.m, 3);
        assert_eq!(cfg.scheme, Scheme::Cc);
        assert_eq!(cfg.rate, Rate::PerPacket(2.0));
        assert!((cfg.rho[0] - 1000.0).abs() < 1e-9);
        assert!(parse_config("n = 2\nm = 1\n", &["beta=-1"]).is_err());
        assert!(parse_config("n = 2\nm = 1\n", &["nonsense"]).is_err());
    }

    #[test]
    fn rejects_unknown_and_conflicting_keys() {
        assert!(parse_config::<&str>("n = 2\nm = 1\ncolour = 3\n", &[]).is_err());
        assert!(parse_config::<&str>("n = 2\nm = 1\nsystem_rate = 1\nper_packet_rate = 1\n", &[]).is_err());
        assert!(parse_config::<&str>("m = 1\n", &[]).is_err());
        assert!(parse_config::<&str>("n = 2\nm = 1\nscheme = \"xor\"\n", &[]).is_err());
    }

    #[test]
    fn header_is_stable() {
        let cfg = parse_config::<&str>("n = 2\nm = 1\nrho = [0, 10]\n", &[]).unwrap();
        let h = header_lines(&cfg);
        assert!(h.contains("# rho_db = [0, 10]\n"));
        assert!(h.contains("# per_packet_rate = 1\n"));
        assert!(h.contains("# link_sampling = bernoulli\n"));
    }
}
