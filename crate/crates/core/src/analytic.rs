//! Closed-form outage probabilities and diversity-multiplexing tradeoffs.
//!
//! With every relay required to decode all `N` packets, destination `i`
//! fails exactly when fewer than `N` of its potential rows survive (any `N`
//! rows of an MDS coding matrix are independent). Conditioning on the number
//! `m` of relays that drop out gives
//!
//! ```text
//! P(E_1i) = sum_{m=0}^{M} P(E_m) * sum_{n=M-m+1}^{N+M-m} P(E(N+M-m, n))
//! ```
//!
//! and at high SNR `P(E_1i) ~ (beta tau)^{M+1} * sum_m C(M,m) N^m C(N+M-m, M-m+1)`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::channel_model::{linear_to_db, ScenarioConfig, Scheme};
use crate::config::round_db;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("count {k} exceeds population {n}")]
    CountOutOfRange { k: usize, n: usize },
    #[error("multiplexing gain must be non-negative, got {0}")]
    NegativeGain(f64),
    #[error("closed form only covers DNCC with relays decoding all packets ({0})")]
    Unsupported(String),
}

/// `C(n, k)` in exact integer arithmetic.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `C(n,k) p^k q^(n-k)` with `q` passed separately so callers can supply an
/// accurately computed complement.
fn binomial_pmf(n: usize, k: usize, p: f64, q: f64) -> f64 {
    binomial(n, k) as f64 * p.powi(k as i32) * q.powi((n - k) as i32)
}

/// `P(eps) = exp(-N beta tau)`: a relay decodes all `N` source packets.
pub fn p_relay_all_decode(n: usize, beta: f64, tau: f64) -> f64 {
    (-(n as f64) * beta * tau).exp()
}

/// `P(E_m) = C(M,m) P(eps)^(M-m) (1-P(eps))^m`: exactly `m` of `M` relays fail.
pub fn p_m_relays_fail(relays: usize, m: usize, p_eps: f64) -> Result<f64, AnalyticError> {
    if m > relays {
        return Err(AnalyticError::CountOutOfRange { k: m, n: relays });
    }
    Ok(binomial_pmf(relays, m, 1.0 - p_eps, p_eps))
}

/// `P(E(m,n)) = C(m,n) P_0^n (1-P_0)^(m-n)`: exactly `n` of `m` links in outage.
pub fn p_n_of_m_links_out(m: usize, n: usize, p0: f64) -> Result<f64, AnalyticError> {
    if n > m {
        return Err(AnalyticError::CountOutOfRange { k: n, n: m });
    }
    Ok(binomial_pmf(m, n, p0, 1.0 - p0))
}

/// Exact per-destination outage for `N` sources and `M` relays at threshold `tau`.
pub fn destination_outage_exact(n: usize, m: usize, beta: f64, tau: f64) -> f64 {
    let bt = beta * tau;
    let p0 = -(-bt).exp_m1();
    let q0 = (-bt).exp();
    let p_eps = (-(n as f64) * bt).exp();
    let p_fail = -(-(n as f64) * bt).exp_m1();
    (0..=m)
        .map(|dropped| {
            let relays_out = binomial_pmf(m, dropped, p_fail, p_eps);
            let rows = n + m - dropped;
            let too_few: f64 = (m - dropped + 1..=rows).map(|lost| binomial_pmf(rows, lost, p0, q0)).sum();
            relays_out * too_few
        })
        .sum()
}

/// `sum_{m=0}^{M} C(M,m) N^m C(N+M-m, M-m+1)`, the high-SNR outage constant.
pub fn asymptotic_constant(n: usize, m: usize) -> u128 {
    (0..=m).map(|k| binomial(m, k) * (n as u128).pow(k as u32) * binomial(n + m - k, m - k + 1)).sum()
}

pub fn destination_outage_asymptotic(n: usize, m: usize, beta: f64, tau: f64) -> f64 {
    (beta * tau).powi(m as i32 + 1) * asymptotic_constant(n, m) as f64
}

fn require_dncc(cfg: &ScenarioConfig) -> Result<(), AnalyticError> {
    if cfg.scheme != Scheme::Dncc {
        return Err(AnalyticError::Unsupported(format!("scheme is {}", cfg.scheme)));
    }
    if !cfg.assume_a {
        return Err(AnalyticError::Unsupported("assume_a = false".into()));
    }
    Ok(())
}

pub fn p_destination_outage_exact(cfg: &ScenarioConfig, rho: f64) -> Result<f64, AnalyticError> {
    require_dncc(cfg)?;
    Ok(destination_outage_exact(cfg.n, cfg.m, cfg.beta, cfg.tau(rho)))
}

pub fn p_destination_outage_asymptotic(cfg: &ScenarioConfig, rho: f64) -> Result<f64, AnalyticError> {
    if cfg.scheme != Scheme::Dncc {
        return Err(AnalyticError::Unsupported(format!("scheme is {}", cfg.scheme)));
    }
    Ok(destination_outage_asymptotic(cfg.n, cfg.m, cfg.beta, cfg.tau(rho)))
}

/// `1 - prod_i (1 - P_i)`: some destination fails.
pub fn p_system_outage(per_destination: &[f64]) -> f64 {
    // Folded as s + p - s*p so a single destination maps to itself exactly.
    per_destination.iter().fold(0.0, |s, &p| s + p - s * p)
}

/// Largest multiplexing gain with positive diversity.
pub fn multiplexing_limit(scheme: Scheme, n: usize, m: usize) -> f64 {
    match scheme {
        Scheme::Dncc => n as f64 / (n + m) as f64,
        Scheme::Ncc => n as f64 / (n + 1) as f64,
        Scheme::Cc => 0.5,
    }
}

/// Diversity at the largest gain the scheme supports.
pub fn max_diversity(scheme: Scheme, m: usize) -> f64 {
    match scheme {
        Scheme::Dncc | Scheme::Cc => (m + 1) as f64,
        Scheme::Ncc => 2.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmtValue {
    pub d: f64,
    /// False when `r` lies past the multiplexing limit and `d` was clamped.
    pub in_range: bool,
}

/// `d(r)` for the scheme: DNCC `(M+1)(1 - (N+M)/N r)`, NCC `2(1 - (N+1)/N r)`,
/// CC `(M+1)(1 - 2r)`.
pub fn dmt(scheme: Scheme, n: usize, m: usize, r: f64) -> Result<DmtValue, AnalyticError> {
    if r < 0.0 || r.is_nan() {
        return Err(AnalyticError::NegativeGain(r));
    }
    let limit = multiplexing_limit(scheme, n, m);
    if r >= limit {
        return Ok(DmtValue { d: 0.0, in_range: r == limit });
    }
    let d = max_diversity(scheme, m) * (1.0 - r / limit);
    Ok(DmtValue { d: d.max(0.0), in_range: true })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmtCurve {
    pub scheme: Scheme,
    pub n: usize,
    pub m: usize,
    /// `(r, d)` from `r = 0` to the multiplexing limit inclusive.
    pub points: Vec<(f64, f64)>,
}

pub fn dmt_curve(scheme: Scheme, n: usize, m: usize, samples: usize) -> DmtCurve {
    let samples = samples.max(2);
    let limit = multiplexing_limit(scheme, n, m);
    let points = (0..samples)
        .map(|k| {
            let r = if k + 1 == samples { limit } else { limit * k as f64 / (samples - 1) as f64 };
            (r, dmt(scheme, n, m, r).expect("r >= 0").d)
        })
        .collect();
    DmtCurve { scheme, n, m, points }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPoint {
    pub rho: f64,
    pub exact: f64,
    pub asymptotic: f64,
    pub system: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCurve {
    pub scheme: Scheme,
    pub cfg: ScenarioConfig,
    pub points: Vec<AnalyticPoint>,
}

pub fn analytic_curve(cfg: &ScenarioConfig) -> Result<AnalyticCurve, AnalyticError> {
    require_dncc(cfg)?;
    let points = cfg
        .rho
        .iter()
        .map(|&rho| {
            let exact = p_destination_outage_exact(cfg, rho)?;
            Ok(AnalyticPoint {
                rho,
                exact,
                asymptotic: p_destination_outage_asymptotic(cfg, rho)?,
                system: p_system_outage(&vec![exact; cfg.n]),
            })
        })
        .collect::<Result<_, AnalyticError>>()?;
    Ok(AnalyticCurve { scheme: cfg.scheme, cfg: cfg.clone(), points })
}

pub const ANALYTIC_CSV_HEADER: &str = "scheme,N,M,beta,R,rho_db,p_exact,p_asymptotic,p_system";

impl AnalyticCurve {
    /// CSV rows under [`ANALYTIC_CSV_HEADER`]; `R` is the system rate.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{ANALYTIC_CSV_HEADER}\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:e},{:e},{:e}",
                self.scheme,
                self.cfg.n,
                self.cfg.m,
                self.cfg.beta,
                self.cfg.system_rate(),
                round_db(linear_to_db(p.rho)),
                p.exact,
                p.asymptotic,
                p.system
            );
        }
        out
    }
}

pub const DMT_CSV_HEADER: &str = "scheme,N,M,r,d";

pub fn dmt_csv(curves: &[DmtCurve]) -> String {
    let mut out = format!("{DMT_CSV_HEADER}\n");
    for c in curves {
        for &(r, d) in &c.points {
            let _ = writeln!(out, "{},{},{},{},{}", c.scheme, c.n, c.m, r, d);
        }
    }
    out
}

/// Least-squares slope of `ln p` against `ln rho`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points.iter().filter(|(r, p)| *r > 0.0 && *p > 0.0).map(|(r, p)| (r.ln(), p.ln())).collect();
    if usable.len() < 2 {
        return None;
    }
    let k = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / k;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
