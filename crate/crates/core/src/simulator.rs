//! Outage estimation by Monte-Carlo sampling and by exhaustive enumeration of
//! link states.
//!
//! Payloads are never simulated. For DNCC each destination collects the rows
//! of the coding matrix whose packets reached it and recovery is decided by
//! Gaussian elimination over GF(2^L). NCC and CC use direct combinatorial
//! rules on the same link states.
//!
//! Monte-Carlo trials are split into fixed-size chunks, each with its own
//! random stream keyed by `(seed, rho_index, chunk_index)`. Counts are summed
//! as integers, so results are identical for any number of worker threads.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::channel_model::{linear_to_db, link_outage_prob, trial_rng, LinkSampler, LinkStateMatrix, ScenarioConfig, Scheme, Traffic};
use crate::code_design::{build_mds_matrix, CodingMatrix, DesignError};
use crate::config::round_db;
use crate::finite_field::{FieldElement, FieldError, GfContext};
use crate::linalg::GfMatrix;

/// Trials per random stream.
pub const CHUNK_TRIALS: u64 = 8192;

/// Largest `N*M + N + M` the enumerator accepts.
pub const MAX_ENUMERATION_BITS: usize = 24;

/// Fewer outage events than this makes a point unreliable for slope fits.
pub const MIN_SLOPE_EVENTS: u64 = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("coding matrix is {got_n}x{got_m} (N x M) but the scenario has N={n}, M={m}")]
    MatrixShape { n: usize, m: usize, got_n: usize, got_m: usize },
    #[error("scheme {0} does not use a coding matrix")]
    WrongScheme(Scheme),
    #[error("enumeration over 2^{bits} link patterns exceeds the 2^{MAX_ENUMERATION_BITS} limit")]
    TooLarge { bits: usize },
    #[error("fewer than two SNR points have outage events")]
    InsufficientEvents,
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// The packets one destination received, as rows of coefficients over the
/// source packets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedSystem {
    pub dest: usize,
    pub rows: GfMatrix,
}

/// Collects destination `dest`'s surviving rows.
///
/// Source row `j` survives when `sd[j][dest]` is up. With `assume_a`, relay
/// `k` contributes its full row only if it decoded every source and
/// `rd[k][dest]` is up. Without it, relay `k` combines just the packets it
/// decoded (columns of failed sources zeroed) and stays silent if it decoded
/// none.
pub fn build_received_system(a: &CodingMatrix, links: &LinkStateMatrix, dest: usize, assume_a: bool) -> ReceivedSystem {
    let mut rows = GfMatrix::with_capacity(a.sources(), a.total_rows());
    fill_received_rows(a, links, dest, assume_a, &mut rows);
    ReceivedSystem { dest, rows }
}

fn fill_received_rows(a: &CodingMatrix, links: &LinkStateMatrix, dest: usize, assume_a: bool, rows: &mut GfMatrix) {
    let n = a.sources();
    rows.clear();
    for j in 0..n {
        if links.sd(j, dest) {
            rows.push_row(a.row(j));
        }
    }
    for k in 0..a.relays() {
        if !links.rd(k, dest) {
            continue;
        }
        if assume_a {
            if links.relay_decoded_all(k) {
                rows.push_row(a.relay_row(k));
            }
        } else if (0..n).any(|j| links.sr(j, k)) {
            rows.push_masked_row(a.relay_row(k), |j| links.sr(j, k));
        }
    }
}

/// Multicast: the rows have rank `N`. Unicast: the unit vector of the
/// destination's own source lies in their span.
pub fn can_recover(ctx: &GfContext, sys: &ReceivedSystem, traffic: Traffic) -> bool {
    let mut rows = sys.rows.clone();
    let mut target = vec![FieldElement::ZERO; rows.cols()];
    recover_in_place(ctx, &mut rows, sys.dest, traffic, &mut target)
}

fn recover_in_place(ctx: &GfContext, rows: &mut GfMatrix, dest: usize, traffic: Traffic, target: &mut [FieldElement]) -> bool {
    let n = rows.cols();
    match traffic {
        Traffic::Multicast => rows.rows() >= n && rows.to_echelon(ctx) == n,
        Traffic::Unicast => {
            if rows.rows() == 0 {
                return false;
            }
            rows.to_echelon(ctx);
            target.fill(FieldElement::ZERO);
            target[dest] = FieldElement::ONE;
            rows.echelon_spans(ctx, target)
        }
    }
}

/// Which packets NCC's single relay slot carries: the XOR of all `N`
/// packets, sent by the lowest-index relay that decoded all of them.
fn ncc_relay(links: &LinkStateMatrix) -> Option<usize> {
    (0..links.relays()).find(|&k| links.relay_decoded_all(k))
}

/// NCC recovery. Without an active relay the slot is wasted and only
/// direct links count. The XOR fills in at most one missing packet.
pub fn ncc_recovers(links: &LinkStateMatrix, dest: usize, traffic: Traffic) -> bool {
    let n = links.sources();
    let relay_ok = ncc_relay(links).is_some_and(|k| links.rd(k, dest));
    match traffic {
        Traffic::Unicast => links.sd(dest, dest) || (relay_ok && (0..n).all(|j| j == dest || links.sd(j, dest))),
        Traffic::Multicast => {
            let missing = (0..n).filter(|&j| !links.sd(j, dest)).count();
            missing == 0 || (missing == 1 && relay_ok)
        }
    }
}

/// Selection relaying: a packet arrives directly or via some relay that
/// heard it and reaches the destination.
pub fn cc_recovers(links: &LinkStateMatrix, dest: usize, traffic: Traffic) -> bool {
    let packet_ok = |j: usize| links.sd(j, dest) || (0..links.relays()).any(|k| links.sr(j, k) && links.rd(k, dest));
    match traffic {
        Traffic::Unicast => packet_ok(dest),
        Traffic::Multicast => (0..links.sources()).all(packet_ok),
    }
}

#[derive(Clone, Copy)]
enum Rule<'a> {
    Dncc { matrix: &'a CodingMatrix, assume_a: bool },
    Ncc,
    Cc,
}

struct Scratch {
    rows: GfMatrix,
    target: Vec<FieldElement>,
}

impl Scratch {
    fn new(n: usize, m: usize) -> Self {
        Self { rows: GfMatrix::with_capacity(n, n + m), target: vec![FieldElement::ZERO; n] }
    }
}

impl<'a> Rule<'a> {
    fn for_config(cfg: &ScenarioConfig, matrix: Option<&'a CodingMatrix>) -> Result<Rule<'a>, SimError> {
        Ok(match cfg.scheme {
            Scheme::Dncc => {
                let matrix = matrix.expect("DNCC rule needs a coding matrix");
                if matrix.sources() != cfg.n || matrix.relays() != cfg.m {
                    return Err(SimError::MatrixShape { n: cfg.n, m: cfg.m, got_n: matrix.sources(), got_m: matrix.relays() });
                }
                Rule::Dncc { matrix, assume_a: cfg.assume_a }
            }
            Scheme::Ncc => Rule::Ncc,
            Scheme::Cc => Rule::Cc,
        })
    }

    #[inline]
    fn outage(&self, links: &LinkStateMatrix, dest: usize, traffic: Traffic, scratch: &mut Scratch) -> bool {
        match *self {
            Rule::Dncc { matrix, assume_a } => {
                // Source rows are identity rows, so the direct links alone
                // can settle the question.
                let direct_ok = match traffic {
                    Traffic::Unicast => links.sd(dest, dest),
                    Traffic::Multicast => (0..matrix.sources()).all(|j| links.sd(j, dest)),
                };
                if direct_ok {
                    return false;
                }
                fill_received_rows(matrix, links, dest, assume_a, &mut scratch.rows);
                !recover_in_place(matrix.context(), &mut scratch.rows, dest, traffic, &mut scratch.target)
            }
            Rule::Ncc => !ncc_recovers(links, dest, traffic),
            Rule::Cc => !cc_recovers(links, dest, traffic),
        }
    }
}

/// Which outage probability a summary refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutageMetric {
    Destination(usize),
    /// Total destination failures divided by `N * trials`.
    Average,
    /// Some destination failed.
    System,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutageEstimate {
    pub scheme: Scheme,
    pub rho: f64,
    pub trials: u64,
    pub dest_outages: Vec<u64>,
    pub system_outages: u64,
}

impl OutageEstimate {
    pub fn events(&self, metric: OutageMetric) -> u64 {
        match metric {
            OutageMetric::Destination(i) => self.dest_outages[i],
            OutageMetric::Average => self.dest_outages.iter().sum(),
            OutageMetric::System => self.system_outages,
        }
    }

    /// Number of Bernoulli observations behind `metric`.
    pub fn observations(&self, metric: OutageMetric) -> u64 {
        match metric {
            OutageMetric::Average => self.trials * self.dest_outages.len() as u64,
            _ => self.trials,
        }
    }

    pub fn p_hat(&self, metric: OutageMetric) -> f64 {
        self.events(metric) as f64 / self.observations(metric) as f64
    }

    /// `sqrt(p (1 - p) / n)`. For the average metric destinations within a
    /// trial are correlated, so this is a lower bound there.
    pub fn stderr(&self, metric: OutageMetric) -> f64 {
        let p = self.p_hat(metric);
        (p * (1.0 - p) / self.observations(metric) as f64).sqrt()
    }
}

fn simulate_point(cfg: &ScenarioConfig, rule: Rule<'_>, rho_index: usize, rho: f64) -> OutageEstimate {
    let sampler = LinkSampler::new(cfg, rho);
    let chunks = cfg.trials.div_ceil(CHUNK_TRIALS);
    let (n, m, traffic) = (cfg.n, cfg.m, cfg.traffic);
    let zero = || vec![0u64; n + 1];
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = trial_rng(cfg.seed, rho_index as u64, chunk);
            let mut links = LinkStateMatrix::all(n, m, true);
            let mut scratch = Scratch::new(n, m);
            let mut counts = zero();
            let len = CHUNK_TRIALS.min(cfg.trials - chunk * CHUNK_TRIALS);
            for _ in 0..len {
                sampler.sample_into(&mut links, &mut rng);
                let mut any = false;
                for (dest, count) in counts[..n].iter_mut().enumerate() {
                    if rule.outage(&links, dest, traffic, &mut scratch) {
                        *count += 1;
                        any = true;
                    }
                }
                counts[n] += u64::from(any);
            }
            counts
        })
        .reduce(zero, |mut a, b| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        });
    OutageEstimate { scheme: cfg.scheme, rho, trials: cfg.trials, dest_outages: counts[..n].to_vec(), system_outages: counts[n] }
}

/// Monte-Carlo DNCC outage at every SNR in the grid.
pub fn run_monte_carlo(cfg: &ScenarioConfig, matrix: &CodingMatrix) -> Result<Vec<OutageEstimate>, SimError> {
    if cfg.scheme != Scheme::Dncc {
        return Err(SimError::WrongScheme(cfg.scheme));
    }
    let rule = Rule::for_config(cfg, Some(matrix))?;
    Ok(cfg.rho.iter().enumerate().map(|(i, &rho)| simulate_point(cfg, rule, i, rho)).collect())
}

/// Monte-Carlo outage for the NCC and CC baselines. A DNCC scenario is
/// rejected.
pub fn run_baseline(cfg: &ScenarioConfig) -> Result<Vec<OutageEstimate>, SimError> {
    if cfg.scheme == Scheme::Dncc {
        return Err(SimError::WrongScheme(cfg.scheme));
    }
    let rule = Rule::for_config(cfg, None)?;
    Ok(cfg.rho.iter().enumerate().map(|(i, &rho)| simulate_point(cfg, rule, i, rho)).collect())
}

/// The field and MDS coding matrix a scenario describes.
pub fn scenario_matrix(cfg: &ScenarioConfig) -> Result<CodingMatrix, SimError> {
    let ctx = match cfg.field_polynomial {
        Some(p) => GfContext::with_polynomial(cfg.field_degree, p)?,
        None => GfContext::new(cfg.field_degree)?,
    };
    Ok(build_mds_matrix(cfg.n, cfg.m, &ctx)?)
}

/// Runs whichever engine the scheme needs, building the MDS matrix for DNCC.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Vec<OutageEstimate>, SimError> {
    match cfg.scheme {
        Scheme::Dncc => run_monte_carlo(cfg, &scenario_matrix(cfg)?),
        _ => run_baseline(cfg),
    }
}

/// Exact outage probabilities at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactOutage {
    pub rho: f64,
    pub per_destination: Vec<f64>,
    pub system: f64,
}

impl ExactOutage {
    pub fn average(&self) -> f64 {
        self.per_destination.iter().sum::<f64>() / self.per_destination.len() as f64
    }

    pub fn get(&self, metric: OutageMetric) -> f64 {
        match metric {
            OutageMetric::Destination(i) => self.per_destination[i],
            OutageMetric::Average => self.average(),
            OutageMetric::System => self.system,
        }
    }
}

/// Exact outage by summing over every link pattern.
///
/// Destinations only share the source-relay links, so the sum conditions on
/// those `2^(NM)` patterns and, for each, enumerates each destination's own
/// `2^(N+M)` incoming links. The system outage is exact, including the
/// correlation the shared relays introduce. `matrix` is required for DNCC
/// and ignored otherwise.
pub fn run_enumeration(cfg: &ScenarioConfig, matrix: Option<&CodingMatrix>) -> Result<Vec<ExactOutage>, SimError> {
    let (n, m) = (cfg.n, cfg.m);
    let bits = n * m + n + m;
    if bits > MAX_ENUMERATION_BITS {
        return Err(SimError::TooLarge { bits });
    }
    let owned;
    let matrix = match (cfg.scheme, matrix) {
        (Scheme::Dncc, None) => {
            owned = scenario_matrix(cfg)?;
            Some(&owned)
        }
        (_, mx) => mx,
    };
    let rule = Rule::for_config(cfg, matrix)?;
    let mut scratch = Scratch::new(n, m);
    let mut links = LinkStateMatrix::all(n, m, true);
    let mut out = Vec::with_capacity(cfg.rho.len());
    for &rho in &cfg.rho {
        let tau = cfg.tau(rho);
        let down = link_outage_prob(cfg.beta, tau);
        let up = (-cfg.beta * tau).exp();
        let weight = |ups: u32, total: u32| up.powi(ups as i32) * down.powi((total - ups) as i32);
        let mut per_dest = vec![0.0; n];
        let mut system = 0.0;
        let mut cond = vec![0.0; n];
        for sr_pattern in 0u64..(1 << (n * m)) {
            for j in 0..n {
                for k in 0..m {
                    links.set_sr(j, k, sr_pattern >> (j * m + k) & 1 == 1);
                }
            }
            let p_sr = weight(sr_pattern.count_ones(), (n * m) as u32);
            for (dest, c) in cond.iter_mut().enumerate() {
                *c = 0.0;
                for local in 0u64..(1 << (n + m)) {
                    for j in 0..n {
                        links.set_sd(j, dest, local >> j & 1 == 1);
                    }
                    for k in 0..m {
                        links.set_rd(k, dest, local >> (n + k) & 1 == 1);
                    }
                    if rule.outage(&links, dest, cfg.traffic, &mut scratch) {
                        *c += weight(local.count_ones(), (n + m) as u32);
                    }
                }
            }
            for (acc, c) in per_dest.iter_mut().zip(&cond) {
                *acc += p_sr * c;
            }
            system += p_sr * cond.iter().fold(0.0, |s, &c| s + c - s * c);
        }
        // Summation can overshoot 1 by an ulp near certain outage.
        per_dest.iter_mut().for_each(|p| *p = p.min(1.0));
        out.push(ExactOutage { rho, per_destination: per_dest, system: system.min(1.0) });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEstimate {
    /// Fitted `d log p / d log rho`; the diversity order is its negation.
    pub slope: f64,
    /// SNR points (linear) the fit used.
    pub rho_used: Vec<f64>,
    /// Some fitted point had fewer than the required outage events.
    pub low_confidence: bool,
}

/// Least-squares log-log slope over the highest-SNR points that each saw at
/// least `min_events` outages, using at most `max_points` of them.
///
/// If fewer than two points qualify, falls back to every point with a
/// nonzero count and marks the result low-confidence.
pub fn estimate_diversity_slope(
    estimates: &[OutageEstimate],
    metric: OutageMetric,
    min_events: u64,
    max_points: Option<usize>,
) -> Result<SlopeEstimate, SimError> {
    let mut sorted: Vec<&OutageEstimate> = estimates.iter().collect();
    sorted.sort_by(|a, b| b.rho.total_cmp(&a.rho));
    let limit = max_points.unwrap_or(usize::MAX);
    let mut chosen: Vec<&OutageEstimate> = sorted.iter().copied().filter(|e| e.events(metric) >= min_events).take(limit).collect();
    let mut low_confidence = false;
    if chosen.len() < 2 {
        chosen = sorted.iter().copied().filter(|e| e.events(metric) > 0).take(limit).collect();
        low_confidence = true;
    }
    let points: Vec<(f64, f64)> = chosen.iter().map(|e| (e.rho, e.p_hat(metric))).collect();
    let slope = crate::analytic::log_log_slope(&points).ok_or(SimError::InsufficientEvents)?;
    Ok(SlopeEstimate { slope, rho_used: chosen.iter().map(|e| e.rho).collect(), low_confidence })
}

pub const RESULTS_CSV_HEADER: &str = "scheme,traffic,assume_A,N,M,L,beta,R,rho_db,trials,dest_index,outage_count,p_hat,stderr";

/// Results rows: one per destination, then `average` and `system`
/// pseudo-destinations, for every SNR point. Points with fewer than
/// [`MIN_SLOPE_EVENTS`] average-metric events are listed as trailing
/// `# warning:` comments.
pub fn results_csv(cfg: &ScenarioConfig, estimates: &[OutageEstimate]) -> String {
    let mut out = format!("{RESULTS_CSV_HEADER}\n");
    let mut warnings = String::new();
    for e in estimates {
        let rho_db = round_db(linear_to_db(e.rho));
        let prefix = format!(
            "{},{},{},{},{},{},{},{},{},{}",
            e.scheme,
            cfg.traffic,
            cfg.assume_a,
            cfg.n,
            cfg.m,
            cfg.field_degree,
            cfg.beta,
            cfg.with_scheme(e.scheme).system_rate(),
            rho_db,
            e.trials
        );
        let metrics = (0..cfg.n)
            .map(|i| (i.to_string(), OutageMetric::Destination(i)))
            .chain([("average".to_string(), OutageMetric::Average), ("system".to_string(), OutageMetric::System)]);
        for (label, metric) in metrics {
            let _ = writeln!(out, "{prefix},{label},{},{:e},{:e}", e.events(metric), e.p_hat(metric), e.stderr(metric));
        }
        let events = e.events(OutageMetric::Average);
        if events < MIN_SLOPE_EVENTS {
            let _ = writeln!(warnings, "# warning: {} rho_db={rho_db} has only {events} outage events", e.scheme);
        }
    }
    out + &warnings
}
