//! Scenario parameters, per-link outage probabilities and link-state sampling.
//!
//! Every link gain `|h|^2` is exponential with rate `beta`, and a packet on a
//! link is lost when `log2(1 + |h|^2 rho) < R_i`, i.e. when `|h|^2 < tau` with
//! `tau = (2^R_i - 1) / rho`. Only that threshold crossing is simulated.

use std::fmt;
use std::str::FromStr;

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Every relay sends a fixed linear combination in its own slot.
    Dncc,
    /// One relay sends the XOR of all packets in a single extra slot.
    Ncc,
    /// Selection relaying, two slots per packet.
    Cc,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Dncc, Scheme::Ncc, Scheme::Cc];

    /// Orthogonal slots used to deliver `n` packets with `m` relays.
    pub fn slots(self, n: usize, m: usize) -> usize {
        match self {
            Scheme::Dncc => n + m,
            Scheme::Ncc => n + 1,
            Scheme::Cc => 2 * n,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dncc => "dncc",
            Scheme::Ncc => "ncc",
            Scheme::Cc => "cc",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dncc" => Ok(Scheme::Dncc),
            "ncc" => Ok(Scheme::Ncc),
            "cc" => Ok(Scheme::Cc),
            _ => Err(ConfigError::Invalid(format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Traffic {
    /// Destination `i` only needs packet `i`.
    Unicast,
    /// Every destination needs every packet.
    Multicast,
}

impl fmt::Display for Traffic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Traffic::Unicast => "unicast",
            Traffic::Multicast => "multicast",
        })
    }
}

/// Exactly one of the two rates is fixed by the user; the other follows
/// from the scheme's slot count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    /// System rate `R` in bits per channel use.
    System(f64),
    /// Per-packet transmission rate `R_i` in bits per channel use.
    PerPacket(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkSampling {
    /// Draw each link's up/down state directly.
    Bernoulli,
    /// Draw `|h|^2 ~ Exp(beta)` and compare it with `tau`.
    Gain,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Source-destination pairs.
    pub n: usize,
    /// Relays.
    pub m: usize,
    /// Rate of the exponential link gains (inverse variance).
    pub beta: f64,
    pub rate: Rate,
    /// Average SNR grid, linear scale.
    pub rho: Vec<f64>,
    pub scheme: Scheme,
    pub traffic: Traffic,
    /// Relays only forward after decoding all `N` source packets.
    pub assume_a: bool,
    pub trials: u64,
    pub seed: u64,
    pub field_degree: u32,
    /// Defining polynomial; the built-in table entry when `None`.
    pub field_polynomial: Option<u32>,
    pub link_sampling: LinkSampling,
}

impl ScenarioConfig {
    /// Defaults for everything but the network size: `beta = 1`, `R_i = 1`,
    /// DNCC, unicast, relays require full decoding.
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            beta: 1.0,
            rate: Rate::PerPacket(1.0),
            rho: (0..=6).map(|k| db_to_linear(5.0 * k as f64)).collect(),
            scheme: Scheme::Dncc,
            traffic: Traffic::Unicast,
            assume_a: true,
            trials: 100_000,
            seed: 0,
            field_degree: 8,
            field_polynomial: None,
            link_sampling: LinkSampling::Bernoulli,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        let r = match self.rate {
            Rate::System(r) | Rate::PerPacket(r) => r,
        };
        if !(r >= 0.0 && r.is_finite()) {
            return bad(format!("rate must be non-negative, got {r}"));
        }
        if self.rho.is_empty() {
            return bad("rho grid is empty".into());
        }
        if let Some(r) = self.rho.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return bad(format!("every rho must be positive, got {r}"));
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        Ok(())
    }

    /// Slots per round for the configured scheme.
    pub fn slots(&self) -> usize {
        self.scheme.slots(self.n, self.m)
    }

    /// `R_i = slots / N * R`.
    pub fn per_packet_rate(&self) -> f64 {
        match self.rate {
            Rate::PerPacket(ri) => ri,
            Rate::System(r) => self.slots() as f64 / self.n as f64 * r,
        }
    }

    pub fn system_rate(&self) -> f64 {
        match self.rate {
            Rate::System(r) => r,
            Rate::PerPacket(ri) => ri * self.n as f64 / self.slots() as f64,
        }
    }

    /// Copy with a different scheme, keeping whichever rate was fixed.
    pub fn with_scheme(&self, scheme: Scheme) -> Self {
        Self { scheme, ..self.clone() }
    }

    pub fn tau(&self, rho: f64) -> f64 {
        outage_threshold_tau(self.per_packet_rate(), rho)
    }
}

/// `tau = (2^R_i - 1) / rho`.
pub fn outage_threshold_tau(per_packet_rate: f64, rho: f64) -> f64 {
    (per_packet_rate * std::f64::consts::LN_2).exp_m1() / rho
}

/// `P_0 = 1 - exp(-beta * tau)`.
pub fn link_outage_prob(beta: f64, tau: f64) -> f64 {
    -(-beta * tau).exp_m1()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(rho: f64) -> f64 {
    10.0 * rho.log10()
}

/// Up/down state of every link in one round.
///
/// `sr[j][k]`: source `j` to relay `k`; `sd[j][i]`: source `j` to destination
/// `i`; `rd[k][i]`: relay `k` to destination `i`. `true` means not in outage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkStateMatrix {
    n: usize,
    m: usize,
    sr: Vec<bool>,
    sd: Vec<bool>,
    rd: Vec<bool>,
}

impl LinkStateMatrix {
    pub fn all(n: usize, m: usize, up: bool) -> Self {
        Self { n, m, sr: vec![up; n * m], sd: vec![up; n * n], rd: vec![up; m * n] }
    }

    pub fn sources(&self) -> usize {
        self.n
    }

    pub fn relays(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn sr(&self, source: usize, relay: usize) -> bool {
        self.sr[source * self.m + relay]
    }

    #[inline]
    pub fn sd(&self, source: usize, dest: usize) -> bool {
        self.sd[source * self.n + dest]
    }

    #[inline]
    pub fn rd(&self, relay: usize, dest: usize) -> bool {
        self.rd[relay * self.n + dest]
    }

    pub fn set_sr(&mut self, source: usize, relay: usize, up: bool) {
        self.sr[source * self.m + relay] = up;
    }

    pub fn set_sd(&mut self, source: usize, dest: usize, up: bool) {
        self.sd[source * self.n + dest] = up;
    }

    pub fn set_rd(&mut self, relay: usize, dest: usize, up: bool) {
        self.rd[relay * self.n + dest] = up;
    }

    /// Whether relay `k` decoded every source packet.
    pub fn relay_decoded_all(&self, relay: usize) -> bool {
        (0..self.n).all(|j| self.sr(j, relay))
    }

    fn links_mut(&mut self) -> impl Iterator<Item = &mut bool> {
        self.sr.iter_mut().chain(self.sd.iter_mut()).chain(self.rd.iter_mut())
    }

    pub fn links(&self) -> impl Iterator<Item = bool> + '_ {
        self.sr.iter().chain(&self.sd).chain(&self.rd).copied()
    }
}

/// Draws link states for one SNR point.
#[derive(Debug, Clone)]
pub enum LinkSampler {
    Bernoulli(Bernoulli),
    Gain { gain: Exp<f64>, tau: f64 },
}

impl LinkSampler {
    pub fn new(cfg: &ScenarioConfig, rho: f64) -> Self {
        let tau = cfg.tau(rho);
        match cfg.link_sampling {
            LinkSampling::Bernoulli => {
                let p_up = (-cfg.beta * tau).exp();
                LinkSampler::Bernoulli(Bernoulli::new(p_up).expect("exp(-x) lies in [0, 1]"))
            }
            LinkSampling::Gain => LinkSampler::Gain { gain: Exp::new(cfg.beta).expect("beta > 0"), tau },
        }
    }

    #[inline]
    pub fn sample_link<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        match self {
            LinkSampler::Bernoulli(b) => b.sample(rng),
            LinkSampler::Gain { gain, tau } => gain.sample(rng) >= *tau,
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, links: &mut LinkStateMatrix, rng: &mut R) {
        for l in links.links_mut() {
            *l = self.sample_link(rng);
        }
    }
}

/// One independent draw of every link in the network.
pub fn sample_links<R: Rng + ?Sized>(cfg: &ScenarioConfig, rho: f64, rng: &mut R) -> LinkStateMatrix {
    let mut links = LinkStateMatrix::all(cfg.n, cfg.m, true);
    LinkSampler::new(cfg, rho).sample_into(&mut links, rng);
    links
}

/// Random stream for a block of trials, keyed only by `(seed, rho_index,
/// chunk_index)` so results do not depend on how chunks are scheduled.
pub fn trial_rng(seed: u64, rho_index: u64, chunk_index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&rho_index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(chunk_index);
    rng
}
