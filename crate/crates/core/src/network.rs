//! Network description, per-frame fading draws and link mutual information.
//!
//! Nodes are split in three kinds. Sources `s1..sM` transmit in the first
//! phase and may retransmit redundancy in the second phase, relays `r1..rL`
//! listen and forward what they decoded, and a single destination `d` only
//! receives. Every ordered pair `(a, b)` with `a` a source or relay and `b` a
//! relay or the destination (`a != b`) is a link with its own average SNR.
//!
//! Transmitters are indexed `0..M+L` (sources first, then relays) and
//! receivers `0..=L` (relays first, destination last).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// A node of the network. Indices are 0-based within their kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Source(usize),
    Relay(usize),
    Destination,
}

impl NodeId {
    pub fn is_source(self) -> bool {
        matches!(self, NodeId::Source(_))
    }

    pub fn is_relay(self) -> bool {
        matches!(self, NodeId::Relay(_))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Source(i) => write!(f, "s{}", i + 1),
            NodeId::Relay(i) => write!(f, "r{}", i + 1),
            NodeId::Destination => f.write_str("d"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid node name `{0}` (expected s<k>, r<k> or d, k >= 1)")]
pub struct ParseNodeError(String);

impl FromStr for NodeId {
    type Err = ParseNodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "d" {
            return Ok(NodeId::Destination);
        }
        let err = || ParseNodeError(s.to_string());
        let (kind, num) = s.split_at(s.find(|c: char| c.is_ascii_digit()).ok_or_else(err)?);
        let k: usize = num.parse().map_err(|_| err())?;
        if k == 0 {
            return Err(err());
        }
        match kind {
            "s" => Ok(NodeId::Source(k - 1)),
            "r" => Ok(NodeId::Relay(k - 1)),
            _ => Err(err()),
        }
    }
}

/// A directed link `tx -> rx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub tx: NodeId,
    pub rx: NodeId,
}

impl Link {
    pub fn new(tx: NodeId, rx: NodeId) -> Self {
        Link { tx, rx }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tx, self.rx)
    }
}

impl FromStr for Link {
    type Err = ParseNodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (tx, rx) = s
            .split_once("->")
            .ok_or_else(|| ParseNodeError(s.to_string()))?;
        Ok(Link::new(tx.parse()?, rx.parse()?))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Mutual information `log2(1 + |h|^2)` of a link with Gaussian inputs, in
/// bits per complex channel use.
pub fn mutual_information(h: Complex64) -> f64 {
    mutual_information_from_power(h.norm_sqr())
}

pub fn mutual_information_from_power(power: f64) -> f64 {
    power.ln_1p() / std::f64::consts::LN_2
}

/// Unvalidated network description as read from a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub sources: usize,
    pub relays: usize,
    pub max_rounds: usize,
    /// Ratio of second-phase to first-phase slot length.
    pub alpha: f64,
    /// Initial source rates in b.c.u.
    pub rates: Vec<f64>,
    /// Average SNR per link, in dB. `-inf` disables a link.
    pub link_gains_db: BTreeMap<Link, f64>,
}

impl NetworkSpec {
    /// Every link of an `(M, L, 1)` network in transmitter-major order.
    pub fn all_links(sources: usize, relays: usize) -> Vec<Link> {
        let txs = (0..sources)
            .map(NodeId::Source)
            .chain((0..relays).map(NodeId::Relay));
        let mut links = Vec::new();
        for tx in txs {
            for rx in (0..relays)
                .map(NodeId::Relay)
                .chain(std::iter::once(NodeId::Destination))
            {
                if tx != rx {
                    links.push(Link::new(tx, rx));
                }
            }
        }
        links
    }

    /// A network where every link shares the same average SNR.
    pub fn symmetric(
        sources: usize,
        relays: usize,
        max_rounds: usize,
        alpha: f64,
        rates: Vec<f64>,
        gamma_db: f64,
    ) -> Self {
        let link_gains_db = Self::all_links(sources, relays)
            .into_iter()
            .map(|l| (l, gamma_db))
            .collect();
        NetworkSpec {
            sources,
            relays,
            max_rounds,
            alpha,
            rates,
            link_gains_db,
        }
    }

    pub fn with_offset_db(&self, delta_db: f64) -> Self {
        let mut out = self.clone();
        for g in out.link_gains_db.values_mut() {
            *g += delta_db;
        }
        out
    }

    pub fn with_rates(&self, rates: Vec<f64>) -> Self {
        NetworkSpec {
            rates,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<NetworkConfig, ConfigErrors> {
        NetworkConfig::validate(self)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("M must be >= 2 (got {0})")]
    TooFewSources(usize),
    #[error("L must be >= 1 (got {0})")]
    NoRelays(usize),
    #[error("T_max must be >= 1")]
    NoRounds,
    #[error("alpha must be > 0 (got {0})")]
    NonPositiveAlpha(f64),
    #[error("expected {expected} rates, got {got}")]
    RateCount { expected: usize, got: usize },
    #[error("non-positive rate for source {0}")]
    NonPositiveRate(usize),
    #[error("missing link entry {0}")]
    MissingLink(Link),
    #[error("unexpected link entry {0}")]
    UnexpectedLink(Link),
    #[error("link {0} has a NaN or +inf average SNR")]
    BadGain(Link),
}

/// All problems found while validating a [`NetworkSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// A validated network. Average SNRs are held on the linear scale.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    sources: usize,
    relays: usize,
    max_rounds: usize,
    alpha: f64,
    rates: Vec<f64>,
    // [tx * (relays + 1) + rx]; self pairs stay at zero.
    gamma: Vec<f64>,
}

impl NetworkConfig {
    fn validate(spec: &NetworkSpec) -> Result<Self, ConfigErrors> {
        let mut errors = Vec::new();
        let (m, l) = (spec.sources, spec.relays);
        if m < 2 {
            errors.push(ConfigError::TooFewSources(m));
        }
        if l < 1 {
            errors.push(ConfigError::NoRelays(l));
        }
        if spec.max_rounds < 1 {
            errors.push(ConfigError::NoRounds);
        }
        if spec.alpha.is_nan() || spec.alpha <= 0.0 {
            errors.push(ConfigError::NonPositiveAlpha(spec.alpha));
        }
        if spec.rates.len() != m {
            errors.push(ConfigError::RateCount {
                expected: m,
                got: spec.rates.len(),
            });
        }
        for (i, &r) in spec.rates.iter().enumerate() {
            if !r.is_finite() || r <= 0.0 {
                errors.push(ConfigError::NonPositiveRate(i));
            }
        }

        let links = NetworkSpec::all_links(m, l);
        let mut gamma = vec![0.0; (m + l) * (l + 1)];
        for link in &links {
            match spec.link_gains_db.get(link) {
                None => errors.push(ConfigError::MissingLink(*link)),
                Some(db) if db.is_nan() || *db == f64::INFINITY => {
                    errors.push(ConfigError::BadGain(*link))
                }
                Some(&db) => {
                    let idx = tx_index(m, link.tx) * (l + 1) + rx_index(l, link.rx);
                    gamma[idx] = db_to_linear(db);
                }
            }
        }
        for link in spec.link_gains_db.keys() {
            if links.binary_search(link).is_err() {
                errors.push(ConfigError::UnexpectedLink(*link));
            }
        }

        if !errors.is_empty() {
            return Err(ConfigErrors(errors));
        }
        if spec.max_rounds < l {
            log::warn!(
                "T_max = {} is smaller than the number of relays L = {}",
                spec.max_rounds,
                l
            );
        }
        Ok(NetworkConfig {
            sources: m,
            relays: l,
            max_rounds: spec.max_rounds,
            alpha: spec.alpha,
            rates: spec.rates.clone(),
            gamma,
        })
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn relays(&self) -> usize {
        self.relays
    }

    /// Number of candidate transmitters, `M + L`.
    pub fn transmitters(&self) -> usize {
        self.sources + self.relays
    }

    pub fn max_rounds(&self) -> usize {
        self.max_rounds
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Candidate transmitters in scheduling order: sources, then relays.
    pub fn candidates(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.transmitters()).map(|i| self.node_at(i))
    }

    pub fn node_at(&self, tx: usize) -> NodeId {
        if tx < self.sources {
            NodeId::Source(tx)
        } else {
            NodeId::Relay(tx - self.sources)
        }
    }

    pub fn tx_index(&self, node: NodeId) -> usize {
        tx_index(self.sources, node)
    }

    pub fn rx_index(&self, node: NodeId) -> usize {
        rx_index(self.relays, node)
    }

    /// Linear average SNR of `tx -> rx`, zero for a self pair.
    pub fn gamma(&self, tx: NodeId, rx: NodeId) -> f64 {
        self.gamma[self.tx_index(tx) * (self.relays + 1) + self.rx_index(rx)]
    }

    /// Fresh fading gains for one frame.
    ///
    /// Two standard normals are consumed per link in transmitter-major order
    /// even when the link is disabled, so realizations at different average
    /// SNRs share the same underlying draws.
    pub fn draw_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let rx_count = self.relays + 1;
        let mut gains = vec![Complex64::new(0.0, 0.0); self.gamma.len()];
        let mut mi = vec![0.0; self.gamma.len()];
        for tx in 0..self.transmitters() {
            for rx in 0..rx_count {
                if tx >= self.sources && tx - self.sources == rx {
                    continue;
                }
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let idx = tx * rx_count + rx;
                let scale = (self.gamma[idx] / 2.0).sqrt();
                let h = Complex64::new(re * scale, im * scale);
                gains[idx] = h;
                mi[idx] = mutual_information(h);
            }
        }
        ChannelRealization {
            relays: self.relays,
            sources: self.sources,
            gains,
            mi,
        }
    }
}

fn tx_index(sources: usize, node: NodeId) -> usize {
    match node {
        NodeId::Source(i) => i,
        NodeId::Relay(i) => sources + i,
        NodeId::Destination => panic!("the destination never transmits"),
    }
}

fn rx_index(relays: usize, node: NodeId) -> usize {
    match node {
        NodeId::Relay(i) => i,
        NodeId::Destination => relays,
        NodeId::Source(_) => panic!("sources never receive"),
    }
}

/// Fading gains and cached mutual informations of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    sources: usize,
    relays: usize,
    gains: Vec<Complex64>,
    mi: Vec<f64>,
}

impl ChannelRealization {
    /// Builds a realization directly from per-link mutual informations, with
    /// gains chosen as the real amplitude reproducing each value.
    ///
    /// `mi[tx][rx]` follows the transmitter/receiver indexing of the module.
    pub fn from_mutual_information(sources: usize, relays: usize, mi: &[Vec<f64>]) -> Self {
        let rx_count = relays + 1;
        assert_eq!(mi.len(), sources + relays);
        let mut flat = vec![0.0; (sources + relays) * rx_count];
        let mut gains = vec![Complex64::new(0.0, 0.0); flat.len()];
        for (tx, row) in mi.iter().enumerate() {
            assert_eq!(row.len(), rx_count);
            for (rx, &v) in row.iter().enumerate() {
                if tx >= sources && tx - sources == rx {
                    continue;
                }
                assert!(v >= 0.0);
                let power = v.exp2() - 1.0;
                gains[tx * rx_count + rx] = Complex64::new(power.sqrt(), 0.0);
                flat[tx * rx_count + rx] = v;
            }
        }
        ChannelRealization {
            sources,
            relays,
            gains,
            mi: flat,
        }
    }

    pub fn gain(&self, tx: NodeId, rx: NodeId) -> Complex64 {
        self.gains[self.index(tx, rx)]
    }

    pub fn mi(&self, tx: NodeId, rx: NodeId) -> f64 {
        self.mi[self.index(tx, rx)]
    }

    /// Mutual information of every candidate transmitter towards the
    /// destination, i.e. what the destination learns from `h_dir`.
    pub fn direct_mi(&self) -> Vec<f64> {
        (0..self.sources + self.relays)
            .map(|tx| self.mi[tx * (self.relays + 1) + self.relays])
            .collect()
    }

    fn index(&self, tx: NodeId, rx: NodeId) -> usize {
        tx_index(self.sources, tx) * (self.relays + 1) + rx_index(self.relays, rx)
    }
}
