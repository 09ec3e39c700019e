//! Experiment configuration files.
//!
//! ```toml
//! [network]
//! M = 3
//! L = 3
//! T_max = 3
//! alpha = 0.5
//!
//! [rates]
//! values = [1.0, 1.0, 1.0]
//!
//! [gains]
//! symmetric_db = 10.0      # every link, or per link:
//! "s1->r1" = 5.0           # overrides symmetric_db when both are given
//!
//! [sweep]
//! kind = "symmetric_gamma" # or "link_adaptation", "delta_gamma"
//! start_db = -5.0
//! stop_db = 20.0
//! step_db = 2.5            # or values_db = [...]
//! mcs_rates = [0.5, 1.0]   # link_adaptation only
//!
//! [run]
//! frames = 10000
//! seed = 1
//! strategies = ["strategy1", "strategy2"]
//! workers = 0              # 0: all cores
//! upper_bound_cap = 100000
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::adaptation::DEFAULT_MCS_RATES;
use crate::monte_carlo::Execution;
use crate::network::{ConfigErrors, Link, NetworkSpec};
use crate::strategy::{Strategy, UnknownStrategy};

pub const DEFAULT_UPPER_BOUND_CAP: u64 = 100_000;

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid network: {0}")]
    Network(#[from] ConfigErrors),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
    #[error("bad [gains] key `{0}` (expected symmetric_db or a link such as \"s1->r1\")")]
    GainKey(String),
    #[error("unknown sweep kind `{0}` (expected symmetric_gamma, link_adaptation or delta_gamma)")]
    SweepKind(String),
    #[error("sweep grid: {0}")]
    Grid(String),
    #[error("missing [rates] values")]
    MissingRates,
    #[error("no strategy selected")]
    NoStrategies,
    #[error("frames must be >= 1")]
    NoFrames,
    #[error("upper_bound would enumerate {sequences} sequences per frame, above the cap of {cap}")]
    UpperBoundCap { sequences: u64, cap: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Same average SNR on every link, swept over the grid.
    SymmetricGamma,
    /// Symmetric links with the source rate picked from an MCS family per point.
    LinkAdaptation,
    /// A fixed link configuration shifted by a common offset.
    DeltaGamma,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::SymmetricGamma => "symmetric_gamma",
            SweepKind::LinkAdaptation => "link_adaptation",
            SweepKind::DeltaGamma => "delta_gamma",
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = ConfigFileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "symmetric_gamma" => Ok(SweepKind::SymmetricGamma),
            "link_adaptation" => Ok(SweepKind::LinkAdaptation),
            "delta_gamma" => Ok(SweepKind::DeltaGamma),
            other => Err(ConfigFileError::SweepKind(other.to_string())),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    network: RawNetwork,
    rates: Option<RawRates>,
    #[serde(default)]
    gains: BTreeMap<String, f64>,
    sweep: Option<RawSweep>,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    #[serde(rename = "M")]
    sources: usize,
    #[serde(rename = "L")]
    relays: usize,
    #[serde(rename = "T_max")]
    max_rounds: usize,
    alpha: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    kind: String,
    values_db: Option<Vec<f64>>,
    start_db: Option<f64>,
    stop_db: Option<f64>,
    step_db: Option<f64>,
    mcs_rates: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    frames: Option<u64>,
    seed: Option<u64>,
    strategies: Option<Vec<String>>,
    workers: Option<usize>,
    upper_bound_cap: Option<u64>,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    /// Base network. For `link_adaptation` its rates are placeholders.
    pub network: NetworkSpec,
    pub sweep: SweepKind,
    pub sweep_db: Vec<f64>,
    pub mcs_rates: Vec<f64>,
    pub frames: u64,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    /// 0 means the global pool.
    pub workers: usize,
    pub upper_bound_cap: u64,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub frames: Option<u64>,
    pub seed: Option<u64>,
    pub strategies: Vec<String>,
    pub sweep: Option<String>,
    pub workers: Option<usize>,
}

impl Experiment {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, ConfigFileError> {
        let raw: RawFile = toml::from_str(text)?;
        let RawNetwork {
            sources,
            relays,
            max_rounds,
            alpha,
        } = raw.network;

        let sweep_raw = raw.sweep;
        let sweep = match overrides
            .sweep
            .as_deref()
            .or(sweep_raw.as_ref().map(|s| s.kind.as_str()))
        {
            Some(kind) => kind.parse()?,
            None => SweepKind::SymmetricGamma,
        };

        let mcs_rates = sweep_raw
            .as_ref()
            .and_then(|s| s.mcs_rates.clone())
            .unwrap_or_else(|| DEFAULT_MCS_RATES.to_vec());
        let rates = match (raw.rates, sweep) {
            (Some(r), _) => r.values,
            (None, SweepKind::LinkAdaptation) => {
                vec![*mcs_rates.first().unwrap_or(&1.0); sources]
            }
            (None, _) => return Err(ConfigFileError::MissingRates),
        };

        let link_gains_db = parse_gains(&raw.gains, sources, relays)?;
        let network = NetworkSpec {
            sources,
            relays,
            max_rounds,
            alpha,
            rates,
            link_gains_db,
        };

        let sweep_db = match &sweep_raw {
            Some(s) => grid(s)?,
            None => vec![0.0],
        };

        let run = raw.run;
        let frames = overrides.frames.or(run.frames).unwrap_or(10_000);
        if frames == 0 {
            return Err(ConfigFileError::NoFrames);
        }
        let names: Vec<String> = if !overrides.strategies.is_empty() {
            overrides.strategies.clone()
        } else {
            run.strategies
                .unwrap_or_else(|| Strategy::ALL.iter().map(|s| s.name().to_string()).collect())
        };
        let strategies = names
            .iter()
            .map(|n| n.parse())
            .collect::<Result<Vec<Strategy>, _>>()?;
        if strategies.is_empty() {
            return Err(ConfigFileError::NoStrategies);
        }

        let experiment = Experiment {
            network,
            sweep,
            sweep_db,
            mcs_rates,
            frames,
            seed: overrides.seed.or(run.seed).unwrap_or(1),
            strategies,
            workers: overrides.workers.or(run.workers).unwrap_or(0),
            upper_bound_cap: run.upper_bound_cap.unwrap_or(DEFAULT_UPPER_BOUND_CAP),
        };
        experiment.check()?;
        Ok(experiment)
    }

    fn check(&self) -> Result<(), ConfigFileError> {
        // every point must produce a valid network
        let probe = match self.sweep {
            SweepKind::DeltaGamma => self.network.clone(),
            SweepKind::SymmetricGamma => self.symmetric_network(0.0),
            SweepKind::LinkAdaptation => {
                if self.mcs_rates.is_empty() {
                    return Err(ConfigFileError::Grid("mcs_rates is empty".into()));
                }
                self.symmetric_network(0.0)
                    .with_rates(vec![self.mcs_rates[0]; self.network.sources])
            }
        };
        probe.validate()?;
        for &r in &self.mcs_rates {
            if r.is_nan() || r <= 0.0 {
                return Err(ConfigFileError::Grid(format!("non-positive MCS rate {r}")));
            }
        }
        if self.strategies.contains(&Strategy::UpperBound) {
            let sequences = (self.network.sources as u64 + self.network.relays as u64)
                .checked_pow(self.network.max_rounds as u32)
                .unwrap_or(u64::MAX);
            if sequences > self.upper_bound_cap {
                return Err(ConfigFileError::UpperBoundCap {
                    sequences,
                    cap: self.upper_bound_cap,
                });
            }
        }
        Ok(())
    }

    /// The base network with every link set to `gamma_db`.
    pub fn symmetric_network(&self, gamma_db: f64) -> NetworkSpec {
        let n = &self.network;
        NetworkSpec::symmetric(
            n.sources,
            n.relays,
            n.max_rounds,
            n.alpha,
            n.rates.clone(),
            gamma_db,
        )
    }

    pub fn execution(&self) -> Execution {
        match self.workers {
            0 => Execution::Parallel,
            1 => Execution::Sequential,
            n => Execution::Threads(n),
        }
    }
}

fn parse_gains(
    gains: &BTreeMap<String, f64>,
    sources: usize,
    relays: usize,
) -> Result<BTreeMap<Link, f64>, ConfigFileError> {
    let mut out = BTreeMap::new();
    if let Some(&db) = gains.get("symmetric_db") {
        for link in NetworkSpec::all_links(sources, relays) {
            out.insert(link, db);
        }
    }
    for (key, &db) in gains {
        if key == "symmetric_db" {
            continue;
        }
        let link: Link = key
            .parse()
            .map_err(|_| ConfigFileError::GainKey(key.clone()))?;
        out.insert(link, db);
    }
    Ok(out)
}

fn grid(s: &RawSweep) -> Result<Vec<f64>, ConfigFileError> {
    if let Some(values) = &s.values_db {
        if values.is_empty() {
            return Err(ConfigFileError::Grid("values_db is empty".into()));
        }
        return Ok(values.clone());
    }
    match (s.start_db, s.stop_db, s.step_db) {
        (Some(start), Some(stop), Some(step)) => {
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(ConfigFileError::Grid(format!(
                    "need step_db > 0 and stop_db >= start_db (got {start}..{stop} by {step})"
                )));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        (None, None, None) => Ok(vec![0.0]),
        _ => Err(ConfigFileError::Grid(
            "start_db, stop_db and step_db go together".into(),
        )),
    }
}
