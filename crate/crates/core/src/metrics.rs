//! Long-term throughput figures derived from Monte Carlo counters.

use thiserror::Error;

use crate::monte_carlo::RawCounters;
use crate::network::NetworkConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot compute metrics from zero frames")]
    NoFrames,
    #[error("counters track {got} sources, network has {expected}")]
    SourceCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub frames: u64,
    /// Average number of second-phase rounds, `E(T)`.
    pub mean_rounds: f64,
    /// Probability that each source is still undecoded at the end of a frame.
    pub per_source_outage: Vec<f64>,
    /// Probability that at least one source is undecoded.
    pub common_outage: f64,
    /// Binomial standard errors of the outage estimates.
    pub per_source_outage_se: Vec<f64>,
    pub common_outage_se: f64,
    /// Long-term rate of each source, `R_s / (M + alpha E(T))`.
    pub long_term_rates: Vec<f64>,
    /// Long-term aggregate throughput.
    pub eta: f64,
    /// Normalized long-term aggregate throughput.
    pub eta_norm: f64,
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn compute_metrics(
    counters: &RawCounters,
    cfg: &NetworkConfig,
) -> Result<MetricsReport, MetricsError> {
    if counters.frames == 0 {
        return Err(MetricsError::NoFrames);
    }
    let m = cfg.sources();
    if counters.decoded.len() != m {
        return Err(MetricsError::SourceCount {
            expected: m,
            got: counters.decoded.len(),
        });
    }
    let n = counters.frames;
    let frames = n as f64;
    let mean_rounds = counters.rounds_sum as f64 / frames;
    let per_source_outage: Vec<f64> = counters
        .decoded
        .iter()
        .map(|&d| (n - d) as f64 / frames)
        .collect();
    let common_outage = counters.common_outage as f64 / frames;
    let slots = m as f64 + cfg.alpha() * mean_rounds;
    let long_term_rates: Vec<f64> = cfg.rates().iter().map(|r| r / slots).collect();
    let eta = long_term_rates
        .iter()
        .zip(&per_source_outage)
        .map(|(r, p)| r * (1.0 - p))
        .sum();
    let eta_norm = per_source_outage.iter().map(|p| (1.0 - p) / slots).sum();
    Ok(MetricsReport {
        frames: n,
        mean_rounds,
        per_source_outage_se: per_source_outage
            .iter()
            .map(|&p| binomial_se(p, n))
            .collect(),
        per_source_outage,
        common_outage_se: binomial_se(common_outage, n),
        common_outage,
        long_term_rates,
        eta,
        eta_norm,
    })
}
