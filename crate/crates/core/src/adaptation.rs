//! Slow link adaptation over a discrete MCS family.
//!
//! For each average SNR point every candidate rate is simulated with the same
//! master seed, so all rates see the same fading draws, and the rate with the
//! highest long-term aggregate throughput is kept.

use thiserror::Error;

use crate::metrics::{compute_metrics, MetricsError, MetricsReport};
use crate::monte_carlo::{run_monte_carlo, Execution};
use crate::network::{ConfigErrors, NetworkSpec};
use crate::sim::SimError;
use crate::strategy::Strategy;

/// The MCS rates used by default, in b.c.u.
pub const DEFAULT_MCS_RATES: [f64; 7] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5];

/// Throughputs closer than this are treated as equal; the smaller rate wins.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AdaptationError {
    #[error("the MCS family is empty")]
    EmptyMcs,
    #[error("invalid network: {0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationPoint {
    pub gamma_db: f64,
    /// One report per MCS rate, in the order given.
    pub per_rate: Vec<MetricsReport>,
    pub selected_rate: f64,
    /// Maximum throughput over the MCS family.
    pub envelope_eta: f64,
}

impl AdaptationPoint {
    pub fn selected(&self, rates: &[f64]) -> &MetricsReport {
        let idx = rates
            .iter()
            .position(|&r| r == self.selected_rate)
            .expect("selected rate comes from the family");
        &self.per_rate[idx]
    }
}

/// Index of the best throughput, preferring the smaller rate on near ties.
fn select(mcs_rates: &[f64], etas: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..etas.len() {
        let better = etas[i] > etas[best] + TIE_TOLERANCE;
        let tie_smaller =
            (etas[i] - etas[best]).abs() <= TIE_TOLERANCE && mcs_rates[i] < mcs_rates[best];
        if better || tie_smaller {
            best = i;
        }
    }
    best
}

/// Symmetric-rate link adaptation over a symmetric-link SNR sweep.
///
/// `template` fixes the topology, `T_max` and `alpha`; its rates and link
/// gains are replaced at every point.
pub fn adapt_rates(
    template: &NetworkSpec,
    mcs_rates: &[f64],
    gamma_db: &[f64],
    strategy: Strategy,
    frames: u64,
    seed: u64,
    execution: Execution,
) -> Result<Vec<AdaptationPoint>, AdaptationError> {
    if mcs_rates.is_empty() {
        return Err(AdaptationError::EmptyMcs);
    }
    let mut points = Vec::with_capacity(gamma_db.len());
    for &gamma in gamma_db {
        let mut per_rate = Vec::with_capacity(mcs_rates.len());
        for &rate in mcs_rates {
            let spec = NetworkSpec::symmetric(
                template.sources,
                template.relays,
                template.max_rounds,
                template.alpha,
                vec![rate; template.sources],
                gamma,
            );
            let cfg = spec.validate()?;
            let counters = run_monte_carlo(&cfg, strategy, frames, seed, execution)?;
            per_rate.push(compute_metrics(&counters, &cfg)?);
        }
        let etas: Vec<f64> = per_rate.iter().map(|r| r.eta).collect();
        let best = select(mcs_rates, &etas);
        points.push(AdaptationPoint {
            gamma_db: gamma,
            selected_rate: mcs_rates[best],
            envelope_eta: etas[best],
            per_rate,
        });
    }
    Ok(points)
}
