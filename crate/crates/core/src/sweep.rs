//! Runs an [`Experiment`] and collects one row per (sweep value, strategy).

use thiserror::Error;

use crate::adaptation::{adapt_rates, AdaptationError};
use crate::config::{Experiment, SweepKind};
use crate::metrics::{compute_metrics, MetricsError, MetricsReport};
use crate::monte_carlo::run_monte_carlo;
use crate::network::ConfigErrors;
use crate::sim::SimError;
use crate::strategy::Strategy;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid network at sweep point {value_db} dB: {source}")]
    Network { value_db: f64, source: ConfigErrors },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Adaptation(#[from] AdaptationError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scenario: String,
    pub sweep_value_db: f64,
    pub strategy: Strategy,
    pub frames: u64,
    pub seed: u64,
    pub report: MetricsReport,
    /// Adapted (or, for fixed-rate rows, imposed) source rate.
    pub selected_rate: Option<f64>,
}

/// Rows of an experiment. `per_rate` is only filled in link-adaptation mode
/// and holds every fixed-rate curve behind the adapted envelope.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<Row>,
    pub per_rate: Vec<Row>,
}

/// Scenario label of the fixed-rate curves written next to an adaptation run.
pub const FIXED_RATE_SCENARIO: &str = "link_adaptation_fixed";

pub fn run_experiment(exp: &Experiment) -> Result<SweepResult, SweepError> {
    let mut out = SweepResult::default();
    let exec = exp.execution();
    match exp.sweep {
        SweepKind::SymmetricGamma | SweepKind::DeltaGamma => {
            for &value in &exp.sweep_db {
                let spec = match exp.sweep {
                    SweepKind::SymmetricGamma => exp.symmetric_network(value),
                    _ => exp.network.with_offset_db(value),
                };
                let cfg = spec.validate().map_err(|source| SweepError::Network {
                    value_db: value,
                    source,
                })?;
                for &strategy in &exp.strategies {
                    log::info!("{} {value} dB {strategy}", exp.sweep);
                    let counters = run_monte_carlo(&cfg, strategy, exp.frames, exp.seed, exec)?;
                    out.rows.push(Row {
                        scenario: exp.sweep.name().to_string(),
                        sweep_value_db: value,
                        strategy,
                        frames: exp.frames,
                        seed: exp.seed,
                        report: compute_metrics(&counters, &cfg)?,
                        selected_rate: None,
                    });
                }
            }
        }
        SweepKind::LinkAdaptation => {
            let mut by_strategy = Vec::new();
            for &strategy in &exp.strategies {
                log::info!("link adaptation {strategy}");
                let points = adapt_rates(
                    &exp.network,
                    &exp.mcs_rates,
                    &exp.sweep_db,
                    strategy,
                    exp.frames,
                    exp.seed,
                    exec,
                )?;
                by_strategy.push((strategy, points));
            }
            for (i, &value) in exp.sweep_db.iter().enumerate() {
                for (strategy, points) in &by_strategy {
                    let point = &points[i];
                    let row = |report: MetricsReport, scenario: &str, rate: f64| Row {
                        scenario: scenario.to_string(),
                        sweep_value_db: value,
                        strategy: *strategy,
                        frames: exp.frames,
                        seed: exp.seed,
                        report,
                        selected_rate: Some(rate),
                    };
                    out.rows.push(row(
                        point.selected(&exp.mcs_rates).clone(),
                        SweepKind::LinkAdaptation.name(),
                        point.selected_rate,
                    ));
                    for (report, &rate) in point.per_rate.iter().zip(&exp.mcs_rates) {
                        out.per_rate
                            .push(row(report.clone(), FIXED_RATE_SCENARIO, rate));
                    }
                }
            }
        }
    }
    Ok(out)
}
