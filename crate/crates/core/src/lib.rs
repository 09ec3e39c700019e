//! Monte Carlo simulator for centralized scheduling of cooperative IR-HARQ
//! retransmissions in a slow-fading orthogonal multiple-access
//! multiple-relay channel.
//!
//! `M` sources send one message each in the first phase while `L`
//! half-duplex relays listen. In the second phase the destination schedules
//! one source or relay per round until it has decoded everything or `T_max`
//! rounds are spent. Relays forward a joint codeword of the sources they
//! decoded. Decoding success follows the information-outage conditions of
//! the underlying multiple-access channel.
//!
//! Frame-level parallelism uses rayon behind the default `parallel` feature;
//! without it every batch runs sequentially with identical results.

pub mod adaptation;
pub mod config;
pub mod exhaustive;
pub mod metrics;
pub mod monte_carlo;
pub mod network;
pub mod outage;
pub mod report;
pub mod sim;
pub mod source_set;
pub mod strategy;
pub mod sweep;

pub use metrics::{compute_metrics, MetricsReport};
pub use monte_carlo::{run_monte_carlo, Execution, RawCounters};
pub use network::{ChannelRealization, NetworkConfig, NetworkSpec, NodeId};
pub use sim::{run_frame, FrameOutcome};
pub use source_set::SourceSet;
pub use strategy::Strategy;
