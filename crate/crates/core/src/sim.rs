//! One frame of the protocol: the first phase where every source transmits
//! once, then up to `T_max` second-phase rounds scheduled by the destination.

use rand::Rng;
use thiserror::Error;

use crate::exhaustive::optimal_sequence;
use crate::network::{ChannelRealization, NetworkConfig, NodeId};
use crate::outage::{
    best_decodable_subset, Candidate, MacParams, ObserverState, RoundHistory, TransmissionRecord,
};
use crate::source_set::SourceSet;
use crate::strategy::{SchedulingContext, Strategy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("{0} was scheduled while holding no decoded source")]
    EmptyTransmitter(NodeId),
    #[error("no round left in the frame")]
    FrameExhausted,
    #[error("the destination cannot transmit")]
    DestinationScheduled,
}

/// One second-phase transmission as it appears in a frame trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub round: usize,
    pub node: NodeId,
    pub snapshot: SourceSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameOutcome {
    /// Second-phase rounds used, 0 when the first phase was enough.
    pub rounds_used: usize,
    pub final_destination_set: SourceSet,
    pub decoded_flags: Vec<bool>,
    pub trace: Vec<TraceEntry>,
}

impl FrameOutcome {
    pub fn all_decoded(&self) -> bool {
        self.decoded_flags.iter().all(|&d| d)
    }
}

/// Evolving decoding state of every receiver during one frame.
#[derive(Debug, Clone)]
pub struct FrameState<'a> {
    cfg: &'a NetworkConfig,
    realization: &'a ChannelRealization,
    direct_mi: Vec<f64>,
    destination: ObserverState,
    relays: Vec<ObserverState>,
    // indexed like the candidates: sources, then relays
    decoding_sets: Vec<SourceSet>,
    history: RoundHistory,
}

impl<'a> FrameState<'a> {
    /// State after the first phase: every receiver decodes what its own
    /// source links support.
    pub fn run_phase1(cfg: &'a NetworkConfig, realization: &'a ChannelRealization) -> Self {
        let m = cfg.sources();
        let params = MacParams::new(cfg.rates(), cfg.alpha());
        let all = SourceSet::full(m);
        let observe = |rx: NodeId| {
            let mi = (0..m)
                .map(|s| realization.mi(NodeId::Source(s), rx))
                .collect();
            let state = ObserverState::after_phase1(rx, mi);
            let decoded = best_decodable_subset(all, &state, params, None);
            (state, decoded)
        };

        let mut decoding_sets: Vec<SourceSet> = (0..m).map(SourceSet::singleton).collect();
        let mut relays = Vec::with_capacity(cfg.relays());
        for r in 0..cfg.relays() {
            let (state, decoded) = observe(NodeId::Relay(r));
            relays.push(state);
            decoding_sets.push(decoded);
        }
        let (destination, dest_set) = observe(NodeId::Destination);
        FrameState {
            cfg,
            realization,
            direct_mi: realization.direct_mi(),
            destination,
            relays,
            decoding_sets,
            history: RoundHistory::new(dest_set),
        }
    }

    pub fn destination_set(&self) -> SourceSet {
        self.history.destination_set
    }

    pub fn undecoded(&self) -> SourceSet {
        self.destination_set().complement(self.cfg.sources())
    }

    pub fn all_decoded(&self) -> bool {
        self.undecoded().is_empty()
    }

    pub fn rounds_done(&self) -> usize {
        self.history.records().len()
    }

    pub fn decoding_set(&self, node: NodeId) -> SourceSet {
        match node {
            NodeId::Destination => self.destination_set(),
            n => self.decoding_sets[self.cfg.tx_index(n)],
        }
    }

    pub fn history(&self) -> &RoundHistory {
        &self.history
    }

    pub fn destination(&self) -> &ObserverState {
        &self.destination
    }

    pub fn relay(&self, r: usize) -> &ObserverState {
        &self.relays[r]
    }

    /// What the destination knows before scheduling the next round.
    pub fn context(&self) -> SchedulingContext<'_> {
        SchedulingContext {
            round: self.rounds_done() + 1,
            destination: &self.destination,
            direct_mi: &self.direct_mi,
            decoding_sets: &self.decoding_sets,
            undecoded: self.undecoded(),
            params: MacParams::new(self.cfg.rates(), self.cfg.alpha()),
        }
    }

    /// Destination set if `node` transmitted next, without updating anything.
    pub fn destination_set_after(&self, node: NodeId) -> SourceSet {
        let candidate = Candidate {
            node,
            snapshot: self.decoding_set(node),
            mi: self.realization.mi(node, NodeId::Destination),
        };
        let params = MacParams::new(self.cfg.rates(), self.cfg.alpha());
        let gained = best_decodable_subset(
            self.undecoded(),
            &self.destination,
            params,
            Some(&candidate),
        );
        self.destination_set().union(gained)
    }

    /// Lets `node` transmit in the next round and updates every receiver.
    ///
    /// Transmitters with an empty decoding set are allowed here (their slot
    /// is simply wasted); [`FrameState::run_round`] rejects them.
    pub fn transmit(&mut self, node: NodeId) -> Result<TraceEntry, SimError> {
        if node == NodeId::Destination {
            return Err(SimError::DestinationScheduled);
        }
        if self.rounds_done() >= self.cfg.max_rounds() {
            return Err(SimError::FrameExhausted);
        }
        let round = self.rounds_done() + 1;
        let tx = self.cfg.tx_index(node);
        let snapshot = self.decoding_sets[tx];
        let record = TransmissionRecord::new(node, snapshot, round);
        let params = MacParams::new(self.cfg.rates(), self.cfg.alpha());
        let m = self.cfg.sources();

        self.history
            .push(record)
            .expect("rounds are appended in order");
        self.destination
            .push_transmission(record, self.realization.mi(node, NodeId::Destination))
            .expect("the destination never transmits");
        let gained = best_decodable_subset(self.undecoded(), &self.destination, params, None);
        self.history.destination_set = self.history.destination_set.union(gained);

        for (r, state) in self.relays.iter_mut().enumerate() {
            let me = NodeId::Relay(r);
            if me == node {
                continue;
            }
            state
                .push_transmission(record, self.realization.mi(node, me))
                .expect("transmitter skipped");
            let idx = m + r;
            let undecoded = self.decoding_sets[idx].complement(m);
            let gained = best_decodable_subset(undecoded, state, params, None);
            self.decoding_sets[idx] = self.decoding_sets[idx].union(gained);
        }

        Ok(TraceEntry {
            round,
            node,
            snapshot,
        })
    }

    /// Schedules one round with an adaptive strategy.
    pub fn run_round(&mut self, strategy: Strategy) -> Result<TraceEntry, SimError> {
        let node = strategy
            .select(&self.context())
            .expect("run_round needs a round-by-round strategy");
        if self.decoding_set(node).is_empty() {
            return Err(SimError::EmptyTransmitter(node));
        }
        self.transmit(node)
    }

    pub fn outcome(&self) -> FrameOutcome {
        let set = self.destination_set();
        FrameOutcome {
            rounds_used: self.rounds_done(),
            final_destination_set: set,
            decoded_flags: (0..self.cfg.sources()).map(|s| set.contains(s)).collect(),
            trace: self
                .history
                .records()
                .iter()
                .map(|r| TraceEntry {
                    round: r.round,
                    node: r.transmitter,
                    snapshot: r.snapshot,
                })
                .collect(),
        }
    }
}

/// Runs one frame. `rng` is only consumed by [`Strategy::UpperBound`] to
/// break ties between equally good activation sequences.
pub fn run_frame<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    realization: &ChannelRealization,
    strategy: Strategy,
    rng: &mut R,
) -> Result<FrameOutcome, SimError> {
    if strategy == Strategy::UpperBound {
        let plan = optimal_sequence(cfg, realization, rng);
        return replay(cfg, realization, &plan.sequence);
    }
    let mut state = FrameState::run_phase1(cfg, realization);
    while !state.all_decoded() && state.rounds_done() < cfg.max_rounds() {
        state.run_round(strategy)?;
    }
    Ok(state.outcome())
}

/// Runs a fixed activation sequence, stopping early once everything is
/// decoded.
pub fn replay(
    cfg: &NetworkConfig,
    realization: &ChannelRealization,
    sequence: &[NodeId],
) -> Result<FrameOutcome, SimError> {
    let mut state = FrameState::run_phase1(cfg, realization);
    for &node in sequence {
        if state.all_decoded() {
            break;
        }
        state.transmit(node)?;
    }
    Ok(state.outcome())
}
