//! MAC outage events seen by a receiving node and the decoding-set updates
//! they induce.
//!
//! A receiver `b` (a relay or the destination) accumulates mutual
//! information about the undecoded sources from their first-phase slots and
//! from every second-phase retransmission it overheard. A set `U` of
//! undecoded sources satisfies its MAC inequality when
//!
//! ```text
//! sum_{s in U} R_s <= sum_{s in U} I_{s,b} + sum_l alpha * I_{a_l,b} * useful_l(U, I)
//! ```
//!
//! where a transmission is useful for `U` when its decoding-set snapshot
//! meets `U` and avoids the interference set `I`. Each retransmission is one
//! codeword and contributes at most once per inequality.

use thiserror::Error;

use crate::network::NodeId;
use crate::source_set::SourceSet;

/// One second-phase transmission together with the decoding set the
/// transmitter held when it was scheduled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionRecord {
    pub transmitter: NodeId,
    pub snapshot: SourceSet,
    pub round: usize,
}

impl TransmissionRecord {
    pub fn new(transmitter: NodeId, snapshot: SourceSet, round: usize) -> Self {
        if let NodeId::Source(s) = transmitter {
            debug_assert_eq!(snapshot, SourceSet::singleton(s));
        }
        TransmissionRecord {
            transmitter,
            snapshot,
            round,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistoryError {
    #[error("{0} cannot hear its own transmission")]
    HalfDuplex(NodeId),
    #[error("round {got} recorded after round {last}")]
    NonConsecutiveRound { last: usize, got: usize },
}

/// The schedule so far (`P_{t-1}`): every selected node with its snapshot,
/// plus the destination's current decoding set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundHistory {
    records: Vec<TransmissionRecord>,
    pub destination_set: SourceSet,
}

impl RoundHistory {
    pub fn new(destination_set: SourceSet) -> Self {
        RoundHistory {
            records: Vec::new(),
            destination_set,
        }
    }

    pub fn records(&self) -> &[TransmissionRecord] {
        &self.records
    }

    pub fn push(&mut self, record: TransmissionRecord) -> Result<(), HistoryError> {
        let last = self.records.len();
        if record.round != last + 1 {
            return Err(HistoryError::NonConsecutiveRound {
                last,
                got: record.round,
            });
        }
        self.records.push(record);
        Ok(())
    }
}

/// A transmission as heard by a particular receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeardTransmission {
    pub record: TransmissionRecord,
    /// Mutual information of the transmitter towards the observer.
    pub mi: f64,
}

/// Everything a receiving node has accumulated in the current frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    observer: NodeId,
    phase1_mi: Vec<f64>,
    heard: Vec<HeardTransmission>,
}

impl ObserverState {
    /// State at the end of the first phase, with `phase1_mi[s] = I_{s,b}`.
    pub fn after_phase1(observer: NodeId, phase1_mi: Vec<f64>) -> Self {
        assert!(!observer.is_source(), "sources do not decode other sources");
        debug_assert!(phase1_mi.iter().all(|&v| v >= 0.0));
        ObserverState {
            observer,
            phase1_mi,
            heard: Vec::new(),
        }
    }

    pub fn observer(&self) -> NodeId {
        self.observer
    }

    pub fn phase1_mi(&self) -> &[f64] {
        &self.phase1_mi
    }

    pub fn heard(&self) -> &[HeardTransmission] {
        &self.heard
    }

    /// Returns a copy of the state with one more overheard transmission.
    pub fn apply_transmission(
        &self,
        record: TransmissionRecord,
        observer_mi: f64,
    ) -> Result<Self, HistoryError> {
        let mut next = self.clone();
        next.push_transmission(record, observer_mi)?;
        Ok(next)
    }

    /// In-place variant of [`ObserverState::apply_transmission`].
    pub fn push_transmission(
        &mut self,
        record: TransmissionRecord,
        observer_mi: f64,
    ) -> Result<(), HistoryError> {
        if record.transmitter == self.observer {
            return Err(HistoryError::HalfDuplex(self.observer));
        }
        debug_assert!(observer_mi >= 0.0);
        self.heard.push(HeardTransmission {
            record,
            mi: observer_mi,
        });
        Ok(())
    }
}

/// The node being considered for the current round, as seen by the observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub node: NodeId,
    pub snapshot: SourceSet,
    /// Mutual information of the candidate towards the observer.
    pub mi: f64,
}

/// Source rates and the slot-length ratio that weights second-phase MI.
#[derive(Debug, Clone, Copy)]
pub struct MacParams<'a> {
    pub rates: &'a [f64],
    pub alpha: f64,
}

impl<'a> MacParams<'a> {
    pub fn new(rates: &'a [f64], alpha: f64) -> Self {
        MacParams { rates, alpha }
    }
}

fn useful(snapshot: SourceSet, u: SourceSet, interference: SourceSet) -> bool {
    snapshot.intersects(u) && !snapshot.intersects(interference)
}

/// Both sides of the MAC inequality for `u`: (sum rate, accumulated MI).
fn mac_sides(
    u: SourceSet,
    interference: SourceSet,
    state: &ObserverState,
    params: MacParams<'_>,
    candidate: Option<&Candidate>,
) -> (f64, f64) {
    let mut rate = 0.0;
    let mut info = 0.0;
    for s in u.iter() {
        rate += params.rates[s];
        info += state.phase1_mi[s];
    }
    for h in &state.heard {
        if useful(h.record.snapshot, u, interference) {
            info += params.alpha * h.mi;
        }
    }
    if let Some(c) = candidate {
        if useful(c.snapshot, u, interference) {
            info += params.alpha * c.mi;
        }
    }
    (rate, info)
}

/// True when the sum rate of `u` exceeds what the observer accumulated for
/// it, treating `interference` as undecodable.
pub fn mac_constraint_violated(
    u: SourceSet,
    interference: SourceSet,
    state: &ObserverState,
    params: MacParams<'_>,
    candidate: Option<&Candidate>,
) -> bool {
    debug_assert!(!u.is_empty());
    debug_assert!(!u.intersects(interference));
    let (rate, info) = mac_sides(u, interference, state, params, candidate);
    rate > info
}

/// Accumulated MI minus sum rate for `u`; negative exactly when the
/// constraint is violated.
pub fn mac_slack(
    u: SourceSet,
    interference: SourceSet,
    state: &ObserverState,
    params: MacParams<'_>,
    candidate: Option<&Candidate>,
) -> f64 {
    let (rate, info) = mac_sides(u, interference, state, params, candidate);
    info - rate
}

/// Common outage of the sources in `b`: some nonempty `U ⊆ b` violates its
/// MAC inequality while the rest of `undecoded` is treated as interference.
pub fn common_outage_of_subset(
    b: SourceSet,
    undecoded: SourceSet,
    state: &ObserverState,
    params: MacParams<'_>,
    candidate: Option<&Candidate>,
) -> bool {
    debug_assert!(b.is_subset(undecoded));
    let interference = undecoded.difference(b);
    b.subsets()
        .filter(|u| !u.is_empty())
        .any(|u| mac_constraint_violated(u, interference, state, params, candidate))
}

/// Largest subset of `undecoded` that is not in common outage, scanning by
/// decreasing cardinality and lexicographically within a cardinality.
/// Returns the empty set when every nonempty subset is in outage.
pub fn best_decodable_subset(
    undecoded: SourceSet,
    state: &ObserverState,
    params: MacParams<'_>,
    candidate: Option<&Candidate>,
) -> SourceSet {
    undecoded
        .subsets_by_size_desc()
        .find(|&b| !common_outage_of_subset(b, undecoded, state, params, candidate))
        .unwrap_or(SourceSet::EMPTY)
}

/// Individual outage of source `s`: for every interference set avoiding
/// `s`, some `U` containing `s` among the remaining sources is violated.
pub fn individual_outage(
    s: usize,
    undecoded: SourceSet,
    state: &ObserverState,
    params: MacParams<'_>,
    candidate: Option<&Candidate>,
) -> bool {
    debug_assert!(undecoded.contains(s));
    let me = SourceSet::singleton(s);
    let others = undecoded.difference(me);
    others.subsets().all(|interference| {
        let rest = others.difference(interference);
        rest.subsets().any(|extra| {
            mac_constraint_violated(extra.union(me), interference, state, params, candidate)
        })
    })
}

/// Reference decoder that enumerates every subset by bit mask and picks the
/// winner by explicit comparison. Used to cross-check
/// [`best_decodable_subset`].
pub mod oracle {
    use std::cmp::Ordering;

    use super::*;

    fn lexicographic(a: SourceSet, b: SourceSet) -> Ordering {
        a.iter().cmp(b.iter())
    }

    fn in_common_outage(
        b: u32,
        undecoded: u32,
        state: &ObserverState,
        params: MacParams<'_>,
        candidate: Option<&Candidate>,
    ) -> bool {
        let interference = SourceSet::from_bits(undecoded & !b);
        (1..=b).filter(|u| u & !b == 0).any(|u| {
            mac_constraint_violated(
                SourceSet::from_bits(u),
                interference,
                state,
                params,
                candidate,
            )
        })
    }

    pub fn brute_force_decodable_subset(
        undecoded: SourceSet,
        state: &ObserverState,
        params: MacParams<'_>,
        candidate: Option<&Candidate>,
    ) -> SourceSet {
        let all = undecoded.bits();
        let mut best: Option<SourceSet> = None;
        for b in 1..=all {
            if b & !all != 0 || in_common_outage(b, all, state, params, candidate) {
                continue;
            }
            let b = SourceSet::from_bits(b);
            best = match best {
                None => Some(b),
                Some(cur) => {
                    let better = b.len() > cur.len()
                        || (b.len() == cur.len() && lexicographic(b, cur) == Ordering::Less);
                    Some(if better { b } else { cur })
                }
            };
        }
        best.unwrap_or(SourceSet::EMPTY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> SourceSet {
        xs.iter().copied().collect()
    }

    fn dest(mi: &[f64]) -> ObserverState {
        ObserverState::after_phase1(NodeId::Destination, mi.to_vec())
    }

    #[test]
    fn single_user_direct_link() {
        let state = dest(&[1.5]);
        let rates = [1.0];
        let p = MacParams::new(&rates, 0.5);
        assert!(!mac_constraint_violated(
            set(&[0]),
            SourceSet::EMPTY,
            &state,
            p,
            None
        ));
    }

    #[test]
    fn relay_term_counts_when_useful() {
        let rates = [1.0, 1.0];
        let p = MacParams::new(&rates, 0.5);
        let state = dest(&[0.5, 0.0])
            .apply_transmission(TransmissionRecord::new(NodeId::Relay(0), set(&[0]), 1), 1.2)
            .unwrap();
        // 0.5 + 0.5 * 1.2 = 1.1 >= 1
        assert!(!mac_constraint_violated(
            set(&[0]),
            SourceSet::EMPTY,
            &state,
            p,
            None
        ));
        assert!((mac_slack(set(&[0]), SourceSet::EMPTY, &state, p, None) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn relay_term_dropped_when_snapshot_hits_interference() {
        let rates = [1.0, 1.0];
        let p = MacParams::new(&rates, 0.5);
        let state = dest(&[0.5, 0.0])
            .apply_transmission(
                TransmissionRecord::new(NodeId::Relay(0), set(&[0, 1]), 1),
                1.2,
            )
            .unwrap();
        assert!(mac_constraint_violated(
            set(&[0]),
            set(&[1]),
            &state,
            p,
            None
        ));
        // with no interference the same relay helps
        assert!(!mac_constraint_violated(
            set(&[0]),
            SourceSet::EMPTY,
            &state,
            p,
            None
        ));
    }

    #[test]
    fn candidate_term_behaves_like_a_past_transmission() {
        let rates = [1.0, 1.0];
        let p = MacParams::new(&rates, 0.5);
        let state = dest(&[0.5, 0.0]);
        let cand = Candidate {
            node: NodeId::Relay(0),
            snapshot: set(&[0]),
            mi: 1.2,
        };
        assert!(mac_constraint_violated(
            set(&[0]),
            SourceSet::EMPTY,
            &state,
            p,
            None
        ));
        assert!(!mac_constraint_violated(
            set(&[0]),
            SourceSet::EMPTY,
            &state,
            p,
            Some(&cand)
        ));
    }

    #[test]
    fn empty_subset_is_never_in_outage() {
        let rates = [1.0, 1.0];
        let state = dest(&[0.0, 0.0]);
        let p = MacParams::new(&rates, 0.5);
        assert!(!common_outage_of_subset(
            SourceSet::EMPTY,
            set(&[0, 1]),
            &state,
            p,
            None
        ));
    }

    #[test]
    fn weak_singleton_puts_pair_in_outage() {
        let rates = [1.0, 1.0];
        let state = dest(&[1.2, 0.8]);
        let p = MacParams::new(&rates, 0.5);
        assert!(common_outage_of_subset(
            set(&[0, 1]),
            set(&[0, 1]),
            &state,
            p,
            None
        ));
        assert!(!common_outage_of_subset(
            set(&[0]),
            set(&[0, 1]),
            &state,
            p,
            None
        ));
    }

    #[test]
    fn pair_clear_when_all_inequalities_hold() {
        // singletons 1.2 >= 1, 1.1 >= 1 and the sum 2.3 >= 2
        let rates = [1.0, 1.0];
        let state = dest(&[1.2, 1.1]);
        let p = MacParams::new(&rates, 0.5);
        let all = set(&[0, 1]);
        assert!(!common_outage_of_subset(all, all, &state, p, None));
        assert_eq!(best_decodable_subset(all, &state, p, None), all);
    }

    #[test]
    fn sum_rate_constraint_binds() {
        // each singleton holds on its own, but a shared relay codeword has to
        // cover the sum rate of both sources
        let rates = [1.0, 1.0];
        let p = MacParams::new(&rates, 1.0);
        let state = dest(&[0.5, 0.5])
            .apply_transmission(
                TransmissionRecord::new(NodeId::Relay(0), set(&[0, 1]), 1),
                0.6,
            )
            .unwrap();
        let all = set(&[0, 1]);
        // {s1}: 0.5 + 0.6 = 1.1 ok, {s2} ok, {s1,s2}: 1.0 + 0.6 = 1.6 < 2
        assert!(common_outage_of_subset(all, all, &state, p, None));
        // alone, each source sees the other as interference and loses the relay
        assert!(common_outage_of_subset(set(&[0]), all, &state, p, None));
        assert_eq!(
            best_decodable_subset(all, &state, p, None),
            SourceSet::EMPTY
        );
    }

    #[test]
    fn threshold_rule_without_history() {
        let rates = [1.0, 1.0, 1.0];
        let state = dest(&[1.5, 0.4, 2.0]);
        let p = MacParams::new(&rates, 0.5);
        let all = SourceSet::full(3);
        assert_eq!(best_decodable_subset(all, &state, p, None), set(&[0, 2]));
        assert_eq!(
            oracle::brute_force_decodable_subset(all, &state, p, None),
            set(&[0, 2])
        );
        assert_eq!(
            best_decodable_subset(SourceSet::EMPTY, &state, p, None),
            SourceSet::EMPTY
        );
    }

    #[test]
    fn brute_force_edge_cases() {
        let rates = [1.0, 1.0];
        let p = MacParams::new(&rates, 0.5);
        let weak = dest(&[0.2, 3.0]);
        assert_eq!(
            oracle::brute_force_decodable_subset(set(&[0]), &weak, p, None),
            SourceSet::EMPTY
        );
        let strong = dest(&[3.0, 3.0]);
        let all = set(&[0, 1]);
        assert_eq!(
            oracle::brute_force_decodable_subset(all, &strong, p, None),
            all
        );
    }

    #[test]
    fn largest_clear_subset_wins() {
        let rates = [1.0, 1.0, 1.0];
        let p = MacParams::new(&rates, 0.5);
        let state = dest(&[1.0, 1.0, 1.0]);
        let all = SourceSet::full(3);
        assert_eq!(best_decodable_subset(all, &state, p, None), all);
        let state = dest(&[0.0, 1.0, 1.0]);
        assert_eq!(best_decodable_subset(all, &state, p, None), set(&[1, 2]));
    }

    #[test]
    fn individual_outage_single_source() {
        let rates = [1.0, 1.0];
        let p = MacParams::new(&rates, 0.5);
        let ok = dest(&[1.0, 0.0]);
        assert!(!individual_outage(0, set(&[0]), &ok, p, None));
        let bad = dest(&[0.99, 0.0]);
        assert!(individual_outage(0, set(&[0]), &bad, p, None));
    }

    #[test]
    fn half_duplex_violation_is_rejected() {
        let relay = ObserverState::after_phase1(NodeId::Relay(1), vec![0.0, 0.0]);
        let rec = TransmissionRecord::new(NodeId::Relay(1), set(&[0]), 1);
        assert_eq!(
            relay.apply_transmission(rec, 1.0),
            Err(HistoryError::HalfDuplex(NodeId::Relay(1)))
        );
    }

    #[test]
    fn disjoint_snapshot_changes_nothing() {
        let rates = [1.0, 1.0, 1.0];
        let p = MacParams::new(&rates, 0.5);
        let before = dest(&[0.3, 1.4, 0.9]);
        let after = before
            .apply_transmission(TransmissionRecord::new(NodeId::Relay(0), set(&[1]), 1), 5.0)
            .unwrap();
        let undecoded = set(&[0, 2]);
        for b in undecoded.subsets() {
            assert_eq!(
                common_outage_of_subset(b, undecoded, &before, p, None),
                common_outage_of_subset(b, undecoded, &after, p, None)
            );
        }
        for s in undecoded.iter() {
            assert_eq!(
                individual_outage(s, undecoded, &before, p, None),
                individual_outage(s, undecoded, &after, p, None)
            );
        }
    }

    #[test]
    fn appended_transmission_adds_one_term() {
        let rates = [2.0, 1.0];
        let p = MacParams::new(&rates, 0.5);
        let before = dest(&[0.3, 0.4]);
        let after = before
            .apply_transmission(
                TransmissionRecord::new(NodeId::Relay(0), set(&[0, 1]), 1),
                1.7,
            )
            .unwrap();
        let u = set(&[0, 1]);
        let delta = mac_slack(u, SourceSet::EMPTY, &after, p, None)
            - mac_slack(u, SourceSet::EMPTY, &before, p, None);
        assert!((delta - 0.85).abs() < 1e-12);
        assert_eq!(after.phase1_mi(), before.phase1_mi());
    }

    #[test]
    fn history_rounds_must_be_consecutive() {
        let mut h = RoundHistory::new(SourceSet::EMPTY);
        h.push(TransmissionRecord::new(NodeId::Source(0), set(&[0]), 1))
            .unwrap();
        let err = h
            .push(TransmissionRecord::new(NodeId::Source(1), set(&[1]), 3))
            .unwrap_err();
        assert_eq!(err, HistoryError::NonConsecutiveRound { last: 1, got: 3 });
        assert_eq!(h.records().len(), 1);
    }
}
