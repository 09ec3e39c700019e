//! Centralized node selection for one second-phase round.
//!
//! The destination knows the mutual information of every direct link into
//! itself, the decoding set reported by every relay and the schedule so far.
//! Each selector maps that knowledge to the node transmitting next.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::network::NodeId;
use crate::outage::{
    best_decodable_subset, common_outage_of_subset, mac_slack, Candidate, MacParams, ObserverState,
};
use crate::source_set::SourceSet;

/// Scheduling policies understood by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Maximize the number of newly decoded sources, then the direct MI.
    Strategy1,
    /// Highest direct MI among nodes holding an undecoded source.
    Strategy2,
    /// Highest product of direct MI and decoding-set size.
    Strategy3,
    /// Common-outage minimizing benchmark.
    Reference1,
    /// Genie-aided exhaustive search over fixed activation sequences.
    UpperBound,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Strategy1,
        Strategy::Strategy2,
        Strategy::Strategy3,
        Strategy::Reference1,
        Strategy::UpperBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Strategy1 => "strategy1",
            Strategy::Strategy2 => "strategy2",
            Strategy::Strategy3 => "strategy3",
            Strategy::Reference1 => "reference1",
            Strategy::UpperBound => "upper_bound",
        }
    }

    /// Round-by-round selection. `None` for [`Strategy::UpperBound`], which
    /// plans the whole frame from full CSI instead.
    pub fn select(self, ctx: &SchedulingContext<'_>) -> Option<NodeId> {
        match self {
            Strategy::Strategy1 => Some(select_strategy1(ctx)),
            Strategy::Strategy2 => Some(select_strategy2(ctx)),
            Strategy::Strategy3 => Some(select_strategy3(ctx)),
            Strategy::Reference1 => Some(select_reference1(ctx)),
            Strategy::UpperBound => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown strategy `{0}` (expected one of strategy1, strategy2, strategy3, reference1, upper_bound)")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// What the destination knows at the start of a round.
#[derive(Debug, Clone, Copy)]
pub struct SchedulingContext<'a> {
    pub round: usize,
    /// The destination's accumulated state (phase-1 MI and heard rounds).
    pub destination: &'a ObserverState,
    /// `I_{a,d}` per candidate, sources first then relays.
    pub direct_mi: &'a [f64],
    /// Decoding set per candidate, same indexing as `direct_mi`.
    pub decoding_sets: &'a [SourceSet],
    /// Sources the destination has not decoded yet.
    pub undecoded: SourceSet,
    pub params: MacParams<'a>,
}

impl<'a> SchedulingContext<'a> {
    pub fn sources(&self) -> usize {
        self.params.rates.len()
    }

    pub fn node_at(&self, idx: usize) -> NodeId {
        let m = self.sources();
        if idx < m {
            NodeId::Source(idx)
        } else {
            NodeId::Relay(idx - m)
        }
    }

    pub fn index_of(&self, node: NodeId) -> usize {
        match node {
            NodeId::Source(s) => s,
            NodeId::Relay(r) => self.sources() + r,
            NodeId::Destination => panic!("the destination is never scheduled"),
        }
    }

    fn candidate(&self, idx: usize) -> Candidate {
        Candidate {
            node: self.node_at(idx),
            snapshot: self.decoding_sets[idx],
            mi: self.direct_mi[idx],
        }
    }

    fn is_useful(&self, idx: usize) -> bool {
        self.decoding_sets[idx].intersects(self.undecoded)
    }

    fn check(&self) {
        assert!(
            !self.undecoded.is_empty(),
            "scheduling requested after every source was decoded"
        );
        debug_assert_eq!(self.direct_mi.len(), self.decoding_sets.len());
    }
}

/// First index with the largest score; earlier candidates win ties.
fn argmax_by<I, F>(indices: I, mut score: F) -> Option<usize>
where
    I: IntoIterator<Item = usize>,
    F: FnMut(usize) -> f64,
{
    let mut best: Option<(usize, f64)> = None;
    for idx in indices {
        let v = score(idx);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((idx, v));
        }
    }
    best.map(|(idx, _)| idx)
}

fn useful_indices<'c>(ctx: &'c SchedulingContext<'_>) -> impl Iterator<Item = usize> + 'c {
    (0..ctx.decoding_sets.len()).filter(|&i| ctx.is_useful(i))
}

/// Nodes holding at least one source the destination still misses, sources
/// before relays.
pub fn useful_candidates(ctx: &SchedulingContext<'_>) -> Vec<NodeId> {
    ctx.check();
    useful_indices(ctx).map(|i| ctx.node_at(i)).collect()
}

/// Number of sources the destination would newly decode if `idx` transmits.
pub fn newly_decoded(ctx: &SchedulingContext<'_>, idx: usize) -> usize {
    if !ctx.is_useful(idx) {
        return 0;
    }
    let cand = ctx.candidate(idx);
    best_decodable_subset(ctx.undecoded, ctx.destination, ctx.params, Some(&cand)).len()
}

pub fn select_strategy1(ctx: &SchedulingContext<'_>) -> NodeId {
    ctx.check();
    let gains: Vec<usize> = (0..ctx.decoding_sets.len())
        .map(|i| newly_decoded(ctx, i))
        .collect();
    let max_v = gains.iter().copied().max().unwrap_or(0);
    // with nothing decodable this round, stay among nodes that can still help
    let pool = (0..gains.len()).filter(|&i| gains[i] == max_v && (max_v > 0 || ctx.is_useful(i)));
    let idx = argmax_by(pool, |i| ctx.direct_mi[i]).expect("an undecoded source is always useful");
    ctx.node_at(idx)
}

pub fn select_strategy2(ctx: &SchedulingContext<'_>) -> NodeId {
    ctx.check();
    let idx = argmax_by(useful_indices(ctx), |i| ctx.direct_mi[i])
        .expect("an undecoded source is always useful");
    ctx.node_at(idx)
}

pub fn select_strategy3(ctx: &SchedulingContext<'_>) -> NodeId {
    ctx.check();
    let idx = argmax_by(useful_indices(ctx), |i| {
        ctx.direct_mi[i] * ctx.decoding_sets[i].len() as f64
    })
    .expect("an undecoded source is always useful");
    ctx.node_at(idx)
}

/// Whether scheduling `idx` ends the common outage of all undecoded sources.
pub fn resolves_common_outage(ctx: &SchedulingContext<'_>, idx: usize) -> bool {
    let cand = ctx.candidate(idx);
    !common_outage_of_subset(
        ctx.undecoded,
        ctx.undecoded,
        ctx.destination,
        ctx.params,
        Some(&cand),
    )
}

/// Smallest MAC slack over the nonempty subsets of the undecoded sources,
/// all decoded jointly, if `idx` transmits. Negative while in common outage.
pub fn common_outage_margin(ctx: &SchedulingContext<'_>, idx: usize) -> f64 {
    let cand = ctx.candidate(idx);
    ctx.undecoded
        .subsets()
        .filter(|u| !u.is_empty())
        .map(|u| {
            mac_slack(
                u,
                SourceSet::EMPTY,
                ctx.destination,
                ctx.params,
                Some(&cand),
            )
        })
        .fold(f64::INFINITY, f64::min)
}

/// Common-outage minimizing benchmark.
///
/// Nodes whose transmission lets the destination decode every remaining
/// source come first, by direct MI. Otherwise the node that brings the
/// undecoded set closest to leaving common outage is picked, by direct MI
/// among equal margins.
pub fn select_reference1(ctx: &SchedulingContext<'_>) -> NodeId {
    ctx.check();
    let resolving: Vec<usize> = useful_indices(ctx)
        .filter(|&i| resolves_common_outage(ctx, i))
        .collect();
    if let Some(idx) = argmax_by(resolving, |i| ctx.direct_mi[i]) {
        return ctx.node_at(idx);
    }
    let margins: Vec<(usize, f64)> = useful_indices(ctx)
        .map(|i| (i, common_outage_margin(ctx, i)))
        .collect();
    let best = margins
        .iter()
        .map(|&(_, m)| m)
        .fold(f64::NEG_INFINITY, f64::max);
    let pool = margins.iter().filter(|&&(_, m)| m == best).map(|&(i, _)| i);
    let idx = argmax_by(pool, |i| ctx.direct_mi[i]).expect("an undecoded source is always useful");
    ctx.node_at(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> SourceSet {
        xs.iter().copied().collect()
    }

    struct Fixture {
        dest: ObserverState,
        direct_mi: Vec<f64>,
        sets: Vec<SourceSet>,
        rates: Vec<f64>,
        undecoded: SourceSet,
    }

    impl Fixture {
        /// Two sources and two relays.
        fn new(
            phase1: &[f64],
            direct_mi: &[f64],
            relay_sets: &[SourceSet],
            undecoded: SourceSet,
        ) -> Self {
            let m = phase1.len();
            let mut sets: Vec<SourceSet> = (0..m).map(SourceSet::singleton).collect();
            sets.extend_from_slice(relay_sets);
            Fixture {
                dest: ObserverState::after_phase1(NodeId::Destination, phase1.to_vec()),
                direct_mi: direct_mi.to_vec(),
                sets,
                rates: vec![1.0; m],
                undecoded,
            }
        }

        fn ctx(&self) -> SchedulingContext<'_> {
            SchedulingContext {
                round: 1,
                destination: &self.dest,
                direct_mi: &self.direct_mi,
                decoding_sets: &self.sets,
                undecoded: self.undecoded,
                params: MacParams::new(&self.rates, 0.5),
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("strategy4".parse::<Strategy>().is_err());
    }

    #[test]
    fn only_the_source_itself_is_useful() {
        let f = Fixture::new(
            &[1.5, 0.1],
            &[1.5, 0.1, 3.0, 3.0],
            &[SourceSet::EMPTY, SourceSet::EMPTY],
            set(&[1]),
        );
        assert_eq!(useful_candidates(&f.ctx()), vec![NodeId::Source(1)]);
        for s in [
            Strategy::Strategy1,
            Strategy::Strategy2,
            Strategy::Strategy3,
            Strategy::Reference1,
        ] {
            assert_eq!(s.select(&f.ctx()), Some(NodeId::Source(1)));
        }
    }

    #[test]
    fn relay_holding_an_undecoded_source_is_useful() {
        let f = Fixture::new(
            &[1.5, 0.1, 0.2],
            &[1.5, 0.1, 0.2, 0.5],
            &[set(&[0, 2])],
            set(&[1, 2]),
        );
        assert_eq!(
            useful_candidates(&f.ctx()),
            vec![NodeId::Source(1), NodeId::Source(2), NodeId::Relay(0)]
        );
    }

    #[test]
    #[should_panic(expected = "every source was decoded")]
    fn empty_undecoded_set_is_a_contract_violation() {
        let f = Fixture::new(
            &[1.5, 1.5],
            &[1.5, 1.5, 1.0],
            &[set(&[0])],
            SourceSet::EMPTY,
        );
        useful_candidates(&f.ctx());
    }

    #[test]
    fn strategy1_prefers_more_new_sources_over_mi() {
        // r1 carries both undecoded sources with enough MI for the pair; r2 is
        // the stronger link but only carries s1
        let f = Fixture::new(
            &[0.6, 0.6],
            &[0.6, 0.6, 2.0, 2.5],
            &[set(&[0, 1]), set(&[0])],
            set(&[0, 1]),
        );
        let ctx = f.ctx();
        assert_eq!(newly_decoded(&ctx, 2), 2);
        assert_eq!(newly_decoded(&ctx, 3), 1);
        assert_eq!(select_strategy1(&ctx), NodeId::Relay(0));
        assert_eq!(select_strategy2(&ctx), NodeId::Relay(1));
    }

    #[test]
    fn strategy1_breaks_equal_gain_by_mi() {
        // s2 and r1 both enable exactly one new source
        let f = Fixture::new(
            &[1.2, 0.7],
            &[1.2, 0.7, 2.0, 0.0],
            &[set(&[1]), SourceSet::EMPTY],
            set(&[1]),
        );
        let ctx = f.ctx();
        assert_eq!(newly_decoded(&ctx, 1), 1);
        assert_eq!(newly_decoded(&ctx, 2), 1);
        assert_eq!(newly_decoded(&ctx, 3), 0);
        assert_eq!(select_strategy1(&ctx), NodeId::Relay(0));

        let f = Fixture::new(
            &[1.2, 0.5],
            &[1.2, 2.0, 2.0, 0.0],
            &[set(&[1]), SourceSet::EMPTY],
            set(&[1]),
        );
        // equal MI as well: the earlier node (the source) wins
        assert_eq!(select_strategy1(&f.ctx()), NodeId::Source(1));
    }

    #[test]
    fn strategy1_without_gain_stays_useful() {
        let f = Fixture::new(
            &[1.2, 0.0],
            &[1.2, 0.3, 1.1, 9.0],
            &[set(&[1]), set(&[0])],
            set(&[1]),
        );
        let ctx = f.ctx();
        assert!((0..4).all(|i| newly_decoded(&ctx, i) == 0));
        assert_eq!(select_strategy1(&ctx), NodeId::Relay(0));
    }

    #[test]
    fn strategy2_is_a_filtered_argmax() {
        let f = Fixture::new(
            &[1.2, 0.0],
            &[1.2, 0.7, 1.3, 1.1, 50.0],
            &[set(&[1]), set(&[0, 1]), set(&[0])],
            set(&[1]),
        );
        assert_eq!(select_strategy2(&f.ctx()), NodeId::Relay(0));
    }

    #[test]
    fn strategy3_weighs_by_decoding_set_size() {
        let f = Fixture::new(
            &[0.1, 0.1, 0.1],
            &[0.1, 0.1, 0.1, 1.0, 1.4],
            &[set(&[0, 1, 2]), set(&[0, 1])],
            set(&[0, 1, 2]),
        );
        let ctx = f.ctx();
        assert_eq!(select_strategy3(&ctx), NodeId::Relay(0));
        assert_eq!(select_strategy2(&ctx), NodeId::Relay(1));
    }

    #[test]
    fn reference1_takes_a_resolving_node_first() {
        // r2 has the stronger link but cannot finish both sources; r1 can
        let f = Fixture::new(
            &[0.6, 0.6],
            &[0.6, 0.6, 2.0, 2.5],
            &[set(&[0, 1]), set(&[0])],
            set(&[0, 1]),
        );
        let ctx = f.ctx();
        assert!(resolves_common_outage(&ctx, 2));
        assert!(!resolves_common_outage(&ctx, 3));
        assert_eq!(select_reference1(&ctx), NodeId::Relay(0));
    }

    #[test]
    fn reference1_closes_the_widest_gap_when_nothing_resolves() {
        // s2 is far from its rate; only transmissions carrying s2 improve the
        // worst inequality, and r1 carries both sources
        let f = Fixture::new(
            &[0.9, 0.0],
            &[0.9, 0.0, 0.6, 1.8],
            &[set(&[0, 1]), set(&[0])],
            set(&[0, 1]),
        );
        let ctx = f.ctx();
        assert!((0..4).all(|i| !resolves_common_outage(&ctx, i)));
        assert_eq!(select_reference1(&ctx), NodeId::Relay(0));
        assert_eq!(select_strategy2(&ctx), NodeId::Relay(1));
    }

    #[test]
    fn margin_matches_hand_evaluation() {
        let f = Fixture::new(
            &[0.9, 0.0],
            &[0.9, 0.0, 0.6, 1.8],
            &[set(&[0, 1]), set(&[0])],
            set(&[0, 1]),
        );
        let ctx = f.ctx();
        // r1: {s1} 0.9+0.3-1, {s2} 0.3-1, {s1,s2} 1.2-2 -> min -0.8
        assert!((common_outage_margin(&ctx, 2) + 0.8).abs() < 1e-12);
        // r2: {s2} untouched at -1
        assert!((common_outage_margin(&ctx, 3) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_direct_mi_keeps_mi_based_choices() {
        let f = Fixture::new(
            &[0.1, 0.1, 0.1],
            &[0.1, 0.3, 0.2, 1.0, 1.4],
            &[set(&[0, 1, 2]), set(&[0, 1])],
            set(&[0, 1, 2]),
        );
        let mut g = Fixture::new(
            &[0.1, 0.1, 0.1],
            &[0.1, 0.3, 0.2, 1.0, 1.4],
            &[set(&[0, 1, 2]), set(&[0, 1])],
            set(&[0, 1, 2]),
        );
        g.direct_mi.iter_mut().for_each(|v| *v *= 3.7);
        assert_eq!(select_strategy2(&f.ctx()), select_strategy2(&g.ctx()));
        assert_eq!(select_strategy3(&f.ctx()), select_strategy3(&g.ctx()));
    }
}
