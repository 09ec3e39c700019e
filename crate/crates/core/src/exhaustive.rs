//! Full-CSI search over every fixed activation sequence of a frame.
//!
//! With `N = M + L` candidates and `T_max` rounds there are `N^T_max`
//! sequences. They are ranked by the round at which the destination holds
//! every source (earlier is better); sequences that never get there are
//! ranked by the final size of the destination's decoding set. Ties are
//! broken uniformly at random.
//!
//! The search walks the sequence tree depth first and shares prefixes. Once a
//! prefix decodes everything, all of its extensions have the same outcome
//! and are accounted for in one step, in enumeration order.

use std::cmp::Ordering;

use rand::Rng;

use crate::network::{ChannelRealization, NetworkConfig, NodeId};
use crate::sim::FrameState;

/// Ranking of a sequence; greater is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceScore {
    /// Everything decoded after this many second-phase rounds.
    Complete(usize),
    /// Frame exhausted with this many sources decoded.
    Partial(usize),
}

impl Ord for SequenceScore {
    fn cmp(&self, other: &Self) -> Ordering {
        use SequenceScore::*;
        match (self, other) {
            (Complete(a), Complete(b)) => b.cmp(a),
            (Complete(_), Partial(_)) => Ordering::Greater,
            (Partial(_), Complete(_)) => Ordering::Less,
            (Partial(a), Partial(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for SequenceScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl SequenceScore {
    /// Score of a finished frame, given the rounds it used and what the
    /// destination decoded.
    pub fn of(rounds_used: usize, decoded: usize, sources: usize) -> Self {
        if decoded == sources {
            SequenceScore::Complete(rounds_used)
        } else {
            SequenceScore::Partial(decoded)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencePlan {
    /// The chosen sequence, cut at the round where everything is decoded.
    pub sequence: Vec<NodeId>,
    pub score: SequenceScore,
    /// Number of full-length sequences covered by the search.
    pub sequences_evaluated: u64,
    /// How many of them share the best score.
    pub ties: u64,
}

struct Search {
    best: Option<SequenceScore>,
    // (first leaf index, leaf count) of every tied block, in order
    tied: Vec<(u64, u64)>,
    evaluated: u64,
}

impl Search {
    fn offer(&mut self, score: SequenceScore, first_leaf: u64, count: u64) {
        self.evaluated += count;
        match self.best.map(|b| score.cmp(&b)) {
            None | Some(Ordering::Greater) => {
                self.best = Some(score);
                self.tied.clear();
                self.tied.push((first_leaf, count));
            }
            Some(Ordering::Equal) => self.tied.push((first_leaf, count)),
            Some(Ordering::Less) => {}
        }
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> (u64, u64) {
        let total: u64 = self.tied.iter().map(|&(_, c)| c).sum();
        let mut k = rng.random_range(0..total);
        for &(first, count) in &self.tied {
            if k < count {
                return (first + k, total);
            }
            k -= count;
        }
        unreachable!("pick index lies inside the tied blocks")
    }
}

fn explore(
    state: &FrameState<'_>,
    cfg: &NetworkConfig,
    depth: usize,
    prefix_leaf: u64,
    search: &mut Search,
) {
    let n = cfg.transmitters() as u64;
    let remaining = (cfg.max_rounds() - depth) as u32;
    if state.all_decoded() || remaining == 0 {
        let score = SequenceScore::of(depth, state.destination_set().len(), cfg.sources());
        search.offer(score, prefix_leaf * n.pow(remaining), n.pow(remaining));
        return;
    }
    if remaining == 1 {
        // only the destination matters for the last round
        for (i, node) in cfg.candidates().enumerate() {
            let decoded = state.destination_set_after(node).len();
            let score = SequenceScore::of(depth + 1, decoded, cfg.sources());
            search.offer(score, prefix_leaf * n + i as u64, 1);
        }
        return;
    }
    for (i, node) in cfg.candidates().enumerate() {
        let mut next = state.clone();
        next.transmit(node).expect("depth stays below T_max");
        explore(&next, cfg, depth + 1, prefix_leaf * n + i as u64, search);
    }
}

/// Best activation sequence for this realization under full CSI.
///
/// Returns an empty sequence, without touching `rng`, when the first phase
/// already decodes every source.
pub fn optimal_sequence<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    realization: &ChannelRealization,
    rng: &mut R,
) -> SequencePlan {
    let root = FrameState::run_phase1(cfg, realization);
    let total = (cfg.transmitters() as u64).pow(cfg.max_rounds() as u32);
    if root.all_decoded() {
        return SequencePlan {
            sequence: Vec::new(),
            score: SequenceScore::Complete(0),
            sequences_evaluated: total,
            ties: total,
        };
    }
    let mut search = Search {
        best: None,
        tied: Vec::new(),
        evaluated: 0,
    };
    explore(&root, cfg, 0, 0, &mut search);
    debug_assert_eq!(search.evaluated, total);

    let (leaf, ties) = search.pick(rng);
    let score = search.best.expect("at least one sequence");
    let mut sequence = decode_leaf(cfg, leaf);
    if let SequenceScore::Complete(rounds) = score {
        sequence.truncate(rounds);
    }
    SequencePlan {
        sequence,
        score,
        sequences_evaluated: search.evaluated,
        ties,
    }
}

/// The full-length sequence with the given index in enumeration order.
fn decode_leaf(cfg: &NetworkConfig, mut leaf: u64) -> Vec<NodeId> {
    let n = cfg.transmitters() as u64;
    let mut seq = vec![NodeId::Destination; cfg.max_rounds()];
    for slot in seq.iter_mut().rev() {
        *slot = cfg.node_at((leaf % n) as usize);
        leaf /= n;
    }
    seq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkSpec;
    use crate::sim::replay;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn score_order() {
        use SequenceScore::*;
        assert!(Complete(1) > Complete(2));
        assert!(Complete(3) > Partial(2));
        assert!(Partial(2) > Partial(1));
        assert_eq!(SequenceScore::of(2, 3, 3), Complete(2));
        assert_eq!(SequenceScore::of(3, 1, 3), Partial(1));
    }

    #[test]
    fn covers_every_sequence() {
        let cfg = NetworkSpec::symmetric(3, 3, 3, 0.5, vec![1.0; 3], 2.0)
            .validate()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut searched = 0;
        for _ in 0..50 {
            let real = cfg.draw_realization(&mut rng);
            let plan = optimal_sequence(&cfg, &real, &mut rng);
            assert_eq!(plan.sequences_evaluated, 216);
            assert!(plan.ties >= 1 && plan.ties <= 216);
            if !plan.sequence.is_empty() {
                searched += 1;
            }
        }
        assert!(searched > 0);
    }

    #[test]
    fn empty_plan_when_phase1_suffices() {
        let cfg = NetworkSpec::symmetric(3, 3, 3, 0.5, vec![1.0; 3], 40.0)
            .validate()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let real = cfg.draw_realization(&mut rng);
        let plan = optimal_sequence(&cfg, &real, &mut rng);
        assert!(plan.sequence.is_empty());
        assert_eq!(plan.score, SequenceScore::Complete(0));
    }

    #[test]
    fn leaf_decoding_is_base_n() {
        let cfg = NetworkSpec::symmetric(2, 1, 3, 0.5, vec![1.0; 2], 0.0)
            .validate()
            .unwrap();
        // 3 candidates: s1, s2, r1; leaf 5 = (0, 1, 2)
        assert_eq!(
            decode_leaf(&cfg, 5),
            vec![NodeId::Source(0), NodeId::Source(1), NodeId::Relay(0)]
        );
        assert_eq!(decode_leaf(&cfg, 26), vec![NodeId::Relay(0); 3]);
    }

    #[test]
    fn plan_score_matches_its_replay() {
        let cfg = NetworkSpec::symmetric(3, 2, 3, 0.5, vec![1.0; 3], 0.0)
            .validate()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let real = cfg.draw_realization(&mut rng);
            let plan = optimal_sequence(&cfg, &real, &mut rng);
            let out = replay(&cfg, &real, &plan.sequence).unwrap();
            assert_eq!(
                SequenceScore::of(out.rounds_used, out.final_destination_set.len(), 3),
                plan.score
            );
        }
    }

    #[test]
    fn tie_break_depends_only_on_the_stream() {
        let cfg = NetworkSpec::symmetric(3, 3, 3, 0.5, vec![1.0; 3], -5.0)
            .validate()
            .unwrap();
        let real = cfg.draw_realization(&mut ChaCha8Rng::seed_from_u64(4));
        let a = optimal_sequence(&cfg, &real, &mut ChaCha8Rng::seed_from_u64(9));
        let b = optimal_sequence(&cfg, &real, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
