//! Seeded Monte Carlo batches over independent frames.
//!
//! Frame `i` draws everything it needs from ChaCha stream `i` of the master
//! seed, so a batch gives identical counters whatever the number of workers
//! or the order frames are processed in. Counters are plain integers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::network::NetworkConfig;
use crate::sim::{run_frame, FrameOutcome, SimError};
use crate::strategy::Strategy;

/// Frames handed to a worker at a time.
const CHUNK: u64 = 512;

/// Random stream of frame `frame` under `master_seed`.
pub fn frame_stream(master_seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(frame);
    rng
}

/// How frames are spread over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// The global rayon pool.
    #[default]
    Parallel,
    /// A dedicated rayon pool with this many threads.
    ///
    /// Both parallel variants fall back to sequential without the
    /// `parallel` feature.
    Threads(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCounters {
    pub frames: u64,
    /// Sum of second-phase rounds used over all frames.
    pub rounds_sum: u64,
    /// Frames in which each source was decoded.
    pub decoded: Vec<u64>,
    /// Frames ending with at least one source undecoded.
    pub common_outage: u64,
}

impl RawCounters {
    pub fn new(sources: usize) -> Self {
        RawCounters {
            frames: 0,
            rounds_sum: 0,
            decoded: vec![0; sources],
            common_outage: 0,
        }
    }

    pub fn record(&mut self, outcome: &FrameOutcome) {
        self.frames += 1;
        self.rounds_sum += outcome.rounds_used as u64;
        for (count, &ok) in self.decoded.iter_mut().zip(&outcome.decoded_flags) {
            *count += ok as u64;
        }
        if !outcome.all_decoded() {
            self.common_outage += 1;
        }
    }

    pub fn merge(mut self, other: RawCounters) -> Self {
        self.frames += other.frames;
        self.rounds_sum += other.rounds_sum;
        for (a, b) in self.decoded.iter_mut().zip(other.decoded) {
            *a += b;
        }
        self.common_outage += other.common_outage;
        self
    }
}

/// Outcome of frame `frame` under `master_seed`.
pub fn simulate_frame(
    cfg: &NetworkConfig,
    strategy: Strategy,
    master_seed: u64,
    frame: u64,
) -> Result<FrameOutcome, SimError> {
    let mut rng = frame_stream(master_seed, frame);
    let realization = cfg.draw_realization(&mut rng);
    run_frame(cfg, &realization, strategy, &mut rng)
}

fn run_chunk(
    cfg: &NetworkConfig,
    strategy: Strategy,
    master_seed: u64,
    frames: std::ops::Range<u64>,
) -> Result<RawCounters, SimError> {
    let mut counters = RawCounters::new(cfg.sources());
    for frame in frames {
        counters.record(&simulate_frame(cfg, strategy, master_seed, frame)?);
    }
    Ok(counters)
}

fn chunks(frames: u64) -> impl Iterator<Item = std::ops::Range<u64>> + Clone {
    (0..frames.div_ceil(CHUNK)).map(move |c| c * CHUNK..((c + 1) * CHUNK).min(frames))
}

/// Runs `frames` independent frames and sums their counters.
pub fn run_monte_carlo(
    cfg: &NetworkConfig,
    strategy: Strategy,
    frames: u64,
    master_seed: u64,
    execution: Execution,
) -> Result<RawCounters, SimError> {
    assert!(frames >= 1, "at least one frame is required");
    let sequential = || {
        chunks(frames).try_fold(RawCounters::new(cfg.sources()), |acc, range| {
            Ok(acc.merge(run_chunk(cfg, strategy, master_seed, range)?))
        })
    };
    match execution {
        Execution::Sequential => sequential(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => run_parallel(cfg, strategy, frames, master_seed),
        #[cfg(feature = "parallel")]
        Execution::Threads(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool");
            pool.install(|| run_parallel(cfg, strategy, frames, master_seed))
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel | Execution::Threads(_) => sequential(),
    }
}

#[cfg(feature = "parallel")]
fn run_parallel(
    cfg: &NetworkConfig,
    strategy: Strategy,
    frames: u64,
    master_seed: u64,
) -> Result<RawCounters, SimError> {
    let ranges: Vec<_> = chunks(frames).collect();
    ranges
        .into_par_iter()
        .map(|range| run_chunk(cfg, strategy, master_seed, range))
        .try_reduce(|| RawCounters::new(cfg.sources()), |a, b| Ok(a.merge(b)))
}
