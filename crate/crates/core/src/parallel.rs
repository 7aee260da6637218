//! Fairness-ordered partitioning, cooperative cancellation and filtering clauses.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::engine::MessageStore;
use crate::model::{ArrivalIndex, BuildError, Message, MessageInstance, Pattern, Tag};
use crate::tree::{MatchingTree, RoundLog};

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "JOINMATCH_WORKERS";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParallelConfig {
    pub workers: usize,
    /// Rounds with fewer candidate parents run on the calling thread.
    pub sequential_below: usize,
}

impl ParallelConfig {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
            ..Self::default()
        }
    }

    /// Always splits, however small the round. Used to exercise the parallel path.
    pub fn eager(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
            sequential_below: 0,
        }
    }
}

impl Default for ParallelConfig {
    fn default() -> Self {
        Self {
            workers: default_workers(),
            sequential_below: 64,
        }
    }
}

/// `JOINMATCH_WORKERS` if set to a positive integer, else the hardware thread count.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// A contiguous run of parents. Lower ranks hold lexicographically smaller keys.
#[derive(Debug, Clone, Copy)]
pub struct Partition<'a, T> {
    pub rank: usize,
    pub parents: &'a [T],
}

/// Splits `parents` into at most `n` near-equal contiguous slices, order preserved.
pub fn partition_nodes<T>(parents: &[T], n: usize) -> Vec<Partition<'_, T>> {
    assert!(n >= 1, "need at least one worker");
    let parts = n.min(parents.len()).max(1);
    let base = parents.len() / parts;
    let extra = parents.len() % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for rank in 0..parts {
        let len = base + usize::from(rank < extra);
        out.push(Partition {
            rank,
            parents: &parents[start..start + len],
        });
        start += len;
    }
    out
}

/// Lowest rank that reported a match so far; workers above it stop.
#[derive(Debug)]
pub struct CancellationToken {
    best: AtomicUsize,
}

impl Default for CancellationToken {
    fn default() -> Self {
        Self {
            best: AtomicUsize::new(usize::MAX),
        }
    }
}

impl CancellationToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel_above(&self, rank: usize) {
        self.best.fetch_min(rank, Ordering::AcqRel);
    }

    pub fn is_cancelled(&self, rank: usize) -> bool {
        rank > self.best.load(Ordering::Acquire)
    }

    pub fn winner(&self) -> Option<usize> {
        match self.best.load(Ordering::Acquire) {
            usize::MAX => None,
            r => Some(r),
        }
    }
}

/// What one worker did during a parallel round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerReport {
    pub rank: usize,
    pub assigned: usize,
    pub visited: usize,
    pub guard_evals: u64,
    pub found: bool,
    pub interrupted: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ParallelRound {
    pub guard_evals: u64,
    pub workers: Vec<WorkerReport>,
}

fn pool(workers: usize) -> Arc<ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    pools
        .entry(workers)
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("joinmatch-worker-{i}"))
                    .build()
                    .expect("failed to build worker pool"),
            )
        })
        .clone()
}

/// Lazily ramifies `tree` with one arrival across `config.workers` partitions and
/// merges every worker's mutations. The fairest passing completion is left in the
/// tree for [`MatchingTree::traverse_fairest`].
pub fn parallel_lazy_match<M: Message>(
    tree: &mut MatchingTree,
    index: ArrivalIndex,
    tag: Tag,
    pattern: &Pattern<M>,
    store: &MessageStore<M>,
    config: &ParallelConfig,
) -> ParallelRound {
    let Some(class) = tree.class_of(tag) else {
        return ParallelRound::default();
    };
    if config.workers <= 1 || tree.parent_count(class) < config.sequential_below.max(2) {
        let guard_evals = tree.lazy_ramify(index, tag, pattern, store);
        return ParallelRound {
            guard_evals,
            workers: Vec::new(),
        };
    }
    let parents = tree.parents(class);
    let token = CancellationToken::new();
    let parts = partition_nodes(&parents, config.workers);
    let shared: &MatchingTree = tree;
    let logs: Vec<(RoundLog, usize)> = pool(config.workers).install(|| {
        parts
            .par_iter()
            .map(|part| {
                let iter = part.parents.iter().copied();
                let log = shared.lazy_pass(iter, index, class, pattern, store, Some((&token, part.rank)));
                (log, part.parents.len())
            })
            .collect()
    });
    drop(parents);
    let mut round = ParallelRound::default();
    let mut merged = RoundLog::default();
    for (rank, (log, assigned)) in logs.into_iter().enumerate() {
        round.guard_evals += log.guard_evals;
        round.workers.push(WorkerReport {
            rank,
            assigned,
            visited: log.visited,
            guard_evals: log.guard_evals,
            found: log.found,
            interrupted: log.interrupted,
        });
        merged.absorb(log);
    }
    tree.commit(merged, index, class);
    round
}

/// Accepts filters only on slots whose tag occurs once in the pattern.
pub fn validate_filter<M>(pattern: &Pattern<M>) -> Result<(), BuildError> {
    pattern.validate_filters()
}

/// Per-pattern decision for one arrival.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Admission {
    /// The tag fits no slot of the pattern.
    NoFit,
    Admit,
    /// Every slot the message could fill has a filter rejecting it.
    Discard,
}

pub fn admit_message<M: Message>(msg: &MessageInstance<M>, patterns: &[Arc<Pattern<M>>]) -> Vec<Admission> {
    patterns.iter().map(|p| admit_one(&msg.payload, p)).collect()
}

pub(crate) fn admit_one<M: Message>(payload: &M, pattern: &Pattern<M>) -> Admission {
    let Some(positions) = pattern.positions_for(payload.tag()) else {
        return Admission::NoFit;
    };
    let slots = pattern.slots();
    let rejected = positions
        .iter()
        .all(|&p| slots[p].has_filter() && !slots[p].admits(payload));
    if rejected {
        Admission::Discard
    } else {
        Admission::Admit
    }
}
