//! Replays generated benchmark traces through every engine and the oracle.

use joinmatch::engine::{MatcherFactory, MatcherKind};
use joinmatch::oracle::differential_replay;
use joinmatch::parallel::ParallelConfig;
use joinmatch::testkit::{CaseShape, RandomCase};

use crate::config::Workload;
use crate::workload::smart_house::{gen_smart_house_traffic, smart_house_patterns};
use crate::workload::synthetic::{gen_synthetic_traffic, synthetic_patterns};

#[derive(Clone, Debug)]
pub struct DiffResult {
    pub trace: String,
    pub messages: usize,
    pub fires: usize,
    /// Engines whose fires differ from the oracle's or were unfair at some point.
    pub diverging: Vec<String>,
}

impl DiffResult {
    pub fn agrees(&self) -> bool {
        self.diverging.is_empty()
    }
}

/// All five engines, the parallel ones with `workers` workers splitting every round.
pub fn factories(workers: usize) -> Vec<MatcherFactory> {
    MatcherKind::ALL
        .into_iter()
        .map(|k| MatcherFactory::new(k).with_parallel(ParallelConfig::eager(workers)))
        .collect()
}

fn compare<M, T, F>(trace: String, messages: &[M], patterns: F, factories: &[MatcherFactory]) -> DiffResult
where
    M: joinmatch::model::Message + Clone,
    F: Fn() -> Vec<joinmatch::model::JoinPattern<M, T>>,
{
    let replay = differential_replay(messages, patterns, factories).expect("patterns are non-empty");
    let diverging = replay
        .engines
        .iter()
        .filter(|e| e.fires != replay.oracle.fires || e.unfair_fires > 0)
        .map(|e| e.id.to_owned())
        .collect();
    DiffResult {
        trace,
        messages: messages.len(),
        fires: replay.oracle.fires.len(),
        diverging,
    }
}

/// Every size, guard setting and workload of the synthetic benchmark.
pub fn synthetic_replays(matches: usize, noise: Option<usize>, seed: u64, workers: usize) -> Vec<DiffResult> {
    let factories = factories(workers);
    let mut out = Vec::new();
    for size in 1..=5 {
        for guarded in [false, true] {
            for workload in [Workload::Clean, Workload::NoiseTag, Workload::NoisePayload] {
                if workload == Workload::NoisePayload && !guarded {
                    continue;
                }
                let n = noise.unwrap_or_else(|| workload.default_noise());
                let trace = gen_synthetic_traffic(size, workload, matches, n, seed);
                let name = format!("synthetic size={size} guarded={guarded} {} noise={n}", workload.id());
                out.push(compare(name, &trace, || synthetic_patterns(size, guarded, matches), &factories));
            }
        }
    }
    out
}

pub fn smart_house_replays(matches: usize, noise_levels: &[usize], seed: u64, workers: usize) -> Vec<DiffResult> {
    let factories = factories(workers);
    noise_levels
        .iter()
        .map(|&noise| {
            let trace = gen_smart_house_traffic(matches, noise, seed);
            compare(format!("smart-house noise={noise}"), &trace, smart_house_patterns, &factories)
        })
        .collect()
}

/// Seeded random traces over random guarded patterns.
pub fn random_replays(first_seed: u64, count: u64, workers: usize) -> Vec<DiffResult> {
    let factories = factories(workers);
    (first_seed..first_seed + count)
        .map(|seed| {
            let case = RandomCase::generate(seed, CaseShape::default());
            compare(format!("random seed={seed}"), &case.messages, || case.build(None), &factories)
        })
        .collect()
}
