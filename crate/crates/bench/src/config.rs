//! What to run: the benchmark scenario, the matcher, and the repetition protocol.

use std::fmt;
use std::time::Duration;

use joinmatch::engine::{MatcherFactory, MatcherKind};
use joinmatch::parallel::ParallelConfig;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Workload {
    Clean,
    /// Extra messages whose tag fits no slot.
    NoiseTag,
    /// Extra messages with the right tags and guard-violating payloads.
    NoisePayload,
}

impl Workload {
    pub fn id(self) -> &'static str {
        match self {
            Workload::Clean => "clean",
            Workload::NoiseTag => "noise-tag",
            Workload::NoisePayload => "noise-payload",
        }
    }

    /// Noise messages per matchable group when none is given.
    pub fn default_noise(self) -> usize {
        match self {
            Workload::Clean => 0,
            Workload::NoiseTag => 500,
            Workload::NoisePayload => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum MicroBench {
    PingPong,
    Chameneos,
}

impl MicroBench {
    pub fn id(self) -> &'static str {
        match self {
            MicroBench::PingPong => "ping-pong",
            MicroBench::Chameneos => "chameneos",
        }
    }
}

/// Which actor implementation runs a micro-benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActorMode {
    /// One message at a time, no join matching.
    Simple,
    Join(MatcherKind),
}

impl ActorMode {
    pub fn id(self) -> &'static str {
        match self {
            ActorMode::Simple => "simple-actor",
            ActorMode::Join(kind) => kind.id(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    Synthetic {
        size: usize,
        workload: Workload,
        guarded: bool,
        /// Noise messages per group of `size` matchable ones.
        noise: usize,
    },
    SmartHouse {
        /// Noise messages per matchable triple.
        noise: usize,
    },
    BoundedBuffer {
        buffer_size: usize,
        producers: usize,
        consumers: usize,
        /// Items sent by each producer.
        items: usize,
    },
    Micro {
        bench: MicroBench,
        mode: ActorMode,
    },
}

impl Scenario {
    /// Row label; one chart per distinct name.
    pub fn benchmark_name(&self) -> String {
        match self {
            Scenario::Synthetic {
                workload, guarded, ..
            } => {
                let g = if *guarded { "guarded" } else { "unguarded" };
                format!("synthetic-{g}-{}", workload.id())
            }
            Scenario::SmartHouse { .. } => "smart-house".into(),
            Scenario::BoundedBuffer { .. } => "bounded-buffer".into(),
            Scenario::Micro { bench, .. } => bench.id().into(),
        }
    }

    /// The x-axis value of the row: pattern size, noise count, or producer count.
    pub fn parameter(&self, matches: usize) -> u64 {
        match *self {
            Scenario::Synthetic { size, .. } => size as u64,
            Scenario::SmartHouse { noise } => noise as u64,
            Scenario::BoundedBuffer { producers, .. } => producers as u64,
            Scenario::Micro { .. } => matches as u64,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("pattern size must be within 1..=5, got {0}")]
    BadSize(usize),
    #[error("noise-payload traffic needs a guard to be unmatchable")]
    UnguardedPayloadNoise,
    #[error("{0} must be positive")]
    Zero(&'static str),
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub scenario: Scenario,
    /// Ignored by simple-actor micro runs.
    pub matcher: MatcherKind,
    /// Fires per synthetic or smart-house run; exchanges or meetings for micro runs.
    pub matches: usize,
    pub reps: usize,
    pub warmup: usize,
    pub seed: u64,
    pub workers: usize,
    pub timeout: Duration,
}

impl BenchConfig {
    pub fn new(scenario: Scenario, matcher: MatcherKind) -> Self {
        Self {
            scenario,
            matcher,
            matches: 10,
            reps: 5,
            warmup: 5,
            seed: 0,
            workers: joinmatch::parallel::default_workers(),
            timeout: Duration::from_secs(300),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.reps == 0 {
            return Err(ConfigError::NoRepetitions);
        }
        if self.matches == 0 {
            return Err(ConfigError::Zero("matches"));
        }
        match self.scenario {
            Scenario::Synthetic { size, .. } if !(1..=5).contains(&size) => {
                Err(ConfigError::BadSize(size))
            }
            Scenario::Synthetic {
                workload: Workload::NoisePayload,
                guarded: false,
                ..
            } => Err(ConfigError::UnguardedPayloadNoise),
            Scenario::BoundedBuffer {
                buffer_size,
                producers,
                consumers,
                items,
            } => {
                for (v, name) in [
                    (buffer_size, "buffer size"),
                    (producers, "producer count"),
                    (consumers, "consumer count"),
                    (items, "items per producer"),
                ] {
                    if v == 0 {
                        return Err(ConfigError::Zero(name));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn factory(&self) -> MatcherFactory {
        MatcherFactory::new(self.matcher).with_parallel(ParallelConfig::with_workers(self.workers))
    }

    /// Matcher column of the report.
    pub fn matcher_label(&self) -> &'static str {
        match self.scenario {
            Scenario::Micro { mode, .. } => mode.id(),
            _ => self.matcher.id(),
        }
    }
}

impl fmt::Display for BenchConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] parameter={}",
            self.scenario.benchmark_name(),
            self.matcher_label(),
            self.scenario.parameter(self.matches)
        )
    }
}
