//! Warmup plus timed repetitions of one configuration.

use joinmatch::engine::MatcherFactory;
use joinmatch::parallel::ParallelConfig;

use crate::config::{ActorMode, BenchConfig, ConfigError, Scenario};
use crate::report::{throughput, BenchReport, Row};
use crate::workload::bounded_buffer::run_bounded_buffer;
use crate::workload::micro::run_micro;
use crate::workload::smart_house::run_smart_house;
use crate::workload::synthetic::run_synthetic;
use crate::workload::{Trial, TrialError};

/// Runs one fresh actor for `config`. Every repetition uses the same seed.
pub fn run_trial(config: &BenchConfig) -> Result<Trial, TrialError> {
    let factory = match config.scenario {
        Scenario::Micro {
            mode: ActorMode::Join(kind),
            ..
        } => MatcherFactory::new(kind).with_parallel(ParallelConfig::with_workers(config.workers)),
        _ => config.factory(),
    };
    let (seed, timeout) = (config.seed, config.timeout);
    match config.scenario {
        Scenario::Synthetic {
            size,
            workload,
            guarded,
            noise,
        } => run_synthetic(size, workload, guarded, noise, config.matches, seed, &factory, timeout),
        Scenario::SmartHouse { noise } => run_smart_house(noise, config.matches, seed, &factory, timeout),
        Scenario::BoundedBuffer {
            buffer_size,
            producers,
            consumers,
            items,
        } => run_bounded_buffer(buffer_size, producers, consumers, items, &factory, timeout),
        Scenario::Micro { bench, mode } => run_micro(bench, mode, config.matches as u64, &factory, timeout),
    }
}

/// Outcome of [`run_benchmark`]: the rows plus any failed checks.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub report: BenchReport,
    pub failures: Vec<String>,
}

impl RunOutcome {
    pub fn extend(&mut self, other: RunOutcome) {
        self.report.extend(other.report);
        self.failures.extend(other.failures);
    }
}

/// Untimed warmups, then `reps` timed repetitions. A timeout ends the
/// configuration with one timed-out row; a failed check ends it with none.
pub fn run_benchmark(config: &BenchConfig) -> Result<RunOutcome, ConfigError> {
    run_interleaved(std::slice::from_ref(config))
}

/// Like [`run_benchmark`] for several configurations, taking their repetitions in
/// turn so that slow drift in machine speed affects all of them alike.
pub fn run_interleaved(configs: &[BenchConfig]) -> Result<RunOutcome, ConfigError> {
    for c in configs {
        c.validate()?;
    }
    let mut out = RunOutcome::default();
    let mut stopped = vec![false; configs.len()];
    let rounds = configs.iter().map(|c| c.warmup + c.reps).max().unwrap_or(0);
    for i in 0..rounds {
        for (config, stopped) in configs.iter().zip(stopped.iter_mut()) {
            if *stopped || i >= config.warmup + config.reps {
                continue;
            }
            let timed = i >= config.warmup;
            let repetition = i.saturating_sub(config.warmup);
            let row = |elapsed_ms: f64, matches: u64| Row {
                benchmark: config.scenario.benchmark_name(),
                matcher: config.matcher_label().to_owned(),
                parameter: config.scenario.parameter(config.matches),
                repetition,
                elapsed_ms,
                matches,
                throughput_mps: throughput(matches, elapsed_ms),
            };
            match run_trial(config) {
                Ok(trial) if timed => {
                    let ms = trial.elapsed.as_secs_f64() * 1000.0;
                    out.report.rows.push(row(ms, trial.matches));
                }
                Ok(_) => {}
                Err(TrialError::Timeout) => {
                    let mut r = row(config.timeout.as_secs_f64() * 1000.0, 0);
                    r.throughput_mps = f64::NAN;
                    out.report.rows.push(r);
                    *stopped = true;
                }
                Err(e) => {
                    out.failures.push(format!("{config}: {e}"));
                    *stopped = true;
                }
            }
        }
    }
    Ok(out)
}
