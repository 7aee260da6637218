//! Benchmark workloads, repetition protocol and reports for the joinmatch engines.

pub mod config;
pub mod differential;
pub mod report;
pub mod runner;
pub mod workload;

pub use config::{ActorMode, BenchConfig, MicroBench, Scenario, Workload};
pub use report::{BenchReport, Format, Row, SummaryRow};
pub use runner::{run_benchmark, run_interleaved, run_trial, RunOutcome};
