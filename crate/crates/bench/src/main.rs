use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use joinmatch::engine::MatcherKind;
use joinmatch::parallel::default_workers;
use joinmatch_bench::differential::{random_replays, smart_house_replays, synthetic_replays, DiffResult};
use joinmatch_bench::workload::smart_house::NOISE_LEVELS;
use joinmatch_bench::{run_benchmark, ActorMode, BenchConfig, Format, MicroBench, RunOutcome, Scenario, Workload};

const EXIT_ASSERTION: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "joinmatch-bench", version, about = "Throughput benchmarks for the joinmatch engines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One pattern of size 1..5 over clean or noisy traffic.
    Synthetic(SyntheticArgs),
    /// Overlapping sensor patterns with random noise readings.
    SmartHouse(Common),
    /// Producers and consumers around a join-pattern buffer.
    BoundedBuffer(BufferArgs),
    /// Ping-pong and chameneos on simple and join actors.
    Micro(MicroArgs),
    /// Replays generated traces through every engine and the oracle.
    Differential(DiffArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Matcher ids; repeat or separate with commas. Defaults to all five.
    #[arg(long, value_delimiter = ',', value_parser = parse_matcher)]
    matcher: Vec<MatcherKind>,
    /// Noise messages per matchable group.
    #[arg(long, value_delimiter = ',')]
    noise: Vec<usize>,
    /// Fires per run (exchanges or meetings for micro).
    #[arg(long)]
    matches: Option<usize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 5)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parallel engine workers; defaults to JOINMATCH_WORKERS or the core count.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Report path; a `<stem>.summary.csv` is written next to it. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-repetition timeout in seconds.
    #[arg(long = "timeout-s", default_value_t = 300)]
    timeout_s: u64,
}

#[derive(Args)]
struct SyntheticArgs {
    #[command(flatten)]
    common: Common,
    /// Pattern sizes; defaults to 1..5.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..=5))]
    size: Vec<u64>,
    /// Defaults to all three.
    #[arg(long, value_enum, value_delimiter = ',')]
    workload: Vec<Workload>,
    /// Drops the equality guard (noise-payload runs are skipped).
    #[arg(long)]
    unguarded: bool,
}

#[derive(Args)]
struct BufferArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000)]
    buffer_size: usize,
    /// Producer counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    producers: Vec<usize>,
    /// Defaults to the producer count.
    #[arg(long)]
    consumers: Option<usize>,
    /// Items sent by each producer.
    #[arg(long, default_value_t = 100)]
    items: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    SimpleActor,
    JoinActor,
}

#[derive(Args)]
struct MicroArgs {
    #[command(flatten)]
    common: Common,
    /// Defaults to both.
    #[arg(long, value_enum, value_delimiter = ',')]
    bench: Vec<MicroBench>,
    /// Defaults to both.
    #[arg(long, value_enum, value_delimiter = ',')]
    mode: Vec<ModeArg>,
}

#[derive(Args)]
struct DiffArgs {
    #[command(flatten)]
    common: Common,
    /// Random traces replayed after the benchmark traces.
    #[arg(long, default_value_t = 1000)]
    random: u64,
}

fn parse_matcher(s: &str) -> Result<MatcherKind, String> {
    s.parse().map_err(|e: joinmatch::engine::MatcherError| e.to_string())
}

impl Common {
    fn matchers(&self) -> Vec<MatcherKind> {
        if self.matcher.is_empty() {
            MatcherKind::ALL.to_vec()
        } else {
            self.matcher.clone()
        }
    }

    fn config(&self, scenario: Scenario, matcher: MatcherKind, default_matches: usize) -> BenchConfig {
        let mut c = BenchConfig::new(scenario, matcher);
        c.matches = self.matches.unwrap_or(default_matches);
        c.reps = self.reps;
        c.warmup = self.warmup;
        c.seed = self.seed;
        c.workers = self.workers.unwrap_or_else(default_workers).max(1);
        c.timeout = Duration::from_secs(self.timeout_s);
        c
    }
}

fn run_all(configs: Vec<BenchConfig>) -> Result<RunOutcome, String> {
    let mut all = RunOutcome::default();
    for c in configs {
        eprintln!("running {c}");
        let out = run_benchmark(&c).map_err(|e| format!("{c}: {e}"))?;
        all.extend(out);
    }
    Ok(all)
}

fn synthetic(args: SyntheticArgs) -> Result<RunOutcome, String> {
    let sizes: Vec<usize> = if args.size.is_empty() {
        (1..=5).collect()
    } else {
        args.size.iter().map(|&s| s as usize).collect()
    };
    let workloads = if args.workload.is_empty() {
        vec![Workload::Clean, Workload::NoiseTag, Workload::NoisePayload]
    } else {
        args.workload.clone()
    };
    let mut configs = Vec::new();
    for &workload in &workloads {
        if workload == Workload::NoisePayload && args.unguarded && args.workload.is_empty() {
            eprintln!("skipping noise-payload: it needs the guard");
            continue;
        }
        let noise = args.common.noise.first().copied().unwrap_or_else(|| workload.default_noise());
        for m in args.common.matchers() {
            for &size in &sizes {
                let scenario = Scenario::Synthetic {
                    size,
                    workload,
                    guarded: !args.unguarded,
                    noise,
                };
                configs.push(args.common.config(scenario, m, 10));
            }
        }
    }
    let mut out = run_all(configs)?;
    out.report.meta.insert(
        "noise_interleaving".into(),
        "noise shuffled uniformly with each matchable group under the run seed".into(),
    );
    out.report.meta.insert(
        "reference_speedup".into(),
        "while-lazy over brute-force on guardless noise-tag traffic: about 40x".into(),
    );
    Ok(out)
}

fn smart_house(args: Common) -> Result<RunOutcome, String> {
    let levels = if args.noise.is_empty() {
        NOISE_LEVELS.to_vec()
    } else {
        args.noise.clone()
    };
    let configs = args
        .matchers()
        .into_iter()
        .flat_map(|m| levels.iter().map(move |&noise| (m, noise)))
        .map(|(m, noise)| args.config(Scenario::SmartHouse { noise }, m, 10))
        .collect();
    let mut out = run_all(configs)?;
    out.report.meta.insert(
        "noise_interleaving".into(),
        "noise shuffled uniformly with each matchable triple under the run seed".into(),
    );
    out.report.meta.insert(
        "reference_speedup".into(),
        "filtering-parallel over while-lazy at noise 16: about 7x".into(),
    );
    Ok(out)
}

fn bounded_buffer(args: BufferArgs) -> Result<RunOutcome, String> {
    let mut configs = Vec::new();
    for m in args.common.matchers() {
        for &producers in &args.producers {
            let scenario = Scenario::BoundedBuffer {
                buffer_size: args.buffer_size,
                producers,
                consumers: args.consumers.unwrap_or(producers),
                items: args.items,
            };
            configs.push(args.common.config(scenario, m, 1));
        }
    }
    run_all(configs)
}

fn micro(args: MicroArgs) -> Result<RunOutcome, String> {
    let benches = if args.bench.is_empty() {
        vec![MicroBench::PingPong, MicroBench::Chameneos]
    } else {
        args.bench.clone()
    };
    let modes = if args.mode.is_empty() {
        vec![ModeArg::SimpleActor, ModeArg::JoinActor]
    } else {
        args.mode.clone()
    };
    let mut configs = Vec::new();
    for &bench in &benches {
        for &mode in &modes {
            let actor_modes: Vec<ActorMode> = match mode {
                ModeArg::SimpleActor => vec![ActorMode::Simple],
                ModeArg::JoinActor => args.common.matchers().into_iter().map(ActorMode::Join).collect(),
            };
            for am in actor_modes {
                let matcher = match am {
                    ActorMode::Join(k) => k,
                    ActorMode::Simple => MatcherKind::BruteForce,
                };
                configs.push(args.common.config(Scenario::Micro { bench, mode: am }, matcher, 10_000));
            }
        }
    }
    run_all(configs)
}

fn differential(args: DiffArgs) -> ExitCode {
    let c = &args.common;
    let workers = c.workers.unwrap_or(4).max(1);
    let matches = c.matches.unwrap_or(10);
    let mut results: Vec<DiffResult> = synthetic_replays(matches, c.noise.first().copied(), c.seed, workers);
    let levels = if c.noise.is_empty() {
        NOISE_LEVELS.to_vec()
    } else {
        c.noise.clone()
    };
    results.extend(smart_house_replays(matches, &levels, c.seed, workers));
    results.extend(random_replays(c.seed, args.random, workers));
    let mut failed = 0;
    for r in &results {
        if !r.agrees() {
            failed += 1;
            println!("DIVERGED {}: {}", r.trace, r.diverging.join(", "));
        }
    }
    let fires: usize = results.iter().map(|r| r.fires).sum();
    println!("{} traces, {fires} oracle fires, {failed} diverging", results.len());
    if failed > 0 {
        ExitCode::from(EXIT_ASSERTION)
    } else {
        ExitCode::SUCCESS
    }
}

fn emit(outcome: &RunOutcome, common: &Common) -> io::Result<()> {
    let report = &outcome.report;
    match &common.out {
        Some(path) => {
            let summary = report.emit(common.format, path)?;
            eprintln!("wrote {} and {}", path.display(), summary.display());
        }
        None => {
            let stdout = io::stdout().lock();
            match common.format {
                Format::Csv => report.write_csv(stdout).map_err(io::Error::other)?,
                Format::Json => {
                    let mut stdout = stdout;
                    serde_json::to_writer_pretty(&mut stdout, &report.to_json())?;
                    writeln!(stdout)?;
                }
            }
        }
    }
    for s in report.summary() {
        eprintln!(
            "{:<32} {:<20} {:>6} {:>14.1} ± {:.1} matches/s",
            s.benchmark, s.matcher, s.parameter, s.mean_throughput_mps, s.stddev_throughput_mps
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (outcome, common) = match cli.command {
        Command::Synthetic(a) => {
            let common = a.common.clone();
            (synthetic(a), common)
        }
        Command::SmartHouse(a) => (smart_house(a.clone()), a),
        Command::BoundedBuffer(a) => {
            let common = a.common.clone();
            (bounded_buffer(a), common)
        }
        Command::Micro(a) => {
            let common = a.common.clone();
            (micro(a), common)
        }
        Command::Differential(a) => return differential(a),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = emit(&outcome, &common) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    if !outcome.failures.is_empty() {
        for f in &outcome.failures {
            eprintln!("FAILED {f}");
        }
        return ExitCode::from(EXIT_ASSERTION);
    }
    if outcome.report.any_timed_out() {
        eprintln!("some repetitions timed out");
        return ExitCode::from(EXIT_TIMEOUT);
    }
    ExitCode::SUCCESS
}
