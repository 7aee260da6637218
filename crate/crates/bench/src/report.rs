//! Result rows, per-group aggregates, and CSV / JSON output.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// One timed repetition. A timed-out repetition has NaN throughput.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub benchmark: String,
    pub matcher: String,
    pub parameter: u64,
    pub repetition: usize,
    pub elapsed_ms: f64,
    pub matches: u64,
    pub throughput_mps: f64,
}

impl Row {
    pub fn timed_out(&self) -> bool {
        self.throughput_mps.is_nan()
    }
}

/// Matches per second; NaN when no time elapsed.
pub fn throughput(matches: u64, elapsed_ms: f64) -> f64 {
    if elapsed_ms > 0.0 {
        matches as f64 / (elapsed_ms / 1000.0)
    } else {
        f64::NAN
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub benchmark: String,
    pub matcher: String,
    pub parameter: u64,
    pub mean_throughput_mps: f64,
    pub stddev_throughput_mps: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<Row>,
    /// Free-form context: generator choices, reference factors.
    pub meta: BTreeMap<String, String>,
}

/// Arithmetic mean and sample standard deviation. The deviation of a single value is 0.
pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl BenchReport {
    pub fn extend(&mut self, other: BenchReport) {
        self.rows.extend(other.rows);
        self.meta.extend(other.meta);
    }

    pub fn any_timed_out(&self) -> bool {
        self.rows.iter().any(Row::timed_out)
    }

    /// One row per (benchmark, matcher, parameter), in first-appearance order.
    /// Timed-out repetitions are left out of the statistics.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut order: Vec<(&str, &str, u64)> = Vec::new();
        let mut groups: BTreeMap<(&str, &str, u64), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            let key = (r.benchmark.as_str(), r.matcher.as_str(), r.parameter);
            let entry = groups.entry(key).or_insert_with(|| {
                order.push(key);
                Vec::new()
            });
            if !r.timed_out() {
                entry.push(r.throughput_mps);
            }
        }
        order
            .into_iter()
            .map(|key| {
                let (mean, sd) = mean_stddev(&groups[&key]);
                SummaryRow {
                    benchmark: key.0.into(),
                    matcher: key.1.into(),
                    parameter: key.2,
                    mean_throughput_mps: mean,
                    stddev_throughput_mps: sd,
                }
            })
            .collect()
    }

    /// Mean throughput of one group, if it exists.
    pub fn mean(&self, benchmark: &str, matcher: &str, parameter: u64) -> Option<f64> {
        self.summary()
            .into_iter()
            .find(|s| s.benchmark == benchmark && s.matcher == matcher && s.parameter == parameter)
            .map(|s| s.mean_throughput_mps)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(ROW_COLUMNS)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in self.summary() {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R) -> csv::Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let rows = r.deserialize().collect::<Result<Vec<Row>, _>>()?;
        Ok(Self {
            rows,
            meta: BTreeMap::new(),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = JsonReport {
            rows: self.rows.iter().map(JsonRow::from).collect(),
            summary: self.summary().iter().map(JsonSummary::from).collect(),
            meta: self.meta.clone(),
        };
        serde_json::to_value(doc).expect("report is always serializable")
    }

    pub fn from_json(value: serde_json::Value) -> serde_json::Result<Self> {
        let doc: JsonReport = serde_json::from_value(value)?;
        Ok(Self {
            rows: doc.rows.into_iter().map(Row::from).collect(),
            meta: doc.meta,
        })
    }

    /// Writes the rows to `path` and the aggregates next to it as `<stem>.summary.csv`.
    pub fn emit(&self, format: Format, path: &Path) -> io::Result<PathBuf> {
        let file = BufWriter::new(File::create(path)?);
        match format {
            Format::Csv => self.write_csv(file).map_err(io::Error::other)?,
            Format::Json => serde_json::to_writer_pretty(file, &self.to_json())?,
        }
        let summary = summary_path(path);
        self.write_summary_csv(BufWriter::new(File::create(&summary)?))
            .map_err(io::Error::other)?;
        Ok(summary)
    }
}

pub const ROW_COLUMNS: [&str; 7] = [
    "benchmark",
    "matcher",
    "parameter",
    "repetition",
    "elapsed_ms",
    "matches",
    "throughput_mps",
];

/// `results.csv` → `results.summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    path.with_file_name(format!("{stem}.summary.csv"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

// JSON has no NaN, so undefined throughputs travel as null.

#[derive(Serialize, Deserialize)]
struct JsonReport {
    rows: Vec<JsonRow>,
    summary: Vec<JsonSummary>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    benchmark: String,
    matcher: String,
    parameter: u64,
    repetition: usize,
    elapsed_ms: f64,
    matches: u64,
    throughput_mps: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonSummary {
    benchmark: String,
    matcher: String,
    parameter: u64,
    mean_throughput_mps: Option<f64>,
    stddev_throughput_mps: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&Row> for JsonRow {
    fn from(r: &Row) -> Self {
        Self {
            benchmark: r.benchmark.clone(),
            matcher: r.matcher.clone(),
            parameter: r.parameter,
            repetition: r.repetition,
            elapsed_ms: r.elapsed_ms,
            matches: r.matches,
            throughput_mps: finite(r.throughput_mps),
        }
    }
}

impl From<JsonRow> for Row {
    fn from(r: JsonRow) -> Self {
        Self {
            benchmark: r.benchmark,
            matcher: r.matcher,
            parameter: r.parameter,
            repetition: r.repetition,
            elapsed_ms: r.elapsed_ms,
            matches: r.matches,
            throughput_mps: r.throughput_mps.unwrap_or(f64::NAN),
        }
    }
}

impl From<&SummaryRow> for JsonSummary {
    fn from(s: &SummaryRow) -> Self {
        Self {
            benchmark: s.benchmark.clone(),
            matcher: s.matcher.clone(),
            parameter: s.parameter,
            mean_throughput_mps: finite(s.mean_throughput_mps),
            stddev_throughput_mps: finite(s.stddev_throughput_mps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_has_zero_deviation() {
        assert_eq!(mean_stddev(&[4.0]), (4.0, 0.0));
        let (m, s) = mean_stddev(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.290_994_448_735_805_6).abs() < 1e-12);
    }

    #[test]
    fn summary_path_keeps_directory() {
        assert_eq!(
            summary_path(Path::new("/tmp/x/run.csv")),
            PathBuf::from("/tmp/x/run.summary.csv")
        );
        assert_eq!(summary_path(Path::new("out")), PathBuf::from("out.summary.csv"));
    }
}
