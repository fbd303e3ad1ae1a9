//! Timing harness: per-job time breakdown, backend savings and reports.
//!
//! A job's total time is the sum of three measured components: worker pool
//! startup (`t_container`), plan execution without sink I/O
//! (`t_elaborazione`) and sink I/O (`t_scrittura`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::engine::JobContext;
use crate::error::{Error, Result};
use crate::lexicon::{ingest, IngestOptions};
use crate::ngram::{build_documents, Backend, CollectionKind};
use crate::sink::open_collection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TimingBreakdown {
    pub t_container: Duration,
    pub t_elaborazione: Duration,
    pub t_scrittura: Duration,
}

impl TimingBreakdown {
    pub fn new(t_container: Duration, t_elaborazione: Duration, t_scrittura: Duration) -> Self {
        TimingBreakdown {
            t_container,
            t_elaborazione,
            t_scrittura,
        }
    }

    /// Built from seconds; negative or non-finite inputs are rejected.
    pub fn from_secs(container: f64, elaborazione: f64, scrittura: f64) -> Result<Self> {
        let d = |name: &str, s: f64| {
            Duration::try_from_secs_f64(s)
                .map_err(|_| Error::InvalidArgument(format!("{name} must be a finite non-negative number of seconds, got {s}")))
        };
        Ok(TimingBreakdown::new(
            d("t_container", container)?,
            d("t_elaborazione", elaborazione)?,
            d("t_scrittura", scrittura)?,
        ))
    }

    pub fn t_totale(&self) -> Duration {
        self.t_container + self.t_elaborazione + self.t_scrittura
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub job_name: String,
    pub backend: Backend,
    pub timing: TimingBreakdown,
    pub documents: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidArgument(format!("unknown report format `{other}`"))),
        }
    }
}

/// Percentage of the Records time saved by the Table backend.
pub fn savings(t_records: f64, t_table: f64) -> Result<f64> {
    if t_records.is_nan() || t_records <= 0.0 || !t_table.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "savings needs a positive records time, got {t_records}"
        )));
    }
    Ok(100.0 * (t_records - t_table) / t_records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    rows: Vec<BenchRow>,
    savings: Vec<(String, f64)>,
    savings_decimals: usize,
}

impl BenchReport {
    /// Every job must appear exactly once per backend, with equal document
    /// counts. Job order follows first appearance.
    pub fn new(rows: Vec<BenchRow>) -> Result<Self> {
        let mut order: Vec<&str> = Vec::new();
        let mut pairs: BTreeMap<&str, [Option<&BenchRow>; 2]> = BTreeMap::new();
        for row in &rows {
            let slot = pairs.entry(&row.job_name).or_insert_with(|| {
                order.push(&row.job_name);
                [None, None]
            });
            let i = row.backend as usize;
            if slot[i].replace(row).is_some() {
                return Err(Error::Report(format!("job `{}` has two {} rows", row.job_name, row.backend)));
            }
        }
        let mut pcts = Vec::with_capacity(order.len());
        for job in order {
            let [Some(r), Some(t)] = pairs[job] else {
                return Err(Error::Report(format!("job `{job}` lacks a row for one of the backends")));
            };
            if r.documents != t.documents {
                return Err(Error::Report(format!(
                    "job `{job}`: records wrote {} documents, table wrote {}",
                    r.documents, t.documents
                )));
            }
            let pct = savings(r.timing.t_totale().as_secs_f64(), t.timing.t_totale().as_secs_f64())
                .map_err(|e| Error::Report(format!("job `{job}`: {e}")))?;
            pcts.push((job.to_owned(), pct));
        }
        Ok(BenchReport {
            rows,
            savings: pcts,
            savings_decimals: 1,
        })
    }

    /// Decimal places of the savings column (default 1).
    pub fn with_savings_decimals(mut self, decimals: usize) -> Self {
        self.savings_decimals = decimals;
        self
    }

    pub fn rows(&self) -> &[BenchRow] {
        &self.rows
    }

    pub fn savings(&self) -> &[(String, f64)] {
        &self.savings
    }

    fn row(&self, job: &str, backend: Backend) -> &BenchRow {
        self.rows
            .iter()
            .find(|r| r.job_name == job && r.backend == backend)
            .expect("pairs checked in new")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.iter().ne(CSV_HEADER) {
            return Err(Error::Report(format!("unexpected CSV header `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut rows = Vec::new();
        for record in reader.deserialize() {
            let r: CsvRow = record?;
            let timing = TimingBreakdown::from_secs(r.t_container_s, r.t_elaborazione_s, r.t_scrittura_s)?;
            let total = timing.t_totale().as_secs_f64();
            if (total - r.t_totale_s).abs() > 1e-6 {
                return Err(Error::Report(format!(
                    "job `{}`: t_totale_s {} is not the sum of its components ({total})",
                    r.job, r.t_totale_s
                )));
            }
            rows.push(BenchRow {
                job_name: r.job,
                backend: r.backend.parse()?,
                timing,
                documents: r.documents,
            });
        }
        BenchReport::new(rows)
    }
}

const CSV_HEADER: [&str; 7] = [
    "job",
    "backend",
    "t_container_s",
    "t_elaborazione_s",
    "t_scrittura_s",
    "t_totale_s",
    "documents",
];

#[derive(Serialize, Deserialize)]
struct CsvRow {
    job: String,
    backend: String,
    t_container_s: f64,
    t_elaborazione_s: f64,
    t_scrittura_s: f64,
    t_totale_s: f64,
    documents: u64,
}

/// `m:ss`, truncated to whole seconds.
pub fn format_mss(d: Duration) -> String {
    let s = d.as_secs();
    format!("{}:{:02}", s / 60, s % 60)
}

pub fn parse_mss(text: &str) -> Result<Duration> {
    let bad = || Error::InvalidArgument(format!("`{text}` is not an m:ss time"));
    let (m, s) = text.trim().split_once(':').ok_or_else(bad)?;
    let m: u64 = m.parse().map_err(|_| bad())?;
    if s.len() != 2 {
        return Err(bad());
    }
    let s: u64 = s.parse().map_err(|_| bad())?;
    if s >= 60 {
        return Err(bad());
    }
    Ok(Duration::from_secs(m * 60 + s))
}

/// Thousands grouped with `.`, as in `1.762.651`.
pub fn format_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push('.');
        }
        out.push(c);
    }
    out
}

pub fn emit_report(report: &BenchReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER)?;
            for r in &report.rows {
                let t = &r.timing;
                w.write_record([
                    r.job_name.clone(),
                    r.backend.name().to_owned(),
                    format!("{:.9}", t.t_container.as_secs_f64()),
                    format!("{:.9}", t.t_elaborazione.as_secs_f64()),
                    format!("{:.9}", t.t_scrittura.as_secs_f64()),
                    format!("{:.9}", t.t_totale().as_secs_f64()),
                    r.documents.to_string(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
        }
        ReportFormat::Markdown => {
            let mut out = String::from("| Job | Records | Table | Documents | Savings % |\n|---|---|---|---|---|\n");
            for (job, pct) in &report.savings {
                let r = report.row(job, Backend::Records);
                let t = report.row(job, Backend::Table);
                writeln!(
                    out,
                    "| {job} | {} | {} | {} | {:.*} |",
                    format_mss(r.timing.t_totale()),
                    format_mss(t.timing.t_totale()),
                    format_thousands(r.documents),
                    report.savings_decimals,
                    pct
                )
                .expect("writing to a String");
            }
            Ok(out)
        }
    }
}

/// Per-run measurements of one job execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JobRun {
    pub processing: Duration,
    pub writing: Duration,
    pub documents: u64,
}

/// A pipeline that can be run repeatedly into a fresh collection.
pub trait BenchJob {
    fn name(&self) -> &str;
    /// Runs once, writing into `db`/`collection` under `root`.
    fn run(&self, backend: Backend, ctx: &JobContext, root: &Path, db: &str) -> Result<JobRun>;
}

/// One n-gram collection built from a text corpus.
pub struct NGramJob {
    pub kind: CollectionKind,
    pub input: PathBuf,
    pub partitions: Option<usize>,
}

impl BenchJob for NGramJob {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn run(&self, backend: Backend, ctx: &JobContext, root: &Path, db: &str) -> Result<JobRun> {
        let started = Instant::now();
        let partitions = self.partitions.unwrap_or_else(|| ctx.default_partition_count());
        let lines = ctx.read_text_lines(&self.input, partitions)?;
        let docs = build_documents(self.kind, &lines, backend)?;
        let sink = open_collection(db, self.kind.name(), root)?;
        let setup = started.elapsed();

        let report = docs.write_to_sink(&sink)?;
        let started = Instant::now();
        let manifest = sink.finalize()?;
        let finalize = started.elapsed();
        Ok(JobRun {
            processing: setup + report.compute_duration,
            writing: report.write_duration + finalize,
            documents: manifest.document_count,
        })
    }
}

/// Streaming ingestion of a nested JSON lexicon.
pub struct LexiconJob {
    pub input: PathBuf,
    pub collection: String,
    pub options: IngestOptions,
}

impl BenchJob for LexiconJob {
    fn name(&self) -> &str {
        "Json"
    }

    fn run(&self, backend: Backend, ctx: &JobContext, root: &Path, db: &str) -> Result<JobRun> {
        let started = Instant::now();
        let sink = open_collection(db, &self.collection, root)?;
        let setup = started.elapsed();
        let report = ingest(&self.input, backend, &sink, ctx, &self.options)?;
        let started = Instant::now();
        let manifest = sink.finalize()?;
        let finalize = started.elapsed();
        Ok(JobRun {
            processing: setup + report.processing,
            writing: report.writing + finalize,
            documents: manifest.document_count,
        })
    }
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2
    }
}

/// Output of [`time_job`]: median timings and the document count, which must
/// be the same on every repetition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedJob {
    pub timing: TimingBreakdown,
    pub documents: u64,
    pub runs: Vec<JobRun>,
}

/// Runs `job` `repetitions` times under `backend`, each time into a fresh
/// collection below `root/db`, and takes per-component medians.
pub fn time_job(
    job: &dyn BenchJob,
    backend: Backend,
    ctx: &JobContext,
    repetitions: usize,
    root: &Path,
    db: &str,
) -> Result<TimedJob> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    let mut runs = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let dir = root.join(db);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        let run = job.run(backend, ctx, root, db)?;
        if let Some(first) = runs.first().map(|r: &JobRun| r.documents) {
            if first != run.documents {
                return Err(Error::Report(format!(
                    "job `{}` wrote {first} documents then {}",
                    job.name(),
                    run.documents
                )));
            }
        }
        runs.push(run);
    }
    Ok(TimedJob {
        timing: TimingBreakdown::new(
            ctx.startup_duration(),
            median(runs.iter().map(|r| r.processing).collect()),
            median(runs.iter().map(|r| r.writing).collect()),
        ),
        documents: runs[0].documents,
        runs,
    })
}

/// Times every job under both backends. Each backend writes into its own
/// database, `<db>_records` and `<db>_table`.
pub fn run_bench(
    jobs: &[&dyn BenchJob],
    ctx: &JobContext,
    repetitions: usize,
    root: &Path,
    db: &str,
) -> Result<BenchReport> {
    let mut rows = Vec::new();
    for job in jobs {
        for backend in Backend::ALL {
            let backend_db = format!("{db}_{}", backend.name());
            let timed = time_job(*job, backend, ctx, repetitions, &root.join(job.name()), &backend_db)?;
            rows.push(BenchRow {
                job_name: job.name().to_owned(),
                backend,
                timing: timed.timing,
                documents: timed.documents,
            });
        }
    }
    BenchReport::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(job: &str, backend: Backend, total_secs: u64, documents: u64) -> BenchRow {
        BenchRow {
            job_name: job.into(),
            backend,
            timing: TimingBreakdown::new(Duration::ZERO, Duration::from_secs(total_secs), Duration::ZERO),
            documents,
        }
    }

    #[test]
    fn additivity() {
        let t = TimingBreakdown::from_secs(2.0, 5.0, 3.0).unwrap();
        assert_eq!(t.t_totale(), Duration::from_secs(10));
        assert!(TimingBreakdown::from_secs(-1.0, 0.0, 0.0).is_err());
        assert!(TimingBreakdown::from_secs(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn savings_values() {
        assert!((savings(225.0, 210.0).unwrap() - 6.6667).abs() < 1e-3);
        assert_eq!(savings(118.0, 118.0).unwrap(), 0.0);
        assert!(savings(0.0, 1.0).is_err());
        assert!(savings(-3.0, 1.0).is_err());
        let a = savings(429.0, 388.0).unwrap();
        let b = savings(429.0 * 7.5, 388.0 * 7.5).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn mss() {
        assert_eq!(format_mss(Duration::from_millis(118_999)), "1:58");
        assert_eq!(format_mss(Duration::from_secs(746)), "12:26");
        assert_eq!(format_mss(Duration::ZERO), "0:00");
        assert_eq!(parse_mss("10:40").unwrap(), Duration::from_secs(640));
        for bad in ["2.48", "1:5", "1:60", "x:00", ""] {
            assert!(parse_mss(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn thousands() {
        assert_eq!(format_thousands(1762651), "1.762.651");
        assert_eq!(format_thousands(999), "999");
        assert_eq!(format_thousands(1000), "1.000");
        assert_eq!(format_thousands(0), "0");
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = BenchReport::new(vec![]).unwrap();
        assert_eq!(
            emit_report(&r, ReportFormat::Markdown).unwrap(),
            "| Job | Records | Table | Documents | Savings % |\n|---|---|---|---|---|\n"
        );
        assert_eq!(
            emit_report(&r, ReportFormat::Csv).unwrap(),
            "job,backend,t_container_s,t_elaborazione_s,t_scrittura_s,t_totale_s,documents\n"
        );
    }

    #[test]
    fn markdown_row() {
        let r = BenchReport::new(vec![
            row("Dictionary", Backend::Records, 118, 1762651),
            row("Dictionary", Backend::Table, 118, 1762651),
        ])
        .unwrap();
        let md = emit_report(&r, ReportFormat::Markdown).unwrap();
        assert!(md.contains("| Dictionary | 1:58 | 1:58 | 1.762.651 | 0.0 |"), "{md}");
    }

    #[test]
    fn mismatched_pairs() {
        assert!(matches!(
            BenchReport::new(vec![row("A", Backend::Records, 5, 1)]),
            Err(Error::Report(_))
        ));
        assert!(matches!(
            BenchReport::new(vec![row("A", Backend::Records, 5, 1), row("A", Backend::Table, 4, 2)]),
            Err(Error::Report(_))
        ));
        assert!(matches!(
            BenchReport::new(vec![
                row("A", Backend::Records, 5, 1),
                row("A", Backend::Records, 5, 1),
                row("A", Backend::Table, 4, 1)
            ]),
            Err(Error::Report(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let r = BenchReport::new(vec![
            BenchRow {
                job_name: "TwoGrams".into(),
                backend: Backend::Records,
                timing: TimingBreakdown::new(
                    Duration::from_nanos(1_234_567),
                    Duration::from_nanos(2_000_000_001),
                    Duration::from_millis(300),
                ),
                documents: 42,
            },
            row("TwoGrams", Backend::Table, 2, 42),
        ])
        .unwrap();
        let text = emit_report(&r, ReportFormat::Csv).unwrap();
        assert_eq!(BenchReport::from_csv(&text).unwrap(), r);
    }

    #[test]
    fn csv_rejects_non_additive_rows() {
        let text = "job,backend,t_container_s,t_elaborazione_s,t_scrittura_s,t_totale_s,documents\n\
                    A,records,1,1,1,4,1\nA,table,1,1,1,3,1\n";
        assert!(matches!(BenchReport::from_csv(text), Err(Error::Report(_))));
    }

    #[test]
    fn median_even_and_odd() {
        let d = Duration::from_millis;
        assert_eq!(median(vec![d(3), d(1), d(2)]), d(2));
        assert_eq!(median(vec![d(4), d(1), d(2), d(3)]), Duration::from_micros(2500));
    }
}
