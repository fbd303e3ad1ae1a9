//! `minireduce` command line.
//!
//! Exit codes: 0 success, 1 invalid usage or arguments, 2 job failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{emit_report, run_bench, BenchJob, BenchReport, LexiconJob, NGramJob, ReportFormat};
use crate::corpus::generate_corpus;
use crate::engine::JobContext;
use crate::error::{Error, Result};
use crate::lexicon::{generate_lexicon_file, ingest, IngestOptions, LexiconSpec};
use crate::ngram::{build_documents, Backend, CollectionKind};
use crate::sink::open_collection;

pub const WORKERS_ENV: &str = "MINIREDUCE_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_JOB: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "minireduce", version, about = "Partitioned n-gram and lexicon jobs on two API styles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build n-gram collections from a text corpus.
    Reduce(ReduceArgs),
    /// Flatten a nested JSON lexicon into one document per sense.
    IngestJson(IngestArgs),
    /// Write a seeded synthetic lexicon.
    GenLexicon(GenLexiconArgs),
    /// Write a seeded synthetic text corpus.
    GenCorpus(GenCorpusArgs),
    /// Time every job under both backends and print the report.
    Bench(BenchArgs),
    /// Re-render a CSV bench report.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct EngineArgs {
    /// Partitions per stage (default: worker count).
    #[arg(long)]
    partitions: Option<usize>,
    /// Output root for document collections.
    #[arg(long, default_value = "./out")]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BackendArg {
    Records,
    Table,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Records => Backend::Records,
            BackendArg::Table => Backend::Table,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::Markdown,
        }
    }
}

fn parse_collection(s: &str) -> std::result::Result<CollectionKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    db: String,
    #[arg(long, value_enum)]
    backend: BackendArg,
    #[arg(long, value_delimiter = ',', value_parser = parse_collection,
          default_value = "dictionary,twograms,threegrams")]
    collections: Vec<CollectionKind>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    db: String,
    #[arg(long, value_enum)]
    backend: BackendArg,
    #[arg(long, default_value = "Json")]
    collection: String,
    /// Skip entries that parse as JSON but do not have the entry shape.
    #[arg(long)]
    skip_malformed: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args, Debug)]
struct GenLexiconArgs {
    #[arg(long)]
    entries: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    max_senses: u32,
    #[arg(long, default_value_t = 3)]
    max_examples: u32,
    #[arg(long, default_value_t = 6)]
    max_forms: u32,
}

#[derive(Args, Debug)]
struct GenCorpusArgs {
    #[arg(long)]
    tokens: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    db: String,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    repetitions: u32,
    #[arg(long, value_delimiter = ',', value_parser = parse_collection,
          default_value = "dictionary,twograms,threegrams")]
    collections: Vec<CollectionKind>,
    /// Also time ingestion of this JSON lexicon.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
    /// Additionally save the raw CSV report here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    from: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
}

/// Errors that mean "bad invocation" rather than "the job failed".
fn is_usage_error(e: &Error) -> bool {
    matches!(e, Error::InvalidArgument(_) | Error::InvalidName(_) | Error::CollectionConflict(_))
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("input file {} does not exist", path.display())))
    }
}

fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn context(engine: &EngineArgs) -> Result<JobContext> {
    let workers = worker_count()?;
    JobContext::with_partitions(workers, engine.partitions.unwrap_or(workers))
}

fn reduce(args: ReduceArgs, out: &mut dyn Write) -> Result<()> {
    require_file(&args.input)?;
    let ctx = context(&args.engine)?;
    let lines = ctx.read_text_lines(&args.input, ctx.default_partition_count())?;
    for kind in args.collections {
        let sink = open_collection(&args.db, kind.name(), &args.engine.out)?;
        build_documents(kind, &lines, args.backend.into())?.write_to_sink(&sink)?;
        let dir = sink.dir().to_path_buf();
        let manifest = sink.finalize()?;
        writeln!(out, "{}\t{}\t{}", kind.name(), manifest.document_count, dir.display()).ok();
    }
    Ok(())
}

fn ingest_json(args: IngestArgs, out: &mut dyn Write) -> Result<()> {
    require_file(&args.input)?;
    let ctx = context(&args.engine)?;
    let sink = open_collection(&args.db, &args.collection, &args.engine.out)?;
    let options = IngestOptions {
        skip_malformed: args.skip_malformed,
        ..IngestOptions::default()
    };
    let report = ingest(&args.input, args.backend.into(), &sink, &ctx, &options)?;
    let dir = sink.dir().to_path_buf();
    let manifest = sink.finalize()?;
    writeln!(
        out,
        "{}\t{}\t{}\tentries_read={}\tentries_skipped={}",
        args.collection,
        manifest.document_count,
        dir.display(),
        report.entries_read,
        report.entries_skipped
    )
    .ok();
    Ok(())
}

fn gen_lexicon(args: GenLexiconArgs, out: &mut dyn Write) -> Result<()> {
    let spec = LexiconSpec {
        entries: args.entries,
        seed: args.seed,
        max_senses: args.max_senses,
        max_examples: args.max_examples,
        max_forms: args.max_forms,
    };
    let s = generate_lexicon_file(&args.out, &spec)?;
    writeln!(
        out,
        "entries={} senses={} documents={} bytes={}",
        s.entries, s.senses, s.documents, s.bytes
    )
    .ok();
    Ok(())
}

fn gen_corpus(args: GenCorpusArgs) -> Result<()> {
    let text = generate_corpus(args.seed, args.tokens);
    std::fs::write(&args.out, text).map_err(|e| Error::io(&args.out, e))
}

fn bench(args: BenchArgs, out: &mut dyn Write) -> Result<()> {
    require_file(&args.input)?;
    if let Some(lexicon) = &args.lexicon {
        require_file(lexicon)?;
    }
    if !args.db.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || args.db.is_empty() {
        return Err(Error::InvalidName(args.db));
    }
    let ctx = context(&args.engine)?;
    let ngram_jobs: Vec<NGramJob> = args
        .collections
        .iter()
        .map(|&kind| NGramJob {
            kind,
            input: args.input.clone(),
            partitions: args.engine.partitions,
        })
        .collect();
    let lexicon_job = args.lexicon.as_ref().map(|input| LexiconJob {
        input: input.clone(),
        collection: "Json".into(),
        options: IngestOptions::default(),
    });
    let mut jobs: Vec<&dyn BenchJob> = ngram_jobs.iter().map(|j| j as &dyn BenchJob).collect();
    if let Some(j) = &lexicon_job {
        jobs.push(j);
    }
    let report = run_bench(&jobs, &ctx, args.repetitions as usize, &args.engine.out.join("bench"), &args.db)?;
    if let Some(path) = &args.csv {
        let text = emit_report(&report, ReportFormat::Csv)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    write!(out, "{}", emit_report(&report, args.format.into())?).ok();
    Ok(())
}

fn report(args: ReportArgs, out: &mut dyn Write) -> Result<()> {
    require_file(&args.from)?;
    let text = std::fs::read_to_string(&args.from).map_err(|e| Error::io(&args.from, e))?;
    let report = BenchReport::from_csv(&text).map_err(|e| match e {
        Error::Csv(e) => Error::InvalidArgument(e.to_string()),
        Error::Report(m) => Error::InvalidArgument(m),
        other => other,
    })?;
    write!(out, "{}", emit_report(&report, args.format.into())?).ok();
    Ok(())
}

/// Parses `argv` (program name first) and runs the command, writing results
/// to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                write!(err, "{rendered}").ok();
            } else {
                write!(out, "{rendered}").ok();
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Reduce(a) => reduce(a, out),
        Command::IngestJson(a) => ingest_json(a, out),
        Command::GenLexicon(a) => gen_lexicon(a, out),
        Command::GenCorpus(a) => gen_corpus(a),
        Command::Bench(a) => bench(a, out),
        Command::Report(a) => report(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) if is_usage_error(&e) => {
            writeln!(err, "error: {e}").ok();
            EXIT_USAGE
        }
        Err(e) => {
            writeln!(err, "job failed: {e}").ok();
            EXIT_JOB
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
