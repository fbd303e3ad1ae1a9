//! Nested JSON lexicon ingestion.
//!
//! The input is one JSON array of entries, each with nested sense and form
//! arrays. Entries are streamed with bounded memory, processed in chunks on
//! the engine, and written as one flat document per sense.

mod generate;
mod stream;

use std::path::Path;
use std::sync::{Arc, LazyLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use generate::{generate_lexicon_file, write_lexicon, LexiconSpec, LexiconSummary};
pub use stream::{stream_entries, EntryStream, READ_BUFFER_BYTES};

use crate::engine::{JobContext, RecordCollection};
use crate::error::Result;
use crate::ngram::Backend;
use crate::sink::{Document, DocumentSink, FieldValue};
use crate::table::{take_array, take_text, Cell, ColumnDef, DataType, Encoder, Row, Schema, TableRecord, TypedTable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sense {
    pub gloss: String,
    #[serde(default)]
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalEntry {
    pub lemma: String,
    pub pos: String,
    #[serde(default)]
    pub senses: Vec<Sense>,
    #[serde(default)]
    pub forms: Vec<String>,
}

/// Row shape: `lemma, pos, gloss: Array(Text), examples: Array(Array(Text)),
/// forms: Array(Text)`. Senses are stored column-wise, so `gloss[i]` and
/// `examples[i]` belong to the same sense.
impl TableRecord for LexicalEntry {
    fn schema() -> Schema {
        Schema::new(vec![
            ColumnDef::new("lemma", DataType::Text),
            ColumnDef::new("pos", DataType::Text),
            ColumnDef::new("gloss", DataType::array_of(DataType::Text)),
            ColumnDef::new("examples", DataType::array_of(DataType::array_of(DataType::Text))),
            ColumnDef::new("forms", DataType::array_of(DataType::Text)),
        ])
        .expect("static schema")
    }

    fn to_row(&self) -> Row {
        let texts = |v: &[String]| Cell::Array(v.iter().map(|s| Cell::Text(s.clone())).collect());
        vec![
            Cell::Text(self.lemma.clone()),
            Cell::Text(self.pos.clone()),
            Cell::Array(self.senses.iter().map(|s| Cell::Text(s.gloss.clone())).collect()),
            Cell::Array(self.senses.iter().map(|s| texts(&s.examples)).collect()),
            texts(&self.forms),
        ]
    }

    fn from_row(row: Row) -> Result<Self> {
        fn strings(cells: Vec<Cell>, column: &str) -> Result<Vec<String>> {
            cells
                .into_iter()
                .map(|c| take_text(&mut vec![c].into_iter(), column))
                .collect()
        }
        let mut it = row.into_iter();
        let lemma = take_text(&mut it, "lemma")?;
        let pos = take_text(&mut it, "pos")?;
        let glosses = strings(take_array(&mut it, "gloss")?, "gloss")?;
        let examples = take_array(&mut it, "examples")?;
        let forms = strings(take_array(&mut it, "forms")?, "forms")?;
        let senses = glosses
            .into_iter()
            .zip(examples)
            .map(|(gloss, ex)| {
                let ex = take_array(&mut vec![ex].into_iter(), "examples")?;
                Ok(Sense {
                    gloss,
                    examples: strings(ex, "examples")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LexicalEntry { lemma, pos, senses, forms })
    }
}

pub const DOCUMENT_FIELDS: [&str; 6] = ["lemma", "pos", "sense_index", "gloss", "example_count", "form_count"];

static DOCUMENT_KEYS: LazyLock<Arc<[String]>> =
    LazyLock::new(|| DOCUMENT_FIELDS.iter().map(|s| s.to_string()).collect());

/// One document per sense; an entry without senses yields a single stub with
/// `sense_index = -1`, an empty gloss and no examples.
pub fn flatten_entry(entry: &LexicalEntry) -> Vec<Document> {
    let doc = |index: i64, gloss: &str, examples: usize| {
        Document::new(
            DOCUMENT_KEYS.clone(),
            vec![
                FieldValue::Text(entry.lemma.clone()),
                FieldValue::Text(entry.pos.clone()),
                FieldValue::Int(index),
                FieldValue::Text(gloss.to_owned()),
                FieldValue::Int(examples as i64),
                FieldValue::Int(entry.forms.len() as i64),
            ],
        )
        .expect("arity matches keys")
    };
    if entry.senses.is_empty() {
        return vec![doc(-1, "", 0)];
    }
    entry
        .senses
        .iter()
        .enumerate()
        .map(|(i, s)| doc(i as i64, &s.gloss, s.examples.len()))
        .collect()
}

/// Table-API flattening of a lexicon table (see [`LexicalEntry`]'s schema).
pub fn flatten_table(entries: &TypedTable) -> Result<TypedTable> {
    entries
        .with_size_column("forms", "form_count")?
        .explode_with_position(&["gloss", "examples"], "sense_index", true)?
        .with_size_column("examples", "example_count")?
        .select(&DOCUMENT_FIELDS)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestOptions {
    pub skip_malformed: bool,
    /// Entries buffered per engine round.
    pub chunk_entries: usize,
    /// Partitions per round; `None` uses the context default.
    pub partitions: Option<usize>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            skip_malformed: false,
            chunk_entries: 4096,
            partitions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestReport {
    pub documents_written: u64,
    pub entries_read: u64,
    pub entries_skipped: u64,
    pub peak_buffer_bytes: u64,
    /// Parsing and flattening; sink I/O excluded.
    pub processing: Duration,
    pub writing: Duration,
}

fn chunk_documents(
    ctx: &JobContext,
    chunk: Vec<LexicalEntry>,
    backend: Backend,
    partitions: usize,
    encoder: &Encoder<LexicalEntry>,
) -> Result<RecordCollection<Document>> {
    match backend {
        Backend::Records => Ok(ctx.parallelize(chunk, partitions)?.flat_map(|e| flatten_entry(&e))),
        Backend::Table => {
            let table = TypedTable::from_objects(ctx, &chunk, encoder, partitions)?;
            flatten_table(&table)?.to_documents()
        }
    }
}

/// Streams the lexicon at `path` into `sink`. The sink is left open; call
/// [`DocumentSink::finalize`] afterwards.
pub fn ingest(
    path: impl AsRef<Path>,
    backend: Backend,
    sink: &DocumentSink,
    ctx: &JobContext,
    options: &IngestOptions,
) -> Result<IngestReport> {
    let started = Instant::now();
    let partitions = options.partitions.unwrap_or_else(|| ctx.default_partition_count());
    let chunk_entries = options.chunk_entries.max(1);
    let encoder = Encoder::<LexicalEntry>::new()?;
    let mut stream = EntryStream::open(path)?.skip_malformed(options.skip_malformed);

    let mut next_part = 0;
    let mut documents = 0;
    let mut writing = Duration::ZERO;
    loop {
        let chunk = stream.by_ref().take(chunk_entries).collect::<Result<Vec<_>>>()?;
        if chunk.is_empty() {
            break;
        }
        let docs = chunk_documents(ctx, chunk, backend, partitions, &encoder)?;
        let report = docs.write_to_sink_from(sink, next_part)?;
        next_part += report.part_files.len();
        documents += report.document_count;
        writing += report.write_duration;
    }

    Ok(IngestReport {
        documents_written: documents,
        entries_read: stream.entries_read(),
        entries_skipped: stream.entries_skipped(),
        peak_buffer_bytes: stream.peak_buffer_bytes(),
        processing: started.elapsed().saturating_sub(writing),
        writing,
    })
}
