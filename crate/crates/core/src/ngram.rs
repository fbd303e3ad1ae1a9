//! Dictionary / TwoGrams / ThreeGrams collection builders.
//!
//! Every builder has two implementations with identical results: one on the
//! record API (`flat_map` → `map_to_pairs` → `reduce_by_key`) and one on the
//! typed table API (rows → `group_by_count` → derived columns).

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, LazyLock};

use crate::engine::RecordCollection;
use crate::error::{Error, Result};
use crate::sink::{Document, FieldValue};
use crate::table::{
    encoder_for, take_int, take_text, Cell, ColumnDef, DataType, Encoder, Row, RowEncoder, Schema, TableRecord,
    TypedTable,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Backend {
    Records,
    Table,
}

impl Backend {
    pub const ALL: [Backend; 2] = [Backend::Records, Backend::Table];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Records => "records",
            Backend::Table => "table",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "records" => Ok(Backend::Records),
            "table" => Ok(Backend::Table),
            other => Err(Error::InvalidArgument(format!(
                "unknown backend `{other}` (expected records or table)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CollectionKind {
    Dictionary,
    TwoGrams,
    ThreeGrams,
}

impl CollectionKind {
    pub const ALL: [CollectionKind; 3] = [
        CollectionKind::Dictionary,
        CollectionKind::TwoGrams,
        CollectionKind::ThreeGrams,
    ];

    /// Name of the persisted collection.
    pub fn name(self) -> &'static str {
        match self {
            CollectionKind::Dictionary => "Dictionary",
            CollectionKind::TwoGrams => "TwoGrams",
            CollectionKind::ThreeGrams => "ThreeGrams",
        }
    }
}

impl fmt::Display for CollectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CollectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dictionary" => Ok(CollectionKind::Dictionary),
            "twograms" => Ok(CollectionKind::TwoGrams),
            "threegrams" => Ok(CollectionKind::ThreeGrams),
            other => Err(Error::InvalidArgument(format!(
                "unknown collection `{other}` (expected dictionary, twograms or threegrams)"
            ))),
        }
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

/// Splits a line into lowercase tokens.
///
/// Letters, digits and apostrophes (`'` and `’`) form tokens; everything
/// else separates them. Apostrophes survive only inside a token, so
/// `"l'acqua"` stays whole while a quoted `'ciao'` becomes `ciao`.
pub fn tokenize(line: &str) -> Vec<String> {
    line.split(|c: char| !is_token_char(c))
        .map(|t| t.trim_matches(is_apostrophe))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DictionaryEntry {
    pub term: String,
    pub freq: u64,
    pub chars: u64,
}

impl DictionaryEntry {
    pub fn new(term: String, freq: u64) -> Self {
        let chars = term.chars().count() as u64;
        DictionaryEntry { term, freq, chars }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwoGramEntry {
    pub w1: String,
    pub w2: String,
    pub freq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThreeGramEntry {
    pub w1: String,
    pub w2: String,
    pub w3: String,
    pub freq: u64,
}

fn keys(names: &[&str]) -> Arc<[String]> {
    names.iter().map(|s| s.to_string()).collect()
}

static DICTIONARY_KEYS: LazyLock<Arc<[String]>> = LazyLock::new(|| keys(&["term", "freq", "chars"]));
static TWO_GRAM_KEYS: LazyLock<Arc<[String]>> = LazyLock::new(|| keys(&["w1", "w2", "freq"]));
static THREE_GRAM_KEYS: LazyLock<Arc<[String]>> = LazyLock::new(|| keys(&["w1", "w2", "w3", "freq"]));

fn count_cell(n: u64) -> Cell {
    Cell::Int64(n as i64)
}

fn count_from(v: i64, column: &str) -> Result<u64> {
    u64::try_from(v).map_err(|_| Error::ColumnType {
        column: column.into(),
        expected: "a non-negative count".into(),
        found: v.to_string(),
    })
}

fn text_schema(cols: &[&str], counts: &[&str]) -> Schema {
    let mut defs: Vec<ColumnDef> = cols.iter().map(|c| ColumnDef::new(*c, DataType::Text)).collect();
    defs.extend(counts.iter().map(|c| ColumnDef::new(*c, DataType::Int64)));
    Schema::new(defs).expect("static schema")
}

impl DictionaryEntry {
    pub fn to_document(&self) -> Document {
        Document::new(
            DICTIONARY_KEYS.clone(),
            vec![
                FieldValue::Text(self.term.clone()),
                FieldValue::Int(self.freq as i64),
                FieldValue::Int(self.chars as i64),
            ],
        )
        .expect("arity matches keys")
    }
}

impl TableRecord for DictionaryEntry {
    fn schema() -> Schema {
        text_schema(&["term"], &["freq", "chars"])
    }

    fn to_row(&self) -> Row {
        vec![Cell::Text(self.term.clone()), count_cell(self.freq), count_cell(self.chars)]
    }

    fn from_row(row: Row) -> Result<Self> {
        let mut it = row.into_iter();
        Ok(DictionaryEntry {
            term: take_text(&mut it, "term")?,
            freq: count_from(take_int(&mut it, "freq")?, "freq")?,
            chars: count_from(take_int(&mut it, "chars")?, "chars")?,
        })
    }
}

impl TwoGramEntry {
    pub fn to_document(&self) -> Document {
        Document::new(
            TWO_GRAM_KEYS.clone(),
            vec![
                FieldValue::Text(self.w1.clone()),
                FieldValue::Text(self.w2.clone()),
                FieldValue::Int(self.freq as i64),
            ],
        )
        .expect("arity matches keys")
    }
}

impl TableRecord for TwoGramEntry {
    fn schema() -> Schema {
        text_schema(&["w1", "w2"], &["freq"])
    }

    fn to_row(&self) -> Row {
        vec![Cell::Text(self.w1.clone()), Cell::Text(self.w2.clone()), count_cell(self.freq)]
    }

    fn from_row(row: Row) -> Result<Self> {
        let mut it = row.into_iter();
        Ok(TwoGramEntry {
            w1: take_text(&mut it, "w1")?,
            w2: take_text(&mut it, "w2")?,
            freq: count_from(take_int(&mut it, "freq")?, "freq")?,
        })
    }
}

impl ThreeGramEntry {
    pub fn to_document(&self) -> Document {
        Document::new(
            THREE_GRAM_KEYS.clone(),
            vec![
                FieldValue::Text(self.w1.clone()),
                FieldValue::Text(self.w2.clone()),
                FieldValue::Text(self.w3.clone()),
                FieldValue::Int(self.freq as i64),
            ],
        )
        .expect("arity matches keys")
    }
}

impl TableRecord for ThreeGramEntry {
    fn schema() -> Schema {
        text_schema(&["w1", "w2", "w3"], &["freq"])
    }

    fn to_row(&self) -> Row {
        vec![
            Cell::Text(self.w1.clone()),
            Cell::Text(self.w2.clone()),
            Cell::Text(self.w3.clone()),
            count_cell(self.freq),
        ]
    }

    fn from_row(row: Row) -> Result<Self> {
        let mut it = row.into_iter();
        Ok(ThreeGramEntry {
            w1: take_text(&mut it, "w1")?,
            w2: take_text(&mut it, "w2")?,
            w3: take_text(&mut it, "w3")?,
            freq: count_from(take_int(&mut it, "freq")?, "freq")?,
        })
    }
}

// Record API pipelines.

fn reduce_partitions(corpus: &RecordCollection<String>) -> usize {
    corpus.context().default_partition_count()
}

fn records_dictionary(corpus: &RecordCollection<String>) -> Result<RecordCollection<DictionaryEntry>> {
    Ok(corpus
        .flat_map(|line| tokenize(&line))
        .map_to_pairs(|t| (t, 1u64))
        .reduce_by_key(|a, b| a + b, reduce_partitions(corpus))?
        .map(|(term, freq)| DictionaryEntry::new(term, freq)))
}

fn records_two_grams(corpus: &RecordCollection<String>) -> Result<RecordCollection<TwoGramEntry>> {
    Ok(corpus
        .flat_map(|line| {
            let toks = tokenize(&line);
            toks.windows(2)
                .map(|w| (w[0].clone(), w[1].clone()))
                .collect::<Vec<_>>()
        })
        .map_to_pairs(|pair| (pair, 1u64))
        .reduce_by_key(|a, b| a + b, reduce_partitions(corpus))?
        .map(|((w1, w2), freq)| TwoGramEntry { w1, w2, freq }))
}

fn records_three_grams(corpus: &RecordCollection<String>) -> Result<RecordCollection<ThreeGramEntry>> {
    Ok(corpus
        .flat_map(|line| {
            let toks = tokenize(&line);
            toks.windows(3)
                .map(|w| (w[0].clone(), w[1].clone(), w[2].clone()))
                .collect::<Vec<_>>()
        })
        .map_to_pairs(|triple| (triple, 1u64))
        .reduce_by_key(|a, b| a + b, reduce_partitions(corpus))?
        .map(|((w1, w2, w3), freq)| ThreeGramEntry { w1, w2, w3, freq }))
}

// Typed table pipelines.

fn token_table(corpus: &RecordCollection<String>, columns: &'static [&'static str]) -> Result<TypedTable> {
    let schema = Schema::new(columns.iter().map(|c| ColumnDef::new(*c, DataType::Text)).collect())?;
    let enc: RowEncoder = encoder_for(&schema)?;
    let n = columns.len();
    TypedTable::from_text_collection(corpus, &enc, move |line, rows| {
        tokenize(&line).windows(n).try_for_each(|w| rows.push(w))
    })
}

/// Dictionary as a table: `term, freq, chars`.
pub fn dictionary_table(corpus: &RecordCollection<String>) -> Result<TypedTable> {
    token_table(corpus, &["term"])?
        .group_by_count(&["term"])?
        .with_length_column("term", "chars")
}

/// TwoGrams as a table: `w1, w2, freq`.
pub fn two_grams_table(corpus: &RecordCollection<String>) -> Result<TypedTable> {
    token_table(corpus, &["w1", "w2"])?.group_by_count(&["w1", "w2"])
}

/// ThreeGrams as a table: `w1, w2, w3, freq`.
pub fn three_grams_table(corpus: &RecordCollection<String>) -> Result<TypedTable> {
    token_table(corpus, &["w1", "w2", "w3"])?.group_by_count(&["w1", "w2", "w3"])
}

pub fn collection_table(kind: CollectionKind, corpus: &RecordCollection<String>) -> Result<TypedTable> {
    match kind {
        CollectionKind::Dictionary => dictionary_table(corpus),
        CollectionKind::TwoGrams => two_grams_table(corpus),
        CollectionKind::ThreeGrams => three_grams_table(corpus),
    }
}

pub fn build_dictionary(corpus: &RecordCollection<String>, backend: Backend) -> Result<RecordCollection<DictionaryEntry>> {
    match backend {
        Backend::Records => records_dictionary(corpus),
        Backend::Table => dictionary_table(corpus)?.to_objects(&Encoder::new()?),
    }
}

pub fn build_two_grams(corpus: &RecordCollection<String>, backend: Backend) -> Result<RecordCollection<TwoGramEntry>> {
    match backend {
        Backend::Records => records_two_grams(corpus),
        Backend::Table => two_grams_table(corpus)?.to_objects(&Encoder::new()?),
    }
}

pub fn build_three_grams(corpus: &RecordCollection<String>, backend: Backend) -> Result<RecordCollection<ThreeGramEntry>> {
    match backend {
        Backend::Records => records_three_grams(corpus),
        Backend::Table => three_grams_table(corpus)?.to_objects(&Encoder::new()?),
    }
}

/// The collection `kind` as flat documents ready for a sink.
///
/// The record API formats each entry by hand; the table API gets documents
/// straight from the row schema.
pub fn build_documents(
    kind: CollectionKind,
    corpus: &RecordCollection<String>,
    backend: Backend,
) -> Result<RecordCollection<Document>> {
    match backend {
        Backend::Records => Ok(match kind {
            CollectionKind::Dictionary => records_dictionary(corpus)?.map(|e| e.to_document()),
            CollectionKind::TwoGrams => records_two_grams(corpus)?.map(|e| e.to_document()),
            CollectionKind::ThreeGrams => records_three_grams(corpus)?.map(|e| e.to_document()),
        }),
        Backend::Table => collection_table(kind, corpus)?.to_documents(),
    }
}
