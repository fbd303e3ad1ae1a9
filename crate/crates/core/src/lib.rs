//! A small multi-threaded, partitioned data-processing engine.
//!
//! Two API styles sit on the same executor:
//!
//! * [`RecordCollection`]: a lazy, immutable, partitioned collection of
//!   arbitrary records. Transformations (`map`, `flat_map`, `filter`,
//!   `map_to_pairs`, `reduce_by_key`) only extend the lineage; actions
//!   (`count`, `collect`, `write_to_sink`) run it on a worker pool.
//! * [`TypedTable`]: schema-described rows kept in a compact binary layout.
//!   Relational operations (`select`, `group_by_count`, `explode`, ...) work
//!   directly on the encoded bytes.
//!
//! On top of these live the n-gram collection builders ([`ngram`]), the
//! streaming nested-JSON lexicon ingestion ([`lexicon`]), a JSON Lines
//! document sink ([`sink`]) and the timing harness ([`bench`]).

pub mod bench;
pub mod cli;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod lexicon;
pub mod ngram;
pub mod sink;
pub mod table;

pub use engine::{JobContext, NodeKind, PlanNode, RecordCollection, WriteReport};
pub use error::{Error, Result};
pub use ngram::Backend;

pub use sink::{CollectionManifest, Document, DocumentSink, FieldValue};
pub use table::{Cell, ColumnDef, DataType, Encoder, RowEncoder, Schema, TableRecord, TypedTable};

