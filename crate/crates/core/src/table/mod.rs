//! Schema-typed tables stored as encoded binary rows.
//!
//! A [`TypedTable`] is a [`RecordCollection`] of [`EncodedRow`]s plus the
//! [`Schema`] they conform to. Projections, grouping, explosion and the
//! derived-column operations splice the encoded cells directly; rows are
//! only fully decoded when leaving the table (`collect_rows`, `to_objects`,
//! `to_documents`).

mod codec;
mod schema;

use std::ops::Range;
use std::sync::Arc;

pub use codec::{
    decode_row, encode_row, encoder_for, take_array, take_int, take_text, Cell, EncodedRow, Encoder, Row,
    RowEncoder, TableRecord, TAG_ARRAY, TAG_FLOAT64, TAG_INT64, TAG_TEXT,
};
pub use schema::{ColumnDef, DataType, Schema, MAX_ARRAY_DEPTH};

use crate::engine::{Data, JobContext, RecordCollection};
use crate::error::{Error, Result};
use crate::sink::{Document, FieldValue};
use codec::{cell_spans, element_spans, read_u32, text_at};

#[derive(Clone, Debug)]
pub struct TypedTable {
    schema: Arc<Schema>,
    rows: RecordCollection<EncodedRow>,
}

fn column_type_error(column: &str, expected: &str, found: &DataType) -> Error {
    Error::ColumnType {
        column: column.to_owned(),
        expected: expected.to_owned(),
        found: found.to_string(),
    }
}

/// Encoding of the placeholder cell used for exploded-away empty arrays.
fn default_cell(dt: &DataType, out: &mut Vec<u8>) {
    match dt {
        DataType::Text => {
            out.push(TAG_TEXT);
            out.extend_from_slice(&0u32.to_le_bytes());
        }
        DataType::Int64 => {
            out.push(TAG_INT64);
            out.extend_from_slice(&0i64.to_le_bytes());
        }
        DataType::Float64 => {
            out.push(TAG_FLOAT64);
            out.extend_from_slice(&0f64.to_le_bytes());
        }
        DataType::Array(_) => {
            out.push(TAG_ARRAY);
            out.extend_from_slice(&0u32.to_le_bytes());
        }
    }
}

/// Row sink for [`TypedTable::from_text_collection`].
pub struct TextRows {
    width: usize,
    rows: Vec<EncodedRow>,
}

impl TextRows {
    pub fn push<S: AsRef<str>>(&mut self, cells: &[S]) -> Result<()> {
        if cells.len() != self.width {
            return Err(Error::Encode {
                ordinal: None,
                message: format!("row has {} cells, schema has {} columns", cells.len(), self.width),
            });
        }
        let len: usize = cells.iter().map(|c| 5 + c.as_ref().len()).sum();
        let mut row = Vec::with_capacity(4 + len);
        row.extend_from_slice(&(self.width as u32).to_le_bytes());
        for cell in cells {
            let text = cell.as_ref().as_bytes();
            let n = u32::try_from(text.len()).map_err(|_| Error::Encode {
                ordinal: None,
                message: "text longer than 4 GiB".into(),
            })?;
            row.push(TAG_TEXT);
            row.extend_from_slice(&n.to_le_bytes());
            row.extend_from_slice(text);
        }
        self.rows.push(row);
        Ok(())
    }
}

fn push_int(out: &mut Vec<u8>, v: i64) {
    out.push(TAG_INT64);
    out.extend_from_slice(&v.to_le_bytes());
}

/// Copies `row` with one more cell count and room for an appended cell.
fn widened(row: &[u8]) -> Result<Vec<u8>> {
    let n = read_u32(row, 0)?;
    let mut out = Vec::with_capacity(row.len() + 9);
    out.extend_from_slice(&(n + 1).to_le_bytes());
    out.extend_from_slice(&row[4..]);
    Ok(out)
}

impl TypedTable {
    /// Encodes `objects` eagerly and distributes the rows.
    pub fn from_objects<T: TableRecord>(
        ctx: &JobContext,
        objects: &[T],
        enc: &Encoder<T>,
        partitions: usize,
    ) -> Result<TypedTable> {
        let rows = objects
            .iter()
            .enumerate()
            .map(|(i, o)| {
                enc.encode(o).map_err(|e| match e {
                    Error::Encode { message, .. } => Error::Encode {
                        ordinal: Some(i),
                        message,
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TypedTable {
            schema: enc.row_encoder().schema_arc(),
            rows: ctx.parallelize(rows, partitions)?,
        })
    }

    pub fn from_rows(ctx: &JobContext, enc: &RowEncoder, rows: &[Row], partitions: usize) -> Result<TypedTable> {
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                enc.encode(r).map_err(|e| match e {
                    Error::Encode { message, .. } => Error::Encode {
                        ordinal: Some(i),
                        message,
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TypedTable {
            schema: enc.schema_arc(),
            rows: ctx.parallelize(rows, partitions)?,
        })
    }

    /// Lazily turns each record of `source` into zero or more rows of `enc`'s
    /// schema.
    pub fn from_collection<T, I, F>(source: &RecordCollection<T>, enc: &RowEncoder, f: F) -> TypedTable
    where
        T: Data,
        I: IntoIterator<Item = Row>,
        F: Fn(T) -> I + Send + Sync + 'static,
    {
        let schema = enc.schema_arc();
        let s = schema.clone();
        let rows = source.try_flat_map(move |record| -> Result<Vec<EncodedRow>> {
            let mut out = Vec::new();
            for row in f(record) {
                let mut bytes = Vec::new();
                encode_row(&s, &row, &mut bytes)?;
                out.push(bytes);
            }
            Ok(out)
        });
        TypedTable { schema, rows }
    }

    /// Like [`TypedTable::from_collection`] for all-text schemas, but rows
    /// are written straight to bytes through a [`TextRows`] buffer.
    pub fn from_text_collection<T, F>(source: &RecordCollection<T>, enc: &RowEncoder, f: F) -> Result<TypedTable>
    where
        T: Data,
        F: Fn(T, &mut TextRows) -> Result<()> + Send + Sync + 'static,
    {
        let schema = enc.schema_arc();
        if let Some(col) = schema.columns().iter().find(|c| c.data_type != DataType::Text) {
            return Err(column_type_error(&col.name, "Text", &col.data_type));
        }
        let width = schema.len();
        let rows = source.try_flat_map(move |record| -> Result<Vec<EncodedRow>> {
            let mut out = TextRows { width, rows: Vec::new() };
            f(record, &mut out)?;
            Ok(out.rows)
        });
        Ok(TypedTable { schema, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &RecordCollection<EncodedRow> {
        &self.rows
    }

    pub fn context(&self) -> &JobContext {
        self.rows.context()
    }

    pub fn count(&self) -> Result<u64> {
        self.rows.count()
    }

    pub fn collect_rows(&self) -> Result<Vec<Row>> {
        let schema = self.schema.clone();
        self.rows
            .try_map(move |r| decode_row(&schema, &r))
            .collect()
    }

    /// Lazily decodes rows into `T`. The table schema must equal `T`'s.
    pub fn to_objects<T: TableRecord>(&self, enc: &Encoder<T>) -> Result<RecordCollection<T>> {
        if enc.schema() != self.schema() {
            return Err(Error::Schema(format!(
                "table columns {:?} do not match encoder columns {:?}",
                self.schema.names(),
                enc.schema().names()
            )));
        }
        let enc = enc.clone();
        Ok(self.rows.try_map(move |r| enc.decode(&r)))
    }

    fn derive(&self, schema: Schema, rows: RecordCollection<EncodedRow>) -> TypedTable {
        TypedTable {
            schema: Arc::new(schema),
            rows,
        }
    }

    /// Projects onto `columns`, in the given order.
    pub fn select(&self, columns: &[&str]) -> Result<TypedTable> {
        let idx = columns
            .iter()
            .map(|c| self.schema.index_of(c))
            .collect::<Result<Vec<_>>>()?;
        let schema = Schema::new(idx.iter().map(|&i| self.schema.columns()[i].clone()).collect())?;
        let rows = self.rows.try_map(move |row| -> Result<EncodedRow> {
            let spans = cell_spans(&row)?;
            let mut out = Vec::with_capacity(row.len());
            out.extend_from_slice(&(idx.len() as u32).to_le_bytes());
            for &i in &idx {
                out.extend_from_slice(&row[spans[i].clone()]);
            }
            Ok(out)
        });
        Ok(self.derive(schema, rows))
    }

    /// One row per distinct key tuple, with its occurrence count in `freq`.
    ///
    /// Output order is unspecified.
    pub fn group_by_count(&self, key_columns: &[&str]) -> Result<TypedTable> {
        let mut idx = Vec::with_capacity(key_columns.len());
        let mut cols = Vec::with_capacity(key_columns.len() + 1);
        for name in key_columns {
            let i = self.schema.index_of(name)?;
            let col = &self.schema.columns()[i];
            if !col.data_type.is_scalar() {
                return Err(column_type_error(name, "a scalar type", &col.data_type));
            }
            idx.push(i);
            cols.push(col.clone());
        }
        cols.push(ColumnDef::new("freq", DataType::Int64));
        let schema = Schema::new(cols)?;
        let width = schema.len() as u32;
        let partitions = self.context().default_partition_count();

        let whole_row = idx.iter().copied().eq(0..self.schema.len());
        let keyed = self.rows.try_map(move |row| -> Result<(Vec<u8>, i64)> {
            if whole_row {
                // The row itself is the key; its count header is the same for every row.
                return Ok((row, 1));
            }
            let spans = cell_spans(&row)?;
            let mut key = Vec::with_capacity(row.len());
            for &i in &idx {
                key.extend_from_slice(&row[spans[i].clone()]);
            }
            Ok((key, 1))
        });
        let rows = keyed.reduce_by_key(|a, b| a + b, partitions)?.map(move |(mut key, n)| {
            if whole_row {
                key[..4].copy_from_slice(&width.to_le_bytes());
                push_int(&mut key, n);
                return key;
            }
            let mut out = Vec::with_capacity(key.len() + 13);
            out.extend_from_slice(&width.to_le_bytes());
            out.extend_from_slice(&key);
            push_int(&mut out, n);
            out
        });
        Ok(self.derive(schema, rows))
    }

    /// One output row per element of `array_column`; the column takes the
    /// element type and empty arrays produce no rows.
    pub fn explode(&self, array_column: &str) -> Result<TypedTable> {
        self.explode_impl(&[array_column], None, false)
    }

    /// Explodes several equally long array columns in lockstep and records
    /// each element's position in a new Int64 column placed before the first
    /// exploded one.
    ///
    /// With `outer`, a row whose arrays are empty still yields one row, with
    /// position -1 and empty/zero placeholder cells.
    pub fn explode_with_position(&self, array_columns: &[&str], position_column: &str, outer: bool) -> Result<TypedTable> {
        self.explode_impl(array_columns, Some(position_column), outer)
    }

    fn explode_impl(&self, array_columns: &[&str], position: Option<&str>, outer: bool) -> Result<TypedTable> {
        if array_columns.is_empty() {
            return Err(Error::InvalidArgument("no column to explode".into()));
        }
        let mut exploded = vec![None; self.schema.len()];
        for (slot, name) in array_columns.iter().enumerate() {
            let i = self.schema.index_of(name)?;
            let dt = &self.schema.columns()[i].data_type;
            let elem = dt
                .element()
                .ok_or_else(|| column_type_error(name, "Array", dt))?;
            if exploded[i].is_some() {
                return Err(Error::InvalidArgument(format!("column `{name}` listed twice")));
            }
            exploded[i] = Some((slot, elem.clone()));
        }
        let first = exploded.iter().position(Option::is_some).unwrap();

        let mut cols = Vec::with_capacity(self.schema.len() + 1);
        for (i, col) in self.schema.columns().iter().enumerate() {
            if i == first {
                if let Some(p) = position {
                    cols.push(ColumnDef::new(p, DataType::Int64));
                }
            }
            match &exploded[i] {
                Some((_, elem)) => cols.push(ColumnDef::new(col.name.clone(), elem.clone())),
                None => cols.push(col.clone()),
            }
        }
        let schema = Schema::new(cols)?;
        let width = schema.len() as u32;
        let with_position = position.is_some();
        let names: Vec<String> = array_columns.iter().map(|s| s.to_string()).collect();

        let rows = self.rows.try_flat_map(move |row| -> Result<Vec<EncodedRow>> {
            let spans = cell_spans(&row)?;
            let mut elements: Vec<Vec<Range<usize>>> = vec![Vec::new(); names.len()];
            for (i, e) in exploded.iter().enumerate() {
                if let Some((slot, _)) = e {
                    elements[*slot] = element_spans(&row, spans[i].clone())?;
                }
            }
            let n = elements[0].len();
            if let Some(k) = elements.iter().position(|e| e.len() != n) {
                return Err(Error::InvalidArgument(format!(
                    "cannot explode together: `{}` has {} elements, `{}` has {}",
                    names[0],
                    n,
                    names[k],
                    elements[k].len()
                )));
            }
            let emit = |pos: Option<usize>| {
                let mut out = Vec::with_capacity(row.len());
                out.extend_from_slice(&width.to_le_bytes());
                for (i, span) in spans.iter().enumerate() {
                    if i == first && with_position {
                        push_int(&mut out, pos.map_or(-1, |p| p as i64));
                    }
                    match (&exploded[i], pos) {
                        (Some((slot, _)), Some(p)) => out.extend_from_slice(&row[elements[*slot][p].clone()]),
                        (Some((_, elem)), None) => default_cell(elem, &mut out),
                        (None, _) => out.extend_from_slice(&row[span.clone()]),
                    }
                }
                out
            };
            if n == 0 {
                return Ok(if outer { vec![emit(None)] } else { Vec::new() });
            }
            Ok((0..n).map(|p| emit(Some(p))).collect())
        });
        Ok(self.derive(schema, rows))
    }

    /// Appends `new_column` holding the number of Unicode scalar values of
    /// the Text column `text_column`.
    pub fn with_length_column(&self, text_column: &str, new_column: &str) -> Result<TypedTable> {
        let i = self.schema.index_of(text_column)?;
        let dt = &self.schema.columns()[i].data_type;
        if *dt != DataType::Text {
            return Err(column_type_error(text_column, "Text", dt));
        }
        let mut cols = self.schema.columns().to_vec();
        cols.push(ColumnDef::new(new_column, DataType::Int64));
        let schema = Schema::new(cols)?;
        let rows = self.rows.try_map(move |row| -> Result<EncodedRow> {
            let spans = cell_spans(&row)?;
            let chars = text_at(&row, spans[i].clone())?.chars().count() as i64;
            let mut out = widened(&row)?;
            push_int(&mut out, chars);
            Ok(out)
        });
        Ok(self.derive(schema, rows))
    }

    /// Appends `new_column` holding the element count of `array_column`.
    pub fn with_size_column(&self, array_column: &str, new_column: &str) -> Result<TypedTable> {
        let i = self.schema.index_of(array_column)?;
        let dt = &self.schema.columns()[i].data_type;
        if dt.is_scalar() {
            return Err(column_type_error(array_column, "Array", dt));
        }
        let mut cols = self.schema.columns().to_vec();
        cols.push(ColumnDef::new(new_column, DataType::Int64));
        let schema = Schema::new(cols)?;
        let rows = self.rows.try_map(move |row| -> Result<EncodedRow> {
            let spans = cell_spans(&row)?;
            let n = read_u32(&row, spans[i].start + 1)? as i64;
            let mut out = widened(&row)?;
            push_int(&mut out, n);
            Ok(out)
        });
        Ok(self.derive(schema, rows))
    }

    pub fn with_column_renamed(&self, from: &str, to: &str) -> Result<TypedTable> {
        let i = self.schema.index_of(from)?;
        let mut cols = self.schema.columns().to_vec();
        cols[i].name = to.to_owned();
        let schema = Schema::new(cols)?;
        Ok(self.derive(schema, self.rows.clone()))
    }

    /// One flat document per row, keyed by column name in schema order.
    pub fn to_documents(&self) -> Result<RecordCollection<Document>> {
        if let Some(c) = self.schema.columns().iter().find(|c| !c.data_type.is_scalar()) {
            return Err(Error::ColumnType {
                column: c.name.clone(),
                expected: "a scalar type (explode array columns before writing documents)".into(),
                found: c.data_type.to_string(),
            });
        }
        let keys: Arc<[String]> = self.schema.names().into();
        let schema = self.schema.clone();
        Ok(self.rows.try_map(move |row| -> Result<Document> {
            let values = decode_row(&schema, &row)?
                .into_iter()
                .map(|c| match c {
                    Cell::Text(s) => FieldValue::Text(s),
                    Cell::Int64(n) => FieldValue::Int(n),
                    Cell::Float64(x) => FieldValue::Float(x),
                    Cell::Array(_) => unreachable!("scalar schema checked above"),
                })
                .collect();
            Document::new(keys.clone(), values)
        }))
    }
}
