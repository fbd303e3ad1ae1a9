//! Binary row format and encoders.
//!
//! All integers are little-endian. A row is a `u32` cell count followed by
//! the cells. Each cell is a one-byte tag and a payload:
//!
//! | tag    | type    | payload                                      |
//! |--------|---------|----------------------------------------------|
//! | `0x01` | Text    | `u32` byte length, UTF-8 bytes               |
//! | `0x02` | Int64   | 8 bytes, two's complement                    |
//! | `0x03` | Float64 | 8 bytes, IEEE-754 binary64                   |
//! | `0x04` | Array   | `u32` element count, then each element cell |

use std::marker::PhantomData;
use std::ops::Range;
use std::sync::Arc;

use super::schema::{validate, DataType, Schema};
use crate::error::{Error, Result};

pub const TAG_TEXT: u8 = 0x01;
pub const TAG_INT64: u8 = 0x02;
pub const TAG_FLOAT64: u8 = 0x03;
pub const TAG_ARRAY: u8 = 0x04;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int64(i64),
    Float64(f64),
    Array(Vec<Cell>),
}

impl Cell {
    fn type_name(&self) -> String {
        match self {
            Cell::Text(_) => "Text".into(),
            Cell::Int64(_) => "Int64".into(),
            Cell::Float64(_) => "Float64".into(),
            Cell::Array(v) => match v.first() {
                Some(e) => format!("Array({})", e.type_name()),
                None => "Array".into(),
            },
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Cell::Int64(n) => Some(*n),
            _ => None,
        }
    }

    pub fn into_text(self) -> Option<String> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_array(self) -> Option<Vec<Cell>> {
        match self {
            Cell::Array(v) => Some(v),
            _ => None,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int64(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float64(v)
    }
}

pub type Row = Vec<Cell>;

/// An encoded row.
pub type EncodedRow = Vec<u8>;

fn put_len(out: &mut Vec<u8>, n: usize, what: &str) -> Result<()> {
    let n = u32::try_from(n).map_err(|_| Error::Encode {
        ordinal: None,
        message: format!("{what} length {n} exceeds u32"),
    })?;
    out.extend_from_slice(&n.to_le_bytes());
    Ok(())
}

fn encode_cell(dt: &DataType, cell: &Cell, column: &str, out: &mut Vec<u8>) -> Result<()> {
    match (dt, cell) {
        (DataType::Text, Cell::Text(s)) => {
            out.push(TAG_TEXT);
            put_len(out, s.len(), "text")?;
            out.extend_from_slice(s.as_bytes());
        }
        (DataType::Int64, Cell::Int64(n)) => {
            out.push(TAG_INT64);
            out.extend_from_slice(&n.to_le_bytes());
        }
        (DataType::Float64, Cell::Float64(x)) => {
            out.push(TAG_FLOAT64);
            out.extend_from_slice(&x.to_le_bytes());
        }
        (DataType::Array(e), Cell::Array(items)) => {
            out.push(TAG_ARRAY);
            put_len(out, items.len(), "array")?;
            for item in items {
                encode_cell(e, item, column, out)?;
            }
        }
        _ => {
            return Err(Error::Encode {
                ordinal: None,
                message: format!("column `{column}` expects {dt}, got {}", cell.type_name()),
            })
        }
    }
    Ok(())
}

/// Validates `row` against `schema` and appends its encoding to `out`.
pub fn encode_row(schema: &Schema, row: &[Cell], out: &mut Vec<u8>) -> Result<()> {
    if row.len() != schema.len() {
        return Err(Error::Encode {
            ordinal: None,
            message: format!("row has {} cells, schema has {} columns", row.len(), schema.len()),
        });
    }
    put_len(out, row.len(), "row")?;
    for (col, cell) in schema.columns().iter().zip(row) {
        encode_cell(&col.data_type, cell, &col.name, out)?;
    }
    Ok(())
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::RowFormat(msg.into())
}

pub(crate) fn read_u32(bytes: &[u8], pos: usize) -> Result<u32> {
    bytes
        .get(pos..pos + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or_else(|| malformed(format!("truncated length at byte {pos}")))
}

fn read_u64(bytes: &[u8], pos: usize) -> Result<u64> {
    bytes
        .get(pos..pos + 8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
        .ok_or_else(|| malformed(format!("truncated 8-byte value at byte {pos}")))
}

/// Returns the end offset of the cell starting at `pos`.
pub(crate) fn skip_cell(bytes: &[u8], pos: usize) -> Result<usize> {
    let tag = *bytes
        .get(pos)
        .ok_or_else(|| malformed(format!("missing cell tag at byte {pos}")))?;
    match tag {
        TAG_TEXT => {
            let n = read_u32(bytes, pos + 1)? as usize;
            let end = pos + 5 + n;
            if end > bytes.len() {
                return Err(malformed(format!("text at byte {pos} overruns row")));
            }
            Ok(end)
        }
        TAG_INT64 | TAG_FLOAT64 => {
            let end = pos + 9;
            if end > bytes.len() {
                return Err(malformed(format!("number at byte {pos} overruns row")));
            }
            Ok(end)
        }
        TAG_ARRAY => {
            let n = read_u32(bytes, pos + 1)?;
            let mut p = pos + 5;
            for _ in 0..n {
                p = skip_cell(bytes, p)?;
            }
            Ok(p)
        }
        t => Err(malformed(format!("unknown tag 0x{t:02x} at byte {pos}"))),
    }
}

/// Byte ranges of a row's top-level cells.
pub(crate) fn cell_spans(row: &[u8]) -> Result<Vec<Range<usize>>> {
    let n = read_u32(row, 0)? as usize;
    let mut spans = Vec::with_capacity(n);
    let mut p = 4;
    for _ in 0..n {
        let end = skip_cell(row, p)?;
        spans.push(p..end);
        p = end;
    }
    if p != row.len() {
        return Err(malformed(format!("{} trailing bytes", row.len() - p)));
    }
    Ok(spans)
}

/// Byte ranges of the elements of the array cell at `span`.
pub(crate) fn element_spans(row: &[u8], span: Range<usize>) -> Result<Vec<Range<usize>>> {
    if row.get(span.start) != Some(&TAG_ARRAY) {
        return Err(malformed(format!("expected array cell at byte {}", span.start)));
    }
    let n = read_u32(row, span.start + 1)? as usize;
    let mut out = Vec::with_capacity(n);
    let mut p = span.start + 5;
    for _ in 0..n {
        let end = skip_cell(row, p)?;
        out.push(p..end);
        p = end;
    }
    Ok(out)
}

/// Payload of the text cell at `span`.
pub(crate) fn text_at(row: &[u8], span: Range<usize>) -> Result<&str> {
    if row.get(span.start) != Some(&TAG_TEXT) {
        return Err(malformed(format!("expected text cell at byte {}", span.start)));
    }
    std::str::from_utf8(&row[span.start + 5..span.end])
        .map_err(|e| malformed(format!("invalid UTF-8 in text cell: {e}")))
}

fn decode_cell(dt: &DataType, bytes: &[u8], pos: &mut usize) -> Result<Cell> {
    let start = *pos;
    let tag = *bytes
        .get(start)
        .ok_or_else(|| malformed(format!("missing cell tag at byte {start}")))?;
    let cell = match (dt, tag) {
        (DataType::Text, TAG_TEXT) => {
            let end = skip_cell(bytes, start)?;
            *pos = end;
            Cell::Text(text_at(bytes, start..end)?.to_owned())
        }
        (DataType::Int64, TAG_INT64) => {
            *pos = start + 9;
            Cell::Int64(read_u64(bytes, start + 1)? as i64)
        }
        (DataType::Float64, TAG_FLOAT64) => {
            *pos = start + 9;
            Cell::Float64(f64::from_bits(read_u64(bytes, start + 1)?))
        }
        (DataType::Array(e), TAG_ARRAY) => {
            let n = read_u32(bytes, start + 1)? as usize;
            *pos = start + 5;
            let mut items = Vec::with_capacity(n.min(1 << 16));
            for _ in 0..n {
                items.push(decode_cell(e, bytes, pos)?);
            }
            Cell::Array(items)
        }
        (dt, tag) => {
            return Err(malformed(format!(
                "tag 0x{tag:02x} at byte {start} does not match {dt}"
            )))
        }
    };
    Ok(cell)
}

/// Decodes a row and checks it against `schema`.
pub fn decode_row(schema: &Schema, bytes: &[u8]) -> Result<Row> {
    let n = read_u32(bytes, 0)? as usize;
    if n != schema.len() {
        return Err(malformed(format!("row has {n} cells, schema has {} columns", schema.len())));
    }
    let mut pos = 4;
    let mut row = Vec::with_capacity(n);
    for col in schema.columns() {
        row.push(decode_cell(&col.data_type, bytes, &mut pos)?);
    }
    if pos != bytes.len() {
        return Err(malformed(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok(row)
}

/// Encoder between untyped [`Row`]s and the binary format.
#[derive(Debug, Clone, PartialEq)]
pub struct RowEncoder {
    schema: Arc<Schema>,
}

/// Builds the encoder for `schema`, re-checking the schema rules.
pub fn encoder_for(schema: &Schema) -> Result<RowEncoder> {
    validate(schema.columns())?;
    Ok(RowEncoder {
        schema: Arc::new(schema.clone()),
    })
}

impl RowEncoder {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub(crate) fn schema_arc(&self) -> Arc<Schema> {
        self.schema.clone()
    }

    pub fn encode(&self, row: &[Cell]) -> Result<EncodedRow> {
        let mut out = Vec::with_capacity(16 * row.len() + 4);
        encode_row(&self.schema, row, &mut out)?;
        Ok(out)
    }

    pub fn decode(&self, bytes: &[u8]) -> Result<Row> {
        decode_row(&self.schema, bytes)
    }
}

/// A domain type with a fixed tabular shape.
pub trait TableRecord: Clone + Send + Sync + 'static {
    fn schema() -> Schema;
    fn to_row(&self) -> Row;
    fn from_row(row: Row) -> Result<Self>;
}

/// Typed encoder: `T` to binary row and back.
pub struct Encoder<T> {
    rows: RowEncoder,
    _t: PhantomData<fn() -> T>,
}

impl<T> Clone for Encoder<T> {
    fn clone(&self) -> Self {
        Encoder {
            rows: self.rows.clone(),
            _t: PhantomData,
        }
    }
}

impl<T> std::fmt::Debug for Encoder<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Encoder").field("schema", self.rows.schema()).finish()
    }
}

impl<T: TableRecord> Encoder<T> {
    pub fn new() -> Result<Self> {
        Ok(Encoder {
            rows: encoder_for(&T::schema())?,
            _t: PhantomData,
        })
    }

    pub fn schema(&self) -> &Schema {
        self.rows.schema()
    }

    pub fn row_encoder(&self) -> &RowEncoder {
        &self.rows
    }

    pub fn encode(&self, value: &T) -> Result<EncodedRow> {
        self.rows.encode(&value.to_row())
    }

    pub fn decode(&self, bytes: &[u8]) -> Result<T> {
        T::from_row(self.rows.decode(bytes)?)
    }
}

/// Pops the next cell of a row being turned back into an object.
pub fn take_text(cells: &mut std::vec::IntoIter<Cell>, column: &str) -> Result<String> {
    match cells.next() {
        Some(Cell::Text(s)) => Ok(s),
        other => Err(shape_error(column, "Text", other)),
    }
}

pub fn take_int(cells: &mut std::vec::IntoIter<Cell>, column: &str) -> Result<i64> {
    match cells.next() {
        Some(Cell::Int64(n)) => Ok(n),
        other => Err(shape_error(column, "Int64", other)),
    }
}

pub fn take_array(cells: &mut std::vec::IntoIter<Cell>, column: &str) -> Result<Vec<Cell>> {
    match cells.next() {
        Some(Cell::Array(v)) => Ok(v),
        other => Err(shape_error(column, "Array", other)),
    }
}

fn shape_error(column: &str, expected: &str, got: Option<Cell>) -> Error {
    Error::ColumnType {
        column: column.to_owned(),
        expected: expected.to_owned(),
        found: got.map_or_else(|| "nothing".to_owned(), |c| c.type_name()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnDef;

    fn schema(cols: &[(&str, DataType)]) -> Schema {
        Schema::new(cols.iter().map(|(n, t)| ColumnDef::new(*n, t.clone())).collect()).unwrap()
    }

    #[test]
    fn text_round_trip() {
        let enc = encoder_for(&schema(&[("term", DataType::Text)])).unwrap();
        let bytes = enc.encode(&[Cell::from("casa")]).unwrap();
        assert_eq!(bytes, [1, 0, 0, 0, TAG_TEXT, 4, 0, 0, 0, b'c', b'a', b's', b'a']);
        assert_eq!(enc.decode(&bytes).unwrap(), vec![Cell::from("casa")]);
    }

    #[test]
    fn boundary_ints() {
        let enc = encoder_for(&schema(&[("n", DataType::Int64)])).unwrap();
        for v in [0, -1, i64::MIN, i64::MAX] {
            let b = enc.encode(&[Cell::Int64(v)]).unwrap();
            assert_eq!(enc.decode(&b).unwrap(), vec![Cell::Int64(v)]);
        }
        assert_eq!(
            enc.encode(&[Cell::Int64(-1)]).unwrap(),
            [1, 0, 0, 0, TAG_INT64, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff]
        );
    }

    #[test]
    fn rejects_mismatched_objects() {
        let enc = encoder_for(&schema(&[("n", DataType::Int64)])).unwrap();
        assert!(matches!(enc.encode(&[Cell::from("x")]), Err(Error::Encode { .. })));
        assert!(matches!(enc.encode(&[]), Err(Error::Encode { .. })));
        let arr = encoder_for(&schema(&[("a", DataType::array_of(DataType::Text))])).unwrap();
        assert!(arr.encode(&[Cell::Array(vec![Cell::Int64(1)])]).is_err());
    }

    #[test]
    fn decode_rejects_garbage() {
        let enc = encoder_for(&schema(&[("n", DataType::Int64)])).unwrap();
        assert!(enc.decode(&[]).is_err());
        assert!(enc.decode(&[1, 0, 0, 0, TAG_TEXT, 0, 0, 0, 0]).is_err());
        let mut ok = enc.encode(&[Cell::Int64(3)]).unwrap();
        ok.push(0);
        assert!(matches!(enc.decode(&ok), Err(Error::RowFormat(_))));
    }

    #[test]
    fn spans_and_elements() {
        let s = schema(&[
            ("a", DataType::Text),
            ("b", DataType::array_of(DataType::Int64)),
        ]);
        let enc = encoder_for(&s).unwrap();
        let row = enc
            .encode(&[Cell::from("xy"), Cell::Array(vec![Cell::Int64(1), Cell::Int64(2)])])
            .unwrap();
        let spans = cell_spans(&row).unwrap();
        assert_eq!(spans, vec![4..11, 11..34]);
        assert_eq!(text_at(&row, spans[0].clone()).unwrap(), "xy");
        let elems = element_spans(&row, spans[1].clone()).unwrap();
        assert_eq!(elems, vec![16..25, 25..34]);
    }
}
