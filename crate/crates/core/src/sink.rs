//! JSON Lines document store.
//!
//! A collection lives at `<root>/<db>/<collection>/` and holds one
//! `part-NNNNN.jsonl` file per written partition plus `manifest.json` once it
//! is finalized. Until then an `_INCOMPLETE` marker sits next to the parts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const INCOMPLETE_MARKER: &str = "_INCOMPLETE";

/// Scalar value of a document field.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Text(String),
    Int(i64),
    Float(f64),
}

impl FieldValue {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            FieldValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            FieldValue::Int(n) => Some(*n),
            _ => None,
        }
    }
}

impl From<&str> for FieldValue {
    fn from(s: &str) -> Self {
        FieldValue::Text(s.to_owned())
    }
}

impl From<String> for FieldValue {
    fn from(s: String) -> Self {
        FieldValue::Text(s)
    }
}

impl From<i64> for FieldValue {
    fn from(v: i64) -> Self {
        FieldValue::Int(v)
    }
}

impl From<f64> for FieldValue {
    fn from(v: f64) -> Self {
        FieldValue::Float(v)
    }
}

/// A flat key-value document. Keys keep their insertion (schema) order and
/// are shared between documents of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    keys: Arc<[String]>,
    values: Vec<FieldValue>,
}

impl Document {
    pub fn new(keys: Arc<[String]>, values: Vec<FieldValue>) -> Result<Self> {
        if keys.len() != values.len() {
            return Err(Error::Serialization(format!(
                "{} keys but {} values",
                keys.len(),
                values.len()
            )));
        }
        Ok(Document { keys, values })
    }

    pub fn from_pairs<K: Into<String>>(pairs: impl IntoIterator<Item = (K, FieldValue)>) -> Self {
        let (keys, values): (Vec<String>, Vec<FieldValue>) =
            pairs.into_iter().map(|(k, v)| (k.into(), v)).unzip();
        Document {
            keys: keys.into(),
            values,
        }
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn values(&self) -> &[FieldValue] {
        &self.values
    }

    pub fn get(&self, key: &str) -> Option<&FieldValue> {
        self.keys.iter().position(|k| k == key).map(|i| &self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Appends the canonical JSON form: no whitespace, keys in document
    /// order, no trailing newline.
    pub fn write_json(&self, out: &mut String) -> Result<()> {
        out.push('{');
        for (i, (k, v)) in self.keys.iter().zip(&self.values).enumerate() {
            if i > 0 {
                out.push(',');
            }
            push_json_string(out, k);
            out.push(':');
            match v {
                FieldValue::Text(s) => push_json_string(out, s),
                FieldValue::Int(n) => {
                    let _ = write!(out, "{n}");
                }
                FieldValue::Float(x) => {
                    if !x.is_finite() {
                        return Err(Error::Serialization(format!(
                            "field `{k}` holds non-finite number {x}"
                        )));
                    }
                    out.push_str(&serde_json::to_string(x).expect("finite f64 serializes"));
                }
            }
        }
        out.push('}');
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = String::new();
        self.write_json(&mut s)?;
        Ok(s)
    }

    /// Builds a document from a JSON object whose values are all scalars.
    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Serialization(format!("expected a JSON object, got {value}")))?;
        let mut pairs = Vec::with_capacity(obj.len());
        for (k, v) in obj {
            let field = match v {
                serde_json::Value::String(s) => FieldValue::Text(s.clone()),
                serde_json::Value::Number(n) => match n.as_i64() {
                    Some(i) => FieldValue::Int(i),
                    None => FieldValue::Float(n.as_f64().unwrap_or(f64::NAN)),
                },
                other => {
                    return Err(Error::Serialization(format!(
                        "field `{k}` is not a flat scalar: {other}"
                    )))
                }
            };
            pairs.push((k.clone(), field));
        }
        Ok(Document::from_pairs(pairs))
    }

    pub fn from_json(line: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| Error::Serialization(e.to_string()))?;
        Self::from_json_value(&value)
    }
}

fn push_json_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionManifest {
    pub collection_name: String,
    pub document_count: u64,
    pub part_files: Vec<String>,
    pub completed: bool,
}

impl CollectionManifest {
    pub fn load(collection_dir: impl AsRef<Path>) -> Result<Self> {
        let path = collection_dir.as_ref().join(MANIFEST_FILE);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
    }
}

fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() || !name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
        return Err(Error::InvalidName(name.to_owned()));
    }
    Ok(())
}

/// An open collection accepting partition writes from any thread.
#[derive(Debug)]
pub struct DocumentSink {
    db_name: String,
    collection_name: String,
    dir: PathBuf,
    written: Mutex<BTreeMap<usize, String>>,
}

/// Opens `<root>/<db>/<name>/` for writing.
///
/// Leftovers of an unfinished earlier run are cleared; a completed collection
/// is never overwritten.
pub fn open_collection(db: &str, name: &str, root: impl AsRef<Path>) -> Result<DocumentSink> {
    validate_name(db)?;
    validate_name(name)?;
    let dir = root.as_ref().join(db).join(name);

    if let Ok(m) = CollectionManifest::load(&dir) {
        if m.completed {
            return Err(Error::CollectionConflict(dir));
        }
    }
    if dir.exists() {
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let fname = entry.file_name();
            let fname = fname.to_string_lossy();
            if fname.starts_with("part-") || fname == MANIFEST_FILE {
                fs::remove_file(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
            }
        }
    }
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let marker = dir.join(INCOMPLETE_MARKER);
    File::create(&marker).map_err(|e| Error::io(&marker, e))?;

    Ok(DocumentSink {
        db_name: db.to_owned(),
        collection_name: name.to_owned(),
        dir,
        written: Mutex::new(BTreeMap::new()),
    })
}

pub fn part_file_name(index: usize) -> String {
    format!("part-{index:05}.jsonl")
}

impl DocumentSink {
    pub fn db_name(&self) -> &str {
        &self.db_name
    }

    pub fn collection_name(&self) -> &str {
        &self.collection_name
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `docs` as `part-<index>.jsonl`, one canonical JSON object per
    /// line, and returns the file name.
    pub fn write_partition(&self, index: usize, docs: &[Document]) -> Result<String> {
        let name = part_file_name(index);
        {
            let mut written = self.written.lock().unwrap();
            if written.contains_key(&index) {
                return Err(Error::InvalidArgument(format!("part {index} already written")));
            }
            written.insert(index, name.clone());
        }
        let path = self.dir.join(&name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::with_capacity(1 << 16, file);
        let mut line = String::with_capacity(128);
        for doc in docs {
            line.clear();
            doc.write_json(&mut line)?;
            line.push('\n');
            w.write_all(line.as_bytes()).map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(name)
    }

    /// Re-counts every written part, writes `manifest.json` and drops the
    /// incomplete marker.
    pub fn finalize(self) -> Result<CollectionManifest> {
        let written = self.written.into_inner().unwrap();
        let mut document_count = 0;
        for name in written.values() {
            let path = self.dir.join(name);
            if !path.is_file() {
                return Err(Error::MissingPart(path));
            }
            document_count += count_lines(&path)?;
        }
        let manifest = CollectionManifest {
            collection_name: self.collection_name.clone(),
            document_count,
            part_files: written.into_values().collect(),
            completed: true,
        };
        let path = self.dir.join(MANIFEST_FILE);
        let mut body = serde_json::to_string(&manifest).map_err(|e| Error::Serialization(e.to_string()))?;
        body.push('\n');
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        let marker = self.dir.join(INCOMPLETE_MARKER);
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
        Ok(manifest)
    }
}

fn count_lines(path: &Path) -> Result<u64> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 16, file);
    let mut n = 0;
    loop {
        let buf = reader.fill_buf().map_err(|e| Error::io(path, e))?;
        if buf.is_empty() {
            break;
        }
        n += buf.iter().filter(|&&b| b == b'\n').count() as u64;
        let len = buf.len();
        reader.consume(len);
    }
    Ok(n)
}

/// Reads back every document of a finalized collection, parts in manifest
/// order.
pub fn read_collection(collection_dir: impl AsRef<Path>) -> Result<Vec<Document>> {
    let dir = collection_dir.as_ref();
    let manifest = CollectionManifest::load(dir)?;
    let mut docs = Vec::with_capacity(manifest.document_count as usize);
    for name in &manifest.part_files {
        let path = dir.join(name);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            docs.push(Document::from_json(&line)?);
        }
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(term: &str, freq: i64, chars: i64) -> Document {
        Document::from_pairs([
            ("term", FieldValue::from(term)),
            ("freq", FieldValue::Int(freq)),
            ("chars", FieldValue::Int(chars)),
        ])
    }

    #[test]
    fn canonical_line() {
        assert_eq!(doc("a", 2, 1).to_json().unwrap(), r#"{"term":"a","freq":2,"chars":1}"#);
        let d = Document::from_pairs([("q", FieldValue::from("say \"ciao\"\n")), ("x", FieldValue::Float(0.5))]);
        assert_eq!(d.to_json().unwrap(), r#"{"q":"say \"ciao\"\n","x":0.5}"#);
    }

    #[test]
    fn non_finite_float_is_rejected() {
        let d = Document::from_pairs([("x", FieldValue::Float(f64::NAN))]);
        assert!(matches!(d.to_json(), Err(Error::Serialization(_))));
    }

    #[test]
    fn nested_json_is_not_a_document() {
        let v = serde_json::json!({"a": 1, "b": [1, 2]});
        assert!(matches!(Document::from_json_value(&v), Err(Error::Serialization(_))));
        let v = serde_json::json!({"a": {"b": 1}});
        assert!(Document::from_json_value(&v).is_err());
        let v = serde_json::json!({"a": null});
        assert!(Document::from_json_value(&v).is_err());
    }

    #[test]
    fn json_round_trip_keeps_key_order() {
        let d = Document::from_pairs([
            ("z", FieldValue::from("è")),
            ("a", FieldValue::Int(-3)),
            ("m", FieldValue::Float(2.0)),
        ]);
        let back = Document::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn open_creates_directory_and_marker() {
        let tmp = tempfile::tempdir().unwrap();
        let sink = open_collection("paisa", "Dictionary", tmp.path()).unwrap();
        let dir = tmp.path().join("paisa").join("Dictionary");
        assert!(dir.is_dir());
        assert_eq!(sink.dir(), dir);
        assert!(dir.join(INCOMPLETE_MARKER).exists());
    }

    #[test]
    fn invalid_names() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(
            open_collection("t", "Two Grams", tmp.path()),
            Err(Error::InvalidName(_))
        ));
        assert!(matches!(open_collection("", "x", tmp.path()), Err(Error::InvalidName(_))));
        assert!(open_collection("db-1", "x", tmp.path()).is_err());
    }

    #[test]
    fn reopening_completed_collection_conflicts() {
        let tmp = tempfile::tempdir().unwrap();
        open_collection("db", "c", tmp.path()).unwrap().finalize().unwrap();
        assert!(matches!(
            open_collection("db", "c", tmp.path()),
            Err(Error::CollectionConflict(_))
        ));
    }

    #[test]
    fn reopening_incomplete_collection_clears_parts() {
        let tmp = tempfile::tempdir().unwrap();
        let s = open_collection("db", "c", tmp.path()).unwrap();
        s.write_partition(7, &[doc("a", 1, 1)]).unwrap();
        drop(s);
        let s = open_collection("db", "c", tmp.path()).unwrap();
        assert!(!s.dir().join(part_file_name(7)).exists());
        assert_eq!(s.finalize().unwrap().document_count, 0);
    }

    #[test]
    fn write_and_finalize() {
        let tmp = tempfile::tempdir().unwrap();
        let sink = open_collection("db", "c", tmp.path()).unwrap();
        assert_eq!(sink.write_partition(0, &[]).unwrap(), "part-00000.jsonl");
        assert_eq!(fs::read(sink.dir().join("part-00000.jsonl")).unwrap().len(), 0);

        sink.write_partition(1, &[doc("a", 2, 1), doc("b", 1, 1), doc("c", 1, 1)]).unwrap();
        sink.write_partition(2, &[doc("d", 1, 1), doc("e", 1, 1)]).unwrap();
        assert!(sink.write_partition(2, &[]).is_err());
        let first = fs::read_to_string(sink.dir().join("part-00001.jsonl")).unwrap();
        assert_eq!(first.lines().next().unwrap(), r#"{"term":"a","freq":2,"chars":1}"#);

        let dir = sink.dir().to_path_buf();
        let m = sink.finalize().unwrap();
        assert_eq!(m.document_count, 5);
        assert!(m.completed);
        assert_eq!(m.part_files.len(), 3);
        assert!(!dir.join(INCOMPLETE_MARKER).exists());
        assert_eq!(CollectionManifest::load(&dir).unwrap(), m);
        assert_eq!(read_collection(&dir).unwrap().len(), 5);
    }

    #[test]
    fn empty_finalize() {
        let tmp = tempfile::tempdir().unwrap();
        let m = open_collection("db", "c", tmp.path()).unwrap().finalize().unwrap();
        assert_eq!(m.document_count, 0);
        assert!(m.part_files.is_empty());
    }

    #[test]
    fn finalize_detects_missing_part() {
        let tmp = tempfile::tempdir().unwrap();
        let sink = open_collection("db", "c", tmp.path()).unwrap();
        sink.write_partition(0, &[doc("a", 1, 1)]).unwrap();
        fs::remove_file(sink.dir().join("part-00000.jsonl")).unwrap();
        assert!(matches!(sink.finalize(), Err(Error::MissingPart(_))));
    }

    #[test]
    fn thousand_docs_thousand_lines() {
        let tmp = tempfile::tempdir().unwrap();
        let sink = open_collection("db", "c", tmp.path()).unwrap();
        let docs: Vec<Document> = (0..1000).map(|i| doc(&format!("t{i}"), i, 2)).collect();
        let name = sink.write_partition(3, &docs).unwrap();
        let text = fs::read_to_string(sink.dir().join(name)).unwrap();
        assert_eq!(text.lines().count(), 1000);
        for (line, d) in text.lines().zip(&docs) {
            assert_eq!(&Document::from_json(line).unwrap(), d);
        }
    }
}
