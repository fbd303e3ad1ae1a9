//! Pull-based reader for a JSON document whose top level is one large array.
//!
//! The reader never holds more than its fixed read buffer plus the bytes of
//! the entry being parsed: a small structural scanner finds where each array
//! element starts and ends, and only that slice is handed to `serde_json`.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde_json::error::Category;

use super::LexicalEntry;
use crate::error::{Error, Result};

pub const READ_BUFFER_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Start,
    InArray { first: bool },
    AfterArray,
    Done,
}

pub struct EntryStream<R> {
    reader: BufReader<R>,
    source: Option<PathBuf>,
    offset: u64,
    state: State,
    entry: Vec<u8>,
    peak_entry_capacity: usize,
    ordinal: u64,
    entries_read: u64,
    skipped: u64,
    skip_malformed: bool,
}

/// Opens `path` for streaming.
pub fn stream_entries(path: impl AsRef<Path>) -> Result<EntryStream<File>> {
    EntryStream::open(path)
}

impl EntryStream<File> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut s = EntryStream::new(file);
        s.source = Some(path.to_path_buf());
        Ok(s)
    }
}

fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r')
}

impl<R: Read> EntryStream<R> {
    pub fn new(reader: R) -> Self {
        EntryStream {
            reader: BufReader::with_capacity(READ_BUFFER_BYTES, reader),
            source: None,
            offset: 0,
            state: State::Start,
            entry: Vec::new(),
            peak_entry_capacity: 0,
            ordinal: 0,
            entries_read: 0,
            skipped: 0,
            skip_malformed: false,
        }
    }

    /// Skip entries that are valid JSON but not lexicon entries, counting
    /// them instead of failing.
    pub fn skip_malformed(mut self, skip: bool) -> Self {
        self.skip_malformed = skip;
        self
    }

    pub fn entries_read(&self) -> u64 {
        self.entries_read
    }

    pub fn entries_skipped(&self) -> u64 {
        self.skipped
    }

    /// Largest number of bytes buffered at once: the read buffer plus the
    /// entry buffer at its high-water mark.
    pub fn peak_buffer_bytes(&self) -> u64 {
        (self.reader.capacity() + self.peak_entry_capacity) as u64
    }


    fn json_err(&self, offset: u64, message: impl Into<String>) -> Error {
        let path = match self.state {
            State::Start => "$".to_string(),
            State::AfterArray | State::Done => "$ (after array)".to_string(),
            State::InArray { .. } => format!("$[{}]", self.ordinal),
        };
        Error::Json {
            offset,
            path,
            message: message.into(),
        }
    }

    /// Consumes whitespace and peeks at the next byte.
    fn skip_ws(&mut self) -> Result<Option<u8>> {
        loop {
            let buf = match self.reader.fill_buf() {
                Ok(b) => b,
                Err(e) => return Err(Error::io(self.source.clone().unwrap_or_default(), e)),
            };
            if buf.is_empty() {
                return Ok(None);
            }
            match buf.iter().position(|&b| !is_ws(b)) {
                Some(i) => {
                    let b = buf[i];
                    self.reader.consume(i);
                    self.offset += i as u64;
                    return Ok(Some(b));
                }
                None => {
                    let n = buf.len();
                    self.reader.consume(n);
                    self.offset += n as u64;
                }
            }
        }
    }

    fn bump(&mut self) {
        self.reader.consume(1);
        self.offset += 1;
    }

    /// Copies one complete JSON value into the entry buffer.
    fn capture(&mut self, first: u8) -> Result<()> {
        self.entry.clear();
        let start = self.offset;
        let mut depth: u32 = 0;
        let mut in_str = false;
        let mut escaped = false;
        let scalar = !matches!(first, b'{' | b'[' | b'"');
        loop {
            let buf = match self.reader.fill_buf() {
                Ok(b) => b,
                Err(e) => return Err(Error::io(self.source.clone().unwrap_or_default(), e)),
            };
            if buf.is_empty() {
                if scalar && !self.entry.is_empty() {
                    break;
                }
                return Err(self.json_err(self.offset, format!("unexpected end of input in value starting at byte {start}")));
            }
            let mut end = None;
            for (i, &c) in buf.iter().enumerate() {
                if scalar {
                    if is_ws(c) || c == b',' || c == b']' {
                        end = Some(i);
                        break;
                    }
                    continue;
                }
                if in_str {
                    if escaped {
                        escaped = false;
                    } else if c == b'\\' {
                        escaped = true;
                    } else if c == b'"' {
                        in_str = false;
                        if depth == 0 {
                            end = Some(i + 1);
                            break;
                        }
                    }
                    continue;
                }
                match c {
                    b'"' => in_str = true,
                    b'{' | b'[' => depth += 1,
                    b'}' | b']' => {
                        depth = depth.saturating_sub(1);
                        if depth == 0 {
                            end = Some(i + 1);
                            break;
                        }
                    }
                    _ => {}
                }
            }
            let n = end.unwrap_or(buf.len());
            self.entry.extend_from_slice(&buf[..n]);
            self.reader.consume(n);
            self.offset += n as u64;
            if end.is_some() {
                break;
            }
        }
        self.peak_entry_capacity = self.peak_entry_capacity.max(self.entry.capacity());
        Ok(())
    }

    /// Byte offset inside the entry buffer of a serde_json line/column.
    fn entry_offset(&self, line: usize, column: usize) -> usize {
        let mut line_start = 0;
        if line > 1 {
            let mut seen = 1;
            for (i, &b) in self.entry.iter().enumerate() {
                if b == b'\n' {
                    seen += 1;
                    if seen == line {
                        line_start = i + 1;
                        break;
                    }
                }
            }
        }
        (line_start + column.saturating_sub(1)).min(self.entry.len())
    }

    fn parse_entry(&mut self, entry_start: u64) -> Result<LexicalEntry> {
        match serde_json::from_slice::<LexicalEntry>(&self.entry) {
            Ok(e) if e.lemma.is_empty() => Err(Error::EntryShape {
                ordinal: self.ordinal,
                message: "empty lemma".into(),
            }),
            Ok(e) => Ok(e),
            Err(e) => match e.classify() {
                Category::Data => Err(Error::EntryShape {
                    ordinal: self.ordinal,
                    message: e.to_string(),
                }),
                _ => {
                    let at = entry_start + self.entry_offset(e.line(), e.column()) as u64;
                    Err(self.json_err(at, e.to_string()))
                }
            },
        }
    }

    fn fail(&mut self, e: Error) -> Option<Result<LexicalEntry>> {
        self.state = State::Done;
        Some(Err(e))
    }
}

impl<R: Read> Iterator for EntryStream<R> {
    type Item = Result<LexicalEntry>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.state {
                State::Done => return None,
                State::Start => match self.skip_ws() {
                    Ok(Some(b'[')) => {
                        self.bump();
                        self.state = State::InArray { first: true };
                    }
                    Ok(Some(b)) => {
                        let e = self.json_err(self.offset, format!("expected '[' but found {:?}", b as char));
                        return self.fail(e);
                    }
                    Ok(None) => {
                        let e = self.json_err(self.offset, "empty input, expected a top-level array");
                        return self.fail(e);
                    }
                    Err(e) => return self.fail(e),
                },
                State::AfterArray => match self.skip_ws() {
                    Ok(None) => {
                        self.state = State::Done;
                        return None;
                    }
                    Ok(Some(_)) => {
                        let e = self.json_err(self.offset, "trailing data after the top-level array");
                        return self.fail(e);
                    }
                    Err(e) => return self.fail(e),
                },
                State::InArray { first } => {
                    let mut next = match self.skip_ws() {
                        Ok(b) => b,
                        Err(e) => return self.fail(e),
                    };
                    if !first {
                        match next {
                            Some(b',') => {
                                self.bump();
                                next = match self.skip_ws() {
                                    Ok(b) => b,
                                    Err(e) => return self.fail(e),
                                };
                                if next == Some(b']') {
                                    let e = self.json_err(self.offset, "trailing comma before ']'");
                                    return self.fail(e);
                                }
                            }
                            Some(b']') => {}
                            Some(b) => {
                                let e = self.json_err(self.offset, format!("expected ',' or ']' but found {:?}", b as char));
                                return self.fail(e);
                            }
                            None => {}
                        }
                    }
                    let b = match next {
                        Some(b']') => {
                            self.bump();
                            self.state = State::AfterArray;
                            continue;
                        }
                        Some(b) => b,
                        None => {
                            let e = self.json_err(self.offset, "unexpected end of input inside the top-level array");
                            return self.fail(e);
                        }
                    };
                    let entry_start = self.offset;
                    if let Err(e) = self.capture(b) {
                        return self.fail(e);
                    }
                    self.state = State::InArray { first: false };
                    let result = self.parse_entry(entry_start);
                    self.ordinal += 1;
                    match result {
                        Ok(entry) => {
                            self.entries_read += 1;
                            return Some(Ok(entry));
                        }
                        Err(Error::EntryShape { .. }) if self.skip_malformed => {
                            self.skipped += 1;
                            continue;
                        }
                        Err(e @ Error::EntryShape { .. }) => return Some(Err(e)),
                        Err(e) => return self.fail(e),
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(json: &str) -> Vec<Result<LexicalEntry>> {
        EntryStream::new(json.as_bytes()).collect()
    }

    const ONE: &str = r#"[
      {"lemma": "casa", "pos": "NOUN",
       "senses": [{"gloss": "edificio", "examples": ["la casa è \"grande\"", "}]"]},
                  {"gloss": "famiglia", "examples": []}],
       "forms": ["case"]}
    ]"#;

    #[test]
    fn empty_array() {
        assert!(entries("[]").is_empty());
        assert!(entries("  [ \n ]  \n").is_empty());
    }

    #[test]
    fn single_entry_with_tricky_strings() {
        let got = entries(ONE);
        assert_eq!(got.len(), 1);
        let e = got.into_iter().next().unwrap().unwrap();
        assert_eq!(e.lemma, "casa");
        assert_eq!(e.senses.len(), 2);
        assert_eq!(e.senses[0].examples[1], "}]");
    }

    #[test]
    fn counters() {
        let json = r#"[{"lemma":"a","pos":"X","senses":[],"forms":[]},{"lemma":"b","pos":"Y","senses":[],"forms":[]}]"#;
        let mut s = EntryStream::new(json.as_bytes());
        assert_eq!(s.by_ref().filter(|r| r.is_ok()).count(), 2);
        assert_eq!(s.entries_read(), 2);
        assert!(s.peak_buffer_bytes() >= READ_BUFFER_BYTES as u64);
    }

    #[test]
    fn malformed_json_reports_offset_and_path() {
        let json = "[{\"lemma\":\"a\",\"pos\":\"X\",\"senses\":[],\"forms\":[]},\n {\"lemma\": \"b\" \"pos\": 1}]";
        let got = entries(json);
        assert!(got[0].is_ok());
        match &got[1] {
            Err(Error::Json { offset, path, .. }) => {
                assert_eq!(path, "$[1]");
                assert_eq!(&json[*offset as usize..*offset as usize + 5], "\"pos\"");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn structural_errors() {
        for bad in ["", "{}", "[{\"lemma\":\"a\",\"pos\":\"X\"} {}]", "[{\"lemma\":\"a\",\"pos\":\"X\"},]", "[{\"lemma\":\"a\"", "[] x"] {
            let got = entries(bad);
            assert!(
                matches!(got.last(), Some(Err(Error::Json { .. }))),
                "{bad:?} gave {got:?}"
            );
        }
    }

    #[test]
    fn shape_errors_strict_and_skipped() {
        let json = r#"[{"lemma":"a","pos":"X"}, 42, {"pos":"Y"}, {"lemma":"","pos":"Z"}, {"lemma":"b","pos":"X"}]"#;
        let got = entries(json);
        assert!(got[0].is_ok());
        assert!(matches!(got[1], Err(Error::EntryShape { ordinal: 1, .. })));
        assert!(matches!(got[2], Err(Error::EntryShape { ordinal: 2, .. })));
        assert!(matches!(got[3], Err(Error::EntryShape { ordinal: 3, .. })));
        assert!(got[4].is_ok());

        let mut s = EntryStream::new(json.as_bytes()).skip_malformed(true);
        let ok: Vec<_> = s.by_ref().collect::<Result<Vec<_>>>().unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(s.entries_skipped(), 3);
    }
}
