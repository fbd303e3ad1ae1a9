//! Seeded generator for synthetic nested lexica.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LexicalEntry, Sense};
use crate::error::{Error, Result};

const SYLLABLES: &[&str] = &[
    "ca", "sa", "to", "ri", "la", "ne", "po", "mo", "ve", "di", "gi", "lo", "fa", "re", "tu", "ba", "pe", "co",
    "se", "mi", "no", "te", "vi", "za", "chi", "glie", "gno", "sco", "tra", "pro", "cen", "por", "ten", "man",
    "fer", "stel", "bri", "qua", "zio", "cor",
];
const ENDINGS: &[&str] = &["", "", "", "", "tà", "rò", "ù", "ì"];
const POS: &[&str] = &["NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "CONJ"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexiconSpec {
    pub entries: u64,
    pub seed: u64,
    /// Senses per entry are drawn uniformly from `0..=max_senses`.
    pub max_senses: u32,
    pub max_examples: u32,
    pub max_forms: u32,
}

impl Default for LexiconSpec {
    fn default() -> Self {
        LexiconSpec {
            entries: 1000,
            seed: 0,
            max_senses: 4,
            max_examples: 3,
            max_forms: 6,
        }
    }
}

/// What the generator wrote; `documents` is Σ max(1, senses) over entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LexiconSummary {
    pub entries: u64,
    pub senses: u64,
    pub documents: u64,
    pub bytes: u64,
}

fn word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=3);
    let mut w = String::new();
    for _ in 0..n {
        w.push_str(SYLLABLES[rng.gen_range(0..SYLLABLES.len())]);
    }
    w.push_str(ENDINGS[rng.gen_range(0..ENDINGS.len())]);
    w
}

fn sentence(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    let mut words: Vec<String> = (0..n).map(|_| word(rng)).collect();
    // Quotes and brackets inside strings keep the structural scanner honest.
    match rng.gen_range(0..10) {
        0 => words[0] = format!("\"{}\"", words[0]),
        1 => words[n - 1] = format!("[{}]", words[n - 1]),
        2 => words[0] = format!("{{{}}}", words[0]),
        _ => {}
    }
    words.join(" ")
}

fn entry(rng: &mut ChaCha8Rng, spec: &LexiconSpec) -> LexicalEntry {
    let senses = rng.gen_range(0..=spec.max_senses);
    LexicalEntry {
        lemma: word(rng),
        pos: POS[rng.gen_range(0..POS.len())].to_owned(),
        senses: (0..senses)
            .map(|_| Sense {
                gloss: sentence(rng, 4, 12),
                examples: (0..rng.gen_range(0..=spec.max_examples))
                    .map(|_| sentence(rng, 5, 15))
                    .collect(),
            })
            .collect(),
        forms: (0..rng.gen_range(0..=spec.max_forms)).map(|_| word(rng)).collect(),
    }
}

struct Counting<W> {
    inner: W,
    bytes: u64,
}

impl<W: Write> Write for Counting<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Writes a pretty-printed lexicon. Equal settings always yield equal bytes.
pub fn write_lexicon<W: Write>(out: W, spec: &LexiconSpec) -> std::io::Result<LexiconSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut w = Counting { inner: out, bytes: 0 };
    let mut summary = LexiconSummary::default();
    w.write_all(b"[")?;
    for i in 0..spec.entries {
        let e = entry(&mut rng, spec);
        w.write_all(if i == 0 { b"\n" } else { b",\n" })?;
        serde_json::to_writer_pretty(&mut w, &e)?;
        summary.entries += 1;
        summary.senses += e.senses.len() as u64;
        summary.documents += e.senses.len().max(1) as u64;
    }
    w.write_all(b"\n]\n")?;
    w.flush()?;
    summary.bytes = w.bytes;
    Ok(summary)
}

pub fn generate_lexicon_file(path: impl AsRef<Path>, spec: &LexiconSpec) -> Result<LexiconSummary> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_lexicon(BufWriter::with_capacity(1 << 16, file), spec).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::EntryStream;

    #[test]
    fn deterministic_and_parseable() {
        let spec = LexiconSpec { entries: 200, seed: 7, ..Default::default() };
        let mut a = Vec::new();
        let mut b = Vec::new();
        let sa = write_lexicon(&mut a, &spec).unwrap();
        write_lexicon(&mut b, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa.bytes, a.len() as u64);

        let parsed: Vec<LexicalEntry> = serde_json::from_slice(&a).unwrap();
        assert_eq!(parsed.len(), 200);
        let streamed = EntryStream::new(a.as_slice()).collect::<Result<Vec<_>>>().unwrap();
        assert_eq!(streamed, parsed);
        let docs: u64 = parsed.iter().map(|e| e.senses.len().max(1) as u64).sum();
        assert_eq!(sa.documents, docs);
        assert!(parsed.iter().any(|e| e.senses.is_empty()));
    }

    #[test]
    fn zero_entries() {
        let mut out = Vec::new();
        write_lexicon(&mut out, &LexiconSpec { entries: 0, ..Default::default() }).unwrap();
        assert!(EntryStream::new(out.as_slice()).next().is_none());
    }
}
