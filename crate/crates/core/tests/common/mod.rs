#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

pub const CORPORA: [&str; 3] = ["corpus_small.txt", "corpus_medium.txt", "corpus_large.txt"];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// Character-at-a-time reference tokenizer.
pub fn reference_tokens(line: &str) -> Vec<String> {
    fn flush(buf: &mut String, out: &mut Vec<String>) {
        let apostrophe = |c: char| c == '\'' || c == '’';
        let t = buf.trim_start_matches(apostrophe).trim_end_matches(apostrophe);
        if !t.is_empty() {
            out.push(t.to_lowercase());
        }
        buf.clear();
    }
    let mut out = Vec::new();
    let mut buf = String::new();
    for c in line.chars() {
        if c.is_alphanumeric() || c == '\'' || c == '’' {
            buf.push(c);
        } else {
            flush(&mut buf, &mut out);
        }
    }
    flush(&mut buf, &mut out);
    out
}

/// Sequential n-gram counts, tokens joined by a space.
pub fn reference_counts(text: &str, n: usize) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for line in text.lines() {
        let toks = reference_tokens(line);
        if toks.len() < n {
            continue;
        }
        for i in 0..=toks.len() - n {
            *counts.entry(toks[i..i + n].join(" ")).or_insert(0) += 1;
        }
    }
    counts
}

pub fn sorted<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v
}

pub fn parse_hex(text: &str) -> Vec<u8> {
    text.split_whitespace().map(|b| u8::from_str_radix(b, 16).unwrap()).collect()
}
