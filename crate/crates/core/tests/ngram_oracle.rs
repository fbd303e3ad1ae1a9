mod common;

use std::collections::HashMap;

use minireduce::ngram::{build_dictionary, build_documents, build_three_grams, build_two_grams, tokenize, CollectionKind};
use minireduce::{Backend, JobContext, RecordCollection};

use common::{fixture, read_fixture, reference_counts, reference_tokens, sorted, CORPORA};

fn corpus(ctx: &JobContext, name: &str) -> RecordCollection<String> {
    ctx.read_text_lines(fixture(name), 4).unwrap()
}

#[test]
fn tokenizer_matches_reference() {
    for name in CORPORA.iter().chain(["tiny.txt"].iter()) {
        for line in read_fixture(name).lines() {
            assert_eq!(tokenize(line), reference_tokens(line), "{line}");
        }
    }
    let tricky = "«Dell'Italia» l’uomo 'quoted' po' E’ TRIBÙ 1946-2024 ’’ x''y";
    assert_eq!(tokenize(tricky), reference_tokens(tricky));
}

#[test]
fn collections_match_sequential_counts() {
    let ctx = JobContext::new(3).unwrap();
    for name in CORPORA.iter().chain(["tiny.txt"].iter()) {
        let text = read_fixture(name);
        let lines = corpus(&ctx, name);
        for backend in Backend::ALL {
            let dict: HashMap<String, u64> = build_dictionary(&lines, backend)
                .unwrap()
                .collect()
                .unwrap()
                .into_iter()
                .map(|e| {
                    assert_eq!(e.chars, e.term.chars().count() as u64);
                    (e.term, e.freq)
                })
                .collect();
            assert_eq!(dict, reference_counts(&text, 1), "{name} {backend}");

            let two: HashMap<String, u64> = build_two_grams(&lines, backend)
                .unwrap()
                .collect()
                .unwrap()
                .into_iter()
                .map(|e| (format!("{} {}", e.w1, e.w2), e.freq))
                .collect();
            assert_eq!(two, reference_counts(&text, 2), "{name} {backend}");

            let three: HashMap<String, u64> = build_three_grams(&lines, backend)
                .unwrap()
                .collect()
                .unwrap()
                .into_iter()
                .map(|e| (format!("{} {} {}", e.w1, e.w2, e.w3), e.freq))
                .collect();
            assert_eq!(three, reference_counts(&text, 3), "{name} {backend}");
        }
    }
}

#[test]
fn backends_write_identical_documents() {
    let ctx = JobContext::new(4).unwrap();
    for name in CORPORA {
        let lines = corpus(&ctx, name);
        for kind in CollectionKind::ALL {
            let docs = |b| {
                sorted(
                    build_documents(kind, &lines, b)
                        .unwrap()
                        .collect()
                        .unwrap()
                        .iter()
                        .map(|d| d.to_json().unwrap())
                        .collect(),
                )
            };
            assert_eq!(docs(Backend::Records), docs(Backend::Table), "{name} {kind}");
        }
    }
}

#[test]
fn fixture_corpora_are_large_enough_and_ordered() {
    for name in CORPORA {
        let text = read_fixture(name);
        let tokens: usize = text.lines().map(|l| reference_tokens(l).len()).sum();
        assert!(tokens >= 10_000, "{name}: {tokens}");
        let (d, t2, t3) = (
            reference_counts(&text, 1).len(),
            reference_counts(&text, 2).len(),
            reference_counts(&text, 3).len(),
        );
        assert!(d <= t2 && t2 <= t3, "{name}: {d} {t2} {t3}");
    }
}

#[test]
fn tiny_dictionary_spot_checks() {
    let ctx = JobContext::new(2).unwrap();
    let dict: HashMap<String, u64> = build_dictionary(&corpus(&ctx, "tiny.txt"), Backend::Table)
        .unwrap()
        .collect()
        .unwrap()
        .into_iter()
        .map(|e| (e.term, e.freq))
        .collect();
    assert_eq!(dict["città"], 2);
    assert_eq!(dict["caffè"], 2);
    assert_eq!(dict["ciao"], 2);
    assert_eq!(dict["perché"], 2);
    assert_eq!(dict["l'uomo"], 2);
    assert_eq!(dict["1946"], 1);
    assert!(!dict.contains_key("'ciao'"));
}
