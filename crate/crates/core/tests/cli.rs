mod common;

use std::path::Path;
use std::process::{Command, Output};

use minireduce::sink::CollectionManifest;

use common::{fixture, read_fixture, reference_counts};

fn minireduce(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minireduce"))
        .args(args)
        .current_dir(cwd)
        .env("MINIREDUCE_WORKERS", "3")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn reduce_dictionary_writes_oracle_count() {
    let tmp = tempfile::tempdir().unwrap();
    let tiny = fixture("tiny.txt");
    let o = minireduce(
        &["reduce", "--input", tiny.to_str().unwrap(), "--db", "t", "--backend", "records", "--collections", "dictionary"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = CollectionManifest::load(tmp.path().join("out/t/Dictionary")).unwrap();
    assert_eq!(manifest.document_count, reference_counts(&read_fixture("tiny.txt"), 1).len() as u64);
    assert!(!tmp.path().join("out/t/TwoGrams").exists());
    assert_eq!(manifest.part_files.len(), 3);
}

#[test]
fn reduce_without_input_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = minireduce(&["reduce", "--db", "t", "--backend", "table"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));

    let o = minireduce(&["reduce", "--input", "missing.txt", "--db", "t", "--backend", "table"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(minireduce(&["reduce", "--bogus"], tmp.path()).status.code(), Some(1));
    assert_eq!(minireduce(&["nope"], tmp.path()).status.code(), Some(1));
}

#[test]
fn invalid_worker_count_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let tiny = fixture("tiny.txt");
    let o = Command::new(env!("CARGO_BIN_EXE_minireduce"))
        .args(["reduce", "--input", tiny.to_str().unwrap(), "--db", "t", "--backend", "table"])
        .current_dir(tmp.path())
        .env("MINIREDUCE_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn job_failure_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "[{\"lemma\": }]").unwrap();
    let o = minireduce(&["ingest-json", "--input", "bad.json", "--db", "d", "--backend", "records"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn reduce_output_is_byte_identical_across_runs_and_backends() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = fixture("corpus_small.txt");
    let mut contents = Vec::new();
    for (db, backend) in [("a", "table"), ("b", "table"), ("c", "records")] {
        let o = minireduce(
            &["reduce", "--input", corpus.to_str().unwrap(), "--db", db, "--backend", backend, "--partitions", "4"],
            tmp.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let mut files = Vec::new();
        for coll in ["Dictionary", "TwoGrams", "ThreeGrams"] {
            let dir = tmp.path().join("out").join(db).join(coll);
            let mut names: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
            names.sort();
            for n in names {
                files.push((coll, n.clone(), std::fs::read(dir.join(n)).unwrap()));
            }
        }
        contents.push(files);
    }
    assert_eq!(contents[0], contents[1]);
    // Across backends the documents agree; the order inside a part may not.
    let lines = |files: &Vec<(&str, std::ffi::OsString, Vec<u8>)>| {
        let mut all: Vec<String> = files
            .iter()
            .flat_map(|(_, _, b)| String::from_utf8(b.clone()).unwrap().lines().map(String::from).collect::<Vec<_>>())
            .collect();
        all.sort();
        all
    };
    assert_eq!(lines(&contents[0]), lines(&contents[2]));
}

#[test]
fn bench_on_tiny_prints_three_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let tiny = fixture("tiny.txt");
    let o = minireduce(
        &["bench", "--input", tiny.to_str().unwrap(), "--db", "t", "--repetitions", "2", "--csv", "bench.csv"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let md = stdout(&o);
    let rows: Vec<&str> = md.lines().skip(2).collect();
    assert_eq!(rows.len(), 3, "{md}");
    for (row, job) in rows.iter().zip(["Dictionary", "TwoGrams", "ThreeGrams"]) {
        let cells: Vec<&str> = row.trim_matches('|').split('|').map(str::trim).collect();
        assert_eq!(cells.len(), 5, "{row}");
        assert_eq!(cells[0], job);
        assert!(cells[4].parse::<f64>().is_ok(), "{row}");
    }

    let csv = std::fs::read_to_string(tmp.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    let o = minireduce(&["report", "--from", "bench.csv", "--format", "markdown"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), md);
    let o = minireduce(&["report", "--from", "bench.csv", "--format", "csv"], tmp.path());
    assert_eq!(stdout(&o), csv);
}

#[test]
fn generated_lexicon_ingests() {
    let tmp = tempfile::tempdir().unwrap();
    let o = minireduce(&["gen-lexicon", "--entries", "300", "--seed", "4", "--out", "lex.json"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let documents: u64 = stdout(&o)
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("documents="))
        .unwrap()
        .parse()
        .unwrap();
    for backend in ["records", "table"] {
        let o = minireduce(
            &["ingest-json", "--input", "lex.json", "--db", backend, "--backend", backend],
            tmp.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let manifest = CollectionManifest::load(tmp.path().join("out").join(backend).join("Json")).unwrap();
        assert_eq!(manifest.document_count, documents);
    }
}

#[test]
fn report_rejects_unpaired_rows() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("r.csv"),
        "job,backend,t_container_s,t_elaborazione_s,t_scrittura_s,t_totale_s,documents\nA,records,0,1,1,2,5\n",
    )
    .unwrap();
    let o = minireduce(&["report", "--from", "r.csv", "--format", "markdown"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}
