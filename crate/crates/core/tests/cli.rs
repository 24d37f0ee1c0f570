use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sitcls::fixtures::FixtureSet;
use sitcls::{
    build_index, classify_batch, evaluate, EmbeddingTable, IndexedClassifier, PipelineConfig,
    Taxonomy,
};

const BIN: &str = env!("CARGO_BIN_EXE_sitcls");

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

fn fx(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn sitcls")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bundled_fixtures_match_generator() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "make-fixtures",
        "--out-dir",
        path_str(dir.path()),
        "--queries",
        "30",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["taxonomy.csv", "embeddings.txt", "queries.csv"] {
        let bundled = fs::read(fixtures().join(name)).unwrap();
        let fresh = fs::read(dir.path().join(name)).unwrap();
        assert_eq!(bundled, fresh, "{name}");
    }
}

#[test]
fn make_fixtures_rejects_zero_queries() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "make-fixtures",
        "--out-dir",
        path_str(dir.path()),
        "--queries",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn build_index_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let vectors = dir.path().join("cats.csv");
    let emb = fx("embeddings.txt");
    let tax = fx("taxonomy.csv");
    for (out, dump) in [(&a, true), (&b, false)] {
        let mut args = vec![
            "build-index",
            "--embeddings",
            &emb,
            "--taxonomy",
            &tax,
            "--output",
            path_str(out),
        ];
        if dump {
            args.extend(["--dump-vectors", path_str(&vectors)]);
        }
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let dump = fs::read_to_string(&vectors).unwrap();
    let mut lines = dump.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 21);
    assert_eq!(lines.count(), 10);
}

#[test]
fn missing_taxonomy_is_input_error() {
    let o = run(&[
        "classify",
        "--embeddings",
        &fx("embeddings.txt"),
        "--taxonomy",
        "/nonexistent/tax.csv",
        "--query",
        "zipeku",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("/nonexistent/tax.csv"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn usage_errors_exit_one() {
    let emb = fx("embeddings.txt");
    let cases: Vec<Vec<&str>> = vec![
        vec!["classify", "--embeddings", &emb, "--query", "x"],
        vec!["classify", "--embeddings", &emb],
        vec!["frobnicate"],
        vec![
            "classify",
            "--embeddings",
            &emb,
            "--query",
            "x",
            "--top-k",
            "0",
        ],
        vec![
            "classify",
            "--embeddings",
            &emb,
            "--query",
            "x",
            "--mode",
            "fast",
        ],
    ];
    for args in cases {
        assert_eq!(run(&args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn empty_input_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.txt");
    fs::write(&input, "").unwrap();
    let o = run(&[
        "classify",
        "--embeddings",
        &fx("embeddings.txt"),
        "--taxonomy",
        &fx("taxonomy.csv"),
        "--input",
        path_str(&input),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "content,predicted_code,level1_code,similarity,oov_fraction,mode,reason,top_k\n"
    );
}

#[test]
fn classify_is_deterministic_and_reports_unclassifiable() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("q.txt");
    fs::write(&input, "the and of\nqxv zzqx\n\n").unwrap();
    let args = [
        "classify",
        "--embeddings",
        &fx("embeddings.txt"),
        "--taxonomy",
        &fx("taxonomy.csv"),
        "--input",
        path_str(&input),
    ];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, run(&args).stdout);
    let out = stdout(&first);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(
        rows[0].contains(",UNK,UNK,") && rows[0].contains("empty after preprocessing"),
        "{}",
        rows[0]
    );
    assert!(rows[1].contains(",UNK,UNK,"), "{}", rows[1]);
}

#[test]
fn txt_and_csv_inputs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let set = FixtureSet::generate(sitcls::fixtures::DEFAULT_SEED);
    let queries = set.queries(30);
    let txt = dir.path().join("q.txt");
    fs::write(
        &txt,
        queries
            .iter()
            .map(|q| format!("{}\n", q.content))
            .collect::<String>(),
    )
    .unwrap();
    let classify = |input: &str| {
        let o = run(&[
            "classify",
            "--embeddings",
            &fx("embeddings.txt"),
            "--taxonomy",
            &fx("taxonomy.csv"),
            "--input",
            input,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        stdout(&o)
    };
    assert_eq!(classify(path_str(&txt)), classify(&fx("queries.csv")));
}

#[test]
fn cli_results_match_library() {
    let table = EmbeddingTable::load(fixtures().join("embeddings.txt")).unwrap();
    let tax = Taxonomy::load(fixtures().join("taxonomy.csv")).unwrap();
    let docs = tax.category_documents(&[5].into()).unwrap();
    let index = build_index(&docs, &table, &PipelineConfig::default(), true).unwrap();
    let classifier = IndexedClassifier::new(&index, &table, 5).unwrap();
    let test = sitcls::eval::load_test_set(fixtures().join("queries.csv")).unwrap();
    let queries: Vec<String> = test.iter().map(|t| t.content.clone()).collect();
    let results = classify_batch(&queries, &classifier, 1, None);

    let o = run(&[
        "classify",
        "--embeddings",
        &fx("embeddings.txt"),
        "--taxonomy",
        &fx("taxonomy.csv"),
        "--input",
        &fx("queries.csv"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), results.len());
    for (row, r) in rows.iter().zip(&results) {
        assert_eq!(&row[0], r.query);
        assert_eq!(&row[1], r.predicted_code);
        assert_eq!(&row[2], r.rolled_up_code);
        assert_eq!(row[3].to_string(), format!("{:.6}", r.similarity));
    }
}

#[test]
fn evaluate_matches_in_process_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.txt");
    let report = dir.path().join("report.csv");
    let o = run(&[
        "evaluate",
        "--embeddings",
        &fx("embeddings.txt"),
        "--taxonomy",
        &fx("taxonomy.csv"),
        "--test",
        &fx("queries.csv"),
        "--output",
        path_str(&report),
        "--summary",
        path_str(&summary),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&summary).unwrap();
    assert!(text.contains("accuracy       100% (1.0000)"), "{text}");
    assert!(text.contains("mode agreement 100.0%"), "{text}");

    let table = EmbeddingTable::load(fixtures().join("embeddings.txt")).unwrap();
    let tax = Taxonomy::load(fixtures().join("taxonomy.csv")).unwrap();
    let docs = tax.category_documents(&[5].into()).unwrap();
    let index = build_index(&docs, &table, &PipelineConfig::default(), true).unwrap();
    let classifier = IndexedClassifier::new(&index, &table, 5).unwrap();
    let test = sitcls::eval::load_test_set(fixtures().join("queries.csv")).unwrap();
    let queries: Vec<String> = test.iter().map(|t| t.content.clone()).collect();
    let lib = evaluate(&test, &classify_batch(&queries, &classifier, 1, None)).unwrap();

    let csv_text = fs::read_to_string(&report).unwrap();
    let correct = csv_text
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",1"))
        .count();
    assert_eq!(correct, lib.correct);
    assert_eq!(csv_text.lines().count() - 1, lib.n);
}

#[test]
fn evaluate_no_agreement_omits_line() {
    let o = run(&[
        "evaluate",
        "--embeddings",
        &fx("embeddings.txt"),
        "--taxonomy",
        &fx("taxonomy.csv"),
        "--test",
        &fx("queries.csv"),
        "--no-agreement",
        "--mode",
        "faithful",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    assert!(err.contains("mode           faithful"), "{err}");
    assert!(!err.contains("mode agreement"));
}

#[test]
fn bad_gold_label_names_row() {
    let dir = tempfile::tempdir().unwrap();
    let test = dir.path().join("test.csv");
    fs::write(&test, "content,gold_level1\nzipeku,0\nferabe,X\n").unwrap();
    let o = run(&[
        "evaluate",
        "--embeddings",
        &fx("embeddings.txt"),
        "--taxonomy",
        &fx("taxonomy.csv"),
        "--test",
        path_str(&test),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}

#[test]
fn index_from_other_embeddings_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let other = FixtureSet::generate(7)
        .write(dir.path().join("other"), 5)
        .unwrap();
    let index = dir.path().join("idx.json");
    let o = run(&[
        "build-index",
        "--embeddings",
        path_str(&other.embeddings),
        "--taxonomy",
        path_str(&other.taxonomy),
        "--output",
        path_str(&index),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&[
        "classify",
        "--embeddings",
        &fx("embeddings.txt"),
        "--index",
        path_str(&index),
        "--query",
        "zipeku",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not match"), "{}", stderr(&o));
}

#[test]
fn index_and_faithful_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("idx.json");
    let o = run(&[
        "build-index",
        "--embeddings",
        &fx("embeddings.txt"),
        "--taxonomy",
        &fx("taxonomy.csv"),
        "--output",
        path_str(&index),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let predicted = |args: &[&str]| -> Vec<String> {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
        rdr.records().map(|r| r.unwrap()[1].to_string()).collect()
    };
    let emb = fx("embeddings.txt");
    let queries = fx("queries.csv");
    let indexed = predicted(&[
        "classify",
        "--embeddings",
        &emb,
        "--index",
        path_str(&index),
        "--input",
        &queries,
    ]);
    let faithful = predicted(&[
        "classify",
        "--embeddings",
        &emb,
        "--index",
        path_str(&index),
        "--input",
        &queries,
        "--mode",
        "faithful",
    ]);
    assert_eq!(indexed.len(), 30);
    assert_eq!(indexed, faithful);
}

#[test]
fn dump_vectors_writes_one_row_per_query() {
    let dir = tempfile::tempdir().unwrap();
    let vectors = dir.path().join("q.csv");
    let o = run(&[
        "classify",
        "--embeddings",
        &fx("embeddings.txt"),
        "--taxonomy",
        &fx("taxonomy.csv"),
        "--query",
        "Zipeku temuzi",
        "--dump-vectors",
        path_str(&vectors),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&vectors).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 21);
}
