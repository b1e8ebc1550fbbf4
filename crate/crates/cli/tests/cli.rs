use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fareval::corpus::{load_dataset, parse_dataset};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fareval"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn dataset() -> String {
    fixture("dataset.jsonl").display().to_string()
}

fn system(name: &str, file: &str) -> String {
    format!("{name}={}", fixture(file).display())
}

/// Rows of the first TSV section as column → value maps.
fn rows(tsv: &str) -> Vec<Vec<(String, String)>> {
    let section = tsv.split("\n\n").next().unwrap();
    let mut lines = section.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    lines
        .map(|l| {
            header
                .iter()
                .zip(l.split('\t'))
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

fn cell<'a>(row: &'a [(String, String)], column: &str) -> &'a str {
    &row.iter().find(|(h, _)| h == column).unwrap_or_else(|| panic!("no column {column}")).1
}

#[test]
fn eval_full_extraction_scores_perfect_far() {
    let dir = TempDir::new().unwrap();
    let all = dir.path().join("all.jsonl");
    let lines: Vec<String> = load_dataset(fixture("dataset.jsonl"))
        .unwrap()
        .iter()
        .map(|s| {
            let ix: Vec<usize> = (0..s.document.len()).collect();
            serde_json::json!({ "id": s.id, "indices": ix }).to_string()
        })
        .collect();
    fs::write(&all, lines.join("\n")).unwrap();
    let out = stdout(&run(&["eval", "--fams", &dataset(), "--system", &format!("all={}", all.display())]));
    let rows = rows(&out);
    assert_eq!(cell(&rows[0], "far"), "100.0");
    assert_eq!(cell(&rows[0], "sar"), "100.0");
    assert_eq!(cell(&rows[0], "scope"), "mappable");
    assert_eq!(cell(&rows[0], "categories"), "N,L,H");
}

#[test]
fn eval_rows_for_baselines_and_text_systems() {
    let out = stdout(&run(&[
        "eval",
        "--fams",
        &dataset(),
        "--system",
        &system("first", "sys_first.jsonl"),
        "--system",
        &system("text", "sys_text.jsonl"),
        "--lead",
        "3",
        "--oracle",
    ]));
    let rows = rows(&out);
    let names: Vec<&str> = rows.iter().map(|r| cell(r, "system")).collect();
    assert_eq!(names, ["first", "text", "lead-3", "oracle"]);
    // hand-checked against the fixture mappings
    assert_eq!(cell(&rows[0], "far"), "66.7");
    assert_eq!(cell(&rows[2], "far"), "75.0");
    assert_eq!(cell(&rows[3], "far"), "100.0");
    assert!(!out.contains('\r'));
}

#[test]
fn k_truncates_system_extractions() {
    let out = stdout(&run(&[
        "eval",
        "--fams",
        &dataset(),
        "--system",
        &system("first", "sys_first.jsonl"),
        "--k",
        "1",
        "--format",
        "json",
    ]));
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    for (_, s) in doc["systems"][0]["per_sample"].as_object().unwrap() {
        assert_eq!(s["extracted"], 1);
    }
    assert_eq!(doc["k"], 1);
}

#[test]
fn categories_restrict_samples() {
    let out = stdout(&run(&["eval", "--fams", &dataset(), "--lead", "3", "--categories", "L,H"]));
    assert_eq!(cell(&rows(&out)[0], "samples"), "5");
    assert_eq!(cell(&rows(&out)[0], "categories"), "L,H");
}

#[test]
fn missing_system_file_exits_2_with_path() {
    let out = run(&["eval", "--fams", &dataset(), "--system", "x=/no/such/output.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/output.jsonl"));
}

#[test]
fn input_problems_exit_2() {
    assert_eq!(run(&["stats"]).status.code(), Some(2));
    assert_eq!(run(&["stats", "--fams", "/no/such/data.jsonl"]).status.code(), Some(2));
    assert_eq!(run(&["stats", "--fams", &dataset(), "--categories", ""]).status.code(), Some(2));
    assert_eq!(run(&["label", "--fams", &dataset(), "--method", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["label", "--fams", &dataset(), "--method", "tfidf", "--topn", "0"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--fams", &dataset(), "--scope", "some"]).status.code(), Some(2));
}

#[test]
fn per_sample_export_has_raw_values() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("per_sample.tsv");
    stdout(&run(&[
        "eval",
        "--fams",
        &dataset(),
        "--lead",
        "3",
        "--per-sample",
        path.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(path).unwrap();
    let rows = rows(&text);
    assert_eq!(rows.len(), 6);
    assert_eq!(cell(&rows[0], "id"), "a1");
    assert_eq!(cell(&rows[0], "far"), "0.5000");
    assert_eq!(cell(&rows[2], "sar"), "1.0000");
}

#[test]
fn human_rankings_add_agreement_section() {
    let out = stdout(&run(&[
        "eval",
        "--fams",
        &dataset(),
        "--system",
        &system("first", "sys_first.jsonl"),
        "--system",
        &system("mixed", "sys_mixed.jsonl"),
        "--system",
        &system("second", "sys_second.jsonl"),
        "--human",
        fixture("human.jsonl").to_str().unwrap(),
    ]));
    let sections: Vec<&str> = out.split("\n\n").collect();
    assert_eq!(sections.len(), 2);
    assert!(sections[1].starts_with("metric\tsystem\tsamples_used\tsamples_tied\tmean_spearman\trank_1"));
}

#[test]
fn label_top_n_gives_singleton_groups() {
    let out = stdout(&run(&["label", "--fams", &dataset(), "--method", "rouge-avg-f1", "--topn", "3"]));
    let labeled = parse_dataset(out.as_bytes()).unwrap();
    assert_eq!(labeled.len(), 6);
    for s in &labeled {
        for fam in &s.fams {
            assert_eq!(fam.groups.len(), 3.min(s.document.len()));
            assert!(fam.groups.iter().all(|g| g.len() == 1));
        }
    }
}

#[test]
fn label_greedy_shares_one_group() {
    let out = stdout(&run(&["label", "--fams", &dataset(), "--method", "greedy-rouge1"]));
    for s in parse_dataset(out.as_bytes()).unwrap() {
        let first = &s.fams[0].groups;
        assert!(first.len() <= 1);
        assert!(s.fams.iter().all(|f| &f.groups == first));
    }
}

#[test]
fn label_tfidf_top1_is_one_per_facet() {
    let out = stdout(&run(&["label", "--fams", &dataset(), "--method", "tfidf", "--topn", "1"]));
    for s in parse_dataset(out.as_bytes()).unwrap() {
        assert!(s.fams.iter().all(|f| f.groups.len() == 1 && f.groups[0].len() == 1));
    }
}

#[test]
fn bench_gold_mappings_are_perfect() {
    let gold = format!("gold={}", dataset());
    let out = stdout(&run(&["bench-labelers", "--fams", &dataset(), "--labelers", "lead-3", "--machine", &gold]));
    let rows = rows(&out);
    assert_eq!(cell(&rows[0], "labeler"), "lead-3");
    let g = &rows[1];
    assert_eq!(
        (cell(g, "precision"), cell(g, "recall"), cell(g, "f1")),
        ("100.0", "100.0", "100.0")
    );
}

#[test]
fn default_bench_covers_standard_labelers() {
    let out = stdout(&run(&["bench-labelers", "--fams", &dataset()]));
    let names: Vec<String> = rows(&out).iter().map(|r| cell(r, "labeler").to_string()).collect();
    assert_eq!(names.len(), 9);
    assert!(names.contains(&"rouge-avg-f1@1".to_string()));
    assert!(names.contains(&"greedy-rouge1".to_string()));
}

#[test]
fn correlate_gold_identity_and_two_system_ranks() {
    let gold = format!("gold={}", dataset());
    let three = [
        "correlate".to_string(),
        "--fams".into(),
        dataset(),
        "--system".into(),
        system("first", "sys_first.jsonl"),
        "--system".into(),
        system("second", "sys_second.jsonl"),
        "--system".into(),
        system("mixed", "sys_mixed.jsonl"),
        "--labelers".into(),
        "rouge1-f1".into(),
        "--groups".into(),
        "1".into(),
        "--machine".into(),
        gold,
    ];
    let args: Vec<&str> = three.iter().map(String::as_str).collect();
    let out = stdout(&run(&args));
    let table = rows(&out);
    let gold_rows: Vec<_> = table.iter().filter(|r| cell(r, "estimator") == "gold").collect();
    assert_eq!(gold_rows.len(), 2);
    for r in gold_rows {
        assert_eq!((cell(r, "pearson"), cell(r, "spearman"), cell(r, "kendall")), ("100.0", "100.0", "100.0"));
    }

    let two = run(&[
        "correlate",
        "--fams",
        &dataset(),
        "--system",
        &system("first", "sys_first.jsonl"),
        "--system",
        &system("second", "sys_second.jsonl"),
        "--labelers",
        "rouge1-f1@1",
    ]);
    let text = String::from_utf8(two.stdout).unwrap();
    let r = rows(&text).into_iter().find(|r| cell(r, "level") == "system").unwrap();
    for column in ["spearman", "kendall"] {
        assert!(["100.0", "-100.0", "NA"].contains(&cell(&r, column)), "{column}: {}", cell(&r, column));
    }
}

#[test]
fn correlate_needs_two_systems() {
    let out = run(&["correlate", "--fams", &dataset(), "--system", &system("first", "sys_first.jsonl")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_feature_is_a_metric_failure() {
    // with three groups per facet every sample is fully covered: the
    // single feature is constant and the fit is rank deficient
    let out = run(&[
        "autofar",
        "--fams",
        &dataset(),
        "--system",
        &system("first", "sys_first.jsonl"),
        "--system",
        &system("second", "sys_second.jsonl"),
        "--labelers",
        "rouge1-f1@3",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn autofar_reports_fit_and_extrapolation() {
    let out = stdout(&run(&[
        "autofar",
        "--fams",
        &dataset(),
        "--system",
        &system("first", "sys_first.jsonl"),
        "--system",
        &system("second", "sys_second.jsonl"),
        "--system",
        &system("mixed", "sys_mixed.jsonl"),
        "--labelers",
        "rouge1-f1@1,rouge2-f1@1",
        "--predict",
        &dataset(),
        "--predict-system",
        &system("first", "sys_first.jsonl"),
        "--predict-system",
        &system("mixed", "sys_mixed.jsonl"),
    ]));
    let sections: Vec<&str> = out.split("\n\n").collect();
    assert_eq!(sections.len(), 3);
    let systems = rows(sections[0]);
    assert_eq!(cell(&systems[0], "autofar"), cell(&systems[0], "autofar_l"));
    assert_eq!(cell(&systems[1], "autofar_l"), "NA");
    assert!(sections[2].starts_with("term\tcoefficient\nintercept\t"));
}

#[test]
fn breakdown_reference_copy_scores_100() {
    let out = stdout(&run(&[
        "breakdown",
        "--fams",
        &dataset(),
        "--abstractive",
        &format!("ref={}", fixture("abstractive.jsonl").display()),
        "--system",
        &system("first", "sys_first.jsonl"),
    ]));
    let rows = rows(&out);
    let r = rows.iter().find(|r| cell(r, "system") == "ref").unwrap();
    for c in ["N", "L", "H", "L+H"] {
        assert_eq!(cell(r, c), "100.0");
    }
    assert_eq!(
        (cell(r, "samples_N"), cell(r, "samples_L"), cell(r, "samples_H"), cell(r, "samples_L+H")),
        ("1", "4", "1", "5")
    );
}

#[test]
fn breakdown_marks_far_not_applicable_for_text_systems() {
    let out = stdout(&run(&[
        "breakdown",
        "--fams",
        &dataset(),
        "--metric",
        "far",
        "--abstractive",
        &format!("ref={}", fixture("abstractive.jsonl").display()),
    ]));
    assert_eq!(cell(&rows(&out)[0], "L"), "NA");
}

#[test]
fn stats_on_worked_example() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("one.jsonl");
    fs::write(
        &path,
        r#"{"id":"fig1","document":["d1","d2","d3","d4"],"reference":["r1","r2","r3"],"fams":[[[0],[2],[3]],[[1,3]],[]]}"#,
    )
    .unwrap();
    let out = stdout(&run(&["stats", "--fams", path.to_str().unwrap()]));
    let rows = rows(&out);
    let get = |name: &str| cell(rows.iter().find(|r| cell(r, "statistic") == name).unwrap(), "value").to_string();
    assert_eq!(get("samples"), "1");
    assert_eq!(get("samples_H"), "1");
    assert_eq!(get("facets_low"), "2");
    assert_eq!(get("facets_high"), "1");
    assert_eq!(get("non_empty_fams"), "2");
    assert_eq!(get("avg_support_sentences_unique"), "4.0000");
    assert_eq!(get("avg_support_sentences_nonunique"), "5.0000");
    assert_eq!(get("avg_groups_per_facet"), "2.0000");
}

#[test]
fn convert_maps_alternative_schema() {
    let out = stdout(&run(&[
        "convert",
        "--input",
        fixture("raw_annotations.jsonl").to_str().unwrap(),
        "--id-key",
        "doc_id",
        "--document-key",
        "article",
        "--reference-key",
        "highlights",
        "--fams-key",
        "mapping",
        "--one-based",
    ]));
    let converted = parse_dataset(out.as_bytes()).unwrap();
    let original = load_dataset(fixture("dataset.jsonl")).unwrap();
    assert_eq!(converted[..], original[..3]);
}

#[test]
fn convert_rejects_zero_in_one_based_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("raw.jsonl");
    fs::write(&path, r#"{"id":"z","document":["a"],"reference":["b"],"fams":[[0]]}"#).unwrap();
    let out = run(&["convert", "--input", path.to_str().unwrap(), "--one-based"]);
    assert_eq!(out.status.code(), Some(2));
}
