use std::path::Path;
use std::process::{Command, Output};

use authorprof::corpus::parse_truth_file;
use authorprof::ModelFile;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_authorprof"))
        .args(args)
        .output()
        .expect("run authorprof")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) {
    ok(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--authors",
        "40",
        "--tweets",
        "20",
        "--seed",
        "3",
    ]);
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn train_predict_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus);
    let model = tmp.path().join("model.json");
    ok(&["train", "--corpus", p(&corpus), "--model", p(&model), "--min-df", "2"]);

    let loaded = ModelFile::load(&model).unwrap();
    assert_eq!(loaded.models.len(), 1);
    assert_eq!(loaded.models[0].config.min_df, 2);

    let stdout = ok(&["predict", "--corpus", p(&corpus), "--model", p(&model)]);
    let preds = tmp.path().join("preds.txt");
    std::fs::write(&preds, &stdout).unwrap();
    let parsed = parse_truth_file(&preds).unwrap();
    let truth = parse_truth_file(&corpus.join("truth.txt")).unwrap();
    assert_eq!(parsed.len(), 40);
    let mut ids: Vec<_> = parsed.iter().map(|l| l.author_id.clone()).collect();
    let sorted = {
        let mut s = ids.clone();
        s.sort();
        s
    };
    assert_eq!(ids, sorted, "predictions are sorted by author id");
    ids.dedup();
    assert_eq!(ids.len(), 40);
    // training-set predictions on a strongly signalled corpus
    let correct = parsed
        .iter()
        .filter(|l| truth.iter().any(|t| t == *l))
        .count();
    assert!(correct >= 36, "{correct}/40 training authors predicted exactly");
}

#[test]
fn evaluate_writes_fold_and_summary_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus);
    let out = tmp.path().join("eval.csv");
    ok(&["evaluate", "--corpus", p(&corpus), "--min-df", "2", "--out", p(&out)]);

    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["language", "task", "min_df", "fold", "accuracy", "average_accuracy", "vocab_size", "train_time_ms"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let summaries: Vec<_> = rows.iter().filter(|r| &r[3] == "mean").collect();
    assert_eq!(rows.len(), 22);
    assert_eq!(summaries.len(), 2);
    for s in summaries {
        let acc: f64 = s[5].parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
        let _: f64 = s[7].parse().unwrap();
    }
}

#[test]
fn sweep_covers_inclusive_range() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus);
    let csv_text = ok(&["sweep", "--corpus", p(&corpus), "--df-range", "2..4", "--folds", "3"]);
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let mut summary = Vec::new();
    for r in rdr.records().map(Result::unwrap) {
        if &r[3] == "mean" {
            summary.push((r[1].to_string(), r[2].parse::<usize>().unwrap(), r[6].parse::<usize>().unwrap()));
        }
    }
    assert_eq!(summary.len(), 6);
    for task in ["gender", "variety"] {
        let v: Vec<_> = summary.iter().filter(|s| s.0 == task).collect();
        assert_eq!(v.iter().map(|s| s.1).collect::<Vec<_>>(), [2, 3, 4]);
        assert!(v.windows(2).all(|w| w[1].2 <= w[0].2));
    }
}

#[test]
fn report_lists_at_most_top_k_terms() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus);
    let csv_text = ok(&["report", "--corpus", p(&corpus), "--min-df", "2"]);
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let top: Vec<_> = rows.iter().filter(|r| &r[2] == "top").collect();
    assert!(!top.is_empty());
    for r in &top {
        let rank: usize = r[4].parse().unwrap();
        assert!((1..=20).contains(&rank));
    }
    // gender classes each get a full table of 20
    let female = top.iter().filter(|r| &r[1] == "gender" && &r[3] == "female").count();
    assert_eq!(female, 20);

    let three = ok(&["report", "--corpus", p(&corpus), "--min-df", "2", "--top-k", "3"]);
    let mut rdr = csv::Reader::from_reader(three.as_bytes());
    assert!(rdr
        .records()
        .map(Result::unwrap)
        .all(|r| r[4].parse::<usize>().unwrap() <= 3));
}

#[test]
fn usage_errors_exit_1() {
    for args in [
        vec!["train", "--bogus"],
        vec!["frobnicate"],
        vec!["evaluate", "--gamma", "wide"],
        vec!["sweep", "--corpus", ".", "--df-range", "9..3"],
        vec!["synth"],
        vec!["train"],
    ] {
        let out = bin(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(stderr.trim_end().lines().count(), 1, "{args:?}: {stderr}");
    }
}

#[test]
fn data_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let out = bin(&["evaluate", "--corpus", p(&missing)]);
    assert_eq!(out.status.code(), Some(2));

    let corpus = tmp.path().join("corpus");
    synth(&corpus);
    std::fs::write(corpus.join("broken.xml"), "<author lang=\"en\"><documents>").unwrap();
    let out = bin(&["evaluate", "--corpus", p(&corpus)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.xml"));

    let out = bin(&["predict", "--corpus", p(&corpus), "--model", p(&missing)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_class_training_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus);
    let truth = corpus.join("truth.txt");
    let text = std::fs::read_to_string(&truth).unwrap().replace(":::female:::", ":::male:::");
    std::fs::write(&truth, text).unwrap();
    let model = tmp.path().join("m.json");
    let out = bin(&["train", "--corpus", p(&corpus), "--model", p(&model), "--min-df", "2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!model.exists());
}

#[test]
fn help_exits_0() {
    let out = bin(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("evaluate"));
}
