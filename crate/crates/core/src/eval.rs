//! Cross-validation, the min-df sweep and a synthetic corpus generator.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorRecord, Corpus, Gender, Language, TruthLabel};
use crate::error::{Error, Result};
use crate::svm::{train_one_vs_one, KernelParams, TrainOptions};
use crate::vectorizer::{fit_transform_documents, fit_vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Gender,
    Variety,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Gender, Task::Variety];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Gender => "gender",
            Task::Variety => "variety",
        }
    }

    pub fn label(self, truth: &TruthLabel) -> String {
        match self {
            Task::Gender => truth.gender.to_string(),
            Task::Variety => truth.variety.clone(),
        }
    }

    /// Labels for every author of `corpus`, in author order.
    pub fn labels(self, corpus: &Corpus) -> Result<Vec<String>> {
        Ok(corpus
            .ordered_labels()?
            .into_iter()
            .map(|t| self.label(t))
            .collect())
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gender" => Ok(Task::Gender),
            "variety" => Ok(Task::Variety),
            other => Err(Error::Value(format!("unknown task '{other}'"))),
        }
    }
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy<T: PartialEq>(predicted: &[T], truth: &[T]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Shape {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of zero predictions".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Sum of the fold accuracies divided by their count.
pub fn average_accuracy(fold_accuracies: &[f64]) -> Result<f64> {
    if fold_accuracies.is_empty() {
        return Err(Error::UndefinedMetric("average of zero folds".into()));
    }
    Ok(fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(train, test)` index lists for fold `f`.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (i, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Stratified assignment: each class is shuffled with the seed and dealt round-robin,
/// continuing the deal where the previous class stopped so fold sizes stay balanced.
pub fn make_folds<S: AsRef<str>>(labels: &[S], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Parameter(format!("need at least 2 folds, got {k}")));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_ref()).or_default().push(i);
    }
    if let Some((class, members)) = by_class.iter().find(|(_, m)| m.len() < k) {
        return Err(Error::Stratification {
            class: class.to_string(),
            count: members.len(),
            k,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0usize; labels.len()];
    let mut next = 0usize;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub language: Language,
    pub min_df: usize,
    pub fold_accuracies: Vec<f64>,
    pub average_accuracy: f64,
    /// Vocabulary size from a fit on the whole corpus.
    pub vocab_size: usize,
    /// Per-fold vocabulary sizes, fitted on each training split.
    pub fold_vocab_sizes: Vec<usize>,
    /// Summed wall-clock time of the per-fold model builds (vectorize + train).
    pub train_time_ms: u64,
    pub all_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvSettings {
    pub params: KernelParams,
    pub train: TrainOptions,
    pub folds: usize,
    pub seed: u64,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings {
            params: KernelParams::default(),
            train: TrainOptions::default(),
            folds: 10,
            seed: 0,
        }
    }
}

/// Stratified k-fold cross-validation. The vocabulary is refitted on every training
/// split and the held-out rows are transformed against it.
pub fn cross_validate(
    corpus: &Corpus,
    task: Task,
    min_df: usize,
    settings: &CvSettings,
) -> Result<EvalReport> {
    let labels = task.labels(corpus)?;
    let plan = make_folds(&labels, settings.folds, settings.seed)?;
    cross_validate_with_plan(corpus, task, &labels, &plan, min_df, settings)
}

fn cross_validate_with_plan(
    corpus: &Corpus,
    task: Task,
    labels: &[String],
    plan: &FoldPlan,
    min_df: usize,
    settings: &CvSettings,
) -> Result<EvalReport> {
    let documents = corpus.documents();
    let ids = corpus.author_ids();
    let vocab_size = fit_vocabulary(&documents, min_df)?.len();

    let mut fold_accuracies = Vec::with_capacity(plan.k);
    let mut fold_vocab_sizes = Vec::with_capacity(plan.k);
    let mut elapsed = std::time::Duration::ZERO;
    let mut all_converged = true;

    for fold in 0..plan.k {
        let (train_idx, test_idx) = plan.split(fold);
        let train_docs: Vec<&str> = train_idx.iter().map(|&i| documents[i]).collect();
        let train_ids: Vec<String> = train_idx.iter().map(|&i| ids[i].clone()).collect();
        let train_labels: Vec<&str> = train_idx.iter().map(|&i| labels[i].as_str()).collect();

        let started = Instant::now();
        let dtm = fit_transform_documents(train_ids, &train_docs, min_df)?;
        let model = train_one_vs_one(&dtm.rows, &train_labels, &settings.params, &settings.train)?;
        elapsed += started.elapsed();
        all_converged &= model.all_converged();

        let predicted = test_idx
            .iter()
            .map(|&i| {
                let x = dtm.vocab.transform(documents[i]);
                model.predict(&x).map(str::to_string)
            })
            .collect::<Result<Vec<_>>>()?;
        let truth: Vec<String> = test_idx.iter().map(|&i| labels[i].clone()).collect();
        fold_accuracies.push(accuracy(&predicted, &truth)?);
        fold_vocab_sizes.push(dtm.vocab.len());
    }

    Ok(EvalReport {
        task,
        language: corpus.language(),
        min_df,
        average_accuracy: average_accuracy(&fold_accuracies)?,
        fold_accuracies,
        vocab_size,
        fold_vocab_sizes,
        train_time_ms: elapsed.as_millis() as u64,
        all_converged,
    })
}

/// One report per `min_df` in ascending order, all on the same fold plan.
/// With `timed`, points run one after another so their timings are comparable;
/// otherwise they run on the rayon pool.
pub fn sweep_min_df(
    corpus: &Corpus,
    task: Task,
    settings: &CvSettings,
    df_range: RangeInclusive<usize>,
    timed: bool,
) -> Result<Vec<EvalReport>> {
    use rayon::prelude::*;

    if *df_range.start() < 1 || df_range.is_empty() {
        return Err(Error::Parameter(format!(
            "min_df range {}..={} must be non-empty and start at 1 or more",
            df_range.start(),
            df_range.end()
        )));
    }
    let labels = task.labels(corpus)?;
    let plan = make_folds(&labels, settings.folds, settings.seed)?;
    let run = |min_df: usize| cross_validate_with_plan(corpus, task, &labels, &plan, min_df, settings);
    let mut reports = if timed {
        df_range.map(run).collect::<Result<Vec<_>>>()?
    } else {
        df_range
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(run)
            .collect::<Result<Vec<_>>>()?
    };
    reports.sort_by_key(|r| r.min_df);
    Ok(reports)
}

pub const CSV_HEADER: [&str; 8] = [
    "language",
    "task",
    "min_df",
    "fold",
    "accuracy",
    "average_accuracy",
    "vocab_size",
    "train_time_ms",
];

/// One row per fold (fold index, fold accuracy, training-split vocabulary size)
/// followed by one summary row per report (`fold = mean`, full-corpus vocabulary
/// size, summed training time).
pub fn write_reports_csv<W: Write>(reports: &[EvalReport], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in reports {
        let lang = r.language.code();
        let task = r.task.as_str();
        let min_df = r.min_df.to_string();
        let avg = r.average_accuracy.to_string();
        for (fold, (acc, vs)) in r.fold_accuracies.iter().zip(&r.fold_vocab_sizes).enumerate() {
            out.write_record([
                lang,
                task,
                &min_df,
                &fold.to_string(),
                &acc.to_string(),
                &avg,
                &vs.to_string(),
                "",
            ])?;
        }
        out.write_record([
            lang,
            task,
            &min_df,
            "mean",
            &avg,
            &avg,
            &r.vocab_size.to_string(),
            &r.train_time_ms.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSignal {
    pub tokens: Vec<String>,
    /// Probability that a token slot of this class's channel emits a signal token.
    pub rate: f64,
}

/// Recipe for a synthetic labeled corpus. Token slots alternate between a gender
/// channel and a variety channel; each slot emits one of its class's signal tokens
/// with the class's rate and a Zipf-distributed background token otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub language: Language,
    pub n_authors: usize,
    pub tweets_per_author: usize,
    pub tokens_per_tweet: usize,
    pub gender_classes: Vec<Gender>,
    pub variety_classes: Vec<String>,
    /// Keyed by gender name or variety name.
    pub signals: BTreeMap<String, ClassSignal>,
    pub background_vocab: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// Both genders, the first `n_varieties` varieties of `language`, five signal
    /// tokens per class at `signal_rate`, 8 tokens per tweet and 5000 background words.
    pub fn standard(
        language: Language,
        n_authors: usize,
        tweets_per_author: usize,
        n_varieties: usize,
        signal_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        let all = language.varieties();
        if n_varieties == 0 || n_varieties > all.len() {
            return Err(Error::Parameter(format!(
                "'{language}' has {} varieties, asked for {n_varieties}",
                all.len()
            )));
        }
        let gender_classes = vec![Gender::Female, Gender::Male];
        let variety_classes: Vec<String> = all[..n_varieties].iter().map(|s| s.to_string()).collect();
        let mut signals = BTreeMap::new();
        let names = gender_classes
            .iter()
            .map(|g| g.to_string())
            .chain(variety_classes.iter().cloned());
        for name in names {
            let stem = name.replace(' ', "_");
            let tokens = (0..5).map(|i| format!("sig_{stem}_{i}")).collect();
            signals.insert(name, ClassSignal { tokens, rate: signal_rate });
        }
        let spec = SynthSpec {
            language,
            n_authors,
            tweets_per_author,
            tokens_per_tweet: 8,
            gender_classes,
            variety_classes,
            signals,
            background_vocab: 5000,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.n_authors == 0 || self.tweets_per_author == 0 || self.tokens_per_tweet == 0 {
            return bad("author, tweet and token counts must be positive".into());
        }
        if self.gender_classes.is_empty() || self.variety_classes.is_empty() {
            return bad("class lists must be non-empty".into());
        }
        if self.background_vocab == 0 {
            return bad("background vocabulary must be non-empty".into());
        }
        for v in &self.variety_classes {
            if !self.language.varieties().contains(&v.as_str()) {
                return bad(format!("'{v}' is not a '{}' variety", self.language));
            }
        }
        let names = self
            .gender_classes
            .iter()
            .map(|g| g.to_string())
            .chain(self.variety_classes.iter().cloned());
        for name in names {
            match self.signals.get(&name) {
                None => return bad(format!("no signal configured for class '{name}'")),
                Some(s) if !(s.rate > 0.0 && s.rate <= 1.0) => {
                    return bad(format!("signal rate for '{name}' must be in (0, 1], got {}", s.rate))
                }
                Some(s) if s.tokens.is_empty() || s.tokens.iter().any(|t| t.split_whitespace().count() != 1) => {
                    return bad(format!("signal tokens for '{name}' must be single non-empty tokens"))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

pub fn generate_synthetic_corpus(spec: &SynthSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let zipf = WeightedIndex::new((1..=spec.background_vocab).map(|r| 1.0 / r as f64))
        .map_err(|e| Error::Parameter(e.to_string()))?;
    let background: Vec<String> = (0..spec.background_vocab).map(|i| format!("w{i:05}")).collect();
    let id_width = spec.n_authors.to_string().len();

    let mut authors = Vec::with_capacity(spec.n_authors);
    let mut labels = Vec::with_capacity(spec.n_authors);
    let n_gender = spec.gender_classes.len();
    for a in 0..spec.n_authors {
        let gender = spec.gender_classes[a % n_gender];
        let variety = &spec.variety_classes[(a / n_gender) % spec.variety_classes.len()];
        let gender_signal = &spec.signals[gender.as_str()];
        let variety_signal = &spec.signals[variety];

        let mut tweets = Vec::with_capacity(spec.tweets_per_author);
        let mut slot = 0usize;
        for _ in 0..spec.tweets_per_author {
            let mut words = Vec::with_capacity(spec.tokens_per_tweet);
            for _ in 0..spec.tokens_per_tweet {
                let signal = if slot.is_multiple_of(2) { gender_signal } else { variety_signal };
                slot += 1;
                let word = if rng.random::<f64>() < signal.rate {
                    &signal.tokens[rng.random_range(0..signal.tokens.len())]
                } else {
                    &background[zipf.sample(&mut rng)]
                };
                words.push(word.as_str());
            }
            tweets.push(words.join(" "));
        }
        let id = format!("synth{a:0id_width$}");
        authors.push(AuthorRecord::new(id.clone(), spec.language, tweets)?);
        labels.push(TruthLabel {
            author_id: id,
            gender,
            variety: variety.clone(),
        });
    }
    Corpus::new(spec.language, authors, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accuracy_examples() {
        let truth = [1, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        let pred = [1, 1, 0, 1, 1, 1, 0, 1, 1, 1];
        assert_eq!(accuracy(&pred, &truth).unwrap(), 0.8);
        assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert!(matches!(accuracy(&[1], &[1, 2]), Err(Error::Shape { .. })));
        let empty: [i32; 0] = [];
        assert!(matches!(accuracy(&empty, &empty), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn average_examples() {
        let folds = [0.7, 0.8, 0.9, 0.8, 0.8, 0.7, 0.9, 0.8, 0.8, 0.8];
        assert!((folds.iter().sum::<f64>() - 8.0).abs() < 1e-12);
        assert!((average_accuracy(&folds).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn folds_forced_by_counts() {
        let labels: Vec<&str> = (0..10).map(|i| if i < 5 { "a" } else { "b" }).collect();
        let plan = make_folds(&labels, 5, 3).unwrap();
        for f in 0..5 {
            let (_, test) = plan.split(f);
            assert_eq!(test.len(), 2);
            assert_eq!(test.iter().filter(|&&i| labels[i] == "a").count(), 1);
        }
        let plan = make_folds(&["x"; 4], 2, 0).unwrap();
        assert_eq!(plan.split(0).1.len(), 2);
        assert_eq!(plan.split(1).1.len(), 2);
    }

    #[test]
    fn folds_reject_small_class() {
        let mut labels = vec!["big"; 30];
        labels.extend(["tiny"; 3]);
        match make_folds(&labels, 10, 0) {
            Err(Error::Stratification { class, count, k }) => {
                assert_eq!((class.as_str(), count, k), ("tiny", 3, 10));
            }
            other => panic!("{other:?}"),
        }
        assert!(make_folds(&labels, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_are_stratified_partitions(
            sizes in prop::collection::vec(3usize..25, 1..5),
            k in 2usize..4,
            seed in any::<u64>(),
        ) {
            let labels: Vec<String> = sizes
                .iter()
                .enumerate()
                .flat_map(|(c, &n)| std::iter::repeat_n(format!("c{c}"), n))
                .collect();
            let plan = make_folds(&labels, k, seed).unwrap();
            prop_assert_eq!(plan.assignments.len(), labels.len());
            prop_assert!(plan.assignments.iter().all(|&f| f < k));
            for f in 0..k {
                prop_assert!(!plan.split(f).1.is_empty());
            }
            for c in 0..sizes.len() {
                let name = format!("c{c}");
                let per_fold: Vec<usize> = (0..k)
                    .map(|f| labels.iter().zip(&plan.assignments).filter(|(l, &a)| **l == name && a == f).count())
                    .collect();
                let (lo, hi) = (per_fold.iter().min().unwrap(), per_fold.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }
            prop_assert_eq!(&make_folds(&labels, k, seed).unwrap(), &plan);
        }
    }

    #[test]
    fn synth_shape_and_determinism() {
        let spec = SynthSpec::standard(Language::En, 20, 10, 3, 0.3, 7).unwrap();
        let a = generate_synthetic_corpus(&spec).unwrap();
        let b = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        assert!(a.is_fully_labeled());
        let tweets: usize = a.authors().iter().map(|x| x.tweets().len()).sum();
        assert_eq!(tweets, 200);
        let other = SynthSpec { seed: 8, ..spec };
        assert_ne!(generate_synthetic_corpus(&other).unwrap(), a);
    }

    #[test]
    fn synth_full_signal_is_separable() {
        let spec = SynthSpec::standard(Language::Pt, 12, 4, 2, 1.0, 1).unwrap();
        let corpus = generate_synthetic_corpus(&spec).unwrap();
        for a in corpus.authors() {
            let label = &corpus.labels()[a.author_id()];
            let g = &spec.signals[label.gender.as_str()].tokens;
            let v = &spec.signals[&label.variety].tokens;
            assert!(crate::vectorizer::tokenize(a.document()).iter().all(|t| g.iter().any(|s| s == t) || v.iter().any(|s| s == t)));
        }
    }

    #[test]
    fn synth_rejects_bad_specs() {
        assert!(SynthSpec::standard(Language::Pt, 10, 10, 3, 0.3, 0).is_err());
        assert!(SynthSpec::standard(Language::En, 10, 10, 2, 0.0, 0).is_err());
        assert!(SynthSpec::standard(Language::En, 10, 10, 2, 1.5, 0).is_err());
    }

    #[test]
    fn perfectly_separating_token_gives_full_accuracy() {
        // a token present iff gender is female, plus shared filler
        let mut authors = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let female = i % 2 == 0;
            let mut words = vec!["filler", "common", "words"];
            if female {
                words.push("marker");
            }
            if i % 3 == 0 {
                words.push("noise");
            }
            let id = format!("a{i:02}");
            authors.push(AuthorRecord::new(id.clone(), Language::En, vec![words.join(" ")]).unwrap());
            labels.push(TruthLabel {
                author_id: id,
                gender: if female { Gender::Female } else { Gender::Male },
                variety: "canada".into(),
            });
        }
        let corpus = Corpus::new(Language::En, authors, labels).unwrap();
        let settings = CvSettings { folds: 5, ..CvSettings::default() };
        let report = cross_validate(&corpus, Task::Gender, 1, &settings).unwrap();
        assert_eq!(report.fold_accuracies.len(), 5);
        assert_eq!(report.average_accuracy, 1.0);
        assert_eq!(report.vocab_size, 5);
    }

    #[test]
    fn csv_layout() {
        let r = EvalReport {
            task: Task::Gender,
            language: Language::Es,
            min_df: 3,
            fold_accuracies: vec![0.5, 1.0],
            average_accuracy: 0.75,
            vocab_size: 40,
            fold_vocab_sizes: vec![30, 31],
            train_time_ms: 12,
            all_converged: true,
        };
        let mut buf = Vec::new();
        write_reports_csv(&[r], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "language,task,min_df,fold,accuracy,average_accuracy,vocab_size,train_time_ms\n\
             es,gender,3,0,0.5,0.75,30,\n\
             es,gender,3,1,1,0.75,31,\n\
             es,gender,3,mean,0.75,0.75,40,12\n"
        );
    }
}
