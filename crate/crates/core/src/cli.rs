//! The command layer behind the `authorprof` binary. Each `cmd_*` function runs one
//! subcommand from a [`RunConfig`] and writes only to its designated output.

use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use crate::corpus::{load_corpus, Corpus, Language, TruthLabel};
use crate::error::{Error, Result};
use crate::eval::{
    cross_validate, generate_synthetic_corpus, sweep_min_df, write_reports_csv, CvSettings, SynthSpec, Task,
};
use crate::model::{LanguageModel, ModelFile};
use crate::svm::{GammaMode, KernelParams, TrainOptions};
use crate::vectorizer::{fit_transform, top_terms_by_class};

pub const TRUTH_FILE_NAME: &str = "truth.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Predict,
    Evaluate,
    Sweep,
    Report,
    Synth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub language: Language,
    pub authors: usize,
    pub tweets: usize,
    pub varieties: usize,
    pub signal_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            language: Language::En,
            authors: 200,
            tweets: 100,
            varieties: 3,
            signal_rate: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub corpus_dir: Option<PathBuf>,
    pub truth_path: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub min_df: usize,
    pub c: f64,
    pub gamma: GammaMode,
    pub folds: usize,
    pub seed: u64,
    pub df_range: RangeInclusive<usize>,
    pub top_k: usize,
    pub synth: SynthConfig,
}

impl RunConfig {
    /// Defaults: min_df 10, C 1, gamma auto, 10 folds, seed 0, sweep 2..=25, top 20.
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            corpus_dir: None,
            truth_path: None,
            model_path: None,
            output_path: None,
            min_df: 10,
            c: 1.0,
            gamma: GammaMode::Auto,
            folds: 10,
            seed: 0,
            df_range: 2..=25,
            top_k: 20,
            synth: SynthConfig::default(),
        }
    }

    pub fn params(&self) -> KernelParams {
        KernelParams {
            gamma: self.gamma,
            c: self.c,
        }
    }

    pub fn cv_settings(&self) -> CvSettings {
        CvSettings {
            params: self.params(),
            train: TrainOptions::default(),
            folds: self.folds,
            seed: self.seed,
        }
    }

    fn corpus_dir(&self) -> Result<&Path> {
        self.corpus_dir
            .as_deref()
            .ok_or_else(|| Error::Usage("--corpus is required".into()))
    }

    fn model_path(&self) -> Result<&Path> {
        self.model_path
            .as_deref()
            .ok_or_else(|| Error::Usage("--model is required".into()))
    }
}

/// Parses `A..B` or `A..=B`; both are inclusive.
pub fn parse_df_range(s: &str) -> Result<RangeInclusive<usize>> {
    let bad = || Error::Usage(format!("--df-range expects A..B, got '{s}'"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a < 1 || a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

fn has_xml(dir: &Path) -> Result<bool> {
    Ok(fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .any(|e| e.path().is_file() && e.path().extension().is_some_and(|x| x == "xml")))
}

/// Loads one corpus from a directory of author files, or one per language from
/// its subdirectories (the PAN layout). When `labeled`, the truth file is the
/// explicit `truth` path or each directory's `truth.txt`.
pub fn load_corpora(dir: &Path, truth: Option<&Path>, labeled: bool) -> Result<Vec<Corpus>> {
    let truth_for = |d: &Path| -> Result<Option<PathBuf>> {
        if !labeled {
            return Ok(None);
        }
        match truth {
            Some(t) => Ok(Some(t.to_path_buf())),
            None => {
                let t = d.join(TRUTH_FILE_NAME);
                if t.is_file() {
                    Ok(Some(t))
                } else {
                    Err(Error::Usage(format!(
                        "{}: no truth file; pass --truth or add {TRUTH_FILE_NAME}",
                        d.display()
                    )))
                }
            }
        }
    };

    if has_xml(dir)? {
        let t = truth_for(dir)?;
        return Ok(vec![load_corpus(dir, t.as_deref())?]);
    }
    if truth.is_some() {
        return Err(Error::Usage(
            "--truth applies to a single-language corpus directory; per-language subdirectories use their own truth.txt".into(),
        ));
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    let mut corpora = Vec::new();
    for sub in subdirs {
        if has_xml(&sub)? {
            let t = truth_for(&sub)?;
            corpora.push(load_corpus(&sub, t.as_deref())?);
        }
    }
    if corpora.is_empty() {
        return Err(Error::Consistency(format!("{}: no author XML files found", dir.display())));
    }
    corpora.sort_by_key(|c| c.language());
    if corpora.windows(2).any(|w| w[0].language() == w[1].language()) {
        return Err(Error::Consistency("two subdirectories hold the same language".into()));
    }
    Ok(corpora)
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

pub fn cmd_train(config: &RunConfig) -> Result<ModelFile> {
    let corpora = load_corpora(config.corpus_dir()?, config.truth_path.as_deref(), true)?;
    let model_path = config.model_path()?;
    let opts = TrainOptions {
        parallel: true,
        ..TrainOptions::default()
    };
    let models = corpora
        .iter()
        .map(|c| LanguageModel::train(c, config.min_df, &config.params(), &opts))
        .collect::<Result<Vec<_>>>()?;
    for m in &models {
        for (task, svm) in [("gender", &m.gender), ("variety", &m.variety)] {
            if !svm.all_converged() {
                log::warn!("{} {task} model: SMO did not converge for every class pair", m.language);
            }
        }
    }
    let file = ModelFile::new(models);
    file.save(model_path)?;
    Ok(file)
}

pub fn cmd_predict(config: &RunConfig) -> Result<Vec<TruthLabel>> {
    let file = ModelFile::load(config.model_path()?)?;
    let corpora = load_corpora(config.corpus_dir()?, None, false)?;
    let mut predictions = Vec::new();
    for corpus in &corpora {
        predictions.extend(file.for_language(corpus.language())?.predict(corpus)?);
    }
    predictions.sort_by(|a, b| a.author_id.cmp(&b.author_id));
    let mut text = String::new();
    for p in &predictions {
        text.push_str(&p.to_line());
        text.push('\n');
    }
    emit(config.output_path.as_deref(), text.as_bytes())?;
    Ok(predictions)
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<()> {
    let corpora = load_corpora(config.corpus_dir()?, config.truth_path.as_deref(), true)?;
    let settings = config.cv_settings();
    let mut reports = Vec::new();
    for corpus in &corpora {
        for task in Task::ALL {
            reports.push(cross_validate(corpus, task, config.min_df, &settings)?);
        }
    }
    let mut buf = Vec::new();
    write_reports_csv(&reports, &mut buf)?;
    emit(config.output_path.as_deref(), &buf)
}

pub fn cmd_sweep(config: &RunConfig) -> Result<()> {
    let corpora = load_corpora(config.corpus_dir()?, config.truth_path.as_deref(), true)?;
    let settings = config.cv_settings();
    let mut reports = Vec::new();
    for corpus in &corpora {
        for task in Task::ALL {
            reports.extend(sweep_min_df(corpus, task, &settings, config.df_range.clone(), true)?);
        }
    }
    let mut buf = Vec::new();
    write_reports_csv(&reports, &mut buf)?;
    emit(config.output_path.as_deref(), &buf)
}

/// Per-class top-k term tables and the terms shared by every class's top list, as
/// CSV with columns `language,task,section,class,rank,term,count`.
pub fn cmd_report(config: &RunConfig) -> Result<()> {
    let corpora = load_corpora(config.corpus_dir()?, config.truth_path.as_deref(), true)?;
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    out.write_record(["language", "task", "section", "class", "rank", "term", "count"])?;
    for corpus in &corpora {
        let dtm = fit_transform(corpus, config.min_df)?;
        for task in Task::ALL {
            let labels = corpus
                .labels()
                .iter()
                .map(|(id, t)| (id.clone(), task.label(t)))
                .collect();
            let top = top_terms_by_class(&dtm, &labels, config.top_k)?;
            let lang = corpus.language().code();
            for (class, terms) in &top.per_class {
                for (rank, (term, count)) in terms.iter().enumerate() {
                    out.write_record([lang, task.as_str(), "top", class, &(rank + 1).to_string(), term, &count.to_string()])?;
                }
            }
            for (rank, common) in top.common.iter().enumerate() {
                for (class, count) in &common.counts {
                    out.write_record([
                        lang,
                        task.as_str(),
                        "common",
                        class,
                        &(rank + 1).to_string(),
                        &common.term,
                        &count.to_string(),
                    ])?;
                }
            }
        }
    }
    let buf = out.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    emit(config.output_path.as_deref(), &buf)
}

pub fn cmd_synth(config: &RunConfig) -> Result<Corpus> {
    let out = config
        .output_path
        .as_deref()
        .ok_or_else(|| Error::Usage("synth needs --out DIR".into()))?;
    let s = &config.synth;
    let spec = SynthSpec::standard(s.language, s.authors, s.tweets, s.varieties, s.signal_rate, config.seed)?;
    let corpus = generate_synthetic_corpus(&spec)?;
    corpus.write_to_dir(out)?;
    Ok(corpus)
}

pub fn run(config: &RunConfig) -> Result<()> {
    match config.command {
        Command::Train => cmd_train(config).map(|_| ()),
        Command::Predict => cmd_predict(config).map(|_| ()),
        Command::Evaluate => cmd_evaluate(config),
        Command::Sweep => cmd_sweep(config),
        Command::Report => cmd_report(config),
        Command::Synth => cmd_synth(config).map(|_| ()),
    }
}
