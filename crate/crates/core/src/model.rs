//! Versioned JSON model files: per language, the shared vocabulary and the gender
//! and variety classifiers trained on it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Language, TruthLabel};
use crate::error::{Error, Result};
use crate::eval::Task;
use crate::svm::{train_one_vs_one, KernelParams, MulticlassSvmModel, TrainOptions};
use crate::vectorizer::{fit_transform, Vocabulary};

pub const FORMAT_VERSION: u32 = 1;

/// Settings the models were trained with, kept for reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub min_df: usize,
    pub params: KernelParams,
    pub tol: f64,
    pub max_passes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageModel {
    pub language: Language,
    pub config: TrainingConfig,
    pub vocabulary: Vocabulary,
    pub gender: MulticlassSvmModel,
    pub variety: MulticlassSvmModel,
}

impl LanguageModel {
    /// Fits one vocabulary on the corpus and trains both task models on it.
    pub fn train(corpus: &Corpus, min_df: usize, params: &KernelParams, opts: &TrainOptions) -> Result<Self> {
        let dtm = fit_transform(corpus, min_df)?;
        let gender_labels = Task::Gender.labels(corpus)?;
        let variety_labels = Task::Variety.labels(corpus)?;
        let gender = train_one_vs_one(&dtm.rows, &gender_labels, params, opts)?;
        let variety = train_one_vs_one(&dtm.rows, &variety_labels, params, opts)?;
        Ok(LanguageModel {
            language: corpus.language(),
            config: TrainingConfig {
                min_df,
                params: *params,
                tol: opts.tol,
                max_passes: opts.max_passes,
            },
            vocabulary: dtm.vocab,
            gender,
            variety,
        })
    }

    fn check(&self) -> Result<()> {
        let n = self.vocabulary.len();
        for (task, m) in [("gender", &self.gender), ("variety", &self.variety)] {
            if m.dim() != n {
                return Err(Error::ModelIncompatible(format!(
                    "{} {task} model expects {} features but its vocabulary has {n}",
                    self.language,
                    m.dim()
                )));
            }
        }
        Ok(())
    }

    /// Predicts both tasks for every author, in corpus order.
    pub fn predict(&self, corpus: &Corpus) -> Result<Vec<TruthLabel>> {
        if corpus.language() != self.language {
            return Err(Error::ModelIncompatible(format!(
                "model is for '{}', corpus is '{}'",
                self.language,
                corpus.language()
            )));
        }
        self.check()?;
        corpus
            .authors()
            .iter()
            .map(|a| {
                let x = self.vocabulary.transform(a.document());
                Ok(TruthLabel {
                    author_id: a.author_id().to_string(),
                    gender: self.gender.predict(&x)?.parse()?,
                    variety: self.variety.predict(&x)?.to_string(),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub models: Vec<LanguageModel>,
}

impl ModelFile {
    pub fn new(mut models: Vec<LanguageModel>) -> Self {
        models.sort_by_key(|m| m.language);
        ModelFile {
            format_version: FORMAT_VERSION,
            models,
        }
    }

    pub fn for_language(&self, language: Language) -> Result<&LanguageModel> {
        self.models
            .iter()
            .find(|m| m.language == language)
            .ok_or_else(|| Error::ModelIncompatible(format!("model file has no '{language}' model")))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::ModelFormat(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let v: Version = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if v.format_version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                v.format_version
            )));
        }
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        for m in &file.models {
            m.check()?;
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
