//! Author profiling from tweets.
//!
//! Each author's tweets are joined into one document, turned into whitespace
//! token counts over a vocabulary gated by minimum document frequency, and
//! classified for gender and language variety with an RBF-kernel SVM trained by
//! sequential minimal optimization. Stratified k-fold cross-validation and a
//! min-df sweep measure accuracy, vocabulary size and build time.
//!
//! ```
//! use authorprof::vectorizer::fit_vocabulary;
//!
//! let vocab = fit_vocabulary(&["a b", "a c", "a b c"], 2).unwrap();
//! assert_eq!(vocab.terms(), ["a", "b", "c"]);
//! let x = vocab.transform("a a b z");
//! assert_eq!(x.entries(), [(0, 2), (1, 1)]);
//! ```

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod svm;
pub mod vectorizer;

pub use corpus::{AuthorRecord, Corpus, Gender, Language, TruthLabel};
pub use error::{Error, Result};
pub use eval::{CvSettings, EvalReport, FoldPlan, SynthSpec, Task};
pub use model::{LanguageModel, ModelFile};
pub use svm::{BinarySvmModel, GammaMode, KernelParams, MulticlassSvmModel, TrainOptions};
pub use vectorizer::{DocTermMatrix, SparseVector, Vocabulary};
