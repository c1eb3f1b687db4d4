//! Python bindings: `import authorprof`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;

use ::authorprof as ap;
use ::authorprof::eval::{self, CvSettings, SynthSpec, Task};
use ::authorprof::svm::{self, GammaMode, KernelParams, TrainOptions};
use ::authorprof::{vectorizer, Language};

create_exception!(authorprof, AuthorprofError, PyException);

fn err(e: ap::Error) -> PyErr {
    match e {
        ap::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        ap::Error::Parameter(_) | ap::Error::Value(_) | ap::Error::Usage(_) | ap::Error::Shape { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => AuthorprofError::new_err(e.to_string()),
    }
}

/// `"auto"` or a positive float.
fn gamma_mode(gamma: &Bound<'_, PyAny>) -> PyResult<GammaMode> {
    if let Ok(g) = gamma.extract::<f64>() {
        return Ok(GammaMode::Fixed(g));
    }
    let s: String = gamma.extract()?;
    s.parse().map_err(err)
}

fn language(code: &str) -> PyResult<Language> {
    code.parse().map_err(err)
}

fn task(name: &str) -> PyResult<Task> {
    match name {
        "gender" => Ok(Task::Gender),
        "variety" => Ok(Task::Variety),
        _ => Err(PyValueError::new_err(format!("task must be 'gender' or 'variety', got {name:?}"))),
    }
}

fn train_options(tol: f64, max_passes: usize) -> TrainOptions {
    TrainOptions {
        tol,
        max_passes,
        parallel: false,
    }
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    vectorizer::tokenize(text).into_iter().map(str::to_owned).collect()
}

#[pyclass(name = "SparseVector", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PySparseVector(ap::SparseVector);

#[pymethods]
impl PySparseVector {
    #[new]
    #[pyo3(signature = (dim, entries))]
    fn new(dim: usize, entries: Vec<(u32, u32)>) -> PyResult<Self> {
        ap::SparseVector::new(dim, entries).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_dense(counts: Vec<u32>) -> Self {
        Self(ap::SparseVector::from_dense(&counts))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn entries(&self) -> Vec<(u32, u32)> {
        self.0.entries().to_vec()
    }

    fn to_dense(&self) -> Vec<u32> {
        self.0.to_dense()
    }

    fn __repr__(&self) -> String {
        format!("SparseVector(dim={}, nnz={})", self.0.dim(), self.0.nnz())
    }
}

fn unwrap_rows(rows: Vec<PySparseVector>) -> Vec<ap::SparseVector> {
    rows.into_iter().map(|r| r.0).collect()
}

#[pyclass(name = "Vocabulary", frozen)]
struct PyVocabulary(ap::Vocabulary);

#[pymethods]
impl PyVocabulary {
    /// Terms occurring in at least `min_df` documents, sorted.
    #[staticmethod]
    fn fit(documents: Vec<String>, min_df: usize) -> PyResult<Self> {
        vectorizer::fit_vocabulary(&documents, min_df).map(Self).map_err(err)
    }

    #[getter]
    fn terms(&self) -> Vec<String> {
        self.0.terms().to_vec()
    }

    #[getter]
    fn min_df(&self) -> usize {
        self.0.min_df()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn column(&self, term: &str) -> Option<u32> {
        self.0.column(term)
    }

    fn doc_freq(&self, term: &str) -> Option<u32> {
        self.0.doc_freq(term)
    }

    fn transform(&self, document: &str) -> PySparseVector {
        PySparseVector(self.0.transform(document))
    }
}

#[pyfunction]
fn fit_vocabulary(documents: Vec<String>, min_df: usize) -> PyResult<PyVocabulary> {
    PyVocabulary::fit(documents, min_df)
}

#[pyfunction]
fn rbf_kernel(x: &PySparseVector, y: &PySparseVector, gamma: f64) -> PyResult<f64> {
    svm::rbf_kernel(&x.0, &y.0, gamma).map_err(err)
}

#[pyclass(name = "BinarySvm", frozen)]
struct PyBinarySvm(ap::BinarySvmModel);

#[pymethods]
impl PyBinarySvm {
    fn decision_function(&self, x: &PySparseVector) -> PyResult<f64> {
        self.0.decision_function(&x.0).map_err(err)
    }

    /// `α_i y_i` per support vector.
    #[getter]
    fn dual_coefs(&self) -> Vec<f64> {
        self.0.dual_coefs.clone()
    }

    #[getter]
    fn support_vectors(&self) -> Vec<PySparseVector> {
        self.0.support_vectors.iter().cloned().map(PySparseVector).collect()
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.0.bias
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.info.converged
    }

    #[getter]
    fn iterations(&self) -> u64 {
        self.0.info.iterations
    }
}

/// Binary RBF SVM on labels in {+1, −1}.
#[pyfunction]
#[pyo3(signature = (rows, y, c=1.0, gamma=None, tol=1e-3, max_passes=200))]
fn train_binary(
    rows: Vec<PySparseVector>,
    y: Vec<i8>,
    c: f64,
    gamma: Option<&Bound<'_, PyAny>>,
    tol: f64,
    max_passes: usize,
) -> PyResult<PyBinarySvm> {
    let params = KernelParams {
        gamma: gamma.map(gamma_mode).transpose()?.unwrap_or(GammaMode::Auto),
        c,
    };
    svm::train_binary(&unwrap_rows(rows), &y, &params, &train_options(tol, max_passes))
        .map(PyBinarySvm)
        .map_err(err)
}

#[pyclass(name = "MulticlassSvm", frozen)]
struct PyMulticlassSvm(ap::MulticlassSvmModel);

#[pymethods]
impl PyMulticlassSvm {
    #[getter]
    fn classes(&self) -> Vec<String> {
        self.0.classes().to_vec()
    }

    fn predict(&self, x: &PySparseVector) -> PyResult<String> {
        self.0.predict(&x.0).map(str::to_owned).map_err(err)
    }

    fn predict_many(&self, rows: Vec<PySparseVector>) -> PyResult<Vec<String>> {
        self.0.predict_many(&unwrap_rows(rows)).map_err(err)
    }

    fn all_converged(&self) -> bool {
        self.0.all_converged()
    }
}

#[pyfunction]
#[pyo3(signature = (rows, labels, c=1.0, gamma=None, tol=1e-3, max_passes=200))]
fn train_one_vs_one(
    rows: Vec<PySparseVector>,
    labels: Vec<String>,
    c: f64,
    gamma: Option<&Bound<'_, PyAny>>,
    tol: f64,
    max_passes: usize,
) -> PyResult<PyMulticlassSvm> {
    let params = KernelParams {
        gamma: gamma.map(gamma_mode).transpose()?.unwrap_or(GammaMode::Auto),
        c,
    };
    svm::train_one_vs_one(&unwrap_rows(rows), &labels, &params, &train_options(tol, max_passes))
        .map(PyMulticlassSvm)
        .map_err(err)
}

#[pyfunction]
fn accuracy(predicted: Vec<String>, truth: Vec<String>) -> PyResult<f64> {
    eval::accuracy(&predicted, &truth).map_err(err)
}

#[pyfunction]
fn average_accuracy(fold_accuracies: Vec<f64>) -> PyResult<f64> {
    eval::average_accuracy(&fold_accuracies).map_err(err)
}

/// Stratified fold index for each label.
#[pyfunction]
#[pyo3(signature = (labels, k=10, seed=0))]
fn make_folds(labels: Vec<String>, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    eval::make_folds(&labels, k, seed).map(|p| p.assignments).map_err(err)
}

#[pyclass(name = "Corpus", frozen)]
struct PyCorpus(ap::Corpus);

#[pymethods]
impl PyCorpus {
    #[getter]
    fn language(&self) -> &'static str {
        self.0.language().code()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn author_ids(&self) -> Vec<String> {
        self.0.author_ids()
    }

    fn documents(&self) -> Vec<String> {
        self.0.documents().into_iter().map(str::to_owned).collect()
    }

    /// `(author_id, gender, variety)` for each labeled author.
    fn labels(&self) -> Vec<(String, String, String)> {
        self.0
            .labels()
            .values()
            .map(|t| (t.author_id.clone(), t.gender.as_str().to_owned(), t.variety.clone()))
            .collect()
    }

    fn write_to_dir(&self, dir: PathBuf) -> PyResult<()> {
        self.0.write_to_dir(&dir).map_err(err)
    }
}

#[pyfunction]
#[pyo3(signature = (dir, truth=None))]
fn load_corpus(dir: PathBuf, truth: Option<PathBuf>) -> PyResult<PyCorpus> {
    ap::corpus::load_corpus(&dir, truth.as_deref()).map(PyCorpus).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (language="en", authors=200, tweets=100, varieties=3, signal_rate=0.3, seed=0))]
fn generate_synthetic_corpus(
    language: &str,
    authors: usize,
    tweets: usize,
    varieties: usize,
    signal_rate: f64,
    seed: u64,
) -> PyResult<PyCorpus> {
    let spec = SynthSpec::standard(self::language(language)?, authors, tweets, varieties, signal_rate, seed)
        .map_err(err)?;
    eval::generate_synthetic_corpus(&spec).map(PyCorpus).map_err(err)
}

/// Stratified k-fold cross-validation of one task; returns a dict.
#[pyfunction]
#[pyo3(signature = (corpus, task, min_df=10, folds=10, seed=0, c=1.0, gamma=None))]
#[allow(clippy::too_many_arguments)]
fn cross_validate<'py>(
    py: Python<'py>,
    corpus: &PyCorpus,
    task: &str,
    min_df: usize,
    folds: usize,
    seed: u64,
    c: f64,
    gamma: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let settings = CvSettings {
        params: KernelParams {
            gamma: gamma.map(gamma_mode).transpose()?.unwrap_or(GammaMode::Auto),
            c,
        },
        folds,
        seed,
        ..CvSettings::default()
    };
    let task = self::task(task)?;
    let report = py
        .detach(|| eval::cross_validate(&corpus.0, task, min_df, &settings))
        .map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("language", report.language.code())?;
    d.set_item("task", report.task.as_str())?;
    d.set_item("min_df", report.min_df)?;
    d.set_item("fold_accuracies", report.fold_accuracies)?;
    d.set_item("average_accuracy", report.average_accuracy)?;
    d.set_item("vocab_size", report.vocab_size)?;
    d.set_item("fold_vocab_sizes", report.fold_vocab_sizes)?;
    d.set_item("train_time_ms", report.train_time_ms)?;
    d.set_item("all_converged", report.all_converged)?;
    Ok(d)
}

/// Gender and variety models for one language, saved in the CLI's model format.
#[pyclass(name = "Model", frozen)]
struct PyModel(ap::LanguageModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (corpus, min_df=10, c=1.0, gamma=None))]
    fn train(py: Python<'_>, corpus: &PyCorpus, min_df: usize, c: f64, gamma: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let params = KernelParams {
            gamma: gamma.map(gamma_mode).transpose()?.unwrap_or(GammaMode::Auto),
            c,
        };
        py.detach(|| ap::LanguageModel::train(&corpus.0, min_df, &params, &TrainOptions::default()))
            .map(Self)
            .map_err(err)
    }

    /// Loads the model for `language` from a model file.
    #[staticmethod]
    fn load(path: PathBuf, language: &str) -> PyResult<Self> {
        let file = ap::ModelFile::load(&path).map_err(err)?;
        let model = file.for_language(self::language(language)?).map_err(err)?;
        Ok(Self(model.clone()))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        ap::ModelFile::new(vec![self.0.clone()]).save(&path).map_err(err)
    }

    #[getter]
    fn vocabulary(&self) -> PyVocabulary {
        PyVocabulary(self.0.vocabulary.clone())
    }

    /// `(author_id, gender, variety)` predictions.
    fn predict(&self, corpus: &PyCorpus) -> PyResult<Vec<(String, String, String)>> {
        let labels = self.0.predict(&corpus.0).map_err(err)?;
        Ok(labels
            .into_iter()
            .map(|t| (t.author_id, t.gender.as_str().to_owned(), t.variety))
            .collect())
    }
}

#[pymodule]
fn authorprof(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AuthorprofError", m.py().get_type::<AuthorprofError>())?;
    m.add_class::<PySparseVector>()?;
    m.add_class::<PyVocabulary>()?;
    m.add_class::<PyBinarySvm>()?;
    m.add_class::<PyMulticlassSvm>()?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(fit_vocabulary, m)?)?;
    m.add_function(wrap_pyfunction!(rbf_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(train_binary, m)?)?;
    m.add_function(wrap_pyfunction!(train_one_vs_one, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(average_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(make_folds, m)?)?;
    m.add_function(wrap_pyfunction!(load_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    Ok(())
}
