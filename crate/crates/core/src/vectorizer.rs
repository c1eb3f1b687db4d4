//! Whitespace tokenization, document-frequency gated vocabularies and the
//! author × term count matrix.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Splits on runs of Unicode whitespace. No case folding or other normalization.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Sparse count vector with strictly increasing column ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "SparseVectorRepr", into = "SparseVectorRepr")]
pub struct SparseVector {
    entries: Vec<(u32, u32)>,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct SparseVectorRepr {
    dim: usize,
    entries: Vec<(u32, u32)>,
}

impl TryFrom<SparseVectorRepr> for SparseVector {
    type Error = Error;

    fn try_from(r: SparseVectorRepr) -> Result<Self> {
        SparseVector::new(r.dim, r.entries)
    }
}

impl From<SparseVector> for SparseVectorRepr {
    fn from(v: SparseVector) -> Self {
        SparseVectorRepr {
            dim: v.dim,
            entries: v.entries,
        }
    }
}

impl SparseVector {
    pub fn new(dim: usize, entries: Vec<(u32, u32)>) -> Result<Self> {
        let mut prev: Option<u32> = None;
        for &(col, count) in &entries {
            if count == 0 {
                return Err(Error::Value(format!("zero count stored at column {col}")));
            }
            if (col as usize) >= dim {
                return Err(Error::Value(format!("column {col} out of range for dim {dim}")));
            }
            if prev.is_some_and(|p| p >= col) {
                return Err(Error::Value("column ids must be strictly increasing".into()));
            }
            prev = Some(col);
        }
        Ok(SparseVector { entries, dim })
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dim,
        }
    }

    /// Builds from dense counts, dropping zeros.
    pub fn from_dense(counts: &[u32]) -> Self {
        let entries = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as u32, c))
            .collect();
        SparseVector {
            entries,
            dim: counts.len(),
        }
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn get(&self, col: u32) -> u32 {
        self.entries
            .binary_search_by_key(&col, |&(c, _)| c)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> Vec<u32> {
        let mut out = vec![0; self.dim];
        for &(c, v) in &self.entries {
            out[c as usize] = v;
        }
        out
    }
}

/// Sorted term list with document frequencies, gated by `min_df`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    index: HashMap<String, u32>,
    min_df: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    min_df: usize,
    terms: Vec<String>,
    doc_freq: Vec<u32>,
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabularyRepr) -> Result<Self> {
        Vocabulary::from_parts(r.terms, r.doc_freq, r.min_df)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            min_df: v.min_df,
            terms: v.terms,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    /// Rebuilds a vocabulary from stored parts, re-checking sort order and the df gate.
    pub fn from_parts(terms: Vec<String>, doc_freq: Vec<u32>, min_df: usize) -> Result<Self> {
        if min_df < 1 {
            return Err(Error::Parameter("min_df must be at least 1".into()));
        }
        if terms.len() != doc_freq.len() {
            return Err(Error::Shape {
                expected: terms.len(),
                found: doc_freq.len(),
            });
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Value("vocabulary terms must be strictly sorted".into()));
        }
        if let Some(i) = doc_freq.iter().position(|&df| (df as usize) < min_df) {
            return Err(Error::Value(format!(
                "term '{}' has df {} < min_df {}",
                terms[i], doc_freq[i], min_df
            )));
        }
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Vocabulary {
            terms,
            doc_freq,
            index,
            min_df,
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn column(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, term: &str) -> Option<u32> {
        self.column(term).map(|c| self.doc_freq[c as usize])
    }

    pub fn doc_freqs(&self) -> &[u32] {
        &self.doc_freq
    }

    pub fn transform(&self, document: &str) -> SparseVector {
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for token in document.split_whitespace() {
            if let Some(col) = self.column(token) {
                *counts.entry(col).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(u32, u32)> = counts.into_iter().collect();
        entries.sort_unstable();
        SparseVector {
            entries,
            dim: self.terms.len(),
        }
    }

    /// Tab-separated export: a `min_df` header line, a column header, then one
    /// `term  column  doc_freq` row per term.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "#min_df\t{}", self.min_df)?;
        writeln!(w, "term\tcolumn\tdoc_freq")?;
        for (i, (t, df)) in self.terms.iter().zip(&self.doc_freq).enumerate() {
            writeln!(w, "{t}\t{i}\t{df}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let bad = |msg: String| Error::Value(format!("vocabulary file: {msg}"));
        let mut lines = r.lines();
        let mut next = || -> Result<Option<String>> {
            lines
                .next()
                .transpose()
                .map_err(|e| bad(e.to_string()))
        };
        let header = next()?.ok_or_else(|| bad("missing min_df header".into()))?;
        let min_df = header
            .strip_prefix("#min_df\t")
            .and_then(|v| v.trim().parse::<usize>().ok())
            .ok_or_else(|| bad(format!("bad header '{header}'")))?;
        let columns = next()?.ok_or_else(|| bad("missing column header".into()))?;
        if columns.trim_end() != "term\tcolumn\tdoc_freq" {
            return Err(bad(format!("bad column header '{columns}'")));
        }
        let mut terms = Vec::new();
        let mut dfs = Vec::new();
        while let Some(line) = next()? {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(bad(format!("bad row '{line}'")));
            }
            let col: usize = fields[1].parse().map_err(|_| bad(format!("bad column in '{line}'")))?;
            if col != terms.len() {
                return Err(bad(format!("column {col} out of order")));
            }
            terms.push(fields[0].to_string());
            dfs.push(fields[2].parse().map_err(|_| bad(format!("bad df in '{line}'")))?);
        }
        Vocabulary::from_parts(terms, dfs, min_df)
    }
}

pub fn transform(document: &str, vocab: &Vocabulary) -> SparseVector {
    vocab.transform(document)
}

/// Counts, for every token, how many documents contain it at least once.
pub fn document_frequencies<S: AsRef<str> + Sync>(documents: &[S]) -> HashMap<String, u32> {
    documents
        .par_iter()
        .map(|doc| {
            doc.as_ref()
                .split_whitespace()
                .collect::<HashSet<&str>>()
        })
        .fold(HashMap::<String, u32>::new, |mut acc, seen| {
            for t in seen {
                *acc.entry(t.to_string()).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |a, b| {
            if a.len() >= b.len() {
                merge_counts(a, b)
            } else {
                merge_counts(b, a)
            }
        })
}

fn merge_counts(mut into: HashMap<String, u32>, from: HashMap<String, u32>) -> HashMap<String, u32> {
    for (t, c) in from {
        *into.entry(t).or_insert(0) += c;
    }
    into
}

/// Keeps every term whose document frequency is at least `min_df`.
pub fn fit_vocabulary<S: AsRef<str> + Sync>(documents: &[S], min_df: usize) -> Result<Vocabulary> {
    if min_df < 1 {
        return Err(Error::Parameter("min_df must be at least 1".into()));
    }
    if documents.is_empty() {
        return Err(Error::Parameter("cannot fit a vocabulary on zero documents".into()));
    }
    let mut kept: Vec<(String, u32)> = document_frequencies(documents)
        .into_iter()
        .filter(|&(_, df)| df as usize >= min_df)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary { min_df });
    }
    kept.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let (terms, doc_freq) = kept.into_iter().unzip();
    Vocabulary::from_parts(terms, doc_freq, min_df)
}

/// The author × term matrix. Rows follow corpus author order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTermMatrix {
    pub rows: Vec<SparseVector>,
    pub vocab: Vocabulary,
    pub row_ids: Vec<String>,
}

impl DocTermMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.vocab.len()
    }
}

pub fn fit_transform_documents<S: AsRef<str> + Sync>(
    row_ids: Vec<String>,
    documents: &[S],
    min_df: usize,
) -> Result<DocTermMatrix> {
    if row_ids.len() != documents.len() {
        return Err(Error::Shape {
            expected: documents.len(),
            found: row_ids.len(),
        });
    }
    let vocab = fit_vocabulary(documents, min_df)?;
    let rows = documents
        .par_iter()
        .map(|d| vocab.transform(d.as_ref()))
        .collect();
    Ok(DocTermMatrix {
        rows,
        vocab,
        row_ids,
    })
}

pub fn fit_transform(corpus: &Corpus, min_df: usize) -> Result<DocTermMatrix> {
    fit_transform_documents(corpus.author_ids(), &corpus.documents(), min_df)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonTerm {
    pub term: String,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopTerms {
    /// Per class: `(term, total count)` in rank order.
    pub per_class: BTreeMap<String, Vec<(String, u64)>>,
    /// Terms present in every class's top list, ranked by summed count.
    pub common: Vec<CommonTerm>,
}

/// Ranks terms per class by their summed count over the class's rows.
/// Ties are broken lexicographically.
pub fn top_terms_by_class(
    matrix: &DocTermMatrix,
    labels: &BTreeMap<String, String>,
    k: usize,
) -> Result<TopTerms> {
    let mut totals: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for (row, id) in matrix.rows.iter().zip(&matrix.row_ids) {
        let class = labels
            .get(id)
            .ok_or_else(|| Error::Consistency(format!("row '{id}' has no class label")))?;
        let acc = totals
            .entry(class.as_str())
            .or_insert_with(|| vec![0; matrix.n_cols()]);
        for &(c, v) in row.entries() {
            acc[c as usize] += v as u64;
        }
    }

    let mut per_class = BTreeMap::new();
    for (class, counts) in &totals {
        let mut ranked: Vec<(u32, u64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as u32, c))
            .collect();
        // column order is lexicographic term order
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        let list: Vec<(String, u64)> = ranked
            .into_iter()
            .map(|(col, c)| (matrix.vocab.terms()[col as usize].clone(), c))
            .collect();
        per_class.insert(class.to_string(), list);
    }

    let mut common = Vec::new();
    if per_class.len() > 1 {
        let mut iter = per_class.values();
        let mut shared: HashSet<&str> = iter
            .next()
            .map(|l| l.iter().map(|(t, _)| t.as_str()).collect())
            .unwrap_or_default();
        for list in iter {
            let these: HashSet<&str> = list.iter().map(|(t, _)| t.as_str()).collect();
            shared.retain(|t| these.contains(t));
        }
        for term in shared {
            let col = matrix.vocab.column(term).expect("term from vocabulary") as usize;
            let counts = totals
                .iter()
                .map(|(class, c)| (class.to_string(), c[col]))
                .collect();
            common.push(CommonTerm {
                term: term.to_string(),
                counts,
            });
        }
        common.sort_by(|a, b| {
            let sa: u64 = a.counts.values().sum();
            let sb: u64 = b.counts.values().sum();
            sb.cmp(&sa).then_with(|| a.term.cmp(&b.term))
        });
    }

    Ok(TopTerms { per_class, common })
}
