//! PAN-style corpus ingestion.
//!
//! An author lives in `<author_id>.xml`:
//!
//! ```xml
//! <author lang="en">
//!   <documents>
//!     <document>first tweet</document>
//!     <document>second tweet</document>
//!   </documents>
//! </author>
//! ```
//!
//! `document` elements may also sit directly under the root. Labels come from a
//! truth file with one `id:::gender:::variety` line per author.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRUTH_DELIMITER: &str = ":::";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Es,
    Pt,
    Ar,
}

impl Language {
    pub const ALL: [Language; 4] = [Language::En, Language::Es, Language::Pt, Language::Ar];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Es => "es",
            Language::Pt => "pt",
            Language::Ar => "ar",
        }
    }

    /// Closed set of language-variety labels for this language.
    pub fn varieties(self) -> &'static [&'static str] {
        match self {
            Language::En => &[
                "australia",
                "canada",
                "great britain",
                "ireland",
                "new zealand",
                "united states",
            ],
            Language::Es => &[
                "argentina",
                "chile",
                "colombia",
                "mexico",
                "peru",
                "spain",
                "venezuela",
            ],
            Language::Pt => &["brazil", "portugal"],
            Language::Ar => &["egypt", "gulf", "levantine", "maghrebi"],
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "en" => Ok(Language::En),
            "es" => Ok(Language::Es),
            "pt" => Ok(Language::Pt),
            "ar" => Ok(Language::Ar),
            other => Err(Error::Value(format!("unknown language code '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            other => Err(Error::Value(format!("unknown gender '{other}'"))),
        }
    }
}

/// One author: their tweets and the single document built from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorRecord {
    author_id: String,
    language: Language,
    tweets: Vec<String>,
    document: String,
}

impl AuthorRecord {
    pub fn new(author_id: impl Into<String>, language: Language, tweets: Vec<String>) -> Result<Self> {
        let author_id = author_id.into();
        if author_id.is_empty() {
            return Err(Error::Value("author id must be non-empty".into()));
        }
        let document = tweets.join(" ");
        Ok(AuthorRecord {
            author_id,
            language,
            tweets,
            document,
        })
    }

    pub fn author_id(&self) -> &str {
        &self.author_id
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn tweets(&self) -> &[String] {
        &self.tweets
    }

    /// The author's tweets joined by single spaces.
    pub fn document(&self) -> &str {
        &self.document
    }

    /// Serialize in the schema accepted by [`parse_author_xml`].
    pub fn to_xml(&self) -> String {
        let mut out = String::with_capacity(self.document.len() + 64 * self.tweets.len() + 96);
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(&format!("<author lang=\"{}\">\n\t<documents>\n", self.language));
        for tweet in &self.tweets {
            out.push_str("\t\t<document>");
            escape_xml_into(tweet, &mut out);
            out.push_str("</document>\n");
        }
        out.push_str("\t</documents>\n</author>\n");
        out
    }
}

fn escape_xml_into(text: &str, out: &mut String) {
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            // keep CR and TAB from being normalized away by the reader
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
}

pub fn concat_tweets(record: &AuthorRecord) -> String {
    record.tweets.join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthLabel {
    pub author_id: String,
    pub gender: Gender,
    pub variety: String,
}

impl TruthLabel {
    pub fn to_line(&self) -> String {
        format!(
            "{}{d}{}{d}{}",
            self.author_id,
            self.gender,
            self.variety,
            d = TRUTH_DELIMITER
        )
    }
}

/// Authors of one language, sorted by id, with optional truth labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    language: Language,
    authors: Vec<AuthorRecord>,
    labels: BTreeMap<String, TruthLabel>,
}

impl Corpus {
    /// Builds a corpus, sorting authors by id and checking that ids are unique,
    /// languages agree and every label refers to exactly one author with a variety
    /// valid for the language.
    pub fn new(
        language: Language,
        mut authors: Vec<AuthorRecord>,
        labels: Vec<TruthLabel>,
    ) -> Result<Self> {
        authors.sort_by(|a, b| a.author_id.cmp(&b.author_id));
        for pair in authors.windows(2) {
            if pair[0].author_id == pair[1].author_id {
                return Err(Error::Consistency(format!(
                    "duplicate author id '{}'",
                    pair[0].author_id
                )));
            }
        }
        if let Some(a) = authors.iter().find(|a| a.language != language) {
            return Err(Error::Consistency(format!(
                "author '{}' has language '{}' but the corpus language is '{}'",
                a.author_id, a.language, language
            )));
        }

        let mut label_map = BTreeMap::new();
        for label in labels {
            if authors
                .binary_search_by(|a| a.author_id.as_str().cmp(&label.author_id))
                .is_err()
            {
                return Err(Error::Consistency(format!(
                    "truth label references unknown author '{}'",
                    label.author_id
                )));
            }
            if !language.varieties().contains(&label.variety.as_str()) {
                return Err(Error::Consistency(format!(
                    "author '{}': variety '{}' is not a '{}' variety",
                    label.author_id, label.variety, language
                )));
            }
            let id = label.author_id.clone();
            if label_map.insert(id.clone(), label).is_some() {
                return Err(Error::Consistency(format!("duplicate truth label for '{id}'")));
            }
        }

        Ok(Corpus {
            language,
            authors,
            labels: label_map,
        })
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn authors(&self) -> &[AuthorRecord] {
        &self.authors
    }

    pub fn labels(&self) -> &BTreeMap<String, TruthLabel> {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.authors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.authors.is_empty()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.len() == self.authors.len()
    }

    pub fn documents(&self) -> Vec<&str> {
        self.authors.iter().map(|a| a.document()).collect()
    }

    pub fn author_ids(&self) -> Vec<String> {
        self.authors.iter().map(|a| a.author_id.clone()).collect()
    }

    /// Labels in author order. Fails if any author is unlabeled.
    pub fn ordered_labels(&self) -> Result<Vec<&TruthLabel>> {
        self.authors
            .iter()
            .map(|a| {
                self.labels.get(&a.author_id).ok_or_else(|| {
                    Error::Consistency(format!("author '{}' has no truth label", a.author_id))
                })
            })
            .collect()
    }

    /// Writes one XML file per author and, when labeled, a `truth.txt`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for author in &self.authors {
            let path = dir.join(format!("{}.xml", author.author_id));
            fs::write(&path, author.to_xml()).map_err(|e| Error::io(&path, e))?;
        }
        if !self.labels.is_empty() {
            let labels: Vec<&TruthLabel> = self.labels.values().collect();
            write_truth_file(&dir.join("truth.txt"), labels)?;
        }
        Ok(())
    }
}

fn byte_offset(text: &str, row: u32, col: u32) -> usize {
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == row as usize {
            let chars = (col as usize).saturating_sub(1);
            return offset + line.chars().take(chars).map(char::len_utf8).sum::<usize>();
        }
        offset += line.len();
    }
    text.len()
}

/// Parses one author's XML from memory. `path` is used for the author id and diagnostics.
pub fn parse_author_xml_str(path: &Path, text: &str) -> Result<AuthorRecord> {
    let author_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();

    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let pos = e.pos();
        Error::Xml {
            path: path.to_path_buf(),
            offset: byte_offset(text, pos.row, pos.col),
            message: e.to_string(),
        }
    })?;

    let schema = |message: &str| Error::Schema {
        path: path.to_path_buf(),
        message: message.to_string(),
    };

    let root = doc.root_element();
    let lang = root
        .attribute("lang")
        .ok_or_else(|| schema("root element has no 'lang' attribute"))?;
    let language: Language = lang
        .parse()
        .map_err(|_| schema(&format!("unsupported language '{lang}'")))?;

    let mut tweets = Vec::new();
    for child in root.children().filter(|n| n.is_element()) {
        match child.tag_name().name() {
            "document" => tweets.push(element_text(child)),
            "documents" => tweets.extend(
                child
                    .children()
                    .filter(|n| n.is_element() && n.tag_name().name() == "document")
                    .map(element_text),
            ),
            _ => {}
        }
    }
    if tweets.is_empty() {
        return Err(schema("no 'document' elements"));
    }

    AuthorRecord::new(author_id, language, tweets).map_err(|_| schema("empty author id"))
}

fn element_text(node: roxmltree::Node<'_, '_>) -> String {
    node.descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect()
}

pub fn parse_author_xml(path: &Path) -> Result<AuthorRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_author_xml_str(path, &text)
}

/// Parses `id:::gender:::variety` lines. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_truth_str(path: &Path, text: &str) -> Result<Vec<TruthLabel>> {
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(TRUTH_DELIMITER).collect();
        if fields.len() != 3 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected 3 ':::'-separated fields, found {}", fields.len()),
            });
        }
        let gender = fields[1].trim().parse::<Gender>().map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        labels.push(TruthLabel {
            author_id: fields[0].trim().to_string(),
            gender,
            variety: fields[2].trim().to_string(),
        });
    }
    Ok(labels)
}

pub fn parse_truth_file(path: &Path) -> Result<Vec<TruthLabel>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_truth_str(path, &text)
}

pub fn write_truth_file<'a>(
    path: &Path,
    labels: impl IntoIterator<Item = &'a TruthLabel>,
) -> Result<()> {
    let mut out = String::new();
    for label in labels {
        out.push_str(&label.to_line());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads every `*.xml` file in `dir`. Other files (including the truth file) are
/// ignored. With `truth`, every author must be labeled.
pub fn load_corpus(dir: &Path, truth: Option<&Path>) -> Result<Corpus> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "xml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Consistency(format!(
            "{}: no author XML files",
            dir.display()
        )));
    }

    let authors = paths
        .par_iter()
        .map(|p| parse_author_xml(p))
        .collect::<Result<Vec<_>>>()?;

    let mut seen = HashSet::new();
    for a in &authors {
        if !seen.insert(a.author_id.as_str()) {
            return Err(Error::Consistency(format!("duplicate author id '{}'", a.author_id)));
        }
    }

    let language = authors[0].language;
    let labels = match truth {
        Some(t) => parse_truth_file(t)?,
        None => Vec::new(),
    };
    let corpus = Corpus::new(language, authors, labels)?;

    if truth.is_some() {
        if let Some(a) = corpus
            .authors
            .iter()
            .find(|a| !corpus.labels.contains_key(&a.author_id))
        {
            return Err(Error::Consistency(format!(
                "author '{}' has no truth label",
                a.author_id
            )));
        }
    }
    Ok(corpus)
}
