//! Bag-of-words encoding of a document corpus.
//!
//! Tokenization lowercases the text, splits on runs of non-alphanumeric
//! characters and drops empty tokens and stopwords. No stemming.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<(String, String)>,
    stopwords: HashSet<String>,
}

impl Corpus {
    pub fn new(documents: Vec<(String, String)>, stopwords: HashSet<String>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(documents.len());
        for (id, _) in &documents {
            if !ids.insert(id.as_str()) {
                return Err(Error::data(format!("duplicate document id '{id}'")));
            }
        }
        let stopwords = stopwords.into_iter().map(|w| w.to_lowercase()).collect();
        Ok(Self {
            documents,
            stopwords,
        })
    }

    pub fn documents(&self) -> &[(String, String)] {
        &self.documents
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn with_stopwords(mut self, stopwords: HashSet<String>) -> Self {
        self.stopwords = stopwords.into_iter().map(|w| w.to_lowercase()).collect();
        self
    }

    /// Every `.txt` file in `dir`, sorted by name; the id is the file name.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        let docs = paths
            .into_iter()
            .map(|p| {
                let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                let id = p
                    .file_name()
                    .map(|f| f.to_string_lossy().into_owned())
                    .unwrap_or_default();
                Ok((id, text))
            })
            .collect::<Result<_>>()?;
        Self::new(docs, HashSet::new())
    }

    /// JSON lines, one `{"id": ..., "text": ...}` object per line.
    pub fn from_jsonl(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Line {
            id: String,
            text: String,
        }
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let docs = raw
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let line: Line = serde_json::from_str(l)
                    .map_err(|e| Error::data(format!("{}:{}: {e}", path.display(), i + 1)))?;
                Ok((line.id, line.text))
            })
            .collect::<Result<_>>()?;
        Self::new(docs, HashSet::new())
    }

    /// A directory of `.txt` files or a JSON-lines file.
    pub fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Self::from_dir(path)
        } else {
            Self::from_jsonl(path)
        }
    }
}

/// One token per line; blank lines ignored.
pub fn read_stopwords(path: &Path) -> Result<HashSet<String>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(raw
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

pub fn preprocess(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !stopwords.contains(t))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

pub fn build_vocabulary(corpus: &Corpus) -> Result<Vocabulary> {
    let terms: BTreeSet<String> = corpus
        .documents
        .iter()
        .flat_map(|(_, text)| preprocess(text, &corpus.stopwords))
        .collect();
    if terms.is_empty() {
        return Err(Error::data("corpus has no tokens after preprocessing"));
    }
    let terms: Vec<String> = terms.into_iter().collect();
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(Vocabulary { terms, index })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// Occurrence counts.
    Raw,
    /// Presence indicators.
    Binary,
}

impl std::str::FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "binary" => Ok(Self::Binary),
            other => Err(Error::usage(format!(
                "unknown encoding '{other}' (raw or binary)"
            ))),
        }
    }
}

/// Documents by vocabulary terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTermMatrix {
    pub doc_ids: Vec<String>,
    pub terms: Vec<String>,
    pub counts: Vec<Vec<u32>>,
    pub encoding: Encoding,
}

impl DocTermMatrix {
    /// Presence indicators of this matrix.
    pub fn binarize(&self) -> Self {
        Self {
            counts: self
                .counts
                .iter()
                .map(|r| r.iter().map(|&c| u32::from(c > 0)).collect())
                .collect(),
            encoding: Encoding::Binary,
            ..self.clone()
        }
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new(
            self.counts
                .iter()
                .map(|r| r.iter().map(|&c| f64::from(c)).collect())
                .collect(),
            self.terms.clone(),
            self.doc_ids.clone(),
        )
    }

    /// CSV with an `id` column followed by one column per term.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::data(format!("csv write: {e}"));
        out.write_record(std::iter::once("id").chain(self.terms.iter().map(String::as_str)))
            .map_err(csv_err)?;
        for (id, row) in self.doc_ids.iter().zip(&self.counts) {
            out.write_record(std::iter::once(id.clone()).chain(row.iter().map(|c| c.to_string())))
                .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Out-of-vocabulary tokens are dropped.
pub fn encode(corpus: &Corpus, vocab: &Vocabulary, encoding: Encoding) -> DocTermMatrix {
    let counts = corpus
        .documents
        .iter()
        .map(|(_, text)| {
            let mut row = vec![0u32; vocab.len()];
            for tok in preprocess(text, &corpus.stopwords) {
                if let Some(j) = vocab.column(&tok) {
                    row[j] = match encoding {
                        Encoding::Raw => row[j] + 1,
                        Encoding::Binary => 1,
                    };
                }
            }
            row
        })
        .collect();
    DocTermMatrix {
        doc_ids: corpus.documents.iter().map(|(id, _)| id.clone()).collect(),
        terms: vocab.terms.clone(),
        counts,
        encoding,
    }
}
