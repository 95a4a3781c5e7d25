//! Labeled text corpora: loading, cleaning, subsampling and stratified splits.

mod clean;
pub mod topics;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use clean::clean_newsgroup_text;

/// One labeled text unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextExample {
    pub id: String,
    pub text: String,
    pub label: String,
}

impl TextExample {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    #[default]
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::invalid(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// Ordered examples plus the ordered set of distinct labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    examples: Vec<TextExample>,
    labels: Vec<String>,
}

impl Corpus {
    /// Builds a corpus whose label set is the labels in order of first appearance.
    pub fn new(examples: Vec<TextExample>) -> Result<Self> {
        let mut labels: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        for ex in &examples {
            if seen.insert(ex.label.as_str()) {
                labels.push(ex.label.clone());
            }
        }
        Self::with_labels(examples, labels)
    }

    /// Builds a corpus with an explicit label order. Labels in `labels` need
    /// not all be used, but every example label must be listed.
    pub fn with_labels(examples: Vec<TextExample>, labels: Vec<String>) -> Result<Self> {
        let known: HashSet<&str> = labels.iter().map(String::as_str).collect();
        if known.len() != labels.len() {
            return Err(Error::invalid("label set contains duplicates"));
        }
        let mut ids = HashSet::with_capacity(examples.len());
        for ex in &examples {
            if !ids.insert(ex.id.as_str()) {
                return Err(Error::DuplicateId(ex.id.clone()));
            }
            if !known.contains(ex.label.as_str()) {
                return Err(Error::invalid(format!(
                    "example {:?} has label {:?} outside the label set",
                    ex.id, ex.label
                )));
            }
        }
        Ok(Self { examples, labels })
    }

    pub fn examples(&self) -> &[TextExample] {
        &self.examples
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn into_examples(self) -> Vec<TextExample> {
        self.examples
    }

    /// Example indices grouped by label, in label-set order.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let pos: HashMap<&str, usize> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut members = vec![Vec::new(); self.labels.len()];
        for (i, ex) in self.examples.iter().enumerate() {
            members[pos[ex.label.as_str()]].push(i);
        }
        members
    }

    /// (label, count) pairs in label-set order.
    pub fn class_counts(&self) -> Vec<(String, usize)> {
        self.labels
            .iter()
            .cloned()
            .zip(self.class_members().iter().map(Vec::len))
            .collect()
    }

    fn select(&self, mut indices: Vec<usize>) -> Corpus {
        indices.sort_unstable();
        Corpus {
            examples: indices.into_iter().map(|i| self.examples[i].clone()).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Result of cleaning every example of a corpus.
#[derive(Debug, Clone)]
pub struct CleanedCorpus {
    pub corpus: Corpus,
    /// Examples that were empty after cleaning and therefore dropped.
    pub dropped: usize,
}

pub fn clean_corpus(corpus: &Corpus) -> CleanedCorpus {
    let mut dropped = 0;
    let examples = corpus
        .examples
        .iter()
        .filter_map(|ex| {
            let text = clean_newsgroup_text(&ex.text);
            if text.is_empty() {
                dropped += 1;
                None
            } else {
                Some(TextExample::new(ex.id.clone(), text, ex.label.clone()))
            }
        })
        .collect();
    CleanedCorpus {
        corpus: Corpus {
            examples,
            labels: corpus.labels.clone(),
        },
        dropped,
    }
}

#[derive(Deserialize)]
struct RawRow {
    id: Option<String>,
    text: Option<String>,
    label: Option<String>,
}

fn row_to_example(path: &Path, row_number: usize, index: usize, raw: RawRow) -> Result<TextExample> {
    let missing = |field: &str| Error::MalformedRow {
        path: path.to_path_buf(),
        row: row_number,
        message: format!("missing field {field:?}"),
    };
    let text = raw.text.ok_or_else(|| missing("text"))?;
    let label = raw.label.ok_or_else(|| missing("label"))?;
    let id = raw.id.unwrap_or_else(|| index.to_string());
    Ok(TextExample { id, text, label })
}

/// Loads a corpus from JSONL (`{"text","label"[,"id"]}` per line) or CSV
/// (header `text,label[,id]`). Missing ids become the zero-based row index.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut examples = Vec::new();
    match format {
        CorpusFormat::Jsonl => {
            let reader = BufReader::new(file);
            for (line_no, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let raw: RawRow = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
                    path: path.to_path_buf(),
                    row: line_no + 1,
                    message: e.to_string(),
                })?;
                let index = examples.len();
                examples.push(row_to_example(path, line_no + 1, index, raw)?);
            }
        }
        CorpusFormat::Csv => {
            let mut reader = csv::Reader::from_reader(file);
            for (i, record) in reader.deserialize::<RawRow>().enumerate() {
                // header is line 1
                let row_number = i + 2;
                let raw = record.map_err(|e| Error::MalformedRow {
                    path: path.to_path_buf(),
                    row: row_number,
                    message: e.to_string(),
                })?;
                examples.push(row_to_example(path, row_number, i, raw)?);
            }
        }
    }
    Corpus::new(examples)
}

/// Writes the corpus as JSONL with keys `id`, `text`, `label`.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for ex in &corpus.examples {
        serde_json::to_writer(&mut out, ex)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Per-class quotas for `total` examples: an even split with the remainder
/// going to the first classes in label order. Classes that cannot fill their
/// share pass the excess on, again in label order.
fn class_quotas(sizes: &[usize], total: usize) -> Vec<usize> {
    let n = sizes.len();
    let mut quotas = vec![0; n];
    let mut remaining = total;
    loop {
        let open: Vec<usize> = (0..n).filter(|&c| quotas[c] < sizes[c]).collect();
        if remaining == 0 || open.is_empty() {
            return quotas;
        }
        let share = remaining / open.len();
        let extra = remaining % open.len();
        for (rank, &c) in open.iter().enumerate() {
            let want = share + usize::from(rank < extra);
            let take = want.min(sizes[c] - quotas[c]);
            quotas[c] += take;
            remaining -= take;
        }
    }
}

/// Draws `total` examples spread evenly over classes, without replacement.
pub fn subsample_per_class(corpus: &Corpus, total: usize, seed: u64) -> Result<Corpus> {
    if total > corpus.len() {
        return Err(Error::invalid(format!(
            "subsample total {total} exceeds the {} available examples",
            corpus.len()
        )));
    }
    let members = corpus.class_members();
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!(
            "class {:?} has no examples",
            corpus.labels[c]
        )));
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = class_quotas(&sizes, total);
    if let Some(c) = quotas.iter().position(|&q| q == 0) {
        return Err(Error::invalid(format!(
            "subsample total {total} leaves class {:?} with 0 examples",
            corpus.labels[c]
        )));
    }
    let mut chosen = Vec::with_capacity(total);
    for (c, (mut idx, quota)) in members.into_iter().zip(quotas).enumerate() {
        idx.shuffle(&mut rng::stream(seed, &[0x5eb5, c as u64]));
        chosen.extend_from_slice(&idx[..quota]);
    }
    Ok(corpus.select(chosen))
}

/// Stratified split: each class is shuffled and cut at `ceil(fraction * n_c)`.
pub fn split_corpus(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut idx) in corpus.class_members().into_iter().enumerate() {
        let n = idx.len();
        if n == 0 {
            continue;
        }
        // guard against 0.8 * 10 = 8.000000001 style rounding
        let cut = ((train_fraction * n as f64) - 1e-9).ceil() as usize;
        if cut == 0 || cut >= n {
            return Err(Error::invalid(format!(
                "class {:?} with {n} examples cannot appear on both sides of a {train_fraction} split",
                corpus.labels[c]
            )));
        }
        idx.shuffle(&mut rng::stream(seed, &[0x5917, c as u64]));
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    Ok((corpus.select(train), corpus.select(test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(counts: &[(&str, usize)]) -> Corpus {
        let mut examples = Vec::new();
        for (label, n) in counts {
            for i in 0..*n {
                examples.push(TextExample::new(
                    format!("{label}{i}"),
                    format!("text {label} {i}"),
                    *label,
                ));
            }
        }
        Corpus::new(examples).unwrap()
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_jsonl_three_rows() {
        let f = write_tmp(
            "{\"id\":\"a\",\"text\":\"one\",\"label\":\"x\"}\n\
             {\"id\":\"b\",\"text\":\"two\",\"label\":\"y\"}\n\
             {\"id\":\"c\",\"text\":\"three\",\"label\":\"x\"}\n",
        );
        let corpus = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.labels(), ["x", "y"]);
        assert_eq!(corpus.examples()[1].id, "b");
    }

    #[test]
    fn load_empty_file() {
        let f = write_tmp("");
        let corpus = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert!(corpus.is_empty());
        assert!(corpus.labels().is_empty());
    }

    #[test]
    fn missing_label_names_row() {
        let f = write_tmp("{\"text\":\"ok\",\"label\":\"x\"}\n{\"text\":\"no label\"}\n");
        let err = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap_err();
        match err {
            Error::MalformedRow { row, message, .. } => {
                assert_eq!(row, 2);
                assert!(message.contains("label"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn synthesized_ids_and_duplicates() {
        let f = write_tmp("{\"text\":\"a\",\"label\":\"x\"}\n{\"text\":\"b\",\"label\":\"x\"}\n");
        let corpus = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(corpus.examples()[0].id, "0");
        assert_eq!(corpus.examples()[1].id, "1");

        let f = write_tmp("{\"id\":\"1\",\"text\":\"a\",\"label\":\"x\"}\n{\"text\":\"b\",\"label\":\"x\"}\n");
        assert!(matches!(
            load_corpus(f.path(), CorpusFormat::Jsonl),
            Err(Error::DuplicateId(id)) if id == "1"
        ));
    }

    #[test]
    fn load_csv() {
        let f = write_tmp("text,label,id\n\"hello, world\",greet,g1\nbye,part,p1\n");
        let corpus = load_corpus(f.path(), CorpusFormat::Csv).unwrap();
        assert_eq!(corpus.examples()[0].text, "hello, world");
        assert_eq!(corpus.labels(), ["greet", "part"]);

        let f = write_tmp("text,id\nhello,g1\n");
        assert!(matches!(
            load_corpus(f.path(), CorpusFormat::Csv),
            Err(Error::MalformedRow { row: 2, .. })
        ));
    }

    #[test]
    fn unreadable_file() {
        let err = load_corpus(Path::new("/nonexistent/corpus.jsonl"), CorpusFormat::Jsonl);
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn cleaning_drops_empty_examples() {
        let corpus = Corpus::new(vec![
            TextExample::new("a", "From: x\n\nbody", "l"),
            TextExample::new("b", "--\nonly sig", "l"),
        ])
        .unwrap();
        let cleaned = clean_corpus(&corpus);
        assert_eq!(cleaned.dropped, 1);
        assert_eq!(cleaned.corpus.examples()[0].text, "body");
    }

    #[test]
    fn subsample_even_division() {
        let corpus = toy(&[("a", 5), ("b", 5), ("c", 5), ("d", 5)]);
        let sub = subsample_per_class(&corpus, 8, 7).unwrap();
        let counts: Vec<usize> = sub.class_counts().iter().map(|c| c.1).collect();
        assert_eq!(counts, [2, 2, 2, 2]);
    }

    #[test]
    fn subsample_remainder_in_label_order() {
        let corpus = toy(&[("a", 5), ("b", 5), ("c", 5), ("d", 5)]);
        let sub = subsample_per_class(&corpus, 10, 1).unwrap();
        let counts: Vec<usize> = sub.class_counts().iter().map(|c| c.1).collect();
        assert_eq!(counts, [3, 3, 2, 2]);
    }

    #[test]
    fn subsample_identity_and_errors() {
        let corpus = toy(&[("a", 6), ("b", 2)]);
        let sub = subsample_per_class(&corpus, 8, 3).unwrap();
        assert_eq!(sub, corpus);
        assert!(subsample_per_class(&corpus, 9, 3).is_err());
        assert!(subsample_per_class(&corpus, 1, 3).is_err());
    }

    #[test]
    fn subsample_is_deterministic() {
        let corpus = toy(&[("a", 20), ("b", 20)]);
        assert_eq!(
            subsample_per_class(&corpus, 10, 5).unwrap(),
            subsample_per_class(&corpus, 10, 5).unwrap()
        );
        assert_ne!(
            subsample_per_class(&corpus, 10, 5).unwrap(),
            subsample_per_class(&corpus, 10, 6).unwrap()
        );
    }

    #[test]
    fn split_single_class() {
        let corpus = toy(&[("a", 10)]);
        let (train, test) = split_corpus(&corpus, 0.8, 1).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(split_corpus(&corpus, 0.8, 1).unwrap(), (train, test));
    }

    #[test]
    fn split_ceiling_per_class() {
        let corpus = toy(&[("a", 6), ("b", 4)]);
        let (train, _) = split_corpus(&corpus, 0.5, 9).unwrap();
        let counts: Vec<usize> = train.class_counts().iter().map(|c| c.1).collect();
        assert_eq!(counts, [3, 2]);
    }

    #[test]
    fn split_rejects_tiny_classes() {
        let corpus = toy(&[("a", 10), ("b", 1)]);
        assert!(split_corpus(&corpus, 0.5, 1).is_err());
        assert!(split_corpus(&corpus, 1.0, 1).is_err());
    }
}
