//! Corpus loading and the four preprocessing stages.
//!
//! 1. lowercase, every byte outside visible ASCII becomes a separator,
//!    separators collapse to single spaces, ends trimmed;
//! 2. tokens shorter than three characters removed;
//! 3. stopwords removed;
//! 4. every token replaced by its Porter stem.
//!
//! Stages are cumulative and always applied in this order.
//!
//! Corpus files hold one document per line as `label<TAB>text`. A corpus
//! written after preprocessing starts with a `#stage=N` line so that loading
//! it again knows which stages have already been applied.

pub mod porter;

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MAX_STAGE: u8 = 4;

const SMART_STOPWORDS: &str = include_str!("../../resources/smart_stopwords.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub label: String,
    pub text: Vec<u8>,
    /// Preprocessing stage, 0 for raw text.
    pub stage: u8,
}

impl Document {
    /// Text as UTF-8, lossy for raw documents.
    pub fn text_lossy(&self) -> std::borrow::Cow<'_, str> {
        String::from_utf8_lossy(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    /// Distinct labels, sorted.
    pub class_names: Vec<String>,
    pub stage: u8,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, stage: u8) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if stage > MAX_STAGE {
            return Err(Error::Config(format!("stage {stage} outside 0..={MAX_STAGE}")));
        }
        if let Some(doc) = documents.iter().find(|d| d.stage != stage) {
            return Err(Error::Config(format!(
                "document {} is at stage {}, corpus at stage {stage}",
                doc.id, doc.stage
            )));
        }
        let class_names = documents
            .iter()
            .map(|d| d.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Corpus {
            documents,
            class_names,
            stage,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.label.clone()).collect()
    }

    pub fn texts(&self) -> Vec<&[u8]> {
        self.documents.iter().map(|d| d.text.as_slice()).collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.id.clone()).collect()
    }

    /// Applies the stages after the current one up to `target`. A corpus
    /// already at `target` is returned unchanged.
    pub fn to_stage(&self, target: u8, stopwords: &Stopwords) -> Result<Corpus> {
        if target > MAX_STAGE {
            return Err(Error::Config(format!("stage {target} outside 0..={MAX_STAGE}")));
        }
        if target < self.stage {
            return Err(Error::Config(format!(
                "corpus is already at stage {}, cannot go back to {target}",
                self.stage
            )));
        }
        let documents = self
            .documents
            .iter()
            .map(|d| Document {
                id: d.id.clone(),
                label: d.label.clone(),
                text: apply_stages(&d.text, d.stage, target, stopwords).into_bytes(),
                stage: target,
            })
            .collect();
        Ok(Corpus {
            documents,
            class_names: self.class_names.clone(),
            stage: target,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        if self.stage > 0 {
            writeln!(out, "#stage={}", self.stage).expect("writing to memory");
        }
        for doc in &self.documents {
            out.extend_from_slice(doc.label.as_bytes());
            out.push(b'\t');
            out.extend_from_slice(&doc.text);
            out.push(b'\n');
        }
        fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

/// Reads a corpus file. Raw files load at stage 0; files carrying a
/// `#stage=N` first line load at stage `N`.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let bytes =
        fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_corpus(&bytes, path)
}

pub fn parse_corpus(bytes: &[u8], path: &Path) -> Result<Corpus> {
    let parse_error = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut stage = 0;
    let mut documents = Vec::new();
    for (n, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line_no = n + 1;
        let line = raw.strip_suffix(b"\r").unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        if n == 0 {
            if let Some(value) = line.strip_prefix(b"#stage=") {
                stage = std::str::from_utf8(value)
                    .ok()
                    .and_then(|v| v.parse::<u8>().ok())
                    .filter(|&s| s <= MAX_STAGE)
                    .ok_or_else(|| parse_error(line_no, "bad #stage directive".into()))?;
                continue;
            }
        }
        let tab = line
            .iter()
            .position(|&b| b == b'\t')
            .ok_or_else(|| parse_error(line_no, "expected `label<TAB>text`".into()))?;
        let label = std::str::from_utf8(&line[..tab])
            .map_err(|_| parse_error(line_no, "label is not valid UTF-8".into()))?
            .trim();
        if label.is_empty() {
            return Err(parse_error(line_no, "empty label".into()));
        }
        documents.push(Document {
            // Numbered by document so a stage directive does not shift ids.
            id: format!("line-{}", documents.len() + 1),
            label: label.to_owned(),
            text: line[tab + 1..].to_vec(),
            stage,
        });
    }
    Corpus::new(documents, stage)
}

/// Stopword list; the embedded default is the SMART English list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Default for Stopwords {
    fn default() -> Self {
        Stopwords::smart()
    }
}

impl Stopwords {
    pub fn smart() -> Self {
        Stopwords::from_words(SMART_STOPWORDS.lines())
    }

    pub fn empty() -> Self {
        Stopwords(HashSet::new())
    }

    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        Stopwords(
            words
                .into_iter()
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    /// One word per line.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Ok(Stopwords::from_words(text.lines()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Space-separated tokens of stage-1 text.
pub fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(' ').filter(|t| !t.is_empty())
}

pub fn stage1(text: &[u8]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for &b in text {
        if b.is_ascii_graphic() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(b.to_ascii_lowercase() as char);
        } else {
            pending_space = true;
        }
    }
    out
}

pub fn stage2(text: &str) -> String {
    join(tokens(text).filter(|t| t.len() >= 3))
}

pub fn stage3(text: &str, stopwords: &Stopwords) -> String {
    join(tokens(text).filter(|t| !stopwords.contains(t)))
}

pub fn stage4(text: &str) -> String {
    let stems: Vec<String> = tokens(text).map(porter::stem).collect();
    stems.join(" ")
}

fn join<'a>(tokens: impl Iterator<Item = &'a str>) -> String {
    tokens.collect::<Vec<_>>().join(" ")
}

/// Runs stages `from + 1 ..= to` on one text.
pub fn apply_stages(text: &[u8], from: u8, to: u8, stopwords: &Stopwords) -> String {
    let mut current = if from == 0 {
        if to == 0 {
            return String::from_utf8_lossy(text).into_owned();
        }
        stage1(text)
    } else {
        String::from_utf8_lossy(text).into_owned()
    };
    for stage in from.max(1) + 1..=to {
        current = match stage {
            2 => stage2(&current),
            3 => stage3(&current, stopwords),
            _ => stage4(&current),
        };
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stage1_examples() {
        assert_eq!(stage1(b"Hello\t\tWorld "), "hello world");
        assert_eq!(stage1(b"ABC"), "abc");
        assert_eq!(stage1(b"a\x01b"), "a b");
        assert_eq!(stage1(b"  \n "), "");
        assert_eq!(stage1("caf\u{e9} ok".as_bytes()), "caf ok");
        assert_eq!(stage1(b"Don't PANIC!"), "don't panic!");
    }

    #[test]
    fn stage2_examples() {
        assert_eq!(stage2("it is a test"), "test");
        assert_eq!(stage2("abc ab abcd"), "abc abcd");
        assert_eq!(stage2(""), "");
    }

    #[test]
    fn stage3_examples() {
        let the = Stopwords::from_words(["the"]);
        assert_eq!(stage3("the cat", &the), "cat");
        assert_eq!(stage3("the cat", &Stopwords::empty()), "the cat");
        assert_eq!(stage3("and and and", &Stopwords::from_words(["and"])), "");
    }

    #[test]
    fn stage4_examples() {
        assert_eq!(stage4("caresses"), "caress");
        assert_eq!(stage4("cats"), "cat");
        assert_eq!(stage4("show shows showing"), "show show show");
    }

    #[test]
    fn smart_list_is_embedded() {
        let sw = Stopwords::smart();
        // 571 entries in the published list, one of them ("would") repeated.
        assert_eq!(sw.len(), 570);
        assert!(sw.contains("the") && sw.contains("zero") && !sw.contains("cat"));
    }

    #[test]
    fn parse_single_line() {
        let c = parse_corpus(b"sport\tthe match ended", Path::new("x")).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.documents[0].label, "sport");
        assert_eq!(c.documents[0].id, "line-1");
        assert_eq!(c.class_names, vec!["sport"]);
        assert_eq!(c.stage, 0);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_corpus(b"", Path::new("x")),
            Err(Error::EmptyCorpus)
        ));
        match parse_corpus(b"a\tb\n\nno tab here\n", Path::new("x")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_corpus(b"#stage=9\na\tb\n", Path::new("x")).is_err());
    }

    #[test]
    fn stage_directive_round_trip() {
        let raw = parse_corpus(b"Sport\tThe MATCH ended in a draw\n", Path::new("x")).unwrap();
        let sw = Stopwords::smart();
        let s4 = raw.to_stage(4, &sw).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        s4.write(&path).unwrap();
        let back = load_corpus(&path).unwrap();
        assert_eq!(back, s4);
        assert_eq!(back.to_stage(4, &sw).unwrap(), s4);
        assert!(back.to_stage(2, &sw).is_err());
    }

    #[test]
    fn stages_are_cumulative() {
        let sw = Stopwords::smart();
        let text = b"The Runners were running QUICKLY to it";
        assert_eq!(apply_stages(text, 0, 1, &sw), "the runners were running quickly to it");
        assert_eq!(apply_stages(text, 0, 2, &sw), "the runners were running quickly");
        assert_eq!(apply_stages(text, 0, 3, &sw), "runners running quickly");
        assert_eq!(apply_stages(text, 0, 4, &sw), "runner run quickli");
    }

    proptest! {
        #[test]
        fn stages_one_to_three_are_idempotent(text in proptest::collection::vec(any::<u8>(), 0..300)) {
            let sw = Stopwords::smart();
            let s1 = stage1(&text);
            prop_assert_eq!(stage1(s1.as_bytes()), s1.clone());
            let s2 = stage2(&s1);
            prop_assert_eq!(stage2(&s2), s2.clone());
            let s3 = stage3(&s2, &sw);
            prop_assert_eq!(stage3(&s3, &sw), s3);
        }

        #[test]
        fn token_count_never_increases(text in "[ -~\t\n]{0,300}") {
            let sw = Stopwords::smart();
            let counts: Vec<usize> = (1..=4)
                .map(|to| tokens(&apply_stages(text.as_bytes(), 0, to, &sw)).count())
                .collect();
            prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]));
        }

        #[test]
        fn output_is_visible_lowercase_tokens(text in proptest::collection::vec(any::<u8>(), 0..300), to in 1u8..=4) {
            let out = apply_stages(&text, 0, to, &Stopwords::smart());
            prop_assert!(!out.starts_with(' ') && !out.ends_with(' ') && !out.contains("  "));
            prop_assert!(out.bytes().all(|b| b == b' ' || (b.is_ascii_graphic() && !b.is_ascii_uppercase())));
        }
    }
}
