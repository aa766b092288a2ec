//! CoNLL-style annotated corpus.
//!
//! ```text
//! # text = More than 40% of students like football.
//! # split = train
//! More	B-M
//! than	I-M
//! ...
//! ```
//!
//! One `token<TAB>label` per line, a blank line between sentences. The `text`
//! comment carries the original spacing; `split` is `train` or `heldout`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::labels::{entity_spans, is_valid_iob, EntityType, Label};
use super::tokenize::{tokenize, Token};
use super::TextError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Heldout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSentence {
    pub text: String,
    pub tokens: Vec<Token>,
    pub labels: Vec<Label>,
    pub split: Split,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotatedCorpus {
    pub sentences: Vec<AnnotatedSentence>,
}

impl AnnotatedCorpus {
    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TextError::Io { path: path.display().to_string(), source: e })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut sentences = Vec::new();
        let mut block: Vec<(usize, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                if !block.is_empty() {
                    sentences.push(parse_block(&block)?);
                    block.clear();
                }
            } else {
                block.push((i + 1, line));
            }
        }
        if !block.is_empty() {
            sentences.push(parse_block(&block)?);
        }
        Ok(AnnotatedCorpus { sentences })
    }

    pub fn to_conll(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            writeln!(out, "# text = {}", s.text).unwrap();
            let split = match s.split {
                Split::Train => "train",
                Split::Heldout => "heldout",
            };
            writeln!(out, "# split = {split}").unwrap();
            for (t, l) in s.tokens.iter().zip(&s.labels) {
                writeln!(out, "{}\t{}", t.text, l).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn split(&self, which: Split) -> AnnotatedCorpus {
        AnnotatedCorpus {
            sentences: self.sentences.iter().filter(|s| s.split == which).cloned().collect(),
        }
    }

    /// Reassigns splits: every `k`-th sentence (offset `fold`) goes to held-out.
    pub fn with_fold(&self, folds: usize, fold: usize) -> AnnotatedCorpus {
        AnnotatedCorpus {
            sentences: self
                .sentences
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut s = s.clone();
                    s.split = if i % folds == fold { Split::Heldout } else { Split::Train };
                    s
                })
                .collect(),
        }
    }
}

fn parse_block(lines: &[(usize, &str)]) -> Result<AnnotatedSentence, TextError> {
    let first_line = lines[0].0;
    let mut text = None;
    let mut split = Split::Train;
    let mut pairs = Vec::new();
    for (lineno, line) in lines {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                match k.trim() {
                    "text" => text = Some(v.trim().to_string()),
                    "split" => {
                        split = match v.trim() {
                            "train" => Split::Train,
                            "heldout" => Split::Heldout,
                            other => {
                                return Err(TextError::Parse {
                                    line: *lineno,
                                    message: format!("unknown split {other:?}"),
                                })
                            }
                        }
                    }
                    _ => {}
                }
            }
            continue;
        }
        let (tok, label) = line.split_once('\t').ok_or(TextError::Parse {
            line: *lineno,
            message: "expected token<TAB>label".into(),
        })?;
        let label: Label = label
            .trim()
            .parse()
            .map_err(|e: super::labels::UnknownLabel| TextError::Parse { line: *lineno, message: e.to_string() })?;
        pairs.push((*lineno, tok.to_string(), label));
    }
    let text = text.unwrap_or_else(|| pairs.iter().map(|p| p.1.as_str()).collect::<Vec<_>>().join(" "));
    let tokens = tokenize(&text).map_err(|_| TextError::Parse { line: first_line, message: "empty sentence".into() })?;
    if tokens.len() != pairs.len() || tokens.iter().zip(&pairs).any(|(t, p)| t.text != p.1) {
        let found: Vec<_> = tokens.iter().map(|t| t.text.as_str()).collect();
        return Err(TextError::Parse {
            line: first_line,
            message: format!("annotated tokens do not match the tokenizer output {found:?}"),
        });
    }
    let labels: Vec<Label> = pairs.into_iter().map(|p| p.2).collect();
    if !is_valid_iob(&labels) {
        return Err(TextError::Parse { line: first_line, message: "invalid IOB sequence".into() });
    }
    if !entity_spans(&labels).iter().any(|s| s.entity == EntityType::Number) {
        return Err(TextError::Parse { line: first_line, message: "sentence has no number entity".into() });
    }
    Ok(AnnotatedSentence { text, tokens, labels, split })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# text = More than 40% of students like football.\n# split = heldout\n\
More\tB-M\nthan\tI-M\n40\tB-N\n%\tI-N\nof\tO\nstudents\tB-W\nlike\tB-P\nfootball\tI-P\n.\tO\n\n\
# text = Half of voters agree.\nHalf\tB-N\nof\tO\nvoters\tB-W\nagree\tB-P\n.\tO\n";

    #[test]
    fn parse_and_write_back() {
        let c = AnnotatedCorpus::parse(SAMPLE).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.sentences[0].split, Split::Heldout);
        assert_eq!(c.split(Split::Train).len(), 1);
        let again = AnnotatedCorpus::parse(&c.to_conll()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_blocks() {
        assert!(AnnotatedCorpus::parse("# text = a b\na\tO\nb\tO\n").is_err());
        assert!(AnnotatedCorpus::parse("# text = 4 b\n4\tI-N\nb\tO\n").is_err());
        assert!(AnnotatedCorpus::parse("# text = 4 b\n4\tB-N\nc\tO\n").is_err());
        let err = AnnotatedCorpus::parse("# text = 4\n4\tB-Q\n").unwrap_err();
        assert!(matches!(err, TextError::Parse { line: 2, .. }));
    }

    #[test]
    fn folds_partition() {
        let c = AnnotatedCorpus::parse(SAMPLE).unwrap();
        let f = c.with_fold(2, 1);
        assert_eq!(f.sentences[1].split, Split::Heldout);
        assert_eq!(f.sentences[0].split, Split::Train);
    }
}
