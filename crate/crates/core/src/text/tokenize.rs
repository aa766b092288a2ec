use serde::{Deserialize, Serialize};

use super::TextError;
use crate::lexicon::Lexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Number,
    PercentSign,
    Punctuation,
    Abbreviation,
    SpecialPhrase,
}

impl TokenKind {
    pub const ALL: [TokenKind; 6] = [
        TokenKind::Word,
        TokenKind::Number,
        TokenKind::PercentSign,
        TokenKind::Punctuation,
        TokenKind::Abbreviation,
        TokenKind::SpecialPhrase,
    ];

    pub fn index(self) -> usize {
        TokenKind::ALL.iter().position(|k| *k == self).unwrap()
    }
}

/// A token with its byte span in the source statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub lower: String,
    pub start: usize,
    pub end: usize,
    pub kind: TokenKind,
}

impl Token {
    fn new(source: &str, start: usize, end: usize, kind: TokenKind) -> Token {
        let text = source[start..end].to_string();
        Token {
            lower: text.to_lowercase(),
            text,
            start,
            end,
            kind,
        }
    }

    pub fn is_word_like(&self) -> bool {
        self.text.chars().any(char::is_alphanumeric)
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Splits a statement into tokens.
///
/// Percent signs, slashes and punctuation become their own tokens; known
/// abbreviations ("U.S.") and decimal or grouped numbers ("3.5", "1,000") stay
/// whole. Tokens that belong to a bundled multi-word phrase ("out of") keep
/// their own spans but are marked [`TokenKind::SpecialPhrase`].
pub fn tokenize(statement: &str) -> Result<Vec<Token>, TextError> {
    if statement.trim().is_empty() {
        return Err(TextError::EmptyInput);
    }
    let lexicon = Lexicon::get();
    let mut abbreviations: Vec<&str> = lexicon.abbreviations().collect();
    abbreviations.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));

    let bytes = statement.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < statement.len() {
        let rest = &statement[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }

        let at_word_start = i == 0 || !is_word_char(statement[..i].chars().last().unwrap());
        if at_word_start {
            if let Some(abbr) = abbreviations.iter().find(|a| {
                rest.starts_with(**a)
                    && rest[a.len()..]
                        .chars()
                        .next()
                        .map_or(true, |n| !is_word_char(n))
            }) {
                tokens.push(Token::new(statement, i, i + abbr.len(), TokenKind::Abbreviation));
                i += abbr.len();
                continue;
            }
        }

        if c.is_ascii_digit() {
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            // "3.5", "1,000"
            while j + 1 < bytes.len()
                && (bytes[j] == b'.' || bytes[j] == b',')
                && bytes[j + 1].is_ascii_digit()
            {
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
            }
            // "4th", "2019s" stay attached as words
            if j < bytes.len() && (bytes[j] as char).is_ascii_alphabetic() {
                let end = scan_word(statement, j);
                tokens.push(Token::new(statement, i, end, TokenKind::Word));
                i = end;
            } else {
                tokens.push(Token::new(statement, i, j, TokenKind::Number));
                i = j;
            }
            continue;
        }

        if is_word_char(c) {
            let end = scan_word(statement, i);
            tokens.push(Token::new(statement, i, end, TokenKind::Word));
            i = end;
            continue;
        }

        let kind = if c == '%' {
            TokenKind::PercentSign
        } else {
            TokenKind::Punctuation
        };
        tokens.push(Token::new(statement, i, i + c.len_utf8(), kind));
        i += c.len_utf8();
    }

    mark_special_phrases(&mut tokens, lexicon);
    Ok(tokens)
}

/// Word characters plus internal hyphens and apostrophes ("well-being", "don't").
fn scan_word(s: &str, start: usize) -> usize {
    let mut end = start;
    let mut chars = s[start..].char_indices().peekable();
    while let Some((off, c)) = chars.next() {
        if is_word_char(c) {
            end = start + off + c.len_utf8();
        } else if (c == '-' || c == '\'' || c == '’')
            && chars.peek().map_or(false, |(_, n)| n.is_alphabetic())
        {
            continue;
        } else {
            break;
        }
    }
    end
}

fn mark_special_phrases(tokens: &mut [Token], lexicon: &Lexicon) {
    for phrase in lexicon.special_phrases() {
        let n = phrase.len();
        if n == 0 || tokens.len() < n {
            continue;
        }
        for start in 0..=tokens.len() - n {
            let matches = tokens[start..start + n]
                .iter()
                .zip(phrase)
                .all(|(t, w)| {
                    t.lower == *w
                        && matches!(t.kind, TokenKind::Word | TokenKind::SpecialPhrase)
                });
            if matches {
                for t in &mut tokens[start..start + n] {
                    t.kind = TokenKind::SpecialPhrase;
                }
            }
        }
    }
}
