//! Tokenizer shared by both query front ends, the linter and the fingerprinter.
//!
//! String literals come out as single tokens, so anything that scans the token stream sees
//! query structure only and never the contents of a literal.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// An identifier written in backticks; never treated as a keyword.
    Quoted(String),
    Int(i64),
    Float(f64),
    Str(String),
    Punct(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => f.write_str(s),
            Tok::Quoted(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Float(x) => write!(f, "{x}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Punct(p) => f.write_str(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    /// Byte offset of the token's first character.
    pub pos: usize,
}

impl Token {
    pub fn ident(&self) -> Option<&str> {
        match &self.tok {
            Tok::Ident(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(&self.tok, Tok::Punct(q) if *q == p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at offset {pos}")]
pub struct LexError {
    pub message: String,
    pub pos: usize,
}

const PUNCT: &[&str] = &[
    "<>", "!=", "<=", ">=", "..", "(", ")", "[", "]", "{", "}", ",", ".", ":", ";", "|", "=",
    "<", ">", "-", "+", "*", "/", "%", "$", "^", "!", "?", "&", "~", "@", "#",
];

pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'\'' || c == b'"' {
            let (s, next) = read_string(text, i)?;
            out.push(Token {
                tok: Tok::Str(s),
                pos: start,
            });
            i = next;
            continue;
        }
        if c == b'`' {
            let end = text[i + 1..].find('`').ok_or_else(|| LexError {
                message: "unterminated backtick identifier".into(),
                pos: start,
            })?;
            out.push(Token {
                tok: Tok::Quoted(text[i + 1..i + 1 + end].to_owned()),
                pos: start,
            });
            i += end + 2;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_owned()),
                pos: start,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let (tok, next) = read_number(text, i)?;
            out.push(Token { tok, pos: start });
            i = next;
            continue;
        }
        if let Some(p) = PUNCT.iter().find(|p| text[i..].starts_with(**p)) {
            out.push(Token {
                tok: Tok::Punct(p),
                pos: start,
            });
            i += p.len();
            continue;
        }
        let ch = text[i..].chars().next().unwrap();
        if ch.is_alphabetic() {
            // non-ASCII identifier characters
            let mut j = i;
            for (off, ch) in text[i..].char_indices() {
                if ch.is_alphanumeric() || ch == '_' {
                    j = i + off + ch.len_utf8();
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident(text[i..j].to_owned()),
                pos: start,
            });
            i = j;
            continue;
        }
        return Err(LexError {
            message: format!("unexpected character {ch:?}"),
            pos: start,
        });
    }
    Ok(out)
}

fn read_string(text: &str, start: usize) -> Result<(String, usize), LexError> {
    let quote = text.as_bytes()[start] as char;
    let mut out = String::new();
    let mut chars = text[start + 1..].char_indices();
    while let Some((off, c)) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some((_, 'n')) => out.push('\n'),
                Some((_, 't')) => out.push('\t'),
                Some((_, 'r')) => out.push('\r'),
                Some((_, other)) => out.push(other),
                None => break,
            },
            c if c == quote => return Ok((out, start + 1 + off + 1)),
            c => out.push(c),
        }
    }
    Err(LexError {
        message: "unterminated string literal".into(),
        pos: start,
    })
}

fn read_number(text: &str, start: usize) -> Result<(Tok, usize), LexError> {
    let bytes = text.as_bytes();
    let mut i = start;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut is_float = false;
    if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
        is_float = true;
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            is_float = true;
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    let lexeme = &text[start..i];
    let bad = |what: &str| LexError {
        message: format!("{what} literal {lexeme}"),
        pos: start,
    };
    let tok = if is_float {
        let x: f64 = lexeme.parse().map_err(|_| bad("bad float"))?;
        if !x.is_finite() {
            return Err(bad("non-finite float"));
        }
        Tok::Float(x)
    } else {
        Tok::Int(lexeme.parse().map_err(|_| bad("out-of-range integer"))?)
    };
    // Groovy/Java numeric suffixes: 13L, 2.5d, 1.0f
    if i < bytes.len() && matches!(bytes[i], b'L' | b'l' | b'd' | b'D' | b'f' | b'F') {
        let after = bytes.get(i + 1).copied();
        if !after.is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_') {
            i += 1;
        }
    }
    Ok((tok, i))
}
