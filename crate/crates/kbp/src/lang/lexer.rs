use std::fmt;

use crate::error::KbpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn join(self, other: Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

/// 1-based line/column of a byte offset.
pub fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in source.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    Str(String),
    // punctuation
    Colon,
    Comma,
    Semi,
    Dot,
    DotDot,
    Eq,       // =
    EqEq,     // ==
    Assign,   // :=
    Arrow,    // ->
    Box,      // []
    LBracket, // [
    RBracket, // ]
    LParen,
    RParen,
    LBrace,
    RBrace,
    SlashBackslash, // /\
    BackslashSlash, // \/
    LtLt,           // <<
    GtGt,           // >>
    Pipe,           // |
    Caret,          // ^
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Num(n) => write!(f, "{n}"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Colon => write!(f, ":"),
            Tok::Comma => write!(f, ","),
            Tok::Semi => write!(f, ";"),
            Tok::Dot => write!(f, "."),
            Tok::DotDot => write!(f, ".."),
            Tok::Eq => write!(f, "="),
            Tok::EqEq => write!(f, "=="),
            Tok::Assign => write!(f, ":="),
            Tok::Arrow => write!(f, "->"),
            Tok::Box => write!(f, "[]"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::SlashBackslash => write!(f, "/\\"),
            Tok::BackslashSlash => write!(f, "\\/"),
            Tok::LtLt => write!(f, "<<"),
            Tok::GtGt => write!(f, ">>"),
            Tok::Pipe => write!(f, "|"),
            Tok::Caret => write!(f, "^"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Identifiers may carry a history suffix (`info1@2`), so `@` followed by
/// digits extends the token.
fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn lex(source: &str) -> Result<Vec<Token>, KbpError> {
    let bytes: Vec<char> = source.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |i: usize, msg: String| {
        let (line, col) = line_col(source, i);
        KbpError::Syntax { line, col, msg }
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '-' && bytes.get(i + 1) == Some(&'-') {
            // line comment
            while i < bytes.len() && bytes[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if is_ident_start(c) {
            let mut s = String::new();
            while i < bytes.len() && is_ident_continue(bytes[i]) {
                s.push(bytes[i]);
                i += 1;
            }
            // history suffix: @<digits>, possibly repeated
            while bytes.get(i) == Some(&'@')
                && bytes.get(i + 1).is_some_and(|c| c.is_ascii_digit())
            {
                s.push('@');
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    s.push(bytes[i]);
                    i += 1;
                }
            }
            toks.push(Token { tok: Tok::Ident(s), span: Span { start, end: i } });
            continue;
        }
        if c.is_ascii_digit() {
            let mut n: u64 = 0;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add(bytes[i] as u64 - '0' as u64))
                    .ok_or_else(|| err(start, "number too large".into()))?;
                i += 1;
            }
            toks.push(Token { tok: Tok::Num(n), span: Span { start, end: i } });
            continue;
        }
        if c == '"' {
            i += 1;
            let mut s = String::new();
            while i < bytes.len() && bytes[i] != '"' {
                s.push(bytes[i]);
                i += 1;
            }
            if i == bytes.len() {
                return Err(err(start, "unterminated string".into()));
            }
            i += 1;
            toks.push(Token { tok: Tok::Str(s), span: Span { start, end: i } });
            continue;
        }
        let two = |a: char, b: char| c == a && bytes.get(i + 1) == Some(&b);
        let (tok, len) = if two('=', '=') {
            (Tok::EqEq, 2)
        } else if two(':', '=') {
            (Tok::Assign, 2)
        } else if two('-', '>') {
            (Tok::Arrow, 2)
        } else if two('[', ']') {
            (Tok::Box, 2)
        } else if two('/', '\\') {
            (Tok::SlashBackslash, 2)
        } else if two('\\', '/') {
            (Tok::BackslashSlash, 2)
        } else if two('<', '<') {
            (Tok::LtLt, 2)
        } else if two('>', '>') {
            (Tok::GtGt, 2)
        } else if two('.', '.') {
            (Tok::DotDot, 2)
        } else {
            let t = match c {
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '.' => Tok::Dot,
                '=' => Tok::Eq,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '|' => Tok::Pipe,
                '^' => Tok::Caret,
                _ => return Err(err(i, format!("unexpected character {c:?}"))),
            };
            (t, 1)
        };
        i += len;
        toks.push(Token { tok, span: Span { start, end: i } });
    }
    Ok(toks)
}
