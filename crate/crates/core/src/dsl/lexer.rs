//! Tokenizer shared by the `.tm` and `.ers` formats.

use std::fmt;

use crate::diag::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    Colon,
    Eq,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub const LEX_ERROR: &str = "LEX_ERROR";

pub fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Splits `text` into tokens. The result always ends with `Tok::Eof`.
/// Unknown characters and unterminated strings are reported and skipped.
pub fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut toks = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        let (line, col) = (cur.line, cur.col);
        let span_here = |cur: &Cursor| Span::new(line, col, cur.line, cur.col);
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            toks.push(Token { tok: Tok::Ident(s), span: span_here(&cur) });
            continue;
        }
        if c == '"' {
            cur.bump();
            let mut s = String::new();
            let mut closed = false;
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match cur.bump() {
                        Some('n') => s.push('\n'),
                        Some(e) => s.push(e),
                        None => break,
                    },
                    c => s.push(c),
                }
            }
            if !closed {
                diags.push(Diagnostic::error(LEX_ERROR, "unterminated string literal").with_span(span_here(&cur)));
            }
            toks.push(Token { tok: Tok::Str(s), span: span_here(&cur) });
            continue;
        }
        cur.bump();
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            ':' => Tok::Colon,
            '=' => Tok::Eq,
            '→' => Tok::Arrow,
            '-' if cur.peek() == Some('>') => {
                cur.bump();
                Tok::Arrow
            }
            other => {
                diags.push(
                    Diagnostic::error(LEX_ERROR, format!("unexpected character {other:?}"))
                        .with_span(span_here(&cur)),
                );
                continue;
            }
        };
        toks.push(Token { tok, span: span_here(&cur) });
    }
    let end = Span::new(cur.line, cur.col, cur.line, cur.col + 1);
    toks.push(Token { tok: Tok::Eof, span: end });
    (toks, diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<Tok> {
        lex(s).0.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn tokens_and_positions() {
        let (toks, diags) = lex("flow A.release -> B; # tail\n\"x\\\"y\"");
        assert!(diags.is_empty());
        assert_eq!(toks[0].tok, Tok::Ident("flow".into()));
        assert_eq!(toks[0].span, Span::new(1, 1, 1, 5));
        assert_eq!(toks[4].tok, Tok::Arrow);
        assert_eq!(toks[4].span.col, 16);
        assert_eq!(toks[7].tok, Tok::Str("x\"y".into()));
        assert_eq!(toks[7].span.line, 2);
        assert_eq!(toks.last().unwrap().tok, Tok::Eof);
    }

    #[test]
    fn unicode_arrow_and_errors() {
        assert_eq!(kinds("a→b"), vec![Tok::Ident("a".into()), Tok::Arrow, Tok::Ident("b".into()), Tok::Eof]);
        let (_, d) = lex("a $ \"open");
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|d| d.code == LEX_ERROR));
    }

    #[test]
    fn ident_check() {
        assert!(is_ident("_a1"));
        assert!(!is_ident("1a"));
        assert!(!is_ident(""));
        assert!(!is_ident("FD:A→B"));
    }
}
