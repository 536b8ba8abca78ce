//! `.ers` schema files.
//!
//! ```text
//! entity EMPLOYEE { attr Ssn key; attr Name; fd Ssn -> Name; }
//! rel WORKS_FOR (EMPLOYEE:many, DEPARTMENT:one);
//! role IN_DEPARTMENT (EMPLOYEE:one, DEPARTMENT:one);
//! ```

use std::collections::BTreeMap;

use crate::diag::{Diagnostic, Span};
use crate::dsl::lexer::{lex, Tok, Token};
use crate::er::schema::{Attribute, Cardinality, Endpoint, EntityType, ErSchema, Fd, RelationshipType};

pub const SYNTAX: &str = "SYNTAX";

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    schema: ErSchema,
    spans: BTreeMap<String, Span>,
}

type PResult<T> = Result<T, ()>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&mut self, expected: &str) -> PResult<T> {
        let t = self.peek().clone();
        self.diags
            .push(Diagnostic::error(SYNTAX, format!("expected {expected}, found {}", t.tok)).with_span(t.span));
        Err(())
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            self.fail(&tok.to_string())
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            _ => self.fail(what),
        }
    }

    fn at(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn sync(&mut self, in_block: bool) {
        loop {
            match self.peek().tok {
                Tok::Eof => return,
                Tok::Semi => {
                    self.bump();
                    return;
                }
                Tok::RBrace => {
                    if !in_block {
                        self.bump();
                    }
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn file(&mut self) {
        while self.peek().tok != Tok::Eof {
            let r = if self.at("entity") {
                self.entity()
            } else if self.at("rel") {
                self.association(false)
            } else if self.at("role") {
                self.association(true)
            } else {
                self.fail("`entity`, `rel` or `role`")
            };
            if r.is_err() {
                self.sync(false);
            }
        }
    }

    fn entity(&mut self) -> PResult<()> {
        self.bump();
        let (name, span) = self.ident("entity name")?;
        self.expect(Tok::LBrace)?;
        let mut e = EntityType { name: name.clone(), attributes: Vec::new(), fds: Vec::new() };
        loop {
            if self.peek().tok == Tok::RBrace {
                self.bump();
                break;
            }
            if self.peek().tok == Tok::Eof {
                return self.fail("`}`");
            }
            let r = if self.at("attr") {
                self.attr(&mut e)
            } else if self.at("fd") {
                self.fd(&mut e)
            } else {
                self.fail("`attr` or `fd`")
            };
            if r.is_err() {
                self.sync(true);
            }
        }
        self.spans.entry(name).or_insert(span);
        self.schema.entities.push(e);
        Ok(())
    }

    fn attr(&mut self, e: &mut EntityType) -> PResult<()> {
        self.bump();
        let (name, _) = self.ident("attribute name")?;
        let is_key = if self.at("key") {
            self.bump();
            true
        } else {
            false
        };
        self.expect(Tok::Semi)?;
        e.attributes.push(Attribute { name, is_key });
        Ok(())
    }

    fn names(&mut self) -> PResult<Vec<String>> {
        let mut v = vec![self.ident("attribute name")?.0];
        while self.peek().tok == Tok::Comma {
            self.bump();
            v.push(self.ident("attribute name")?.0);
        }
        Ok(v)
    }

    fn fd(&mut self, e: &mut EntityType) -> PResult<()> {
        let start = self.bump().span;
        let lhs = self.names()?;
        self.expect(Tok::Arrow)?;
        let rhs = self.names()?;
        let end = self.expect(Tok::Semi)?;
        match Fd::new(&lhs, &rhs) {
            Ok(fd) => e.fds.push(fd),
            Err(err) => self.diags.push(
                Diagnostic::error(super::codes::INVALID_FD, err.to_string())
                    .at_path(&e.name)
                    .with_span(start.to(end)),
            ),
        }
        Ok(())
    }

    fn association(&mut self, role: bool) -> PResult<()> {
        self.bump();
        let (name, span) = self.ident("relationship name")?;
        self.expect(Tok::LParen)?;
        let mut endpoints = vec![self.endpoint()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            endpoints.push(self.endpoint()?);
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Semi)?;
        self.spans.entry(name.clone()).or_insert(span);
        let r = RelationshipType { name, endpoints };
        if role {
            self.schema.roles.push(r);
        } else {
            self.schema.relationships.push(r);
        }
        Ok(())
    }

    fn endpoint(&mut self) -> PResult<Endpoint> {
        let (entity, _) = self.ident("entity name")?;
        self.expect(Tok::Colon)?;
        let cardinality = if self.at("one") {
            Cardinality::One
        } else if self.at("many") {
            Cardinality::Many
        } else {
            return self.fail("`one` or `many`");
        };
        self.bump();
        Ok(Endpoint { entity, cardinality })
    }
}

/// Parses an `.ers` text and checks every schema invariant.
pub fn parse_er(text: &str) -> Result<ErSchema, Vec<Diagnostic>> {
    let (toks, diags) = lex(text);
    let mut p = Parser { toks, pos: 0, diags, schema: ErSchema::default(), spans: BTreeMap::new() };
    p.file();
    let mut diags = p.diags;
    for mut d in p.schema.validate() {
        let head = d.path.split('.').next().unwrap_or_default();
        d.span = p.spans.get(head).copied();
        diags.push(d);
    }
    if diags.is_empty() {
        Ok(p.schema)
    } else {
        Err(diags)
    }
}
