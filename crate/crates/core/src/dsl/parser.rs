//! Recursive-descent parser for `.tm` files.
//!
//! On a syntax error the parser records a diagnostic at the offending token
//! and resynchronizes at the next `;` or `}` so one file can report several
//! errors.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::diag::{Diagnostic, Element, Span};
use crate::dsl::lexer::{lex, Tok, Token};
use crate::model::{ElementRef, KernelSpec, StageKind, StageRef, StaticModel, ThimacId, ThimacKind};
use crate::path::{resolve_path, PathError};

pub const SYNTAX: &str = "SYNTAX";
pub const RESERVED_WORD: &str = "RESERVED_WORD";
pub const UNRESOLVED_PATH: &str = "UNRESOLVED_PATH";
pub const AMBIGUOUS_PATH: &str = "AMBIGUOUS_PATH";
pub const EXPECTED_STAGE: &str = "EXPECTED_STAGE";

pub const KEYWORDS: &[&str] = &[
    "thimac", "kind", "plain", "set", "individual", "relationship", "attribute", "create", "process",
    "release", "receive", "transfer", "in", "out", "kernel", "flow", "trigger", "guard", "event",
    "region", "time", "chronology",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Event declaration as written; paths are resolved by the event engine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventDecl {
    pub name: String,
    pub region: Vec<String>,
    pub time: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChronoDecl {
    pub from: String,
    pub to: String,
    pub guard: Option<String>,
}

/// Source positions of parsed elements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    pub thimacs: BTreeMap<ThimacId, Span>,
    pub stages: BTreeMap<StageRef, Span>,
    pub flows: Vec<Span>,
    pub triggers: Vec<Span>,
    pub events: Vec<Span>,
}

impl SourceMap {
    pub fn span_of(&self, e: Element) -> Option<Span> {
        match e {
            Element::Thimac(id) => self.thimacs.get(&id).copied(),
            Element::Stage(r) => self.stages.get(&r).or_else(|| self.thimacs.get(&r.thimac)).copied(),
            Element::Flow(i) => self.flows.get(i).copied(),
            Element::Trigger(i) => self.triggers.get(i).copied(),
            Element::Event(i) => self.events.get(i).copied(),
        }
    }

    /// Fills in spans of diagnostics that point at a model element.
    pub fn locate(&self, diags: &mut [Diagnostic]) {
        for d in diags {
            if d.span.is_none() {
                d.span = d.element.and_then(|e| self.span_of(e));
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedTm {
    pub model: StaticModel,
    pub events: Vec<EventDecl>,
    pub chronology: Vec<ChronoDecl>,
    pub source_map: SourceMap,
}

struct PendingEdge {
    from: (String, Span),
    to: (String, Span),
    guard: Option<String>,
    span: Span,
    trigger: bool,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    out: ParsedTm,
    edges: Vec<PendingEdge>,
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

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn fail<T>(&mut self, expected: &str) -> PResult<T> {
        let t = self.peek().clone();
        self.diags.push(
            Diagnostic::error(SYNTAX, format!("expected {expected}, found {}", t.tok)).with_span(t.span),
        );
        Err(())
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            self.fail(&tok.to_string())
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            self.fail(&format!("`{kw}`"))
        }
    }

    /// Identifier that is not a reserved word.
    fn name(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().tok.clone() {
            Tok::Ident(s) if is_keyword(&s) => {
                let span = self.peek().span;
                self.diags.push(
                    Diagnostic::error(RESERVED_WORD, format!("`{s}` is reserved and cannot name {what}"))
                        .with_span(span),
                );
                Err(())
            }
            Tok::Ident(s) => Ok((s, self.bump().span)),
            _ => self.fail(what),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().tok.clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail("string literal"),
        }
    }

    fn path(&mut self) -> PResult<(String, Span)> {
        let Tok::Ident(first) = self.peek().tok.clone() else {
            return self.fail("path");
        };
        let start = self.bump().span;
        let mut end = start;
        let mut path = first;
        while self.peek().tok == Tok::Dot {
            self.bump();
            match self.peek().tok.clone() {
                Tok::Ident(s) => {
                    end = self.bump().span;
                    path.push('.');
                    path.push_str(&s);
                }
                _ => return self.fail("path segment"),
            }
        }
        Ok((path, start.to(end)))
    }

    fn guard(&mut self) -> PResult<Option<String>> {
        if self.at_kw("guard") {
            self.bump();
            self.expect(Tok::Eq)?;
            Ok(Some(self.string()?))
        } else {
            Ok(None)
        }
    }

    /// Skips to just past the next `;`, or up to (and, outside blocks,
    /// past) the next `}`.
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
            let r = match &self.peek().tok {
                Tok::Ident(k) if k == "thimac" => self.thimac(None),
                Tok::Ident(k) if k == "flow" => self.edge(false),
                Tok::Ident(k) if k == "trigger" => self.edge(true),
                Tok::Ident(k) if k == "event" => self.event(),
                Tok::Ident(k) if k == "chronology" => self.chronology(),
                _ => self.fail("declaration"),
            };
            if r.is_err() {
                self.sync(false);
            }
        }
    }

    fn thimac(&mut self, parent: Option<ThimacId>) -> PResult<()> {
        let start = self.expect_kw("thimac")?;
        let (name, name_span) = self.name("a thimac")?;
        let mut kind = ThimacKind::Plain;
        if self.at_kw("kind") {
            self.bump();
            self.expect(Tok::Eq)?;
            kind = match self.peek().tok.clone() {
                Tok::Ident(k) => match k.parse() {
                    Ok(kind) => {
                        self.bump();
                        kind
                    }
                    Err(()) => return self.fail("thimac kind"),
                },
                _ => return self.fail("thimac kind"),
            };
        }
        self.expect(Tok::LBrace)?;
        let id = self.out.model.add_thimac(parent, name, kind);
        self.out.source_map.thimacs.insert(id, start.to(name_span));
        loop {
            match self.peek().tok.clone() {
                Tok::RBrace => {
                    self.bump();
                    return Ok(());
                }
                Tok::Eof => return self.fail("`}`"),
                Tok::Ident(k) if k == "thimac" => {
                    if self.thimac(Some(id)).is_err() {
                        self.sync(true);
                    }
                }
                _ => {
                    if self.stage(id).is_err() {
                        self.sync(true);
                    }
                }
            }
        }
    }

    fn stage(&mut self, owner: ThimacId) -> PResult<()> {
        let Tok::Ident(word) = self.peek().tok.clone() else {
            return self.fail("stage or nested thimac");
        };
        let start = self.peek().span;
        let kind = match word.as_str() {
            "create" => StageKind::Create,
            "process" => StageKind::Process,
            "release" => StageKind::Release,
            "receive" => StageKind::Receive,
            "transfer" => {
                self.bump();
                match &self.peek().tok {
                    Tok::Ident(d) if d == "in" => StageKind::TransferIn,
                    Tok::Ident(d) if d == "out" => StageKind::TransferOut,
                    _ => return self.fail("`in` or `out`"),
                }
            }
            _ => return self.fail("stage or nested thimac"),
        };
        let mut end = self.bump().span;
        let mut kernel = None;
        if self.at_kw("kernel") {
            self.bump();
            self.expect(Tok::Eq)?;
            let (kname, kspan) = match self.peek().tok.clone() {
                Tok::Ident(s) => (s, self.bump().span),
                _ => return self.fail("kernel name"),
            };
            end = kspan;
            let mut args = Vec::new();
            if self.peek().tok == Tok::LParen {
                self.bump();
                if self.peek().tok != Tok::RParen {
                    args.push(self.string()?);
                    while self.peek().tok == Tok::Comma {
                        self.bump();
                        args.push(self.string()?);
                    }
                }
                end = self.expect(Tok::RParen)?;
            }
            kernel = Some(KernelSpec { name: kname, args });
        }
        self.expect(Tok::Semi)?;
        let r = self.out.model.add_stage_with_kernel(owner, kind, kernel);
        self.out.source_map.stages.entry(r).or_insert(start.to(end));
        Ok(())
    }

    fn edge(&mut self, trigger: bool) -> PResult<()> {
        let start = self.bump().span;
        let from = self.path()?;
        self.expect(Tok::Arrow)?;
        let to = self.path()?;
        let guard = if trigger { self.guard()? } else { None };
        let end = self.expect(Tok::Semi)?;
        self.edges.push(PendingEdge { from, to, guard, span: start.to(end), trigger });
        Ok(())
    }

    fn event(&mut self) -> PResult<()> {
        let start = self.bump().span;
        let (name, _) = self.name("an event")?;
        self.expect(Tok::LBrace)?;
        self.expect_kw("region")?;
        self.expect(Tok::Eq)?;
        self.expect(Tok::LBracket)?;
        let mut region = Vec::new();
        if self.peek().tok != Tok::RBracket {
            region.push(self.path()?.0);
            while self.peek().tok == Tok::Comma {
                self.bump();
                region.push(self.path()?.0);
            }
        }
        self.expect(Tok::RBracket)?;
        self.expect(Tok::Semi)?;
        let mut time = None;
        if self.at_kw("time") {
            self.bump();
            self.expect(Tok::Eq)?;
            time = Some(self.string()?);
            self.expect(Tok::Semi)?;
        }
        let end = self.expect(Tok::RBrace)?;
        self.out.events.push(EventDecl { name, region, time });
        self.out.source_map.events.push(start.to(end));
        Ok(())
    }

    fn chronology(&mut self) -> PResult<()> {
        self.bump();
        let (from, _) = self.name("an event")?;
        self.expect(Tok::Arrow)?;
        let (to, _) = self.name("an event")?;
        let guard = self.guard()?;
        self.expect(Tok::Semi)?;
        self.out.chronology.push(ChronoDecl { from, to, guard });
        Ok(())
    }

    fn resolve_stage(&mut self, (path, span): &(String, Span)) -> Option<StageRef> {
        match resolve_path(&self.out.model, path) {
            Ok(ElementRef::Stage(r)) => Some(r),
            Ok(ElementRef::Thimac(_)) => {
                self.diags.push(
                    Diagnostic::error(EXPECTED_STAGE, format!("{path} names a thimac, not a stage"))
                        .at_path(path)
                        .with_span(*span),
                );
                None
            }
            Err(PathError::NotFound(_)) => {
                self.diags.push(
                    Diagnostic::error(UNRESOLVED_PATH, format!("{path} does not resolve"))
                        .at_path(path)
                        .with_span(*span),
                );
                None
            }
            Err(PathError::Ambiguous(_)) => {
                self.diags.push(
                    Diagnostic::error(AMBIGUOUS_PATH, format!("{path} is ambiguous"))
                        .at_path(path)
                        .with_span(*span),
                );
                None
            }
        }
    }

    fn resolve_edges(&mut self) {
        for e in std::mem::take(&mut self.edges) {
            let from = self.resolve_stage(&e.from);
            let to = self.resolve_stage(&e.to);
            let (Some(from), Some(to)) = (from, to) else { continue };
            if e.trigger {
                self.out.model.add_trigger(from, to, e.guard.as_deref());
                self.out.source_map.triggers.push(e.span);
            } else {
                self.out.model.add_flow(from, to);
                self.out.source_map.flows.push(e.span);
            }
        }
    }
}

/// Parses a `.tm` source text. Returns the model with its raw event and
/// chronology declarations, or every syntax and resolution diagnostic.
pub fn parse_tm(text: &str) -> Result<ParsedTm, Vec<Diagnostic>> {
    let (toks, lex_diags) = lex(text);
    let mut p = Parser {
        toks,
        pos: 0,
        diags: lex_diags,
        out: ParsedTm::default(),
        edges: Vec::new(),
    };
    p.file();
    p.resolve_edges();
    if p.diags.is_empty() {
        Ok(p.out)
    } else {
        Err(p.diags)
    }
}
