use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thimac::diag::has_errors;
use thimac::dsl::SourceMap;
use thimac::events::resolve_events;
use thimac::sim::{Relation, RunError};
use thimac::{
    behavior_dot, check_conformance, derive_chronology, dump_store, load_store, parse_er, parse_fd_expr, parse_tm,
    resolve_path, run, serialize_tm, validate_events, validate_static, BehaviorGraph, Diagnostic,
    ElementRef, Event, ParsedTm, Record, RunConfig, Trace, TraceEvent,
};

pub enum Failure {
    /// Model or constraint violation; details already on stderr when `None`.
    Violation(Option<String>),
    Usage(String),
    Runtime(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Runtime(_) | Failure::Io(_) => 3,
        }
    }

    pub fn message(&self) -> Option<&str> {
        match self {
            Failure::Violation(m) => m.as_deref(),
            Failure::Usage(m) | Failure::Runtime(m) | Failure::Io(m) => Some(m),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

/// Writes to `path`, or stdout when it is absent or `-`.
fn emit(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::write(p, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display())))
        }
        _ => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn report(file: &Path, diags: &[Diagnostic], source: Option<&SourceMap>) {
    for d in diags {
        let mut d = d.clone();
        if d.span.is_none() {
            d.span = source.zip(d.element).and_then(|(s, e)| s.span_of(e));
        }
        eprintln!("{}", d.render(&file.display().to_string()));
    }
}

fn load_tm(file: &Path) -> Result<ParsedTm, Failure> {
    parse_tm(&read(file)?).map_err(|d| {
        report(file, &d, None);
        Failure::Violation(None)
    })
}

/// Parsed model plus resolved events; fails on any error diagnostic.
fn load_valid(file: &Path) -> Result<(ParsedTm, Vec<Event>), Failure> {
    let p = load_tm(file)?;
    let (events, mut diags) = resolve_events(&p.model, &p.events);
    diags.extend(validate_static(&p.model));
    diags.extend(validate_events(&p.model, &events));
    report(file, &diags, Some(&p.source_map));
    if has_errors(&diags) {
        return Err(Failure::Violation(None));
    }
    Ok((p, events))
}

pub fn parse(file: &Path, as_json: bool) -> Outcome {
    let p = load_tm(file)?;
    let diags = validate_static(&p.model);
    report(file, &diags, Some(&p.source_map));
    if has_errors(&diags) {
        return Err(Failure::Violation(None));
    }
    if as_json {
        let doc = json!({ "model": p.model, "events": p.events, "chronology": p.chronology });
        return emit(None, &(serde_json::to_string_pretty(&doc).expect("model serializes") + "\n"));
    }
    let text = serialize_tm(&p.model, &p.events, &p.chronology).map_err(|e| Failure::Violation(Some(e.to_string())))?;
    emit(None, &text)
}

pub fn validate(file: &Path) -> Outcome {
    load_valid(file).map(|_| ())
}

pub fn translate_er(schema: &Path, output: Option<&Path>) -> Outcome {
    let parsed = parse_er(&read(schema)?).map_err(|d| {
        report(schema, &d, None);
        Failure::Violation(None)
    })?;
    let model = thimac::translate_er(&parsed);
    let text = serialize_tm(&model, &[], &[]).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(output, &text)
}

pub fn events(file: &Path) -> Outcome {
    let (p, events) = load_valid(file)?;
    let list: Vec<Value> = events
        .iter()
        .map(|e| {
            let region: Vec<String> = e.region.iter().map(|r| p.model.element_path(*r)).collect();
            json!({ "name": e.name, "region": region, "time": e.time_label })
        })
        .collect();
    emit(None, &(serde_json::to_string_pretty(&list).expect("events serialize") + "\n"))
}

pub fn behavior(file: &Path, declared: bool, check: Option<&Path>) -> Outcome {
    let (p, events) = load_valid(file)?;
    let graph = if declared {
        BehaviorGraph::from_declared(&p.events, &p.chronology).map_err(|d| {
            report(file, &d, Some(&p.source_map));
            Failure::Violation(None)
        })?
    } else {
        derive_chronology(&p.model, &events)
    };
    let Some(trace_file) = check else {
        return emit(None, &graph.to_json());
    };
    let text = read(trace_file)?;
    let trace: Vec<TraceEvent> = match serde_json::from_str::<Trace>(&text) {
        Ok(t) => t.events,
        Err(_) => serde_json::from_str(&text)
            .map_err(|e| Failure::Violation(Some(format!("{}: {e}", trace_file.display()))))?,
    };
    match check_conformance(&graph, &trace) {
        Ok(()) => emit(None, "conforms\n"),
        Err(v) => Err(Failure::Violation(Some(format!("{}: {v}", trace_file.display())))),
    }
}

pub struct SimulateArgs {
    pub model: PathBuf,
    pub store: PathBuf,
    pub request: PathBuf,
    pub events: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
    pub store_out: Option<PathBuf>,
    pub entry: Option<String>,
    pub max_steps: Option<usize>,
}

pub fn simulate(args: SimulateArgs) -> Outcome {
    let (p, mut events) = load_valid(&args.model)?;
    if let Some(file) = &args.events {
        let decls = load_tm(file)?.events;
        let (resolved, mut diags) = resolve_events(&p.model, &decls);
        diags.extend(validate_events(&p.model, &resolved));
        report(file, &diags, None);
        if has_errors(&diags) {
            return Err(Failure::Violation(None));
        }
        events = resolved;
    }
    let store = load_store(&read(&args.store)?)
        .map_err(|e| Failure::Violation(Some(format!("{}: {e}", args.store.display()))))?;
    let request: Record = serde_json::from_str(&read(&args.request)?)
        .map_err(|e| Failure::Violation(Some(format!("{}: {e}", args.request.display()))))?;
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.entry {
        match resolve_path(&p.model, path) {
            Ok(ElementRef::Stage(s)) => cfg.entry = Some(s),
            _ => return Err(Failure::Usage(format!("--entry {path} does not name a stage"))),
        }
    }
    if let Some(n) = args.max_steps {
        cfg.max_steps = n;
    }
    let trace_out = args.trace_out.as_deref();
    match run(&p.model, &store, &request, &events, &cfg) {
        Ok(r) => {
            emit(trace_out, &r.trace.to_json())?;
            if let Some(out) = &args.store_out {
                emit(Some(out), &dump_store(&r.store))?;
            }
            match r.trace.error {
                Some(code) => Err(Failure::Violation(Some(format!("run halted with error {code}")))),
                None => Ok(()),
            }
        }
        Err(f) => {
            emit(trace_out, &f.trace.to_json())?;
            match f.error {
                RunError::DuplicateKey { .. } | RunError::UnknownPartition { .. } => {
                    Err(Failure::Violation(Some(f.error.to_string())))
                }
                e => Err(Failure::Runtime(e.to_string())),
            }
        }
    }
}

/// Accepts a records array, a relation object, or a store.
fn relation_records(file: &Path, name: Option<&str>) -> Result<Vec<Record>, Failure> {
    let text = read(file)?;
    let bad = |e: String| Failure::Violation(Some(format!("{}: {e}", file.display())));
    let value: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if value.is_array() {
        return serde_json::from_value(value).map_err(|e| bad(e.to_string()));
    }
    if value.get("records").is_some() && name.is_none() {
        let rel: Relation = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
        return Ok(rel.records);
    }
    let store = load_store(&text).map_err(|e| bad(e.to_string()))?;
    let rel = match name {
        Some(n) => store.relation(n).ok_or_else(|| Failure::Usage(format!("no relation {n} in {}", file.display())))?,
        None if store.relations.len() == 1 => store.relations.values().next().expect("one relation"),
        None => return Err(Failure::Usage(format!("{} holds several relations; pick one with --relation", file.display()))),
    };
    Ok(rel.records.clone())
}

pub fn check_fd(file: &Path, fd: &str, relation: Option<&str>) -> Outcome {
    let parsed = parse_fd_expr(fd).map_err(|e| Failure::Usage(format!("--fd {fd}: {e}")))?;
    let records = relation_records(file, relation)?;
    let pairs = thimac::check_fd(&records, &parsed).map_err(|e| Failure::Violation(Some(e.to_string())))?;
    if pairs.is_empty() {
        return emit(None, "holds\n");
    }
    let lines: String = pairs.iter().map(|(i, j)| format!("({i},{j})\n")).collect();
    emit(None, &lines)?;
    Err(Failure::Violation(Some(format!("{fd} violated by {} pair(s)", pairs.len()))))
}

pub fn export_dot(model: &Path, behavior: Option<Option<PathBuf>>) -> Outcome {
    let (p, events) = load_valid(model)?;
    let mut out = thimac::export_dot(&p.model);
    match behavior {
        None => {}
        Some(None) => out += &behavior_dot(&derive_chronology(&p.model, &events)),
        Some(Some(file)) => {
            let graph = BehaviorGraph::from_json(&read(&file)?)
                .map_err(|e| Failure::Violation(Some(format!("{}: {e}", file.display()))))?;
            out += &behavior_dot(&graph);
        }
    }
    emit(None, &out)
}
