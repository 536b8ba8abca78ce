//! Canonical `.tm` printer.
//!
//! Thimacs come first (roots and children sorted by name, stages in
//! [`StageKind`](crate::model::StageKind) order), then flows and triggers
//! sorted by path, then events and chronology statements in declaration
//! order. Two-space indentation, one statement per line, LF endings.

use std::fmt::Write;

use thiserror::Error;

use crate::diag::{has_errors, Diagnostic};
use crate::dsl::lexer::is_ident;
use crate::dsl::parser::{is_keyword, ChronoDecl, EventDecl};
use crate::model::{quote, StaticModel, ThimacId, ThimacKind};
use crate::validate::validate_static;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("model is not valid: {} diagnostic(s)", .0.len())]
    InvalidModel(Vec<Diagnostic>),
}

fn bad_name(what: &str, name: &str) -> Diagnostic {
    Diagnostic::error("UNPRINTABLE_NAME", format!("{what} name {name:?} is not an identifier")).at_path(name)
}

fn check_names(model: &StaticModel, events: &[EventDecl], chrono: &[ChronoDecl]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for t in model.thimacs.values() {
        if !is_ident(&t.name) || is_keyword(&t.name) {
            out.push(bad_name("thimac", &t.name));
        }
        for s in &t.stages {
            if let Some(k) = &s.kernel {
                if !is_ident(&k.name) {
                    out.push(bad_name("kernel", &k.name));
                }
            }
        }
    }
    for e in events {
        if !is_ident(&e.name) || is_keyword(&e.name) {
            out.push(bad_name("event", &e.name));
        }
        if e.region.is_empty() {
            out.push(Diagnostic::error("EMPTY_REGION", "event region is empty").at_path(&e.name));
        }
    }
    for c in chrono {
        for n in [&c.from, &c.to] {
            if !is_ident(n) || is_keyword(n) {
                out.push(bad_name("event", n));
            }
        }
    }
    out
}

fn write_thimac(model: &StaticModel, id: ThimacId, depth: usize, out: &mut String) {
    let t = &model.thimacs[&id];
    let pad = "  ".repeat(depth);
    let kind = match t.kind {
        ThimacKind::Plain => String::new(),
        k => format!(" kind={k}"),
    };
    let mut stages = t.stages.clone();
    stages.sort_by_key(|s| s.kind);
    let mut children: Vec<ThimacId> = t.children.iter().copied().filter(|c| model.thimacs.contains_key(c)).collect();
    children.sort_by(|a, b| model.thimacs[a].name.cmp(&model.thimacs[b].name));
    if stages.is_empty() && children.is_empty() {
        let _ = writeln!(out, "{pad}thimac {}{kind} {{}}", t.name);
        return;
    }
    let _ = writeln!(out, "{pad}thimac {}{kind} {{", t.name);
    for s in &stages {
        let _ = write!(out, "{pad}  {}", s.kind.decl_keyword());
        if let Some(k) = &s.kernel {
            let _ = write!(out, " kernel={}", k.name);
            if !k.args.is_empty() {
                let args: Vec<String> = k.args.iter().map(|a| quote(a)).collect();
                let _ = write!(out, "({})", args.join(", "));
            }
        }
        out.push_str(";\n");
    }
    for c in children {
        write_thimac(model, c, depth + 1, out);
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Prints a valid model in canonical form. Fails with the validation
/// diagnostics when the model has errors or names that the grammar cannot
/// express.
pub fn serialize_tm(
    model: &StaticModel,
    events: &[EventDecl],
    chrono: &[ChronoDecl],
) -> Result<String, SerializeError> {
    let mut diags = validate_static(model);
    diags.extend(check_names(model, events, chrono));
    if has_errors(&diags) {
        diags.retain(Diagnostic::is_error);
        return Err(SerializeError::InvalidModel(diags));
    }

    let mut out = String::new();
    let mut roots = model.roots.clone();
    roots.sort_by(|a, b| model.thimacs[a].name.cmp(&model.thimacs[b].name));
    for r in roots {
        write_thimac(model, r, 0, &mut out);
    }

    let mut flows: Vec<(String, String)> = model
        .flows
        .iter()
        .map(|f| (model.stage_path(f.from), model.stage_path(f.to)))
        .collect();
    flows.sort();
    flows.dedup();
    for (a, b) in flows {
        let _ = writeln!(out, "flow {a} -> {b};");
    }

    let mut triggers: Vec<(String, String, Option<String>)> = model
        .triggers
        .iter()
        .map(|t| (model.stage_path(t.from), model.stage_path(t.to), t.guard.clone()))
        .collect();
    triggers.sort();
    triggers.dedup();
    for (a, b, g) in triggers {
        match g {
            Some(g) => {
                let _ = writeln!(out, "trigger {a} -> {b} guard={};", quote(&g));
            }
            None => {
                let _ = writeln!(out, "trigger {a} -> {b};");
            }
        }
    }

    for e in events {
        let mut region = e.region.clone();
        region.sort();
        region.dedup();
        let _ = writeln!(out, "event {} {{", e.name);
        let _ = writeln!(out, "  region = [{}];", region.join(", "));
        if let Some(t) = &e.time {
            let _ = writeln!(out, "  time = {};", quote(t));
        }
        out.push_str("}\n");
    }

    for c in chrono {
        match &c.guard {
            Some(g) => {
                let _ = writeln!(out, "chronology {} -> {} guard={};", c.from, c.to, quote(g));
            }
            None => {
                let _ = writeln!(out, "chronology {} -> {};", c.from, c.to);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_tm;

    const ORDER: &str = "thimac Product { transfer in; receive; process; } thimac Customer { release; transfer out; } flow Product.receive -> Product.process; flow Customer.release -> Customer.transfer_out; flow Customer.transfer_out -> Product.transfer_in; flow Product.transfer_in -> Product.receive;";

    #[test]
    fn canonical_order_model() {
        let p = parse_tm(ORDER).unwrap();
        let text = serialize_tm(&p.model, &[], &[]).unwrap();
        let expected = "\
thimac Customer {
  release;
  transfer out;
}
thimac Product {
  transfer in;
  receive;
  process;
}
flow Customer.release -> Customer.transfer_out;
flow Customer.transfer_out -> Product.transfer_in;
flow Product.receive -> Product.process;
flow Product.transfer_in -> Product.receive;
";
        assert_eq!(text, expected);
        let again = parse_tm(&text).unwrap();
        assert!(again.model.structurally_eq(&p.model));
        assert_eq!(serialize_tm(&again.model, &[], &[]).unwrap(), text);
    }

    #[test]
    fn empty_model_prints_nothing() {
        assert_eq!(serialize_tm(&StaticModel::new(), &[], &[]).unwrap(), "");
    }

    #[test]
    fn invalid_model_is_rejected() {
        let p = parse_tm("thimac A { process; receive; } flow A.process -> A.receive;").unwrap();
        let Err(SerializeError::InvalidModel(d)) = serialize_tm(&p.model, &[], &[]) else {
            panic!("expected InvalidModel");
        };
        assert_eq!(d[0].code, "FLOW_ADJACENCY");
    }

    #[test]
    fn events_kernels_and_guards_round_trip() {
        let src = r#"
            thimac S kind=set { process kernel=iterate("rel \"x\""); thimac I kind=individual {} }
            thimac G { create; process kernel=compare_eq; }
            trigger G.process -> S.process guard="not-equal";
            trigger S.process -> G.create;
            event Eb { region = [S.process]; }
            event Ea { region = [G.process, G.create]; time = "t0"; }
            chronology Eb -> Ea guard="EOF";
        "#;
        let p = parse_tm(src).unwrap();
        let text = serialize_tm(&p.model, &p.events, &p.chronology).unwrap();
        let q = parse_tm(&text).unwrap();
        assert!(q.model.structurally_eq(&p.model));
        assert_eq!(q.events.iter().map(|e| &e.name).collect::<Vec<_>>(), vec!["Eb", "Ea"]);
        assert_eq!(q.events[1].region, vec!["G.create", "G.process"]);
        assert_eq!(q.chronology, p.chronology);
        assert_eq!(serialize_tm(&q.model, &q.events, &q.chronology).unwrap(), text);
    }
}
