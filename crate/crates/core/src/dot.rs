//! Graphviz rendering: thimacs as nested clusters, flows solid, triggers dashed.

use std::fmt::Write;

use crate::events::BehaviorGraph;
use crate::model::{StaticModel, ThimacId, ThimacKind};

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn export_dot(model: &StaticModel) -> String {
    let mut out = String::from("digraph tm {\n");
    if model.is_empty() {
        out.push_str("}\n");
        return out;
    }
    out.push_str("  compound=true;\n  node [shape=box];\n");
    let canon = model.canonical();
    let mut n = 0;
    for &r in &canon.roots {
        cluster(&canon, r, 1, &mut n, &mut out);
    }
    for f in &canon.flows {
        let _ = writeln!(out, "  \"{}\" -> \"{}\";", esc(&canon.stage_path(f.from)), esc(&canon.stage_path(f.to)));
    }
    for t in &canon.triggers {
        let label = t.guard.as_ref().map(|g| format!(", label=\"{}\"", esc(g))).unwrap_or_default();
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [style=dashed{label}];",
            esc(&canon.stage_path(t.from)),
            esc(&canon.stage_path(t.to))
        );
    }
    out.push_str("}\n");
    out
}

fn cluster(m: &StaticModel, id: ThimacId, depth: usize, n: &mut usize, out: &mut String) {
    let t = &m.thimacs[&id];
    let pad = "  ".repeat(depth);
    let _ = writeln!(out, "{pad}subgraph cluster_{n} {{");
    *n += 1;
    let style = match t.kind {
        ThimacKind::Relationship => "dotted",
        ThimacKind::Set => "bold",
        _ => "solid",
    };
    let _ = writeln!(out, "{pad}  label=\"{}\";", esc(&t.name));
    let _ = writeln!(out, "{pad}  style={style};");
    for s in &t.stages {
        let path = m.path_of(id) + "." + s.kind.as_str();
        let label = match &s.kernel {
            Some(k) => format!("{path}\\n{}", esc(&k.to_string())),
            None => path.clone(),
        };
        let _ = writeln!(out, "{pad}  \"{}\" [label=\"{}\"];", esc(&path), label);
    }
    for &c in &t.children {
        cluster(m, c, depth + 1, n, out);
    }
    let _ = writeln!(out, "{pad}}}");
}

pub fn behavior_dot(g: &BehaviorGraph) -> String {
    let mut out = String::from("digraph behavior {\n");
    for n in &g.nodes {
        let _ = writeln!(out, "  \"{}\";", esc(n));
    }
    for e in &g.edges {
        let label = e.guard.as_ref().map(|g| format!(" [label=\"{}\"]", esc(g))).unwrap_or_default();
        let _ = writeln!(out, "  \"{}\" -> \"{}\"{label};", esc(&e.from), esc(&e.to));
    }
    out.push_str("}\n");
    out
}
