//! Events (static regions bound to time) and the behavior graph over them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::{Diagnostic, Element};
use crate::dsl::{ChronoDecl, EventDecl};
use crate::model::{ElementRef, StageRef, StaticModel};
use crate::path::{expand_element, resolve_path, PathError};

pub mod codes {
    pub const EMPTY_REGION: &str = "EMPTY_REGION";
    pub const UNRESOLVED_REGION: &str = "UNRESOLVED_REGION";
    pub const DUPLICATE_EVENT: &str = "DUPLICATE_EVENT";
    pub const DISCONNECTED_REGION: &str = "DISCONNECTED_REGION";
    pub const UNKNOWN_EVENT: &str = "UNKNOWN_EVENT";
}

use codes::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub region: BTreeSet<ElementRef>,
    pub time_label: Option<String>,
}

impl Event {
    pub fn new(name: impl Into<String>, region: impl IntoIterator<Item = ElementRef>) -> Self {
        Event { name: name.into(), region: region.into_iter().collect(), time_label: None }
    }

    /// Every stage covered by the region.
    pub fn stages(&self, model: &StaticModel) -> BTreeSet<StageRef> {
        self.region.iter().flat_map(|&e| expand_element(model, e)).collect()
    }
}

/// Resolves declared region paths. Unresolvable paths are reported and
/// dropped; the event itself is kept so indices stay aligned with `decls`.
pub fn resolve_events(model: &StaticModel, decls: &[EventDecl]) -> (Vec<Event>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let events = decls
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut region = BTreeSet::new();
            for p in &d.region {
                match resolve_path(model, p) {
                    Ok(e) => {
                        region.insert(e);
                    }
                    Err(PathError::NotFound(_)) => diags.push(
                        Diagnostic::error(UNRESOLVED_REGION, format!("region path {p} does not resolve"))
                            .at_path(&d.name)
                            .on(Element::Event(i)),
                    ),
                    Err(PathError::Ambiguous(_)) => diags.push(
                        Diagnostic::error(UNRESOLVED_REGION, format!("region path {p} is ambiguous"))
                            .at_path(&d.name)
                            .on(Element::Event(i)),
                    ),
                }
            }
            Event { name: d.name.clone(), region, time_label: d.time.clone() }
        })
        .collect();
    (events, diags)
}

/// Per-event checks: unique names, nonempty regions whose references exist,
/// and weak connectivity of each region (a warning only).
pub fn validate_events(model: &StaticModel, events: &[Event]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, ev) in events.iter().enumerate() {
        let at = |d: Diagnostic| d.at_path(&ev.name).on(Element::Event(i));
        if !seen.insert(ev.name.as_str()) {
            out.push(at(Diagnostic::error(DUPLICATE_EVENT, "event declared twice")));
        }
        if ev.region.is_empty() {
            out.push(at(Diagnostic::error(EMPTY_REGION, "event region is empty")));
            continue;
        }
        let mut dangling = false;
        for &e in &ev.region {
            let exists = match e {
                ElementRef::Thimac(id) => model.thimac(id).is_some(),
                ElementRef::Stage(r) => model.stage(r).is_some(),
            };
            if !exists {
                dangling = true;
                out.push(at(Diagnostic::error(UNRESOLVED_REGION, "region refers to a missing element")));
            }
        }
        if dangling {
            continue;
        }
        let parts = components(model, ev);
        if parts > 1 {
            out.push(at(Diagnostic::warning(
                DISCONNECTED_REGION,
                format!("region splits into {parts} unconnected parts"),
            )));
        }
    }
    out
}

/// Number of weakly connected parts of the region. A referenced thimac
/// counts as one connected unit; otherwise stages are joined only by flows
/// and triggers between them.
fn components(model: &StaticModel, ev: &Event) -> usize {
    let stages: Vec<StageRef> = ev.stages(model).into_iter().collect();
    if stages.is_empty() {
        return 1;
    }
    let index: BTreeMap<StageRef, usize> = stages.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut parent: Vec<usize> = (0..stages.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut union = |a: usize, b: usize| {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    };
    for &e in &ev.region {
        if let ElementRef::Thimac(_) = e {
            let unit: Vec<usize> = expand_element(model, e).iter().map(|s| index[s]).collect();
            for w in unit.windows(2) {
                union(w[0], w[1]);
            }
        }
    }
    let edges = model.flows.iter().map(|f| (f.from, f.to)).chain(model.triggers.iter().map(|t| (t.from, t.to)));
    for (a, b) in edges {
        if let (Some(&a), Some(&b)) = (index.get(&a), index.get(&b)) {
            union(a, b);
        }
    }
    (0..stages.len()).filter(|&i| find(&mut parent, i) == i).count()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BehaviorEdge {
    pub from: String,
    pub to: String,
    pub guard: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<BehaviorEdge>,
}

impl BehaviorGraph {
    /// The chronology as written in the model file.
    pub fn from_declared(events: &[EventDecl], chrono: &[ChronoDecl]) -> Result<BehaviorGraph, Vec<Diagnostic>> {
        let nodes: Vec<String> = events.iter().map(|e| e.name.clone()).collect();
        let mut diags = Vec::new();
        let mut edges = Vec::new();
        for c in chrono {
            for end in [&c.from, &c.to] {
                if !nodes.contains(end) {
                    diags.push(
                        Diagnostic::error(UNKNOWN_EVENT, format!("chronology names undeclared event {end}"))
                            .at_path(end.clone()),
                    );
                }
            }
            let e = BehaviorEdge { from: c.from.clone(), to: c.to.clone(), guard: c.guard.clone() };
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
        if diags.is_empty() {
            Ok(BehaviorGraph { nodes, edges })
        } else {
            Err(diags)
        }
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("behavior graph serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Behavior edges from single flow or trigger adjacency between regions.
/// Trigger guards are copied; flows give unguarded edges. Edges are ordered
/// by the declaration index of their endpoints, then by guard.
pub fn derive_chronology(model: &StaticModel, events: &[Event]) -> BehaviorGraph {
    let regions: Vec<BTreeSet<StageRef>> = events.iter().map(|e| e.stages(model)).collect();
    let mut found: BTreeSet<(usize, usize, Option<String>)> = BTreeSet::new();
    let edges = model
        .flows
        .iter()
        .map(|f| (f.from, f.to, None))
        .chain(model.triggers.iter().map(|t| (t.from, t.to, t.guard.clone())));
    for (from, to, guard) in edges {
        for (i, a) in regions.iter().enumerate() {
            if !a.contains(&from) {
                continue;
            }
            for (j, b) in regions.iter().enumerate() {
                if i != j && b.contains(&to) {
                    found.insert((i, j, guard.clone()));
                }
            }
        }
    }
    BehaviorGraph {
        nodes: events.iter().map(|e| e.name.clone()).collect(),
        edges: found
            .into_iter()
            .map(|(i, j, guard)| BehaviorEdge { from: events[i].name.clone(), to: events[j].name.clone(), guard })
            .collect(),
    }
}

/// One entry of a projected trace: the event and the guard it was reached by.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub event: String,
    pub guard: Option<String>,
}

impl TraceEvent {
    pub fn new(event: &str, guard: Option<&str>) -> Self {
        TraceEvent { event: event.to_string(), guard: guard.map(str::to_string) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {index}: no behavior edge {from} -> {to}")]
pub struct Violation {
    pub index: usize,
    pub from: String,
    pub to: String,
}

/// Every consecutive pair must be a behavior edge; an unguarded edge accepts
/// any guard, a guarded one only the same label.
pub fn check_conformance(behavior: &BehaviorGraph, trace: &[TraceEvent]) -> Result<(), Violation> {
    for (i, w) in trace.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let ok = behavior.edges.iter().any(|e| {
            e.from == a.event && e.to == b.event && (e.guard.is_none() || e.guard == b.guard)
        });
        if !ok {
            return Err(Violation { index: i + 1, from: a.event.clone(), to: b.event.clone() });
        }
    }
    Ok(())
}
