//! Well-formedness rules for static models.
//!
//! Diagnostics are accumulated, never fail-fast. Messages and paths are
//! built from names only, so permuting declaration order yields the same
//! diagnostic multiset.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::{Diagnostic, Element};
use crate::model::{StageKind, StageRef, StaticModel, ThimacId, ThimacKind};

pub mod codes {
    pub const UNKNOWN_THIMAC: &str = "UNKNOWN_THIMAC";
    pub const MULTIPLE_PARENTS: &str = "MULTIPLE_PARENTS";
    pub const CYCLE: &str = "CYCLE";
    pub const ORPHAN_THIMAC: &str = "ORPHAN_THIMAC";
    pub const EMPTY_NAME: &str = "EMPTY_NAME";
    pub const DUPLICATE_NAME: &str = "DUPLICATE_NAME";
    pub const SET_WITHOUT_MEMBER: &str = "SET_WITHOUT_MEMBER";
    pub const ATTRIBUTE_CHILD: &str = "ATTRIBUTE_CHILD";
    pub const DUPLICATE_STAGE: &str = "DUPLICATE_STAGE";
    pub const KERNEL_PLACEMENT: &str = "KERNEL_PLACEMENT";
    pub const UNKNOWN_STAGE: &str = "UNKNOWN_STAGE";
    pub const FLOW_ADJACENCY: &str = "FLOW_ADJACENCY";
    pub const FLOW_PORTS: &str = "FLOW_PORTS";
    pub const TRIGGER_SELF_LOOP: &str = "TRIGGER_SELF_LOOP";
}

use codes::*;

/// Legal flows between two stages of the same thimac.
pub const FLOW_ADJACENCY_TABLE: [(StageKind, StageKind); 7] = [
    (StageKind::TransferIn, StageKind::Receive),
    (StageKind::Receive, StageKind::Process),
    (StageKind::Receive, StageKind::Release),
    (StageKind::Create, StageKind::Process),
    (StageKind::Create, StageKind::Release),
    (StageKind::Process, StageKind::Release),
    (StageKind::Release, StageKind::TransferOut),
];

pub fn is_adjacent(from: StageKind, to: StageKind) -> bool {
    FLOW_ADJACENCY_TABLE.contains(&(from, to))
}

/// Checks every structural invariant of `model`. An empty result means the
/// model is well formed. A thimac without a create stage is fine: its
/// presence in the diagram is enough.
pub fn validate_static(model: &StaticModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let parents = model.parent_map();
    let path = |id: ThimacId| model.path_with(&parents, id);

    check_forest(model, &parents, &mut out);

    for t in model.thimacs.values() {
        let here = path(t.id);
        if t.name.is_empty() {
            out.push(
                Diagnostic::error(EMPTY_NAME, "thimac name is empty")
                    .at_path(&here)
                    .on(Element::Thimac(t.id)),
            );
        }
        for &c in &t.children {
            if !model.thimacs.contains_key(&c) {
                out.push(
                    Diagnostic::error(UNKNOWN_THIMAC, "child reference does not resolve")
                        .at_path(&here)
                        .on(Element::Thimac(t.id)),
                );
            }
        }
        let kids: Vec<_> = t.children.iter().filter_map(|c| model.thimac(*c)).collect();
        duplicate_names(kids.iter().map(|k| (k.name.as_str(), k.id)), &here, &mut out);

        match t.kind {
            ThimacKind::Set => {
                let has_member = kids
                    .iter()
                    .any(|k| matches!(k.kind, ThimacKind::Individual | ThimacKind::Set));
                if !has_member {
                    out.push(
                        Diagnostic::error(
                            SET_WITHOUT_MEMBER,
                            "a set needs at least one individual or subset child",
                        )
                        .at_path(&here)
                        .on(Element::Thimac(t.id)),
                    );
                }
            }
            ThimacKind::Attribute => {
                for k in &kids {
                    if matches!(k.kind, ThimacKind::Set | ThimacKind::Relationship) {
                        out.push(
                            Diagnostic::error(
                                ATTRIBUTE_CHILD,
                                format!("attribute cannot contain a {} thimac", k.kind),
                            )
                            .at_path(path(k.id))
                            .on(Element::Thimac(k.id)),
                        );
                    }
                }
            }
            _ => {}
        }

        let mut seen = BTreeSet::new();
        for s in &t.stages {
            let sref = StageRef::new(t.id, s.kind);
            if !seen.insert(s.kind) {
                out.push(
                    Diagnostic::error(DUPLICATE_STAGE, format!("{} declared more than once", s.kind))
                        .at_path(&here)
                        .on(Element::Stage(sref)),
                );
            }
            if s.kernel.is_some() && !matches!(s.kind, StageKind::Process | StageKind::Create) {
                out.push(
                    Diagnostic::error(
                        KERNEL_PLACEMENT,
                        format!("kernels attach to process or create stages, not {}", s.kind),
                    )
                    .at_path(format!("{here}.{}", s.kind))
                    .on(Element::Stage(sref)),
                );
            }
        }
    }

    let roots: Vec<_> = model.roots.iter().filter_map(|r| model.thimac(*r)).collect();
    duplicate_names(roots.iter().map(|t| (t.name.as_str(), t.id)), "", &mut out);

    let stage_path = |r: StageRef| format!("{}.{}", path(r.thimac), r.stage);
    let exists = |r: StageRef| model.stage(r).is_some();

    for (i, f) in model.flows.iter().enumerate() {
        let label = format!("{} -> {}", stage_path(f.from), stage_path(f.to));
        let mut ok = true;
        for end in [f.from, f.to] {
            if !exists(end) {
                ok = false;
                out.push(
                    Diagnostic::error(UNKNOWN_STAGE, format!("flow endpoint {} does not exist", stage_path(end)))
                        .at_path(&label)
                        .on(Element::Flow(i)),
                );
            }
        }
        if !ok {
            continue;
        }
        if f.from.thimac == f.to.thimac {
            if !is_adjacent(f.from.stage, f.to.stage) {
                out.push(
                    Diagnostic::error(
                        FLOW_ADJACENCY,
                        format!("{} -> {} is not a legal flow inside a thimac", f.from.stage, f.to.stage),
                    )
                    .at_path(&label)
                    .on(Element::Flow(i)),
                );
            }
        } else if (f.from.stage, f.to.stage) != (StageKind::TransferOut, StageKind::TransferIn) {
            out.push(
                Diagnostic::error(
                    FLOW_PORTS,
                    "flows between thimacs must go from transfer_out to transfer_in",
                )
                .at_path(&label)
                .on(Element::Flow(i)),
            );
        }
    }

    for (i, t) in model.triggers.iter().enumerate() {
        let label = format!("{} -> {}", stage_path(t.from), stage_path(t.to));
        for end in [t.from, t.to] {
            if !exists(end) {
                out.push(
                    Diagnostic::error(UNKNOWN_STAGE, format!("trigger endpoint {} does not exist", stage_path(end)))
                        .at_path(&label)
                        .on(Element::Trigger(i)),
                );
            }
        }
        if t.from == t.to {
            out.push(
                Diagnostic::error(TRIGGER_SELF_LOOP, "a trigger cannot target its own stage")
                    .at_path(&label)
                    .on(Element::Trigger(i)),
            );
        }
    }

    out.sort_by(|a, b| {
        (a.severity, &a.code, &a.path, &a.message).cmp(&(b.severity, &b.code, &b.path, &b.message))
    });
    out
}

fn duplicate_names<'a>(
    items: impl Iterator<Item = (&'a str, ThimacId)>,
    parent_path: &str,
    out: &mut Vec<Diagnostic>,
) {
    let mut by_name: BTreeMap<&str, Vec<ThimacId>> = BTreeMap::new();
    for (name, id) in items {
        by_name.entry(name).or_default().push(id);
    }
    for (name, ids) in by_name {
        if ids.len() > 1 {
            let p = if parent_path.is_empty() {
                name.to_string()
            } else {
                format!("{parent_path}.{name}")
            };
            out.push(
                Diagnostic::error(DUPLICATE_NAME, format!("{} siblings share the name {name:?}", ids.len()))
                    .at_path(p)
                    .on(Element::Thimac(ids[1])),
            );
        }
    }
}

fn check_forest(model: &StaticModel, parents: &BTreeMap<ThimacId, ThimacId>, out: &mut Vec<Diagnostic>) {
    let path = |id: ThimacId| model.path_with(parents, id);
    let mut incoming: BTreeMap<ThimacId, usize> = BTreeMap::new();
    for &r in &model.roots {
        if !model.thimacs.contains_key(&r) {
            out.push(Diagnostic::error(UNKNOWN_THIMAC, format!("root {r} does not resolve")));
        }
        *incoming.entry(r).or_default() += 1;
    }
    for t in model.thimacs.values() {
        for &c in &t.children {
            *incoming.entry(c).or_default() += 1;
        }
    }
    for (&id, &n) in &incoming {
        if n > 1 && model.thimacs.contains_key(&id) {
            out.push(
                Diagnostic::error(MULTIPLE_PARENTS, format!("thimac is contained {n} times"))
                    .at_path(path(id))
                    .on(Element::Thimac(id)),
            );
        }
    }

    // cycle detection over the child relation
    let mut state: BTreeMap<ThimacId, u8> = BTreeMap::new();
    for &start in model.thimacs.keys() {
        if state.contains_key(&start) {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state.insert(start, 1);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let children = &model.thimacs[&node].children;
            if *next < children.len() {
                let c = children[*next];
                *next += 1;
                if !model.thimacs.contains_key(&c) {
                    continue;
                }
                match state.get(&c) {
                    None => {
                        state.insert(c, 1);
                        stack.push((c, 0));
                    }
                    Some(1) => out.push(
                        Diagnostic::error(CYCLE, "containment cycle")
                            .at_path(path(c))
                            .on(Element::Thimac(c)),
                    ),
                    _ => {}
                }
            } else {
                state.insert(node, 2);
                stack.pop();
            }
        }
    }

    let reachable: BTreeSet<ThimacId> = model.walk().into_iter().collect();
    for &id in model.thimacs.keys() {
        if !reachable.contains(&id) {
            out.push(
                Diagnostic::error(ORPHAN_THIMAC, "thimac is neither a root nor contained in one")
                    .at_path(path(id))
                    .on(Element::Thimac(id)),
            );
        }
    }
}
