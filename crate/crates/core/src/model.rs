//! Static model types: thimacs, their stages, flows and triggers.
//!
//! A [`StaticModel`] is a forest of thimacs. Each thimac owns at most one
//! stage of every [`StageKind`]; flows (solid edges) and triggers (dashed
//! edges) connect stages. Thimac ids are plain data, so a model may contain
//! dangling references; [`crate::validate_static`] reports them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ThimacId(pub u32);

impl fmt::Display for ThimacId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Notational kind of a thimac.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThimacKind {
    Plain,
    Set,
    Individual,
    Relationship,
    Attribute,
}

impl ThimacKind {
    pub const ALL: [ThimacKind; 5] = [
        ThimacKind::Plain,
        ThimacKind::Set,
        ThimacKind::Individual,
        ThimacKind::Relationship,
        ThimacKind::Attribute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ThimacKind::Plain => "plain",
            ThimacKind::Set => "set",
            ThimacKind::Individual => "individual",
            ThimacKind::Relationship => "relationship",
            ThimacKind::Attribute => "attribute",
        }
    }
}

impl FromStr for ThimacKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ThimacKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

impl fmt::Display for ThimacKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One of the generic actions. Transfer is split into an input and an
/// output port; receive stands for arrive followed by accept.
///
/// Variant order is the canonical order used when printing a thimac.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    TransferIn,
    Receive,
    Create,
    Process,
    Release,
    TransferOut,
}

impl StageKind {
    pub const ALL: [StageKind; 6] = [
        StageKind::TransferIn,
        StageKind::Receive,
        StageKind::Create,
        StageKind::Process,
        StageKind::Release,
        StageKind::TransferOut,
    ];

    /// Name used as the last segment of a dotted path.
    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::TransferIn => "transfer_in",
            StageKind::Receive => "receive",
            StageKind::Create => "create",
            StageKind::Process => "process",
            StageKind::Release => "release",
            StageKind::TransferOut => "transfer_out",
        }
    }

    /// Keyword form used in stage declarations.
    pub fn decl_keyword(self) -> &'static str {
        match self {
            StageKind::TransferIn => "transfer in",
            StageKind::TransferOut => "transfer out",
            other => other.as_str(),
        }
    }

    pub fn is_port(self) -> bool {
        matches!(self, StageKind::TransferIn | StageKind::TransferOut)
    }
}

impl FromStr for StageKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A kernel annotation on a stage: a name plus string arguments.
/// The simulator gives these meaning; the model treats them as opaque.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl KernelSpec {
    pub fn new(name: impl Into<String>, args: &[&str]) -> Self {
        KernelSpec {
            name: name.into(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", quote(a))?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Quote a string literal the way the `.tm` lexer reads it back.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub kind: StageKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thimac {
    pub id: ThimacId,
    pub name: String,
    pub kind: ThimacKind,
    pub children: Vec<ThimacId>,
    pub stages: Vec<Stage>,
}

impl Thimac {
    pub fn stage(&self, kind: StageKind) -> Option<&Stage> {
        self.stages.iter().find(|s| s.kind == kind)
    }

    pub fn has_stage(&self, kind: StageKind) -> bool {
        self.stage(kind).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StageRef {
    pub thimac: ThimacId,
    pub stage: StageKind,
}

impl StageRef {
    pub fn new(thimac: ThimacId, stage: StageKind) -> Self {
        StageRef { thimac, stage }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowEdge {
    pub from: StageRef,
    pub to: StageRef,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TriggerEdge {
    pub from: StageRef,
    pub to: StageRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<String>,
}

/// Reference to a model element: a whole thimac or one of its stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementRef {
    Thimac(ThimacId),
    Stage(StageRef),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticModel {
    pub roots: Vec<ThimacId>,
    pub thimacs: BTreeMap<ThimacId, Thimac>,
    pub flows: Vec<FlowEdge>,
    pub triggers: Vec<TriggerEdge>,
}

impl StaticModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.thimacs.is_empty() && self.roots.is_empty()
    }

    fn next_id(&self) -> ThimacId {
        ThimacId(self.thimacs.keys().next_back().map_or(0, |id| id.0 + 1))
    }

    /// Adds a thimac under `parent` (or as a root) and returns its id.
    pub fn add_thimac(
        &mut self,
        parent: Option<ThimacId>,
        name: impl Into<String>,
        kind: ThimacKind,
    ) -> ThimacId {
        let id = self.next_id();
        self.thimacs.insert(
            id,
            Thimac {
                id,
                name: name.into(),
                kind,
                children: Vec::new(),
                stages: Vec::new(),
            },
        );
        match parent.and_then(|p| self.thimacs.get_mut(&p)) {
            Some(p) => p.children.push(id),
            None => self.roots.push(id),
        }
        id
    }

    pub fn add_stage(&mut self, id: ThimacId, kind: StageKind) -> StageRef {
        self.add_stage_with_kernel(id, kind, None)
    }

    pub fn add_stage_with_kernel(
        &mut self,
        id: ThimacId,
        kind: StageKind,
        kernel: Option<KernelSpec>,
    ) -> StageRef {
        if let Some(t) = self.thimacs.get_mut(&id) {
            t.stages.push(Stage { kind, kernel });
        }
        StageRef::new(id, kind)
    }

    pub fn add_flow(&mut self, from: StageRef, to: StageRef) {
        self.flows.push(FlowEdge { from, to });
    }

    pub fn add_trigger(&mut self, from: StageRef, to: StageRef, guard: Option<&str>) {
        self.triggers.push(TriggerEdge {
            from,
            to,
            guard: guard.map(str::to_string),
        });
    }

    pub fn thimac(&self, id: ThimacId) -> Option<&Thimac> {
        self.thimacs.get(&id)
    }

    pub fn stage(&self, r: StageRef) -> Option<&Stage> {
        self.thimacs.get(&r.thimac).and_then(|t| t.stage(r.stage))
    }

    /// Child to parent map. When a thimac is listed under several parents,
    /// the first one (in id order) wins.
    pub fn parent_map(&self) -> BTreeMap<ThimacId, ThimacId> {
        let mut parents = BTreeMap::new();
        for t in self.thimacs.values() {
            for &c in &t.children {
                parents.entry(c).or_insert(t.id);
            }
        }
        parents
    }

    /// Dotted name path of a thimac, root first. Terminates on cyclic input.
    pub fn path_of(&self, id: ThimacId) -> String {
        self.path_with(&self.parent_map(), id)
    }

    pub(crate) fn path_with(&self, parents: &BTreeMap<ThimacId, ThimacId>, id: ThimacId) -> String {
        let mut segs = Vec::new();
        let mut seen = BTreeSet::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            if !seen.insert(c) {
                break;
            }
            match self.thimacs.get(&c) {
                Some(t) => segs.push(t.name.clone()),
                None => segs.push(c.to_string()),
            }
            cur = parents.get(&c).copied();
        }
        segs.reverse();
        segs.join(".")
    }

    pub fn stage_path(&self, r: StageRef) -> String {
        format!("{}.{}", self.path_of(r.thimac), r.stage)
    }

    pub fn element_path(&self, e: ElementRef) -> String {
        match e {
            ElementRef::Thimac(id) => self.path_of(id),
            ElementRef::Stage(r) => self.stage_path(r),
        }
    }

    /// Pre-order walk from the roots, children in declaration order.
    /// Each thimac is visited at most once.
    pub fn walk(&self) -> Vec<ThimacId> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<ThimacId> = self.roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            if let Some(t) = self.thimacs.get(&id) {
                out.push(id);
                stack.extend(t.children.iter().rev().copied());
            }
        }
        out
    }

    /// Every existing stage, in walk order.
    pub fn stage_refs(&self) -> Vec<StageRef> {
        self.walk()
            .into_iter()
            .flat_map(|id| {
                self.thimacs[&id]
                    .stages
                    .iter()
                    .map(move |s| StageRef::new(id, s.kind))
            })
            .collect()
    }

    /// The thimac and all of its descendants.
    pub fn subtree(&self, id: ThimacId) -> Vec<ThimacId> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            if !seen.insert(c) {
                continue;
            }
            if let Some(t) = self.thimacs.get(&c) {
                out.push(c);
                stack.extend(t.children.iter().rev().copied());
            }
        }
        out
    }

    pub fn top_level_count(&self) -> usize {
        self.roots.len()
    }

    /// Order-normalized copy: roots and children sorted by name, stages by
    /// kind, ids renumbered in walk order, edges sorted. Two models are
    /// structurally equal iff their canonical forms are equal.
    pub fn canonical(&self) -> StaticModel {
        let mut renumber = BTreeMap::new();
        let mut order = Vec::new();
        let by_name = |ids: &[ThimacId]| {
            let mut v: Vec<ThimacId> = ids
                .iter()
                .copied()
                .filter(|i| self.thimacs.contains_key(i))
                .collect();
            v.sort_by(|a, b| self.thimacs[a].name.cmp(&self.thimacs[b].name));
            v
        };
        let mut stack: Vec<ThimacId> = by_name(&self.roots).into_iter().rev().collect();
        while let Some(id) = stack.pop() {
            if renumber.contains_key(&id) {
                continue;
            }
            renumber.insert(id, ThimacId(order.len() as u32));
            order.push(id);
            stack.extend(by_name(&self.thimacs[&id].children).into_iter().rev());
        }
        let map_ref = |r: StageRef| renumber.get(&r.thimac).map(|&t| StageRef::new(t, r.stage));

        let mut out = StaticModel::new();
        for &old in &order {
            let t = &self.thimacs[&old];
            let mut stages = t.stages.clone();
            stages.sort_by_key(|s| s.kind);
            let children = by_name(&t.children)
                .iter()
                .filter_map(|c| renumber.get(c).copied())
                .collect();
            let id = renumber[&old];
            out.thimacs.insert(
                id,
                Thimac {
                    id,
                    name: t.name.clone(),
                    kind: t.kind,
                    children,
                    stages,
                },
            );
        }
        out.roots = by_name(&self.roots)
            .iter()
            .filter_map(|r| renumber.get(r).copied())
            .collect();
        out.flows = self
            .flows
            .iter()
            .filter_map(|f| Some(FlowEdge { from: map_ref(f.from)?, to: map_ref(f.to)? }))
            .collect();
        out.flows.sort();
        out.flows.dedup();
        out.triggers = self
            .triggers
            .iter()
            .filter_map(|t| {
                Some(TriggerEdge {
                    from: map_ref(t.from)?,
                    to: map_ref(t.to)?,
                    guard: t.guard.clone(),
                })
            })
            .collect();
        out.triggers.sort();
        out.triggers.dedup();
        out
    }

    pub fn structurally_eq(&self, other: &StaticModel) -> bool {
        self.canonical() == other.canonical()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_and_paths() {
        let mut m = StaticModel::new();
        let w = m.add_thimac(None, "Window", ThimacKind::Plain);
        let g = m.add_thimac(Some(w), "Glass", ThimacKind::Plain);
        let r = m.add_stage(g, StageKind::Receive);
        assert_eq!(m.path_of(g), "Window.Glass");
        assert_eq!(m.stage_path(r), "Window.Glass.receive");
        assert_eq!(m.walk(), vec![w, g]);
        assert_eq!(m.top_level_count(), 1);
    }

    #[test]
    fn path_of_terminates_on_cycles() {
        let mut m = StaticModel::new();
        let a = m.add_thimac(None, "A", ThimacKind::Plain);
        let b = m.add_thimac(Some(a), "B", ThimacKind::Plain);
        m.thimacs.get_mut(&b).unwrap().children.push(a);
        let _ = m.path_of(a);
        let _ = m.path_of(b);
        assert_eq!(m.walk().len(), 2);
    }

    #[test]
    fn canonical_ignores_declaration_order() {
        let mut a = StaticModel::new();
        let x = a.add_thimac(None, "X", ThimacKind::Plain);
        let y = a.add_thimac(None, "Y", ThimacKind::Plain);
        a.add_stage(x, StageKind::Release);
        a.add_stage(x, StageKind::TransferOut);
        a.add_stage(y, StageKind::TransferIn);
        a.add_flow(StageRef::new(x, StageKind::Release), StageRef::new(x, StageKind::TransferOut));
        a.add_flow(StageRef::new(x, StageKind::TransferOut), StageRef::new(y, StageKind::TransferIn));

        let mut b = StaticModel::new();
        let y2 = b.add_thimac(None, "Y", ThimacKind::Plain);
        let x2 = b.add_thimac(None, "X", ThimacKind::Plain);
        b.add_stage(y2, StageKind::TransferIn);
        b.add_stage(x2, StageKind::TransferOut);
        b.add_stage(x2, StageKind::Release);
        b.add_flow(StageRef::new(x2, StageKind::TransferOut), StageRef::new(y2, StageKind::TransferIn));
        b.add_flow(StageRef::new(x2, StageKind::Release), StageRef::new(x2, StageKind::TransferOut));

        assert_ne!(a, b);
        assert!(a.structurally_eq(&b));
    }

    #[test]
    fn kernel_display_quotes_args() {
        let k = KernelSpec::new("construct", &["ID", "Ad\"dr"]);
        assert_eq!(k.to_string(), r#"construct("ID", "Ad\"dr")"#);
        assert_eq!(KernelSpec::new("iterate", &[]).to_string(), "iterate");
    }
}
