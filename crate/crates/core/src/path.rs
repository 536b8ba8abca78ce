//! Dotted-path lookup and induced subdiagrams.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{ElementRef, FlowEdge, StageKind, StageRef, StaticModel, ThimacId, TriggerEdge};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("no element at path {0:?}")]
    NotFound(String),
    #[error("path {0:?} matches more than one element")]
    Ambiguous(String),
}

/// Resolves `Name.Name...[.stage]` root-downward. A trailing segment that
/// names a stage kind selects that stage of the thimac before it.
pub fn resolve_path(model: &StaticModel, dotted_path: &str) -> Result<ElementRef, PathError> {
    let not_found = || PathError::NotFound(dotted_path.to_string());
    if dotted_path.is_empty() {
        return Err(not_found());
    }
    let segs: Vec<&str> = dotted_path.split('.').collect();
    if segs.iter().any(|s| s.is_empty()) {
        return Err(not_found());
    }

    let (names, stage) = match segs.split_last() {
        Some((last, rest)) if !rest.is_empty() => match last.parse::<StageKind>() {
            Ok(k) => (rest, Some(k)),
            Err(()) => (&segs[..], None),
        },
        _ => (&segs[..], None),
    };

    let mut level: Vec<ThimacId> = model.roots.clone();
    let mut current = None;
    for name in names {
        let hits: Vec<ThimacId> = level
            .iter()
            .copied()
            .filter(|id| model.thimac(*id).is_some_and(|t| t.name == *name))
            .collect();
        let id = match hits.as_slice() {
            [] => return Err(not_found()),
            [one] => *one,
            _ => return Err(PathError::Ambiguous(dotted_path.to_string())),
        };
        current = Some(id);
        level = model.thimacs[&id].children.clone();
    }
    let id = current.ok_or_else(not_found)?;
    match stage {
        None => Ok(ElementRef::Thimac(id)),
        Some(k) => {
            let r = StageRef::new(id, k);
            model.stage(r).map(|_| ElementRef::Stage(r)).ok_or_else(not_found)
        }
    }
}

/// The part of a model induced by a set of element references.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Fragment {
    /// Referenced thimacs, their descendants, and owners of referenced stages.
    pub thimacs: BTreeSet<ThimacId>,
    pub stages: BTreeSet<StageRef>,
    pub flows: Vec<FlowEdge>,
    pub triggers: Vec<TriggerEdge>,
}

impl Fragment {
    pub fn edge_count(&self) -> usize {
        self.flows.len() + self.triggers.len()
    }

    /// Rebuilds the fragment as a model. Ancestors of included thimacs are
    /// kept (without their stages) so the result is still a forest; ids are
    /// those of the host model.
    pub fn to_model(&self, host: &StaticModel) -> StaticModel {
        let parents = host.parent_map();
        let mut keep: BTreeSet<ThimacId> = self.thimacs.clone();
        for &id in &self.thimacs {
            let mut cur = parents.get(&id).copied();
            while let Some(p) = cur {
                if !keep.insert(p) {
                    break;
                }
                cur = parents.get(&p).copied();
            }
        }
        let mut out = StaticModel::new();
        out.roots = host.roots.iter().copied().filter(|r| keep.contains(r)).collect();
        for &id in &keep {
            let Some(t) = host.thimac(id) else { continue };
            let mut t = t.clone();
            t.children.retain(|c| keep.contains(c));
            t.stages.retain(|s| self.stages.contains(&StageRef::new(id, s.kind)));
            out.thimacs.insert(id, t);
        }
        out.flows = self.flows.clone();
        out.triggers = self.triggers.clone();
        out
    }
}

/// Stages covered by one element reference: a stage itself, or every stage
/// of a thimac and its descendants.
pub fn expand_element(model: &StaticModel, e: ElementRef) -> Vec<StageRef> {
    match e {
        ElementRef::Stage(r) => model.stage(r).map(|_| r).into_iter().collect(),
        ElementRef::Thimac(id) => model
            .subtree(id)
            .into_iter()
            .flat_map(|t| {
                model.thimacs[&t]
                    .stages
                    .iter()
                    .map(move |s| StageRef::new(t, s.kind))
            })
            .collect(),
    }
}

/// Induced subdiagram: the listed elements plus every flow and trigger
/// whose endpoints are both included.
pub fn subdiagram(
    model: &StaticModel,
    element_refs: &BTreeSet<ElementRef>,
) -> Result<Fragment, PathError> {
    let mut frag = Fragment::default();
    for &e in element_refs {
        match e {
            ElementRef::Thimac(id) => {
                if model.thimac(id).is_none() {
                    return Err(PathError::NotFound(id.to_string()));
                }
                frag.thimacs.extend(model.subtree(id));
            }
            ElementRef::Stage(r) => {
                if model.stage(r).is_none() {
                    return Err(PathError::NotFound(model.stage_path(r)));
                }
                frag.thimacs.insert(r.thimac);
            }
        }
        frag.stages.extend(expand_element(model, e));
    }
    frag.flows = model
        .flows
        .iter()
        .filter(|f| frag.stages.contains(&f.from) && frag.stages.contains(&f.to))
        .copied()
        .collect();
    frag.triggers = model
        .triggers
        .iter()
        .filter(|t| frag.stages.contains(&t.from) && frag.stages.contains(&t.to))
        .cloned()
        .collect();
    Ok(frag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ThimacKind;

    fn order_model() -> StaticModel {
        crate::dsl::parse_tm(
            "thimac Customer { release; transfer out; }
             thimac Product { transfer in; receive; process; }
             flow Customer.release -> Customer.transfer_out;
             flow Customer.transfer_out -> Product.transfer_in;
             flow Product.transfer_in -> Product.receive;
             flow Product.receive -> Product.process;",
        )
        .unwrap()
        .model
    }

    fn refs(m: &StaticModel, paths: &[&str]) -> BTreeSet<ElementRef> {
        paths.iter().map(|p| resolve_path(m, p).unwrap()).collect()
    }

    #[test]
    fn resolves_stages_and_thimacs() {
        let mut m = StaticModel::new();
        let set = m.add_thimac(None, "Customers", ThimacKind::Set);
        let ind = m.add_thimac(Some(set), "Customer", ThimacKind::Individual);
        m.add_stage(ind, StageKind::Create);
        assert_eq!(
            resolve_path(&m, "Customers.Customer.create"),
            Ok(ElementRef::Stage(StageRef::new(ind, StageKind::Create)))
        );
        assert_eq!(resolve_path(&m, "Customers.Customer"), Ok(ElementRef::Thimac(ind)));
        assert!(matches!(resolve_path(&m, ""), Err(PathError::NotFound(_))));
        assert!(matches!(resolve_path(&m, "Customers.Customer.process"), Err(PathError::NotFound(_))));
        assert!(matches!(resolve_path(&m, "Customers..Customer"), Err(PathError::NotFound(_))));
    }

    #[test]
    fn duplicate_siblings_are_ambiguous() {
        let mut m = StaticModel::new();
        m.add_thimac(None, "A", ThimacKind::Plain);
        m.add_thimac(None, "A", ThimacKind::Plain);
        assert_eq!(resolve_path(&m, "A"), Err(PathError::Ambiguous("A".into())));
    }

    #[test]
    fn subdiagram_examples() {
        let m = order_model();
        let all: BTreeSet<ElementRef> = m
            .walk()
            .into_iter()
            .map(ElementRef::Thimac)
            .chain(m.stage_refs().into_iter().map(ElementRef::Stage))
            .collect();
        let whole = subdiagram(&m, &all).unwrap();
        assert_eq!(whole.to_model(&m), m);

        let f = subdiagram(&m, &refs(&m, &["Customer.release", "Customer.transfer_out"])).unwrap();
        assert_eq!(f.stages.len(), 2);
        assert_eq!(f.flows.len(), 1);
        assert!(f.triggers.is_empty());

        let f = subdiagram(&m, &refs(&m, &["Product.process"])).unwrap();
        assert_eq!(f.stages.len(), 1);
        assert_eq!(f.edge_count(), 0);
    }

    #[test]
    fn dangling_ref_is_not_found() {
        let m = order_model();
        let bad = [ElementRef::Stage(StageRef::new(ThimacId(0), StageKind::Create))]
            .into_iter()
            .collect();
        assert!(matches!(subdiagram(&m, &bad), Err(PathError::NotFound(_))));
    }
}
