//! ER schema to static model translation.
//!
//! Rules, applied in order:
//! 1. every entity becomes a set thimac holding one individual, which holds
//!    one attribute thimac per attribute; all of them get a create stage;
//! 2. an entity on the `many` side of a relationship gets a subset
//!    `Sub<set name>` inside its set (both sides for m-n);
//! 3. every relationship and role becomes a relationship thimac with one
//!    participant per endpoint, fed by a flow from the entity individual;
//! 4. the `one` side participant of a 1-n relationship carries a
//!    `uniqueness` attribute.
//!
//! Entities come first, then relationships, then roles, each in
//! declaration order.

use std::collections::{BTreeMap, BTreeSet};

use crate::er::schema::{set_name, Cardinality, ErSchema, Fd};
use crate::model::{KernelSpec, StageKind, StageRef, StaticModel, ThimacId, ThimacKind};

pub const UNIQUENESS: &str = "uniqueness";

pub fn subset_name(entity: &str) -> String {
    format!("Sub{}", set_name(entity))
}

pub fn translate_er(schema: &ErSchema) -> StaticModel {
    let mut m = StaticModel::new();

    let participating: BTreeSet<&str> = schema
        .associations()
        .flat_map(|r| r.endpoints.iter().map(|e| e.entity.as_str()))
        .collect();

    let mut needs_subset: BTreeSet<&str> = BTreeSet::new();
    for r in schema.associations() {
        let has_one = r.endpoints.iter().any(|e| e.cardinality == Cardinality::One);
        let all_many = r.endpoints.iter().all(|e| e.cardinality == Cardinality::Many);
        for e in &r.endpoints {
            if e.cardinality == Cardinality::Many && (has_one || all_many) {
                needs_subset.insert(e.entity.as_str());
            }
        }
    }

    let mut individuals: BTreeMap<&str, ThimacId> = BTreeMap::new();
    for e in &schema.entities {
        let set = m.add_thimac(None, set_name(&e.name), ThimacKind::Set);
        m.add_stage(set, StageKind::Create);
        let ind = m.add_thimac(Some(set), e.name.clone(), ThimacKind::Individual);
        let create = m.add_stage(ind, StageKind::Create);
        if participating.contains(e.name.as_str()) {
            let release = m.add_stage(ind, StageKind::Release);
            let out = m.add_stage(ind, StageKind::TransferOut);
            m.add_flow(create, release);
            m.add_flow(release, out);
        }
        for a in &e.attributes {
            let at = m.add_thimac(Some(ind), a.name.clone(), ThimacKind::Attribute);
            m.add_stage(at, StageKind::Create);
        }
        if needs_subset.contains(e.name.as_str()) {
            let sub = m.add_thimac(Some(set), subset_name(&e.name), ThimacKind::Set);
            m.add_stage(sub, StageKind::Create);
            let member = m.add_thimac(Some(sub), e.name.clone(), ThimacKind::Individual);
            m.add_stage(member, StageKind::Create);
        }
        individuals.entry(e.name.as_str()).or_insert(ind);
    }

    for r in schema.associations() {
        let rel = m.add_thimac(None, r.name.clone(), ThimacKind::Relationship);
        m.add_stage(rel, StageKind::Create);
        let one_to_many = r.endpoints.iter().any(|e| e.cardinality == Cardinality::One)
            && r.endpoints.iter().any(|e| e.cardinality == Cardinality::Many);
        let mut used = BTreeSet::new();
        for ep in &r.endpoints {
            let base = match ep.cardinality {
                Cardinality::One => ep.entity.clone(),
                Cardinality::Many => set_name(&ep.entity),
            };
            let mut name = base.clone();
            let mut n = 2;
            while !used.insert(name.clone()) {
                name = format!("{base}_{n}");
                n += 1;
            }
            let kind = match ep.cardinality {
                Cardinality::One => ThimacKind::Individual,
                Cardinality::Many => ThimacKind::Set,
            };
            let part = m.add_thimac(Some(rel), name, kind);
            let tin = m.add_stage(part, StageKind::TransferIn);
            let recv = m.add_stage(part, StageKind::Receive);
            m.add_flow(tin, recv);
            if kind == ThimacKind::Set {
                let member = m.add_thimac(Some(part), ep.entity.clone(), ThimacKind::Individual);
                m.add_stage(member, StageKind::Create);
            }
            if one_to_many && ep.cardinality == Cardinality::One {
                let u = m.add_thimac(Some(part), UNIQUENESS, ThimacKind::Attribute);
                m.add_stage(u, StageKind::Create);
            }
            if let Some(&ind) = individuals.get(ep.entity.as_str()) {
                m.add_flow(StageRef::new(ind, StageKind::TransferOut), tin);
            }
        }
    }
    m
}

/// Name of the machine that enforces `fd`.
pub fn fd_machine_name(fd: &Fd) -> String {
    let l: Vec<&str> = fd.lhs.iter().map(String::as_str).collect();
    let r: Vec<&str> = fd.rhs.iter().map(String::as_str).collect();
    format!("FD:{}→{}", l.join(","), r.join(","))
}

/// The two-tuple constraint as a machine: two tuples flow into a comparison
/// over the left-hand attributes; an `equal` outcome triggers an assertion
/// over the right-hand attributes.
pub fn fd_to_tm(fd: &Fd) -> StaticModel {
    let mut m = StaticModel::new();
    let root = m.add_thimac(None, fd_machine_name(fd), ThimacKind::Relationship);
    m.add_stage(root, StageKind::Create);

    let cmp = m.add_thimac(Some(root), "Compare", ThimacKind::Plain);
    let cin = m.add_stage(cmp, StageKind::TransferIn);
    let crecv = m.add_stage(cmp, StageKind::Receive);
    let lhs: Vec<&str> = fd.lhs.iter().map(String::as_str).collect();
    let cproc = m.add_stage_with_kernel(cmp, StageKind::Process, Some(KernelSpec::new("compare_eq", &lhs)));
    m.add_flow(cin, crecv);
    m.add_flow(crecv, cproc);

    for name in ["Tuple1", "Tuple2"] {
        let t = m.add_thimac(Some(root), name, ThimacKind::Individual);
        let create = m.add_stage(t, StageKind::Create);
        let release = m.add_stage(t, StageKind::Release);
        let out = m.add_stage(t, StageKind::TransferOut);
        m.add_flow(create, release);
        m.add_flow(release, out);
        m.add_flow(out, cin);
        for a in fd.attributes() {
            let at = m.add_thimac(Some(t), a, ThimacKind::Attribute);
            m.add_stage(at, StageKind::Create);
        }
    }

    let asrt = m.add_thimac(Some(root), "Assert", ThimacKind::Plain);
    let rhs: Vec<&str> = fd.rhs.iter().map(String::as_str).collect();
    let aproc = m.add_stage_with_kernel(asrt, StageKind::Process, Some(KernelSpec::new("assert_eq", &rhs)));
    m.add_trigger(cproc, aproc, Some("equal"));
    m
}
