#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use thimac::dsl::{ChronoDecl, EventDecl};
use thimac::er::{Attribute, Cardinality, Endpoint, EntityType, ErSchema, Fd, RelationshipType};
use thimac::sim::Record;
use thimac::validate::is_adjacent;
use thimac::{KernelSpec, StageKind, StageRef, StaticModel, ThimacId, ThimacKind};

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// Raw choices; [`build`] turns them into a model deterministically.
#[derive(Debug, Clone)]
pub struct RawModel {
    nodes: Vec<(usize, u8, u8, u8, Vec<String>)>,
    flows: Vec<(usize, usize)>,
    triggers: Vec<(usize, usize, Option<u8>)>,
    events: Vec<Vec<usize>>,
    chrono: Vec<(usize, usize, Option<u8>)>,
}

const NAMES: [&str; 6] = ["Customer", "order", "Glass_2", "x", "Product", "Ball"];
const KERNELS: [&str; 4] = ["extract", "iterate", "compare_eq", "my_kernel"];
const GUARDS: [&str; 4] = ["equal", "not-equal", "EOF", "a b \"q\""];

pub fn raw_model() -> impl Strategy<Value = RawModel> {
    let node = (any::<usize>(), 0u8..5, any::<u8>(), 0u8..6, prop::collection::vec("[a-z\"\\\\ ]{0,4}", 0..3));
    (
        prop::collection::vec(node, 0..9),
        prop::collection::vec((any::<usize>(), any::<usize>()), 0..10),
        prop::collection::vec((any::<usize>(), any::<usize>(), prop::option::of(0u8..4)), 0..6),
        prop::collection::vec(prop::collection::vec(any::<usize>(), 1..4), 0..4),
        prop::collection::vec((any::<usize>(), any::<usize>(), prop::option::of(0u8..4)), 0..4),
    )
        .prop_map(|(nodes, flows, triggers, events, chrono)| RawModel { nodes, flows, triggers, events, chrono })
}

/// A model that validates clean, plus events and chronology over it.
pub fn build(raw: &RawModel, legal_only: bool) -> (StaticModel, Vec<EventDecl>, Vec<ChronoDecl>) {
    let mut m = StaticModel::new();
    let mut ids: Vec<ThimacId> = Vec::new();
    let mut kinds: Vec<ThimacKind> = Vec::new();
    for (i, (psel, kind, mask, kern, args)) in raw.nodes.iter().enumerate() {
        let hosts: Vec<usize> = (0..i).filter(|&j| kinds[j] != ThimacKind::Attribute).collect();
        let parent = if hosts.is_empty() || psel % 3 == 0 { None } else { Some(ids[hosts[psel % hosts.len()]]) };
        let kind = ThimacKind::ALL[*kind as usize % ThimacKind::ALL.len()];
        let kind = if kind == ThimacKind::Set { ThimacKind::Plain } else { kind };
        let name = format!("{}{i}", NAMES[psel % NAMES.len()]);
        let id = m.add_thimac(parent, name, kind);
        for (b, sk) in StageKind::ALL.iter().enumerate() {
            if mask & (1 << b) == 0 {
                continue;
            }
            let kernel = matches!(sk, StageKind::Process | StageKind::Create)
                .then(|| *kern as usize)
                .filter(|k| *k < KERNELS.len())
                .map(|k| {
                    let a: Vec<&str> = args.iter().map(String::as_str).collect();
                    KernelSpec::new(KERNELS[k], &a)
                });
            m.add_stage_with_kernel(id, *sk, kernel);
        }
        ids.push(id);
        kinds.push(kind);
    }
    // promote some plain thimacs with an individual child to sets
    for (i, &id) in ids.iter().enumerate() {
        let has_member = m.thimacs[&id].children.iter().any(|c| m.thimacs[c].kind == ThimacKind::Individual);
        if has_member && kinds[i] == ThimacKind::Plain && raw.nodes[i].0.is_multiple_of(2) {
            m.thimacs.get_mut(&id).unwrap().kind = ThimacKind::Set;
        }
    }
    let stages = m.stage_refs();
    let candidates: Vec<(StageRef, StageRef)> = stages
        .iter()
        .flat_map(|&a| stages.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| {
            !legal_only
                || if a.thimac == b.thimac {
                    is_adjacent(a.stage, b.stage)
                } else {
                    a.stage == StageKind::TransferOut && b.stage == StageKind::TransferIn
                }
        })
        .collect();
    if !candidates.is_empty() {
        for &(x, _) in &raw.flows {
            let (a, b) = candidates[x % candidates.len()];
            m.add_flow(a, b);
        }
    }
    if stages.len() > 1 {
        for &(x, y, g) in &raw.triggers {
            let a = stages[x % stages.len()];
            let mut b = stages[y % stages.len()];
            if a == b {
                b = stages[(y + 1) % stages.len()];
            }
            m.add_trigger(a, b, g.map(|g| GUARDS[g as usize]));
        }
    }
    let mut events = Vec::new();
    if !stages.is_empty() {
        for (i, sel) in raw.events.iter().enumerate() {
            let region = sel.iter().map(|s| m.stage_path(stages[s % stages.len()])).collect();
            events.push(EventDecl { name: format!("E{}", i + 1), region, time: (i % 2 == 0).then(|| format!("t{i}")) });
        }
    }
    let mut chrono = Vec::new();
    if !events.is_empty() {
        for &(a, b, g) in &raw.chrono {
            chrono.push(ChronoDecl {
                from: events[a % events.len()].name.clone(),
                to: events[b % events.len()].name.clone(),
                guard: g.map(|g| GUARDS[g as usize].to_string()),
            });
        }
    }
    (m, events, chrono)
}

pub fn valid_model() -> impl Strategy<Value = (StaticModel, Vec<EventDecl>, Vec<ChronoDecl>)> {
    raw_model().prop_map(|r| build(&r, true))
}

pub fn any_model() -> impl Strategy<Value = StaticModel> {
    raw_model().prop_map(|r| build(&r, false).0)
}

const ENTITY_NAMES: [&str; 7] = ["Customer", "ADDRESS", "Order", "ITEM", "Class", "Bus", "Node"];

/// Random valid schema: unique entities with attributes and FDs, binary
/// relationships and roles between them.
pub fn schema() -> impl Strategy<Value = ErSchema> {
    let entity = (1usize..5, any::<u8>(), prop::collection::vec((any::<u8>(), any::<u8>()), 0..3));
    let assoc = (any::<usize>(), any::<bool>(), any::<usize>(), any::<bool>());
    (
        prop::sample::subsequence(ENTITY_NAMES.to_vec(), 0..=ENTITY_NAMES.len()).prop_shuffle(),
        prop::collection::vec(entity, 7),
        prop::collection::vec(assoc, 0..5),
        prop::collection::vec(assoc, 0..3),
    )
        .prop_map(|(names, ents, rels, roles)| {
            let entities: Vec<EntityType> = names
                .iter()
                .zip(&ents)
                .map(|(n, (nattr, keymask, fds))| {
                    let attrs: Vec<String> = (0..*nattr).map(|i| format!("a{i}")).collect();
                    let fds = fds
                        .iter()
                        .filter_map(|(l, r)| {
                            let (l, r) = (*l as usize % attrs.len(), *r as usize % attrs.len());
                            (l != r).then(|| Fd::new(&[&attrs[l]], &[&attrs[r]]).unwrap())
                        })
                        .collect();
                    EntityType {
                        name: n.to_string(),
                        attributes: attrs
                            .iter()
                            .enumerate()
                            .map(|(i, a)| Attribute { name: a.clone(), is_key: keymask & (1 << i) != 0 })
                            .collect(),
                        fds,
                    }
                })
                .collect();
            let mk = |prefix: &str, v: &[(usize, bool, usize, bool)]| -> Vec<RelationshipType> {
                if entities.is_empty() {
                    return Vec::new();
                }
                let card = |b: bool| if b { Cardinality::Many } else { Cardinality::One };
                v.iter()
                    .enumerate()
                    .map(|(i, (a, ca, b, cb))| RelationshipType {
                        name: format!("{prefix}{i}"),
                        endpoints: vec![
                            Endpoint { entity: entities[a % entities.len()].name.clone(), cardinality: card(*ca) },
                            Endpoint { entity: entities[b % entities.len()].name.clone(), cardinality: card(*cb) },
                        ],
                    })
                    .collect()
            };
            let relationships = mk("R", &rels);
            let roles = mk("Role", &roles);
            ErSchema { entities, relationships, roles }
        })
}

/// Prints a schema in `.ers` syntax.
pub fn schema_text(s: &ErSchema) -> String {
    let mut out = String::new();
    for e in &s.entities {
        out += &format!("entity {} {{\n", e.name);
        for a in &e.attributes {
            out += &format!("  attr {}{};\n", a.name, if a.is_key { " key" } else { "" });
        }
        for fd in &e.fds {
            let l: Vec<&str> = fd.lhs.iter().map(String::as_str).collect();
            let r: Vec<&str> = fd.rhs.iter().map(String::as_str).collect();
            out += &format!("  fd {} -> {};\n", l.join(", "), r.join(", "));
        }
        out += "}\n";
    }
    for (kw, list) in [("rel", &s.relationships), ("role", &s.roles)] {
        for r in list {
            let eps: Vec<String> =
                r.endpoints.iter().map(|e| format!("{}:{}", e.entity, e.cardinality.as_str())).collect();
            out += &format!("{kw} {} ({});\n", r.name, eps.join(", "));
        }
    }
    out
}

/// Random relation over `a0..a{n}` with values from a three-symbol alphabet,
/// and a random FD over those attributes.
pub fn relation_and_fd() -> impl Strategy<Value = (Vec<Record>, Fd)> {
    (2usize..=4).prop_flat_map(|n| {
        let row = prop::collection::vec(prop::sample::select(vec!["p", "q", "r"]), n);
        (
            prop::collection::vec(row, 0..=6),
            prop::collection::vec(0u8..3, n).prop_map(|mut sides| {
                let last = sides.len() - 1;
                if !sides.contains(&1) {
                    sides[0] = 1;
                }
                if !sides.contains(&2) {
                    let at = if sides[last] == 1 && sides[0] != 1 { 0 } else { last };
                    sides[at] = 2;
                }
                sides
            }),
        )
            .prop_map(move |(rows, sides)| {
                let rel = rows
                    .iter()
                    .map(|r| r.iter().enumerate().map(|(i, v)| (format!("a{i}"), v.to_string())).collect())
                    .collect();
                let pick = |s: u8| -> Vec<String> {
                    sides.iter().enumerate().filter(|(_, x)| **x == s).map(|(i, _)| format!("a{i}")).collect()
                };
                (rel, Fd::new(&pick(1), &pick(2)).unwrap())
            })
    })
}

/// Relation R keyed by Employee_ID that satisfies Employee_Name -> Address.
pub fn fd_relation() -> impl Strategy<Value = Vec<Record>> {
    let names = ["Ann", "Ben", "Cy", "Dee"];
    (
        prop::collection::vec(prop::sample::select(vec!["x", "y", "z"]), names.len()),
        prop::collection::vec((0usize..4, "[0-9]{2}"), 0..8),
    )
        .prop_map(move |(addr, rows)| {
            rows.iter()
                .enumerate()
                .map(|(i, (n, tel))| {
                    BTreeMap::from([
                        ("Employee_ID".to_string(), i.to_string()),
                        ("Employee_Name".to_string(), names[*n].to_string()),
                        ("Address".to_string(), addr[*n].to_string()),
                        ("Telephone-Number".to_string(), tel.clone()),
                    ])
                })
                .collect()
        })
}
