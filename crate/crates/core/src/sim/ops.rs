//! The relational operations as runs of their machines.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dsl::{parse_tm, ParsedTm};
use crate::er::{set_name, ErSchema, Fd};
use crate::events::{resolve_events, Event};
use crate::model::{KernelSpec, StaticModel};
use crate::sim::engine::{run, Run, RunConfig, RunError, RunFailure, Trace};
use crate::sim::store::{Record, Store};

pub mod models {
    //! Operation machines. Each is a complete `.tm` file written for one
    //! concrete relation; the operations rebind its kernel arguments.
    pub const INSERT_ADDRESS: &str = include_str!("../../fixtures/insert_address.tm");
    pub const EMPLOYEE_INSERT: &str = include_str!("../../fixtures/employee_insert.tm");
    pub const FD_UPDATE: &str = include_str!("../../fixtures/fd_update.tm");
}

pub const DUPLICATE_KEY: &str = "DUPLICATE_KEY";

/// Parses a built-in machine and rebinds kernel arguments. An `extract`
/// that ends up with several fields becomes a `construct` of them.
fn instantiate(text: &str, bind: &BTreeMap<&str, Vec<String>>) -> (StaticModel, Vec<Event>) {
    let ParsedTm { mut model, events, .. } = parse_tm(text).expect("built-in machine parses");
    for t in model.thimacs.values_mut() {
        for s in &mut t.stages {
            let Some(k) = &mut s.kernel else { continue };
            let args: Vec<String> = k
                .args
                .iter()
                .flat_map(|a| bind.get(a.as_str()).cloned().unwrap_or_else(|| vec![a.clone()]))
                .collect();
            let name = if k.name == "extract" && args.len() > 1 { "construct".to_string() } else { k.name.clone() };
            *k = KernelSpec { name, args };
        }
    }
    let (events, diags) = resolve_events(&model, &events);
    debug_assert!(diags.is_empty());
    (model, events)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RiError {
    #[error("a record with the same key already exists")]
    DuplicateKey,
    #[error("unknown partition {0}")]
    UnknownPartition(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("relation {0} has no partition attribute")]
    NotPartitioned(String),
    #[error("attribute {0} is not declared")]
    UnknownAttribute(String),
    #[error(transparent)]
    Run(RunError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{error}")]
pub struct RiFailure {
    pub error: RiError,
    pub trace: Trace,
}

fn early(error: RiError) -> RiFailure {
    RiFailure { error, trace: Trace::default() }
}

/// Inserts `record` into `partition_value` of `relation` after scanning the
/// whole relation for the same key.
pub fn insert_with_ri(
    store: &Store,
    schema: &ErSchema,
    relation: &str,
    record: &Record,
    partition_value: &str,
) -> Result<Run, RiFailure> {
    let rel = store.relation(relation).ok_or_else(|| early(RiError::UnknownRelation(relation.into())))?;
    let part = rel.partition.clone().ok_or_else(|| early(RiError::NotPartitioned(relation.into())))?;
    if let Some(e) = schema.entities.iter().find(|e| e.name == relation || set_name(&e.name) == relation) {
        for a in record.keys() {
            if !e.has_attribute(a) && *a != part {
                return Err(early(RiError::UnknownAttribute(a.clone())));
            }
        }
    }
    for k in &rel.key {
        if !record.contains_key(k) {
            return Err(early(RiError::UnknownAttribute(k.clone())));
        }
    }
    let bind = BTreeMap::from([
        ("EMPLOYEES", vec![relation.to_string()]),
        ("Ssn", rel.key.clone()),
        ("Dno", vec![part.clone()]),
    ]);
    let (model, events) = instantiate(models::EMPLOYEE_INSERT, &bind);
    let mut request = record.clone();
    request.insert(part, partition_value.to_string());
    match run(&model, store, &request, &events, &RunConfig::default()) {
        Ok(r) if r.trace.error.as_deref() == Some(DUPLICATE_KEY) => {
            Err(RiFailure { error: RiError::DuplicateKey, trace: r.trace })
        }
        Ok(r) => Ok(r),
        Err(RunFailure { error: RunError::UnknownPartition { value, .. }, trace }) => {
            Err(RiFailure { error: RiError::UnknownPartition(value), trace })
        }
        Err(RunFailure { error, trace }) => Err(RiFailure { error: RiError::Run(error), trace }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FdError {
    #[error("attribute {0} does not occur in the relation")]
    UnknownAttribute(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("attribute {0} is not on the expected side of the FD")]
    OutsideFd(String),
    #[error(transparent)]
    Run(#[from] RunFailure),
}

/// All index pairs `(i, j)`, `i < j`, that agree on the left side but not
/// on the right side of `fd`.
pub fn check_fd(relation: &[Record], fd: &Fd) -> Result<Vec<(usize, usize)>, FdError> {
    if !relation.is_empty() {
        for a in fd.attributes() {
            if !relation.iter().any(|r| r.contains_key(a)) {
                return Err(FdError::UnknownAttribute(a.to_string()));
            }
        }
    }
    let proj = |r: &Record, side: &std::collections::BTreeSet<String>| -> Vec<Option<String>> {
        side.iter().map(|a| r.get(a).cloned()).collect()
    };
    let mut out = Vec::new();
    for i in 0..relation.len() {
        for j in i + 1..relation.len() {
            let (a, b) = (&relation[i], &relation[j]);
            if proj(a, &fd.lhs) == proj(b, &fd.lhs) && proj(a, &fd.rhs) != proj(b, &fd.rhs) {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// Sets `set_attr` to `new_value` in every tuple whose `match_attr` is
/// `match_value`, by running the FD update machine.
pub fn update_with_fd(
    store: &Store,
    relation: &str,
    fd: &Fd,
    match_attr: &str,
    match_value: &str,
    set_attr: &str,
    new_value: &str,
) -> Result<Run, FdError> {
    let rel = store.relation(relation).ok_or_else(|| FdError::UnknownRelation(relation.into()))?;
    if !fd.lhs.contains(match_attr) {
        return Err(FdError::OutsideFd(match_attr.into()));
    }
    if !fd.rhs.contains(set_attr) {
        return Err(FdError::OutsideFd(set_attr.into()));
    }
    if !rel.records.is_empty() {
        let attrs = rel.attributes();
        for a in [match_attr, set_attr] {
            if !attrs.contains(a) {
                return Err(FdError::UnknownAttribute(a.into()));
            }
        }
    }
    let bind = BTreeMap::from([
        ("R", vec![relation.to_string()]),
        ("Employee_Name", vec![match_attr.to_string()]),
        ("Address", vec![set_attr.to_string()]),
    ]);
    let (model, events) = instantiate(models::FD_UPDATE, &bind);
    let request = Record::from([
        (match_attr.to_string(), match_value.to_string()),
        (set_attr.to_string(), new_value.to_string()),
    ]);
    Ok(run(&model, store, &request, &events, &RunConfig::default())?)
}
