use std::fmt;

use crate::model::KernelSpec;
use crate::sim::store::{Record, Store};
use crate::sim::RunError;

/// What a token carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Request(Record),
    FieldValue { name: String, value: String },
    Record(Record),
    File(Vec<Record>),
    Outcome(String),
}

fn fields(r: &Record) -> String {
    r.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Request(r) => write!(f, "request{{{}}}", fields(r)),
            Payload::FieldValue { name, value } => write!(f, "{name}={value}"),
            Payload::Record(r) => write!(f, "record{{{}}}", fields(r)),
            Payload::File(rs) => write!(f, "file[{}]", rs.len()),
            Payload::Outcome(l) => write!(f, "outcome({l})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Kernel {
    Extract(String),
    CompareEq(Vec<String>),
    Iterate(String),
    Construct(Vec<String>),
    ReplaceRecord(String),
    AppendRecord { relation: String, partition: Option<String> },
    AssertEq(Vec<String>),
    EmitError(String),
}

impl Kernel {
    pub fn from_spec(spec: &KernelSpec, stage: &str) -> Result<Kernel, RunError> {
        let a = &spec.args;
        let arity = |want: &str| RunError::KernelArity {
            stage: stage.to_string(),
            message: format!("{} takes {want}, got {} arguments", spec.name, a.len()),
        };
        let k = match spec.name.as_str() {
            "extract" if a.len() == 1 => Kernel::Extract(a[0].clone()),
            "extract" => return Err(arity("one field")),
            "compare_eq" if !a.is_empty() => Kernel::CompareEq(a.clone()),
            "compare_eq" => return Err(arity("at least one field")),
            "iterate" if a.len() == 1 => Kernel::Iterate(a[0].clone()),
            "iterate" => return Err(arity("one relation")),
            "construct" => Kernel::Construct(a.clone()),
            "replace_record" if a.len() == 1 => Kernel::ReplaceRecord(a[0].clone()),
            "replace_record" => return Err(arity("one relation")),
            "append_record" if a.len() == 1 || a.len() == 2 => {
                Kernel::AppendRecord { relation: a[0].clone(), partition: a.get(1).cloned() }
            }
            "append_record" => return Err(arity("a relation and an optional partition field")),
            "assert_eq" if !a.is_empty() => Kernel::AssertEq(a.clone()),
            "assert_eq" => return Err(arity("at least one field")),
            "emit_error" if a.len() == 1 => Kernel::EmitError(a[0].clone()),
            "emit_error" => return Err(arity("one code")),
            _ => return Err(RunError::UnknownKernel { stage: stage.to_string(), name: spec.name.clone() }),
        };
        Ok(k)
    }
}

/// Per-stage memory kept between activations.
#[derive(Debug, Clone, Default)]
pub struct KernelState {
    source: Option<Record>,
    probe: Option<Payload>,
    cursor: Option<(Vec<Record>, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Firing {
    /// Inputs are not complete yet; nothing happens.
    Wait,
    Fired { outcome: Option<String>, outputs: Vec<Payload>, error: Option<String> },
}

fn fired(outcome: Option<&str>, outputs: Vec<Payload>) -> Firing {
    Firing::Fired { outcome: outcome.map(str::to_string), outputs, error: None }
}

fn value_of<'a>(p: &'a Payload, field: &str) -> Option<&'a str> {
    match p {
        Payload::FieldValue { name, value } if name == field => Some(value),
        Payload::Record(r) | Payload::Request(r) => r.get(field).map(String::as_str),
        _ => None,
    }
}

pub(crate) fn fire(
    kernel: &Kernel,
    inbox: &mut Vec<Payload>,
    st: &mut KernelState,
    store: &mut Store,
    stage: &str,
) -> Result<Firing, RunError> {
    let arity = |message: String| RunError::KernelArity { stage: stage.to_string(), message };
    match kernel {
        Kernel::Extract(_) | Kernel::Construct(_) => {
            for p in inbox.drain(..) {
                match p {
                    Payload::Request(r) | Payload::Record(r) => st.source = Some(r),
                    other => return Err(arity(format!("expects a request or record, got {other}"))),
                }
            }
            let Some(src) = &st.source else { return Ok(Firing::Wait) };
            match kernel {
                Kernel::Extract(f) => {
                    let v = src.get(f).ok_or_else(|| arity(format!("no field {f} in source")))?;
                    Ok(fired(None, vec![Payload::FieldValue { name: f.clone(), value: v.clone() }]))
                }
                Kernel::Construct(fs) if fs.is_empty() => Ok(fired(None, vec![Payload::Record(src.clone())])),
                Kernel::Construct(fs) => {
                    let mut r = Record::new();
                    for f in fs {
                        let v = src.get(f).ok_or_else(|| arity(format!("no field {f} in source")))?;
                        r.insert(f.clone(), v.clone());
                    }
                    Ok(fired(None, vec![Payload::Record(r)]))
                }
                _ => unreachable!(),
            }
        }
        Kernel::CompareEq(fs) => {
            if st.probe.is_none() {
                if inbox.is_empty() {
                    return Ok(Firing::Wait);
                }
                st.probe = Some(inbox.remove(0));
            }
            if inbox.is_empty() {
                return Ok(Firing::Wait);
            }
            let cand = inbox.remove(0);
            let probe = st.probe.as_ref().expect("probe set");
            let mut equal = true;
            for f in fs {
                let a = value_of(probe, f).ok_or_else(|| arity(format!("probe {probe} lacks {f}")))?;
                let b = value_of(&cand, f).ok_or_else(|| arity(format!("candidate {cand} lacks {f}")))?;
                equal &= a == b;
            }
            if equal {
                Ok(fired(Some("equal"), vec![cand]))
            } else {
                Ok(fired(Some("not-equal"), Vec::new()))
            }
        }
        Kernel::Iterate(rel) => {
            if let Some(p) = inbox.first() {
                return Err(arity(format!("iterate takes no tokens, got {p}")));
            }
            if st.cursor.is_none() {
                let r = store.relation(rel).ok_or_else(|| RunError::UnknownRelation(rel.clone()))?;
                st.cursor = Some((r.records.clone(), 0));
            }
            let (records, pos) = st.cursor.as_mut().expect("cursor set");
            if let Some(r) = records.get(*pos) {
                *pos += 1;
                Ok(fired(Some("next"), vec![Payload::Record(r.clone())]))
            } else {
                st.cursor = None;
                Ok(fired(Some("EOF"), Vec::new()))
            }
        }
        Kernel::ReplaceRecord(rel) => {
            let Some(ri) = inbox.iter().position(|p| matches!(p, Payload::Record(_))) else {
                return Ok(Firing::Wait);
            };
            if !inbox.iter().any(|p| matches!(p, Payload::FieldValue { .. })) {
                return Ok(Firing::Wait);
            }
            let Payload::Record(old) = inbox.remove(ri) else { unreachable!() };
            let mut new = old.clone();
            let mut rest = Vec::new();
            for p in inbox.drain(..) {
                match p {
                    Payload::FieldValue { name, value } => {
                        new.insert(name, value);
                    }
                    other => rest.push(other),
                }
            }
            *inbox = rest;
            let r = store.relations.get_mut(rel).ok_or_else(|| RunError::UnknownRelation(rel.clone()))?;
            let i = r.position_of(&old).ok_or_else(|| arity(format!("record {} is not in {rel}", Payload::Record(old))))?;
            r.records[i] = new.clone();
            Ok(fired(None, vec![Payload::Record(new)]))
        }
        Kernel::AppendRecord { relation, partition } => {
            let Some(ri) = inbox.iter().position(|p| matches!(p, Payload::Record(_))) else {
                return Ok(Firing::Wait);
            };
            let pv = match partition {
                None => None,
                Some(pf) => {
                    let pos = inbox.iter().position(|p| matches!(p, Payload::FieldValue { name, .. } if name == pf));
                    let Some(pos) = pos else { return Ok(Firing::Wait) };
                    Some(pos)
                }
            };
            let mut rec = match inbox.remove(ri) {
                Payload::Record(r) => r,
                _ => unreachable!(),
            };
            if let Some(pos) = pv {
                let pos = if pos > ri { pos - 1 } else { pos };
                if let Payload::FieldValue { name, value } = inbox.remove(pos) {
                    rec.insert(name, value);
                }
            }
            let r = store.relations.get_mut(relation).ok_or_else(|| RunError::UnknownRelation(relation.clone()))?;
            let key = r.key_of(&rec).ok_or_else(|| arity(format!("record lacks a key attribute of {relation}")))?;
            if !r.key.is_empty() && r.records.iter().any(|x| r.key_of(x).as_ref() == Some(&key)) {
                return Err(RunError::DuplicateKey { relation: relation.clone(), key: key.join(",") });
            }
            if let Some(pa) = &r.partition {
                let v = rec.get(pa).ok_or_else(|| arity(format!("record lacks partition attribute {pa}")))?;
                if !r.partition_allowed(v) {
                    return Err(RunError::UnknownPartition { relation: relation.clone(), value: v.clone() });
                }
            }
            r.records.push(rec.clone());
            Ok(fired(None, vec![Payload::Record(rec)]))
        }
        Kernel::AssertEq(fs) => {
            let recs: Vec<usize> =
                inbox.iter().enumerate().filter(|(_, p)| matches!(p, Payload::Record(_))).map(|(i, _)| i).collect();
            if recs.len() < 2 {
                return Ok(Firing::Wait);
            }
            let b = inbox.remove(recs[1]);
            let a = inbox.remove(recs[0]);
            for f in fs {
                let x = value_of(&a, f).ok_or_else(|| arity(format!("{a} lacks {f}")))?;
                let y = value_of(&b, f).ok_or_else(|| arity(format!("{b} lacks {f}")))?;
                if x != y {
                    return Ok(Firing::Fired {
                        outcome: Some("error".into()),
                        outputs: Vec::new(),
                        error: Some("FD_VIOLATION".into()),
                    });
                }
            }
            Ok(fired(Some("equal"), Vec::new()))
        }
        Kernel::EmitError(code) => {
            inbox.clear();
            Ok(Firing::Fired { outcome: Some("error".into()), outputs: Vec::new(), error: Some(code.clone()) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::store::{record, Relation};

    fn run1(k: &Kernel, inbox: Vec<Payload>, st: &mut KernelState, store: &mut Store) -> Result<Firing, RunError> {
        let mut inbox = inbox;
        fire(k, &mut inbox, st, store, "S.process")
    }

    #[test]
    fn extract_keeps_source() {
        let k = Kernel::Extract("ID".into());
        let mut st = KernelState::default();
        let mut s = Store::default();
        assert_eq!(run1(&k, vec![], &mut st, &mut s), Ok(Firing::Wait));
        let req = Payload::Request(record(&[("ID", "7")]));
        let f = run1(&k, vec![req], &mut st, &mut s).unwrap();
        assert_eq!(f, fired(None, vec![Payload::FieldValue { name: "ID".into(), value: "7".into() }]));
        assert_eq!(run1(&k, vec![], &mut st, &mut s).unwrap(), f);
        let missing = Kernel::Extract("Zip".into());
        assert!(matches!(run1(&missing, vec![], &mut st, &mut s), Err(RunError::KernelArity { .. })));
    }

    #[test]
    fn compare_retains_probe() {
        let k = Kernel::CompareEq(vec!["ID".into()]);
        let mut st = KernelState::default();
        let mut s = Store::default();
        let probe = Payload::FieldValue { name: "ID".into(), value: "2".into() };
        assert_eq!(run1(&k, vec![probe], &mut st, &mut s), Ok(Firing::Wait));
        let one = Payload::Record(record(&[("ID", "1")]));
        assert_eq!(run1(&k, vec![one], &mut st, &mut s), Ok(fired(Some("not-equal"), vec![])));
        let two = Payload::Record(record(&[("ID", "2")]));
        assert_eq!(run1(&k, vec![two.clone()], &mut st, &mut s), Ok(fired(Some("equal"), vec![two])));
    }

    #[test]
    fn iterate_walks_snapshot_then_eof() {
        let k = Kernel::Iterate("c".into());
        let mut st = KernelState::default();
        let mut rel = Relation::new(&["ID"]);
        rel.records = vec![record(&[("ID", "1")]), record(&[("ID", "2")])];
        let mut s = Store::default().with("c", rel);
        let outcomes: Vec<Option<String>> = (0..4)
            .map(|_| match run1(&k, vec![], &mut st, &mut s).unwrap() {
                Firing::Fired { outcome, .. } => outcome,
                Firing::Wait => None,
            })
            .collect();
        let want: Vec<Option<String>> = ["next", "next", "EOF", "next"].iter().map(|s| Some(s.to_string())).collect();
        assert_eq!(outcomes, want);
        let missing = Kernel::Iterate("nope".into());
        assert_eq!(
            run1(&missing, vec![], &mut KernelState::default(), &mut s),
            Err(RunError::UnknownRelation("nope".into()))
        );
    }

    #[test]
    fn replace_and_append() {
        let mut rel = Relation::new(&["ID"]);
        rel.records = vec![record(&[("ID", "1"), ("A", "x")])];
        let mut s = Store::default().with("c", rel);
        let rep = Kernel::ReplaceRecord("c".into());
        let mut st = KernelState::default();
        let fv = Payload::FieldValue { name: "A".into(), value: "y".into() };
        assert_eq!(run1(&rep, vec![fv.clone()], &mut st, &mut s), Ok(Firing::Wait));
        let old = Payload::Record(record(&[("ID", "1"), ("A", "x")]));
        run1(&rep, vec![fv, old], &mut st, &mut s).unwrap();
        assert_eq!(s.relations["c"].records, vec![record(&[("ID", "1"), ("A", "y")])]);

        let app = Kernel::AppendRecord { relation: "c".into(), partition: None };
        run1(&app, vec![Payload::Record(record(&[("ID", "2")]))], &mut st, &mut s).unwrap();
        assert_eq!(s.relations["c"].records.len(), 2);
        assert!(matches!(
            run1(&app, vec![Payload::Record(record(&[("ID", "2")]))], &mut st, &mut s),
            Err(RunError::DuplicateKey { .. })
        ));
    }

    #[test]
    fn append_into_declared_partition() {
        let mut rel = Relation::new(&["SSN"]);
        rel.partition = Some("Dno".into());
        rel.partitions = Some(vec!["D1".into()]);
        let mut s = Store::default().with("e", rel);
        let k = Kernel::AppendRecord { relation: "e".into(), partition: Some("Dno".into()) };
        let mut st = KernelState::default();
        let rec = Payload::Record(record(&[("SSN", "1")]));
        assert_eq!(run1(&k, vec![rec.clone()], &mut st, &mut s), Ok(Firing::Wait));
        let d9 = Payload::FieldValue { name: "Dno".into(), value: "D9".into() };
        assert!(matches!(
            run1(&k, vec![rec.clone(), d9], &mut st, &mut s),
            Err(RunError::UnknownPartition { .. })
        ));
        let d1 = Payload::FieldValue { name: "Dno".into(), value: "D1".into() };
        run1(&k, vec![d1, rec], &mut st, &mut s).unwrap();
        assert_eq!(s.relations["e"].records, vec![record(&[("Dno", "D1"), ("SSN", "1")])]);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            Kernel::from_spec(&KernelSpec::new("append_record", &["e", "Dno"]), "x").unwrap(),
            Kernel::AppendRecord { relation: "e".into(), partition: Some("Dno".into()) }
        );
        assert!(matches!(
            Kernel::from_spec(&KernelSpec::new("frobnicate", &[]), "x"),
            Err(RunError::UnknownKernel { .. })
        ));
        assert!(matches!(
            Kernel::from_spec(&KernelSpec::new("extract", &[]), "x"),
            Err(RunError::KernelArity { .. })
        ));
    }

    #[test]
    fn payload_summaries() {
        assert_eq!(Payload::Request(record(&[("ID", "2"), ("Address", "z")])).to_string(), "request{Address=z,ID=2}");
        assert_eq!(Payload::File(vec![]).to_string(), "file[0]");
    }
}
