use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A tuple: attribute name to string value.
pub type Record = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("malformed store: {0}")]
    MalformedStore(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relation {
    pub key: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
    /// Declared partition values. When absent, partitions come into being
    /// with their first record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitions: Option<Vec<String>>,
    #[serde(default)]
    pub records: Vec<Record>,
}

impl Relation {
    pub fn new(key: &[&str]) -> Self {
        Relation { key: key.iter().map(|k| k.to_string()).collect(), ..Relation::default() }
    }

    pub fn key_of<'a>(&self, r: &'a Record) -> Option<Vec<&'a str>> {
        self.key.iter().map(|k| r.get(k).map(String::as_str)).collect()
    }

    /// Position of the record with the same key as `r`; whole-record
    /// equality when the relation has no key.
    pub fn position_of(&self, r: &Record) -> Option<usize> {
        if self.key.is_empty() {
            return self.records.iter().position(|x| x == r);
        }
        let k = self.key_of(r)?;
        self.records.iter().position(|x| self.key_of(x).as_ref() == Some(&k))
    }

    /// Every attribute name used by some record, plus the key and partition.
    pub fn attributes(&self) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self.records.iter().flat_map(|r| r.keys().map(String::as_str)).collect();
        out.extend(self.key.iter().map(String::as_str));
        out.extend(self.partition.as_deref());
        out
    }

    pub fn partition_allowed(&self, value: &str) -> bool {
        self.partitions.as_ref().is_none_or(|ps| ps.iter().any(|p| p == value))
    }

    /// Key uniqueness and partition coherence.
    pub fn check(&self, name: &str) -> Result<(), StoreError> {
        let bad = |m: String| Err(StoreError::MalformedStore(format!("relation {name}: {m}")));
        let mut seen = BTreeSet::new();
        for (i, r) in self.records.iter().enumerate() {
            if !self.key.is_empty() {
                let Some(k) = self.key_of(r) else {
                    return bad(format!("record {i} lacks a key attribute"));
                };
                if !seen.insert(k.clone()) {
                    return bad(format!("record {i} repeats key {k:?}"));
                }
            }
            if let Some(p) = &self.partition {
                match r.get(p) {
                    None => return bad(format!("record {i} has no {p} value")),
                    Some(v) if !self.partition_allowed(v) => {
                        return bad(format!("record {i} names undeclared partition {v}"))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    /// Records grouped by partition value.
    pub fn partitioned(&self) -> BTreeMap<&str, Vec<&Record>> {
        let mut out: BTreeMap<&str, Vec<&Record>> = BTreeMap::new();
        if let Some(p) = &self.partition {
            for r in &self.records {
                if let Some(v) = r.get(p) {
                    out.entry(v.as_str()).or_default().push(r);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Store {
    pub relations: BTreeMap<String, Relation>,
}

impl Store {
    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn with(mut self, name: &str, rel: Relation) -> Self {
        self.relations.insert(name.to_string(), rel);
        self
    }

    pub fn check(&self) -> Result<(), StoreError> {
        self.relations.iter().try_for_each(|(n, r)| r.check(n))
    }
}

pub fn load_store(text: &str) -> Result<Store, StoreError> {
    let store: Store = serde_json::from_str(text).map_err(|e| StoreError::MalformedStore(e.to_string()))?;
    store.check()?;
    Ok(store)
}

pub fn dump_store(store: &Store) -> String {
    serde_json::to_string_pretty(store).expect("store serializes") + "\n"
}

/// Builds a record from `(attribute, value)` pairs.
pub fn record<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Record {
    pairs.iter().map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_and_dump() {
        let s = load_store(
            r#"{"customers":{"records":[{"ID":"1","Address":"a"}],"key":["ID"]}}"#,
        )
        .unwrap();
        assert_eq!(s.relation("customers").unwrap().records.len(), 1);
        let text = dump_store(&s);
        assert_eq!(load_store(&text).unwrap(), s);
        assert_eq!(dump_store(&load_store(&text).unwrap()), text);
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let e = load_store(r#"{"c":{"key":["ID"],"records":[{"ID":"1"},{"ID":"1"}]}}"#).unwrap_err();
        assert!(matches!(e, StoreError::MalformedStore(m) if m.contains("repeats key")));
        assert!(load_store(r#"{"c":{"key":["ID"],"records":[{"X":"1"}]}}"#).is_err());
        assert!(load_store("[1,2]").is_err());
        assert!(load_store(r#"{"c":{"key":[],"bogus":1}}"#).is_err());
    }

    #[test]
    fn partitions() {
        let bad = r#"{"e":{"key":["SSN"],"partition":"Dno","partitions":["D1"],"records":[{"SSN":"1","Dno":"D2"}]}}"#;
        assert!(load_store(bad).is_err());
        let ok = r#"{"e":{"key":["SSN"],"partition":"Dno","records":[{"SSN":"1","Dno":"D2"},{"SSN":"2","Dno":"D2"}]}}"#;
        let s = load_store(ok).unwrap();
        let p = s.relation("e").unwrap().partitioned();
        assert_eq!(p.len(), 1);
        assert_eq!(p["D2"].len(), 2);
    }
}
