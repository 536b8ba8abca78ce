use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::diag::Diagnostic;

pub mod codes {
    pub const UNKNOWN_ENTITY: &str = "UNKNOWN_ENTITY";
    pub const DUPLICATE_ENTITY: &str = "DUPLICATE_ENTITY";
    pub const DUPLICATE_ATTRIBUTE: &str = "DUPLICATE_ATTRIBUTE";
    pub const NO_ATTRIBUTES: &str = "NO_ATTRIBUTES";
    pub const UNKNOWN_ATTRIBUTE: &str = "UNKNOWN_ATTRIBUTE";
    pub const INVALID_FD: &str = "INVALID_FD";
    pub const UNSUPPORTED_ARITY: &str = "UNSUPPORTED_ARITY";
    pub const NAME_COLLISION: &str = "NAME_COLLISION";
}

use codes::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cardinality {
    One,
    Many,
}

impl Cardinality {
    pub fn as_str(self) -> &'static str {
        match self {
            Cardinality::One => "one",
            Cardinality::Many => "many",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub is_key: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityType {
    pub name: String,
    pub attributes: Vec<Attribute>,
    pub fds: Vec<Fd>,
}

impl EntityType {
    pub fn key(&self) -> Vec<&str> {
        self.attributes.iter().filter(|a| a.is_key).map(|a| a.name.as_str()).collect()
    }

    pub fn has_attribute(&self, name: &str) -> bool {
        self.attributes.iter().any(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub entity: String,
    pub cardinality: Cardinality,
}

/// A binary relationship. Roles use the same shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationshipType {
    pub name: String,
    pub endpoints: Vec<Endpoint>,
}

impl RelationshipType {
    pub fn binary(name: &str, a: (&str, Cardinality), b: (&str, Cardinality)) -> Self {
        RelationshipType {
            name: name.to_string(),
            endpoints: vec![
                Endpoint { entity: a.0.to_string(), cardinality: a.1 },
                Endpoint { entity: b.0.to_string(), cardinality: b.1 },
            ],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ErSchema {
    pub entities: Vec<EntityType>,
    pub relationships: Vec<RelationshipType>,
    /// Role declarations; translated exactly like relationships.
    pub roles: Vec<RelationshipType>,
}

impl ErSchema {
    pub fn entity(&self, name: &str) -> Option<&EntityType> {
        self.entities.iter().find(|e| e.name == name)
    }

    /// Relationships followed by roles.
    pub fn associations(&self) -> impl Iterator<Item = &RelationshipType> {
        self.relationships.iter().chain(&self.roles)
    }

    /// Invariant check independent of any source text.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut top: BTreeMap<String, String> = BTreeMap::new();
        let mut claim = |out: &mut Vec<Diagnostic>, name: String, owner: String| {
            if let Some(prev) = top.get(&name) {
                out.push(
                    Diagnostic::error(NAME_COLLISION, format!("{owner} and {prev} both produce top-level name {name}"))
                        .at_path(name),
                );
            } else {
                top.insert(name, owner);
            }
        };

        let mut seen = BTreeSet::new();
        for e in &self.entities {
            if !seen.insert(e.name.as_str()) {
                out.push(Diagnostic::error(DUPLICATE_ENTITY, "entity declared twice").at_path(&e.name));
                continue;
            }
            claim(&mut out, set_name(&e.name), format!("entity {}", e.name));
            if e.attributes.is_empty() {
                out.push(Diagnostic::error(NO_ATTRIBUTES, "entity has no attributes").at_path(&e.name));
            }
            let mut names = BTreeSet::new();
            for a in &e.attributes {
                if !names.insert(a.name.as_str()) {
                    out.push(
                        Diagnostic::error(DUPLICATE_ATTRIBUTE, "attribute declared twice")
                            .at_path(format!("{}.{}", e.name, a.name)),
                    );
                }
            }
            for fd in &e.fds {
                if let Err(err) = fd.check() {
                    out.push(Diagnostic::error(INVALID_FD, err.to_string()).at_path(&e.name));
                }
                for a in fd.lhs.iter().chain(&fd.rhs) {
                    if !e.has_attribute(a) {
                        out.push(
                            Diagnostic::error(UNKNOWN_ATTRIBUTE, format!("FD {fd} names unknown attribute {a}"))
                                .at_path(&e.name),
                        );
                    }
                }
            }
        }
        for (what, list) in [("relationship", &self.relationships), ("role", &self.roles)] {
            for r in list {
                claim(&mut out, r.name.clone(), format!("{what} {}", r.name));
                if r.endpoints.len() != 2 {
                    out.push(
                        Diagnostic::error(
                            UNSUPPORTED_ARITY,
                            format!("{what} has {} endpoints; only binary is supported", r.endpoints.len()),
                        )
                        .at_path(&r.name),
                    );
                }
                for ep in &r.endpoints {
                    if self.entity(&ep.entity).is_none() {
                        out.push(
                            Diagnostic::error(UNKNOWN_ENTITY, format!("endpoint names undeclared entity {}", ep.entity))
                                .at_path(&r.name),
                        );
                    }
                }
            }
        }
        out
    }
}

/// Entity set name: the entity name plus a plural `s`/`S` (matching the
/// case of the last letter), unless it already ends in one.
pub fn set_name(entity: &str) -> String {
    match entity.chars().last() {
        Some('s') | Some('S') | None => entity.to_string(),
        Some(c) if c.is_uppercase() => format!("{entity}S"),
        Some(_) => format!("{entity}s"),
    }
}

/// Functional dependency `lhs -> rhs` over attribute names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fd {
    pub lhs: BTreeSet<String>,
    pub rhs: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FdError {
    #[error("malformed FD expression: {0}")]
    Syntax(String),
    #[error("FD has an empty side")]
    EmptySide,
    #[error("attributes {0:?} appear on both sides")]
    Overlap(Vec<String>),
}

impl Fd {
    pub fn new<S: AsRef<str>>(lhs: &[S], rhs: &[S]) -> Result<Fd, FdError> {
        let fd = Fd {
            lhs: lhs.iter().map(|s| s.as_ref().to_string()).collect(),
            rhs: rhs.iter().map(|s| s.as_ref().to_string()).collect(),
        };
        fd.check()?;
        Ok(fd)
    }

    pub fn check(&self) -> Result<(), FdError> {
        if self.lhs.is_empty() || self.rhs.is_empty() {
            return Err(FdError::EmptySide);
        }
        let both: Vec<String> = self.lhs.intersection(&self.rhs).cloned().collect();
        if !both.is_empty() {
            return Err(FdError::Overlap(both));
        }
        Ok(())
    }

    pub fn attributes(&self) -> BTreeSet<&str> {
        self.lhs.iter().chain(&self.rhs).map(String::as_str).collect()
    }
}

impl fmt::Display for Fd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l: Vec<&str> = self.lhs.iter().map(String::as_str).collect();
        let r: Vec<&str> = self.rhs.iter().map(String::as_str).collect();
        write!(f, "{}->{}", l.join(","), r.join(","))
    }
}

/// Parses `A,B->C,D` (`→` is accepted for `->`). Names are trimmed.
pub fn parse_fd_expr(text: &str) -> Result<Fd, FdError> {
    let normalized = text.replace('→', "->");
    let parts: Vec<&str> = normalized.split("->").collect();
    if parts.len() != 2 {
        return Err(FdError::Syntax(format!("expected exactly one arrow in {text:?}")));
    }
    let side = |s: &str| -> Result<Vec<String>, FdError> {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',')
            .map(|a| {
                let a = a.trim();
                if a.is_empty() {
                    Err(FdError::Syntax(format!("empty attribute name in {text:?}")))
                } else {
                    Ok(a.to_string())
                }
            })
            .collect()
    };
    let lhs = side(parts[0])?;
    let rhs = side(parts[1])?;
    Fd::new(&lhs, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_expressions() {
        let fd = parse_fd_expr("Employee_ID,Employee_Name->Start_Date").unwrap();
        assert_eq!(fd, Fd::new(&["Employee_ID", "Employee_Name"], &["Start_Date"]).unwrap());
        let fd = parse_fd_expr(" Employee_ID -> Dependent_Name ").unwrap();
        assert_eq!(fd, Fd::new(&["Employee_ID"], &["Dependent_Name"]).unwrap());
        let fd = parse_fd_expr("Employee_Name → Address, Telephone-Number, DOB").unwrap();
        assert_eq!(fd.rhs.len(), 3);
        assert!(fd.rhs.contains("Telephone-Number"));
        assert_eq!(fd.to_string(), "Employee_Name->Address,DOB,Telephone-Number");
    }

    #[test]
    fn fd_errors() {
        assert_eq!(parse_fd_expr("A->A"), Err(FdError::Overlap(vec!["A".into()])));
        assert_eq!(parse_fd_expr("->C"), Err(FdError::EmptySide));
        assert_eq!(parse_fd_expr("A->"), Err(FdError::EmptySide));
        assert!(matches!(parse_fd_expr("A,B"), Err(FdError::Syntax(_))));
        assert!(matches!(parse_fd_expr("A->B->C"), Err(FdError::Syntax(_))));
        assert!(matches!(parse_fd_expr("A,,B->C"), Err(FdError::Syntax(_))));
    }

    #[test]
    fn pluralization() {
        assert_eq!(set_name("EMPLOYEE"), "EMPLOYEES");
        assert_eq!(set_name("Customer"), "Customers");
        assert_eq!(set_name("Customers"), "Customers");
        assert_eq!(set_name("ADDRESS"), "ADDRESS");
    }
}
