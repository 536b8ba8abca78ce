//! Entity-relationship schemas with functional dependencies, the `.ers`
//! format, and translation into static models.

mod parse;
mod schema;
mod translate;

pub use parse::parse_er;
pub use schema::{
    codes, parse_fd_expr, set_name, Attribute, Cardinality, Endpoint, EntityType, ErSchema, Fd, FdError,
    RelationshipType,
};
pub use translate::{fd_machine_name, fd_to_tm, subset_name, translate_er, UNIQUENESS};
