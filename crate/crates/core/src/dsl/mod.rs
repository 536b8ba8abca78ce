//! Textual syntax for static models, events and chronology (`.tm` files).

pub mod lexer;
mod parser;
mod serialize;

pub use parser::{
    is_keyword, parse_tm, ChronoDecl, EventDecl, ParsedTm, SourceMap, AMBIGUOUS_PATH, EXPECTED_STAGE, KEYWORDS,
    RESERVED_WORD, SYNTAX, UNRESOLVED_PATH,
};
pub use serialize::{serialize_tm, SerializeError};
