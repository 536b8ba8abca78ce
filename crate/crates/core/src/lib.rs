//! Thinging-machine modeling toolkit.

pub mod diag;
pub mod dot;
pub mod dsl;
pub mod er;
pub mod events;
pub mod sim;
pub mod model;
pub mod path;
pub mod validate;

pub use diag::{Diagnostic, Element, Severity, Span};
pub use dsl::{parse_tm, serialize_tm, ChronoDecl, EventDecl, ParsedTm};
pub use model::{
    ElementRef, FlowEdge, KernelSpec, Stage, StageKind, StageRef, StaticModel, Thimac, ThimacId, ThimacKind,
    TriggerEdge,
};
pub use path::{resolve_path, subdiagram, Fragment, PathError};
pub use validate::validate_static;
pub use dot::{behavior_dot, export_dot};
pub use er::{fd_to_tm, parse_er, parse_fd_expr, translate_er, ErSchema, Fd};
pub use events::{check_conformance, derive_chronology, validate_events, BehaviorGraph, Event, TraceEvent, Violation};
pub use sim::{check_fd, dump_store, insert_with_ri, load_store, run, update_with_fd, Record, RunConfig, Store, Trace};
