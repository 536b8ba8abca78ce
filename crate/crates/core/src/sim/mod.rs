//! Token-flow execution of static models over an in-memory relational store.

mod engine;
mod kernel;
mod ops;
mod store;

pub use engine::{
    entry_stage, project, run, Run, RunConfig, RunError, RunFailure, Step, Trace, DEFAULT_MAX_STEPS,
};
pub use kernel::{Kernel, Payload};
pub use ops::{
    check_fd, insert_with_ri, models, update_with_fd, FdError, RiError, RiFailure, DUPLICATE_KEY,
};
pub use store::{dump_store, load_store, record, Record, Relation, Store, StoreError};
