//! Routed multiparty session types.
//!
//! The pipeline: parse a Scribble module ([`scribble`]), elaborate a protocol
//! to a [`GlobalType`], project it ([`projection`]), check well-formedness
//! ([`wellformed`]), encode it through a router ([`encoding`]), explore its
//! transition systems ([`semantics`], [`analysis`]), and build endpoint state
//! machines ([`efsm`]), skeletons ([`codegen`]) or simulated runs
//! ([`simulator`]).

pub mod analysis;
pub mod cli;
pub mod codegen;
pub mod efsm;
pub mod encoding;
pub mod projection;
pub mod scribble;
pub mod semantics;
pub mod simulator;
pub mod types;
pub mod wellformed;

pub use types::{ActionKind, ActionLabel, Arm, GlobalType, LocalType, MsgLabel, Role, TypeError};
