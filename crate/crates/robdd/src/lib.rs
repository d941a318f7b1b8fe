//! Reduced ordered binary decision diagrams.
//!
//! A [`BddManager`] owns a hash-consed node store, so semantically equal
//! functions always share one handle, plus an operation cache that is never
//! invalidated during a run. Handles ([`BddRef`]) are cheap copyable ids;
//! all operations go through the owning manager.
//!
//! One manager is owned by one logical thread of control at a time; distinct
//! managers are fully independent. Contract violations (unknown variables,
//! mixing handles across managers, non-injective renamings) panic.

mod manager;
mod tables;
mod sats;

pub use manager::{BddManager, BddRef, BinOp, VarId};
pub use sats::SatAssignments;
