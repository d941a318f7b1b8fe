//! Knowledge-based programs: a guarded-command language whose guards and
//! assignments may contain `Knows` formulas, an operational semantics over
//! finite-state environments, and a symbolic synthesizer that replaces every
//! knowledge condition with an equivalent expression over the owning agent's
//! observable variables (clock and synchronous-perfect-recall views), backed
//! by an explicit-state oracle for cross-validation.

pub mod error;
pub mod corpus;
pub mod epistemic;
pub mod exec;
pub mod lang;
pub mod oracle;
pub mod sym;
pub mod synth;

pub use error::{KbpError, ValidationReport, Violation};
