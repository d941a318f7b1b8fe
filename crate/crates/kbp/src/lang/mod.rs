//! Concrete syntax, elaborated models, static validation, printing and the
//! skeleton/history transforms.

pub mod ast;
pub mod elaborate;
pub mod lexer;
pub mod model;
pub mod parser;
pub mod print;
pub mod transform;
pub mod validate;

pub use elaborate::{parse, parse_agent_formula, parse_spec_formula};
pub use model::*;
pub use print::{print_document, structurally_eq, Printer};
pub use transform::{history_transform, skeleton, substitute, Skeleton, SkeletonVar};
pub use validate::{ensure_valid, validate};
