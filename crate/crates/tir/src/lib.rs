//! Tiny IR: a register-based, non-SSA intermediate representation with a
//! textual format, verifier, optimization phases, interpreter and
//! platform cost models.

pub mod cfg;
pub mod exec;
pub mod ir;
pub mod parse;
pub mod passes;
pub mod platform;
pub mod printer;
pub mod verify;

pub use ir::{Global, InstKind, Instr, Operand, TirBlock, TirFunction, TirModule, NUM_KINDS};
pub use parse::{parse_module, ParseError};
pub use printer::print_module;
pub use verify::{verify, VerifyError};
