//! Compiling operator targets into native pulse schedules.

pub mod diagnostics;
pub mod expr;
pub mod gadget;
pub mod program;
pub mod synth;

pub use diagnostics::{effective_generator, project_monomials};
pub use expr::{expr_to_matrix, Monomial, OperatorExpr, Term};
pub use gadget::{calibrate_gadget_sign, commutator_gadget, trotter, Block, GADGET_SIGN};
pub use program::{ProgramMeta, PulseProgram, Step};
pub use synth::{lower, native_block, synthesize, verify, CompileOptions, CompileReport};
