//! Core Eff: a fine-grained call-by-value language with algebraic effects and
//! handlers, its type-and-effect system, two operational semantics, and an
//! equational-reasoning lab.

pub mod dispatch;
pub mod equiv;
pub mod eval;
pub mod subst;
pub mod surface;
pub mod syntax;
pub mod typing;
pub mod types;
