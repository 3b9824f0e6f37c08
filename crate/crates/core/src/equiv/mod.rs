//! Executable equational reasoning: β/η rewriting, an operational
//! equivalence oracle, a well-typed program enumerator, and the state-handler
//! law suites.

mod enumerate;
mod laws;
mod oracle;
mod rewrite;
mod state;

pub use enumerate::{
    enumerate_computations, enumerate_open, lab_table, standard_corpus, standard_shapes, Construct, RecDef,
    Shape, LAB_PREAMBLE,
};
pub use laws::{law_suite, Law, LawConfig, LawInstance, LawReport, IOTA, IOTA1, IOTA2};
pub use oracle::{op_equiv, probe_values, replay, EquivVerdict, Probe, ProbeStep};
pub use rewrite::{
    all_rewrites, normalize, normalize_beta, rewrite_once, NoRedex, Normalized, RewriteRule, Rewritten, RuleSet,
};
pub use state::{mk_h, mk_h_at, mk_state_handler, mk_state_handler_at};

#[cfg(test)]
mod tests;
