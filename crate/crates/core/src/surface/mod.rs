//! Concrete syntax: a lexer and recursive-descent parser producing terms plus
//! a parallel tree of source spans, and a deterministic printer whose output
//! parses back to an α-equal term.

mod lexer;
mod parser;
mod printer;
mod span;

pub use lexer::is_keyword;
pub use parser::{parse_comp_in, parse_dirty_type, parse_expr_in, parse_program, parse_pure_type};
pub use printer::{
    print_comp, print_dirt, print_dirty, print_expr, print_program, print_pure, print_skeletal,
};
pub use span::{SourceSpan, SpanTree};

use crate::syntax::{Comp, EffectTable};

/// A parsed file: the preamble's table and the `do` body.
#[derive(Clone, Debug)]
pub struct ProgramFile {
    pub table: EffectTable,
    pub body: Comp,
    pub spans: SpanTree,
}

impl ProgramFile {
    pub fn print(&self) -> String {
        print_program(&self.table, &self.body)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// Malformed text.
    Syntax,
    /// Well-formed text naming an unknown effect, operation, instance or variable.
    Resolve,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: SourceSpan,
}

impl ParseError {
    pub fn syntax(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseError {
            kind: ParseErrorKind::Syntax,
            message: message.into(),
            span,
        }
    }

    pub fn resolve(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseError {
            kind: ParseErrorKind::Resolve,
            message: message.into(),
            span,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subst::Term;
    use crate::syntax::Expr;
    use crate::types::{DirtyType, Operation, PureType};

    const REF: &str = "effect ref { lookup : unit -> nat  update : nat -> unit }  instance r : ref\n";

    #[test]
    fn preamble_builds_table() {
        let p = parse_program(&format!("{REF}do val 0")).unwrap();
        let (e, s) = p.table.lookup_op("lookup").unwrap();
        assert_eq!(e.name, "ref");
        assert_eq!((s.param.clone(), s.result.clone()), (PureType::Unit, PureType::Nat));
        assert_eq!(p.table.instance_effect("r"), Some("ref"));
        assert_eq!(p.body, Comp::val(Expr::Zero));
    }

    #[test]
    fn empty_preamble() {
        let p = parse_program("do val ()").unwrap();
        assert_eq!(p.body, Comp::val(Expr::Unit));
    }

    #[test]
    fn undeclared_instance_is_resolve_error() {
        let err = parse_program("do r#lookup ()").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Resolve);
    }

    #[test]
    fn unknown_operation_is_resolve_error() {
        let err = parse_program(&format!("{REF}do r#frobnicate ()")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Resolve);
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_program("do\n  val val").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!((err.span.line, err.span.column), (2, 7));
    }

    #[test]
    fn generic_sugar_expands() {
        let p = parse_program(&format!("{REF}do r#update 1")).unwrap();
        let expect = Comp::generic(Expr::inst("r"), "update", Expr::nat(1), "z");
        assert!(p.body.alpha_eq(&expect));
    }

    #[test]
    fn literal_sugar_prints() {
        assert_eq!(print_comp(&Comp::val(Expr::nat(2))), "val 2");
        let open = Expr::succ(Expr::succ(Expr::var("x")));
        assert_eq!(print_expr(&open), "succ (succ x)");
    }

    #[test]
    fn dirt_prints_sorted() {
        let ty = DirtyType::new(
            PureType::Nat,
            [Operation::new("r", "update"), Operation::new("r", "lookup")]
                .into_iter()
                .collect(),
        );
        assert_eq!(print_dirty(&ty), "nat ! {r#lookup, r#update}");
    }

    #[test]
    fn handler_type_round_trip() {
        let p = parse_program(REF).err();
        assert!(p.is_some());
        let table = parse_program(&format!("{REF}do val 0")).unwrap().table;
        let text = "(nat ! {r#lookup, r#update}) => (unit ! {r#update})";
        let ty = parse_pure_type(&table, text).unwrap();
        assert_eq!(print_pure(&ty), text);
        let arrow = parse_pure_type(&table, "nat -> (nat -> bool ! {}) ! {r#lookup}").unwrap();
        assert_eq!(print_pure(&arrow), "nat -> (nat -> bool ! {}) ! {r#lookup}");
    }

    #[test]
    fn parenthesised_computation_and_application() {
        let p = parse_program("do (fun x : nat. val x) 0").unwrap();
        assert!(matches!(p.body, Comp::App(Expr::Fun(..), _)));
        let q = parse_program("do (let x = val 0 in val x)").unwrap();
        assert!(matches!(q.body, Comp::Let { .. }));
    }

    #[test]
    fn print_then_parse() {
        let src = format!(
            "{REF}do let rec f n : nat -> nat ! {{r#update}} = match n with {{ 0 -> val 0 | succ m -> r#update(m; _. f m) }} in \
             with handler[unit ! {{}}] {{ val x : nat -> val () | r#update(s; k) -> k () }} handle f 3"
        );
        let p = parse_program(&src).unwrap();
        let again = parse_program(&p.print()).unwrap();
        assert!(again.body.alpha_eq(&p.body));
        assert_eq!(again.table, p.table);
    }

    #[test]
    fn instance_names_are_not_binders() {
        let err = parse_program(&format!("{REF}do let r = val 0 in val r")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Resolve);
    }

    #[test]
    fn span_tree_follows_term_shape() {
        let p = parse_program("do let x = val 0 in\n  (fun y : nat. val y) true").unwrap();
        let app = p.spans.locate(&[1]);
        assert_eq!((app.line, app.column), (2, 3));
        let arg = p.spans.locate(&[1, 1]);
        assert_eq!((arg.line, arg.column), (2, 24));
    }
}
