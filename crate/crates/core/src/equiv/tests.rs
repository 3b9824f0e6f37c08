use super::*;
use crate::eval::eval_big;
use crate::subst::Term;
use crate::surface::{parse_comp_in, print_pure};
use crate::syntax::{Comp, EffectTable, EvalResult, Expr};
use crate::typing::{synth_comp, synth_expr, TypingContext};
use crate::types::{subtype_dirty, PureType};

fn table() -> EffectTable {
    lab_table()
}

fn comp(t: &EffectTable, text: &str) -> Comp {
    parse_comp_in(t, &[], text).unwrap()
}

fn open(t: &EffectTable, scope: &[&str], text: &str) -> Comp {
    let scope: Vec<String> = scope.iter().map(|s| s.to_string()).collect();
    parse_comp_in(t, &scope, text).unwrap()
}

fn assert_alpha(a: &Comp, b: &Comp) {
    assert!(a.alpha_eq(b), "{a}\n  is not α-equal to\n{b}");
}

#[test]
fn let_val_rewrites() {
    let t = table();
    let r = rewrite_once(&t, &comp(&t, "let x = val 0 in val x"), &RuleSet::beta()).unwrap();
    assert_eq!(r.rule, RewriteRule::LetVal);
    assert_eq!(r.term, comp(&t, "val 0"));
}

#[test]
fn eta_let_fires_when_no_beta_redex_is_above() {
    let t = table();
    let c = comp(&t, "let x = (fun a : nat. val a) 0 in val x");
    let r = rewrite_once(&t, &c, &RuleSet::beta_eta()).unwrap();
    assert_eq!(r.rule, RewriteRule::EtaLet);
    assert_eq!(r.term, comp(&t, "(fun a : nat. val a) 0"));
}

#[test]
fn handler_without_cases_becomes_let() {
    let t = table();
    let c = comp(&t, "with handler { val x : nat -> val (succ x) } handle (fun a : nat. val a) 1");
    let r = rewrite_once(&t, &c, &RuleSet::beta_eta()).unwrap();
    assert_eq!(r.rule, RewriteRule::HandlerLet);
    assert_alpha(&r.term, &comp(&t, "let x = (fun a : nat. val a) 1 in val (succ x)"));
    assert!(rewrite_once(&t, &c, &RuleSet::beta()).is_ok_and(|r| r.rule == RewriteRule::AppFun));
}

#[test]
fn normalize_beta_examples() {
    let t = table();
    let cases = [
        ("(fun x : nat. val x) 0", "val 0"),
        ("match 0 with { 0 -> val true | succ x -> val false }", "val true"),
        ("let rec f x : nat -> nat ! {} = val 0 in val ()", "val ()"),
        ("let rec f x : nat -> nat ! {} = val x in f 2", "val 2"),
    ];
    for (src, expect) in cases {
        let n = normalize_beta(&t, &comp(&t, src), 100);
        assert!(!n.exhausted, "{src}");
        assert_alpha(&n.term, &comp(&t, expect));
    }
}

#[test]
fn normalize_beta_reports_exhaustion() {
    let t = table();
    let n = normalize_beta(&t, &comp(&t, "let rec f x : nat -> nat ! {} = f x in f 0"), 50);
    assert!(n.exhausted);
    assert_eq!(n.steps, 50);
}

#[test]
fn normal_forms_are_fixed() {
    let t = table();
    let n = normalize_beta(&t, &comp(&t, "let x = i#lookup () in val (succ x)"), 100);
    assert_eq!(rewrite_once(&t, &n.term, &RuleSet::beta()), Err(NoRedex));
    let again = normalize_beta(&t, &n.term, 100);
    assert_eq!(again.term, n.term);
    assert_eq!(again.steps, 0);
}

#[test]
fn handle_op_rewrite_dispatches() {
    let t = table();
    let c = comp(&t, "with handler { val x : nat -> val x | i#lookup(u; k) -> k 7 } handle i#lookup ()");
    let n = normalize_beta(&t, &c, 100);
    assert_eq!(n.term, comp(&t, "val 7"));
}

#[test]
fn eta_if_and_match_anti_unify() {
    let t = table();
    let rules = RuleSet::only([RewriteRule::EtaIf, RewriteRule::EtaMatch]);
    let c = open(&t, &["b"], "if b then val true else val false");
    assert_eq!(rewrite_once(&t, &c, &rules).unwrap().term, open(&t, &["b"], "val b"));
    let c = open(&t, &["n"], "match n with { 0 -> val 0 | succ m -> val (succ m) }");
    assert_eq!(rewrite_once(&t, &c, &rules).unwrap().term, open(&t, &["n"], "val n"));
    let c = open(&t, &["n"], "match n with { 0 -> val 1 | succ m -> val (succ (succ m)) }");
    assert_eq!(rewrite_once(&t, &c, &rules).unwrap().term, open(&t, &["n"], "val (succ n)"));
    let c = open(&t, &["n"], "match n with { 0 -> val 0 | succ m -> val m }");
    assert_eq!(rewrite_once(&t, &c, &rules), Err(NoRedex));
}

#[test]
fn eta_if_avoids_capture() {
    let t = table();
    let rules = RuleSet::only([RewriteRule::EtaIf]);
    let c = open(&t, &["z"], "if z then (fun z : bool. val true) true else (fun z : bool. val false) true");
    let out = rewrite_once(&t, &c, &rules).unwrap().term;
    let Comp::App(Expr::Fun(binder, _, body), _) = &out else { panic!("{out}") };
    assert_ne!(binder, "z");
    assert_eq!(**body, Comp::val(Expr::var("z")));
}

#[test]
fn eta_unit_and_fun() {
    let t = table();
    let c = comp(&t, "val (fun u : unit. val u)");
    let r = rewrite_once(&t, &c, &RuleSet::beta_eta()).unwrap();
    assert_eq!(r.rule, RewriteRule::EtaUnit);
    assert_eq!(r.term, comp(&t, "val (fun u : unit. val ())"));
    let c = open(&t, &["g"], "val (fun a : nat. g a)");
    let r = rewrite_once(&t, &c, &RuleSet::beta_eta()).unwrap();
    assert_eq!(r.rule, RewriteRule::EtaFun);
    assert_eq!(r.term, open(&t, &["g"], "val g"));
}

#[test]
fn eta_absurd_is_opt_in() {
    let t = table();
    let c = comp(&t, "ex#raise((); y. val 0)");
    assert_eq!(rewrite_once(&t, &c, &RuleSet::beta_eta()), Err(NoRedex));
    let rules = RuleSet::beta_eta().with(RewriteRule::EtaAbsurd);
    let r = rewrite_once(&t, &c, &rules).unwrap();
    assert_eq!(r.rule, RewriteRule::EtaAbsurd);
    assert_alpha(&r.term, &comp(&t, "ex#raise((); y. absurd [nat ! {}] y)"));
    assert_eq!(rewrite_once(&t, &r.term, &rules), Err(NoRedex));
}

#[test]
fn all_rewrites_lists_every_position() {
    let t = table();
    let c = comp(&t, "let x = (fun a : nat. val a) 0 in (fun b : nat. val b) x");
    let rs = all_rewrites(&t, &c, &RuleSet::beta());
    assert_eq!(rs.len(), 2);
    assert_eq!(rewrite_once(&t, &c, &RuleSet::beta()).unwrap(), rs[0]);
}

#[test]
fn oracle_basic_verdicts() {
    let t = table();
    let v = op_equiv(&t, &comp(&t, "val 0"), &comp(&t, "val 1"), 3, 1000);
    assert!(v.is_distinguished());
    let c = comp(&t, "i#lookup((); y. val y)");
    assert_eq!(op_equiv(&t, &c, &c, 3, 1000), EquivVerdict::Equivalent);
}

#[test]
fn oracle_probes_continuations() {
    let t = table();
    let c1 = comp(&t, "i#lookup((); y. val y)");
    let c2 = comp(&t, "i#lookup((); y. match y with { 0 -> val 0 | succ z -> val (succ z) })");
    assert_eq!(op_equiv(&t, &c1, &c2, 3, 1000), EquivVerdict::Equivalent);
    let c3 = comp(&t, "i#lookup((); y. match y with { 0 -> val 0 | succ z -> match z with { 0 -> val 1 | succ w -> val 0 } })");
    let EquivVerdict::Distinguished { probe, left, right } = op_equiv(&t, &c1, &c3, 3, 1000) else {
        panic!("expected a distinction")
    };
    assert_eq!(probe.to_string(), "i#lookup -> 2");
    assert_eq!((left.as_str(), right.as_str()), ("val 2", "val 0"));
    assert_eq!(replay(&t, &c1, &probe, 1000), Ok(EvalResult::Value(Expr::nat(2))));
    assert_eq!(replay(&t, &c3, &probe, 1000), Ok(EvalResult::Value(Expr::nat(0))));
    // A depth of 1 never reaches the differing answer.
    assert_eq!(op_equiv(&t, &c1, &c3, 1, 1000), EquivVerdict::Equivalent);
}

#[test]
fn oracle_is_inconclusive_on_functions_and_timeouts() {
    let t = table();
    let f = comp(&t, "val (fun x : nat. val x)");
    let g = comp(&t, "val (fun y : nat. val 0)");
    assert!(matches!(op_equiv(&t, &f, &g, 3, 100), EquivVerdict::Inconclusive { .. }));
    assert_eq!(op_equiv(&t, &f, &f, 3, 100), EquivVerdict::Equivalent);
    let d = comp(&t, "let rec f x : nat -> nat ! {} = f x in f 0");
    assert!(matches!(op_equiv(&t, &d, &comp(&t, "val 0"), 3, 100), EquivVerdict::Inconclusive { .. }));
}

#[test]
fn state_handler_type() {
    let t = table();
    let h = Expr::handler(mk_state_handler("i", PureType::Nat));
    let ty = synth_expr(&t, &TypingContext::new(), &h).unwrap();
    assert_eq!(print_pure(&ty), "(nat ! {i#lookup, i#update}) => ((nat -> nat ! {}) ! {})");
}

#[test]
fn state_handler_runs() {
    let t = table();
    let c = comp(&t, "i#lookup((); y. val y)");
    let h = mk_h(&t, &c, &Expr::nat(5), "i").unwrap();
    assert_eq!(eval_big(&t, &h, 1000), Ok(EvalResult::Value(Expr::nat(5))));
    let c = comp(&t, "i#update(3; _. i#lookup((); y. val y))");
    let h = mk_h(&t, &c, &Expr::nat(0), "i").unwrap();
    assert_eq!(eval_big(&t, &h, 1000), Ok(EvalResult::Value(Expr::nat(3))));
    assert_eq!(print_dirty_of(&t, &h), "nat ! {}");
}

fn print_dirty_of(t: &EffectTable, c: &Comp) -> String {
    crate::surface::print_dirty(&synth_comp(t, &TypingContext::new(), c).unwrap())
}

#[test]
fn enumerate_literals() {
    let t = table();
    let shape = Shape::new("lits", [Construct::Val]).atoms([Expr::nat(0), Expr::nat(1)]);
    assert_eq!(
        enumerate_computations(&t, &shape, 1),
        vec![Comp::val(Expr::nat(0)), Comp::val(Expr::nat(1))]
    );
}

#[test]
fn enumerate_state_shape() {
    let t = table();
    let shape = Shape::new("st", [Construct::Val, Construct::Let, Construct::Op])
        .ops([("i", "lookup"), ("i", "update")])
        .atoms([Expr::Unit, Expr::nat(0)]);
    let all = enumerate_computations(&t, &shape, 3);
    for want in ["i#lookup((); y. val y)", "i#update(0; _. val ())"] {
        let w = comp(&t, want);
        assert!(all.iter().any(|c| c.alpha_eq(&w)), "{want} missing");
    }
    let ctx = TypingContext::new();
    assert!(all.iter().all(|c| synth_comp(&t, &ctx, c).is_ok()));
    assert_eq!(all, enumerate_computations(&t, &shape, 3));
}

#[test]
fn rewrites_preserve_types_on_small_corpus() {
    let t = table();
    let ctx = TypingContext::new();
    let rules = RuleSet::beta_eta();
    for c in standard_corpus(&t, 3) {
        let before = synth_comp(&t, &ctx, &c).unwrap();
        for r in all_rewrites(&t, &c, &rules) {
            let after = synth_comp(&t, &ctx, &r.term).unwrap_or_else(|e| panic!("{} on {c}: {e}", r.rule));
            assert!(subtype_dirty(&after, &before), "{} on {c}", r.rule);
        }
    }
}

#[test]
fn law_names_round_trip() {
    for law in Law::ALL {
        assert_eq!(law.name().parse::<Law>(), Ok(law));
    }
    assert!("bogus".parse::<Law>().is_err());
}

#[test]
fn basics_suite_passes() {
    let t = table();
    let r = law_suite(&t, Law::Basics, &LawConfig::default());
    assert!(r.total > 0);
    assert!(r.passed(), "{r}");
    assert_eq!(r.equivalent, r.total);
    assert!(r.to_string().ends_with(&format!("basics {}\n", r.summary())));
}
