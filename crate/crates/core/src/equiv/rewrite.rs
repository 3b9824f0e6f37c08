//! Directed β/η rewriting, leftmost-outermost.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::eval::{handle_op, hoist_let, unfold_let_rec};
use crate::subst::{fresh_name, NameSet, Term};
use crate::syntax::{Comp, EffectTable, Expr, Handler, Name, OpCase};
use crate::typing::{synth_comp, synth_expr, TypingContext};
use crate::types::{DirtyType, PureType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RewriteRule {
    IfTrue,
    IfFalse,
    MatchZero,
    MatchSucc,
    AppFun,
    LetVal,
    LetOp,
    LetRec,
    HandleVal,
    HandleOp,
    /// `e ~> ()` for a unit-typed variable.
    EtaUnit,
    /// `fun x. e x ~> e`
    EtaFun,
    /// `let x = c in val x ~> c`
    EtaLet,
    /// `if e then c[true/x] else c[false/x] ~> c[e/x]`
    EtaIf,
    /// `match e with { 0 -> c[0/x] | succ y -> c[succ y/x] } ~> c[e/x]`
    EtaMatch,
    /// `c[e/x] ~> absurd e` for an empty-typed variable `e`.
    EtaAbsurd,
    /// `with (handler val x -> c2) handle c1 ~> let x = c1 in c2`
    HandlerLet,
}

impl RewriteRule {
    pub const BETA: [RewriteRule; 10] = [
        RewriteRule::IfTrue,
        RewriteRule::IfFalse,
        RewriteRule::MatchZero,
        RewriteRule::MatchSucc,
        RewriteRule::AppFun,
        RewriteRule::LetVal,
        RewriteRule::LetOp,
        RewriteRule::LetRec,
        RewriteRule::HandleVal,
        RewriteRule::HandleOp,
    ];

    pub const ETA: [RewriteRule; 6] = [
        RewriteRule::EtaUnit,
        RewriteRule::EtaFun,
        RewriteRule::EtaLet,
        RewriteRule::EtaIf,
        RewriteRule::EtaMatch,
        RewriteRule::EtaAbsurd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RewriteRule::IfTrue => "if-true",
            RewriteRule::IfFalse => "if-false",
            RewriteRule::MatchZero => "match-zero",
            RewriteRule::MatchSucc => "match-succ",
            RewriteRule::AppFun => "app-fun",
            RewriteRule::LetVal => "let-val",
            RewriteRule::LetOp => "let-op",
            RewriteRule::LetRec => "let-rec",
            RewriteRule::HandleVal => "handle-val",
            RewriteRule::HandleOp => "handle-op",
            RewriteRule::EtaUnit => "eta-unit",
            RewriteRule::EtaFun => "eta-fun",
            RewriteRule::EtaLet => "eta-let",
            RewriteRule::EtaIf => "eta-if",
            RewriteRule::EtaMatch => "eta-match",
            RewriteRule::EtaAbsurd => "eta-absurd",
            RewriteRule::HandlerLet => "handler-let",
        }
    }

    fn needs_types(self) -> bool {
        matches!(self, RewriteRule::EtaUnit | RewriteRule::EtaAbsurd)
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The rules a rewrite may use. At a single position β-rules are tried
/// before η-rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    rules: BTreeSet<RewriteRule>,
}

impl RuleSet {
    pub fn beta() -> Self {
        RuleSet {
            rules: RewriteRule::BETA.into_iter().collect(),
        }
    }

    /// β, the η-rules except `absurd`, and handler-let.
    pub fn beta_eta() -> Self {
        let mut s = Self::beta();
        s.rules.extend(RewriteRule::ETA);
        s.rules.remove(&RewriteRule::EtaAbsurd);
        s.rules.insert(RewriteRule::HandlerLet);
        s
    }

    pub fn only(rules: impl IntoIterator<Item = RewriteRule>) -> Self {
        RuleSet {
            rules: rules.into_iter().collect(),
        }
    }

    pub fn with(mut self, rule: RewriteRule) -> Self {
        self.rules.insert(rule);
        self
    }

    pub fn contains(&self, rule: RewriteRule) -> bool {
        self.rules.contains(&rule)
    }

    pub fn iter(&self) -> impl Iterator<Item = RewriteRule> + '_ {
        self.rules.iter().copied()
    }

    fn needs_types(&self) -> bool {
        self.rules.iter().any(|r| r.needs_types())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rewritten {
    pub rule: RewriteRule,
    pub term: Comp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no redex")]
pub struct NoRedex;

/// One leftmost-outermost rewrite step.
pub fn rewrite_once(table: &EffectTable, c: &Comp, rules: &RuleSet) -> Result<Rewritten, NoRedex> {
    let mut w = Walker::new(table, rules, true);
    w.comp(c, &|c| c);
    w.found.into_iter().next().ok_or(NoRedex)
}

/// Every single-step rewrite of `c`, in leftmost-outermost order.
pub fn all_rewrites(table: &EffectTable, c: &Comp, rules: &RuleSet) -> Vec<Rewritten> {
    let mut w = Walker::new(table, rules, false);
    w.comp(c, &|c| c);
    w.found
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normalized {
    pub term: Comp,
    pub steps: usize,
    /// The fuel ran out before a normal form was reached.
    pub exhausted: bool,
}

/// Iterates β-steps until no redex is left or `fuel` steps have been taken.
pub fn normalize_beta(table: &EffectTable, c: &Comp, fuel: usize) -> Normalized {
    normalize(table, c, &RuleSet::beta(), fuel)
}

pub fn normalize(table: &EffectTable, c: &Comp, rules: &RuleSet, fuel: usize) -> Normalized {
    let mut term = c.clone();
    for steps in 0..fuel {
        match rewrite_once(table, &term, rules) {
            Ok(r) => term = r.term,
            Err(NoRedex) => {
                return Normalized {
                    term,
                    steps,
                    exhausted: false,
                }
            }
        }
    }
    let exhausted = rewrite_once(table, &term, rules).is_ok();
    Normalized {
        term,
        steps: fuel,
        exhausted,
    }
}

struct Walker<'a> {
    table: &'a EffectTable,
    rules: &'a RuleSet,
    first_only: bool,
    typed: bool,
    /// Bound variables with their types when known.
    scope: Vec<(Name, Option<PureType>)>,
    found: Vec<Rewritten>,
}

type Rebuild<'r, T> = &'r dyn Fn(T) -> Comp;

impl<'a> Walker<'a> {
    fn new(table: &'a EffectTable, rules: &'a RuleSet, first_only: bool) -> Self {
        Walker {
            table,
            rules,
            first_only,
            typed: rules.needs_types(),
            scope: Vec::new(),
            found: Vec::new(),
        }
    }

    fn done(&self) -> bool {
        self.first_only && !self.found.is_empty()
    }

    fn emit(&mut self, rule: RewriteRule, term: Comp) {
        self.found.push(Rewritten { rule, term });
    }

    fn ctx(&self) -> TypingContext {
        self.scope
            .iter()
            .filter_map(|(x, t)| t.clone().map(|t| (x, t)))
            .fold(TypingContext::new(), |ctx, (x, t)| ctx.with(x.clone(), t))
    }

    fn var_type(&self, x: &str) -> Option<&PureType> {
        self.scope
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .and_then(|(_, t)| t.as_ref())
    }

    fn comp_type(&self, c: &Comp) -> Option<DirtyType> {
        synth_comp(self.table, &self.ctx(), c).ok()
    }

    fn under<R>(&mut self, binds: Vec<(Name, Option<PureType>)>, f: impl FnOnce(&mut Self) -> R) -> R {
        let n = binds.len();
        self.scope.extend(binds);
        let r = f(self);
        self.scope.truncate(self.scope.len() - n);
        r
    }

    fn typed_bind(&self, x: &Name, ty: impl FnOnce() -> Option<PureType>) -> Vec<(Name, Option<PureType>)> {
        vec![(x.clone(), if self.typed { ty() } else { None })]
    }

    fn comp(&mut self, c: &Comp, rebuild: Rebuild<'_, Comp>) {
        for (rule, term) in self.head(c) {
            self.emit(rule, rebuild(term));
            if self.done() {
                return;
            }
        }
        match c {
            Comp::Val(e) => self.expr(e, &|e| rebuild(Comp::Val(e))),
            Comp::Op {
                instance,
                op,
                arg,
                binder,
                body,
            } => {
                self.expr(instance, &|i| {
                    rebuild(Comp::op(i, op.clone(), arg.clone(), binder.clone(), (**body).clone()))
                });
                if self.done() {
                    return;
                }
                self.expr(arg, &|a| {
                    rebuild(Comp::op(instance.clone(), op.clone(), a, binder.clone(), (**body).clone()))
                });
                if self.done() {
                    return;
                }
                let b = self.typed_bind(binder, || self.table.lookup_op(op).map(|(_, s)| s.result.clone()));
                self.under(b, |w| {
                    w.comp(body, &|c| {
                        rebuild(Comp::op(instance.clone(), op.clone(), arg.clone(), binder.clone(), c))
                    })
                });
            }
            Comp::With { handler, body } => {
                self.expr(handler, &|h| rebuild(Comp::with(h, (**body).clone())));
                if self.done() {
                    return;
                }
                self.comp(body, &|c| rebuild(Comp::with(handler.clone(), c)));
            }
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr(cond, &|e| {
                    rebuild(Comp::if_(e, (**then_branch).clone(), (**else_branch).clone()))
                });
                if self.done() {
                    return;
                }
                self.comp(then_branch, &|c| {
                    rebuild(Comp::if_(cond.clone(), c, (**else_branch).clone()))
                });
                if self.done() {
                    return;
                }
                self.comp(else_branch, &|c| {
                    rebuild(Comp::if_(cond.clone(), (**then_branch).clone(), c))
                });
            }
            Comp::Absurd { ty, expr } => self.expr(expr, &|e| {
                rebuild(Comp::Absurd {
                    ty: ty.clone(),
                    expr: e,
                })
            }),
            Comp::App(f, a) => {
                self.expr(f, &|f| rebuild(Comp::app(f, a.clone())));
                if self.done() {
                    return;
                }
                self.expr(a, &|a| rebuild(Comp::app(f.clone(), a)));
            }
            Comp::Match {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                self.expr(scrutinee, &|e| {
                    rebuild(Comp::match_(e, (**zero).clone(), binder.clone(), (**succ).clone()))
                });
                if self.done() {
                    return;
                }
                self.comp(zero, &|c| {
                    rebuild(Comp::match_(scrutinee.clone(), c, binder.clone(), (**succ).clone()))
                });
                if self.done() {
                    return;
                }
                let b = self.typed_bind(binder, || Some(PureType::Nat));
                self.under(b, |w| {
                    w.comp(succ, &|c| {
                        rebuild(Comp::match_(scrutinee.clone(), (**zero).clone(), binder.clone(), c))
                    })
                });
            }
            Comp::Let {
                binder,
                bound,
                body,
            } => {
                self.comp(bound, &|c| rebuild(Comp::let_(binder.clone(), c, (**body).clone())));
                if self.done() {
                    return;
                }
                let b = self.typed_bind(binder, || self.comp_type(bound).map(|t| t.pure));
                self.under(b, |w| {
                    w.comp(body, &|c| rebuild(Comp::let_(binder.clone(), (**bound).clone(), c)))
                });
            }
            Comp::LetRec {
                func,
                param,
                param_type,
                result_type,
                def,
                body,
            } => {
                let f_ty = PureType::arrow(param_type.clone(), result_type.clone());
                let mk = |def: Comp, body: Comp| {
                    Comp::let_rec(
                        func.clone(),
                        param.clone(),
                        param_type.clone(),
                        result_type.clone(),
                        def,
                        body,
                    )
                };
                let mut b = self.typed_bind(func, || Some(f_ty.clone()));
                b.extend(self.typed_bind(param, || Some(param_type.clone())));
                self.under(b, |w| w.comp(def, &|c| rebuild(mk(c, (**body).clone()))));
                if self.done() {
                    return;
                }
                let b = self.typed_bind(func, || Some(f_ty.clone()));
                self.under(b, |w| w.comp(body, &|c| rebuild(mk((**def).clone(), c))));
            }
        }
    }

    fn expr(&mut self, e: &Expr, rebuild: Rebuild<'_, Expr>) {
        if let Some((rule, out)) = self.expr_head(e) {
            self.emit(rule, rebuild(out));
            if self.done() {
                return;
            }
        }
        match e {
            Expr::Succ(inner) => self.expr(inner, &|i| rebuild(Expr::succ(i))),
            Expr::Fun(x, ty, body) => {
                let b = self.typed_bind(x, || Some(ty.clone()));
                self.under(b, |w| {
                    w.comp(body, &|c| rebuild(Expr::fun(x.clone(), ty.clone(), c)))
                });
            }
            Expr::Handler(h) => self.handler(e, h, rebuild),
            _ => {}
        }
    }

    fn handler(&mut self, e: &Expr, h: &Handler, rebuild: Rebuild<'_, Expr>) {
        let b = self.typed_bind(&h.value_binder, || Some(h.value_type.clone()));
        self.under(b, |w| {
            w.comp(&h.value_body, &|c| {
                let mut h2 = h.clone();
                h2.value_body = c;
                rebuild(Expr::handler(h2))
            })
        });
        let outgoing = if self.typed {
            match synth_expr(self.table, &self.ctx(), e) {
                Ok(PureType::Handler(_, d)) => Some(*d),
                _ => h.cases.outgoing.clone(),
            }
        } else {
            None
        };
        for (i, case) in h.cases.cases.iter().enumerate() {
            if self.done() {
                return;
            }
            let sig = self.table.lookup_op(&case.op).map(|(_, s)| s.clone());
            let param_ty = sig.as_ref().map(|s| s.param.clone());
            let kont_ty = sig
                .as_ref()
                .zip(outgoing.as_ref())
                .map(|(s, d)| PureType::arrow(s.result.clone(), d.clone()));
            let mut b = self.typed_bind(&case.param, || param_ty);
            b.extend(self.typed_bind(&case.kont, || kont_ty));
            self.under(b, |w| {
                w.comp(&case.body, &|c| {
                    let mut h2 = h.clone();
                    h2.cases.cases[i] = OpCase {
                        body: c,
                        ..case.clone()
                    };
                    rebuild(Expr::handler(h2))
                })
            });
        }
    }

    fn expr_head(&self, e: &Expr) -> Option<(RewriteRule, Expr)> {
        match e {
            Expr::Var(x)
                if self.rules.contains(RewriteRule::EtaUnit)
                    && self.var_type(x) == Some(&PureType::Unit) =>
            {
                Some((RewriteRule::EtaUnit, Expr::Unit))
            }
            Expr::Fun(x, _, body) if self.rules.contains(RewriteRule::EtaFun) => match &**body {
                Comp::App(f, Expr::Var(y)) if y == x && !f.free_vars().contains(x) => {
                    Some((RewriteRule::EtaFun, f.clone()))
                }
                _ => None,
            },
            _ => None,
        }
    }

    /// Rewrites at the root of `c`, β first.
    fn head(&self, c: &Comp) -> Vec<(RewriteRule, Comp)> {
        let mut out = Vec::new();
        let mut push = |rule: RewriteRule, term: Option<Comp>| {
            if let Some(t) = term.filter(|_| self.rules.contains(rule)) {
                out.push((rule, t));
            }
        };
        match c {
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => {
                push(RewriteRule::IfTrue, (*cond == Expr::True).then(|| (**then_branch).clone()));
                push(RewriteRule::IfFalse, (*cond == Expr::False).then(|| (**else_branch).clone()));
                if !matches!(cond, Expr::True | Expr::False) && self.rules.contains(RewriteRule::EtaIf) {
                    push(RewriteRule::EtaIf, eta_if(cond, then_branch, else_branch));
                }
            }
            Comp::Match {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                push(RewriteRule::MatchZero, (*scrutinee == Expr::Zero).then(|| (**zero).clone()));
                if let Expr::Succ(e) = scrutinee {
                    push(RewriteRule::MatchSucc, Some(succ.subst(e, binder)));
                } else if *scrutinee != Expr::Zero && self.rules.contains(RewriteRule::EtaMatch) {
                    push(RewriteRule::EtaMatch, eta_match(scrutinee, zero, binder, succ));
                }
            }
            Comp::App(Expr::Fun(x, _, body), a) => push(RewriteRule::AppFun, Some(body.subst(a, x))),
            Comp::Let {
                binder,
                bound,
                body,
            } => {
                match &**bound {
                    Comp::Val(e) => push(RewriteRule::LetVal, Some(body.subst(e, binder))),
                    Comp::Op {
                        instance,
                        op,
                        arg,
                        binder: y,
                        body: c1,
                    } if self.rules.contains(RewriteRule::LetOp) => push(
                        RewriteRule::LetOp,
                        Some(hoist_let(
                            instance.clone(),
                            op.clone(),
                            arg.clone(),
                            y.clone(),
                            (**c1).clone(),
                            binder.clone(),
                            (**body).clone(),
                        )),
                    ),
                    _ => {}
                }
                if matches!(&**body, Comp::Val(Expr::Var(x)) if x == binder) {
                    push(RewriteRule::EtaLet, Some((**bound).clone()));
                }
            }
            Comp::LetRec { .. } if self.rules.contains(RewriteRule::LetRec) => {
                push(RewriteRule::LetRec, Some(unfold_let_rec(c)))
            }
            Comp::With {
                handler: h_expr @ Expr::Handler(h),
                body,
            } => {
                match &**body {
                    Comp::Val(e) => push(
                        RewriteRule::HandleVal,
                        Some(h.value_body.subst(e, &h.value_binder)),
                    ),
                    Comp::Op {
                        instance: Expr::Inst(i),
                        op,
                        arg,
                        binder,
                        body: c1,
                    } if self.rules.contains(RewriteRule::HandleOp) => push(
                        RewriteRule::HandleOp,
                        handle_op(self.table, h, h_expr, i, op, arg, binder.clone(), (**c1).clone()).ok(),
                    ),
                    _ => {}
                }
                if h.cases.cases.is_empty() {
                    push(
                        RewriteRule::HandlerLet,
                        Some(Comp::let_(h.value_binder.clone(), (**body).clone(), h.value_body.clone())),
                    );
                }
            }
            _ => {}
        }
        if self.rules.contains(RewriteRule::EtaAbsurd) && !matches!(c, Comp::Absurd { .. }) {
            push(RewriteRule::EtaAbsurd, self.eta_absurd(c));
        }
        out
    }

    fn eta_absurd(&self, c: &Comp) -> Option<Comp> {
        // Any visible variable of type empty will do: c is c[v/x] for a fresh x.
        let v = self
            .scope
            .iter()
            .rev()
            .map(|(x, _)| x)
            .find(|x| self.var_type(x) == Some(&PureType::Empty))?
            .clone();
        let ty = self.comp_type(c)?;
        Some(Comp::Absurd {
            ty,
            expr: Expr::Var(v),
        })
    }
}

/// Anti-unifies the two branches of a conditional: positions holding `true`
/// on the left and `false` on the right become the scrutinee.
fn eta_if(cond: &Expr, c1: &Comp, c2: &Comp) -> Option<Comp> {
    let avoid: NameSet = c1.free_vars().into_iter().chain(c2.free_vars()).chain(cond.free_vars()).collect();
    let hole = fresh_name("h", &all_names(c1, c2, avoid));
    let mut au = AntiUnify {
        hole: &hole,
        pattern: &|l, r, _| *l == Expr::True && *r == Expr::False,
        succ_binder: None,
        shadowed: 0,
    };
    let c = au.comp(c1, c2)?;
    Some(c.subst(cond, &hole))
}

/// Anti-unifies the branches of a `match`: `0` on the left against
/// `succ y` on the right, with `y` the branch binder.
fn eta_match(scrutinee: &Expr, zero: &Comp, y: &Name, succ: &Comp) -> Option<Comp> {
    let avoid: NameSet = zero
        .free_vars()
        .into_iter()
        .chain(succ.free_vars())
        .chain(scrutinee.free_vars())
        .collect();
    let hole = fresh_name("h", &all_names(zero, succ, avoid));
    let mut au = AntiUnify {
        hole: &hole,
        pattern: &|l, r, shadowed| {
            !shadowed && *l == Expr::Zero && matches!(r, Expr::Succ(v) if **v == Expr::Var(y.clone()))
        },
        succ_binder: Some(y),
        shadowed: 0,
    };
    let c = au.comp(zero, succ)?;
    if c.free_vars().contains(y) {
        return None;
    }
    Some(c.subst(scrutinee, &hole))
}

/// Every name occurring in either term, bound or free, so the hole cannot
/// clash with a binder.
fn all_names(a: &Comp, b: &Comp, mut acc: NameSet) -> NameSet {
    fn comp(c: &Comp, acc: &mut NameSet) {
        match c {
            Comp::Val(e) => expr(e, acc),
            Comp::Op {
                instance,
                arg,
                binder,
                body,
                ..
            } => {
                expr(instance, acc);
                expr(arg, acc);
                acc.insert(binder.clone());
                comp(body, acc);
            }
            Comp::With { handler, body } => {
                expr(handler, acc);
                comp(body, acc);
            }
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => {
                expr(cond, acc);
                comp(then_branch, acc);
                comp(else_branch, acc);
            }
            Comp::Absurd { expr: e, .. } => expr(e, acc),
            Comp::App(f, a) => {
                expr(f, acc);
                expr(a, acc);
            }
            Comp::Match {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                expr(scrutinee, acc);
                comp(zero, acc);
                acc.insert(binder.clone());
                comp(succ, acc);
            }
            Comp::Let {
                binder,
                bound,
                body,
            } => {
                acc.insert(binder.clone());
                comp(bound, acc);
                comp(body, acc);
            }
            Comp::LetRec {
                func,
                param,
                def,
                body,
                ..
            } => {
                acc.insert(func.clone());
                acc.insert(param.clone());
                comp(def, acc);
                comp(body, acc);
            }
        }
    }
    fn expr(e: &Expr, acc: &mut NameSet) {
        match e {
            Expr::Var(x) => {
                acc.insert(x.clone());
            }
            Expr::Succ(e) => expr(e, acc),
            Expr::Fun(x, _, c) => {
                acc.insert(x.clone());
                comp(c, acc);
            }
            Expr::Handler(h) => {
                acc.insert(h.value_binder.clone());
                comp(&h.value_body, acc);
                for case in &h.cases.cases {
                    expr(&case.instance, acc);
                    acc.insert(case.param.clone());
                    acc.insert(case.kont.clone());
                    comp(&case.body, acc);
                }
            }
            _ => {}
        }
    }
    comp(a, &mut acc);
    comp(b, &mut acc);
    acc
}

/// Parallel walk of two terms that must agree everywhere except at
/// positions accepted by `pattern`, which become `hole`. Binders must carry
/// the same names on both sides.
struct AntiUnify<'p> {
    hole: &'p str,
    pattern: &'p dyn Fn(&Expr, &Expr, bool) -> bool,
    /// The `match` binder whose occurrences inside `succ` are the pattern.
    succ_binder: Option<&'p Name>,
    /// Depth of binders currently shadowing `succ_binder`.
    shadowed: usize,
}

impl AntiUnify<'_> {
    fn bind<R>(&mut self, names: &[&Name], f: impl FnOnce(&mut Self) -> R) -> R {
        let hits = names.iter().any(|n| Some(*n) == self.succ_binder);
        if hits {
            self.shadowed += 1;
        }
        let r = f(self);
        if hits {
            self.shadowed -= 1;
        }
        r
    }

    fn expr(&mut self, l: &Expr, r: &Expr) -> Option<Expr> {
        if (self.pattern)(l, r, self.shadowed > 0) {
            return Some(Expr::Var(self.hole.to_string()));
        }
        match (l, r) {
            (Expr::Succ(a), Expr::Succ(b)) => Some(Expr::succ(self.expr(a, b)?)),
            (Expr::Fun(x, t, a), Expr::Fun(y, u, b)) if x == y && t == u => {
                let body = self.bind(&[x], |s| s.comp(a, b))?;
                Some(Expr::fun(x.clone(), t.clone(), body))
            }
            (Expr::Handler(a), Expr::Handler(b)) => {
                if a.value_binder != b.value_binder
                    || a.value_type != b.value_type
                    || a.cases.outgoing != b.cases.outgoing
                    || a.cases.cases.len() != b.cases.cases.len()
                {
                    return None;
                }
                let value_body = self.bind(&[&a.value_binder], |s| s.comp(&a.value_body, &b.value_body))?;
                let mut cases = Vec::new();
                for (ca, cb) in a.cases.cases.iter().zip(&b.cases.cases) {
                    if ca.op != cb.op || ca.param != cb.param || ca.kont != cb.kont {
                        return None;
                    }
                    let instance = self.expr(&ca.instance, &cb.instance)?;
                    let body = self.bind(&[&ca.param, &ca.kont], |s| s.comp(&ca.body, &cb.body))?;
                    cases.push(OpCase {
                        instance,
                        body,
                        ..ca.clone()
                    });
                }
                let mut h = (**a).clone();
                h.value_body = value_body;
                h.cases.cases = cases;
                Some(Expr::handler(h))
            }
            _ if l == r => Some(l.clone()),
            _ => None,
        }
    }

    fn comp(&mut self, l: &Comp, r: &Comp) -> Option<Comp> {
        Some(match (l, r) {
            (Comp::Val(a), Comp::Val(b)) => Comp::Val(self.expr(a, b)?),
            (
                Comp::Op {
                    instance: i1,
                    op: o1,
                    arg: a1,
                    binder: y1,
                    body: b1,
                },
                Comp::Op {
                    instance: i2,
                    op: o2,
                    arg: a2,
                    binder: y2,
                    body: b2,
                },
            ) if o1 == o2 && y1 == y2 => {
                let i = self.expr(i1, i2)?;
                let a = self.expr(a1, a2)?;
                let b = self.bind(&[y1], |s| s.comp(b1, b2))?;
                Comp::op(i, o1.clone(), a, y1.clone(), b)
            }
            (Comp::With { handler: h1, body: b1 }, Comp::With { handler: h2, body: b2 }) => {
                Comp::with(self.expr(h1, h2)?, self.comp(b1, b2)?)
            }
            (
                Comp::If {
                    cond: e1,
                    then_branch: t1,
                    else_branch: f1,
                },
                Comp::If {
                    cond: e2,
                    then_branch: t2,
                    else_branch: f2,
                },
            ) => Comp::if_(self.expr(e1, e2)?, self.comp(t1, t2)?, self.comp(f1, f2)?),
            (Comp::Absurd { ty: t1, expr: e1 }, Comp::Absurd { ty: t2, expr: e2 }) if t1 == t2 => Comp::Absurd {
                ty: t1.clone(),
                expr: self.expr(e1, e2)?,
            },
            (Comp::App(f1, a1), Comp::App(f2, a2)) => Comp::app(self.expr(f1, f2)?, self.expr(a1, a2)?),
            (
                Comp::Match {
                    scrutinee: e1,
                    zero: z1,
                    binder: y1,
                    succ: s1,
                },
                Comp::Match {
                    scrutinee: e2,
                    zero: z2,
                    binder: y2,
                    succ: s2,
                },
            ) if y1 == y2 => {
                let e = self.expr(e1, e2)?;
                let z = self.comp(z1, z2)?;
                let s = self.bind(&[y1], |st| st.comp(s1, s2))?;
                Comp::match_(e, z, y1.clone(), s)
            }
            (
                Comp::Let {
                    binder: x1,
                    bound: c1,
                    body: d1,
                },
                Comp::Let {
                    binder: x2,
                    bound: c2,
                    body: d2,
                },
            ) if x1 == x2 => {
                let c = self.comp(c1, c2)?;
                let d = self.bind(&[x1], |s| s.comp(d1, d2))?;
                Comp::let_(x1.clone(), c, d)
            }
            (
                Comp::LetRec {
                    func: f1,
                    param: p1,
                    param_type: a1,
                    result_type: r1,
                    def: c1,
                    body: d1,
                },
                Comp::LetRec {
                    func: f2,
                    param: p2,
                    param_type: a2,
                    result_type: r2,
                    def: c2,
                    body: d2,
                },
            ) if f1 == f2 && p1 == p2 && a1 == a2 && r1 == r2 => {
                let c = self.bind(&[f1, p1], |s| s.comp(c1, c2))?;
                let d = self.bind(&[f1], |s| s.comp(d1, d2))?;
                Comp::let_rec(f1.clone(), p1.clone(), a1.clone(), r1.clone(), c, d)
            }
            _ => return None,
        })
    }
}
