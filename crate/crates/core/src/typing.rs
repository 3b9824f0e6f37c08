//! Type-and-effect checking by minimal synthesis with subsumption folded into
//! checking, plus the subsumption-free skeletal system.

use std::fmt;

use crate::surface::{print_dirty, print_pure, print_skeletal, SpanTree};
use crate::syntax::{Comp, EffectTable, Expr, Handler, Name, OpCases, OpSig};
use crate::types::{
    join_dirty, skeleton, skeleton_dirty, subtype_dirty, subtype_pure, Dirt, DirtyType, Operation,
    PureType, Region, SkeletalType,
};

/// Ordered variable bindings; lookup finds the rightmost binding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypingContext {
    entries: Vec<(Name, PureType)>,
}

impl TypingContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, x: impl Into<Name>, ty: PureType) -> Self {
        self.entries.push((x.into(), ty));
        self
    }

    pub fn lookup(&self, x: &str) -> Option<&PureType> {
        self.entries.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    pub fn entries(&self) -> &[(Name, PureType)] {
        &self.entries
    }

    pub fn skeleton(&self) -> SkeletalContext {
        SkeletalContext {
            entries: self
                .entries
                .iter()
                .map(|(x, t)| (x.clone(), skeleton(t)))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SkeletalContext {
    entries: Vec<(Name, SkeletalType)>,
}

impl SkeletalContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, x: impl Into<Name>, ty: SkeletalType) -> Self {
        self.entries.push((x.into(), ty));
        self
    }

    pub fn lookup(&self, x: &str) -> Option<&SkeletalType> {
        self.entries.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Var,
    True,
    False,
    Zero,
    Succ,
    Unit,
    Fun,
    Inst,
    Hand,
    SubExpr,
    OpCasesNil,
    OpCasesCons,
    IfThenElse,
    Match,
    Absurd,
    App,
    Val,
    Op,
    Let,
    LetRec,
    With,
    SubComp,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Var => "Var",
            Rule::True => "True",
            Rule::False => "False",
            Rule::Zero => "Zero",
            Rule::Succ => "Succ",
            Rule::Unit => "Unit",
            Rule::Fun => "Fun",
            Rule::Inst => "Inst",
            Rule::Hand => "Hand",
            Rule::SubExpr => "SubExpr",
            Rule::OpCasesNil => "OpCases-Nil",
            Rule::OpCasesCons => "OpCases-Cons",
            Rule::IfThenElse => "IfThenElse",
            Rule::Match => "Match",
            Rule::Absurd => "Absurd",
            Rule::App => "App",
            Rule::Val => "Val",
            Rule::Op => "Op",
            Rule::Let => "Let",
            Rule::LetRec => "LetRec",
            Rule::With => "With",
            Rule::SubComp => "SubComp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeErrorKind {
    /// No type could be synthesized.
    Synthesis,
    /// A type was synthesized but is not below the one required.
    Subsumption,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("[{}] {message}", self.rule_label())]
pub struct TypeError {
    pub rule: Rule,
    /// Raised by the skeletal system rather than the effectful one.
    pub skeletal: bool,
    pub kind: TypeErrorKind,
    pub message: String,
    /// Child indices from the checked term to the offending subterm, in the
    /// layout used by [`SpanTree`].
    pub path: Vec<usize>,
}

impl TypeError {
    pub fn rule_label(&self) -> String {
        if self.skeletal {
            format!("{}'", self.rule.name())
        } else {
            self.rule.name().to_string()
        }
    }

    /// `<file>:<line>:<col>: [<Rule>] message`
    pub fn render(&self, file: &str, spans: &SpanTree) -> String {
        let at = spans.locate(&self.path);
        format!("{file}:{}:{}: {self}", at.line, at.column)
    }
}

type TResult<T> = Result<T, TypeError>;

pub fn synth_expr(table: &EffectTable, ctx: &TypingContext, e: &Expr) -> TResult<PureType> {
    Checker::new(table, ctx).expr(e)
}

pub fn synth_comp(table: &EffectTable, ctx: &TypingContext, c: &Comp) -> TResult<DirtyType> {
    Checker::new(table, ctx).comp(c)
}

pub fn check_expr(
    table: &EffectTable,
    ctx: &TypingContext,
    e: &Expr,
    target: &PureType,
) -> TResult<()> {
    let mut ch = Checker::new(table, ctx);
    ch.check_expr(e, target, Rule::SubExpr)
}

pub fn check_comp(
    table: &EffectTable,
    ctx: &TypingContext,
    c: &Comp,
    target: &DirtyType,
) -> TResult<()> {
    let mut ch = Checker::new(table, ctx);
    ch.check_comp(c, target, Rule::SubComp)
}

/// Checks every case against `outgoing` and returns the operations the cases
/// are guaranteed to handle.
pub fn ocs_handled(
    table: &EffectTable,
    ctx: &TypingContext,
    ocs: &OpCases,
    outgoing: &DirtyType,
) -> TResult<Dirt> {
    let mut ch = Checker::new(table, ctx);
    let infos = ch.case_infos(ocs, 1)?;
    for (i, (case, (_, sig))) in ocs.cases.iter().zip(&infos).enumerate() {
        ch.check_case_body(case, sig, outgoing, 2 + 2 * i)?;
    }
    Ok(handled_set(ocs, &infos))
}

/// Handler type when the handled computation is known to call `input`:
/// operations of `input` that no case is guaranteed to handle are added to
/// the outgoing dirt, so they may be forwarded.
pub fn synth_handler_for(
    table: &EffectTable,
    ctx: &TypingContext,
    h: &Handler,
    input: &Dirt,
) -> TResult<PureType> {
    Checker::new(table, ctx).handler(h, Some(input))
}

pub fn skeletal_expr(table: &EffectTable, ctx: &SkeletalContext, e: &Expr) -> TResult<SkeletalType> {
    Skeletal::new(table, ctx).expr(e)
}

pub fn skeletal_comp(table: &EffectTable, ctx: &SkeletalContext, c: &Comp) -> TResult<SkeletalType> {
    Skeletal::new(table, ctx).comp(c)
}

/// Fold of `∪̇` over the cases: a case contributes `ι#op` only when its
/// instance has the singleton region `{ι}`.
fn handled_set(ocs: &OpCases, infos: &[(Region, OpSig)]) -> Dirt {
    ocs.cases
        .iter()
        .zip(infos)
        .filter_map(|(case, (region, _))| {
            (region.len() == 1).then(|| {
                Operation::new(region.iter().next().unwrap().clone(), case.op.clone())
            })
        })
        .collect()
}

struct Checker<'t> {
    table: &'t EffectTable,
    vars: Vec<(Name, PureType)>,
    path: Vec<usize>,
}

const HANDLER_ROUNDS: usize = 64;

impl<'t> Checker<'t> {
    fn new(table: &'t EffectTable, ctx: &TypingContext) -> Self {
        Checker {
            table,
            vars: ctx.entries.clone(),
            path: Vec::new(),
        }
    }

    fn err(&self, rule: Rule, kind: TypeErrorKind, message: impl Into<String>) -> TypeError {
        TypeError {
            rule,
            skeletal: false,
            kind,
            message: message.into(),
            path: self.path.clone(),
        }
    }

    fn fail(&self, rule: Rule, message: impl Into<String>) -> TypeError {
        self.err(rule, TypeErrorKind::Synthesis, message)
    }

    fn at<T>(&mut self, child: usize, f: impl FnOnce(&mut Self) -> TResult<T>) -> TResult<T> {
        self.path.push(child);
        let out = f(self);
        self.path.pop();
        out
    }

    fn bind<T>(&mut self, binds: &[(&Name, PureType)], f: impl FnOnce(&mut Self) -> T) -> T {
        let depth = self.vars.len();
        for (x, t) in binds {
            self.vars.push(((*x).clone(), t.clone()));
        }
        let out = f(self);
        self.vars.truncate(depth);
        out
    }

    fn lookup(&self, x: &str) -> Option<&PureType> {
        self.vars.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    fn wf_pure(&self, ty: &PureType, rule: Rule) -> TResult<()> {
        self.table.check_pure(ty).map_err(|m| self.fail(rule, m))
    }

    fn wf_dirty(&self, ty: &DirtyType, rule: Rule) -> TResult<()> {
        self.table.check_dirty(ty).map_err(|m| self.fail(rule, m))
    }

    fn check_expr(&mut self, e: &Expr, target: &PureType, rule: Rule) -> TResult<()> {
        let found = self.expr(e)?;
        if subtype_pure(&found, target) {
            Ok(())
        } else {
            Err(self.err(
                rule,
                TypeErrorKind::Subsumption,
                format!("expected {}, found {}", print_pure(target), print_pure(&found)),
            ))
        }
    }

    fn check_comp(&mut self, c: &Comp, target: &DirtyType, rule: Rule) -> TResult<()> {
        let found = self.comp(c)?;
        if subtype_dirty(&found, target) {
            Ok(())
        } else {
            Err(self.err(
                rule,
                TypeErrorKind::Subsumption,
                format!("expected {}, found {}", print_dirty(target), print_dirty(&found)),
            ))
        }
    }

    fn join(&self, a: &DirtyType, b: &DirtyType, rule: Rule) -> TResult<DirtyType> {
        join_dirty(a, b).ok_or_else(|| {
            self.fail(
                rule,
                format!(
                    "branches have incompatible types {} and {}",
                    print_dirty(a),
                    print_dirty(b)
                ),
            )
        })
    }

    fn expr(&mut self, e: &Expr) -> TResult<PureType> {
        match e {
            Expr::Var(x) => self
                .lookup(x)
                .cloned()
                .ok_or_else(|| self.fail(Rule::Var, format!("unbound variable `{x}`"))),
            Expr::True | Expr::False => Ok(PureType::Bool),
            Expr::Zero => Ok(PureType::Nat),
            Expr::Succ(inner) => {
                self.at(0, |ch| ch.check_expr(inner, &PureType::Nat, Rule::Succ))?;
                Ok(PureType::Nat)
            }
            Expr::Unit => Ok(PureType::Unit),
            Expr::Fun(x, a, body) => {
                self.wf_pure(a, Rule::Fun)?;
                let c = self.at(0, |ch| ch.bind(&[(x, a.clone())], |ch| ch.comp(body)))?;
                Ok(PureType::arrow(a.clone(), c))
            }
            Expr::Inst(i) => match self.table.instance_effect(i) {
                Some(effect) => Ok(PureType::effect(effect, [i.as_str()])),
                None => Err(self.fail(Rule::Inst, format!("unknown instance `{i}`"))),
            },
            Expr::Handler(h) => self.handler(h, None),
        }
    }

    /// Region and signature of every case, with the instance expressions
    /// visited at child positions `first, first + 2, ...`.
    fn case_infos(&mut self, ocs: &OpCases, first: usize) -> TResult<Vec<(Region, OpSig)>> {
        let mut infos = Vec::new();
        for (i, case) in ocs.cases.iter().enumerate() {
            let info = self.at(first + 2 * i, |ch| {
                let PureType::Effect(effect, region) = ch.expr(&case.instance)? else {
                    return Err(ch.fail(
                        Rule::OpCasesCons,
                        format!("`{}` does not denote an instance", case.instance),
                    ));
                };
                match ch.table.lookup_op(&case.op) {
                    Some((owner, sig)) if owner.name == effect => Ok((region, sig.clone())),
                    _ => Err(ch.fail(
                        Rule::OpCasesCons,
                        format!("`{}` is not an operation of `{effect}`", case.op),
                    )),
                }
            })?;
            infos.push(info);
        }
        Ok(infos)
    }

    fn check_case_body(
        &mut self,
        case: &crate::syntax::OpCase,
        sig: &OpSig,
        outgoing: &DirtyType,
        child: usize,
    ) -> TResult<()> {
        let k_ty = PureType::arrow(sig.result.clone(), outgoing.clone());
        self.at(child, |ch| {
            ch.bind(
                &[(&case.param, sig.param.clone()), (&case.kont, k_ty)],
                |ch| ch.check_comp(&case.body, outgoing, Rule::OpCasesCons),
            )
        })
    }

    fn synth_case_body(
        &mut self,
        case: &crate::syntax::OpCase,
        sig: &OpSig,
        outgoing: &DirtyType,
        child: usize,
    ) -> TResult<DirtyType> {
        let k_ty = PureType::arrow(sig.result.clone(), outgoing.clone());
        self.at(child, |ch| {
            ch.bind(
                &[(&case.param, sig.param.clone()), (&case.kont, k_ty)],
                |ch| ch.comp(&case.body),
            )
        })
    }

    fn handler(&mut self, h: &Handler, input: Option<&Dirt>) -> TResult<PureType> {
        let a = &h.value_type;
        self.wf_pure(a, Rule::Hand)?;
        let infos = self.case_infos(&h.cases, 1)?;
        let handled = handled_set(&h.cases, &infos);
        let outgoing = match &h.cases.outgoing {
            Some(out) => {
                self.wf_dirty(out, Rule::OpCasesNil)?;
                self.at(0, |ch| {
                    ch.bind(&[(&h.value_binder, a.clone())], |ch| {
                        ch.check_comp(&h.value_body, out, Rule::Hand)
                    })
                })?;
                for (i, (case, (_, sig))) in h.cases.cases.iter().zip(&infos).enumerate() {
                    self.check_case_body(case, sig, out, 2 + 2 * i)?;
                }
                out.clone()
            }
            None => {
                let mut out = self.at(0, |ch| {
                    ch.bind(&[(&h.value_binder, a.clone())], |ch| ch.comp(&h.value_body))
                })?;
                if let Some(input) = input {
                    out.dirt.extend(input.difference(&handled).cloned());
                }
                let mut settled = false;
                for _ in 0..HANDLER_ROUNDS {
                    let mut next = out.clone();
                    for (i, (case, (_, sig))) in h.cases.cases.iter().zip(&infos).enumerate() {
                        let t = self.synth_case_body(case, sig, &out, 2 + 2 * i)?;
                        next = self.join(&next, &t, Rule::OpCasesCons)?;
                    }
                    if next == out {
                        settled = true;
                        break;
                    }
                    out = next;
                }
                if !settled {
                    return Err(self.fail(
                        Rule::Hand,
                        "no outgoing type found for the operation cases; annotate the handler",
                    ));
                }
                out
            }
        };
        let mut in_dirt = handled;
        in_dirt.extend(outgoing.dirt.iter().cloned());
        Ok(PureType::handler(
            DirtyType::new(a.clone(), in_dirt),
            outgoing,
        ))
    }

    fn comp(&mut self, c: &Comp) -> TResult<DirtyType> {
        match c {
            Comp::Val(e) => Ok(DirtyType::pure(self.at(0, |ch| ch.expr(e))?)),
            Comp::Op {
                instance,
                op,
                arg,
                binder,
                body,
            } => {
                let PureType::Effect(effect, region) = self.at(0, |ch| ch.expr(instance))? else {
                    return Err(self.fail(Rule::Op, format!("`{instance}` does not denote an instance")));
                };
                let sig = match self.table.lookup_op(op) {
                    Some((owner, sig)) if owner.name == effect => sig.clone(),
                    _ => {
                        return Err(
                            self.fail(Rule::Op, format!("`{op}` is not an operation of `{effect}`"))
                        )
                    }
                };
                self.at(1, |ch| ch.check_expr(arg, &sig.param, Rule::Op))?;
                let mut ty =
                    self.at(2, |ch| ch.bind(&[(binder, sig.result.clone())], |ch| ch.comp(body)))?;
                ty.dirt
                    .extend(region.iter().map(|i| Operation::new(i.clone(), op.clone())));
                Ok(ty)
            }
            Comp::With { handler, body } => {
                if let Expr::Handler(h) = handler {
                    let c_ty = self.at(1, |ch| ch.comp(body))?;
                    let h_ty = self.at(0, |ch| ch.handler(h, Some(&c_ty.dirt)))?;
                    let PureType::Handler(ingoing, outgoing) = h_ty else {
                        unreachable!()
                    };
                    if !subtype_dirty(&c_ty, &ingoing) {
                        self.path.push(1);
                        return Err(self.err(
                            Rule::With,
                            TypeErrorKind::Subsumption,
                            format!(
                                "handled computation has type {}, but the handler accepts {}",
                                print_dirty(&c_ty),
                                print_dirty(&ingoing)
                            ),
                        ));
                    }
                    return Ok(*outgoing);
                }
                let PureType::Handler(ingoing, outgoing) = self.at(0, |ch| ch.expr(handler))? else {
                    return Err(self.fail(Rule::With, format!("`{handler}` is not a handler")));
                };
                self.at(1, |ch| ch.check_comp(body, &ingoing, Rule::With))?;
                Ok(*outgoing)
            }
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.at(0, |ch| ch.check_expr(cond, &PureType::Bool, Rule::IfThenElse))?;
                let t1 = self.at(1, |ch| ch.comp(then_branch))?;
                let t2 = self.at(2, |ch| ch.comp(else_branch))?;
                self.join(&t1, &t2, Rule::IfThenElse)
            }
            Comp::Absurd { ty, expr } => {
                self.wf_dirty(ty, Rule::Absurd)?;
                self.at(0, |ch| ch.check_expr(expr, &PureType::Empty, Rule::Absurd))?;
                Ok(ty.clone())
            }
            Comp::App(f, a) => {
                let PureType::Arrow(dom, cod) = self.at(0, |ch| ch.expr(f))? else {
                    return Err(self.fail(Rule::App, format!("`{f}` is not a function")));
                };
                self.at(1, |ch| ch.check_expr(a, &dom, Rule::App))?;
                Ok(*cod)
            }
            Comp::Match {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                self.at(0, |ch| ch.check_expr(scrutinee, &PureType::Nat, Rule::Match))?;
                let t1 = self.at(1, |ch| ch.comp(zero))?;
                let t2 = self.at(2, |ch| ch.bind(&[(binder, PureType::Nat)], |ch| ch.comp(succ)))?;
                self.join(&t1, &t2, Rule::Match)
            }
            Comp::Let {
                binder,
                bound,
                body,
            } => {
                let t1 = self.at(0, |ch| ch.comp(bound))?;
                let mut t2 = self.at(1, |ch| ch.bind(&[(binder, t1.pure.clone())], |ch| ch.comp(body)))?;
                t2.dirt.extend(t1.dirt);
                Ok(t2)
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
                self.wf_pure(&f_ty, Rule::LetRec)?;
                self.at(0, |ch| {
                    ch.bind(
                        &[(func, f_ty.clone()), (param, param_type.clone())],
                        |ch| ch.check_comp(def, result_type, Rule::LetRec),
                    )
                })?;
                self.at(1, |ch| ch.bind(&[(func, f_ty.clone())], |ch| ch.comp(body)))
            }
        }
    }
}

struct Skeletal<'t> {
    table: &'t EffectTable,
    vars: Vec<(Name, SkeletalType)>,
    path: Vec<usize>,
}

impl<'t> Skeletal<'t> {
    fn new(table: &'t EffectTable, ctx: &SkeletalContext) -> Self {
        Skeletal {
            table,
            vars: ctx.entries.clone(),
            path: Vec::new(),
        }
    }

    fn fail(&self, rule: Rule, message: impl Into<String>) -> TypeError {
        TypeError {
            rule,
            skeletal: true,
            kind: TypeErrorKind::Synthesis,
            message: message.into(),
            path: self.path.clone(),
        }
    }

    fn at<T>(&mut self, child: usize, f: impl FnOnce(&mut Self) -> TResult<T>) -> TResult<T> {
        self.path.push(child);
        let out = f(self);
        self.path.pop();
        out
    }

    fn bind<T>(&mut self, binds: &[(&Name, SkeletalType)], f: impl FnOnce(&mut Self) -> T) -> T {
        let depth = self.vars.len();
        for (x, t) in binds {
            self.vars.push(((*x).clone(), t.clone()));
        }
        let out = f(self);
        self.vars.truncate(depth);
        out
    }

    fn expect(&self, found: &SkeletalType, want: &SkeletalType, rule: Rule) -> TResult<()> {
        if found == want {
            Ok(())
        } else {
            Err(self.fail(
                rule,
                format!(
                    "expected {}, found {}",
                    print_skeletal(want),
                    print_skeletal(found)
                ),
            ))
        }
    }

    fn expr(&mut self, e: &Expr) -> TResult<SkeletalType> {
        match e {
            Expr::Var(x) => self
                .vars
                .iter()
                .rev()
                .find(|(y, _)| y == x)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| self.fail(Rule::Var, format!("unbound variable `{x}`"))),
            Expr::True | Expr::False => Ok(SkeletalType::Bool),
            Expr::Zero => Ok(SkeletalType::Nat),
            Expr::Succ(inner) => {
                let t = self.at(0, |sk| sk.expr(inner))?;
                self.expect(&t, &SkeletalType::Nat, Rule::Succ)?;
                Ok(SkeletalType::Nat)
            }
            Expr::Unit => Ok(SkeletalType::Unit),
            Expr::Fun(x, a, body) => {
                let s = skeleton(a);
                let t = self.at(0, |sk| sk.bind(&[(x, s.clone())], |sk| sk.comp(body)))?;
                Ok(SkeletalType::arrow(s, t))
            }
            Expr::Inst(i) => self
                .table
                .instance_effect(i)
                .map(|e| SkeletalType::Effect(e.to_string()))
                .ok_or_else(|| self.fail(Rule::Inst, format!("unknown instance `{i}`"))),
            Expr::Handler(h) => {
                let a = skeleton(&h.value_type);
                let s = self.at(0, |sk| {
                    sk.bind(&[(&h.value_binder, a.clone())], |sk| sk.comp(&h.value_body))
                })?;
                if let Some(out) = &h.cases.outgoing {
                    self.expect(&s, &skeleton_dirty(out), Rule::OpCasesNil)?;
                }
                for (i, case) in h.cases.cases.iter().enumerate() {
                    let sig = self.at(1 + 2 * i, |sk| {
                        let SkeletalType::Effect(effect) = sk.expr(&case.instance)? else {
                            return Err(sk.fail(
                                Rule::OpCasesCons,
                                format!("`{}` does not denote an instance", case.instance),
                            ));
                        };
                        match sk.table.lookup_op(&case.op) {
                            Some((owner, sig)) if owner.name == effect => Ok(sig.clone()),
                            _ => Err(sk.fail(
                                Rule::OpCasesCons,
                                format!("`{}` is not an operation of `{effect}`", case.op),
                            )),
                        }
                    })?;
                    let k = SkeletalType::arrow(skeleton(&sig.result), s.clone());
                    let t = self.at(2 + 2 * i, |sk| {
                        sk.bind(
                            &[(&case.param, skeleton(&sig.param)), (&case.kont, k)],
                            |sk| sk.comp(&case.body),
                        )
                    })?;
                    self.path.push(2 + 2 * i);
                    self.expect(&t, &s, Rule::OpCasesCons)?;
                    self.path.pop();
                }
                Ok(SkeletalType::handler(a, s))
            }
        }
    }

    fn comp(&mut self, c: &Comp) -> TResult<SkeletalType> {
        match c {
            Comp::Val(e) => self.at(0, |sk| sk.expr(e)),
            Comp::Op {
                instance,
                op,
                arg,
                binder,
                body,
            } => {
                let SkeletalType::Effect(effect) = self.at(0, |sk| sk.expr(instance))? else {
                    return Err(self.fail(Rule::Op, format!("`{instance}` does not denote an instance")));
                };
                let sig = match self.table.lookup_op(op) {
                    Some((owner, sig)) if owner.name == effect => sig.clone(),
                    _ => {
                        return Err(
                            self.fail(Rule::Op, format!("`{op}` is not an operation of `{effect}`"))
                        )
                    }
                };
                let t = self.at(1, |sk| sk.expr(arg))?;
                self.path.push(1);
                self.expect(&t, &skeleton(&sig.param), Rule::Op)?;
                self.path.pop();
                self.at(2, |sk| sk.bind(&[(binder, skeleton(&sig.result))], |sk| sk.comp(body)))
            }
            Comp::With { handler, body } => {
                let SkeletalType::Handler(s, t) = self.at(0, |sk| sk.expr(handler))? else {
                    return Err(self.fail(Rule::With, format!("`{handler}` is not a handler")));
                };
                let found = self.at(1, |sk| sk.comp(body))?;
                self.path.push(1);
                self.expect(&found, &s, Rule::With)?;
                self.path.pop();
                Ok(*t)
            }
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let b = self.at(0, |sk| sk.expr(cond))?;
                self.path.push(0);
                self.expect(&b, &SkeletalType::Bool, Rule::IfThenElse)?;
                self.path.pop();
                let t1 = self.at(1, |sk| sk.comp(then_branch))?;
                let t2 = self.at(2, |sk| sk.comp(else_branch))?;
                self.path.push(2);
                self.expect(&t2, &t1, Rule::IfThenElse)?;
                self.path.pop();
                Ok(t1)
            }
            Comp::Absurd { ty, expr } => {
                let t = self.at(0, |sk| sk.expr(expr))?;
                self.path.push(0);
                self.expect(&t, &SkeletalType::Empty, Rule::Absurd)?;
                self.path.pop();
                Ok(skeleton_dirty(ty))
            }
            Comp::App(f, a) => {
                let SkeletalType::Arrow(dom, cod) = self.at(0, |sk| sk.expr(f))? else {
                    return Err(self.fail(Rule::App, format!("`{f}` is not a function")));
                };
                let t = self.at(1, |sk| sk.expr(a))?;
                self.path.push(1);
                self.expect(&t, &dom, Rule::App)?;
                self.path.pop();
                Ok(*cod)
            }
            Comp::Match {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                let n = self.at(0, |sk| sk.expr(scrutinee))?;
                self.path.push(0);
                self.expect(&n, &SkeletalType::Nat, Rule::Match)?;
                self.path.pop();
                let t1 = self.at(1, |sk| sk.comp(zero))?;
                let t2 = self.at(2, |sk| sk.bind(&[(binder, SkeletalType::Nat)], |sk| sk.comp(succ)))?;
                self.path.push(2);
                self.expect(&t2, &t1, Rule::Match)?;
                self.path.pop();
                Ok(t1)
            }
            Comp::Let {
                binder,
                bound,
                body,
            } => {
                let s = self.at(0, |sk| sk.comp(bound))?;
                self.at(1, |sk| sk.bind(&[(binder, s)], |sk| sk.comp(body)))
            }
            Comp::LetRec {
                func,
                param,
                param_type,
                result_type,
                def,
                body,
            } => {
                let a = skeleton(param_type);
                let c = skeleton_dirty(result_type);
                let f = SkeletalType::arrow(a.clone(), c.clone());
                let t = self.at(0, |sk| sk.bind(&[(func, f.clone()), (param, a)], |sk| sk.comp(def)))?;
                self.path.push(0);
                self.expect(&t, &c, Rule::LetRec)?;
                self.path.pop();
                self.at(1, |sk| sk.bind(&[(func, f)], |sk| sk.comp(body)))
            }
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_comp_in, parse_expr_in, parse_program};

    fn dirt_of(ops: impl IntoIterator<Item = Operation>) -> Dirt {
        ops.into_iter().collect()
    }

    const REF: &str = "effect ref { lookup : unit -> nat  update : nat -> unit }\ninstance i, j : ref\n";

    fn table() -> EffectTable {
        parse_program(&format!("{REF}do val 0")).unwrap().table
    }

    fn comp(src: &str) -> Comp {
        parse_comp_in(&table(), &[], src).unwrap()
    }

    fn synth(src: &str) -> String {
        print_dirty(&synth_comp(&table(), &TypingContext::new(), &comp(src)).unwrap())
    }

    #[test]
    fn instance_gets_singleton_region() {
        let t = synth_expr(&table(), &TypingContext::new(), &Expr::inst("i")).unwrap();
        assert_eq!(print_pure(&t), "ref^{i}");
    }

    #[test]
    fn val_is_pure() {
        assert_eq!(synth("val 0"), "nat ! {}");
    }

    #[test]
    fn let_collects_dirt() {
        assert_eq!(
            synth("let x = i#lookup () in let y = i#update x in val (succ x)"),
            "nat ! {i#lookup, i#update}"
        );
    }

    #[test]
    fn branches_join_regions() {
        assert_eq!(synth("if true then val i else val j"), "ref^{i, j} ! {}");
    }

    #[test]
    fn op_on_wide_region_touches_every_instance() {
        let t = synth_comp(
            &table(),
            &TypingContext::new().with("u", PureType::effect("ref", ["i", "j"])),
            &parse_comp_in(&table(), &["u".into()], "u#lookup ()").unwrap(),
        )
        .unwrap();
        assert_eq!(print_dirty(&t), "nat ! {i#lookup, j#lookup}");
    }

    #[test]
    fn checking_widens() {
        let t = table();
        let ctx = TypingContext::new();
        check_expr(&t, &ctx, &Expr::inst("i"), &PureType::effect("ref", ["i", "j"])).unwrap();
        let upd = DirtyType::new(PureType::Nat, dirt_of([Operation::new("i", "update")]));
        check_comp(&t, &ctx, &comp("val 0"), &upd).unwrap();
        let err = check_comp(&t, &ctx, &comp("val 0"), &DirtyType::pure(PureType::Bool)).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::Subsumption);
        assert_eq!(err.rule, Rule::SubComp);
    }

    #[test]
    fn application_mismatch_names_rule() {
        let err = synth_comp(&table(), &TypingContext::new(), &comp("(fun x : nat. val x) true"))
            .unwrap_err();
        assert_eq!(err.rule, Rule::App);
        assert_eq!(err.path, vec![1]);
    }

    #[test]
    fn handled_set_needs_singleton() {
        let t = table();
        let h = parse_expr_in(&t, &["u".into()], "handler { val x : nat -> val x | u#lookup(y; k) -> k 1 }")
            .unwrap();
        let Expr::Handler(h) = h else { panic!() };
        let out = DirtyType::pure(PureType::Nat);
        let narrow = TypingContext::new().with("u", PureType::effect("ref", ["i"]));
        let wide = TypingContext::new().with("u", PureType::effect("ref", ["i", "j"]));
        let d1 = ocs_handled(&t, &narrow, &h.cases, &out).unwrap();
        let d2 = ocs_handled(&t, &wide, &h.cases, &out).unwrap();
        assert_eq!(d1, dirt_of([Operation::new("i", "lookup")]));
        assert!(d2.is_empty());
        assert!(ocs_handled(&t, &narrow, &OpCases::default(), &out).unwrap().is_empty());
    }

    #[test]
    fn annotated_handler_uses_annotation() {
        let t = synth_expr(
            &table(),
            &TypingContext::new(),
            &parse_expr_in(&table(), &[], "handler[nat ! {j#lookup}] { val x : nat -> val x | i#lookup(y; k) -> k 1 }")
                .unwrap(),
        )
        .unwrap();
        assert_eq!(
            print_pure(&t),
            "(nat ! {i#lookup, j#lookup}) => (nat ! {j#lookup})"
        );
    }

    #[test]
    fn with_forwards_unhandled_operations() {
        assert_eq!(
            synth("with handler { val x : nat -> val x | i#lookup(y; k) -> k 1 } handle let a = i#lookup () in j#lookup ()"),
            "nat ! {j#lookup}"
        );
    }

    #[test]
    fn skeletal_agrees_with_erasure() {
        let c = comp("with handler { val x : unit -> val (fun s : nat. val x) | i#update(s; k) -> k () } handle i#update 1");
        let full = synth_comp(&table(), &TypingContext::new(), &c).unwrap();
        let skel = skeletal_comp(&table(), &SkeletalContext::new(), &c).unwrap();
        assert_eq!(skel, skeleton_dirty(&full));
    }

    #[test]
    fn skeletal_mismatch() {
        let err = skeletal_comp(&table(), &SkeletalContext::new(), &comp("(fun x : nat. val x) true"))
            .unwrap_err();
        assert_eq!(err.rule_label(), "App'");
    }

    #[test]
    fn error_renders_with_position() {
        let src = format!("{REF}do let x = val 0 in\n  (fun y : nat. val y) true");
        let p = parse_program(&src).unwrap();
        let err = synth_comp(&p.table, &TypingContext::new(), &p.body).unwrap_err();
        assert_eq!(
            err.render("t.eff", &p.spans),
            "t.eff:4:24: [App] expected nat, found bool"
        );
    }
}
