//! Free variables, capture-avoiding substitution, fresh names and
//! α-equivalence over named terms.

use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::{Comp, Expr, Handler, Name, OpCase, OpCases};

pub type NameSet = BTreeSet<Name>;

/// Simultaneous substitution of expressions for variables.
pub type Subst = BTreeMap<Name, Expr>;

/// Operations shared by expressions and computations.
pub trait Term: Sized {
    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut NameSet);
    /// Whether `x` occurs free, without building the free-variable set.
    fn occurs_free(&self, x: &str) -> bool;
    fn apply(&self, sigma: &Subst) -> Self;
    fn alpha_eq_in(&self, other: &Self, env: &mut AlphaEnv) -> bool;
    fn normalize_in(&self, env: &mut Normalizer) -> Self;

    fn free_vars(&self) -> NameSet {
        let mut out = NameSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    /// `self[replacement / var]`
    fn subst(&self, replacement: &Expr, var: &str) -> Self {
        let mut sigma = Subst::new();
        sigma.insert(var.to_string(), replacement.clone());
        self.apply(&sigma)
    }

    fn alpha_eq(&self, other: &Self) -> bool {
        self.alpha_eq_in(other, &mut AlphaEnv::default())
    }

    /// Renames every binder to a canonical name chosen by binding order, so
    /// α-equal terms become syntactically equal.
    fn alpha_normalize(&self) -> Self {
        self.normalize_in(&mut Normalizer::default())
    }
}

pub fn free_vars<T: Term>(t: &T) -> NameSet {
    t.free_vars()
}

pub fn subst<T: Term>(t: &T, replacement: &Expr, var: &str) -> T {
    t.subst(replacement, var)
}

pub fn alpha_eq<T: Term>(a: &T, b: &T) -> bool {
    a.alpha_eq(b)
}

/// A variant of `base` not in `avoid`: `base` itself if possible, otherwise
/// its alphabetic stem followed by the smallest free counter.
pub fn fresh_name(base: &str, avoid: &NameSet) -> Name {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() || stem == "_" { "v" } else { stem };
    (1u64..)
        .map(|n| format!("{stem}{n}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded counter")
}

fn vars_of_range(sigma: &Subst) -> NameSet {
    sigma.values().flat_map(|e| e.free_vars()).collect()
}

/// Drops the entries of `sigma` shadowed by `binders` or irrelevant to
/// `bodies`.
fn restrict(sigma: &Subst, binders: &[&Name], bodies: &[&dyn FreeIn]) -> Subst {
    sigma
        .iter()
        .filter(|(k, _)| !binders.contains(k) && bodies.iter().any(|b| b.has_free(k)))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

trait FreeIn {
    fn has_free(&self, x: &str) -> bool;
    fn free(&self) -> NameSet;
}

impl<T: Term> FreeIn for T {
    fn has_free(&self, x: &str) -> bool {
        self.occurs_free(x)
    }
    fn free(&self) -> NameSet {
        self.free_vars()
    }
}

/// Chooses new names for the binders that would capture a variable of the
/// substitution's range, extending `sigma` with the renamings.
fn rename_binders(
    binders: &[&Name],
    sigma: &mut Subst,
    bodies: &[&dyn FreeIn],
) -> Vec<Name> {
    let danger = vars_of_range(sigma);
    let mut avoid: NameSet = danger.clone();
    avoid.extend(sigma.keys().cloned());
    for b in bodies {
        avoid.extend(b.free());
    }
    avoid.extend(binders.iter().map(|b| (*b).clone()));
    let mut renamed: BTreeMap<Name, Name> = BTreeMap::new();
    binders
        .iter()
        .map(|b| {
            if !danger.contains(*b) {
                return (*b).clone();
            }
            if let Some(n) = renamed.get(*b) {
                return n.clone();
            }
            let n = fresh_name(b, &avoid);
            avoid.insert(n.clone());
            renamed.insert((*b).clone(), n.clone());
            sigma.insert((*b).clone(), Expr::Var(n.clone()));
            n
        })
        .collect()
}

impl Term for Expr {
    fn occurs_free(&self, x: &str) -> bool {
        match self {
            Expr::Var(y) => y == x,
            Expr::True | Expr::False | Expr::Zero | Expr::Unit | Expr::Inst(_) => false,
            Expr::Succ(e) => e.occurs_free(x),
            Expr::Fun(y, _, c) => y != x && c.occurs_free(x),
            Expr::Handler(h) => h.occurs_free(x),
        }
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut NameSet) {
        match self {
            Expr::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Expr::True | Expr::False | Expr::Zero | Expr::Unit | Expr::Inst(_) => {}
            Expr::Succ(e) => e.collect_free(bound, out),
            Expr::Fun(x, _, c) => {
                bound.push(x.clone());
                c.collect_free(bound, out);
                bound.pop();
            }
            Expr::Handler(h) => h.collect_free(bound, out),
        }
    }

    fn apply(&self, sigma: &Subst) -> Self {
        if sigma.is_empty() {
            return self.clone();
        }
        match self {
            Expr::Var(x) => sigma.get(x).cloned().unwrap_or_else(|| self.clone()),
            Expr::True | Expr::False | Expr::Zero | Expr::Unit | Expr::Inst(_) => self.clone(),
            Expr::Succ(e) => Expr::Succ(Box::new(e.apply(sigma))),
            Expr::Fun(x, ty, c) => {
                let mut s = restrict(sigma, &[x], &[&**c]);
                if s.is_empty() {
                    return self.clone();
                }
                let names = rename_binders(&[x], &mut s, &[&**c]);
                Expr::Fun(names[0].clone(), ty.clone(), Box::new(c.apply(&s)))
            }
            Expr::Handler(h) => {
                if sigma.keys().any(|k| h.occurs_free(k)) {
                    Expr::handler(h.apply(sigma))
                } else {
                    self.clone()
                }
            }
        }
    }

    fn alpha_eq_in(&self, other: &Self, env: &mut AlphaEnv) -> bool {
        match (self, other) {
            (Expr::Var(a), Expr::Var(b)) => env.same_var(a, b),
            (Expr::True, Expr::True)
            | (Expr::False, Expr::False)
            | (Expr::Zero, Expr::Zero)
            | (Expr::Unit, Expr::Unit) => true,
            (Expr::Inst(a), Expr::Inst(b)) => a == b,
            (Expr::Succ(a), Expr::Succ(b)) => a.alpha_eq_in(b, env),
            (Expr::Fun(x, tx, c), Expr::Fun(y, ty, d)) => {
                tx == ty && env.under(&[(x, y)], |env| c.alpha_eq_in(d, env))
            }
            (Expr::Handler(h), Expr::Handler(g)) => h.alpha_eq_in(g, env),
            _ => false,
        }
    }

    fn normalize_in(&self, env: &mut Normalizer) -> Self {
        match self {
            Expr::Var(x) => Expr::Var(env.lookup(x)),
            Expr::True | Expr::False | Expr::Zero | Expr::Unit | Expr::Inst(_) => self.clone(),
            Expr::Succ(e) => Expr::Succ(Box::new(e.normalize_in(env))),
            Expr::Fun(x, ty, c) => {
                let (names, c) = env.under(&[x], |env| c.normalize_in(env));
                Expr::Fun(names[0].clone(), ty.clone(), Box::new(c))
            }
            Expr::Handler(h) => Expr::handler(h.normalize_in(env)),
        }
    }
}

impl Term for Handler {
    fn occurs_free(&self, x: &str) -> bool {
        (self.value_binder != x && self.value_body.occurs_free(x))
            || self.cases.cases.iter().any(|case| {
                case.instance.occurs_free(x)
                    || (case.param != x && case.kont != x && case.body.occurs_free(x))
            })
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut NameSet) {
        bound.push(self.value_binder.clone());
        self.value_body.collect_free(bound, out);
        bound.pop();
        for case in &self.cases.cases {
            case.instance.collect_free(bound, out);
            bound.push(case.param.clone());
            bound.push(case.kont.clone());
            case.body.collect_free(bound, out);
            bound.pop();
            bound.pop();
        }
    }

    fn apply(&self, sigma: &Subst) -> Self {
        let x = &self.value_binder;
        let mut s = restrict(sigma, &[x], &[&self.value_body]);
        let (value_binder, value_body) = if s.is_empty() {
            (x.clone(), self.value_body.clone())
        } else {
            let names = rename_binders(&[x], &mut s, &[&self.value_body]);
            (names[0].clone(), self.value_body.apply(&s))
        };
        let cases = self
            .cases
            .cases
            .iter()
            .map(|case| {
                let instance = case.instance.apply(sigma);
                let mut s = restrict(sigma, &[&case.param, &case.kont], &[&case.body]);
                if s.is_empty() {
                    return OpCase {
                        instance,
                        ..case.clone()
                    };
                }
                let names = rename_binders(&[&case.param, &case.kont], &mut s, &[&case.body]);
                OpCase {
                    instance,
                    op: case.op.clone(),
                    param: names[0].clone(),
                    kont: names[1].clone(),
                    body: case.body.apply(&s),
                }
            })
            .collect();
        Handler {
            value_binder,
            value_type: self.value_type.clone(),
            value_body,
            cases: OpCases {
                cases,
                outgoing: self.cases.outgoing.clone(),
            },
        }
    }

    fn alpha_eq_in(&self, other: &Self, env: &mut AlphaEnv) -> bool {
        self.value_type == other.value_type
            && self.cases.outgoing == other.cases.outgoing
            && self.cases.cases.len() == other.cases.cases.len()
            && env.under(&[(&self.value_binder, &other.value_binder)], |env| {
                self.value_body.alpha_eq_in(&other.value_body, env)
            })
            && self
                .cases
                .cases
                .iter()
                .zip(&other.cases.cases)
                .all(|(a, b)| {
                    a.op == b.op
                        && a.instance.alpha_eq_in(&b.instance, env)
                        && env.under(&[(&a.param, &b.param), (&a.kont, &b.kont)], |env| {
                            a.body.alpha_eq_in(&b.body, env)
                        })
                })
    }

    fn normalize_in(&self, env: &mut Normalizer) -> Self {
        let (names, value_body) = env.under(&[&self.value_binder], |env| {
            self.value_body.normalize_in(env)
        });
        let cases = self
            .cases
            .cases
            .iter()
            .map(|case| {
                let instance = case.instance.normalize_in(env);
                let (names, body) = env.under(&[&case.param, &case.kont], |env| {
                    case.body.normalize_in(env)
                });
                OpCase {
                    instance,
                    op: case.op.clone(),
                    param: names[0].clone(),
                    kont: names[1].clone(),
                    body,
                }
            })
            .collect();
        Handler {
            value_binder: names[0].clone(),
            value_type: self.value_type.clone(),
            value_body,
            cases: OpCases {
                cases,
                outgoing: self.cases.outgoing.clone(),
            },
        }
    }
}

impl Term for Comp {
    fn occurs_free(&self, x: &str) -> bool {
        match self {
            Comp::Val(e) => e.occurs_free(x),
            Comp::Op {
                instance,
                arg,
                binder,
                body,
                ..
            } => instance.occurs_free(x) || arg.occurs_free(x) || (binder != x && body.occurs_free(x)),
            Comp::With { handler, body } => handler.occurs_free(x) || body.occurs_free(x),
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => cond.occurs_free(x) || then_branch.occurs_free(x) || else_branch.occurs_free(x),
            Comp::Absurd { expr, .. } => expr.occurs_free(x),
            Comp::App(f, a) => f.occurs_free(x) || a.occurs_free(x),
            Comp::Match {
                scrutinee,
                zero,
                binder,
                succ,
            } => scrutinee.occurs_free(x) || zero.occurs_free(x) || (binder != x && succ.occurs_free(x)),
            Comp::Let {
                binder,
                bound,
                body,
            } => bound.occurs_free(x) || (binder != x && body.occurs_free(x)),
            Comp::LetRec {
                func,
                param,
                def,
                body,
                ..
            } => func != x && ((param != x && def.occurs_free(x)) || body.occurs_free(x)),
        }
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut NameSet) {
        match self {
            Comp::Val(e) => e.collect_free(bound, out),
            Comp::Op {
                instance,
                arg,
                binder,
                body,
                ..
            } => {
                instance.collect_free(bound, out);
                arg.collect_free(bound, out);
                bound.push(binder.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Comp::With { handler, body } => {
                handler.collect_free(bound, out);
                body.collect_free(bound, out);
            }
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cond.collect_free(bound, out);
                then_branch.collect_free(bound, out);
                else_branch.collect_free(bound, out);
            }
            Comp::Absurd { expr, .. } => expr.collect_free(bound, out),
            Comp::App(f, a) => {
                f.collect_free(bound, out);
                a.collect_free(bound, out);
            }
            Comp::Match {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                scrutinee.collect_free(bound, out);
                zero.collect_free(bound, out);
                bound.push(binder.clone());
                succ.collect_free(bound, out);
                bound.pop();
            }
            Comp::Let {
                binder,
                bound: c1,
                body,
            } => {
                c1.collect_free(bound, out);
                bound.push(binder.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Comp::LetRec {
                func,
                param,
                def,
                body,
                ..
            } => {
                bound.push(func.clone());
                bound.push(param.clone());
                def.collect_free(bound, out);
                bound.pop();
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    fn apply(&self, sigma: &Subst) -> Self {
        if sigma.is_empty() {
            return self.clone();
        }
        match self {
            Comp::Val(e) => Comp::Val(e.apply(sigma)),
            Comp::Op {
                instance,
                op,
                arg,
                binder,
                body,
            } => {
                let mut s = restrict(sigma, &[binder], &[&**body]);
                let (binder, body) = if s.is_empty() {
                    (binder.clone(), (**body).clone())
                } else {
                    let names = rename_binders(&[binder], &mut s, &[&**body]);
                    (names[0].clone(), body.apply(&s))
                };
                Comp::op(instance.apply(sigma), op.clone(), arg.apply(sigma), binder, body)
            }
            Comp::With { handler, body } => Comp::with(handler.apply(sigma), body.apply(sigma)),
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => Comp::if_(
                cond.apply(sigma),
                then_branch.apply(sigma),
                else_branch.apply(sigma),
            ),
            Comp::Absurd { ty, expr } => Comp::Absurd {
                ty: ty.clone(),
                expr: expr.apply(sigma),
            },
            Comp::App(f, a) => Comp::App(f.apply(sigma), a.apply(sigma)),
            Comp::Match {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                let mut s = restrict(sigma, &[binder], &[&**succ]);
                let (binder, succ) = if s.is_empty() {
                    (binder.clone(), (**succ).clone())
                } else {
                    let names = rename_binders(&[binder], &mut s, &[&**succ]);
                    (names[0].clone(), succ.apply(&s))
                };
                Comp::match_(scrutinee.apply(sigma), zero.apply(sigma), binder, succ)
            }
            Comp::Let {
                binder,
                bound,
                body,
            } => {
                let mut s = restrict(sigma, &[binder], &[&**body]);
                let (binder, body) = if s.is_empty() {
                    (binder.clone(), (**body).clone())
                } else {
                    let names = rename_binders(&[binder], &mut s, &[&**body]);
                    (names[0].clone(), body.apply(&s))
                };
                Comp::let_(binder, bound.apply(sigma), body)
            }
            Comp::LetRec {
                func,
                param,
                param_type,
                result_type,
                def,
                body,
            } => {
                // `func` scopes over both `def` and `body`, so one renaming
                // has to serve both.
                let mut s_def = restrict(sigma, &[func, param], &[&**def]);
                let mut s_body = restrict(sigma, &[func], &[&**body]);
                if s_def.is_empty() && s_body.is_empty() {
                    return self.clone();
                }
                let mut danger = vars_of_range(&s_def);
                danger.extend(vars_of_range(&s_body));
                let mut avoid = danger.clone();
                avoid.extend(sigma.keys().cloned());
                avoid.extend(def.free_vars());
                avoid.extend(body.free_vars());
                avoid.insert(func.clone());
                avoid.insert(param.clone());
                let new_func = if danger.contains(func) {
                    let n = fresh_name(func, &avoid);
                    avoid.insert(n.clone());
                    s_def.insert(func.clone(), Expr::Var(n.clone()));
                    s_body.insert(func.clone(), Expr::Var(n.clone()));
                    n
                } else {
                    func.clone()
                };
                let new_param = if param != func && vars_of_range(&s_def).contains(param) {
                    let n = fresh_name(param, &avoid);
                    s_def.insert(param.clone(), Expr::Var(n.clone()));
                    n
                } else {
                    param.clone()
                };
                Comp::let_rec(
                    new_func,
                    new_param,
                    param_type.clone(),
                    result_type.clone(),
                    def.apply(&s_def),
                    body.apply(&s_body),
                )
            }
        }
    }

    fn alpha_eq_in(&self, other: &Self, env: &mut AlphaEnv) -> bool {
        match (self, other) {
            (Comp::Val(a), Comp::Val(b)) => a.alpha_eq_in(b, env),
            (
                Comp::Op {
                    instance: i1,
                    op: o1,
                    arg: a1,
                    binder: y1,
                    body: c1,
                },
                Comp::Op {
                    instance: i2,
                    op: o2,
                    arg: a2,
                    binder: y2,
                    body: c2,
                },
            ) => {
                o1 == o2
                    && i1.alpha_eq_in(i2, env)
                    && a1.alpha_eq_in(a2, env)
                    && env.under(&[(y1, y2)], |env| c1.alpha_eq_in(c2, env))
            }
            (
                Comp::With {
                    handler: h1,
                    body: c1,
                },
                Comp::With {
                    handler: h2,
                    body: c2,
                },
            ) => h1.alpha_eq_in(h2, env) && c1.alpha_eq_in(c2, env),
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
            ) => e1.alpha_eq_in(e2, env) && t1.alpha_eq_in(t2, env) && f1.alpha_eq_in(f2, env),
            (Comp::Absurd { ty: t1, expr: e1 }, Comp::Absurd { ty: t2, expr: e2 }) => {
                t1 == t2 && e1.alpha_eq_in(e2, env)
            }
            (Comp::App(f1, a1), Comp::App(f2, a2)) => {
                f1.alpha_eq_in(f2, env) && a1.alpha_eq_in(a2, env)
            }
            (
                Comp::Match {
                    scrutinee: e1,
                    zero: z1,
                    binder: x1,
                    succ: s1,
                },
                Comp::Match {
                    scrutinee: e2,
                    zero: z2,
                    binder: x2,
                    succ: s2,
                },
            ) => {
                e1.alpha_eq_in(e2, env)
                    && z1.alpha_eq_in(z2, env)
                    && env.under(&[(x1, x2)], |env| s1.alpha_eq_in(s2, env))
            }
            (
                Comp::Let {
                    binder: x1,
                    bound: b1,
                    body: c1,
                },
                Comp::Let {
                    binder: x2,
                    bound: b2,
                    body: c2,
                },
            ) => b1.alpha_eq_in(b2, env) && env.under(&[(x1, x2)], |env| c1.alpha_eq_in(c2, env)),
            (
                Comp::LetRec {
                    func: f1,
                    param: x1,
                    param_type: a1,
                    result_type: r1,
                    def: d1,
                    body: c1,
                },
                Comp::LetRec {
                    func: f2,
                    param: x2,
                    param_type: a2,
                    result_type: r2,
                    def: d2,
                    body: c2,
                },
            ) => {
                a1 == a2
                    && r1 == r2
                    && env.under(&[(f1, f2), (x1, x2)], |env| d1.alpha_eq_in(d2, env))
                    && env.under(&[(f1, f2)], |env| c1.alpha_eq_in(c2, env))
            }
            _ => false,
        }
    }

    fn normalize_in(&self, env: &mut Normalizer) -> Self {
        match self {
            Comp::Val(e) => Comp::Val(e.normalize_in(env)),
            Comp::Op {
                instance,
                op,
                arg,
                binder,
                body,
            } => {
                let instance = instance.normalize_in(env);
                let arg = arg.normalize_in(env);
                let (names, body) = env.under(&[binder], |env| body.normalize_in(env));
                Comp::op(instance, op.clone(), arg, names[0].clone(), body)
            }
            Comp::With { handler, body } => {
                Comp::with(handler.normalize_in(env), body.normalize_in(env))
            }
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => Comp::if_(
                cond.normalize_in(env),
                then_branch.normalize_in(env),
                else_branch.normalize_in(env),
            ),
            Comp::Absurd { ty, expr } => Comp::Absurd {
                ty: ty.clone(),
                expr: expr.normalize_in(env),
            },
            Comp::App(f, a) => Comp::App(f.normalize_in(env), a.normalize_in(env)),
            Comp::Match {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                let scrutinee = scrutinee.normalize_in(env);
                let zero = zero.normalize_in(env);
                let (names, succ) = env.under(&[binder], |env| succ.normalize_in(env));
                Comp::match_(scrutinee, zero, names[0].clone(), succ)
            }
            Comp::Let {
                binder,
                bound,
                body,
            } => {
                let bound = bound.normalize_in(env);
                let (names, body) = env.under(&[binder], |env| body.normalize_in(env));
                Comp::let_(names[0].clone(), bound, body)
            }
            Comp::LetRec {
                func,
                param,
                param_type,
                result_type,
                def,
                body,
            } => {
                let (names, (new_param, def, body)) = env.under(&[func], |env| {
                    let (params, def) = env.under(&[param], |env| def.normalize_in(env));
                    (params[0].clone(), def, body.normalize_in(env))
                });
                Comp::let_rec(
                    names[0].clone(),
                    new_param,
                    param_type.clone(),
                    result_type.clone(),
                    def,
                    body,
                )
            }
        }
    }
}

/// Paired binder stacks for α-comparison.
#[derive(Default)]
pub struct AlphaEnv {
    pairs: Vec<(Name, Name)>,
}

impl AlphaEnv {
    fn under<R>(&mut self, binders: &[(&Name, &Name)], f: impl FnOnce(&mut Self) -> R) -> R {
        let n = self.pairs.len();
        self.pairs
            .extend(binders.iter().map(|(a, b)| ((*a).clone(), (*b).clone())));
        let r = f(self);
        self.pairs.truncate(n);
        r
    }

    fn same_var(&self, a: &str, b: &str) -> bool {
        let left = self.pairs.iter().rposition(|(l, _)| l == a);
        let right = self.pairs.iter().rposition(|(_, r)| r == b);
        match (left, right) {
            (None, None) => a == b,
            (Some(i), Some(j)) => i == j,
            _ => false,
        }
    }
}

/// Canonical renaming state.
#[derive(Default)]
pub struct Normalizer {
    scope: Vec<(Name, Name)>,
    counter: usize,
}

impl Normalizer {
    fn lookup(&self, x: &str) -> Name {
        self.scope
            .iter()
            .rev()
            .find(|(old, _)| old == x)
            .map(|(_, new)| new.clone())
            .unwrap_or_else(|| x.to_string())
    }

    fn under<R>(&mut self, binders: &[&Name], f: impl FnOnce(&mut Self) -> R) -> (Vec<Name>, R) {
        let n = self.scope.len();
        let names: Vec<Name> = binders
            .iter()
            .map(|b| {
                let new = format!("v{}", self.counter);
                self.counter += 1;
                self.scope.push(((*b).clone(), new.clone()));
                new
            })
            .collect();
        let r = f(self);
        self.scope.truncate(n);
        (names, r)
    }
}
