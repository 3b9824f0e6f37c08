//! Substitution that renames every binder it passes to a globally fresh
//! name, so capture cannot happen.

use std::cell::Cell;
use std::sync::Arc;

use coreff::syntax::{Comp, Expr, Handler, Name, OpCase, OpCases};

thread_local! {
    static COUNTER: Cell<usize> = const { Cell::new(0) };
}

fn fresh() -> Name {
    COUNTER.with(|c| {
        c.set(c.get() + 1);
        format!("_r{}", c.get())
    })
}

/// A map from variables to replacement expressions, applied simultaneously.
type Env = Vec<(Name, Expr)>;

fn find<'e>(env: &'e Env, x: &str) -> Option<&'e Expr> {
    env.iter().rev().find(|(y, _)| y == x).map(|(_, e)| e)
}

/// Binds `x` to a fresh variable in a copy of `env`.
fn rebind(env: &Env, x: &Name) -> (Name, Env) {
    let y = fresh();
    let mut inner = env.clone();
    inner.push((x.clone(), Expr::Var(y.clone())));
    (y, inner)
}

pub fn subst_comp(c: &Comp, e: &Expr, x: &str) -> Comp {
    comp(c, &vec![(x.to_string(), e.clone())])
}

/// `c` with every binder renamed.
pub fn rename_all(c: &Comp) -> Comp {
    comp(c, &Vec::new())
}

fn expr(e: &Expr, env: &Env) -> Expr {
    match e {
        Expr::Var(x) => find(env, x).cloned().unwrap_or_else(|| e.clone()),
        Expr::Succ(e) => Expr::Succ(Box::new(expr(e, env))),
        Expr::Fun(x, a, c) => {
            let (y, inner) = rebind(env, x);
            Expr::Fun(y, a.clone(), Box::new(comp(c, &inner)))
        }
        Expr::Handler(h) => {
            let (xv, inner) = rebind(env, &h.value_binder);
            let cases = h
                .cases
                .cases
                .iter()
                .map(|case| {
                    let (p, env1) = rebind(env, &case.param);
                    let (k, env2) = rebind(&env1, &case.kont);
                    OpCase {
                        instance: expr(&case.instance, env),
                        op: case.op.clone(),
                        param: p,
                        kont: k,
                        body: comp(&case.body, &env2),
                    }
                })
                .collect();
            Expr::Handler(Arc::new(Handler {
                value_binder: xv,
                value_type: h.value_type.clone(),
                value_body: comp(&h.value_body, &inner),
                cases: OpCases {
                    cases,
                    outgoing: h.cases.outgoing.clone(),
                },
            }))
        }
        _ => e.clone(),
    }
}

fn comp(c: &Comp, env: &Env) -> Comp {
    match c {
        Comp::Val(e) => Comp::Val(expr(e, env)),
        Comp::Op {
            instance,
            op,
            arg,
            binder,
            body,
        } => {
            let (y, inner) = rebind(env, binder);
            Comp::Op {
                instance: expr(instance, env),
                op: op.clone(),
                arg: expr(arg, env),
                binder: y,
                body: Box::new(comp(body, &inner)),
            }
        }
        Comp::With { handler, body } => Comp::With {
            handler: expr(handler, env),
            body: Box::new(comp(body, env)),
        },
        Comp::If {
            cond,
            then_branch,
            else_branch,
        } => Comp::If {
            cond: expr(cond, env),
            then_branch: Box::new(comp(then_branch, env)),
            else_branch: Box::new(comp(else_branch, env)),
        },
        Comp::Absurd { ty, expr: e } => Comp::Absurd {
            ty: ty.clone(),
            expr: expr(e, env),
        },
        Comp::App(f, a) => Comp::App(expr(f, env), expr(a, env)),
        Comp::Match {
            scrutinee,
            zero,
            binder,
            succ,
        } => {
            let (y, inner) = rebind(env, binder);
            Comp::Match {
                scrutinee: expr(scrutinee, env),
                zero: Box::new(comp(zero, env)),
                binder: y,
                succ: Box::new(comp(succ, &inner)),
            }
        }
        Comp::Let { binder, bound, body } => {
            let (y, inner) = rebind(env, binder);
            Comp::Let {
                binder: y,
                bound: Box::new(comp(bound, env)),
                body: Box::new(comp(body, &inner)),
            }
        }
        Comp::LetRec {
            func,
            param,
            param_type,
            result_type,
            def,
            body,
        } => {
            let (f, env1) = rebind(env, func);
            let (p, env2) = rebind(&env1, param);
            Comp::LetRec {
                func: f,
                param: p,
                param_type: param_type.clone(),
                result_type: result_type.clone(),
                def: Box::new(comp(def, &env2)),
                body: Box::new(comp(body, &env1)),
            }
        }
    }
}
