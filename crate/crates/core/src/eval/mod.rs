//! Operational semantics: the single-step relation, the big-step relation
//! and the check that they agree.

mod big;
mod small;

pub use big::eval_big;
pub use small::{run_small, step, trace, StepOutcome, Trace};

use crate::subst::{fresh_name, Term};
use crate::syntax::{Comp, EffectTable, EvalResult, Expr, Handler, Name};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("TIMEOUT")]
    Timeout,
    #[error("STUCK: {reason}")]
    Stuck { term: Comp, reason: String },
}

pub type EvalOutcome = Result<EvalResult, EvalError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Agreement {
    Agree,
    Disagree { small: EvalOutcome, big: EvalOutcome },
}

/// Runs both evaluators with the same fuel. They agree when both time out,
/// both get stuck, or both return α-equal results.
pub fn check_agreement(table: &EffectTable, c: &Comp, fuel: usize) -> Agreement {
    let small = run_small(table, c, fuel);
    let big = eval_big(table, c, fuel);
    if outcomes_agree(&small, &big) {
        Agreement::Agree
    } else {
        Agreement::Disagree { small, big }
    }
}

fn outcomes_agree(a: &EvalOutcome, b: &EvalOutcome) -> bool {
    match (a, b) {
        (Ok(r1), Ok(r2)) => r1.to_comp().alpha_eq(&r2.to_comp()),
        (Err(EvalError::Timeout), Err(EvalError::Timeout)) => true,
        (Err(EvalError::Stuck { .. }), Err(EvalError::Stuck { .. })) => true,
        _ => false,
    }
}

// Contractions shared by both semantics. Each one is a single rule
// application.

/// `let x = ι#op(e; y. c1) in c2 ~> ι#op(e; y. let x = c1 in c2)`, renaming
/// `y` when it occurs free in `c2`.
pub(crate) fn hoist_let(
    instance: Expr,
    op: Name,
    arg: Expr,
    y: Name,
    c1: Comp,
    x: Name,
    c2: Comp,
) -> Comp {
    let mut avoid = c2.free_vars();
    let (y, c1) = if avoid.contains(&y) {
        avoid.extend(c1.free_vars());
        let y2 = fresh_name(&y, &avoid);
        let c1 = c1.subst(&Expr::Var(y2.clone()), &y);
        (y2, c1)
    } else {
        (y, c1)
    };
    Comp::op(instance, op, arg, y, Comp::let_(x, c1, c2))
}

/// `with h handle ι#op(e; y. c) ~> ocs(e, fun y : B. with h handle c)`.
pub(crate) fn handle_op(
    table: &EffectTable,
    h: &Handler,
    h_expr: &Expr,
    instance: &str,
    op: &str,
    arg: &Expr,
    y: Name,
    c: Comp,
) -> Result<Comp, String> {
    let Some((_, sig)) = table.lookup_op(op) else {
        return Err(format!("unknown operation `{op}`"));
    };
    let mut avoid = h_expr.free_vars();
    let (y, c) = if avoid.contains(&y) {
        avoid.extend(c.free_vars());
        let y2 = fresh_name(&y, &avoid);
        let c = c.subst(&Expr::Var(y2.clone()), &y);
        (y2, c)
    } else {
        (y, c)
    };
    let kont = Expr::fun(y, sig.result.clone(), Comp::with(h_expr.clone(), c));
    Ok(crate::dispatch::ocs_dispatch(&h.cases, instance, op, arg, &kont))
}

/// `let rec f x = c1 in c2 ~> c2[(fun x. let rec f x = c1 in c1) / f]`
pub(crate) fn unfold_let_rec(c: &Comp) -> Comp {
    let Comp::LetRec {
        func,
        param,
        param_type,
        result_type,
        def,
        body,
    } = c
    else {
        unreachable!("unfold_let_rec on a non-recursive binding")
    };
    let inner = Comp::let_rec(
        func.clone(),
        param.clone(),
        param_type.clone(),
        result_type.clone(),
        (**def).clone(),
        (**def).clone(),
    );
    let f = Expr::fun(param.clone(), param_type.clone(), inner);
    body.subst(&f, func)
}

/// Contracts a redex that is not an evaluation context (`if`, `match`,
/// application, `let rec`, `absurd`). Returns `None` for `val`, operation
/// calls, `let` and `with`.
pub(crate) fn contract_head(c: &Comp) -> Option<Result<Comp, String>> {
    Some(match c {
        Comp::If {
            cond,
            then_branch,
            else_branch,
        } => match cond {
            Expr::True => Ok((**then_branch).clone()),
            Expr::False => Ok((**else_branch).clone()),
            other => Err(format!("`if` on non-boolean `{other}`")),
        },
        Comp::Match {
            scrutinee,
            zero,
            binder,
            succ,
        } => match scrutinee {
            Expr::Zero => Ok((**zero).clone()),
            Expr::Succ(e) => Ok(succ.subst(e, binder)),
            other => Err(format!("`match` on non-numeral `{other}`")),
        },
        Comp::App(f, a) => match f {
            Expr::Fun(x, _, body) => Ok(body.subst(a, x)),
            other => Err(format!("application of non-function `{other}`")),
        },
        Comp::LetRec { .. } => Ok(unfold_let_rec(c)),
        Comp::Absurd { expr, .. } => Err(format!("`absurd` reached with `{expr}`")),
        Comp::Val(_) | Comp::Op { .. } | Comp::Let { .. } | Comp::With { .. } => return None,
    })
}
