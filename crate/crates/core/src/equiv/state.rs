//! The monadic state handler and the run-with-initial-state wrapper.

use crate::subst::{fresh_name, Term};
use crate::syntax::{Comp, EffectTable, Expr, Handler, Name, OpCase, OpCases};
use crate::typing::{synth_comp, TypeError, TypingContext};
use crate::types::PureType;

/// `state_ι` with state type `nat` and value type `b`.
pub fn mk_state_handler(instance: &str, b: PureType) -> Handler {
    mk_state_handler_at(instance, PureType::Nat, b)
}

/// ```text
/// handler val x : B -> val (fun s : A. val x)
///   | ι#lookup(_; k) -> val (fun s : A. let f = k s in f s)
///   | ι#update(s'; k) -> val (fun s : A. let f = k () in f s')
/// ```
pub fn mk_state_handler_at(instance: &str, a: PureType, b: PureType) -> Handler {
    let s = || Expr::var("s");
    let wrap = |body: Comp| Comp::val(Expr::fun("s", a.clone(), body));
    let run = |arg: Expr, state: Expr| {
        Comp::let_(
            "f",
            Comp::app(Expr::var("k"), arg),
            Comp::app(Expr::var("f"), state),
        )
    };
    Handler {
        value_binder: "x".into(),
        value_type: b,
        value_body: wrap(Comp::val(Expr::var("x"))),
        cases: OpCases {
            cases: vec![
                OpCase {
                    instance: Expr::inst(instance),
                    op: "lookup".into(),
                    param: "_".into(),
                    kont: "k".into(),
                    body: wrap(run(s(), s())),
                },
                OpCase {
                    instance: Expr::inst(instance),
                    op: "update".into(),
                    param: "s'".into(),
                    kont: "k".into(),
                    body: wrap(run(Expr::Unit, Expr::var("s'"))),
                },
            ],
            outgoing: None,
        },
    }
}

/// `H[c, e]`: `let f = (with state_ι handle c) in f e`, with the handler's
/// value type taken from the synthesized type of the closed `c`.
pub fn mk_h(table: &EffectTable, c: &Comp, e: &Expr, instance: &str) -> Result<Comp, TypeError> {
    let b = synth_comp(table, &TypingContext::new(), c)?.pure;
    Ok(mk_h_at(c, e, instance, b))
}

pub fn mk_h_at(c: &Comp, e: &Expr, instance: &str, b: PureType) -> Comp {
    let f: Name = fresh_name("f", &e.free_vars());
    Comp::let_(
        f.clone(),
        Comp::with(Expr::handler(mk_state_handler(instance, b)), c.clone()),
        Comp::app(Expr::Var(f), e.clone()),
    )
}
