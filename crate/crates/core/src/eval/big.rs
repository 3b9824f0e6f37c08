use super::{contract_head, handle_op, hoist_let, EvalError, EvalOutcome};
use crate::subst::Term;
use crate::syntax::{Comp, EffectTable, EvalResult, Expr, Name};

/// Pending work of the big-step derivation: the `let` or `with` whose
/// premise is being evaluated.
enum Frame {
    Let(Name, Comp),
    With(Expr),
}

/// Big-step evaluation `c ⇓ r`. Premises that are evaluated before their
/// conclusion is assembled are kept on an explicit frame stack, so deep
/// nesting does not consume the call stack. Fuel is spent once per rule that
/// contracts a redex; evaluating a premise is free.
pub fn eval_big(table: &EffectTable, c: &Comp, fuel: usize) -> EvalOutcome {
    let mut frames: Vec<Frame> = Vec::new();
    let mut cur = c.clone();
    let mut used = 0;
    let spend = |used_now: &mut usize| -> Result<(), EvalError> {
        if *used_now == fuel {
            return Err(EvalError::Timeout);
        }
        *used_now += 1;
        Ok(())
    };
    loop {
        if let Comp::Op { instance, .. } = &cur {
            if !matches!(instance, Expr::Inst(_)) {
                return Err(EvalError::Stuck {
                    reason: format!("operation on non-instance `{instance}`"),
                    term: cur,
                });
            }
        }
        cur = match cur {
            Comp::Val(e) => match frames.pop() {
                None => return Ok(EvalResult::Value(e)),
                Some(Frame::Let(x, body)) => {
                    spend(&mut used)?;
                    body.subst(&e, &x)
                }
                Some(Frame::With(Expr::Handler(h))) => {
                    spend(&mut used)?;
                    h.value_body.subst(&e, &h.value_binder)
                }
                Some(Frame::With(other)) => {
                    return Err(EvalError::Stuck {
                        reason: format!("handling with non-handler `{other}`"),
                        term: Comp::with(other, Comp::Val(e)),
                    })
                }
            },
            Comp::Op {
                instance: Expr::Inst(i),
                op,
                arg,
                binder,
                body,
            } => match frames.pop() {
                None => {
                    return Ok(EvalResult::OpCall {
                        instance: i,
                        op,
                        arg,
                        binder,
                        body: *body,
                    })
                }
                Some(Frame::Let(x, c2)) => {
                    spend(&mut used)?;
                    hoist_let(Expr::Inst(i), op, arg, binder, *body, x, c2)
                }
                Some(Frame::With(h_expr)) => {
                    let Expr::Handler(h) = &h_expr else {
                        return Err(EvalError::Stuck {
                            reason: format!("handling with non-handler `{h_expr}`"),
                            term: Comp::with(
                                h_expr.clone(),
                                Comp::op(Expr::Inst(i), op, arg, binder, *body),
                            ),
                        });
                    };
                    match handle_op(table, h, &h_expr, &i, &op, &arg, binder.clone(), (*body).clone()) {
                        Ok(next) => {
                            spend(&mut used)?;
                            next
                        }
                        Err(reason) => {
                            return Err(EvalError::Stuck {
                                reason,
                                term: Comp::with(
                                    h_expr.clone(),
                                    Comp::op(Expr::Inst(i), op, arg, binder, *body),
                                ),
                            })
                        }
                    }
                }
            },
            Comp::Let {
                binder,
                bound,
                body,
            } => {
                frames.push(Frame::Let(binder, *body));
                *bound
            }
            Comp::With { handler, body } => {
                frames.push(Frame::With(handler));
                *body
            }
            Comp::Op { .. } => unreachable!("checked above"),
            other => match contract_head(&other) {
                Some(Ok(next)) => {
                    spend(&mut used)?;
                    next
                }
                Some(Err(reason)) => return Err(EvalError::Stuck { term: other, reason }),
                None => unreachable!("contract_head covers the remaining forms"),
            },
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_program;

    fn program(body: &str) -> (EffectTable, Comp) {
        let p = parse_program(&format!(
            "effect ref {{ lookup : unit -> nat  update : nat -> unit }}\ninstance i : ref\ndo {body}"
        ))
        .unwrap();
        (p.table, p.body)
    }

    #[test]
    fn val_evaluates_to_itself() {
        let (t, c) = program("val 3");
        assert_eq!(eval_big(&t, &c, 0), Ok(EvalResult::Value(Expr::nat(3))));
    }

    #[test]
    fn let_over_op_call() {
        let (t, c) = program("let x = i#lookup((); y. val y) in val (succ x)");
        let r = eval_big(&t, &c, 10).unwrap();
        let (_, expect) = program("i#lookup((); y. let x = val y in val (succ x))");
        assert!(r.to_comp().alpha_eq(&expect));
    }

    #[test]
    fn growing_continuation_does_not_overflow() {
        let (t, c) = program("let rec f x : unit -> unit ! {} = let r = f x in val r in f ()");
        assert_eq!(eval_big(&t, &c, 150_000), Err(EvalError::Timeout));
    }
}
