use std::fmt;

use super::{contract_head, handle_op, hoist_let, EvalError, EvalOutcome};
use crate::syntax::{Comp, EffectTable, EvalResult, Expr, Name};
use crate::subst::Term;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Stepped(Comp),
    Value(Expr),
    OpCall {
        instance: Name,
        op: Name,
        arg: Expr,
        binder: Name,
        body: Comp,
    },
    Stuck(String),
}

enum Frame<'a> {
    Let(&'a Name, &'a Comp),
    With(&'a Expr),
}

/// One application of the single-step relation. The redex is found by
/// walking down `let` bindings and handled computations.
pub fn step(table: &EffectTable, c: &Comp) -> StepOutcome {
    let mut frames = Vec::new();
    let mut cur = c;
    let contracted = loop {
        match cur {
            Comp::Val(e) => return StepOutcome::Value(e.clone()),
            Comp::Op {
                instance: Expr::Inst(i),
                op,
                arg,
                binder,
                body,
            } => {
                return StepOutcome::OpCall {
                    instance: i.clone(),
                    op: op.clone(),
                    arg: arg.clone(),
                    binder: binder.clone(),
                    body: (**body).clone(),
                }
            }
            Comp::Op { instance, .. } => {
                return StepOutcome::Stuck(format!("operation on non-instance `{instance}`"))
            }
            Comp::Let {
                binder,
                bound,
                body,
            } => match &**bound {
                Comp::Val(e) => break body.subst(e, binder),
                Comp::Op {
                    instance: instance @ Expr::Inst(_),
                    op,
                    arg,
                    binder: y,
                    body: c1,
                } => {
                    break hoist_let(
                        instance.clone(),
                        op.clone(),
                        arg.clone(),
                        y.clone(),
                        (**c1).clone(),
                        binder.clone(),
                        (**body).clone(),
                    )
                }
                _ => {
                    frames.push(Frame::Let(binder, body));
                    cur = bound;
                }
            },
            Comp::With { handler, body } => match (&**body, handler) {
                (Comp::Val(e), Expr::Handler(h)) => break h.value_body.subst(e, &h.value_binder),
                (
                    Comp::Op {
                        instance: Expr::Inst(i),
                        op,
                        arg,
                        binder: y,
                        body: inner,
                    },
                    Expr::Handler(h),
                ) => match handle_op(table, h, handler, i, op, arg, y.clone(), (**inner).clone()) {
                    Ok(next) => break next,
                    Err(reason) => return StepOutcome::Stuck(reason),
                },
                (Comp::Val(_) | Comp::Op { .. }, other) => {
                    return StepOutcome::Stuck(format!("handling with non-handler `{other}`"))
                }
                _ => {
                    frames.push(Frame::With(handler));
                    cur = body;
                }
            },
            other => match contract_head(other) {
                Some(Ok(next)) => break next,
                Some(Err(reason)) => return StepOutcome::Stuck(reason),
                None => unreachable!("contract_head covers the remaining forms"),
            },
        }
    };
    let rebuilt = frames.into_iter().rev().fold(contracted, |inner, frame| match frame {
        Frame::Let(x, body) => Comp::let_(x.clone(), inner, body.clone()),
        Frame::With(h) => Comp::with(h.clone(), inner),
    });
    StepOutcome::Stepped(rebuilt)
}

/// Iterates `step` at most `fuel` times.
pub fn run_small(table: &EffectTable, c: &Comp, fuel: usize) -> EvalOutcome {
    let mut cur = c.clone();
    let mut used = 0;
    loop {
        match step(table, &cur) {
            StepOutcome::Stepped(next) => {
                if used == fuel {
                    return Err(EvalError::Timeout);
                }
                used += 1;
                cur = next;
            }
            StepOutcome::Value(e) => return Ok(EvalResult::Value(e)),
            StepOutcome::OpCall {
                instance,
                op,
                arg,
                binder,
                body,
            } => {
                return Ok(EvalResult::OpCall {
                    instance,
                    op,
                    arg,
                    binder,
                    body,
                })
            }
            StepOutcome::Stuck(reason) => return Err(EvalError::Stuck { term: cur, reason }),
        }
    }
}

/// Every intermediate computation of a small-step run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<Comp>,
    pub outcome: EvalOutcome,
    pub steps: usize,
}

pub fn trace(table: &EffectTable, c: &Comp, fuel: usize) -> Trace {
    let mut entries = vec![c.clone()];
    let mut steps = 0;
    let outcome = loop {
        let cur = entries.last().unwrap();
        match step(table, cur) {
            StepOutcome::Stepped(next) => {
                if steps == fuel {
                    break Err(EvalError::Timeout);
                }
                steps += 1;
                entries.push(next);
            }
            StepOutcome::Stuck(reason) => {
                break Err(EvalError::Stuck {
                    term: cur.clone(),
                    reason,
                })
            }
            _ => break Ok(EvalResult::from_comp(cur).expect("terminal computation")),
        }
    };
    Trace {
        entries,
        outcome,
        steps,
    }
}

impl fmt::Display for Trace {
    /// Computations separated by `~>` lines; a failed run ends with its
    /// error.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.entries.iter().enumerate() {
            if i > 0 {
                writeln!(f, "~>")?;
            }
            writeln!(f, "{c}")?;
        }
        if let Err(e) = &self.outcome {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}
