//! A finite operational-equivalence oracle: evaluate both sides, compare
//! ground results, and probe continuations of matching operation calls with
//! every small ground value.

use std::fmt;

use serde::Serialize;

use crate::eval::{eval_big, EvalError, EvalOutcome};
use crate::subst::Term;
use crate::syntax::{Comp, EffectTable, EvalResult, Expr};
use crate::typing::{synth_comp, TypingContext};
use crate::types::{skeleton_dirty, PureType};

/// Longest chain of operation calls followed before giving up.
const MAX_PROBE_CHAIN: usize = 24;
/// Evaluations per comparison before giving up.
const MAX_EVALUATIONS: usize = 20_000;

/// One answered operation call on the path to an observation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeStep {
    pub instance: String,
    pub op: String,
    pub answer: String,
    #[serde(skip)]
    pub value: Expr,
}

impl fmt::Display for ProbeStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{} -> {}", self.instance, self.op, self.answer)
    }
}

/// A replayable observation context: answer the listed operation calls in
/// order, then look at the outcome.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Probe {
    pub steps: Vec<ProbeStep>,
}

impl fmt::Display for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("top level");
        }
        let parts: Vec<String> = self.steps.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum EquivVerdict {
    Equivalent,
    Distinguished {
        probe: Probe,
        left: String,
        right: String,
    },
    Inconclusive {
        reason: String,
    },
}

impl EquivVerdict {
    pub fn is_distinguished(&self) -> bool {
        matches!(self, EquivVerdict::Distinguished { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            EquivVerdict::Equivalent => "equivalent",
            EquivVerdict::Distinguished { .. } => "distinguished",
            EquivVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

impl fmt::Display for EquivVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquivVerdict::Equivalent => f.write_str("equivalent"),
            EquivVerdict::Distinguished { probe, left, right } => {
                write!(f, "distinguished at {probe}: {left} vs {right}")
            }
            EquivVerdict::Inconclusive { reason } => write!(f, "inconclusive: {reason}"),
        }
    }
}

/// Compares two closed computations. `Distinguished` is always backed by a
/// probe that [`replay`] reproduces; `Equivalent` only means no probe up to
/// `probe_depth` told them apart.
pub fn op_equiv(table: &EffectTable, c1: &Comp, c2: &Comp, probe_depth: u64, fuel: usize) -> EquivVerdict {
    let ctx = TypingContext::new();
    match (synth_comp(table, &ctx, c1), synth_comp(table, &ctx, c2)) {
        (Ok(t1), Ok(t2)) if skeleton_dirty(&t1) != skeleton_dirty(&t2) => {
            return EquivVerdict::Inconclusive {
                reason: "the two sides have different skeletons".into(),
            }
        }
        (Err(e), _) | (_, Err(e)) => {
            return EquivVerdict::Inconclusive {
                reason: format!("ill-typed side: {e}"),
            }
        }
        _ => {}
    }
    let mut o = Oracle {
        table,
        probe_depth,
        fuel,
        evaluations: 0,
        path: Vec::new(),
    };
    o.compare(c1, c2)
}

/// Runs `c` under `probe`: each listed operation call is answered with the
/// recorded value. Returns the outcome at the end of the path, or the first
/// result that leaves it.
pub fn replay(table: &EffectTable, c: &Comp, probe: &Probe, fuel: usize) -> EvalOutcome {
    let mut out = eval_big(table, c, fuel)?;
    for step in &probe.steps {
        match out {
            EvalResult::OpCall {
                ref instance,
                ref op,
                ref binder,
                ref body,
                ..
            } if *instance == step.instance && *op == step.op => {
                let next = body.subst(&step.value, binder);
                out = eval_big(table, &next, fuel)?;
            }
            other => return Ok(other),
        }
    }
    Ok(out)
}

/// The closed values of a ground type used to answer operation calls.
pub fn probe_values(ty: &PureType, probe_depth: u64) -> Option<Vec<Expr>> {
    match ty {
        PureType::Unit => Some(vec![Expr::Unit]),
        PureType::Bool => Some(vec![Expr::True, Expr::False]),
        PureType::Nat => Some((0..=probe_depth).map(Expr::nat).collect()),
        PureType::Empty => Some(Vec::new()),
        _ => None,
    }
}

struct Oracle<'a> {
    table: &'a EffectTable,
    probe_depth: u64,
    fuel: usize,
    evaluations: usize,
    path: Vec<ProbeStep>,
}

enum Cmp {
    Same,
    Differ,
    Unknown(String),
}

impl Oracle<'_> {
    fn inconclusive(&self, reason: impl Into<String>) -> EquivVerdict {
        let reason = reason.into();
        if self.path.is_empty() {
            EquivVerdict::Inconclusive { reason }
        } else {
            let probe = Probe {
                steps: self.path.clone(),
            };
            EquivVerdict::Inconclusive {
                reason: format!("{reason} at {probe}"),
            }
        }
    }

    fn distinguished(&self, left: String, right: String) -> EquivVerdict {
        EquivVerdict::Distinguished {
            probe: Probe {
                steps: self.path.clone(),
            },
            left,
            right,
        }
    }

    fn eval(&mut self, c: &Comp) -> Result<EvalResult, EquivVerdict> {
        self.evaluations += 1;
        if self.evaluations > MAX_EVALUATIONS {
            return Err(self.inconclusive("probe budget exhausted"));
        }
        match eval_big(self.table, c, self.fuel) {
            Ok(r) => Ok(r),
            Err(EvalError::Timeout) => Err(self.inconclusive("fuel exhausted")),
            Err(EvalError::Stuck { reason, .. }) => Err(self.inconclusive(format!("stuck: {reason}"))),
        }
    }

    fn compare(&mut self, c1: &Comp, c2: &Comp) -> EquivVerdict {
        let (r1, r2) = match (self.eval(c1), self.eval(c2)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(v), _) | (_, Err(v)) => return v,
        };
        match (&r1, &r2) {
            (EvalResult::Value(v1), EvalResult::Value(v2)) => match compare_values(v1, v2) {
                Cmp::Same => EquivVerdict::Equivalent,
                Cmp::Differ => self.distinguished(r1.to_string(), r2.to_string()),
                Cmp::Unknown(why) => self.inconclusive(why),
            },
            (
                EvalResult::OpCall {
                    instance: i1,
                    op: o1,
                    arg: a1,
                    binder: y1,
                    body: b1,
                },
                EvalResult::OpCall {
                    instance: i2,
                    op: o2,
                    arg: a2,
                    binder: y2,
                    body: b2,
                },
            ) => {
                if i1 != i2 || o1 != o2 {
                    return self.distinguished(r1.to_string(), r2.to_string());
                }
                match compare_values(a1, a2) {
                    Cmp::Same => {}
                    Cmp::Differ => return self.distinguished(r1.to_string(), r2.to_string()),
                    Cmp::Unknown(why) => return self.inconclusive(why),
                }
                if self.path.len() >= MAX_PROBE_CHAIN {
                    return self.inconclusive("probe chain too long");
                }
                let Some((_, sig)) = self.table.lookup_op(o1) else {
                    return self.inconclusive(format!("unknown operation `{o1}`"));
                };
                let Some(answers) = probe_values(&sig.result, self.probe_depth) else {
                    return self.inconclusive(format!(
                        "continuation of {i1}#{o1} expects a non-ground value"
                    ));
                };
                let mut pending = None;
                for v in answers {
                    self.path.push(ProbeStep {
                        instance: i1.clone(),
                        op: o1.clone(),
                        answer: v.to_string(),
                        value: v.clone(),
                    });
                    let verdict = self.compare(&b1.subst(&v, y1), &b2.subst(&v, y2));
                    self.path.pop();
                    match verdict {
                        EquivVerdict::Equivalent => {}
                        d @ EquivVerdict::Distinguished { .. } => return d,
                        inc => {
                            pending.get_or_insert(inc);
                        }
                    }
                }
                pending.unwrap_or(EquivVerdict::Equivalent)
            }
            _ => self.distinguished(r1.to_string(), r2.to_string()),
        }
    }
}

/// Ground values compare structurally. Other values are only known equal
/// when they are α-equal.
fn compare_values(a: &Expr, b: &Expr) -> Cmp {
    if a.alpha_eq(b) {
        return Cmp::Same;
    }
    match (ground(a), ground(b)) {
        (true, true) => Cmp::Differ,
        _ => Cmp::Unknown(format!("cannot compare non-ground values {a} and {b}")),
    }
}

fn ground(e: &Expr) -> bool {
    matches!(e, Expr::True | Expr::False | Expr::Unit | Expr::Inst(_)) || e.as_nat().is_some()
}
