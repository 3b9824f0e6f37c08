//! Law suites: each law is instantiated over enumerated bodies and state
//! values, and every instance is handed to the oracle.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::subst::{fresh_name, Term};
use crate::surface::parse_expr_in;
use crate::syntax::{Comp, EffectTable, Expr};
use crate::typing::{synth_comp, TypingContext};
use crate::types::PureType;

use super::enumerate::{enumerate_computations, enumerate_open, standard_corpus, Construct, Shape};
use super::oracle::{op_equiv, EquivVerdict};
use super::state::mk_h;

/// The single instance of the one-reference laws, and the pair used by the
/// two-reference laws. All three are `ref` instances of [`super::lab_table`].
pub const IOTA: &str = "i";
pub const IOTA1: &str = "i";
pub const IOTA2: &str = "j";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    /// The three equations for `H` on lookup, update and values.
    Basics,
    /// The four one-reference equations and the three two-reference
    /// transpositions.
    SevenEquations,
    EtaLet,
    Commutativity,
    /// An operation forwarded by an inner handler is answered by the outer
    /// state handler.
    Hoist,
}

impl Law {
    pub const ALL: [Law; 5] = [
        Law::Basics,
        Law::SevenEquations,
        Law::EtaLet,
        Law::Commutativity,
        Law::Hoist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Law::Basics => "basics",
            Law::SevenEquations => "seven-equations",
            Law::EtaLet => "eta-let",
            Law::Commutativity => "commutativity",
            Law::Hoist => "hoist",
        }
    }

    /// Body size used when none is requested.
    pub fn default_size(self) -> usize {
        match self {
            Law::Basics | Law::SevenEquations | Law::Hoist => 2,
            Law::EtaLet | Law::Commutativity => 3,
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Law {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Law::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Law::ALL.iter().map(|l| l.name()).collect();
                format!("unknown law `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Clone, Debug)]
pub struct LawConfig {
    /// Size bound for enumerated bodies; `None` uses the law's default.
    pub size: Option<usize>,
    /// Initial states and update arguments.
    pub states: Vec<u64>,
    pub probe_depth: u64,
    pub fuel: usize,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig {
            size: None,
            states: vec![0, 1, 2],
            probe_depth: 3,
            fuel: 10_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LawInstance {
    pub index: usize,
    pub equation: String,
    pub left: String,
    pub right: String,
    #[serde(flatten)]
    pub verdict: EquivVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct LawReport {
    pub law: Law,
    pub size: usize,
    pub instances: Vec<LawInstance>,
    pub total: usize,
    pub equivalent: usize,
    pub distinguished: usize,
    pub inconclusive: usize,
    /// Instances whose verdict changed when the two state handlers were
    /// nested the other way round.
    pub nesting_mismatches: usize,
}

impl LawReport {
    fn new(law: Law, size: usize, instances: Vec<LawInstance>, nesting_mismatches: usize) -> Self {
        let count = |label: &str| instances.iter().filter(|i| i.verdict.label() == label).count();
        LawReport {
            law,
            size,
            total: instances.len(),
            equivalent: count("equivalent"),
            distinguished: count("distinguished"),
            inconclusive: count("inconclusive"),
            nesting_mismatches,
            instances,
        }
    }

    pub fn passed(&self) -> bool {
        self.distinguished == 0 && self.nesting_mismatches == 0
    }

    pub fn summary(&self) -> String {
        format!(
            "total={} eq={} dist={} inc={}",
            self.total, self.equivalent, self.distinguished, self.inconclusive
        )
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for inst in &self.instances {
            match &inst.verdict {
                EquivVerdict::Equivalent => writeln!(f, "{} {} equivalent", self.law, inst.index)?,
                other => writeln!(
                    f,
                    "{} {} {} [{}] {} | {}",
                    self.law, inst.index, other, inst.equation, inst.left, inst.right
                )?,
            }
        }
        if self.law == Law::SevenEquations {
            writeln!(f, "{} nesting-swap mismatches={}", self.law, self.nesting_mismatches)?;
        }
        writeln!(f, "{} {}", self.law, self.summary())
    }
}

/// Runs one law over its instances. `table` must declare `ref` instances
/// `i` and `j`, as [`super::lab_table`] does.
pub fn law_suite(table: &EffectTable, law: Law, cfg: &LawConfig) -> LawReport {
    let size = cfg.size.unwrap_or(law.default_size());
    let b = Builder { table, cfg, size };
    match law {
        Law::Basics => b.finish(law, b.basics(), 0),
        Law::SevenEquations => {
            let mut pairs = b.one_reference();
            let two = b.two_references(false);
            let swapped = b.two_references(true);
            pairs.extend(two.iter().cloned());
            let mut report = b.finish(law, pairs, 0);
            let offset = report.instances.len() - two.len();
            let swapped = b.judge(swapped);
            report.nesting_mismatches = report.instances[offset..]
                .iter()
                .zip(&swapped)
                .filter(|(a, v)| a.verdict.label() != v.label())
                .count();
            report
        }
        Law::EtaLet => b.finish(law, b.eta_let(), 0),
        Law::Commutativity => b.finish(law, b.commutativity(), 0),
        Law::Hoist => b.finish(law, b.hoist(), 0),
    }
}

#[derive(Clone)]
struct Pair {
    equation: &'static str,
    left: Comp,
    right: Comp,
}

struct Builder<'a> {
    table: &'a EffectTable,
    cfg: &'a LawConfig,
    size: usize,
}

fn body_shape(ops: &[(&str, &str)]) -> Shape {
    Shape::new("law-body", [Construct::Val, Construct::Let, Construct::Op])
        .ops(ops.iter().copied())
        .atoms([Expr::Unit, Expr::nat(0), Expr::nat(1)])
}

const ONE_REF: &[(&str, &str)] = &[(IOTA, "lookup"), (IOTA, "update")];
const TWO_REFS: &[(&str, &str)] = &[
    (IOTA1, "lookup"),
    (IOTA1, "update"),
    (IOTA2, "lookup"),
    (IOTA2, "update"),
];

impl Builder<'_> {
    fn judge(&self, pairs: Vec<Pair>) -> Vec<EquivVerdict> {
        pairs
            .par_iter()
            .map(|p| op_equiv(self.table, &p.left, &p.right, self.cfg.probe_depth, self.cfg.fuel))
            .collect()
    }

    fn finish(&self, law: Law, pairs: Vec<Pair>, nesting_mismatches: usize) -> LawReport {
        let verdicts = self.judge(pairs.clone());
        let instances = pairs
            .into_iter()
            .zip(verdicts)
            .enumerate()
            .map(|(index, (p, verdict))| LawInstance {
                index,
                equation: p.equation.to_string(),
                left: p.left.to_string(),
                right: p.right.to_string(),
                verdict,
            })
            .collect();
        LawReport::new(law, self.size, instances, nesting_mismatches)
    }

    fn states(&self) -> Vec<Expr> {
        self.cfg.states.iter().map(|&n| Expr::nat(n)).collect()
    }

    /// Bodies over `ops` with the given free nat variables.
    fn bodies(&self, ops: &[(&str, &str)], free: &[&str]) -> Vec<Comp> {
        let scope = free
            .iter()
            .fold(TypingContext::new(), |ctx, x| ctx.with(*x, PureType::Nat));
        enumerate_open(self.table, &body_shape(ops), self.size, &scope)
    }

    fn h(&self, c: &Comp, e: &Expr, instance: &str) -> Option<Comp> {
        mk_h(self.table, c, e, instance).ok()
    }

    fn hh(&self, c: &Comp, e1: &Expr, e2: &Expr, swapped: bool) -> Option<Comp> {
        if swapped {
            self.h(&self.h(c, e1, IOTA1)?, e2, IOTA2)
        } else {
            self.h(&self.h(c, e2, IOTA2)?, e1, IOTA1)
        }
    }

    fn pair(&self, equation: &'static str, left: Option<Comp>, right: Option<Comp>) -> Option<Pair> {
        Some(Pair {
            equation,
            left: left?,
            right: right?,
        })
    }

    fn basics(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        let states = self.states();
        let open = self.bodies(ONE_REF, &["y"]);
        let closed = self.bodies(ONE_REF, &[]);
        for c in &open {
            for e in &states {
                let lhs = Comp::op(Expr::inst(IOTA), "lookup", Expr::Unit, "y", c.clone());
                out.extend(self.pair("lookup", self.h(&lhs, e, IOTA), self.h(&c.subst(e, "y"), e, IOTA)));
            }
        }
        for c in &closed {
            for e in &states {
                for e2 in &states {
                    let lhs = Comp::op(Expr::inst(IOTA), "update", e2.clone(), "_", c.clone());
                    out.extend(self.pair("update", self.h(&lhs, e, IOTA), self.h(c, e2, IOTA)));
                }
            }
        }
        let values = [Expr::Unit, Expr::True, Expr::False]
            .into_iter()
            .chain(self.states());
        for v in values {
            for e in &states {
                out.extend(self.pair("value", self.h(&Comp::val(v.clone()), e, IOTA), Some(Comp::val(v.clone()))));
            }
        }
        out
    }

    fn one_reference(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        let states = self.states();
        let lookup = |y: &str, c: Comp| Comp::op(Expr::inst(IOTA), "lookup", Expr::Unit, y, c);
        let update = |e: &Expr, c: Comp| Comp::op(Expr::inst(IOTA), "update", e.clone(), "_", c);
        let closed = self.bodies(ONE_REF, &[]);
        let in_y = self.bodies(ONE_REF, &["y"]);
        let in_yz = self.bodies(ONE_REF, &["y", "z"]);
        for e0 in &states {
            for c in &closed {
                let lhs = lookup("y", update(&Expr::var("y"), c.clone()));
                out.extend(self.pair("lookup-update", self.h(&lhs, e0, IOTA), self.h(c, e0, IOTA)));
            }
            for c in &in_yz {
                let lhs = lookup("y", lookup("z", c.clone()));
                let rhs = lookup("y", c.subst(&Expr::var("y"), "z"));
                out.extend(self.pair("lookup-lookup", self.h(&lhs, e0, IOTA), self.h(&rhs, e0, IOTA)));
            }
            for e in &states {
                for e2 in &states {
                    for c in &closed {
                        let lhs = update(e, update(e2, c.clone()));
                        let rhs = update(e2, c.clone());
                        out.extend(self.pair("update-update", self.h(&lhs, e0, IOTA), self.h(&rhs, e0, IOTA)));
                    }
                }
                for c in &in_y {
                    let lhs = update(e, lookup("y", c.clone()));
                    let rhs = update(e, c.subst(e, "y"));
                    out.extend(self.pair("update-lookup", self.h(&lhs, e0, IOTA), self.h(&rhs, e0, IOTA)));
                }
            }
        }
        out
    }

    fn two_references(&self, swapped: bool) -> Vec<Pair> {
        let mut out = Vec::new();
        let states = self.states();
        let lookup = |i: &str, y: &str, c: Comp| Comp::op(Expr::inst(i), "lookup", Expr::Unit, y, c);
        let update = |i: &str, e: &Expr, c: Comp| Comp::op(Expr::inst(i), "update", e.clone(), "_", c);
        let closed = self.bodies(TWO_REFS, &[]);
        let in_y2 = self.bodies(TWO_REFS, &["y2"]);
        let in_y1y2 = self.bodies(TWO_REFS, &["y1", "y2"]);
        for e1 in &states {
            for e2 in &states {
                let wrap = |c: &Comp| self.hh(c, e1, e2, swapped);
                for c in &in_y1y2 {
                    let lhs = lookup(IOTA1, "y1", lookup(IOTA2, "y2", c.clone()));
                    let rhs = lookup(IOTA2, "y2", lookup(IOTA1, "y1", c.clone()));
                    out.extend(self.pair("lookup-lookup-swap", wrap(&lhs), wrap(&rhs)));
                }
                for a1 in &states {
                    for a2 in &states {
                        for c in &closed {
                            let lhs = update(IOTA1, a1, update(IOTA2, a2, c.clone()));
                            let rhs = update(IOTA2, a2, update(IOTA1, a1, c.clone()));
                            out.extend(self.pair("update-update-swap", wrap(&lhs), wrap(&rhs)));
                        }
                    }
                    for c in &in_y2 {
                        let lhs = update(IOTA1, a1, lookup(IOTA2, "y2", c.clone()));
                        let rhs = lookup(IOTA2, "y2", update(IOTA1, a1, c.clone()));
                        out.extend(self.pair("update-lookup-swap", wrap(&lhs), wrap(&rhs)));
                    }
                }
            }
        }
        out
    }

    fn eta_let(&self) -> Vec<Pair> {
        standard_corpus(self.table, self.size)
            .into_iter()
            .map(|c| {
                let x = fresh_name("x", &c.free_vars());
                Pair {
                    equation: "eta-let",
                    left: Comp::let_(x.clone(), c.clone(), Comp::val(Expr::Var(x))),
                    right: c,
                }
            })
            .collect()
    }

    fn commutativity(&self) -> Vec<Pair> {
        let ctx = TypingContext::new();
        let firsts = enumerate_computations(self.table, &body_shape(&TWO_REFS[..2]), self.size);
        let seconds = enumerate_computations(self.table, &body_shape(&TWO_REFS[2..]), self.size);
        let seconds: Vec<Comp> = seconds
            .into_iter()
            .filter(|c| synth_comp(self.table, &ctx, c).is_ok())
            .collect();
        let (e1, e2) = (Expr::nat(self.cfg.states[0]), Expr::nat(*self.cfg.states.last().unwrap_or(&0)));
        let mut out = Vec::new();
        for c1 in &firsts {
            for c2 in &seconds {
                for result in ["x1", "x2"] {
                    let c = Comp::val(Expr::var(result));
                    let lhs = Comp::let_("x1", c1.clone(), Comp::let_("x2", c2.clone(), c.clone()));
                    let rhs = Comp::let_("x2", c2.clone(), Comp::let_("x1", c1.clone(), c));
                    out.extend(self.pair("commute", self.hh(&lhs, &e1, &e2, false), self.hh(&rhs, &e1, &e2, false)));
                }
            }
        }
        out
    }

    fn hoist(&self) -> Vec<Pair> {
        let inner: Vec<Expr> = [
            "handler { val x : nat -> val x }",
            "handler { val x : unit -> val x }",
            "handler { val x : nat -> val (succ x) | i#update(s; k) -> k () }",
            "handler { val x : nat -> val x | j#lookup(u; k) -> k 1 }",
        ]
        .iter()
        .map(|h| parse_expr_in(self.table, &[], h).expect("inner handler parses"))
        .collect();
        let mut out = Vec::new();
        let states = self.states();
        for h in &inner {
            for c in &self.bodies(TWO_REFS, &["y"]) {
                for e in &states {
                    let lhs = Comp::with(
                        h.clone(),
                        Comp::op(Expr::inst(IOTA), "lookup", Expr::Unit, "y", c.clone()),
                    );
                    let rhs = Comp::with(h.clone(), c.subst(e, "y"));
                    let ctx = TypingContext::new();
                    if synth_comp(self.table, &ctx, &lhs).is_err() || synth_comp(self.table, &ctx, &rhs).is_err() {
                        continue;
                    }
                    out.extend(self.pair("hoist", self.h(&lhs, e, IOTA), self.h(&rhs, e, IOTA)));
                }
            }
        }
        out
    }
}
