//! Deterministic, type-directed enumeration of small well-typed computations.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use serde::Serialize;

use crate::subst::{fresh_name, NameSet};
use crate::surface::{parse_comp_in, parse_expr_in, parse_program};
use crate::syntax::{Comp, EffectTable, Expr, Name};
use crate::typing::{synth_comp, synth_expr, TypingContext};
use crate::types::{subtype_pure, DirtyType, Operation, PureType};

use super::state::mk_state_handler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Construct {
    Val,
    Op,
    Let,
    If,
    Match,
    /// Application of a function variable, or of a function literal when the
    /// shape lists parameter types.
    App,
    With,
    LetRec,
    Absurd,
}

/// A recursive definition `let rec func param : A -> C = def` drawn whole
/// from a palette.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecDef {
    pub func: Name,
    pub param: Name,
    pub param_type: PureType,
    pub result_type: DirtyType,
    pub def: Comp,
}

/// A grammar restriction. Handler literals and recursive definitions come
/// from fixed palettes and do not count towards the size; every other
/// computation node counts one.
#[derive(Clone, Debug)]
pub struct Shape {
    pub name: String,
    pub constructs: BTreeSet<Construct>,
    pub ops: Vec<Operation>,
    /// Closed literals usable wherever an expression is expected.
    pub atoms: Vec<Expr>,
    /// Parameter types of function literals.
    pub param_types: Vec<PureType>,
    pub handlers: Vec<Expr>,
    pub recursive: Vec<RecDef>,
    pub absurd_types: Vec<DirtyType>,
}

impl Shape {
    pub fn new(name: impl Into<String>, constructs: impl IntoIterator<Item = Construct>) -> Self {
        Shape {
            name: name.into(),
            constructs: constructs.into_iter().collect(),
            ops: Vec::new(),
            atoms: Vec::new(),
            param_types: Vec::new(),
            handlers: Vec::new(),
            recursive: Vec::new(),
            absurd_types: Vec::new(),
        }
    }

    pub fn ops<I: IntoIterator<Item = (S, S)>, S: Into<Name>>(mut self, ops: I) -> Self {
        self.ops = ops.into_iter().map(|(i, o)| Operation::new(i, o)).collect();
        self
    }

    pub fn atoms(mut self, atoms: impl IntoIterator<Item = Expr>) -> Self {
        self.atoms = atoms.into_iter().collect();
        self
    }

    fn allows(&self, c: Construct) -> bool {
        self.constructs.contains(&c)
    }
}

/// Closed well-typed computations of size `1..=size`, ordered by size and
/// then by construction.
pub fn enumerate_computations(table: &EffectTable, shape: &Shape, size: usize) -> Vec<Comp> {
    enumerate_open(table, shape, size, &TypingContext::new())
}

/// Like [`enumerate_computations`], with free variables from `scope`.
pub fn enumerate_open(table: &EffectTable, shape: &Shape, size: usize, scope: &TypingContext) -> Vec<Comp> {
    let mut g = Generator {
        table,
        shape,
        memo: HashMap::new(),
    };
    let scope: Scope = scope.entries().to_vec();
    (1..=size)
        .flat_map(|n| g.exact(n, &scope).iter().map(|(c, _)| c.clone()).collect::<Vec<_>>())
        .collect()
}

type Scope = Vec<(Name, PureType)>;
type Typed = (Comp, DirtyType);

struct Generator<'a> {
    table: &'a EffectTable,
    shape: &'a Shape,
    memo: HashMap<(usize, Scope), Rc<Vec<Typed>>>,
}

impl Generator<'_> {
    fn ctx(scope: &Scope) -> TypingContext {
        scope
            .iter()
            .fold(TypingContext::new(), |ctx, (x, t)| ctx.with(x.clone(), t.clone()))
    }

    fn binder(scope: &Scope, prefix: &str) -> Name {
        let taken: NameSet = scope.iter().map(|(x, _)| x.clone()).collect();
        fresh_name(&format!("{prefix}{}", scope.len() + 1), &taken)
    }

    fn extend(scope: &Scope, x: &Name, ty: PureType) -> Scope {
        let mut s = scope.clone();
        s.push((x.clone(), ty));
        s
    }

    /// Literals, then variables innermost first.
    fn values(&self, scope: &Scope) -> Vec<(Expr, PureType)> {
        let ctx = Self::ctx(scope);
        let mut out: Vec<(Expr, PureType)> = self
            .shape
            .atoms
            .iter()
            .filter_map(|e| synth_expr(self.table, &ctx, e).ok().map(|t| (e.clone(), t)))
            .collect();
        let mut seen = HashSet::new();
        for (x, t) in scope.iter().rev() {
            if seen.insert(x.clone()) {
                out.push((Expr::Var(x.clone()), t.clone()));
            }
        }
        out
    }

    fn values_of(&self, scope: &Scope, ty: &PureType) -> Vec<Expr> {
        self.values(scope)
            .into_iter()
            .filter(|(_, t)| subtype_pure(t, ty))
            .map(|(e, _)| e)
            .collect()
    }

    fn exact(&mut self, n: usize, scope: &Scope) -> Rc<Vec<Typed>> {
        let key = (n, scope.clone());
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let candidates = self.candidates(n, scope);
        let ctx = Self::ctx(scope);
        let out: Vec<Typed> = candidates
            .into_iter()
            .filter_map(|c| synth_comp(self.table, &ctx, &c).ok().map(|t| (c, t)))
            .collect();
        let out = Rc::new(out);
        self.memo.insert(key, out.clone());
        out
    }

    fn candidates(&mut self, n: usize, scope: &Scope) -> Vec<Comp> {
        let mut out = Vec::new();
        let shape = self.shape;
        if n == 1 {
            if shape.allows(Construct::Val) {
                out.extend(self.values(scope).into_iter().map(|(e, _)| Comp::Val(e)));
            }
            if shape.allows(Construct::App) {
                for (f, t) in self.values(scope) {
                    if let PureType::Arrow(dom, _) = t {
                        for a in self.values_of(scope, &dom) {
                            out.push(Comp::app(f.clone(), a));
                        }
                    }
                }
            }
            if shape.allows(Construct::Absurd) {
                for (v, t) in self.values(scope) {
                    if t == PureType::Empty {
                        for ty in &shape.absurd_types {
                            out.push(Comp::Absurd {
                                ty: ty.clone(),
                                expr: v.clone(),
                            });
                        }
                    }
                }
            }
            return out;
        }
        if shape.allows(Construct::Op) {
            for o in &shape.ops {
                let Some((_, sig)) = self.table.lookup_op(&o.op) else { continue };
                let y = Self::binder(scope, "y");
                let inner = Self::extend(scope, &y, sig.result.clone());
                let bodies = self.exact(n - 1, &inner);
                for arg in self.values_of(scope, &sig.param) {
                    for (body, _) in bodies.iter() {
                        out.push(Comp::op(Expr::inst(&o.instance), &o.op, arg.clone(), y.clone(), body.clone()));
                    }
                }
            }
        }
        if shape.allows(Construct::Let) {
            let x = Self::binder(scope, "x");
            for k in 1..n - 1 {
                for (c1, t1) in self.exact(k, scope).iter() {
                    let inner = Self::extend(scope, &x, t1.pure.clone());
                    for (c2, _) in self.exact(n - 1 - k, &inner).iter() {
                        out.push(Comp::let_(x.clone(), c1.clone(), c2.clone()));
                    }
                }
            }
        }
        if shape.allows(Construct::If) {
            let conds = self.values_of(scope, &PureType::Bool);
            for k in 1..n - 1 {
                let thens = self.exact(k, scope);
                let elses = self.exact(n - 1 - k, scope);
                for e in &conds {
                    for (c1, _) in thens.iter() {
                        for (c2, _) in elses.iter() {
                            out.push(Comp::if_(e.clone(), c1.clone(), c2.clone()));
                        }
                    }
                }
            }
        }
        if shape.allows(Construct::Match) {
            let scrutinees = self.values_of(scope, &PureType::Nat);
            let m = Self::binder(scope, "m");
            let inner = Self::extend(scope, &m, PureType::Nat);
            for k in 1..n - 1 {
                let zeros = self.exact(k, scope);
                let succs = self.exact(n - 1 - k, &inner);
                for e in &scrutinees {
                    for (c1, _) in zeros.iter() {
                        for (c2, _) in succs.iter() {
                            out.push(Comp::match_(e.clone(), c1.clone(), m.clone(), c2.clone()));
                        }
                    }
                }
            }
        }
        if shape.allows(Construct::App) {
            let a = Self::binder(scope, "a");
            for ty in &shape.param_types {
                let inner = Self::extend(scope, &a, ty.clone());
                let bodies = self.exact(n - 1, &inner);
                for arg in self.values_of(scope, ty) {
                    for (body, _) in bodies.iter() {
                        out.push(Comp::app(Expr::fun(a.clone(), ty.clone(), body.clone()), arg.clone()));
                    }
                }
            }
        }
        if shape.allows(Construct::With) {
            let bodies = self.exact(n - 1, scope);
            for h in &shape.handlers {
                for (body, _) in bodies.iter() {
                    out.push(Comp::with(h.clone(), body.clone()));
                }
            }
        }
        if shape.allows(Construct::LetRec) {
            for d in &shape.recursive {
                let f_ty = PureType::arrow(d.param_type.clone(), d.result_type.clone());
                let inner = Self::extend(scope, &d.func, f_ty);
                for (body, _) in self.exact(n - 1, &inner).iter() {
                    out.push(Comp::let_rec(
                        d.func.clone(),
                        d.param.clone(),
                        d.param_type.clone(),
                        d.result_type.clone(),
                        d.def.clone(),
                        body.clone(),
                    ));
                }
            }
        }
        out
    }
}

/// Effects used by the standard corpus: two references, a binary choice
/// and an exception.
pub const LAB_PREAMBLE: &str = "\
effect ref { lookup : unit -> nat; update : nat -> unit }
effect choice { decide : unit -> bool }
effect exc { raise : unit -> empty }
instance i, j : ref
instance ch : choice
instance ex : exc
";

pub fn lab_table() -> EffectTable {
    parse_program(&format!("{LAB_PREAMBLE}do val ()"))
        .expect("lab preamble parses")
        .table
}

const HANDLERS: &[&str] = &[
    "handler { val x : nat -> val x | i#lookup(u; k) -> k 1 }",
    "handler[nat ! {}] { val x : nat -> val x | i#lookup(u; k) -> k 0 | i#update(s; k) -> k () }",
    "handler { val x : unit -> val x | i#update(s; k) -> k () }",
    "handler { val x : bool -> val x | ch#decide(u; k) -> k true }",
    "handler { val x : nat -> val x | ch#decide(u; k) -> let a = k true in k false }",
    "handler { val x : nat -> val (succ x) | ex#raise(u; k) -> val 0 }",
    "handler { val x : unit -> val x }",
];

const RECURSIVE: &[&str] = &[
    "let rec f n : nat -> nat ! {} = match n with { 0 -> val 0 | succ m -> f m } in val ()",
    "let rec f n : nat -> unit ! {i#update} = match n with { 0 -> val () | succ m -> i#update(m; _. f m) } in val ()",
    "let rec f n : nat -> nat ! {} = f n in val ()",
];

fn parse_handler(table: &EffectTable, text: &str) -> Expr {
    parse_expr_in(table, &[], text).expect("palette handler parses")
}

fn parse_rec(table: &EffectTable, text: &str) -> RecDef {
    match parse_comp_in(table, &[], text).expect("palette definition parses") {
        Comp::LetRec {
            func,
            param,
            param_type,
            result_type,
            def,
            ..
        } => RecDef {
            func,
            param,
            param_type,
            result_type,
            def: *def,
        },
        other => panic!("palette entry is not a recursive definition: {other}"),
    }
}

/// The shapes whose union is the standard corpus. They expect
/// [`lab_table`].
pub fn standard_shapes(table: &EffectTable) -> Vec<Shape> {
    use Construct::*;
    let small = [Expr::Unit, Expr::True, Expr::False, Expr::nat(0), Expr::nat(1)];
    let mut pure = Shape::new("pure", [Val, Let, If, Match, App]).atoms(small.clone());
    pure.param_types = vec![PureType::Nat, PureType::Bool];

    let state = Shape::new("state", [Val, Let, Op])
        .ops([("i", "lookup"), ("i", "update"), ("j", "lookup"), ("j", "update")])
        .atoms([Expr::Unit, Expr::nat(0), Expr::nat(1)]);

    let mut control = Shape::new("control", [Val, Let, If, Op, Absurd])
        .ops([("ch", "decide"), ("ex", "raise")])
        .atoms([Expr::Unit, Expr::True, Expr::nat(0)]);
    control.absurd_types = [PureType::Nat, PureType::Bool, PureType::Unit]
        .into_iter()
        .map(DirtyType::pure)
        .collect();

    let mut handlers = Shape::new("handlers", [Val, Let, With, Op, App])
        .ops([("i", "lookup"), ("i", "update"), ("ch", "decide"), ("ex", "raise")])
        .atoms([Expr::Unit, Expr::True, Expr::nat(0), Expr::nat(1)]);
    handlers.handlers = HANDLERS.iter().map(|h| parse_handler(table, h)).collect();
    handlers
        .handlers
        .push(Expr::handler(mk_state_handler("i", PureType::Nat)));

    let mut recursion = Shape::new("recursion", [Val, App, Match, LetRec, Let, Op])
        .ops([("i", "update")])
        .atoms([Expr::Unit, Expr::nat(0), Expr::nat(1)]);
    recursion.recursive = RECURSIVE.iter().map(|d| parse_rec(table, d)).collect();

    vec![pure, state, control, handlers, recursion]
}

/// The union of all standard shapes up to `size`, without duplicates, in
/// shape order.
pub fn standard_corpus(table: &EffectTable, size: usize) -> Vec<Comp> {
    let mut seen = HashSet::new();
    standard_shapes(table)
        .iter()
        .flat_map(|s| enumerate_computations(table, s, size))
        .filter(|c| seen.insert(c.clone()))
        .collect()
}
