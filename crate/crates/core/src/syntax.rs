//! Abstract syntax of core Eff: inert expressions, effectful computations,
//! handlers, and the effect/instance table the terms are interpreted against.

use std::fmt;
use std::sync::Arc;

use crate::types::{DirtyType, PureType, Region};

pub type Name = String;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(Name),
    True,
    False,
    Zero,
    Succ(Box<Expr>),
    Unit,
    Fun(Name, PureType, Box<Comp>),
    Inst(Name),
    Handler(Arc<Handler>),
}

/// `handler val x : A -> c_v | ocs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Handler {
    pub value_binder: Name,
    pub value_type: PureType,
    pub value_body: Comp,
    pub cases: OpCases,
}

/// Operation cases, kept as an ordered list ending in `nil_C`. The outgoing
/// annotation on `nil` is optional; when absent the checker synthesizes it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpCases {
    pub cases: Vec<OpCase>,
    pub outgoing: Option<DirtyType>,
}

/// `e#op(x; k) -> c`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OpCase {
    pub instance: Expr,
    pub op: Name,
    pub param: Name,
    pub kont: Name,
    pub body: Comp,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Comp {
    Val(Expr),
    /// `e1#op(e2; y. c)`
    Op {
        instance: Expr,
        op: Name,
        arg: Expr,
        binder: Name,
        body: Box<Comp>,
    },
    With {
        handler: Expr,
        body: Box<Comp>,
    },
    If {
        cond: Expr,
        then_branch: Box<Comp>,
        else_branch: Box<Comp>,
    },
    Absurd {
        ty: DirtyType,
        expr: Expr,
    },
    App(Expr, Expr),
    Match {
        scrutinee: Expr,
        zero: Box<Comp>,
        binder: Name,
        succ: Box<Comp>,
    },
    Let {
        binder: Name,
        bound: Box<Comp>,
        body: Box<Comp>,
    },
    LetRec {
        func: Name,
        param: Name,
        param_type: PureType,
        result_type: DirtyType,
        def: Box<Comp>,
        body: Box<Comp>,
    },
}

impl Expr {
    pub fn var(x: impl Into<Name>) -> Self {
        Expr::Var(x.into())
    }

    pub fn inst(i: impl Into<Name>) -> Self {
        Expr::Inst(i.into())
    }

    pub fn succ(e: Expr) -> Self {
        Expr::Succ(Box::new(e))
    }

    /// `succ^n 0`
    pub fn nat(n: u64) -> Self {
        (0..n).fold(Expr::Zero, |e, _| Expr::succ(e))
    }

    pub fn fun(x: impl Into<Name>, ty: PureType, body: Comp) -> Self {
        Expr::Fun(x.into(), ty, Box::new(body))
    }

    pub fn handler(h: Handler) -> Self {
        Expr::Handler(Arc::new(h))
    }

    /// The numeral denoted by a closed `succ^n 0` chain.
    pub fn as_nat(&self) -> Option<u64> {
        let mut n = 0;
        let mut e = self;
        loop {
            match e {
                Expr::Zero => return Some(n),
                Expr::Succ(inner) => {
                    n += 1;
                    e = inner;
                }
                _ => return None,
            }
        }
    }
}

impl Comp {
    pub fn val(e: Expr) -> Self {
        Comp::Val(e)
    }

    pub fn op(
        instance: Expr,
        op: impl Into<Name>,
        arg: Expr,
        binder: impl Into<Name>,
        body: Comp,
    ) -> Self {
        Comp::Op {
            instance,
            op: op.into(),
            arg,
            binder: binder.into(),
            body: Box::new(body),
        }
    }

    /// Generic effect `e#op e'`, i.e. `e#op(e'; y. val y)`.
    pub fn generic(instance: Expr, op: impl Into<Name>, arg: Expr, binder: impl Into<Name>) -> Self {
        let y = binder.into();
        Comp::op(instance, op, arg, y.clone(), Comp::Val(Expr::Var(y)))
    }

    pub fn with(handler: Expr, body: Comp) -> Self {
        Comp::With {
            handler,
            body: Box::new(body),
        }
    }

    pub fn if_(cond: Expr, then_branch: Comp, else_branch: Comp) -> Self {
        Comp::If {
            cond,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        }
    }

    pub fn app(f: Expr, a: Expr) -> Self {
        Comp::App(f, a)
    }

    pub fn match_(scrutinee: Expr, zero: Comp, binder: impl Into<Name>, succ: Comp) -> Self {
        Comp::Match {
            scrutinee,
            zero: Box::new(zero),
            binder: binder.into(),
            succ: Box::new(succ),
        }
    }

    pub fn let_(binder: impl Into<Name>, bound: Comp, body: Comp) -> Self {
        Comp::Let {
            binder: binder.into(),
            bound: Box::new(bound),
            body: Box::new(body),
        }
    }

    pub fn let_rec(
        func: impl Into<Name>,
        param: impl Into<Name>,
        param_type: PureType,
        result_type: DirtyType,
        def: Comp,
        body: Comp,
    ) -> Self {
        Comp::LetRec {
            func: func.into(),
            param: param.into(),
            param_type,
            result_type,
            def: Box::new(def),
            body: Box::new(body),
        }
    }

    /// Number of computation nodes, counting those nested inside functions
    /// and handlers.
    pub fn size(&self) -> usize {
        fn expr_size(e: &Expr) -> usize {
            match e {
                Expr::Succ(e) => expr_size(e),
                Expr::Fun(_, _, c) => c.size(),
                Expr::Handler(h) => {
                    h.value_body.size()
                        + h.cases
                            .cases
                            .iter()
                            .map(|c| expr_size(&c.instance) + c.body.size())
                            .sum::<usize>()
                }
                _ => 0,
            }
        }
        1 + match self {
            Comp::Val(e) => expr_size(e),
            Comp::Op {
                instance, arg, body, ..
            } => expr_size(instance) + expr_size(arg) + body.size(),
            Comp::With { handler, body } => expr_size(handler) + body.size(),
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => expr_size(cond) + then_branch.size() + else_branch.size(),
            Comp::Absurd { expr, .. } => expr_size(expr),
            Comp::App(f, a) => expr_size(f) + expr_size(a),
            Comp::Match {
                scrutinee,
                zero,
                succ,
                ..
            } => expr_size(scrutinee) + zero.size() + succ.size(),
            Comp::Let { bound, body, .. } => bound.size() + body.size(),
            Comp::LetRec { def, body, .. } => def.size() + body.size(),
        }
    }
}

/// Terminal results of evaluation: `val e` or `ι#op(e; y. c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalResult {
    Value(Expr),
    OpCall {
        instance: Name,
        op: Name,
        arg: Expr,
        binder: Name,
        body: Comp,
    },
}

impl EvalResult {
    pub fn into_comp(self) -> Comp {
        match self {
            EvalResult::Value(e) => Comp::Val(e),
            EvalResult::OpCall {
                instance,
                op,
                arg,
                binder,
                body,
            } => Comp::op(Expr::Inst(instance), op, arg, binder, body),
        }
    }

    pub fn to_comp(&self) -> Comp {
        self.clone().into_comp()
    }

    /// Reads a terminal computation back as a result.
    pub fn from_comp(c: &Comp) -> Option<EvalResult> {
        match c {
            Comp::Val(e) => Some(EvalResult::Value(e.clone())),
            Comp::Op {
                instance: Expr::Inst(i),
                op,
                arg,
                binder,
                body,
            } => Some(EvalResult::OpCall {
                instance: i.clone(),
                op: op.clone(),
                arg: arg.clone(),
                binder: binder.clone(),
                body: (**body).clone(),
            }),
            _ => None,
        }
    }
}

/// Signature entry `op : A -> B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpSig {
    pub name: Name,
    pub param: PureType,
    pub result: PureType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectDecl {
    pub name: Name,
    pub ops: Vec<OpSig>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceDecl {
    pub name: Name,
    pub effect: Name,
}

/// Declared effects with their signatures, and the fixed instance sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EffectTable {
    pub effects: Vec<EffectDecl>,
    pub instances: Vec<InstanceDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("effect `{0}` is declared twice")]
    DuplicateEffect(Name),
    #[error("operation `{op}` is declared by both `{first}` and `{second}`")]
    SharedOperation { op: Name, first: Name, second: Name },
    #[error("instance `{0}` is declared twice")]
    DuplicateInstance(Name),
    #[error("instance `{instance}` has undeclared effect `{effect}`")]
    UnknownEffect { instance: Name, effect: Name },
    #[error("signature of `{op}`: {message}")]
    BadSignature { op: Name, message: String },
}

impl EffectTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn effect(&self, name: &str) -> Option<&EffectDecl> {
        self.effects.iter().find(|e| e.name == name)
    }

    pub fn instance_effect(&self, instance: &str) -> Option<&str> {
        self.instances
            .iter()
            .find(|i| i.name == instance)
            .map(|i| i.effect.as_str())
    }

    pub fn is_instance(&self, name: &str) -> bool {
        self.instance_effect(name).is_some()
    }

    /// `I_E`
    pub fn instances_of(&self, effect: &str) -> Region {
        self.instances
            .iter()
            .filter(|i| i.effect == effect)
            .map(|i| i.name.clone())
            .collect()
    }

    /// The effect owning `op` and its signature entry.
    pub fn lookup_op(&self, op: &str) -> Option<(&EffectDecl, &OpSig)> {
        self.effects
            .iter()
            .find_map(|e| e.ops.iter().find(|s| s.name == op).map(|s| (e, s)))
    }

    /// Checks the table's own invariants: unique names, operations owned by
    /// at most one effect, instances of declared effects, and signatures
    /// mentioning only declared effects and instances.
    pub fn validate(&self) -> Result<(), TableError> {
        for (i, e) in self.effects.iter().enumerate() {
            if self.effects[..i].iter().any(|p| p.name == e.name) {
                return Err(TableError::DuplicateEffect(e.name.clone()));
            }
            for (j, s) in e.ops.iter().enumerate() {
                let earlier = self.effects[..i]
                    .iter()
                    .find(|p| p.ops.iter().any(|o| o.name == s.name))
                    .map(|p| p.name.clone())
                    .or_else(|| {
                        e.ops[..j]
                            .iter()
                            .any(|o| o.name == s.name)
                            .then(|| e.name.clone())
                    });
                if let Some(first) = earlier {
                    return Err(TableError::SharedOperation {
                        op: s.name.clone(),
                        first,
                        second: e.name.clone(),
                    });
                }
            }
        }
        for (i, inst) in self.instances.iter().enumerate() {
            if self.instances[..i].iter().any(|p| p.name == inst.name) {
                return Err(TableError::DuplicateInstance(inst.name.clone()));
            }
            if self.effect(&inst.effect).is_none() {
                return Err(TableError::UnknownEffect {
                    instance: inst.name.clone(),
                    effect: inst.effect.clone(),
                });
            }
        }
        for e in &self.effects {
            for s in &e.ops {
                for ty in [&s.param, &s.result] {
                    self.check_pure(ty).map_err(|message| TableError::BadSignature {
                        op: s.name.clone(),
                        message,
                    })?;
                }
            }
        }
        Ok(())
    }

    /// Well-formedness of a pure type against this table.
    pub fn check_pure(&self, ty: &PureType) -> Result<(), String> {
        match ty {
            PureType::Bool | PureType::Nat | PureType::Unit | PureType::Empty => Ok(()),
            PureType::Arrow(a, c) => {
                self.check_pure(a)?;
                self.check_dirty(c)
            }
            PureType::Effect(e, region) => {
                if self.effect(e).is_none() {
                    return Err(format!("unknown effect `{e}`"));
                }
                for i in region {
                    match self.instance_effect(i) {
                        Some(owner) if owner == e => {}
                        Some(owner) => {
                            return Err(format!("instance `{i}` belongs to `{owner}`, not `{e}`"))
                        }
                        None => return Err(format!("unknown instance `{i}`")),
                    }
                }
                Ok(())
            }
            PureType::Handler(c, d) => {
                self.check_dirty(c)?;
                self.check_dirty(d)
            }
        }
    }

    pub fn check_dirty(&self, ty: &DirtyType) -> Result<(), String> {
        self.check_pure(&ty.pure)?;
        for o in &ty.dirt {
            let Some(effect) = self.instance_effect(&o.instance) else {
                return Err(format!("unknown instance `{}` in dirt", o.instance));
            };
            match self.lookup_op(&o.op) {
                Some((e, _)) if e.name == effect => {}
                Some((e, _)) => {
                    return Err(format!(
                        "`{o}` pairs an instance of `{effect}` with an operation of `{}`",
                        e.name
                    ))
                }
                None => return Err(format!("unknown operation `{}` in dirt", o.op)),
            }
        }
        Ok(())
    }

    /// Every operation `ι#op` this table makes available, in declaration order.
    pub fn all_operations(&self) -> Vec<crate::types::Operation> {
        let mut out = Vec::new();
        for inst in &self.instances {
            if let Some(e) = self.effect(&inst.effect) {
                for s in &e.ops {
                    out.push(crate::types::Operation::new(inst.name.clone(), s.name.clone()));
                }
            }
        }
        out
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::surface::print_expr(self))
    }
}

impl fmt::Display for Comp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::surface::print_comp(self))
    }
}

impl fmt::Display for EvalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::surface::print_comp(&self.to_comp()))
    }
}
