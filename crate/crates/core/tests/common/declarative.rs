//! Derivability in the declarative type system, decided by search.
//!
//! Checking is goal directed: every judgment is checked against a given type
//! and subsumption is folded into the leaves. Types that no annotation or
//! goal determines (the bound type of a `let`, the argument type of an
//! application, the handled type of a `with`) are guessed from a finite
//! universe: all types with the right skeleton whose regions range over the
//! declared instances and whose dirt ranges over the operations the program
//! can name (see [`collect_ops`]).

use std::collections::{BTreeSet, HashMap};

use coreff::syntax::{Comp, EffectTable, Expr, Handler, Name};
use coreff::types::{Dirt, DirtyType, Operation, PureType, Region, SkeletalType};

use super::{reference_skeleton, reference_subtype};

/// `Some(true)` when `c : ty` is derivable, `None` when the search ran out
/// of budget.
pub fn derivable(table: &EffectTable, c: &Comp, ty: &DirtyType) -> Option<bool> {
    let mut universe = Dirt::new();
    collect_ops(table, c, &mut universe);
    universe.extend(ty.dirt.iter().cloned());
    let mut d = Declarative {
        table,
        dirts: powerset(&universe.into_iter().collect::<Vec<_>>()),
        budget: 2_000_000,
        comp_memo: HashMap::new(),
        expr_memo: HashMap::new(),
    };
    let ok = d.comp(&mut Vec::new(), c, ty);
    (d.budget > 0).then_some(ok)
}

type Ctx = Vec<(Name, PureType)>;

/// Judgments already decided, keyed by the address of the subterm.
type Memo<T> = HashMap<(usize, Ctx, T), bool>;

struct Declarative<'a> {
    table: &'a EffectTable,
    dirts: Vec<Dirt>,
    budget: usize,
    comp_memo: Memo<DirtyType>,
    expr_memo: Memo<PureType>,
}

fn lookup<'c>(ctx: &'c Ctx, x: &str) -> Option<&'c PureType> {
    ctx.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
}

fn dirty_sub(c: &DirtyType, d: &DirtyType) -> bool {
    c.dirt.is_subset(&d.dirt) && reference_subtype(&c.pure, &d.pure)
}

fn powerset<T: Clone + Ord>(items: &[T]) -> Vec<BTreeSet<T>> {
    (0..1usize << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

/// The operations `c` can name: `ι#op` for a literal instance, every
/// instance of the effect otherwise, and all dirt in annotations.
/// Intersecting every dirt of a derivation with this set gives another
/// derivation, so guessing within it loses nothing.
fn collect_ops(table: &EffectTable, c: &Comp, out: &mut Dirt) {
    fn add(table: &EffectTable, instance: &Expr, op: &str, out: &mut Dirt) {
        if let Expr::Inst(i) = instance {
            out.insert(Operation::new(i.clone(), op));
        } else if let Some((e, _)) = table.lookup_op(op) {
            for i in table.instances_of(&e.name) {
                out.insert(Operation::new(i, op));
            }
        }
    }
    fn pure(table: &EffectTable, t: &PureType, out: &mut Dirt) {
        match t {
            PureType::Arrow(a, c) => {
                pure(table, a, out);
                dirty(table, c, out);
            }
            PureType::Handler(c, d) => {
                dirty(table, c, out);
                dirty(table, d, out);
            }
            _ => {}
        }
    }
    fn dirty(table: &EffectTable, t: &DirtyType, out: &mut Dirt) {
        out.extend(t.dirt.iter().cloned());
        pure(table, &t.pure, out);
    }
    fn expr(table: &EffectTable, e: &Expr, out: &mut Dirt) {
        match e {
            Expr::Succ(e) => expr(table, e, out),
            Expr::Fun(_, a, c) => {
                pure(table, a, out);
                comp(table, c, out);
            }
            Expr::Handler(h) => {
                pure(table, &h.value_type, out);
                comp(table, &h.value_body, out);
                if let Some(d) = &h.cases.outgoing {
                    dirty(table, d, out);
                }
                for case in &h.cases.cases {
                    add(table, &case.instance, &case.op, out);
                    expr(table, &case.instance, out);
                    comp(table, &case.body, out);
                }
            }
            _ => {}
        }
    }
    fn comp(table: &EffectTable, c: &Comp, out: &mut Dirt) {
        match c {
            Comp::Val(e) => expr(table, e, out),
            Comp::Op {
                instance, op, arg, body, ..
            } => {
                add(table, instance, op, out);
                expr(table, instance, out);
                expr(table, arg, out);
                comp(table, body, out);
            }
            Comp::With { handler, body } => {
                expr(table, handler, out);
                comp(table, body, out);
            }
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => {
                expr(table, cond, out);
                comp(table, then_branch, out);
                comp(table, else_branch, out);
            }
            Comp::Absurd { ty, expr: e } => {
                dirty(table, ty, out);
                expr(table, e, out);
            }
            Comp::App(f, a) => {
                expr(table, f, out);
                expr(table, a, out);
            }
            Comp::Match {
                scrutinee, zero, succ, ..
            } => {
                expr(table, scrutinee, out);
                comp(table, zero, out);
                comp(table, succ, out);
            }
            Comp::Let { bound, body, .. } => {
                comp(table, bound, out);
                comp(table, body, out);
            }
            Comp::LetRec {
                param_type,
                result_type,
                def,
                body,
                ..
            } => {
                pure(table, param_type, out);
                dirty(table, result_type, out);
                comp(table, def, out);
                comp(table, body, out);
            }
        }
    }
    comp(table, c, out)
}

/// Skeletal types, computed directly from the term.
fn skel_expr(table: &EffectTable, ctx: &Ctx, e: &Expr) -> Option<SkeletalType> {
    Some(match e {
        Expr::Var(x) => reference_skeleton(lookup(ctx, x)?),
        Expr::True | Expr::False => SkeletalType::Bool,
        Expr::Zero | Expr::Succ(_) => SkeletalType::Nat,
        Expr::Unit => SkeletalType::Unit,
        Expr::Fun(x, a, c) => {
            let mut inner = ctx.clone();
            inner.push((x.clone(), a.clone()));
            SkeletalType::arrow(reference_skeleton(a), skel_comp(table, &inner, c)?)
        }
        Expr::Inst(i) => SkeletalType::Effect(table.instance_effect(i)?.to_string()),
        Expr::Handler(h) => {
            let out = match &h.cases.outgoing {
                Some(d) => reference_skeleton(&d.pure),
                None => {
                    let mut inner = ctx.clone();
                    inner.push((h.value_binder.clone(), h.value_type.clone()));
                    skel_comp(table, &inner, &h.value_body)?
                }
            };
            SkeletalType::handler(reference_skeleton(&h.value_type), out)
        }
    })
}

fn skel_comp(table: &EffectTable, ctx: &Ctx, c: &Comp) -> Option<SkeletalType> {
    let bound = |x: &Name, t: PureType| {
        let mut inner = ctx.clone();
        inner.push((x.clone(), t));
        inner
    };
    match c {
        Comp::Val(e) => skel_expr(table, ctx, e),
        Comp::Op { op, binder, body, .. } => {
            let (_, sig) = table.lookup_op(op)?;
            skel_comp(table, &bound(binder, sig.result.clone()), body)
        }
        Comp::With { handler, .. } => match skel_expr(table, ctx, handler)? {
            SkeletalType::Handler(_, out) => Some(*out),
            _ => None,
        },
        Comp::If { then_branch, .. } => skel_comp(table, ctx, then_branch),
        Comp::Absurd { ty, .. } => Some(reference_skeleton(&ty.pure)),
        Comp::App(f, _) => match skel_expr(table, ctx, f)? {
            SkeletalType::Arrow(_, out) => Some(*out),
            _ => None,
        },
        Comp::Match { zero, .. } => skel_comp(table, ctx, zero),
        Comp::Let { binder, bound: c1, body } => {
            // Only the skeleton of the bound type matters for the body's.
            let sk = skel_comp(table, ctx, c1)?;
            let stand_in = representative(table, &sk)?;
            skel_comp(table, &bound(binder, stand_in), body)
        }
        Comp::LetRec {
            func,
            param_type,
            result_type,
            body,
            ..
        } => {
            let f = PureType::arrow(param_type.clone(), result_type.clone());
            skel_comp(table, &bound(func, f), body)
        }
    }
}

/// Grows with every region or dirt in a covariant position and shrinks with
/// every one in a contravariant position, so subtypes weigh no more.
fn weight(t: &PureType, sign: i64) -> i64 {
    match t {
        PureType::Effect(_, r) => sign * r.len() as i64,
        PureType::Arrow(a, c) => weight(a, -sign) + dirty_weight_signed(c, sign),
        PureType::Handler(c, d) => dirty_weight_signed(c, -sign) + dirty_weight_signed(d, sign),
        _ => 0,
    }
}

fn dirty_weight_signed(c: &DirtyType, sign: i64) -> i64 {
    sign * c.dirt.len() as i64 + weight(&c.pure, sign)
}

fn dirty_weight(c: &DirtyType) -> i64 {
    dirty_weight_signed(c, 1)
}

/// Some pure type with the given skeleton.
fn representative(table: &EffectTable, sk: &SkeletalType) -> Option<PureType> {
    Some(match sk {
        SkeletalType::Bool => PureType::Bool,
        SkeletalType::Nat => PureType::Nat,
        SkeletalType::Unit => PureType::Unit,
        SkeletalType::Empty => PureType::Empty,
        SkeletalType::Effect(e) => {
            table.effect(e)?;
            PureType::Effect(e.clone(), Region::new())
        }
        SkeletalType::Arrow(a, b) => {
            PureType::arrow(representative(table, a)?, DirtyType::pure(representative(table, b)?))
        }
        SkeletalType::Handler(a, b) => PureType::handler(
            DirtyType::pure(representative(table, a)?),
            DirtyType::pure(representative(table, b)?),
        ),
    })
}

impl Declarative<'_> {
    /// Whether some candidate `t` satisfies both `up(t)`, which only gets
    /// easier as `t` grows, and `down(t)`, which only gets harder. A
    /// candidate above one already satisfying `up` is skipped: `down` failed
    /// there, so it fails here too. Lighter candidates go first.
    fn guess<T>(
        &mut self,
        mut cands: Vec<T>,
        weigh: impl Fn(&T) -> i64,
        le: impl Fn(&T, &T) -> bool,
        mut up: impl FnMut(&mut Self, &mut Ctx, &T) -> bool,
        mut down: impl FnMut(&mut Self, &mut Ctx, &T) -> bool,
        ctx: &mut Ctx,
    ) -> bool {
        cands.sort_by_key(|t| weigh(t));
        let mut lows: Vec<T> = Vec::new();
        for t in cands {
            if lows.iter().any(|l| le(l, &t)) || !up(self, ctx, &t) {
                continue;
            }
            if down(self, ctx, &t) {
                return true;
            }
            lows.push(t);
        }
        false
    }

    fn tick(&mut self) -> bool {
        if self.budget == 0 {
            return false;
        }
        self.budget -= 1;
        true
    }

    /// Every type in the search universe with skeleton `sk`.
    fn candidates(&self, sk: &SkeletalType) -> Vec<PureType> {
        match sk {
            SkeletalType::Bool => vec![PureType::Bool],
            SkeletalType::Nat => vec![PureType::Nat],
            SkeletalType::Unit => vec![PureType::Unit],
            SkeletalType::Empty => vec![PureType::Empty],
            SkeletalType::Effect(e) => {
                let all: Vec<Name> = self.table.instances_of(e).into_iter().collect();
                powerset(&all).into_iter().map(|r| PureType::Effect(e.clone(), r)).collect()
            }
            SkeletalType::Arrow(a, b) => {
                let mut out = Vec::new();
                for a in self.candidates(a) {
                    for c in self.dirty_candidates(b) {
                        out.push(PureType::arrow(a.clone(), c));
                    }
                }
                out
            }
            SkeletalType::Handler(a, b) => {
                let mut out = Vec::new();
                for c in self.dirty_candidates(a) {
                    for d in self.dirty_candidates(b) {
                        out.push(PureType::handler(c.clone(), d));
                    }
                }
                out
            }
        }
    }

    fn dirty_candidates(&self, sk: &SkeletalType) -> Vec<DirtyType> {
        let mut out = Vec::new();
        for a in self.candidates(sk) {
            for d in &self.dirts {
                out.push(DirtyType::new(a.clone(), d.clone()));
            }
        }
        out
    }

    fn bind<R>(&mut self, ctx: &mut Ctx, binds: Vec<(Name, PureType)>, f: impl FnOnce(&mut Self, &mut Ctx) -> R) -> R {
        let n = binds.len();
        ctx.extend(binds);
        let r = f(self, ctx);
        ctx.truncate(ctx.len() - n);
        r
    }

    /// Regions at which `e` can be typed as an instance of `effect`.
    fn regions(&mut self, ctx: &mut Ctx, e: &Expr, effect: &str) -> Vec<Region> {
        let all: Vec<Name> = self.table.instances_of(effect).into_iter().collect();
        powerset(&all)
            .into_iter()
            .filter(|r| self.expr(ctx, e, &PureType::Effect(effect.to_string(), r.clone())))
            .collect()
    }

    fn expr(&mut self, ctx: &mut Ctx, e: &Expr, ty: &PureType) -> bool {
        let key = (e as *const Expr as usize, ctx.clone(), ty.clone());
        if let Some(&known) = self.expr_memo.get(&key) {
            return known;
        }
        if !self.tick() {
            return false;
        }
        let ok = self.expr_uncached(ctx, e, ty);
        self.expr_memo.insert(key, ok);
        ok
    }

    fn expr_uncached(&mut self, ctx: &mut Ctx, e: &Expr, ty: &PureType) -> bool {
        match (e, ty) {
            (Expr::Var(x), _) => lookup(ctx, x).is_some_and(|a| reference_subtype(a, ty)),
            (Expr::True | Expr::False, PureType::Bool) => true,
            (Expr::Zero, PureType::Nat) => true,
            (Expr::Succ(e), PureType::Nat) => self.expr(ctx, e, &PureType::Nat),
            (Expr::Unit, PureType::Unit) => true,
            (Expr::Fun(x, a, c), PureType::Arrow(a2, c2)) => {
                reference_subtype(a2, a) && self.bind(ctx, vec![(x.clone(), a.clone())], |d, ctx| d.comp(ctx, c, c2))
            }
            (Expr::Inst(i), PureType::Effect(e, r)) => {
                self.table.instance_effect(i) == Some(e.as_str())
                    && r.contains(i)
                    && r.is_subset(&self.table.instances_of(e))
            }
            (Expr::Handler(h), PureType::Handler(c, d)) => self.handler(ctx, h, c, d),
            _ => false,
        }
    }

    /// The outgoing type is pinned by an annotation and otherwise guessed
    /// below `d`: it occurs in the continuation's codomain, so the largest
    /// choice is not always the most permissive one.
    fn handler(&mut self, ctx: &mut Ctx, h: &Handler, c: &DirtyType, d: &DirtyType) -> bool {
        if !reference_subtype(&c.pure, &h.value_type) {
            return false;
        }
        match &h.cases.outgoing {
            Some(d0) => dirty_sub(d0, d) && self.handler_at(ctx, h, c, d0),
            None => {
                let mut outs = vec![d.clone()];
                outs.extend(
                    self.dirty_candidates(&reference_skeleton(&d.pure))
                        .into_iter()
                        .filter(|o| o != d && dirty_sub(o, d)),
                );
                outs.into_iter().any(|out| self.handler_at(ctx, h, c, &out))
            }
        }
    }

    fn handler_at(&mut self, ctx: &mut Ctx, h: &Handler, c: &DirtyType, out: &DirtyType) -> bool {
        let out = out.clone();
        let value_ok = self.bind(ctx, vec![(h.value_binder.clone(), h.value_type.clone())], |s, ctx| {
            s.comp(ctx, &h.value_body, &out)
        });
        if !value_ok {
            return false;
        }
        // What each case may contribute to the handled set.
        let mut options: Vec<Vec<Operation>> = Vec::new();
        for case in &h.cases.cases {
            let Some((effect, sig)) = self.table.lookup_op(&case.op) else { return false };
            let (effect, sig) = (effect.name.clone(), sig.clone());
            let regions = self.regions(ctx, &case.instance, &effect);
            if regions.is_empty() {
                return false;
            }
            let kont = PureType::arrow(sig.result.clone(), out.clone());
            let binds = vec![(case.param.clone(), sig.param.clone()), (case.kont.clone(), kont)];
            if !self.bind(ctx, binds, |s, ctx| s.comp(ctx, &case.body, &out)) {
                return false;
            }
            options.push(
                regions
                    .iter()
                    .filter(|r| r.len() == 1)
                    .map(|r| Operation::new(r.iter().next().unwrap().clone(), case.op.clone()))
                    .collect(),
            );
        }
        let needed: Dirt = c.dirt.difference(&out.dirt).cloned().collect();
        covers(&options, &needed)
    }

    fn comp(&mut self, ctx: &mut Ctx, c: &Comp, ty: &DirtyType) -> bool {
        let key = (c as *const Comp as usize, ctx.clone(), ty.clone());
        if let Some(&known) = self.comp_memo.get(&key) {
            return known;
        }
        if !self.tick() {
            return false;
        }
        let ok = self.comp_uncached(ctx, c, ty);
        self.comp_memo.insert(key, ok);
        ok
    }

    fn comp_uncached(&mut self, ctx: &mut Ctx, c: &Comp, ty: &DirtyType) -> bool {
        match c {
            Comp::Val(e) => self.expr(ctx, e, &ty.pure),
            Comp::Op {
                instance,
                op,
                arg,
                binder,
                body,
            } => {
                let Some((effect, sig)) = self.table.lookup_op(op) else { return false };
                let (effect, sig) = (effect.name.clone(), sig.clone());
                let fits = |r: &Region| r.iter().all(|i| ty.dirt.contains(&Operation::new(i.clone(), op.clone())));
                self.regions(ctx, instance, &effect).iter().any(fits)
                    && self.expr(ctx, arg, &sig.param)
                    && self.bind(ctx, vec![(binder.clone(), sig.result)], |s, ctx| s.comp(ctx, body, ty))
            }
            Comp::With { handler, body } => {
                let Some(sk) = skel_comp(self.table, ctx, body) else { return false };
                let cands = self.dirty_candidates(&sk);
                self.guess(
                    cands,
                    dirty_weight,
                    dirty_sub,
                    |s, ctx, c1| s.comp(ctx, body, c1),
                    |s, ctx, c1| s.expr(ctx, handler, &PureType::handler(c1.clone(), ty.clone())),
                    ctx,
                )
            }
            Comp::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr(ctx, cond, &PureType::Bool)
                    && self.comp(ctx, then_branch, ty)
                    && self.comp(ctx, else_branch, ty)
            }
            Comp::Absurd { ty: annotated, expr } => dirty_sub(annotated, ty) && self.expr(ctx, expr, &PureType::Empty),
            Comp::App(f, a) => {
                let Some(sk) = skel_expr(self.table, ctx, a) else { return false };
                let cands = self.candidates(&sk);
                self.guess(
                    cands,
                    |t| weight(t, 1),
                    reference_subtype,
                    |s, ctx, at| s.expr(ctx, a, at),
                    |s, ctx, at| s.expr(ctx, f, &PureType::arrow(at.clone(), ty.clone())),
                    ctx,
                )
            }
            Comp::Match {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                self.expr(ctx, scrutinee, &PureType::Nat)
                    && self.comp(ctx, zero, ty)
                    && self.bind(ctx, vec![(binder.clone(), PureType::Nat)], |s, ctx| s.comp(ctx, succ, ty))
            }
            Comp::Let { binder, bound, body } => {
                let Some(sk) = skel_comp(self.table, ctx, bound) else { return false };
                let cands = self.candidates(&sk);
                self.guess(
                    cands,
                    |t| weight(t, 1),
                    reference_subtype,
                    |s, ctx, a| s.comp(ctx, bound, &DirtyType::new(a.clone(), ty.dirt.clone())),
                    |s, ctx, a| s.bind(ctx, vec![(binder.clone(), a.clone())], |s, ctx| s.comp(ctx, body, ty)),
                    ctx,
                )
            }
            Comp::LetRec {
                func,
                param,
                param_type,
                result_type,
                def,
                body,
            } => {
                let f = PureType::arrow(param_type.clone(), result_type.clone());
                let binds = vec![(func.clone(), f.clone()), (param.clone(), param_type.clone())];
                self.bind(ctx, binds, |s, ctx| s.comp(ctx, def, result_type))
                    && self.bind(ctx, vec![(func.clone(), f)], |s, ctx| s.comp(ctx, body, ty))
            }
        }
    }
}

/// Whether one contribution per case (or none) can cover `needed`.
fn covers(options: &[Vec<Operation>], needed: &Dirt) -> bool {
    if needed.is_empty() {
        return true;
    }
    let Some((first, rest)) = options.split_first() else { return false };
    first.iter().any(|op| {
        let mut left = needed.clone();
        left.remove(op) && covers(rest, &left)
    }) || covers(rest, needed)
}
