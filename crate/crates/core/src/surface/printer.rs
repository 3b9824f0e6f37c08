use std::fmt::Write;

use crate::syntax::{Comp, EffectTable, Expr, Handler};
use crate::types::{Dirt, DirtyType, PureType, SkeletalType};

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e);
    out
}

pub fn print_comp(c: &Comp) -> String {
    let mut out = String::new();
    comp(&mut out, c);
    out
}

pub fn print_pure(a: &PureType) -> String {
    let mut out = String::new();
    pure(&mut out, a);
    out
}

pub fn print_dirty(c: &DirtyType) -> String {
    let mut out = String::new();
    dirty(&mut out, c);
    out
}

pub fn print_dirt(d: &Dirt) -> String {
    let items: Vec<String> = d.iter().map(|o| o.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

pub fn print_skeletal(s: &SkeletalType) -> String {
    fn atom(s: &SkeletalType) -> String {
        match s {
            SkeletalType::Arrow(..) | SkeletalType::Handler(..) => format!("({})", print_skeletal(s)),
            _ => print_skeletal(s),
        }
    }
    match s {
        SkeletalType::Bool => "bool".into(),
        SkeletalType::Nat => "nat".into(),
        SkeletalType::Unit => "unit".into(),
        SkeletalType::Empty => "empty".into(),
        SkeletalType::Effect(e) => e.clone(),
        SkeletalType::Arrow(a, b) => format!("{} -> {}", atom(a), atom(b)),
        SkeletalType::Handler(a, b) => format!("{} => {}", atom(a), atom(b)),
    }
}

pub fn print_program(table: &EffectTable, body: &Comp) -> String {
    let mut out = String::new();
    for e in &table.effects {
        let _ = writeln!(out, "effect {} {{", e.name);
        for s in &e.ops {
            out.push_str("  ");
            out.push_str(&s.name);
            out.push_str(" : ");
            pure_atom(&mut out, &s.param);
            out.push_str(" -> ");
            pure(&mut out, &s.result);
            out.push('\n');
        }
        out.push_str("}\n");
    }
    for i in &table.instances {
        let _ = writeln!(out, "instance {} : {}", i.name, i.effect);
    }
    out.push_str("do ");
    comp(&mut out, body);
    out.push('\n');
    out
}

fn pure(out: &mut String, a: &PureType) {
    match a {
        PureType::Bool => out.push_str("bool"),
        PureType::Nat => out.push_str("nat"),
        PureType::Unit => out.push_str("unit"),
        PureType::Empty => out.push_str("empty"),
        PureType::Effect(e, r) => {
            let names: Vec<&str> = r.iter().map(String::as_str).collect();
            let _ = write!(out, "{e}^{{{}}}", names.join(", "));
        }
        PureType::Arrow(a, c) => {
            pure_atom(out, a);
            out.push_str(" -> ");
            dirty(out, c);
        }
        PureType::Handler(c, d) => {
            out.push('(');
            dirty(out, c);
            out.push_str(") => (");
            dirty(out, d);
            out.push(')');
        }
    }
}

fn pure_atom(out: &mut String, a: &PureType) {
    if matches!(a, PureType::Arrow(..) | PureType::Handler(..)) {
        out.push('(');
        pure(out, a);
        out.push(')');
    } else {
        pure(out, a);
    }
}

fn dirty(out: &mut String, c: &DirtyType) {
    pure_atom(out, &c.pure);
    out.push_str(" ! ");
    out.push_str(&print_dirt(&c.dirt));
}

fn expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Fun(x, ty, body) => {
            let _ = write!(out, "fun {x} : ");
            pure(out, ty);
            out.push_str(". ");
            comp(out, body);
        }
        Expr::Succ(inner) if e.as_nat().is_none() => {
            out.push_str("succ ");
            atom(out, inner);
        }
        _ => atom(out, e),
    }
}

fn atom(out: &mut String, e: &Expr) {
    match e {
        Expr::Var(x) | Expr::Inst(x) => out.push_str(x),
        Expr::True => out.push_str("true"),
        Expr::False => out.push_str("false"),
        Expr::Unit => out.push_str("()"),
        Expr::Zero => out.push('0'),
        Expr::Succ(_) => match e.as_nat() {
            Some(n) => {
                let _ = write!(out, "{n}");
            }
            None => {
                out.push('(');
                expr(out, e);
                out.push(')');
            }
        },
        Expr::Fun(..) => {
            out.push('(');
            expr(out, e);
            out.push(')');
        }
        Expr::Handler(h) => handler(out, h),
    }
}

fn handler(out: &mut String, h: &Handler) {
    out.push_str("handler");
    if let Some(c) = &h.cases.outgoing {
        out.push('[');
        dirty(out, c);
        out.push(']');
    }
    let _ = write!(out, " {{ val {} : ", h.value_binder);
    pure_atom(out, &h.value_type);
    out.push_str(" -> ");
    comp(out, &h.value_body);
    for case in &h.cases.cases {
        out.push_str(" | ");
        atom(out, &case.instance);
        let _ = write!(out, "#{}({}; {}) -> ", case.op, case.param, case.kont);
        comp(out, &case.body);
    }
    out.push_str(" }");
}

fn comp(out: &mut String, c: &Comp) {
    match c {
        Comp::Val(e) => {
            out.push_str("val ");
            atom(out, e);
        }
        Comp::Op {
            instance,
            op,
            arg,
            binder,
            body,
        } => {
            atom(out, instance);
            let _ = write!(out, "#{op}(");
            expr(out, arg);
            let _ = write!(out, "; {binder}. ");
            comp(out, body);
            out.push(')');
        }
        Comp::With { handler, body } => {
            out.push_str("with ");
            atom(out, handler);
            out.push_str(" handle ");
            comp(out, body);
        }
        Comp::If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if ");
            atom(out, cond);
            out.push_str(" then ");
            comp(out, then_branch);
            out.push_str(" else ");
            comp(out, else_branch);
        }
        Comp::Absurd { ty, expr: e } => {
            out.push_str("absurd [");
            dirty(out, ty);
            out.push_str("] ");
            atom(out, e);
        }
        Comp::App(f, a) => {
            atom(out, f);
            out.push(' ');
            atom(out, a);
        }
        Comp::Match {
            scrutinee,
            zero,
            binder,
            succ,
        } => {
            out.push_str("match ");
            atom(out, scrutinee);
            out.push_str(" with { 0 -> ");
            comp(out, zero);
            let _ = write!(out, " | succ {binder} -> ");
            comp(out, succ);
            out.push_str(" }");
        }
        Comp::Let {
            binder,
            bound,
            body,
        } => {
            let _ = write!(out, "let {binder} = ");
            comp(out, bound);
            out.push_str(" in ");
            comp(out, body);
        }
        Comp::LetRec {
            func,
            param,
            param_type,
            result_type,
            def,
            body,
        } => {
            let _ = write!(out, "let rec {func} {param} : ");
            pure_atom(out, param_type);
            out.push_str(" -> ");
            dirty(out, result_type);
            out.push_str(" = ");
            comp(out, def);
            out.push_str(" in ");
            comp(out, body);
        }
    }
}
