use std::collections::BTreeSet;

use super::lexer::{is_keyword, tokenize, Tok, Token};
use super::{ParseError, ProgramFile, SourceSpan, SpanTree};
use crate::syntax::{
    Comp, EffectDecl, EffectTable, Expr, Handler, InstanceDecl, Name, OpCase, OpCases, OpSig,
};
use crate::types::{Dirt, DirtyType, Operation, PureType};

type PResult<T> = Result<T, ParseError>;

enum TyExpr {
    Pure(PureType),
    Dirty(DirtyType),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    table: EffectTable,
    scope: Vec<Name>,
    fresh: usize,
}

struct Checkpoint {
    pos: usize,
    scope: usize,
    fresh: usize,
}

pub fn parse_program(text: &str) -> PResult<ProgramFile> {
    let mut p = Parser::new(text, EffectTable::new())?;
    p.preamble()?;
    let (body, spans) = p.comp()?;
    p.expect_eof()?;
    Ok(ProgramFile {
        table: p.table,
        body,
        spans,
    })
}

/// Parses a lone computation against an existing table. Names in `scope` may
/// occur free.
pub fn parse_comp_in(table: &EffectTable, scope: &[Name], text: &str) -> PResult<Comp> {
    let mut p = Parser::new(text, table.clone())?;
    p.scope = scope.to_vec();
    let (c, _) = p.comp()?;
    p.expect_eof()?;
    Ok(c)
}

pub fn parse_expr_in(table: &EffectTable, scope: &[Name], text: &str) -> PResult<Expr> {
    let mut p = Parser::new(text, table.clone())?;
    p.scope = scope.to_vec();
    let (e, _) = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_dirty_type(table: &EffectTable, text: &str) -> PResult<DirtyType> {
    let mut p = Parser::new(text, table.clone())?;
    let start = p.span();
    let ty = p.dirty()?;
    p.expect_eof()?;
    p.check_dirty_wf(&ty, start)?;
    Ok(ty)
}

pub fn parse_pure_type(table: &EffectTable, text: &str) -> PResult<PureType> {
    let mut p = Parser::new(text, table.clone())?;
    let start = p.span();
    let ty = p.pure()?;
    p.expect_eof()?;
    p.check_pure_wf(&ty, start)?;
    Ok(ty)
}

impl Parser {
    fn new(text: &str, table: EffectTable) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
            table,
            scope: Vec::new(),
            fresh: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn last_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn since(&self, start: SourceSpan) -> SourceSpan {
        start.to(self.last_span())
    }

    fn advance(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::syntax(
            format!("expected {wanted}, found {}", self.peek().describe()),
            self.span(),
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    /// Any identifier that is not a keyword.
    fn name(&mut self) -> PResult<(Name, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let span = self.span();
                self.advance();
                Ok((s, span))
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    /// A variable binder; instance names are reserved.
    fn binder(&mut self) -> PResult<Name> {
        let (x, span) = self.name()?;
        if self.table.is_instance(&x) {
            return Err(ParseError::resolve(
                format!("`{x}` is an instance and cannot be bound as a variable"),
                span,
            ));
        }
        Ok(x)
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            pos: self.pos,
            scope: self.scope.len(),
            fresh: self.fresh,
        }
    }

    fn restore(&mut self, cp: &Checkpoint) {
        self.pos = cp.pos;
        self.scope.truncate(cp.scope);
        self.fresh = cp.fresh;
    }

    fn scoped<T>(&mut self, names: &[&Name], f: impl FnOnce(&mut Self) -> T) -> T {
        let depth = self.scope.len();
        self.scope.extend(names.iter().map(|n| (*n).clone()));
        let out = f(self);
        self.scope.truncate(depth);
        out
    }

    // ----- preamble -----

    fn preamble(&mut self) -> PResult<()> {
        let mut decl_spans = Vec::new();
        loop {
            let start = self.span();
            if self.eat_kw("effect") {
                let (name, _) = self.name()?;
                self.expect(Tok::LBrace)?;
                let mut ops = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    let (op, _) = self.name()?;
                    self.expect(Tok::Colon)?;
                    let param = self.pure_atom()?;
                    self.expect(Tok::Arrow)?;
                    let result = self.pure()?;
                    ops.push(OpSig {
                        name: op,
                        param,
                        result,
                    });
                    let _ = self.eat(&Tok::Semi) || self.eat(&Tok::Comma);
                }
                self.table.effects.push(EffectDecl { name, ops });
                decl_spans.push(self.since(start));
            } else if self.eat_kw("instance") {
                let mut names = vec![self.name()?.0];
                while self.eat(&Tok::Comma) {
                    names.push(self.name()?.0);
                }
                self.expect(Tok::Colon)?;
                let (effect, _) = self.name()?;
                for name in names {
                    self.table.instances.push(InstanceDecl {
                        name,
                        effect: effect.clone(),
                    });
                }
                decl_spans.push(self.since(start));
            } else if self.eat_kw("do") {
                break;
            } else {
                return Err(self.unexpected("`effect`, `instance` or `do`"));
            }
        }
        if let Err(e) = self.table.validate() {
            let span = decl_spans.last().copied().unwrap_or_default();
            return Err(ParseError::resolve(e.to_string(), span));
        }
        Ok(())
    }

    // ----- types -----

    fn check_pure_wf(&self, ty: &PureType, span: SourceSpan) -> PResult<()> {
        self.table
            .check_pure(ty)
            .map_err(|m| ParseError::resolve(m, span))
    }

    fn check_dirty_wf(&self, ty: &DirtyType, span: SourceSpan) -> PResult<()> {
        self.table
            .check_dirty(ty)
            .map_err(|m| ParseError::resolve(m, span))
    }

    fn ty_atom(&mut self) -> PResult<TyExpr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                let base = match s.as_str() {
                    "bool" => PureType::Bool,
                    "nat" => PureType::Nat,
                    "unit" => PureType::Unit,
                    "empty" => PureType::Empty,
                    _ if is_keyword(&s) => {
                        return Err(ParseError::syntax(format!("expected a type, found `{s}`"), start))
                    }
                    _ => {
                        self.expect(Tok::Caret)?;
                        self.expect(Tok::LBrace)?;
                        let mut region = BTreeSet::new();
                        if !self.eat(&Tok::RBrace) {
                            loop {
                                region.insert(self.name()?.0);
                                if self.eat(&Tok::RBrace) {
                                    break;
                                }
                                self.expect(Tok::Comma)?;
                            }
                        }
                        PureType::Effect(s, region)
                    }
                };
                Ok(TyExpr::Pure(base))
            }
            Tok::LParen => {
                self.advance();
                let t = self.ty_expr()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.unexpected("a type")),
        }
    }

    fn ty_expr(&mut self) -> PResult<TyExpr> {
        let mut t = self.ty_atom()?;
        if let TyExpr::Pure(a) = &t {
            if self.eat(&Tok::Arrow) {
                let c = self.dirty()?;
                t = TyExpr::Pure(PureType::arrow(a.clone(), c));
            }
        }
        loop {
            t = match t {
                TyExpr::Pure(a) if *self.peek() == Tok::Bang => {
                    self.advance();
                    TyExpr::Dirty(DirtyType::new(a, self.dirt()?))
                }
                TyExpr::Dirty(c) if *self.peek() == Tok::FatArrow => {
                    self.advance();
                    let d = self.dirty()?;
                    TyExpr::Pure(PureType::handler(c, d))
                }
                other => return Ok(other),
            };
        }
    }

    fn dirt(&mut self) -> PResult<Dirt> {
        self.expect(Tok::LBrace)?;
        let mut dirt = Dirt::new();
        if self.eat(&Tok::RBrace) {
            return Ok(dirt);
        }
        loop {
            let (i, _) = self.name()?;
            self.expect(Tok::Hash)?;
            let (op, _) = self.name()?;
            dirt.insert(Operation::new(i, op));
            if self.eat(&Tok::RBrace) {
                return Ok(dirt);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn pure(&mut self) -> PResult<PureType> {
        let start = self.span();
        match self.ty_expr()? {
            TyExpr::Pure(a) => Ok(a),
            TyExpr::Dirty(_) => Err(ParseError::syntax(
                "expected a pure type, found a dirty type",
                self.since(start),
            )),
        }
    }

    fn pure_atom(&mut self) -> PResult<PureType> {
        let start = self.span();
        match self.ty_atom()? {
            TyExpr::Pure(a) => Ok(a),
            TyExpr::Dirty(_) => Err(ParseError::syntax(
                "expected a pure type, found a dirty type",
                self.since(start),
            )),
        }
    }

    fn dirty(&mut self) -> PResult<DirtyType> {
        let start = self.span();
        match self.ty_expr()? {
            TyExpr::Dirty(c) => Ok(c),
            TyExpr::Pure(_) => Err(ParseError::syntax(
                "expected a dirty type `A ! {...}`",
                self.since(start),
            )),
        }
    }

    fn annotated_pure(&mut self, atom: bool) -> PResult<PureType> {
        let start = self.span();
        let ty = if atom { self.pure_atom()? } else { self.pure()? };
        self.check_pure_wf(&ty, self.since(start))?;
        Ok(ty)
    }

    fn annotated_dirty(&mut self) -> PResult<DirtyType> {
        let start = self.span();
        let ty = self.dirty()?;
        self.check_dirty_wf(&ty, self.since(start))?;
        Ok(ty)
    }

    // ----- computations -----

    fn comp(&mut self) -> PResult<(Comp, SpanTree)> {
        let start = self.span();
        if self.eat_kw("val") {
            let (e, es) = self.expr()?;
            return Ok((Comp::Val(e), SpanTree::node(self.since(start), vec![es])));
        }
        if self.eat_kw("with") {
            let (h, hs) = self.expr()?;
            self.expect_kw("handle")?;
            let (c, cs) = self.comp()?;
            return Ok((Comp::with(h, c), SpanTree::node(self.since(start), vec![hs, cs])));
        }
        if self.eat_kw("if") {
            let (e, es) = self.expr()?;
            self.expect_kw("then")?;
            let (c1, s1) = self.comp()?;
            self.expect_kw("else")?;
            let (c2, s2) = self.comp()?;
            return Ok((
                Comp::if_(e, c1, c2),
                SpanTree::node(self.since(start), vec![es, s1, s2]),
            ));
        }
        if self.eat_kw("absurd") {
            self.expect(Tok::LBracket)?;
            let ty = self.annotated_dirty()?;
            self.expect(Tok::RBracket)?;
            let (e, es) = self.atom()?;
            return Ok((
                Comp::Absurd { ty, expr: e },
                SpanTree::node(self.since(start), vec![es]),
            ));
        }
        if self.eat_kw("match") {
            let (e, es) = self.expr()?;
            self.expect_kw("with")?;
            self.expect(Tok::LBrace)?;
            let _ = self.eat(&Tok::Bar);
            if !self.eat(&Tok::Num(0)) {
                return Err(self.unexpected("`0`"));
            }
            self.expect(Tok::Arrow)?;
            let (c1, s1) = self.comp()?;
            self.expect(Tok::Bar)?;
            self.expect_kw("succ")?;
            let x = self.binder()?;
            self.expect(Tok::Arrow)?;
            let (c2, s2) = self.scoped(&[&x], |p| p.comp())?;
            self.expect(Tok::RBrace)?;
            return Ok((
                Comp::match_(e, c1, x, c2),
                SpanTree::node(self.since(start), vec![es, s1, s2]),
            ));
        }
        if self.eat_kw("let") {
            if self.eat_kw("rec") {
                let f = self.binder()?;
                let x = self.binder()?;
                self.expect(Tok::Colon)?;
                let ty_start = self.span();
                let ty = self.annotated_pure(false)?;
                let PureType::Arrow(a, c) = ty else {
                    return Err(ParseError::syntax(
                        "a recursive function needs an arrow type",
                        self.since(ty_start),
                    ));
                };
                self.expect(Tok::Eq)?;
                let (c1, s1) = self.scoped(&[&f, &x], |p| p.comp())?;
                self.expect_kw("in")?;
                let (c2, s2) = self.scoped(&[&f], |p| p.comp())?;
                return Ok((
                    Comp::let_rec(f, x, *a, *c, c1, c2),
                    SpanTree::node(self.since(start), vec![s1, s2]),
                ));
            }
            let x = self.binder()?;
            self.expect(Tok::Eq)?;
            let (c1, s1) = self.comp()?;
            self.expect_kw("in")?;
            let (c2, s2) = self.scoped(&[&x], |p| p.comp())?;
            return Ok((
                Comp::let_(x, c1, c2),
                SpanTree::node(self.since(start), vec![s1, s2]),
            ));
        }
        if *self.peek() == Tok::LParen && self.peek_at(1) != &Tok::RParen {
            let cp = self.checkpoint();
            self.advance();
            let grouped = self.comp().and_then(|r| {
                self.expect(Tok::RParen)?;
                Ok(r)
            });
            match grouped {
                Ok(r) => return Ok(r),
                Err(first) => {
                    self.restore(&cp);
                    return self.expr_led_comp().map_err(|second| {
                        if first.span.start > second.span.start {
                            first
                        } else {
                            second
                        }
                    });
                }
            }
        }
        self.expr_led_comp()
    }

    /// Operation calls and applications, which both start with an expression.
    fn expr_led_comp(&mut self) -> PResult<(Comp, SpanTree)> {
        let start = self.span();
        let (head, hs) = self.atom()?;
        if self.eat(&Tok::Hash) {
            let (op, op_span) = self.name()?;
            if self.table.lookup_op(&op).is_none() {
                return Err(ParseError::resolve(format!("unknown operation `{op}`"), op_span));
            }
            if *self.peek() == Tok::LParen && self.peek_at(1) != &Tok::RParen {
                self.advance();
                let (arg, args) = self.expr()?;
                if self.eat(&Tok::Semi) {
                    let y = self.binder()?;
                    self.expect(Tok::Dot)?;
                    let (c, cs) = self.scoped(&[&y], |p| p.comp())?;
                    self.expect(Tok::RParen)?;
                    return Ok((
                        Comp::op(head, op, arg, y, c),
                        SpanTree::node(self.since(start), vec![hs, args, cs]),
                    ));
                }
                self.expect(Tok::RParen)?;
                return Ok(self.generic(start, head, hs, op, arg, args));
            }
            let (arg, args) = self.atom()?;
            return Ok(self.generic(start, head, hs, op, arg, args));
        }
        let (arg, args) = self.atom()?;
        Ok((
            Comp::app(head, arg),
            SpanTree::node(self.since(start), vec![hs, args]),
        ))
    }

    fn generic(
        &mut self,
        start: SourceSpan,
        inst: Expr,
        is: SpanTree,
        op: Name,
        arg: Expr,
        args: SpanTree,
    ) -> (Comp, SpanTree) {
        let y = loop {
            self.fresh += 1;
            let y = format!("y{}", self.fresh);
            if !self.table.is_instance(&y) {
                break y;
            }
        };
        let span = self.since(start);
        let body = SpanTree::node(span, vec![SpanTree::leaf(span)]);
        (
            Comp::generic(inst, op, arg, y),
            SpanTree::node(span, vec![is, args, body]),
        )
    }

    // ----- expressions -----

    fn expr(&mut self) -> PResult<(Expr, SpanTree)> {
        let start = self.span();
        if self.eat_kw("fun") {
            let x = self.binder()?;
            self.expect(Tok::Colon)?;
            let ty = self.annotated_pure(false)?;
            self.expect(Tok::Dot)?;
            let (c, cs) = self.scoped(&[&x], |p| p.comp())?;
            return Ok((Expr::fun(x, ty, c), SpanTree::node(self.since(start), vec![cs])));
        }
        if self.is_kw("succ") {
            return self.succ();
        }
        self.atom()
    }

    fn succ(&mut self) -> PResult<(Expr, SpanTree)> {
        let start = self.span();
        self.expect_kw("succ")?;
        let (e, es) = if self.is_kw("succ") {
            self.succ()?
        } else {
            self.atom()?
        };
        Ok((Expr::succ(e), SpanTree::node(self.since(start), vec![es])))
    }

    fn atom(&mut self) -> PResult<(Expr, SpanTree)> {
        let start = self.span();
        let e = match self.peek().clone() {
            Tok::Num(n) => {
                self.advance();
                Expr::nat(n)
            }
            Tok::LParen => {
                self.advance();
                if self.eat(&Tok::RParen) {
                    Expr::Unit
                } else {
                    let (e, es) = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok((e, es));
                }
            }
            Tok::Ident(s) if s == "true" => {
                self.advance();
                Expr::True
            }
            Tok::Ident(s) if s == "false" => {
                self.advance();
                Expr::False
            }
            Tok::Ident(s) if s == "handler" => return self.handler(),
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                if self.scope.iter().rev().any(|v| *v == s) {
                    Expr::Var(s)
                } else if self.table.is_instance(&s) {
                    Expr::Inst(s)
                } else {
                    return Err(ParseError::resolve(
                        format!("unbound name `{s}`"),
                        start,
                    ));
                }
            }
            _ => return Err(self.unexpected("an expression")),
        };
        Ok((e, SpanTree::leaf(self.since(start))))
    }

    fn handler(&mut self) -> PResult<(Expr, SpanTree)> {
        let start = self.span();
        self.expect_kw("handler")?;
        let outgoing = if self.eat(&Tok::LBracket) {
            let ty = self.annotated_dirty()?;
            self.expect(Tok::RBracket)?;
            Some(ty)
        } else {
            None
        };
        self.expect(Tok::LBrace)?;
        let _ = self.eat(&Tok::Bar);
        self.expect_kw("val")?;
        let x = self.binder()?;
        self.expect(Tok::Colon)?;
        let value_type = self.annotated_pure(true)?;
        self.expect(Tok::Arrow)?;
        let (value_body, vs) = self.scoped(&[&x], |p| p.comp())?;
        let mut spans = vec![vs];
        let mut cases = Vec::new();
        while self.eat(&Tok::Bar) {
            let (instance, is) = self.atom()?;
            self.expect(Tok::Hash)?;
            let (op, op_span) = self.name()?;
            if self.table.lookup_op(&op).is_none() {
                return Err(ParseError::resolve(format!("unknown operation `{op}`"), op_span));
            }
            self.expect(Tok::LParen)?;
            let param = self.binder()?;
            self.expect(Tok::Semi)?;
            let kont = self.binder()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::Arrow)?;
            let (body, bs) = self.scoped(&[&param, &kont], |p| p.comp())?;
            spans.push(is);
            spans.push(bs);
            cases.push(OpCase {
                instance,
                op,
                param,
                kont,
                body,
            });
        }
        self.expect(Tok::RBrace)?;
        let h = Handler {
            value_binder: x,
            value_type,
            value_body,
            cases: OpCases { cases, outgoing },
        };
        Ok((Expr::handler(h), SpanTree::node(self.since(start), spans)))
    }
}
