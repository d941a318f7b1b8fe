//! Recursive-descent parser for the surface grammar. Whitespace (including
//! newlines) is insignificant; `--` starts a line comment.

use super::ast::*;
use super::lexer::{lex, line_col, Span, Tok, Token};
use crate::error::KbpError;

const RESERVED: &[&str] = &[
    "agent", "transitions", "protocol", "begin", "end", "init_cond", "observable", "if", "fi",
    "otherwise", "skip", "neg", "Knows", "Self", "Exists", "Forall", "X", "Bool", "true", "false",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

pub struct Parser<'a> {
    source: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

pub fn parse_document(source: &str) -> Result<Document, KbpError> {
    let mut p = Parser::new(source)?;
    p.document()
}

/// Parses a standalone formula (for `--formula` and sidecar payloads).
pub fn parse_formula(source: &str) -> Result<SExpr, KbpError> {
    let mut p = Parser::new(source)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

impl<'a> Parser<'a> {
    fn new(source: &'a str) -> Result<Parser<'a>, KbpError> {
        Ok(Parser { source, toks: lex(source)?, pos: 0 })
    }

    fn err_at(&self, span: Span, msg: impl std::fmt::Display) -> KbpError {
        let (line, col) = line_col(self.source, span.start);
        KbpError::Syntax { line, col, msg: msg.to_string() }
    }

    fn err_here(&self, msg: impl std::fmt::Display) -> KbpError {
        let span = self
            .toks
            .get(self.pos)
            .map(|t| t.span)
            .unwrap_or(Span { start: self.source.len(), end: self.source.len() });
        self.err_at(span, msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        self.toks
            .get(self.pos)
            .map(|t| t.span)
            .unwrap_or(Span { start: self.source.len(), end: self.source.len() })
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), KbpError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            match self.peek() {
                Some(found) => Err(self.err_here(format!("expected `{tok}`, found `{found}`"))),
                None => Err(self.err_here(format!("expected `{tok}`, found end of input"))),
            }
        }
    }

    fn expect_eof(&mut self) -> Result<(), KbpError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err_here(format!("unexpected trailing `{t}`"))),
        }
    }

    /// Accepts any identifier, keyword or not.
    fn raw_ident(&mut self) -> Result<(String, Span), KbpError> {
        let span = self.span();
        match self.bump() {
            Some(Tok::Ident(s)) => Ok((s, span)),
            Some(t) => Err(self.err_at(span, format!("expected identifier, found `{t}`"))),
            None => Err(self.err_at(span, "expected identifier, found end of input")),
        }
    }

    /// Accepts a non-reserved identifier.
    fn ident(&mut self) -> Result<(String, Span), KbpError> {
        let (s, span) = self.raw_ident()?;
        if is_reserved(&s) {
            return Err(self.err_at(span, format!("`{s}` is a reserved word")));
        }
        Ok((s, span))
    }

    fn keyword(&mut self, kw: &str) -> Result<Span, KbpError> {
        let span = self.span();
        match self.bump() {
            Some(Tok::Ident(s)) if s == kw => Ok(span),
            Some(t) => Err(self.err_at(span, format!("expected `{kw}`, found `{t}`"))),
            None => Err(self.err_at(span, format!("expected `{kw}`, found end of input"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn num(&mut self) -> Result<(u64, Span), KbpError> {
        let span = self.span();
        match self.bump() {
            Some(Tok::Num(n)) => Ok((n, span)),
            Some(t) => Err(self.err_at(span, format!("expected number, found `{t}`"))),
            None => Err(self.err_at(span, "expected number, found end of input")),
        }
    }

    fn string(&mut self) -> Result<(String, Span), KbpError> {
        let span = self.span();
        match self.bump() {
            Some(Tok::Str(s)) => Ok((s, span)),
            Some(t) => Err(self.err_at(span, format!("expected string, found `{t}`"))),
            None => Err(self.err_at(span, "expected string, found end of input")),
        }
    }

    // ------------------------------------------------------------------
    // document structure
    // ------------------------------------------------------------------

    fn document(&mut self) -> Result<Document, KbpError> {
        let mut doc = Document {
            env_decls: Vec::new(),
            init: None,
            agents: Vec::new(),
            transitions: None,
            protocols: Vec::new(),
        };
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Ident(s) if s == "init_cond" => {
                    let span = self.keyword("init_cond")?;
                    self.expect(Tok::Eq)?;
                    if doc.init.is_some() {
                        return Err(self.err_at(span, "duplicate init_cond"));
                    }
                    doc.init = Some(self.expr()?);
                }
                Tok::Ident(s) if s == "agent" => {
                    doc.agents.push(self.agent_decl()?);
                }
                Tok::Ident(s) if s == "transitions" => {
                    let span = self.keyword("transitions")?;
                    if doc.transitions.is_some() {
                        return Err(self.err_at(span, "duplicate transitions clause"));
                    }
                    self.keyword("begin")?;
                    doc.transitions = Some(self.program()?);
                    self.keyword("end")?;
                }
                Tok::Ident(s) if s == "protocol" => {
                    doc.protocols.push(self.protocol_decl()?);
                }
                Tok::Ident(_) => {
                    doc.env_decls.push(self.var_decl()?);
                }
                t => return Err(self.err_here(format!("unexpected `{t}` at top level"))),
            }
        }
        Ok(doc)
    }

    fn var_decl(&mut self) -> Result<SVarDecl, KbpError> {
        let (name, span) = self.ident()?;
        self.expect(Tok::Colon)?;
        let ty = self.ty()?;
        let index_type = if self.eat(&Tok::LBracket) {
            let (t, _) = self.ident()?;
            self.expect(Tok::RBracket)?;
            Some(t)
        } else {
            None
        };
        Ok(SVarDecl { name, ty, index_type, span: span.join(self.prev_span()) })
    }

    fn ty(&mut self) -> Result<STy, KbpError> {
        if self.at_keyword("Bool") {
            self.keyword("Bool")?;
            return Ok(STy::Bool);
        }
        if let Some(Tok::Num(_)) = self.peek() {
            let (lo, span) = self.num()?;
            self.expect(Tok::DotDot)?;
            let (hi, _) = self.num()?;
            if lo != 0 {
                return Err(self.err_at(span, "bounded nat types start at 0"));
            }
            return Ok(STy::Range(hi));
        }
        if self.eat(&Tok::LBrace) {
            let mut consts = Vec::new();
            loop {
                let (c, _) = self.ident()?;
                consts.push(c);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
            return Ok(STy::Enum(consts));
        }
        Err(self.err_here("expected a type (Bool, 0..k, or {c1,...,ck})"))
    }

    fn agent_decl(&mut self) -> Result<SAgentDecl, KbpError> {
        let span = self.keyword("agent")?;
        let (name, _) = self.ident()?;
        let (protocol, _) = self.string()?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                args.push(self.var_ref()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(SAgentDecl { name, protocol, args, span: span.join(self.prev_span()) })
    }

    fn protocol_decl(&mut self) -> Result<SProtocolDecl, KbpError> {
        let span = self.keyword("protocol")?;
        let (name, _) = self.string()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                params.push(self.param()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let mut locals = Vec::new();
        while matches!(self.peek(), Some(Tok::Ident(s)) if !is_reserved(s))
            && self.peek2() == Some(&Tok::Colon)
        {
            locals.push(self.param()?);
        }
        let init = if self.at_keyword("init_cond") {
            self.keyword("init_cond")?;
            self.expect(Tok::Eq)?;
            Some(self.expr()?)
        } else {
            None
        };
        self.keyword("begin")?;
        let body = self.program()?;
        self.keyword("end")?;
        Ok(SProtocolDecl { name, params, locals, init, body, span: span.join(self.prev_span()) })
    }

    fn param(&mut self) -> Result<SParam, KbpError> {
        let (name, span) = self.ident()?;
        self.expect(Tok::Colon)?;
        let observable = if self.at_keyword("observable") {
            self.keyword("observable")?;
            true
        } else {
            false
        };
        let ty = self.ty()?;
        Ok(SParam { name, observable, ty, span: span.join(self.prev_span()) })
    }

    // ------------------------------------------------------------------
    // programs
    // ------------------------------------------------------------------

    fn program(&mut self) -> Result<SProgram, KbpError> {
        let mut stmts = Vec::new();
        if self.at_keyword("end") {
            return Ok(SProgram(stmts));
        }
        loop {
            stmts.push(self.statement()?);
            if !self.eat(&Tok::Semi) {
                break;
            }
        }
        Ok(SProgram(stmts))
    }

    fn statement(&mut self) -> Result<SStatement, KbpError> {
        if self.at_keyword("if") {
            let span = self.keyword("if")?;
            let mut arms = Vec::new();
            loop {
                arms.push(self.arm()?);
                if !self.eat(&Tok::Box) {
                    break;
                }
            }
            self.keyword("fi")?;
            return Ok(SStatement::Branch { arms, span: span.join(self.prev_span()) });
        }
        Ok(SStatement::Atomic(self.atomic()?))
    }

    fn arm(&mut self) -> Result<SArm, KbpError> {
        let guard = if self.at_keyword("otherwise") {
            SGuard::Otherwise(self.keyword("otherwise")?)
        } else {
            SGuard::Expr(self.expr()?)
        };
        self.expect(Tok::Arrow)?;
        let body = self.atomic()?;
        Ok(SArm { guard, body })
    }

    fn atomic(&mut self) -> Result<SAtomic, KbpError> {
        let span = self.span();
        if self.at_keyword("skip") {
            self.keyword("skip")?;
            return Ok(SAtomic { action: None, assigns: Vec::new(), span });
        }
        if self.eat(&Tok::LtLt) {
            let action = if matches!(self.peek(), Some(Tok::Ident(_))) {
                Some(self.ident()?.0)
            } else {
                None
            };
            let mut assigns = Vec::new();
            if self.eat(&Tok::Pipe) && self.peek() != Some(&Tok::GtGt) {
                loop {
                    assigns.push(self.assignment()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(Tok::GtGt)?;
            return Ok(SAtomic { action, assigns, span: span.join(self.prev_span()) });
        }
        // bare `x := e`
        let assign = self.assignment()?;
        Ok(SAtomic { action: None, assigns: vec![assign], span: span.join(self.prev_span()) })
    }

    fn assignment(&mut self) -> Result<(SVarRef, SExpr), KbpError> {
        let target = self.var_ref()?;
        self.expect(Tok::Assign)?;
        let value = self.expr()?;
        Ok((target, value))
    }

    fn var_ref(&mut self) -> Result<SVarRef, KbpError> {
        if self.at_keyword("Self") {
            let span = self.keyword("Self")?;
            self.expect(Tok::Dot)?;
            let (act, _) = self.ident()?;
            let _ = span;
            return Ok(SVarRef::Dotted(SIndex::SelfRef, act));
        }
        let (name, _) = self.ident()?;
        if self.eat(&Tok::LBracket) {
            let index = self.index()?;
            self.expect(Tok::RBracket)?;
            return Ok(SVarRef::Indexed(name, index));
        }
        if self.eat(&Tok::Dot) {
            let (field, _) = self.ident()?;
            return Ok(SVarRef::Dotted(SIndex::Name(name), field));
        }
        Ok(SVarRef::Plain(name))
    }

    fn index(&mut self) -> Result<SIndex, KbpError> {
        if self.at_keyword("Self") {
            self.keyword("Self")?;
            return Ok(SIndex::SelfRef);
        }
        Ok(SIndex::Name(self.ident()?.0))
    }

    // ------------------------------------------------------------------
    // expressions
    // ------------------------------------------------------------------

    pub(crate) fn expr(&mut self) -> Result<SExpr, KbpError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<SExpr, KbpError> {
        let mut lhs = self.and_expr()?;
        while self.eat(&Tok::BackslashSlash) {
            let rhs = self.and_expr()?;
            let span = lhs.span.join(rhs.span);
            lhs = SExpr { node: SNode::Or(Box::new(lhs), Box::new(rhs)), span };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<SExpr, KbpError> {
        let mut lhs = self.unary_expr()?;
        while self.eat(&Tok::SlashBackslash) {
            let rhs = self.unary_expr()?;
            let span = lhs.span.join(rhs.span);
            lhs = SExpr { node: SNode::And(Box::new(lhs), Box::new(rhs)), span };
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<SExpr, KbpError> {
        let span = self.span();
        if self.at_keyword("neg") {
            self.keyword("neg")?;
            let e = self.unary_expr()?;
            let span = span.join(e.span);
            return Ok(SExpr { node: SNode::Not(Box::new(e)), span });
        }
        if self.at_keyword("Knows") {
            self.keyword("Knows")?;
            let agent = self.index()?;
            let e = self.unary_expr()?;
            let span = span.join(e.span);
            return Ok(SExpr { node: SNode::Knows(agent, Box::new(e)), span });
        }
        if self.at_keyword("X") {
            self.keyword("X")?;
            let reps = if self.eat(&Tok::Caret) { self.num()?.0 } else { 1 };
            let mut e = self.unary_expr()?;
            let span = span.join(e.span);
            for _ in 0..reps {
                e = SExpr { node: SNode::Next(Box::new(e)), span };
            }
            return Ok(e);
        }
        if self.at_keyword("Exists") || self.at_keyword("Forall") {
            let forall = self.at_keyword("Forall");
            self.bump();
            let (binder, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            let (ty, _) = self.ident()?;
            // tolerate `Agent()` for the type
            if self.peek() == Some(&Tok::LParen) && self.peek2() == Some(&Tok::RParen) {
                self.bump();
                self.bump();
            }
            self.expect(Tok::LParen)?;
            let body = self.expr()?;
            self.expect(Tok::RParen)?;
            let span = span.join(self.prev_span());
            let node = if forall {
                SNode::Forall(binder, ty, Box::new(body))
            } else {
                SNode::Exists(binder, ty, Box::new(body))
            };
            return Ok(SExpr { node, span });
        }
        self.eq_expr()
    }

    fn eq_expr(&mut self) -> Result<SExpr, KbpError> {
        let lhs = self.atom_expr()?;
        if self.eat(&Tok::EqEq) {
            let rhs = self.atom_expr()?;
            let span = lhs.span.join(rhs.span);
            return Ok(SExpr { node: SNode::Eq(Box::new(lhs), Box::new(rhs)), span });
        }
        Ok(lhs)
    }

    fn atom_expr(&mut self) -> Result<SExpr, KbpError> {
        let span = self.span();
        match self.peek() {
            Some(Tok::Ident(s)) if s == "true" => {
                self.bump();
                Ok(SExpr { node: SNode::True, span })
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.bump();
                Ok(SExpr { node: SNode::False, span })
            }
            Some(Tok::Num(_)) => {
                let (n, span) = self.num()?;
                Ok(SExpr { node: SNode::Num(n), span })
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(SExpr { node: e.node, span: span.join(self.prev_span()) })
            }
            Some(Tok::Ident(_)) => {
                let r = self.var_ref()?;
                Ok(SExpr { node: SNode::Ref(r), span: span.join(self.prev_span()) })
            }
            Some(t) => Err(self.err_here(format!("expected an expression, found `{t}`"))),
            None => Err(self.err_here("expected an expression, found end of input")),
        }
    }
}
