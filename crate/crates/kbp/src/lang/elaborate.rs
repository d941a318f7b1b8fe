//! Name resolution and agent instantiation: turns a surface [`Document`]
//! into a [`SystemModel`] with one protocol instance per agent, quantifier
//! sugar expanded and `otherwise` desugared to the negated disjunction of
//! the preceding guards.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::Span;
use super::model::*;
use crate::error::KbpError;

pub fn parse(source: &str) -> Result<SystemModel, KbpError> {
    let doc = super::parser::parse_document(source)?;
    elaborate(source, &doc)
}

struct EnvEntry {
    indexed: bool,
    vars: Vec<TVarId>,
}

fn convert_ty(ty: &STy) -> Ty {
    match ty {
        STy::Bool => Ty::Bool,
        STy::Range(hi) => Ty::Nat { max: *hi },
        STy::Enum(consts) => Ty::Enum { consts: consts.clone() },
    }
}

pub struct Elaborator<'a> {
    source: &'a str,
    agents: Vec<String>,
    agent_type: String,
    env: HashMap<String, EnvEntry>,
    vars: Vec<TypedVar>,
    env_decls: Vec<EnvDecl>,
    actions: Vec<String>,
}

/// Per-expression resolution context.
pub struct Scope {
    /// `Self` and local/parameter names resolve against this agent.
    pub agent: Option<AgentId>,
    /// parameter name → aliased environment variable
    pub params: HashMap<String, TVarId>,
    /// bare local name → variable
    pub locals: HashMap<String, TVarId>,
    /// Action variables (`A.a`) may be read (transitions clause only).
    pub allow_actions: bool,
    bound: Vec<(String, AgentId)>,
}

impl Scope {
    fn env_level() -> Scope {
        Scope {
            agent: None,
            params: HashMap::new(),
            locals: HashMap::new(),
            allow_actions: false,
            bound: Vec::new(),
        }
    }

    fn lookup_bound(&self, name: &str) -> Option<AgentId> {
        self.bound.iter().rev().find(|(n, _)| n == name).map(|(_, a)| *a)
    }
}

enum Term {
    BoolExpr(Expr),
    TypedVar(TVarId),
    Lit(u64, Span),
    /// Unresolved identifier; meaningful only against an enum-typed peer.
    Name(String, Span),
}

pub fn elaborate(source: &str, doc: &Document) -> Result<SystemModel, KbpError> {
    let mut el = Elaborator::new(source, doc)?;
    el.run(doc)
}

impl<'a> Elaborator<'a> {
    fn new(source: &'a str, doc: &Document) -> Result<Elaborator<'a>, KbpError> {
        let mut agents = Vec::new();
        for a in &doc.agents {
            if agents.contains(&a.name) {
                return Err(KbpError::elab(
                    source,
                    a.span.start,
                    format!("duplicate agent {}", a.name),
                ));
            }
            agents.push(a.name.clone());
        }
        let mut agent_type: Option<String> = None;
        for d in &doc.env_decls {
            if let Some(t) = &d.index_type {
                match &agent_type {
                    None => agent_type = Some(t.clone()),
                    Some(prev) if prev != t => {
                        return Err(KbpError::elab(
                            source,
                            d.span.start,
                            format!("conflicting agent index types {prev} and {t}"),
                        ))
                    }
                    _ => {}
                }
            }
        }
        Ok(Elaborator {
            source,
            agents,
            agent_type: agent_type.unwrap_or_else(|| "Agent".to_string()),
            env: HashMap::new(),
            vars: Vec::new(),
            env_decls: Vec::new(),
            actions: Vec::new(),
        })
    }

    fn err(&self, span: Span, msg: impl std::fmt::Display) -> KbpError {
        KbpError::elab(self.source, span.start, msg)
    }

    fn run(&mut self, doc: &Document) -> Result<SystemModel, KbpError> {
        // Environment variables, in declaration order; agent-indexed arrays
        // expand to one variable per agent.
        for d in &doc.env_decls {
            if self.env.contains_key(&d.name) {
                return Err(self.err(d.span, format!("duplicate declaration of {}", d.name)));
            }
            let ty = convert_ty(&d.ty);
            let mut ids = Vec::new();
            if d.index_type.is_some() {
                for a in 0..self.agents.len() {
                    ids.push(self.add_var(TypedVar {
                        name: format!("{}[{}]", d.name, self.agents[a]),
                        ty: ty.clone(),
                        owner: VarOwner::Env,
                        history: None,
                    }));
                }
            } else {
                ids.push(self.add_var(TypedVar {
                    name: d.name.clone(),
                    ty: ty.clone(),
                    owner: VarOwner::Env,
                    history: None,
                }));
            }
            self.env.insert(
                d.name.clone(),
                EnvEntry { indexed: d.index_type.is_some(), vars: ids.clone() },
            );
            self.env_decls.push(EnvDecl {
                base: d.name.clone(),
                ty,
                indexed: d.index_type.is_some(),
                vars: ids,
            });
        }

        // Global action alphabet: every action emitted by any protocol body.
        let mut templates: HashMap<&str, &SProtocolDecl> = HashMap::new();
        for p in &doc.protocols {
            if templates.insert(p.name.as_str(), p).is_some() {
                return Err(self.err(p.span, format!("duplicate protocol \"{}\"", p.name)));
            }
            collect_actions(&p.body, &mut self.actions);
        }

        // Instantiate a protocol per agent.
        let mut protocols = Vec::new();
        for (agent_id, decl) in doc.agents.iter().enumerate() {
            let template = templates
                .get(decl.protocol.as_str())
                .ok_or_else(|| self.err(decl.span, format!("unknown protocol \"{}\"", decl.protocol)))?;
            protocols.push(self.instantiate(agent_id, decl, template)?);
        }

        // Pad agent programs to the joint length with trailing skips.
        let horizon = protocols.iter().map(|p| p.program.len()).max().unwrap_or(0);
        for p in &mut protocols {
            while p.program.len() < horizon {
                p.program.0.push(Statement::Atomic(AtomicStatement::skip()));
            }
        }

        let mut scope = Scope::env_level();
        let init_env = match &doc.init {
            Some(e) => self.formula(&mut scope, e)?,
            None => Expr::Bool(true),
        };
        let tau = match &doc.transitions {
            Some(p) => {
                let mut scope = Scope::env_level();
                scope.allow_actions = true;
                self.program(&mut scope, p)?
            }
            None => Program::default(),
        };

        Ok(SystemModel {
            agents: std::mem::take(&mut self.agents),
            agent_type: std::mem::take(&mut self.agent_type),
            actions: std::mem::take(&mut self.actions),
            vars: std::mem::take(&mut self.vars),
            env_decls: std::mem::take(&mut self.env_decls),
            init_env,
            tau,
            protocols,
        })
    }

    fn add_var(&mut self, v: TypedVar) -> TVarId {
        self.vars.push(v);
        self.vars.len() - 1
    }

    fn instantiate(
        &mut self,
        agent: AgentId,
        decl: &SAgentDecl,
        template: &SProtocolDecl,
    ) -> Result<Protocol, KbpError> {
        if decl.args.len() != template.params.len() {
            return Err(self.err(
                decl.span,
                format!(
                    "protocol \"{}\" takes {} parameters, {} given",
                    template.name,
                    template.params.len(),
                    decl.args.len()
                ),
            ));
        }
        let mut params = Vec::new();
        let mut scope = Scope {
            agent: Some(agent),
            params: HashMap::new(),
            locals: HashMap::new(),
            allow_actions: false,
            bound: Vec::new(),
        };
        for (param, arg) in template.params.iter().zip(&decl.args) {
            let var = self.resolve_env_arg(agent, arg, decl.span)?;
            let want = convert_ty(&param.ty);
            if self.vars[var].ty != want {
                return Err(self.err(
                    param.span,
                    format!(
                        "parameter {} of \"{}\" has type {:?}, bound to {} of type {:?}",
                        param.name, template.name, want, self.vars[var].name, self.vars[var].ty
                    ),
                ));
            }
            if scope.params.insert(param.name.clone(), var).is_some() {
                return Err(self.err(param.span, format!("duplicate parameter {}", param.name)));
            }
            params.push(ParamBinding { name: param.name.clone(), var, observable: param.observable });
        }
        let mut locals = Vec::new();
        for l in &template.locals {
            if scope.params.contains_key(&l.name) || scope.locals.contains_key(&l.name) {
                return Err(self.err(l.span, format!("duplicate local {}", l.name)));
            }
            // `base@k` names reconstruct history metadata for re-parsed
            // emissions of history-transformed models.
            let history = l.name.rsplit_once('@').and_then(|(base, k)| {
                let time: usize = k.parse().ok()?;
                let base_var = scope
                    .params
                    .get(base)
                    .or_else(|| scope.locals.get(base))
                    .copied()?;
                Some(HistoryInfo { base: base_var, time })
            });
            let var = self.add_var(TypedVar {
                name: format!("{}.{}", self.agents[agent], l.name),
                ty: convert_ty(&l.ty),
                owner: VarOwner::Local(agent),
                history,
            });
            scope.locals.insert(l.name.clone(), var);
            locals.push((var, l.observable));
        }
        let init = match &template.init {
            Some(e) => self.formula(&mut scope, e)?,
            None => Expr::Bool(true),
        };
        let program = self.program(&mut scope, &template.body)?;
        let mut actions: Vec<ActId> = Vec::new();
        collect_act_ids(&program, &mut actions);
        Ok(Protocol {
            source_name: template.name.clone(),
            params,
            locals,
            init,
            actions,
            program,
        })
    }

    fn resolve_env_arg(
        &self,
        agent: AgentId,
        arg: &SVarRef,
        span: Span,
    ) -> Result<TVarId, KbpError> {
        match arg {
            SVarRef::Plain(base) => {
                let entry = self
                    .env
                    .get(base)
                    .ok_or_else(|| self.err(span, format!("unknown environment variable {base}")))?;
                if entry.indexed {
                    return Err(self.err(span, format!("{base} is agent-indexed; give an index")));
                }
                Ok(entry.vars[0])
            }
            SVarRef::Indexed(base, idx) => {
                let entry = self
                    .env
                    .get(base)
                    .ok_or_else(|| self.err(span, format!("unknown environment variable {base}")))?;
                if !entry.indexed {
                    return Err(self.err(span, format!("{base} is not agent-indexed")));
                }
                let a = match idx {
                    SIndex::SelfRef => agent,
                    SIndex::Name(n) => self
                        .agents
                        .iter()
                        .position(|x| x == n)
                        .ok_or_else(|| self.err(span, format!("unknown agent {n}")))?,
                };
                Ok(entry.vars[a])
            }
            SVarRef::Dotted(..) => Err(self.err(span, "action variables cannot be parameters")),
        }
    }

    // ------------------------------------------------------------------
    // programs
    // ------------------------------------------------------------------

    fn program(&mut self, scope: &mut Scope, p: &SProgram) -> Result<Program, KbpError> {
        let mut stmts = Vec::new();
        for s in &p.0 {
            stmts.push(self.statement(scope, s)?);
        }
        Ok(Program(stmts))
    }

    fn statement(&mut self, scope: &mut Scope, s: &SStatement) -> Result<Statement, KbpError> {
        match s {
            SStatement::Atomic(a) => Ok(Statement::Atomic(self.atomic(scope, a)?)),
            SStatement::Branch { arms, span } => {
                let mut out: Vec<Arm> = Vec::new();
                for (i, arm) in arms.iter().enumerate() {
                    let guard = match &arm.guard {
                        SGuard::Expr(e) => self.formula(scope, e)?,
                        SGuard::Otherwise(sp) => {
                            if i + 1 != arms.len() {
                                return Err(self.err(*sp, "otherwise must be the last arm"));
                            }
                            if i == 0 {
                                return Err(self.err(*sp, "otherwise cannot be the only arm"));
                            }
                            Expr::not(Expr::disj(out.iter().map(|a| a.guard.clone())))
                        }
                    };
                    let body = self.atomic(scope, &arm.body)?;
                    out.push(Arm { guard, body });
                }
                if out.is_empty() {
                    return Err(self.err(*span, "branch statement needs at least one arm"));
                }
                Ok(Statement::Branch(out))
            }
        }
    }

    fn atomic(&mut self, scope: &mut Scope, a: &SAtomic) -> Result<AtomicStatement, KbpError> {
        let action = match &a.action {
            None => None,
            Some(name) => Some(
                self.actions
                    .iter()
                    .position(|x| x == name)
                    .ok_or_else(|| self.err(a.span, format!("unknown action {name}")))?,
            ),
        };
        let mut assigns = Vec::new();
        for (target, value) in &a.assigns {
            let tv = self.resolve_target(scope, target, a.span)?;
            let rhs = self.rhs(scope, tv, value)?;
            assigns.push((tv, rhs));
        }
        Ok(AtomicStatement { action, assigns })
    }

    fn resolve_target(
        &self,
        scope: &Scope,
        target: &SVarRef,
        span: Span,
    ) -> Result<TVarId, KbpError> {
        match self.resolve_ref(scope, target, span)? {
            Term::TypedVar(v) => Ok(v),
            Term::BoolExpr(Expr::Var(v)) => Ok(v),
            _ => Err(self.err(span, "assignment target must be a variable")),
        }
    }

    fn rhs(&mut self, scope: &mut Scope, target: TVarId, value: &SExpr) -> Result<Rhs, KbpError> {
        let target_ty = self.vars[target].ty.clone();
        if target_ty.is_bool() {
            return Ok(Rhs::Bool(self.formula(scope, value)?));
        }
        match self.term(scope, value)? {
            Term::TypedVar(v) => {
                if self.vars[v].ty != target_ty {
                    return Err(self.err(
                        value.span,
                        format!(
                            "type mismatch: {} := {}",
                            self.vars[target].name, self.vars[v].name
                        ),
                    ));
                }
                Ok(Rhs::Copy(v))
            }
            Term::Lit(n, sp) => {
                if n >= target_ty.domain() {
                    return Err(self.err(sp, format!("literal {n} out of range")));
                }
                Ok(Rhs::Const(n))
            }
            Term::Name(name, sp) => match &target_ty {
                Ty::Enum { consts } => {
                    let ix = consts
                        .iter()
                        .position(|c| *c == name)
                        .ok_or_else(|| self.err(sp, format!("unknown enum constant {name}")))?;
                    Ok(Rhs::Const(ix as u64))
                }
                _ => Err(self.err(sp, format!("unknown identifier {name}"))),
            },
            Term::BoolExpr(_) => Err(self.err(
                value.span,
                "finite-typed assignments take a variable or constant",
            )),
        }
    }

    // ------------------------------------------------------------------
    // formulas and terms
    // ------------------------------------------------------------------

    pub fn formula(&mut self, scope: &mut Scope, e: &SExpr) -> Result<Expr, KbpError> {
        match &e.node {
            SNode::True => Ok(Expr::Bool(true)),
            SNode::False => Ok(Expr::Bool(false)),
            SNode::Not(a) => Ok(Expr::not(self.formula(scope, a)?)),
            SNode::And(a, b) => Ok(Expr::and(self.formula(scope, a)?, self.formula(scope, b)?)),
            SNode::Or(a, b) => Ok(Expr::or(self.formula(scope, a)?, self.formula(scope, b)?)),
            SNode::Next(a) => Ok(Expr::Next(Box::new(self.formula(scope, a)?))),
            SNode::Knows(idx, a) => {
                let agent = self.resolve_agent(scope, idx, e.span)?;
                Ok(Expr::Knows(agent, Box::new(self.formula(scope, a)?)))
            }
            SNode::Exists(binder, ty, body) | SNode::Forall(binder, ty, body) => {
                if *ty != self.agent_type {
                    return Err(self.err(
                        e.span,
                        format!("quantifiers range over the agent type {}", self.agent_type),
                    ));
                }
                let mut parts = Vec::new();
                for a in 0..self.agents.len() {
                    scope.bound.push((binder.clone(), a));
                    let r = self.formula(scope, body);
                    scope.bound.pop();
                    parts.push(r?);
                }
                Ok(match &e.node {
                    SNode::Exists(..) => Expr::disj(parts),
                    _ => Expr::conj(parts),
                })
            }
            SNode::Eq(a, b) => {
                let ta = self.term(scope, a)?;
                let tb = self.term(scope, b)?;
                self.equality(ta, tb, e.span)
            }
            SNode::Num(_) | SNode::Ref(_) => {
                let t = self.term(scope, e)?;
                self.term_to_bool(t, e.span)
            }
        }
    }

    fn equality(&self, a: Term, b: Term, span: Span) -> Result<Expr, KbpError> {
        use Term::*;
        let finite = |v: TVarId| !self.vars[v].ty.is_bool();
        match (a, b) {
            (TypedVar(v), TypedVar(w)) if finite(v) && finite(w) => {
                if self.vars[v].ty != self.vars[w].ty {
                    return Err(self.err(
                        span,
                        format!(
                            "cannot compare {} and {} (different types)",
                            self.vars[v].name, self.vars[w].name
                        ),
                    ));
                }
                Ok(Expr::EqVar(v, w))
            }
            (TypedVar(v), Lit(n, sp)) | (Lit(n, sp), TypedVar(v)) if finite(v) => {
                if n >= self.vars[v].ty.domain() {
                    return Err(self.err(sp, format!("literal {n} out of range")));
                }
                Ok(Expr::EqConst(v, n))
            }
            (TypedVar(v), Name(c, sp)) | (Name(c, sp), TypedVar(v)) if finite(v) => {
                match &self.vars[v].ty {
                    Ty::Enum { consts } => {
                        let ix = consts
                            .iter()
                            .position(|x| *x == c)
                            .ok_or_else(|| self.err(sp, format!("unknown enum constant {c}")))?;
                        Ok(Expr::EqConst(v, ix as u64))
                    }
                    _ => Err(self.err(sp, format!("unknown identifier {c}"))),
                }
            }
            (Lit(n, _), Lit(m, _)) => Ok(Expr::Bool(n == m)),
            (a, b) => {
                let ea = self.term_to_bool(a, span)?;
                let eb = self.term_to_bool(b, span)?;
                Ok(Expr::Iff(Box::new(ea), Box::new(eb)))
            }
        }
    }

    fn term_to_bool(&self, t: Term, span: Span) -> Result<Expr, KbpError> {
        match t {
            Term::BoolExpr(e) => Ok(e),
            Term::TypedVar(v) if self.vars[v].ty.is_bool() => Ok(Expr::Var(v)),
            Term::TypedVar(v) => Err(self.err(
                span,
                format!("{} is not boolean; compare it with ==", self.vars[v].name),
            )),
            Term::Lit(..) => Err(self.err(span, "bare numbers are not formulas")),
            Term::Name(n, sp) => Err(self.err(sp, format!("unknown identifier {n}"))),
        }
    }

    fn term(&mut self, scope: &mut Scope, e: &SExpr) -> Result<Term, KbpError> {
        match &e.node {
            SNode::Num(n) => Ok(Term::Lit(*n, e.span)),
            SNode::Ref(r) => self.resolve_ref(scope, r, e.span),
            _ => Ok(Term::BoolExpr(self.formula(scope, e)?)),
        }
    }

    fn resolve_agent(&self, scope: &Scope, idx: &SIndex, span: Span) -> Result<AgentId, KbpError> {
        match idx {
            SIndex::SelfRef => scope
                .agent
                .ok_or_else(|| self.err(span, "Self outside a protocol")),
            SIndex::Name(n) => {
                if let Some(a) = scope.lookup_bound(n) {
                    return Ok(a);
                }
                self.agents
                    .iter()
                    .position(|x| x == n)
                    .ok_or_else(|| self.err(span, format!("unknown agent {n}")))
            }
        }
    }

    fn resolve_ref(&self, scope: &Scope, r: &SVarRef, span: Span) -> Result<Term, KbpError> {
        match r {
            SVarRef::Plain(name) => {
                if scope.lookup_bound(name).is_some() {
                    return Err(self.err(
                        span,
                        format!("{name} is an agent-valued binder, not a variable"),
                    ));
                }
                if let Some(&v) = scope.params.get(name) {
                    return Ok(Term::TypedVar(v));
                }
                if let Some(&v) = scope.locals.get(name) {
                    return Ok(Term::TypedVar(v));
                }
                if let Some(entry) = self.env.get(name) {
                    if entry.indexed {
                        return Err(self.err(span, format!("{name} is agent-indexed; give an index")));
                    }
                    return Ok(Term::TypedVar(entry.vars[0]));
                }
                Ok(Term::Name(name.clone(), span))
            }
            SVarRef::Indexed(base, idx) => {
                let entry = self
                    .env
                    .get(base)
                    .ok_or_else(|| self.err(span, format!("unknown variable {base}")))?;
                if !entry.indexed {
                    return Err(self.err(span, format!("{base} is not agent-indexed")));
                }
                let a = self.resolve_agent(scope, idx, span)?;
                Ok(Term::TypedVar(entry.vars[a]))
            }
            SVarRef::Dotted(idx, field) => {
                let agent = self.resolve_agent(scope, idx, span)?;
                if scope.allow_actions {
                    if let Some(act_id) = self.actions.iter().position(|x| x == field) {
                        return Ok(Term::BoolExpr(Expr::ActVar(agent, act_id)));
                    }
                }
                // `Agent.local`: cross-agent reads, for specification formulas.
                let qualified = format!("{}.{}", self.agents[agent], field);
                if let Some(tv) = self.vars.iter().position(|v| v.name == qualified) {
                    return Ok(Term::TypedVar(tv));
                }
                if scope.allow_actions {
                    Err(self.err(span, format!("unknown action or local variable {field}")))
                } else {
                    Err(self.err(span, format!("unknown local variable {qualified}")))
                }
            }
        }
    }
}

fn collect_actions(p: &SProgram, out: &mut Vec<String>) {
    let mut add = |a: &Option<String>| {
        if let Some(name) = a {
            if !out.contains(name) {
                out.push(name.clone());
            }
        }
    };
    for s in &p.0 {
        match s {
            SStatement::Atomic(a) => add(&a.action),
            SStatement::Branch { arms, .. } => {
                for arm in arms {
                    add(&arm.body.action);
                }
            }
        }
    }
}

fn collect_act_ids(p: &Program, out: &mut Vec<ActId>) {
    let mut add = |a: &Option<ActId>| {
        if let Some(id) = a {
            if !out.contains(id) {
                out.push(*id);
            }
        }
    };
    for s in &p.0 {
        match s {
            Statement::Atomic(a) => add(&a.action),
            Statement::Branch(arms) => {
                for arm in arms {
                    add(&arm.body.action);
                }
            }
        }
    }
}

/// Parses a specification formula against a model's environment-level scope
/// (`X`, `Knows A`, quantifiers and any state variable allowed).
pub fn parse_spec_formula(model: &SystemModel, text: &str) -> Result<Expr, KbpError> {
    let se = super::parser::parse_formula(text)?;
    let mut el = reconstruct(model);
    let mut scope = Scope::env_level();
    el.formula(&mut scope, &se)
}

/// Parses a formula in an agent's protocol scope (parameter and local names
/// visible, `Self` resolves to the agent).
pub fn parse_agent_formula(
    model: &SystemModel,
    agent: AgentId,
    text: &str,
) -> Result<Expr, KbpError> {
    let se = super::parser::parse_formula(text)?;
    let mut el = reconstruct(model);
    let mut scope = agent_scope(model, agent);
    el.formula(&mut scope, &se)
}

pub(crate) fn agent_scope(model: &SystemModel, agent: AgentId) -> Scope {
    let proto = &model.protocols[agent];
    let params = proto.params.iter().map(|p| (p.name.clone(), p.var)).collect();
    let locals = proto
        .locals
        .iter()
        .map(|(v, _)| {
            let full = &model.vars[*v].name;
            let bare = full.split_once('.').map_or(full.clone(), |(_, n)| n.to_string());
            (bare, *v)
        })
        .collect();
    Scope { agent: Some(agent), params, locals, allow_actions: false, bound: Vec::new() }
}

/// Rebuilds an elaborator view over an existing model, for parsing formulas
/// after the fact.
fn reconstruct(model: &SystemModel) -> Elaborator<'static> {
    let mut env = HashMap::new();
    for d in &model.env_decls {
        env.insert(
            d.base.clone(),
            EnvEntry { indexed: d.indexed, vars: d.vars.clone() },
        );
    }
    Elaborator {
        source: "",
        agents: model.agents.clone(),
        agent_type: model.agent_type.clone(),
        env,
        vars: model.vars.clone(),
        env_decls: Vec::new(),
        actions: model.actions.clone(),
    }
}
