//! Static validation of an elaborated model: scoping, placement of
//! knowledge and temporal operators, and assignment well-formedness.

use std::collections::BTreeSet;

use super::model::*;
use crate::error::{KbpError, ValidationReport, Violation};

pub fn validate(model: &SystemModel) -> ValidationReport {
    let mut v = Validator { model, report: ValidationReport::default() };
    v.run();
    v.report
}

/// Validates and converts a non-empty report into an error.
pub fn ensure_valid(model: &SystemModel) -> Result<(), KbpError> {
    let report = validate(model);
    if report.is_ok() {
        Ok(())
    } else {
        Err(KbpError::Validation(report))
    }
}

struct Validator<'a> {
    model: &'a SystemModel,
    report: ValidationReport,
}

impl Validator<'_> {
    fn flag(&mut self, rule: &'static str, message: String) {
        self.report.violations.push(Violation { rule, message, at: None });
    }

    fn run(&mut self) {
        self.check_env_init();
        self.check_tau();
        for agent in 0..self.model.agents.len() {
            self.check_protocol(agent);
        }
    }

    fn check_env_init(&mut self) {
        let init = &self.model.init_env;
        if init.has_knowledge() {
            self.flag("env-init-knowledge-free", "init_cond must not contain Knows".into());
        }
        if !init.atemporal() {
            self.flag("atemporal", "init_cond must not contain X".into());
        }
        let mut vars = Vec::new();
        init.all_vars(&mut vars);
        for v in vars {
            if self.model.vars[v].owner != VarOwner::Env {
                self.flag(
                    "env-init-scope",
                    format!("init_cond reads non-environment variable {}", self.model.vars[v].name),
                );
            }
        }
    }

    fn check_tau(&mut self) {
        for (i, stmt) in self.model.tau.0.iter().enumerate() {
            let where_ = format!("transitions statement {i}");
            self.check_stmt_shape(stmt, &where_);
            for e in stmt_exprs(stmt) {
                if e.has_knowledge() {
                    self.flag("env-knowledge-free", format!("{where_}: Knows in the transitions clause"));
                }
                if !e.atemporal() {
                    self.flag("atemporal", format!("{where_}: X in the transitions clause"));
                }
                let mut vars = Vec::new();
                e.all_vars(&mut vars);
                for v in vars {
                    if self.model.vars[v].owner != VarOwner::Env {
                        self.flag(
                            "env-reads",
                            format!(
                                "{where_}: transitions read non-environment variable {}",
                                self.model.vars[v].name
                            ),
                        );
                    }
                }
            }
            for (target, _) in stmt_assigns(stmt) {
                if self.model.vars[*target].owner != VarOwner::Env {
                    self.flag(
                        "env-assigns",
                        format!(
                            "{where_}: transitions assign non-environment variable {}",
                            self.model.vars[*target].name
                        ),
                    );
                }
            }
            for a in stmt_atomics(stmt) {
                if a.action.is_some() {
                    self.flag(
                        "env-no-actions",
                        format!("{where_}: the environment does not emit actions"),
                    );
                }
            }
        }
    }

    fn check_protocol(&mut self, agent: AgentId) {
        let proto = &self.model.protocols[agent];
        let name = &self.model.agents[agent];
        let scope: BTreeSet<TVarId> = proto.scope().into_iter().collect();
        let locals: BTreeSet<TVarId> = proto.locals.iter().map(|(v, _)| *v).collect();

        if proto.init.has_knowledge() {
            self.flag("agent-init-knowledge-free", format!("{name}: init_cond must not contain Knows"));
        }
        if !proto.init.atemporal() {
            self.flag("atemporal", format!("{name}: init_cond must not contain X"));
        }
        let mut vars = Vec::new();
        proto.init.all_vars(&mut vars);
        for v in vars {
            if !locals.contains(&v) {
                self.flag(
                    "agent-init-scope",
                    format!(
                        "{name}: init_cond reads {}, which is not a local variable",
                        self.model.vars[v].name
                    ),
                );
            }
        }

        for (t, stmt) in proto.program.0.iter().enumerate() {
            let where_ = format!("{name}, statement {t}");
            self.check_stmt_shape(stmt, &where_);
            for e in stmt_exprs(stmt) {
                if !e.atemporal() {
                    self.flag("atemporal", format!("{where_}: temporal operator in a protocol"));
                }
                self.check_expr_scope(e, agent, &scope, &where_);
            }
            for (target, rhs) in stmt_assigns(stmt) {
                if !locals.contains(target) {
                    self.flag(
                        "assign-target",
                        format!(
                            "{where_}: assignment target {} is not a local variable",
                            self.model.vars[*target].name
                        ),
                    );
                }
                if let Rhs::Copy(src) = rhs {
                    if !scope.contains(src) {
                        self.flag(
                            "agent-scope",
                            format!(
                                "{where_}: reads {} outside the protocol scope",
                                self.model.vars[*src].name
                            ),
                        );
                    }
                }
            }
        }
    }

    /// Scoping outside knowledge operators: only PVar ∪ LVar. Inside a
    /// `Knows i` scope: environment variables plus agent i's own variables.
    fn check_expr_scope(
        &mut self,
        e: &Expr,
        agent: AgentId,
        scope: &BTreeSet<TVarId>,
        where_: &str,
    ) {
        match e {
            Expr::Knows(knower, body) => self.check_knowledge_scope(body, *knower, where_),
            Expr::Not(a) | Expr::Next(a) => self.check_expr_scope(a, agent, scope, where_),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Iff(a, b) => {
                self.check_expr_scope(a, agent, scope, where_);
                self.check_expr_scope(b, agent, scope, where_);
            }
            _ => {
                let mut vars = Vec::new();
                e.all_vars(&mut vars);
                for v in vars {
                    if !scope.contains(&v) {
                        self.flag(
                            "agent-scope",
                            format!(
                                "{where_}: guard reads {}, which is outside PVar ∪ LVar",
                                self.model.vars[v].name
                            ),
                        );
                    }
                }
            }
        }
    }

    fn check_knowledge_scope(&mut self, e: &Expr, knower: AgentId, where_: &str) {
        match e {
            Expr::Knows(inner, body) => self.check_knowledge_scope(body, *inner, where_),
            Expr::Not(a) | Expr::Next(a) => self.check_knowledge_scope(a, knower, where_),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Iff(a, b) => {
                self.check_knowledge_scope(a, knower, where_);
                self.check_knowledge_scope(b, knower, where_);
            }
            _ => {
                let mut vars = Vec::new();
                e.all_vars(&mut vars);
                for v in vars {
                    match self.model.vars[v].owner {
                        VarOwner::Env => {}
                        VarOwner::Local(owner) if owner == knower => {}
                        VarOwner::Local(owner) => self.flag(
                            "knowledge-scope",
                            format!(
                                "{where_}: Knows {} refers to {}, a local of {}",
                                self.model.agents[knower],
                                self.model.vars[v].name,
                                self.model.agents[owner]
                            ),
                        ),
                    }
                }
            }
        }
    }

    fn check_stmt_shape(&mut self, stmt: &Statement, where_: &str) {
        for a in stmt_atomics(stmt) {
            let mut seen = BTreeSet::new();
            for (target, _) in &a.assigns {
                if !seen.insert(*target) {
                    self.flag(
                        "duplicate-target",
                        format!(
                            "{where_}: {} assigned twice in one atomic statement",
                            self.model.vars[*target].name
                        ),
                    );
                }
            }
        }
        for e in stmt_exprs(stmt) {
            if e.contains(&|x| matches!(x, Expr::SkelVar(_))) {
                self.flag("unresolved-skeleton", format!("{where_}: unresolved skeleton variable"));
            }
        }
    }
}

fn stmt_atomics(stmt: &Statement) -> Vec<&AtomicStatement> {
    match stmt {
        Statement::Atomic(a) => vec![a],
        Statement::Branch(arms) => arms.iter().map(|arm| &arm.body).collect(),
    }
}

fn stmt_assigns(stmt: &Statement) -> Vec<&(TVarId, Rhs)> {
    stmt_atomics(stmt).into_iter().flat_map(|a| a.assigns.iter()).collect()
}

/// Guards plus boolean assignment right-hand sides of one statement.
pub fn stmt_exprs(stmt: &Statement) -> Vec<&Expr> {
    let mut out = Vec::new();
    match stmt {
        Statement::Atomic(a) => {
            for (_, rhs) in &a.assigns {
                if let Rhs::Bool(e) = rhs {
                    out.push(e);
                }
            }
        }
        Statement::Branch(arms) => {
            for arm in arms {
                out.push(&arm.guard);
                for (_, rhs) in &arm.body.assigns {
                    if let Rhs::Bool(e) = rhs {
                        out.push(e);
                    }
                }
            }
        }
    }
    out
}
