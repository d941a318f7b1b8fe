//! Pretty-printer: emits a model back into the surface grammar. Printing a
//! parsed model and re-parsing it yields a structurally equal model (modulo
//! protocol template names, which specialize per agent on emission).

use std::fmt::Write as _;

use super::model::*;

/// Precedence levels: disjunction binds loosest, atoms tightest.
const OR: u8 = 1;
const AND: u8 = 2;
const UNARY: u8 = 3;
const EQ: u8 = 4;
const ATOM: u8 = 5;

pub struct Printer<'a> {
    pub model: &'a SystemModel,
    /// When set, variables are named from this agent's point of view
    /// (parameter and bare local names).
    pub agent: Option<AgentId>,
}

impl<'a> Printer<'a> {
    pub fn new(model: &'a SystemModel) -> Printer<'a> {
        Printer { model, agent: None }
    }

    pub fn for_agent(model: &'a SystemModel, agent: AgentId) -> Printer<'a> {
        Printer { model, agent: Some(agent) }
    }

    pub fn var_name(&self, v: TVarId) -> String {
        if let Some(a) = self.agent {
            if let Some(name) = self.model.protocols[a].local_name(self.model, v) {
                return name;
            }
        }
        self.model.vars[v].name.clone()
    }

    fn value_name(&self, v: TVarId, value: u64) -> String {
        match &self.model.vars[v].ty {
            Ty::Enum { consts } => consts[value as usize].clone(),
            _ => value.to_string(),
        }
    }

    pub fn formula(&self, e: &Expr) -> String {
        let mut s = String::new();
        self.fmt_expr(&mut s, e, OR);
        s
    }

    fn fmt_expr(&self, out: &mut String, e: &Expr, min: u8) {
        let level = match e {
            Expr::Or(..) => OR,
            Expr::And(..) => AND,
            Expr::Not(_) | Expr::Knows(..) | Expr::Next(_) => UNARY,
            Expr::EqVar(..) | Expr::EqConst(..) | Expr::Iff(..) => EQ,
            _ => ATOM,
        };
        if level < min {
            out.push('(');
            self.fmt_expr(out, e, OR);
            out.push(')');
            return;
        }
        match e {
            Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Expr::Var(v) => out.push_str(&self.var_name(*v)),
            Expr::ActVar(a, act) => {
                let _ = write!(out, "{}.{}", self.model.agents[*a], self.model.actions[*act]);
            }
            Expr::SkelVar(id) => {
                let _ = write!(out, "skel_{id}");
            }
            Expr::Not(a) => {
                out.push_str("neg ");
                self.fmt_expr(out, a, UNARY);
            }
            Expr::And(a, b) => {
                self.fmt_expr(out, a, AND);
                out.push_str(" /\\ ");
                self.fmt_expr(out, b, AND + 1);
            }
            Expr::Or(a, b) => {
                self.fmt_expr(out, a, OR);
                out.push_str(" \\/ ");
                self.fmt_expr(out, b, OR + 1);
            }
            Expr::EqVar(a, b) => {
                let _ = write!(out, "{} == {}", self.var_name(*a), self.var_name(*b));
            }
            Expr::EqConst(v, n) => {
                let _ = write!(out, "{} == {}", self.var_name(*v), self.value_name(*v, *n));
            }
            Expr::Iff(a, b) => {
                self.fmt_expr(out, a, ATOM);
                out.push_str(" == ");
                self.fmt_expr(out, b, ATOM);
            }
            Expr::Next(a) => {
                out.push_str("X ");
                self.fmt_expr(out, a, UNARY);
            }
            Expr::Knows(agent, a) => {
                let _ = write!(out, "Knows {} ", self.model.agents[*agent]);
                self.fmt_expr(out, a, UNARY);
            }
        }
    }

    pub fn rhs(&self, target: TVarId, rhs: &Rhs) -> String {
        match rhs {
            Rhs::Bool(e) => self.formula(e),
            Rhs::Copy(v) => self.var_name(*v),
            Rhs::Const(n) => self.value_name(target, *n),
        }
    }

    pub fn atomic(&self, a: &AtomicStatement) -> String {
        let assigns: Vec<String> = a
            .assigns
            .iter()
            .map(|(t, r)| format!("{} := {}", self.var_name(*t), self.rhs(*t, r)))
            .collect();
        match (&a.action, assigns.is_empty()) {
            (None, true) => "skip".to_string(),
            (None, false) if assigns.len() == 1 => assigns[0].clone(),
            (None, false) => format!("<< | {} >>", assigns.join(", ")),
            (Some(act), true) => format!("<< {} >>", self.model.actions[*act]),
            (Some(act), false) => {
                format!("<< {} | {} >>", self.model.actions[*act], assigns.join(", "))
            }
        }
    }

    pub fn statement(&self, stmt: &Statement, indent: &str) -> String {
        match stmt {
            Statement::Atomic(a) => format!("{indent}{}", self.atomic(a)),
            Statement::Branch(arms) => {
                let mut s = String::new();
                for (i, arm) in arms.iter().enumerate() {
                    let head = if i == 0 { format!("{indent}if ") } else { format!("{indent}[] ") };
                    let _ = write!(s, "{head}{} -> {}", self.formula(&arm.guard), self.atomic(&arm.body));
                    s.push('\n');
                }
                let _ = write!(s, "{indent}fi");
                s
            }
        }
    }

    pub fn program(&self, p: &Program, indent: &str) -> String {
        let stmts: Vec<String> = p.0.iter().map(|s| self.statement(s, indent)).collect();
        stmts.join(";\n")
    }
}

fn ty_text(ty: &Ty) -> String {
    match ty {
        Ty::Bool => "Bool".to_string(),
        Ty::Nat { max } => format!("0..{max}"),
        Ty::Enum { consts } => format!("{{{}}}", consts.join(", ")),
    }
}

/// Emits the whole model as a source document. Protocols are specialized per
/// agent (template names gain an agent suffix when shared).
pub fn print_document(model: &SystemModel) -> String {
    let mut out = String::new();
    for d in &model.env_decls {
        if d.indexed {
            let _ = writeln!(out, "{}: {}[{}]", d.base, ty_text(&d.ty), model.agent_type);
        } else {
            let _ = writeln!(out, "{}: {}", d.base, ty_text(&d.ty));
        }
    }
    out.push('\n');
    let env_printer = Printer::new(model);
    let _ = writeln!(out, "init_cond = {}", env_printer.formula(&model.init_env));
    out.push('\n');

    // Protocol emission names: keep the template name when unique, otherwise
    // specialize with the agent name.
    let names: Vec<String> = model
        .protocols
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let shared = model
                .protocols
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && q.source_name == p.source_name);
            if shared {
                format!("{}_{}", p.source_name, model.agents[i])
            } else {
                p.source_name.clone()
            }
        })
        .collect();

    for (i, p) in model.protocols.iter().enumerate() {
        let args: Vec<String> = p.params.iter().map(|b| model.vars[b.var].name.clone()).collect();
        let _ = writeln!(out, "agent {} \"{}\" ( {} )", model.agents[i], names[i], args.join(", "));
    }
    out.push('\n');

    if !model.tau.0.is_empty() {
        out.push_str("transitions\nbegin\n");
        let _ = writeln!(out, "{}", env_printer.program(&model.tau, ""));
        out.push_str("end\n\n");
    }

    for (i, p) in model.protocols.iter().enumerate() {
        let printer = Printer::for_agent(model, i);
        let params: Vec<String> = p
            .params
            .iter()
            .map(|b| {
                let obs = if b.observable { "observable " } else { "" };
                format!("{}: {}{}", b.name, obs, ty_text(&model.vars[b.var].ty))
            })
            .collect();
        let _ = writeln!(out, "protocol \"{}\" ( {} )", names[i], params.join(", "));
        for (v, obs) in &p.locals {
            let obs = if *obs { "observable " } else { "" };
            let _ = writeln!(out, "{}: {}{}", printer.var_name(*v), obs, ty_text(&model.vars[*v].ty));
        }
        if p.init != Expr::Bool(true) {
            let _ = writeln!(out, "init_cond = {}", printer.formula(&p.init));
        }
        out.push_str("begin\n");
        let _ = writeln!(out, "{}", printer.program(&p.program, ""));
        out.push_str("end\n\n");
    }
    out
}

/// Structural equality modulo protocol template names, which emission
/// specializes per agent.
pub fn structurally_eq(a: &SystemModel, b: &SystemModel) -> bool {
    let strip = |m: &SystemModel| {
        let mut m = m.clone();
        for p in &mut m.protocols {
            p.source_name = String::new();
        }
        m
    };
    strip(a) == strip(b)
}
