//! Elaborated system models: agents, typed variables, programs and
//! protocols with every name resolved, every quantifier expanded and every
//! agent instantiated from its protocol template.

use std::fmt;

pub type AgentId = usize;
pub type ActId = usize;
pub type TVarId = usize;
/// Key of a skeleton variable: assigned densely during skeleton extraction.
pub type SkelId = usize;

/// Declared finite type of a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Bool,
    /// Bounded natural `0..max` (inclusive).
    Nat { max: u64 },
    /// Finite enumeration; values are indices into `consts`.
    Enum { consts: Vec<String> },
}

impl Ty {
    /// Number of values in the type.
    pub fn domain(&self) -> u64 {
        match self {
            Ty::Bool => 2,
            Ty::Nat { max } => max + 1,
            Ty::Enum { consts } => consts.len() as u64,
        }
    }

    /// Width of the binary encoding.
    pub fn bits(&self) -> usize {
        let d = self.domain();
        if d <= 1 {
            1
        } else {
            (64 - (d - 1).leading_zeros()) as usize
        }
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, Ty::Bool)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarOwner {
    Env,
    Local(AgentId),
}

/// A history copy `v@k` records the value of `base` at time `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistoryInfo {
    pub base: TVarId,
    pub time: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedVar {
    /// Qualified display name, e.g. `muddy[Child0]` or `Child1.presumed`.
    pub name: String,
    pub ty: Ty,
    pub owner: VarOwner,
    pub history: Option<HistoryInfo>,
}

/// How an environment variable was declared, for faithful re-emission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvDecl {
    pub base: String,
    pub ty: Ty,
    /// One variable per agent when true.
    pub indexed: bool,
    /// The declared variables, in agent order when indexed.
    pub vars: Vec<TVarId>,
}

/// Elaborated boolean-valued formula/expression.
///
/// Finite-typed (non-boolean) terms only ever occur inside `EqVar`/`EqConst`
/// atoms and on the right-hand side of assignments ([`Rhs`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Bool(bool),
    /// A boolean-typed variable.
    Var(TVarId),
    /// Action variable `agent.act`; meaningful only in the transitions
    /// clause.
    ActVar(AgentId, ActId),
    /// Placeholder introduced by skeleton extraction.
    SkelVar(SkelId),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    /// Equality of two finite-typed variables of the same type.
    EqVar(TVarId, TVarId),
    /// Finite-typed variable against a literal value.
    EqConst(TVarId, u64),
    /// Boolean equality.
    Iff(Box<Expr>, Box<Expr>),
    /// Next-time; permitted only in specification formulas.
    Next(Box<Expr>),
    Knows(AgentId, Box<Expr>),
}

impl Expr {
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    /// Conjunction of a sequence; `true` when empty.
    pub fn conj(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut it = items.into_iter();
        match it.next() {
            None => Expr::Bool(true),
            Some(first) => it.fold(first, Expr::and),
        }
    }

    /// Disjunction of a sequence; `false` when empty.
    pub fn disj(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut it = items.into_iter();
        match it.next() {
            None => Expr::Bool(false),
            Some(first) => it.fold(first, Expr::or),
        }
    }

    /// True when no `Next` occurs anywhere in the formula.
    pub fn atemporal(&self) -> bool {
        !self.contains(&|e| matches!(e, Expr::Next(_)))
    }

    /// True when a `Knows` occurs anywhere in the formula.
    pub fn has_knowledge(&self) -> bool {
        self.contains(&|e| matches!(e, Expr::Knows(..)))
    }

    pub fn contains(&self, pred: &impl Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Not(e) | Expr::Next(e) | Expr::Knows(_, e) => e.contains(pred),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Iff(a, b) => {
                a.contains(pred) || b.contains(pred)
            }
            _ => false,
        }
    }

    /// Applies `f` to every node, children first.
    pub fn map(&self, f: &impl Fn(Expr) -> Expr) -> Expr {
        let rebuilt = match self {
            Expr::Not(e) => Expr::not(e.map(f)),
            Expr::And(a, b) => Expr::and(a.map(f), b.map(f)),
            Expr::Or(a, b) => Expr::or(a.map(f), b.map(f)),
            Expr::Iff(a, b) => Expr::Iff(Box::new(a.map(f)), Box::new(b.map(f))),
            Expr::Next(e) => Expr::Next(Box::new(e.map(f))),
            Expr::Knows(i, e) => Expr::Knows(*i, Box::new(e.map(f))),
            other => other.clone(),
        };
        f(rebuilt)
    }

    /// Variables read outside any knowledge operator scope.
    pub fn free_vars_outside_knowledge(&self, out: &mut Vec<TVarId>) {
        match self {
            Expr::Var(v) => out.push(*v),
            Expr::EqVar(a, b) => {
                out.push(*a);
                out.push(*b);
            }
            Expr::EqConst(v, _) => out.push(*v),
            Expr::Not(e) | Expr::Next(e) => e.free_vars_outside_knowledge(out),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Iff(a, b) => {
                a.free_vars_outside_knowledge(out);
                b.free_vars_outside_knowledge(out);
            }
            Expr::Knows(..) | Expr::Bool(_) | Expr::ActVar(..) | Expr::SkelVar(_) => {}
        }
    }

    /// All variables read anywhere, knowledge scopes included.
    pub fn all_vars(&self, out: &mut Vec<TVarId>) {
        match self {
            Expr::Var(v) => out.push(*v),
            Expr::EqVar(a, b) => {
                out.push(*a);
                out.push(*b);
            }
            Expr::EqConst(v, _) => out.push(*v),
            Expr::Not(e) | Expr::Next(e) | Expr::Knows(_, e) => e.all_vars(out),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Iff(a, b) => {
                a.all_vars(out);
                b.all_vars(out);
            }
            Expr::Bool(_) | Expr::ActVar(..) | Expr::SkelVar(_) => {}
        }
    }
}

/// Right-hand side of an assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    /// Boolean expression, for boolean targets.
    Bool(Expr),
    /// Copy of a finite-typed variable of the same type.
    Copy(TVarId),
    /// Finite-typed literal value.
    Const(u64),
}

/// `≪ action | assignments ≫`: emit an action signal and perform the
/// simultaneous assignments.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AtomicStatement {
    pub action: Option<ActId>,
    pub assigns: Vec<(TVarId, Rhs)>,
}

impl AtomicStatement {
    pub fn skip() -> AtomicStatement {
        AtomicStatement::default()
    }

    pub fn is_skip(&self) -> bool {
        self.action.is_none() && self.assigns.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arm {
    pub guard: Expr,
    pub body: AtomicStatement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Atomic(AtomicStatement),
    Branch(Vec<Arm>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program(pub Vec<Statement>);

impl Program {
    /// Number of simple statements.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamBinding {
    /// Name inside the protocol, e.g. `info1`.
    pub name: String,
    /// The aliased environment variable.
    pub var: TVarId,
    pub observable: bool,
}

/// An agent's protocol, already instantiated (parameters bound, `Self`
/// resolved).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol {
    /// Template name this instance came from, e.g. `child`.
    pub source_name: String,
    pub params: Vec<ParamBinding>,
    /// Local variables in declaration order (observable flag per var).
    pub locals: Vec<(TVarId, bool)>,
    pub init: Expr,
    pub actions: Vec<ActId>,
    pub program: Program,
}

impl Protocol {
    /// OVar: observable parameters (their environment variables) followed by
    /// observable locals, in declaration order.
    pub fn observables(&self) -> Vec<TVarId> {
        let mut out: Vec<TVarId> = self
            .params
            .iter()
            .filter(|p| p.observable)
            .map(|p| p.var)
            .collect();
        out.extend(self.locals.iter().filter(|(_, o)| *o).map(|(v, _)| *v));
        out
    }

    /// PVar ∪ LVar: every variable the protocol may read outside knowledge
    /// scopes.
    pub fn scope(&self) -> Vec<TVarId> {
        let mut out: Vec<TVarId> = self.params.iter().map(|p| p.var).collect();
        out.extend(self.locals.iter().map(|(v, _)| *v));
        out
    }

    /// Display name of a variable from this agent's point of view: parameter
    /// name for aliased environment variables, bare local name otherwise.
    pub fn local_name(&self, model: &SystemModel, v: TVarId) -> Option<String> {
        if let Some(p) = self.params.iter().find(|p| p.var == v) {
            return Some(p.name.clone());
        }
        if self.locals.iter().any(|(lv, _)| *lv == v) {
            let full = &model.vars[v].name;
            return Some(full.split_once('.').map_or(full.clone(), |(_, n)| n.to_string()));
        }
        None
    }
}

/// Whether any protocol still contains knowledge operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Standard,
    KnowledgeBased,
}

/// A parsed and elaborated system model: the environment plus one
/// instantiated protocol per agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemModel {
    pub agents: Vec<String>,
    /// Name of the finite agent type used for array indexing and quantifier
    /// sugar.
    pub agent_type: String,
    pub actions: Vec<String>,
    pub vars: Vec<TypedVar>,
    pub env_decls: Vec<EnvDecl>,
    pub init_env: Expr,
    pub tau: Program,
    pub protocols: Vec<Protocol>,
}

impl SystemModel {
    pub fn kind(&self) -> ModelKind {
        let uses_knowledge = self.protocols.iter().any(|p| {
            program_exprs(&p.program).any(|e| e.has_knowledge()) || p.init.has_knowledge()
        });
        if uses_knowledge {
            ModelKind::KnowledgeBased
        } else {
            ModelKind::Standard
        }
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn env_vars(&self) -> impl Iterator<Item = TVarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.owner == VarOwner::Env)
            .map(|(i, _)| i)
    }

    pub fn local_vars_of(&self, agent: AgentId) -> impl Iterator<Item = TVarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(move |(_, v)| v.owner == VarOwner::Local(agent))
            .map(|(i, _)| i)
    }

    /// Joint program length (protocols are padded to a common length).
    pub fn horizon(&self) -> usize {
        self.protocols.iter().map(|p| p.program.len()).max().unwrap_or(0)
    }

    pub fn act_id(&self, name: &str) -> Option<ActId> {
        self.actions.iter().position(|a| a == name)
    }
}

/// All guard and assignment expressions of a program.
pub fn program_exprs(p: &Program) -> impl Iterator<Item = &Expr> {
    p.0.iter().flat_map(|stmt| {
        let exprs: Vec<&Expr> = match stmt {
            Statement::Atomic(a) => atomic_exprs(a),
            Statement::Branch(arms) => arms
                .iter()
                .flat_map(|arm| {
                    let mut es = vec![&arm.guard];
                    es.extend(atomic_exprs(&arm.body));
                    es
                })
                .collect(),
        };
        exprs
    })
}

fn atomic_exprs(a: &AtomicStatement) -> Vec<&Expr> {
    a.assigns
        .iter()
        .filter_map(|(_, rhs)| match rhs {
            Rhs::Bool(e) => Some(e),
            _ => None,
        })
        .collect()
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Standard => write!(f, "standard"),
            ModelKind::KnowledgeBased => write!(f, "knowledge-based"),
        }
    }
}
