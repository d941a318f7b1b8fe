//! Surface syntax tree, before name resolution and agent instantiation.

use super::lexer::Span;

#[derive(Debug, Clone)]
pub struct Document {
    pub env_decls: Vec<SVarDecl>,
    pub init: Option<SExpr>,
    pub agents: Vec<SAgentDecl>,
    pub transitions: Option<SProgram>,
    pub protocols: Vec<SProtocolDecl>,
}

#[derive(Debug, Clone)]
pub struct SVarDecl {
    pub name: String,
    pub ty: STy,
    /// `Bool[Agent]` style agent-indexed array.
    pub index_type: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum STy {
    Bool,
    /// `0..k`
    Range(u64),
    /// `{c1, ..., ck}`
    Enum(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct SAgentDecl {
    pub name: String,
    pub protocol: String,
    pub args: Vec<SVarRef>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct SProtocolDecl {
    pub name: String,
    pub params: Vec<SParam>,
    pub locals: Vec<SParam>,
    pub init: Option<SExpr>,
    pub body: SProgram,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct SParam {
    pub name: String,
    pub observable: bool,
    pub ty: STy,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct SProgram(pub Vec<SStatement>);

#[derive(Debug, Clone)]
pub enum SStatement {
    Atomic(SAtomic),
    Branch { arms: Vec<SArm>, span: Span },
}

#[derive(Debug, Clone)]
pub struct SArm {
    pub guard: SGuard,
    pub body: SAtomic,
}

#[derive(Debug, Clone)]
pub enum SGuard {
    Expr(SExpr),
    /// Negation of the disjunction of all preceding guards.
    Otherwise(Span),
}

#[derive(Debug, Clone)]
pub struct SAtomic {
    pub action: Option<String>,
    pub assigns: Vec<(SVarRef, SExpr)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SIndex {
    SelfRef,
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SVarRef {
    /// Bare identifier: parameter, local, scalar environment variable, bound
    /// agent variable or enum constant, depending on scope.
    Plain(String),
    /// `base[index]`
    Indexed(String, SIndex),
    /// `Agent.Action` (transitions clause only).
    Dotted(SIndex, String),
}

#[derive(Debug, Clone)]
pub struct SExpr {
    pub node: SNode,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum SNode {
    True,
    False,
    Num(u64),
    Ref(SVarRef),
    Not(Box<SExpr>),
    And(Box<SExpr>, Box<SExpr>),
    Or(Box<SExpr>, Box<SExpr>),
    Eq(Box<SExpr>, Box<SExpr>),
    /// `X φ` or `X^k φ` (the repetition is expanded by the parser).
    Next(Box<SExpr>),
    Knows(SIndex, Box<SExpr>),
    Exists(String, String, Box<SExpr>),
    Forall(String, String, Box<SExpr>),
}
