//! Explicit-state operational semantics: the agent-step relation, the
//! environment's run-to-termination, the composed three-stage global step,
//! successor enumeration and a deterministic simulator.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::KbpError;
use crate::lang::model::*;
use crate::lang::Printer;

/// Bit image of a global state: one entry per encoded boolean, laid out by
/// [`Layout`].
pub type BitState = Vec<bool>;

/// Binary layout of the typed variables: variable `v` owns
/// `offsets[v] .. offsets[v] + widths[v]`, least-significant bit first.
#[derive(Debug, Clone)]
pub struct Layout {
    pub offsets: Vec<usize>,
    pub widths: Vec<usize>,
    pub total_bits: usize,
}

impl Layout {
    pub fn of(model: &SystemModel) -> Layout {
        let mut offsets = Vec::with_capacity(model.vars.len());
        let mut widths = Vec::with_capacity(model.vars.len());
        let mut total = 0;
        for v in &model.vars {
            offsets.push(total);
            widths.push(v.ty.bits());
            total += v.ty.bits();
        }
        Layout { offsets, widths, total_bits: total }
    }

    pub fn get(&self, state: &BitState, v: TVarId) -> u64 {
        let mut out = 0;
        for j in 0..self.widths[v] {
            if state[self.offsets[v] + j] {
                out |= 1 << j;
            }
        }
        out
    }

    pub fn set(&self, state: &mut BitState, v: TVarId, value: u64) {
        for j in 0..self.widths[v] {
            state[self.offsets[v] + j] = value >> j & 1 == 1;
        }
    }

    pub fn blank(&self) -> BitState {
        vec![false; self.total_bits]
    }
}

/// One action signal per agent; `None` is nil.
pub type JointAction = Vec<Option<ActId>>;

/// Which alternative of a statement executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ArmRef {
    /// The statement is atomic (no choice).
    Atomic,
    /// Branch arm by index.
    Arm(usize),
    /// No guard held: skip.
    Fallthrough,
}

/// Expression evaluation over an explicit state. `actions` supplies the
/// joint action while the environment program runs; `skel` resolves
/// skeleton placeholders for the explicit synthesizer.
pub struct EvalCtx<'a> {
    pub model: &'a SystemModel,
    pub layout: &'a Layout,
    pub actions: Option<&'a JointAction>,
    pub skel: Option<&'a dyn Fn(SkelId, &BitState) -> bool>,
}

impl EvalCtx<'_> {
    pub fn eval(&self, state: &BitState, e: &Expr) -> bool {
        match e {
            Expr::Bool(b) => *b,
            Expr::Var(v) => self.layout.get(state, *v) != 0,
            Expr::ActVar(a, act) => match self.actions {
                Some(actions) => actions[*a] == Some(*act),
                None => panic!("action variable read outside the transitions clause"),
            },
            Expr::SkelVar(id) => match self.skel {
                Some(f) => f(*id, state),
                None => panic!("unresolved skeleton variable in a standard program"),
            },
            Expr::Not(a) => !self.eval(state, a),
            Expr::And(a, b) => self.eval(state, a) && self.eval(state, b),
            Expr::Or(a, b) => self.eval(state, a) || self.eval(state, b),
            Expr::EqVar(a, b) => self.layout.get(state, *a) == self.layout.get(state, *b),
            Expr::EqConst(v, n) => self.layout.get(state, *v) == *n,
            Expr::Iff(a, b) => self.eval(state, a) == self.eval(state, b),
            Expr::Next(_) => panic!("temporal operator in a state formula"),
            Expr::Knows(..) => panic!("knowledge operator outside epistemic evaluation"),
        }
    }

    fn rhs_value(&self, state: &BitState, rhs: &Rhs) -> u64 {
        match rhs {
            Rhs::Bool(e) => self.eval(state, e) as u64,
            Rhs::Copy(v) => self.layout.get(state, *v),
            Rhs::Const(n) => *n,
        }
    }
}

/// The atomic statements an agent may execute from `state`: the singleton
/// for an atomic statement, every enabled arm of a branch, or skip when no
/// guard holds.
pub fn agent_step(ctx: &EvalCtx, state: &BitState, stmt: &Statement) -> Vec<ArmRef> {
    match stmt {
        Statement::Atomic(_) => vec![ArmRef::Atomic],
        Statement::Branch(arms) => {
            let enabled: Vec<ArmRef> = arms
                .iter()
                .enumerate()
                .filter(|(_, arm)| ctx.eval(state, &arm.guard))
                .map(|(i, _)| ArmRef::Arm(i))
                .collect();
            if enabled.is_empty() {
                vec![ArmRef::Fallthrough]
            } else {
                enabled
            }
        }
    }
}

static SKIP: AtomicStatement = AtomicStatement { action: None, assigns: Vec::new() };

pub fn resolve_arm<'a>(stmt: &'a Statement, arm: ArmRef) -> &'a AtomicStatement {
    match (stmt, arm) {
        (Statement::Atomic(a), ArmRef::Atomic) => a,
        (Statement::Branch(arms), ArmRef::Arm(i)) => &arms[i].body,
        (_, ArmRef::Fallthrough) => &SKIP,
        _ => panic!("arm reference does not match the statement shape"),
    }
}

/// Runs the environment program to termination: statements execute in
/// order, each assignment reading the current intermediate state; only
/// environment variables change. `chooser` resolves nondeterministic
/// branches (it receives the per-step index of the branch statement and the
/// enabled arms).
pub fn run_environment(
    model: &SystemModel,
    layout: &Layout,
    state: &BitState,
    actions: &JointAction,
    mut chooser: impl FnMut(usize, &[ArmRef]) -> ArmRef,
) -> BitState {
    let mut cur = state.clone();
    let mut branch_index = 0;
    for stmt in &model.tau.0 {
        let ctx = EvalCtx { model, layout, actions: Some(actions), skel: None };
        let enabled = agent_step(&ctx, &cur, stmt);
        let arm = if matches!(stmt, Statement::Branch(_)) {
            let pick = chooser(branch_index, &enabled);
            branch_index += 1;
            assert!(enabled.contains(&pick), "environment chooser picked a disabled arm");
            pick
        } else {
            ArmRef::Atomic
        };
        let atomic = resolve_arm(stmt, arm);
        apply_atomic_sequential(model, layout, &mut cur, atomic, actions);
    }
    cur
}

/// All `(branch choices, final state)` pairs the environment program can
/// produce.
pub fn env_successors(
    model: &SystemModel,
    layout: &Layout,
    state: &BitState,
    actions: &JointAction,
) -> Vec<(Vec<ArmRef>, BitState)> {
    let mut done = Vec::new();
    let mut frontier = vec![(Vec::new(), state.clone(), 0usize)];
    while let Some((choices, cur, at)) = frontier.pop() {
        if at == model.tau.0.len() {
            done.push((choices, cur));
            continue;
        }
        let stmt = &model.tau.0[at];
        let ctx = EvalCtx { model, layout, actions: Some(actions), skel: None };
        let enabled = agent_step(&ctx, &cur, stmt);
        for arm in enabled {
            let mut next = cur.clone();
            apply_atomic_sequential(model, layout, &mut next, resolve_arm(stmt, arm), actions);
            let mut ch = choices.clone();
            if matches!(stmt, Statement::Branch(_)) {
                ch.push(arm);
            }
            frontier.push((ch, next, at + 1));
        }
    }
    done.sort_by(|a, b| a.0.cmp(&b.0));
    done
}

/// Assignments within one environment atomic execute against the current
/// intermediate state (the environment grammar has one assignment per
/// atomic, so sequencing is per statement).
fn apply_atomic_sequential(
    model: &SystemModel,
    layout: &Layout,
    state: &mut BitState,
    atomic: &AtomicStatement,
    actions: &JointAction,
) {
    let ctx = EvalCtx { model, layout, actions: Some(actions), skel: None };
    let values: Vec<(TVarId, u64)> = atomic
        .assigns
        .iter()
        .map(|(t, rhs)| (*t, ctx.rhs_value(state, rhs)))
        .collect();
    for (t, v) in values {
        layout.set(state, t, v);
    }
}

fn joint_action(model: &SystemModel, time: usize, arms: &[ArmRef]) -> JointAction {
    model
        .protocols
        .iter()
        .enumerate()
        .map(|(i, p)| resolve_arm(&p.program.0[time], arms[i]).action)
        .collect()
}

/// The composed transition: each agent picks an atomic statement, the joint
/// action drives the environment program, then every agent's simultaneous
/// assignments apply with right-hand sides evaluated in the pre-state.
pub fn global_step(
    model: &SystemModel,
    layout: &Layout,
    state: &BitState,
    time: usize,
    arms: &[ArmRef],
    env_chooser: impl FnMut(usize, &[ArmRef]) -> ArmRef,
) -> BitState {
    let ctx = EvalCtx { model, layout, actions: None, skel: None };
    for (i, p) in model.protocols.iter().enumerate() {
        let enabled = agent_step(&ctx, state, &p.program.0[time]);
        assert!(enabled.contains(&arms[i]), "disabled choice for agent {}", model.agents[i]);
    }
    let actions = joint_action(model, time, arms);
    let mut next = run_environment(model, layout, state, &actions, env_chooser);
    apply_local_assignments(model, layout, state, &mut next, time, arms);
    next
}

fn apply_local_assignments(
    model: &SystemModel,
    layout: &Layout,
    pre: &BitState,
    next: &mut BitState,
    time: usize,
    arms: &[ArmRef],
) {
    let ctx = EvalCtx { model, layout, actions: None, skel: None };
    for (i, p) in model.protocols.iter().enumerate() {
        let atomic = resolve_arm(&p.program.0[time], arms[i]);
        for (t, rhs) in &atomic.assigns {
            let value = ctx.rhs_value(pre, rhs);
            layout.set(next, *t, value);
        }
    }
}

/// Joint choice: one arm per agent plus the environment's branch choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice {
    pub agent_arms: Vec<ArmRef>,
    pub env_arms: Vec<ArmRef>,
}

/// Every successor of `state` at `time` under every enabled joint choice.
/// Skeleton placeholders in guards are resolved through `skel`.
pub fn successors(
    model: &SystemModel,
    layout: &Layout,
    state: &BitState,
    time: usize,
    skel: Option<&dyn Fn(SkelId, &BitState) -> bool>,
) -> Vec<(Choice, BitState)> {
    let ctx = EvalCtx { model, layout, actions: None, skel };
    let per_agent: Vec<Vec<ArmRef>> = model
        .protocols
        .iter()
        .map(|p| agent_step(&ctx, state, &p.program.0[time]))
        .collect();
    let mut out = Vec::new();
    let mut combo = vec![0usize; per_agent.len()];
    loop {
        let arms: Vec<ArmRef> = combo.iter().enumerate().map(|(i, &j)| per_agent[i][j]).collect();
        let actions = joint_action(model, time, &arms);
        for (env_arms, env_state) in env_successors(model, layout, state, &actions) {
            let mut next = env_state;
            apply_local_assignments(model, layout, state, &mut next, time, &arms);
            out.push((Choice { agent_arms: arms.clone(), env_arms }, next));
        }
        // advance the mixed-radix counter
        let mut i = 0;
        loop {
            if i == combo.len() {
                return out;
            }
            combo[i] += 1;
            if combo[i] < per_agent[i].len() {
                break;
            }
            combo[i] = 0;
            i += 1;
        }
    }
}

/// Deterministic choice policy for simulation.
pub trait Resolver {
    /// Picks among the enabled arms of agent `agent`'s statement.
    fn agent_arm(&mut self, agent: AgentId, time: usize, enabled: &[ArmRef]) -> ArmRef {
        let _ = (agent, time);
        enabled[0]
    }

    /// Picks among the enabled arms of the `branch`-th branch statement of
    /// the transitions clause.
    fn env_arm(&mut self, branch: usize, time: usize, enabled: &[ArmRef]) -> ArmRef {
        let _ = (branch, time);
        enabled[0]
    }
}

/// Lowest enabled index everywhere: the default policy.
pub struct LowestIndex;

impl Resolver for LowestIndex {}

/// Seeded uniform choice, reproducible across runs.
pub struct SeededRandom(ChaCha8Rng);

impl SeededRandom {
    pub fn new(seed: u64) -> SeededRandom {
        SeededRandom(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Resolver for SeededRandom {
    fn agent_arm(&mut self, _: AgentId, _: usize, enabled: &[ArmRef]) -> ArmRef {
        *enabled.choose(&mut self.0).unwrap()
    }

    fn env_arm(&mut self, _: usize, _: usize, enabled: &[ArmRef]) -> ArmRef {
        *enabled.choose(&mut self.0).unwrap()
    }
}

/// Scripted environment branches on top of a base policy: entry
/// `(time, branch) → arm index` forces that arm when enabled.
pub struct ScriptedEnv {
    pub script: BTreeMap<(usize, usize), usize>,
}

impl Resolver for ScriptedEnv {
    fn env_arm(&mut self, branch: usize, time: usize, enabled: &[ArmRef]) -> ArmRef {
        if let Some(&want) = self.script.get(&(time, branch)) {
            if enabled.contains(&ArmRef::Arm(want)) {
                return ArmRef::Arm(want);
            }
        }
        enabled[0]
    }
}

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub agent_arms: Vec<ArmRef>,
    pub actions: JointAction,
    pub env_arms: Vec<ArmRef>,
}

/// An explicit finite run: `states.len() == steps.len() + 1`.
#[derive(Debug, Clone)]
pub struct Trace {
    pub states: Vec<BitState>,
    pub steps: Vec<StepRecord>,
}

/// Runs `steps` global steps from `s0` (which must satisfy the initial
/// condition), resolving every choice through `resolver`.
pub fn simulate(
    model: &SystemModel,
    layout: &Layout,
    s0: &BitState,
    steps: usize,
    resolver: &mut dyn Resolver,
) -> Result<Trace, KbpError> {
    if steps > model.horizon() {
        return Err(KbpError::Check(format!(
            "cannot simulate {} steps: the program terminates after {}",
            steps,
            model.horizon()
        )));
    }
    let ctx = EvalCtx { model, layout, actions: None, skel: None };
    let init_ok = ctx.eval(s0, &model.init_env)
        && model.protocols.iter().all(|p| ctx.eval(s0, &p.init));
    if !init_ok {
        return Err(KbpError::Check("initial state violates the initial condition".into()));
    }
    let mut trace = Trace { states: vec![s0.clone()], steps: Vec::new() };
    for t in 0..steps {
        let state = trace.states.last().unwrap().clone();
        let mut arms = Vec::new();
        for (i, p) in model.protocols.iter().enumerate() {
            let enabled = agent_step(&ctx, &state, &p.program.0[t]);
            arms.push(resolver.agent_arm(i, t, &enabled));
        }
        let actions = joint_action(model, t, &arms);
        let mut env_arms = Vec::new();
        let next = {
            let mut bump = |branch: usize, enabled: &[ArmRef]| {
                let pick = resolver.env_arm(branch, t, enabled);
                env_arms.push(pick);
                pick
            };
            let mut next = run_environment(model, layout, &state, &actions, &mut bump);
            apply_local_assignments(model, layout, &state, &mut next, t, &arms);
            next
        };
        trace.steps.push(StepRecord { agent_arms: arms, actions, env_arms });
        trace.states.push(next);
    }
    Ok(trace)
}

/// Structured-text trace export: one state per line as `var=value` pairs,
/// plus the chosen action per agent at each step.
pub fn export_trace(model: &SystemModel, layout: &Layout, trace: &Trace) -> String {
    use std::fmt::Write as _;
    let printer = Printer::new(model);
    let mut out = String::new();
    for (t, state) in trace.states.iter().enumerate() {
        let _ = write!(out, "state {t}:");
        for (v, var) in model.vars.iter().enumerate() {
            let value = layout.get(state, v);
            let shown = match &var.ty {
                Ty::Bool => if value != 0 { "true".into() } else { "false".into() },
                Ty::Enum { consts } => consts[value as usize].clone(),
                Ty::Nat { .. } => value.to_string(),
            };
            let _ = write!(out, " {}={}", printer.var_name(v), shown);
        }
        out.push('\n');
        if t < trace.steps.len() {
            let rec = &trace.steps[t];
            let _ = write!(out, "step {t}:");
            for (i, act) in rec.actions.iter().enumerate() {
                let name = act.map_or("nil", |a| model.actions[a].as_str());
                let _ = write!(out, " {}={}", model.agents[i], name);
            }
            out.push('\n');
        }
    }
    out
}

/// Builds a state from typed assignments (every variable must be covered or
/// defaulted to zero first, caller's choice).
pub fn state_from_values(layout: &Layout, values: &[(TVarId, u64)]) -> BitState {
    let mut s = layout.blank();
    for (v, val) in values {
        layout.set(&mut s, *v, *val);
    }
    s
}
